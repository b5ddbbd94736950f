import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridgrid import dcopf
from hybridgrid.dcopf import OpfProblem, build_lp, solve
from hybridgrid.errors import ValidationError
from hybridgrid.grid_model import Branch, Bus, HvdcLink, make_network
from hybridgrid.lp import available_backends, solve_lp

from conftest import linear_gen
from fuzz import small_opf_instance
from oracles import opf_vertex_enumeration


def test_congested_two_bus(two_bus):
    sol = solve(OpfProblem(two_bus(50.0)))
    assert sol.optimal
    assert sol.total_cost == pytest.approx(3000.0)
    assert sol.dual_cost == pytest.approx(3000.0)
    assert sol.ac_flows[1] == pytest.approx(50.0)
    assert sol.mu[1] == pytest.approx(40.0)
    assert sol.prices == pytest.approx({1: 10.0, 2: 50.0})
    assert sol.utilization[1] == pytest.approx(100.0)


def test_uncongested_two_bus(two_bus):
    sol = solve(OpfProblem(two_bus(200.0)))
    assert sol.total_cost == pytest.approx(1000.0)
    assert sol.utilization[1] == pytest.approx(50.0)
    assert sol.mu[1] == pytest.approx(0.0, abs=1e-9)
    assert sol.prices[1] == pytest.approx(sol.prices[2])


def test_demand_above_capacity_is_infeasible(two_bus):
    net = two_bus(200.0)
    sol = solve(OpfProblem(net, load_scale={2: 5.0}))
    assert sol.status == "infeasible"
    assert "exceeds" in sol.cause
    assert sol.to_dict() == {"status": "infeasible", "cause": sol.cause}


def test_network_infeasible_names_rows(two_bus):
    # enough capacity in total, but the cheap side cannot export past the line limit
    net = two_bus(10.0)
    sol = solve(OpfProblem(net, res_availability={}, load_scale={2: 2.5}))
    assert sol.status == "infeasible"
    assert sol.cause


def test_loss_coefficient(b2b_pair):
    sol = solve(OpfProblem(b2b_pair(1.9)))
    assert sol.hvdc_flows[1] == pytest.approx(100.0 / 0.981)
    assert sol.hvdc_losses[1] == pytest.approx(0.019 * 100.0 / 0.981)
    assert sol.dispatch[1] - sol.hvdc_flows[1] == pytest.approx(0.0, abs=1e-9)


def test_implausible_loss_rejected():
    link = HvdcLink(1, 1, 2, p_max=10, q_max=5, loss_k=0.01, loss_d=15.0, length_km=600)
    with pytest.raises(ValidationError):
        dcopf.hvdc_loss_fraction(link)


def test_availability_out_of_range(two_bus):
    with pytest.raises(ValidationError):
        OpfProblem(two_bus(), res_availability={1: 1.5})
    with pytest.raises(ValidationError):
        OpfProblem(two_bus(), load_scale={2: -1.0})


def test_lp_census(triangle, b2b_pair):
    lp, lay = build_lp(OpfProblem(triangle))
    # 2 single-segment generators, 2 non-reference angles
    assert lp.n_vars == 4
    assert lp.a_eq.shape == (3, 4)
    assert lp.a_ub.shape == (6, 4)
    assert lay.refs == [1]
    lp, lay = build_lp(OpfProblem(b2b_pair(), res_availability={2: 0.5}))
    # 2 segments, no angles (each bus is its own island), 2 directed flows
    assert lp.n_vars == 4 and lay.refs == [1, 2]
    assert lp.a_ub.shape[0] == 1     # availability cap on generator 2


def test_reference_per_island(b2b_pair):
    assert dcopf.reference_buses(b2b_pair()) == [1, 2]


def test_profile_factors():
    net = make_network([Bus(1, load_mw=10, load_profile_id="L")], [],
                       [linear_gen(1, 1, 50, 1.0, kind="res", res_profile_id="W")])
    scale, avail = dcopf.profile_factors(net, {"L": [0.5, 1.0], "W": [1.3, -0.1]}, 0)
    assert scale == {1: 0.5} and avail == {1: 1.0}
    assert dcopf.profile_factors(net, {"L": [0.5, 1.0], "W": [1.3, -0.1]}, 1)[1] == {1: 0.0}


def _check_kkt(lp, res, tol=1e-6):
    x = res.x
    scale = 1.0 + np.abs(lp.c).max()
    slack = lp.b_ub - lp.a_ub @ x
    assert np.all(slack >= -tol)
    assert np.all(res.y_ub <= tol * scale)
    assert np.all(np.abs(res.y_ub * slack) <= tol * scale * (1 + np.abs(lp.b_ub)))
    for j, r in enumerate(res.reduced_costs):
        if r > tol * scale:
            assert x[j] - lp.lb[j] <= tol * (1 + abs(lp.lb[j]))
        elif r < -tol * scale:
            assert lp.ub[j] - x[j] <= tol * (1 + abs(lp.ub[j]))
    assert np.allclose(lp.a_eq @ x, lp.b_eq, atol=tol * (1 + np.abs(lp.b_eq).max()))


@pytest.mark.parametrize("seed", range(30))
def test_random_instances_vs_vertex_oracle(seed):
    rng = np.random.default_rng(1000 + seed)
    net = small_opf_instance(rng)
    ref = opf_vertex_enumeration(net)
    sol = solve(OpfProblem(net))
    if ref is None:
        assert not sol.optimal
        return
    assert sol.optimal
    assert sol.total_cost == pytest.approx(ref, rel=1e-6, abs=1e-6)
    lp, _ = build_lp(OpfProblem(net))
    res = solve_lp(lp)
    _check_kkt(lp, res)
    assert abs(res.objective - res.dual_objective(lp)) <= 1e-6 * max(1.0, abs(res.objective))


@pytest.mark.parametrize("seed", range(15))
def test_conservation_and_no_counterflow(seed):
    rng = np.random.default_rng(5000 + seed)
    net = small_opf_instance(rng)
    sol = solve(OpfProblem(net))
    if not sol.optimal:
        return
    gen = sum(sol.dispatch.values())
    load = net.total_load
    losses = sum(sol.hvdc_losses.values())
    assert gen - load - losses == pytest.approx(0.0, abs=1e-6 * max(1.0, load))
    for ln in net.hvdc_links:
        lam = ln.loss_fraction
        # losses equal lam * |flow| exactly when only one direction carries power
        if lam > 0:
            assert sol.hvdc_losses[ln.id] == pytest.approx(lam * abs(sol.hvdc_flows[ln.id]), abs=1e-6)
    for br in net.branches:
        assert abs(sol.ac_flows[br.id]) <= br.rating + 1e-6


@pytest.mark.skipif(len(available_backends()) < 2, reason="compiled backend not built")
@pytest.mark.parametrize("seed", range(10))
def test_backends_agree(seed):
    rng = np.random.default_rng(9000 + seed)
    net = small_opf_instance(rng)
    a = solve(OpfProblem(net), backend="python")
    b = solve(OpfProblem(net), backend="cython")
    assert a.status == b.status
    if a.optimal:
        assert a.total_cost == pytest.approx(b.total_cost, rel=1e-9, abs=1e-9)
        assert a.dispatch == pytest.approx(b.dispatch, abs=1e-7)


@settings(max_examples=40, deadline=None)
@given(load=st.floats(0, 300), rating=st.floats(1, 400))
def test_two_bus_cost_formula(load, rating):
    net = make_network(
        [Bus(1), Bus(2, load_mw=100.0)],
        [Branch(1, 1, 2, r=0.01, b=10.0, rating=rating, length_km=50.0)],
        [linear_gen(1, 1, 200.0, 10.0), linear_gen(2, 2, 200.0, 50.0)])
    sol = solve(OpfProblem(net, load_scale={2: load / 100.0}))
    if load > 200.0 + rating + 1e-9:
        assert sol.status == "infeasible"
        return
    assert sol.optimal
    cheap = min(load, rating, 200.0)
    expect = 10.0 * cheap + 50.0 * (load - cheap)
    assert sol.total_cost == pytest.approx(expect, rel=1e-9, abs=1e-7)
