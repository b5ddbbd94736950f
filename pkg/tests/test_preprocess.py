import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridgrid.errors import PreprocessError, ValidationError
from hybridgrid.grid_model import (NEW, NEW_LINE, RES, TRANSFORMER, Branch, Bus, Generator, HvdcLink,
                                   Network, connectivity, load_case, make_network)
from hybridgrid import data_path
from hybridgrid.preprocess import (R_FLOOR, ReductionReport, aggregate_generators, flag_essential_lines,
                                   floor_resistance, merge_parallel_branches, preprocess,
                                   reduce_to_base_grid)

from conftest import linear_gen
from oracles import joint_min_cost


def line(bid, u, v, km=10.0, status="existing", essential=False, rating=100.0, r=0.01, b=10.0):
    return Branch(bid, u, v, r=r, b=b, rating=rating, length_km=km, status=status, essential=essential)


def expansion_plan():
    """Ring of 20 existing buses, 87 new reinforcements, 6 new buses on flagged radials."""
    buses = [Bus(i, load_mw=10.0) for i in range(1, 21)]
    branches = [line(i, i, i % 20 + 1) for i in range(1, 21)]
    bid = 21
    pairs = [(u, v) for u, v in itertools.combinations(range(1, 21), 2) if (v - u) % 20 not in (1, 19)]
    for u, v in pairs[:87]:
        branches.append(line(bid, u, v, km=50.0 + bid % 7, status=NEW))
        bid += 1
    gens = [linear_gen(1, 1, 500.0, 10.0)]
    for k in range(6):
        nb = 21 + k
        buses.append(Bus(nb))
        gens.append(linear_gen(2 + k, nb, 50.0, 1.0, kind=RES))
        branches.append(line(bid, 1 + 3 * k, nb, km=30.0, status=NEW, essential=True))
        bid += 1
    return make_network(buses, branches, gens)


def test_reduce_keeps_only_flagged():
    net = expansion_plan()
    assert sum(b.status == NEW for b in net.branches) == 93
    report = ReductionReport()
    base = reduce_to_base_grid(net, report)
    assert sum(b.status == NEW for b in base.branches) == 6
    assert report.count == 87
    assert report.total_km == pytest.approx(sum(b.length_km for b in net.branches
                                                if b.status == NEW and not b.essential))
    assert report.to_csv().splitlines()[0].startswith("kind,id")
    assert connectivity(base)["connected"]


def test_reduce_without_new_is_identity():
    net = make_network([Bus(1), Bus(2)], [line(1, 1, 2)], [linear_gen(1, 1, 10, 1)])
    assert reduce_to_base_grid(net) is net


def test_reduce_disconnection_error():
    net = make_network([Bus(1), Bus(2, load_mw=5)], [line(1, 1, 2, status=NEW)], [linear_gen(1, 1, 10, 1)])
    with pytest.raises(PreprocessError, match="disconnects"):
        reduce_to_base_grid(net)


def test_reduce_drops_empty_stray_bus():
    net = make_network([Bus(1), Bus(2, load_mw=5), Bus(3)],
                       [line(1, 1, 2), line(2, 2, 3, status=NEW)], [linear_gen(1, 1, 10, 1)])
    report = ReductionReport()
    base = reduce_to_base_grid(net, report)
    assert base.bus_ids() == [1, 2] and report.dropped_buses == [3]


def test_reduce_removes_new_dc_links():
    net = make_network([Bus(1), Bus(2, load_mw=5)], [line(1, 1, 2)], [linear_gen(1, 1, 10, 1)],
                       [HvdcLink(1, 1, 2, p_max=10, q_max=5, length_km=300, origin=NEW_LINE, cable=True)])
    report = ReductionReport()
    assert reduce_to_base_grid(net, report).hvdc_links == ()
    assert report.removed == [("hvdc_link", 1, 300.0)]


def test_flag_bridge_to_new_bus():
    net = make_network([Bus(1, load_mw=5), Bus(2), Bus(3)],
                       [line(1, 1, 2), line(2, 2, 3, status=NEW), line(3, 1, 2, status=NEW)],
                       [linear_gen(1, 1, 10, 1), linear_gen(2, 3, 10, 1)])
    flagged = flag_essential_lines(net)
    assert flagged.branch(2).essential          # only path to the generator at bus 3
    assert not flagged.branch(3).essential      # parallels an existing corridor


def _feasible_keep_sets(net):
    """Brute force: every subset of new branches whose sole retention integrates all active buses."""
    new = [b.id for b in net.branches if b.status == NEW]
    old = [b.id for b in net.branches if b.status != NEW]
    active = {b.id for b in net.buses if b.load_mw > 0} | {g.bus for g in net.generators}
    out = []
    for k in range(len(new) + 1):
        for keep in itertools.combinations(new, k):
            comps = connectivity(net, old + list(keep), [])["components"]
            if sum(1 for c in comps if active & set(c)) <= 1:
                out.append(set(keep))
    return out


def _minimal(sets):
    return [s for s in sets if not any(t < s for t in sets)]


def test_chain_to_new_generator_both_essential():
    net = make_network([Bus(1, load_mw=5), Bus(2), Bus(3)],
                       [line(1, 1, 2, status=NEW), line(2, 2, 3, status=NEW)],
                       [linear_gen(1, 1, 10, 1), linear_gen(2, 3, 10, 1)], validate_net=True)
    flagged = flag_essential_lines(net)
    assert [b.essential for b in flagged.branches] == [True, True]
    assert _minimal(_feasible_keep_sets(net)) == [{1, 2}]


@pytest.mark.parametrize("seed", range(25))
def test_flagging_is_a_minimal_feasible_keep_set(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 8))
    buses = [Bus(i, load_mw=float(rng.choice([0.0, 5.0]))) for i in range(1, n + 1)]
    branches, bid = [], 1
    for i in range(2, n + 1):           # spanning tree, some of it new
        branches.append(line(bid, i, int(rng.integers(1, i)), km=float(rng.integers(1, 100)),
                             status=NEW if rng.uniform() < 0.5 else "existing"))
        bid += 1
    for _ in range(int(rng.integers(0, 4))):
        u, v = rng.choice(range(1, n + 1), 2, replace=False)
        branches.append(line(bid, int(u), int(v), km=float(rng.integers(1, 100)), status=NEW))
        bid += 1
    gens = [linear_gen(1, 1, 100, 1)]
    net = make_network(buses, branches, gens)
    kept = {b.id for b in flag_essential_lines(net).branches if b.status == NEW and b.essential}
    assert kept in _minimal(_feasible_keep_sets(net))


def test_explicit_essential_kept():
    net = make_network([Bus(1, load_mw=5), Bus(2)], [line(1, 1, 2), line(2, 1, 2, status=NEW, essential=True)],
                       [linear_gen(1, 1, 10, 1)])
    assert flag_essential_lines(net).branch(2).essential


def test_merge_identical():
    net = make_network([Bus(1), Bus(2)], [line(1, 1, 2), line(2, 2, 1)], [linear_gen(1, 1, 10, 1)])
    merged = merge_parallel_branches(net)
    (br,) = merged.branches
    assert (br.id, br.r, br.b, br.rating) == (1, 0.005, 20.0, 200.0)


def test_merge_harmonic_resistance():
    net = make_network([Bus(1), Bus(2)], [line(1, 1, 2, r=0.01, km=5), line(2, 1, 2, r=0.03, km=9)],
                       [linear_gen(1, 1, 10, 1)])
    (br,) = merge_parallel_branches(net).branches
    assert br.r == pytest.approx(0.0075, rel=1e-12)
    assert br.length_km == 9


def test_merge_no_parallels_identity():
    net = make_network([Bus(1), Bus(2), Bus(3)], [line(1, 1, 2), line(2, 2, 3)], [linear_gen(1, 1, 10, 1)])
    assert merge_parallel_branches(net) == net


def test_merge_demo_leaves_no_parallel_pairs():
    net = load_case(data_path("demo_case30.json"))
    merged = merge_parallel_branches(net)
    pairs = [frozenset((b.from_bus, b.to_bus)) for b in merged.branches]
    assert len(pairs) == len(set(pairs)) < len(net.branches)


def test_merge_mixed_kinds_error():
    net = make_network([Bus(1), Bus(2)], [line(1, 1, 2, km=0), Branch(2, 1, 2, 0.01, 10, 100, TRANSFORMER)],
                       [linear_gen(1, 1, 10, 1)])
    with pytest.raises(PreprocessError, match="mix"):
        merge_parallel_branches(net)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 4), st.integers(1, 4), st.floats(0.001, 0.1),
                          st.floats(0.5, 50), st.floats(1, 1000)).filter(lambda t: t[0] != t[1]),
                min_size=1, max_size=12))
def test_merge_preserves_pair_sums(rows):
    branches = [Branch(k, u, v, r=r, b=b, rating=rt) for k, (u, v, r, b, rt) in enumerate(rows, 1)]
    net = Network(tuple(Bus(i) for i in range(1, 5)), tuple(branches), (), (), 100.0, {})
    merged = merge_parallel_branches(net)

    def sums(n):
        out = {}
        for br in n.branches:
            key = frozenset((br.from_bus, br.to_bus))
            b, rt = out.get(key, (0.0, 0.0))
            out[key] = (b + br.b, rt + br.rating)
        return out
    before, after = sums(net), sums(merged)
    assert before.keys() == after.keys()
    for k in before:
        # a single addition order per pair, so sums agree up to rounding only
        assert after[k][0] == pytest.approx(before[k][0], rel=1e-15)
        assert after[k][1] == pytest.approx(before[k][1], rel=1e-15)
    assert merge_parallel_branches(merged) == merged


def test_aggregate_two_generators():
    net = make_network([Bus(1, load_mw=10)], [],
                       [linear_gen(1, 1, 100, 20.0), linear_gen(2, 1, 100, 10.0)])
    (g,) = aggregate_generators(net).generators
    assert g.id == 1 and g.p_max == 200
    assert g.segments() == [(100.0, 10.0), (100.0, 20.0)]


def test_aggregate_single_unchanged():
    net = make_network([Bus(1, load_mw=10)], [], [linear_gen(1, 1, 100, 20.0)])
    assert aggregate_generators(net) == net


def test_aggregate_keeps_kinds_apart():
    net = make_network([Bus(1, load_mw=10)], [],
                       [linear_gen(1, 1, 100, 20.0), linear_gen(2, 1, 50, 0.0, kind=RES, res_profile_id="w"),
                        linear_gen(3, 1, 50, 0.0, kind=RES, res_profile_id="s")])
    assert len(aggregate_generators(net).generators) == 3


def test_aggregate_rejects_nonconvex():
    bad = Generator(2, 1, 0.0, 100.0, ((0.0, 0.0), (50.0, 1000.0), (100.0, 1100.0)))
    net = Network((Bus(1),), (), (linear_gen(1, 1, 10, 1.0), bad), (), 100.0, {})
    with pytest.raises(ValidationError, match="convex"):
        aggregate_generators(net)


def random_convex_gen(rng, gid):
    p_min = float(rng.integers(0, 20))
    pts = [(p_min, float(rng.integers(0, 50)))]
    mc = float(rng.integers(0, 30))
    for _ in range(int(rng.integers(1, 4))):
        w = float(rng.integers(1, 40))
        mc += float(rng.integers(0, 25))
        pts.append((pts[-1][0] + w, pts[-1][1] + mc * w))
    return Generator(gid, 1, p_min, pts[-1][0], tuple(pts))


def test_aggregate_matches_grid_search_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        gens = [random_convex_gen(rng, i) for i in range(1, int(rng.integers(2, 5)))]
        net = Network((Bus(1),), (), tuple(gens), (), 100.0, {})
        (agg,) = aggregate_generators(net).generators
        lo, best = joint_min_cost(gens)
        assert agg.p_min == lo and agg.p_max == lo + len(best) - 1
        for p, ref in enumerate(best, start=lo):
            got = agg.cost_at(float(p))
            assert abs(got - ref) <= 1e-6 * max(1.0, abs(ref))


def test_floor_resistance():
    net = make_network([Bus(1), Bus(2), Bus(3), Bus(4)],
                       [line(1, 1, 2, r=1e-7), line(2, 2, 3, r=1e-5), line(3, 3, 4, r=0.02)],
                       [linear_gen(1, 1, 10, 1)])
    assert [b.r for b in floor_resistance(net).branches] == [R_FLOOR, 1e-5, 0.02]


def test_preprocess_demo_is_idempotent():
    net = load_case(data_path("demo_case30.json"))
    once = preprocess(net)
    assert preprocess(once) == once
    assert len(once.branches) <= len(net.branches)
    assert connectivity(once)["connected"]
    assert min(b.r for b in once.branches) >= R_FLOOR
    # the two units at one bus are merged
    assert len(once.generators) == len(net.generators) - 1
