"""Linearized (DC) optimal power flow with flow-limit multipliers.

Generation cost is piecewise linear, so the OPF is a plain LP solved by
:func:`hybridgrid.lp.solve_lp`. HVDC links carry two nonnegative directed
flows; the receiving end gets ``(1 - loss_fraction)`` of what is sent.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SolverError, ValidationError
from .grid_model import HvdcLink, MAX_LOSS_FRACTION, Network, RES, Real, connectivity
from .lp import LinearProgram, solve_lp

FEAS_TOL = 1e-6


@dataclass(frozen=True)
class OpfProblem:
    net: Network
    load_scale: dict[int, float] = field(default_factory=dict)
    res_availability: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        for bus, s in self.load_scale.items():
            if s < 0:
                raise ValidationError(f"load scale of bus {bus} must be >= 0", "bus", bus)
        for gen, f in self.res_availability.items():
            if not 0 <= f <= 1:
                raise ValidationError(f"availability of generator {gen} must be in [0, 1]", "generator", gen)

    def bus_load(self, bus) -> float:
        return bus.load_mw * self.load_scale.get(bus.id, 1.0)

    def available(self, gen) -> float:
        return gen.p_max * self.res_availability.get(gen.id, 1.0)


@dataclass
class OpfSolution:
    status: str
    dispatch: dict[int, float] = field(default_factory=dict)
    angles: dict[int, float] = field(default_factory=dict)
    ac_flows: dict[int, float] = field(default_factory=dict)
    hvdc_flows: dict[int, float] = field(default_factory=dict)
    hvdc_losses: dict[int, float] = field(default_factory=dict)
    mu: dict[int, float] = field(default_factory=dict)
    utilization: dict[int, float] = field(default_factory=dict)
    prices: dict[int, float] = field(default_factory=dict)
    total_cost: float = float("nan")
    dual_cost: float = float("nan")
    cause: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def to_dict(self) -> dict:
        def m(d):
            return {str(k): Real(_clean(v)) for k, v in sorted(d.items())}
        out = {"status": self.status}
        if self.optimal:
            out.update(total_cost=Real(_clean(self.total_cost)), dispatch=m(self.dispatch),
                       angles=m(self.angles), ac_flows=m(self.ac_flows), hvdc_flows=m(self.hvdc_flows),
                       hvdc_losses=m(self.hvdc_losses), mu=m(self.mu),
                       utilization=m(self.utilization), prices=m(self.prices))
        else:
            out["cause"] = self.cause
        return out


def _clean(v: float) -> float:
    # Round away solver noise so serialized output is stable.
    v = round(float(v), 7)
    return 0.0 if v == 0 else v


def hvdc_loss_fraction(link: HvdcLink) -> float:
    lam = (link.loss_k * link.length_km + link.loss_d) / 100.0
    if lam >= MAX_LOSS_FRACTION or lam < 0:
        raise ValidationError(f"hvdc_link {link.id}: implausible loss fraction {lam:.4g}", "hvdc_link", link.id)
    return lam


@dataclass
class _Layout:
    seg: list[tuple[int, int, float]]      # (var, gen id, marginal cost)
    theta: dict[int, int]                  # bus id -> var
    hplus: dict[int, int]
    hminus: dict[int, int]
    refs: list[int]
    n_flow_rows: int


def reference_buses(net: Network) -> list[int]:
    """One angle reference per AC island: its smallest bus id."""
    comps = connectivity(net, links=())["components"]
    return [c[0] for c in comps]


def build_lp(prob: OpfProblem) -> tuple[LinearProgram, _Layout]:
    """Assemble the OPF LP.

    Variables: one per cost segment of every generator, one angle per
    non-reference bus (free), two directed flows per HVDC link.
    Rows: a balance equality per bus; ``+flow <= rating`` and
    ``-flow <= rating`` per AC branch; an availability cap per generator
    whose available capacity is below ``p_max``.
    """
    net = prob.net
    base = net.base_mva
    bus_row = {b.id: i for i, b in enumerate(net.buses)}
    refs = reference_buses(net)
    ref_set = set(refs)

    c, lb, ub, names = [], [], [], []
    seg = []
    for g in net.generators:
        for j, (w, mc) in enumerate(g.segments()):
            seg.append((len(c), g.id, mc))
            c.append(mc)
            lb.append(0.0)
            ub.append(w)
            names.append(f"seg g{g.id}.{j}")
    theta = {}
    for b in net.buses:
        if b.id not in ref_set:
            theta[b.id] = len(c)
            c.append(0.0)
            lb.append(-np.inf)
            ub.append(np.inf)
            names.append(f"theta {b.id}")
    hplus, hminus = {}, {}
    for ln in net.hvdc_links:
        for d, store in (("+", hplus), ("-", hminus)):
            store[ln.id] = len(c)
            c.append(0.0)
            lb.append(0.0)
            ub.append(ln.p_max)
            names.append(f"hvdc{d} {ln.id}")
    n = len(c)

    nb = len(net.buses)
    a_eq = np.zeros((nb, n))
    b_eq = np.array([prob.bus_load(b) for b in net.buses], dtype=float)
    c0 = 0.0
    for g in net.generators:
        b_eq[bus_row[g.bus]] -= g.p_min
        c0 += g.cost[0][1]
    gen_bus = {g.id: g.bus for g in net.generators}
    for var, gid, _ in seg:
        a_eq[bus_row[gen_bus[gid]], var] = 1.0

    def flow_coeffs(br):
        coef = {}
        k = br.b * base
        if br.from_bus in theta:
            coef[theta[br.from_bus]] = coef.get(theta[br.from_bus], 0.0) + k
        if br.to_bus in theta:
            coef[theta[br.to_bus]] = coef.get(theta[br.to_bus], 0.0) - k
        return coef

    ub_rows, b_ub, ub_names = [], [], []
    for br in net.branches:
        coef = flow_coeffs(br)
        for var, v in coef.items():
            a_eq[bus_row[br.from_bus], var] -= v
            a_eq[bus_row[br.to_bus], var] += v
        for s, tag in ((1.0, "+"), (-1.0, "-")):
            row = np.zeros(n)
            for var, v in coef.items():
                row[var] = s * v
            ub_rows.append(row)
            b_ub.append(br.rating)
            ub_names.append(f"flow{tag} branch {br.id}")
    n_flow_rows = len(ub_rows)

    for ln in net.hvdc_links:
        keep = 1.0 - hvdc_loss_fraction(ln)
        f, t = bus_row[ln.from_bus], bus_row[ln.to_bus]
        a_eq[f, hplus[ln.id]] -= 1.0
        a_eq[t, hplus[ln.id]] += keep
        a_eq[t, hminus[ln.id]] -= 1.0
        a_eq[f, hminus[ln.id]] += keep

    seg_by_gen: dict[int, list[int]] = {}
    for var, gid, _ in seg:
        seg_by_gen.setdefault(gid, []).append(var)
    for g in net.generators:
        avail = prob.available(g)
        if avail < g.p_max:
            row = np.zeros(n)
            for var in seg_by_gen.get(g.id, []):
                row[var] = 1.0
            ub_rows.append(row)
            b_ub.append(avail - g.p_min)
            ub_names.append(f"availability gen {g.id}")

    lp = LinearProgram(
        c=np.array(c, dtype=float), a_eq=a_eq, b_eq=b_eq,
        a_ub=np.array(ub_rows, dtype=float).reshape(-1, n), b_ub=np.array(b_ub, dtype=float),
        lb=np.array(lb, dtype=float), ub=np.array(ub, dtype=float), c0=c0, var_names=names,
        eq_names=[f"balance bus {b.id}" for b in net.buses], ub_names=ub_names)
    return lp, _Layout(seg, theta, hplus, hminus, refs, n_flow_rows)


def solve(prob: OpfProblem, backend: str | None = None) -> OpfSolution:
    """Solve the OPF; returns ``status='infeasible'`` with a cause hint instead of raising."""
    net = prob.net
    demand = sum(prob.bus_load(b) for b in net.buses)
    capacity = sum(prob.available(g) for g in net.generators)
    if demand > capacity + FEAS_TOL:
        return OpfSolution("infeasible", cause=f"total demand {demand:.6g} MW exceeds available "
                                                f"generation {capacity:.6g} MW")
    lp, lay = build_lp(prob)
    res = solve_lp(lp, backend=backend)
    if res.status != "optimal":
        cause = "cannot satisfy: " + ", ".join(res.infeasible_rows) if res.infeasible_rows else "infeasible"
        return OpfSolution("infeasible", cause=cause)
    x = res.x
    base = net.base_mva

    dispatch = {g.id: g.p_min for g in net.generators}
    for var, gid, _ in lay.seg:
        dispatch[gid] += float(x[var])
    angles = {b.id: (float(x[lay.theta[b.id]]) if b.id in lay.theta else 0.0) for b in net.buses}
    flows, mu, util = {}, {}, {}
    for k, br in enumerate(net.branches):
        f = float(br.b * base * (angles[br.from_bus] - angles[br.to_bus]))
        flows[br.id] = f
        m = -float(res.y_ub[2 * k] + res.y_ub[2 * k + 1])
        mu[br.id] = max(m, 0.0)
        util[br.id] = 100.0 * abs(f) / br.rating
    hv, losses = {}, {}
    prices = {b.id: float(res.y_eq[i]) for i, b in enumerate(net.buses)}
    for ln in net.hvdc_links:
        hp, hm = float(x[lay.hplus[ln.id]]), float(x[lay.hminus[ln.id]])
        hv[ln.id] = hp - hm
        lam = ln.loss_fraction
        losses[ln.id] = lam * (hp + hm)
        if (lam > 0 and hp > FEAS_TOL and hm > FEAS_TOL
                and prices[ln.from_bus] > 1e-9 and prices[ln.to_bus] > 1e-9):
            raise SolverError(f"hvdc_link {ln.id}: simultaneous counterflow at optimum")
    return OpfSolution("optimal", dispatch=dispatch, angles=angles, ac_flows=flows, hvdc_flows=hv,
                       hvdc_losses=losses, mu=mu, utilization=util, prices=prices,
                       total_cost=res.objective, dual_cost=res.dual_objective(lp))


def solve_case(net: Network, hour: int | None = None, profiles=None, backend=None) -> OpfSolution:
    """Solve ``net`` at peak (``hour=None``) or at a profile hour."""
    if hour is None:
        return solve(OpfProblem(net), backend=backend)
    scale, avail = profile_factors(net, profiles if profiles is not None else net.profiles, hour)
    return solve(OpfProblem(net, scale, avail), backend=backend)


def profile_factors(net: Network, profiles, hour: int) -> tuple[dict[int, float], dict[int, float]]:
    scale = {}
    for b in net.buses:
        if b.load_profile_id is not None:
            scale[b.id] = float(profiles[b.load_profile_id][hour])
    avail = {}
    for g in net.generators:
        if g.kind == RES and g.res_profile_id is not None:
            avail[g.id] = min(1.0, max(0.0, float(profiles[g.res_profile_id][hour])))
    return scale, avail
