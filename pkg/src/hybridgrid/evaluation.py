"""Hourly OPF runs over profile weeks and variant comparison."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import dcopf
from .errors import HybridGridError, ValidationError
from .grid_model import RES, Network, Real

WEEK = 168


@dataclass
class HourResult:
    hour: int
    total_load: float
    res_capacity: float
    total_cost: float
    status: str
    loss_mw: float = 0.0
    max_marginal_cost: float = 0.0

    def to_dict(self) -> dict:
        return {"hour": self.hour, "total_load": Real(self.total_load), "res_capacity": Real(self.res_capacity),
                "total_cost": Real(round(self.total_cost, 6)) if self.status == "optimal" else None,
                "status": self.status, "loss_mw": Real(round(self.loss_mw, 6)),
                "max_marginal_cost": Real(self.max_marginal_cost)}


@dataclass
class ScenarioRun:
    variant_id: str
    hours: list[HourResult] = field(default_factory=list)

    @property
    def hour_range(self) -> list[int]:
        return [h.hour for h in self.hours]

    @property
    def aggregate(self) -> dict:
        ok = [h for h in self.hours if h.status == "optimal"]
        peak = max(self.hours, key=lambda h: (h.total_load, -h.hour)) if self.hours else None
        return {"sum_cost": sum(h.total_cost for h in ok),
                "max_load_hour": peak.hour if peak else None,
                "infeasible_count": len(self.hours) - len(ok)}

    def to_dict(self) -> dict:
        agg = self.aggregate
        agg["sum_cost"] = Real(round(agg["sum_cost"], 6))
        return {"variant_id": self.variant_id, "aggregate": agg, "hours": [h.to_dict() for h in self.hours]}


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("HYBRIDGRID_THREADS", "1")))
    except ValueError:
        return 1


def check_profiles(net: Network, profiles, hours) -> None:
    hours = list(hours)
    need = {b.load_profile_id for b in net.buses if b.load_profile_id is not None}
    need |= {g.res_profile_id for g in net.generators if g.kind == RES and g.res_profile_id is not None}
    for pid in sorted(need):
        if pid not in profiles:
            raise ValidationError(f"missing profile {pid!r}", "profile", pid)
        if hours and (min(hours) < 0 or max(hours) >= len(profiles[pid])):
            raise ValidationError(f"profile {pid!r} has {len(profiles[pid])} hours, does not cover "
                                  f"{min(hours)}..{max(hours)}", "profile", pid)


def _max_marginal_cost(net: Network, avail: dict[int, float]) -> float:
    """Highest segment cost among generators with capacity available this hour."""
    best = 0.0
    for g in net.generators:
        if avail.get(g.id, 1.0) * g.p_max <= 0:
            continue
        for _, mc in g.segments():
            best = max(best, mc)
    return best


def solve_hour(net: Network, profiles, hour: int, backend=None) -> HourResult:
    scale, avail = dcopf.profile_factors(net, profiles, hour)
    prob = dcopf.OpfProblem(net, scale, avail)
    load = sum(prob.bus_load(b) for b in net.buses)
    res_cap = sum(prob.available(g) for g in net.generators if g.kind == RES)
    mmc = _max_marginal_cost(net, avail)
    try:
        sol = dcopf.solve(prob, backend=backend)
    except HybridGridError:
        return HourResult(hour, load, res_cap, float("nan"), "failed", max_marginal_cost=mmc)
    if not sol.optimal:
        return HourResult(hour, load, res_cap, float("nan"), "infeasible", max_marginal_cost=mmc)
    return HourResult(hour, load, res_cap, sol.total_cost, "optimal", sum(sol.hvdc_losses.values()), mmc)


def run_week(net: Network, profiles, hours, variant_id: str = "variant", threads: int | None = None,
             backend=None) -> ScenarioRun:
    """Solve every hour in ``hours``; infeasible hours are recorded, not fatal."""
    hours = list(hours)
    check_profiles(net, profiles, hours)
    threads = threads or thread_count()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda h: solve_hour(net, profiles, h, backend), hours))
    else:
        results = [solve_hour(net, profiles, h, backend) for h in hours]
    return ScenarioRun(variant_id, sorted(results, key=lambda r: r.hour))


@dataclass
class Comparison:
    a: ScenarioRun
    b: ScenarioRun
    delta: list[float]
    rel_delta: list[float]

    @property
    def total_a(self) -> float:
        return sum(h.total_cost for h in self.a.hours if h.status == "optimal")

    @property
    def total_b(self) -> float:
        return sum(h.total_cost for h in self.b.hours if h.status == "optimal")

    @property
    def weekly_delta(self) -> float:
        return self.total_b - self.total_a

    @property
    def max_rel_gap(self) -> float:
        vals = [abs(x) for x in self.rel_delta if x == x]
        return max(vals) if vals else 0.0

    def to_csv(self) -> str:
        ida, idb = self.a.variant_id, self.b.variant_id
        rows = [f"hour,total_load,res_capacity,cost_{ida},cost_{idb},delta,rel_delta"]
        for ha, hb, d, r in zip(self.a.hours, self.b.hours, self.delta, self.rel_delta):
            rows.append(",".join([str(ha.hour), _f(ha.total_load), _f(ha.res_capacity), _f(ha.total_cost),
                                  _f(hb.total_cost), _f(d), _f(r)]))
        return "\n".join(rows) + "\n"


def _f(x: float) -> str:
    if x != x:
        return ""
    return format(round(x, 6) + 0.0, ".9g")


def compare(a: ScenarioRun, b: ScenarioRun) -> Comparison:
    """Per-hour ``b - a`` cost deltas; NaN where either hour failed."""
    if a.hour_range != b.hour_range:
        raise ValueError("runs cover different hour ranges")
    delta, rel = [], []
    for ha, hb in zip(a.hours, b.hours):
        if ha.status == "optimal" and hb.status == "optimal":
            d = hb.total_cost - ha.total_cost
            delta.append(d)
            rel.append(d / ha.total_cost if ha.total_cost else 0.0)
        else:
            delta.append(float("nan"))
            rel.append(float("nan"))
    return Comparison(a, b, delta, rel)


def total_load_series(net: Network, profiles, n_hours: int | None = None) -> list[float]:
    lengths = [len(profiles[b.load_profile_id]) for b in net.buses if b.load_profile_id is not None]
    n = n_hours if n_hours is not None else (min(lengths) if lengths else 0)
    series = []
    for h in range(n):
        total = 0.0
        for b in net.buses:
            s = profiles[b.load_profile_id][h] if b.load_profile_id is not None else 1.0
            total += b.load_mw * s
        series.append(total)
    return series


def find_extreme_weeks(load: list[float], year_hours: int = 8760) -> dict:
    """Start hours of the 168-hour blocks containing the minimum and maximum load.

    Blocks are aligned to hour 0. An extreme in the trailing partial block
    maps to the last full window ``year_hours - 168``, which still contains it.
    Ties resolve to the earliest hour.
    """
    if len(load) < year_hours or year_hours < WEEK:
        raise ValueError(f"profile has {len(load)} hours, need {year_hours}")
    vals = load[:year_hours]
    hmax = max(range(year_hours), key=lambda h: (vals[h], -h))
    hmin = min(range(year_hours), key=lambda h: (vals[h], h))

    def start(h):
        return min((h // WEEK) * WEEK, year_hours - WEEK)

    return {"min_week_start": start(hmin), "max_week_start": start(hmax), "min_hour": hmin, "max_hour": hmax}
