"""Reduction of an expansion plan to a base grid and model streamlining.

The fixed order is :func:`reduce_to_base_grid`, :func:`merge_parallel_branches`,
:func:`aggregate_generators`, :func:`floor_resistance`; see :func:`preprocess`.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import PreprocessError
from .grid_model import EXISTING, NEW, NEW_LINE, Branch, Generator, Network, _check_cost, connectivity

R_FLOOR = 1e-5


@dataclass
class ReductionReport:
    removed: list[tuple[str, int, float]] = field(default_factory=list)  # (kind, id, km)
    dropped_buses: list[int] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.removed)

    @property
    def total_km(self) -> float:
        return sum(km for _, _, km in self.removed)

    def to_csv(self) -> str:
        rows = ["kind,id,km"] + [f"{k},{i},{km:.9g}" for k, i, km in self.removed]
        return "\n".join(rows) + "\n"


def _new_elements(net: Network) -> list[tuple[str, int, float]]:
    items = [("branch", br.id, br.length_km) for br in net.branches if br.status == NEW]
    items += [("hvdc_link", ln.id, ln.length_km) for ln in net.hvdc_links if ln.origin == NEW_LINE]
    return items


def _active_buses(net: Network) -> set[int]:
    buses = {b.id for b in net.buses if b.load_mw > 0}
    buses |= {g.bus for g in net.generators}
    return buses


def _integrates(net: Network, drop: set[tuple[str, int]], active: set[int]) -> bool:
    br = [b.id for b in net.branches if ("branch", b.id) not in drop]
    ln = [x.id for x in net.hvdc_links if ("hvdc_link", x.id) not in drop]
    comps = connectivity(net, br, ln)["components"]
    touched = [c for c in comps if active.intersection(c)]
    return len(touched) <= 1


def flag_essential_lines(net: Network) -> Network:
    """Mark new lines needed to keep every load/generation bus connected.

    New lines are tentatively removed one by one, longest first (ties by
    id), on top of all lines already removed; a line whose removal would
    separate load or generation buses is kept and flagged essential. The
    kept set is therefore minimal: no essential line can be dropped alone.
    Lines already flagged essential in the input are kept as they are.
    """
    active = _active_buses(net)
    explicit = {("branch", b.id) for b in net.branches if b.status == NEW and b.essential}
    explicit |= {("hvdc_link", x.id) for x in net.hvdc_links if x.origin == NEW_LINE and x.essential}
    order = sorted(_new_elements(net), key=lambda e: (-e[2], e[0], e[1]))
    dropped: set[tuple[str, int]] = set()
    essential = set(explicit)
    for kind, eid, _ in order:
        if (kind, eid) in explicit:
            continue
        trial = dropped | {(kind, eid)}
        if _integrates(net, trial, active):
            dropped = trial
        else:
            essential.add((kind, eid))
    branches = tuple(replace(b, essential=("branch", b.id) in essential) if b.status == NEW else b
                     for b in net.branches)
    links = tuple(replace(x, essential=("hvdc_link", x.id) in essential) if x.origin == NEW_LINE else x
                  for x in net.hvdc_links)
    return net.replace(branches=branches, hvdc_links=links)


def reduce_to_base_grid(net: Network, report: ReductionReport | None = None) -> Network:
    """Drop every new, non-essential line.

    Buses left isolated that carry no load or generation vanish with them;
    any other disconnection raises :class:`PreprocessError`.
    """
    if report is None:
        report = ReductionReport()
    removed = [("branch", b.id, b.length_km) for b in net.branches if b.status == NEW and not b.essential]
    removed += [("hvdc_link", x.id, x.length_km) for x in net.hvdc_links
                if x.origin == NEW_LINE and not x.essential]
    if not removed:
        return net
    gone = {(k, i) for k, i, _ in removed}
    branches = tuple(b for b in net.branches if ("branch", b.id) not in gone)
    links = tuple(x for x in net.hvdc_links if ("hvdc_link", x.id) not in gone)
    reduced = net.replace(branches=branches, hvdc_links=links)

    comps = connectivity(reduced)["components"]
    if len(comps) > 1:
        active = _active_buses(net)
        main = max(comps, key=lambda c: (len(active.intersection(c)), len(c), -c[0]))
        stray = [b for c in comps if c is not main for b in c]
        bad = sorted(active.intersection(stray))
        if bad:
            raise PreprocessError(f"removing non-essential new lines disconnects buses {bad}; "
                                  "check the essential flags")
        reduced = reduced.replace(buses=tuple(b for b in reduced.buses if b.id not in set(stray)))
        report.dropped_buses.extend(sorted(stray))
    report.removed.extend(sorted(removed))
    return reduced


def merge_parallel_branches(net: Network) -> Network:
    """Combine parallel branches of the same kind into one equivalent branch.

    Susceptances and ratings add, conductances add (``1/r`` summed), the
    length is the longest of the group. The merged branch keeps the
    smallest id.
    """
    groups: dict[tuple[int, int], list[Branch]] = {}
    for br in net.branches:
        key = (min(br.from_bus, br.to_bus), max(br.from_bus, br.to_bus))
        groups.setdefault(key, []).append(br)
    out = []
    for key, grp in groups.items():
        if len(grp) == 1:
            out.append(grp[0])
            continue
        kinds = {b.kind for b in grp}
        if len(kinds) > 1:
            raise PreprocessError(f"parallel branches {[b.id for b in grp]} between buses {key} "
                                  "mix lines and transformers")
        first = min(grp, key=lambda b: b.id)
        status = NEW if all(b.status == NEW for b in grp) else EXISTING
        out.append(replace(
            first,
            r=1.0 / sum(1.0 / b.r for b in grp),
            b=sum(b.b for b in grp),
            rating=sum(b.rating for b in grp),
            length_km=max(b.length_km for b in grp),
            status=status,
            essential=any(b.essential for b in grp),
        ))
    return net.replace(branches=tuple(out))


def _merge_costs(gens: list[Generator]) -> tuple[tuple[float, float], ...]:
    p = sum(g.p_min for g in gens)
    c = sum(g.cost[0][1] for g in gens)
    segs = []
    for order, g in enumerate(gens):
        for k, (w, mc) in enumerate(g.segments()):
            segs.append((mc, order, k, w))
    segs.sort()
    pts = [(p, c)]
    for mc, _, _, w in segs:
        p += w
        c += mc * w
        pts.append((p, c))
    pts[-1] = (sum(g.p_max for g in gens), c)
    return tuple(pts)


def aggregate_generators(net: Network) -> Network:
    """One equivalent generator per (bus, kind, RES profile).

    The merged cost stacks all cost segments in nondecreasing marginal-cost
    order, which is the optimal joint dispatch cost for every output level.
    """
    groups: dict[tuple, list[Generator]] = {}
    for g in net.generators:
        _check_cost(g)
        groups.setdefault((g.bus, g.kind, g.res_profile_id or ""), []).append(g)
    out = []
    for grp in groups.values():
        if len(grp) == 1:
            out.append(grp[0])
            continue
        first = min(grp, key=lambda g: g.id)
        out.append(replace(first, p_min=sum(g.p_min for g in grp), p_max=sum(g.p_max for g in grp),
                           cost=_merge_costs(sorted(grp, key=lambda g: g.id))))
    return net.replace(generators=tuple(out))


def floor_resistance(net: Network, floor: float = R_FLOOR) -> Network:
    branches = tuple(replace(b, r=floor) if b.r < floor else b for b in net.branches)
    return net.replace(branches=branches)


def preprocess(net: Network, reduce: bool = True, report: ReductionReport | None = None) -> Network:
    if reduce:
        net = reduce_to_base_grid(flag_essential_lines(net), report)
    net = merge_parallel_branches(net)
    net = aggregate_generators(net)
    return floor_resistance(net)
