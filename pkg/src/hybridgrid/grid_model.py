"""Grid domain types, invariant checks and canonical JSON case files."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

from .errors import CaseFormatError, ValidationError

LINE = "line"
TRANSFORMER = "transformer"
EXISTING = "existing"
NEW = "new"
CONVENTIONAL = "conventional"
RES = "res"
CONVERTED_LINE = "converted_line"
CONVERTED_TRANSFORMER = "converted_transformer"
NEW_LINE = "new_line"

MAX_LOSS_FRACTION = 0.2


@dataclass(frozen=True)
class Bus:
    id: int
    name: str = ""
    load_mw: float = 0.0
    load_profile_id: str | None = None


@dataclass(frozen=True)
class Branch:
    id: int
    from_bus: int
    to_bus: int
    r: float
    b: float
    rating: float
    kind: str = LINE
    length_km: float = 0.0
    status: str = EXISTING
    essential: bool = False

    @property
    def is_transformer(self) -> bool:
        return self.kind == TRANSFORMER


@dataclass(frozen=True)
class Generator:
    id: int
    bus: int
    p_min: float
    p_max: float
    cost: tuple[tuple[float, float], ...]
    kind: str = CONVENTIONAL
    res_profile_id: str | None = None

    def segments(self) -> list[tuple[float, float]]:
        """(width_mw, marginal_cost) pairs of the piecewise-linear cost."""
        out = []
        for (p0, c0), (p1, c1) in zip(self.cost, self.cost[1:]):
            out.append((p1 - p0, (c1 - c0) / (p1 - p0)))
        return out

    def cost_at(self, p: float) -> float:
        pts = self.cost
        if p <= pts[0][0]:
            return pts[0][1]
        for (p0, c0), (p1, c1) in zip(pts, pts[1:]):
            if p <= p1:
                return c0 + (c1 - c0) * (p - p0) / (p1 - p0)
        return pts[-1][1]


@dataclass(frozen=True)
class HvdcLink:
    id: int
    from_bus: int
    to_bus: int
    p_max: float
    q_max: float
    loss_k: float = 0.0
    loss_d: float = 0.0
    length_km: float = 0.0
    converter_id: str = ""
    origin: str = NEW_LINE
    # Only meaningful for origin=new_line.
    cable: bool = False
    essential: bool = False

    @property
    def loss_fraction(self) -> float:
        return (self.loss_k * self.length_km + self.loss_d) / 100.0


@dataclass(frozen=True)
class Network:
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...] = ()
    generators: tuple[Generator, ...] = ()
    hvdc_links: tuple[HvdcLink, ...] = ()
    base_mva: float = 100.0
    profiles: Mapping[str, tuple[float, ...]] = field(default_factory=dict)

    def bus_ids(self) -> list[int]:
        return [b.id for b in self.buses]

    def bus(self, bus_id: int) -> Bus:
        for b in self.buses:
            if b.id == bus_id:
                return b
        raise KeyError(bus_id)

    def branch(self, branch_id: int) -> Branch:
        for br in self.branches:
            if br.id == branch_id:
                return br
        raise KeyError(branch_id)

    def replace(self, **changes) -> "Network":
        """Return a copy with the given fields replaced and entities re-sorted by id."""
        net = replace(self, **changes)
        return replace(
            net,
            buses=tuple(sorted(net.buses, key=lambda x: x.id)),
            branches=tuple(sorted(net.branches, key=lambda x: x.id)),
            generators=tuple(sorted(net.generators, key=lambda x: x.id)),
            hvdc_links=tuple(sorted(net.hvdc_links, key=lambda x: x.id)),
        )

    @property
    def total_load(self) -> float:
        return sum(b.load_mw for b in self.buses)


def make_network(buses, branches=(), generators=(), hvdc_links=(), base_mva=100.0,
                 profiles=None, validate_net=True) -> Network:
    net = Network(
        buses=tuple(sorted(buses, key=lambda x: x.id)),
        branches=tuple(sorted(branches, key=lambda x: x.id)),
        generators=tuple(sorted(generators, key=lambda x: x.id)),
        hvdc_links=tuple(sorted(hvdc_links, key=lambda x: x.id)),
        base_mva=float(base_mva),
        profiles={k: tuple(float(v) for v in vals) for k, vals in sorted((profiles or {}).items())},
    )
    if validate_net:
        validate(net)
    return net


# --------------------------------------------------------------------------- #
# validation

def _unique(items, what):
    seen = set()
    for item in items:
        if item.id in seen:
            raise ValidationError(f"duplicate {what} id {item.id}", what, item.id)
        seen.add(item.id)


def validate(net: Network, require_connected: bool = True) -> None:
    """Check every type invariant; raise ValidationError on the first violation."""
    if not net.base_mva > 0:
        raise ValidationError("base_mva must be positive", "network", None)
    _unique(net.buses, "bus")
    _unique(net.branches, "branch")
    _unique(net.generators, "generator")
    _unique(net.hvdc_links, "hvdc_link")
    bus_ids = set(net.bus_ids())

    def check_bus(ref, what, eid):
        if ref not in bus_ids:
            raise ValidationError(f"unknown bus {ref}", what, eid)

    for b in net.buses:
        if not b.load_mw >= 0:
            raise ValidationError(f"bus {b.id}: load_mw must be >= 0", "bus", b.id)
        if b.load_profile_id is not None and net.profiles and b.load_profile_id not in net.profiles:
            raise ValidationError(f"bus {b.id}: unknown profile {b.load_profile_id!r}", "bus", b.id)

    for br in net.branches:
        check_bus(br.from_bus, "branch", br.id)
        check_bus(br.to_bus, "branch", br.id)
        if br.from_bus == br.to_bus:
            raise ValidationError(f"branch {br.id}: from_bus == to_bus", "branch", br.id)
        if br.kind not in (LINE, TRANSFORMER):
            raise ValidationError(f"branch {br.id}: unknown kind {br.kind!r}", "branch", br.id)
        if br.status not in (EXISTING, NEW):
            raise ValidationError(f"branch {br.id}: unknown status {br.status!r}", "branch", br.id)
        if not br.r > 0:
            raise ValidationError(f"branch {br.id}: r must be > 0", "branch", br.id)
        if not br.b > 0:
            raise ValidationError(f"branch {br.id}: b must be > 0", "branch", br.id)
        if not br.rating > 0:
            raise ValidationError(f"branch {br.id}: rating must be > 0", "branch", br.id)
        if not br.length_km >= 0:
            raise ValidationError(f"branch {br.id}: length_km must be >= 0", "branch", br.id)
        if br.kind == TRANSFORMER and br.length_km != 0:
            raise ValidationError(f"branch {br.id}: transformer must have length_km = 0", "branch", br.id)

    for g in net.generators:
        check_bus(g.bus, "generator", g.id)
        if g.kind not in (CONVENTIONAL, RES):
            raise ValidationError(f"generator {g.id}: unknown kind {g.kind!r}", "generator", g.id)
        if not 0 <= g.p_min <= g.p_max:
            raise ValidationError(f"generator {g.id}: need 0 <= p_min <= p_max", "generator", g.id)
        _check_cost(g)
        if g.res_profile_id is not None and net.profiles and g.res_profile_id not in net.profiles:
            raise ValidationError(f"generator {g.id}: unknown profile {g.res_profile_id!r}", "generator", g.id)

    for link in net.hvdc_links:
        check_bus(link.from_bus, "hvdc_link", link.id)
        check_bus(link.to_bus, "hvdc_link", link.id)
        if link.from_bus == link.to_bus:
            raise ValidationError(f"hvdc_link {link.id}: from_bus == to_bus", "hvdc_link", link.id)
        if not link.p_max > 0:
            raise ValidationError(f"hvdc_link {link.id}: p_max must be > 0", "hvdc_link", link.id)
        if abs(link.q_max - 0.5 * link.p_max) > 1e-9 * max(1.0, link.p_max):
            raise ValidationError(f"hvdc_link {link.id}: q_max must equal 0.5*p_max", "hvdc_link", link.id)
        if not link.length_km >= 0:
            raise ValidationError(f"hvdc_link {link.id}: length_km must be >= 0", "hvdc_link", link.id)
        if link.origin not in (CONVERTED_LINE, CONVERTED_TRANSFORMER, NEW_LINE):
            raise ValidationError(f"hvdc_link {link.id}: unknown origin {link.origin!r}", "hvdc_link", link.id)
        lam = link.loss_fraction
        if not 0 <= lam < MAX_LOSS_FRACTION:
            raise ValidationError(f"hvdc_link {link.id}: loss fraction {lam:.4g} outside [0, 0.2)",
                                  "hvdc_link", link.id)

    if require_connected and net.buses:
        comps = connectivity(net)["components"]
        if len(comps) > 1:
            raise ValidationError(f"network is not connected: {len(comps)} components "
                                  f"{[c[:5] for c in comps]}", "network", None)


def _check_cost(g: Generator) -> None:
    pts = g.cost
    if not pts:
        raise ValidationError(f"generator {g.id}: empty cost", "generator", g.id)
    if abs(pts[0][0] - g.p_min) > 1e-9 or abs(pts[-1][0] - g.p_max) > 1e-9:
        raise ValidationError(f"generator {g.id}: cost breakpoints must span [p_min, p_max]",
                              "generator", g.id)
    if len(pts) == 1 and g.p_min != g.p_max:
        raise ValidationError(f"generator {g.id}: cost needs two breakpoints", "generator", g.id)
    last_slope = -float("inf")
    for (p0, c0), (p1, c1) in zip(pts, pts[1:]):
        if not p1 > p0:
            raise ValidationError(f"generator {g.id}: cost breakpoints must strictly increase",
                                  "generator", g.id)
        slope = (c1 - c0) / (p1 - p0)
        if slope < last_slope - 1e-9 * max(1.0, abs(last_slope)):
            raise ValidationError(f"generator {g.id}: cost is not convex", "generator", g.id)
        last_slope = slope


# --------------------------------------------------------------------------- #
# connectivity

def connectivity(net: Network, branches: Iterable[int] | None = None,
                 links: Iterable[int] | None = None) -> dict:
    """Components of the graph over the selected branches and HVDC links.

    ``branches``/``links`` are id selections; ``None`` selects all of that kind.
    Components are sorted lists of bus ids, ordered by their smallest bus.
    """
    parent = {b: b for b in net.bus_ids()}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    br_sel = None if branches is None else set(branches)
    ln_sel = None if links is None else set(links)
    edges = [(br.from_bus, br.to_bus) for br in net.branches if br_sel is None or br.id in br_sel]
    edges += [(ln.from_bus, ln.to_bus) for ln in net.hvdc_links if ln_sel is None or ln.id in ln_sel]
    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    groups: dict[int, list[int]] = {}
    for b in net.bus_ids():
        groups.setdefault(find(b), []).append(b)
    comps = sorted((sorted(g) for g in groups.values()), key=lambda c: c[0])
    return {"connected": len(comps) <= 1, "components": comps}


# --------------------------------------------------------------------------- #
# serialization

def _fmt_real(x: float) -> str:
    s = format(float(x), ".9g")
    if s in ("nan", "inf", "-inf"):
        raise ValueError(f"non-finite value {x!r} cannot be serialized")
    if s == "-0":
        s = "0"
    return s


class Real(float):
    """Marker so the canonical encoder renders a value with 9 significant digits."""


def dumps_canonical(obj, indent: int = 0) -> str:
    """Deterministic JSON: dict key order as given, reals via ``Real`` at 9 sig. digits."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, Real):
        return _fmt_real(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_real(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps_canonical(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps_canonical(v) for v in obj) + "]"
        items = [pad + dumps_canonical(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def network_to_dict(net: Network) -> dict:
    return {
        "base_mva": float(net.base_mva),
        "buses": [
            {"id": b.id, "name": b.name, "load_mw": float(b.load_mw), "load_profile_id": b.load_profile_id}
            for b in sorted(net.buses, key=lambda x: x.id)
        ],
        "branches": [
            {"id": br.id, "from_bus": br.from_bus, "to_bus": br.to_bus, "kind": br.kind,
             "r": float(br.r), "b": float(br.b), "rating": float(br.rating),
             "length_km": float(br.length_km), "status": br.status, "essential": br.essential}
            for br in sorted(net.branches, key=lambda x: x.id)
        ],
        "generators": [
            {"id": g.id, "bus": g.bus, "p_min": float(g.p_min), "p_max": float(g.p_max),
             "cost": [[float(p), float(c)] for p, c in g.cost], "kind": g.kind,
             "res_profile_id": g.res_profile_id}
            for g in sorted(net.generators, key=lambda x: x.id)
        ],
        "hvdc_links": [
            {"id": ln.id, "from_bus": ln.from_bus, "to_bus": ln.to_bus, "p_max": float(ln.p_max),
             "q_max": float(ln.q_max), "loss_k": float(ln.loss_k), "loss_d": float(ln.loss_d),
             "length_km": float(ln.length_km), "converter_id": ln.converter_id, "origin": ln.origin,
             "cable": ln.cable, "essential": ln.essential}
            for ln in sorted(net.hvdc_links, key=lambda x: x.id)
        ],
        "profiles": {k: [float(v) for v in vals] for k, vals in sorted(net.profiles.items())},
    }


def _get(d: dict, key: str, what: str, eid, cast, default=...):
    if key not in d:
        if default is ...:
            raise CaseFormatError(f"{what} {eid}: missing field {key!r}")
        return default
    val = d[key]
    if val is None and default is None:
        return None
    try:
        if cast is bool:
            if not isinstance(val, bool):
                raise TypeError
            return val
        if cast is float and isinstance(val, bool):
            raise TypeError
        if cast is int and (isinstance(val, bool) or not isinstance(val, int)):
            raise TypeError
        if cast is str and not isinstance(val, str):
            raise TypeError
        return cast(val)
    except (TypeError, ValueError):
        raise CaseFormatError(f"{what} {eid}: field {key!r} has invalid value {val!r}") from None


def network_from_dict(data: dict, validate_net: bool = True) -> Network:
    if not isinstance(data, dict):
        raise CaseFormatError("case file must be a JSON object")
    for key in ("base_mva", "buses", "branches", "generators"):
        if key not in data:
            raise CaseFormatError(f"missing top-level key {key!r}")
    try:
        buses = [
            Bus(id=_get(d, "id", "bus", "?", int), name=_get(d, "name", "bus", d.get("id"), str, ""),
                load_mw=_get(d, "load_mw", "bus", d.get("id"), float, 0.0),
                load_profile_id=_get(d, "load_profile_id", "bus", d.get("id"), str, None))
            for d in data["buses"]
        ]
        branches = []
        for d in data["branches"]:
            eid = d.get("id")
            branches.append(Branch(
                id=_get(d, "id", "branch", eid, int), from_bus=_get(d, "from_bus", "branch", eid, int),
                to_bus=_get(d, "to_bus", "branch", eid, int), kind=_get(d, "kind", "branch", eid, str, LINE),
                r=_get(d, "r", "branch", eid, float), b=_get(d, "b", "branch", eid, float),
                rating=_get(d, "rating", "branch", eid, float),
                length_km=_get(d, "length_km", "branch", eid, float, 0.0),
                status=_get(d, "status", "branch", eid, str, EXISTING),
                essential=_get(d, "essential", "branch", eid, bool, False)))
        generators = []
        for d in data["generators"]:
            eid = d.get("id")
            raw_cost = d.get("cost")
            if not isinstance(raw_cost, list) or not all(isinstance(p, list) and len(p) == 2 for p in raw_cost):
                raise CaseFormatError(f"generator {eid}: cost must be a list of [mw, eur_per_h] pairs")
            cost = tuple((float(p), float(c)) for p, c in raw_cost)
            generators.append(Generator(
                id=_get(d, "id", "generator", eid, int), bus=_get(d, "bus", "generator", eid, int),
                p_min=_get(d, "p_min", "generator", eid, float), p_max=_get(d, "p_max", "generator", eid, float),
                cost=cost, kind=_get(d, "kind", "generator", eid, str, CONVENTIONAL),
                res_profile_id=_get(d, "res_profile_id", "generator", eid, str, None)))
        links = []
        for d in data.get("hvdc_links", []):
            eid = d.get("id")
            links.append(HvdcLink(
                id=_get(d, "id", "hvdc_link", eid, int), from_bus=_get(d, "from_bus", "hvdc_link", eid, int),
                to_bus=_get(d, "to_bus", "hvdc_link", eid, int), p_max=_get(d, "p_max", "hvdc_link", eid, float),
                q_max=_get(d, "q_max", "hvdc_link", eid, float),
                loss_k=_get(d, "loss_k", "hvdc_link", eid, float, 0.0),
                loss_d=_get(d, "loss_d", "hvdc_link", eid, float, 0.0),
                length_km=_get(d, "length_km", "hvdc_link", eid, float, 0.0),
                converter_id=_get(d, "converter_id", "hvdc_link", eid, str, ""),
                origin=_get(d, "origin", "hvdc_link", eid, str, NEW_LINE),
                cable=_get(d, "cable", "hvdc_link", eid, bool, False),
                essential=_get(d, "essential", "hvdc_link", eid, bool, False)))
        profiles = data.get("profiles", {}) or {}
        if not isinstance(profiles, dict):
            raise CaseFormatError("profiles must be an object of id -> list of numbers")
        profiles = {str(k): [float(v) for v in vals] for k, vals in profiles.items()}
        base_mva = float(data["base_mva"])
    except (TypeError, ValueError, AttributeError) as exc:
        raise CaseFormatError(f"malformed case: {exc}") from None
    return make_network(buses, branches, generators, links, base_mva, profiles, validate_net=validate_net)


def load_case(path) -> Network:
    """Read and validate a JSON case file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CaseFormatError(f"cannot read {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseFormatError(f"{path}: invalid JSON: {exc}") from None
    return network_from_dict(data)


def dumps_case(net: Network) -> str:
    return dumps_canonical(network_to_dict(net)) + "\n"


def save_case(net: Network, path) -> None:
    Path(path).write_text(dumps_case(net))


def load_profiles(path) -> dict[str, tuple[float, ...]]:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise CaseFormatError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise CaseFormatError(f"{path}: invalid JSON: {exc}") from None
    if isinstance(data, dict) and "profiles" in data and isinstance(data["profiles"], dict):
        data = data["profiles"]
    if not isinstance(data, dict):
        raise CaseFormatError(f"{path}: profiles must be a JSON object")
    try:
        return {str(k): tuple(float(v) for v in vals) for k, vals in sorted(data.items())}
    except (TypeError, ValueError) as exc:
        raise CaseFormatError(f"{path}: malformed profile: {exc}") from None

