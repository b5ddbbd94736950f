"""Transition of a base grid to the hybrid AC/HVDC architecture.

Branches are weighted by congestion multiplier plus series resistance
(transformers get an extra ``r_max``), a minimum spanning tree is kept as
AC, and every branch outside the tree becomes an HVDC link whose rating
follows the peak-load utilization.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

from . import graph
from .dcopf import OpfSolution
from .errors import CaseFormatError, PlanningError
from .grid_model import (CONVERTED_LINE, CONVERTED_TRANSFORMER, Branch, HvdcLink, Network, Real,
                         connectivity, validate)


@dataclass(frozen=True)
class RatingConfig:
    mu_tol: float = 1e-6
    u_high: float = 70.0
    u_low: float = 30.0
    up_factor: float = 2.0
    high_factor: float = 1.0
    mid_factor: float = 0.75
    low_factor: float = 0.5

    @classmethod
    def from_dict(cls, data: dict) -> "RatingConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise CaseFormatError(f"unknown rating config keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})

    @classmethod
    def load(cls, path) -> "RatingConfig":
        return cls.from_dict(_read_json(path))


@dataclass(frozen=True)
class ConverterModule:
    id: str
    rating_mva: float
    b2b_only: bool = False
    loss_k: float = 0.0
    loss_d: float = 0.0
    max_line_km: float | None = None

    def __post_init__(self):
        if not self.rating_mva > 0:
            raise CaseFormatError(f"converter {self.id}: rating_mva must be > 0")
        if not self.loss_d > 0:
            raise CaseFormatError(f"converter {self.id}: loss_d must be > 0")

    def eligible(self, is_b2b: bool, length_km: float) -> bool:
        if self.b2b_only and not is_b2b:
            return False
        if self.max_line_km is not None and length_km > self.max_line_km:
            return False
        return True


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise CaseFormatError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise CaseFormatError(f"{path}: invalid JSON: {exc}") from None


def load_catalog(path=None) -> list[ConverterModule]:
    """Read a converter catalog; ``None`` loads the bundled placeholder catalog."""
    if path is None:
        data = json.loads(resources.files("hybridgrid").joinpath("data/converters.json").read_text())
    else:
        data = _read_json(path)
    if isinstance(data, dict):
        data = data.get("modules", [])
    try:
        catalog = [ConverterModule(**m) for m in data]
    except TypeError as exc:
        raise CaseFormatError(f"malformed converter catalog: {exc}") from None
    if not catalog:
        raise CaseFormatError("converter catalog is empty")
    return catalog


@dataclass(frozen=True)
class Conversion:
    branch_id: int
    kind: str
    rating_before: float
    target_rating: float
    converter_id: str
    module_count: int
    link: HvdcLink

    @property
    def installed_mva(self) -> float:
        return self.link.p_max

    @property
    def capacity_factor(self) -> float:
        return self.link.p_max / self.rating_before


@dataclass
class TransitionPlan:
    conversions: list[Conversion] = field(default_factory=list)
    tree_branch_ids: list[int] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        convs = []
        for c in self.conversions:
            ln = c.link
            convs.append({
                "branch_id": c.branch_id, "kind": c.kind, "rating_before": Real(c.rating_before),
                "target_rating": Real(c.target_rating), "converter_id": c.converter_id,
                "module_count": c.module_count,
                "link": {"id": ln.id, "from_bus": ln.from_bus, "to_bus": ln.to_bus, "p_max": Real(ln.p_max),
                         "q_max": Real(ln.q_max), "loss_k": Real(ln.loss_k), "loss_d": Real(ln.loss_d),
                         "length_km": Real(ln.length_km), "converter_id": ln.converter_id,
                         "origin": ln.origin},
            })
        summary = {k: (Real(v) if isinstance(v, float) else v) for k, v in self.summary.items()}
        return {"conversions": convs, "tree_branch_ids": list(self.tree_branch_ids), "summary": summary}

    @classmethod
    def from_dict(cls, data: dict) -> "TransitionPlan":
        try:
            convs = []
            for c in data["conversions"]:
                ln = c["link"]
                link = HvdcLink(id=int(ln["id"]), from_bus=int(ln["from_bus"]), to_bus=int(ln["to_bus"]),
                                p_max=float(ln["p_max"]), q_max=float(ln["q_max"]),
                                loss_k=float(ln["loss_k"]), loss_d=float(ln["loss_d"]),
                                length_km=float(ln["length_km"]), converter_id=str(ln["converter_id"]),
                                origin=str(ln["origin"]))
                convs.append(Conversion(int(c["branch_id"]), str(c["kind"]), float(c["rating_before"]),
                                        float(c["target_rating"]), str(c["converter_id"]),
                                        int(c["module_count"]), link))
            return cls(convs, [int(i) for i in data["tree_branch_ids"]], dict(data.get("summary", {})))
        except (KeyError, TypeError, ValueError) as exc:
            raise CaseFormatError(f"malformed plan: {exc}") from None


def max_resistance(net: Network) -> float:
    return max((br.r for br in net.branches), default=0.0)


def suitability(branch: Branch, sol: OpfSolution, r_max: float) -> float:
    """Upgrade suitability weight; low weights stay AC."""
    w = sol.mu.get(branch.id, 0.0) + branch.r
    if branch.is_transformer:
        w += r_max
    return w


def select_conversions(net: Network, weights: dict[int, float]) -> tuple[list[int], list[int]]:
    """Split AC branches into a minimum spanning tree and the branches to convert."""
    comps = connectivity(net, links=())["components"]
    if len(comps) > 1:
        raise PlanningError(f"AC graph is disconnected; components: {comps}")
    edges = [((weights[br.id], br.id), br.from_bus, br.to_bus) for br in net.branches]
    tree = sorted(key[1] for key in graph.kruskal(net.bus_ids(), edges))
    in_tree = set(tree)
    off = [br.id for br in net.branches if br.id not in in_tree]
    return tree, off


def count_spanning_trees(net: Network) -> int:
    return graph.count_spanning_trees(net.bus_ids(), [(br.from_bus, br.to_bus) for br in net.branches])


def target_rating(branch: Branch, sol: OpfSolution, cfg: RatingConfig = RatingConfig()) -> float:
    mu = sol.mu.get(branch.id, 0.0)
    u = sol.utilization.get(branch.id, 0.0)
    if mu > cfg.mu_tol:
        return cfg.up_factor * branch.rating
    if u >= cfg.u_high:
        return cfg.high_factor * branch.rating
    if u >= cfg.u_low:
        return cfg.mid_factor * branch.rating
    return cfg.low_factor * branch.rating


def select_converter(target: float, is_b2b: bool, length_km: float,
                     catalog: list[ConverterModule]) -> tuple[str, int]:
    """Smallest sufficient eligible module, else parallel copies of the largest."""
    eligible = [m for m in catalog if m.eligible(is_b2b, length_km)]
    if not eligible:
        raise PlanningError(f"no eligible converter (b2b={is_b2b}, length={length_km} km)")
    sufficient = [m for m in eligible if m.rating_mva >= target]
    if sufficient:
        best = min(sufficient, key=lambda m: m.rating_mva)  # min() keeps catalog order on ties
        return best.id, 1
    largest = max(eligible, key=lambda m: m.rating_mva)
    for m in eligible:
        if m.rating_mva == largest.rating_mva:
            largest = m
            break
    return largest.id, math.ceil(target / largest.rating_mva)


def build_transition(net: Network, sol: OpfSolution, catalog: list[ConverterModule],
                     cfg: RatingConfig = RatingConfig()) -> tuple[TransitionPlan, Network]:
    if not sol.optimal:
        raise PlanningError("transition planning needs an optimal peak-load OPF solution")
    r_max = max_resistance(net)
    weights = {br.id: suitability(br, sol, r_max) for br in net.branches}
    tree, off = select_conversions(net, weights)
    modules = {m.id: m for m in catalog}
    next_id = max((ln.id for ln in net.hvdc_links), default=0) + 1
    conversions = []
    for bid in off:
        br = net.branch(bid)
        is_b2b = br.is_transformer
        length = 0.0 if is_b2b else br.length_km
        target = target_rating(br, sol, cfg)
        conv_id, count = select_converter(target, is_b2b, length, catalog)
        mod = modules[conv_id]
        p_max = count * mod.rating_mva
        link = HvdcLink(id=next_id, from_bus=br.from_bus, to_bus=br.to_bus, p_max=p_max, q_max=0.5 * p_max,
                        loss_k=mod.loss_k, loss_d=mod.loss_d, length_km=length, converter_id=conv_id,
                        origin=CONVERTED_TRANSFORMER if is_b2b else CONVERTED_LINE)
        next_id += 1
        conversions.append(Conversion(bid, br.kind, br.rating, target, conv_id, count, link))

    in_tree = set(tree)
    converted = net.replace(branches=tuple(br for br in net.branches if br.id in in_tree),
                            hvdc_links=net.hvdc_links + tuple(c.link for c in conversions))
    validate(converted)
    if len(converted.branches) != len(net.buses) - 1 or not connectivity(converted, links=())["connected"]:
        raise PlanningError("converted AC subgraph is not a spanning tree")

    lines = [c for c in conversions if c.kind != "transformer"]
    factors = [c.capacity_factor for c in conversions]
    summary = {
        "lines_converted": len(lines),
        "transformers_converted": len(conversions) - len(lines),
        "km_converted": float(sum(c.link.length_km for c in lines)),
        "lines_total": sum(1 for br in net.branches if not br.is_transformer),
        "transformers_total": sum(1 for br in net.branches if br.is_transformer),
        "avg_capacity_factor": float(sum(factors) / len(factors)) if factors else 1.0,
        "uprated": sum(1 for c in conversions if c.target_rating > c.rating_before),
        "installed_mva": float(sum(c.installed_mva for c in conversions)),
    }
    return TransitionPlan(conversions, tree, summary), converted
