"""Investment-cost accounting and the HVDC loss-model fit.

All money is carried as integer thousands of euros (k€) so report totals
are exact sums of their line items.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path
from typing import Iterable, Sequence

from .errors import CaseFormatError
from .grid_model import NEW, NEW_LINE, Network, Real
from .transition import TransitionPlan

KEUR_PER_MEUR = 1000


@dataclass(frozen=True)
class CostAssumptions:
    """Unit costs in M€ (per km or per MVA)."""

    ac_line_eur_per_km: float = 1.5
    dc_overhead_eur_per_km: float = 1.5
    dc_cable_eur_per_km: float = 4.0
    ac_to_dc_conversion_eur_per_km: float = 0.2
    vsc_eur_per_mva: float = 0.102
    terminals_per_converted_line: int = 2
    b2b_multiplier: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise CaseFormatError(f"cost assumption {f.name} must be >= 0")

    @classmethod
    def load(cls, path) -> "CostAssumptions":
        try:
            data = json.loads(Path(path).read_text())
            return cls(**data)
        except (OSError, json.JSONDecodeError, TypeError) as exc:
            raise CaseFormatError(f"cannot read cost assumptions {path}: {exc}") from None


def _keur(meur_rate: float, quantity: float) -> int:
    """``quantity * rate`` converted to k€, rounded half-even to an integer."""
    val = Decimal(repr(float(quantity))) * Decimal(repr(float(meur_rate))) * KEUR_PER_MEUR
    return int(val.to_integral_value(rounding=ROUND_HALF_EVEN))


@dataclass
class CostItem:
    category: str
    quantity: float
    unit: str
    unit_cost: float  # M€ per unit
    total_keur: int

    def to_dict(self) -> dict:
        return {"category": self.category, "quantity": Real(self.quantity), "unit": self.unit,
                "unit_cost_meur": Real(self.unit_cost), "total_keur": self.total_keur}


@dataclass
class CostReport:
    items: list[CostItem] = field(default_factory=list)
    comparison: "CostReport | None" = None

    @property
    def grand_total_keur(self) -> int:
        return sum(i.total_keur for i in self.items)

    @property
    def grand_total_meur(self) -> float:
        return self.grand_total_keur / KEUR_PER_MEUR

    def item(self, category: str) -> CostItem:
        for i in self.items:
            if i.category == category:
                return i
        raise KeyError(category)

    def to_dict(self) -> dict:
        out = {"items": [i.to_dict() for i in self.items], "grand_total_keur": self.grand_total_keur}
        if self.comparison is not None:
            out["comparison"] = self.comparison.to_dict()
            out["net_keur"] = self.grand_total_keur - self.comparison.grand_total_keur
        return out

    def to_csv(self) -> str:
        rows = ["section,category,quantity,unit,unit_cost_meur,total_keur"]
        sections = [("investment", self)]
        if self.comparison is not None:
            sections.append(("savings", self.comparison))
        for name, rep in sections:
            for i in rep.items:
                rows.append(f"{name},{i.category},{i.quantity:.9g},{i.unit},{i.unit_cost:.9g},{i.total_keur}")
            rows.append(f"{name},total,,,,{rep.grand_total_keur}")
        return "\n".join(rows) + "\n"


def _accumulate(items: dict, category: str, unit: str, rate: float, quantity: float) -> None:
    """Add one entity's cost; each entity is rounded on its own so reports stay additive."""
    if category not in items:
        items[category] = CostItem(category, 0.0, unit, rate, 0)
    it = items[category]
    it.quantity += quantity
    it.total_keur += _keur(rate, quantity)


def plan_cost(plan: TransitionPlan, net: Network, assumptions: CostAssumptions = CostAssumptions()) -> CostReport:
    """Investment for a transition plan plus the new lines already in ``net``."""
    a = assumptions
    items: dict[str, CostItem] = {}
    for c in plan.conversions:
        if c.kind == "transformer":
            _accumulate(items, "b2b_converter_stations", "MVA", a.vsc_eur_per_mva * a.b2b_multiplier,
                        c.installed_mva)
        else:
            _accumulate(items, "ac_to_dc_conversion", "km", a.ac_to_dc_conversion_eur_per_km, c.link.length_km)
            _accumulate(items, "vsc_substations", "MVA", a.vsc_eur_per_mva,
                        a.terminals_per_converted_line * c.installed_mva)
    for br in net.branches:
        if br.status == NEW and not br.is_transformer:
            _accumulate(items, "new_ac_lines", "km", a.ac_line_eur_per_km, br.length_km)
    for ln in net.hvdc_links:
        if ln.origin == NEW_LINE:
            if ln.cable:
                _accumulate(items, "new_dc_cables", "km", a.dc_cable_eur_per_km, ln.length_km)
            else:
                _accumulate(items, "new_dc_overhead_lines", "km", a.dc_overhead_eur_per_km, ln.length_km)
    order = ["ac_to_dc_conversion", "vsc_substations", "b2b_converter_stations", "new_ac_lines",
             "new_dc_overhead_lines", "new_dc_cables"]
    return CostReport([items[k] for k in order if k in items])


def _new_line_km(net: Network) -> dict[str, float]:
    km = {"new_ac_lines": 0.0, "new_dc_overhead_lines": 0.0, "new_dc_cables": 0.0}
    for br in net.branches:
        if br.status == NEW and not br.is_transformer:
            km["new_ac_lines"] += br.length_km
    for ln in net.hvdc_links:
        if ln.origin == NEW_LINE:
            km["new_dc_cables" if ln.cable else "new_dc_overhead_lines"] += ln.length_km
    return km


def savings_vs_reference(base: Network, reference: Network,
                         assumptions: CostAssumptions = CostAssumptions()) -> CostReport:
    """New-line investment the reference needs beyond ``base`` (negative = base costs more)."""
    a = assumptions
    rates = {"new_ac_lines": a.ac_line_eur_per_km, "new_dc_overhead_lines": a.dc_overhead_eur_per_km,
             "new_dc_cables": a.dc_cable_eur_per_km}
    kb, kr = _new_line_km(base), _new_line_km(reference)
    items = []
    for cat, rate in rates.items():
        ref_keur = sum(_keur(rate, x) for x in _per_line_km(reference, cat))
        base_keur = sum(_keur(rate, x) for x in _per_line_km(base, cat))
        items.append(CostItem(cat, kr[cat] - kb[cat], "km", rate, ref_keur - base_keur))
    return CostReport(items)


def _per_line_km(net: Network, category: str) -> Iterable[float]:
    if category == "new_ac_lines":
        return [br.length_km for br in net.branches if br.status == NEW and not br.is_transformer]
    cable = category == "new_dc_cables"
    return [ln.length_km for ln in net.hvdc_links if ln.origin == NEW_LINE and ln.cable == cable]


def fit_loss_model(points: Sequence[tuple[float, float]], omit: Iterable[int] = ()) -> tuple[float, float]:
    """Least-squares line ``loss% = k * length_km + d``; returns ``(k, d)``."""
    skip = set(omit)
    pts = [(float(l), float(p)) for i, (l, p) in enumerate(points) if i not in skip]
    if len(pts) < 2:
        raise ValueError("need at least two points for the loss fit")
    n = len(pts)
    mx = sum(l for l, _ in pts) / n
    my = sum(p for _, p in pts) / n
    sxx = sum((l - mx) ** 2 for l, _ in pts)
    if sxx == 0:
        raise ValueError("loss fit needs at least two distinct lengths")
    sxy = sum((l - mx) * (p - my) for l, p in pts)
    k = sxy / sxx
    return k, my - k * mx
