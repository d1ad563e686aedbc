"""Run configuration shared by the CLI, the HTTP service, and the UI.

One JSON schema describes a complete run: the trial layout, economic
scale, budget, and either a point ICC vector (variance/LOD) or an ICC box
(MMD), plus optional period-search and evaluation-point fields. Front
ends build it, the engine consumes it, and results always echo enough to
re-run the computation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .correlation import IccBox, IccVector
from .designs import BudgetModel, DesignFamily, DesignPattern, TrialLayout
from .errors import InvalidInputError
from .variance import EconModel


@dataclass(frozen=True)
class RunConfig:
    layout: TrialLayout
    econ: EconModel
    budget: BudgetModel
    icc: IccVector | None = None
    icc_box: IccBox | None = None
    search_j: tuple[int, int] | None = None
    clusters: int | None = None
    cluster_size: int | None = None

    def to_dict(self) -> dict:
        out: dict = {
            "design": self.layout.to_dict(),
            "economics": self.econ.to_dict(),
            "budget": self.budget.to_dict(),
        }
        if self.icc is not None:
            out["icc"] = self.icc.to_dict()
        if self.icc_box is not None:
            out["iccBox"] = self.icc_box.to_dict()
        if self.search_j is not None:
            out["searchJ"] = {"from": self.search_j[0], "to": self.search_j[1]}
        if self.clusters is not None:
            out["I"] = self.clusters
        if self.cluster_size is not None:
            out["K"] = self.cluster_size
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        try:
            layout = TrialLayout.from_dict(data["design"])
            econ = EconModel.from_dict(data["economics"])
            budget = BudgetModel.from_dict(data["budget"])
        except KeyError as exc:
            raise InvalidInputError(f"missing config section: {exc}") from exc
        icc = IccVector.from_dict(data["icc"]) if data.get("icc") else None
        box = IccBox.from_dict(data["iccBox"]) if data.get("iccBox") else None
        search_j = None
        if data.get("searchJ"):
            search_j = (int(data["searchJ"]["from"]), int(data["searchJ"]["to"]))
        clusters = int(data["I"]) if data.get("I") is not None else None
        cluster_size = int(data["K"]) if data.get("K") is not None else None
        return cls(layout, econ, budget, icc, box, search_j, clusters, cluster_size)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise InvalidInputError("config must be a JSON object")
        return cls.from_dict(data)

    def require_icc(self) -> IccVector:
        if self.icc is None:
            raise InvalidInputError("a point ICC vector is required", field="icc")
        return self.icc

    def require_box(self) -> IccBox:
        if self.icc_box is not None:
            return self.icc_box
        if self.icc is not None:
            return IccBox(self.icc, self.icc)
        raise InvalidInputError("an ICC box is required", field="iccBox")


def parse_icc_values(text: str) -> IccVector:
    """Seven comma-separated correlations in canonical order
    (rho0E, rho1E, rho0C, rho1C, rho0EC, rho1EC, rho2EC)."""
    parts = [p.strip() for p in text.split(",") if p.strip() != ""]
    if len(parts) != 7:
        raise InvalidInputError(
            "expected 7 comma-separated ICC values "
            "(rho0E,rho1E,rho0C,rho1C,rho0EC,rho1EC,rho2EC)", field="icc")
    try:
        values = [float(p) for p in parts]
    except ValueError as exc:
        raise InvalidInputError(f"ICC values must be numeric: {exc}", field="icc") from exc
    return IccVector(*values)


def parse_allocation(text: str) -> Fraction:
    """Exact allocation fraction, written as 'num/den'."""
    try:
        if "/" in text:
            num, den = text.split("/", 1)
            return Fraction(int(num), int(den))
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidInputError(f"allocation must be a fraction like 1/2: {exc}",
                                field="allocation") from exc


def build_layout(family: str, periods: int, allocation: str | None,
                 sequences: int | None, pattern_path: str | None) -> TrialLayout:
    fam = DesignFamily(family)
    pattern = DesignPattern.from_csv(pattern_path) if pattern_path else None
    alloc = parse_allocation(allocation) if allocation else None
    if fam in (DesignFamily.CRXO, DesignFamily.PA) and alloc is None:
        alloc = Fraction(1, 2)
    return TrialLayout(fam, periods, alloc, sequences, pattern)
