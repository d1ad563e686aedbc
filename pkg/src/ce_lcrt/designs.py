"""Trial layouts, treatment schedules, design constants, and the budget-feasible design space.

Four design families are supported: cluster randomized crossover (CRXO),
parallel-arm longitudinal (PA), stepped wedge (SW), and incomplete stepped
wedge (staggered enrollment windows or an explicit cluster-by-period
pattern). All values are immutable after construction; every operation is
a pure function of its inputs.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterator

import numpy as np

MISSING = -1


class DesignFamily(str, Enum):
    CRXO = "crxo"
    PA = "pa"
    SW = "sw"
    SW_INCOMPLETE = "sw-incomplete"


class LayoutError(ValueError):
    """Invalid layout shape or a divisibility violation."""


@dataclass(frozen=True, eq=False)
class DesignPattern:
    """Cluster-by-period grid of control/treatment/missing cells.

    Entries: 0 control, 1 treatment, -1 missing. Within each row the
    non-missing entries must follow a monotone control-to-treatment
    rollout; every period needs at least one observing cluster and every
    cluster at least two observed periods.
    """

    entries: np.ndarray

    def __eq__(self, other: object) -> bool:
        return isinstance(other, DesignPattern) and \
            self.entries.shape == other.entries.shape and \
            bool((self.entries == other.entries).all())

    def __hash__(self) -> int:
        return hash((self.entries.shape, self.entries.tobytes()))

    def __post_init__(self) -> None:
        e = np.asarray(self.entries, dtype=np.int8)
        object.__setattr__(self, "entries", e)
        e.setflags(write=False)
        if e.ndim != 2 or e.shape[0] < 1 or e.shape[1] < 2:
            raise LayoutError("pattern must be a 2-D grid with at least two periods")
        if not np.isin(e, (MISSING, 0, 1)).all():
            raise LayoutError("pattern cells must be 0, 1, or missing")
        for i, row in enumerate(e):
            seen = row[row != MISSING]
            if seen.size < 2:
                raise LayoutError(f"cluster {i + 1} observes fewer than two periods")
            if np.any(np.diff(seen) < 0):
                raise LayoutError(f"cluster {i + 1} switches back from treatment to control")
        if np.any((e == MISSING).all(axis=0)):
            raise LayoutError("some period is observed by no cluster")

    @property
    def clusters(self) -> int:
        return int(self.entries.shape[0])

    @property
    def periods(self) -> int:
        return int(self.entries.shape[1])

    def observed(self) -> np.ndarray:
        return self.entries != MISSING

    def treatment(self) -> np.ndarray:
        """Treatment indicators over the full grid; missing cells read 0
        (their value is arbitrary and never used downstream)."""
        return (self.entries == 1).astype(np.int8)

    def observed_cluster_periods(self) -> int:
        return int(self.observed().sum())

    @classmethod
    def from_csv(cls, path: str | Path) -> "DesignPattern":
        return cls.from_csv_text(Path(path).read_text(encoding="utf-8"))

    @classmethod
    def from_csv_text(cls, text: str) -> "DesignPattern":
        rows = []
        for line in io.StringIO(text.strip()):
            cells = [c.strip() for c in line.strip().split(",") if c.strip() != ""]
            if not cells:
                continue
            try:
                rows.append([MISSING if c == "." else int(c) for c in cells])
            except ValueError as exc:
                raise LayoutError(f"pattern cells must be 0, 1, or '.': {line!r}") from exc
        if not rows or len({len(r) for r in rows}) != 1:
            raise LayoutError("pattern rows must be non-empty and equal length")
        return cls(np.array(rows, dtype=np.int8))

    def to_csv_text(self) -> str:
        lines = []
        for row in self.entries:
            lines.append(",".join("." if c == MISSING else str(int(c)) for c in row))
        return "\n".join(lines) + "\n"


def staggered_incomplete_pattern(I: int, Q: int, J: int) -> DesignPattern:
    """Staggered two-site enrollment pattern over a stepped wedge.

    Clusters are listed by sequence (I/Q per sequence, sequence q crossing
    over at period q+1). The first floor(I/2) clusters end one period
    early (observing periods 1..J-1) and the next floor(I/2) start two
    periods late (observing 3..J); with an odd cluster count the last
    cluster stays fully observed.
    """
    if Q < 1 or J < Q + 1:
        raise LayoutError("staggered pattern requires J >= Q + 1")
    if I < 2 or I % Q != 0:
        raise LayoutError(f"cluster count {I} not divisible by sequence count {Q}")
    per_seq = I // Q
    entries = np.zeros((I, J), dtype=np.int8)
    seqs = np.repeat(np.arange(1, Q + 1), per_seq)
    for row, q in enumerate(seqs):
        entries[row, q:] = 1
    half = I // 2
    entries[:half, J - 1] = MISSING
    entries[half:2 * half, :2] = MISSING
    return DesignPattern(entries)


@dataclass(frozen=True)
class TrialLayout:
    """A design family with its shape parameters.

    periods: number of equal-length periods J.
    allocation: proportion of clusters on sequence 1 (CRXO) or the
        treatment arm (PA), as an exact fraction; unused for SW.
    sequences: number of crossover steps Q (SW families).
    pattern: explicit cluster-by-period grid (incomplete SW only). When
        absent on an incomplete layout, the staggered pattern is generated
        per cluster count.
    """

    family: DesignFamily
    periods: int
    allocation: Fraction | None = None
    sequences: int | None = None
    pattern: DesignPattern | None = None

    def __post_init__(self) -> None:
        J = self.periods
        if J < 1:
            raise LayoutError("periods must be positive")
        if self.family is DesignFamily.CRXO:
            if J % 2 != 0:
                raise LayoutError("crossover layouts need an even number of periods")
            self._require_allocation()
        elif self.family is DesignFamily.PA:
            self._require_allocation()
        elif self.family is DesignFamily.SW:
            if self.sequences is None or self.sequences < 1:
                raise LayoutError("stepped wedge layouts need a sequence count")
            if J < self.sequences + 1:
                raise LayoutError("stepped wedge layouts need J >= Q + 1")
        elif self.family is DesignFamily.SW_INCOMPLETE:
            if self.pattern is not None:
                if self.pattern.periods != J:
                    raise LayoutError("pattern period count disagrees with layout")
            else:
                if self.sequences is None or self.sequences < 1:
                    raise LayoutError("incomplete layouts need a pattern or a sequence count")
                if J < self.sequences + 1:
                    raise LayoutError("stepped wedge layouts need J >= Q + 1")

    def _require_allocation(self) -> None:
        pi = self.allocation
        if pi is None or not (0 < pi < 1):
            raise LayoutError("allocation proportion must lie strictly between 0 and 1")

    def with_periods(self, J: int) -> "TrialLayout":
        return TrialLayout(self.family, J, self.allocation, self.sequences, self.pattern)

    def admits_cluster_count(self, I: int) -> bool:
        """Divisibility gate: integral per-arm allocation (CRXO/PA) or
        equal sequence allocation (SW); explicit patterns fix I."""
        if I < 2:
            return False
        if self.family in (DesignFamily.CRXO, DesignFamily.PA):
            pi = self.allocation
            return (pi.numerator * I) % pi.denominator == 0
        if self.family is DesignFamily.SW:
            return I % self.sequences == 0
        if self.pattern is not None:
            return I == self.pattern.clusters
        return I % self.sequences == 0

    def resolve_pattern(self, I: int) -> DesignPattern:
        if self.family is not DesignFamily.SW_INCOMPLETE:
            raise LayoutError("patterns exist only for incomplete layouts")
        if self.pattern is not None:
            if I != self.pattern.clusters:
                raise LayoutError(
                    f"explicit pattern fixes {self.pattern.clusters} clusters, got {I}")
            return self.pattern
        return staggered_incomplete_pattern(I, self.sequences, self.periods)

    def cluster_periods(self, I: int) -> int:
        """Observed cluster-periods, which drive the per-individual cost."""
        if self.family is DesignFamily.SW_INCOMPLETE:
            return self.resolve_pattern(I).observed_cluster_periods()
        return I * self.periods

    def to_dict(self) -> dict:
        out: dict = {"family": self.family.value, "periods": self.periods}
        if self.allocation is not None:
            out["allocation"] = {"num": self.allocation.numerator,
                                 "den": self.allocation.denominator}
        if self.sequences is not None:
            out["sequences"] = self.sequences
        if self.pattern is not None:
            out["pattern"] = self.pattern.to_csv_text()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "TrialLayout":
        family = DesignFamily(data["family"])
        allocation = None
        if data.get("allocation") is not None:
            alloc = data["allocation"]
            allocation = Fraction(int(alloc["num"]), int(alloc["den"]))
        pattern = None
        if data.get("pattern"):
            pattern = DesignPattern.from_csv_text(data["pattern"])
        return cls(family, int(data["periods"]), allocation,
                   data.get("sequences"), pattern)


@dataclass(frozen=True)
class Schedule:
    """Treatment indicators with an observation mask over the full grid."""

    treatment: np.ndarray
    observed: np.ndarray

    @property
    def complete(self) -> bool:
        return bool(self.observed.all())


@dataclass(frozen=True)
class DesignConstants:
    """The three schedule summaries entering the variance: total treated
    cluster-periods U, sum of squared per-cluster treated counts V, and
    sum of squared per-period treated counts W."""

    U: float
    V: float
    W: float


@dataclass(frozen=True)
class BudgetModel:
    """Linear budget: recruiting a cluster costs c1, each individual in
    an observed cluster-period costs c2; search bounds cap I and K."""

    total: float
    cluster_cost: float
    individual_cost: float
    max_clusters: int = 100
    max_cluster_size: int = 200

    def __post_init__(self) -> None:
        if self.total <= 0 or self.cluster_cost <= 0 or self.individual_cost <= 0:
            raise ValueError("budget and unit costs must be positive")
        if self.max_clusters < 2 or self.max_cluster_size < 2:
            raise ValueError("search bounds must allow at least (2, 2)")

    def cost(self, layout: TrialLayout, I: int, K: float) -> float:
        return I * self.cluster_cost + self.individual_cost * K * layout.cluster_periods(I)

    def to_dict(self) -> dict:
        return {"total": self.total, "clusterCost": self.cluster_cost,
                "individualCost": self.individual_cost,
                "maxClusters": self.max_clusters,
                "maxClusterPeriodSize": self.max_cluster_size}

    @classmethod
    def from_dict(cls, data: dict) -> "BudgetModel":
        return cls(float(data["total"]), float(data["clusterCost"]),
                   float(data["individualCost"]),
                   int(data.get("maxClusters", 100)),
                   int(data.get("maxClusterPeriodSize", 200)))


def build_schedule(layout: TrialLayout, I: int) -> Schedule:
    """Treatment indicator matrix (I x J) induced by the layout.

    Incomplete layouts also carry the missingness mask; missing cells hold
    an arbitrary treatment value (zero here) that is never read downstream.
    """
    if not layout.admits_cluster_count(I):
        raise LayoutError(f"cluster count {I} violates the layout's divisibility rule")
    J = layout.periods
    if layout.family is DesignFamily.CRXO:
        n_first = (layout.allocation.numerator * I) // layout.allocation.denominator
        z = np.zeros((I, J), dtype=np.int8)
        z[:n_first, 0::2] = 1
        z[n_first:, 1::2] = 1
        return Schedule(z, np.ones_like(z, dtype=bool))
    if layout.family is DesignFamily.PA:
        n_treat = (layout.allocation.numerator * I) // layout.allocation.denominator
        z = np.zeros((I, J), dtype=np.int8)
        z[:n_treat, :] = 1
        return Schedule(z, np.ones_like(z, dtype=bool))
    if layout.family is DesignFamily.SW:
        per_seq = I // layout.sequences
        z = np.zeros((I, J), dtype=np.int8)
        for q in range(1, layout.sequences + 1):
            rows = slice((q - 1) * per_seq, q * per_seq)
            z[rows, q:] = 1
        return Schedule(z, np.ones_like(z, dtype=bool))
    pattern = layout.resolve_pattern(I)
    return Schedule(pattern.treatment(), pattern.observed())


def design_constants(Z: np.ndarray) -> DesignConstants:
    """Exact U, V, W summaries of a complete binary schedule."""
    z = np.asarray(Z)
    if z.ndim != 2 or not np.isin(z, (0, 1)).all():
        raise ValueError("schedule must be a complete binary matrix")
    per_cluster = z.sum(axis=1, dtype=np.int64)
    per_period = z.sum(axis=0, dtype=np.int64)
    return DesignConstants(U=float(per_cluster.sum()),
                           V=float((per_cluster ** 2).sum()),
                           W=float((per_period ** 2).sum()))


def crxo_constants(I: float, J: float, pi: float) -> DesignConstants:
    """Closed-form constants for the crossover layout."""
    return DesignConstants(U=I * J / 2.0, V=I * J * J / 4.0,
                           W=(I * I * J / 2.0) * (pi * pi + (1.0 - pi) ** 2))


def pa_constants(I: float, J: float, pi: float) -> DesignConstants:
    """Closed-form constants for the parallel-arm layout."""
    return DesignConstants(U=pi * I * J, V=pi * I * J * J, W=pi * pi * I * I * J)


def feasible_designs(layout: TrialLayout, budget: BudgetModel) -> Iterator[tuple[int, int]]:
    """Every admissible (I, K) within budget, I-major then K ascending.

    The deterministic order makes downstream argmax ties resolve to the
    smallest cluster count, then the smallest cluster-period size.
    """
    for I in range(2, budget.max_clusters + 1):
        if not layout.admits_cluster_count(I):
            continue
        base = I * budget.cluster_cost
        if base > budget.total:
            continue
        per_k = budget.individual_cost * layout.cluster_periods(I)
        k_cap = int((budget.total - base) // per_k) if per_k > 0 else budget.max_cluster_size
        for K in range(2, min(budget.max_cluster_size, k_cap) + 1):
            yield I, K
