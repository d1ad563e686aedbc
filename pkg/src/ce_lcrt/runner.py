"""Engine facade: one implementation behind the CLI and the HTTP service.

Every public command maps to one function here returning a plain dict
(the "result" payload), so the two front ends are byte-identical on the
same configuration.
"""

from __future__ import annotations

import csv
import io
from dataclasses import replace
from importlib import resources

import numpy as np

from .config import RunConfig
from .correlation import (
    IccBox,
    IccVector,
    eigen_spectrum,
    is_positive_definite,
    validate_ordering,
)
from .designs import BudgetModel, DesignFamily, TrialLayout
from .errors import IccConstraintError, InvalidInputError, NotPositiveDefiniteError
from .maximin import MaximinSolution, mmd_search
from .optimal import (
    DesignSolution,
    decimal_lod,
    lod_search,
    lod_search_over_J,
)
from .variance import EconModel, power, variance_crxo, variance_general, variance_gls, variance_pa

CONSTRAINT_IDS = ("(i)", "(ii)", "(iii)", "(iv)", "(v)")


def validate_icc_report(icc: IccVector | None, box: IccBox | None,
                        J: int, K: int) -> dict:
    """Constraint-by-constraint report plus the eigenvalue gate."""

    def single(rho: IccVector) -> dict:
        violations = validate_ordering(rho)
        by_id = {cid: True for cid in CONSTRAINT_IDS}
        range_ok = True
        for v in violations:
            if v.startswith("range"):
                range_ok = False
            else:
                by_id[v.split(":")[0]] = False
        entry: dict = {
            "rangeOk": range_ok,
            "constraints": [{"id": cid, "ok": by_id[cid]} for cid in CONSTRAINT_IDS],
            "violations": violations,
        }
        if range_ok:
            spectrum = eigen_spectrum(rho, J, K)
            entry["eigenvalues"] = spectrum.to_dict()
            entry["minEigenvalue"] = spectrum.min_eigenvalue()
            entry["positiveDefinite"] = is_positive_definite(rho, J, K)
            entry["ok"] = not violations and entry["positiveDefinite"]
        else:
            entry["ok"] = False
        return entry

    if icc is not None:
        report = single(icc)
        report["kind"] = "point"
        return report
    if box is None:
        raise InvalidInputError("provide an ICC vector or an ICC box")
    lo, hi = single(box.rho_min), single(box.rho_max)
    return {"kind": "box", "min": lo, "max": hi, "ok": lo["ok"] and hi["ok"]}


def run_variance(config: RunConfig) -> dict:
    rho = config.require_icc()
    layout = config.layout
    if config.clusters is None or config.cluster_size is None:
        raise InvalidInputError("variance evaluation needs I and K", field="I")
    I, K = config.clusters, config.cluster_size
    if layout.family is DesignFamily.SW_INCOMPLETE:
        report = variance_gls(layout, I, K, rho, config.econ)
    elif layout.family is DesignFamily.CRXO:
        report = variance_crxo(layout.periods, I, K, float(layout.allocation), rho, config.econ)
    elif layout.family is DesignFamily.PA:
        report = variance_pa(layout.periods, I, K, float(layout.allocation), rho, config.econ)
    else:
        report = variance_general(layout, I, K, rho, config.econ)
    out = report.to_dict()
    out["design"] = {"I": I, "K": K, "J": layout.periods}
    return out


def run_power(variance: float, inmb: float, alpha: float) -> dict:
    return {"power": power(variance, inmb, alpha),
            "variance": variance, "inmb": inmb, "alpha": alpha}


def run_lod(config: RunConfig) -> dict:
    rho = config.require_icc()
    layout, econ, budget = config.layout, config.econ, config.budget
    if config.search_j is not None:
        lo, hi = config.search_j
        if layout.family not in (DesignFamily.SW, DesignFamily.SW_INCOMPLETE):
            raise InvalidInputError("period search applies to stepped-wedge layouts",
                                    field="searchJ")
        integer = lod_search_over_J(layout, range(lo, hi + 1), rho, econ, budget)
        layout = layout.with_periods(integer.J)
    else:
        integer = lod_search(layout, rho, econ, budget)
    out = {"integer": integer.to_dict()}
    try:
        out["decimal"] = decimal_lod(layout, rho, econ, budget).to_dict()
    except Exception as exc:  # no interior optimum is a reportable outcome
        out["decimal"] = None
        out["decimalNote"] = str(exc)
    return out


def run_mmd(config: RunConfig, want_trace: bool = False,
            deadline_seconds: float | None = None,
            model_psd: bool = False) -> dict:
    box = config.require_box()
    extra = [config.icc] if config.icc is not None else []
    if config.search_j is not None:
        lo, hi = config.search_j
        best: MaximinSolution | None = None
        for J in range(lo, hi + 1):
            layout = config.layout.with_periods(J)
            sol = mmd_search(layout, box, config.econ, config.budget,
                             extra_seeds=extra, deadline_seconds=deadline_seconds,
                             want_trace=want_trace, model_psd=model_psd)
            if best is None or sol.worst_re > best.worst_re:
                best = sol
        solution = best
    else:
        solution = mmd_search(config.layout, box, config.econ, config.budget,
                              extra_seeds=extra, deadline_seconds=deadline_seconds,
                              want_trace=want_trace, model_psd=model_psd)
    return solution.to_dict(include_trace=want_trace)


def run_sweep(config: RunConfig, axis: str, grid: list[float],
              model_psd: bool = False) -> list[dict]:
    """Parameter sweep: one optimization per grid value."""
    if not grid:
        raise InvalidInputError("sweep grid is empty", field="grid")
    rows = []
    if axis == "cac":
        base = config.require_icc()
        for value in grid:
            rho = IccVector(base.rho0E, value * base.rho0E,
                            base.rho0C, value * base.rho0C,
                            base.rho0EC, value * base.rho0EC, base.rho2EC)
            rows.append(_lod_row(config, rho, value))
    elif axis == "lambda-r":
        base = config.require_icc()
        for value in grid:
            if value <= 0:
                raise InvalidInputError("lambda-r grid values must be positive")
            sigma_c = config.econ.ceiling_ratio * config.econ.sigma_e / value
            econ = replace(config.econ, sigma_c=sigma_c)
            rows.append(_lod_row(replace(config, econ=econ), base, value))
    elif axis == "rho1e-max":
        box = config.require_box()
        ratio = (box.rho_max.rho1C / box.rho_max.rho1E) if box.rho_max.rho1E > 0 else 1.0
        for value in grid:
            hi = replace(box.rho_max, rho1E=value, rho1C=ratio * value)
            cfg = replace(config, icc_box=IccBox(box.rho_min, hi))
            sol = mmd_search(cfg.layout, cfg.icc_box, cfg.econ, cfg.budget,
                             model_psd=model_psd)
            rows.append({"axis": value, "I": sol.I, "K": sol.K, "re": sol.worst_re})
    else:
        raise InvalidInputError(f"unknown sweep axis {axis!r}", field="axis")
    return rows


def _lod_row(config: RunConfig, rho: IccVector, axis_value: float) -> dict:
    sol = lod_search(config.layout, rho, config.econ, config.budget)
    row = {"axis": axis_value, "I": sol.I, "K": sol.K, "power": sol.power}
    try:
        dec = decimal_lod(config.layout, rho, config.econ, config.budget)
        row.update({"decimalI": dec.I, "decimalK": dec.K, "decimalPower": dec.power})
    except Exception:
        row.update({"decimalI": None, "decimalK": None, "decimalPower": None})
    return row


# -- Benchmark table reproduction ---------------------------------------------

TABLE_ECON = EconModel(sigma_e=1.0, sigma_c=3000.0, ceiling_ratio=20000.0, inmb=4000.0)
TABLE_BUDGET = BudgetModel(300000.0, 3000.0, 250.0, 100, 200)


def golden_rows(table_id: int) -> list[dict]:
    name = f"table{table_id}.csv"
    try:
        text = resources.files("ce_lcrt.data").joinpath(name).read_text()
    except FileNotFoundError as exc:
        raise InvalidInputError(f"unknown table id {table_id}") from exc
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def _table3_box(r0lo: float, r0hi: float, r1lo: float, r1hi: float) -> IccBox:
    return IccBox(
        IccVector(r0lo, r1lo, 0.8 * r0lo, 0.8 * r1lo, 0.01, 0.005, 0.5),
        IccVector(r0hi, r1hi, 0.8 * r0hi, 0.8 * r1hi, 0.02, 0.010, 0.8))


def _mmd_cell(args: tuple) -> tuple[int, int, float]:
    layout, box, model_psd = args
    sol = mmd_search(layout, box, TABLE_ECON, TABLE_BUDGET, model_psd=model_psd)
    return sol.I, sol.K, sol.worst_re


def _map_cells(tasks: list[tuple]) -> list[tuple[int, int, float]]:
    """Evaluate MaxiMin cells, sharding across CE_LCRT_THREADS workers;
    results are order-preserving, so the output is scheduling-independent."""
    from .maximin import threads_cap

    workers = min(threads_cap(), len(tasks))
    if workers <= 1:
        return [_mmd_cell(task) for task in tasks]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_mmd_cell, tasks))


def compute_table(table_id: int, model_psd: bool = False) -> list[dict]:
    """Recompute a benchmark table with the engine; one dict per data row."""
    from fractions import Fraction

    golden = golden_rows(table_id)
    rows = []
    if table_id == 2:
        for g in golden:
            rho = IccVector(float(g["rho0E"]), float(g["rho1E"]), float(g["rho0C"]),
                            float(g["rho1C"]), float(g["rho0EC"]), float(g["rho1EC"]),
                            float(g["rho2EC"]))
            layout = TrialLayout(DesignFamily(g["design"]), int(g["J"]), Fraction(1, 2))
            sol = lod_search(layout, rho, TABLE_ECON, TABLE_BUDGET)
            rows.append({**g, "I": sol.I, "K": sol.K, "power": round(sol.power, 3)})
    elif table_id == 4:
        for g in golden:
            rho0, rho1 = float(g["rho0E"]), float(g["rho1E"])
            rho = IccVector(rho0, rho1, rho0, rho1, 0.4 * rho0, 0.4 * rho1, 0.5)
            Q = int(g["Q"])
            layout = TrialLayout(DesignFamily.SW, Q + 1, sequences=Q)
            if g["scenario"] == "searched":
                sol = lod_search_over_J(layout, range(Q + 1, 10), rho,
                                        TABLE_ECON, TABLE_BUDGET)
            else:
                sol = lod_search(layout.with_periods(9), rho, TABLE_ECON, TABLE_BUDGET)
            rows.append({**g, "J": sol.J, "I": sol.I, "K": sol.K,
                         "power": round(sol.power, 3)})
    elif table_id in (3, 5):
        tasks = []
        for g in golden:
            box = _table3_box(float(g["rho0E_min"]), float(g["rho0E_max"]),
                              float(g["rho1E_min"]), float(g["rho1E_max"]))
            if table_id == 3:
                layout = TrialLayout(DesignFamily(g["design"]), int(g["J"]), Fraction(1, 2))
            else:
                layout = TrialLayout(DesignFamily.SW, int(g["J"]), sequences=int(g["Q"]))
            tasks.append((layout, box, model_psd))
        for g, (I, K, re) in zip(golden, _map_cells(tasks)):
            rows.append({**g, "I": I, "K": K, "re": round(re, 3)})
    else:
        raise InvalidInputError(f"unknown table id {table_id}")
    return rows


def diff_table(table_id: int, power_tol: float = 0.002, re_tol: float = 0.005,
               model_psd: bool = False) -> list[dict]:
    """Cellwise mismatches of the recomputed table against the golden file."""
    golden = golden_rows(table_id)
    computed = compute_table(table_id, model_psd=model_psd)
    value_col = "re" if table_id in (3, 5) else "power"
    tol = re_tol if table_id in (3, 5) else power_tol
    mismatches = []
    for g, c in zip(golden, computed):
        issues = []
        if int(g["I"]) != int(c["I"]) or int(g["K"]) != int(c["K"]):
            issues.append("design")
        if abs(float(g[value_col]) - float(c[value_col])) > tol:
            issues.append(value_col)
        if issues:
            mismatches.append({"row": g, "computed": c, "issues": issues})
    return mismatches
