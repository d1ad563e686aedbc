"""Command-line front end.

Results go to stdout (JSON by default; CSV/table where meaningful);
diagnostics go to stderr; the exit code is zero iff the computation
completed. Flags override values taken from --config JSON files, and the
flag groups mirror the input taxonomy of the interactive studio
(general / design / budget / ICC).
"""

from __future__ import annotations

import json
import os
import sys
from fractions import Fraction

import click

from . import __version__
from ._core import BACKEND
from .config import RunConfig, build_layout, parse_allocation, parse_icc_values
from .correlation import IccBox, IccVector
from .designs import BudgetModel, DesignFamily, TrialLayout
from .errors import EngineError
from .runner import (
    compute_table,
    diff_table,
    run_lod,
    run_mmd,
    run_power,
    run_sweep,
    run_variance,
    validate_icc_report,
)
from .variance import EconModel


def _emit(data, fmt: str) -> None:
    if fmt == "json":
        click.echo(json.dumps(data, sort_keys=True, indent=2))
    elif fmt == "csv":
        rows = data if isinstance(data, list) else [data]
        flat = [_flatten(r) for r in rows]
        headers: list[str] = []
        for r in flat:
            for k in r:
                if k not in headers:
                    headers.append(k)
        click.echo(",".join(headers))
        for r in flat:
            click.echo(",".join(_cell(r.get(k)) for k in headers))
    else:
        rows = data if isinstance(data, list) else [data]
        for r in rows:
            for k, v in _flatten(r).items():
                click.echo(f"{k:>24}  {_cell(v)}")
            click.echo("")


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}.{k}" if prefix else str(k)
        if isinstance(v, dict):
            out.update(_flatten(v, key))
        else:
            out[key] = v
    return out


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".10g")
    return str(v)


def _fail(exc: EngineError) -> None:
    click.echo(json.dumps({"error": exc.to_dict()}, sort_keys=True), err=True)
    sys.exit(1)


def config_options(require_icc: bool = False):
    def wrap(f):
        opts = [
            click.option("--config", "config_path", type=click.Path(exists=True),
                         help="JSON run configuration; flags override its fields."),
            click.option("--family", type=click.Choice([x.value for x in DesignFamily]),
                         help="Design family."),
            click.option("--periods", "-J", type=int, help="Number of periods."),
            click.option("--allocation", help="Sequence-1/treatment allocation, e.g. 1/2."),
            click.option("--sequences", "-Q", type=int, help="Crossover steps (stepped wedge)."),
            click.option("--pattern", "pattern_path", type=click.Path(exists=True),
                         help="Cluster-by-period CSV pattern (incomplete designs)."),
            click.option("--sigma-e", type=float, help="Effect standard deviation."),
            click.option("--sigma-c", type=float, help="Cost standard deviation."),
            click.option("--ceiling-ratio", type=float, help="Willingness-to-pay per effect unit."),
            click.option("--inmb", type=float, help="Target incremental net monetary benefit."),
            click.option("--alpha", type=float, help="Two-sided type I error rate."),
            click.option("--budget", "budget_total", type=float, help="Total budget."),
            click.option("--cluster-cost", type=float, help="Cost per cluster."),
            click.option("--individual-cost", type=float, help="Cost per individual per period."),
            click.option("--max-clusters", type=int, help="Cluster search bound."),
            click.option("--max-cluster-size", type=int, help="Cluster-period size search bound."),
            click.option("--icc", "icc_text",
                         help="Seven ICCs: rho0E,rho1E,rho0C,rho1C,rho0EC,rho1EC,rho2EC."),
            click.option("--icc-min", "icc_min_text", help="Lower ICC bounds (MMD box)."),
            click.option("--icc-max", "icc_max_text", help="Upper ICC bounds (MMD box)."),
            click.option("--clusters", "-I", "clusters", type=int, help="Cluster count."),
            click.option("--cluster-size", "-K", "cluster_size", type=int,
                         help="Individuals per cluster-period."),
            click.option("--search-J", "search_j", help="Period search range lo..hi (SW)."),
            click.option("--format", "fmt", type=click.Choice(["json", "csv", "table"]),
                         default="json", show_default=True),
        ]
        for opt in reversed(opts):
            f = opt(f)
        return f

    return wrap


def _build_config(config_path, family, periods, allocation, sequences, pattern_path,
                  sigma_e, sigma_c, ceiling_ratio, inmb, alpha, budget_total,
                  cluster_cost, individual_cost, max_clusters, max_cluster_size,
                  icc_text, icc_min_text, icc_max_text, clusters, cluster_size,
                  search_j) -> RunConfig:
    base = None
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            base = RunConfig.from_json(fh.read())

    if base is not None and not (family or periods or allocation or sequences or pattern_path):
        layout = base.layout
    else:
        fam = family or (base.layout.family.value if base else None)
        if fam is None:
            raise EngineError("design family required (--family or --config)")
        layout = build_layout(
            fam,
            periods or (base.layout.periods if base else 0),
            allocation or (str(base.layout.allocation) if base and base.layout.allocation else None),
            sequences or (base.layout.sequences if base else None),
            pattern_path)
        if pattern_path is None and base is not None and base.layout.pattern is not None \
                and DesignFamily(fam) is DesignFamily.SW_INCOMPLETE:
            layout = TrialLayout(layout.family, layout.periods, layout.allocation,
                                 layout.sequences, base.layout.pattern)

    def pick(flag, attr, default=None):
        if flag is not None:
            return flag
        if base is not None:
            return attr
        return default

    econ = EconModel(
        sigma_e=pick(sigma_e, base.econ.sigma_e if base else None),
        sigma_c=pick(sigma_c, base.econ.sigma_c if base else None),
        ceiling_ratio=pick(ceiling_ratio, base.econ.ceiling_ratio if base else None),
        inmb=pick(inmb, base.econ.inmb if base else None),
        alpha=pick(alpha, base.econ.alpha if base else None, 0.05),
    )
    budget = BudgetModel(
        total=pick(budget_total, base.budget.total if base else None),
        cluster_cost=pick(cluster_cost, base.budget.cluster_cost if base else None),
        individual_cost=pick(individual_cost, base.budget.individual_cost if base else None),
        max_clusters=pick(max_clusters, base.budget.max_clusters if base else None, 100),
        max_cluster_size=pick(max_cluster_size, base.budget.max_cluster_size if base else None, 200),
    )
    icc = parse_icc_values(icc_text) if icc_text else (base.icc if base else None)
    box = None
    if icc_min_text or icc_max_text:
        if not (icc_min_text and icc_max_text):
            raise EngineError("provide both --icc-min and --icc-max for a box")
        box = IccBox(parse_icc_values(icc_min_text), parse_icc_values(icc_max_text))
    elif base is not None:
        box = base.icc_box
    sj = None
    if search_j:
        lo, hi = search_j.split("..", 1)
        sj = (int(lo), int(hi))
    elif base is not None:
        sj = base.search_j
    return RunConfig(layout, econ, budget, icc, box, sj,
                     clusters if clusters is not None else (base.clusters if base else None),
                     cluster_size if cluster_size is not None else (base.cluster_size if base else None))


@click.group()
@click.version_option(__version__, message=f"%(prog)s %(version)s (kernels: {BACKEND})")
def main() -> None:
    """Design engine for cost-effectiveness longitudinal cluster randomized trials."""


@main.command()
@config_options()
def variance(fmt, **kwargs):
    """Variance and power of a single (I, K) design."""
    try:
        config = _build_config(**kwargs)
        _emit(run_variance(config), fmt)
    except EngineError as exc:
        _fail(exc)


@main.command()
@click.option("--variance", "variance_value", type=float, required=True)
@click.option("--inmb", type=float, required=True)
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv", "table"]), default="json")
def power(variance_value, inmb, alpha, fmt):
    """Normal-approximation power for a given estimator variance."""
    try:
        _emit(run_power(variance_value, inmb, alpha), fmt)
    except EngineError as exc:
        _fail(exc)


@main.command()
@config_options()
def lod(fmt, **kwargs):
    """Budget-constrained locally optimal design (integer and decimal)."""
    try:
        config = _build_config(**kwargs)
        _emit(run_lod(config), fmt)
    except EngineError as exc:
        _fail(exc)


@main.command()
@config_options()
@click.option("--trace/--no-trace", default=False, help="Include the inner-optimizer trace.")
@click.option("--model-psd", is_flag=True, default=False,
              help="Restrict worst cases to model-realizable ICCs.")
@click.option("--deadline", type=float, default=None, help="Wall-clock budget in seconds.")
def mmd(fmt, trace, model_psd, deadline, **kwargs):
    """MaxiMin design over an ICC box."""
    try:
        config = _build_config(**kwargs)
        _emit(run_mmd(config, want_trace=trace, deadline_seconds=deadline,
                      model_psd=model_psd), fmt)
    except EngineError as exc:
        _fail(exc)


@main.command()
@click.argument("table_id", type=int)
@click.option("--diff", "show_diff", is_flag=True, help="Report cellwise mismatches.")
@click.option("--model-psd", is_flag=True, default=False)
@click.option("--format", "fmt", type=click.Choice(["json", "csv", "table"]), default="csv")
def tables(table_id, show_diff, model_psd, fmt):
    """Reproduce a benchmark table (2, 3, 4, or 5)."""
    try:
        if show_diff:
            data = diff_table(table_id, model_psd=model_psd)
            click.echo(f"{len(data)} mismatching cells", err=True)
        else:
            data = compute_table(table_id, model_psd=model_psd)
        _emit(data, fmt)
    except EngineError as exc:
        _fail(exc)


@main.command()
@config_options()
@click.option("--axis", type=click.Choice(["cac", "lambda-r", "rho1e-max"]), required=True)
@click.option("--grid", required=True, help="Grid as lo:hi:count or comma-separated values.")
@click.option("--model-psd", is_flag=True, default=False)
def sweep(fmt, axis, grid, model_psd, **kwargs):
    """Parameter sweep emitting one optimization per grid value."""
    try:
        config = _build_config(**kwargs)
        values = _parse_grid(grid)
        if fmt == "json":
            _emit(run_sweep(config, axis, values, model_psd=model_psd), fmt)
        else:
            _emit(run_sweep(config, axis, values, model_psd=model_psd), "csv")
    except EngineError as exc:
        _fail(exc)


def _parse_grid(text: str) -> list[float]:
    if ":" in text:
        lo, hi, n = text.split(":", 2)
        lo, hi, n = float(lo), float(hi), int(n)
        if n < 1:
            raise EngineError("grid count must be positive")
        if n == 1:
            return [lo]
        step = (hi - lo) / (n - 1)
        return [lo + i * step for i in range(n)]
    return [float(x) for x in text.split(",") if x.strip()]


@main.command("validate-icc")
@click.option("--icc", "icc_text", help="Seven comma-separated ICCs.")
@click.option("--icc-min", "icc_min_text")
@click.option("--icc-max", "icc_max_text")
@click.option("--periods", "-J", type=int, required=True)
@click.option("--cluster-size", "-K", type=int, required=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv", "table"]), default="json")
def validate_icc(icc_text, icc_min_text, icc_max_text, periods, cluster_size, fmt):
    """Check ordering constraints and positive definiteness."""
    try:
        icc = parse_icc_values(icc_text) if icc_text else None
        box = None
        if icc_min_text and icc_max_text:
            box = IccBox(parse_icc_values(icc_min_text), parse_icc_values(icc_max_text))
        report = validate_icc_report(icc, box, periods, cluster_size)
        _emit(report, fmt)
        if not report["ok"]:
            sys.exit(2)
    except EngineError as exc:
        _fail(exc)


@main.command()
@click.option("--bind", default=None, help="host:port (default 127.0.0.1:8750).")
def serve(bind):
    """Run the JSON-over-HTTP service."""
    import uvicorn

    from .api import create_app

    address = bind or os.environ.get("CE_LCRT_BIND", "127.0.0.1:8750")
    host, _, port = address.partition(":")
    uvicorn.run(create_app(), host=host or "127.0.0.1", port=int(port or 8750),
                log_level="warning")


if __name__ == "__main__":
    main()
