#!/usr/bin/env python3
from __future__ import annotations

from contextlib import contextmanager
from pathlib import Path
from typing import NoReturn, Optional

import click
import logfire
import typer
from dotenv import load_dotenv
from pydantic import BaseModel, ValidationError
from typer.core import TyperGroup

from src.config import LOG_LEVEL, SETTINGS_PATH
from src.errors import ScenarioError, WorkbenchError
from src.integrate.settings import Method
from src.scenario.loader import LoadedScenario, load_all, load_scenario
from src.scenario.models import IntegratorOverrides, Scenario, Task
from src.scenario.report import ReportPaths, build_report, write_reports
from src.scenario.runner import build_workspace, run_task

# ----------------------------
# CLI
# ----------------------------

# click >= 8.2 signals a bare invocation with a UsageError subclass; that one keeps its code.
_HELP_REQUEST = getattr(click.exceptions, "NoArgsIsHelpError", ())


@contextmanager
def _usage_errors_are_input_errors():
    try:
        yield
    except click.UsageError as e:
        if not isinstance(e, _HELP_REQUEST):
            e.exit_code = 1
        raise


class WorkbenchGroup(TyperGroup):
    """Unknown options, bad choices and missing arguments exit 1 like every other input error."""

    def make_context(self, *args, **kwargs):
        with _usage_errors_are_input_errors():
            return super().make_context(*args, **kwargs)

    def invoke(self, ctx):
        with _usage_errors_are_input_errors():
            return super().invoke(ctx)


app = typer.Typer(cls=WorkbenchGroup, no_args_is_help=True, add_completion=False)

EXIT_VIOLATION = 2


# ----------------------------
# Models
# ----------------------------

class GlobalOptions(BaseModel):
    overrides: IntegratorOverrides = IntegratorOverrides()
    profile: Optional[str] = None
    config_path: str = SETTINGS_PATH
    out: Optional[str] = None
    csv: Optional[str] = None


# ----------------------------
# Utilities
# ----------------------------

def die(msg: str) -> NoReturn:
    typer.secho(msg, fg=typer.colors.RED, err=True)
    raise SystemExit(1)


def configure_logging() -> None:
    logfire.configure(
        send_to_logfire="if-token-present",
        service_name="workbench",
        console=logfire.ConsoleOptions(min_log_level=LOG_LEVEL),
    )


def _split_pair(text: str, sep: str, what: str) -> tuple[str, str]:
    left, found, right = text.partition(sep)
    if not found or not left.strip() or not right.strip():
        die(f"{what} must look like NAME{sep}VALUE, got {text!r}")
    return left.strip(), right.strip()


def _region_spec(dim: int, boxes: list[str], ball: Optional[str], predicate: Optional[str]) -> dict:
    lo, hi = [], []
    for b in boxes:
        a, c = _split_pair(b, ":", "--box")
        lo.append(a)
        hi.append(c)
    if boxes and len(boxes) != dim:
        die(f"--box was given {len(boxes)} times for dimension {dim}")
    if predicate:
        if not boxes:
            die("--region-pred needs --box bounds for every axis")
        return {"predicate": {"expr": predicate, "lo": lo, "hi": hi}}
    if ball:
        center, radius = _split_pair(ball, ":", "--ball")
        return {"ball": {"center": [c.strip() for c in center.split(",")], "radius": radius}}
    if not boxes:
        die("give the region with --box (once per axis), --ball or --region-pred")
    return {"box": {"lo": lo, "hi": hi}}


def _fields_spec(fields: list[str], floors: list[str], bounds: list[str]) -> dict:
    out: dict[str, dict] = {}
    for item in fields:
        name, expr = _split_pair(item, "=", "--field")
        out[name] = {"expr": expr}
    for item in floors:
        name, value = _split_pair(item, "=", "--floor")
        if name not in out:
            die(f"--floor names unknown field '{name}'")
        out[name]["floor"] = value
    for item in bounds:
        name, value = _split_pair(item, "=", "--bounds")
        if name not in out:
            die(f"--bounds names unknown field '{name}'")
        out[name]["bounds"] = list(_split_pair(value, ":", "--bounds"))
    return out


def _family_spec(seeds: list[str], weight: Optional[str], raw: bool) -> Optional[dict]:
    if not seeds:
        return None
    spec: dict = {"seeds": seeds, "orthogonalize": not raw}
    if weight:
        spec["weight"] = weight
    return spec


# ----------------------------
# Running
# ----------------------------

def _execute(ctx: typer.Context, loaded: LoadedScenario) -> None:
    opts: GlobalOptions = ctx.obj or GlobalOptions()
    try:
        config = load_all(opts.config_path, opts.profile or loaded.scenario.profile)
        ws = build_workspace(loaded, config, opts.overrides)
        outcome = run_task(ws)
        report = build_report(ws, outcome)
        out_dir = opts.out or config.reports_dir
        paths = ReportPaths.resolve(loaded.scenario.output, out_dir, opts.csv, loaded.name)
        written = write_reports(report, outcome, paths)
    except WorkbenchError as e:
        die(f"error: {e}")

    for line in outcome.summary:
        typer.echo(line)
    for path in written:
        typer.echo(f"wrote {path}")
    if outcome.violations:
        for v in outcome.violations:
            typer.secho(f"property violation: {v}", fg=typer.colors.YELLOW, err=True)
        raise typer.Exit(EXIT_VIOLATION)


def _from_flags(ctx: typer.Context, task: Task, raw: dict) -> None:
    try:
        scenario = Scenario.model_validate({k: v for k, v in raw.items() if v is not None})
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"]) or "arguments"
        die(f"error: {where}: {first['msg']}")
    _execute(ctx, LoadedScenario(scenario, "", task.value))


# ----------------------------
# Commands
# ----------------------------

@app.callback()
def main(
        ctx: typer.Context,
        rel_tol: Optional[float] = typer.Option(None, "--rel-tol", help="Relative tolerance"),
        abs_tol: Optional[float] = typer.Option(None, "--abs-tol", help="Absolute tolerance"),
        method: Optional[Method] = typer.Option(None, "--method", help="Integration method"),
        max_depth: Optional[int] = typer.Option(None, "--max-depth", help="Dyadic refinement depth"),
        samples: Optional[int] = typer.Option(None, "--samples", help="Sample count for the stochastic method"),
        seed: Optional[int] = typer.Option(None, "--seed", help="Random seed"),
        strict: Optional[bool] = typer.Option(None, "--strict/--no-strict", help="Fail when a tolerance is not met"),
        out: Optional[str] = typer.Option(None, "--out", help="Directory for report files"),
        csv: Optional[str] = typer.Option(None, "--csv", help="Write the criterion grid to this CSV file"),
        profile: Optional[str] = typer.Option(None, help="Profile name from workbench.yaml"),
        config_path: str = typer.Option(SETTINGS_PATH, "--config", help="Path to settings file"),
        env_file: str = typer.Option(".env", help="Path to .env file"),
):
    """Numerical checks of weighted Fourier expansions and integral inequalities."""
    load_dotenv(env_file, override=False)
    configure_logging()
    try:
        overrides = IntegratorOverrides(
            method=method,
            rel_tol=rel_tol,
            abs_tol=abs_tol,
            max_depth=max_depth,
            sample_count=samples,
            seed=seed,
            strict=strict,
        )
    except ValidationError as e:
        die(f"error: invalid integrator option: {e.errors()[0]['msg']}")
    ctx.obj = GlobalOptions(overrides=overrides, profile=profile, config_path=config_path, out=out, csv=csv)


@app.command()
def run(ctx: typer.Context, path: Path = typer.Argument(..., help="Scenario YAML file")):
    """Run a scenario file."""
    try:
        loaded = load_scenario(path)
    except ScenarioError as e:
        die(f"error: {path}: {e}")
    _execute(ctx, loaded)


# Shared flag declarations for the task commands.
DIM = typer.Option(1, "--dim", help="Dimension of the region")
BOX = typer.Option(None, "--box", help="Axis bounds LO:HI, once per axis")
BALL = typer.Option(None, "--ball", help="Ball as C1,...,Cn:RADIUS")
PRED = typer.Option(None, "--region-pred", help="Boolean membership expression inside the --box bounds")
FIELD = typer.Option(None, "--field", help="Named field NAME=EXPR")
FLOOR = typer.Option(None, "--floor", help="Positivity floor NAME=VALUE")
BOUNDS = typer.Option(None, "--bounds", help="Declared range NAME=LO:HI")
FAMILY = typer.Option(None, "--family", help="Family seed (repeatable)")
SECOND = typer.Option(None, "--second-family", help="Second family seed (repeatable)")
WEIGHT = typer.Option(None, "--weight", help="Family weight: 1/NAME, a field name or a constant")
SECOND_WEIGHT = typer.Option(None, "--second-weight", help="Second family weight")
RAW = typer.Option(False, "--no-orthogonalize", help="Use the seeds as given")
TRUNC = typer.Option(None, "-N", "--truncation", help="Truncation N")
DIAG = typer.Option(False, "--diagnostics", help="Compute proof-chain or support-split diagnostics")


def _base(dim, box, ball, pred, field, floor, bounds, task: Task) -> dict:
    return {
        "dimension": dim,
        "task": task.value,
        "region": _region_spec(dim, box or [], ball, pred),
        "fields": _fields_spec(field or [], floor or [], bounds or []),
    }


@app.command("integrate")
def integrate_cmd(ctx: typer.Context, dim: int = DIM, box: Optional[list[str]] = BOX, ball: Optional[str] = BALL,
                  region_pred: Optional[str] = PRED, field: Optional[list[str]] = FIELD,
                  floor: Optional[list[str]] = FLOOR, bounds: Optional[list[str]] = BOUNDS):
    """Integrate field f over the region."""
    _from_flags(ctx, Task.integrate, _base(dim, box, ball, region_pred, field, floor, bounds, Task.integrate))


@app.command()
def orthogonalize(ctx: typer.Context, dim: int = DIM, box: Optional[list[str]] = BOX, ball: Optional[str] = BALL,
                  region_pred: Optional[str] = PRED, field: Optional[list[str]] = FIELD,
                  floor: Optional[list[str]] = FLOOR, bounds: Optional[list[str]] = BOUNDS,
                  family: Optional[list[str]] = FAMILY, weight: Optional[str] = WEIGHT, raw: bool = RAW):
    """Gram-Schmidt the family seeds under the weight (default 1/f, or 1 without f)."""
    spec = _base(dim, box, ball, region_pred, field, floor, bounds, Task.orthogonalize)
    spec["family"] = _family_spec(family or [], weight, raw)
    _from_flags(ctx, Task.orthogonalize, spec)


@app.command()
def expand(ctx: typer.Context, dim: int = DIM, box: Optional[list[str]] = BOX, ball: Optional[str] = BALL,
           region_pred: Optional[str] = PRED, field: Optional[list[str]] = FIELD,
           floor: Optional[list[str]] = FLOOR, bounds: Optional[list[str]] = BOUNDS,
           family: Optional[list[str]] = FAMILY, raw: bool = RAW, truncation: Optional[int] = TRUNC):
    """Fourier coefficients of f, with the deviation and Bessel gap for every N."""
    spec = _base(dim, box, ball, region_pred, field, floor, bounds, Task.expand)
    spec["family"] = _family_spec(family or [], None, raw)
    spec["truncation"] = truncation
    _from_flags(ctx, Task.expand, spec)


@app.command()
def parseval(ctx: typer.Context, dim: int = DIM, box: Optional[list[str]] = BOX, ball: Optional[str] = BALL,
             region_pred: Optional[str] = PRED, field: Optional[list[str]] = FIELD,
             floor: Optional[list[str]] = FLOOR, bounds: Optional[list[str]] = BOUNDS,
             family: Optional[list[str]] = FAMILY, raw: bool = RAW):
    """Parseval residual of f over the whole family."""
    spec = _base(dim, box, ball, region_pred, field, floor, bounds, Task.parseval)
    spec["family"] = _family_spec(family or [], None, raw)
    _from_flags(ctx, Task.parseval, spec)


@app.command("partition-parseval")
def partition_parseval(ctx: typer.Context, dim: int = DIM, box: Optional[list[str]] = BOX,
                       ball: Optional[str] = BALL, region_pred: Optional[str] = PRED,
                       field: Optional[list[str]] = FIELD, floor: Optional[list[str]] = FLOOR,
                       bounds: Optional[list[str]] = BOUNDS,
                       partition_depth: Optional[int] = typer.Option(None, "--partition-depth", help="Sign partition depth"),
                       zeta: Optional[float] = typer.Option(None, "--zeta", help="Zero threshold"),
                       cell_seed: Optional[list[str]] = typer.Option(None, "--cell-seed", help="Seed used on every signed cell")):
    """Integrate f as a sum of per-cell Parseval sums over its sign partition."""
    spec = _base(dim, box, ball, region_pred, field, floor, bounds, Task.partition_parseval)
    spec["partition"] = {"max_depth": partition_depth, "zeta": zeta, "cell_seeds": cell_seed or None}
    _from_flags(ctx, Task.partition_parseval, spec)


@app.command("cauchy-schwarz")
def cauchy_schwarz(ctx: typer.Context, dim: int = DIM, box: Optional[list[str]] = BOX, ball: Optional[str] = BALL,
                   region_pred: Optional[str] = PRED, field: Optional[list[str]] = FIELD,
                   bounds: Optional[list[str]] = BOUNDS, diagnostics: bool = DIAG,
                   zeta: Optional[float] = typer.Option(None, "--zeta", help="Zero threshold for the support split")):
    """Cauchy-Schwarz gap of fields g and h."""
    spec = _base(dim, box, ball, region_pred, field, None, bounds, Task.cauchy_schwarz)
    spec["diagnostics"] = diagnostics
    spec["partition"] = {"zeta": zeta}
    _from_flags(ctx, Task.cauchy_schwarz, spec)


def _criterion(ctx, task, dim, box, ball, region_pred, field, floor, bounds, family, weight, second_family,
               second_weight, raw, truncation, diagnostics) -> None:
    spec = _base(dim, box, ball, region_pred, field, floor, bounds, task)
    spec["family"] = _family_spec(family or [], weight, raw)
    spec["second_family"] = _family_spec(second_family or [], second_weight, raw)
    spec["truncation"] = truncation
    spec["diagnostics"] = diagnostics
    _from_flags(ctx, task, spec)


@app.command("product-criterion")
def product_criterion(ctx: typer.Context, dim: int = DIM, box: Optional[list[str]] = BOX,
                      ball: Optional[str] = BALL, region_pred: Optional[str] = PRED,
                      field: Optional[list[str]] = FIELD, floor: Optional[list[str]] = FLOOR,
                      bounds: Optional[list[str]] = BOUNDS, family: Optional[list[str]] = FAMILY,
                      weight: Optional[str] = WEIGHT, second_family: Optional[list[str]] = SECOND,
                      second_weight: Optional[str] = SECOND_WEIGHT, raw: bool = RAW,
                      truncation: Optional[int] = TRUNC, diagnostics: bool = DIAG):
    """Criterion grid for the product inequality of f and g."""
    _criterion(ctx, Task.product_criterion, dim, box, ball, region_pred, field, floor, bounds, family, weight,
               second_family, second_weight, raw, truncation, diagnostics)


@app.command()
def corollary(ctx: typer.Context, dim: int = DIM, box: Optional[list[str]] = BOX, ball: Optional[str] = BALL,
              region_pred: Optional[str] = PRED, field: Optional[list[str]] = FIELD,
              floor: Optional[list[str]] = FLOOR, bounds: Optional[list[str]] = BOUNDS,
              family: Optional[list[str]] = FAMILY, weight: Optional[str] = WEIGHT,
              second_family: Optional[list[str]] = SECOND, second_weight: Optional[str] = SECOND_WEIGHT,
              raw: bool = RAW, truncation: Optional[int] = TRUNC):
    """Cauchy-Schwarz bound of the criterion integrand and its per-member conditions."""
    _criterion(ctx, Task.corollary, dim, box, ball, region_pred, field, floor, bounds, family, weight,
               second_family, second_weight, raw, truncation, False)


# ----------------------------
# Entry
# ----------------------------

if __name__ == "__main__":
    app()
