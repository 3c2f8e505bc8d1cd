"""Turn a validated scenario into library calls and collect the results."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

import logfire
from pydantic import BaseModel, ConfigDict

from src.errors import (
    ExprSyntaxError,
    ExprTypeError,
    ScenarioError,
    UnknownFunctionError,
    UnknownVariableError,
    WeightError,
    WorkbenchError,
)
from src.expansion.fourier import deviation_profile, expand, parseval_residual, weighted_cauchy_schwarz
from src.expansion.partitioned import partitioned_parseval
from src.expr.compiled import evaluate_constant, parse_field
from src.inequalities.cauchy_schwarz import cauchy_schwarz_gap
from src.inequalities.criterion import corollary_check, product_criterion_check
from src.integrate.estimate import Estimate, IntegralEstimate
from src.integrate.field import ConstantField, ScalarField
from src.integrate.integrate import integrate, is_positive_weight
from src.integrate.settings import IntegratorSettings, Method
from src.ortho.family import OrthogonalFamily, gram_schmidt, orthogonality_residual
from src.region.partition import Sign, sign_partition
from src.region.region import Region
from src.region.spec import construct_region
from src.scenario.loader import LoadedScenario, WorkbenchConfig
from src.scenario.models import FamilySpec, FieldSpec, IntegratorOverrides, Task

EXPR_ERRORS = (ExprSyntaxError, UnknownVariableError, UnknownFunctionError, ExprTypeError)


class FamilyReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    weight: str
    members: list[str]
    norms: list[Estimate]
    residual: float
    tolerance: float
    dropped: list[int]
    certified: bool
    independent_residual: Optional[float] = None

    @classmethod
    def of(cls, family: OrthogonalFamily, independent: Optional[float] = None) -> "FamilyReport":
        return cls(
            weight=family.weight.label,
            members=family.labels(),
            norms=[Estimate.of(n) for n in family.norms],
            residual=family.residual,
            tolerance=family.tolerance,
            dropped=list(family.dropped),
            certified=family.certified,
            independent_residual=independent,
        )


@dataclass
class Outcome:
    result: BaseModel
    summary: list[str] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)
    csv_rows: Optional[list[list[str]]] = None


@dataclass
class Workspace:
    """Region, named fields and settings built from one scenario."""

    loaded: LoadedScenario
    region: Region
    fields: dict[str, ScalarField]
    settings: IntegratorSettings
    partition_depth: int

    @property
    def dim(self) -> int:
        return self.loaded.scenario.dimension

    def expression(self, text: str, what: str) -> ScalarField:
        if text in self.fields:
            return self.fields[text]
        try:
            return parse_field(text, self.dim)
        except EXPR_ERRORS as e:
            raise ScenarioError(f"{what} {text!r}: {e}", self.loaded.line_of(text)) from e

    def weight(self, text: Optional[str], role: Optional[str]) -> ScalarField:
        if text is None:
            if role in self.fields:
                return self.fields[role].reciprocal()
            return ConstantField(1.0, self.dim)
        text = text.strip()
        if text.startswith("1/") and text[2:].strip() in self.fields:
            return self.fields[text[2:].strip()].reciprocal()
        if text in self.fields:
            w = self.fields[text]
        else:
            try:
                w = ConstantField(evaluate_constant(text), self.dim)
            except WorkbenchError:
                w = self.expression(text, "weight")
        if not is_positive_weight(w):
            raise WeightError(f"weight {text!r} needs a positivity floor: declare it as a field with 'floor'")
        return w

    def family(self, spec: FamilySpec, role: Optional[str]) -> OrthogonalFamily:
        seeds = [self.expression(s, "seed") for s in spec.seeds]
        weight = self.weight(spec.weight, role)
        if spec.orthogonalize:
            return gram_schmidt(seeds, weight, self.region, self.settings, tolerance=spec.tolerance)
        return OrthogonalFamily.from_members(seeds, weight, self.region, self.settings, tolerance=spec.tolerance)


def _build_field(name: str, spec: FieldSpec, dim: int, loaded: LoadedScenario) -> ScalarField:
    try:
        floor = evaluate_constant(spec.floor) if spec.floor is not None else None
        bounds = tuple(evaluate_constant(b) for b in spec.bounds) if spec.bounds is not None else None
        f = parse_field(spec.expr, dim, bounds=bounds, floor=floor)
    except EXPR_ERRORS as e:
        raise ScenarioError(f"field '{name}': {e}", loaded.line_of(spec.expr)) from e
    if spec.support is not None:
        f = f.restrict(construct_region(spec.support, dim))
    return f


def build_workspace(
    loaded: LoadedScenario,
    config: WorkbenchConfig,
    overrides: Optional[IntegratorOverrides] = None,
) -> Workspace:
    scenario = loaded.scenario
    try:
        region = construct_region(scenario.region, scenario.dimension)
    except EXPR_ERRORS as e:
        raise ScenarioError(f"region: {e}", loaded.line_of("region")) from e
    fields = {name: _build_field(name, spec, scenario.dimension, loaded) for name, spec in scenario.fields.items()}
    settings = scenario.integrator.apply(config.integrator)
    if overrides is not None:
        settings = overrides.apply(settings)
    depth = scenario.partition.max_depth or config.partition.max_depth
    return Workspace(loaded, region, fields, settings, depth)


# ----------------------------
# Tasks
# ----------------------------

class IntegrateResult(BaseModel):
    integral: IntegralEstimate
    volume_bound: float


def _integrate(ws: Workspace) -> Outcome:
    est = integrate(ws.fields["f"], ws.region, ws.settings)
    return Outcome(
        IntegrateResult(integral=est, volume_bound=ws.region.volume_bound()),
        [f"integral of f: {est} ({est.evals} evaluations, {est.method})"],
    )


class OrthogonalizeResult(BaseModel):
    family: FamilyReport


def _certify(ws: Workspace, family: OrthogonalFamily) -> tuple[Optional[float], list[str]]:
    """Residual under an independent finer setting; stochastic runs have no meaningful one."""
    if not family.certified or ws.settings.method is Method.stochastic:
        return None, []
    independent = orthogonality_residual(family, ws.settings.refined())
    if independent > family.tolerance:
        return independent, [f"independent residual {independent:.3g} exceeds tolerance {family.tolerance:.3g}"]
    return independent, []


def _orthogonalize(ws: Workspace) -> Outcome:
    scenario = ws.loaded.scenario
    family = ws.family(scenario.family, "f")
    independent, violations = _certify(ws, family)
    lines = [f"members: {len(family.members)}, dropped seeds: {list(family.dropped) or 'none'}"]
    lines += [f"  phi_{i} = {label}" for i, label in enumerate(family.labels(), start=1)]
    lines.append(f"residual: {family.residual:.3g} (tolerance {family.tolerance:.3g}, certified {family.certified})")
    return Outcome(OrthogonalizeResult(family=FamilyReport.of(family, independent)), lines, violations)


class ExpandResult(BaseModel):
    family: FamilyReport
    integral: Estimate
    coefficients: list[Estimate]
    numerators: list[Estimate]
    denominators: list[Estimate]
    profile: Any
    weighted_cauchy_schwarz: Any


def _expand(ws: Workspace) -> Outcome:
    scenario = ws.loaded.scenario
    f = ws.fields["f"]
    family = ws.family(scenario.family, "f")
    x = expand(f, family, ws.settings)
    profile = deviation_profile(f, x)
    first_member = weighted_cauchy_schwarz(x)
    if scenario.truncation is not None:
        x.check_truncation(scenario.truncation)
        steps = [s for s in profile.steps if s.n <= scenario.truncation]
        profile = profile.model_copy(update={"steps": steps})

    violations = []
    if family.certified:
        for step in profile.steps:
            if not step.identity.holds:
                violations.append(f"deviation and Bessel gap differ at N={step.n}")
            if not step.gap_nonnegative.holds:
                violations.append(f"Bessel gap is negative at N={step.n}")
        if not profile.gap_nonincreasing:
            violations.append("Bessel gap increases with N")
    if not first_member.holds:
        violations.append("weighted Cauchy-Schwarz bound for the first member fails")

    lines = [f"c_{i} = {c}" for i, c in enumerate(x.coefficients, start=1)]
    lines += [f"N={s.n}: deviation {s.deviation}, Bessel gap {s.bessel_gap} ({s.identity.verdict})" for s in profile.steps]
    return Outcome(
        ExpandResult(
            family=FamilyReport.of(family),
            integral=Estimate.of(x.integral),
            coefficients=list(x.coefficients),
            numerators=[Estimate.of(n) for n in x.numerators],
            denominators=[Estimate.of(d) for d in x.denominators],
            profile=profile.model_dump(mode="json"),
            weighted_cauchy_schwarz=first_member.model_dump(mode="json"),
        ),
        lines,
        violations,
    )


class ParsevalTaskResult(BaseModel):
    family: FamilyReport
    coefficients: list[Estimate]
    parseval: Any


def _parseval(ws: Workspace) -> Outcome:
    f = ws.fields["f"]
    family = ws.family(ws.loaded.scenario.family, "f")
    x = expand(f, family, ws.settings)
    res = parseval_residual(f, x)
    violations = ["Parseval residual does not vanish although the expansion exists"] if res.violated else []
    lines = [
        f"Parseval sum: {res.parseval_sum}",
        f"integral of f: {res.integral}",
        f"residual: {res.residual} ({res.vanishes.verdict})",
        f"expansion exists: {res.expansion_exists} (deviation {res.deviation})",
    ]
    return Outcome(
        ParsevalTaskResult(
            family=FamilyReport.of(family),
            coefficients=list(x.coefficients),
            parseval=res.model_dump(mode="json"),
        ),
        lines,
        violations,
    )


class PartitionSummary(BaseModel):
    zeta: float
    max_depth: int
    positive: int
    negative: int
    zero: int
    unresolved: int
    unresolved_volume: float


class PartitionTaskResult(BaseModel):
    partition: PartitionSummary
    parseval: Any


def _partition_parseval(ws: Workspace) -> Outcome:
    scenario = ws.loaded.scenario
    f = ws.fields["f"]
    spec = scenario.partition
    partition = sign_partition(f, ws.region, ws.partition_depth, spec.zeta, seed=ws.settings.seed)
    default_seeds = [ws.expression(s, "cell seed") for s in spec.cell_seeds] if spec.cell_seeds else None
    per_cell = {cid: [ws.expression(s, "cell seed") for s in seeds] for cid, seeds in spec.per_cell.items()}
    result = partitioned_parseval(f, partition, per_cell, ws.settings, default_seeds=default_seeds)
    groups = partition.grouped()
    summary = PartitionSummary(
        zeta=partition.zeta,
        max_depth=partition.max_depth,
        positive=len(groups.get(Sign.positive, [])),
        negative=len(groups.get(Sign.negative, [])),
        zero=len(groups.get(Sign.zero, [])),
        unresolved=len(partition.unresolved),
        unresolved_volume=partition.unresolved_volume,
    )
    violations = ["partitioned total disagrees with the direct integral"] if result.violated else []
    lines = [
        f"cells: {summary.positive} positive, {summary.negative} negative, {summary.zero} zero, "
        f"{summary.unresolved} unresolved (volume {summary.unresolved_volume:.3g})",
        f"partitioned total: {result.total}",
        f"direct integral: {result.direct_integral}",
        f"discrepancy: {result.discrepancy} ({result.agreement.verdict}, bound {result.bound:.3g})",
    ]
    return Outcome(
        PartitionTaskResult(partition=summary, parseval=result.model_dump(mode="json")),
        lines,
        violations,
    )


def _cauchy_schwarz(ws: Workspace) -> Outcome:
    scenario = ws.loaded.scenario
    res = cauchy_schwarz_gap(
        ws.fields["g"],
        ws.fields["h"],
        ws.region,
        ws.settings,
        split=scenario.diagnostics,
        zeta=scenario.partition.zeta,
    )
    lines = [
        f"int g^2 = {res.int_g2}, int h^2 = {res.int_h2}, int gh = {res.int_gh}",
        f"gap: {res.gap} ({res.verdict})",
    ]
    if res.split is not None:
        lines.append(f"measure of the common support: {res.split.measure_d}")
    return Outcome(res, lines, res.violations())


class CriterionTaskResult(BaseModel):
    phi: FamilyReport
    psi: FamilyReport
    report: Any


def _families(ws: Workspace) -> tuple[OrthogonalFamily, OrthogonalFamily, int]:
    scenario = ws.loaded.scenario
    phi = ws.family(scenario.family, "f")
    psi = ws.family(scenario.second_family, "g")
    n = scenario.truncation if scenario.truncation is not None else min(phi.size, psi.size)
    return phi, psi, n


def _product_criterion(ws: Workspace) -> Outcome:
    phi, psi, n = _families(ws)
    report = product_criterion_check(
        ws.fields["f"], ws.fields["g"], phi, psi, n, ws.settings, diagnostics=ws.loaded.scenario.diagnostics
    )
    held = sum(c.both for c in report.grid)
    lines = [
        f"criteria holding: {held} of {len(report.grid)} (n, m) pairs",
        f"int fg = {report.int_fg}, int f * int g = {report.int_f_times_int_g} ({report.conclusion.verdict})",
        f"measure of the region: {report.measure}",
        f"expansions complete: f {report.f_complete}, g {report.g_complete}",
    ]
    return Outcome(
        CriterionTaskResult(phi=FamilyReport.of(phi), psi=FamilyReport.of(psi), report=report.model_dump(mode="json")),
        lines,
        list(report.violations),
        report.csv_rows(),
    )


def _corollary(ws: Workspace) -> Outcome:
    phi, psi, n = _families(ws)
    report = corollary_check(ws.fields["f"], ws.fields["g"], phi, psi, n, ws.settings)
    rows = [["n\\m", *[str(m) for m in range(1, n + 1)]]]
    by_index = {(c.n, c.m): c for c in report.grid}
    for i in range(1, n + 1):
        rows.append(
            [str(i), *["".join("1" if x else "0" for x in (by_index[(i, m)].bound.holds, by_index[(i, m)].certifies_crit_a)) for m in range(1, n + 1)]]
        )
    lines = [f"Cauchy-Schwarz bound holds on {sum(c.bound.holds for c in report.grid)} of {len(report.grid)} pairs"]
    lines += [f"{s.family}_{s.index}: {s.check.lhs} <= {s.check.rhs} ({s.check.verdict})" for s in report.sub_conditions]
    return Outcome(
        CriterionTaskResult(phi=FamilyReport.of(phi), psi=FamilyReport.of(psi), report=report.model_dump(mode="json")),
        lines,
        list(report.violations),
        rows,
    )


def run_task(ws: Workspace) -> Outcome:
    task = ws.loaded.scenario.task
    with logfire.span("scenario {name}: {task}", name=ws.loaded.name, task=task):
        match task:
            case Task.integrate:
                return _integrate(ws)
            case Task.orthogonalize:
                return _orthogonalize(ws)
            case Task.expand:
                return _expand(ws)
            case Task.parseval:
                return _parseval(ws)
            case Task.partition_parseval:
                return _partition_parseval(ws)
            case Task.cauchy_schwarz:
                return _cauchy_schwarz(ws)
            case Task.product_criterion:
                return _product_criterion(ws)
            case Task.corollary:
                return _corollary(ws)
    raise ScenarioError(f"unsupported task {task}")
