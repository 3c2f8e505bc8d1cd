"""Report files: JSON for machines, Markdown for people, CSV for the criterion grid.

Reports carry no timestamps or durations, so the same scenario and seed
always produce byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel

from src.integrate.settings import IntegratorSettings
from src.scenario.models import OutputSpec, Task
from src.scenario.runner import Outcome, Workspace


class RunReport(BaseModel):
    scenario: str
    task: Task
    dimension: int
    region: str
    fields: dict[str, str]
    settings: IntegratorSettings
    result: dict[str, Any]
    violations: list[str]
    status: str


class ReportPaths(BaseModel):
    report: Path
    summary: Path
    csv: Optional[Path] = None

    @classmethod
    def resolve(cls, output: OutputSpec, out_dir: Optional[str], csv_path: Optional[str], stem: str) -> "ReportPaths":
        """Explicit scenario paths win, otherwise files named after the scenario in `out_dir`."""
        base = Path(out_dir or ".")
        report = Path(output.report) if output.report else base / f"{stem}.json"
        summary = Path(output.summary) if output.summary else report.with_suffix(".md")
        chosen_csv = csv_path or output.csv
        return cls(report=report, summary=summary, csv=Path(chosen_csv) if chosen_csv else None)


def build_report(ws: Workspace, outcome: Outcome) -> RunReport:
    scenario = ws.loaded.scenario
    return RunReport(
        scenario=ws.loaded.name,
        task=scenario.task,
        dimension=scenario.dimension,
        region=ws.region.describe(),
        fields={name: f.label for name, f in ws.fields.items()},
        settings=ws.settings,
        result=outcome.result.model_dump(mode="json"),
        violations=outcome.violations,
        status="property violation" if outcome.violations else "ok",
    )


def render_json(report: RunReport) -> str:
    return json.dumps(report.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"


def render_summary(report: RunReport, outcome: Outcome) -> str:
    s = report.settings
    lines = [
        f"# {report.task}: {report.scenario}",
        "",
        f"- region: {report.region}",
        f"- dimension: {report.dimension}",
        f"- integrator: {s.method}, rel_tol {s.rel_tol:g}, abs_tol {s.abs_tol:g}, seed {s.seed}",
    ]
    lines += [f"- {name} = `{label}`" for name, label in sorted(report.fields.items())]
    lines += ["", "## Results", ""]
    lines += [f"- {line}" for line in outcome.summary]
    lines += ["", f"## Status: {report.status}", ""]
    lines += [f"- {v}" for v in report.violations]
    return "\n".join(lines).rstrip() + "\n"


def render_csv(rows: list[list[str]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def write_reports(report: RunReport, outcome: Outcome, paths: ReportPaths) -> list[Path]:
    written = []
    for path, text in (
        (paths.report, render_json(report)),
        (paths.summary, render_summary(report, outcome)),
    ):
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        written.append(path)
    if paths.csv is not None and outcome.csv_rows is not None:
        paths.csv.parent.mkdir(parents=True, exist_ok=True)
        paths.csv.write_text(render_csv(outcome.csv_rows))
        written.append(paths.csv)
    return written
