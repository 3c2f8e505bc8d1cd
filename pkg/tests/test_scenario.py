import textwrap

import pytest

from src.config import SETTINGS_PATH
from src.errors import ScenarioError, WeightError
from src.integrate.field import ReciprocalField
from src.integrate.settings import Method
from src.scenario.loader import load_all, parse_scenario
from src.scenario.models import IntegratorOverrides, Task
from src.scenario.report import ReportPaths, build_report, render_json
from src.scenario.runner import build_workspace, run_task


def scenario(text: str, name: str = "test"):
    return parse_scenario(textwrap.dedent(text).lstrip(), name)


PARSEVAL = """
    dimension: 1
    task: parseval
    region:
      box: {lo: [0], hi: [1]}
    fields:
      f: {expr: "2", floor: 2}
    family:
      seeds: ["1"]
"""


def test_valid_scenario():
    loaded = scenario(PARSEVAL)
    assert loaded.scenario.task is Task.parseval
    assert loaded.scenario.fields["f"].floor == 2


def test_yaml_errors_report_the_line():
    with pytest.raises(ScenarioError) as info:
        scenario("dimension: 1\ntask: [parseval\nregion: {}\n")
    assert info.value.line is not None


def test_unknown_keys_report_the_line():
    with pytest.raises(ScenarioError) as info:
        scenario(PARSEVAL + "    truncaton: 2\n")
    assert "truncaton" in str(info.value)
    assert info.value.line == 9


def test_missing_task_inputs():
    with pytest.raises(ScenarioError, match="needs field"):
        scenario(
            """
            dimension: 1
            task: cauchy-schwarz
            region:
              box: {lo: [0], hi: [1]}
            fields:
              g: {expr: "x1"}
            """
        )
    with pytest.raises(ScenarioError, match="family"):
        scenario(
            """
            dimension: 1
            task: expand
            region:
              box: {lo: [0], hi: [1]}
            fields:
              f: {expr: "1 + x1", floor: 1}
            """
        )


def test_expression_errors_name_field_line_and_column():
    loaded = scenario(PARSEVAL.replace('"2", floor: 2', '"x1 +", floor: 2'))
    with pytest.raises(ScenarioError) as info:
        build_workspace(loaded, load_all(SETTINGS_PATH, None))
    message = str(info.value)
    assert "field 'f'" in message
    assert "column 5" in message
    assert info.value.line == 6


def test_profiles_merge_over_defaults():
    fast = load_all(SETTINGS_PATH, "fast")
    assert fast.integrator.rel_tol == 1e-4
    assert fast.integrator.seed == 0
    assert load_all(SETTINGS_PATH, "stochastic").integrator.method is Method.stochastic
    with pytest.raises(ScenarioError):
        load_all(SETTINGS_PATH, "missing")
    with pytest.raises(ScenarioError):
        load_all("does/not/exist.yaml", None)


def test_settings_precedence():
    loaded = scenario(PARSEVAL + "    integrator: {rel_tol: 1.0e-5, seed: 4}\n")
    config = load_all(SETTINGS_PATH, "fast")
    ws = build_workspace(loaded, config)
    assert ws.settings.rel_tol == 1e-5
    assert ws.settings.abs_tol == 1e-7
    assert ws.settings.seed == 4
    ws = build_workspace(loaded, config, IntegratorOverrides(rel_tol=1e-3))
    assert ws.settings.rel_tol == 1e-3
    assert ws.settings.seed == 4


def test_weight_selection():
    ws = build_workspace(scenario(PARSEVAL), load_all(SETTINGS_PATH, None))
    default = ws.weight(None, "f")
    assert isinstance(default, ReciprocalField) and default.is_reciprocal_of(ws.fields["f"])
    assert isinstance(ws.weight("1/f", None), ReciprocalField)
    assert ws.weight("3", None).at(0.5) == 3.0
    assert ws.weight(None, None).at(0.5) == 1.0
    with pytest.raises(WeightError):
        ws.weight("1 + x1", None)


def test_reports_are_deterministic(tmp_path):
    loaded = scenario(PARSEVAL)
    config = load_all(SETTINGS_PATH, None)
    texts = []
    for _ in range(2):
        ws = build_workspace(loaded, config)
        outcome = run_task(ws)
        texts.append(render_json(build_report(ws, outcome)))
    assert texts[0] == texts[1]
    assert '"status": "ok"' in texts[0]


def test_report_paths():
    loaded = scenario(PARSEVAL + "    output: {csv: grid.csv}\n")
    paths = ReportPaths.resolve(loaded.scenario.output, "out", None, "run")
    assert str(paths.report) == "out/run.json"
    assert str(paths.summary) == "out/run.md"
    assert str(paths.csv) == "grid.csv"
    assert str(ReportPaths.resolve(loaded.scenario.output, "out", "other.csv", "run").csv) == "other.csv"
