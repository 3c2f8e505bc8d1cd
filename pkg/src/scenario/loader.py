"""Workbench settings and scenario files.

Settings come from a YAML file with `defaults` and named `profiles`; a
profile is deep-merged over the defaults. Scenario files are YAML too and
keep their source text so later errors can point at a line.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import yaml
from pydantic import BaseModel, Field, ValidationError

from src.config import REPORTS_DIR
from src.errors import ScenarioError
from src.integrate.settings import IntegratorSettings
from src.scenario.models import Scenario


class PartitionDefaults(BaseModel):
    max_depth: int = Field(6, ge=1)


class WorkbenchConfig(BaseModel):
    integrator: IntegratorSettings = IntegratorSettings()
    partition: PartitionDefaults = PartitionDefaults()
    reports_dir: str = REPORTS_DIR


def _deep_merge(a: dict, b: dict) -> None:
    """Deep-merge b into a."""
    for k, v in b.items():
        if isinstance(v, dict) and isinstance(a.get(k), dict):
            _deep_merge(a[k], v)
        else:
            a[k] = v


def load_all(config_path: str, profile: Optional[str]) -> WorkbenchConfig:
    path = Path(config_path)
    if not path.is_file():
        raise ScenarioError(f"settings file {config_path} not found")
    try:
        raw = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as e:
        raise ScenarioError(f"invalid settings file {config_path}: {e}", _yaml_line(e)) from e

    # Start with defaults
    cfg_dict = dict(raw.get("defaults", {}))

    # Apply profile overrides (if any)
    if profile:
        prof = (raw.get("profiles") or {}).get(profile)
        if not prof:
            raise ScenarioError(f"profile '{profile}' not found in {config_path}")
        _deep_merge(cfg_dict, prof)

    try:
        return WorkbenchConfig.model_validate(cfg_dict)
    except ValidationError as e:
        raise ScenarioError(f"invalid 'defaults/profiles' in {config_path}: {e}") from e


def _yaml_line(e: yaml.YAMLError) -> Optional[int]:
    mark = getattr(e, "problem_mark", None) or getattr(e, "context_mark", None)
    return mark.line + 1 if mark is not None else None


def _node_line(node: Optional[yaml.Node], loc: tuple[Any, ...]) -> Optional[int]:
    """Line of the deepest node on `loc` (a pydantic error location)."""
    line = node.start_mark.line + 1 if node is not None else None
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            match = next((v for k, v in node.value if k.value == str(key)), None)
            if match is None:
                break
            key_node = next(k for k, v in node.value if v is match)
            line = key_node.start_mark.line + 1
            node = match
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            break
    return line


@dataclass(frozen=True)
class LoadedScenario:
    scenario: Scenario
    source: str
    name: str

    def line_of(self, text: str) -> Optional[int]:
        """First line mentioning `text`, used to place expression errors."""
        for i, line in enumerate(self.source.splitlines(), start=1):
            if text and text in line:
                return i
        return None


def parse_scenario(source: str, name: str = "scenario") -> LoadedScenario:
    try:
        raw = yaml.safe_load(source)
        node = yaml.compose(source)
    except yaml.YAMLError as e:
        raise ScenarioError(f"scenario is not valid YAML: {getattr(e, 'problem', e)}", _yaml_line(e)) from e
    if not isinstance(raw, dict):
        raise ScenarioError("scenario must be a mapping of keys to values", 1)
    try:
        scenario = Scenario.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"]) or "scenario"
        raise ScenarioError(f"{where}: {first['msg']}", _node_line(node, first["loc"])) from e
    return LoadedScenario(scenario, source, name)


def load_scenario(path: str | Path) -> LoadedScenario:
    p = Path(path)
    if not p.is_file():
        raise ScenarioError(f"scenario file {p} not found")
    return parse_scenario(p.read_text(), p.stem)
