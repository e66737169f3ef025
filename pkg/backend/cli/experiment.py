"""
Experiment configuration: a pydantic model read from TOML or JSON.

Validation errors are reported with the line of the offending key.
"""

import json
import re
import tomllib
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from backend.components.audit.reports import DEFINITIONS, StabilityBudget
from backend.components.learners.weak import realizable_battery
from backend.components.primitives.domain import (
    Hypothesis,
    HypothesisClass,
    PopulationDistribution,
    parse_class_spec,
)
from backend.core.errors import ConfigError, StabilityLabError
from backend.core.settings import settings

PIPELINES = ("di-equivalence", "dd-audit", "boost-sweep", "dims-sweep")
_TOML_LINE = re.compile(r"line (\d+)")


class OutputConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: str = "reports"
    prefix: Optional[str] = None


class ExperimentConfig(BaseModel):
    """One experiment: class, rule, populations, m grid and run controls. Seeds are always explicit."""
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    name: str = "experiment"
    pipeline: Optional[Literal["di-equivalence", "dd-audit", "boost-sweep", "dims-sweep"]] = None
    class_spec: str = Field("thresholds:4", alias="class")
    classes: List[str] = []
    rule: str = "rejection:game"
    population: str = "members"
    m_grid: List[int] = [1, 2, 3]
    trials: int = 200
    seed: int = 0
    mode: Literal["exact", "mc"] = "exact"
    workers: Optional[int] = None
    truncation: Optional[int] = None
    game_method: Literal["exact", "mw"] = "exact"
    universe: Literal["class", "all"] = "class"
    weak_k: int = 1
    boost_trials: int = 20
    witness_samples: int = 16
    definitions: List[str] = ["dp", "rep", "gs", "mi", "tv", "pg", "maxinfo", "pacbayes"]
    budgets: Dict[str, StabilityBudget] = {}
    cross_check: bool = False
    output: OutputConfig = OutputConfig()

    @model_validator(mode="before")
    @classmethod
    def _budget_definitions(cls, data: Any) -> Any:
        """``[budgets.dp]`` tables name their definition through the key."""
        if isinstance(data, dict) and isinstance(data.get("budgets"), dict):
            data = dict(data)
            data["budgets"] = {
                key: {"definition": key, **value} if isinstance(value, dict) else value
                for key, value in data["budgets"].items()
            }
        return data

    @field_validator("m_grid")
    @classmethod
    def _positive_grid(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("m_grid must not be empty")
        if any(m < 1 for m in value):
            raise ValueError("sample sizes must be positive")
        return sorted(set(value))

    @field_validator("trials", "boost_trials", "truncation", "weak_k", "witness_samples")
    @classmethod
    def _positive(cls, value: Optional[int]) -> Optional[int]:
        if value is not None and value < 1:
            raise ValueError("must be positive")
        return value

    @field_validator("workers")
    @classmethod
    def _workers(cls, value: Optional[int]) -> Optional[int]:
        if value is not None and value < 1:
            raise ValueError("workers must be positive")
        return value

    @field_validator("definitions")
    @classmethod
    def _known_definitions(cls, value: List[str]) -> List[str]:
        unknown = [d for d in value if d not in DEFINITIONS]
        if unknown:
            raise ValueError(f"unknown definitions {unknown}; choose from {', '.join(DEFINITIONS)}")
        return value

    @model_validator(mode="after")
    def _default_truncation(self) -> "ExperimentConfig":
        """Mixtures are truncated at ``truncation_factor`` times the largest sample size unless set."""
        if self.truncation is None:
            self.truncation = settings.truncation_factor * max(self.m_grid)
        return self

    def hypothesis_class(self) -> HypothesisClass:
        return parse_class_spec(self.class_spec)

    def class_specs(self) -> List[str]:
        return list(self.classes) or [self.class_spec]

    def canonical(self) -> Dict[str, Any]:
        """Every field, aliases applied, in a JSON-stable form."""
        return self.model_dump(mode="json", by_alias=True)


def _locate(text: str, loc: Sequence[Union[str, int]]) -> Optional[int]:
    """Line of the deepest key in ``loc`` found in order through the source text."""
    lines = text.splitlines()
    start, found = 0, None
    for part in loc:
        if not isinstance(part, str):
            continue
        pattern = re.compile(rf'^\s*(\[+\s*)?("?)[\w.\-"]*\b{re.escape(part)}\b\2')
        for number in range(start, len(lines)):
            if pattern.search(lines[number]):
                found, start = number + 1, number + 1
                break
    return found


def _parse(text: str, suffix: str) -> Dict[str, Any]:
    if suffix == ".json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(e.msg, e.lineno) from e
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        match = _TOML_LINE.search(str(e))
        raise ConfigError(str(e), int(match.group(1)) if match else None) from e


def _validation_error(text: str, error: ValidationError) -> ConfigError:
    first = error.errors()[0]
    loc = first["loc"]
    where = ".".join(str(part) for part in loc)
    message = f"{where}: {first['msg']}" if where else first["msg"]
    if len(error.errors()) > 1:
        message = f"{message} (and {len(error.errors()) - 1} more)"
    return ConfigError(message, _locate(text, loc))


def parse_experiment(text: str, suffix: str = ".toml") -> ExperimentConfig:
    """Validate experiment text (TOML by default, JSON for ``.json``)."""
    data = _parse(text, suffix)
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise _validation_error(text, e) from e


def load_experiment(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return parse_experiment(text, path.suffix.lower())


def load_budgets(path: Union[str, Path]) -> Dict[str, StabilityBudget]:
    """
    Budget file: one table per definition, optionally nested under ``budgets``.

    ``[dp]`` / ``eps = "ln:2"`` style keys; JSON mirrors the same layout.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read budget file {path}: {e}") from e
    data = _parse(text, path.suffix.lower())
    data = data.get("budgets", data)
    if not isinstance(data, dict):
        raise ConfigError("budget file must map definitions to tables")
    budgets = {}
    for key, value in data.items():
        if not isinstance(value, dict):
            raise ConfigError(f"budget {key!r} must be a table", _locate(text, [key]))
        try:
            budgets[key] = StabilityBudget.model_validate({"definition": key, **value})
        except ValidationError as e:
            raise _validation_error(text, e) from e
    return budgets


def parse_population_spec(spec: str, hclass: HypothesisClass, seed: int = 0) -> List[PopulationDistribution]:
    """
    Population battery from a comma-separated spec list.

    ``members``: realizable uniform-marginal population per class member;
    ``member:i``: the i-th of those; ``target:0110``: realizable for that labeling;
    ``point:x:y``: point mass on one example; ``uniform``: uniform over all examples;
    ``battery``: members plus random-marginal realizable populations.
    """
    domain = hclass.domain
    pops: List[PopulationDistribution] = []
    for part in (p.strip() for p in spec.split(",")):
        if not part:
            continue
        name, _, arg = part.partition(":")
        try:
            if name == "members":
                pops.extend(PopulationDistribution.realizable_uniform(h) for h in hclass.members)
            elif name == "member":
                pops.append(PopulationDistribution.realizable_uniform(hclass.members[int(arg)]))
            elif name == "target":
                target = Hypothesis.from_string(arg)
                if target.size != domain.size:
                    raise ConfigError(f"target {arg!r} does not label {domain.size} points")
                pops.append(PopulationDistribution.realizable_uniform(target))
            elif name == "point":
                x, y = _point(arg)
                pops.append(PopulationDistribution.uniform_over(domain, [(x, y)]))
            elif name == "uniform":
                pops.append(PopulationDistribution.uniform_over(domain, domain.all_pairs()))
            elif name == "battery":
                pops.extend(realizable_battery(hclass, seed=seed))
            else:
                raise ConfigError(f"unknown population spec {part!r}")
        except (ValueError, IndexError) as e:
            raise ConfigError(f"bad population spec {part!r}: {e}") from e
        except ConfigError:
            raise
        except StabilityLabError as e:
            raise ConfigError(f"bad population spec {part!r}: {e}") from e
    if not pops:
        raise ConfigError(f"population spec {spec!r} is empty")
    return pops


def _point(arg: str) -> Tuple[int, int]:
    x, _, y = arg.partition(":")
    return int(x), int(y)
