"""Scenario JSON files: a population plus optional Monte Carlo settings.

Layout::

    {
      "p_z": 0.5, "p_d": 0.5,
      "strata": [{"weight": 0.5, "m": [[0, 1], [1, 1]], "y": [[0, 2], [1, 4]], "noise_sd": 1.0}],
      "mc": {"n_grid": [1000, 10000], "reps": 200, "seed": 0, "estimators": ["iv", "si"]},
      "outputs": {"json": "report.json", "csv": "report.csv"}
    }

``m`` is indexed ``[d][z]`` and ``y`` is indexed ``[d][m]``. Unknown keys are
rejected.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .errors import ScenarioError
from .population import Population, ensure_valid


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class StratumSpec(_Strict):
    weight: float
    m: Annotated[list[Annotated[list[int], Field(min_length=2, max_length=2)]],
                 Field(min_length=2, max_length=2)]
    y: Annotated[list[Annotated[list[float], Field(min_length=2, max_length=2)]],
                 Field(min_length=2, max_length=2)]
    noise_sd: float = 0.0


class McSpec(_Strict):
    n_grid: list[int]
    reps: int = 200
    seed: int = 0
    estimators: list[Literal["iv", "si"]] = ["iv"]


class OutputSpec(_Strict):
    json_path: str | None = Field(default=None, alias="json")
    csv_path: str | None = Field(default=None, alias="csv")


class ScenarioFile(_Strict):
    p_z: float
    p_d: float
    strata: Annotated[list[StratumSpec], Field(min_length=1)]
    mc: McSpec | None = None
    outputs: OutputSpec | None = None

    def population(self) -> Population:
        return ensure_valid(Population.from_dict(self.model_dump(include={"p_z", "p_d", "strata"})))


def _format(err: ValidationError, source: str) -> str:
    parts = []
    for e in err.errors():
        loc = ".".join(str(p) if not isinstance(p, int) else f"[{p}]" for p in e["loc"])
        parts.append(f"{loc.replace('.[', '[')}: {e['msg']}")
    return f"{source}: " + "; ".join(parts)


def parse_scenario(data, source: str = "<scenario>") -> ScenarioFile:
    try:
        return ScenarioFile.model_validate(data)
    except ValidationError as exc:
        raise ScenarioError(_format(exc, source)) from exc


def load_scenario(path) -> ScenarioFile:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: malformed JSON: {exc}") from exc
    return parse_scenario(data, str(path))


def load_population(path) -> Population:
    return load_scenario(path).population()
