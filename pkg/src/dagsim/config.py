"""Scenario configs: one JSON file per run, explicit seed, one sub-config."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BudgetParams:
    alpha: str
    throughput: str
    delay: str
    verify_time: str


@dataclass(frozen=True)
class GameParams:
    powers: list
    rewards: list
    delta: str | None = None
    eps: float = 1e-6
    max_iters: int = 2000
    distinct_trials: int = 2000


@dataclass(frozen=True)
class GrowthParams:
    s: int
    rounds: int
    trials: int = 1
    inject_round: int | None = None
    ledger_rounds: int = 0  # also grow trial 0 through the full ledger and export it


@dataclass(frozen=True)
class WalkParams:
    p: float
    horizon: int
    trials: int
    step: int = 1


SCENARIOS = {"budget": BudgetParams, "game": GameParams, "growth": GrowthParams, "walk": WalkParams}
STOCHASTIC = {"game", "growth", "walk"}


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    params: object
    seed: int | None = None
    output: str = "results"
    name: str = field(default="")

    def to_dict(self) -> dict:
        out = {"scenario": self.scenario, "seed": self.seed, "output": self.output, self.scenario: asdict(self.params)}
        if self.name:
            out["name"] = self.name
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @property
    def label(self) -> str:
        return self.name or self.scenario


def _build(cls, raw):
    if not isinstance(raw, dict):
        raise ConfigError(f"{cls.__name__} must be a mapping")
    known = {f.name for f in fields(cls)}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"unknown keys for {cls.__name__}: {sorted(extra)}")
    try:
        return cls(**raw)
    except TypeError as exc:
        raise ConfigError(f"{cls.__name__}: {exc}") from None


def parse_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    scenario = raw.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; expected one of {sorted(SCENARIOS)}")
    present = [k for k in SCENARIOS if k in raw]
    if present != [scenario]:
        raise ConfigError(f"exactly one sub-config ({scenario!r}) must be present, found {present}")
    seed = raw.get("seed")
    if scenario in STOCHASTIC:
        if seed is None:
            raise ConfigError(f"scenario {scenario!r} needs an explicit integer seed")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool)):
        raise ConfigError("seed must be an integer")
    extra = set(raw) - {"scenario", "seed", "output", "name", scenario}
    if extra:
        raise ConfigError(f"unknown top-level keys: {sorted(extra)}")
    return ExperimentConfig(scenario, _build(SCENARIOS[scenario], raw[scenario]), seed,
                            raw.get("output", "results"), raw.get("name", ""))


def loads(text: str) -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    return parse_config(raw)


def load(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            return loads(fh.read())
    except OSError as exc:
        raise ConfigError(str(exc)) from None
