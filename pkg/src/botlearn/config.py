"""Experiment configuration (JSON, versioned)."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .adversary import Strategy

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass
class SyntheticSpec:
    n: int = 10_000
    lambda_a: float = 2.1


@dataclass
class ExperimentConfig:
    theta: float = 0.5
    eta: float = 0.9
    horizon: int = 101
    budget_fraction: float | None = 1 / 400
    budget: int | None = None
    strategies: list[str] = field(default_factory=lambda: [s.value for s in Strategy])
    trials: int = 5
    seed: int = 0
    dataset: str | None = None
    synthetic: SyntheticSpec = field(default_factory=SyntheticSpec)
    epsilon: float = 0.1
    pagerank_eps: float = 0.15
    pagerank_rule: str = "tail"
    alpha_bar: float = 1.0
    beta_bar: float = 1.0
    warm_start: str = "relaxed"
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if isinstance(self.synthetic, dict):
            self.synthetic = SyntheticSpec(**self.synthetic)
        self.validate()

    def validate(self) -> None:
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}")
        if not 0 < self.theta < 1:
            raise ConfigError("theta must lie in (0, 1)")
        if not 0 < self.eta < 1:
            raise ConfigError("eta must lie in (0, 1)")
        if self.horizon < 1:
            raise ConfigError("horizon must be at least 1")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if (self.budget is None) == (self.budget_fraction is None):
            raise ConfigError("give exactly one of budget and budget_fraction")
        if self.budget is not None and self.budget < 1:
            raise ConfigError("budget must be positive")
        if self.budget_fraction is not None and not 0 < self.budget_fraction <= 1:
            raise ConfigError("budget_fraction must lie in (0, 1]")
        if not self.strategies:
            raise ConfigError("no strategies given")
        for s in self.strategies:
            try:
                Strategy(s)
            except ValueError:
                raise ConfigError(f"unknown strategy {s!r}") from None
        if not 0 < self.pagerank_eps < 1:
            raise ConfigError("pagerank_eps must lie in (0, 1)")
        if self.pagerank_rule not in ("tail", "literal"):
            raise ConfigError("pagerank_rule must be 'tail' or 'literal'")
        if self.warm_start not in ("relaxed", "cold"):
            raise ConfigError("warm_start must be 'relaxed' or 'cold'")
        if self.alpha_bar <= 0 or self.beta_bar <= 0:
            raise ConfigError("prior bounds must be positive")
        if self.dataset is None:
            syn = self.synthetic
            if syn.n < 2 or not syn.lambda_a > 1:
                raise ConfigError("invalid synthetic graph parameters")

    def resolve_budget(self, n_edges: int) -> int:
        b = self.budget if self.budget is not None else math.ceil(self.budget_fraction * n_edges)
        if b > n_edges:
            raise ConfigError(f"budget {b} exceeds the {n_edges} agent edges")
        return b

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        if "schema_version" not in data:
            raise ConfigError("config lacks schema_version")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        text = Path(path).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(data)
