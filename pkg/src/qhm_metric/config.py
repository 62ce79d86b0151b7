"""
Run configuration for the verification suites and the CLI.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Union

from .element import ModelParams, Truncation
from .errors import ConfigurationError, DomainError


logger = logging.getLogger(__name__)

OUTPUT_FORMATS = ("json", "csv")

DEFAULT_TOLERANCES: Dict[str, float] = {
    "twist": 1e-10,
    "identity": 1e-12,
    "star_oracle": 1e-10,
    "associativity": 1e-9,
    "trace": 1e-9,
    "positivity": 1e-10,
    "action": 1e-9,
    "submultiplicative": 1e-9,
    "leibniz": 1e-6,
    "generator_order": 0.2,
    "averaging": 1e-10,
    "torus_average": 1e-9,
    "tail": 1e-9,
    "homomorphism": 1e-10,
    "dense_oracle": 1e-8,
    "norm_domination": 1e-6,
    "monotone": 1e-12,
    "twist_equivalence": 1e-10,
    "radius": 1e-6,
    "symmetry": 1e-3,
    "triangle": 1e-2,
    "witness": 1e-9,
    "gap": 1e-6,
    "homogeneity": 1e-3,
    "lp": 1e-6,
    "faithfulness": 1e-6,
}

DEFAULT_SAMPLES: Dict[str, int] = {
    "probes": 20,
    "star_pairs": 10,
    "associativity": 5,
    "trace": 10,
    "positivity": 50,
    "action": 10,
    "submultiplicative": 50,
    "leibniz": 5,
    "tail": 50,
    "proof_steps": 20,
    "gap": 100,
    "cqms": 50,
    "homomorphism": 20,
    "dense_oracle": 5,
    "norm_domination": 100,
    "radius_states": 6,
    "symmetry_pairs": 2,
}


@dataclass
class SolverConfig:
    """Settings of the Lip-ball solver, which runs on its own (small) truncation."""

    restarts: int = 20
    iterations: int = 2000
    workers: int = 4
    truncation: Truncation = field(default_factory=lambda: Truncation(P=2, Nx=16, Ny=16, Q=4))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "restarts": self.restarts,
            "iterations": self.iterations,
            "workers": self.workers,
            "truncation": self.truncation.to_dict(),
        }


@dataclass
class OutputConfig:
    path: str = "report.json"
    format: str = "json"


@dataclass
class RunConfig:
    """Everything a verification run depends on."""

    params: ModelParams = field(default_factory=ModelParams)
    truncation: Truncation = field(default_factory=Truncation)
    seeds: List[int] = field(default_factory=lambda: [0, 1, 2])
    tolerances: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    samples: Dict[str, int] = field(default_factory=lambda: dict(DEFAULT_SAMPLES))
    solver: SolverConfig = field(default_factory=SolverConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @classmethod
    def default(cls) -> "RunConfig":
        return cls()

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "RunConfig":
        """Build and validate a config; unknown tolerance or sample names are rejected."""
        if not isinstance(payload, dict):
            raise ConfigurationError("Config must be a JSON object")
        try:
            params = ModelParams(**payload.get("params", {}))
            truncation = Truncation(**payload.get("truncation", {}))
            solver_raw = dict(payload.get("solver", {}))
            solver_trunc = solver_raw.pop("truncation", None)
            solver = SolverConfig(**solver_raw)
            if solver_trunc is not None:
                solver.truncation = Truncation(**solver_trunc)
            output = OutputConfig(**payload.get("output", {}))
        except DomainError as e:
            raise ConfigurationError(f"Invalid config value: {e}") from e
        except ValueError as e:
            raise ConfigurationError(f"Malformed config value: {e}") from e
        except TypeError as e:
            raise ConfigurationError(f"Unknown or malformed config field: {e}") from e

        tolerances = dict(DEFAULT_TOLERANCES)
        for name, value in payload.get("tolerances", {}).items():
            if name not in DEFAULT_TOLERANCES:
                raise ConfigurationError(f"Unknown tolerance: {name}")
            tolerances[name] = value
        samples = dict(DEFAULT_SAMPLES)
        for name, value in payload.get("samples", {}).items():
            if name not in DEFAULT_SAMPLES:
                raise ConfigurationError(f"Unknown sample count: {name}")
            samples[name] = value

        config = cls(
            params=params,
            truncation=truncation,
            seeds=list(payload.get("seeds", [0, 1, 2])),
            tolerances=tolerances,
            samples=samples,
            solver=solver,
            output=output,
        )
        config.validate()
        return config

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"Config file not found: {path}")
        try:
            with open(path) as f:
                payload = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Config file {path} is not valid JSON: {e}") from e
        logger.info(f"Loaded config from {path}")
        return cls.from_dict(payload)

    def validate(self) -> None:
        """Raise ConfigurationError unless every setting is usable."""
        for name, value in self.tolerances.items():
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0:
                raise ConfigurationError(
                    f"Tolerance {name} must be a positive number, got {value!r}"
                )
        for name, value in self.samples.items():
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigurationError(
                    f"Sample count {name} must be a positive integer, got {value!r}"
                )
        if not self.seeds or not all(isinstance(s, int) and s >= 0 for s in self.seeds):
            raise ConfigurationError("Seeds must be a nonempty list of nonnegative integers")
        if self.solver.restarts < 1 or self.solver.iterations < 1 or self.solver.workers < 1:
            raise ConfigurationError("Solver restarts, iterations and workers must be positive")
        if self.output.format not in OUTPUT_FORMATS:
            raise ConfigurationError(
                f"Output format must be one of {', '.join(OUTPUT_FORMATS)}, "
                f"got {self.output.format!r}"
            )

    def tol(self, name: str) -> float:
        return float(self.tolerances[name])

    def count(self, name: str) -> int:
        return int(self.samples[name])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "params": self.params.to_dict(),
            "truncation": self.truncation.to_dict(),
            "seeds": list(self.seeds),
            "tolerances": dict(self.tolerances),
            "samples": dict(self.samples),
            "solver": self.solver.to_dict(),
            "output": {"path": self.output.path, "format": self.output.format},
        }
