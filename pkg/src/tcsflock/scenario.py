"""JSON scenario files: schema, validation and construction of run objects."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from . import graph as graphmod
from . import kernels
from .dynamics import EnsembleState, ModelSpec
from .errors import ScenarioError, TCSError


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GraphSpec(_Strict):
    type: Literal["edges", "complete", "cycle", "path", "random"]
    n: int = Field(ge=1)
    edges: list[tuple[int, int]] = []
    p: float = Field(default=0.5, ge=0.0, le=1.0)
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _random_needs_seed(self):
        if self.type == "random" and self.seed is None:
            raise ValueError("random graphs need a seed")
        return self

    def build(self) -> graphmod.Digraph:
        if self.type == "edges":
            return graphmod.from_edge_list(self.n, self.edges)
        if self.type == "random":
            return graphmod.random_digraph(self.n, self.p, self.seed)
        return getattr(graphmod, self.type)(self.n)


class KernelSpec(_Strict):
    family: Literal["constant", "algebraic", "exponential", "tabulated"]
    kappa: float = 1.0
    s: float = 0.0
    ell: float = 1.0
    table: list[tuple[float, float]] = []

    def build(self) -> kernels.CommKernel:
        return kernels.from_dict(self.model_dump())


class BoxSpec(_Strict):
    box: float = Field(gt=0)


class ScaleSpec(_Strict):
    scale: float = Field(ge=0)
    mean: Optional[list[float]] = None


class RangeSpec(_Strict):
    min: float = Field(gt=0)
    max: float = Field(gt=0)

    @model_validator(mode="after")
    def _ordered(self):
        if self.max < self.min:
            raise ValueError("temperature max must be >= min")
        return self


class InitialSpec(_Strict):
    positions: Union[list[list[float]], BoxSpec]
    velocities: Union[list[list[float]], ScaleSpec]
    temperatures: Union[list[float], RangeSpec]
    dim: int = Field(default=2, ge=1)
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _random_needs_seed(self):
        random_parts = [
            isinstance(self.positions, BoxSpec),
            isinstance(self.velocities, ScaleSpec),
            isinstance(self.temperatures, RangeSpec),
        ]
        if any(random_parts) and self.seed is None:
            raise ValueError("random initial data need a seed")
        return self

    def build(self, n: int) -> EnsembleState:
        rng = np.random.default_rng(self.seed)
        d = self.dim
        if isinstance(self.positions, BoxSpec):
            X = rng.uniform(-0.5 * self.positions.box, 0.5 * self.positions.box, (n, d))
        else:
            X = np.asarray(self.positions, dtype=float)
        if isinstance(self.velocities, ScaleSpec):
            V = rng.normal(0.0, self.velocities.scale, (n, d))
            if self.velocities.mean is not None:
                V = V + np.asarray(self.velocities.mean, dtype=float)
        else:
            V = np.asarray(self.velocities, dtype=float)
        if isinstance(self.temperatures, RangeSpec):
            theta = rng.uniform(self.temperatures.min, self.temperatures.max, n)
        else:
            theta = np.asarray(self.temperatures, dtype=float)
        if X.shape[0] != n or V.shape[0] != n or theta.shape != (n,):
            raise ScenarioError(f"initial: data must describe exactly n={n} agents")
        return EnsembleState.from_temperatures(0.0, X, V, theta)


class NumericsSpec(_Strict):
    h: float = Field(gt=0)
    t_end: Optional[float] = Field(default=None, ge=0)
    n_steps: Optional[int] = Field(default=None, ge=0)
    sample_every: int = Field(default=1, ge=1)


class CertificateSpec(_Strict):
    x_inf: Union[float, list[float]]
    delta: Union[float, list[float], None] = None
    n0: Union[int, list[int], None] = None

    @staticmethod
    def _as_list(value) -> list:
        return list(value) if isinstance(value, list) else [value]

    @property
    def x_inf_grid(self) -> list[float]:
        return self._as_list(self.x_inf)

    @property
    def delta_grid(self) -> list[float] | None:
        return None if self.delta is None else self._as_list(self.delta)

    @property
    def n0_grid(self) -> list[int] | None:
        return None if self.n0 is None else self._as_list(self.n0)


class LimitSpec(_Strict):
    h_values: Optional[list[float]] = None
    divisors: Optional[list[int]] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.h_values is None) == (self.divisors is None):
            raise ValueError("give exactly one of h_values or divisors")
        return self


class OutputSpec(_Strict):
    trajectory: str = "trajectory.csv"
    diagnostics: str = "diagnostics.csv"
    certificate: str = "certificate.json"
    limit: str = "limit_check.csv"
    graph_info: str = "graph_info.json"
    error: str = "error.json"


class Scenario(_Strict):
    graph: GraphSpec
    phi: KernelSpec = KernelSpec(family="constant")
    zeta: KernelSpec = KernelSpec(family="constant")
    initial: Optional[InitialSpec] = None
    mode: Literal["continuous", "discrete"] = "continuous"
    numerics: Optional[NumericsSpec] = None
    certificate: Optional[CertificateSpec] = None
    limit_check: Optional[LimitSpec] = None
    output: OutputSpec = OutputSpec()

    @model_validator(mode="after")
    def _mode_fields(self):
        if self.numerics is not None:
            if self.mode == "continuous" and self.numerics.t_end is None:
                raise ValueError("numerics.t_end is required in continuous mode")
            if self.mode == "discrete" and self.numerics.n_steps is None:
                raise ValueError("numerics.n_steps is required in discrete mode")
        if self.certificate is not None:
            if self.mode == "continuous" and self.certificate.delta is None:
                raise ValueError("certificate.delta is required in continuous mode")
            if self.mode == "discrete" and self.certificate.n0 is None:
                raise ValueError("certificate.n0 is required in discrete mode")
        return self

    def with_seed(self, seed: int) -> "Scenario":
        update = {}
        if self.initial is not None:
            update["initial"] = self.initial.model_copy(update={"seed": seed})
        if self.graph.type == "random":
            update["graph"] = self.graph.model_copy(update={"seed": seed})
        return self.model_copy(update=update)

    def build_graph(self) -> graphmod.Digraph:
        try:
            return self.graph.build()
        except TCSError as exc:
            raise ScenarioError(f"graph: {exc}") from exc

    def build_model(self) -> ModelSpec:
        g = self.build_graph()
        try:
            return ModelSpec(g, self.phi.build(), self.zeta.build())
        except graphmod.NoSpanningTreeError as exc:
            raise ScenarioError(f"graph: {exc}") from exc
        except TCSError as exc:
            raise ScenarioError(f"phi/zeta: {exc}") from exc

    def build_state(self, n: int) -> EnsembleState:
        if self.initial is None:
            raise ScenarioError("initial: section is required for this command")
        try:
            return self.initial.build(n)
        except ScenarioError:
            raise
        except (TCSError, ValueError) as exc:
            raise ScenarioError(f"initial: {exc}") from exc


def _format_validation(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{loc}: {err['msg']}")
    return "; ".join(lines)


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        return Scenario.model_validate(raw)
    except ValidationError as exc:
        raise ScenarioError(f"{source}: {_format_validation(exc)}") from exc


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror}") from exc
    return parse_scenario(text, str(path))
