"""Shared fixtures: hand-sized models and scenario-file helpers."""
from __future__ import annotations

import json

import numpy as np
import pytest

from tcsflock import graph, kernels
from tcsflock.dynamics import EnsembleState, ModelSpec


def two_agent_state() -> EnsembleState:
    """N=2, d=1, beta=(1,2), v=(1,0): the worked example used throughout."""
    return EnsembleState(0.0, np.array([[0.0], [0.3]]), np.array([[1.0], [0.0]]), np.array([1.0, 2.0]))


def two_agent_model() -> ModelSpec:
    return ModelSpec(graph.complete(2), kernels.constant(1.0), kernels.constant(1.0))


def small_spread_state(n: int, seed: int, scale: float, dim: int = 2) -> EnsembleState:
    """Positions in a box of width 0.2, zero-mean velocities, temperatures near 1."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(-0.1, 0.1, (n, dim))
    V = rng.normal(0.0, scale, (n, dim))
    V -= V.mean(axis=0)
    theta = 1.0 + rng.uniform(0.0, scale, n)
    return EnsembleState.from_temperatures(0.0, X, V, theta)


def random_state(n: int, seed: int, dim: int = 2) -> EnsembleState:
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, (n, dim))
    V = rng.normal(0.0, 1.0, (n, dim))
    theta = rng.uniform(0.5, 2.0, n)
    return EnsembleState.from_temperatures(0.0, X, V, theta)


@pytest.fixture
def write_scenario(tmp_path):
    def _write(payload: dict, name: str = "scenario.json"):
        path = tmp_path / name
        path.write_text(json.dumps(payload))
        return path

    return _write


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion, when that module ran."""
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(module.RESULTS):
        ok, detail = module.RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
