"""Thermomechanical Cucker-Smale flows in coldness form.

The state of N agents in R^d is (X, V, B): positions and velocities are
(N, d) arrays and B holds the coldness beta_i = 1 / theta_i.

Continuous model::

    dx_i/dt    = v_i
    dv_i/dt    = 1/N sum_j chi_ij phi(|x_i - x_j|) (beta_j v_j - beta_i v_i)
    dbeta_i/dt = 1/N sum_j chi_ij zeta(|x_i - x_j|) beta_i^2 (beta_j - beta_i)

The discrete model is the explicit update with step h, where the coldness is
advanced through its reciprocal (the temperature) exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from . import graph as graphmod
from .errors import DomainError, IntegrationError, NumericError
from .graph import Digraph
from .kernels import CommKernel


@dataclass(frozen=True, eq=False)
class EnsembleState:
    t: float
    X: np.ndarray
    V: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        V = np.array(self.V, dtype=float)
        B = np.array(self.B, dtype=float).reshape(-1)
        if X.ndim == 1:
            X = X[:, None]
        if V.ndim == 1:
            V = V[:, None]
        if X.shape != V.shape or X.shape[0] != B.shape[0]:
            raise DomainError(f"inconsistent shapes X {X.shape}, V {V.shape}, B {B.shape}")
        if X.shape[0] < 1:
            raise DomainError("ensemble needs at least one agent")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(V)) and np.all(np.isfinite(B))):
            raise NumericError("state contains non-finite values")
        if np.any(B <= 0):
            raise DomainError("coldness values must be strictly positive")
        for arr in (X, V, B):
            arr.setflags(write=False)
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.B.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def theta(self) -> np.ndarray:
        return 1.0 / self.B

    @classmethod
    def _trusted(cls, t: float, X: np.ndarray, V: np.ndarray, B: np.ndarray) -> "EnsembleState":
        """Skip validation for arrays the integrators have already guarded."""
        obj = object.__new__(cls)
        for arr in (X, V, B):
            arr.setflags(write=False)
        for name, value in (("t", float(t)), ("X", X), ("V", V), ("B", B)):
            object.__setattr__(obj, name, value)
        return obj

    @classmethod
    def from_temperatures(cls, t, X, V, theta) -> "EnsembleState":
        theta = np.asarray(theta, dtype=float)
        if np.any(theta <= 0):
            raise DomainError("temperatures must be strictly positive")
        return cls(t, X, V, 1.0 / theta)


@dataclass(frozen=True)
class ModelSpec:
    graph: Digraph
    phi: CommKernel
    zeta: CommKernel

    def __post_init__(self):
        if not graphmod.has_spanning_tree(self.graph):
            raise graphmod.NoSpanningTreeError("model graph must have a spanning tree")
        object.__setattr__(self, "_shared_kernel", self.phi == self.zeta)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def kappa1(self) -> float:
        return float(self.phi(0.0))

    @property
    def kappa2(self) -> float:
        return float(self.zeta(0.0))


class Diameters(NamedTuple):
    DX: float
    DV: float
    DB: float
    DTheta: float
    Ru: float


def _pairwise_distance(X: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - X[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))


def _weights(X: np.ndarray, model: ModelSpec) -> tuple[np.ndarray, np.ndarray]:
    r = _pairwise_distance(X)
    chi = model.graph.adjacency
    w_phi = chi * model.phi(r)
    if model._shared_kernel:
        return w_phi, w_phi
    return w_phi, chi * model.zeta(r)


def _check_model(X: np.ndarray, model: ModelSpec) -> None:
    if X.shape[0] != model.n:
        raise DomainError(f"state has {X.shape[0]} agents but graph has {model.n} vertices")


def _field(X, V, B, model: ModelSpec):
    n = B.shape[0]
    w_phi, w_zeta = _weights(X, model)
    U = B[:, None] * V
    dV = (w_phi[:, :, None] * (U[None, :, :] - U[:, None, :])).sum(axis=1) / n
    dB = B * B * (w_zeta * (B[None, :] - B[:, None])).sum(axis=1) / n
    return V.copy(), dV, dB


def rhs_continuous(s: EnsembleState, m: ModelSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Right-hand side (dX, dV, dB) of the continuous flow at ``s``."""
    _check_model(s.X, m)
    out = _field(s.X, s.V, s.B, m)
    if not all(np.all(np.isfinite(a)) for a in out):
        raise NumericError("right-hand side evaluated to non-finite values")
    return out


def _rk4_arrays(X, V, B, m: ModelSpec, h: float):
    k1 = _field(X, V, B, m)
    k2 = _field(X + 0.5 * h * k1[0], V + 0.5 * h * k1[1], B + 0.5 * h * k1[2], m)
    k3 = _field(X + 0.5 * h * k2[0], V + 0.5 * h * k2[1], B + 0.5 * h * k2[2], m)
    k4 = _field(X + h * k3[0], V + h * k3[1], B + h * k3[2], m)
    return tuple(
        y + (h / 6.0) * (a + 2.0 * b + 2.0 * c + d)
        for y, a, b, c, d in zip((X, V, B), k1, k2, k3, k4)
    )


def _guard(X, V, B, t, h):
    if not np.isfinite(X.sum() + V.sum() + B.sum()):
        raise IntegrationError(f"non-finite state after step to t={t}; reduce the step size (h={h})")
    if np.any(B <= 0):
        raise IntegrationError(
            f"coldness became non-positive at t={t}; reduce the step size (h={h})"
        )


def step_rk4(s: EnsembleState, m: ModelSpec, h: float) -> EnsembleState:
    """One classical fourth-order Runge-Kutta step of size ``h``."""
    if not h > 0:
        raise DomainError(f"step size must be > 0, got {h}")
    _check_model(s.X, m)
    X, V, B = _rk4_arrays(s.X, s.V, s.B, m, h)
    _guard(X, V, B, s.t + h, h)
    return EnsembleState._trusted(s.t + h, X, V, B)


@dataclass
class Trajectory:
    """Sampled states of one run. Diagnostics are always recomputed from the states."""

    samples: list[EnsembleState]
    h: float | None = None
    mode: str = "continuous"
    h_certified: bool | None = None
    error: str | None = None

    def __post_init__(self):
        times = [s.t for s in self.samples]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise DomainError("trajectory times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[EnsembleState]:
        return iter(self.samples)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def final(self) -> EnsembleState:
        return self.samples[-1]

    def diagnostics(self) -> np.ndarray:
        """(len, 5) array of DX, DV, DB, DTheta, Ru per sample."""
        out = []
        for lo in range(0, len(self.samples), _DIAG_CHUNK):
            chunk = self.samples[lo : lo + _DIAG_CHUNK]
            out.append(
                _batch_diameters(
                    np.stack([s.X for s in chunk]),
                    np.stack([s.V for s in chunk]),
                    np.stack([s.B for s in chunk]),
                )
            )
        return np.concatenate(out) if out else np.empty((0, 5))

    def column(self, name: str) -> np.ndarray:
        return self.diagnostics()[:, Diameters._fields.index(name)]


def _sample_index_set(n_steps: int, sample_every: int) -> set[int]:
    picks = set(range(0, n_steps + 1, sample_every))
    picks.add(n_steps)
    return picks


def simulate_continuous(
    s0: EnsembleState, m: ModelSpec, h: float, t_end: float, sample_every: int = 1
) -> Trajectory:
    """Fixed-step RK4 from ``s0.t`` to ``t_end``; the last step is shortened to land on ``t_end``.

    Samples are kept every ``sample_every`` steps plus the final state. If the
    positivity guard trips, the partial trajectory is returned with ``error`` set.
    """
    if not h > 0:
        raise DomainError(f"step size must be > 0, got {h}")
    if t_end < s0.t:
        raise DomainError(f"t_end={t_end} precedes the initial time {s0.t}")
    if sample_every < 1:
        raise DomainError("sample_every must be >= 1")
    _check_model(s0.X, m)
    span = t_end - s0.t
    n_steps = max(0, math.ceil(span / h - 1e-9))
    keep = _sample_index_set(n_steps, sample_every)
    samples = [s0]
    X, V, B = s0.X, s0.V, s0.B
    error = None
    for k in range(1, n_steps + 1):
        t_prev = s0.t + (k - 1) * h
        t = t_end if k == n_steps else s0.t + k * h
        step = t - t_prev
        X, V, B = _rk4_arrays(X, V, B, m, step)
        try:
            _guard(X, V, B, t, h)
        except IntegrationError as exc:
            error = str(exc)
            break
        if k in keep:
            samples.append(EnsembleState._trusted(t, X, V, B))
    return Trajectory(samples, h=h, mode="continuous", error=error)


def discrete_step_bound(kappa1: float, kappa2: float, beta_L: float, beta_U: float) -> tuple[float, float]:
    """(coldness bound, velocity bound) on h under which the discrete estimates hold."""
    return 1.0 / (kappa2 * beta_U**2), beta_L / (2.0 * kappa1 * beta_U**2)


def _discrete_arrays(X, V, B, m: ModelSpec, h: float):
    n = B.shape[0]
    w_phi, w_zeta = _weights(X, m)
    U = B[:, None] * V
    V_new = V + (h / n) * (w_phi[:, :, None] * (U[None, :, :] - U[:, None, :])).sum(axis=1)
    recip = 1.0 / B + (h / n) * (w_zeta * (B[:, None] - B[None, :])).sum(axis=1)
    return X + h * V, V_new, recip


def step_discrete(s: EnsembleState, m: ModelSpec, h: float) -> EnsembleState:
    """One step of the discrete model; time advances by ``h``."""
    if not h > 0:
        raise DomainError(f"step size must be > 0, got {h}")
    _check_model(s.X, m)
    X, V, recip = _discrete_arrays(s.X, s.V, s.B, m, h)
    if np.any(recip <= 0) or not np.all(np.isfinite(recip)):
        raise IntegrationError(f"temperature update became non-positive at t={s.t + h}; reduce h={h}")
    return EnsembleState(s.t + h, X, V, 1.0 / recip)


def is_h_certified(s0: EnsembleState, m: ModelSpec, h: float) -> bool:
    """Whether ``h`` satisfies both discrete step-size bounds for the data ``s0``."""
    bound_b, bound_v = discrete_step_bound(m.kappa1, m.kappa2, s0.B.min(), s0.B.max())
    return 0 < h <= min(bound_b, bound_v)


def simulate_discrete(
    s0: EnsembleState, m: ModelSpec, h: float, n_steps: int, sample_every: int = 1
) -> Trajectory:
    """Iterate the discrete model ``n_steps`` times; sample times are s0.t + k h."""
    if not h > 0:
        raise DomainError(f"step size must be > 0, got {h}")
    if n_steps < 0 or sample_every < 1:
        raise DomainError("need n_steps >= 0 and sample_every >= 1")
    _check_model(s0.X, m)
    keep = _sample_index_set(n_steps, sample_every)
    samples = [s0]
    X, V, B = s0.X, s0.V, s0.B
    error = None
    for k in range(1, n_steps + 1):
        X, V, recip = _discrete_arrays(X, V, B, m, h)
        t = s0.t + k * h
        # one reduction covers NaN, inf and sign in the common case
        if not (recip.min() > 0 and np.isfinite(recip.sum() + X.sum() + V.sum())):
            if not (recip.min() > 0 and np.isfinite(recip.sum())):
                error = f"temperature update became non-positive at t={t}; reduce h={h}"
            else:
                error = f"non-finite state at t={t}"
            break
        B = 1.0 / recip
        if k in keep:
            samples.append(EnsembleState._trusted(t, X, V, B))
    return Trajectory(
        samples, h=h, mode="discrete", h_certified=is_h_certified(s0, m, h), error=error
    )


_DIAG_CHUNK = 2048


def _batch_diameters(X: np.ndarray, V: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Diameters of a stack of states: X, V are (T, N, d), B is (T, N)."""

    def spread(Z):
        diff = Z[:, :, None, :] - Z[:, None, :, :]
        return np.sqrt((diff * diff).sum(axis=3)).max(axis=(1, 2))

    theta = 1.0 / B
    U = B[:, :, None] * V
    return np.column_stack(
        [
            spread(X),
            spread(V),
            B.max(axis=1) - B.min(axis=1),
            theta.max(axis=1) - theta.min(axis=1),
            np.sqrt((U * U).sum(axis=2)).max(axis=1),
        ]
    )


def diameters(s: EnsembleState) -> Diameters:
    """Position/velocity diameters, coldness/temperature spreads and max |beta_i v_i|."""
    row = _batch_diameters(s.X[None], s.V[None], s.B[None])[0]
    return Diameters(*(float(v) for v in row))


def _laplacian(w: np.ndarray) -> np.ndarray:
    return np.diag(w.sum(axis=1)) - w


def coldness_generator(s: EnsembleState, m: ModelSpec) -> np.ndarray:
    """-(1/N) diag(B)^2 L with L the zeta-weighted Laplacian; dB/dt = G B."""
    _check_model(s.X, m)
    _, w_zeta = _weights(s.X, m)
    return -(s.B**2)[:, None] * _laplacian(w_zeta) / s.n


class VelocityGenerator(NamedTuple):
    gen: np.ndarray
    lambda_residual: np.ndarray


def velocity_generator(s: EnsembleState, m: ModelSpec) -> VelocityGenerator:
    """Split dV/dt = gen V + residual with gen = -(1/N) diag(B) L_phi.

    The residual is (1/N) C V where C_ij = chi_ij phi_ij (beta_j - beta_i).
    """
    _check_model(s.X, m)
    w_phi, _ = _weights(s.X, m)
    gen = -s.B[:, None] * _laplacian(w_phi) / s.n
    coupling = w_phi * (s.B[None, :] - s.B[:, None])
    return VelocityGenerator(gen, coupling @ s.V / s.n)


@dataclass
class TransitionWindow:
    """Transition matrices of the linear coldness / velocity flows over one window."""

    t0: float
    t1: float
    coldness: np.ndarray
    velocity: np.ndarray
    max_DX: float


def transition_windows(
    s0: EnsembleState, m: ModelSpec, h: float, window_steps: int, n_windows: int
) -> tuple[list[TransitionWindow], EnsembleState]:
    """Integrate the flow jointly with the state-transition matrices of its generators.

    The nonlinear state and both matrices Phi' = G(t) Phi are advanced by the
    same RK4 stages, so the generators are evaluated at the exact stage states.
    Each window spans ``window_steps`` steps of size ``h`` and starts from Phi = I.
    """
    if not h > 0 or window_steps < 1 or n_windows < 0:
        raise DomainError("need h > 0, window_steps >= 1, n_windows >= 0")
    _check_model(s0.X, m)
    n = s0.n

    def field(X, V, B, PB, PV):
        dX, dV, dB = _field(X, V, B, m)
        w_phi, w_zeta = _weights(X, m)
        gB = -(B**2)[:, None] * _laplacian(w_zeta) / n
        gV = -B[:, None] * _laplacian(w_phi) / n
        return dX, dV, dB, gB @ PB, gV @ PV

    X, V, B = (np.array(a) for a in (s0.X, s0.V, s0.B))
    t = s0.t
    windows = []
    for w in range(n_windows):
        PB, PV = np.eye(n), np.eye(n)
        t_start = s0.t + w * window_steps * h
        max_dx = float(_pairwise_distance(X).max())
        for k in range(window_steps):
            y = (X, V, B, PB, PV)
            k1 = field(*y)
            k2 = field(*(a + 0.5 * h * b for a, b in zip(y, k1)))
            k3 = field(*(a + 0.5 * h * b for a, b in zip(y, k2)))
            k4 = field(*(a + h * b for a, b in zip(y, k3)))
            X, V, B, PB, PV = (
                a + (h / 6.0) * (p + 2.0 * q + 2.0 * r + s)
                for a, p, q, r, s in zip(y, k1, k2, k3, k4)
            )
            t = s0.t + (w * window_steps + k + 1) * h
            _guard(X, V, B, t, h)
            max_dx = max(max_dx, float(_pairwise_distance(X).max()))
        windows.append(TransitionWindow(t_start, t, PB, PV, max_dx))
    return windows, EnsembleState(t, X, V, B)
