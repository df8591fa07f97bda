"""Nonnegative / stochastic matrix machinery and state-transition matrices.

Matrices are plain ``numpy.ndarray`` objects. Generators passed to the
transition-matrix routines are callables ``t -> (n, n) array``.
"""
from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np
from numpy.polynomial import chebyshev as cheb

from . import graph as graphmod
from .errors import DomainError, NumericError

Generator = Callable[[float], np.ndarray]

STOCHASTIC_INPUT_TOL = 1e-12
STOCHASTIC_COMPUTED_TOL = 1e-10


def _square_nonnegative(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise DomainError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix entries must be finite")
    if np.any(a < 0):
        raise DomainError("matrix must be entrywise nonnegative")
    return a


def ergodicity_coefficient(a) -> float:
    """min over row pairs (i, j) of sum_k min(a_ik, a_jk)."""
    a = _square_nonnegative(a)
    pair_overlap = np.minimum(a[:, None, :], a[None, :, :]).sum(axis=2)
    return float(pair_overlap.min())


def is_scrambling(a) -> bool:
    return ergodicity_coefficient(a) > 0.0


def min_positive_entry(a) -> float:
    a = np.asarray(a, dtype=float)
    positive = a[a > 0]
    if positive.size == 0:
        raise DomainError("matrix has no strictly positive entry")
    return float(positive.min())


def is_stochastic(a, tol: float = STOCHASTIC_INPUT_TOL) -> bool:
    a = np.asarray(a, dtype=float)
    return bool(np.all(a >= 0) and np.all(np.abs(a.sum(axis=1) - 1.0) <= tol))


def row_diameter(z) -> float:
    """Largest Euclidean distance between two rows of ``z``."""
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    diff = z[:, None, :] - z[None, :, :]
    return float(np.sqrt((diff**2).sum(axis=2)).max())


class Lemma21Check(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def lemma21_bound_check(a, gamma: int | None = None) -> Lemma21Check:
    """Compare mu(a^gamma) with (smallest positive entry of a)^gamma.

    ``gamma`` defaults to the smallest spanning-tree depth of the support
    digraph of ``a``.
    """
    a = _square_nonnegative(a)
    if np.any(np.diag(a) <= 0):
        raise DomainError("all diagonal entries must be strictly positive")
    support = graphmod.from_adjacency(a)
    if not graphmod.has_spanning_tree(support):
        raise DomainError("support digraph of the matrix has no spanning tree")
    if gamma is None:
        gamma = graphmod.smallest_depth(support)
    power = np.linalg.matrix_power(a, gamma)
    lhs = ergodicity_coefficient(power)
    # same repeated-squaring sequence as the left side, so tight cases
    # (a lone self-loop carrying the minimum) compare equal bit for bit
    rhs = float(np.linalg.matrix_power(np.array([[min_positive_entry(a)]]), gamma)[0, 0])
    return Lemma21Check(lhs, rhs, lhs >= rhs)


class ContractionStep(NamedTuple):
    w: np.ndarray
    diam_w: float
    bound: float


def contraction_step(a, z, b) -> ContractionStep:
    """W = A Z + B together with the diameter-contraction bound for stochastic A."""
    a = _square_nonnegative(a)
    if not is_stochastic(a):
        raise DomainError("matrix is not stochastic (row sums must equal 1 within 1e-12)")
    z = np.asarray(z, dtype=float)
    b = np.asarray(b, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    if b.ndim == 1:
        b = b[:, None]
    if z.shape[0] != a.shape[0] or b.shape != z.shape:
        raise DomainError(f"shape mismatch: A {a.shape}, Z {z.shape}, B {b.shape}")
    w = a @ z + b
    bound = (1.0 - ergodicity_coefficient(a)) * row_diameter(z) + math.sqrt(2.0) * float(
        np.linalg.norm(b)
    )
    return ContractionStep(w, row_diameter(w), bound)


def _eval_generator(gen: Generator, t: float) -> np.ndarray:
    g = np.asarray(gen(t), dtype=float)
    if not np.all(np.isfinite(g)):
        raise NumericError(f"generator returned non-finite entries at t={t}")
    return g


def transition_matrix_ode(gen: Generator, t0: float, t1: float, steps: int) -> np.ndarray:
    """Phi(t1, t0) by classical RK4 on dPhi/dt = gen(t) Phi, Phi(t0, t0) = I."""
    if t1 < t0:
        raise DomainError(f"need t1 >= t0, got t0={t0}, t1={t1}")
    if steps < 1:
        raise DomainError("steps must be >= 1")
    n = _eval_generator(gen, t0).shape[0]
    phi = np.eye(n)
    if t1 == t0:
        return phi
    h = (t1 - t0) / steps
    for k in range(steps):
        t = t0 + k * h
        k1 = _eval_generator(gen, t) @ phi
        k2 = _eval_generator(gen, t + 0.5 * h) @ (phi + 0.5 * h * k1)
        k3 = _eval_generator(gen, t + 0.5 * h) @ (phi + 0.5 * h * k2)
        k4 = _eval_generator(gen, t + h) @ (phi + h * k3)
        phi = phi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return phi


def _chebyshev_integration(nodes: int):
    """Chebyshev points on [-1, 1] and the matrix mapping samples to cumulative integrals."""
    x = np.cos(np.pi * np.arange(nodes) / (nodes - 1))[::-1]
    vander = cheb.chebvander(x, nodes - 1)
    # column m: integral from -1 to x of T_m
    integrated = np.empty_like(vander)
    for m in range(nodes):
        coeffs = np.zeros(nodes)
        coeffs[m] = 1.0
        integrated[:, m] = cheb.chebval(x, cheb.chebint(coeffs, lbnd=-1.0))
    return x, integrated @ np.linalg.inv(vander)


def peano_baker(
    gen: Generator, t0: float, t1: float, order: int = 12, quad_steps: int = 64
) -> np.ndarray:
    """Truncated Peano-Baker series I + sum_{k=1..order} P_k(t1).

    P_k(t) = int_{t0}^{t} gen(s) P_{k-1}(s) ds, with every level integrated by
    Chebyshev spectral quadrature on ``quad_steps`` nodes of [t0, t1].
    """
    if order < 0:
        raise DomainError("order must be >= 0")
    if t1 < t0:
        raise DomainError(f"need t1 >= t0, got t0={t0}, t1={t1}")
    if quad_steps < 2:
        raise DomainError("quad_steps must be >= 2")
    n = _eval_generator(gen, t0).shape[0]
    if order == 0 or t1 == t0:
        return np.eye(n)
    x, integ = _chebyshev_integration(quad_steps)
    half = 0.5 * (t1 - t0)
    times = t0 + half * (x + 1.0)
    gens = np.stack([_eval_generator(gen, t) for t in times])
    term = np.broadcast_to(np.eye(n), (quad_steps, n, n))
    total = np.eye(n)
    for _ in range(order):
        integrand = gens @ term
        term = half * np.einsum("kj,jab->kab", integ, integrand)
        total = total + term[-1]
    return total


class ShiftCheck(NamedTuple):
    lhs: np.ndarray
    rhs: np.ndarray
    max_abs_diff: float


def shifted_transition_check(gen: Generator, c: float, t0: float, t1: float, steps: int) -> ShiftCheck:
    """Compare Phi for ``gen`` with exp(-c dt) times Psi for ``gen + c I``."""
    phi = transition_matrix_ode(gen, t0, t1, steps)
    n = phi.shape[0]

    def shifted(t):
        return _eval_generator(gen, t) + c * np.eye(n)

    psi = transition_matrix_ode(shifted, t0, t1, steps)
    rhs = math.exp(-c * (t1 - t0)) * psi
    return ShiftCheck(phi, rhs, float(np.abs(phi - rhs).max()))
