"""Communication weights: bounded, positive, nonincreasing, Lipschitz on [0, inf)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError

FAMILIES = ("constant", "algebraic", "exponential", "tabulated")
# floor for decaying families so far-field weights never underflow to zero
FLOOR = np.finfo(float).tiny


@dataclass(frozen=True)
class CommKernel:
    """A communication weight ``r -> w(r)`` with peak value ``kappa = w(0)``.

    For the tabulated family ``kappa`` is ignored and the peak is the value at
    ``r = 0`` of the piecewise-linear table (constant beyond both ends).
    """

    family: str
    kappa: float = 1.0
    s: float = 0.0
    ell: float = 1.0
    table: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        if self.family == "tabulated":
            self._check_table()
            object.__setattr__(self, "kappa", float(np.interp(0.0, *self._breakpoints())))
            return
        if not (np.isfinite(self.kappa) and self.kappa > 0):
            raise DomainError(f"kappa must be finite and > 0, got {self.kappa}")
        if self.family == "algebraic" and not (np.isfinite(self.s) and self.s >= 0):
            raise DomainError(f"algebraic exponent must be >= 0, got {self.s}")
        if self.family == "exponential" and not (np.isfinite(self.ell) and self.ell > 0):
            raise DomainError(f"exponential length must be > 0, got {self.ell}")

    def _check_table(self):
        table = tuple((float(r), float(v)) for r, v in self.table)
        object.__setattr__(self, "table", table)
        if not table:
            raise DomainError("tabulated kernel needs at least one breakpoint")
        r, v = self._breakpoints()
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(v))):
            raise DomainError("tabulated breakpoints must be finite")
        if r[0] < 0 or np.any(np.diff(r) <= 0):
            raise DomainError("tabulated radii must be >= 0 and strictly increasing")
        if np.any(v <= 0):
            raise DomainError("tabulated values must be strictly positive")
        if np.any(np.diff(v) > 0):
            raise DomainError("tabulated values must be nonincreasing")

    def _breakpoints(self):
        arr = np.asarray(self.table, dtype=float)
        return arr[:, 0], arr[:, 1]

    def __call__(self, r):
        """Vectorised evaluation without argument validation (internal hot path)."""
        r = np.asarray(r, dtype=float)
        if self.family == "constant":
            return np.full_like(r, self.kappa)
        if self.family == "algebraic":
            return np.maximum(self.kappa / (1.0 + r * r) ** self.s, FLOOR)
        if self.family == "exponential":
            return np.maximum(self.kappa * np.exp(-r / self.ell), FLOOR)
        return np.interp(r, *self._breakpoints())

    def to_dict(self) -> dict:
        out: dict = {"family": self.family}
        if self.family == "tabulated":
            out["table"] = [list(p) for p in self.table]
            return out
        out["kappa"] = self.kappa
        if self.family == "algebraic":
            out["s"] = self.s
        elif self.family == "exponential":
            out["ell"] = self.ell
        return out


def eval(k: CommKernel, r: float) -> float:  # noqa: A001 - mirrors the operation name
    if not np.isfinite(r) or r < 0:
        raise DomainError(f"kernel argument must be finite and >= 0, got {r}")
    return float(k(r))


def kappa(k: CommKernel) -> float:
    return float(k(0.0))


def constant(kappa: float = 1.0) -> CommKernel:
    return CommKernel("constant", kappa=kappa)


def algebraic(kappa: float = 1.0, s: float = 0.5) -> CommKernel:
    return CommKernel("algebraic", kappa=kappa, s=s)


def exponential(kappa: float = 1.0, ell: float = 1.0) -> CommKernel:
    return CommKernel("exponential", kappa=kappa, ell=ell)


def tabulated(table: Sequence[Sequence[float]]) -> CommKernel:
    return CommKernel("tabulated", table=tuple(tuple(p) for p in table))


def from_dict(spec: dict) -> CommKernel:
    family = spec.get("family")
    if family == "tabulated":
        return tabulated(spec.get("table", ()))
    kwargs = {key: float(spec[key]) for key in ("kappa", "s", "ell") if key in spec}
    return CommKernel(family, **kwargs)
