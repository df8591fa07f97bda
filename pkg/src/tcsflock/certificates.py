"""Closed-form flocking constants, sufficient conditions and decay envelopes.

Continuous certificates are parametrised by a diameter threshold ``x_inf`` and
a window length ``delta``; discrete ones by ``x_inf``, a window of ``n0`` steps
and the time-step ``h``. Factorials and binomials are handled in log space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from . import graph as graphmod
from .dynamics import EnsembleState, ModelSpec, diameters, discrete_step_bound
from .errors import DomainError

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class CertificateInputs:
    model: ModelSpec
    DX0: float
    DV0: float
    DB0: float
    beta_L: float
    beta_U: float
    Ru0: float
    x_inf: float
    delta: float | None = None
    n0: int | None = None
    h: float | None = None
    gamma: int = field(default=-1)

    def __post_init__(self):
        if self.gamma < 0:
            object.__setattr__(self, "gamma", graphmod.smallest_depth(self.model.graph))
        if not 0 < self.beta_L <= self.beta_U:
            raise DomainError(f"need 0 < beta_L <= beta_U, got {self.beta_L}, {self.beta_U}")
        if min(self.DX0, self.DV0, self.DB0, self.Ru0) < 0:
            raise DomainError("initial diameters and R_u(0) must be >= 0")
        if not (math.isfinite(self.x_inf) and self.x_inf > 0):
            raise DomainError(f"x_inf must be finite and > 0, got {self.x_inf}")
        if self.delta is not None and not (math.isfinite(self.delta) and self.delta > 0):
            raise DomainError(f"delta must be finite and > 0, got {self.delta}")
        if self.n0 is not None:
            if int(self.n0) != self.n0 or self.n0 < self.gamma:
                raise DomainError(f"n0 must be an integer >= gamma_g={self.gamma}, got {self.n0}")
            if self.h is None or not self.h > 0:
                raise DomainError("discrete inputs need a time-step h > 0")

    @classmethod
    def from_state(
        cls,
        s0: EnsembleState,
        model: ModelSpec,
        x_inf: float,
        delta: float | None = None,
        n0: int | None = None,
        h: float | None = None,
    ) -> "CertificateInputs":
        d = diameters(s0)
        return cls(
            model=model,
            DX0=d.DX,
            DV0=d.DV,
            DB0=d.DB,
            beta_L=float(s0.B.min()),
            beta_U=float(s0.B.max()),
            Ru0=d.Ru,
            x_inf=float(x_inf),
            delta=None if delta is None else float(delta),
            n0=None if n0 is None else int(n0),
            h=None if h is None else float(h),
        )

    @property
    def n(self) -> int:
        return self.model.n

    @property
    def kappa1(self) -> float:
        return self.model.kappa1

    @property
    def kappa2(self) -> float:
        return self.model.kappa2

    @property
    def zeta_pow(self) -> float:
        """zeta(x_inf)^gamma (0^0 = 1)."""
        return float(self.model.zeta(self.x_inf)) ** self.gamma

    @property
    def phi_pow(self) -> float:
        return float(self.model.phi(self.x_inf)) ** self.gamma


def _need_delta(inp: CertificateInputs) -> float:
    if inp.delta is None:
        raise DomainError("continuous constants need delta")
    return inp.delta


def _need_discrete(inp: CertificateInputs) -> tuple[int, float]:
    if inp.n0 is None or inp.h is None:
        raise DomainError("discrete constants need n0 and h")
    return inp.n0, inp.h


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def c1(inp: CertificateInputs) -> float:
    delta = _need_delta(inp)
    g = inp.gamma
    log_c = -inp.kappa2 * inp.beta_U**2 * delta - math.lgamma(g + 1)
    if g:
        log_c += g * math.log(delta * inp.beta_L**2 / inp.n)
    return math.exp(log_c)


def c2(inp: CertificateInputs) -> float:
    delta = _need_delta(inp)
    g = inp.gamma
    log_c = -inp.kappa1 * inp.beta_U * delta - math.lgamma(g + 1)
    if g:
        log_c += g * math.log(delta * inp.beta_L / inp.n)
    return math.exp(log_c)


def _velocity_bound(Ru0: float, beta_L: float, exponent_num: float, denom: float) -> float:
    if not denom > 0:
        raise DomainError("decay rate underflowed to zero; velocity bound is undefined")
    if Ru0 == 0:
        return 0.0
    return Ru0 / beta_L * _safe_exp(exponent_num / denom)


def rv_c(inp: CertificateInputs) -> float:
    """Uniform velocity bound of the continuous flow."""
    delta = _need_delta(inp)
    num = inp.kappa2 * delta * inp.beta_U * inp.DB0
    return _velocity_bound(inp.Ru0, inp.beta_L, num, c1(inp) * inp.zeta_pow)


def _log_binomial(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _binomial_window(n0: int, g: int, base: float, weight: float) -> float:
    """C(n0, g) base^(n0 - g) weight^g, evaluated in log space."""
    if base < 0:
        raise DomainError(f"time-step too large: contraction base {base} is negative")
    if n0 > g and base == 0:
        return 0.0
    log_d = _log_binomial(n0, g)
    if n0 > g:
        log_d += (n0 - g) * math.log(base)
    if g:
        log_d += g * math.log(weight)
    return math.exp(log_d)


def d1(inp: CertificateInputs) -> float:
    n0, h = _need_discrete(inp)
    return _binomial_window(
        n0, inp.gamma, 1.0 - h * inp.kappa2 * inp.beta_U**2, h * inp.beta_L**2 / inp.n
    )


def d2(inp: CertificateInputs) -> float:
    n0, h = _need_discrete(inp)
    return _binomial_window(n0, inp.gamma, 1.0 - h * inp.kappa1 * inp.beta_U, h * inp.beta_L / inp.n)


def rv_d(inp: CertificateInputs) -> float:
    """Uniform velocity bound of the discrete flow."""
    n0, h = _need_discrete(inp)
    num = h * n0 * inp.kappa2 * inp.beta_U * inp.DB0
    return _velocity_bound(inp.Ru0, inp.beta_L, num, d1(inp) * inp.zeta_pow)


def h_bound(inp: CertificateInputs) -> float:
    """Largest certified discrete time-step for these initial data."""
    return min(discrete_step_bound(inp.kappa1, inp.kappa2, inp.beta_L, inp.beta_U))


def _flocking_lhs(DX0, DV0, DB0, window, n, kappa1, rate_b, rate_v, rv) -> float:
    """Shared form of both sufficient conditions; ``window`` is delta or h*n0."""
    if DB0 == 0:
        source = 0.0
    else:
        source = (
            SQRT2 * n * kappa1 * rv * DB0 * window**2 / min(rate_b, rate_v) ** 2
            + 2.0 * kappa1 * rv * DB0 * window**2 / rate_b
        )
    drift = 0.0 if DV0 == 0 else DV0 * window / rate_v
    return DX0 + drift + source


def theorem31_lhs(inp: CertificateInputs) -> float:
    delta = _need_delta(inp)
    return _flocking_lhs(
        inp.DX0, inp.DV0, inp.DB0, delta, inp.n, inp.kappa1,
        c1(inp) * inp.zeta_pow, c2(inp) * inp.phi_pow, rv_c(inp),
    )


def theorem41_lhs(inp: CertificateInputs) -> float:
    n0, h = _need_discrete(inp)
    return _flocking_lhs(
        inp.DX0, inp.DV0, inp.DB0, h * n0, inp.n, inp.kappa1,
        d1(inp) * inp.zeta_pow, d2(inp) * inp.phi_pow, rv_d(inp),
    )


@dataclass
class FlockingCertificate:
    mode: str
    inputs: CertificateInputs
    constants: dict
    lhs: float
    x_inf: float
    satisfied: bool
    usable: bool
    h_certified: bool | None = None
    reason: str | None = None

    @property
    def base_B(self) -> float:
        return self.constants["base_B"]

    @property
    def base_V(self) -> float:
        return self.constants["base_V"]

    @property
    def window(self) -> float:
        return self.inputs.delta if self.mode == "continuous" else self.inputs.n0

    @property
    def ratio(self) -> float:
        return self.lhs / self.x_inf

    def envelope_B(self, t):
        if self.mode == "continuous":
            return envelope_B_continuous(self.inputs, t)
        return envelope_B_discrete(self.inputs, t)

    def envelope_V(self, t):
        if self.mode == "continuous":
            return envelope_V_continuous(self.inputs, t)
        return envelope_V_discrete(self.inputs, t)

    def to_report(self) -> dict:
        """Report dictionary in the ``certify`` JSON layout."""
        c = self.constants
        v_env = {
            "base": c.get("base_V"),
            "prefactor": self.inputs.DV0,
            "window": self.window,
            "source_prefactor": c.get("source_prefactor"),
            "mixed_prefactor": c.get("C3", c.get("D3")),
            "mixed_base": c.get("mixed_base"),
        }
        report = {
            "mode": self.mode,
            "constants": {k: v for k, v in c.items() if k not in ("base_B", "base_V", "mixed_base", "source_prefactor")},
            "lhs": self.lhs,
            "x_inf": self.x_inf,
            "satisfied": self.satisfied,
            "h_certified": self.h_certified,
            "envelopes": {
                "B": {"base": c.get("base_B"), "prefactor": self.inputs.DB0, "window": self.window},
                "V": v_env,
            },
        }
        if self.reason:
            report["reason"] = self.reason
        return report


def _bases_ok(rate_b: float, rate_v: float) -> str | None:
    for name, rate in (("coldness", rate_b), ("velocity", rate_v)):
        if not 0 < rate <= 1:
            return f"{name} decay base 1 - {rate!r} lies outside [0, 1)"
    return None


def check_theorem31(inp: CertificateInputs) -> FlockingCertificate:
    delta = _need_delta(inp)
    C1, C2 = c1(inp), c2(inp)
    rate_b, rate_v = C1 * inp.zeta_pow, C2 * inp.phi_pow
    constants = {"C1": C1, "C2": C2}
    reason = _bases_ok(rate_b, rate_v)
    if reason is not None:
        constants.update(base_B=1 - rate_b, base_V=1 - rate_v)
        return FlockingCertificate("continuous", inp, constants, math.inf, inp.x_inf, False, False, None, reason)
    rv = rv_c(inp)
    constants.update(
        C3=SQRT2 * inp.n * inp.kappa1 * rv * inp.DB0 * delta,
        RV=rv,
        base_B=1 - rate_b,
        base_V=1 - rate_v,
        mixed_base=max(1 - rate_b, 1 - rate_v),
        source_prefactor=2 * delta * inp.kappa1 * rv * inp.DB0,
    )
    lhs = theorem31_lhs(inp)
    satisfied = lhs <= inp.x_inf
    return FlockingCertificate(
        "continuous", inp, constants, lhs, inp.x_inf, satisfied, True, None,
        None if satisfied else "sufficient condition not met (lhs > x_inf)",
    )


def check_theorem41(inp: CertificateInputs) -> FlockingCertificate:
    n0, h = _need_discrete(inp)
    h_ok = h <= h_bound(inp)
    try:
        D1, D2 = d1(inp), d2(inp)
    except DomainError as exc:
        return FlockingCertificate("discrete", inp, {}, math.inf, inp.x_inf, False, False, False, str(exc))
    rate_b, rate_v = D1 * inp.zeta_pow, D2 * inp.phi_pow
    constants = {"D1": D1, "D2": D2}
    reason = _bases_ok(rate_b, rate_v)
    if reason is not None:
        constants.update(base_B=1 - rate_b, base_V=1 - rate_v)
        return FlockingCertificate("discrete", inp, constants, math.inf, inp.x_inf, False, False, h_ok, reason)
    rv = rv_d(inp)
    constants.update(
        D3=SQRT2 * h * n0 * inp.n * inp.kappa1 * rv * inp.DB0,
        RV=rv,
        base_B=1 - rate_b,
        base_V=1 - rate_v,
        mixed_base=max(1 - rate_b, 1 - rate_v),
        source_prefactor=2 * h * n0 * inp.kappa1 * rv * inp.DB0,
    )
    lhs = theorem41_lhs(inp)
    satisfied = bool(lhs <= inp.x_inf and h_ok)
    if not h_ok:
        reason = f"time-step h={h} exceeds the certified bound {h_bound(inp)}"
    elif not satisfied:
        reason = "sufficient condition not met (lhs > x_inf)"
    return FlockingCertificate("discrete", inp, constants, lhs, inp.x_inf, satisfied, True, h_ok, reason)


def _periods(t, window) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("envelope time must be >= 0")
    return np.floor(t / window)


def _check_base(base: float) -> None:
    if not 0 <= base < 1:
        raise DomainError(f"decay base {base} outside [0, 1); certificate is not usable")


def _scalar(out):
    return float(out) if np.ndim(out) == 0 else out


def _velocity_envelope(m, DV0, base_v, base_b, source, mixed):
    """DV0 base_v^m + source base_b^m + mixed m max(base)^(m-1), third term 0 at m = 0."""
    top = max(base_b, base_v)
    with np.errstate(divide="ignore", invalid="ignore"):
        third = np.where(m > 0, mixed * m * top ** np.maximum(m - 1, 0), 0.0)
    return DV0 * base_v**m + source * base_b**m + third


def envelope_B_continuous(inp: CertificateInputs, t):
    base = 1 - c1(inp) * inp.zeta_pow
    _check_base(base)
    return _scalar(base ** _periods(t, _need_delta(inp)) * inp.DB0)


def envelope_V_continuous(inp: CertificateInputs, t):
    delta = _need_delta(inp)
    base_b = 1 - c1(inp) * inp.zeta_pow
    base_v = 1 - c2(inp) * inp.phi_pow
    _check_base(base_b)
    _check_base(base_v)
    rv = rv_c(inp)
    m = _periods(t, delta)
    source = 2 * delta * inp.kappa1 * rv * inp.DB0
    mixed = SQRT2 * inp.n * inp.kappa1 * rv * inp.DB0 * delta
    return _scalar(_velocity_envelope(m, inp.DV0, base_v, base_b, source, mixed))


def envelope_B_discrete(inp: CertificateInputs, t):
    n0, _ = _need_discrete(inp)
    base = 1 - d1(inp) * inp.zeta_pow
    _check_base(base)
    return _scalar(base ** _periods(t, n0) * inp.DB0)


def envelope_V_discrete(inp: CertificateInputs, t):
    n0, h = _need_discrete(inp)
    base_b = 1 - d1(inp) * inp.zeta_pow
    base_v = 1 - d2(inp) * inp.phi_pow
    _check_base(base_b)
    _check_base(base_v)
    rv = rv_d(inp)
    m = _periods(t, n0)
    source = 2 * h * n0 * inp.kappa1 * rv * inp.DB0
    mixed = SQRT2 * h * n0 * inp.n * inp.kappa1 * rv * inp.DB0
    return _scalar(_velocity_envelope(m, inp.DV0, base_v, base_b, source, mixed))


class LimitRow(NamedTuple):
    h: float
    n0: int
    lhs_discrete: float
    lhs_continuous: float
    gap: float
    skipped: bool
    note: str = ""


def window_steps(delta: float, h: float) -> int:
    """floor(delta / h), immune to the last-ulp error of an exact quotient."""
    q = delta / h
    nearest = round(q)
    return int(nearest) if abs(q - nearest) <= 1e-9 * max(1.0, q) else math.floor(q)


def continuum_limit_check(inp: CertificateInputs, h_values: Sequence[float]) -> list[LimitRow]:
    """Discrete left-hand side with n0 = floor(delta / h) against the continuous one."""
    delta = _need_delta(inp)
    lhs_c = theorem31_lhs(inp)
    rows = []
    for h in h_values:
        n0 = window_steps(delta, h)
        if n0 < inp.gamma:
            rows.append(LimitRow(h, n0, math.nan, lhs_c, math.nan, True, "n0 < gamma_g"))
            continue
        try:
            lhs_d = theorem41_lhs(replace(inp, delta=None, n0=n0, h=float(h)))
        except DomainError as exc:
            rows.append(LimitRow(h, n0, math.nan, lhs_c, math.nan, True, str(exc)))
            continue
        rows.append(LimitRow(h, n0, lhs_d, lhs_c, abs(lhs_d - lhs_c), False))
    return rows


@dataclass
class SearchResult:
    best: FlockingCertificate | None
    best_failing: FlockingCertificate | None
    evaluated: list[tuple[tuple[int, int], FlockingCertificate]]


def search_parameters(
    s0: EnsembleState,
    model: ModelSpec,
    x_inf_grid: Sequence[float],
    delta_grid: Sequence[float] | None = None,
    n0_grid: Sequence[int] | None = None,
    h: float | None = None,
) -> SearchResult:
    """Grid search over (x_inf, delta) or (x_inf, n0) for the smallest lhs / x_inf.

    Ties are broken by grid order (x_inf index first), so results are deterministic.
    """
    if (delta_grid is None) == (n0_grid is None):
        raise DomainError("give exactly one of delta_grid or n0_grid")
    if not len(x_inf_grid):
        raise DomainError("x_inf grid must be nonempty")
    second = list(delta_grid if delta_grid is not None else n0_grid)
    if not second:
        raise DomainError("window grid must be nonempty")
    gamma = graphmod.smallest_depth(model.graph)
    evaluated = []
    for i, x_inf in enumerate(x_inf_grid):
        for j, w in enumerate(second):
            if delta_grid is not None:
                inp = CertificateInputs.from_state(s0, model, x_inf, delta=w)
                cert = check_theorem31(inp)
            else:
                if w < gamma:
                    continue
                inp = CertificateInputs.from_state(s0, model, x_inf, n0=int(w), h=h)
                cert = check_theorem41(inp)
            evaluated.append(((i, j), cert))
    ok = [c for _, c in evaluated if c.satisfied]
    bad = [c for _, c in evaluated if not c.satisfied]
    best = min(ok, key=lambda c: c.ratio) if ok else None
    best_failing = min(bad, key=lambda c: c.ratio) if bad else None
    return SearchResult(best, best_failing, evaluated)
