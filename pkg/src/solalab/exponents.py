"""Regularity exponents for p-Laplace type equations with measure data.

All quantities are closed-form; ranges are validated on half-open
intervals so that endpoint requests (e.g. ``q = b``) raise instead of
returning a meaningless or infinite value.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class ExponentDomainError(ValueError):
    """Parameters outside the domain where a formula is defined."""


class ExponentRangeError(ValueError):
    """Integrability exponent outside the admissible half-open range."""


class Regime(enum.Enum):
    CAPACITARY = "capacitary"
    SUPER_CAPACITARY = "super-capacitary"
    DUAL = "dual"


@dataclass(frozen=True)
class ExponentContext:
    n: int
    p: float
    theta: float
    q: float = 1.0
    s: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ExponentDomainError(f"n must be an integer >= 2, got {self.n}")
        if self.p < 2:
            raise ExponentDomainError(f"p must be >= 2, got {self.p}")
        if not 0 <= self.theta <= self.n:
            raise ExponentDomainError(f"theta must lie in [0, n], got {self.theta}")
        if self.q < 1:
            raise ExponentDomainError(f"q must be >= 1, got {self.q}")
        if self.s < 0:
            raise ExponentDomainError(f"s must be >= 0, got {self.s}")

    @property
    def regime(self) -> Regime:
        return classify_regime(self)


def _check_np(n, p):
    if n < 2:
        raise ExponentDomainError(f"n must be >= 2, got {n}")
    if p < 2:
        raise ExponentDomainError(f"p must be >= 2, got {p}")


def exponent_b(n: float, p: float) -> float:
    """Marcinkiewicz exponent ``n(p-1)/(n-1)`` of the gradient."""
    _check_np(n, p)
    return n * (p - 1) / (n - 1)


def exponent_m(p: float, theta: float) -> float:
    """Morrey analogue of :func:`exponent_b`, ``theta(p-1)/(theta-1)``."""
    if p < 2:
        raise ExponentDomainError(f"p must be >= 2, got {p}")
    if theta <= 1:
        raise ExponentDomainError(f"theta must be > 1, got {theta}")
    return theta * (p - 1) / (theta - 1)


def sigma_q(n: float, p: float, q: float) -> float:
    """Differentiability gain ``n - q(n-1)/(p-1)`` for ``p-1 <= q < b``."""
    b = exponent_b(n, p)
    if not p - 1 <= q < b:
        raise ExponentRangeError(f"q={q} outside [p-1, b) = [{p - 1}, {b})")
    return n - q * (n - 1) / (p - 1)


def sigma_q_theta(p: float, theta: float, q: float) -> float:
    """Same as :func:`sigma_q` with the density exponent in place of n."""
    m = exponent_m(p, theta)
    if not p - 1 <= q < m:
        raise ExponentRangeError(f"q={q} outside [p-1, m) = [{p - 1}, {m})")
    return theta - q * (theta - 1) / (p - 1)


def delta_q(p: float, theta: float, q: float) -> float:
    """Morrey decay exponent ``q(theta-1)/(p-1)``; equals ``q*theta/m``."""
    if p < 2:
        raise ExponentDomainError(f"p must be >= 2, got {p}")
    if q < 1:
        raise ExponentDomainError(f"q must be >= 1, got {q}")
    if theta < p:
        raise ExponentDomainError(f"theta must be >= p, got theta={theta}, p={p}")
    return q * (theta - 1) / (p - 1)


def sigma_capacitary(p: float, theta: float) -> float:
    """Capacitary differentiability ``(p-theta)/(p-1)``, valid for theta < p."""
    if p < 2:
        raise ExponentDomainError(f"p must be >= 2, got {p}")
    if not 0 <= theta < p:
        raise ExponentRangeError(f"theta={theta} outside [0, p) = [0, {p})")
    return (p - theta) / (p - 1)


def gamma_iteration(delta: float, t: float) -> float:
    """One step ``delta/(delta+1-t)`` of the differentiability bootstrap.

    ``t = delta`` is accepted since it is the fixed point.
    """
    if not 0 < delta <= 1:
        raise ExponentDomainError(f"delta must lie in (0, 1], got {delta}")
    if not 0 <= t <= delta:
        raise ExponentDomainError(f"t must lie in [0, delta], got t={t}")
    return delta / (delta + 1 - t)


@dataclass
class IterationState:
    delta: float
    t: float
    sequence: list[float] = field(default_factory=list)
    s_sequence: list[float] = field(default_factory=list)


def iterate_to_delta(delta: float, k_max: int) -> IterationState:
    """Build the paired sequences ``s_k < t_k`` increasing to ``delta``.

    Starts from ``s_1 = delta/(4(delta+1))``, ``t_1 = 2 s_1`` and applies
    ``s_{k+1} = gamma(s_k)``, ``t_{k+1} = (gamma(s_k) + gamma(t_k))/2``.
    Iteration stops early once a further step would no longer be
    representable as a strict increase in double precision.
    """
    if k_max < 1:
        raise ExponentDomainError(f"k_max must be >= 1, got {k_max}")
    if not 0 < delta <= 1:
        raise ExponentDomainError(f"delta must lie in (0, 1], got {delta}")
    s = delta / (4 * (delta + 1))
    t = 2 * s
    state = IterationState(delta=delta, t=t, sequence=[t], s_sequence=[s])
    for _ in range(k_max - 1):
        s_next = gamma_iteration(delta, s)
        t_next = 0.5 * (gamma_iteration(delta, s) + gamma_iteration(delta, t))
        if not (t < t_next < delta and s < s_next):
            break
        s, t = s_next, t_next
        state.sequence.append(t)
        state.s_sequence.append(s)
    state.t = t
    return state


def sobolev_embedding_exponent(n: float, alpha: float, q: float) -> float:
    """Fractional Sobolev exponent ``nq/(n - alpha q)``."""
    if alpha * q >= n:
        raise ExponentRangeError(f"alpha*q={alpha * q} must be < n={n}")
    return n * q / (n - alpha * q)


def classify_regime(ctx: ExponentContext) -> Regime:
    if ctx.p > ctx.n:
        return Regime.DUAL
    if ctx.theta >= ctx.p:
        return Regime.SUPER_CAPACITARY
    return Regime.CAPACITARY


def exponent_table(ctx: ExponentContext) -> list[tuple[str, float | str]]:
    """All exponents defined for ``ctx``; undefined entries are reported as text."""
    n, p, theta, q = ctx.n, ctx.p, ctx.theta, ctx.q

    def attempt(fn, *args):
        try:
            return fn(*args)
        except ValueError as exc:
            return f"undefined ({exc})"

    rows: list[tuple[str, float | str]] = [
        ("b", attempt(exponent_b, n, p)),
        ("m", attempt(exponent_m, p, theta)),
        ("sigma(q)", attempt(sigma_q, n, p, q)),
        ("sigma(q,theta)", attempt(sigma_q_theta, p, theta, q)),
        ("delta(q)", attempt(delta_q, p, theta, q)),
        ("sigma(p)", attempt(sigma_capacitary, p, theta)),
        ("regime", classify_regime(ctx).value),
    ]
    return rows
