"""The gradient transform ``V(z) = (s^2+|z|^2)^((p-2)/4) z`` and its inverse.

Vectors are stored along the last axis, so every function accepts a
single vector or a stack of shape ``(..., n)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# relative slack for float comparisons in the exact-constant checks
_RTOL = 1e-12


@dataclass(frozen=True)
class VParams:
    p: float
    s: float = 0.0

    def __post_init__(self):
        if self.p < 2:
            raise ValueError(f"p must be >= 2, got {self.p}")
        if self.s < 0:
            raise ValueError(f"s must be >= 0, got {self.s}")


def _sqnorm(z):
    return np.sum(np.square(z), axis=-1)


def v_apply(params: VParams, z):
    z = np.asarray(z, dtype=float)
    factor = (params.s**2 + _sqnorm(z)) ** ((params.p - 2) / 4)
    return factor[..., None] * z


def model_field(params: VParams, z):
    """The vector field ``a(z) = (s^2+|z|^2)^((p-2)/2) z``."""
    z = np.asarray(z, dtype=float)
    factor = (params.s**2 + _sqnorm(z)) ** ((params.p - 2) / 2)
    return factor[..., None] * z


def v_magnitude_inverse(params: VParams, w, tol: float = 1e-12, max_iter: int = 100):
    """Solve ``(s^2+r^2)^((p-2)/4) r = w`` for ``r >= 0``, elementwise.

    Newton on ``F(rho) = log phi(e^rho) - log w``; ``F`` is convex, increasing
    and has slope in ``[1, p/2]``, which gives a bracket of width ``|F|``
    around any starting point. Steps leaving the bracket fall back to bisection.
    """
    w = np.asarray(w, dtype=float)
    out = np.zeros_like(w)
    pos = w > 0
    if not np.any(pos):
        return out
    p, s = params.p, params.s
    if p == 2:
        out[pos] = w[pos]
        return out
    logw = np.log(w[pos])
    ex = (p - 2) / 4

    def F(rho):
        return ex * np.logaddexp(2 * np.log(s) if s > 0 else -np.inf, 2 * rho) + rho - logw

    def dF(rho):
        if s > 0:
            frac = 1.0 / (1.0 + np.exp(2 * (np.log(s) - rho)))
        else:
            frac = np.ones_like(rho)
        return 1.0 + 2 * ex * frac

    rho = logw / (1 + 2 * ex) if s == 0 else logw.copy()
    f0 = F(rho)
    lo = rho - np.abs(f0) - 1e-300
    hi = rho + np.abs(f0) + 1e-300
    for _ in range(max_iter):
        f = F(rho)
        if np.all(np.abs(f) <= tol):
            break
        lo = np.where(f < 0, rho, lo)
        hi = np.where(f > 0, rho, hi)
        step = rho - f / dF(rho)
        outside = (step <= lo) | (step >= hi)
        rho = np.where(outside, 0.5 * (lo + hi), step)
    out[pos] = np.exp(rho)
    return out


def v_inverse(params: VParams, w):
    """Inverse of :func:`v_apply`: same direction as ``w``, magnitude by root finding."""
    w = np.asarray(w, dtype=float)
    norm = np.sqrt(_sqnorm(w))
    r = v_magnitude_inverse(params, norm)
    scale = np.divide(r, norm, out=np.zeros_like(norm), where=norm > 0)
    return scale[..., None] * w


def check_elemV(params: VParams, z):
    """``|z|^p <= |V(z)|^2 <= 2(s^p + |z|^p)``, elementwise bool."""
    z = np.asarray(z, dtype=float)
    r = np.sqrt(_sqnorm(z))
    v2 = _sqnorm(v_apply(params, z))
    lower = r**params.p
    upper = 2 * (params.s**params.p + r**params.p)
    return (lower <= v2 * (1 + _RTOL)) & (v2 <= upper * (1 + _RTOL))


def check_two_sided(params: VParams, z1, z2):
    """Ratio ``|V(z2)-V(z1)|^2 / (|z2-z1|^2 (s^2+|z1|^2+|z2|^2)^((p-2)/2))``.

    The ratio is bounded above and below by constants depending only on
    ``(n, p)``; callers inspect the spread of the returned values.
    """
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    dv = _sqnorm(v_apply(params, z2) - v_apply(params, z1))
    dz = _sqnorm(z2 - z1)
    if np.any(dz == 0):
        raise ValueError("check_two_sided requires z1 != z2")
    weight = (params.s**2 + _sqnorm(z1) + _sqnorm(z2)) ** ((params.p - 2) / 2)
    return dv / (dz * weight)


def monotonicity_inner(params: VParams, z1, z2):
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    return np.sum((model_field(params, z2) - model_field(params, z1)) * (z2 - z1), axis=-1)


def check_monotonicity(params: VParams, z1, z2):
    """``<a(z2)-a(z1), z2-z1> >= 0`` for the model field, elementwise bool."""
    inner = monotonicity_inner(params, z1, z2)
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    scale = np.sqrt(_sqnorm(model_field(params, z2) - model_field(params, z1)) * _sqnorm(z2 - z1))
    return inner >= -_RTOL * scale


def monotonicity_constant(params: VParams, z1, z2) -> float:
    """Largest ``kappa`` with ``<a(z2)-a(z1), z2-z1> >= kappa |z2-z1|^p`` on the sample."""
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    dz = np.sqrt(_sqnorm(z2 - z1))
    keep = dz > 0
    inner = monotonicity_inner(params, z1, z2)
    return float(np.min(inner[keep] / dz[keep] ** params.p))


def elemV_upper_constant(p: float) -> float:
    """Sharp ``C`` in ``|V(z)|^2 <= C (s^p + |z|^p)``.

    By homogeneity this is ``max_t (1+t^2)^((p-2)/2) t^2 / (1+t^p)``; it
    stays below 2 only for ``p`` up to about 5.7647.
    """
    from scipy.optimize import minimize_scalar

    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")

    def neg(lt):
        t2 = np.exp(2 * lt)
        return -((1 + t2) ** ((p - 2) / 2) * t2 / (1 + np.exp(p * lt)))

    res = minimize_scalar(neg, bounds=(-10, 10), method="bounded", options={"xatol": 1e-12})
    return float(-res.fun)
