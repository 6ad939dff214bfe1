"""Convex energy minimization for ``-div(c (s^2+|Du|^2)^((p-2)/2) Du) = f``.

The discrete energy lives on the Kuhn triangulation of the lattice (each
cell split into ``dim!`` simplices along monotone lattice paths), so that
gradients are exact for piecewise-linear interpolants and the ``p = 2``
operator reduces to the standard ``2*dim+1``-point Laplacian::

    J(u) = sum_T |T| c_T (s_k^2 + |Du_T|^2)^(p/2) / p  -  sum_x f(x) u(x) h^n

Nodes in the outermost mask layer carry Dirichlet values. ``J`` is
minimized with damped Newton steps and Armijo backtracking.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, sparse
from scipy.sparse import linalg as splinalg

from .grid import Ball, Grid, GridFunction, gradient, interior_nodes
from .measures import DiscreteMeasure, mollify

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Minimization failed to reach the requested tolerance."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass(eq=False)
class ProblemSpec:
    p: float
    grid: Grid
    measure: DiscreteMeasure | None = None
    s: float = 0.0
    coefficient: GridFunction | None = None
    nu: float = 1.0
    L: float = 1.0

    def __post_init__(self):
        if self.p < 2:
            raise ValueError("only p >= 2 is supported")
        if self.s < 0:
            raise ValueError("s must be >= 0")
        if not 0 < self.nu <= self.L:
            raise ValueError("need 0 < nu <= L")
        if self.coefficient is not None:
            c = self.coefficient.values[self.grid.mask]
            if c.min() < self.nu * (1 - 1e-12) or c.max() > self.L * (1 + 1e-12):
                raise ValueError("coefficient leaves [nu, L] on the mask")

    def coefficient_values(self) -> np.ndarray:
        if self.coefficient is None:
            return np.where(self.grid.mask, self.nu, 0.0)
        return self.coefficient.values

    def regularization(self, k) -> float:
        """``s_k = s + 1/k``; ``k=None`` keeps ``s`` unchanged."""
        return self.s if k is None else self.s + 1.0 / k


@dataclass
class SolveReport:
    iterations: int = 0
    final_energy: float = math.nan
    gradient_residual: float = math.inf
    line_search_failures: int = 0
    tolerance: float = 0.0
    converged: bool = False
    energies: list[float] = field(default_factory=list)

    def csv_rows(self):
        return [
            ["iterations", self.iterations],
            ["final_energy", repr(self.final_energy)],
            ["gradient_residual", repr(self.gradient_residual)],
            ["line_search_failures", self.line_search_failures],
            ["tolerance", repr(self.tolerance)],
            ["converged", int(self.converged)],
        ]


def _kuhn_paths(dim):
    for perm in itertools.permutations(range(dim)):
        steps = [np.zeros(dim, dtype=int)]
        for ax in perm:
            nxt = steps[-1].copy()
            nxt[ax] += 1
            steps.append(nxt)
        G = np.zeros((dim, dim + 1))
        for k, ax in enumerate(perm, start=1):
            G[ax, k] = 1.0
            G[ax, k - 1] = -1.0
        yield np.array(steps), G


class Discretization:
    """Simplices with all vertices in ``active``; unknowns are the ``free`` nodes."""

    def __init__(self, grid: Grid, active: np.ndarray, free: np.ndarray, coefficient: np.ndarray):
        self.grid = grid
        self.free = free & active
        self.free_flat = np.flatnonzero(self.free)
        self.size = int(np.prod(grid.extents))
        self.vol = grid.h**grid.dim / math.factorial(grid.dim)
        strides = np.array([int(np.prod(grid.extents[a + 1:])) for a in range(grid.dim)])
        corner_shape = tuple(e - 1 for e in grid.extents)
        corners = np.stack(np.meshgrid(*[np.arange(e) for e in corner_shape], indexing="ij"), -1)
        corners = corners.reshape(-1, grid.dim)
        act = active.ravel()
        cflat = coefficient.ravel()
        self.groups = []
        for steps, G in _kuhn_paths(grid.dim):
            verts = np.stack([(corners + st) @ strides for st in steps], axis=1)
            keep = np.all(act[verts], axis=1)
            verts = np.ascontiguousarray(verts[keep])
            if verts.size == 0:
                continue
            c = cflat[verts].mean(axis=1)
            self.groups.append((G / grid.h, verts, c))
        if not self.groups:
            raise ValueError("active set contains no lattice simplex")
        self._free_pos = np.full(self.size, -1, dtype=np.int64)
        self._free_pos[self.free_flat] = np.arange(self.free_flat.size)

    def _grad_z(self, u, G, verts):
        return u[verts] @ G.T

    def energy(self, u, f, p, s):
        total = 0.0
        for G, verts, c in self.groups:
            z = self._grad_z(u, G, verts)
            rho = s * s + np.sum(z * z, axis=1)
            total += float(np.sum(c * rho ** (p / 2))) * self.vol / p
        return total - float(np.dot(f[self.free_flat], u[self.free_flat])) * self.grid.cell_volume

    def gradient(self, u, f, p, s):
        out = np.zeros(self.size)
        for G, verts, c in self.groups:
            z = self._grad_z(u, G, verts)
            rho = s * s + np.sum(z * z, axis=1)
            a = c * rho ** ((p - 2) / 2) * self.vol
            loc = (a[:, None] * z) @ G
            out += np.bincount(verts.ravel(), weights=loc.ravel(), minlength=self.size)
        out[self.free_flat] -= f[self.free_flat] * self.grid.cell_volume
        return out[self.free_flat]

    def hessian(self, u, p, s):
        rows, cols, data = [], [], []
        nloc = self.grid.dim + 1
        for G, verts, c in self.groups:
            z = self._grad_z(u, G, verts)
            rho = s * s + np.sum(z * z, axis=1)
            safe = np.where(rho > 0, rho, 1.0)
            w = c * rho ** ((p - 2) / 2) * self.vol
            A = np.eye(self.grid.dim)[None] + ((p - 2) / safe)[:, None, None] * z[:, :, None] * z[:, None, :]
            A *= w[:, None, None]
            H = np.einsum("ai,nab,bj->nij", G, A, G)
            pos = self._free_pos[verts]
            r = np.repeat(pos, nloc, axis=1)
            cc = np.tile(pos, (1, nloc))
            keep = (r >= 0) & (cc >= 0)
            rows.append(r[keep])
            cols.append(cc[keep])
            data.append(H.reshape(len(verts), -1)[keep])
        n = self.free_flat.size
        return sparse.csr_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))


def _minimize(disc: Discretization, u0: np.ndarray, f: np.ndarray, p: float, s: float,
              tol: float, max_iter: int) -> tuple[np.ndarray, SolveReport]:
    u = u0.copy()
    report = SolveReport(tolerance=tol)
    if disc.free_flat.size == 0:
        report.converged = True
        report.gradient_residual = 0.0
        report.final_energy = disc.energy(u, f, p, s)
        return u, report
    energy = disc.energy(u, f, p, s)
    report.energies.append(energy)
    g = disc.gradient(u, f, p, s)
    res = float(np.max(np.abs(g)))
    while res > tol and report.iterations < max_iter:
        report.iterations += 1
        H = disc.hessian(u, p, s)
        try:
            d = splinalg.spsolve(H.tocsc(), -g)
        except RuntimeError:
            d = np.full_like(g, np.nan)
        slope = float(np.dot(g, d))
        if not np.all(np.isfinite(d)) or slope >= 0:
            diag = H.diagonal()
            d = -g / np.where(diag > 0, diag, 1.0)
            slope = float(np.dot(g, d))
        step = 1.0
        accepted = False
        for _ in range(60):
            trial = u.copy()
            trial[disc.free_flat] += step * d
            e_trial = disc.energy(trial, f, p, s)
            if e_trial <= energy + 1e-4 * step * slope:
                accepted = True
            elif e_trial <= energy + 1e-13 * (abs(energy) + 1.0):
                # decrease below round-off: accept if the residual improves
                g_trial = disc.gradient(trial, f, p, s)
                accepted = float(np.max(np.abs(g_trial))) < res
            if accepted:
                break
            step *= 0.5
        if not accepted:
            report.line_search_failures += 1
            log.warning("line search failed at iteration %d (residual %.3e)", report.iterations, res)
            break
        u = trial
        energy = e_trial
        report.energies.append(energy)
        g = disc.gradient(u, f, p, s)
        res = float(np.max(np.abs(g)))
    report.gradient_residual = res
    report.final_energy = energy
    report.converged = res <= tol
    return u, report


def _tolerance(f_values, mask, rel: float) -> float:
    fmax = float(np.max(np.abs(f_values[mask]))) if mask.any() else 0.0
    return rel * (1.0 + fmax)


def _scaled_linear_guess(disc, u_fixed, f, p, s):
    """Linear (p=2) solution, rescaled to minimize J along its ray."""
    u_lin, _ = _minimize(disc, u_fixed, f, 2.0, s, tol=1e-12 * (1 + np.abs(f).max()), max_iter=3)
    if p == 2:
        return u_lin
    delta = u_lin - u_fixed

    def along(a):
        return disc.energy(u_fixed + a * delta, f, p, s)

    best = optimize.minimize_scalar(along, bounds=(1e-6, 1e6), method="bounded",
                                    options={"xatol": 1e-10})
    # bounded search on a log-spread bracket is crude; refine in log space
    res = optimize.minimize_scalar(lambda la: along(math.exp(la)), bracket=(math.log(best.x) - 1, math.log(best.x) + 1))
    a = math.exp(res.x) if res.fun < best.fun else best.x
    return u_fixed + a * delta


def solve_regularized(spec: ProblemSpec, f: GridFunction, k=None, *, tol_rel: float = 1e-10,
                      max_iter: int = 500, initial: GridFunction | None = None,
                      raise_on_failure: bool = True) -> tuple[GridFunction, SolveReport]:
    """Minimize ``J`` with regularization ``s_k = s + 1/k`` and zero boundary values.

    Stops once ``||grad J||_inf <= tol_rel * (1 + ||f||_inf)``.
    """
    grid = spec.grid
    free = interior_nodes(grid.mask)
    disc = Discretization(grid, grid.mask, free, spec.coefficient_values())
    s_k = spec.regularization(k)
    fv = np.where(grid.mask, f.values, 0.0).ravel()
    tol = _tolerance(fv, grid.mask.ravel(), tol_rel)
    zero = np.zeros(disc.size)
    if not np.any(fv) or spec.p == 2:
        u0 = zero
    elif initial is not None:
        u0 = np.where(free, initial.values, 0.0).ravel()
    else:
        u0 = _scaled_linear_guess(disc, zero, fv, spec.p, s_k)
    u, report = _minimize(disc, u0, fv, spec.p, s_k, tol, max_iter)
    if not report.converged and raise_on_failure:
        raise SolverError(f"no convergence: residual {report.gradient_residual:.3e} > {tol:.3e}", report)
    return GridFunction(grid, u.reshape(grid.extents)), report


def sola_sequence(spec: ProblemSpec, k_list, **solve_kw) -> list[tuple[GridFunction, SolveReport]]:
    """Solutions with mollified data ``f_k = mu * phi_k`` for increasing ``k``."""
    if spec.measure is None:
        raise ValueError("problem has no measure")
    k_list = list(k_list)
    if any(b <= a for a, b in zip(k_list, k_list[1:])):
        raise ValueError("k_list must be increasing")
    out = []
    prev = None
    for k in k_list:
        f_k = mollify(spec.measure, k)
        u_k, rep = solve_regularized(spec, f_k, k, initial=prev if spec.p != 2 else None, **solve_kw)
        out.append((u_k, rep))
        prev = u_k
    return out


def sola_increments(solutions, q: float, region=None) -> list[float]:
    """``||Du_{k+1} - Du_k||_{L^q}`` between consecutive SOLA iterates."""
    from .norms import lq_norm

    grads = [gradient(u) for u, _ in solutions]
    return [lq_norm(b - a, q, region) for a, b in zip(grads, grads[1:])]


def solve_homogeneous_on_ball(spec: ProblemSpec, ball: Ball, boundary_trace: GridFunction, k=None,
                              **solve_kw) -> tuple[GridFunction, SolveReport]:
    """a-harmonic replacement on ``ball`` with the trace of ``boundary_trace`` on its outer layer.

    The result lives on the grid restricted to the ball's nodes.
    """
    grid = spec.grid
    nodes = ball.nodes(grid)
    lo = np.asarray(grid.origin)
    hi = lo + grid.h * (np.asarray(grid.extents) - 1)
    c = np.asarray(ball.center, dtype=float)
    reach = ball.radius + 2 * grid.h
    cover = grid.radius(c) < reach
    if np.any(c - reach < lo) or np.any(c + reach > hi) or np.any(cover & ~grid.mask):
        raise ValueError("ball must sit inside the domain with a margin of 2h")
    free = interior_nodes(nodes)
    disc = Discretization(grid, nodes, free, spec.coefficient_values())
    u0 = np.where(nodes, boundary_trace.values, 0.0).ravel()
    zero_f = np.zeros(disc.size)
    tol = solve_kw.pop("tol_rel", 1e-10)
    max_iter = solve_kw.pop("max_iter", 500)
    s_k = spec.regularization(k)
    if spec.p == 2:
        guess = u0.copy()
        guess[disc.free_flat] = 0.0
    else:
        guess = u0
    v, report = _minimize(disc, guess, zero_f, spec.p, s_k, tol, max_iter)
    if not report.converged and solve_kw.get("raise_on_failure", True):
        raise SolverError(f"ball solve: residual {report.gradient_residual:.3e} > {tol:.3e}", report)
    return GridFunction(grid.with_mask(nodes), v.reshape(grid.extents)), report


def dirichlet_energy(spec: ProblemSpec, u: GridFunction, active=None, k=None) -> float:
    """``sum_T |T| c_T (s_k^2+|Du|^2)^(p/2)/p`` over simplices inside ``active``."""
    grid = spec.grid
    active = grid.mask if active is None else active
    disc = Discretization(grid, active, np.zeros_like(active), spec.coefficient_values())
    return disc.energy(u.values.ravel(), np.zeros(disc.size), spec.p, spec.regularization(k))


def euler_lagrange_residual(spec: ProblemSpec, u: GridFunction, f: GridFunction, k=None) -> np.ndarray:
    """Discrete weak-form residual ``grad J(u)`` at every free node (as a grid array)."""
    grid = spec.grid
    free = interior_nodes(grid.mask)
    disc = Discretization(grid, grid.mask, free, spec.coefficient_values())
    g = disc.gradient(u.values.ravel(), np.where(grid.mask, f.values, 0.0).ravel(), spec.p, spec.regularization(k))
    out = np.zeros(disc.size)
    out[disc.free_flat] = g
    return out.reshape(grid.extents)


def truncation_energy_check(u: GridFunction, f: GridFunction, k: float, p: float = 2.0,
                            s: float = 0.0) -> tuple[float, float]:
    """``(int_{|u|<=k} |Du|^p, k ||f||_1 + s^p |{|u|<=k}|)`` on the grid."""
    grid = u.grid
    du = gradient(u).abs()
    dk = (np.abs(u.values) <= k) & grid.mask
    lhs = float(np.sum(du[dk] ** p)) * grid.cell_volume
    f_l1 = float(np.sum(np.abs(f.values[grid.mask]))) * grid.cell_volume
    rhs = k * f_l1 + s**p * float(dk.sum()) * grid.cell_volume
    return lhs, rhs


def comparison_integral(spec: ProblemSpec, u: GridFunction, v: GridFunction, q: float,
                        active=None, k=None) -> tuple[float, float]:
    """``(int |V(Du)-V(Dv)|^(2q/p), int |Du-Dv|^q)`` over simplices inside ``active``.

    Gradients are the exact simplexwise gradients of the piecewise-linear
    interpolants, so no boundary-stencil mismatch enters near ``dB_R``.
    """
    from .vmap import VParams, v_apply

    grid = spec.grid
    active = v.grid.mask if active is None else active
    disc = Discretization(grid, active, np.zeros_like(active), spec.coefficient_values())
    params = VParams(spec.p, spec.regularization(k))
    uu, vv = u.values.ravel(), v.values.ravel()
    v_term = 0.0
    g_term = 0.0
    for G, verts, _ in disc.groups:
        zu = disc._grad_z(uu, G, verts)
        zv = disc._grad_z(vv, G, verts)
        dV = np.sqrt(np.sum((v_apply(params, zu) - v_apply(params, zv)) ** 2, axis=1))
        dz = np.sqrt(np.sum((zu - zv) ** 2, axis=1))
        v_term += float(np.sum(dV ** (2 * q / spec.p))) * disc.vol
        g_term += float(np.sum(dz**q)) * disc.vol
    return v_term, g_term
