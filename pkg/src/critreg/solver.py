"""Finite-difference solver for ``-div(s(X) |Du|^{p-2} Du) = mu`` on a box.

The discrete problem is the minimisation of a discrete energy.  Every cell
carries four corner gradients, each built from the x-edge and y-edge that
meet at that corner, and the cell coefficient ``s`` is sampled at the cell
centre::

    E(u) = sum_cells (hx*hy/4) s_c sum_corners W(g) - sum_nodes w_i mu_i u_i

with ``W(g) = ((|g|^2 + eps^2)^{p/2} - eps^p) / p``.  The Euler-Lagrange
equations are in conservative flux form; for ``p = 2`` they reduce to the
5-point stencil with each edge coefficient equal to the average of the two
adjacent cell values, i.e. the edge-midpoint coefficient up to O(h^2).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import CritregError, DimensionError, EllipticityError, ValidationError
from .grid import Grid2D, ScalarField, check_same_grid, gradient_field  # noqa: F401

logger = logging.getLogger(__name__)


class Coefficient:
    """A scalar coefficient ``s(x, y)`` with a serialisable description."""

    def __init__(self, func, name="custom", **params):
        self.func = func
        self.name = name
        self.params = params

    def __call__(self, x, y):
        return np.broadcast_to(np.asarray(self.func(x, y), dtype=float), np.broadcast(x, y).shape)

    def describe(self):
        return {"kind": self.name, **self.params}

    @classmethod
    def constant(cls, value=1.0):
        return cls(lambda x, y: np.full(np.broadcast(x, y).shape, float(value)), "constant", value=value)

    @classmethod
    def holder_bump(cls, amplitude=0.5, exponent=0.1, center=(0.0, 0.0)):
        """``1 + amplitude * |X - center|^exponent``; Hoelder continuous of order ``exponent``."""
        cx, cy = center

        def func(x, y):
            return 1.0 + amplitude * np.hypot(x - cx, y - cy) ** exponent

        return cls(func, "holder_bump", amplitude=amplitude, exponent=exponent, center=list(center))

    @classmethod
    def affine(cls, c0=1.0, cx=0.0, cy=0.0):
        return cls(lambda x, y: c0 + cx * x + cy * y, "affine", c0=c0, cx=cx, cy=cy)


@dataclass
class ModelField:
    """The model vector field ``a(X, xi) = coeff(X) |xi|^{p-2} xi``."""

    coeff: Coefficient
    p: float

    def __post_init__(self):
        if not self.p > 1:
            raise ValidationError(f"exponent p must exceed 1, got {self.p}")

    def __call__(self, X, xi):
        """Evaluate ``a(X, xi)`` for arrays of shape ``(m, 2)``."""
        X = np.asarray(X, dtype=float)
        xi = np.asarray(xi, dtype=float)
        norm = np.linalg.norm(xi, axis=-1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            k = np.where(norm > 0, norm ** (self.p - 2), 0.0)
        return self.coeff(X[..., 0], X[..., 1])[..., None] * k * xi


@dataclass
class SolveConfig:
    eps0: float = 1e-1
    eps_min: float = 1e-8
    continuation_factor: float = 0.1
    newton_tol: float = 1e-8
    max_newton: int = 50
    armijo_c: float = 1e-4
    cg_rtol: float = 1e-10
    cg_maxiter: int = 20000
    max_backtracks: int = 30

    def __post_init__(self):
        if not 0 < self.eps_min <= self.eps0:
            raise ValidationError("need 0 < eps_min <= eps0")
        if not 0 < self.continuation_factor < 1:
            raise ValidationError("continuation_factor must lie in (0, 1)")
        if not self.newton_tol > 0:
            raise ValidationError("newton_tol must be positive")
        if self.max_newton < 1:
            raise ValidationError("max_newton must be >= 1")

    def levels(self, p):
        """Regularisation levels, geometric from eps0 down to eps_min.

        The linear case needs no regularisation and runs a single level.
        """
        if p == 2:
            return [0.0]
        out = [self.eps0]
        while out[-1] > self.eps_min * (1 + 1e-12):
            out.append(max(out[-1] * self.continuation_factor, self.eps_min))
        return out


@dataclass
class LevelLog:
    eps: float
    reference_residual: float
    residuals: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    cg_iterations: list = field(default_factory=list)
    step_lengths: list = field(default_factory=list)
    step_kinds: list = field(default_factory=list)
    converged: bool = False

    def as_dict(self):
        return {
            "eps": self.eps,
            "reference_residual": self.reference_residual,
            "residuals": list(self.residuals),
            "energies": list(self.energies),
            "cg_iterations": list(self.cg_iterations),
            "step_lengths": list(self.step_lengths),
            "step_kinds": list(self.step_kinds),
            "converged": self.converged,
        }


@dataclass
class SolveResult:
    u: ScalarField
    levels: list
    final_residual: float
    reference_residual: float

    @property
    def relative_residual(self):
        return self.final_residual / self.reference_residual if self.reference_residual > 0 else 0.0

    @property
    def newton_levels(self):
        return len(self.levels)

    def as_dict(self):
        return {
            "final_residual": self.final_residual,
            "reference_residual": self.reference_residual,
            "relative_residual": self.relative_residual,
            "levels": [lv.as_dict() for lv in self.levels],
        }


class SolverError(CritregError):
    """Newton/Picard iteration failed; carries the last iterate and history."""

    def __init__(self, message, u=None, levels=None):
        super().__init__(message)
        self.u = u
        self.levels = levels or []


def pcg(A, b, diag, x0=None, rtol=1e-10, maxiter=20000):
    """Jacobi-preconditioned conjugate gradients for SPD ``A``.

    Stops when ``||b - A x|| <= rtol * ||b||``.  Returns ``(x, iterations,
    converged)``.
    """
    x = np.zeros_like(b) if x0 is None else x0.copy()
    r = b - A @ x if x0 is not None else b.copy()
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return x, 0, True
    inv_d = 1.0 / diag
    z = inv_d * r
    d = z.copy()
    rz = r @ z
    target = rtol * bnorm
    for k in range(1, maxiter + 1):
        Ad = A @ d
        alpha = rz / (d @ Ad)
        x += alpha * d
        r -= alpha * Ad
        if np.linalg.norm(r) <= target:
            return x, k, True
        z = inv_d * r
        rz_new = r @ z
        d *= rz_new / rz
        d += z
        rz = rz_new
    return x, maxiter, False


class _Discretization:
    """Energy, gradient and Hessian of the discrete problem on one grid."""

    def __init__(self, grid: Grid2D, model: ModelField, mu: np.ndarray):
        self.grid = grid
        self.p = float(model.p)
        hx, hy = grid.hx, grid.hy
        xc = grid.x0 + hx * (np.arange(grid.nx - 1) + 0.5)
        yc = grid.y0 + hy * (np.arange(grid.ny - 1) + 0.5)
        Xc, Yc = np.meshgrid(xc, yc, indexing="ij")
        s = model.coeff(Xc, Yc)
        if not np.all(np.isfinite(s)) or s.min() <= 0:
            raise EllipticityError(f"coefficient must be positive and finite, min over cells = {np.min(s)}")
        self.weight = 0.25 * hx * hy * s
        tw = np.ones(grid.shape)
        tw[0, :] *= 0.5
        tw[-1, :] *= 0.5
        tw[:, 0] *= 0.5
        tw[:, -1] *= 0.5
        self.source = hx * hy * tw * mu
        idx = -np.ones(grid.shape, dtype=np.int64)
        idx[1:-1, 1:-1] = np.arange((grid.nx - 2) * (grid.ny - 2)).reshape(grid.nx - 2, grid.ny - 2)
        self.unknown = idx
        self._pattern = None

    # corner gradients: (gx, gy) for SW, SE, NW, NE
    def corners(self, u):
        dx = np.diff(u, axis=0) / self.grid.hx
        dy = np.diff(u, axis=1) / self.grid.hy
        dxb, dxt = dx[:, :-1], dx[:, 1:]
        dyl, dyr = dy[:-1, :], dy[1:, :]
        return ((dxb, dyl), (dxb, dyr), (dxt, dyl), (dxt, dyr))

    def energy(self, u, eps):
        p = self.p
        total = 0.0
        for gx, gy in self.corners(u):
            s = gx * gx + gy * gy + eps * eps
            dens = (s ** (p / 2) - eps**p) / p
            total += np.sum(self.weight * dens)
        return total - np.sum(self.source * u)

    def _k(self, s):
        p = self.p
        if p == 2:
            return np.ones_like(s)
        with np.errstate(divide="ignore"):
            return np.where(s > 0, s ** ((p - 2) / 2), 0.0)

    def gradient(self, u, eps):
        hx, hy = self.grid.hx, self.grid.hy
        fl = []
        for gx, gy in self.corners(u):
            k = self._k(gx * gx + gy * gy + eps * eps) * self.weight
            fl.append((k * gx, k * gy))
        (sw_x, sw_y), (se_x, se_y), (nw_x, nw_y), (ne_x, ne_y) = fl
        nx, ny = self.grid.shape
        xf = np.zeros((nx - 1, ny))
        xf[:, :-1] += sw_x + se_x
        xf[:, 1:] += nw_x + ne_x
        yf = np.zeros((nx, ny - 1))
        yf[:-1, :] += sw_y + nw_y
        yf[1:, :] += se_y + ne_y
        g = np.zeros((nx, ny))
        g[:-1, :] -= xf / hx
        g[1:, :] += xf / hx
        g[:, :-1] -= yf / hy
        g[:, 1:] += yf / hy
        return g - self.source

    def residual(self, u, eps):
        return self.gradient(u, eps)[1:-1, 1:-1].ravel()

    def _corner_nodes(self):
        if self._pattern is None:
            nx, ny = self.grid.shape
            node = np.arange(nx * ny).reshape(nx, ny)
            sw, se = node[:-1, :-1], node[1:, :-1]
            nw, ne = node[:-1, 1:], node[1:, 1:]
            # (corner node, other end of x-edge, other end of y-edge)
            self._pattern = ((sw, se, nw), (se, sw, ne), (nw, ne, sw), (ne, nw, se))
        return self._pattern

    def hessian(self, u, eps, frozen=False):
        """Sparse Hessian on interior unknowns.

        ``frozen=True`` drops the derivative of the diffusivity and returns the
        Picard (secant) matrix instead.
        """
        p = self.p
        hx, hy = self.grid.hx, self.grid.hy
        bx, by = 1.0 / hx, 1.0 / hy
        rows, cols, vals = [], [], []
        unk = self.unknown.ravel()
        # sign of the mixed term: SE and NW corners flip one axis orientation
        signs = (1.0, -1.0, -1.0, 1.0)
        for (gx, gy), (n0, nX, nY), sgn in zip(self.corners(u), self._corner_nodes(), signs):
            s = gx * gx + gy * gy + eps * eps
            k = self._k(s) * self.weight
            if frozen or p == 2:
                a, b, c = k, np.zeros_like(k), k
            else:
                with np.errstate(divide="ignore", invalid="ignore"):
                    k2 = np.where(s > 0, (p - 2) * s ** ((p - 4) / 2), 0.0) * self.weight
                a, b, c = k + k2 * gx * gx, k2 * gx * gy, k + k2 * gy * gy
            ent = {
                (0, 0): a * bx * bx + c * by * by,
                (1, 1): a * bx * bx,
                (2, 2): c * by * by,
                (0, 1): -a * bx * bx,
                (0, 2): -c * by * by,
            }
            bb = sgn * b * bx * by
            ent[(0, 0)] = ent[(0, 0)] + 2 * bb
            ent[(0, 1)] = ent[(0, 1)] - bb
            ent[(0, 2)] = ent[(0, 2)] - bb
            ent[(1, 2)] = bb
            nodes = (n0.ravel(), nX.ravel(), nY.ravel())
            for (i, j), v in ent.items():
                v = v.ravel()
                ri, cj = unk[nodes[i]], unk[nodes[j]]
                keep = (ri >= 0) & (cj >= 0)
                rows.append(ri[keep])
                cols.append(cj[keep])
                vals.append(v[keep])
                if i != j:
                    rows.append(cj[keep])
                    cols.append(ri[keep])
                    vals.append(v[keep])
        m = (self.grid.nx - 2) * (self.grid.ny - 2)
        H = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(m, m)
        ).tocsr()
        return H


def energy(u: ScalarField, model: ModelField, mu: ScalarField, eps: float = 0.0) -> float:
    """Discrete energy ``sum s W(Du) - mu u`` of a grid field.

    ``eps > 0`` evaluates the regularised energy minimised at that
    continuation level.
    """
    check_same_grid(u, mu)
    return float(_Discretization(u.grid, model, mu.values).energy(u.values, eps))


def discrete_residual(u: ScalarField, model: ModelField, mu: ScalarField, eps: float = 0.0) -> np.ndarray:
    """Weak-form residual (energy gradient) at interior nodes, shape ``(nx - 2, ny - 2)``."""
    check_same_grid(u, mu)
    g = u.grid
    return _Discretization(g, model, mu.values).residual(u.values, eps).reshape(g.nx - 2, g.ny - 2)


def _line_search(disc, u, step, E, slope, eps, c, max_bt):
    """Backtracking on the energy; returns ``(t, E_new)`` or ``(None, E)``."""
    # allowance for rounding in the summed energy
    slack = 64 * np.finfo(float).eps * (abs(E) + 1.0)
    t = 1.0
    for _ in range(max_bt):
        trial = u.copy()
        trial[1:-1, 1:-1] += t * step
        E_new = disc.energy(trial, eps)
        if np.isfinite(E_new) and E_new <= E + c * t * slope + slack:
            return t, E_new
        t *= 0.5
    return None, E


def solve_dirichlet(model: ModelField, mu: ScalarField, boundary: ScalarField,
                    cfg: SolveConfig | None = None, initial: ScalarField | None = None) -> SolveResult:
    """Solve the Dirichlet problem by Newton's method with eps-continuation.

    Boundary values are taken from ``boundary``; its interior values are
    ignored.  The interior starts at zero unless ``initial`` is given.  Each
    continuation level is warm-started from the previous one.  Newton steps
    are globalised by an Armijo line search on the regularised energy; a step
    that fails the line search is retried with a plain-decrease test and, if
    that fails too, replaced by a Picard (frozen-diffusivity) step.

    Raises :class:`SolverError` on non-convergence or NaN.
    """
    cfg = cfg or SolveConfig()
    check_same_grid(mu, boundary)
    grid = boundary.grid
    disc = _Discretization(grid, model, mu.values)
    u = boundary.values.copy()
    if initial is not None:
        check_same_grid(initial, boundary)
        u[1:-1, 1:-1] = initial.values[1:-1, 1:-1]
    else:
        u[1:-1, 1:-1] = 0.0
    u_init = u.copy()
    shape_in = (grid.nx - 2, grid.ny - 2)
    logs = []
    levels = cfg.levels(model.p)
    for eps in levels:
        ref = float(np.linalg.norm(disc.residual(u_init, eps)))
        log = LevelLog(eps=eps, reference_residual=ref)
        logs.append(log)
        R = disc.residual(u, eps)
        E = disc.energy(u, eps)
        log.residuals.append(float(np.linalg.norm(R)))
        log.energies.append(float(E))
        target = cfg.newton_tol * ref
        for _ in range(cfg.max_newton):
            rnorm = log.residuals[-1]
            if rnorm <= target:
                break
            t, kind, its = None, None, 0
            H = disc.hessian(u, eps)
            step, its, _ = pcg(H, -R, H.diagonal(), rtol=cfg.cg_rtol, maxiter=cfg.cg_maxiter)
            attempts = [("newton", cfg.armijo_c, cfg.max_backtracks), ("newton-relaxed", 0.0, 2 * cfg.max_backtracks)]
            for kind, c, nbt in attempts + [("picard", cfg.armijo_c, 2 * cfg.max_backtracks)]:
                if kind == "picard":
                    H = disc.hessian(u, eps, frozen=True)
                    step, its, _ = pcg(H, -R, H.diagonal(), rtol=cfg.cg_rtol, maxiter=cfg.cg_maxiter)
                if not np.all(np.isfinite(step)):
                    raise SolverError(f"NaN in linear solve at eps={eps}", ScalarField(grid, u), logs)
                slope = float(R @ step)
                if slope >= 0:
                    continue
                t, E_new = _line_search(disc, u, step.reshape(shape_in), E, slope, eps, c, nbt)
                if t is not None:
                    break
            if t is None:
                raise SolverError(
                    f"line search failed at eps={eps} with residual {rnorm:.3e}", ScalarField(grid, u), logs
                )
            u[1:-1, 1:-1] += t * step.reshape(shape_in)
            if not np.all(np.isfinite(u)):
                raise SolverError(f"NaN in iterate at eps={eps}", None, logs)
            E = E_new
            R = disc.residual(u, eps)
            log.residuals.append(float(np.linalg.norm(R)))
            log.energies.append(float(E))
            log.cg_iterations.append(int(its))
            log.step_lengths.append(t)
            log.step_kinds.append(kind)
        log.converged = log.residuals[-1] <= target
        logger.debug("eps=%g: %d steps, residual %.3e / %.3e", eps, len(log.step_kinds), log.residuals[-1], ref)
        if not log.converged:
            raise SolverError(
                f"no convergence within {cfg.max_newton} steps at eps={eps}: "
                f"residual {log.residuals[-1]:.3e} > {target:.3e}",
                ScalarField(grid, u),
                logs,
            )
    return SolveResult(ScalarField(grid, u), logs, logs[-1].residuals[-1], logs[-1].reference_residual)
