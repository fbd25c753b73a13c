"""Closed-form solutions with known decay at their critical points."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .grid import Grid2D, ScalarField
from .solver import ModelField

REG_EPS = 1e-8


@dataclass
class KnownDecay:
    center: tuple
    prefactor: float
    exponent: float  # 1 + alpha


@dataclass
class OracleSolution:
    """An exact solution in ``dim`` space dimensions.

    ``evaluate`` and ``gradient`` take points of shape ``(..., dim)``.
    """

    name: str
    dim: int
    evaluate: object
    gradient: object
    problem: dict = field(default_factory=dict)
    known_decay: KnownDecay | None = None

    def sample(self, grid: Grid2D) -> ScalarField:
        if self.dim != 2:
            raise ValueError(f"oracle {self.name} is {self.dim}-dimensional; grids are 2D")
        X, Y = grid.mesh()
        return ScalarField(grid, self.evaluate(np.stack([X, Y], axis=-1)))

    def describe(self):
        out = {"name": self.name, "dim": self.dim, "problem": self.problem}
        if self.known_decay is not None:
            kd = self.known_decay
            out["known_decay"] = {"center": list(kd.center), "prefactor": kd.prefactor, "exponent": kd.exponent}
        return out


def radial_p_poisson(p: float, n: int = 2, R: float = 1.0) -> OracleSolution:
    """Radial solution of ``-div(|Du|^{p-2} Du) = 1`` in ``B_R`` with ``u = 0`` on the sphere.

    ``u'(r) = -(r/n)^{1/(p-1)}``, so ``u(0) - u(r) = c r^{p/(p-1)}`` with
    ``c = ((p-1)/p) n^{-1/(p-1)}``.  The formula is used outside ``B_R`` too.
    """
    if not (p > 1 and n >= 2 and R > 0):
        raise ValueError("need p > 1, n >= 2, R > 0")
    beta = p / (p - 1)
    c = (p - 1) / p * n ** (-1 / (p - 1))

    def evaluate(X):
        r = np.linalg.norm(np.asarray(X, dtype=float), axis=-1)
        return c * (R**beta - r**beta)

    def gradient(X):
        X = np.asarray(X, dtype=float)
        r = np.linalg.norm(X, axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            g = -((r / n) ** (1 / (p - 1))) * X / r
        return np.where(r > 0, g, 0.0)

    return OracleSolution(
        f"radial_p{p:g}_n{n}",
        n,
        evaluate,
        gradient,
        {"coefficient": {"kind": "constant", "value": 1.0}, "p": p, "mu": 1.0, "domain": {"ball_radius": R}},
        KnownDecay(tuple([0.0] * n), c, beta),
    )


def harmonic_polynomial(kind: str = "saddle") -> OracleSolution:
    """``x^2 - y^2`` (``"saddle"``) or ``x^3 - 3 x y^2`` (``"cubic"``)."""
    if kind == "saddle":
        def evaluate(X):
            X = np.asarray(X, dtype=float)
            return X[..., 0] ** 2 - X[..., 1] ** 2

        def gradient(X):
            X = np.asarray(X, dtype=float)
            return np.stack([2 * X[..., 0], -2 * X[..., 1]], axis=-1)

        exponent = 2.0
    elif kind in ("cubic", "degree-3"):
        def evaluate(X):
            X = np.asarray(X, dtype=float)
            x, y = X[..., 0], X[..., 1]
            return x**3 - 3 * x * y**2

        def gradient(X):
            X = np.asarray(X, dtype=float)
            x, y = X[..., 0], X[..., 1]
            return np.stack([3 * x**2 - 3 * y**2, -6 * x * y], axis=-1)

        exponent = 3.0
    else:
        raise ValueError(f"unknown harmonic polynomial {kind!r}")
    return OracleSolution(
        kind if kind == "saddle" else "cubic",
        2,
        evaluate,
        gradient,
        {"coefficient": {"kind": "constant", "value": 1.0}, "p": 2.0, "mu": 0.0},
        KnownDecay((0.0, 0.0), 1.0, exponent),
    )


@dataclass
class Contrast1D:
    """``(a u')' = 1`` with ``a(x) = 1 + |x - x1|^eps`` and ``a u' = x - x0``.

    ``u'`` is exactly ``C^{0,eps}`` at the coefficient kink ``x1`` while it
    vanishes linearly at ``x0``.  ``u(x0) = 0``.
    """

    eps: float
    x1: float
    x0: float

    def a(self, x):
        return 1.0 + np.abs(np.asarray(x, dtype=float) - self.x1) ** self.eps

    def flux(self, x):
        return np.asarray(x, dtype=float) - self.x0

    def gradient(self, x):
        return self.flux(x) / self.a(x)

    def f(self, x):
        return 1.0

    def evaluate(self, x):
        return float(self.increment(self.x0, float(x) - self.x0))

    def gradient_increment(self, d):
        """``u'(x1 + d) - u'(x1)`` evaluated without cancellation for tiny ``d``."""
        d = np.asarray(d, dtype=float)
        s = np.abs(d) ** self.eps
        return (d - (self.x1 - self.x0) * s) / (1.0 + s)

    def increment(self, x_ref, d):
        """``u(x_ref + d) - u(x_ref)`` by adaptive quadrature of ``u'`` in the offset variable."""
        pts = [self.x1 - x_ref] if min(0.0, d) < self.x1 - x_ref < max(0.0, d) else None

        def integrand(t):
            return (x_ref + t - self.x0) / (1.0 + abs(x_ref + t - self.x1) ** self.eps)

        val, _ = quad(integrand, 0.0, d, epsabs=0.0, epsrel=1e-12, limit=200, points=pts)
        return val


def contrast_1d(eps_coeff: float, x1: float = 0.5, x0: float = -0.25) -> Contrast1D:
    if not 0 < eps_coeff < 1:
        raise ValueError("eps_coeff must lie in (0, 1)")
    if x0 == x1 or not (-1 < x0 < 1 and -1 < x1 < 1):
        raise ValueError("need distinct x0, x1 inside (-1, 1)")
    return Contrast1D(eps_coeff, x1, x0)


def source_at(points, coeff, p, gradient, h, eps=REG_EPS):
    """``-div(coeff |Du|^{p-2} Du)`` at points of shape ``(m, dim)``.

    Central differences of the analytic flux with step ``h``.  Returns the
    source values and a mask of points where some flux evaluation hit
    ``Du = 0`` with ``p < 2`` and was regularised with ``eps``.
    """
    points = np.asarray(points, dtype=float)
    dim = points.shape[-1]
    mu = np.zeros(points.shape[:-1])
    flagged = np.zeros(points.shape[:-1], dtype=bool)
    for k in range(dim):
        e = np.zeros(dim)
        e[k] = 0.5 * h
        for sgn in (1.0, -1.0):
            P = points + sgn * e
            g = gradient(P)
            norm2 = np.sum(g * g, axis=-1)
            degenerate = (norm2 == 0) & (p < 2)
            flagged |= degenerate
            with np.errstate(divide="ignore", invalid="ignore"):
                k_ = np.where(norm2 > 0, norm2 ** ((p - 2) / 2), 0.0)
            k_ = np.where(degenerate, eps ** (p - 2), k_)
            c = coeff(*[P[..., i] for i in range(2)]) if dim == 2 else coeff(P)
            mu -= sgn * c * k_ * g[..., k] / h
    return mu, flagged


def manufactured(model: ModelField, u_exact: OracleSolution, grid: Grid2D, return_flags=False):
    """Source ``mu = -div(s |Du*|^{p-2} Du*)`` on the grid nodes.

    Second-order differences of the analytic flux with the grid spacing.
    """
    X, Y = grid.mesh()
    pts = np.stack([X, Y], axis=-1)
    mu, flagged = source_at(pts, model.coeff, model.p, u_exact.gradient, grid.h)
    field_ = ScalarField(grid, mu)
    if return_flags:
        return field_, flagged
    return field_


def by_name(name: str, **params) -> OracleSolution:
    """Look up an oracle from a config entry."""
    if name in ("radial", "radial_p_poisson"):
        return radial_p_poisson(params.get("p", 2.0), params.get("n", 2), params.get("R", 1.0))
    if name in ("saddle", "cubic", "degree-3"):
        return harmonic_polynomial(name)
    raise ValueError(f"unknown oracle {name!r}")


def contrast_exponents(oracle: Contrast1D, kink_offsets=None, zero_offsets=None):
    """Measured exponents of the contrast oracle in one run.

    Returns ``(holder_at_kink, alpha_at_zero)``: the log-log slope of
    ``|u'(x1 + d) - u'(x1)|`` and the slope of ``|u(x0 + d) - u(x0)|``
    minus one.
    """
    if kink_offsets is None:
        kink_offsets = np.geomspace(1e-24, 1e-12, 13)
    if zero_offsets is None:
        zero_offsets = np.geomspace(1e-4, 1e-2, 9)
    dk = np.concatenate([kink_offsets, -kink_offsets])
    lk = np.concatenate([np.log(kink_offsets)] * 2)
    gk = np.log(np.abs(oracle.gradient_increment(dk)))
    holder = float(np.polyfit(lk, gk, 1)[0])
    dz = np.concatenate([zero_offsets, -zero_offsets])
    osc = np.array([abs(oracle.increment(oracle.x0, d)) for d in dz])
    alpha = float(np.polyfit(np.log(np.abs(dz)), np.log(osc), 1)[0]) - 1.0
    return holder, alpha
