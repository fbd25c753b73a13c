"""Exact 1D solves of ``(a(x) u')' = f`` on ``[-1, 1]`` by nested quadrature."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import EllipticityError

QUAD_TOL = 1e-10


@dataclass
class Profile1D:
    x: np.ndarray
    u: np.ndarray
    du: np.ndarray  # u' = (F + C) / a at the mesh nodes
    flux_constant: float


def _quad(func, a, b, points=None):
    if a == b:
        return 0.0
    pts = None
    if points is not None:
        lo, hi = min(a, b), max(a, b)
        pts = [t for t in points if lo < t < hi] or None
    val, _ = quad(func, a, b, epsabs=QUAD_TOL * 1e-2, epsrel=QUAD_TOL, limit=200, points=pts)
    return val


def solve_1d(a_coeff, f, bc, n=501, breakpoints=(0.0,)) -> Profile1D:
    """Solve ``(a u')' = f`` with ``u(-1), u(1) = bc``.

    Integrating once gives ``a u' = F + C`` with ``F(x) = int_{-1}^x f``; a
    second quadrature of ``(F + C)/a`` gives ``u``.  ``F`` inside the outer
    integrand is itself evaluated by adaptive quadrature, started from the
    nearest mesh node.  ``breakpoints`` are passed to the integrator where the
    data are not smooth.
    """
    x = np.linspace(-1.0, 1.0, n)
    x = np.union1d(x, [b for b in breakpoints if -1 < b < 1])
    a_vals = np.array([a_coeff(t) for t in x])
    probe = np.linspace(-1, 1, 20 * len(x) + 1)
    if np.min(a_vals) <= 0 or min(a_coeff(t) for t in probe) <= 0:
        raise EllipticityError("coefficient a must be positive on [-1, 1]")
    bps = list(breakpoints)

    F = np.zeros_like(x)
    for k in range(1, len(x)):
        F[k] = F[k - 1] + _quad(f, x[k - 1], x[k], bps)

    def F_at(t):
        k = min(max(np.searchsorted(x, t) - 1, 0), len(x) - 2)
        return F[k] + _quad(f, x[k], t, bps)

    # G(x) = int F/a and H(x) = int 1/a, cumulative on the mesh
    G = np.zeros_like(x)
    H = np.zeros_like(x)
    for k in range(1, len(x)):
        G[k] = G[k - 1] + _quad(lambda t: F_at(t) / a_coeff(t), x[k - 1], x[k], bps)
        H[k] = H[k - 1] + _quad(lambda t: 1.0 / a_coeff(t), x[k - 1], x[k], bps)
    C = (bc[1] - bc[0] - G[-1]) / H[-1]
    u = bc[0] + G + C * H
    return Profile1D(x, u, (F + C) / a_vals, C)
