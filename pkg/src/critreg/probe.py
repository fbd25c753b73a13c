"""Pointwise decay of ``u - u(X0)`` at critical points of a grid field.

Balls are discrete: the nodes whose distance to the (node) centre is at most
``r``.  Membership is decided from integer node offsets so that rescaling a
field by a power of two maps balls onto balls exactly.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .continuity import Modulus, inverse_modulus
from .errors import GeometryError, InsufficientDataError, PreconditionError
from .grid import Grid2D, ScalarField, VectorField, gradient_field

logger = logging.getLogger(__name__)

MIN_CELLS = 4  # smallest usable radius, in grid spacings
GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class ProbePoint:
    position: tuple
    index: tuple
    grad_norm: float = 0.0
    is_singular: bool = False

    @classmethod
    def at(cls, u: ScalarField, x, y, du: VectorField | None = None, grad_tol=None):
        """Probe point at the node nearest to ``(x, y)``."""
        i, j = u.grid.nearest_node(x, y)
        du = du if du is not None else gradient_field(u)
        g = float(np.hypot(*du.components[i, j]))
        tol = grad_tol if grad_tol is not None else float(default_grad_tol(du)[i, j])
        return cls(u.grid.position(i, j), (i, j), g, g <= tol)

    def as_dict(self):
        return {
            "position": list(self.position),
            "index": list(self.index),
            "grad_norm": self.grad_norm,
            "is_singular": self.is_singular,
        }


def default_grad_tol(du: VectorField, factor=10.0):
    """Scale-aware tolerance ``factor * h * L`` per node.

    ``L`` is the largest difference quotient of ``Du`` between a node and its
    eight neighbours, a local Lipschitz estimate of the gradient.
    """
    g = du.grid
    c = du.components
    pad = np.pad(c, ((1, 1), (1, 1), (0, 0)), mode="edge")
    L = np.zeros(g.shape)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == dj == 0:
                continue
            nb = pad[1 + di:1 + di + g.nx, 1 + dj:1 + dj + g.ny]
            dist = math.hypot(di * g.hx, dj * g.hy)
            L = np.maximum(L, np.linalg.norm(nb - c, axis=-1) / dist)
    return factor * g.h * L


def singular_set(du: VectorField, grad_tol=None):
    """Discrete critical points of ``u`` from its gradient field.

    A node qualifies when it is interior, ``|Du| <= grad_tol`` there and
    ``|Du|`` is a local minimum over its 3x3 neighbourhood (the last
    condition turns the sublevel set into isolated points).  ``grad_tol``
    defaults to :func:`default_grad_tol`.  Sorted by ``|Du|``.
    """
    g = du.grid
    norm = du.norm()
    tol = default_grad_tol(du) if grad_tol is None else np.full(g.shape, float(grad_tol))
    pad = np.pad(norm, 1, mode="constant", constant_values=np.inf)
    is_min = np.ones(g.shape, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == dj == 0:
                continue
            is_min &= norm <= pad[1 + di:1 + di + g.nx, 1 + dj:1 + dj + g.ny]
    cand = is_min & (norm <= tol) & g.interior_mask()
    pts = [ProbePoint(g.position(i, j), (int(i), int(j)), float(norm[i, j]), True) for i, j in zip(*np.nonzero(cand))]
    return sorted(pts, key=lambda pt: (pt.grad_norm, pt.index))


def ball_values(u: ScalarField, x0: ProbePoint, r: float, check_resolution=True):
    """Values at the nodes of the discrete ball ``B_r(x0)``."""
    g = u.grid
    i0, j0 = x0.index
    if r > g.boundary_distance(i0, j0) * (1 + 1e-12):
        raise GeometryError(f"ball of radius {r} around {x0.position} leaves the grid")
    if check_resolution and r < MIN_CELLS * g.h * (1 - 1e-12):
        raise PreconditionError(f"radius {r} is below {MIN_CELLS} grid spacings", measured=r)
    mi, mj = int(r / g.hx + 1e-9), int(r / g.hy + 1e-9)
    di = np.arange(-mi, mi + 1)[:, None] * g.hx
    dj = np.arange(-mj, mj + 1)[None, :] * g.hy
    mask = di * di + dj * dj <= r * r * (1 + 1e-12)
    block = u.values[i0 - mi:i0 + mi + 1, j0 - mj:j0 + mj + 1]
    return block[mask]


def _pmean(vals, tau, p):
    return float(np.mean(np.abs(vals - tau) ** p))


def oscillation(u: ScalarField, x0: ProbePoint, r: float, mode="sup", tau=None, p=2.0) -> float:
    """Sup of ``|u - u(x0)|`` over ``B_r`` (``mode="sup"``) or the p-mean
    ``(avg |u - tau|^p)^(1/p)`` (``mode="p_mean"``; ``tau`` defaults to ``u(x0)``)."""
    vals = ball_values(u, x0, r)
    u0 = u.values[x0.index]
    if mode == "sup":
        return float(np.max(np.abs(vals - u0)))
    if mode == "p_mean":
        t = u0 if tau is None else tau
        return _pmean(vals, t, p) ** (1.0 / p)
    raise ValueError(f"unknown oscillation mode {mode!r}")


def golden_section(vals, p):
    """Golden-section search for the minimiser of ``mean |vals - tau|^p`` on ``[min, max]``."""
    lo, hi = float(np.min(vals)), float(np.max(vals))
    if hi == lo:
        return lo
    tol = 1e-12 * (hi - lo)
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = _pmean(vals, c, p), _pmean(vals, d, p)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = _pmean(vals, c, p)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = _pmean(vals, d, p)
    tau = 0.5 * (a + b)
    # comparing nearly equal values of a flat convex function limits the
    # search to ~sqrt(eps) accuracy; finish on the sign of the derivative
    w = 1e-6 * (hi - lo)
    a, b = max(lo, tau - w), min(hi, tau + w)
    if _dpmean(vals, a, p) < 0 < _dpmean(vals, b, p):
        for _ in range(200):
            mid = 0.5 * (a + b)
            if mid in (a, b):
                break
            if _dpmean(vals, mid, p) < 0:
                a = mid
            else:
                b = mid
        tau = 0.5 * (a + b)
    return tau


def _dpmean(vals, tau, p):
    """Derivative of ``mean |vals - tau|^p`` in ``tau``, up to the factor ``-p``."""
    d = vals - tau
    return -float(np.mean(np.sign(d) * np.abs(d) ** (p - 1)))


def minimize_pmean(vals, p):
    """The ``tau`` minimising ``mean |vals - tau|^p`` (strictly convex for p > 1).

    Works on the data shifted by their minimum, so adding a constant to
    ``vals`` moves the result by that constant up to the final rounding.
    """
    vals = np.asarray(vals, dtype=float)
    lo = float(np.min(vals))
    d = vals - lo
    if p == 2:
        return lo + float(np.mean(d))
    return lo + golden_section(d, p)


def best_tau(u: ScalarField, x0: ProbePoint, r: float, p: float) -> float:
    """Golden-section minimiser of the discrete ``avg_{B_r} |u - tau|^p``; the mean for ``p = 2``."""
    return minimize_pmean(ball_values(u, x0, r), p)


@dataclass
class DecayProfile:
    center: ProbePoint
    rho: float
    p: float
    r: np.ndarray
    tau: np.ndarray
    E_sup: np.ndarray
    E_pmean: np.ndarray
    E_pmean_center: np.ndarray  # p-mean with tau = u(center)
    u_center: float
    dim: int = 2
    truncated: bool = False

    @property
    def increments(self):
        return np.abs(np.diff(self.tau))

    def errors(self, mode):
        return {"sup": self.E_sup, "p_mean": self.E_pmean, "pmean": self.E_pmean}[mode]

    def as_dict(self):
        return {
            "center": self.center.as_dict(),
            "rho": self.rho,
            "p": self.p,
            "dim": self.dim,
            "truncated": self.truncated,
            "u_center": self.u_center,
            "r": self.r.tolist(),
            "tau": self.tau.tolist(),
            "E_sup": self.E_sup.tolist(),
            "E_pmean": self.E_pmean.tolist(),
            "tau_increments": self.increments.tolist(),
        }

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "r_k", "tau_k", "E_sup", "E_pmean"])
            for k in range(len(self.r)):
                w.writerow([k, repr(float(self.r[k])), repr(float(self.tau[k])),
                            repr(float(self.E_sup[k])), repr(float(self.E_pmean[k]))])


def max_levels(grid: Grid2D, r0: float, rho: float) -> int:
    """Largest ``K`` with ``r0 * rho**K >= MIN_CELLS * h``."""
    K = int(math.floor(math.log(MIN_CELLS * grid.h / r0) / math.log(rho) + 1e-9))
    return max(K, 0)


def dyadic_profile(u: ScalarField, x0: ProbePoint, rho: float = 0.5, K: int | None = None,
                   p: float = 2.0, r0: float | None = None) -> DecayProfile:
    """Oscillation data on the radii ``r_k = r0 * rho**k``, ``k = 0..K``.

    ``r0`` defaults to the distance from ``x0`` to the grid boundary.  A
    ``K`` that would push radii below ``MIN_CELLS`` spacings is truncated and
    the profile is flagged (and a warning issued).
    """
    if not 0 < rho <= 0.5:
        raise ValueError(f"rho must lie in (0, 1/2], got {rho}")
    g = u.grid
    if r0 is None:
        r0 = g.boundary_distance(*x0.index)
    kmax = max_levels(g, r0, rho)
    truncated = False
    if K is None:
        K = kmax
    elif K > kmax:
        warnings.warn(f"K={K} exceeds grid resolution at {x0.position}; truncated to {kmax}", stacklevel=2)
        K, truncated = kmax, True
    u0 = float(u.values[x0.index])
    rows = []
    for k in range(K + 1):
        r = r0 * rho**k
        vals = ball_values(u, x0, r)
        tau = minimize_pmean(vals, p)
        rows.append((
            r,
            tau,
            float(np.max(np.abs(vals - u0))),
            _pmean(vals, tau, p) ** (1 / p),
            _pmean(vals, u0, p) ** (1 / p),
        ))
    arr = np.array(rows, dtype=float).reshape(-1, 5)
    return DecayProfile(x0, rho, p, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], arr[:, 4], u0, 2, truncated)


def analytic_profile(func, center, dim, r0=1.0, rho=0.5, K=8, p=2.0, n_samples=4000, seed=0) -> DecayProfile:
    """Decay profile of an analytic function in any dimension.

    The same quasi-uniform sample of the unit ball (plus the coordinate axis
    endpoints) is scaled to every radius, so the profile of a homogeneous
    function is exactly self-similar.  Used for oracles in ``n >= 3``.
    """
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n_samples, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = rng.random(n_samples) ** (1.0 / dim)
    unit = np.vstack([dirs * radii[:, None], np.eye(dim), -np.eye(dim)])
    center = np.asarray(center, dtype=float)
    u0 = float(func(center[None, :])[0])
    rows = []
    for k in range(K + 1):
        r = r0 * rho**k
        vals = np.asarray(func(center + r * unit), dtype=float)
        tau = minimize_pmean(vals, p)
        rows.append((r, tau, float(np.max(np.abs(vals - u0))), _pmean(vals, tau, p) ** (1 / p),
                     _pmean(vals, u0, p) ** (1 / p)))
    arr = np.array(rows)
    pt = ProbePoint(tuple(center.tolist()), (-1, -1), 0.0, True)
    return DecayProfile(pt, rho, p, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], arr[:, 4], u0, dim)


class AlphaTarget(NamedTuple):
    value: float
    exclusive: bool  # the alpha_M branch is attained only in the limit


def theoretical_alpha(spec, alpha_M: float = 1.0) -> AlphaTarget:
    """``min(alpha_M^-, (q - n) / ((p - 1) q))``; ``q = inf`` gives ``1/(p-1)``."""
    if not 0 < alpha_M <= 1:
        raise ValueError(f"alpha_M must lie in (0, 1], got {alpha_M}")
    if math.isinf(spec.q):
        source = 1.0 / (spec.p - 1)
    else:
        source = (spec.q - spec.n) / ((spec.p - 1) * spec.q)
    if alpha_M <= source:
        return AlphaTarget(alpha_M, True)
    return AlphaTarget(source, False)


@dataclass
class ExponentReport:
    alpha_hat: float
    r_squared: float
    mode: str
    prefactor: float
    n_points: int
    alpha_target: float | None = None
    exclusive: bool = False
    slack: float = 0.05
    verdict: str = "n/a"

    def as_dict(self):
        return {
            "alpha_hat": None if math.isinf(self.alpha_hat) else self.alpha_hat,
            "r_squared": self.r_squared,
            "mode": self.mode,
            "prefactor": self.prefactor,
            "n_points": self.n_points,
            "alpha_target": self.alpha_target,
            "exclusive": self.exclusive,
            "slack": self.slack,
            "verdict": self.verdict,
        }


def fit_exponent(profile: DecayProfile, mode="sup", target: AlphaTarget | float | None = None,
                 slack: float = 0.05, max_radius: float | None = None) -> ExponentReport:
    """Least-squares slope of ``log E`` against ``log r``; ``alpha_hat = slope - 1``.

    Zero entries are dropped; an all-zero profile is reported as ``"flat"``
    with ``alpha_hat = inf``.  ``max_radius`` restricts the fit to smaller
    balls.
    """
    r = profile.r
    E = profile.errors(mode)
    keep = np.ones(len(r), dtype=bool) if max_radius is None else r <= max_radius * (1 + 1e-12)
    r, E = r[keep], E[keep]
    if isinstance(target, AlphaTarget):
        tval, excl = target.value, target.exclusive
    else:
        tval, excl = target, False
    if len(E) and np.all(E == 0):
        return ExponentReport(math.inf, 1.0, mode, 0.0, 0, tval, excl, slack, "flat")
    pos = E > 0
    if pos.sum() < 4:
        raise InsufficientDataError(f"need at least 4 positive entries, have {int(pos.sum())}")
    lx, ly = np.log(r[pos]), np.log(E[pos])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    r2 = min(max(r2, 0.0), 1.0)
    alpha = float(slope - 1.0)
    verdict = "n/a" if tval is None else ("pass" if alpha >= tval - slack else "fail")
    return ExponentReport(alpha, r2, mode, float(math.exp(intercept)), int(pos.sum()), tval, excl, slack, verdict)


@dataclass
class CauchyReport:
    alpha: float
    amplitude: float
    budget: float
    max_ratio: float
    limit_constant: float
    limit_budget: float

    @property
    def within_budget(self):
        return self.max_ratio <= self.budget

    @property
    def limit_ok(self):
        return self.limit_constant <= self.limit_budget

    def as_dict(self):
        return {
            "alpha": self.alpha,
            "amplitude": self.amplitude,
            "budget": self.budget,
            "max_ratio": self.max_ratio,
            "within_budget": self.within_budget,
            "limit_constant": self.limit_constant,
            "limit_budget": self.limit_budget,
            "limit_ok": self.limit_ok,
        }


def cauchy_check(profile: DecayProfile, alpha: float | None = None) -> CauchyReport:
    """Increments of ``tau_k`` against the geometric budget of the p-mean decay.

    With ``A = max_k E_k / rho^{k(1+alpha)}`` (so that the normalised
    profile obeys ``E_k <= rho^{k(1+alpha)}``) the increments must satisfy
    ``|tau_{k+1} - tau_k| <= C A rho^{k(1+alpha)}`` with
    ``C = 2^{1+1/p} (1 + rho^{-n/p})``, and ``|tau_k - u(x0)|`` must stay
    below ``C / (1 - rho)`` on the same scale.  ``alpha`` defaults to the
    fitted p-mean exponent.
    """
    rho, p, n = profile.rho, profile.p, profile.dim
    E = profile.E_pmean
    budget = 2 ** (1 + 1 / p) * (1 + rho ** (-n / p))
    if np.all(E == 0):
        return CauchyReport(math.inf, 0.0, budget, 0.0, 0.0, budget / (1 - rho))
    if alpha is None:
        alpha = fit_exponent(profile, "p_mean").alpha_hat
    k = np.arange(len(E))
    scale = rho ** (k * (1 + alpha))
    A = float(np.max(E / scale))
    inc = profile.increments
    ratio = float(np.max(inc / (A * scale[:-1]))) if len(inc) else 0.0
    lim = float(np.max(np.abs(profile.tau - profile.u_center) / (A * scale)))
    return CauchyReport(float(alpha), A, budget, ratio, lim, budget / (1 - rho))


# --- normalisation ------------------------------------------------------

@dataclass
class NormalizationParams:
    zeta: float
    kappa: float
    eps0: float
    branches: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def as_dict(self):
        return {
            "zeta": self.zeta,
            "kappa": self.kappa,
            "eps0": self.eps0,
            "branches": self.branches,
            "checks": self.checks,
            "warnings": list(self.warnings),
        }


class RescaledView:
    """``v(X) = (u(x0 + zeta X) - u(x0)) / kappa``.

    Calling the view interpolates bilinearly; :meth:`field` returns ``v`` on
    the nodes of ``u`` (no interpolation), on the box ``|X|_inf <= half_width``.
    """

    def __init__(self, u: ScalarField, center: ProbePoint, zeta: float, kappa: float):
        self.u = u
        self.center = center
        self.zeta = zeta
        self.kappa = kappa
        self.u0 = float(u.values[center.index])
        g = u.grid
        self._interp = RegularGridInterpolator((g.x, g.y), u.values, method="linear")

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        pts = np.asarray(self.center.position) + self.zeta * X
        return (self._interp(pts) - self.u0) / self.kappa

    def field(self, half_width=2.0) -> ScalarField:
        g = self.u.grid
        i0, j0 = self.center.index
        mi = int(math.ceil(half_width * self.zeta / g.hx * (1 - 1e-12)))
        mj = int(math.ceil(half_width * self.zeta / g.hy * (1 - 1e-12)))
        if i0 - mi < 0 or j0 - mj < 0 or i0 + mi >= g.nx or j0 + mj >= g.ny:
            raise GeometryError("rescaled box leaves the grid")
        hx, hy = g.hx / self.zeta, g.hy / self.zeta
        sub = Grid2D(2 * mi + 1, 2 * mj + 1, hx, hy, -mi * hx, -mj * hy)
        vals = (self.u.values[i0 - mi:i0 + mi + 1, j0 - mj:j0 + mj + 1] - self.u0) / self.kappa
        return ScalarField(sub, vals)

    def modulus(self, omega: Modulus) -> Modulus:
        """Coefficient modulus seen by ``v``: ``t -> omega(zeta t)``."""
        return Modulus.dilated(self.zeta, omega)

    def source_norm(self, mu_norm: float, spec) -> float:
        """Bound ``zeta^{p - n/q} kappa^{1-p} |mu|`` on the source of the equation for ``v``."""
        expo = spec.p - (0.0 if math.isinf(spec.q) else spec.n / spec.q)
        return self.zeta**expo * self.kappa ** (1 - spec.p) * mu_norm

    def center_point(self, v: ScalarField) -> ProbePoint:
        return ProbePoint((0.0, 0.0), ((v.grid.nx - 1) // 2, (v.grid.ny - 1) // 2), 0.0, True)


def lq_norm(mu: ScalarField, q: float) -> float:
    """Discrete ``L^q`` norm of a grid field (trapezoid weights)."""
    g = mu.grid
    if math.isinf(q):
        return float(np.max(np.abs(mu.values)))
    w = np.ones(g.shape)
    w[[0, -1], :] *= 0.5
    w[:, [0, -1]] *= 0.5
    return float((g.hx * g.hy * np.sum(w * np.abs(mu.values) ** q)) ** (1 / q))


def normalize_at(u: ScalarField, x0: ProbePoint, mu_norm: float, omega: Modulus, spec,
                 eps0: float = 0.1):
    """Scales that put ``u`` near ``x0`` into the small regime.

    ``zeta = min(1, dist/2, (eps0/|mu|)^{1/(p - n/q)}, omega^{-1}(eps0/LambdaTilde))``
    (the source branch is skipped when ``mu_norm == 0``) and
    ``kappa = max(1, (zeta^{-n} avg_{B_1} |u - u(x0)|^p)^{1/p})``, where the
    average is a quadrature over the ball divided by its area.  If ``x0`` is
    closer than one unit to the boundary the ball shrinks to the boundary
    distance ``d`` and the average is multiplied by ``d^n``.

    Returns ``(NormalizationParams, RescaledView)``.  The three smallness
    conditions are evaluated and stored in ``params.checks``.
    """
    g = u.grid
    p, n = spec.p, 2
    i0, j0 = x0.index
    dist = g.boundary_distance(i0, j0)
    if dist < MIN_CELLS * g.h:
        raise GeometryError(f"probe point {x0.position} is within {MIN_CELLS} spacings of the boundary")
    notes = []
    branches = {"unit": 1.0, "boundary": 0.5 * dist}
    if mu_norm > 0:
        expo = p - (0.0 if math.isinf(spec.q) else spec.n / spec.q)
        branches["source"] = (eps0 / mu_norm) ** (1.0 / expo)
    inv = inverse_modulus(omega, eps0 / spec.Lam_tilde)
    branches["modulus"] = inv.t
    if inv.saturated:
        notes.append(f"inverse modulus saturated; zeta capped at T={inv.t}")
        logger.warning(notes[-1])
    zeta = min(branches.values())
    if zeta < g.h:
        notes.append(f"zeta={zeta:.3g} is below the grid spacing {g.h:.3g}; rescaled view is unresolved")

    r1 = min(1.0, dist)
    vals = ball_values(u, x0, r1, check_resolution=False)
    u0 = float(u.values[i0, j0])
    integral = g.hx * g.hy * float(np.sum(np.abs(vals - u0) ** p))
    kappa = max(1.0, (zeta ** (-n) * integral / math.pi) ** (1.0 / p))

    du = gradient_field(u).components[i0, j0]
    src = 0.0
    if mu_norm > 0:
        src = zeta ** (p - (0.0 if math.isinf(spec.q) else spec.n / spec.q)) * kappa ** (1 - p) * mu_norm
    osc = spec.Lam_tilde * float(omega(min(zeta, omega.T)))
    checks = {
        "gradient": {"value": float(zeta * np.hypot(*du) / kappa), "bound": eps0 + 10 * g.h},
        "source": {"value": src, "bound": eps0},
        "coefficient": {"value": osc, "bound": eps0},
    }
    for c in checks.values():
        c["ok"] = bool(c["value"] <= c["bound"] * (1 + 1e-9))
    params = NormalizationParams(zeta, kappa, eps0, branches, checks, notes)
    return params, RescaledView(u, x0, zeta, kappa)


def one_step_decay(u: ScalarField, x0: ProbePoint, rho: float, alpha: float, p: float) -> bool:
    """Whether the best constant achieves ``avg_{B_rho} |u - tau|^p <= rho^{p(1+alpha)}``.

    ``u`` must be normalised: ``avg_{B_1(x0)} |u|^p <= 1``.
    """
    norm = _pmean(ball_values(u, x0, 1.0, check_resolution=False), 0.0, p)
    if norm > 1 + 1e-12:
        raise PreconditionError(f"field is not normalised: avg |u|^p over B_1 = {norm:.6g} > 1", measured=norm)
    vals = ball_values(u, x0, rho)
    tau = minimize_pmean(vals, p)
    return _pmean(vals, tau, p) <= rho ** (p * (1 + alpha))
