"""Moduli of continuity, Dini-type integrals and structure checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, InvalidFieldError, PreconditionError, ValidationError

T_MIN = 1e-300


class Modulus:
    """A modulus of continuity ``omega`` on ``(0, T]``.

    Build instances with :meth:`holder`, :meth:`log_power`, :meth:`scaled`,
    :meth:`custom` or :meth:`dilated`.  Besides plain evaluation each kind
    knows ``log omega(exp(-s))`` in closed form, which keeps the Dini
    integrals free of underflow deep into the tail.
    """

    def __init__(self, kind, params, T, log_tail, func, inner=None):
        self.kind = kind
        self.params = params
        self.T = float(T)
        self.inner = inner
        self._log_tail = log_tail
        self._func = func

    def __repr__(self):
        return f"Modulus({self.describe()})"

    # --- constructors -------------------------------------------------
    @classmethod
    def holder(cls, eps, T=math.inf):
        if not eps > 0:
            raise ValidationError(f"Hoelder exponent must be positive, got {eps}")
        return cls("holder", {"eps": eps}, T, lambda s: -eps * s, lambda t: t**eps)

    @classmethod
    def log_power(cls, beta, T=0.5):
        """``omega(t) = log(1/t)^(-beta)``, defined for ``t < 1``."""
        if not beta > 0:
            raise ValidationError(f"log-power exponent must be positive, got {beta}")
        if not 0 < T < 1:
            raise ValidationError("log_power modulus needs T < 1")
        return cls(
            "log_power",
            {"beta": beta},
            T,
            lambda s: -beta * np.log(s),
            lambda t: np.log(1.0 / t) ** (-beta),
        )

    @classmethod
    def scaled(cls, c, inner):
        if not c > 0:
            raise ValidationError(f"scale factor must be positive, got {c}")
        return cls(
            "scaled", {"c": c}, inner.T, lambda s: math.log(c) + inner._log_tail(s), lambda t: c * inner._func(t), inner
        )

    @classmethod
    def dilated(cls, zeta, inner):
        """``t -> omega(zeta * t)``: the modulus seen after rescaling space by ``zeta``."""
        if not zeta > 0:
            raise ValidationError(f"dilation must be positive, got {zeta}")
        lz = math.log(zeta)
        return cls(
            "dilated",
            {"zeta": zeta},
            inner.T / zeta,
            lambda s: inner._log_tail(s - lz),
            lambda t: inner._func(zeta * t),
            inner,
        )

    @classmethod
    def custom(cls, t, w):
        """Piecewise-linear modulus through a sampled table, linear to 0 below ``t[0]``."""
        t = np.asarray(t, dtype=float)
        w = np.asarray(w, dtype=float)
        if t.ndim != 1 or t.shape != w.shape or len(t) < 2:
            raise ValidationError("custom modulus needs matching 1D tables of length >= 2")
        if np.any(np.diff(t) <= 0) or t[0] <= 0 or np.any(w <= 0):
            raise ValidationError("custom modulus table must have increasing t > 0 and positive values")
        t0, w0 = t[0], w[0]

        def func(x):
            x = np.asarray(x, dtype=float)
            return np.where(x < t0, x * (w0 / t0), np.interp(x, t, w))

        def log_tail(s):
            s = np.asarray(s, dtype=float)
            small = -s < math.log(t0)
            with np.errstate(over="ignore"):
                inside = np.log(np.interp(np.exp(-np.minimum(s, 700.0)), t, w))
            return np.where(small, math.log(w0 / t0) - s, inside)

        return cls("custom", {"t": t.tolist(), "w": w.tolist()}, t[-1], log_tail, func)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kind = d.pop("kind")
        T = d.pop("T", None)
        extra = {} if T is None else {"T": T}
        if kind == "holder":
            return cls.holder(d["eps"], **extra)
        if kind == "log_power":
            return cls.log_power(d["beta"], **extra)
        if kind == "scaled":
            return cls.scaled(d["c"], cls.from_dict(d["inner"]))
        if kind == "dilated":
            return cls.dilated(d["zeta"], cls.from_dict(d["inner"]))
        if kind == "custom":
            return cls.custom(d["t"], d["w"])
        raise ValidationError(f"unknown modulus kind {kind!r}")

    def describe(self):
        out = {"kind": self.kind, **self.params}
        if self.inner is not None:
            out["inner"] = self.inner.describe()
        return out

    # --- evaluation ---------------------------------------------------
    def __call__(self, t):
        return self._func(t)

    def log_tail(self, s):
        """``log omega(exp(-s))``."""
        return self._log_tail(s)


def eval_modulus(omega: Modulus, t):
    """``omega(t)`` for ``0 < t <= T``."""
    ta = np.asarray(t, dtype=float)
    if np.any(ta <= 0) or np.any(ta > omega.T):
        raise DomainError(f"modulus evaluated outside (0, {omega.T}]: {t}")
    out = omega(ta)
    return float(out) if np.ndim(out) == 0 else out


def _log_mesh(omega, num=600):
    # coarse over the whole range, fine over the last decades, plus table knots
    hi = math.log(min(omega.T, 1e300))
    parts = [np.linspace(math.log(T_MIN), hi, num), np.linspace(max(hi - 40.0, math.log(T_MIN)), hi, 4 * num)]
    if omega.kind == "custom":
        parts.append(np.log(omega.params["t"]))
    return np.unique(np.concatenate(parts))


def check_monotone(omega: Modulus) -> bool:
    """Strict increase of ``omega`` on a geometric mesh of ``[T_MIN, T]``."""
    vals = omega.log_tail(-_log_mesh(omega))
    return bool(np.all(np.isfinite(vals)) and np.all(np.diff(vals) > 0))


class Inverse(NamedTuple):
    t: float
    saturated: bool


def inverse_modulus(omega: Modulus, s: float) -> Inverse:
    """Solve ``omega(t) = s`` by bisection in ``log t`` on ``[T_MIN, T]``.

    If ``s`` exceeds ``omega(T)`` the result is ``T`` with ``saturated`` set.
    """
    if not s > 0:
        raise DomainError(f"inverse modulus needs s > 0, got {s}")
    if not check_monotone(omega):
        raise PreconditionError(f"modulus {omega.describe()} is not strictly increasing")
    ls = math.log(s)
    lo, hi = math.log(T_MIN), math.log(min(omega.T, 1e300))
    if omega.log_tail(-hi) < ls:
        return Inverse(math.exp(hi), True)
    if omega.log_tail(-lo) > ls:
        raise DomainError(f"s={s} is below omega(T_MIN)")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if omega.log_tail(-mid) < ls:
            lo = mid
        else:
            hi = mid
    t = math.exp(hi)
    return Inverse(t, False)


@dataclass
class DiniResult:
    value: float
    diverges: bool
    exponent: float
    regime: str
    partials: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "value": None if self.diverges else self.value,
            "diverges": self.diverges,
            "exponent": self.exponent,
            "regime": self.regime,
            "partials": self.partials,
        }


WINDOWS = (10, 20, 40, 80)


def dini_integral(omega: Modulus, p: float, R: float, sigma: float = 0.1,
                  increment_tol: float = 1e-8) -> DiniResult:
    """Integral of ``omega(t)^e dt/t`` over ``(0, R]``.

    ``e = 2/p`` when ``p >= 2`` and ``e = 1 - sigma`` otherwise.  After the
    substitution ``t = exp(-s)`` the integrand lives on ``[log(1/R), inf)``.
    Partial integrals over ``s0 + [0, k]`` for ``k`` in 10, 20, 40, 80 decide
    divergence: the integral diverges when the last increment stays above
    ``increment_tol`` without shrinking.  Otherwise the value comes from an
    adaptive quadrature on the infinite interval (with epsilon-algorithm
    tail extrapolation).
    """
    if not R > 0:
        raise DomainError(f"R must be positive, got {R}")
    if R > omega.T:
        raise DomainError(f"R={R} exceeds the modulus domain T={omega.T}")
    if p >= 2:
        e, regime = 2.0 / p, "p>=2"
    else:
        if not sigma > 0:
            raise DomainError("sigma must be positive in the p < 2 regime")
        e, regime = 1.0 - sigma, "p<2"
    s0 = math.log(1.0 / R)

    def integrand(s):
        return math.exp(e * float(omega.log_tail(s)))

    pieces = []
    prev = 0
    for k in WINDOWS:
        val, _ = quad(integrand, s0 + prev, s0 + k, epsabs=1e-14, epsrel=1e-12, limit=400)
        pieces.append(val)
        prev = k
    partial = np.cumsum(pieces)
    partials = {f"I_{k}": float(v) for k, v in zip(WINDOWS, partial)}
    incs = np.diff(partial)
    diverges = bool(incs[-1] >= increment_tol and incs[-1] >= incs[-2] * (1 - 1e-3))
    if diverges:
        return DiniResult(math.inf, True, e, regime, partials)
    tail, _ = quad(integrand, s0 + WINDOWS[-1], math.inf, epsabs=1e-14, epsrel=1e-12, limit=400)
    return DiniResult(float(partial[-1] + tail), False, e, regime, partials)


# --- structure conditions ---------------------------------------------------

@dataclass
class SamplingPlan:
    X: np.ndarray  # (m, 2)
    Y: np.ndarray  # (m, 2)
    shells: np.ndarray  # |xi| values
    directions: np.ndarray  # (d, 2) unit vectors

    @property
    def size(self):
        return len(self.X) * len(self.shells) * len(self.directions)


def make_sampling_plan(bounds=(-1.0, 1.0, -1.0, 1.0), n_pairs=100, n_shells=20, n_dirs=8, seed=0,
                       xi_range=(1e-6, 1e3)) -> SamplingPlan:
    rng = np.random.default_rng(seed)
    xmin, xmax, ymin, ymax = bounds
    lo = np.array([xmin, ymin])
    span = np.array([xmax - xmin, ymax - ymin])
    X = lo + span * rng.random((n_pairs, 2))
    Y = lo + span * rng.random((n_pairs, 2))
    shells = np.geomspace(xi_range[0], xi_range[1], n_shells)
    ang = (np.arange(n_dirs) + rng.random()) * (2 * np.pi / n_dirs)
    return SamplingPlan(X, Y, shells, np.stack([np.cos(ang), np.sin(ang)], axis=1))


@dataclass
class StructureReport:
    bound_growth: float
    bound_ellipticity: float
    bound_oscillation: float
    n_samples: int
    tol: float
    growth_by_shell: list = field(default_factory=list)

    @property
    def verdict(self) -> bool:
        return max(self.bound_growth, self.bound_ellipticity, self.bound_oscillation) <= 1 + self.tol

    def as_dict(self):
        return {
            "bound_growth": self.bound_growth,
            "bound_ellipticity": self.bound_ellipticity,
            "bound_oscillation": self.bound_oscillation,
            "n_samples": self.n_samples,
            "tol": self.tol,
            "verdict": "pass" if self.verdict else "fail",
        }


def _call(a, X, xi):
    out = np.asarray(a(X, xi), dtype=float)
    if np.any(np.isnan(out)):
        raise InvalidFieldError("vector field returned NaN")
    return out


def check_structure(a, spec, omega: Modulus, samples: SamplingPlan, tol: float = 1e-4,
                    fd_step: float = 1e-6) -> StructureReport:
    """Sample the growth, ellipticity and coefficient-oscillation bounds.

    ``a(X, xi)`` takes arrays of shape ``(m, 2)``.  The xi-Jacobian is
    approximated by central differences with step ``fd_step * |xi|``; the
    ellipticity ratio uses the smallest eigenvalue of its symmetric part,
    i.e. the worst direction ``xi_2``.  Each ratio is ``<= 1`` exactly when
    the corresponding bound holds.
    """
    p = spec.p
    m, S, D = len(samples.X), len(samples.shells), len(samples.directions)
    xi = (samples.shells[None, :, None, None] * samples.directions[None, None, :, :])
    xi = np.broadcast_to(xi, (m, S, D, 2)).reshape(-1, 2)
    X = np.repeat(samples.X, S * D, axis=0)
    Y = np.repeat(samples.Y, S * D, axis=0)
    r = np.linalg.norm(xi, axis=1)
    scale = r ** (p - 1)

    growth = np.zeros((2, len(r)))
    ellip = np.zeros((2, len(r)))
    aX = None
    for idx, P in enumerate((X, Y)):
        a0 = _call(a, P, xi)
        if idx == 0:
            aX = a0
        h = fd_step * r
        J = np.empty((len(r), 2, 2))
        for k in range(2):
            e = np.zeros(2)
            e[k] = 1.0
            dplus = _call(a, P, xi + h[:, None] * e)
            dminus = _call(a, P, xi - h[:, None] * e)
            J[:, :, k] = (dplus - dminus) / (2 * h[:, None])
        with np.errstate(divide="ignore", invalid="ignore"):
            growth[idx] = np.maximum(
                np.linalg.norm(a0, axis=1), np.linalg.norm(J, ord=2, axis=(1, 2)) * r
            ) / (spec.Lam * scale)
            lam_min = np.linalg.eigvalsh(0.5 * (J + np.swapaxes(J, 1, 2)))[:, 0]
            ellip[idx] = np.where(lam_min > 0, spec.lam * r ** (p - 2) / lam_min, np.inf)
    aY = _call(a, Y, xi)
    dist = np.linalg.norm(X - Y, axis=1)
    w = omega(np.minimum(dist, omega.T))
    with np.errstate(divide="ignore", invalid="ignore"):
        osc = np.linalg.norm(aX - aY, axis=1) / (spec.Lam_tilde * w * scale)
    osc = np.where(dist > 0, osc, 0.0)
    gmax = growth.max(axis=0)
    by_shell = gmax.reshape(m, S, D).max(axis=(0, 2))
    return StructureReport(
        float(np.max(gmax)),
        float(np.max(ellip)),
        float(np.max(osc)),
        int(2 * len(r)),
        tol,
        by_shell.tolist(),
    )
