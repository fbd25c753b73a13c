import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from critreg import (
    Coefficient,
    Grid2D,
    ModelField,
    contrast_1d,
    harmonic_polynomial,
    manufactured,
    radial_p_poisson,
)
from critreg.oracles import by_name, contrast_exponents, source_at

ORACLES = [radial_p_poisson(p, n) for p in (1.8, 2.0, 3.0) for n in (2, 3)] + [
    harmonic_polynomial("saddle"),
    harmonic_polynomial("cubic"),
]


def random_points(rng, dim, m=20, rmin=0.1, rmax=0.9):
    d = rng.standard_normal((m, dim))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return d * rng.uniform(rmin, rmax, size=(m, 1))


@pytest.mark.parametrize("orc", ORACLES, ids=lambda o: o.name)
def test_gradient_matches_finite_differences(orc, rng):
    X = random_points(rng, orc.dim)
    errs = []
    for step in (1e-3, 5e-4):
        fd = np.empty_like(X)
        for k in range(orc.dim):
            e = np.zeros(orc.dim)
            e[k] = step
            fd[:, k] = (orc.evaluate(X + e) - orc.evaluate(X - e)) / (2 * step)
        errs.append(np.max(np.abs(fd - orc.gradient(X))))
    # O(step^2): halving the step cuts the error by about four (or it is at rounding level)
    assert errs[1] <= max(errs[0] / 3, 1e-9)
    assert errs[0] <= 1e-4


@pytest.mark.parametrize("orc", ORACLES, ids=lambda o: o.name)
def test_known_decay_on_analytic_evaluation(orc):
    kd = orc.known_decay
    c = np.asarray(kd.center, dtype=float)
    u0 = orc.evaluate(c)
    ang = np.linspace(0, 2 * np.pi, 3601)
    if orc.dim == 2:
        sphere = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    else:
        sphere = np.stack([np.cos(ang), np.sin(ang), np.zeros_like(ang)], axis=1)
    for r in (1e-3, 0.1, 0.5, 1.0):
        # the sup over the ball is attained on its boundary sphere
        sup = np.max(np.abs(orc.evaluate(c + r * sphere) - u0))
        assert sup == pytest.approx(kd.prefactor * r**kd.exponent, rel=1e-10)


def test_radial_examples():
    orc = radial_p_poisson(2.0, 2, R=1.5)
    X = np.array([[0.3, 0.4], [1.0, 0.0]])
    np.testing.assert_allclose(orc.evaluate(X), (1.5**2 - np.array([0.25, 1.0])) / 4, rtol=1e-14)
    assert orc.known_decay.prefactor == pytest.approx(0.25) and orc.known_decay.exponent == 2.0
    assert radial_p_poisson(3.0).known_decay.exponent == pytest.approx(1.5)
    for p in (1.6, 2.5, 4.0):
        for n in (2, 3, 5):
            g0 = radial_p_poisson(p, n).gradient(np.zeros((1, n)))
            assert np.all(g0 == 0)
    assert radial_p_poisson(3.0).evaluate(np.array([1.0, 0.0])) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        radial_p_poisson(1.0)


@pytest.mark.parametrize("p", [1.8, 2.0, 3.0])
@pytest.mark.parametrize("n", [2, 3])
def test_radial_solves_pde(p, n, rng):
    orc = radial_p_poisson(p, n)
    X = random_points(rng, n, m=50, rmin=0.2)
    coeff = (lambda x, y: np.ones_like(x)) if n == 2 else (lambda P: np.ones(P.shape[:-1]))
    # the flux |Du|^{p-2} Du = -X/n is linear, so the difference quotient is exact up to rounding
    for h in (1e-2, 5e-3):
        mu, flags = source_at(X, coeff, p, orc.gradient, h)
        assert not flags.any()
        assert np.max(np.abs(mu - 1.0)) <= 1e-10


def test_harmonic_polynomials_discrete_harmonic():
    g = Grid2D.from_bounds(41, 41, -1, 1, -1, 1)
    for kind in ("saddle", "cubic"):
        u = harmonic_polynomial(kind).sample(g).values
        lap = (u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2] - 4 * u[1:-1, 1:-1]) / g.h**2
        assert np.max(np.abs(lap)) <= 1e-9
    with pytest.raises(ValueError):
        harmonic_polynomial("quartic")


def test_cubic_decay_examples():
    orc = harmonic_polynomial("cubic")
    assert orc.known_decay.exponent == 3.0 and orc.known_decay.prefactor == 1.0
    assert by_name("degree-3").name == "cubic"


def test_manufactured_examples():
    g = Grid2D.from_bounds(65, 65, -1, 1, -1, 1)
    for p in (1.8, 3.0):
        mu = manufactured(ModelField(Coefficient.constant(), p), radial_p_poisson(p), g)
        X, Y = g.mesh()
        away = np.hypot(X, Y) > 0.25
        assert np.max(np.abs(mu.values[away] - 1.0)) <= 5 * g.h**2
    mu = manufactured(ModelField(Coefficient.constant(), 2.0), harmonic_polynomial("saddle"), g)
    assert np.max(np.abs(mu.values)) <= 1e-12


def test_manufactured_variable_coefficient():
    # -div((1 + x) D(x^2 - y^2)) = -(2 + 4x) + (2 + 2x) = -2x
    g = Grid2D.from_bounds(33, 33, -0.5, 0.5, -0.5, 0.5)
    mu = manufactured(ModelField(Coefficient.affine(1.0, 1.0, 0.0), 2.0), harmonic_polynomial("saddle"), g)
    X, _ = g.mesh()
    np.testing.assert_allclose(mu.values, -2 * X, atol=1e-12)


def test_manufactured_flags_degenerate_points():
    orc = harmonic_polynomial("saddle")
    h = 0.1
    pts = np.array([[0.5 * h, 0.0], [0.5, 0.5]])
    mu, flags = source_at(pts, lambda x, y: np.ones_like(x), 1.8, orc.gradient, h)
    assert flags.tolist() == [True, False]
    assert np.all(np.isfinite(mu))
    g = Grid2D.from_bounds(33, 33, -1, 1, -1, 1)
    _, flags = manufactured(ModelField(Coefficient.constant(), 1.8), orc, g, return_flags=True)
    assert not flags.any()


def test_contrast_oracle():
    orc = contrast_1d(0.1)
    x = np.linspace(-1, 1, 2001)
    assert np.all(orc.a(x) >= 1.0)
    assert orc.gradient(orc.x0) == 0.0
    holder, alpha = contrast_exponents(orc)
    assert holder == pytest.approx(0.1, abs=0.03)
    assert alpha >= 0.9


def test_contrast_increment_matches_trapezoid_rule():
    orc = contrast_1d(0.5, x1=0.5, x0=-0.25)
    # away from the kink the trapezoid rule on a fine mesh is an independent reference
    d = 0.3
    xs = np.linspace(orc.x0, orc.x0 + d, 20001)
    ref = trapezoid(orc.gradient(xs), xs)
    assert orc.increment(orc.x0, d) == pytest.approx(ref, rel=1e-7)
    assert orc.evaluate(orc.x0) == 0.0


def test_contrast_gradient_increment_stable():
    orc = contrast_1d(0.1)
    d = np.array([1e-3, -1e-3])
    direct = orc.gradient(orc.x1 + d) - orc.gradient(orc.x1)
    np.testing.assert_allclose(orc.gradient_increment(d), direct, rtol=1e-9)


@pytest.mark.parametrize("kw", [dict(eps_coeff=0.0), dict(eps_coeff=1.0), dict(eps_coeff=0.5, x1=0.2, x0=0.2),
                                dict(eps_coeff=0.5, x1=1.5)])
def test_contrast_preconditions(kw):
    with pytest.raises(ValueError):
        contrast_1d(**kw)


def test_by_name():
    assert by_name("radial", p=3.0).known_decay.exponent == pytest.approx(1.5)
    assert by_name("saddle").name == "saddle"
    with pytest.raises(ValueError):
        by_name("nope")


def test_describe_is_json_ready():
    import json

    for orc in ORACLES:
        d = orc.describe()
        json.dumps(d)
        assert d["dim"] == orc.dim and math.isfinite(d["known_decay"]["exponent"])
