import numpy as np
import pytest

from lagcheck.jets import ComplexJet, Jet, jet_dot, jet_space, potential_from_gradient


def seed(nvars, order, values):
    sp = jet_space(nvars, order)
    return sp, Jet.variables(sp, np.asarray(values, dtype=float))


def test_polynomial_derivatives_exact():
    sp, (x, y) = seed(2, 4, [1.5, -0.5])
    f = x * x * y + y * y * y  # f = x^2 y + y^3
    assert f.value == pytest.approx(1.5**2 * -0.5 + (-0.5) ** 3)
    assert f.deriv((1, 0)) == pytest.approx(2 * 1.5 * -0.5)
    assert f.deriv((0, 1)) == pytest.approx(1.5**2 + 3 * 0.25)
    assert f.deriv((2, 1)) == pytest.approx(2.0)
    assert f.deriv((0, 3)) == pytest.approx(6.0)
    assert f.deriv((2, 2)) == pytest.approx(0.0)


def test_rational_function_fourth_order():
    # f(t) = 1 / (1 + t^2); f''''(0) = 24
    sp, (t,) = seed(1, 4, [0.0])
    f = 1.0 / (1.0 + t * t)
    assert f.deriv((0,)) == pytest.approx(1.0)
    assert f.deriv((2,)) == pytest.approx(-2.0)
    assert f.deriv((4,)) == pytest.approx(24.0)


def test_transcendental_composition():
    sp, (t,) = seed(1, 4, [0.3])
    f = (t * t).sin() + t.exp()
    t0 = 0.3
    # d/dt sin(t^2) = 2t cos(t^2), second derivative 2cos(t^2) - 4t^2 sin(t^2)
    assert f.deriv((1,)) == pytest.approx(2 * t0 * np.cos(t0**2) + np.exp(t0))
    assert f.deriv((2,)) == pytest.approx(
        2 * np.cos(t0**2) - 4 * t0**2 * np.sin(t0**2) + np.exp(t0)
    )


def test_sqrt_and_division_roundtrip():
    sp, (x, y) = seed(2, 4, [0.7, 0.2])
    g = 1.0 + x * x + y * y
    r = g.sqrt()
    back = r * r - g
    assert np.max(np.abs(back.c)) < 1e-13
    q = x / g
    recon = q * g - x
    assert np.max(np.abs(recon.c)) < 1e-13


def test_mixed_partials_symmetric_by_construction():
    sp, (x, y, z) = seed(3, 3, [0.2, -0.4, 1.1])
    f = (x * y * z + x * x * y).sin()
    assert f.deriv((1, 1, 1)) == f.deriv((1, 1, 1))
    d1 = f.partial(0).partial(1).value
    d2 = f.partial(1).partial(0).value
    assert d1 == pytest.approx(d2, abs=1e-15)


def test_batch_matches_scalar_evaluation():
    sp = jet_space(2, 3)
    pts = np.array([[0.1, 0.2], [1.0, -0.3], [0.5, 0.5]]).T  # (nvars, B)
    xs = Jet.variables(sp, pts)
    f = (xs[0] * xs[1]).cos() + xs[0] / (1.0 + xs[1] * xs[1])
    for b in range(3):
        xb = Jet.variables(sp, pts[:, b : b + 1])
        fb = (xb[0] * xb[1]).cos() + xb[0] / (1.0 + xb[1] * xb[1])
        assert np.allclose(f.c[:, b], fb.c[:, 0], atol=1e-15)


def test_partial_reduces_valid_order():
    sp, (x, y) = seed(2, 3, [0.3, 0.4])
    f = x * x * y
    fx = f.partial(0)
    assert fx.order == 2
    assert fx.deriv((1, 1)) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        fx.deriv((2, 1))


def test_truncation_blocks_stale_coefficients():
    sp, (x, y) = seed(2, 4, [0.2, 0.1])
    f = (x + y) * (x + y) * (x + y)
    g = f.partial(0)  # order 3 valid
    h = g * g  # order 3 valid, degree-4 rows must be zero
    assert np.all(h.c[sp.degrees > 3] == 0.0)


def test_jet_dot():
    sp, (x, y) = seed(2, 2, [0.5, 0.25])
    u = [x, y]
    v = [y, x]
    d = jet_dot(u, v)
    assert d.value == pytest.approx(2 * 0.5 * 0.25)


def test_potential_from_gradient_recovers_function():
    # F = x^2 y + 3x; grads bilt as a = dF => psi = -F + F(p)
    sp = jet_space(2, 3)
    x, y = Jet.variables(sp, np.array([[0.4], [-0.2]]))
    F = x * x * y + 3.0 * x
    a = [F.partial(0), F.partial(1)]
    psi = potential_from_gradient(sp, a)
    for v in range(2):
        resid = psi.partial(v) + a[v]
        assert np.max(np.abs(resid.c[: sp.ncoef_by_degree[1]])) < 1e-13
    assert psi.value == pytest.approx(0.0)


def test_complex_jet_algebra():
    sp, (t,) = seed(1, 3, [0.2])
    z = ComplexJet(t.cos(), t.sin())  # e^{it}
    w = z * z.conj()
    assert np.max(np.abs(w.re.c - Jet.constant(sp, 1.0).c[: sp.ncoef])) < 1e-13
    assert np.max(np.abs(w.im.c)) < 1e-13
    q = ComplexJet.from_real(1.0 + t * t) / z
    # (1+t^2) e^{-it}: value and first derivative
    assert q.re.value == pytest.approx((1 + 0.04) * np.cos(0.2))
    assert q.im.value == pytest.approx(-(1 + 0.04) * np.sin(0.2))
    d_re = q.re.deriv((1,))
    assert d_re == pytest.approx(2 * 0.2 * np.cos(0.2) - (1 + 0.04) * np.sin(0.2))
