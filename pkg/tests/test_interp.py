"""Grid interpolation: cubic exactness, derivative order, far field."""

import numpy as np
import pytest

from phlab.interp import GridInterpolant


def test_reproduces_cubics_exactly_1d():
    xs = np.linspace(-2.0, 2.0, 65)
    poly = lambda t: 0.3 * t ** 3 - 0.5 * t ** 2 + 2.0 * t - 1.0
    interp = GridInterpolant(np.array([-2.0]), xs[1] - xs[0], poly(xs))
    q = np.linspace(-1.9, 1.9, 101)
    vals, derivs = interp(q, deriv=True)
    assert np.max(np.abs(vals[:, 0] - poly(q))) < 1e-12
    dpoly = 0.9 * q ** 2 - q + 2.0
    assert np.max(np.abs(derivs[:, 0] - dpoly)) < 1e-11


def test_quartic_error_order_1d():
    f = np.sin
    errors = []
    for npts in (33, 65):
        xs = np.linspace(-2.0, 2.0, npts)
        interp = GridInterpolant(np.array([-2.0]), xs[1] - xs[0], f(xs))
        q = np.linspace(-1.5, 1.5, 997)
        errors.append(float(np.max(np.abs(interp(q)[:, 0] - f(q)))))
    assert errors[1] <= errors[0] / 12.0   # ~16x for a quartic scheme


def test_affine_far_field_1d():
    xs = np.linspace(-2.0, 2.0, 65)
    vals = 0.1 * xs ** 2
    interp = GridInterpolant(np.array([-2.0]), xs[1] - xs[0], vals)
    inside_v, inside_d = interp(np.array([2.0]), deriv=True)
    out = interp(np.array([3.0]))
    assert out[0, 0] == pytest.approx(
        inside_v[0, 0] + inside_d[0, 0] * 1.0, rel=1e-12)


def test_2d_separable_cubic_exact():
    g = np.linspace(-1.0, 1.0, 17)
    a, b = np.meshgrid(g, g, indexing="ij")
    poly = lambda u, v: u ** 3 - 2.0 * u * v + 0.5 * v ** 2
    interp = GridInterpolant(np.array([-1.0, -1.0]), g[1] - g[0],
                             poly(a, b))
    rng = np.random.default_rng(0)
    q = rng.uniform(-0.9, 0.9, size=(50, 2))
    vals, derivs = interp(q, deriv=True)
    assert np.max(np.abs(vals[:, 0] - poly(q[:, 0], q[:, 1]))) < 1e-12
    d_u = 3.0 * q[:, 0] ** 2 - 2.0 * q[:, 1]
    d_v = -2.0 * q[:, 0] + q[:, 1]
    assert np.max(np.abs(derivs[:, 0, 0] - d_u)) < 1e-11
    assert np.max(np.abs(derivs[:, 0, 1] - d_v)) < 1e-11


def test_2d_anisotropic_steps():
    g0 = np.linspace(-0.1, 0.1, 7)
    g1 = np.linspace(-2.0, 2.0, 65)
    a, b = np.meshgrid(g0, g1, indexing="ij")
    fun = lambda u, v: u + 0.25 * v ** 2
    interp = GridInterpolant(np.array([-0.1, -2.0]),
                             [g0[1] - g0[0], g1[1] - g1[0]], fun(a, b))
    q = np.array([[0.03, 1.2], [-0.05, -0.4]])
    assert np.allclose(interp(q)[:, 0], fun(q[:, 0], q[:, 1]), atol=1e-12)
