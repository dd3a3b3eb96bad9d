import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hopflink import hodge
from hopflink.hodge import FourierForm

dims_degrees = st.sampled_from([(2, 0), (2, 1), (2, 2), (3, 0), (3, 1), (3, 2), (3, 3)])


def rand(n, k, band=4, seed=0):
    return FourierForm.random(n, k, band, np.random.default_rng(seed))


def test_d_of_sin_dy():
    # a = sin(x) dy on T^2 -> da = cos(x) dx ^ dy
    a = FourierForm.from_modes(2, 1, 2, {((1, 0), (1,)): -0.5j, ((-1, 0), (1,)): 0.5j})
    x = np.random.default_rng(0).uniform(0, 2 * np.pi, (20, 2))
    np.testing.assert_allclose(a(x)[:, 1], np.sin(x[:, 0]), atol=1e-14)
    np.testing.assert_allclose(a.d()(x)[:, 0], np.cos(x[:, 0]), atol=1e-14)


def test_star_conventions():
    # *dx = dy, *dy = -dx on T^2; *1 = dx^dy
    f = FourierForm.from_modes(2, 1, 1, {((0, 0), (0,)): 1.0, ((0, 0), (1,)): 2.0})
    s = f.star()
    np.testing.assert_allclose(s(np.zeros((1, 2)))[0], [-2.0, 1.0])
    one = FourierForm.from_modes(2, 0, 1, {((0, 0), ()): 1.0})
    assert one.star()(np.zeros((1, 2)))[0, 0] == pytest.approx(1.0)


@settings(max_examples=20)
@given(dims_degrees, st.integers(0, 10 ** 6))
def test_star_star(nk, seed):
    n, k = nk
    a = rand(n, k, 3, seed)
    assert (a.star().star() - (-1) ** (k * (n - k)) * a).norm() < 1e-14


@settings(max_examples=20)
@given(dims_degrees, st.integers(0, 10 ** 6))
def test_laplacian_is_k_squared_and_dd_zero(nk, seed):
    n, k = nk
    a = rand(n, k, 3, seed)
    k2 = np.sum(a.wavevectors.astype(float) ** 2, axis=1)
    np.testing.assert_allclose(a.laplacian().coeffs, a.coeffs * k2[:, None], atol=1e-12)
    if k < n - 1:
        assert a.d().d().norm() < 1e-13
    if k > 1:
        assert a.codifferential().codifferential().norm() < 1e-13


@settings(max_examples=20)
@given(dims_degrees, st.integers(0, 10 ** 6))
def test_codifferential_is_adjoint(nk, seed):
    # <d a, b> = <a, d* b> in L^2, via Parseval on the coefficients
    n, k = nk
    if k == n:
        return
    a, b = rand(n, k, 3, seed), rand(n, k + 1, 3, seed + 1)
    lhs = np.vdot(b.coeffs, a.d().coeffs)
    rhs = np.vdot(b.codifferential().coeffs, a.coeffs)
    assert abs(lhs - rhs) < 1e-10 * max(1, abs(lhs))


@settings(max_examples=30)
@given(dims_degrees, st.integers(0, 10 ** 6))
def test_green_identities(nk, seed):
    n, k = nk
    r = hodge.identity_residuals(rand(n, k, 5, seed))
    assert max(r.values()) < 1e-13


def test_green_of_single_mode():
    # G(cos(2x + y) dx) = cos(2x + y) dx / 5 and G(const) = 0
    a = FourierForm.from_modes(2, 1, 3, {((2, 1), (0,)): 0.5, ((-2, -1), (0,)): 0.5, ((0, 0), (1,)): 3.0})
    x = np.random.default_rng(0).uniform(0, 6, (10, 2))
    g = hodge.greens_operator(a)(x)
    np.testing.assert_allclose(g[:, 0], np.cos(2 * x[:, 0] + x[:, 1]) / 5, atol=1e-14)
    np.testing.assert_allclose(g[:, 1], 0, atol=1e-15)
    np.testing.assert_allclose(hodge.harmonic_projection(a)(x)[:, 1], 3.0)


def test_random_is_real():
    a = rand(3, 1, 4, 7)
    assert a.reality_error() < 1e-15
    x = np.random.default_rng(0).uniform(0, 6, (5, 3))
    assert np.isrealobj(a(x))


@pytest.mark.parametrize("n", [2, 3])
def test_fundl_all_degrees(n):
    rng = np.random.default_rng(n)
    for k in range(n):
        L = hodge.linking_kernel(6, n, k)
        for _ in range(5):
            assert hodge.fundl_residual(FourierForm.random(n, k, 6, rng), L) < 1e-10


def test_fundl_sign_factor_matters():
    # on T^2, degree 0 the y-factor has degree 1 and (-1)^((n - s) s) = -1
    a = rand(2, 0, 4, 1)
    L = hodge.linking_kernel(4, 2, 0)
    flipped = hodge.DoubleFormKernel(2, 0, 4, -L.coeffs)
    assert hodge.fundl_residual(a, L) < 1e-12
    assert hodge.fundl_residual(a, flipped) > 1e-2


def test_kernel_is_real_and_odd():
    L = hodge.linking_kernel(5, 3, 1)
    x, y = np.random.default_rng(0).uniform(0, 6, (2, 4, 3))
    v = L.eval(x, y)
    assert np.all(np.isfinite(v))
    # g depends on x - y only; d_y of it flips sign under x <-> y
    np.testing.assert_allclose(L.eval(y, x), -v, atol=1e-12)


@pytest.mark.parametrize("n,expected", [(2, -1.0), (3, -2.0)])
def test_growth_slope(n, expected):
    band = 24 if n == 2 else 16
    L = hodge.linking_kernel(band, n, 1 if n == 3 else 0, taper="gauss")
    s = hodge.kernel_growth_slope(L, hodge.resolvable_radii(band))
    assert abs(s - expected) < 0.15


def test_errors():
    with pytest.raises(ValueError):
        hodge.linking_kernel(0)
    with pytest.raises(ValueError):
        hodge.linking_kernel(4, 3, 3)
    with pytest.raises(ValueError):
        hodge.linking_kernel(4, 3, 1, taper="box")
    with pytest.raises(ValueError):
        FourierForm(2, 1, 2, np.zeros((3, 2)))
    with pytest.raises(ValueError):
        hodge.linking_kernel(4, 3, 1).pair(rand(3, 1, 4))
    with pytest.raises(ValueError):
        hodge.linking_kernel(2, 3, 1).pair(rand(3, 2, 4))
