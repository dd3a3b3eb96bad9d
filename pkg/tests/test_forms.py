import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hopflink import forms
from hopflink.forms import FormField


def poly_form(k, dim, seed):
    """Random form with quadratic polynomial coefficients."""
    r = np.random.default_rng(seed)
    n = len(forms.multi_indices(dim, k))
    c0, c1, c2 = r.standard_normal(n), r.standard_normal((n, dim)), r.standard_normal((n, dim))
    return FormField(k, dim, lambda x: c0 + x @ c1.T + (x * x) @ c2.T, name=f"p{seed}")


@given(st.permutations(list(range(5))))
def test_perm_sign_matches_parity(p):
    inv = sum(1 for i, j in itertools.combinations(range(5), 2) if p[i] > p[j])
    assert forms.perm_sign(p) == (-1) ** inv


def test_multi_index_counts():
    for dim in range(1, 6):
        for k in range(dim + 1):
            idx = forms.multi_indices(dim, k)
            assert len(idx) == len(list(itertools.combinations(range(dim), k)))
            assert forms.index_of(dim, k)[idx[-1]] == len(idx) - 1


def test_degree_out_of_range():
    with pytest.raises(forms.DegreeError):
        FormField(4, 3, lambda x: 0)


@given(st.integers(0, 2), st.integers(0, 2), st.integers(0, 10 ** 6))
def test_wedge_graded_commutative(k, l, seed):
    a, b = poly_form(k, 4, seed), poly_form(l, 4, seed + 1)
    x = np.random.default_rng(seed).standard_normal((5, 4))
    lhs = forms.wedge(a, b).components(x)
    rhs = forms.wedge(b, a).components(x) * (-1) ** (k * l)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


@given(st.integers(0, 2), st.integers(0, 10 ** 6))
def test_dd_zero(k, seed):
    a = poly_form(k, 4, seed)
    x = np.random.default_rng(seed).standard_normal((5, 4))
    dd = forms.numeric_d(forms.numeric_d(a, 1e-3, 4), 1e-3, 4)
    assert forms.max_abs(dd, x) < 1e-7


@given(st.integers(0, 2), st.integers(0, 1), st.integers(0, 10 ** 6))
def test_leibniz(k, l, seed):
    a, b = poly_form(k, 4, seed), poly_form(l, 4, seed + 7)
    x = np.random.default_rng(seed).standard_normal((5, 4))
    lhs = forms.numeric_d(forms.wedge(a, b), 1e-3, 4)
    rhs = forms.wedge(a.d(1e-3), b) + forms.wedge(a, b.d(1e-3)).scale((-1) ** k)
    assert forms.max_abs(lhs - rhs, x) < 1e-8


@given(st.integers(1, 2), st.integers(1, 2), st.integers(0, 10 ** 6))
def test_interior_product_antiderivation(k, l, seed):
    a, b = poly_form(k, 4, seed), poly_form(l, 4, seed + 3)
    V = np.random.default_rng(seed).standard_normal(4)
    X = lambda x: np.broadcast_to(V, np.shape(x))
    x = np.random.default_rng(seed + 1).standard_normal((5, 4))
    lhs = forms.interior_product(X, forms.wedge(a, b))
    rhs = forms.wedge(forms.interior_product(X, a), b) + forms.wedge(a, forms.interior_product(X, b)).scale((-1) ** k)
    assert forms.max_abs(lhs - rhs, x) < 1e-10


def test_eval_on_basis_returns_components(rng):
    a = poly_form(2, 4, 3)
    x = rng.standard_normal(4)
    E = np.eye(4)
    for n, (i, j) in enumerate(forms.multi_indices(4, 2)):
        assert a.eval(x, E[i], E[j]) == pytest.approx(a.components(x)[n])


def test_closed_form_d_matches_numeric(rng):
    # d(x0 dx1) = dx0 ^ dx1
    a = FormField(1, 2, lambda x: np.stack([0 * x[..., 0], x[..., 0]], -1))
    x = rng.standard_normal((4, 2))
    np.testing.assert_allclose(a.d().components(x), 1.0, atol=1e-10)
    # x0^3 x1 dx2: closed-form d against central differences, second order
    b = FormField(1, 3, lambda x: np.stack([0 * x[..., 0], 0 * x[..., 0], x[..., 0] ** 3 * x[..., 1]], -1),
                  lambda x: np.stack([0 * x[..., 0], 3 * x[..., 0] ** 2 * x[..., 1], x[..., 0] ** 3], -1))
    rc = forms.richardson_d_check(b, rng.standard_normal((4, 3)))
    assert rc["err_h10"] < 1e-8 and rc["observed_order"] > 1.5


def test_pullback_commutes_with_d(rng):
    a = poly_form(1, 3, 2)
    param = lambda u: np.stack([u[..., 0] * u[..., 1], np.sin(u[..., 0]), u[..., 1] ** 2], -1)

    def jac(u):
        J = np.zeros(u.shape[:-1] + (3, 2))
        J[..., 0, 0], J[..., 0, 1] = u[..., 1], u[..., 0]
        J[..., 1, 0] = np.cos(u[..., 0])
        J[..., 2, 1] = 2 * u[..., 1]
        return J

    u = rng.standard_normal((6, 2))
    lhs = forms.numeric_d(forms.pullback(a, param, jac, 2), 1e-3, 4)
    rhs = forms.pullback(a.d(1e-3), param, jac, 2)
    assert forms.max_abs(lhs - rhs, u) < 1e-8


def test_constant_and_volume_forms():
    v = forms.volume_coframe(3)
    assert v.eval(np.zeros(3), *np.eye(3)) == 1.0
    c = forms.constant_form(4, 2, {(0, 1): 0.7, (2, 3): -0.4})
    top = forms.top_coefficient(forms.wedge(c, c), np.zeros((1, 4)))
    assert top[0] == pytest.approx(2 * 0.7 * -0.4)
