import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from hopflink import forms
from hopflink.fields import (SingularFormError, cp2_lift_field, divergence_residual, hamiltonian_field,
                             hopf_field, hopf_pair_field, reeb_field, standard_contact_form)
from hopflink.geometry import CP2, Sphere3, Sphere3xSphere3, cp2_chart, quaternion_frame, to_complex

coef = st.floats(-3, 3, allow_nan=False)


@given(coef, coef, st.floats(-5, 5, allow_nan=False))
def test_hopf_pair_exact_flow(a, b, t):
    X = hopf_pair_field(a, b)
    x = Sphere3xSphere3().sample(np.random.default_rng(0))
    y = X.exact_flow(x, t)
    z0, z1 = to_complex(x[:4]), to_complex(x[4:])
    np.testing.assert_allclose(to_complex(y[:4]), np.exp(1j * a * t) * z0, atol=1e-12)
    np.testing.assert_allclose(to_complex(y[4:]), np.exp(1j * b * t) * z1, atol=1e-12)


def test_hopf_pair_tangent(rng):
    X = hopf_pair_field(1.3, -0.4)
    x = Sphere3xSphere3().sample(rng, 100)
    v = X(x)
    assert np.max(np.abs(np.sum(x[:, :4] * v[:, :4], -1))) < 1e-15
    assert np.max(np.abs(np.sum(x[:, 4:] * v[:, 4:], -1))) < 1e-15


def test_hopf_pair_divergence_free(rng):
    M = Sphere3xSphere3()
    ch = M.charts()[0]
    u = rng.uniform(-1, 1, (50, 6))
    assert divergence_residual(hopf_pair_field(1, 2), M.volume_form(), u, chart=ch) < 1e-8


def test_reeb_of_standard_form_is_hopf(rng):
    R = reeb_field(standard_contact_form(2), tangent_basis=quaternion_frame)
    x = Sphere3().sample(rng, 40)
    np.testing.assert_allclose(R(x), hopf_field()(x), atol=1e-12)


def test_hamiltonian_convention(rng):
    # omega = dx ^ dy, H = x:  dH = i_X omega  gives X = (0, -1)
    om = forms.constant_form(2, 2, {(0, 1): 1.0})
    H = forms.FormField(0, 2, lambda x: x[..., :1], name="x")
    X = hamiltonian_field(H, om)
    np.testing.assert_allclose(X(rng.standard_normal((3, 2))), [[0, -1]] * 3, atol=1e-10)


def test_hamiltonian_degenerate_raises():
    om = forms.constant_form(2, 2, {(0, 1): 0.0})
    X = hamiltonian_field(forms.FormField(0, 2, lambda x: x[..., :1]), om)
    with pytest.raises(SingularFormError):
        X(np.zeros(2))


def test_cp2_lift_rejects_non_skew():
    with pytest.raises(ValueError):
        cp2_lift_field(np.eye(3))


@pytest.mark.parametrize("j", [0, 1, 2])
def test_cp2_chart_expression_matches_lift(j, rng):
    K = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    A = 1j * (K + K.conj().T)
    X = cp2_lift_field(A)
    ch = cp2_chart(j)
    u = rng.standard_normal((5, 4))
    h = 1e-6
    from hopflink.geometry import complex_matrix_to_real
    Ar = complex_matrix_to_real(A)
    fd = (ch.inverse(ch.param(u) @ expm(h * Ar).T) - ch.inverse(ch.param(u) @ expm(-h * Ar).T)) / (2 * h)
    np.testing.assert_allclose(X.on_chart(j)(u), fd, atol=1e-7)


def test_cp2_lift_divergence_free(rng):
    K = np.array([[1, 0.3 + 0.2j, 0.1], [0.3 - 0.2j, -0.5, 0.4j], [0.1, -0.4j, 0.2]])
    X = cp2_lift_field(1j * K)
    u = rng.uniform(-1, 1, (40, 4))
    assert divergence_residual(X.on_chart(0), CP2().volume_form(), u) < 1e-8
