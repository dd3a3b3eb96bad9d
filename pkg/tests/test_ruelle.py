import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hopflink import forms, ruelle
from hopflink.fields import cp2_lift_field, hopf_field, hopf_pair_field, standard_contact_form
from hopflink.geometry import CP2, Sphere3, Sphere3xSphere3, TorusN
from hopflink.linking import hopf_pair_target

K = np.array([[1, 0.3 + 0.2j, 0.1], [0.3 - 0.2j, -0.5, 0.4j], [0.1, -0.4j, 0.2]])
# frozen: quadrature flux through the strip for K above (equals 3 pi / 20 to rounding)
CP2_FLUX = 0.47123889803846924


def sphere2_cycle():
    def emb(u):
        th, ph = u[..., 0], u[..., 1]
        return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], -1)
    return ruelle.ParametricCycle([(0, np.pi), (0, 2 * np.pi)], emb)


def test_integrate_cycle_sphere_area():
    # x dy^dz + y dz^dx + z dx^dy restricted to S^2 is the area form
    area = forms.FormField(2, 3, lambda x: np.stack([x[..., 2], -x[..., 1], x[..., 0]], -1))
    r = ruelle.integrate_cycle(area, sphere2_cycle(), rel_tol=1e-12)
    assert r.value == pytest.approx(4 * np.pi, rel=1e-12)
    assert float(r) == r.value and r.to_dict()["value"] == r.value
    assert ruelle.integrate_cycle(area, sphere2_cycle().reversed()).value == pytest.approx(-4 * np.pi)


def test_quadrature_nonconvergence_raises():
    rough = forms.FormField(1, 1, lambda x: np.abs(x - 0.3) ** 0.5)
    seg = ruelle.ParametricCycle([(0.0, 1.0)], lambda u: u)
    with pytest.raises(ruelle.QuadratureError) as e:
        ruelle.integrate_cycle(rough, seg, rel_tol=1e-14, max_levels=2)
    assert len(e.value.values) == 2


def test_degree_mismatch():
    with pytest.raises(forms.DegreeError):
        ruelle.integrate_cycle(forms.volume_coframe(3), sphere2_cycle())


def test_complex_step_jacobian():
    N = ruelle.s3xs3_chain_cycle(orient=False)
    u = np.random.default_rng(0).uniform(0.2, 1.2, (5, 4))
    Nf = ruelle.ParametricCycle(N.domain, N.embedding, complex_step=False)
    np.testing.assert_allclose(N.jacobian(u), Nf.jacobian(u), atol=1e-8)
    assert N.immersion_margin(u) > 0.1


@pytest.mark.parametrize("a,b", [(1, 0), (3, 1), (0, 2)])
def test_s3xs3_hopf_integral_closed_form(a, b):
    r = ruelle.s3xs3_hopf_integral(a, b)
    assert r.value == pytest.approx(2 * (a - b) * np.pi ** 3, abs=1e-8)
    assert r.value == pytest.approx(hopf_pair_target(a, b), abs=1e-8)


@settings(max_examples=10)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_s3xs3_primitive(a, b):
    M = Sphere3xSphere3()
    rng = np.random.default_rng(0)
    x = M.sample(rng, 20)
    r = ruelle.primitive_residual(ruelle.s3xs3_primitive(a, b), hopf_pair_field(a, b), ruelle.s3xs3_volume(),
                                  x, M.tangent_frame(x))
    assert r < 1e-9 * max(1, abs(a) + abs(b))


def test_wrong_primitive_rejected():
    M = Sphere3xSphere3()
    x = M.sample(np.random.default_rng(1), 10)
    F = ruelle.smooth_foliation(ruelle.s3xs3_volume(), M)
    with pytest.raises(ruelle.PrimitiveError):
        ruelle.hopf_integral_foliation(hopf_pair_field(2, 0), F, ruelle.s3xs3_primitive(1, 0),
                                       ruelle.s3xs3_volume(), probes=x, frames=M.tangent_frame(x))


def test_chain_cycle_lies_on_N():
    from hopflink.linking import s3xs3_chain
    N = ruelle.s3xs3_chain_cycle()
    u = np.random.default_rng(2).uniform(0, 1.5, (50, 4))
    x = N(u)
    assert np.max(Sphere3xSphere3().constraint_error(x)) < 1e-14
    assert np.max(np.abs(s3xs3_chain()(x))) < 1e-14
    assert N.orientation == 1


def test_contact_fiber():
    assert ruelle.contact_fiber_integral().value == pytest.approx(2 * np.pi, abs=1e-12)
    x = Sphere3().sample(np.random.default_rng(0), 20)
    from hopflink.geometry import quaternion_frame
    # d(alpha) = i_R (alpha ^ d alpha) for the Reeb (Hopf) field
    r = ruelle.primitive_residual(standard_contact_form(2), hopf_field(), ruelle.s3_contact_volume(),
                                  x, quaternion_frame(x))
    assert r < 1e-12


def test_cp2_flux_frozen_and_leaf_sum():
    X = cp2_lift_field(1j * K)
    flux = ruelle.cp2_flux(X)
    assert flux.value == pytest.approx(CP2_FLUX, abs=1e-10)
    assert flux.value == pytest.approx(3 * np.pi / 20, abs=1e-10)
    leaves = ruelle.cp2_hopf_integral(1j * K)
    assert leaves.value == pytest.approx(flux.value, abs=1e-8)


@settings(max_examples=5)
@given(st.floats(-5, 5))
def test_cp2_shift_invariance(c):
    base = ruelle.cp2_hopf_integral(1j * K).value
    assert ruelle.cp2_hopf_integral(1j * K, shift=c).value == pytest.approx(base, abs=1e-8)


def test_cp2_primitive(rng):
    X = cp2_lift_field(1j * K)
    u = rng.uniform(-1.5, 1.5, (30, 4))
    E = np.broadcast_to(np.eye(4), (30, 4, 4))
    r = ruelle.primitive_residual(ruelle.cp2_primitive(1j * K), X.on_chart(0), CP2().volume_form(), u, E)
    assert r < 1e-8


def test_cp2_strip_and_leaves_geometry():
    L = ruelle.cp2_leaf(1.0)
    assert L.noncompact and L.orientation == -1
    u = np.array([[0.3, 1.0, 2.0]])
    assert ruelle.cp2_strip_cycle()(u)[0, 1] == 0.0


def test_leaf_tail_check_rejects_divergent():
    # a form growing at infinity on the leaf: its integral does not exist
    grow = forms.FormField(2, 4, lambda u: np.stack([0 * u[..., 0]] * 5 + [1 + np.sum(u * u, -1)], -1))
    F = ruelle.leaf_sum([(ruelle.cp2_leaf(1.0), 1)], CP2())
    with pytest.raises(ruelle.QuadratureError):
        ruelle.ruelle_sullivan_eval(F, grow)


def test_smooth_foliation_mc_on_torus():
    # nu = dx, omega = (1 + cos x) dy: int omega ^ nu = -int (1 + cos x) = -4 pi^2
    T = TorusN(2)
    F = ruelle.smooth_foliation(forms.constant_form(2, 1, {(0,): 1.0}), T)
    om = forms.FormField(1, 2, lambda x: np.stack([0 * x[..., 0], 1 + np.cos(x[..., 0])], -1))
    r = ruelle.ruelle_sullivan_eval(F, om, n_mc=40_000, seed=3)
    assert abs(r.value + 4 * np.pi ** 2) < 4 * r.stderr
    assert F.closedness_residual(T.sample(np.random.default_rng(0), 10)) < 1e-10
    assert r.to_dict()["n"] == 40_000


def test_exact_foliation_measure_is_d():
    beta = forms.FormField(1, 2, lambda x: np.stack([np.sin(x[..., 1]), 0 * x[..., 0]], -1))
    F = ruelle.exact_foliation(beta, TorusN(2))
    x = np.random.default_rng(0).uniform(0, 6, (5, 2))
    np.testing.assert_allclose(F.measure_form().components(x)[:, 0], -np.cos(x[:, 1]), atol=1e-8)
    assert F.kind is ruelle.FoliationKind.ExactForm


def test_bump_support():
    b = ruelle.bump_two_form([0, 0, 0, 0], 0.5)
    assert np.all(b.components(np.array([[0.6, 0, 0, 0]])) == 0)
    assert b.components(np.zeros((1, 4)))[0, 5] == pytest.approx(np.exp(-1))


def test_identities(rng):
    H, om, _ = ruelle.s2xs2_symplectic_data(1.0, 2.0)
    assert np.max(ruelle.symplectic_identity_residual(H, om, rng.uniform(-1.5, 1.5, (100, 4)))) < 1e-8
    a = standard_contact_form(3)
    assert np.max(ruelle.contact_identity_residual(a, rng.standard_normal((100, 6)), n=3)) < 1e-8
    # n = 1 degenerates to d alpha = d alpha
    assert np.max(ruelle.contact_identity_residual(standard_contact_form(1), rng.standard_normal((10, 2)), n=1)) < 1e-8


def test_orient_preimage_flips():
    from hopflink.linking import s3xs3_chain, tangent_basis
    N = ruelle.s3xs3_chain_cycle(orient=False).reversed()
    ch = s3xs3_chain()
    fixed = ruelle.orient_preimage(N, ch, ruelle.s3xs3_volume(), lambda x: tangent_basis(ch.manifold, x))
    assert fixed.orientation == 1
