import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hopflink import flow, linking
from hopflink.fields import cp2_lift_field, hopf_field, hopf_pair_field
from hopflink.geometry import Sphere3, to_complex, to_real
from hopflink.shortpaths import close_loop, covering_system, geodesic_system

K = np.array([[1, 0.3 + 0.2j, 0.1], [0.3 - 0.2j, -0.5, 0.4j], [0.1, -0.4j, 0.2]])


def winding(loop, chain, n=200_000):
    """Oracle: winding number of f along the closed loop, by phase unwrapping."""
    tr = loop.flow_part
    t = np.linspace(0, tr.t_end, n)
    fx = chain(tr(t))
    fc = chain(loop.closure_part(np.linspace(0, len(loop.closure_part.segments), n // 10)))
    ph = np.unwrap(np.angle(np.concatenate([fx, fc])))
    return (ph[-1] - ph[0]) / (2 * np.pi)


def test_chain_definitions(rng):
    ch = linking.s3xs3_chain()
    x = ch.manifold.sample(rng, 10)
    z, w = to_complex(x[:, :4]), to_complex(x[:, 4:])
    np.testing.assert_allclose(ch(x), np.sum(z * np.conj(w), -1), atol=1e-15)
    fib = linking.s3_fiber_chain()
    y = Sphere3().sample(rng, 10)
    np.testing.assert_allclose(fib(y), to_complex(y)[:, 1], atol=1e-15)
    cp = linking.cp2_strip_chain()
    Z = to_complex(cp.manifold.sample(rng, 10))
    np.testing.assert_allclose(cp(to_real(Z)), (Z[:, 0] + Z[:, 1]) * np.conj(Z[:, 0] - Z[:, 1]), atol=1e-14)


def test_cp2_chain_phase_invariant_and_positive_on_strip(rng):
    cp = linking.cp2_strip_chain()
    Z = to_complex(cp.manifold.sample(rng, 10))
    np.testing.assert_allclose(cp(to_real(np.exp(0.4j) * Z)), cp(to_real(Z)), atol=1e-14)
    s = rng.uniform(-0.99, 0.99, 10)
    Zs = np.stack([np.ones(10), s, rng.standard_normal(10) + 1j * rng.standard_normal(10)], -1)
    Zs /= np.linalg.norm(Zs, axis=-1, keepdims=True)
    v = cp(to_real(Zs))
    assert np.all(v.real > 0) and np.max(np.abs(v.imag)) < 1e-14


@settings(max_examples=10)
@given(st.integers(0, 10 ** 6), st.sampled_from([(1.0, 0.0), (3.0, 1.0), (0.3, 1.7), (-1.0, 2.0)]))
def test_crossings_equal_winding_number(seed, ab):
    ch = linking.s3xs3_chain()
    M = ch.manifold
    x0 = M.sample(np.random.default_rng(seed))
    tr = flow.integrate(hopf_pair_field(*ab), x0, 40.0, 1e-10, M)
    loop = close_loop(tr, geodesic_system(M))
    try:
        lk = linking.signed_crossings(loop, ch)
    except linking.DegenerateStartError:
        return
    assert lk == round(winding(loop, ch))
    assert abs(winding(loop, ch) - lk) < 1e-3


def test_hopf_fibers_link_once(rng):
    ch = linking.s3_fiber_chain()
    M = ch.manifold
    x0 = M.sample(rng)
    loop = close_loop(flow.integrate(hopf_field(), x0, 2 * np.pi, 1e-12, M), geodesic_system(M))
    assert linking.signed_crossings(loop, ch) == 1
    assert linking.signed_crossings(loop, ch.reversed()) == -1


def test_pointwise_rate(rng):
    ch = linking.s3xs3_chain()
    sys_ = geodesic_system(ch.manifold)
    X = hopf_pair_field(3.0, 1.0)
    for x0 in ch.manifold.sample(rng, 3):
        est = linking.asymptotic_lk(X, x0, ch, sys_, 200.0)
        assert abs(est.value - linking.hopf_pair_rate(3, 1)) < 2 / 200
        alt = linking.asymptotic_lk(X, x0, ch, sys_, 200.0, backend="kernel")
        assert (alt.crossings_flow, alt.crossings_closure) == (est.crossings_flow, est.crossings_closure)


def test_degenerate_start_rejected():
    ch = linking.s3xs3_chain()
    x0 = np.array([1.0, 0, 0, 0, 0, 0, 1.0, 0])    # <z, w> = 0: on N
    with pytest.raises(linking.DegenerateStartError):
        linking.asymptotic_lk(hopf_pair_field(1, 0), x0, ch, geodesic_system(ch.manifold), 10.0)


def test_hopf_pair_targets():
    assert linking.hopf_pair_rate(1, 0) == pytest.approx(0.1591549, abs=1e-7)
    assert linking.hopf_pair_target(1, 0) == pytest.approx(62.01255336, abs=1e-8)
    assert linking.hopf_pair_target(0, 2) == pytest.approx(-124.0251067, abs=1e-6)
    # target = rate x vol(S^3 x S^3)
    assert linking.hopf_pair_target(3, 1) == pytest.approx(linking.hopf_pair_rate(3, 1) * 4 * np.pi ** 4)


def test_average_lk_deterministic_and_worker_independent():
    ch = linking.s3xs3_chain()
    sys_ = geodesic_system(ch.manifold)
    X = hopf_pair_field(1.0, 0.0)
    a = linking.average_lk(X, ch, sys_, 50.0, 300, seed=7, chunk=64)
    b = linking.average_lk(X, ch, sys_, 50.0, 300, seed=7, chunk=64, workers=3)
    assert a.value == b.value
    np.testing.assert_array_equal(a.records["start"], b.records["start"])
    c = linking.average_lk(X, ch, sys_, 50.0, 300, seed=8, chunk=64)
    assert not np.array_equal(a.records["start"], c.records["start"])


def test_workers_env(monkeypatch):
    monkeypatch.setenv(linking.WORKERS_ENV, "4")
    assert linking.default_workers() == 4
    monkeypatch.delenv(linking.WORKERS_ENV)
    assert linking.default_workers() == 1


def test_reversal_negates_exactly():
    ch = linking.s3xs3_chain()
    sys_ = geodesic_system(ch.manifold)
    X = hopf_pair_field(3.0, 1.0)
    a = linking.average_lk(X, ch, sys_, 60.0, 200, seed=2)
    b = linking.average_lk(X, ch.reversed(), sys_, 60.0, 200, seed=2)
    np.testing.assert_array_equal(b.records["flow"], -a.records["flow"])
    np.testing.assert_array_equal(b.records["closure"], -a.records["closure"])
    assert b.value == -a.value


def test_equal_rates_give_zero():
    ch = linking.s3xs3_chain()
    e = linking.average_lk(hopf_pair_field(2.0, 2.0), ch, geodesic_system(ch.manifold), 50.0, 200)
    assert e.value == 0.0 and e.crossings_flow == 0


def test_too_many_degenerate():
    ch = linking.s3xs3_chain()
    with pytest.raises(linking.TooManyDegenerateError):
        linking.average_lk(hopf_pair_field(1, 0), ch, geodesic_system(ch.manifold), 20.0, 100, guard=0.3)


def test_outputs_roundtrip(tmp_path):
    ch = linking.s3xs3_chain()
    e = linking.average_lk(hopf_pair_field(1, 0), ch, geodesic_system(ch.manifold), 20.0, 50)
    e.to_json(tmp_path / "s.json")
    d = json.load(open(tmp_path / "s.json"))
    assert d["value"] == e.value and d["samples"] == 50 and "records" not in d
    e.to_csv(tmp_path / "s.csv")
    rows = list(csv.DictReader(open(tmp_path / "s.csv")))
    assert len(rows) == 50 and tuple(rows[0]) == linking.LinkingEstimate.CSV_COLUMNS
    v = np.array([float(r["value"]) for r in rows])
    assert np.mean(v) * e.volume == pytest.approx(e.value, rel=1e-12)


def test_cp2_crossings_match_winding(rng):
    ch = linking.cp2_strip_chain()
    X = cp2_lift_field(1j * K)
    sys_ = geodesic_system(ch.manifold)
    x0 = ch.manifold.sample(rng)
    loop = close_loop(flow.integrate(X, x0, 30.0, 1e-10, ch.manifold), sys_)
    assert linking.signed_crossings(loop, ch) == round(winding(loop, ch))


def test_covering_closure_counts_integer_and_consistent(rng):
    ch = linking.s3xs3_chain()
    sys_ = covering_system(ch.manifold, seed=0, ball_radius=1.5, avoid=ch.abs_f)
    x0 = ch.manifold.sample(rng)
    loop = close_loop(flow.integrate(hopf_pair_field(1, 0), x0, 30.0, 1e-10, ch.manifold), sys_)
    assert linking.signed_crossings(loop, ch) == round(winding(loop, ch))
