import numpy as np
import pytest

from hopflink import _fallback, kernels, linking
from hopflink.fields import cp2_lift_field, hopf_pair_field

compiled = pytest.mark.skipif(kernels.BACKEND != "compiled", reason="extension not built")


def _args(X, ch, n, seed=0):
    X0 = ch.manifold.sample(np.random.default_rng(seed), n)
    P, p, Q, q = ch.quad
    return X.matrix, X0, ch.manifold.blocks, 80.0, 1e-10, P, p, Q, q


def _cases():
    yield hopf_pair_field(3.0, 1.0), linking.s3xs3_chain()
    K = np.array([[1, 0.3 + 0.2j, 0.1], [0.3 - 0.2j, -0.5, 0.4j], [0.1, -0.4j, 0.2]])
    yield cp2_lift_field(1j * K), linking.cp2_strip_chain()


@compiled
@pytest.mark.parametrize("case", list(_cases()), ids=["s3xs3", "cp2"])
def test_compiled_matches_fallback(case):
    X, ch = case
    a = kernels.flow_crossings(*_args(X, ch, 40), backend="compiled")
    b = kernels.flow_crossings(*_args(X, ch, 40), backend="python")
    np.testing.assert_array_equal(a["crossings"], b["crossings"])
    np.testing.assert_array_equal(a["status"], b["status"])
    np.testing.assert_allclose(a["x_end"], b["x_end"], atol=1e-12)
    # min |f| is sampled on the step partition; the embedded error estimate cancels
    # heavily, so summation order moves step sizes at the 1e-5 level
    np.testing.assert_allclose(a["min_abs_f"], b["min_abs_f"], rtol=1e-2)


def test_fallback_end_matches_exact_flow():
    X, ch = next(_cases())
    args = _args(X, ch, 10)
    r = _fallback.flow_crossings(*args)
    exact = np.stack([X.exact_flow(x, 80.0) for x in args[1]])
    assert np.max(np.abs(r["x_end"] - exact)) < 1e-7
    assert np.all(r["status"] == kernels.STATUS_OK)


def test_backend_dispatch():
    assert kernels.BACKEND in ("compiled", "python")
    X, ch = next(_cases())
    r = kernels.flow_crossings(*_args(X, ch, 3), backend="python")
    assert r["crossings"].shape == (3,)
