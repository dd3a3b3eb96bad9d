import numpy as np
import pytest

from hopflink import flow
from hopflink.fields import hopf_pair_field
from hopflink.geometry import CP2, Sphere3xSphere3
from hopflink.linking import cp2_strip_chain, s3xs3_chain
from hopflink.shortpaths import (CoverError, close_loop, covering_system, degenerate_loop, distances,
                                 geodesic_system)


@pytest.fixture(scope="module")
def cover():
    ch = s3xs3_chain()
    return covering_system(ch.manifold, seed=0, ball_radius=1.5, avoid=ch.abs_f), ch


def test_geodesic_system_endpoints(rng):
    M = Sphere3xSphere3()
    sys_ = geodesic_system(M)
    p, q = M.sample(rng, 2)
    P = sys_(p, q)
    np.testing.assert_allclose(P.start, p)
    np.testing.assert_allclose(P.end, q, atol=1e-12)
    assert sys_.describe()["kind"] == "geodesic"


def test_cover_certified(cover, rng):
    sys_, ch = cover
    M = ch.manifold
    x = M.sample(rng, 2000)
    k = sys_.assign(x)
    d = distances(M, x, sys_.centres[0])
    assert d.shape == (2000,)
    dk = np.array([distances(M, xi[None], sys_.centres[ki])[0] for xi, ki in zip(x, k)])
    assert np.all(dk < sys_.radius)
    # basepoints sit in their balls and away from N
    for c, b in zip(sys_.centres, sys_.basepoints):
        assert distances(M, b[None], c)[0] < sys_.radius
    assert np.all(ch.abs_f(sys_.basepoints) > sys_.guard)


def test_assign_is_smallest_index(cover, rng):
    sys_, ch = cover
    x = ch.manifold.sample(rng, 200)
    D = np.stack([distances(ch.manifold, x, c) for c in sys_.centres], -1)
    expect = np.argmax(D < sys_.radius - sys_.tie_guard, axis=-1)
    np.testing.assert_array_equal(sys_.assign(x), expect)


def test_covering_path_shape(cover, rng):
    sys_, ch = cover
    M = ch.manifold
    p, q = M.sample(rng, 2)
    P = sys_(p, q)
    np.testing.assert_allclose(P.start, p)
    np.testing.assert_allclose(P.end, q, atol=1e-12)
    k, j = sys_.assign(np.stack([p, q]))
    assert len(P.segments) == (2 if k == j else 3)
    # end legs join two points of one ball of radius r, so their length is < 2r
    assert P.segments[0].length < 2 * sys_.radius and P.segments[-1].length < 2 * sys_.radius


def test_cover_deterministic():
    M = Sphere3xSphere3()
    a = covering_system(M, seed=3, ball_radius=2.0)
    b = covering_system(M, seed=3, ball_radius=2.0)
    np.testing.assert_array_equal(a.centres, b.centres)
    np.testing.assert_array_equal(a.basepoints, b.basepoints)
    assert a.describe()["n_balls"] == a.n_balls == len(a.atlas)


def test_radius_must_be_below_injectivity():
    with pytest.raises(CoverError):
        covering_system(CP2(), ball_radius=2.0)
    ch = cp2_strip_chain()
    s = covering_system(ch.manifold, seed=1, ball_radius=1.0, avoid=ch.abs_f)
    assert s.n_balls >= 1


def test_close_loop(rng):
    M = Sphere3xSphere3()
    x0 = M.sample(rng)
    tr = flow.integrate(hopf_pair_field(1, 0), x0, 5.0, 1e-10, M)
    loop = close_loop(tr, geodesic_system(M))
    np.testing.assert_allclose(loop.end, x0, atol=1e-12)
    assert loop.t == 5.0 and loop.closure_length <= np.sqrt(2) * np.pi
    d = degenerate_loop(x0, geodesic_system(M))
    assert d.closure_length == 0 and d.t == 0
