"""Systems of short paths: one connecting path sigma(p, q) for every ordered pair.

Two constructions are provided.  The geodesic system uses the minimizing
geodesic (with the manifold's deterministic cut-locus tie-break).  The
covering system covers M by finitely many geodesic balls U_j, picks a
basepoint u_j in each, and routes

    sigma(p, q) = [p -> u_n(p)] + [u_n(p) -> u_n(q)] + [u_n(q) -> q]

along geodesics, where n(x) is the smallest j whose ball contains x (with a
small tie guard).  Closing a flow segment phi([0, t], x) with
sigma(phi_t(x), x) gives the loop gamma(x, t).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import CP2, Manifold, Path, Segment, TorusN, to_complex


class CoverError(ValueError):
    pass


def distances(manifold: Manifold, X, c) -> np.ndarray:
    """Vectorised Riemannian distance between points X (..., m) and c (m,) or (..., m)."""
    X, c = np.asarray(X, float), np.asarray(c, float)
    if isinstance(manifold, CP2):
        h = np.abs(np.sum(np.conj(to_complex(X)) * to_complex(c), axis=-1))
        return np.arccos(np.clip(h, 0.0, 1.0))
    if isinstance(manifold, TorusN):
        d = np.mod(X - c + np.pi, 2 * np.pi) - np.pi
        return np.linalg.norm(d, axis=-1)
    d2 = 0.0
    for lo, hi in manifold.blocks:
        cs = np.clip(np.sum(X[..., lo:hi] * c[..., lo:hi], axis=-1), -1.0, 1.0)
        d2 = d2 + np.arccos(cs) ** 2
    return np.sqrt(d2)


def _const_path(p: np.ndarray, manifold: Manifold) -> Path:
    return manifold.geodesic(p, p)


class ShortPathSystem:
    kind = "abstract"

    def __init__(self, manifold: Manifold):
        self.manifold = manifold

    def path(self, p, q) -> Path:
        raise NotImplementedError

    def __call__(self, p, q) -> Path:
        return self.path(p, q)

    def describe(self) -> dict:
        return {"kind": self.kind, "manifold": type(self.manifold).__name__}


class GeodesicSystem(ShortPathSystem):
    """sigma(p, q) = minimizing geodesic from p to q."""
    kind = "geodesic"

    def path(self, p, q) -> Path:
        return self.manifold.geodesic(np.asarray(p, float), np.asarray(q, float))


def geodesic_system(manifold: Manifold) -> GeodesicSystem:
    return GeodesicSystem(manifold)


class CoveringSystem(ShortPathSystem):
    """Finite geodesic-ball cover with basepoints and geodesic connectors.

    Parameters
    ----------
    manifold : Manifold
    seed : int
        Fixes the cover and the basepoints.
    ball_radius : float
        Radius of the balls U_j; must be below the injectivity radius.
    avoid : callable, optional
        ``avoid(u)`` gives a (lower bound for the) distance of u to the
        chain N; basepoints closer than ``guard`` are resampled.
    guard : float
        Minimal basepoint distance to N.
    tie_guard : float
        Shrinks balls when assigning n(x) so that points on a ball boundary
        are assigned deterministically.
    pool : int
        Number of random points used to build and certify the cover.
    """
    kind = "covering"

    def __init__(self, manifold: Manifold, seed: int = 0, ball_radius: float = 1.5,
                 avoid: Callable[[np.ndarray], np.ndarray] | None = None, guard: float = 1e-3,
                 tie_guard: float = 1e-9, pool: int = 20000, max_tries: int = 100000):
        super().__init__(manifold)
        if not 0 < ball_radius < manifold.injectivity_radius:
            raise CoverError(f"ball radius {ball_radius} must be in (0, injectivity radius "
                             f"{manifold.injectivity_radius:.4g})")
        self.seed = seed
        self.radius = float(ball_radius)
        self.guard = guard
        self.tie_guard = tie_guard
        rng = np.random.default_rng(seed)
        pts = manifold.sample(rng, pool)
        # farthest-point cover of the pool with covering radius < 0.9 r
        centres = [pts[0]]
        dmin = distances(manifold, pts, pts[0])
        while dmin.max() >= 0.9 * self.radius:
            j = int(np.argmax(dmin))
            centres.append(pts[j])
            dmin = np.minimum(dmin, distances(manifold, pts, pts[j]))
            if len(centres) > pool // 10:
                raise CoverError("cover construction failed")
        self.centres = np.array(centres)
        # basepoints uniform in each ball, away from the chain
        base = []
        for c in self.centres:
            for _ in range(max_tries // 256):
                cand = manifold.sample(rng, 256)
                ok = distances(manifold, cand, c) < self.radius
                if avoid is not None:
                    ok &= np.asarray(avoid(cand)) > guard
                if np.any(ok):
                    base.append(cand[np.argmax(ok)])
                    break
            else:
                raise CoverError("could not place a basepoint in a ball")
        self.basepoints = np.array(base)
        self.uncovered = 0
        self._connectors: dict[tuple[int, int], Path] = {}

    @property
    def n_balls(self) -> int:
        return len(self.centres)

    @property
    def atlas(self) -> list[tuple[np.ndarray, float]]:
        return [(c, self.radius) for c in self.centres]

    def assign(self, X) -> np.ndarray:
        """n(x): smallest ball index containing x (nearest centre if none does)."""
        X = np.asarray(X, float)
        D = np.stack([distances(self.manifold, X, c) for c in self.centres], axis=-1)
        inside = D < self.radius - self.tie_guard
        first = np.argmax(inside, axis=-1)
        none = ~np.any(inside, axis=-1)
        if np.any(none):
            self.uncovered += int(np.sum(none))
            first = np.where(none, np.argmin(D, axis=-1), first)
        return first

    def connector(self, k: int, j: int) -> Path:
        key = (k, j)
        if key not in self._connectors:
            self._connectors[key] = self.manifold.geodesic(self.basepoints[k], self.basepoints[j])
        return self._connectors[key]

    def path(self, p, q) -> Path:
        p, q = np.asarray(p, float), np.asarray(q, float)
        k, j = (int(v) for v in self.assign(np.stack([p, q])))
        g = self.manifold.geodesic
        out = g(p, self.basepoints[k])
        if k != j:
            out = out + self.connector(k, j)
        return out + g(self.basepoints[j], q)

    def describe(self) -> dict:
        return {"kind": self.kind, "manifold": type(self.manifold).__name__, "seed": self.seed,
                "ball_radius": self.radius, "n_balls": self.n_balls, "guard": self.guard}


def covering_system(manifold: Manifold, seed: int = 0, ball_radius: float = 1.5, **kw) -> CoveringSystem:
    return CoveringSystem(manifold, seed, ball_radius, **kw)


@dataclass
class ClosedLoop:
    """gamma(x, t): the flow part from x to phi_t(x), then sigma(phi_t(x), x)."""
    flow_part: object            # flow.Trajectory, or None for t = 0
    closure_part: Path
    basepoint: np.ndarray
    t: float
    meta: dict = field(default_factory=dict)

    @property
    def end(self) -> np.ndarray:
        return self.closure_part.end

    @property
    def closure_length(self) -> float:
        return self.closure_part.length


def close_loop(traj, sys: ShortPathSystem) -> ClosedLoop:
    """Close a trajectory with the short path from its end back to its start."""
    start = np.asarray(traj.start, float)
    end = np.asarray(traj.end, float)
    if traj.t_end == 0:
        return ClosedLoop(None, _const_path(start, sys.manifold), start, 0.0)
    return ClosedLoop(traj, sys.path(end, start), start, float(traj.t_end))


def degenerate_loop(x, sys: ShortPathSystem) -> ClosedLoop:
    """The constant loop at x (t = 0)."""
    x = np.asarray(x, float)
    return ClosedLoop(None, _const_path(x, sys.manifold), x, 0.0)


def path_segments(paths: list[Path]) -> tuple[list[Segment], np.ndarray]:
    """Flatten paths into their segments with the owning path index."""
    segs, owner = [], []
    for i, P in enumerate(paths):
        for s in P.segments:
            segs.append(s)
            owner.append(i)
    return segs, np.array(owner, dtype=int)
