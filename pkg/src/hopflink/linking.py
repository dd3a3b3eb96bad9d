"""Linking numbers of closed loops with codimension-two chains, and their averages.

A chain is presented by a complex function f: N = f^-1(0) and the Seifert
chain is S = f^-1([0, inf)).  A loop meets S where Im f changes sign while
Re f > 0; the intersection sign is the sign of d(Im f)/ds there, i.e. +1
when arg f increases through 0.  Events are localised by bisection.

The long flow parts of Monte Carlo runs go through the batched kernel
(:mod:`hopflink.kernels`) when the field is linear and Re f, Im f are
quadratic forms; otherwise the dense trajectory output is scanned.
"""
from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .fields import VectorField
from .flow import Trajectory, integrate
from .geometry import CP2, Manifold, Sphere3, Sphere3xSphere3, to_complex
from .shortpaths import ClosedLoop, ShortPathSystem, close_loop, path_segments

DEGENERATE_GUARD = 1e-8
WORKERS_ENV = "HOPFLINK_WORKERS"


class DegenerateStartError(ValueError):
    """The loop passes within the guard distance of N: resample the start."""


class TooManyDegenerateError(RuntimeError):
    pass


# chains -------------------------------------------------------------------

@dataclass
class PhaseChain:
    """N = f^-1(0) with Seifert chain f^-1([0, inf)).

    ``quad = (P, p, Q, q)`` records Re f = x.P.x + p.x and Im f = x.Q.x + q.x
    on working coordinates when f has that form (enables the compiled kernel).
    """
    f: Callable[[np.ndarray], np.ndarray]
    manifold: Manifold
    orientation_sign: int = 1
    quad: tuple | None = None
    name: str = "N"

    def __call__(self, x) -> np.ndarray:
        return self.f(np.asarray(x, float))

    def phase_parts(self, x) -> tuple[np.ndarray, np.ndarray]:
        v = self(x)
        return v.real, v.imag

    def reversed(self) -> "PhaseChain":
        return PhaseChain(self.f, self.manifold, -self.orientation_sign, self.quad, f"-{self.name}")

    def abs_f(self, x) -> np.ndarray:
        return np.abs(self(x))

    def project_to_zero(self, x, iters: int = 30) -> np.ndarray:
        """Newton-project points onto N (tangentially, then back onto M)."""
        x = np.array(x, float)
        for _ in range(iters):
            E = tangent_basis(self.manifold, x)
            J = _df(self, x, E)
            v = self(x)
            r = np.stack([v.real, v.imag], axis=-1)
            dx = np.einsum("...ij,...j->...i", E, np.einsum("...ij,...j->...i", np.linalg.pinv(J), r))
            x = self.manifold.project(x - dx)
            if np.max(np.abs(r)) < 1e-14:
                break
        return x

    def regularity(self, x) -> np.ndarray:
        """Smallest singular value of df restricted to the tangent space at x."""
        E = tangent_basis(self.manifold, x)
        return np.linalg.svd(_df(self, x, E), compute_uv=False)[..., -1]


def tangent_basis(manifold: Manifold, x) -> np.ndarray:
    """Orthonormal tangent basis (..., m, d); horizontal in the lift for CP2."""
    x = np.asarray(x, float)
    if isinstance(manifold, CP2):
        Z = x
        iZ = np.empty_like(x)
        iZ[..., 0::2], iZ[..., 1::2] = -x[..., 1::2], x[..., 0::2]
        B = np.concatenate([Z[..., :, None], iZ[..., :, None],
                            np.broadcast_to(np.eye(6), x.shape[:-1] + (6, 6))], axis=-1)
        Qm, _ = np.linalg.qr(B)
        return Qm[..., :, 2:6]
    return manifold.tangent_frame(x)


def _df(chain: PhaseChain, x, E, h: float = 1e-6) -> np.ndarray:
    """(..., 2, d) derivative of (Re f, Im f) along the frame E."""
    cols = []
    for k in range(E.shape[-1]):
        e = E[..., :, k]
        fp, fm = chain(x + h * e), chain(x - h * e)
        d = (fp - fm) / (2 * h)
        cols.append(np.stack([d.real, d.imag], axis=-1))
    return np.stack(cols, axis=-1)


def _quad_chain(P, p, Q, q, manifold, name, sign=1) -> PhaseChain:
    P, Q, p, q = (np.asarray(v, float) for v in (P, Q, p, q))

    def f(x):
        re = np.einsum("...i,ij,...j->...", x, P, x) + x @ p
        im = np.einsum("...i,ij,...j->...", x, Q, x) + x @ q
        return re + 1j * im

    return PhaseChain(f, manifold, sign, (P, p, Q, q), name)


def s3xs3_chain() -> PhaseChain:
    """f(z, w) = <z, w> = z0 conj(w0) + z1 conj(w1) on S^3 x S^3."""
    P, Q = np.zeros((8, 8)), np.zeros((8, 8))
    for zr, zi, wr, wi in [(0, 1, 4, 5), (2, 3, 6, 7)]:
        # Re = zr wr + zi wi,  Im = zi wr - zr wi
        for i, j, s in [(zr, wr, 1), (zi, wi, 1)]:
            P[i, j] += s / 2
            P[j, i] += s / 2
        for i, j, s in [(zi, wr, 1), (zr, wi, -1)]:
            Q[i, j] += s / 2
            Q[j, i] += s / 2
    return _quad_chain(P, np.zeros(8), Q, np.zeros(8), Sphere3xSphere3(), "<z,w>")


def s3_fiber_chain() -> PhaseChain:
    """f(z) = z1 on S^3: N is the Hopf fiber {z1 = 0}, S a spanning disk."""
    p, q = np.zeros(4), np.zeros(4)
    p[2], q[3] = 1.0, 1.0
    return _quad_chain(np.zeros((4, 4)), p, np.zeros((4, 4)), q, Sphere3(), "z1")


def cp2_strip_chain() -> PhaseChain:
    """Chain {[1 : z : w] : z in [-1, 1]} on CP2 via f = (Z0 + Z1) conj(Z0 - Z1).

    f is invariant under Z -> e^{i theta} Z, real and positive exactly on
    the strip, and vanishes on the two leaves z = +-1 (and at [0:0:1]).
    Crossing sign +1 means Im(Z1/Z0) increases.
    """
    P, Q = np.zeros((6, 6)), np.zeros((6, 6))
    P[0, 0] = P[1, 1] = 1.0
    P[2, 2] = P[3, 3] = -1.0
    # Im f = 2 Im(Z1 conj Z0) = 2 (x0 y1 - y0 x1)
    Q[0, 3] = Q[3, 0] = 1.0
    Q[1, 2] = Q[2, 1] = -1.0
    return _quad_chain(P, np.zeros(6), Q, np.zeros(6), CP2(), "strip")


# event location on curves --------------------------------------------------

@dataclass
class CrossingCount:
    pos: np.ndarray
    neg: np.ndarray
    min_abs_f: np.ndarray

    @property
    def net(self) -> np.ndarray:
        return self.pos - self.neg


def curve_crossings(curve: Callable[[np.ndarray, np.ndarray], np.ndarray], n_curves: int,
                    owner: np.ndarray, n_owner: int, chain: PhaseChain, grid: int = 32,
                    wrap_guard: float = 2.0, refine: int = 8, max_depth: int = 4,
                    bisect_iters: int = 40) -> CrossingCount:
    """Signed crossings of parametrised curves s in [0, 1] with the Seifert chain.

    ``curve(ids, s)`` evaluates curves ``ids`` at parameters ``s`` (same
    shape).  Counts are accumulated per ``owner[id]``.  Intervals whose
    chord in the f-plane passes within ``wrap_guard`` chord lengths of 0
    are subdivided ``refine``-fold, up to ``max_depth`` times.
    """
    pos = np.zeros(n_owner, np.int64)
    neg = np.zeros(n_owner, np.int64)
    min_abs = np.full(n_owner, np.inf)
    if n_curves == 0:
        return CrossingCount(pos, neg, min_abs)
    ids = np.repeat(np.arange(n_curves), grid + 1)
    s = np.tile(np.linspace(0.0, 1.0, grid + 1), n_curves)
    fv = chain(curve(ids, s)).reshape(n_curves, grid + 1)
    np.minimum.at(min_abs, owner, np.min(np.abs(fv), axis=1))
    ii = np.repeat(np.arange(n_curves), grid)
    s0 = np.tile(np.linspace(0.0, 1.0, grid + 1)[:-1], n_curves)
    s1 = np.tile(np.linspace(0.0, 1.0, grid + 1)[1:], n_curves)
    f0, f1 = fv[:, :-1].ravel(), fv[:, 1:].ravel()
    done_i, done_a, done_b, done_s = [], [], [], []
    for depth in range(max_depth + 1):
        chord = np.abs(f1 - f0)
        wrap = (np.minimum(np.abs(f0), np.abs(f1)) < wrap_guard * chord) & (chord > 0)
        if depth == max_depth:
            wrap[:] = False
        ch = ~wrap & ((f0.imag >= 0) != (f1.imag >= 0))
        done_i.append(ii[ch])
        done_a.append(s0[ch])
        done_b.append(s1[ch])
        done_s.append(f0.imag[ch] >= 0)
        if not np.any(wrap):
            break
        wi, wa, wb = ii[wrap], s0[wrap], s1[wrap]
        fa, fb = f0[wrap], f1[wrap]
        frac = np.linspace(0.0, 1.0, refine + 1)
        pts = wa[:, None] + (wb - wa)[:, None] * frac[None, 1:-1]
        fin = chain(curve(np.repeat(wi, refine - 1), pts.ravel())).reshape(wi.size, refine - 1)
        np.minimum.at(min_abs, owner[wi], np.min(np.abs(fin), axis=1))
        grid_f = np.concatenate([fa[:, None], fin, fb[:, None]], axis=1)
        grid_s = np.concatenate([wa[:, None], pts, wb[:, None]], axis=1)
        ii = np.repeat(wi, refine)
        s0, s1 = grid_s[:, :-1].ravel(), grid_s[:, 1:].ravel()
        f0, f1 = grid_f[:, :-1].ravel(), grid_f[:, 1:].ravel()
    ci = np.concatenate(done_i)
    if ci.size:
        lo, hi = np.concatenate(done_a), np.concatenate(done_b)
        s_lo = np.concatenate(done_s)
        for _ in range(bisect_iters):
            mid = 0.5 * (lo + hi)
            same = (chain(curve(ci, mid)).imag >= 0) == s_lo
            lo = np.where(same, mid, lo)
            hi = np.where(same, hi, mid)
        hit = chain(curve(ci, 0.5 * (lo + hi))).real > 0
        np.add.at(pos, owner[ci[hit & ~s_lo]], 1)
        np.add.at(neg, owner[ci[hit & s_lo]], 1)
    return CrossingCount(pos, neg, min_abs)


def trajectory_crossings(traj: Trajectory, chain: PhaseChain) -> CrossingCount:
    """Crossings of the flow part, scanning the dense output step by step."""
    def curve(j, th):
        return traj.step_eval(j, th)
    return curve_crossings(curve, traj.nsteps, np.zeros(traj.nsteps, int), 1, chain, grid=1)


def paths_crossings(paths: list, chain: PhaseChain, grid: int = 32) -> CrossingCount:
    """Crossings of a list of closure paths (great-circle products), one count per path."""
    segs, owner = path_segments(paths)
    if not segs:
        z = np.zeros(len(paths), np.int64)
        return CrossingCount(z, z.copy(), np.full(len(paths), np.inf))
    flat = [s for s in segs if s.kind == "flat"]
    if flat:
        def curve(i, s):
            return np.stack([segs[k](v) for k, v in zip(i, s)])
    else:
        starts = np.stack([s.start for s in segs])
        dirs = np.stack([s.dirs for s in segs])
        ang = np.stack([s.angles for s in segs])
        blocks = segs[0].blocks

        def curve(i, s):
            out = np.empty((i.size, starts.shape[1]))
            for b, (lo, hi) in enumerate(blocks):
                th = (s * ang[i, b])[:, None]
                out[:, lo:hi] = np.cos(th) * starts[i, lo:hi] + np.sin(th) * dirs[i, lo:hi]
            return out
    return curve_crossings(curve, len(segs), owner, len(paths), chain, grid=grid)


# single loops ----------------------------------------------------------------

def crossing_breakdown(loop: ClosedLoop, chain: PhaseChain, guard: float = DEGENERATE_GUARD) -> dict:
    """Signed crossings of the flow and closure parts (orientation applied)."""
    if loop.flow_part is not None:
        fc = trajectory_crossings(loop.flow_part, chain)
        flow_net, flow_min = int(fc.net[0]), float(fc.min_abs_f[0])
    else:
        flow_net, flow_min = 0, float(chain.abs_f(loop.basepoint))
    cc = paths_crossings([loop.closure_part], chain)
    mn = min(flow_min, float(cc.min_abs_f[0]))
    if mn < guard:
        raise DegenerateStartError(f"degenerate start, resample (loop passes |f| = {mn:.2e} < {guard:g})")
    s = chain.orientation_sign
    return {"flow": s * flow_net, "closure": s * int(cc.net[0]), "min_abs_f": mn}


def signed_crossings(loop: ClosedLoop, chain: PhaseChain, guard: float = DEGENERATE_GUARD) -> int:
    b = crossing_breakdown(loop, chain, guard)
    return b["flow"] + b["closure"]


# estimates -------------------------------------------------------------------

@dataclass
class LinkingEstimate:
    value: float
    horizon_t: float
    samples: int
    stderr: float
    crossings_flow: int
    crossings_closure: int
    volume: float = 1.0
    degenerate: int = 0
    system: dict = field(default_factory=dict)
    records: dict | None = field(default=None, repr=False)

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("records")
        return d

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)

    CSV_COLUMNS = ("index", "start", "crossings_flow", "crossings_closure", "horizon", "value")

    def to_csv(self, path) -> None:
        if self.records is None:
            raise ValueError("no per-sample records")
        r = self.records
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.CSV_COLUMNS)
            for i in range(len(r["value"])):
                w.writerow([i, " ".join(f"{v:.17g}" for v in r["start"][i]), int(r["flow"][i]),
                            int(r["closure"][i]), self.horizon_t, repr(float(r["value"][i]))])


def _kernel_ok(X: VectorField, chain: PhaseChain) -> bool:
    return X.matrix is not None and chain.quad is not None and not X.time_dependent


def flow_part_crossings(X: VectorField, chain: PhaseChain, X0, t_end: float, tol: float = 1e-10,
                        backend: str | None = None) -> dict:
    """Flow-part crossings and end points for a batch of starts (orientation not applied)."""
    X0 = np.atleast_2d(np.asarray(X0, float))
    if _kernel_ok(X, chain) and backend != "trajectory":
        P, p, Q, q = chain.quad
        r = kernels.flow_crossings(X.matrix, X0, chain.manifold.blocks, float(t_end), tol, P, p, Q, q,
                                   backend=None if backend in (None, "kernel") else backend)
        if np.any(r["status"] != kernels.STATUS_OK):
            raise RuntimeError(f"integration failed for {int(np.sum(r['status'] != 0))} starts")
        return {"end": r["x_end"], "net": r["crossings"], "min_abs_f": r["min_abs_f"]}
    ends, nets, mins = [], [], []
    for x in X0:
        tr = integrate(X, x, t_end, tol, chain.manifold)
        c = trajectory_crossings(tr, chain)
        ends.append(tr.end)
        nets.append(int(c.net[0]))
        mins.append(float(c.min_abs_f[0]))
    return {"end": np.array(ends), "net": np.array(nets), "min_abs_f": np.array(mins)}


def asymptotic_lk(X: VectorField, x0, chain: PhaseChain, sys: ShortPathSystem, t_end: float,
                  tol: float = 1e-10, backend: str | None = "trajectory") -> LinkingEstimate:
    """lk(gamma(x0, t), N) / t for a single start.

    With ``backend="trajectory"`` the loop is built from :func:`flow.integrate`
    and counted by :func:`signed_crossings`; any other value uses the batched
    kernel for the flow part.
    """
    x0 = chain.manifold.project(np.asarray(x0.working() if hasattr(x0, "working") else x0, float))
    if backend == "trajectory" or not _kernel_ok(X, chain):
        loop = close_loop(integrate(X, x0, t_end, tol, chain.manifold), sys)
        b = crossing_breakdown(loop, chain)
        flow, clos = b["flow"], b["closure"]
    else:
        r = flow_part_crossings(X, chain, x0[None], t_end, tol, backend)
        cc = paths_crossings([sys.path(r["end"][0], x0)], chain)
        mn = min(float(r["min_abs_f"][0]), float(cc.min_abs_f[0]))
        if mn < DEGENERATE_GUARD:
            raise DegenerateStartError(f"degenerate start, resample (|f| = {mn:.2e})")
        flow = chain.orientation_sign * int(r["net"][0])
        clos = chain.orientation_sign * int(cc.net[0])
    return LinkingEstimate((flow + clos) / t_end, float(t_end), 1, 0.0, flow, clos,
                           system=sys.describe())


def default_workers() -> int:
    v = os.environ.get(WORKERS_ENV)
    return max(1, int(v)) if v else 1


def _run_chunk(X, chain, sys, t_end, tol, seq, n, backend, guard):
    """Sample n starts from one RNG stream, resampling degenerate ones."""
    rng = np.random.default_rng(seq)
    m = chain.manifold
    X0 = m.sample(rng, n)
    flow = np.zeros(n, np.int64)
    clos = np.zeros(n, np.int64)
    todo = np.arange(n)
    degenerate = 0
    for _ in range(100):
        r = flow_part_crossings(X, chain, X0[todo], t_end, tol, backend)
        paths = [sys.path(e, x) for e, x in zip(r["end"], X0[todo])]
        cc = paths_crossings(paths, chain)
        flow[todo] = r["net"]
        clos[todo] = cc.net
        bad = (r["min_abs_f"] < guard) | (cc.min_abs_f < guard)
        if not np.any(bad):
            break
        degenerate += int(bad.sum())
        todo = todo[bad]
        X0[todo] = m.sample(rng, todo.size)
    return X0, flow, clos, degenerate


def average_lk(X: VectorField, chain: PhaseChain, sys: ShortPathSystem, t_end: float,
               n_samples: int, seed: int = 0, tol: float = 1e-10, volume: float | None = None,
               workers: int | None = None, chunk: int = 256, backend: str | None = None,
               max_degenerate: float = 0.01, guard: float = DEGENERATE_GUARD,
               keep_records: bool = True) -> LinkingEstimate:
    """vol(M) times the Monte Carlo mean of lk(gamma(x, t), N)/t over mu-distributed x.

    Starts come from independent RNG streams (one per chunk of ``chunk``
    samples, spawned from ``seed``), so the result does not depend on the
    number of workers.  Degenerate starts (loop within ``guard`` of N) are
    resampled; more than ``max_degenerate`` of them aborts.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    vol = chain.manifold.volume if volume is None else volume
    nchunks = -(-n_samples // chunk)
    seqs = np.random.SeedSequence(seed).spawn(nchunks)
    sizes = [min(chunk, n_samples - k * chunk) for k in range(nchunks)]
    workers = workers or default_workers()
    args = [(X, chain, sys, t_end, tol, seqs[k], sizes[k], backend, guard) for k in range(nchunks)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda a: _run_chunk(*a), args))
    else:
        parts = [_run_chunk(*a) for a in args]
    starts = np.concatenate([p[0] for p in parts])
    flow = np.concatenate([p[1] for p in parts]) * chain.orientation_sign
    clos = np.concatenate([p[2] for p in parts]) * chain.orientation_sign
    degenerate = sum(p[3] for p in parts)
    if degenerate > max_degenerate * n_samples:
        raise TooManyDegenerateError(
            f"{degenerate} of {n_samples} starts were degenerate (> {max_degenerate:.0%}); "
            "the chain or field may be ill-posed")
    lk = (flow + clos) / t_end
    value = vol * float(np.mean(lk))
    stderr = float(vol * np.std(lk, ddof=1) / np.sqrt(n_samples)) if n_samples > 1 else 0.0
    records = {"start": starts, "flow": flow, "closure": clos, "value": lk} if keep_records else None
    return LinkingEstimate(value, float(t_end), int(n_samples), stderr, int(flow.sum()), int(clos.sum()),
                           float(vol), degenerate, sys.describe(), records)


def hopf_pair_rate(a: float, b: float) -> float:
    """lk((z, w), N) = (a - b) / 2 pi for starts off N."""
    return (a - b) / (2 * np.pi)


def hopf_pair_target(a: float, b: float) -> float:
    """Average linking (a - b)/(2 pi) vol(S^3)^2 = 2 (a - b) pi^3."""
    return 2 * (a - b) * np.pi ** 3
