"""Trajectories of vector fields on the model manifolds, and time averages.

Integration is DOP853 with a 7th-order dense output.  After every accepted
step the state is projected back onto the manifold (unit-sphere blocks), so
the constraint drift stays at rounding level.  Rows of a batch carry their
own step sizes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

import numpy as np

from . import _dop853 as T
from ._fallback import MAX_FACTOR, MIN_FACTOR, SAFETY, dense_eval
from .fields import VectorField
from .geometry import Manifold, Point

C_NODES = T.A.sum(axis=1)
# 5-point Gauss-Legendre on [0, 1] for per-step quadrature
_GL_X, _GL_W = np.polynomial.legendre.leggauss(5)
GL_NODES, GL_WEIGHTS = 0.5 * (_GL_X + 1), 0.5 * _GL_W


class StepUnderflowError(RuntimeError):
    """Step size collapsed; ``state`` and ``t`` hold the last accepted point."""

    def __init__(self, msg, state, t):
        super().__init__(msg)
        self.state = state
        self.t = t


class _Projector:
    def __init__(self, manifold: Manifold | None):
        self.blocks = tuple(manifold.blocks) if manifold is not None else ()

    def __call__(self, Y):
        for lo, hi in self.blocks:
            Y[..., lo:hi] /= np.linalg.norm(Y[..., lo:hi], axis=-1, keepdims=True)
        return Y


def _rhs(X: VectorField, direction: float):
    if direction > 0:
        return X.at
    return lambda t, x: -X.at(-t, x)


def _stages(rhs, t, y, k0, h, tol):
    n, m = y.shape
    K = np.empty((T.N_STAGES_EXTENDED, n, m))
    K[0] = k0
    for s in range(1, T.N_STAGES):
        ys = y + h[:, None] * np.tensordot(T.A[s, :s], K[:s], axes=1)
        K[s] = rhs(t + C_NODES[s] * h, ys)
    ynew = y + h[:, None] * np.tensordot(T.B, K[:T.N_STAGES], axes=1)
    K[T.N_STAGES] = rhs(t + h, ynew)
    scale = tol + tol * np.maximum(np.abs(y), np.abs(ynew))
    n5 = np.sum((np.tensordot(T.E5, K[:T.N_STAGES + 1], axes=1) / scale) ** 2, axis=1)
    n3 = np.sum((np.tensordot(T.E3, K[:T.N_STAGES + 1], axes=1) / scale) ** 2, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        en = np.where((n5 == 0) & (n3 == 0), 0.0, np.abs(h) * n5 / np.sqrt((n5 + 0.01 * n3) * m))
    return ynew, K, en


def _dense(rhs, t, y, ynew, K, h):
    for s in range(T.N_STAGES + 1, T.N_STAGES_EXTENDED):
        ys = y + h[:, None] * np.tensordot(T.A[s, :s], K[:s], axes=1)
        K[s] = rhs(t + C_NODES[s] * h, ys)
    dy = ynew - y
    F = np.empty((7,) + y.shape)
    F[0] = dy
    F[1] = h[:, None] * K[0] - dy
    F[2] = 2 * dy - h[:, None] * (K[T.N_STAGES] + K[0])
    F[3:] = h[None, :, None] * np.tensordot(T.D, K, axes=1)
    return F


def integrate_batch(X: VectorField, X0, t_end: float, tol: float = 1e-10,
                    manifold: Manifold | None = None, backward: bool = False,
                    on_step=None, h0: float | None = None, max_steps: int = 10_000_000,
                    strict: bool = True):
    """Integrate many starts to ``t_end``; returns (final states, steps per row).

    ``on_step(rows, t0, h, y0, F)`` is called for each batch of accepted
    steps with the dense coefficients ``F`` (see ``_fallback.dense_eval``).
    With ``strict`` an underflowing row raises :class:`StepUnderflowError`.
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    project = _Projector(manifold)
    rhs = _rhs(X, -1.0 if backward else 1.0)
    Y = project(np.array(X0, float, ndmin=2))
    n = Y.shape[0]
    t = np.zeros(n)
    if h0 is None:
        A = X.matrix
        scale = np.linalg.norm(A, 2) if A is not None else np.max(np.abs(rhs(t, Y)))
        h0 = 0.05 / max(1.0, float(scale))
    h = np.full(n, float(h0))
    steps = np.zeros(n, np.int64)
    active = np.ones(n, bool)
    failed = np.zeros(n, bool)
    while np.any(active):
        idx = np.nonzero(active)[0]
        y, tt = Y[idx], t[idx]
        hh = np.minimum(h[idx], t_end - tt)
        ynew, K, en = _stages(rhs, tt, y, rhs(tt, y), hh, tol)
        acc = en <= 1.0
        with np.errstate(divide="ignore"):
            fac = np.where(en == 0, MAX_FACTOR, np.clip(SAFETY * en ** (-1 / 8), MIN_FACTOR, MAX_FACTOR))
        if np.any(acc):
            ia = np.nonzero(acc)[0]
            rows = idx[ia]
            if on_step is not None:
                F = _dense(rhs, tt[ia], y[ia], ynew[ia], K[:, ia], hh[ia])
                on_step(rows, tt[ia], hh[ia], y[ia], F)
            Y[rows] = project(ynew[ia].copy())
            t[rows] = tt[ia] + hh[ia]
            steps[rows] += 1
        h_old = h[idx]
        h[idx] = np.where(acc, np.where(hh < h_old, h_old, hh * fac), hh * np.minimum(fac, 1.0))
        done = acc & (t[idx] >= t_end * (1 - 1e-15))
        under = ~acc & (h[idx] < 1e-14 * np.maximum(1.0, t[idx]))
        if np.any(under) and strict:
            r = idx[np.nonzero(under)[0][0]]
            raise StepUnderflowError(f"step size underflow at t={t[r]:.6g}", Y[r].copy(), float(t[r]))
        failed[idx[under]] = True
        toolong = steps[idx] >= max_steps
        if np.any(toolong & ~done) and strict:
            r = idx[np.nonzero(toolong & ~done)[0][0]]
            raise StepUnderflowError(f"max_steps reached at t={t[r]:.6g}", Y[r].copy(), float(t[r]))
        active[idx[done | under | toolong]] = False
    return Y, steps


@dataclass
class Trajectory:
    """A flow line with dense output.

    ``times`` are the accepted step ends (0 = times[0] < ... = t_end) and
    ``states`` the projected states there.  Calling the trajectory at times
    in [0, t_end] evaluates the dense output, projected onto the manifold.
    For ``backward`` trajectories the point at time s is phi_{-s}(x0).
    """
    times: np.ndarray
    states: np.ndarray
    coeffs: np.ndarray          # (nsteps, 7, m) dense-output coefficients
    field: VectorField
    t_end: float
    tol: float
    manifold: Manifold | None = None
    backward: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def start(self) -> np.ndarray:
        return self.states[0]

    @property
    def end(self) -> np.ndarray:
        return self.states[-1]

    @property
    def nsteps(self) -> int:
        return len(self.times) - 1

    @property
    def samples(self) -> list:
        if self.manifold is None:
            return list(zip(self.times, self.states))
        return [(t, Point.from_working(self.manifold, x)) for t, x in zip(self.times, self.states)]

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, float)
        flat = np.atleast_1d(s).ravel()
        j = np.clip(np.searchsorted(self.times, flat, side="right") - 1, 0, self.nsteps - 1)
        h = self.times[j + 1] - self.times[j]
        th = np.where(h > 0, (flat - self.times[j]) / np.where(h > 0, h, 1), 0.0)
        out = _Projector(self.manifold)(dense_eval(self.states[j], np.moveaxis(self.coeffs[j], 1, 0), th))
        return out.reshape(s.shape + (self.states.shape[1],))

    def step_eval(self, j, theta) -> np.ndarray:
        """Dense output inside step(s) ``j`` at fraction(s) ``theta``."""
        j = np.atleast_1d(j)
        out = dense_eval(self.states[j], np.moveaxis(self.coeffs[j], 1, 0), theta)
        return _Projector(self.manifold)(out)


def _as_working(x0, manifold):
    if isinstance(x0, Point):
        return x0.working(), manifold or x0.manifold
    return np.asarray(x0, float), manifold


def integrate(X: VectorField, x0, t_end: float, tol: float = 1e-10,
              manifold: Manifold | None = None, backward: bool = False,
              max_steps: int = 10_000_000) -> Trajectory:
    """Adaptive DOP853 flow line from ``x0`` with per-step reprojection.

    Raises :class:`StepUnderflowError` (carrying the last good state) when
    the step size collapses.
    """
    x, manifold = _as_working(x0, manifold)
    times, states, coeffs = [], [], []

    def record(rows, t0, h, y0, F):
        times.append(float(t0[0]))
        states.append(y0[0].copy())
        coeffs.append(F[:, 0].copy())

    xe, _ = integrate_batch(X, x[None], t_end, tol, manifold, backward, on_step=record,
                            max_steps=max_steps)
    times.append(float(t_end))
    states.append(xe[0].copy())
    return Trajectory(np.array(times), np.array(states), np.array(coeffs), X, float(t_end), tol,
                      manifold, backward)


def time_average(f, X: VectorField, x0, t_end: float, tol: float = 1e-10,
                 manifold: Manifold | None = None) -> np.ndarray:
    """(1/t) int_0^t f(phi_s(x0)) ds by 5-point Gauss-Legendre per accepted step.

    ``x0`` may be a batch of starts (n, m); ``f`` must be vectorised.
    """
    x, manifold = _as_working(x0, manifold)
    single = x.ndim == 1
    X0 = np.atleast_2d(x)
    project = _Projector(manifold)
    acc = np.zeros(X0.shape[0])

    def quad(rows, t0, h, y0, F):
        tot = np.zeros(rows.size)
        for th, w in zip(GL_NODES, GL_WEIGHTS):
            tot += w * np.asarray(f(project(dense_eval(y0, F, th))), float)
        np.add.at(acc, rows, h * tot)

    integrate_batch(X, X0, t_end, tol, manifold, on_step=quad)
    out = acc / t_end
    return out[0] if single else out


# closed orbits ----------------------------------------------------------

def _as_fraction(v, max_den: int) -> Fraction:
    fr = Fraction(v).limit_denominator(max_den)
    if abs(float(fr) - v) > 1e-12 * max(1.0, abs(v)):
        raise ValueError(f"{v} is not a rational with denominator <= {max_den}")
    return fr


def hopf_pair_period(a: float, b: float, max_den: int = 1000) -> float:
    """Common period of (e^{iat} z, e^{ibt} w): the least T > 0 with aT, bT in 2 pi Z.

    Exists iff a/b is rational (or one of them is 0); raises otherwise.
    """
    nz = [v for v in (a, b) if v != 0]
    if not nz:
        raise ValueError("zero field: every time is a period")
    fr = [_as_fraction(v, max_den) for v in nz]
    if len(fr) == 1:
        return 2 * np.pi / abs(float(fr[0]))
    p1, q1 = abs(fr[0].numerator), fr[0].denominator
    p2, q2 = abs(fr[1].numerator), fr[1].denominator
    g = Fraction(gcd(p1 * q2, p2 * q1), q1 * q2)
    return 2 * np.pi / float(g)


def return_error(X: VectorField, x0, period: float, tol: float = 1e-12,
                 manifold: Manifold | None = None) -> float:
    tr = integrate(X, x0, period, tol, manifold)
    return float(np.max(np.abs(tr.end - tr.start)))


# flow-map checks ----------------------------------------------------------

def flow_jacobian_det(X: VectorField, x0, t_end: float, manifold: Manifold,
                      eps: float = 1e-4, tol: float = 1e-12) -> float:
    """Determinant of D phi_T in oriented orthonormal frames, by central differences."""
    x = np.asarray(x0.working() if isinstance(x0, Point) else x0, float)
    E0 = manifold.tangent_frame(x)
    d = E0.shape[-1]
    starts = np.concatenate([x + eps * E0.T, x - eps * E0.T])
    ends, _ = integrate_batch(X, np.vstack([x, starts]), t_end, tol, manifold)
    E1 = manifold.tangent_frame(ends[0])
    D = (ends[1:1 + d] - ends[1 + d:]).T / (2 * eps)
    return float(np.linalg.det(E1.T @ D))


def reversibility_error(X: VectorField, x0, t_end: float, tol: float = 1e-10,
                        manifold: Manifold | None = None) -> float:
    fwd = integrate(X, x0, t_end, tol, manifold)
    back = integrate(X, fwd.end, t_end, tol, manifold or fwd.manifold, backward=True)
    return float(np.max(np.abs(back.end - fwd.start)))
