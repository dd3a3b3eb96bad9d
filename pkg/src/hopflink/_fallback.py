"""Pure-numpy batched flow/crossing kernel.

Integrates x' = A x for many starts at once (DOP853, one adaptive step per
row), renormalises the unit-sphere blocks after every accepted step and
counts signed crossings of the chain {Im f = 0, Re f > 0} where

    Re f(x) = x.P.x + p.x,   Im f(x) = x.Q.x + q.x.

Sign changes of Im f are detected at step endpoints.  When the chord of f
over a step passes within ``wrap_guard`` chord lengths of 0 the phase could
wind inside the step, so the dense output is also sampled at ``substeps``
interior points.  Crossings are localised by bisection on the dense output.
The compiled kernel follows the same arithmetic step for step.
"""
from __future__ import annotations

import numpy as np

from . import _dop853 as T

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_MAX_STEPS = 2

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
ERR_EXP = -1 / 8


def _project(Y, blocks):
    for lo, hi in blocks:
        Y[..., lo:hi] /= np.linalg.norm(Y[..., lo:hi], axis=-1, keepdims=True)
    return Y


def _phase(X, P, p, Q, q):
    re = np.einsum("...i,ij,...j->...", X, P, X) + X @ p
    im = np.einsum("...i,ij,...j->...", X, Q, X) + X @ q
    return re, im


def dop853_step(A, y, k0, hh, tol):
    """One DOP853 trial step of x' = A x for a batch of rows.

    Returns the unprojected new state, the 13 stage derivatives and the
    scaled error norm of each row.
    """
    n, m = y.shape
    K = np.empty((T.N_STAGES_EXTENDED, n, m))
    K[0] = k0
    for s in range(1, T.N_STAGES):
        ys = y + hh[:, None] * np.tensordot(T.A[s, :s], K[:s], axes=1)
        K[s] = ys @ A.T
    ynew = y + hh[:, None] * np.tensordot(T.B, K[:T.N_STAGES], axes=1)
    K[T.N_STAGES] = ynew @ A.T
    scale = tol + tol * np.maximum(np.abs(y), np.abs(ynew))
    e5 = np.tensordot(T.E5, K[:T.N_STAGES + 1], axes=1) / scale
    e3 = np.tensordot(T.E3, K[:T.N_STAGES + 1], axes=1) / scale
    n5 = np.sum(e5 ** 2, axis=1)
    n3 = np.sum(e3 ** 2, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        en = np.where((n5 == 0) & (n3 == 0), 0.0, np.abs(hh) * n5 / np.sqrt((n5 + 0.01 * n3) * m))
    return ynew, K, en


def dense_coeffs(A, y, ynew, K, hh):
    """Interpolant coefficients F (7, n, m); fills the extra stages of K."""
    for s in range(T.N_STAGES + 1, T.N_STAGES_EXTENDED):
        ys = y + hh[:, None] * np.tensordot(T.A[s, :s], K[:s], axes=1)
        K[s] = ys @ A.T
    dy = ynew - y
    F = np.empty((7,) + y.shape)
    F[0] = dy
    F[1] = hh[:, None] * K[0] - dy
    F[2] = 2 * dy - hh[:, None] * (K[T.N_STAGES] + K[0])
    F[3:] = hh[None, :, None] * np.tensordot(T.D, K, axes=1)
    return F


def dense_eval(y, F, theta):
    """Unprojected dense output at fractions ``theta`` (n,) or scalar."""
    th = np.broadcast_to(np.asarray(theta, float), y.shape[:1])[:, None]
    out = np.zeros_like(y)
    for i, Fk in enumerate(F[::-1]):
        out += Fk
        out *= th if i % 2 == 0 else 1 - th
    return out + y


def step_factor(en):
    with np.errstate(divide="ignore"):
        return np.where(en == 0, MAX_FACTOR,
                        np.clip(SAFETY * en ** ERR_EXP, MIN_FACTOR, MAX_FACTOR))


def flow_crossings(A, X0, blocks, t_end, tol, P, p, Q, q, substeps=8,
                   bisect_iters=40, max_steps=10_000_000, h0=None, wrap_guard=2.0):
    A = np.ascontiguousarray(A, float)
    Y = _project(np.array(X0, float, ndmin=2), blocks)
    n, m = Y.shape
    P, Q = np.asarray(P, float), np.asarray(Q, float)
    p, q = np.asarray(p, float), np.asarray(q, float)
    substeps = max(1, int(substeps))

    t = np.zeros(n)
    if h0 is None:
        h0 = 0.05 / max(1.0, np.linalg.norm(A, 2))
    h = np.full(n, float(h0))
    active = np.ones(n, bool)
    status = np.zeros(n, np.int64)
    steps = np.zeros(n, np.int64)
    pos = np.zeros(n, np.int64)
    neg = np.zeros(n, np.int64)
    F_re, F_im = _phase(Y, P, p, Q, q)
    min_abs2 = F_re ** 2 + F_im ** 2
    thetas = np.linspace(0.0, 1.0, substeps + 1)

    while np.any(active):
        idx = np.nonzero(active)[0]
        y, tt = Y[idx], t[idx]
        hh = np.minimum(h[idx], t_end - tt)
        ynew, K, en = dop853_step(A, y, y @ A.T, hh, tol)
        acc = en <= 1.0
        fac = step_factor(en)

        if np.any(acc):
            ia = np.nonzero(acc)[0]
            rows = idx[ia]
            ya, ha, yraw = y[ia], hh[ia], ynew[ia]
            ynew_a = _project(yraw.copy(), blocks)
            re1, im1 = _phase(ynew_a, P, p, Q, q)
            re0, im0 = F_re[rows], F_im[rows]
            chord2 = wrap_guard ** 2 * ((re1 - re0) ** 2 + (im1 - im0) ** 2)
            a0, a1 = re0 ** 2 + im0 ** 2, re1 ** 2 + im1 ** 2
            wrap = (a1 < chord2) | (a0 < chord2)
            change = (im0 >= 0) != (im1 >= 0)
            need = wrap | change
            quiet = rows[~need]
            min_abs2[quiet] = np.minimum(min_abs2[quiet], a1[~need])
            if np.any(need):
                iw = np.nonzero(need)[0]
                yw, hw, rw = ya[iw], ha[iw], rows[iw]
                F = dense_coeffs(A, yw, yraw[iw], K[:, ia[iw]], hw)
                nsub = np.where(wrap[iw], substeps, 1)
                # phase at theta = j/substeps (rows without a wrap risk only use the ends)
                re = np.empty((substeps + 1, iw.size))
                im = np.empty_like(re)
                re[0], im[0] = re0[iw], im0[iw]
                for j in range(1, substeps):
                    xs = _project(dense_eval(yw, F, thetas[j]), blocks)
                    re[j], im[j] = _phase(xs, P, p, Q, q)
                re[-1], im[-1] = re1[iw], im1[iw]
                plain = nsub == 1
                re[1:-1, plain] = re1[iw][plain]
                im[1:-1, plain] = im1[iw][plain]
                min_abs2[rw] = np.minimum(min_abs2[rw], np.min(re ** 2 + im ** 2, axis=0))
                sgn = im >= 0
                ch = sgn[1:] != sgn[:-1]
                if np.any(ch):
                    js, ns = np.nonzero(ch)
                    lo = np.where(plain[ns], 0.0, thetas[js])
                    hi = np.where(plain[ns], 1.0, thetas[js + 1])
                    s_lo = sgn[js, ns]
                    yb, Fb = yw[ns], F[:, ns]
                    for _ in range(bisect_iters):
                        mid = 0.5 * (lo + hi)
                        xm = _project(dense_eval(yb, Fb, mid), blocks)
                        _, imm = _phase(xm, P, p, Q, q)
                        same = (imm >= 0) == s_lo
                        lo = np.where(same, mid, lo)
                        hi = np.where(same, hi, mid)
                    xm = _project(dense_eval(yb, Fb, 0.5 * (lo + hi)), blocks)
                    rem, _ = _phase(xm, P, p, Q, q)
                    hit = rem > 0
                    np.add.at(pos, rw[ns[hit & ~s_lo]], 1)
                    np.add.at(neg, rw[ns[hit & s_lo]], 1)
            F_re[rows], F_im[rows] = re1, im1
            Y[rows] = ynew_a
            t[rows] = tt[ia] + ha
            steps[rows] += 1

        # an accepted step clipped to t_end keeps the proposed h
        h_old = h[idx]
        h[idx] = np.where(acc, np.where(hh < h_old, h_old, hh * fac), hh * np.minimum(fac, 1.0))
        finished = acc & (t[idx] >= t_end * (1 - 1e-15))
        under = (~acc) & (h[idx] < 1e-14 * np.maximum(1.0, np.abs(t[idx])))
        toolong = ~finished & ~under & (steps[idx] >= max_steps)
        status[idx[under]] = STATUS_UNDERFLOW
        status[idx[toolong]] = STATUS_MAX_STEPS
        active[idx[finished | under | toolong]] = False

    return {
        "x_end": Y, "t_end": t, "pos": pos, "neg": neg, "crossings": pos - neg,
        "min_abs_f": np.sqrt(min_abs2), "steps": steps, "status": status,
    }
