# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled flow/crossing kernel; same contract as ``_fallback.flow_crossings``.

The integration loop lives in ``_flowcore.h``: several trajectories advance
in lockstep SIMD lanes, each with its own step size.  Working dimension is
limited to ``MAXDIM``.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef extern from "_flowcore.h" nogil:
    enum:
        FC_M
        FC_L
        FC_NNZ
    ctypedef struct fc_ctx:
        int m, nb
        int blocks[2 * FC_M]
        int nA, nP, nQ
        int Ai[FC_NNZ]
        int Aj[FC_NNZ]
        double Av[FC_NNZ]
        int Pi[FC_NNZ]
        int Pj[FC_NNZ]
        double Pv[FC_NNZ]
        int Qi[FC_NNZ]
        int Qj[FC_NNZ]
        double Qv[FC_NNZ]
        double p[FC_M]
        double q[FC_M]
        int substeps, iters
        double wrap_guard
    void fc_run(const fc_ctx* c, double* Y, long n, double t_end, double tol, double h0,
                long max_steps, long* pos, long* neg, double* min_abs, long* nsteps,
                double* tfin, long* status)

MAXDIM = FC_M
LANES = FC_L


cdef int _triplets(M, int* I, int* J, double* V):
    cdef int k = 0
    rows, cols = np.nonzero(M)
    for r, s in zip(rows, cols):
        I[k] = r
        J[k] = s
        V[k] = M[r, s]
        k += 1
    return k


def flow_crossings(A, X0, blocks, double t_end, double tol, P, p, Q, q, int substeps=8,
                   int bisect_iters=40, long max_steps=10000000, h0=None, double wrap_guard=2.0):
    A = np.asarray(A, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] Y = np.array(X0, dtype=np.float64, ndmin=2, order="C", copy=True)
    cdef long n = Y.shape[0]
    cdef int m = Y.shape[1], i
    if m > FC_M:
        raise ValueError(f"compiled kernel supports dimension <= {FC_M}, got {m}")
    bl = np.asarray(blocks, dtype=np.intc).reshape(-1, 2)
    if bl.shape[0] > FC_M:
        raise ValueError("too many sphere blocks")
    cdef fc_ctx c
    c.m = m
    c.nb = bl.shape[0]
    c.substeps = max(1, substeps)
    c.iters = bisect_iters
    c.wrap_guard = wrap_guard
    for i in range(c.nb):
        c.blocks[2 * i] = bl[i, 0]
        c.blocks[2 * i + 1] = bl[i, 1]
    c.nA = _triplets(A, c.Ai, c.Aj, c.Av)
    c.nP = _triplets(np.asarray(P, dtype=np.float64), c.Pi, c.Pj, c.Pv)
    c.nQ = _triplets(np.asarray(Q, dtype=np.float64), c.Qi, c.Qj, c.Qv)
    pa, qa = np.asarray(p, dtype=np.float64), np.asarray(q, dtype=np.float64)
    for i in range(FC_M):
        c.p[i] = pa[i] if i < m else 0.0
        c.q[i] = qa[i] if i < m else 0.0
    cdef double hstart = (0.05 / max(1.0, np.linalg.norm(A, 2))) if h0 is None else float(h0)
    cdef cnp.ndarray[long, ndim=1] pos = np.zeros(n, dtype=np.int64)
    cdef cnp.ndarray[long, ndim=1] neg = np.zeros(n, dtype=np.int64)
    cdef cnp.ndarray[long, ndim=1] steps = np.zeros(n, dtype=np.int64)
    cdef cnp.ndarray[long, ndim=1] status = np.zeros(n, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=1] min_abs = np.zeros(n)
    cdef cnp.ndarray[double, ndim=1] tfin = np.zeros(n)
    if n > 0:
        with nogil:
            fc_run(&c, &Y[0, 0], n, t_end, tol, hstart, max_steps, &pos[0], &neg[0],
                   &min_abs[0], &steps[0], &tfin[0], &status[0])
    return {
        "x_end": Y, "t_end": tfin, "pos": pos, "neg": neg, "crossings": pos - neg,
        "min_abs_f": min_abs, "steps": steps, "status": status,
    }
