/* Lane-parallel DOP853 integration of x' = A x with signed crossing counts
 * of the chain {Im f = 0, Re f > 0}, where
 *     Re f = x.P.x + p.x,   Im f = x.Q.x + q.x.
 *
 * FC_L trajectories advance in lockstep; each lane has its own step size
 * and accept/reject decision and a finished lane picks up the next start.
 * Lanes never mix, so a start's result does not depend on its lane.
 * Matrices are stored as sparse (row, col, value) triplets.
 *
 * Sign changes of Im f are checked at step ends.  When the chord of f over
 * a step passes within wrap_guard chord lengths of 0, the dense output is
 * also sampled at interior points.  Crossings are localised by bisection
 * on the dense output.
 */
#ifndef HOPFLINK_FLOWCORE_H
#define HOPFLINK_FLOWCORE_H

#include <math.h>
#include "_dop853_tab.h"

#define FC_M 8
#if defined(__AVX512F__)
#define FC_L 8
#elif defined(__AVX__)
#define FC_L 4
#else
#define FC_L 2
#endif
#define FC_NNZ (FC_M * FC_M)
#define FC_SAFETY 0.9
#define FC_MIN_FACTOR 0.2
#define FC_MAX_FACTOR 10.0

typedef double fc_vec __attribute__((vector_size(FC_L * sizeof(double))));
typedef long long fc_mask __attribute__((vector_size(FC_L * sizeof(long long))));

typedef struct {
    int m, nb;
    int blocks[2 * FC_M];
    int nA, nP, nQ;
    int Ai[FC_NNZ], Aj[FC_NNZ];
    double Av[FC_NNZ];
    int Pi[FC_NNZ], Pj[FC_NNZ];
    double Pv[FC_NNZ];
    int Qi[FC_NNZ], Qj[FC_NNZ];
    double Qv[FC_NNZ];
    double p[FC_M], q[FC_M];
    int substeps, iters;
    double wrap_guard;
} fc_ctx;

/* exact per-lane select; mask lanes are all ones or all zeros */
static inline fc_vec fc_select(fc_mask mask, fc_vec a, fc_vec b)
{
    return (fc_vec)((mask & (fc_mask)a) | (~mask & (fc_mask)b));
}

static inline fc_vec fc_abs(fc_vec a)
{
    return fc_select(a < 0, -a, a);
}

/* lane-parallel primitives ------------------------------------------------ */

static inline void fc_matvec(const fc_ctx *c, const fc_vec *x, fc_vec *out)
{
    fc_vec acc[FC_M];
    for (int i = 0; i < FC_M; i++) acc[i] = (fc_vec){0};
    for (int k = 0; k < c->nA; k++) acc[c->Ai[k]] += c->Av[k] * x[c->Aj[k]];
    for (int i = 0; i < FC_M; i++) out[i] = acc[i];
}

static inline void fc_project(const fc_ctx *c, fc_vec *x)
{
    for (int b = 0; b < c->nb; b++) {
        fc_vec nrm = {0};
        for (int i = c->blocks[2 * b]; i < c->blocks[2 * b + 1]; i++) nrm += x[i] * x[i];
        fc_vec inv;
        for (int l = 0; l < FC_L; l++) inv[l] = 1.0 / sqrt(nrm[l]);
        for (int i = c->blocks[2 * b]; i < c->blocks[2 * b + 1]; i++) x[i] *= inv;
    }
}

static inline void fc_phase(const fc_ctx *c, const fc_vec *x, fc_vec *re, fc_vec *im)
{
    fc_vec r = {0}, s = {0};
    for (int i = 0; i < c->m; i++) {
        r += c->p[i] * x[i];
        s += c->q[i] * x[i];
    }
    for (int k = 0; k < c->nP; k++) r += c->Pv[k] * x[c->Pi[k]] * x[c->Pj[k]];
    for (int k = 0; k < c->nQ; k++) s += c->Qv[k] * x[c->Qi[k]] * x[c->Qj[k]];
    *re = r;
    *im = s;
}

/* single-lane helpers for event handling ---------------------------------- */

static inline void fc_project1(const fc_ctx *c, double *x)
{
    for (int b = 0; b < c->nb; b++) {
        double nrm = 0.0;
        for (int i = c->blocks[2 * b]; i < c->blocks[2 * b + 1]; i++) nrm += x[i] * x[i];
        nrm = 1.0 / sqrt(nrm);
        for (int i = c->blocks[2 * b]; i < c->blocks[2 * b + 1]; i++) x[i] *= nrm;
    }
}

static inline void fc_phase1(const fc_ctx *c, const double *x, double *re, double *im)
{
    double r = 0.0, s = 0.0;
    for (int i = 0; i < c->m; i++) {
        r += c->p[i] * x[i];
        s += c->q[i] * x[i];
    }
    for (int k = 0; k < c->nP; k++) r += c->Pv[k] * x[c->Pi[k]] * x[c->Pj[k]];
    for (int k = 0; k < c->nQ; k++) s += c->Qv[k] * x[c->Qi[k]] * x[c->Qj[k]];
    *re = r;
    *im = s;
}

/* dense output of lane l at fraction th of the step, projected */
static inline void fc_dense1(const fc_ctx *c, const fc_vec *y, const fc_vec (*F)[FC_M], int l,
                             double th, double *out)
{
    for (int i = 0; i < FC_M; i++) out[i] = 0.0;
    for (int k = 6; k >= 0; k--) {
        double w = ((6 - k) % 2 == 0) ? th : 1.0 - th;
        for (int i = 0; i < FC_M; i++) out[i] = (out[i] + F[k][i][l]) * w;
    }
    for (int i = 0; i < FC_M; i++) out[i] += y[i][l];
    fc_project1(c, out);
}

/* bisect a sign change of Im f on [lo, hi]; count it when Re f > 0 there */
static void fc_locate1(const fc_ctx *c, const fc_vec *y, const fc_vec (*F)[FC_M], int l,
                       double lo, double hi, int s_lo, long *pos, long *neg)
{
    double xs[FC_M], a, b;
    for (int it = 0; it < c->iters; it++) {
        double mid = 0.5 * (lo + hi);
        fc_dense1(c, y, F, l, mid, xs);
        fc_phase1(c, xs, &a, &b);
        if ((b >= 0) == s_lo) lo = mid;
        else hi = mid;
    }
    fc_dense1(c, y, F, l, 0.5 * (lo + hi), xs);
    fc_phase1(c, xs, &a, &b);
    if (a > 0) {
        if (s_lo) (*neg)++;
        else (*pos)++;
    }
}

/* events of lane l over an accepted step; min_abs2 tracks min |f|^2 */
static void fc_events1(const fc_ctx *c, const fc_vec *y, const fc_vec (*F)[FC_M], int l, int nsub,
                       double re0, double im0, double re1, double im1,
                       long *pos, long *neg, double *min_abs2)
{
    int s_prev = im0 >= 0;
    double th_prev = 0.0, xs[FC_M], a, b;
    for (int j = 1; j <= nsub; j++) {
        double th = (double)j / nsub;
        if (j < nsub) {
            fc_dense1(c, y, F, l, th, xs);
            fc_phase1(c, xs, &a, &b);
        } else {
            a = re1;
            b = im1;
        }
        double r2 = a * a + b * b;
        if (r2 < *min_abs2) *min_abs2 = r2;
        int s_cur = b >= 0;
        if (s_cur != s_prev) fc_locate1(c, y, F, l, th_prev, th, s_prev, pos, neg);
        s_prev = s_cur;
        th_prev = th;
    }
}

/* driver ------------------------------------------------------------------- */

static void fc_run(const fc_ctx *cin, double *Y, long n, double t_end, double tol, double h0,
                   long max_steps, long *pos, long *neg, double *min_abs, long *nsteps,
                   double *tfin, long *status)
{
    fc_ctx cl = *cin;
    const fc_ctx *c = &cl;
    const int m = c->m;
    fc_vec y[FC_M], yn[FC_M], ynp[FC_M], ys[FC_M], e5[FC_M], e3[FC_M];
    fc_vec K[DOP_NX][FC_M], F[7][FC_M];
    fc_vec re0 = {0}, im0 = {0}, re1, im1, hh;
    fc_mask acc;
    double t[FC_L], h[FC_L], en[FC_L];
    int nsub[FC_L];
    long row[FC_L];
    int live[FC_L];
    long next_row = 0;
    int nlive = 0;

    /* idle lanes hold a harmless unit vector in every sphere block */
    for (int i = 0; i < FC_M; i++) y[i] = (fc_vec){0};
    for (int b = 0; b < c->nb; b++)
        for (int l = 0; l < FC_L; l++) y[c->blocks[2 * b]][l] = 1.0;
    for (int l = 0; l < FC_L; l++) {
        live[l] = 0;
        t[l] = 0.0;
        h[l] = 0.0;
        row[l] = -1;
    }

    for (;;) {
        for (int l = 0; l < FC_L; l++) {
            if (live[l] || next_row >= n) continue;
            long r = next_row++;
            double x1[FC_M], a, b;
            for (int i = 0; i < FC_M; i++) x1[i] = i < m ? Y[r * m + i] : 0.0;
            fc_project1(c, x1);
            for (int i = 0; i < FC_M; i++) y[i][l] = x1[i];
            fc_phase1(c, x1, &a, &b);
            re0[l] = a;
            im0[l] = b;
            min_abs[r] = a * a + b * b;
            row[l] = r;
            t[l] = 0.0;
            h[l] = h0;
            live[l] = 1;
            nlive++;
        }
        if (nlive == 0) break;
        fc_matvec(c, y, K[0]);

        for (int l = 0; l < FC_L; l++)
            hh[l] = live[l] ? (h[l] < t_end - t[l] ? h[l] : t_end - t[l]) : 0.0;
        for (int s = 1; s < DOP_NS; s++) {
            for (int i = 0; i < FC_M; i++) ys[i] = y[i];
            for (int j = 0; j < s; j++) {
                if (dop_A[s][j] == 0.0) continue;
                fc_vec w = hh * dop_A[s][j];
                for (int i = 0; i < FC_M; i++) ys[i] += w * K[j][i];
            }
            fc_matvec(c, ys, K[s]);
        }
        for (int i = 0; i < FC_M; i++) yn[i] = y[i];
        for (int j = 0; j < DOP_NS; j++) {
            if (dop_B[j] == 0.0) continue;
            fc_vec w = hh * dop_B[j];
            for (int i = 0; i < FC_M; i++) yn[i] += w * K[j][i];
        }
        fc_matvec(c, yn, K[DOP_NS]);
        for (int i = 0; i < FC_M; i++) {
            e5[i] = (fc_vec){0};
            e3[i] = (fc_vec){0};
        }
        for (int j = 0; j <= DOP_NS; j++) {
            for (int i = 0; i < FC_M; i++) {
                e5[i] += dop_E5[j] * K[j][i];
                e3[i] += dop_E3[j] * K[j][i];
            }
        }
        fc_vec n5 = {0}, n3 = {0};
        for (int i = 0; i < m; i++) {
            fc_vec a = fc_abs(y[i]), b = fc_abs(yn[i]);
            fc_vec sc = tol + tol * fc_select(a > b, a, b);
            fc_vec u = e5[i] / sc, v = e3[i] / sc;
            n5 += u * u;
            n3 += v * v;
        }
        for (int i = 0; i < FC_M; i++) ynp[i] = yn[i];
        fc_project(c, ynp);
        fc_phase(c, ynp, &re1, &im1);

        /* accept/reject and decide which lanes need the dense output */
        int need_dense = 0;
        for (int l = 0; l < FC_L; l++) {
            acc[l] = 0;
            nsub[l] = 0;
            if (!live[l]) continue;
            if (n5[l] == 0.0 && n3[l] == 0.0) en[l] = 0.0;
            else en[l] = hh[l] * n5[l] / sqrt((n5[l] + 0.01 * n3[l]) * m);
            if (en[l] > 1.0) continue;
            acc[l] = -1;
            double dr = re1[l] - re0[l], di = im1[l] - im0[l];
            double chord2 = c->wrap_guard * c->wrap_guard * (dr * dr + di * di);
            double a0 = re0[l] * re0[l] + im0[l] * im0[l];
            double a1 = re1[l] * re1[l] + im1[l] * im1[l];
            if (a1 < chord2 || a0 < chord2) nsub[l] = c->substeps;
            else if ((im0[l] >= 0) != (im1[l] >= 0)) nsub[l] = 1;
            if (nsub[l]) need_dense = 1;
            else if (a1 < min_abs[row[l]]) min_abs[row[l]] = a1;
        }
        if (need_dense) {
            for (int s = DOP_NS + 1; s < DOP_NX; s++) {
                for (int i = 0; i < FC_M; i++) ys[i] = y[i];
                for (int j = 0; j < s; j++) {
                    if (dop_A[s][j] == 0.0) continue;
                    fc_vec w = hh * dop_A[s][j];
                    for (int i = 0; i < FC_M; i++) ys[i] += w * K[j][i];
                }
                fc_matvec(c, ys, K[s]);
            }
            for (int i = 0; i < FC_M; i++) {
                fc_vec dy = yn[i] - y[i];
                F[0][i] = dy;
                F[1][i] = hh * K[0][i] - dy;
                F[2][i] = 2 * dy - hh * (K[DOP_NS][i] + K[0][i]);
            }
            for (int k = 0; k < 4; k++) {
                for (int i = 0; i < FC_M; i++) {
                    fc_vec s = {0};
                    for (int j = 0; j < DOP_NX; j++)
                        if (dop_D[k][j] != 0.0) s += dop_D[k][j] * K[j][i];
                    F[3 + k][i] = hh * s;
                }
            }
            for (int l = 0; l < FC_L; l++) {
                if (!nsub[l]) continue;
                long r = row[l];
                fc_events1(c, y, (const fc_vec (*)[FC_M])F, l, nsub[l], re0[l], im0[l], re1[l], im1[l],
                           &pos[r], &neg[r], &min_abs[r]);
            }
        }

        for (int l = 0; l < FC_L; l++) {
            if (!live[l]) continue;
            long r = row[l];
            double fac;
            if (en[l] == 0.0) fac = FC_MAX_FACTOR;
            else {
                fac = FC_SAFETY * pow(en[l], -1.0 / 8.0);
                if (fac < FC_MIN_FACTOR) fac = FC_MIN_FACTOR;
                if (fac > FC_MAX_FACTOR) fac = FC_MAX_FACTOR;
            }
            int done = 0;
            if (acc[l]) {
                t[l] += hh[l];
                nsteps[r]++;
                /* an accepted step clipped to t_end keeps the proposed h */
                if (hh[l] >= h[l]) h[l] = hh[l] * fac;
                if (t[l] >= t_end * (1 - 1e-15)) done = 1;
            } else {
                h[l] = hh[l] * (fac < 1.0 ? fac : 1.0);
                if (h[l] < 1e-14 * (t[l] > 1.0 ? t[l] : 1.0)) {
                    status[r] = 1;
                    done = 1;
                }
            }
            if (!done && nsteps[r] >= max_steps) {
                status[r] = 2;
                done = 1;
            }
            if (done) {
                for (int i = 0; i < m; i++) Y[r * m + i] = acc[l] ? ynp[i][l] : y[i][l];
                tfin[r] = t[l];
                min_abs[r] = sqrt(min_abs[r]);
                live[l] = 0;
                nlive--;
            }
        }
        for (int i = 0; i < FC_M; i++) y[i] = fc_select(acc, ynp[i], y[i]);
        re0 = fc_select(acc, re1, re0);
        im0 = fc_select(acc, im1, im0);
    }
}

#endif
