"""Godbillon-Vey and TGV integrands of codimension-one foliation families.

A family F_t is given by 1-forms alpha(t) with alpha ^ d alpha = 0 on a
chart region (or a flat torus fundamental domain).  With a fixed
transversal V (alpha(V) != 0) the division step is done by interior
products:

    beta  = i_V d alpha / alpha(V)                     d alpha = alpha ^ beta
    gamma = i_V d beta / alpha(V)                      d beta  = alpha ^ gamma
    delta = i_V (d gamma - beta ^ gamma) / alpha(V)    d gamma = beta ^ gamma + alpha ^ delta

Each relation follows from the previous one by applying d and using
i_V(alpha ^ w) = alpha(V) w - alpha ^ i_V w for alpha ^ w = 0.
Spatial derivatives of derived forms are fourth-order central differences;
t-derivatives are central differences at step ``dt`` (1e-4).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import forms
from .fields import VectorField
from .forms import FormField
from .ruelle import exact_foliation, hopf_integral_foliation

DT = 1e-4
FD_H = 1e-3


class DivisionError(ValueError):
    """A defining relation (d alpha = alpha ^ beta, ...) failed on the probe set."""


class SingularVolumeError(ValueError):
    pass


@dataclass
class FoliationFamily:
    """Time-indexed integrable 1-forms with a fixed transversal.

    Parameters
    ----------
    dim : int
    alpha : callable
        ``alpha(x, t)`` -> components (..., dim).
    transversal : callable
        ``V(x)`` -> (..., dim), with alpha(V) nowhere zero on the region.
    dalpha : callable, optional
        ``dalpha(x, t)`` -> 2-form components; numeric if omitted.
    sampler : callable
        ``sampler(rng, n)`` -> probe points in the working region.
    period : float, optional
        Coefficients are periodic with this period in every coordinate
        (flat torus T^dim); enables integrals over a fundamental domain.
    """
    dim: int
    alpha: Callable
    transversal: Callable
    dalpha: Callable | None = None
    sampler: Callable | None = None
    period: float | None = None
    name: str = "F"
    dt: float = DT
    meta: dict = field(default_factory=dict)

    def alpha_form(self, t: float) -> FormField:
        a, da = self.alpha, self.dalpha
        dc = (lambda x: da(x, t)) if da is not None else None
        return FormField(1, self.dim, lambda x: a(x, t), dc, name=f"alpha({t:g})")

    def alpha_dot(self, t: float) -> FormField:
        a, h = self.alpha, self.dt
        return FormField(1, self.dim, lambda x: (np.asarray(a(x, t + h)) - np.asarray(a(x, t - h))) / (2 * h),
                         None, name="alpha_dot")

    def rescaled(self, f: Callable, df: Callable | None = None, name: str | None = None) -> "FoliationFamily":
        """The family f(x, t) alpha(x, t) for a nowhere-vanishing function f.

        With ``df(x, t)`` (the spatial gradient) and a closed-form d alpha,
        d(f alpha) = df ^ alpha + f d alpha is kept in closed form.
        """
        a, da = self.alpha, self.dalpha
        dfa = None
        if df is not None and da is not None:
            pairs = forms.multi_indices(self.dim, 2)
            I = np.array([p[0] for p in pairs])
            J = np.array([p[1] for p in pairs])

            def dfa(x, t):
                g, av = np.asarray(df(x, t)), np.asarray(a(x, t))
                return g[..., I] * av[..., J] - g[..., J] * av[..., I] \
                    + np.asarray(f(x, t))[..., None] * np.asarray(da(x, t))
        return FoliationFamily(self.dim, lambda x, t: np.asarray(f(x, t))[..., None] * np.asarray(a(x, t)),
                               self.transversal, dfa, self.sampler, self.period,
                               name or f"f*{self.name}", self.dt, dict(self.meta))

    def with_transversal(self, V: Callable) -> "FoliationFamily":
        return FoliationFamily(self.dim, self.alpha, V, self.dalpha, self.sampler, self.period,
                               self.name, self.dt, dict(self.meta))

    def probes(self, n: int = 1000, seed: int = 0) -> np.ndarray:
        rng = np.random.default_rng(seed)
        if self.sampler is not None:
            return self.sampler(rng, n)
        if self.period is not None:
            return rng.uniform(0, self.period, (n, self.dim))
        raise ValueError("family has no sampler")

    def integrability_residual(self, t: float, x) -> float:
        a = self.alpha_form(t)
        return forms.max_abs(forms.wedge(a, _d(a)), x)

    def transversality(self, t: float, x) -> np.ndarray:
        return self.alpha_form(t).eval(x, self.transversal(x))

    def check(self, t: float, x, tol: float = 1e-8) -> dict:
        integ = self.integrability_residual(t, x)
        tv = np.abs(self.transversality(t, x))
        rep = {"integrability": integ, "min_alpha_V": float(np.min(tv)),
               "max_alpha_V_minus_1": float(np.max(np.abs(tv - 1)))}
        if integ > tol:
            raise DivisionError(f"alpha ^ d alpha = {integ:.3g} exceeds {tol:g}")
        if rep["min_alpha_V"] <= 1e-12:
            raise DivisionError("transversal is tangent to the foliation somewhere")
        return rep


def _d(a: FormField) -> FormField:
    if a.d_components is not None:
        return a.d()
    return forms.numeric_d(a, h=FD_H, order=4)


def _divide(w: FormField, alpha: FormField, V: Callable, name: str) -> FormField:
    """i_V w / alpha(V): the quotient u with w = alpha ^ u when alpha ^ w = 0."""
    iw = forms.interior_product(V, w)

    def comp(x):
        return iw.components(x) / alpha.eval(x, V(x))[..., None]

    return FormField(w.degree - 1, w.dim, comp, None, name=name)


def beta_from_alpha(fam: FoliationFamily, t: float, probes=None, tol: float = 1e-8) -> FormField:
    """beta with d alpha = alpha ^ beta (beta = i_V d alpha / alpha(V))."""
    a = fam.alpha_form(t)
    b = _divide(_d(a), a, fam.transversal, f"beta({t:g})")
    if probes is not None:
        res = relation_residual(_d(a), forms.wedge(a, b), probes)
        if res > tol:
            raise DivisionError(f"|d alpha - alpha ^ beta| = {res:.3g} exceeds {tol:g} "
                                "(integrability or transversality violated)")
    return b


def beta_dot(fam: FoliationFamily, t: float) -> FormField:
    """Central difference of beta(t) in t with V held fixed."""
    h = fam.dt
    bp, bm = beta_from_alpha(fam, t + h), beta_from_alpha(fam, t - h)
    return FormField(1, fam.dim, lambda x: (bp.components(x) - bm.components(x)) / (2 * h), None, "beta_dot")


def beta_dot_richardson(fam: FoliationFamily, t: float, x) -> float:
    """|D(dt) - D(dt/2)| for the beta_dot central difference (Richardson check)."""
    half = FoliationFamily(fam.dim, fam.alpha, fam.transversal, fam.dalpha, fam.sampler, fam.period,
                           fam.name, fam.dt / 2)
    return forms.max_abs(beta_dot(fam, t) - beta_dot(half, t), x)


def relation_residual(lhs: FormField, rhs: FormField, x) -> float:
    return float(np.max(np.abs(lhs.components(x) - rhs.components(x))))


def gv_integrand(fam: FoliationFamily, t: float) -> FormField:
    """beta ^ d beta."""
    b = beta_from_alpha(fam, t)
    out = forms.wedge(b, _d(b))
    out.name = "beta^dbeta"
    return out


def tgv_integrand(fam: FoliationFamily, t: float) -> FormField:
    """beta_dot ^ beta ^ d beta."""
    b = beta_from_alpha(fam, t)
    out = forms.wedge(forms.wedge(beta_dot(fam, t), b), _d(b))
    out.name = "beta_dot^beta^dbeta"
    return out


def closedness_residual(a: FormField, x, h: float = FD_H) -> float:
    """max |d a| on probes; top-degree forms are closed for dimensional reasons."""
    if a.degree == a.dim:
        return 0.0
    return forms.max_abs(forms.numeric_d(a, h=h, order=4), x)


def dbeta_squared(fam: FoliationFamily, t: float) -> FormField:
    db = _d(beta_from_alpha(fam, t))
    return forms.wedge(db, db)


def gamma_delta(fam: FoliationFamily, t: float, probes=None, tol: float = 1e-6):
    """gamma, delta from d beta = alpha ^ gamma and d gamma = beta ^ gamma + alpha ^ delta."""
    a = fam.alpha_form(t)
    b = beta_from_alpha(fam, t)
    V = fam.transversal
    db = _d(b)
    g = _divide(db, a, V, "gamma")
    rest = _d(g) - forms.wedge(b, g)
    dl = _divide(rest, a, V, "delta")
    if probes is not None:
        r1 = relation_residual(db, forms.wedge(a, g), probes)
        r2 = relation_residual(rest, forms.wedge(a, dl), probes)
        if max(r1, r2) > tol:
            raise DivisionError(f"division step failed: residuals {r1:.3g}, {r2:.3g} exceed {tol:g}")
    return g, dl


def eq_alt_residual(fam: FoliationFamily, t: float, x, tol_division: float = 1e-6) -> float:
    """max |beta_dot ^ beta ^ d beta - d(alpha_dot ^ beta ^ gamma) + alpha_dot ^ beta ^ alpha ^ delta|."""
    a, ad = fam.alpha_form(t), fam.alpha_dot(t)
    b = beta_from_alpha(fam, t)
    g, dl = gamma_delta(fam, t, probes=x, tol=tol_division)
    lhs = tgv_integrand(fam, t)
    first = forms.numeric_d(forms.wedge(forms.wedge(ad, b), g), h=FD_H, order=4)
    second = forms.wedge(forms.wedge(forms.wedge(ad, b), a), dl)
    return relation_residual(lhs, first - second, x)


# the derived field and measured foliation -------------------------------------------

def _top_solve(eta: FormField, mu: FormField, x) -> np.ndarray:
    """X with i_X mu = eta (eta of degree n - 1), pointwise."""
    n = mu.dim
    x = np.asarray(x, float)
    E = np.eye(n)
    cols = [forms.interior_product(lambda y, e=E[i]: np.broadcast_to(e, np.shape(y)), mu).components(x)
            for i in range(n)]
    A = np.stack(cols, axis=-1)                 # (..., ncomp, n)
    rhs = eta.components(x)
    sv = np.linalg.svd(A, compute_uv=False)
    bad = np.atleast_1d(sv[..., -1] < 1e-12)
    if np.any(bad):
        at = np.reshape(x, (-1, n))[int(np.argmax(bad))]
        raise SingularVolumeError(f"volume form degenerate at {at.tolist()}")
    # square system (ncomp = n for degree n-1 forms)
    return np.linalg.solve(A, rhs[..., None])[..., 0]


def volume_coframe(dim: int, density: Callable | None = None) -> FormField:
    if density is None:
        return forms.volume_coframe(dim)
    return FormField(dim, dim, lambda x: np.asarray(density(x))[..., None], None, name="mu")


def derived_field_and_foliation(fam: FoliationFamily, t: float, mu: FormField | None = None):
    """X with i_X mu = d(beta_dot ^ beta), and the measured foliation (G, d beta).

    Returns ``(X, G, alpha_X)`` with alpha_X = beta_dot ^ beta the primitive.
    """
    mu = mu if mu is not None else forms.volume_coframe(fam.dim)
    b = beta_from_alpha(fam, t)
    aX = forms.wedge(beta_dot(fam, t), b)
    aX.name = "beta_dot^beta"
    eta = forms.numeric_d(aX, h=FD_H, order=4)
    X = VectorField(lambda x: _top_solve(eta, mu, x), fam.dim, name="X_TGV")
    box = fam.period
    sampler = (lambda rng, n: rng.uniform(0, box, (n, fam.dim))) if box is not None else fam.sampler
    vol = box ** fam.dim if box is not None else None
    G = exact_foliation(b, sampler=sampler, volume=vol,
                        frame=lambda x: np.broadcast_to(np.eye(fam.dim), np.shape(x)[:-1] + (fam.dim, fam.dim)),
                        name="(G, d beta)")
    return X, G, aX


def divergence_residual(X: VectorField, mu: FormField, x) -> float:
    return closedness_residual(forms.interior_product(X, mu), x)


# integrals over a torus fundamental domain ----------------------------------------------

def torus_integral(a: FormField, period: float, n: int = 12, chunk: int = 50_000) -> float:
    """Trapezoid (spectrally accurate) integral of a top form over [0, period)^dim."""
    d = a.dim
    g = np.arange(n) * (period / n)
    pts = np.stack(np.meshgrid(*([g] * d), indexing="ij"), axis=-1).reshape(-1, d)
    s = 0.0
    for i in range(0, len(pts), chunk):
        s += float(np.sum(forms.top_coefficient(a, pts[i:i + chunk])))
    return s * (period / n) ** d


def tgv_integral(fam: FoliationFamily, t: float, n: int = 12) -> float:
    if fam.period is None:
        raise ValueError("TGV integral needs a periodic family (torus fundamental domain)")
    return torus_integral(tgv_integrand(fam, t), fam.period, n)


def tgv_hopf_integral(fam: FoliationFamily, t: float, shift: FormField | None = None,
                      n_mc: int = 100_000, seed: int = 0, check_probes: int = 64):
    """H(X, (G, d beta), alpha_X) by Monte Carlo, alpha_X optionally shifted by a closed form."""
    X, G, aX = derived_field_and_foliation(fam, t)
    alpha = aX if shift is None else aX + shift
    mu = forms.volume_coframe(fam.dim)
    probes = fam.probes(check_probes, seed + 1)
    E = np.broadcast_to(np.eye(fam.dim), probes.shape + (fam.dim,))
    return hopf_integral_foliation(X, G, alpha, mu, probes=probes, frames=E,
                                   check_tol=1e-8, n_mc=n_mc, seed=seed)


# example families ------------------------------------------------------------------------

def plane_family(dim: int = 4) -> FoliationFamily:
    """alpha = dx_{dim-2} (constant planes), time independent."""
    def a(x, t):
        out = np.zeros(np.shape(x)[:-1] + (dim,))
        out[..., dim - 2] = 1.0
        return out
    e = np.zeros(dim)
    e[dim - 2] = 1.0
    return FoliationFamily(dim, a, lambda x: np.broadcast_to(e, np.shape(x)),
                           lambda x, t: np.zeros(np.shape(x)[:-1] + (len(forms.multi_indices(dim, 2)),)),
                           sampler=lambda rng, n: rng.uniform(-1, 1, (n, dim)), name="planes")


def exp_family(dim: int = 4) -> FoliationFamily:
    """alpha(t) = exp(t z) dx on a chart (x, y, z, ...), V = d/dx; beta = -t dz."""
    idx = forms.index_of(dim, 2)[(0, 2)]
    ncomp = len(forms.multi_indices(dim, 2))

    def a(x, t):
        out = np.zeros(np.shape(x)[:-1] + (dim,))
        out[..., 0] = np.exp(t * x[..., 2])
        return out

    def da(x, t):
        out = np.zeros(np.shape(x)[:-1] + (ncomp,))
        out[..., idx] = -t * np.exp(t * x[..., 2])      # t e^{tz} dz ^ dx
        return out

    e = np.zeros(dim)
    e[0] = 1.0
    return FoliationFamily(dim, a, lambda x: np.broadcast_to(e, np.shape(x)), da,
                           sampler=lambda rng, n: rng.uniform(-1, 1, (n, dim)), name="exp(tz)dx")


def _trig_poly(rng, dim, n_terms, kmax):
    K = rng.integers(-kmax, kmax + 1, (n_terms, dim))
    c = rng.standard_normal(n_terms) / n_terms
    ph = rng.uniform(0, 2 * np.pi, n_terms)

    def f(x):
        return np.cos(np.asarray(x) @ K.T + ph) @ c

    def grad(x):
        return -(np.sin(np.asarray(x) @ K.T + ph) * c) @ K

    return f, grad


def random_torus_family(seed: int = 0, dim: int = 4, n_terms: int = 6, kmax: int = 2,
                        slope: float = 0.4) -> FoliationFamily:
    """alpha(t) = exp(u0 + t u1) (dx_0 + d(h0 + t h1)) on T^dim, nowhere zero and integrable.

    u0, u1, h0, h1 are random trigonometric polynomials; h is scaled so that
    |d_0 h| <= ``slope`` < 1 keeps alpha away from zero.
    """
    rng = np.random.default_rng(seed)
    u0, gu0 = _trig_poly(rng, dim, n_terms, kmax)
    u1, gu1 = _trig_poly(rng, dim, n_terms, kmax)
    h0, gh0 = _trig_poly(rng, dim, n_terms, kmax)
    h1, gh1 = _trig_poly(rng, dim, n_terms, kmax)
    # |grad h| <= sum |c| |k| <= kmax sqrt(dim) for unit coefficient sums
    scale = slope / (2 * kmax * np.sqrt(dim))

    pairs = forms.multi_indices(dim, 2)
    I = np.array([p[0] for p in pairs])
    J = np.array([p[1] for p in pairs])

    def xi(x, t):
        out = scale * (gh0(x) + t * gh1(x))
        out[..., 0] += 1.0
        return out

    def a(x, t):
        x = np.asarray(x, float)
        return np.exp(u0(x) + t * u1(x))[..., None] * xi(x, t)

    def da(x, t):
        # d(e^u xi) = e^u du ^ xi, since xi is closed
        x = np.asarray(x, float)
        du = gu0(x) + t * gu1(x)
        v = xi(x, t)
        return np.exp(u0(x) + t * u1(x))[..., None] * (du[..., I] * v[..., J] - du[..., J] * v[..., I])

    e = np.zeros(dim)
    e[0] = 1.0
    return FoliationFamily(dim, a, lambda x: np.broadcast_to(e, np.shape(x)), da,
                           period=2 * np.pi, name=f"random_torus(seed={seed})",
                           meta={"seed": seed, "n_terms": n_terms, "kmax": kmax})


# declarative families ----------------------------------------------------------------------

def sympy_family(coords, alpha, transversal, t: str = "t", period=None, region=None,
                 name: str = "config") -> FoliationFamily:
    """Family from coefficient expressions (strings) in chart coordinates and t.

    The spatial exterior derivative of alpha is taken symbolically.
    ``region`` is a list of (lo, hi) per coordinate for probe sampling.
    """
    import sympy as sp

    xs = sp.symbols(list(coords))
    ts = sp.Symbol(t)
    loc = {str(s): s for s in xs}
    loc[t] = ts
    A = [sp.sympify(e, locals=loc) for e in alpha]
    Vs = [sp.sympify(e, locals=loc) for e in transversal]
    dim = len(xs)
    if len(A) != dim or len(Vs) != dim:
        raise ValueError("alpha and transversal need one expression per coordinate")
    if any(ts in v.free_symbols for v in Vs):
        raise ValueError("the transversal must not depend on t")
    dA = [sp.diff(A[j], xs[i]) - sp.diff(A[i], xs[j]) for i, j in forms.multi_indices(dim, 2)]
    fa = sp.lambdify((xs, ts), A, "numpy")
    fda = sp.lambdify((xs, ts), dA, "numpy")
    fv = sp.lambdify((xs,), Vs, "numpy")

    def _stack(vals, shape):
        return np.stack([np.broadcast_to(np.asarray(v, float), shape) for v in vals], axis=-1)

    def a(x, tt):
        x = np.asarray(x, float)
        return _stack(fa(np.moveaxis(x, -1, 0), tt), x.shape[:-1])

    def da(x, tt):
        x = np.asarray(x, float)
        return _stack(fda(np.moveaxis(x, -1, 0), tt), x.shape[:-1])

    def V(x):
        x = np.asarray(x, float)
        return _stack(fv(np.moveaxis(x, -1, 0)), x.shape[:-1])

    sampler = None
    if region is not None:
        lo = np.array([r[0] for r in region], float)
        hi = np.array([r[1] for r in region], float)
        sampler = lambda rng, n: lo + (hi - lo) * rng.random((n, dim))
    return FoliationFamily(dim, a, V, da, sampler=sampler, period=period, name=name,
                           meta={"alpha": [str(e) for e in A], "transversal": [str(e) for e in Vs]})
