"""Pointwise exterior algebra on coordinate spaces.

A :class:`FormField` is a degree-k differential form on an open subset of
R^m, stored as a callable returning its components on the sorted
multi-indices ``I = (i_1 < ... < i_k)``.  All callables are vectorised:
points have shape ``(..., m)`` and components ``(..., C(m, k))``.

Forms on embedded manifolds (S^3 in R^4, S^3 x S^3 in R^8, ...) are
ambient forms; restriction to the submanifold commutes with every
operation here, so evaluating on tangent vectors gives the intrinsic value.
"""
from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

ComponentFn = Callable[[np.ndarray], np.ndarray]


class DegreeError(ValueError):
    pass


@lru_cache(maxsize=None)
def multi_indices(dim: int, k: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.combinations(range(dim), k))


@lru_cache(maxsize=None)
def index_of(dim: int, k: int) -> dict[tuple[int, ...], int]:
    return {I: n for n, I in enumerate(multi_indices(dim, k))}


def perm_sign(seq: Sequence[int]) -> int:
    """Sign of the permutation sorting ``seq`` (0 if it has repeats)."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


@lru_cache(maxsize=None)
def _wedge_table(dim: int, k: int, l: int):
    Ks = index_of(dim, k + l)
    rows_a, rows_b, signs, cols = [], [], [], []
    for ia, I in enumerate(multi_indices(dim, k)):
        for ib, J in enumerate(multi_indices(dim, l)):
            s = perm_sign(I + J)
            if s:
                rows_a.append(ia)
                rows_b.append(ib)
                signs.append(float(s))
                cols.append(Ks[tuple(sorted(I + J))])
    scatter = np.zeros((len(cols), len(Ks)))
    scatter[np.arange(len(cols)), cols] = signs
    return np.array(rows_a, dtype=int), np.array(rows_b, dtype=int), scatter


@lru_cache(maxsize=None)
def _interior_table(dim: int, k: int):
    # (i_X a)_J = sum_p (-1)^p X_{K_p} a_K  with J = K minus its p-th entry
    Js = index_of(dim, k - 1)
    vec, comp, signs, cols = [], [], [], []
    for ik, K in enumerate(multi_indices(dim, k)):
        for p, i in enumerate(K):
            vec.append(i)
            comp.append(ik)
            signs.append((-1.0) ** p)
            cols.append(Js[K[:p] + K[p + 1:]])
    scatter = np.zeros((len(cols), len(Js)))
    scatter[np.arange(len(cols)), cols] = signs
    return np.array(vec, dtype=int), np.array(comp, dtype=int), scatter


@lru_cache(maxsize=None)
def _d_table(dim: int, k: int):
    # (da)_K = sum_p (-1)^p d_{K_p} a_{K minus K_p}
    Is = index_of(dim, k)
    deriv, comp, signs, cols = [], [], [], []
    for ik, K in enumerate(multi_indices(dim, k + 1)):
        for p, i in enumerate(K):
            deriv.append(i)
            comp.append(Is[K[:p] + K[p + 1:]])
            signs.append((-1.0) ** p)
            cols.append(ik)
    scatter = np.zeros((len(cols), len(multi_indices(dim, k + 1))))
    scatter[np.arange(len(cols)), cols] = signs
    return np.array(deriv, dtype=int), np.array(comp, dtype=int), scatter


def _as_points(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


class FormField:
    """A degree-``degree`` form on R^``dim`` given by component functions.

    ``d_components``, when known in closed form, is the component function
    of the exterior derivative; otherwise :meth:`d` falls back to
    :func:`numeric_d`.
    """

    def __init__(self, degree: int, dim: int, components: ComponentFn,
                 d_components: ComponentFn | None = None, name: str = ""):
        if not 0 <= degree <= dim:
            raise DegreeError(f"degree {degree} out of range for dimension {dim}")
        self.degree = degree
        self.dim = dim
        self._components = components
        self.d_components = d_components
        self.name = name

    @property
    def ncomp(self) -> int:
        return len(multi_indices(self.dim, self.degree))

    def components(self, x) -> np.ndarray:
        x = _as_points(x)
        c = np.asarray(self._components(x), dtype=float)
        return np.broadcast_to(c, x.shape[:-1] + (self.ncomp,))

    def __call__(self, x, *vectors) -> np.ndarray:
        return self.eval(x, *vectors)

    def eval(self, x, *vectors) -> np.ndarray:
        """Value on ``degree`` tangent vectors at ``x``."""
        if len(vectors) != self.degree:
            raise DegreeError(f"{self.degree}-form needs {self.degree} vectors, got {len(vectors)}")
        c = self.components(x)
        if self.degree == 0:
            return c[..., 0]
        V = np.stack(np.broadcast_arrays(*[np.asarray(v, float) for v in vectors]), axis=-1)
        out = 0.0
        for n, I in enumerate(multi_indices(self.dim, self.degree)):
            out = out + c[..., n] * np.linalg.det(V[..., list(I), :])
        return out

    def d(self, h: float = 1e-4, order: int = 4) -> "FormField":
        if self.d_components is not None:
            return FormField(self.degree + 1, self.dim, self.d_components,
                             d_components=_zero_fn(self.dim, self.degree + 2),
                             name=f"d({self.name})")
        return numeric_d(self, h=h, order=order)

    # linear structure -------------------------------------------------
    def __add__(self, other: "FormField") -> "FormField":
        _check_same(self, other)
        dc = None
        if self.d_components is not None and other.d_components is not None:
            da, db = self.d_components, other.d_components
            dc = lambda x: da(x) + db(x)
        a, b = self.components, other.components
        return FormField(self.degree, self.dim, lambda x: a(x) + b(x), dc,
                         name=f"({self.name}+{other.name})")

    def __neg__(self) -> "FormField":
        return self.scale(-1.0)

    def __sub__(self, other: "FormField") -> "FormField":
        return self + (-other)

    def scale(self, c: float) -> "FormField":
        a = self.components
        dc = None
        if self.d_components is not None:
            da = self.d_components
            dc = lambda x: c * np.asarray(da(x))
        return FormField(self.degree, self.dim, lambda x: c * a(x), dc, name=f"{c}*{self.name}")

    def __rmul__(self, c: float) -> "FormField":
        return self.scale(float(c))

    def __xor__(self, other: "FormField") -> "FormField":
        return wedge(self, other)

    def __repr__(self) -> str:
        return f"FormField(degree={self.degree}, dim={self.dim}, name={self.name!r})"


def _check_same(a: FormField, b: FormField) -> None:
    if a.degree != b.degree or a.dim != b.dim:
        raise DegreeError(f"incompatible forms: ({a.degree},{a.dim}) vs ({b.degree},{b.dim})")


def _zero_fn(dim: int, k: int) -> ComponentFn | None:
    if k > dim:
        return None
    n = len(multi_indices(dim, k))
    return lambda x: np.zeros(np.shape(x)[:-1] + (n,))


# constructors ---------------------------------------------------------

def zero_form(dim: int, k: int) -> FormField:
    return FormField(k, dim, _zero_fn(dim, k), _zero_fn(dim, k + 1), name="0")


def constant_form(dim: int, k: int, coeffs: dict[tuple[int, ...], float], name: str = "") -> FormField:
    """Constant-coefficient form; keys may be unsorted index tuples."""
    c = np.zeros(len(multi_indices(dim, k)))
    idx = index_of(dim, k)
    for I, v in coeffs.items():
        s = perm_sign(I)
        if s:
            c[idx[tuple(sorted(I))]] += s * v
    return FormField(k, dim, lambda x: np.broadcast_to(c, np.shape(x)[:-1] + c.shape).copy(),
                     _zero_fn(dim, k + 1), name=name or "const")


def coframe(dim: int, i: int) -> FormField:
    """The coordinate 1-form dx_i."""
    return constant_form(dim, 1, {(i,): 1.0}, name=f"dx{i}")


def volume_coframe(dim: int) -> FormField:
    return constant_form(dim, dim, {tuple(range(dim)): 1.0}, name="dx1^...^dxn")


def function_form(f: Callable[[np.ndarray], np.ndarray], dim: int,
                  grad: Callable[[np.ndarray], np.ndarray] | None = None,
                  name: str = "f") -> FormField:
    """Wrap a scalar function as a 0-form (``grad`` gives its d in closed form)."""
    return FormField(0, dim, lambda x: np.asarray(f(x))[..., None], grad, name=name)


def from_components(degree: int, dim: int, components: ComponentFn,
                    d_components: ComponentFn | None = None, name: str = "") -> FormField:
    return FormField(degree, dim, components, d_components, name)


# algebra ---------------------------------------------------------------

def wedge(a: FormField, b: FormField) -> FormField:
    """Exterior product with the (k,l)-shuffle sign convention."""
    if a.dim != b.dim:
        raise DegreeError("forms live on different spaces")
    k, l = a.degree, b.degree
    if k + l > a.dim:
        raise DegreeError(f"degree overflow: {k}+{l} > {a.dim}")
    ra, rb, scatter = _wedge_table(a.dim, k, l)
    ca, cb = a.components, b.components

    def comp(x):
        A, B = ca(x), cb(x)
        return (A[..., ra] * B[..., rb]) @ scatter

    dcomp = None
    if a.d_components is not None and b.d_components is not None and k + l < a.dim:
        da = FormField(k + 1, a.dim, a.d_components)
        db = FormField(l + 1, a.dim, b.d_components)
        t1 = None if k + 1 + l > a.dim else wedge(da, _strip(b))
        t2 = None if k + l + 1 > a.dim else wedge(_strip(a), db)
        sgn = (-1.0) ** k

        def dcomp(x):
            return t1.components(x) + sgn * t2.components(x)
    elif k + l == a.dim:
        dcomp = None
    return FormField(k + l, a.dim, comp, dcomp, name=f"{a.name}^{b.name}")


def _strip(a: FormField) -> FormField:
    return FormField(a.degree, a.dim, a.components, None, a.name)


def wedge_power(a: FormField, n: int) -> FormField:
    if n == 0:
        return constant_form(a.dim, 0, {(): 1.0}, name="1")
    out = a
    for _ in range(n - 1):
        out = wedge(out, a)
    return out


def multiply(f: FormField, a: FormField) -> FormField:
    """Product of a 0-form with a k-form."""
    if f.degree != 0:
        raise DegreeError("multiply expects a 0-form first")
    return wedge(f, a)


def interior_product(X: Callable[[np.ndarray], np.ndarray], a: FormField) -> FormField:
    """i_X a, with X a vectorised vector field on the same coordinate space."""
    if a.degree == 0:
        raise DegreeError("interior product of a 0-form")
    vec, comp, scatter = _interior_table(a.dim, a.degree)
    ca = a.components

    def c(x):
        V = np.asarray(X(x), float)
        return (V[..., vec] * ca(x)[..., comp]) @ scatter

    return FormField(a.degree - 1, a.dim, c, None, name=f"i_X({a.name})")


def partials(fn: ComponentFn, x: np.ndarray, h: float, order: int = 2) -> np.ndarray:
    """Central-difference partials; returns shape (..., dim, ncomp)."""
    x = _as_points(x)
    dim = x.shape[-1]
    out = []
    for i in range(dim):
        e = np.zeros(dim)
        e[i] = h
        if order == 2:
            g = (np.asarray(fn(x + e)) - np.asarray(fn(x - e))) / (2 * h)
        elif order == 4:
            g = (-np.asarray(fn(x + 2 * e)) + 8 * np.asarray(fn(x + e))
                 - 8 * np.asarray(fn(x - e)) + np.asarray(fn(x - 2 * e))) / (12 * h)
        else:
            raise ValueError("order must be 2 or 4")
        out.append(g)
    return np.stack(out, axis=-2)


def numeric_d(a: FormField, h: float = 1e-4, order: int = 2) -> FormField:
    """Finite-difference exterior derivative (central stencil of the given order)."""
    if a.degree >= a.dim:
        raise DegreeError("d of a top-degree form")
    deriv, comp, scatter = _d_table(a.dim, a.degree)
    ca = a.components

    def c(x):
        P = partials(ca, x, h, order)
        return P[..., deriv, comp] @ scatter

    return FormField(a.degree + 1, a.dim, c, None, name=f"d~({a.name})")


def exterior_derivative(a: FormField, h: float = 1e-4, order: int = 4) -> FormField:
    return a.d(h=h, order=order)


def richardson_d_check(a: FormField, x: np.ndarray, h: float = 1e-4) -> dict:
    """Compare closed-form d against central differences at h and h/10."""
    if a.d_components is None:
        raise ValueError("form has no closed-form derivative")
    exact = np.asarray(a.d_components(x))
    e1 = np.max(np.abs(numeric_d(a, h).components(x) - exact))
    e2 = np.max(np.abs(numeric_d(a, h / 10).components(x) - exact))
    order = np.log10(e1 / e2) if e2 > 0 and e1 > 0 else np.inf
    return {"err_h": float(e1), "err_h10": float(e2), "observed_order": float(order)}


def pullback(a: FormField, param: Callable[[np.ndarray], np.ndarray],
             jacobian: Callable[[np.ndarray], np.ndarray], dim: int) -> FormField:
    """Pull ``a`` back along ``param: R^dim -> R^m`` with Jacobian (..., m, dim)."""
    k = a.degree
    if k > dim:
        return zero_form(dim, min(k, dim))
    targets = multi_indices(dim, k)
    sources = multi_indices(a.dim, k)
    ca = a.components

    def c(u):
        u = _as_points(u)
        x = param(u)
        J = jacobian(u)
        A = ca(x)
        if k == 0:
            return A
        out = np.zeros(u.shape[:-1] + (len(targets),))
        for s, I in enumerate(sources):
            rows = J[..., list(I), :]
            for t, T in enumerate(targets):
                out[..., t] += A[..., s] * np.linalg.det(rows[..., :, list(T)])
        return out

    return FormField(k, dim, c, None, name=f"pullback({a.name})")


def top_coefficient(a: FormField, x) -> np.ndarray:
    """Coefficient of dx_1^...^dx_n for a top-degree form."""
    if a.degree != a.dim:
        raise DegreeError("not a top-degree form")
    return a.components(x)[..., 0]


def max_abs(a: FormField, x) -> float:
    return float(np.max(np.abs(a.components(x)))) if a.ncomp else 0.0
