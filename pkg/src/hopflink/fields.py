"""Divergence-free vector fields: Hopf pairs, Hamiltonian and Reeb fields.

Sign convention for Hamiltonian fields: ``dH = i_{X_H} omega``.  With
``omega = dx ^ dy`` on R^2 and ``H = x`` this gives ``X_H = -d/dy``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import forms
from .forms import FormField
from .geometry import Chart, complex_matrix_to_real, to_complex, to_real


class SingularFormError(ValueError):
    pass


@dataclass
class VectorField:
    """Vectorised vector field on a working coordinate space.

    ``matrix`` is set for linear fields x' = A x, which unlocks closed-form
    flows and the compiled integration kernel.  ``chart_eval(j, u)`` gives
    the expression in affine chart j for fields on CP2 defined by a lift.
    """
    fn: Callable[[np.ndarray], np.ndarray]
    dim: int
    name: str = "X"
    time_dependent: bool = False
    matrix: np.ndarray | None = None
    chart_eval: Callable[[int, np.ndarray], np.ndarray] | None = None
    meta: dict = field(default_factory=dict)

    def __call__(self, x) -> np.ndarray:
        return self.fn(np.asarray(x, float))

    def at(self, t, x) -> np.ndarray:
        """Value at time ``t``; time-dependent fields take ``fn(x, t)``."""
        if self.time_dependent:
            return self.fn(np.asarray(x, float), t)
        return self.fn(np.asarray(x, float))

    def eval(self, point) -> np.ndarray:
        return self(point.working())

    def exact_flow(self, x, t) -> np.ndarray:
        if self.matrix is None:
            raise ValueError(f"{self.name} has no closed-form flow")
        from scipy.linalg import expm
        return np.asarray(x, float) @ expm(self.matrix * t).T

    def on_chart(self, j: int = 0) -> Callable[[np.ndarray], np.ndarray]:
        if self.chart_eval is None:
            raise ValueError(f"{self.name} has no chart expression")
        return lambda u: self.chart_eval(j, np.asarray(u, float))


def linear_field(A: np.ndarray, name: str = "linear") -> VectorField:
    A = np.asarray(A, float)
    return VectorField(lambda x: x @ A.T, A.shape[0], name=name, matrix=A)


def zero_field(dim: int) -> VectorField:
    return linear_field(np.zeros((dim, dim)), name="zero")


def hopf_pair_field(a: float, b: float) -> VectorField:
    """a H_1 + b H_2 on S^3 x S^3: (z, w) -> (i a z, i b w)."""
    A = np.zeros((8, 8))
    A[:4, :4] = complex_matrix_to_real(1j * a * np.eye(2))
    A[4:, 4:] = complex_matrix_to_real(1j * b * np.eye(2))
    X = linear_field(A, name=f"hopf_pair(a={a},b={b})")
    X.meta.update(a=a, b=b)
    return X


def hopf_field() -> VectorField:
    """The Hopf field z -> i z on S^3 (Reeb field of the standard contact form)."""
    return linear_field(complex_matrix_to_real(1j * np.eye(2)), name="hopf")


def cp2_lift_field(A: np.ndarray, name: str = "cp2") -> VectorField:
    """Field on CP2 induced by Z' = A Z with A skew-Hermitian (3x3)."""
    A = np.asarray(A, complex)
    if np.max(np.abs(A + A.conj().T)) > 1e-12:
        raise ValueError("lift matrix must be skew-Hermitian")

    def chart_eval(j, u):
        others = [k for k in range(3) if k != j]
        z = to_complex(u)
        Z = np.ones(z.shape[:-1] + (3,), complex)
        Z[..., others] = z
        AZ = Z @ A.T
        zd = AZ[..., others] - z * AZ[..., j:j + 1]
        return to_real(zd)

    X = linear_field(complex_matrix_to_real(A), name=name)
    X.chart_eval = chart_eval
    X.meta["lift"] = A
    return X


# Hamiltonian and Reeb fields ------------------------------------------

def _omega_matrix(omega: FormField, x: np.ndarray) -> np.ndarray:
    m = omega.dim
    c = omega.components(x)
    W = np.zeros(np.shape(x)[:-1] + (m, m))
    for n, (i, j) in enumerate(forms.multi_indices(m, 2)):
        W[..., i, j] = c[..., n]
        W[..., j, i] = -c[..., n]
    return W


def hamiltonian_field(H: FormField, omega: FormField, cond_max: float = 1e12) -> VectorField:
    """X_H with dH = i_{X_H} omega, by a dense solve at each point."""
    if H.degree != 0 or omega.degree != 2:
        raise ValueError("need a 0-form H and a 2-form omega")
    dH = H.d()

    def fn(x):
        x = np.asarray(x, float)
        W = _omega_matrix(omega, x)
        # (i_X omega)_j = sum_i X_i W_ij  ->  W^T X = dH
        Wt = np.swapaxes(W, -1, -2)
        cond = np.linalg.cond(Wt)
        bad = np.atleast_1d(cond > cond_max)
        if np.any(bad):
            at = np.reshape(x, (-1, x.shape[-1]))[int(np.argmax(bad))]
            raise SingularFormError(f"omega degenerate at {at.tolist()} (cond={np.max(cond):.3g})")
        return np.linalg.solve(Wt, dH.components(x)[..., None])[..., 0]

    return VectorField(fn, omega.dim, name=f"X_{H.name}")


def reeb_field(alpha: FormField, tangent_basis: Callable[[np.ndarray], np.ndarray] | None = None,
               tol: float = 1e-8) -> VectorField:
    """Reeb field of a contact form: alpha(X) = 1, i_X d alpha = 0.

    ``tangent_basis(x)`` (shape (..., m, d)) restricts to a submanifold,
    e.g. the quaternion frame for S^3 in R^4.
    """
    dalpha = alpha.d()
    m = alpha.dim

    def fn(x):
        x = np.asarray(x, float)
        E = tangent_basis(x) if tangent_basis is not None else np.broadcast_to(np.eye(m), x.shape[:-1] + (m, m))
        d = E.shape[-1]
        a = np.einsum("...i,...id->...d", alpha.components(x), E)
        W = _omega_matrix(dalpha, x)
        Wr = np.swapaxes(E, -1, -2) @ W @ E
        M = np.concatenate([a[..., None, :], Wr], axis=-2)
        rhs = np.zeros(x.shape[:-1] + (d + 1,))
        rhs[..., 0] = 1.0
        sv = np.linalg.svd(M, compute_uv=False)
        if np.any(sv[..., -1] < tol):
            raise SingularFormError("contact condition violated (alpha ^ (d alpha)^n ~ 0)")
        Mt = np.swapaxes(M, -1, -2)
        c = np.linalg.solve(Mt @ M, (Mt @ rhs[..., None]))[..., 0]
        return np.einsum("...id,...d->...i", E, c)

    return VectorField(fn, m, name=f"Reeb({alpha.name})")


def standard_contact_form(complex_dim: int = 2) -> FormField:
    """sum_k x_k dy_k - y_k dx_k on C^n (restricts to the contact form on S^{2n-1})."""
    m = 2 * complex_dim
    idx1 = forms.index_of(m, 1)
    idx2 = forms.index_of(m, 2)

    def comp(x):
        x = np.asarray(x, float)
        out = np.zeros(x.shape[:-1] + (m,))
        out[..., 1::2] = x[..., 0::2]
        out[..., 0::2] = -x[..., 1::2]
        return out

    dc = np.zeros(len(idx2))
    for k in range(complex_dim):
        dc[idx2[(2 * k, 2 * k + 1)]] = 2.0

    def dcomp(x):
        return np.broadcast_to(dc, np.shape(x)[:-1] + dc.shape).copy()

    del idx1
    return FormField(1, m, comp, dcomp, name="alpha_std")


# divergence ------------------------------------------------------------

def divergence_residual(X: Callable, mu: FormField, points: np.ndarray,
                        chart: Chart | None = None, h: float = 1e-3, order: int = 4) -> float:
    """max |d(i_X mu)| over the probe points (chart coordinates when ``chart`` is given)."""
    if chart is not None:
        Xc = chart.pushforward(X)
        muc = chart.pullback(mu) if mu.dim != chart.dim else mu
    else:
        Xc, muc = X, mu
    eta = forms.interior_product(Xc, muc)
    return float(np.max(np.abs(forms.numeric_d(eta, h=h, order=order).components(points))))
