"""Hopf-type integrals over submanifolds and Ruelle-Sullivan cycles.

``hopf_integral_submanifold`` integrates a primitive alpha of i_X mu over a
parametrised cycle by tensor Gauss-Legendre quadrature, doubling the nodes
until two levels agree.  ``ruelle_sullivan_eval`` evaluates the current
omega -> int_M omega ^ nu of a measured foliation: by Monte Carlo over mu
for smooth transverse measures, by quadrature for signed sums of leaves.

Orientation conventions
-----------------------
A preimage N = f^-1(0) is oriented so that (grad Re f, grad Im f, T N) is
positive in M; with the Seifert chain f^-1([0, inf)) co-oriented by
increasing Im f, N is then its oriented boundary and a flow crossing the
chain in the positive sense (see :mod:`hopflink.linking`) counts +1.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import forms
from .fields import VectorField
from .forms import FormField
from .geometry import CP2, Manifold, sphere_volume_form, to_complex, to_real

GL_LEVEL0 = 4


class QuadratureError(RuntimeError):
    def __init__(self, msg, values=()):
        super().__init__(msg)
        self.values = tuple(values)


class PrimitiveError(ValueError):
    pass


# parametrised cycles -------------------------------------------------------

@dataclass
class ParametricCycle:
    """k-dimensional cycle given by ``embedding(u)`` on a box ``domain``.

    ``embedding`` maps (..., k) parameters to (..., m) coordinates of the
    space the forms live on (working coordinates or a chart).  When it is
    written with numpy ufuncs it also accepts complex input, and the
    Jacobian is then taken by complex-step differentiation (exact to
    rounding); otherwise by central differences.
    """
    domain: Sequence[tuple[float, float]]
    embedding: Callable[[np.ndarray], np.ndarray]
    orientation: int = 1
    name: str = "N"
    jacobian_fn: Callable[[np.ndarray], np.ndarray] | None = None
    complex_step: bool = True

    @property
    def dim(self) -> int:
        return len(self.domain)

    def __call__(self, u) -> np.ndarray:
        return np.asarray(self.embedding(np.asarray(u, float))).real

    def jacobian(self, u) -> np.ndarray:
        """(..., m, k) matrix of partial derivatives."""
        u = np.asarray(u, float)
        if self.jacobian_fn is not None:
            return self.jacobian_fn(u)
        cols = []
        for i in range(self.dim):
            e = np.zeros(self.dim)
            if self.complex_step:
                h = 1e-30
                e[i] = 1.0
                cols.append(np.imag(self.embedding(u + 1j * h * e)) / h)
            else:
                h = 1e-6
                e[i] = h
                cols.append((self(u + e) - self(u - e)) / (2 * h))
        return np.stack(cols, axis=-1)

    def immersion_margin(self, u) -> float:
        return float(np.min(np.linalg.svd(self.jacobian(u), compute_uv=False)[..., -1]))

    def reversed(self) -> "ParametricCycle":
        return ParametricCycle(self.domain, self.embedding, -self.orientation, f"-{self.name}",
                               self.jacobian_fn, self.complex_step)


def _gl_grid(domain, n):
    xs, ws = [], []
    for lo, hi in domain:
        x, w = np.polynomial.legendre.leggauss(n)
        xs.append(0.5 * (hi - lo) * (x + 1) + lo)
        ws.append(0.5 * (hi - lo) * w)
    U = np.stack(np.meshgrid(*xs, indexing="ij"), axis=-1).reshape(-1, len(domain))
    W = ws[0]
    for w in ws[1:]:
        W = np.multiply.outer(W, w)
    return U, W.ravel()


def pullback_density(alpha: FormField, N: ParametricCycle, u) -> np.ndarray:
    """alpha(x(u))(d_1 x, ..., d_k x) times the orientation."""
    if alpha.degree != N.dim:
        raise forms.DegreeError(f"{alpha.degree}-form on a {N.dim}-cycle")
    x = N(u)
    J = N.jacobian(u)
    vecs = [J[..., :, i] for i in range(N.dim)]
    return N.orientation * np.asarray(alpha.eval(x, *vecs))


def _pairwise_sum(v: np.ndarray) -> float:
    # deterministic blocked summation
    v = np.asarray(v, float).ravel()
    while v.size > 1:
        if v.size % 2:
            v = np.append(v, 0.0)
        v = v[0::2] + v[1::2]
    return float(v[0]) if v.size else 0.0


@dataclass
class QuadratureResult:
    value: float
    tolerance: float
    trace: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"value": self.value, "tolerance": self.tolerance,
                "refinement": [{"nodes": n, "value": v} for n, v in self.trace]}

    def __float__(self) -> float:
        return self.value


def integrate_cycle(alpha: FormField, N: ParametricCycle, rel_tol: float = 1e-8, max_levels: int = 6,
                    n0: int = GL_LEVEL0, chunk: int = 100_000, abs_floor: float = 1e-14) -> QuadratureResult:
    """Tensor Gauss-Legendre integral of alpha over N with node doubling."""
    trace = []
    prev = None
    for level in range(max_levels + 1):
        n = n0 * 2 ** level
        U, W = _gl_grid(N.domain, n)
        parts = [np.dot(W[i:i + chunk], pullback_density(alpha, N, U[i:i + chunk]))
                 for i in range(0, len(W), chunk)]
        val = _pairwise_sum(np.array(parts))
        trace.append((n, val))
        if prev is not None and abs(val - prev) <= rel_tol * max(abs(val), abs_floor / rel_tol):
            return QuadratureResult(val, max(abs(val - prev), abs_floor), trace)
        prev = val
    raise QuadratureError(f"no convergence after {max_levels} refinements: "
                          f"{trace[-2][1]!r} vs {trace[-1][1]!r}", [v for _, v in trace[-2:]])


def hopf_integral_submanifold(alpha: FormField, N: ParametricCycle, rel_tol: float = 1e-8,
                              max_levels: int = 6, **kw) -> QuadratureResult:
    """H(X, N) = int_N alpha for a primitive alpha of i_X mu."""
    return integrate_cycle(alpha, N, rel_tol, max_levels, **kw)


# tangent-frame checks -------------------------------------------------------

def _subsets(d, k):
    return forms.multi_indices(d, k)


def form_on_frames(a: FormField, x, E) -> np.ndarray:
    """Values of a on all sorted k-subsets of the frame columns E (..., m, d)."""
    out = []
    for I in _subsets(E.shape[-1], a.degree):
        out.append(a.eval(x, *[E[..., :, i] for i in I]))
    return np.stack(out, axis=-1)


def primitive_residual(alpha: FormField, X: VectorField, mu: FormField, x, E,
                       h: float = 1e-3) -> float:
    """max |d alpha - i_X mu| on tangent frames E at points x."""
    da = alpha.d() if alpha.d_components is not None else forms.numeric_d(alpha, h=h, order=4)
    ixmu = forms.interior_product(X, mu)
    return float(np.max(np.abs(form_on_frames(da, x, E) - form_on_frames(ixmu, x, E))))


def orient_preimage(N: ParametricCycle, f: Callable, mu: FormField, tangent: Callable,
                    probes: int = 5, seed: int = 0) -> ParametricCycle:
    """Fix N's orientation so that (grad Re f, grad Im f, dN) is positive for mu.

    ``tangent(x)`` gives an orthonormal tangent basis of M at x.
    """
    rng = np.random.default_rng(seed)
    lo = np.array([a for a, _ in N.domain])
    hi = np.array([b for _, b in N.domain])
    u = lo + (hi - lo) * (0.2 + 0.6 * rng.random((probes, N.dim)))
    x = N(u)
    E = tangent(x)
    h = 1e-6
    grads = []
    for k in range(E.shape[-1]):
        e = E[..., :, k]
        grads.append((f(x + h * e) - f(x - h * e)) / (2 * h))
    G = np.stack(grads, axis=-1)                       # (..., d) complex
    gre = np.einsum("...mk,...k->...m", E, G.real)
    gim = np.einsum("...mk,...k->...m", E, G.imag)
    J = N.jacobian(u)
    s = mu.eval(x, gre, gim, *[J[..., :, i] for i in range(N.dim)])
    sg = np.sign(s)
    if np.any(sg == 0) or np.any(sg != sg[0]):
        raise ValueError("inconsistent orientation of the parametrisation")
    return ParametricCycle(N.domain, N.embedding, int(sg[0]), N.name, N.jacobian_fn, N.complex_step)


# measured foliations ---------------------------------------------------------

class FoliationKind(enum.Enum):
    SmoothForm = "smooth"
    SignedLeafSum = "leaves"
    ExactForm = "exact"


@dataclass
class MeasuredFoliation:
    """Transverse measure as a closed 2-form, an exact form d(beta), or signed leaves.

    ``manifold`` supplies mu-sampling and oriented orthonormal frames for
    the Monte Carlo evaluation; ``frame`` overrides the frame function
    (e.g. identity on a flat chart region) and ``sampler(rng, n)`` the
    sampler, with ``volume`` the total mu-volume of the sampled region.
    """
    kind: FoliationKind
    form: FormField | None = None
    leaves: list = field(default_factory=list)      # [(ParametricCycle, weight)]
    manifold: Manifold | None = None
    sampler: Callable | None = None
    frame: Callable | None = None
    volume: float | None = None
    name: str = "F"

    def measure_form(self) -> FormField:
        if self.kind is FoliationKind.ExactForm:
            return self.form.d()
        return self.form

    def _sample(self, rng, n):
        if self.sampler is not None:
            return self.sampler(rng, n)
        return self.manifold.sample(rng, n)

    def _frame(self, x):
        if self.frame is not None:
            return self.frame(x)
        return self.manifold.tangent_frame(x)

    def _volume(self) -> float:
        return self.volume if self.volume is not None else self.manifold.volume

    def closedness_residual(self, x, h: float = 1e-3) -> float:
        nu = self.measure_form()
        return forms.max_abs(forms.numeric_d(nu, h=h, order=4), x)


def smooth_foliation(nu: FormField, manifold=None, **kw) -> MeasuredFoliation:
    return MeasuredFoliation(FoliationKind.SmoothForm, form=nu, manifold=manifold, **kw)


def exact_foliation(beta: FormField, manifold=None, **kw) -> MeasuredFoliation:
    return MeasuredFoliation(FoliationKind.ExactForm, form=beta, manifold=manifold, **kw)


def leaf_sum(leaves, manifold=None, name="leaves") -> MeasuredFoliation:
    return MeasuredFoliation(FoliationKind.SignedLeafSum, leaves=list(leaves), manifold=manifold, name=name)


@dataclass
class MCResult:
    value: float
    stderr: float
    n: int

    def to_dict(self) -> dict:
        return {"value": self.value, "stderr": self.stderr, "n": self.n}

    def __float__(self) -> float:
        return self.value


def mc_integral(top: Callable[[np.ndarray], np.ndarray], F: MeasuredFoliation, n: int = 100_000,
                seed: int = 0, chunk: int = 20_000) -> MCResult:
    """int_M of a top form given as ``top(x) = form(x)(e_1..e_n)`` on oriented frames."""
    rng = np.random.default_rng(seed)
    vals = []
    for i in range(0, n, chunk):
        x = F._sample(rng, min(chunk, n - i))
        vals.append(np.asarray(top(x), float))
    v = np.concatenate(vals)
    vol = F._volume()
    return MCResult(vol * _pairwise_sum(v) / n, float(vol * np.std(v, ddof=1) / np.sqrt(n)), n)


def ruelle_sullivan_eval(F: MeasuredFoliation, omega: FormField, n_mc: int = 100_000, seed: int = 0,
                         rel_tol: float = 1e-8, tail_tol: float = 1e-9):
    """C(F, nu)(omega): int_M omega ^ nu (Monte Carlo) or sum_i w_i int_{L_i} omega."""
    if F.kind is FoliationKind.SignedLeafSum:
        total, tol, parts = 0.0, 0.0, []
        for leaf, w in F.leaves:
            _check_tail(omega, leaf, tail_tol)
            r = integrate_cycle(omega, leaf, rel_tol=rel_tol)
            total += w * r.value
            tol += abs(w) * r.tolerance
            parts.append(r)
        return QuadratureResult(total, tol, [(leaf.name, r.value) for (leaf, _), r in zip(F.leaves, parts)])
    nu = F.measure_form()
    top = forms.wedge(omega, nu)

    def dens(x):
        E = F._frame(x)
        return top.eval(x, *[E[..., :, i] for i in range(E.shape[-1])])

    return mc_integral(dens, F, n_mc, seed)


def _check_tail(omega: FormField, leaf: ParametricCycle, tol: float, delta: float = 1e-6) -> None:
    """Leaves with a compactified radial parameter: the part beyond theta = end - delta must be < tol.

    The quadrature itself covers the whole compactified range, so this
    only certifies that the density stays bounded at the point at infinity.
    """
    if not getattr(leaf, "noncompact", False):
        return
    lo, hi = leaf.domain[0]
    x, w = np.polynomial.legendre.leggauss(8)
    rest, rw = _gl_grid(leaf.domain[1:], 8)
    th = hi - delta * 0.5 * (x + 1)
    U = np.concatenate([np.broadcast_to(th[:, None, None], (8, len(rest), 1)),
                        np.broadcast_to(rest, (8,) + rest.shape)], axis=-1)
    dens = pullback_density(omega, leaf, U.reshape(-1, leaf.dim)).reshape(8, -1)
    tail = abs(float(0.5 * delta * w @ dens @ rw))
    if not np.isfinite(tail) or tail > tol:
        raise QuadratureError(f"leaf integral does not converge: tail estimate {tail:.3g} > {tol:g}", (tail,))


def hopf_integral_foliation(X: VectorField, F: MeasuredFoliation, alpha: FormField, mu: FormField,
                            probes=None, frames=None, check_tol: float = 1e-8, **kw):
    """H(X, F, nu) = C(F, nu)(alpha) after checking d alpha = i_X mu on probes."""
    if probes is not None:
        res = primitive_residual(alpha, X, mu, probes, frames)
        if res > check_tol:
            raise PrimitiveError(f"d(alpha) != i_X mu on the probe set (residual {res:.3g})")
    return ruelle_sullivan_eval(F, alpha, **kw)


# S^3 x S^3 --------------------------------------------------------------------

def block_contact_form(dim: int, lo: int, hi: int) -> FormField:
    """sum x dy - y dx over the complex coordinates of the block [lo, hi) of R^dim."""
    terms = {}
    for j in range(lo, hi, 2):
        terms[j] = (j + 1, -1.0)      # -y dx
        terms[j + 1] = (j, 1.0)       # +x dy
    idx = forms.index_of(dim, 2)
    dc = np.zeros(len(idx))
    for j in range(lo, hi, 2):
        dc[idx[(j, j + 1)]] = 2.0

    def comp(x):
        x = np.asarray(x, float)
        out = np.zeros(x.shape[:-1] + (dim,))
        for i, (src, s) in terms.items():
            out[..., i] = s * x[..., src]
        return out

    return FormField(1, dim, comp, lambda x: np.broadcast_to(dc, np.shape(x)[:-1] + dc.shape).copy(),
                     name=f"lambda[{lo}:{hi}]")


def s3xs3_volume() -> FormField:
    return forms.wedge(sphere_volume_form(8, 0, 4), sphere_volume_form(8, 4, 8))


def s3xs3_primitive(a: float, b: float) -> FormField:
    """alpha = (a/2) lambda_1 ^ vol_2 + (b/2) vol_1 ^ lambda_2 with d alpha = i_X mu on S^3 x S^3.

    Uses i_H vol = (1/2) d lambda for the Hopf field on S^3 (vol = lambda ^ d lambda / 2).
    """
    l1, l2 = block_contact_form(8, 0, 4), block_contact_form(8, 4, 8)
    v1, v2 = sphere_volume_form(8, 0, 4), sphere_volume_form(8, 4, 8)
    out = forms.wedge(l1, v2).scale(a / 2) + forms.wedge(v1, l2).scale(b / 2)
    out.name = f"alpha(a={a},b={b})"
    return out


def s3xs3_chain_cycle(orient: bool = True) -> ParametricCycle:
    """N = {<z, w> = 0} via S^3 x S^1 -> N, (z, lam) -> (z, lam (conj z1, -conj z0)).

    Parameters (eta, xi1, xi2, psi): z = (cos eta e^{i xi1}, sin eta e^{i xi2}),
    lam = e^{i psi}.  Written in real arithmetic so complex-step Jacobians apply.
    """
    def emb(u):
        eta, x1, x2, ps = (u[..., i] for i in range(4))
        c, s = np.cos(eta), np.sin(eta)
        return np.stack([c * np.cos(x1), c * np.sin(x1), s * np.cos(x2), s * np.sin(x2),
                         s * np.cos(ps - x2), s * np.sin(ps - x2),
                         -c * np.cos(ps - x1), -c * np.sin(ps - x1)], axis=-1)

    N = ParametricCycle([(0.0, np.pi / 2), (0.0, 2 * np.pi), (0.0, 2 * np.pi), (0.0, 2 * np.pi)],
                        emb, 1, "N=<z,w>^-1(0)")
    if orient:
        from .linking import s3xs3_chain, tangent_basis
        ch = s3xs3_chain()
        N = orient_preimage(N, ch, s3xs3_volume(), lambda x: tangent_basis(ch.manifold, x))
    return N


def s3xs3_hopf_integral(a: float, b: float, **kw) -> QuadratureResult:
    """int_N alpha for X = a H_1 + b H_2; closed form 2 (a - b) pi^3."""
    return hopf_integral_submanifold(s3xs3_primitive(a, b), s3xs3_chain_cycle(), **kw)


# S^3 contact case -------------------------------------------------------------

def s3_contact_volume() -> FormField:
    """mu = alpha ^ d alpha (twice the round volume form) for the standard contact form."""
    from .fields import standard_contact_form
    a = standard_contact_form(2)
    return forms.wedge(a, a.d())


def s3_fiber_cycle(orient: bool = True) -> ParametricCycle:
    """The Hopf fiber {z1 = 0}, psi -> (cos psi, sin psi, 0, 0)."""
    def emb(u):
        ps = u[..., 0]
        z = np.zeros_like(ps)
        return np.stack([np.cos(ps), np.sin(ps), z, z], axis=-1)

    N = ParametricCycle([(0.0, 2 * np.pi)], emb, 1, "Hopf fiber")
    if orient:
        from .geometry import quaternion_frame
        from .linking import s3_fiber_chain
        N = orient_preimage(N, s3_fiber_chain(), s3_contact_volume(), quaternion_frame)
    return N


def contact_fiber_integral(**kw) -> QuadratureResult:
    """int over the fiber of alpha ^ (d alpha)^0 = alpha; the Reeb flow's Hopf integral."""
    from .fields import standard_contact_form
    return hopf_integral_submanifold(standard_contact_form(2), s3_fiber_cycle(), **kw)


# CP2 ----------------------------------------------------------------------------

def _hermitian_part(A) -> np.ndarray:
    A = np.asarray(A, complex)
    if np.max(np.abs(A + A.conj().T)) > 1e-12:
        raise ValueError("lift matrix must be skew-Hermitian")
    return -1j * A


def cp2_hamiltonian(A, chart: int = 0) -> FormField:
    """H with i_X omega = dH for the field induced by Z' = A Z (A = iK, K Hermitian).

    H = -<K Z, Z> / (2 |Z|^2), Z the homogeneous lift of the chart point.
    """
    K = _hermitian_part(A)
    others = [k for k in range(3) if k != chart]

    def h(u):
        z = to_complex(np.asarray(u, float))
        Z = np.ones(z.shape[:-1] + (3,), complex)
        Z[..., others] = z
        num = np.einsum("...i,ij,...j->...", Z.conj(), K, Z).real
        return (-0.5 * num / np.sum(np.abs(Z) ** 2, axis=-1))[..., None]

    return FormField(0, 4, h, None, name="H")


def cp2_primitive(A, chart: int = 0, shift: float = 0.0) -> FormField:
    """alpha = (H + shift) omega, a primitive of i_X(omega^2 / 2) = i_X vol_FS."""
    H = cp2_hamiltonian(A, chart)
    if shift:
        H0 = H
        H = FormField(0, 4, lambda u: H0.components(u) + shift, None, name="H+c")
    out = forms.wedge(H, CP2().kahler_form())
    out.name = "H omega"
    return out


def _strip_emb(u):
    s, th, ph = u[..., 0], u[..., 1], u[..., 2]
    r = np.tan(th)
    return np.stack([s, 0 * s, r * np.cos(ph), r * np.sin(ph)], axis=-1)


def cp2_strip_cycle() -> ParametricCycle:
    """The strip {[1 : s : w] : s in [-1, 1]} in chart 0, w = tan(theta) e^{i phi}.

    Co-oriented by increasing Im z, i.e. positive frame (d_x0, d_y1, d_x1);
    the polar parametrisation is complex-oriented in w, hence orientation -1.
    """
    return ParametricCycle([(-1.0, 1.0), (0.0, np.pi / 2), (0.0, 2 * np.pi)], _strip_emb, -1, "strip")


def cp2_flux(X: VectorField, **kw) -> QuadratureResult:
    """Flux int_N i_X mu of a lifted field through the strip, by quadrature."""
    eta = forms.interior_product(X.on_chart(0), CP2().volume_form())
    return integrate_cycle(eta, cp2_strip_cycle(), **kw)


def cp2_leaf(c: float, orientation: int = -1) -> ParametricCycle:
    """The leaf {[1 : c : w]} in chart 0, anti-complex orientation by default.

    With this orientation the strip's boundary is L_1 - L_{-1}.
    """
    def emb(u):
        th, ph = u[..., 0], u[..., 1]
        r = np.tan(th)
        return np.stack([c + 0 * th, 0 * th, r * np.cos(ph), r * np.sin(ph)], axis=-1)

    L = ParametricCycle([(0.0, np.pi / 2), (0.0, 2 * np.pi)], emb, orientation, f"L[{c:+g}]")
    L.noncompact = True
    return L


def cp2_leaf_foliation() -> MeasuredFoliation:
    """Counting measure delta_1 - delta_{-1} on the complex lines {z = const}."""
    return leaf_sum([(cp2_leaf(1.0), 1), (cp2_leaf(-1.0), -1)], CP2(), name="delta_1 - delta_-1")


def cp2_hopf_integral(A, shift: float = 0.0, **kw) -> QuadratureResult:
    """H(X, F, nu) = int_{L_1} alpha - int_{L_-1} alpha for alpha = H omega."""
    return ruelle_sullivan_eval(cp2_leaf_foliation(), cp2_primitive(A, shift=shift), **kw)


def bump_two_form(centre, radius: float, dim: int = 4, pair=(2, 3)) -> FormField:
    """Smooth compactly supported 2-form b(|u - c|/r) du_i ^ du_j on a chart."""
    centre = np.asarray(centre, float)
    idx = forms.index_of(dim, 2)[tuple(pair)]
    n = len(forms.multi_indices(dim, 2))

    def comp(u):
        u = np.asarray(u, float)
        q = np.sum((u - centre) ** 2, axis=-1) / radius ** 2
        with np.errstate(divide="ignore", over="ignore"):
            b = np.where(q < 1, np.exp(-1.0 / np.maximum(1 - q, 1e-300)), 0.0)
        out = np.zeros(u.shape[:-1] + (n,))
        out[..., idx] = b
        return out

    return FormField(2, dim, comp, None, name="bump")


# pointwise example identities -------------------------------------------------------

def symplectic_identity_residual(H: FormField, omega: FormField, x, n: int = 2,
                                 h: float = 1e-3) -> np.ndarray:
    """|d(n H omega^{n-1}) - i_{X_H} omega^n| at points x (component max)."""
    from .fields import hamiltonian_field
    lhs = forms.numeric_d(forms.wedge(H, forms.wedge_power(omega, n - 1)).scale(n) if n > 1
                          else H.scale(n), h=h, order=4)
    XH = hamiltonian_field(H, omega)
    rhs = forms.interior_product(XH, forms.wedge_power(omega, n))
    return np.max(np.abs(lhs.components(x) - rhs.components(x)), axis=-1)


def contact_identity_residual(alpha: FormField, x, n: int = 2, h: float = 1e-3) -> np.ndarray:
    """|d(alpha ^ (d alpha)^{n-1}) - (d alpha)^n| at points x."""
    da = alpha.d()
    lhs = forms.numeric_d(forms.wedge(alpha, forms.wedge_power(da, n - 1)) if n > 1 else alpha,
                          h=h, order=4)
    rhs = forms.wedge_power(da, n)
    return np.max(np.abs(lhs.components(x) - rhs.components(x)), axis=-1)


def s2xs2_symplectic_data(c1: float = 1.0, c2: float = 1.0):
    """(H, omega, chart) on the product stereographic chart of S^2 x S^2.

    omega = c1 area_1 + c2 area_2 and H = c1 z_1 + c2 z_2 (heights), pulled back.
    """
    from .geometry import Sphere2xSphere2
    M = Sphere2xSphere2()
    chart = M.charts()[0]
    a1, a2 = M.area_forms()
    omega = chart.pullback(a1.scale(c1) + a2.scale(c2))
    param = chart.param
    H = FormField(0, 4, lambda u: (c1 * param(u)[..., 2] + c2 * param(u)[..., 5])[..., None], None, name="H")
    return H, omega, chart
