"""Green's operator, harmonic projection and the linking kernel on flat tori.

Forms on T^n = R^n / (2 pi Z)^n are stored as truncated Fourier series
with constant coframe components,

    a(x) = sum_{k, I} c[k, I] exp(i k.x) dx_I ,   |k|_inf <= band.

On a flat torus the Hodge Laplacian acts componentwise by |k|^2 and the
harmonic forms are the constant-coefficient ones, so H, G, d, *, d* and
the linking kernel are all exact in this representation.

Conventions (fixed in one place)
--------------------------------
* Orientation dx_1 ^ ... ^ dx_n; *dx_I = sign(I, I^c) dx_{I^c}.
* d* = (-1)^{n(k+1)+1} * d * on k-forms, so that Delta = d d* + d* d is
  the positive operator |k|^2.
* Green's kernel g(x, y) = sum_I g0(x - y) dx_I dy_I with
  g0(z) = (2 pi)^-n sum_{k != 0} exp(i k.z) / |k|^2, so that
  G(a)(x) = int_y a(y) ^ *_y g(x, y).
* Double forms are written w(x) . v(y); d_y and *_y act on the y factor
  only, and (-1)^eps multiplies a y-factor of degree s by (-1)^{(n-s)s}.
  Pairing int_y L(x, y) ^ b(y) appends b after the y factor.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .forms import multi_indices, perm_sign


@lru_cache(maxsize=None)
def _wavevectors(n: int, band: int) -> np.ndarray:
    r = np.arange(-band, band + 1)
    return np.stack(np.meshgrid(*([r] * n), indexing="ij"), axis=-1).reshape(-1, n)


@lru_cache(maxsize=None)
def _basis(n: int, k: int) -> tuple:
    return multi_indices(n, k)


@lru_cache(maxsize=None)
def _wedge_one_table(n: int, k: int):
    """Entries (j, I, J, sign) with dx_j ^ dx_I = sign dx_J."""
    src = {I: a for a, I in enumerate(_basis(n, k))}
    dst = {J: b for b, J in enumerate(_basis(n, k + 1))}
    out = []
    for I, a in src.items():
        for j in range(n):
            if j in I:
                continue
            J = tuple(sorted((j,) + I))
            out.append((j, a, dst[J], perm_sign((j,) + I)))
    return tuple(out)


@lru_cache(maxsize=None)
def _star_table(n: int, k: int):
    """(target index, sign) for each source index: *dx_I = sign dx_{I^c}."""
    dst = {J: b for b, J in enumerate(_basis(n, n - k))}
    out = []
    for I in _basis(n, k):
        Ic = tuple(i for i in range(n) if i not in I)
        out.append((dst[Ic], perm_sign(I + Ic)))
    return tuple(out)


@lru_cache(maxsize=None)
def _top_pair_table(n: int, s: int):
    """sign(J, K) for dx_J ^ dx_K = sign vol with |J| = s, |K| = n - s (0 if not complementary)."""
    A, B = _basis(n, s), _basis(n, n - s)
    T = np.zeros((len(A), len(B)))
    for a, J in enumerate(A):
        for b, K in enumerate(B):
            if not set(J) & set(K):
                T[a, b] = perm_sign(J + K)
    return T


@dataclass
class FourierForm:
    """k-form on T^n with Fourier coefficients ``coeffs[wavevector, component]``.

    Wavevectors are enumerated by :func:`wavevectors` (lexicographic over
    the cube |k|_inf <= band); components follow ``multi_indices(n, k)``.
    """
    n: int
    degree: int
    band: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, complex)
        shape = (len(_wavevectors(self.n, self.band)), len(_basis(self.n, self.degree)))
        if self.coeffs.shape != shape:
            raise ValueError(f"coefficient array has shape {self.coeffs.shape}, expected {shape}")

    @property
    def wavevectors(self) -> np.ndarray:
        return _wavevectors(self.n, self.band)

    @property
    def basis(self) -> tuple:
        return _basis(self.n, self.degree)

    @classmethod
    def zeros(cls, n, degree, band) -> "FourierForm":
        return cls(n, degree, band, np.zeros((len(_wavevectors(n, band)), len(_basis(n, degree))), complex))

    @classmethod
    def from_modes(cls, n, degree, band, modes: dict) -> "FourierForm":
        """``modes[(k, I)] = c`` for wavevector tuple k and multi-index I."""
        out = cls.zeros(n, degree, band)
        kidx = {tuple(k): j for j, k in enumerate(out.wavevectors)}
        cidx = {I: j for j, I in enumerate(out.basis)}
        for (k, I), c in modes.items():
            out.coeffs[kidx[tuple(k)], cidx[tuple(I)]] += c
        return out

    @classmethod
    def random(cls, n, degree, band, rng: np.random.Generator, decay: float = 0.0) -> "FourierForm":
        """Random real band-limited form (coefficients damped by (1+|k|)^-decay)."""
        K = _wavevectors(n, band)
        c = rng.standard_normal((len(K), len(_basis(n, degree)))) \
            + 1j * rng.standard_normal((len(K), len(_basis(n, degree))))
        c *= (1 + np.linalg.norm(K, axis=1))[:, None] ** -decay
        return cls(n, degree, band, c).real_part()

    def real_part(self) -> "FourierForm":
        """Project onto real forms: c(-k) = conj c(k)."""
        c = self.coeffs
        return FourierForm(self.n, self.degree, self.band, 0.5 * (c + c[::-1].conj()))

    def reality_error(self) -> float:
        c = self.coeffs
        return float(np.max(np.abs(c - c[::-1].conj()), initial=0.0))

    # linear structure ------------------------------------------------------
    def _like(self, c, degree=None) -> "FourierForm":
        return FourierForm(self.n, self.degree if degree is None else degree, self.band, c)

    def __add__(self, other):
        _check(self, other)
        return self._like(self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check(self, other)
        return self._like(self.coeffs - other.coeffs)

    def __neg__(self):
        return self._like(-self.coeffs)

    def __rmul__(self, s):
        return self._like(s * self.coeffs)

    def norm(self) -> float:
        return float(np.max(np.abs(self.coeffs), initial=0.0))

    # evaluation ----------------------------------------------------------------
    def __call__(self, x) -> np.ndarray:
        """Real component values at points x (..., n) -> (..., ncomp)."""
        x = np.asarray(x, float)
        E = np.exp(1j * x @ self.wavevectors.T)
        return (E @ self.coeffs).real

    # operators -------------------------------------------------------------------
    def d(self) -> "FourierForm":
        if self.degree == self.n:
            raise ValueError("d of a top-degree form")
        K = self.wavevectors
        out = np.zeros((len(K), len(_basis(self.n, self.degree + 1))), complex)
        for j, a, b, s in _wedge_one_table(self.n, self.degree):
            out[:, b] += s * 1j * K[:, j] * self.coeffs[:, a]
        return self._like(out, self.degree + 1)

    def star(self) -> "FourierForm":
        out = np.zeros((len(self.wavevectors), len(_basis(self.n, self.n - self.degree))), complex)
        for a, (b, s) in enumerate(_star_table(self.n, self.degree)):
            out[:, b] += s * self.coeffs[:, a]
        return self._like(out, self.n - self.degree)

    def codifferential(self) -> "FourierForm":
        if self.degree == 0:
            return FourierForm.zeros(self.n, 0, self.band)
        k = self.degree
        sign = (-1) ** (self.n * (k + 1) + 1)
        return sign * self.star().d().star()

    def laplacian(self) -> "FourierForm":
        """d d* + d* d, computed from the operators (not the multiplier)."""
        out = FourierForm.zeros(self.n, self.degree, self.band)
        if self.degree < self.n:
            out = out + self.d().codifferential()
        if self.degree > 0:
            out = out + self.codifferential().d()
        return out


def _check(a: FourierForm, b: FourierForm) -> None:
    if (a.n, a.degree, a.band) != (b.n, b.degree, b.band):
        raise ValueError("incompatible Fourier forms")


def _zero_mode(n: int, band: int) -> int:
    return len(_wavevectors(n, band)) // 2


def harmonic_projection(a: FourierForm) -> FourierForm:
    """Keep the k = 0 coefficients."""
    out = np.zeros_like(a.coeffs)
    z = _zero_mode(a.n, a.band)
    out[z] = a.coeffs[z]
    return a._like(out)


def greens_operator(a: FourierForm) -> FourierForm:
    """Divide every k != 0 coefficient by |k|^2; the zero mode goes to 0."""
    k2 = np.sum(a.wavevectors.astype(float) ** 2, axis=1)
    inv = np.divide(1.0, k2, out=np.zeros_like(k2), where=k2 > 0)
    return a._like(a.coeffs * inv[:, None])


# the linking kernel ---------------------------------------------------------------

@dataclass
class DoubleFormKernel:
    """L(x, y) = sum_k c[k, I, J] exp(i k.(x - y)) dx_I . dy_J.

    x-degree + y-degree = n - 1 for every component (by construction).
    """
    n: int
    x_degree: int
    band: int
    coeffs: np.ndarray          # (nk, len(I), len(J)) complex

    @property
    def y_degree(self) -> int:
        return self.n - 1 - self.x_degree

    @property
    def wavevectors(self) -> np.ndarray:
        return _wavevectors(self.n, self.band)

    def eval(self, x, y) -> np.ndarray:
        """Real component array (..., len(I), len(J)) at point pairs."""
        z = np.asarray(x, float) - np.asarray(y, float)
        E = np.exp(1j * z @ self.wavevectors.T)
        return np.einsum("...k,kij->...ij", E, self.coeffs).real

    def pair(self, b: FourierForm) -> FourierForm:
        """int_y L(x, y) ^ b(y) for a (y-degree complement) form b."""
        if b.degree != self.n - self.y_degree or b.n != self.n:
            raise ValueError("pairing needs a form of complementary degree")
        bb = _pad(b, self.band)
        T = _top_pair_table(self.n, self.y_degree)
        # int exp(-i k y) exp(i m y) dy = (2 pi)^n delta_km
        c = (2 * np.pi) ** self.n * np.einsum("kij,jl,kl->ki", self.coeffs, T, bb.coeffs)
        return FourierForm(self.n, self.x_degree, self.band, c)


def _pad(b: FourierForm, band: int) -> FourierForm:
    if b.band == band:
        return b
    if b.band > band:
        raise ValueError("form exceeds the kernel band limit")
    out = FourierForm.zeros(b.n, b.degree, band)
    idx = {tuple(k): j for j, k in enumerate(out.wavevectors)}
    sel = [idx[tuple(k)] for k in b.wavevectors]
    out.coeffs[sel] = b.coeffs
    return out


def green_double_form(n: int, degree: int, band: int) -> np.ndarray:
    """Coefficients c[k, I, J] of g(x, y) (diagonal in I, J)."""
    K = _wavevectors(n, band)
    k2 = np.sum(K.astype(float) ** 2, axis=1)
    g0 = np.divide(1.0, k2, out=np.zeros_like(k2), where=k2 > 0) / (2 * np.pi) ** n
    m = len(_basis(n, degree))
    return g0[:, None, None] * np.eye(m)[None]


def linking_kernel(band: int, n: int = 3, degree: int | None = None,
                   taper: str | None = None) -> DoubleFormKernel:
    """L = (-1)^eps *_y d_y g for forms of x-degree ``degree`` (default 1).

    The kernel has bidegree (i, n - i - 1).  ``taper="gauss"`` damps the
    coefficients by exp(-|k|^2 / (2 s^2)) with s = band / 3; the sharp
    truncation (default) is what the exact identities use, the tapered
    kernel is for pointwise growth checks, where the sharp cutoff rings.
    """
    if band < 1:
        raise ValueError("band limit must be >= 1")
    i = 1 if degree is None else degree
    if not 0 <= i <= n - 1:
        raise ValueError("degree out of range")
    K = _wavevectors(n, band)
    g = green_double_form(n, i, band).astype(complex)     # (nk, I, I')
    # d_y on exp(-i k.y) dy_I': sum_j (-i k_j) dy_j ^ dy_I'
    nJ1 = len(_basis(n, i + 1))
    dg = np.zeros((len(K), g.shape[1], nJ1), complex)
    for j, a, b, s in _wedge_one_table(n, i):
        dg[:, :, b] += s * (-1j) * K[:, j, None] * g[:, :, a]
    s_deg = n - i - 1
    L = np.zeros((len(K), g.shape[1], len(_basis(n, s_deg))), complex)
    for a, (b, s) in enumerate(_star_table(n, i + 1)):
        L[:, :, b] += s * dg[:, :, a]
    L *= (-1) ** ((n - s_deg) * s_deg)
    if taper == "gauss":
        L *= gauss_taper(n, band)[:, None, None]
    elif taper is not None:
        raise ValueError(f"unknown taper {taper!r}")
    return DoubleFormKernel(n, i, band, L)


def gauss_taper(n: int, band: int) -> np.ndarray:
    s = band / 3.0
    k2 = np.sum(_wavevectors(n, band).astype(float) ** 2, axis=1)
    return np.exp(-k2 / (2 * s * s))


def fundl_residual(a: FourierForm, kernel: DoubleFormKernel | None = None, return_parts: bool = False):
    """Coefficient max-norm of int_y L ^ da - (a - H a + dh) with h = -G(d* a)."""
    L = kernel if kernel is not None else linking_kernel(a.band, a.n, a.degree)
    lhs = L.pair(a.d())
    rhs = a - harmonic_projection(a)
    if a.degree > 0:
        h = -greens_operator(a.codifferential())
        rhs = rhs + h.d()
    res = (lhs - rhs).norm()
    if return_parts:
        return res, lhs, rhs
    return res


def identity_residuals(a: FourierForm) -> dict:
    """Coefficientwise residuals of Delta G = Id - H, HG = 0, GH = 0 and G-commutations."""
    G, H = greens_operator, harmonic_projection
    out = {
        "DeltaG": (G(a).laplacian() - (a - H(a))).norm(),
        "HG": H(G(a)).norm(),
        "GH": G(H(a)).norm(),
        "Gd": (G(a.d()) - G(a).d()).norm() if a.degree < a.n else 0.0,
        "GDelta": (G(a.laplacian()) - G(a).laplacian()).norm(),
    }
    return {k: float(v) for k, v in out.items()}


def kernel_growth_slope(L: DoubleFormKernel, radii, x=None, n_dirs: int = 64,
                        seed: int = 0) -> float:
    """Least-squares log-log slope of max_y |L(x, y)| over spheres |y - x| = r."""
    rng = np.random.default_rng(seed)
    x = np.zeros(L.n) if x is None else np.asarray(x, float)
    dirs = rng.standard_normal((n_dirs, L.n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = np.asarray(radii, float)
    peaks = []
    for r in radii:
        vals = L.eval(x, x + r * dirs)
        peaks.append(np.max(np.abs(vals)))
    slope, _ = np.polyfit(np.log(radii), np.log(peaks), 1)
    return float(slope)


def resolvable_radii(band: int, n_points: int = 8) -> np.ndarray:
    """Radii from three taper widths (9 / band) out to 1, well inside the period."""
    return np.geomspace(9.0 / band, 1.0, n_points)
