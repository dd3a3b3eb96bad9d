"""Model manifolds, charts, volume forms and closed-form geodesics.

Every manifold has a *working* coordinate space used by flows and paths:

* ``Sphere3``          unit sphere in R^4 = C^2, coordinates (Re z0, Im z0, Re z1, Im z1)
* ``Sphere3xSphere3``  product in R^8 = C^2 x C^2
* ``Sphere2xSphere2``  product of unit spheres in R^3 x R^3
* ``CP2``              unit lift in S^5 subset C^3 (points are phase classes)
* ``TorusN``           R^n modulo 2*pi

Differential forms on the spheres are ambient forms on the working space;
on CP2 and on tori they live on chart coordinates.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import forms
from .forms import FormField

VOL_S3 = 2.0 * np.pi ** 2
VOL_S2 = 4.0 * np.pi
VOL_CP2 = np.pi ** 2 / 2.0


class ManifoldId(enum.Enum):
    Sphere3 = "S3"
    Sphere3xSphere3 = "S3xS3"
    CP2 = "CP2"
    TorusN = "T"
    Sphere2xSphere2 = "S2xS2"


class CutLocusWarning(UserWarning):
    pass


# complex <-> real packing ---------------------------------------------

def to_complex(x: np.ndarray) -> np.ndarray:
    """(..., 2k) interleaved (re, im) -> (..., k) complex."""
    x = np.asarray(x, float)
    return x[..., 0::2] + 1j * x[..., 1::2]


def to_real(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, complex)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def complex_matrix_to_real(A: np.ndarray) -> np.ndarray:
    """Real 2k x 2k matrix of z -> A z in the interleaved packing."""
    A = np.asarray(A, complex)
    k = A.shape[0]
    R = np.zeros((2 * k, 2 * k))
    R[0::2, 0::2] = A.real
    R[0::2, 1::2] = -A.imag
    R[1::2, 0::2] = A.imag
    R[1::2, 1::2] = A.real
    return R


# charts ----------------------------------------------------------------

@dataclass(frozen=True)
class Chart:
    name: str
    dim: int
    param: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]

    def pullback(self, a: FormField) -> FormField:
        return forms.pullback(a, self.param, self.jacobian, self.dim)

    def pushforward(self, X: Callable[[np.ndarray], np.ndarray]) -> Callable[[np.ndarray], np.ndarray]:
        """Chart expression of an ambient tangent field (exact for tangent X)."""
        def Xc(u):
            J = self.jacobian(u)
            v = np.asarray(X(self.param(u)), float)
            JtJ = np.swapaxes(J, -1, -2) @ J
            rhs = np.swapaxes(J, -1, -2) @ v[..., None]
            return np.linalg.solve(JtJ, rhs)[..., 0]
        return Xc


def _stereo_param(u: np.ndarray) -> np.ndarray:
    # projection from -e0: x0 = (1-|u|^2)/(1+|u|^2), x_i = 2u_i/(1+|u|^2)
    u = np.asarray(u, float)
    r2 = np.sum(u * u, axis=-1, keepdims=True)
    return np.concatenate([(1 - r2) / (1 + r2), 2 * u / (1 + r2)], axis=-1)


def _stereo_inverse(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, float)
    return x[..., 1:] / (1 + x[..., :1])


def _stereo_jac(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, float)
    d = u.shape[-1]
    r2 = np.sum(u * u, axis=-1)[..., None]
    s = 1 + r2
    J = np.empty(u.shape[:-1] + (d + 1, d))
    J[..., 0, :] = -4 * u / s ** 2
    eye = np.eye(d)
    J[..., 1:, :] = 2 * eye / s[..., None] - 4 * u[..., :, None] * u[..., None, :] / s[..., None] ** 2
    return J


def stereographic_chart(sphere_dim: int) -> Chart:
    return Chart(f"stereo-S{sphere_dim}", sphere_dim, _stereo_param, _stereo_inverse, _stereo_jac)


def product_chart(a: Chart, b: Chart, amb_a: int) -> Chart:
    da = a.dim

    def param(u):
        return np.concatenate([a.param(u[..., :da]), b.param(u[..., da:])], axis=-1)

    def inverse(x):
        return np.concatenate([a.inverse(x[..., :amb_a]), b.inverse(x[..., amb_a:])], axis=-1)

    def jac(u):
        Ja, Jb = a.jacobian(u[..., :da]), b.jacobian(u[..., da:])
        ma, mb = Ja.shape[-2], Jb.shape[-2]
        J = np.zeros(u.shape[:-1] + (ma + mb, a.dim + b.dim))
        J[..., :ma, :da] = Ja
        J[..., ma:, da:] = Jb
        return J

    return Chart(f"{a.name}x{b.name}", a.dim + b.dim, param, inverse, jac)


def _affine_param(j: int):
    others = [k for k in range(3) if k != j]

    def param(u):
        z = to_complex(u)
        Z = np.ones(z.shape[:-1] + (3,), complex)
        Z[..., others[0]] = z[..., 0]
        Z[..., others[1]] = z[..., 1]
        Z /= np.linalg.norm(Z, axis=-1, keepdims=True)
        return to_real(Z)

    def inverse(x):
        Z = to_complex(x)
        return to_real(Z[..., others] / Z[..., j:j + 1])

    def jac(u):
        u = np.asarray(u, float)
        h = 1e-6
        cols = []
        for i in range(4):
            e = np.zeros(4)
            e[i] = h
            cols.append((param(u + e) - param(u - e)) / (2 * h))
        return np.stack(cols, axis=-1)

    return param, inverse, jac


def cp2_chart(j: int) -> Chart:
    p, i, J = _affine_param(j)
    return Chart(f"CP2-affine{j}", 4, p, i, J)


# paths -----------------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    """Constant-speed product of great-circle arcs (or flat segments).

    ``kind`` is 'sphere' (per-block great circles in the working space) or
    'flat' (straight line, used on tori).
    """
    start: np.ndarray
    end: np.ndarray
    blocks: tuple[tuple[int, int], ...]
    dirs: np.ndarray          # unit tangent per block, stacked in working coords
    angles: np.ndarray        # arc angle per block
    kind: str = "sphere"
    ambiguous: bool = False

    @property
    def length(self) -> float:
        return float(np.sqrt(np.sum(self.angles ** 2)))

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, float)[..., None]
        if self.kind == "flat":
            return self.start + s * (self.end - self.start)
        out = np.empty(s.shape[:-1] + self.start.shape)
        for b, (lo, hi) in enumerate(self.blocks):
            th = self.angles[b]
            out[..., lo:hi] = np.cos(s * th) * self.start[lo:hi] + np.sin(s * th) * self.dirs[lo:hi]
        return out

    def velocity(self, s) -> np.ndarray:
        s = np.asarray(s, float)[..., None]
        if self.kind == "flat":
            return np.broadcast_to(self.end - self.start, s.shape[:-1] + self.start.shape)
        out = np.empty(s.shape[:-1] + self.start.shape)
        for b, (lo, hi) in enumerate(self.blocks):
            th = self.angles[b]
            out[..., lo:hi] = th * (-np.sin(s * th) * self.start[lo:hi] + np.cos(s * th) * self.dirs[lo:hi])
        return out


@dataclass(frozen=True)
class Path:
    """Concatenation of segments, parametrised by s in [0, len(segments)]."""
    segments: tuple[Segment, ...]

    @property
    def length(self) -> float:
        return float(sum(seg.length for seg in self.segments))

    @property
    def ambiguous(self) -> bool:
        return any(seg.ambiguous for seg in self.segments)

    @property
    def start(self) -> np.ndarray:
        return self.segments[0].start

    @property
    def end(self) -> np.ndarray:
        return self.segments[-1](1.0)

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, float)
        n = len(self.segments)
        idx = np.clip(np.floor(s).astype(int), 0, n - 1)
        out = np.empty(s.shape + self.start.shape)
        for i, seg in enumerate(self.segments):
            m = idx == i
            if np.any(m):
                out[m] = seg(s[m] - i)
        return out

    def __add__(self, other: "Path") -> "Path":
        return Path(self.segments + other.segments)


def _lex_tangent(p: np.ndarray) -> np.ndarray:
    """Lexicographically smallest unit vector orthogonal to p."""
    for i in range(p.size):
        e = np.zeros(p.size)
        e[i] = 1.0
        v = e - (e @ p) * p
        n = np.linalg.norm(v)
        if n > 1e-8:
            return -v / n
    raise ValueError("degenerate point")


def great_arc(p: np.ndarray, q: np.ndarray) -> tuple[np.ndarray, float, bool]:
    """Unit initial direction, angle, and antipodal flag for the arc p -> q."""
    c = float(np.clip(p @ q, -1.0, 1.0))
    w = q - c * p
    s = np.linalg.norm(w)
    if s < 1e-12:
        if c > 0:
            return np.zeros_like(p), 0.0, False
        return _lex_tangent(p), np.pi, True
    return w / s, float(np.arctan2(s, c)), False


# manifolds --------------------------------------------------------------

class Manifold:
    """Base class.  Subclasses fix dimension, working space, metric, volume."""

    id: ManifoldId
    dim: int
    ambient_dim: int
    blocks: tuple[tuple[int, int], ...] = ()
    injectivity_radius: float = np.inf

    # points --------------------------------------------------------------
    def project(self, x: np.ndarray) -> np.ndarray:
        x = np.array(x, float)
        for lo, hi in self.blocks:
            x[..., lo:hi] /= np.linalg.norm(x[..., lo:hi], axis=-1, keepdims=True)
        return x

    def constraint_error(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, float)
        err = np.zeros(x.shape[:-1])
        for lo, hi in self.blocks:
            err = np.maximum(err, np.abs(np.linalg.norm(x[..., lo:hi], axis=-1) - 1))
        return err

    def sample(self, rng: np.random.Generator, size: int | tuple = ()) -> np.ndarray:
        """Points distributed by the normalised volume measure."""
        size = (size,) if isinstance(size, int) else tuple(size)
        return self.project(rng.standard_normal(size + (self.ambient_dim,)))

    @property
    def volume(self) -> float:
        raise NotImplementedError

    def point(self, coords, chart_id: int = 0) -> "Point":
        return Point(self, np.asarray(coords, float), chart_id)

    # metric --------------------------------------------------------------
    def metric(self, x, u, v) -> np.ndarray:
        return np.sum(np.asarray(u) * np.asarray(v), axis=-1)

    def tangent_frame(self, x: np.ndarray) -> np.ndarray:
        """Oriented orthonormal tangent frame, shape (..., ambient_dim, dim)."""
        raise NotImplementedError

    def distance(self, p, q) -> float:
        return self.geodesic(p, q).length

    def geodesic(self, p, q) -> Path:
        p, q = np.asarray(p, float), np.asarray(q, float)
        dirs = np.zeros_like(p)
        angles = np.zeros(len(self.blocks))
        amb = False
        for b, (lo, hi) in enumerate(self.blocks):
            d, th, flag = great_arc(p[lo:hi], q[lo:hi])
            dirs[lo:hi] = d
            angles[b] = th
            amb = amb or flag
        return Path((Segment(p.copy(), q.copy(), self.blocks, dirs, angles, "sphere", amb),))

    def volume_form(self) -> FormField:
        raise NotImplementedError

    def charts(self) -> list[Chart]:
        return []

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim})"

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and self.dim == other.dim

    def __hash__(self) -> int:
        return hash((type(self).__name__, self.dim))


def sphere_volume_form(ambient: int, lo: int, hi: int) -> FormField:
    """i_x(dx_lo ^ ... ^ dx_{hi-1}) on the block [lo, hi) of R^ambient."""
    k = hi - lo - 1
    idx = forms.index_of(ambient, k)
    entries = []
    for j in range(lo, hi):
        I = tuple(i for i in range(lo, hi) if i != j)
        entries.append((idx[I], j, (-1.0) ** (j - lo)))
    n = len(idx)

    def comp(x):
        x = np.asarray(x, float)
        out = np.zeros(x.shape[:-1] + (n,))
        for col, j, s in entries:
            out[..., col] = s * x[..., j]
        return out

    return FormField(k, ambient, comp, None, name=f"vol_S{k}")


def quaternion_frame(x: np.ndarray) -> np.ndarray:
    """Left-invariant orthonormal frame (x*i, x*j, x*k) on S^3 in R^4."""
    a, b, c, d = np.moveaxis(np.asarray(x, float), -1, 0)
    xi = np.stack([-b, a, -d, c], axis=-1)
    xj = np.stack([-c, d, a, -b], axis=-1)
    xk = np.stack([-d, -c, b, a], axis=-1)
    return np.stack([xi, xj, xk], axis=-1)


def s2_frame(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, float)
    e = np.zeros(x.shape)
    e[..., 0] = 1.0
    alt = np.zeros(x.shape)
    alt[..., 1] = 1.0
    use_alt = np.abs(x[..., 0]) > 0.9
    e = np.where(use_alt[..., None], alt, e)
    u = e - np.sum(e * x, axis=-1, keepdims=True) * x
    u /= np.linalg.norm(u, axis=-1, keepdims=True)
    v = np.cross(x, u)
    return np.stack([u, v], axis=-1)


class Sphere3(Manifold):
    id = ManifoldId.Sphere3
    dim = 3
    ambient_dim = 4
    blocks = ((0, 4),)
    injectivity_radius = np.pi

    @property
    def volume(self) -> float:
        return VOL_S3

    def tangent_frame(self, x):
        return quaternion_frame(x)

    def volume_form(self) -> FormField:
        return sphere_volume_form(4, 0, 4)

    def charts(self) -> list[Chart]:
        return [stereographic_chart(3)]


class Sphere3xSphere3(Manifold):
    id = ManifoldId.Sphere3xSphere3
    dim = 6
    ambient_dim = 8
    blocks = ((0, 4), (4, 8))
    injectivity_radius = np.pi

    @property
    def volume(self) -> float:
        return VOL_S3 ** 2

    def tangent_frame(self, x):
        x = np.asarray(x, float)
        F = np.zeros(x.shape[:-1] + (8, 6))
        F[..., :4, :3] = quaternion_frame(x[..., :4])
        F[..., 4:, 3:] = quaternion_frame(x[..., 4:])
        return F

    def volume_form(self) -> FormField:
        return forms.wedge(sphere_volume_form(8, 0, 4), sphere_volume_form(8, 4, 8))

    def charts(self) -> list[Chart]:
        s = stereographic_chart(3)
        return [product_chart(s, s, 4)]


class Sphere2xSphere2(Manifold):
    id = ManifoldId.Sphere2xSphere2
    dim = 4
    ambient_dim = 6
    blocks = ((0, 3), (3, 6))
    injectivity_radius = np.pi

    @property
    def volume(self) -> float:
        return VOL_S2 ** 2

    def tangent_frame(self, x):
        x = np.asarray(x, float)
        F = np.zeros(x.shape[:-1] + (6, 4))
        F[..., :3, :2] = s2_frame(x[..., :3])
        F[..., 3:, 2:] = s2_frame(x[..., 3:])
        return F

    def area_forms(self) -> tuple[FormField, FormField]:
        return sphere_volume_form(6, 0, 3), sphere_volume_form(6, 3, 6)

    def volume_form(self) -> FormField:
        a, b = self.area_forms()
        return forms.wedge(a, b)

    def charts(self) -> list[Chart]:
        s = stereographic_chart(2)
        return [product_chart(s, s, 3)]


def _fs_density(u: np.ndarray) -> np.ndarray:
    r2 = np.sum(np.asarray(u, float) ** 2, axis=-1)
    return (1 + r2) ** -3


class CP2(Manifold):
    """Complex projective plane with the Fubini-Study metric (lines have area pi)."""
    id = ManifoldId.CP2
    dim = 4
    ambient_dim = 6
    blocks = ((0, 6),)
    injectivity_radius = np.pi / 2

    @property
    def volume(self) -> float:
        return VOL_CP2

    def geodesic(self, p, q) -> Path:
        # horizontal lift: rotate q's phase so <p, q> is real and positive
        P, Q = to_complex(p), to_complex(q)
        h = np.vdot(P, Q)
        if abs(h) > 0:
            Q = Q * np.conj(h) / abs(h)
        return Manifold.geodesic(self, np.asarray(p, float), to_real(Q))

    def distance(self, p, q) -> float:
        h = abs(np.vdot(to_complex(p), to_complex(q)))
        return float(np.arccos(np.clip(h, 0.0, 1.0)))

    def volume_form(self) -> FormField:
        """Fubini-Study volume (1+|z|^2)^-3 dV on an affine chart."""
        return FormField(4, 4, lambda u: _fs_density(u)[..., None], None, name="vol_FS")

    def kahler_form(self) -> FormField:
        """omega = (i/2) d d-bar log(1+|z|^2) on an affine chart; omega^2/2 = vol."""
        def comp(u):
            u = np.asarray(u, float)
            z = to_complex(u)
            s = 1 + np.sum(np.abs(z) ** 2, axis=-1)
            # h_{jk} = ((1+|z|^2) delta_jk - conj(z_j) z_k) / (1+|z|^2)^2
            h = (s[..., None, None] * np.eye(2) - np.conj(z)[..., :, None] * z[..., None, :]) / s[..., None, None] ** 2
            # omega = (i/2) sum h_jk dz_j ^ dzbar_k, expand in (x0,y0,x1,y1)
            out = np.zeros(u.shape[:-1] + (6,))
            idx = forms.index_of(4, 2)
            for j in range(2):
                for k in range(2):
                    hjk = h[..., j, k]
                    # (i/2) dz_j^dzbar_k = (i/2)(dx_j + i dy_j)^(dx_k - i dy_k)
                    #  = (1/2)[dx_j^dy_k - dy_j^dx_k] + (i/2)[dx_j^dx_k + dy_j^dy_k]
                    xj, yj, xk, yk = 2 * j, 2 * j + 1, 2 * k, 2 * k + 1
                    terms = [((xj, yk), 0.5 * hjk), ((yj, xk), -0.5 * hjk),
                             ((xj, xk), 0.5j * hjk), ((yj, yk), 0.5j * hjk)]
                    for (a, b), c in terms:
                        if a == b:
                            continue
                        s_ = 1.0 if a < b else -1.0
                        out[..., idx[(min(a, b), max(a, b))]] += s_ * np.real(c)
            return out
        return FormField(2, 4, comp, lambda u: np.zeros(np.shape(u)[:-1] + (4,)), name="omega_FS")

    def metric_matrix(self, u: np.ndarray) -> np.ndarray:
        """Real 4x4 Gram matrix of the FS metric in affine coordinates."""
        z = to_complex(u)
        s = 1 + np.sum(np.abs(z) ** 2, axis=-1)
        h = (s[..., None, None] * np.eye(2) - np.conj(z)[..., :, None] * z[..., None, :]) / s[..., None, None] ** 2
        # g(a, b) = Re sum_jk h_jk a_j conj(b_k) over the real basis (1, i) per slot
        B = np.zeros((2, 4), complex)
        B[0, 0], B[0, 1], B[1, 2], B[1, 3] = 1, 1j, 1, 1j
        return np.einsum("ja,...jk,kb->...ab", B, h, np.conj(B)).real

    def chart_frame(self, u: np.ndarray) -> np.ndarray:
        """FS-orthonormal, complex-oriented frame at chart point(s) u."""
        G = self.metric_matrix(u)
        L = np.linalg.cholesky(G)
        return np.linalg.inv(np.swapaxes(L, -1, -2))

    def charts(self) -> list[Chart]:
        return [cp2_chart(j) for j in range(3)]

    def to_chart(self, x: np.ndarray, j: int) -> np.ndarray:
        return cp2_chart(j).inverse(x)

    def best_chart(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(np.abs(to_complex(x)), axis=-1)

    def from_chart(self, u: np.ndarray, j: int) -> np.ndarray:
        return cp2_chart(j).param(u)

    def tangent_frame(self, x):
        raise NotImplementedError("CP2 frames live on affine charts; use chart_frame")


class TorusN(Manifold):
    id = ManifoldId.TorusN
    blocks = ()
    injectivity_radius = np.pi

    def __init__(self, n: int):
        self.dim = n
        self.ambient_dim = n

    @property
    def volume(self) -> float:
        return (2 * np.pi) ** self.dim

    def project(self, x):
        return np.mod(np.asarray(x, float), 2 * np.pi)

    def sample(self, rng, size=()):
        size = (size,) if isinstance(size, int) else tuple(size)
        return rng.uniform(0, 2 * np.pi, size + (self.dim,))

    def tangent_frame(self, x):
        x = np.asarray(x, float)
        return np.broadcast_to(np.eye(self.dim), x.shape[:-1] + (self.dim, self.dim))

    def geodesic(self, p, q) -> Path:
        p, q = np.asarray(p, float), np.asarray(q, float)
        d = np.mod(q - p + np.pi, 2 * np.pi) - np.pi
        amb = bool(np.any(np.isclose(np.abs(d), np.pi)))
        d = np.where(np.isclose(d, np.pi), -np.pi, d)
        ang = np.array([np.linalg.norm(d)])
        return Path((Segment(p.copy(), p + d, (), np.zeros_like(p), ang, "flat", amb),))

    def volume_form(self) -> FormField:
        return forms.volume_coframe(self.dim)

    def charts(self) -> list[Chart]:
        ident = lambda u: np.asarray(u, float)
        jac = lambda u: np.broadcast_to(np.eye(self.dim), np.shape(u)[:-1] + (self.dim, self.dim))
        return [Chart(f"T{self.dim}", self.dim, ident, ident, jac)]


def manifold(mid: ManifoldId | str, n: int | None = None) -> Manifold:
    mid = ManifoldId(mid) if not isinstance(mid, ManifoldId) else mid
    if mid is ManifoldId.TorusN:
        if n is None:
            raise ValueError("TorusN needs a dimension")
        return TorusN(n)
    return {ManifoldId.Sphere3: Sphere3, ManifoldId.Sphere3xSphere3: Sphere3xSphere3,
            ManifoldId.CP2: CP2, ManifoldId.Sphere2xSphere2: Sphere2xSphere2}[mid]()


# points ----------------------------------------------------------------

@dataclass(frozen=True)
class Point:
    """A point given in one chart of a manifold.

    ``chart_id`` 0 on the spheres and tori means working coordinates.  On
    CP2 it selects the affine chart Z_j != 0 and ``coords`` are the two
    remaining affine coordinates (4 reals).
    """
    manifold: Manifold
    coords: np.ndarray
    chart_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, float))

    def working(self) -> np.ndarray:
        if isinstance(self.manifold, CP2):
            return self.manifold.from_chart(self.coords, self.chart_id)
        return self.coords

    @classmethod
    def from_working(cls, m: Manifold, x: np.ndarray) -> "Point":
        x = m.project(np.asarray(x, float))
        if isinstance(m, CP2):
            j = int(m.best_chart(x))
            return cls(m, m.to_chart(x, j), j)
        return cls(m, x, 0)

    def to_chart(self, j: int) -> "Point":
        if not isinstance(self.manifold, CP2):
            raise ValueError("chart transitions only on CP2")
        return Point(self.manifold, self.manifold.to_chart(self.working(), j), j)

    def normalised(self) -> "Point":
        """Renormalise (spheres) or switch to the best chart (CP2, when max|coord| > 2)."""
        if isinstance(self.manifold, CP2):
            if np.max(np.abs(to_complex(self.coords))) > 2:
                return Point.from_working(self.manifold, self.working())
            return self
        return Point(self.manifold, self.manifold.project(self.coords), self.chart_id)


@dataclass(frozen=True)
class TangentVector:
    base: Point
    components: np.ndarray = field(default_factory=lambda: np.zeros(0))


def geodesic(p: Point, q: Point) -> Path:
    if p.manifold != q.manifold:
        raise ValueError("points on different manifolds")
    return p.manifold.geodesic(p.working(), q.working())


def random_orthonormal_probe(m: Manifold, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    x = m.sample(rng, n)
    return x, m.tangent_frame(x)
