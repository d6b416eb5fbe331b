"""Pointwise differential geometry on product charts.

A chart is a product of factors (Euclidean coordinates, a patch of a sphere,
or SO(3) stored as a 3x3 matrix). Tangent vectors and forms are expressed in
the chart's global frame: coordinate fields on the Euclidean and sphere
factors, left- or right-invariant fields on SO(3). Derivatives along frame
fields are central finite differences of the flow of the frame field.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

RANK_TOL = 1e-10


class GeometryError(Exception):
    pass


class MismatchedBasePoint(GeometryError):
    pass


class DegenerateInput(GeometryError):
    pass


class StepTooLarge(GeometryError):
    pass


# ---------------------------------------------------------------------------
# SO(3) helpers

def hat(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def cross(a, b):
    """a × b for 3-vectors; avoids the dispatch overhead of np.cross in integrator loops."""
    return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])


def vee(a):
    return np.array([a[2, 1], a[0, 2], a[1, 0]])


def expm_so3(v):
    """Rodrigues formula for exp(hat(v))."""
    theta = float(np.sqrt(v @ v))
    k = hat(v)
    if theta < 1e-6:
        # series keeps full precision for the tiny FD steps
        a = 1.0 - theta**2 / 6.0 + theta**4 / 120.0
        b = 0.5 - theta**2 / 24.0 + theta**4 / 720.0
    else:
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / theta**2
    return np.eye(3) + a * k + b * (k @ k)


def logm_so3(r):
    c = np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0)
    theta = np.arccos(c)
    w = vee(r - r.T) / 2.0
    if theta < 1e-6:
        return w * (1.0 + theta**2 / 6.0)
    return w * theta / np.sin(theta)


def polar(r):
    u, _, vt = np.linalg.svd(r)
    q = u @ vt
    if np.linalg.det(q) < 0:
        u[:, -1] *= -1
        q = u @ vt
    return q


LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    LEVI_CIVITA[_i, _j, _k] = 1.0
    LEVI_CIVITA[_j, _i, _k] = -1.0


# ---------------------------------------------------------------------------
# chart factors

class Euclidean:
    def __init__(self, dim, names=None):
        self.dim = dim
        self.size = dim
        self.names = list(names) if names else [f"x{i + 1}" for i in range(dim)]

    def displace(self, xs, v, t):
        return xs + t * v

    def structure(self):
        return np.zeros((self.dim,) * 3)

    def scale(self, xs):
        return np.maximum(1.0, np.abs(xs))

    def log(self, base, other):
        return other - base

    def velocity(self, xs, v):
        return np.asarray(v, dtype=float)

    def normalize(self, xs):
        return xs


class SpherePatch:
    """Sphere of given radius in R^3, coordinates (r1, r2), r3 sign kept from the point."""

    def __init__(self, radius, names=("r1", "r2")):
        self.radius = radius
        self.dim = 2
        self.size = 3
        self.names = list(names)

    def _complete(self, r1, r2, sign):
        rad = self.radius**2 - r1**2 - r2**2
        if rad <= 0:
            return None
        return np.array([r1, r2, sign * np.sqrt(rad)])

    def displace(self, xs, v, t):
        out = self._complete(xs[0] + t * v[0], xs[1] + t * v[1], np.sign(xs[2]) or 1.0)
        if out is None:
            return np.full(3, np.nan)
        return out

    def structure(self):
        return np.zeros((2, 2, 2))

    def scale(self, xs):
        return np.maximum(1.0, np.abs(xs[:2]))

    def log(self, base, other):
        return other[:2] - base[:2]

    def velocity(self, xs, v):
        return np.array([v[0], v[1], -(xs[0] * v[0] + xs[1] * v[1]) / xs[2]])

    def normalize(self, xs):
        return xs * (self.radius / np.linalg.norm(xs))


class Rotations:
    """SO(3) stored row-major; frame of left (g e_j^) or right (e_j^ g) invariant fields."""

    def __init__(self, side="left", names=("rot1", "rot2", "rot3")):
        if side not in ("left", "right"):
            raise ValueError(side)
        self.side = side
        self.dim = 3
        self.size = 9
        self.names = list(names)

    def displace(self, xs, v, t):
        g = xs.reshape(3, 3)
        e = expm_so3(t * np.asarray(v, dtype=float))
        return (g @ e if self.side == "left" else e @ g).reshape(9)

    def structure(self):
        # [E_i, E_j] = c^k_ij E_k; stored as c[k, i, j]
        c = np.transpose(LEVI_CIVITA, (2, 0, 1))
        return c if self.side == "left" else -c

    def scale(self, xs):
        return np.ones(3)

    def log(self, base, other):
        g, h = base.reshape(3, 3), other.reshape(3, 3)
        return logm_so3(g.T @ h) if self.side == "left" else logm_so3(h @ g.T)

    def velocity(self, xs, v):
        g = xs.reshape(3, 3)
        return (g @ hat(v) if self.side == "left" else hat(v) @ g).reshape(9)

    def normalize(self, xs):
        return polar(xs.reshape(3, 3)).reshape(9)


class Chart:
    """Product of factors; points are flat storage arrays."""

    def __init__(self, chart_id, factors, admissible=None):
        self.chart_id = chart_id
        self.factors = list(factors)
        self.dim = sum(f.dim for f in self.factors)
        self.size = sum(f.size for f in self.factors)
        self._admissible = admissible
        self._slices = []
        self._dslices = []
        s = d = 0
        for f in self.factors:
            self._slices.append(slice(s, s + f.size))
            self._dslices.append(slice(d, d + f.dim))
            s += f.size
            d += f.dim
        c = np.zeros((self.dim,) * 3)
        for f, ds in zip(self.factors, self._dslices):
            c[ds, ds, ds] = f.structure()
        self._structure = c
        self._structure.setflags(write=False)

    @property
    def names(self):
        out = []
        for f in self.factors:
            out.extend(f.names)
        return out

    def structure(self):
        return self._structure

    def _map(self, x, v, fn):
        parts = [fn(f, x[s], v[ds]) for f, s, ds in zip(self.factors, self._slices, self._dslices)]
        return np.concatenate(parts)

    def displace(self, x, v, t=1.0):
        return self._map(x, np.asarray(v, dtype=float), lambda f, xs, vs: f.displace(xs, vs, t))

    def velocity(self, x, v):
        """Storage-space derivative of the flow through x with frame components v."""
        return self._map(x, np.asarray(v, dtype=float), lambda f, xs, vs: f.velocity(xs, vs))

    def log(self, base, other):
        return np.concatenate([f.log(base[s], other[s]) for f, s in zip(self.factors, self._slices)])

    def normalize(self, x):
        return np.concatenate([f.normalize(x[s]) for f, s in zip(self.factors, self._slices)])

    def scale(self, x):
        return np.concatenate([f.scale(x[s]) for f, s in zip(self.factors, self._slices)])

    def admissible(self, x):
        if not np.all(np.isfinite(x)):
            return False
        return True if self._admissible is None else bool(self._admissible(x))


def product_chart(chart_id, *charts, admissible=None):
    factors = []
    for c in charts:
        factors.extend(c.factors)
    return Chart(chart_id, factors, admissible=admissible)


# ---------------------------------------------------------------------------
# finite differences

@dataclass(frozen=True)
class FiniteDifference:
    step: float = 1e-5
    order: int = 2

    def __post_init__(self):
        if self.order not in (2, 4) or not self.step > 0:
            raise ValueError("order must be 2 or 4 and step positive")


DEFAULT_FD = FiniteDifference()
# used where derivatives of FD-built fields are taken again
PRECISE_FD = FiniteDifference(step=2.5e-4, order=4)


def _stencil(fd):
    if fd.order == 2:
        return (1.0, -1.0), (0.5, -0.5)
    return (1.0, -1.0, 2.0, -2.0), (8 / 12, -8 / 12, -1 / 12, 1 / 12)


def directional_derivative(fn, chart, x, v, fd=DEFAULT_FD):
    """Derivative of fn along the flow of the frame-constant field with components v."""
    v = np.asarray(v, dtype=float)
    norm = float(np.sqrt(v @ v))
    if norm == 0.0:
        return np.zeros_like(np.asarray(fn(x), dtype=float))
    u = v / norm
    h = fd.step * float(np.max(chart.scale(x)[np.abs(u) > 0]))
    offsets, weights = _stencil(fd)
    acc = None
    for o, w in zip(offsets, weights):
        y = chart.displace(x, u, o * h)
        if not chart.admissible(y):
            raise StepTooLarge(f"stencil point leaves the admissible region of {chart.chart_id}")
        val = w * np.asarray(fn(y), dtype=float)
        acc = val if acc is None else acc + val
    return acc * (norm / h)


def frame_derivatives(fn, chart, x, fd=DEFAULT_FD):
    """Array d[j, ...] = E_j(fn) at x."""
    eye = np.eye(chart.dim)
    return np.stack([directional_derivative(fn, chart, x, eye[j], fd) for j in range(chart.dim)])


def exterior_derivative_at(form, chart, x, k, fd=DEFAULT_FD):
    """Components of d(form) at x; form returns full antisymmetric k-form components."""
    c = chart.structure()
    if k == 0:
        return frame_derivatives(form, chart, x, fd)
    if k == 1:
        a = np.asarray(form(x), dtype=float)
        da = frame_derivatives(form, chart, x, fd)
        out = da - da.T - np.einsum("l,ljk->jk", a, c)
        return 0.5 * (out - out.T)
    if k == 2:
        b = np.asarray(form(x), dtype=float)
        db = frame_derivatives(form, chart, x, fd)
        out = (db + np.transpose(db, (1, 2, 0)) + np.transpose(db, (2, 0, 1))
               - np.einsum("lij,lk->ijk", c, b)
               - np.einsum("ljk,li->ijk", c, b)
               - np.einsum("lki,lj->ijk", c, b))
        return antisymmetrize3(out)
    raise ValueError("k must be 0, 1 or 2")


def exterior_derivative_rows(rows, chart, x, fd=DEFAULT_FD):
    """d of each row of a matrix-valued field whose rows are 1-forms; out[b, j, k]."""
    a = np.asarray(rows(x), dtype=float)
    da = frame_derivatives(rows, chart, x, fd)  # da[j, b, k] = E_j a[b, k]
    out = np.transpose(da, (1, 0, 2)) - np.transpose(da, (1, 2, 0)) - np.einsum("bl,ljk->bjk", a, chart.structure())
    return 0.5 * (out - np.transpose(out, (0, 2, 1)))


def antisymmetrize3(t):
    return (t - np.transpose(t, (1, 0, 2)) - np.transpose(t, (0, 2, 1)) - np.transpose(t, (2, 1, 0))
            + np.transpose(t, (1, 2, 0)) + np.transpose(t, (2, 0, 1))) / 6.0


def lie_bracket_at(xf, yf, chart, x, fd=DEFAULT_FD):
    """[X, Y] in frame components: X(Y) - Y(X) + X^j Y^k c^l_jk."""
    xv = np.asarray(xf(x), dtype=float)
    yv = np.asarray(yf(x), dtype=float)
    dy = directional_derivative(yf, chart, x, xv, fd)
    dx = directional_derivative(xf, chart, x, yv, fd)
    return dy - dx + np.einsum("ljk,j,k->l", chart.structure(), xv, yv)


def jacobiator_at(bivector, chart, x, triple, fd=DEFAULT_FD):
    """Jacobiator of the bracket of coordinate functions whose differentials are frame covectors."""
    p = np.asarray(bivector(x), dtype=float)
    dp = frame_derivatives(bivector, chart, x, fd)  # dp[j, a, b] = E_j(pi^ab)
    a, b, c = triple
    return float(p[a] @ dp[:, b, c] + p[b] @ dp[:, c, a] + p[c] @ dp[:, a, b])


# ---------------------------------------------------------------------------
# subspace algebra (columns span the subspace)

def orth(m, tol=RANK_TOL):
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.size == 0 or m.shape[1] == 0:
        return np.zeros((m.shape[0], 0))
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros((m.shape[0], 0))
    return u[:, s > tol * s[0]]


def rank(m, tol=RANK_TOL):
    return orth(m, tol).shape[1]


def null_space(m, tol=RANK_TOL):
    m = np.atleast_2d(np.asarray(m, dtype=float))
    n = m.shape[1]
    if m.shape[0] == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(m)
    if s.size == 0 or s[0] == 0.0:
        return np.eye(n)
    r = int(np.sum(s > tol * s[0]))
    return vt[r:].T.copy()


def check_full_rank(m, what="frame"):
    m = np.asarray(m, dtype=float)
    if m.shape[1] == 0:
        return
    s = np.linalg.svd(m, compute_uv=False)
    if s.size < m.shape[1] or s[-1] <= RANK_TOL * s[0]:
        raise DegenerateInput(f"{what} columns are not linearly independent")


def intersect(a, b, tol=RANK_TOL):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[1] == 0 or b.shape[1] == 0:
        return np.zeros((a.shape[0], 0))
    qa, qb = orth(a, tol), orth(b, tol)
    ns = null_space(np.hstack([qa, -qb]), tol)
    return orth(qa @ ns[: qa.shape[1]], tol)


def subspace_sum(a, b):
    return orth(np.hstack([a, b]))


def annihilator(f, n=None):
    f = np.asarray(f, dtype=float)
    if f.shape[1] == 0:
        return np.eye(f.shape[0] if n is None else n)
    return null_space(f.T)


def subspace_distance(a, b):
    """Sine of the largest principal angle; 1.0 when dimensions differ."""
    qa, qb = orth(a), orth(b)
    if qa.shape[1] != qb.shape[1]:
        return 1.0
    if qa.shape[1] == 0:
        return 0.0
    resid = qb - qa @ (qa.T @ qb)
    return float(np.linalg.norm(resid, 2))


# ---------------------------------------------------------------------------
# typed wrappers

@dataclass(frozen=True)
class ChartPoint:
    chart_id: str
    coords: np.ndarray = field(repr=False)

    def same_as(self, other):
        return self.chart_id == other.chart_id and np.array_equal(self.coords, other.coords)


@dataclass(frozen=True)
class FrameAt:
    base: ChartPoint
    columns: np.ndarray
    variance: str = "tangent"

    def __post_init__(self):
        if self.variance not in ("tangent", "cotangent"):
            raise ValueError(self.variance)
        check_full_rank(self.columns, "frame")

    @property
    def rank(self):
        return self.columns.shape[1]


def _same_base(a: FrameAt, b: FrameAt):
    if not a.base.same_as(b.base):
        raise MismatchedBasePoint("frames live at different points")
    if a.variance != b.variance:
        raise MismatchedBasePoint("frames have different variance")


def subspace_intersect(a: FrameAt, b: FrameAt) -> FrameAt:
    _same_base(a, b)
    return FrameAt(a.base, intersect(a.columns, b.columns), a.variance)


def frame_sum(a: FrameAt, b: FrameAt) -> FrameAt:
    _same_base(a, b)
    return FrameAt(a.base, subspace_sum(a.columns, b.columns), a.variance)


def frame_annihilator(f: FrameAt) -> FrameAt:
    if f.variance != "tangent":
        raise DegenerateInput("annihilator expects a tangent frame")
    return FrameAt(f.base, annihilator(f.columns), "cotangent")


def is_antisymmetric(m, tol=1e-12):
    m = np.asarray(m, dtype=float)
    return bool(np.max(np.abs(m + m.T), initial=0.0) <= tol)


def wedge(a, b):
    """Components of a∧b = a⊗b − b⊗a."""
    return np.outer(a, b) - np.outer(b, a)


def restrict_form(w, basis):
    return basis.T @ w @ basis


def chart_basis_fields(chart):
    eye = np.eye(chart.dim)
    return [(lambda x, j=j: eye[j]) for j in range(chart.dim)]


def pushforward_matrix(fn, chart, x, vectors: Sequence[np.ndarray], fd=DEFAULT_FD):
    """Columns are the derivatives of the coordinate map fn along the given frame vectors."""
    return np.stack([directional_derivative(fn, chart, x, v, fd) for v in vectors], axis=1)
