"""Constraint manifold, restricted canonical forms, nonholonomic bivector, integrator.

Points of the constraint manifold M = κ♭(D) are stored as (q, p) where p are the
momenta paired against the D-part of an adapted frame [X | Y | Z] of TQ:
p_α = <m, X_α>, p_i = <m, Y_i>. The chart of M is the product of the Q chart
with R^r; the lifted frame fields keep p fixed.
"""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import (PRECISE_FD, Chart, Euclidean, GeometryError, exterior_derivative_at,
                       lie_bracket_at, product_chart, rank)

METRIC_TOL = 1e-12
BASIS_CACHE_SIZE = 512


class MechanicsError(GeometryError):
    pass


class DimensionAssumptionFailed(MechanicsError):
    pass


class DegenerateMetric(MechanicsError):
    pass


class DegenerateOmegaC(MechanicsError):
    pass


class DegenerateGaugedForm(DegenerateOmegaC):
    pass


class LeftAdmissibleRegion(MechanicsError):
    def __init__(self, time, state):
        super().__init__(f"trajectory left the admissible region after t = {time:.6g}")
        self.time = time
        self.state = state


@dataclass(frozen=True)
class NonholonomicSystemSpec:
    name: str
    chart: Chart
    metric: Callable  # q -> (n, n) in the chart frame
    potential: Callable  # q -> float
    constraints: Callable  # q -> rows are constraint one-forms

    @property
    def q_dim(self):
        return self.chart.dim


@dataclass(frozen=True)
class SplittingRecipe:
    """Frames of H, S and W as functions of q (columns in the Q frame)."""
    horizontal: Callable
    symmetric: Callable
    complement: Callable


def kappa_orthogonalize(kappa, vecs, against):
    """Remove from each column of vecs its κ-projection onto span(against)."""
    if against.shape[1] == 0:
        return vecs
    g = against.T @ kappa @ against
    return vecs - against @ np.linalg.solve(g, against.T @ kappa @ vecs)


def orthogonal_recipe(metric, horizontal, symmetric, complement):
    """Recipe with H and W replaced by their κ-orthogonal complements to S inside D and V."""

    def h(q):
        return kappa_orthogonalize(metric(q), horizontal(q), symmetric(q))

    def w(q):
        return kappa_orthogonalize(metric(q), complement(q), symmetric(q))

    return SplittingRecipe(h, symmetric, w)


@dataclass
class AdaptedBasis:
    q: np.ndarray
    frame: np.ndarray  # columns X | Y | Z
    dual: np.ndarray  # rows X^α | Y^i | ε^a
    counts: tuple  # (h, k, w)
    kappa: np.ndarray  # metric in the chart frame
    blocks: np.ndarray = field(init=False)  # metric in the adapted frame

    def __post_init__(self):
        self.blocks = self.frame.T @ self.kappa @ self.frame

    @property
    def h(self):
        return self.counts[0]

    @property
    def k(self):
        return self.counts[1]

    @property
    def d(self):
        return self.counts[0] + self.counts[1]

    @property
    def H(self):
        return slice(0, self.h)

    @property
    def S(self):
        return slice(self.h, self.d)

    @property
    def W(self):
        return slice(self.d, self.frame.shape[0])

    @property
    def D(self):
        return slice(0, self.d)

    def projector(self, *names):
        sel = np.zeros(self.frame.shape[0])
        for name in names:
            sel[getattr(self, name)] = 1.0
        return self.frame @ (sel[:, None] * self.dual)


class ConstrainedSystem:
    """A nonholonomic system together with an adapted splitting."""

    def __init__(self, spec: NonholonomicSystemSpec, recipe: SplittingRecipe, q_ref, fd=PRECISE_FD):
        self.spec = spec
        self.recipe = recipe
        self.fd = fd
        self.chart = spec.chart
        self._basis_cache = OrderedDict()
        b = self.basis(np.asarray(q_ref, dtype=float))
        self.counts = b.counts
        names = [f"p{j + 1}" for j in range(b.d)]
        self.mchart = product_chart(f"{spec.name}:M", self.chart, Chart("p", [Euclidean(b.d, names)]),
                                    admissible=lambda x: self.chart.admissible(x[: self.chart.size]))

    # -- adapted frame -----------------------------------------------------
    def basis(self, q) -> AdaptedBasis:
        q = np.asarray(q, dtype=float)
        key = q.tobytes()
        cached = self._basis_cache.get(key)
        if cached is not None:
            self._basis_cache.move_to_end(key)
            return cached
        b = self._build_basis(q)
        self._basis_cache[key] = b
        if len(self._basis_cache) > BASIS_CACHE_SIZE:
            self._basis_cache.popitem(last=False)
        return b

    def _build_basis(self, q) -> AdaptedBasis:
        n = self.chart.dim
        xs, ys, zs = (np.asarray(f(q), dtype=float).reshape(n, -1)
                      for f in (self.recipe.horizontal, self.recipe.symmetric, self.recipe.complement))
        frame = np.hstack([xs, ys, zs])
        if frame.shape[1] != n or rank(frame) != n:
            raise DimensionAssumptionFailed("adapted frame does not span TQ")
        kappa = np.asarray(self.spec.metric(q), dtype=float)
        if np.min(np.linalg.eigvalsh(0.5 * (kappa + kappa.T))) <= METRIC_TOL:
            raise DegenerateMetric("kinetic metric is not positive definite")
        b = AdaptedBasis(q.copy(), frame, np.linalg.inv(frame), (xs.shape[1], ys.shape[1], zs.shape[1]), kappa)
        for arr in (b.q, b.frame, b.dual, b.kappa, b.blocks):
            arr.setflags(write=False)  # shared through the cache
        return b

    def split(self, x):
        s = self.chart.size
        return x[:s], x[s:]

    def join(self, q, p):
        return np.concatenate([np.asarray(q, dtype=float), np.asarray(p, dtype=float)])

    # -- Legendre maps in adapted coordinates -------------------------------
    def velocity_components(self, b: AdaptedBasis, p):
        """u with v = F_D u the velocity whose momentum has D-pairings p."""
        return np.linalg.solve(b.blocks[b.D, b.D], p)

    def covector(self, x, b=None):
        q, p = self.split(x)
        b = self.basis(q) if b is None else b
        u = self.velocity_components(b, p)
        return b.kappa @ (b.frame[:, b.D] @ u)

    def velocity(self, x, b=None):
        q, p = self.split(x)
        b = self.basis(q) if b is None else b
        return b.frame[:, b.D] @ self.velocity_components(b, p)

    def momenta_from_velocity(self, q, v, b=None):
        b = self.basis(q) if b is None else b
        m = b.kappa @ v
        return b.frame[:, b.D].T @ m

    def full_momenta(self, x, b=None):
        """(p_α, p_i, p_a) including the dependent W-pairings."""
        q, _ = self.split(x)
        b = self.basis(q) if b is None else b
        return b.frame.T @ self.covector(x, b)

    # -- forms ----------------------------------------------------------------
    def theta(self, x):
        m = self.covector(x)
        return np.concatenate([m, np.zeros(len(x) - self.chart.size)])

    def omega(self, x):
        return -exterior_derivative_at(self.theta, self.mchart, x, 1, self.fd)

    def c_basis(self, x, b=None):
        """Columns spanning 𝓒 = {v ∈ TM : Tτ(v) ∈ D} in the M frame."""
        q, p = self.split(x)
        b = self.basis(q) if b is None else b
        n, r = self.chart.dim, len(p)
        top = np.hstack([b.frame[:, b.D], np.zeros((n, r))])
        bottom = np.hstack([np.zeros((r, b.d)), np.eye(r)])
        return np.vstack([top, bottom])

    def energy(self, x):
        q, p = self.split(x)
        b = self.basis(q)
        return 0.5 * float(p @ self.velocity_components(b, p)) + float(self.spec.potential(q))

    def d_energy(self, x):
        return exterior_derivative_at(self.energy, self.mchart, x, 0, self.fd)

    def gauge_bivector(self, x, two_form=None, omega=None):
        om = self.omega(x) if omega is None else omega
        w = om if two_form is None else om + two_form
        c = self.c_basis(x)
        mat = c.T @ w @ c
        s = np.linalg.svd(mat, compute_uv=False)
        if s[-1] <= 1e-10 * max(1.0, s[0]):
            err = DegenerateOmegaC if two_form is None else DegenerateGaugedForm
            raise err(f"restricted form is degenerate (smallest singular value {s[-1]:.3e})")
        p = -c @ np.linalg.solve(mat, c.T)
        return 0.5 * (p - p.T)

    def pi_nh(self, x, omega=None):
        return self.gauge_bivector(x, None, omega)

    def x_nh(self, x, omega=None, d_energy=None):
        p = self.pi_nh(x, omega)
        dh = self.d_energy(x) if d_energy is None else d_energy
        return p @ dh

    def structure_functions(self, q):
        """C[A, B, C] = F^A([F_B, F_C]) for the adapted frame F."""
        b = self.basis(q)
        n = self.chart.dim
        fields = [(lambda y, j=j: self.basis(y).frame[:, j]) for j in range(n)]
        out = np.zeros((n, n, n))
        for i in range(n):
            for j in range(i + 1, n):
                br = lie_bracket_at(fields[i], fields[j], self.chart, q, self.fd)
                out[:, i, j] = b.dual @ br
                out[:, j, i] = -out[:, i, j]
        return out


def momentum_point(system: ConstrainedSystem, q, v):
    """Point of M over q whose Legendre image is the velocity v ∈ D."""
    return system.join(q, system.momenta_from_velocity(q, v))


# ---------------------------------------------------------------------------
# integration

@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    observables: dict

    def drift(self, name):
        col = np.asarray(self.observables[name])
        ref = abs(col[0])
        scale = ref if ref > 1e-12 else 1.0
        return float(np.max(np.abs(col - col[0])) / scale)


def rk4_step(f, x, dt):
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(vector_field, x0, dt, t_end, renormalize=None, admissible=None, observe=None):
    """Classic fixed-step RK4 on storage coordinates with per-step renormalization."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    steps = int(round(t_end / dt))
    x = np.asarray(x0, dtype=float).copy()
    if admissible is not None and not admissible(x):
        raise LeftAdmissibleRegion(0.0, x)
    states = np.empty((steps + 1, x.size))
    states[0] = x
    obs = {} if observe is None else {k: [v] for k, v in observe(x).items()}
    for s in range(1, steps + 1):
        y = rk4_step(vector_field, x, dt)
        if renormalize is not None:
            y = renormalize(y)
        if not np.all(np.isfinite(y)) or (admissible is not None and not admissible(y)):
            raise LeftAdmissibleRegion((s - 1) * dt, x)
        x = y
        states[s] = x
        if observe is not None:
            for k, v in observe(x).items():
                obs[k].append(v)
    times = dt * np.arange(steps + 1)
    return Trajectory(times, states, {k: np.asarray(v) for k, v in obs.items()})


def generic_vector_field(system: ConstrainedSystem):
    """Storage-space vector field of X_nh built from the bivector (slow, for cross-checks)."""
    chart = system.mchart

    def f(x):
        return chart.velocity(x, system.x_nh(x))

    return f
