"""Built-in example systems.

Each model bundles a nonholonomic system with an adapted splitting, a symmetry
group, horizontal gauge momenta (or D-momenta), orbit projections onto explicit
quotient charts, a fast analytic integrator state, and closed-form reference
expressions used as cross-check oracles.
"""
from __future__ import annotations

import functools
import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.spatial.transform import Rotation

from .geometry import (PRECISE_FD, Chart, Euclidean, FiniteDifference, GeometryError, Rotations, SpherePatch, cross,
                       expm_so3, hat, polar, wedge)
from .mechanics import ConstrainedSystem, NonholonomicSystemSpec, SplittingRecipe, orthogonal_recipe
from .reduction import GroupActionSpec, HGSBasis, MomentumLevel, SymmetricSystem

BOUNDARY_MARGIN = 1e-3
PRESET_MARGIN = 1e-2


class ModelError(GeometryError):
    pass


class UnknownModel(ModelError):
    pass


class InvalidParameter(ModelError):
    pass


class UnknownExpression(ModelError):
    pass


@dataclass(frozen=True)
class Dynamics:
    """Fast integrator in a natural velocity state, with maps to and from M."""
    columns: tuple
    rhs: Callable
    renormalize: Callable
    to_manifold: Callable
    from_manifold: Callable
    observables: Callable  # state -> {"H": .., "J1": .., "F1": ..}
    admissible: Callable


@dataclass(frozen=True)
class QuotientData:
    quotient_chart: Chart  # M/G
    quotient_projection: Callable
    quotient_lift: Callable
    leaf_chart: Chart  # J^{-1}(μ)/G
    leaf_projection: Callable
    leaf_lift: Callable  # (level, leaf coords) -> point of M
    base_chart: Chart  # Q/G
    base_projection: Callable
    base_lift: Callable


@dataclass(frozen=True)
class DMomentumData:
    """Conserved functions F_j = <m, X_j> generated by fields X_j with values in D."""
    generators: Callable  # q -> (n, j) columns in the Q frame
    names: tuple = ("F1",)


@dataclass(frozen=True)
class ModelDescriptor:
    name: str
    params: dict
    units: dict
    sym: SymmetricSystem
    quotient: QuotientData
    dynamics: Dynamics
    presets: dict
    sample_q: Callable  # rng -> q
    momentum_scale: float
    references: dict
    dmomenta: Optional[DMomentumData] = None
    storage_names: tuple = ()
    extras: dict = field(default_factory=dict)

    @property
    def system(self) -> ConstrainedSystem:
        return self.sym.system

    @property
    def k(self):
        return self.sym.k

    def sample_point(self, rng):
        """Point of M with all free momenta drawn at random."""
        q = self.sample_q(rng)
        p = self.momentum_scale * rng.normal(size=self.system.counts[0] + self.system.counts[1])
        return self.system.join(q, p)

    def sample_leaf_point(self, rng, level: MomentumLevel):
        """Point of J^{-1}(μ): horizontal momenta at random, J_i = c_i."""
        q = self.sample_q(rng)
        h, k = self.system.counts[0], self.system.counts[1]
        p = np.empty(h + k)
        p[:h] = self.momentum_scale * rng.normal(size=h)
        p[h:] = level.c if self.k else self.momentum_scale * rng.normal(size=k)
        return self.system.join(q, p)

    def sample_group(self, rng, count):
        return [self.sym.group.sample(rng) for _ in range(count)]

    def level(self, c):
        c = np.broadcast_to(np.asarray(c, dtype=float), (self.k,))
        return MomentumLevel(tuple(float(v) for v in c))

    def observe(self, state):
        return self.dynamics.observables(state)


def _random_rotation(rng):
    return Rotation.random(random_state=rng).as_matrix()


def rotation_taking_e3_to(v):
    """Rotation R with R e3 = v (unit v), by the shortest arc."""
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    e3 = np.array([0.0, 0.0, 1.0])
    axis = cross(e3, v)
    s, c = np.linalg.norm(axis), float(v[2])
    if s < 1e-14:
        return np.eye(3) if c > 0 else np.diag([1.0, -1.0, -1.0])
    k = hat(axis / s)
    return np.eye(3) + s * k + (1 - c) * k @ k


def _rz(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _check_positive(params, *names):
    for name in names:
        v = np.asarray(params[name], dtype=float)
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise InvalidParameter(f"{name} must be positive, got {params[name]!r}")


def _merge(defaults, overrides):
    out = dict(defaults)
    for key, value in (overrides or {}).items():
        if key not in defaults:
            raise InvalidParameter(f"unknown parameter {key!r}; expected one of {sorted(defaults)}")
        ref = defaults[key]
        if isinstance(ref, tuple):
            value = tuple(float(v) for v in value)
            if len(value) != len(ref):
                raise InvalidParameter(f"{key} must have {len(ref)} entries")
        elif isinstance(ref, str):
            value = str(value)
        else:
            value = float(value)
        out[key] = value
    return out


def _rk_state_rotation(state, sl):
    out = state.copy()
    out[sl] = polar(state[sl].reshape(3, 3)).reshape(9)
    return out


ROTATION_STORAGE = tuple(f"g{i}{j}" for i in range(1, 4) for j in range(1, 4))


# ---------------------------------------------------------------------------
# nonholonomic particle: Q = R^3, κ = Id, constraint ż = y ẋ

PARTICLE_DEFAULTS = {}


def _particle(params):
    chart = Chart("particle:Q", [Euclidean(3, ("x", "y", "z"))])

    def f(y):
        return 1.0 / (1.0 + y * y)

    def constraints(q):
        return np.array([[-q[1], 0.0, 1.0]])

    spec = NonholonomicSystemSpec("nonholonomic-particle", chart, lambda q: np.eye(3), lambda q: 0.0, constraints)

    def horizontal(q):
        return np.array([[0.0], [1.0], [0.0]])

    def symmetric(q):
        return np.sqrt(f(q[1])) * np.array([[1.0], [0.0], [q[1]]])

    def complement(q):
        return np.array([[-q[1]], [0.0], [1.0]])

    recipe = SplittingRecipe(horizontal, symmetric, complement)
    system = ConstrainedSystem(spec, recipe, np.zeros(3), PRECISE_FD)

    group = GroupActionSpec(
        lie_dim=2,
        generators=lambda q: np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]]),
        act=lambda e, q: q + np.array([e[0], 0.0, e[1]]),
        sample=lambda rng: rng.uniform(-2.0, 2.0, size=2),
        adjoint=lambda e: np.eye(2),
        exp=lambda xi: np.asarray(xi, dtype=float),
    )
    hgs = HGSBasis(lambda q: np.sqrt(f(q[1])) * np.array([[1.0], [q[1]]]))
    sym = SymmetricSystem(system, group, hgs)

    euclid = lambda n, names: Chart(n, [Euclidean(len(names), names)])  # noqa: E731
    quotient = QuotientData(
        quotient_chart=euclid("particle:M/G", ("y", "p_y", "J")),
        quotient_projection=lambda x: np.array([x[1], x[3], x[4]]),
        quotient_lift=lambda z: np.array([0.0, z[0], 0.0, z[1], z[2]]),
        leaf_chart=euclid("particle:leaf", ("y", "p_y")),
        leaf_projection=lambda x: np.array([x[1], x[3]]),
        leaf_lift=lambda level, z: np.array([0.0, z[0], 0.0, z[1], level.c[0]]),
        base_chart=euclid("particle:Q/G", ("y",)),
        base_projection=lambda q: np.array([q[1]]),
        base_lift=lambda qb: np.array([0.0, qb[0], 0.0]),
    )

    # natural state (x, y, z, ẋ, ẏ)
    def rhs(s):
        _, y, _, xd, yd = s
        return np.array([xd, yd, y * xd, -y * xd * yd / (1.0 + y * y), 0.0])

    def to_manifold(s):
        q = s[:3]
        v = np.array([s[3], s[4], s[1] * s[3]])
        return system.join(q, system.momenta_from_velocity(q, v))

    def from_manifold(x):
        v = system.velocity(x)
        return np.array([x[0], x[1], x[2], v[0], v[1]])

    def observables(s):
        y, xd, yd = s[1], s[3], s[4]
        return {"H": 0.5 * (xd * xd * (1 + y * y) + yd * yd), "J1": xd * np.sqrt(1 + y * y)}

    dynamics = Dynamics(("x", "y", "z", "xdot", "ydot"), rhs, lambda s: s, to_manifold, from_manifold,
                        observables, lambda s: bool(np.all(np.isfinite(s))))

    presets = {
        "default": np.array([0.0, 0.3, 0.0, 0.8, 0.05]),
        "zero": np.array([0.2, 0.3, -0.1, 0.0, 0.0]),
    }

    def sample_q(rng):
        return rng.uniform(-1.5, 1.5, size=3)

    references = {
        "particle.pi": _particle_reference_pi,
        "particle.pi_c": lambda z: wedge(np.array([1.0, 0.0]), np.array([0.0, 1.0])),
        "particle.level_generators": _particle_level_generators,
        "particle.to_reference_coords": lambda x: np.array([x[0], x[1], x[2], x[4] / np.sqrt(f(x[1])), x[3]]),
    }
    return ModelDescriptor("nonholonomic-particle", params, {}, sym, quotient, dynamics, presets, sample_q, 1.0,
                           references, storage_names=("x", "y", "z"))


def _particle_reference_pi(z):
    """π = Y∧∂p_x + ∂y∧∂p_y + y f p_x ∂p_x∧∂p_y on (x, y, z, p_x, p_y)."""
    _, y, _, px, _ = z
    e = np.eye(5)
    yv = e[0] + y * e[2]
    return wedge(yv, e[3]) + wedge(e[1], e[4]) + y / (1 + y * y) * px * wedge(e[3], e[4])


def _particle_level_generators(w):
    """Stated generators of the backward image on the level set with chart (x, y, z, p_y).

    Columns (X; α) in R^4 ⊕ R^4*: (−√f Y, 0), (∂y, dp_y), (∂p_y, dy), (0, dz − y dx).
    """
    _, y, _, _ = w
    sf = 1.0 / np.sqrt(1 + y * y)
    cols = np.zeros((8, 4))
    cols[:4, 0] = -sf * np.array([1.0, 0.0, y, 0.0])
    cols[1, 1], cols[4 + 3, 1] = 1.0, 1.0
    cols[3, 2], cols[4 + 1, 2] = 1.0, 1.0
    cols[4 + 2, 3], cols[4 + 0, 3] = 1.0, -y
    return cols


# ---------------------------------------------------------------------------
# Chaplygin ball: Q = SO(3) × R^2, left-invariant frame, G = SO(2) × R^2

CHAPLYGIN_DEFAULTS = {"inertia": (1.0, 1.5, 2.0), "mass": 1.0, "radius": 0.5, "splitting": "reference"}


def _chaplygin(params):
    _check_positive(params, "inertia", "mass", "radius")
    if params["splitting"] not in ("reference", "orthogonal"):
        raise InvalidParameter("splitting must be 'reference' or 'orthogonal'")
    inertia = np.diag(params["inertia"])
    m, r = params["mass"], params["radius"]

    def admissible(q):
        return abs(q[8]) > BOUNDARY_MARGIN  # γ3 = g[2, 2]

    chart = Chart("chaplygin:Q", [Rotations("left"), Euclidean(2, ("x", "y"))], admissible)
    kappa = np.zeros((5, 5))
    kappa[:3, :3] = inertia
    kappa[3, 3] = kappa[4, 4] = m

    def rows(q):
        g = q[:9].reshape(3, 3)
        return g[0], g[1], g[2]

    def constraints(q):
        a, b, _ = rows(q)
        return np.array([np.concatenate([-r * b, [1.0, 0.0]]), np.concatenate([r * a, [0.0, 1.0]])])

    def dframe(q):
        a, b, _ = rows(q)
        out = np.zeros((5, 3))
        out[:3] = np.eye(3)
        out[3] = r * b
        out[4] = -r * a
        return out

    def symmetric(q):
        return dframe(q) @ rows(q)[2][:, None]

    def horizontal(q):
        gam = rows(q)[2]
        big = dframe(q)
        y = big @ gam
        return np.stack([big[:, 0] - gam[0] * y, big[:, 1] - gam[1] * y], axis=1)

    def complement(q):
        out = np.zeros((5, 2))
        out[3, 0] = out[4, 1] = 1.0
        return out

    spec = NonholonomicSystemSpec("chaplygin-ball", chart, lambda q: kappa, lambda q: 0.0, constraints)
    recipe = SplittingRecipe(horizontal, symmetric, complement)
    if params["splitting"] == "orthogonal":
        recipe = orthogonal_recipe(spec.metric, horizontal, symmetric, complement)
    q_ref = np.concatenate([np.eye(3).reshape(9), [0.0, 0.0]])
    system = ConstrainedSystem(spec, recipe, q_ref, PRECISE_FD)

    def generators(q):
        gam = rows(q)[2]
        out = np.zeros((5, 3))
        out[:3, 0] = gam
        out[3, 0], out[4, 0] = -q[10], q[9]
        out[3, 1] = out[4, 2] = 1.0
        return out

    def act(e, q):
        theta, a, b = e
        g = _rz(theta) @ q[:9].reshape(3, 3)
        c, s = np.cos(theta), np.sin(theta)
        x, y = q[9], q[10]
        return np.concatenate([g.reshape(9), [c * x - s * y + a, s * x + c * y + b]])

    def adjoint(e):
        theta, a, b = e
        c, s = np.cos(theta), np.sin(theta)
        return np.array([[1.0, 0.0, 0.0], [b, c, -s], [-a, s, c]])

    group = GroupActionSpec(3, generators, act,
                            lambda rng: np.array([rng.uniform(-np.pi, np.pi), *rng.uniform(-2, 2, size=2)]),
                            adjoint, exp=lambda xi: np.asarray(xi, dtype=float))
    hgs = HGSBasis(lambda q: np.array([[1.0], [q[10]], [-q[9]]]))
    sym = SymmetricSystem(system, group, hgs)

    def lift_q(gam):
        g = rotation_taking_e3_to(gam).T
        return np.concatenate([g.reshape(9), [0.0, 0.0]])

    def gamma_from(qb):
        g1, g2 = qb[0], qb[1]
        rad = 1.0 - g1 * g1 - g2 * g2
        if rad <= 0:
            return np.full(3, np.nan)
        return np.array([g1, g2, np.sqrt(rad)])

    def quotient_admissible(z):
        return 1.0 - z[0] ** 2 - z[1] ** 2 > BOUNDARY_MARGIN ** 2

    names_q = ("gamma1", "gamma2", "M1", "M2", "M3")
    quotient = QuotientData(
        quotient_chart=Chart("chaplygin:M/G", [Euclidean(5, names_q)], quotient_admissible),
        quotient_projection=lambda x: np.array([x[6], x[7], x[11], x[12], x[13]]),
        quotient_lift=lambda z: np.concatenate([lift_q(gamma_from(z[:2])), z[2:5]]),
        leaf_chart=Chart("chaplygin:leaf", [Euclidean(4, names_q[:4])], quotient_admissible),
        leaf_projection=lambda x: np.array([x[6], x[7], x[11], x[12]]),
        leaf_lift=lambda level, z: np.concatenate([lift_q(gamma_from(z[:2])), z[2:4], level.c]),
        base_chart=Chart("chaplygin:Q/G", [Euclidean(2, ("gamma1", "gamma2"))], quotient_admissible),
        base_projection=lambda q: np.array([q[6], q[7]]),
        base_lift=lambda qb: lift_q(gamma_from(qb)),
    )

    e_gamma = lambda gam: inertia + m * r * r * (np.eye(3) - np.outer(gam, gam))  # noqa: E731

    # natural state (g, x, y, Ω)
    def rhs(s):
        g = s[:9].reshape(3, 3)
        om = s[11:14]
        a, b, gam = g
        gdot = g @ hat(om)
        gam_dot = cross(gam, om)
        e = e_gamma(gam)
        kvec = e @ om
        om_dot = np.linalg.solve(e, cross(kvec, om) + m * r * r * (om @ gam) * gam_dot)
        return np.concatenate([gdot.reshape(9), [r * (b @ om), -r * (a @ om)], om_dot])

    def to_manifold(s):
        q = s[:11]
        v = np.concatenate([s[11:14], [0.0, 0.0]])
        v[3:] = dframe(q)[3:] @ s[11:14]
        return system.join(q, system.momenta_from_velocity(q, v))

    def from_manifold(x):
        q, _ = system.split(x)
        return np.concatenate([q, system.velocity(x)[:3]])

    def observables(s):
        g = s[:9].reshape(3, 3)
        om = s[11:14]
        a, b, gam = g
        xd, yd = r * (b @ om), -r * (a @ om)
        return {"H": 0.5 * om @ inertia @ om + 0.5 * m * (xd * xd + yd * yd), "J1": float(inertia @ om @ gam)}

    def nat_admissible(s):
        return bool(np.all(np.isfinite(s))) and abs(s[8]) > BOUNDARY_MARGIN

    columns = ROTATION_STORAGE + ("x", "y", "Omega1", "Omega2", "Omega3")
    dynamics = Dynamics(columns, rhs, lambda s: _rk_state_rotation(s, slice(0, 9)), to_manifold, from_manifold,
                        observables, nat_admissible)

    g0 = Rotation.from_euler("zyx", [0.3, 0.4, 0.2]).as_matrix()
    presets = {
        "default": np.concatenate([g0.reshape(9), [0.1, -0.2], [0.7, -0.4, 1.1]]),
        "zero": np.concatenate([g0.reshape(9), [0.1, -0.2], [0.0, 0.0, 0.0]]),
    }

    def sample_q(rng):
        while True:
            g = _random_rotation(rng)
            if g[2, 2] > 0.3:  # upper hemisphere carries the quotient chart
                return np.concatenate([g.reshape(9), rng.uniform(-1.0, 1.0, size=2)])

    def sigma(gam):
        """σ¹, σ² on the (γ1, γ2) chart: dual to the images of X1, X2."""
        g3 = gam[2]
        return np.array([0.0, 1.0 / g3]), np.array([-1.0 / g3, 0.0])

    def chap_pi1(x):
        q, p = system.split(x)
        b = system.basis(q)
        gam = rows(q)[2]
        n = 8
        e = np.eye(n)
        cols = [np.concatenate([b.frame[:, j], np.zeros(3)]) for j in range(2)]
        out = wedge(cols[0], e[5]) + wedge(cols[1], e[6])
        out -= (p[0] * gam[0] - p[1] * gam[1]) / gam[2] * wedge(e[5], e[6])
        return out

    def chap_omega1(z):
        gam = gamma_from(z[:2])
        s1, s2 = sigma(gam)
        e = np.eye(4)
        s1f, s2f = np.concatenate([s1, [0, 0]]), np.concatenate([s2, [0, 0]])
        m1, m2 = z[2], z[3]
        return wedge(s1f, e[2]) + wedge(s2f, e[3]) + (m1 * gam[0] - m2 * gam[1]) / gam[2] * wedge(s1f, s2f)

    def chap_omega_can(z):
        """−d(M1σ¹ + M2σ²) on the leaf chart (γ1, γ2, M1, M2)."""
        gam = gamma_from(z[:2])
        s1, s2 = sigma(gam)
        e = np.eye(4)
        s1f, s2f = np.concatenate([s1, [0, 0]]), np.concatenate([s2, [0, 0]])
        m1, m2 = z[2], z[3]
        return wedge(s1f, e[2]) + wedge(s2f, e[3]) - (m1 * gam[0] + m2 * gam[1]) / gam[2] * wedge(s1f, s2f)

    def chap_curly_b(x):
        """(m r²<γ,Ω> + M3) γ3 σ¹∧σ² with σ^α the H-rows of the adapted coframe, on M."""
        q, p = system.split(x)
        b = system.basis(q)
        gam = rows(q)[2]
        om = system.velocity(x, b)[:3]
        coef = (m * r * r * (gam @ om) + p[2]) * gam[2]
        s1 = np.concatenate([b.dual[0], np.zeros(3)])
        s2 = np.concatenate([b.dual[1], np.zeros(3)])
        return coef * wedge(s1, s2)

    amat = inertia + m * r * r * np.eye(3)
    ainv = np.linalg.inv(amat)

    def chap_hat_b(point):
        """B̂_c on the leaf chart (γ1, γ2, M1, M2); point = (c, γ1, γ2, M1, M2)."""
        c, z = point[0], point[1:]
        gam = gamma_from(z[:2])
        s1, s2 = sigma(gam)
        mvec = np.array([z[2], z[3], -(z[2] * gam[0] + z[3] * gam[1]) / gam[2]])
        yg = 1.0 - m * r * r * (ainv @ gam @ gam)
        coef = (m * r * r * (ainv @ mvec @ gam) / yg + c / yg) * gam[2]
        s1f, s2f = np.concatenate([s1, [0, 0]]), np.concatenate([s2, [0, 0]])
        return coef * wedge(s1f, s2f)

    references = {
        "chap.pi1": chap_pi1,
        "chap.omega1": chap_omega1,
        "chap.omega_can": chap_omega_can,
        "chap.curly_b": chap_curly_b,
        "chap.hat_b": chap_hat_b,
        "chap.j": lambda x: float(system.split(x)[1][2]),
    }
    units = {"inertia": "kg m^2", "mass": "kg", "radius": "m"}
    return ModelDescriptor("chaplygin-ball", params, units, sym, quotient, dynamics, presets, sample_q, 1.0,
                           references, storage_names=ROTATION_STORAGE + ("x", "y"),
                           extras={"gamma_from": gamma_from, "leaf_sigma": sigma})


# ---------------------------------------------------------------------------
# homogeneous ball rolling inside a surface of revolution: Q = R^2 × SO(3), right frame

SURFACE_DEFAULTS = {"kappa0": 0.1, "mass": 1.0, "radius": 0.3, "inertia": 0.1, "gravity": 9.81}
TAU_RANGE = (0.02, 20.0)
TAU_REF = 1.0
CHEB_DEGREE = 40


def _surface_frames(x, y, n, rad):
    """Columns Y_x, Y_y, Y_n, Z1, Z2 in the frame (∂x, ∂y, X^R)."""
    e = np.eye(3)
    yn = np.concatenate([[0.0, 0.0], n])
    yx = np.concatenate([[1.0, 0.0], (n[1] * n - e[1]) / (rad * n[2])])
    yy = np.concatenate([[0.0, 1.0], -(n[0] * n - e[0]) / (rad * n[2])])
    z1 = np.concatenate([[0.0, 0.0], (e[1] - n[1] * n) / (rad * n[2])])
    z2 = np.concatenate([[0.0, 0.0], -(e[0] - n[0] * n) / (rad * n[2])])
    return yx, yy, yn, z1, z2


def _surface(params):
    _check_positive(params, "kappa0", "mass", "radius", "inertia")
    if not params["gravity"] >= 0:
        raise InvalidParameter("gravity must be non-negative")
    k0, m, rad, inert, ag = (params[k] for k in ("kappa0", "mass", "radius", "inertia", "gravity"))
    if k0 > 1.0 / rad:
        raise InvalidParameter("profile curvature kappa0 must not exceed 1/radius")
    # the gauge coefficients are tabulated on TAU_RANGE; the model lives strictly inside it
    tau_lo, tau_hi = 2.0 * TAU_RANGE[0], 0.5 * TAU_RANGE[1]

    def phi(s):
        return 0.5 * k0 * s

    dphi = 0.5 * k0

    def normal(x, y):
        s = x * x + y * y
        return np.array([2 * dphi * x, 2 * dphi * y, -1.0]) / np.sqrt(1.0 + 4 * dphi * dphi * s)

    def band_chart(lo, hi):
        return Chart("surface:Q", [Euclidean(2, ("x", "y")), Rotations("right")],
                     lambda q: lo < q[0] ** 2 + q[1] ** 2 < hi)

    chart = band_chart(tau_lo, tau_hi)
    admissible = chart.admissible

    def metric(q):
        n = normal(q[0], q[1])
        out = np.zeros((5, 5))
        out[:2, :2] = m / n[2] ** 2 * np.array([[1 - n[1] ** 2, n[0] * n[1]], [n[0] * n[1], 1 - n[0] ** 2]])
        out[2:, 2:] = inert * np.eye(3)
        return out

    def constraints(q):
        n = normal(q[0], q[1])
        return np.array([[1.0, 0.0, 0.0, rad * n[2], -rad * n[1]], [0.0, 1.0, -rad * n[2], 0.0, rad * n[0]]])

    def potential(q):
        return m * ag * phi(q[0] ** 2 + q[1] ** 2)

    spec = NonholonomicSystemSpec("ball-on-surface", chart, metric, potential, constraints)
    wide = NonholonomicSystemSpec("ball-on-surface", band_chart(0.5 * TAU_RANGE[0], 2.0 * TAU_RANGE[1]),
                                  metric, potential, constraints)

    def frames(q):
        return _surface_frames(q[0], q[1], normal(q[0], q[1]), rad)

    def horizontal(q):
        yx, yy, *_ = frames(q)
        return (q[0] * yx + q[1] * yy)[:, None]

    def preliminary_symmetric(q):
        yx, yy, yn, _, _ = frames(q)
        return np.stack([-q[1] * yx + q[0] * yy, yn], axis=1)

    def complement(q):
        *_, z1, z2 = frames(q)
        return np.stack([z1, z2], axis=1)

    def generators(q):
        g = q[2:].reshape(3, 3)
        out = np.zeros((5, 4))
        out[:, 0] = [-q[1], q[0], 0.0, 0.0, 1.0]
        out[2:, 1:] = -g
        return out

    def act(e, q):
        theta, h = e
        c, s = np.cos(theta), np.sin(theta)
        g = _rz(theta) @ q[2:].reshape(3, 3) @ h.T
        return np.concatenate([[c * q[0] - s * q[1], s * q[0] + c * q[1]], g.reshape(9)])

    def sample_group(rng):
        return (rng.uniform(-np.pi, np.pi), _random_rotation(rng))

    group = GroupActionSpec(4, generators, act, sample_group, exp=lambda xi: (xi[0], expm_so3(xi[1:])))
    q_ref = np.concatenate([[np.sqrt(TAU_REF), 0.0], np.eye(3).reshape(9)])
    prelim = ConstrainedSystem(wide, SplittingRecipe(horizontal, preliminary_symmetric, complement), q_ref, PRECISE_FD)
    r12, r21, fcoef = _surface_gauge_coefficients(prelim)

    def symmetric(q):
        u = np.log(q[0] ** 2 + q[1] ** 2)
        fy, fn = fcoef(u)  # each of shape (2,): (f_1, f_2)
        s = preliminary_symmetric(q)
        return s[:, :1] * fy[None, :] + s[:, 1:] * fn[None, :]

    system = ConstrainedSystem(spec, SplittingRecipe(horizontal, symmetric, complement), q_ref, PRECISE_FD)
    hgs = HGSBasis(lambda q: np.linalg.pinv(generators(q)) @ symmetric(q))
    sym = SymmetricSystem(system, group, hgs)

    def base_lift(qb):
        return np.concatenate([[np.exp(-qb[0]), 0.0], np.eye(3).reshape(9)])

    def tau_tilde(q):
        return -0.5 * np.log(q[0] ** 2 + q[1] ** 2)

    def band(z):
        return tau_lo < np.exp(-2 * z[0]) < tau_hi

    quotient = QuotientData(
        quotient_chart=Chart("surface:M/G", [Euclidean(4, ("tau_tilde", "p0", "J1", "J2"))], band),
        quotient_projection=lambda x: np.array([tau_tilde(x), x[11], x[12], x[13]]),
        quotient_lift=lambda z: np.concatenate([base_lift(z[:1]), z[1:4]]),
        leaf_chart=Chart("surface:leaf", [Euclidean(2, ("tau_tilde", "p0"))], band),
        leaf_projection=lambda x: np.array([tau_tilde(x), x[11]]),
        leaf_lift=lambda level, z: np.concatenate([base_lift(z[:1]), [z[1]], level.c]),
        base_chart=Chart("surface:Q/G", [Euclidean(1, ("tau_tilde",))], band),
        base_projection=lambda q: np.array([tau_tilde(q)]),
        base_lift=base_lift,
    )

    # natural state (x, y, g, ω) with ω the space angular velocity
    def dnormal(x, y, xd, yd):
        s = x * x + y * y
        w = 1.0 + 4 * dphi * dphi * s
        v = np.array([2 * dphi * x, 2 * dphi * y, -1.0])
        vd = np.array([2 * dphi * xd, 2 * dphi * yd, 0.0])
        return vd / np.sqrt(w) - v * (4 * dphi * dphi * (x * xd + y * yd)) / w ** 1.5

    def rhs(s):
        x, y = s[0], s[1]
        g = s[2:11].reshape(3, 3)
        om = s[11:14]
        n = normal(x, y)
        vel = -rad * cross(om, n)
        nd = dnormal(x, y, vel[0], vel[1])
        om_dot = (-m * rad * rad * cross(n, cross(om, nd)) + m * rad * ag * cross(n, [0.0, 0.0, 1.0]))
        om_dot /= inert + m * rad * rad
        return np.concatenate([vel[:2], (hat(om) @ g).reshape(9), om_dot])

    def velocity_of(s):
        n = normal(s[0], s[1])
        return np.concatenate([-rad * cross(s[11:14], n)[:2], s[11:14]])

    def to_manifold(s):
        q = s[:11]
        return system.join(q, system.momenta_from_velocity(q, velocity_of(s)))

    def from_manifold(x):
        q, _ = system.split(x)
        return np.concatenate([q, system.velocity(x)[2:]])

    def observables(s):
        q = s[:11]
        v = velocity_of(s)
        kap = metric(q)
        yx, yy, yn, _, _ = frames(q)
        ysym = -q[1] * yx + q[0] * yy
        p_y, p_n = ysym @ kap @ v, yn @ kap @ v
        fy, fn = fcoef(np.log(q[0] ** 2 + q[1] ** 2))
        j = fy * p_y + fn * p_n
        return {"H": 0.5 * v @ kap @ v + potential(q), "J1": float(j[0]), "J2": float(j[1])}

    def nat_admissible(s):
        return bool(np.all(np.isfinite(s))) and admissible(s[:11])

    columns = ("x", "y") + ROTATION_STORAGE + ("omega1", "omega2", "omega3")
    dynamics = Dynamics(columns, rhs, lambda s: _rk_state_rotation(s, slice(2, 11)), to_manifold, from_manifold,
                        observables, nat_admissible)
    g0 = Rotation.from_euler("zyx", [0.2, -0.3, 0.5]).as_matrix()
    presets = {
        "default": np.concatenate([[1.0, 0.1], g0.reshape(9), [-2.7, 0.4, 0.8]]),
        # at rest the ball rolls through the excluded bottom point, so the second preset is a slow orbit
        "slow": np.concatenate([[1.0, 0.1], g0.reshape(9), [-1.35, 0.2, 0.4]]),
    }

    def sample_q(rng):
        tau = np.exp(rng.uniform(np.log(0.25), np.log(4.0)))
        ang = rng.uniform(-np.pi, np.pi)
        return np.concatenate([np.sqrt(tau) * np.array([np.cos(ang), np.sin(ang)]), _random_rotation(rng).reshape(9)])

    def to_reference_coords(x):
        """(q, p0, p_Y, p_n) with p_Y, p_n the pairings with Y and Y_n."""
        q, p = system.split(x)
        fy, fn = fcoef(np.log(q[0] ** 2 + q[1] ** 2))
        fmat = np.stack([fy, fn], axis=1)  # J = fmat @ (p_Y, p_n)
        return np.concatenate([q, [p[0]], np.linalg.solve(fmat, p[1:])])

    def reference_pib(z):
        """π_B in the chart (q, p0, p_Y, p_n); frame fields lifted with (p0, p_Y, p_n) fixed."""
        q = z[:11]
        p0, py, pn = z[11:]
        u = np.log(q[0] ** 2 + q[1] ** 2)
        cols = [np.concatenate([horizontal(q)[:, 0], np.zeros(3)])]
        s = preliminary_symmetric(q)
        cols += [np.concatenate([s[:, j], np.zeros(3)]) for j in range(2)]
        e = np.eye(8)
        out = wedge(cols[0], e[5]) + wedge(cols[1], e[6]) + wedge(cols[2], e[7])
        out += pn * float(r21(u)) * wedge(e[5], e[6]) + py * float(r12(u)) * wedge(e[5], e[7])
        return out

    def reduced_dirac_reference(z):
        """Columns (X; α) on the leaf chart (τ̃, p0): (−∂p0, dτ̃), (∂τ̃, dp0)."""
        return np.array([[0.0, 1.0], [-1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])

    references = {
        "surface.pib": reference_pib,
        "surface.to_reference_coords": to_reference_coords,
        "surface.reduced_dirac": reduced_dirac_reference,
        "surface.omega_can": lambda z: np.array([[0.0, 1.0], [-1.0, 0.0]]),
        "surface.R": lambda tau: np.array([float(r12(np.log(tau))), float(r21(np.log(tau)))]),
        "surface.f": lambda tau: np.stack(fcoef(np.log(tau)), axis=1),
    }
    units = {"kappa0": "1/m", "mass": "kg", "radius": "m", "inertia": "kg m^2", "gravity": "m/s^2"}
    return ModelDescriptor("ball-on-surface", params, units, sym, quotient, dynamics, presets, sample_q, 1.0,
                           references, storage_names=("x", "y") + ROTATION_STORAGE,
                           extras={"preliminary": prelim, "normal": normal})


def momentum_equation_coefficients(prelim: ConstrainedSystem, tau):
    """R12, R21 from ṗ_n = −R12 p_Y ẋ0 and ṗ_Y = −R21 p_n ẋ0 at (x, y, g) = (√τ, 0, Id).

    The coefficients are read off the generic nonholonomic vector field by polarization
    of its momentum components, which are quadratic in (p0, p_Y, p_n).
    """
    q = np.concatenate([[np.sqrt(tau), 0.0], np.eye(3).reshape(9)])
    b = prelim.basis(q)
    k00 = b.blocks[0, 0]
    n = prelim.chart.dim

    def pdot(p):
        return prelim.x_nh(prelim.join(q, p))[n:]

    plus_y, minus_y = pdot([1.0, 1.0, 0.0]), pdot([1.0, -1.0, 0.0])
    plus_n, minus_n = pdot([1.0, 0.0, 1.0]), pdot([1.0, 0.0, -1.0])
    r12 = -k00 * 0.5 * (plus_y[2] - minus_y[2])
    r21 = -k00 * 0.5 * (plus_n[1] - minus_n[1])
    return r12, r21


def _surface_gauge_coefficients(prelim):
    """Chebyshev interpolants in u = ln τ of R12, R21 and of two solutions f_i of the gauge ODE."""
    cheb = np.polynomial.chebyshev.Chebyshev
    dom = [np.log(TAU_RANGE[0]), np.log(TAU_RANGE[1])]
    deg = CHEB_DEGREE

    def table(u):
        vals = np.array([momentum_equation_coefficients(prelim, np.exp(v)) for v in np.atleast_1d(u)])
        return vals

    nodes = cheb.basis(deg + 1, domain=dom).roots()
    vals = table(nodes)
    r12 = cheb.fit(nodes, vals[:, 0], deg, domain=dom)
    r21 = cheb.fit(nodes, vals[:, 1], deg, domain=dom)

    # X0(f) = 2 df/du, so df^Y/du = R12 f^n / 2 and df^n/du = R21 f^Y / 2
    def ode(u, y):
        a, b = float(r12(u)), float(r21(u))
        return np.array([a * y[1], b * y[0], a * y[3], b * y[2]]) / 2.0

    u0 = np.log(TAU_REF)
    y0 = np.array([1.0, 0.0, 0.0, 1.0])  # (f1^Y, f1^n, f2^Y, f2^n)
    unodes = cheb.basis(CHEB_DEGREE + 1, domain=dom).roots()
    sol = np.empty((unodes.size, 4))
    for mask, end in ((unodes >= u0, dom[1]), (unodes < u0, dom[0])):
        pts = np.sort(unodes[mask])
        if end < u0:
            pts = pts[::-1]
        res = solve_ivp(ode, (u0, end), y0, method="DOP853", t_eval=pts, rtol=1e-13, atol=1e-14)
        if not res.success:
            raise ModelError(f"gauge ODE integration failed: {res.message}")
        order = np.argsort(res.t)
        idx = np.searchsorted(unodes, res.t[order])
        sol[idx] = res.y.T[order]
    fits = [cheb.fit(unodes, sol[:, j], CHEB_DEGREE, domain=dom) for j in range(4)]
    wronskian = sol[:, 0] * sol[:, 3] - sol[:, 1] * sol[:, 2]
    if np.min(np.abs(wronskian)) <= 1e-8:
        raise ModelError("gauge ODE solutions are not independent")

    def fcoef(u):
        f1y, f1n, f2y, f2n = (float(fn(u)) for fn in fits)
        return np.array([f1y, f2y]), np.array([f1n, f2n])

    return r12, r21, fcoef


# ---------------------------------------------------------------------------
# rigid body rolling inside a sphere (no horizontal gauge momenta; one D-momentum)

BMF_DEFAULTS = {"inertia": (1.0, 1.5, 2.0), "mass": 1.0, "outer_radius": 0.5, "k": -1.0}
# the adapted frame has large higher derivatives; a finer stencil keeps truncation near 1e-9
BMF_FD = FiniteDifference(step=1.5e-4, order=4)


def _bmf(params):
    _check_positive(params, "mass", "outer_radius")
    inertia = np.asarray(params["inertia"], dtype=float)
    if inertia.shape != (3,) or np.any(inertia <= 0):
        raise InvalidParameter("inertia must be three positive principal moments")
    kk = float(params["k"])
    if kk == 0.0 or kk == 1.0:
        raise InvalidParameter("k must differ from 0 and 1")
    m, r_out = float(params["mass"]), float(params["outer_radius"])
    rho = r_out / abs(kk)  # |r|
    r0 = r_out * (kk - 1.0) / kk  # distance from the sphere centre to the contact, from k = R0 / (R0 - r0)
    ii = np.diag(inertia)
    e_mat = ii + m * r0 * r0 * np.eye(3)
    a_mat = np.trace(e_mat) * np.eye(3) - 2.0 * e_mat

    def admissible(q):
        return abs(q[11]) > BOUNDARY_MARGIN * rho

    chart = Chart("bmf:Q", [Rotations("left"), SpherePatch(rho)], admissible)

    def unpack(q):
        return q[:9].reshape(3, 3), q[9:12]

    def jac(r):
        return np.array([[1.0, 0.0], [0.0, 1.0], [-r[0] / r[2], -r[1] / r[2]]])

    def metric(q):
        _, r = unpack(q)
        out = np.zeros((5, 5))
        out[:3, :3] = ii
        j = jac(r)
        out[3:, 3:] = m * j.T @ j
        return out

    def d_frame(q):
        """Columns X_i: body angular velocity e_i with the rolling velocity of r."""
        g, r = unpack(q)
        out = np.zeros((5, 3))
        out[:3, :3] = np.eye(3)
        out[3:, :] = (1.0 - kk) * (-hat(r) @ g)[:2]  # ((g e_i) × r)[:2]
        return out

    def constraints(q):
        g, r = unpack(q)
        return np.hstack([(1.0 - kk) * (hat(r) @ g)[:2], np.eye(2)])

    spec = NonholonomicSystemSpec("bmf", chart, metric, lambda q: 0.0, constraints)

    def normal(q):
        g, r = unpack(q)
        return (kk / r_out) * g.T @ r

    def e_n(n):
        return ii + m * r0 * r0 * (np.eye(3) - np.outer(n, n))

    def g_h(n):
        an = a_mat @ n
        en = e_n(n)
        return float((ii @ an) @ n / (en @ an @ an)), cross(ii @ n, en @ an)

    def generators(q):
        g, r = unpack(q)
        out = np.zeros((5, 3))
        out[:3, :] = g.T
        out[3:, :] = (-hat(r))[:2]  # columns (e_i × r)[:2]
        return out

    def horizontal(q):
        n = normal(q)
        gn, h = g_h(n)
        return d_frame(q) @ np.stack([n - gn * (a_mat @ n), h], axis=1)

    def symmetric(q):
        return d_frame(q) @ normal(q)[:, None]

    def complement(q):
        v = generators(q)
        r3 = q[11]
        return np.stack([-v[:, 1] / r3, v[:, 0] / r3], axis=1)

    n_ref = np.array([0.3, 0.2, 1.0]) / np.linalg.norm([0.3, 0.2, 1.0])  # off the principal axes
    q_ref = np.concatenate([np.eye(3).reshape(9), (r_out / kk) * n_ref])
    system = ConstrainedSystem(spec, SplittingRecipe(horizontal, symmetric, complement), q_ref, BMF_FD)

    def act(h, q):
        g, r = unpack(q)
        return np.concatenate([(h @ g).reshape(9), h @ r])

    group = GroupActionSpec(3, generators, act, _random_rotation, exp=expm_so3)
    sym = SymmetricSystem(system, group, None)
    dmomenta = DMomentumData(lambda q: d_frame(q) @ (a_mat @ normal(q))[:, None], ("F",))

    def n_from_chart(z):
        return np.array([z[0], z[1], np.sqrt(1.0 - z[0] ** 2 - z[1] ** 2)])

    def base_lift(qb):
        n = n_from_chart(qb)
        return np.concatenate([np.eye(3).reshape(9), (r_out / kk) * n])

    def cap(z):
        return 1.0 - z[0] ** 2 - z[1] ** 2 > BOUNDARY_MARGIN ** 2

    def d_pairings(x):
        """M_i = <m, X_i>."""
        q, _ = system.split(x)
        return d_frame(q).T @ system.covector(x)

    def coefficient_matrix(n):
        gn, h = g_h(n)
        return np.stack([n - gn * (a_mat @ n), h, n], axis=1)  # columns: U1, U2, Y in the X basis

    def quotient_lift(z):
        q = base_lift(z[:2])
        return system.join(q, coefficient_matrix(normal(q)).T @ z[2:5])

    def leaf_lift(level, z):
        q = base_lift(z[:2])
        gn, _ = g_h(normal(q))
        c = float(level.c[0]) if len(level.c) else 0.0
        return system.join(q, [z[2], z[3], z[2] + gn * c])

    quotient = QuotientData(
        quotient_chart=Chart("bmf:M/G", [Euclidean(5, ("n1", "n2", "M1", "M2", "M3"))], cap),
        quotient_projection=lambda x: np.concatenate([normal(x[:12])[:2], d_pairings(x)]),
        quotient_lift=quotient_lift,
        leaf_chart=Chart("bmf:leaf", [Euclidean(4, ("n1", "n2", "p1", "p2"))], cap),
        leaf_projection=lambda x: np.concatenate([normal(x[:12])[:2], x[12:14]]),
        leaf_lift=leaf_lift,
        base_chart=Chart("bmf:Q/G", [Euclidean(2, ("n1", "n2"))], cap),
        base_projection=lambda q: normal(q)[:2],
        base_lift=base_lift,
    )

    # natural state (g, r, Ω) with Ω the body angular velocity
    def rhs(s):
        g, r, om = s[:9].reshape(3, 3), s[9:12], s[12:15]
        n = (kk / r_out) * g.T @ r
        nd = -kk * cross(om, n)
        en = e_n(n)
        om_dot = np.linalg.solve(en, cross(en @ om, om) - m * r0 * r0 * cross(n, cross(om, nd)))
        rd = (1.0 - kk) * cross(g @ om, r)
        return np.concatenate([(g @ hat(om)).reshape(9), rd, om_dot])

    def renormalize(s):
        out = s.copy()
        out[:9] = polar(s[:9].reshape(3, 3)).reshape(9)
        out[9:12] = s[9:12] * (rho / np.linalg.norm(s[9:12]))
        return out

    def to_manifold(s):
        q = s[:12]
        v = d_frame(q) @ s[12:15]
        return system.join(q, system.momenta_from_velocity(q, v))

    def from_manifold(x):
        q, _ = system.split(x)
        return np.concatenate([q, system.velocity(x)[:3]])

    def observables(s):
        g, r, om = s[:9].reshape(3, 3), s[9:12], s[12:15]
        n = (kk / r_out) * g.T @ r
        mm = e_n(n) @ om
        return {"H": 0.5 * float(mm @ om), "F": float(a_mat @ mm @ n)}

    def nat_admissible(s):
        return bool(np.all(np.isfinite(s))) and admissible(s[:12])

    columns = ROTATION_STORAGE + ("r1", "r2", "r3", "Omega1", "Omega2", "Omega3")
    dynamics = Dynamics(columns, rhs, renormalize, to_manifold, from_manifold, observables, nat_admissible)

    g0 = Rotation.from_euler("zyx", [0.4, -0.2, 0.3]).as_matrix()
    n0 = np.array([0.5, -0.3, 1.0])
    n0 /= np.linalg.norm(n0)
    r_init = (r_out / kk) * g0 @ n0
    om0 = np.array([0.18, -0.15, 0.27])  # slow enough that r stays in the r3 < 0 chart for t <= 10
    f_of = lambda om: float(a_mat @ e_n(n0) @ om @ n0)  # noqa: E731
    om_zero = om0 - f_of(om0) / f_of(n0) * n0
    presets = {
        "default": np.concatenate([g0.reshape(9), r_init, om0]),
        "zero-level": np.concatenate([g0.reshape(9), r_init, om_zero]),
    }

    def sample_q(rng):
        while True:
            v = rng.normal(size=3)
            n = v / np.linalg.norm(v)
            # the frame U1, U2 degenerates where n meets a principal axis
            if n[2] < 0.3 or np.max(np.abs(n)) > 0.9:
                continue
            g = _random_rotation(rng)
            r = (r_out / kk) * g @ n
            if abs(r[2]) > 0.3 * rho:
                return np.concatenate([g.reshape(9), r])

    def reduced_rhs(z):
        n, mm = n_from_chart(z[:2]), np.asarray(z[2:5], dtype=float)
        om = np.linalg.solve(e_n(n), mm)
        return np.concatenate([-cross(n, om)[:2], cross(mm, om)])

    def kappa_diag(n):
        c = coefficient_matrix(n)
        return np.diag(c.T @ e_n(n) @ c)

    def h0_red(z):
        k = kappa_diag(n_from_chart(z[:2]))
        return 0.5 * (z[2] ** 2 / k[0] + z[3] ** 2 / k[1])

    def hamiltonian(z):
        """Energy on the chart (n1, n2, p1, p2, p_Y)."""
        k = kappa_diag(n_from_chart(z[:2]))
        return 0.5 * (z[2] ** 2 / k[0] + z[3] ** 2 / k[1] + (z[4] - z[2]) ** 2 / (k[2] - k[0]))

    references = {
        "bmf.rhs": reduced_rhs,
        "bmf.g_h": lambda z: np.concatenate([[g_h(n_from_chart(z))[0]], g_h(n_from_chart(z))[1]]),
        "bmf.F": lambda z: float(a_mat @ np.asarray(z[2:5]) @ n_from_chart(z[:2])),
        "bmf.F_coords": lambda z: (z[4] - z[2]) / g_h(n_from_chart(z[:2]))[0],
        "bmf.h0_red": h0_red,
        "bmf.hamiltonian": hamiltonian,
    }
    units = {"inertia": "kg m^2", "mass": "kg", "outer_radius": "m", "k": "1"}
    return ModelDescriptor("bmf-sphere", params, units, sym, quotient, dynamics, presets, sample_q, 1.0,
                           references, dmomenta=dmomenta,
                           storage_names=ROTATION_STORAGE + ("r1", "r2", "r3"),
                           extras={"normal": normal, "g_h": g_h, "A": a_mat, "E": e_mat, "d_frame": d_frame})


# ---------------------------------------------------------------------------
# registry

_BUILDERS = {
    "nonholonomic-particle": (_particle, PARTICLE_DEFAULTS),
    "chaplygin-ball": (_chaplygin, CHAPLYGIN_DEFAULTS),
    "ball-on-surface": (_surface, SURFACE_DEFAULTS),
    "bmf-sphere": (_bmf, BMF_DEFAULTS),
}
MODEL_NAMES = tuple(_BUILDERS)


def default_parameters(name):
    if name not in _BUILDERS:
        raise UnknownModel(f"unknown model {name!r}; expected one of {list(MODEL_NAMES)}")
    return dict(_BUILDERS[name][1])


def get_model(name, overrides=None) -> ModelDescriptor:
    """Descriptor for a built-in model; cached per (name, parameters)."""
    params = _merge(default_parameters(name), overrides)
    return _build(name, json.dumps(params, sort_keys=True))


@functools.lru_cache(maxsize=None)
def _build(name, params_json):
    params = {k: tuple(v) if isinstance(v, list) else v for k, v in json.loads(params_json).items()}
    builder, _ = _BUILDERS[name]
    return builder(params)


def reference_eval(model: ModelDescriptor, expression_id, point):
    """Evaluate a closed-form reference expression of the model at a point of its chart."""
    try:
        fn = model.references[expression_id]
    except KeyError:
        raise UnknownExpression(f"{expression_id!r} is not defined for {model.name}; "
                                f"available: {sorted(model.references)}") from None
    return fn(point)
