"""Momentum maps, gauge 2-forms, level sets, reduced forms and the cotangent identification.

Everything is evaluated pointwise on the chart of the constraint manifold M
built by mechanics.ConstrainedSystem. Adapted frames are assumed G-invariant,
so the lifted action fixes the momentum coordinates and generators on M are
(η_Q, 0).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .geometry import (Chart, Euclidean, GeometryError, exterior_derivative_at, exterior_derivative_rows, intersect,
                       lie_bracket_at, null_space, orth, pushforward_matrix, rank, subspace_distance)
from .mechanics import AdaptedBasis, ConstrainedSystem

LEVEL_TOL = 1e-9


class ReductionError(GeometryError):
    pass


class NotOnLevelSet(ReductionError):
    pass


class NotWellDefined(ReductionError):
    pass


class Degenerate(ReductionError):
    pass


class HypothesisFailed(ReductionError):
    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


@dataclass(frozen=True)
class GroupActionSpec:
    lie_dim: int
    generators: Callable  # q -> (n, lie_dim), columns η_Q for a basis of the Lie algebra
    act: Callable  # (element, q) -> q
    sample: Callable  # rng -> element
    adjoint: Optional[Callable] = None  # element -> Ad matrix
    exp: Optional[Callable] = None  # Lie-algebra coefficients -> element, exact to first order


@dataclass(frozen=True)
class HGSBasis:
    sections: Callable  # q -> (lie_dim, k) Lie-algebra coefficients of ξ_i(q)


@dataclass(frozen=True)
class MomentumLevel:
    coefficients: tuple

    @classmethod
    def zero(cls, k):
        return cls(tuple([0.0] * k))

    @property
    def c(self):
        return np.asarray(self.coefficients, dtype=float)


@dataclass
class ConnectionData:
    basis: AdaptedBasis
    generators: np.ndarray
    p_d: np.ndarray
    p_w: np.ndarray
    p_v: np.ndarray
    p_h: np.ndarray
    a_w: np.ndarray  # (g, n): rows are Lie-algebra components of A_W
    a_v: np.ndarray


class SymmetricSystem:
    """Nonholonomic system with a free G-action and a horizontal gauge momentum basis."""

    def __init__(self, system: ConstrainedSystem, group: GroupActionSpec, hgs: Optional[HGSBasis] = None):
        self.system = system
        self.group = group
        self.hgs = hgs

    @property
    def chart(self):
        return self.system.chart

    @property
    def mchart(self):
        return self.system.mchart

    @property
    def fd(self):
        return self.system.fd

    @property
    def k(self):
        return 0 if self.hgs is None else self.system.counts[1]

    # -- group on M ----------------------------------------------------------
    def act(self, element, x):
        q, p = self.system.split(x)
        return self.system.join(self.group.act(element, q), p)

    def generator_on_M(self, x, xi):
        q, p = self.system.split(x)
        v = self.group.generators(q) @ np.asarray(xi, dtype=float)
        return np.concatenate([v, np.zeros(len(p))])

    def hgs_generators_on_M(self, x):
        q, p = self.system.split(x)
        ys = self.group.generators(q) @ self.hgs.sections(q)
        return np.vstack([ys, np.zeros((len(p), ys.shape[1]))])

    # -- connections -----------------------------------------------------------
    def connection(self, q) -> ConnectionData:
        b = self.system.basis(q)
        n_mat = np.asarray(self.group.generators(q), dtype=float)
        pinv = np.linalg.pinv(n_mat)
        p_d, p_w = b.projector("H", "S"), b.projector("W")
        p_v, p_h = b.projector("S", "W"), b.projector("H")
        return ConnectionData(b, n_mat, p_d, p_w, p_v, p_h, pinv @ p_w, pinv @ p_v)

    def _d_rows(self, rows, q):
        return exterior_derivative_rows(rows, self.chart, q, self.fd)

    def curvature_w(self, q, con=None):
        """K_W^b = dA_W^b restricted to D, as (g, n, n)."""
        con = self.connection(q) if con is None else con
        da = self._d_rows(lambda y: self.connection(y).a_w, q)
        return np.einsum("ij,bik,kl->bjl", con.p_d, da, con.p_d)

    def curvature_v(self, q, con=None):
        con = self.connection(q) if con is None else con
        da = self._d_rows(lambda y: self.connection(y).a_v, q)
        return np.einsum("ij,bik,kl->bjl", con.p_h, da, con.p_h)

    def d_y_dual(self, q):
        """dY^i for the S-block of the dual coframe, as (k, n, n)."""
        def rows(y):
            b = self.system.basis(y)
            return b.dual[b.S]
        return self._d_rows(rows, q)

    # -- momentum map ------------------------------------------------------------
    def j_raw(self, x, xi):
        """<J(m), ξ> = <m, ξ_Q>."""
        q, _ = self.system.split(x)
        return float(self.system.covector(x) @ (self.group.generators(q) @ np.asarray(xi, dtype=float)))

    def j_lie(self, x):
        q, _ = self.system.split(x)
        return self.group.generators(q).T @ self.system.covector(x)

    def j_values(self, x):
        q, _ = self.system.split(x)
        ys = self.group.generators(q) @ self.hgs.sections(q)
        return ys.T @ self.system.covector(x)

    def d_j(self, x):
        return exterior_derivative_at(self.j_values, self.mchart, x, 0, self.fd).T  # (k, dim M)

    def momentum_residuals(self, pi, x):
        dj = self.d_j(x)
        gens = self.hgs_generators_on_M(x)
        return np.array([np.linalg.norm(pi.T @ dj[i] + gens[:, i]) for i in range(dj.shape[0])])

    # -- gauge forms ---------------------------------------------------------------
    def b1_q(self, x, con=None):
        q, p = self.system.split(x)
        con = self.connection(q) if con is None else con
        jl = con.generators.T @ self.system.covector(x, con.basis)
        kw = self.curvature_w(q, con)
        dy = self.d_y_dual(q)
        b = con.basis
        dyc = np.einsum("ij,bik,kl->bjl", con.p_d, dy, con.p_d)
        return np.einsum("b,bjk->jk", jl, kw) + np.einsum("i,ijk->jk", p[b.S], dyc)

    def lift_form(self, form_q, x):
        r = len(x) - self.chart.size
        n = self.chart.dim
        out = np.zeros((n + r, n + r))
        out[:n, :n] = form_q
        return out

    def b1(self, x):
        return self.lift_form(self.b1_q(x), x)

    def curly_b_q(self, x, xnh=None):
        q, _ = self.system.split(x)
        con = self.connection(q)
        b = con.basis
        n = self.chart.dim
        if xnh is None:
            xnh = self.system.x_nh(x)
        qdot = xnh[:n]
        jl = con.generators.T @ self.system.covector(x, b)
        kv = np.einsum("b,bjk->jk", jl, self.curvature_v(q, con))
        a = con.p_v @ qdot
        kw = self.curvature_w(q, con)
        dy = self.d_y_dual(q)
        xi = self.hgs.sections(q) if self.hgs is not None else np.linalg.pinv(con.generators) @ b.frame[:, b.S]
        # Ξ(u) = K_W(a, u) + dY^i(P_D a, P_D u) ξ_i, as a (g, n) matrix acting on u
        m_xi = np.einsum("j,bjk->bk", a, kw)
        pa = con.p_d @ a
        m_xi += np.einsum("bi,j,ijk,kl->bl", xi, pa, dy, con.p_d)
        t = con.p_h.T @ b.kappa @ con.generators @ m_xi @ con.p_h
        return -kv - 0.5 * (t - t.T)

    def curly_b(self, x, xnh=None):
        return self.lift_form(self.curly_b_q(x, xnh), x)

    def invariance_residual(self, form_q_fn, x, elements):
        """Max change of adapted-frame components of a form on Q across group elements."""
        q, _ = self.system.split(x)
        ref = form_q_fn(x)
        b = self.system.basis(q)
        ref_ad = b.frame.T @ ref @ b.frame
        worst = 0.0
        for g in elements:
            y = self.act(g, x)
            by = self.system.basis(self.system.split(y)[0])
            val = by.frame.T @ form_q_fn(y) @ by.frame
            worst = max(worst, float(np.max(np.abs(val - ref_ad))))
        return worst

    def dynamical_residual(self, two_form, x, xnh=None):
        xnh = self.system.x_nh(x) if xnh is None else xnh
        return float(np.linalg.norm(two_form.T @ xnh))

    # -- levels ---------------------------------------------------------------------
    def check_level(self, level: MomentumLevel, x):
        j = self.j_values(x)
        err = float(np.max(np.abs(j - level.c), initial=0.0))
        if err > LEVEL_TOL:
            raise NotOnLevelSet(f"|J - c| = {err:.3e}")

    def level_tangent(self, level: MomentumLevel, x):
        """(𝓒_μ, 𝓢_μ, 𝓦_μ) as column frames in the M frame."""
        self.check_level(level, x)
        q, p = self.system.split(x)
        tj = null_space(self.d_j(x))
        c = self.system.c_basis(x)
        c_mu = intersect(tj, c)
        expected = c.shape[1] - self.k
        if c_mu.shape[1] != expected:
            raise Degenerate(f"𝓒_μ has rank {c_mu.shape[1]}, expected {expected}")
        s_mu = orth(self.hgs_generators_on_M(x))
        b = self.system.basis(q)
        w = b.frame[:, b.W]
        w_mu = np.vstack([w, np.zeros((len(p), w.shape[1]))])
        return c_mu, s_mu, w_mu

    def shift(self, level: MomentumLevel, x):
        self.check_level(level, x)
        q, p = self.system.split(x)
        b = self.system.basis(q)
        p = p.copy()
        p[b.S] -= level.c
        return self.system.join(q, p)

    def gauge_form(self, x, which, omega=None, xnh=None):
        om = self.system.omega(x) if omega is None else omega
        w = om + self.b1(x)
        if which == "B":
            w = w + self.curly_b(x, xnh)
        elif which != "one":
            raise ValueError(which)
        return w

    def reduced_form(self, level, x, which, projection, omega=None):
        """Form on the leaf chart with ρ*ω̄ = (Ω + B)|𝓒_μ; returns (ω̄, residuals)."""
        c_mu, s_mu, _ = self.level_tangent(level, x)
        w = self.gauge_form(x, which, omega)
        t = pushforward_matrix(projection, self.mchart, x, list(c_mu.T), self.fd)
        restricted = c_mu.T @ w @ c_mu
        if rank(t) != t.shape[0]:
            raise Degenerate("leaf projection is not a submersion on 𝓒_μ")
        tp = np.linalg.pinv(t)
        wbar = tp.T @ restricted @ tp
        wbar = 0.5 * (wbar - wbar.T)
        if rank(wbar) != wbar.shape[0]:
            raise Degenerate("reduced form is degenerate")
        residuals = {
            "null_contraction": float(np.max(np.abs(s_mu.T @ w @ c_mu), initial=0.0)),
            "descent": float(np.max(np.abs(t.T @ wbar @ t - restricted), initial=0.0)),
        }
        return wbar, residuals

    def reduced_hamilton_residual(self, level, x, projection, omega=None):
        """|i_{X_red} ω^B_μ − dH_red| on the leaf chart."""
        om = self.system.omega(x) if omega is None else omega
        dh = self.system.d_energy(x)
        xnh = self.system.pi_nh(x, om) @ dh
        c_mu, _, _ = self.level_tangent(level, x)
        w = self.gauge_form(x, "B", om, xnh)
        t = pushforward_matrix(projection, self.mchart, x, list(c_mu.T), self.fd)
        tp = np.linalg.pinv(t)
        wbar = tp.T @ (c_mu.T @ w @ c_mu) @ tp
        wbar = 0.5 * (wbar - wbar.T)
        dh_bar = tp.T @ (c_mu.T @ dh)
        x_red = pushforward_matrix(projection, self.mchart, x, [xnh], self.fd)[:, 0]
        return float(np.max(np.abs(wbar.T @ x_red - dh_bar)))

    # -- identification with T*(Q/G) -----------------------------------------------
    def phi0(self, x, base_projection):
        """(q̄, p̄) with <p̄, Tρ(v)> = <m, v> for v in D; requires m ∈ J⁻¹(0)."""
        q, p = self.system.split(x)
        b = self.system.basis(q)
        t = pushforward_matrix(base_projection, self.chart, q, list(b.frame[:, b.H].T), self.fd)
        pbar = np.linalg.solve(t.T, p[b.H])
        return np.concatenate([np.asarray(base_projection(q), dtype=float), pbar])

    def phi_mu(self, level, x, base_projection):
        return self.phi0(self.shift(level, x), base_projection)

    def _phi_extension(self, level, base_projection):
        # same formula off the leaf: uses only (q, p_α)
        def fn(y):
            return self.phi0(y, base_projection)
        return fn

    def identification_residuals(self, level, x, base_projection, hat_b=None, omega=None):
        """(φ*ω_can − ω¹_μ, φ*(ω_can + B̂) − ω^B_μ) on 𝓒_μ, max abs components."""
        om = self.system.omega(x) if omega is None else omega
        c_mu, _, _ = self.level_tangent(level, x)
        tphi = pushforward_matrix(self._phi_extension(level, base_projection), self.mchart, x, list(c_mu.T), self.fd)
        hbar = tphi.shape[0] // 2
        can = canonical_form(hbar)
        w1 = c_mu.T @ self.gauge_form(x, "one", om) @ c_mu
        r1 = float(np.max(np.abs(tphi.T @ can @ tphi - w1)))
        out = {"phi_one": r1}
        if hat_b is not None:
            xbar = self.phi_mu(level, x, base_projection)
            bhat = hat_b(xbar)
            wb = c_mu.T @ self.gauge_form(x, "B", om) @ c_mu
            out["phi_B"] = float(np.max(np.abs(tphi.T @ (can + bhat) @ tphi - wb)))
            cb = c_mu.T @ self.curly_b(x) @ c_mu
            out["hat_b_vs_curly_b"] = float(np.max(np.abs(tphi.T @ bhat @ tphi - cb)))
        return out

    def hat_b(self, level, xbar, base_lift, base_projection):
        """Coordinate formula for B̂_μ on the T*(Q/G) chart (q̄, p̄)."""
        hbar = len(xbar) // 2
        qbar, pbar = xbar[:hbar], xbar[hbar:]
        q = base_lift(qbar)
        b = self.system.basis(q)
        t = pushforward_matrix(base_projection, self.chart, q, list(b.frame[:, b.H].T), self.fd)
        xbar_forms = np.linalg.inv(t)  # rows X̄^α in q̄ chart components
        p_alpha = t.T @ pbar
        cfun = self.system.structure_functions(q)
        kap = b.blocks
        h_idx = np.arange(b.h)
        s_idx = np.arange(b.h, b.d)
        w_idx = np.arange(b.d, kap.shape[0])
        v_idx = np.arange(b.h, kap.shape[0])
        k_hh_inv = np.linalg.inv(kap[np.ix_(h_idx, h_idx)])
        coef = p_alpha @ k_hh_inv @ kap[np.ix_(h_idx, w_idx)]  # p_γ κ^{γδ} κ_{δa}
        bmat = np.einsum("a,aij->ij", coef, cfun[np.ix_(w_idx, h_idx, h_idx)])
        c = level.c
        if len(s_idx) and np.any(c != 0):
            k_ss_inv = np.linalg.inv(kap[np.ix_(s_idx, s_idx)])
            term = cfun[np.ix_(s_idx, h_idx, h_idx)]
            # κ^{ij} κ_{αA} C^A_{jβ}, A over all vertical indices
            mixed = np.einsum("ij,aA,Ajb->iab", k_ss_inv, kap[np.ix_(h_idx, v_idx)],
                              cfun[np.ix_(v_idx, s_idx, h_idx)])
            bmat = bmat + np.einsum("i,iab->ab", c, term + mixed)
        form = xbar_forms.T @ (0.5 * (bmat - bmat.T)) @ xbar_forms
        out = np.zeros((2 * hbar, 2 * hbar))
        out[:hbar, :hbar] = form
        return out

    # -- reduced bivector on M/G -------------------------------------------------------
    def reduced_bivector(self, x, projection, which="one"):
        two = self.b1(x) if which == "one" else self.b1(x) + self.curly_b(x)
        p = self.system.gauge_bivector(x, two)
        dim = self.mchart.dim
        r = pushforward_matrix(projection, self.mchart, x, list(np.eye(dim)), self.fd)
        out = r @ p @ r.T
        return 0.5 * (out - out.T)


def canonical_form(hbar):
    """ω_can = dq̄∧dp̄ = −d(p̄ dq̄) on the chart (q̄, p̄)."""
    z, i = np.zeros((hbar, hbar)), np.eye(hbar)
    return np.block([[z, i], [-i, z]])


def generator_consistency(group: GroupActionSpec, chart, q, xi, t=1e-5):
    """Max abs gap between η_Q(q) and the central difference of t ↦ exp(tξ)·q."""
    if group.exp is None:
        raise ReductionError("group action has no exponential map")
    xi = np.asarray(xi, dtype=float)
    fwd = chart.log(q, group.act(group.exp(t * xi), q))
    bwd = chart.log(q, group.act(group.exp(-t * xi), q))
    return float(np.max(np.abs((fwd - bwd) / (2 * t) - group.generators(q) @ xi)))


# ---------------------------------------------------------------------------
# reduction at the zero level of D-momenta

class DMomentumReduction:
    """Zero-level reduction by D-momenta F_j = <m, Ỹ_j>, Ỹ_j sections of D.

    With S̃ = span(Ỹ_j), the hypotheses are rank S̃ = rank S and S ∩ S̃^⊥ = {0};
    then H̃ = D ∩ S̃^⊥ is a principal connection complement to V and
    F⁻¹(0)/G ≅ T*(Q/G) through φ̃₀(m) = (ρ(q), p̄), <p̄, Tρ(v)> = <m, v> for v ∈ H̃.
    """

    def __init__(self, sym: SymmetricSystem, generators: Callable, base_projection: Callable,
                 base_lift: Callable, tol=1e-9):
        self.sym = sym
        self.system = sym.system
        self.generators = generators  # q -> (n, j) columns Ỹ_j in the Q frame
        self.base_projection = base_projection
        self.base_lift = base_lift
        self.tol = tol

    @property
    def fd(self):
        return self.system.fd

    # -- hypotheses and the horizontal space ------------------------------------
    def check_hypotheses(self, q):
        b = self.system.basis(q)
        s, st = b.frame[:, b.S], np.asarray(self.generators(q), dtype=float)
        if rank(st) != rank(s):
            raise HypothesisFailed(f"rank S̃ = {rank(st)} differs from rank S = {rank(s)}", q)
        if rank(st.T @ b.kappa @ s) != s.shape[1]:
            raise HypothesisFailed("S ∩ S̃^⊥ is not trivial", q)
        hor = self.horizontal(q, b)
        if rank(np.hstack([hor, self.sym.group.generators(q)])) != len(b.kappa):
            raise HypothesisFailed("H̃ and V do not span TQ", q)
        return b

    def horizontal(self, q, b=None):
        """H̃_α = X_α − Y (S̃ᵀκY)⁻¹ S̃ᵀκX_α: same projection to Q/G as X_α, κ-orthogonal to S̃."""
        b = self.system.basis(q) if b is None else b
        x, y = b.frame[:, b.H], b.frame[:, b.S]
        st = np.asarray(self.generators(q), dtype=float)
        return x - y @ np.linalg.solve(st.T @ b.kappa @ y, st.T @ b.kappa @ x)

    def f_values(self, x):
        q, _ = self.system.split(x)
        return np.asarray(self.generators(q), dtype=float).T @ self.system.covector(x)

    def check_zero_level(self, x):
        err = float(np.max(np.abs(self.f_values(x))))
        if err > LEVEL_TOL:
            raise NotOnLevelSet(f"|F| = {err:.3e}")

    # -- connection with horizontal space H̃ ----------------------------------------
    def connection_rows(self, q):
        """Ã = N⁺P_V with P_V the projection onto V along H̃, as (g, n)."""
        hor = self.horizontal(q)
        n_mat = np.asarray(self.sym.group.generators(q), dtype=float)
        frame = np.hstack([hor, n_mat])
        return np.linalg.inv(frame)[hor.shape[1]:]

    def curvature(self, q):
        """K̃ = dÃ on H̃ ⊗ H̃, as (g, n, n)."""
        hor = self.horizontal(q)
        p_h = hor @ np.linalg.pinv(np.hstack([hor, self.sym.group.generators(q)]))[: hor.shape[1]]
        da = exterior_derivative_rows(self.connection_rows, self.system.chart, q, self.fd)
        return np.einsum("ij,bik,kl->bjl", p_h, da, p_h)

    # -- identification with T*(Q/G) --------------------------------------------------
    def _base_tangent(self, q, hor):
        return pushforward_matrix(self.base_projection, self.system.chart, q, list(hor.T), self.fd)

    def phi0(self, x):
        """(q̄, p̄) with <p̄, Tρ(H̃_α)> = <m, H̃_α>; defined off the level as well."""
        q, _ = self.system.split(x)
        hor = self.horizontal(q)
        t = self._base_tangent(q, hor)
        pbar = np.linalg.solve(t.T, hor.T @ self.system.covector(x))
        return np.concatenate([np.asarray(self.base_projection(q), dtype=float), pbar])

    def lift(self, xbar):
        """Point of F⁻¹(0) over the base lift with φ̃₀ image xbar."""
        hbar = len(xbar) // 2
        q = self.base_lift(xbar[:hbar])
        b = self.system.basis(q)
        hor = self.horizontal(q, b)
        st = np.asarray(self.generators(q), dtype=float)
        m_tilde = np.concatenate([self._base_tangent(q, hor).T @ xbar[hbar:], np.zeros(st.shape[1])])
        # pairings with the system's D frame from those with [H̃ | S̃]
        coeff = np.linalg.lstsq(np.hstack([hor, st]), b.frame[:, b.D], rcond=None)[0]
        return self.system.join(q, coeff.T @ m_tilde)

    def reduced_energy(self, xbar):
        return self.system.energy(self.lift(xbar))

    # -- the magnetic term, two routes --------------------------------------------------
    def _to_base(self, q, form_q):
        hor = self.horizontal(q)
        t = self._base_tangent(q, hor)
        tinv = np.linalg.inv(t)  # rows: components on Q/G of the dual of the H̃ frame
        return tinv.T @ (hor.T @ form_q @ hor) @ tinv

    def magnetic_curvature(self, xbar):
        """B̂ = <J, K̃> transported to T*(Q/G), route through the connection curvature."""
        x = self.lift(xbar)
        q, _ = self.system.split(x)
        form_q = np.einsum("b,bjk->jk", self.sym.j_lie(x), self.curvature(q))
        return self._embed(self._to_base(q, form_q))

    def magnetic_structure(self, xbar):
        """Same term from structure functions: −(p_A C^A_{αβ}) over vertical A."""
        x = self.lift(xbar)
        q, _ = self.system.split(x)
        b = self.system.basis(q)
        hor = self.horizontal(q, b)
        vert = b.frame[:, b.h:]
        frame = np.hstack([hor, vert])
        dual = np.linalg.inv(frame)
        h = hor.shape[1]
        m = self.system.covector(x)
        p_v = vert.T @ m
        fields = [(lambda y, j=j: self.horizontal(y)[:, j]) for j in range(h)]
        out = np.zeros((h, h))
        for i in range(h):
            for j in range(i + 1, h):
                br = lie_bracket_at(fields[i], fields[j], self.system.chart, q, self.fd)
                out[i, j] = -p_v @ (dual[h:] @ br)
                out[j, i] = -out[i, j]
        tinv = np.linalg.inv(self._base_tangent(q, hor))
        return self._embed(tinv.T @ out @ tinv)

    @staticmethod
    def _embed(form):
        hbar = form.shape[0]
        out = np.zeros((2 * hbar, 2 * hbar))
        out[:hbar, :hbar] = form
        return out

    def reduced_form(self, xbar, magnetic=None):
        """ω̃ = ω_can − B̂ on the chart (q̄, p̄) of T*(Q/G)."""
        bhat = self.magnetic_curvature(xbar) if magnetic is None else magnetic
        return canonical_form(len(xbar) // 2) - bhat

    def reduced_vector_field(self, xbar):
        x = self.lift(xbar)
        xnh = self.system.x_nh(x)
        return pushforward_matrix(self.phi0, self.system.mchart, x, [xnh], self.fd)[:, 0]

    def hamilton_residual(self, xbar, form=None):
        """|i_X ω̃ − dH⁰_red| on T*(Q/G)."""
        w = self.reduced_form(xbar) if form is None else form
        xr = self.reduced_vector_field(xbar)
        chart = _euclidean_chart(len(xbar))
        dh = exterior_derivative_at(self.reduced_energy, chart, xbar, 0, self.fd)
        return float(np.max(np.abs(w.T @ xr - dh)))


def _euclidean_chart(dim):
    return Chart("T*(Q/G)", [Euclidean(dim, tuple(f"z{i}" for i in range(dim)))])
