"""Pointwise linear algebra of almost Dirac structures on T_xP ⊕ T*_xP.

Elements are stacked column vectors (X; α) of length 2n. The pairing is
<<(X,α),(Y,β)>> = β(X) + α(Y). Bivector components follow π^{ij} = π(dx^i, dx^j)
with π♯(α) = π(α, ·); 2-form components ω_{ij} = ω(E_i, E_j) with ω♭(X) = ω(X, ·).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (RANK_TOL, DegenerateInput, GeometryError, annihilator, intersect, null_space,
                       orth, rank, subspace_distance)

ISOTROPY_TOL = 1e-10
INVARIANCE_TOL = 1e-8


class DiracError(GeometryError):
    pass


class NotRegular(DiracError):
    pass


class CleanIntersectionViolated(DiracError):
    def __init__(self, found, declared, where=""):
        super().__init__(f"clean-intersection rank {found} differs from declared {declared} {where}".strip())
        self.found = found
        self.declared = declared


class NotInvariant(DiracError):
    pass


class NotIsotropic(DiracError):
    pass


def pairing_matrix(n):
    z, i = np.zeros((n, n)), np.eye(n)
    return np.block([[z, i], [i, z]])


def isotropy_residual(basis):
    n = basis.shape[0] // 2
    q = orth(basis)
    return float(np.max(np.abs(q.T @ pairing_matrix(n) @ q), initial=0.0))


@dataclass(frozen=True)
class DiracSubspace:
    basis: np.ndarray  # 2n x n, orthonormal columns

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        n2 = b.shape[0]
        if n2 % 2 or b.shape[1] != n2 // 2:
            raise DegenerateInput(f"expected {n2 // 2} columns, got {b.shape[1]}")
        if rank(b) != n2 // 2:
            raise DegenerateInput("Dirac basis is rank deficient")
        res = isotropy_residual(b)
        if res > ISOTROPY_TOL:
            raise NotIsotropic(f"isotropy residual {res:.3e}")

    @classmethod
    def from_columns(cls, cols):
        return cls(orth(cols))

    @property
    def n(self):
        return self.basis.shape[0] // 2

    @property
    def tangent(self):
        return self.basis[: self.n]

    @property
    def cotangent(self):
        return self.basis[self.n:]

    def distance(self, other):
        return subspace_distance(self.basis, np.asarray(getattr(other, "basis", other)))


def sharp(p, alpha):
    """π♯(α) = π(α, ·)."""
    return p.T @ alpha


def flat(w, x):
    """ω♭(X) = ω(X, ·)."""
    return w.T @ x


def graph_of_bivector(p):
    p = np.asarray(p, dtype=float)
    n = p.shape[0]
    return DiracSubspace.from_columns(np.vstack([p.T, np.eye(n)]))


def graph_of_form(w):
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    return DiracSubspace.from_columns(np.vstack([np.eye(n), w.T]))


def graph_of(obj, kind):
    if kind == "bivector":
        return graph_of_bivector(obj)
    if kind == "form":
        return graph_of_form(obj)
    raise ValueError(kind)


def pair_representation(dirac: DiracSubspace, declared_rank=None):
    """Return (F, ω_F): F orthonormal basis of pr_T(L), ω_F[a,b] with i_{F_a}ω_F = −α_a|_F."""
    t, c = dirac.tangent, dirac.cotangent
    f = orth(t)
    if declared_rank is not None and f.shape[1] != declared_rank:
        raise NotRegular(f"pr_T(L) has rank {f.shape[1]}, declared {declared_rank}")
    coeff = np.linalg.lstsq(t, f, rcond=None)[0]
    alphas = c @ coeff
    w = -(alphas.T @ f)
    return f, 0.5 * (w - w.T)


def from_pair(f, w):
    """Dirac subspace of a pair (F, ω_F) with the convention of pair_representation."""
    n = f.shape[0]
    fp = np.linalg.pinv(f)  # rows are covectors dual to the columns of f
    top = np.hstack([f, np.zeros((n, n - f.shape[1]))])
    bottom = np.hstack([-(w @ fp).T, annihilator(f, n)])
    return DiracSubspace.from_columns(np.vstack([top, bottom]))


def backward_image_at(l2: DiracSubspace, tphi, declared_rank=None, tol=RANK_TOL):
    """{(X, Tφ*β) : (TφX, β) ∈ L2}; tphi has shape (n2, n1).

    tol is the relative rank threshold; raise it for finite-difference inputs.
    """
    tphi = np.asarray(tphi, dtype=float)
    n2, n1 = tphi.shape
    a, b = l2.tangent, l2.cotangent
    # clean intersection: (0 ⊕ ker Tφ*) ∩ L2
    clean = null_space(np.vstack([a, tphi.T @ b]), tol)
    clean_rank = orth(b @ clean, tol).shape[1] if clean.shape[1] else 0
    if declared_rank is not None and clean_rank != declared_rank:
        raise CleanIntersectionViolated(clean_rank, declared_rank)
    ns = null_space(np.hstack([tphi, -a]), tol)
    xs, cs = ns[:n1], ns[n1:]
    cols = np.vstack([xs, tphi.T @ (b @ cs)])
    out = orth(cols, tol)
    if out.shape[1] != n1:
        raise CleanIntersectionViolated(out.shape[1], n1, "(backward image dimension)")
    return DiracSubspace(out)


def forward_image_at(l1: DiracSubspace, tphi, fiber=(), tol=RANK_TOL, invariance_tol=INVARIANCE_TOL):
    """{(TφY, α) : (Y, Tφ*α) ∈ L1}; fiber holds (L1', Tφ') pairs at other points of the fibre."""
    tphi = np.asarray(tphi, dtype=float)
    result = _forward(l1, tphi, tol)
    kernel_rank = _kernel_clean_rank(l1, tphi, tol)
    for other, other_tphi in fiber:
        alt = _forward(other, np.asarray(other_tphi, dtype=float), tol)
        d = result.distance(alt)
        if d > invariance_tol:
            raise NotInvariant(f"forward images disagree across the fibre (distance {d:.3e})")
        r = _kernel_clean_rank(other, np.asarray(other_tphi, dtype=float), tol)
        if r != kernel_rank:
            raise CleanIntersectionViolated(r, kernel_rank, "(ker Tφ ∩ K_L)")
    return result


def _forward(l1, tphi, tol=RANK_TOL):
    n2, n1 = tphi.shape
    if rank(tphi, tol) != n2:
        raise DegenerateInput("tangent map is not surjective")
    a, b = l1.tangent, l1.cotangent
    ns = null_space(np.hstack([b, -tphi.T]), tol)
    k = a.shape[1]
    cs, alphas = ns[:k], ns[k:]
    out = orth(np.vstack([tphi @ (a @ cs), alphas]), tol)
    if out.shape[1] != n2:
        raise CleanIntersectionViolated(out.shape[1], n2, "(forward image dimension)")
    return DiracSubspace(out)


def _kernel_clean_rank(l1, tphi, tol=RANK_TOL):
    kl = null_distribution_at(l1, tol)
    return intersect(null_space(tphi, tol), kl, tol).shape[1] if kl.shape[1] else 0


def null_distribution_at(dirac: DiracSubspace, tol=RANK_TOL):
    """K_L = pr_T(L ∩ (TP ⊕ 0))."""
    ns = null_space(dirac.cotangent, tol)
    if ns.shape[1] == 0:
        return np.zeros((dirac.n, 0))
    return orth(dirac.tangent @ ns, tol)


def u_distribution_at(dirac: DiracSubspace, tphi, f2):
    """X ∈ pr_T(L) with (X,α) ∈ L, TφX ∈ F2 and α vanishing on ker Tφ."""
    tphi = np.asarray(tphi, dtype=float)
    a, b = dirac.tangent, dirac.cotangent
    ker = null_space(tphi)
    q2 = orth(f2)
    proj_out = np.eye(tphi.shape[0]) - q2 @ q2.T
    rows = [ker.T @ b, proj_out @ tphi @ a]
    ns = null_space(np.vstack(rows))
    u = orth(a @ ns) if ns.shape[1] else np.zeros((dirac.n, 0))
    image = orth(tphi @ u) if u.shape[1] else np.zeros((tphi.shape[0], 0))
    if subspace_distance(image, q2) > 1e3 * RANK_TOL ** 0.5:
        raise CleanIntersectionViolated(image.shape[1], q2.shape[1], "(Tφ(U) versus F2)")
    return u
