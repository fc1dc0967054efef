"""Symmetric cubic tensors, trace decomposition, and the algebraic identity suite.

Houses the fully symmetric rank-3 arrays that carry the second fundamental
form of a Lagrangian submanifold, the umbilic-type tensor built from the mean
curvature, and brute-force checks of the contraction identities used by the
Simons-type estimate.

Bulk random suites contract with np.einsum on fixed subscripts that mirror
the index expressions; a literal nested-loop evaluator is kept as the
independent oracle for those contractions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

TRISYM_TOL = 1e-9


def trisym_residual(a: np.ndarray) -> float:
    """Max deviation of a rank-3 array from full index symmetry."""
    res = 0.0
    for perm in permutations(range(3)):
        res = max(res, float(np.max(np.abs(np.transpose(a, perm) - a))))
    return res


def trisymmetrize(a: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a, dtype=float)
    for perm in permutations(range(3)):
        out += np.transpose(a, perm)
    return out / 6.0


@dataclass
class CubicSymTensor:
    """Fully symmetric rank-3 array; houses h, the trace-free part, and the
    umbilic tensor.  Entries are indexed [m, i, j] with the starred index first."""

    entries: np.ndarray
    tol: float = TRISYM_TOL

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=float)
        n = self.entries.shape[0]
        if self.entries.shape != (n, n, n):
            raise ValueError("cubic tensor must be n x n x n")
        scale = max(1.0, float(np.max(np.abs(self.entries))))
        if trisym_residual(self.entries) > self.tol * scale:
            raise ValueError("array is not symmetric under index permutations")

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def norm_sq(self) -> float:
        return float(np.sum(self.entries**2))

    def trace_vector(self) -> np.ndarray:
        """The vector (1/n) sum_i a[m, i, i]."""
        return np.einsum("mii->m", self.entries) / self.n


@dataclass
class VectorField1:
    """Mean-curvature-type vector of starred components H^{k*}."""

    components: np.ndarray

    def __post_init__(self):
        self.components = np.asarray(self.components, dtype=float)
        if self.components.ndim != 1:
            raise ValueError("expected a 1-d component vector")
        if not np.all(np.isfinite(self.components)):
            raise ValueError("non-finite components")

    @property
    def n(self) -> int:
        return len(self.components)

    def norm_sq(self) -> float:
        return float(np.dot(self.components, self.components))


@dataclass
class SymTraceFree2:
    """Symmetric trace-free 2-tensor (the conformal-Maslov defect)."""

    entries: np.ndarray
    tol: float = 1e-9

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=float)
        scale = max(1.0, float(np.max(np.abs(self.entries))))
        if np.max(np.abs(self.entries - self.entries.T)) > self.tol * scale:
            raise ValueError("tensor is not symmetric")
        if abs(float(np.trace(self.entries))) > max(self.tol, 1e-12) * scale:
            raise ValueError("tensor is not trace-free")

    def norm_sq(self) -> float:
        return float(np.sum(self.entries**2))


# ---------------------------------------------------------------------------
# Trace decomposition
# ---------------------------------------------------------------------------


def c_tensor_array(H: np.ndarray) -> np.ndarray:
    """Umbilic-type tensor n/(n+2) (H^m d_ij + H^i d_jm + H^j d_im).

    Works on batched H of shape (n, ...) as well.
    """
    H = np.asarray(H, dtype=float)
    n = H.shape[0]
    eye = np.eye(n)
    tail = H.shape[1:]
    c = (
        np.einsum("m...,ij->mij...", H, eye)
        + np.einsum("i...,jm->mij...", H, eye)
        + np.einsum("j...,im->mij...", H, eye)
    )
    return (n / (n + 2.0)) * c


def c_tensor(H: VectorField1) -> CubicSymTensor:
    return CubicSymTensor(c_tensor_array(H.components))


def tracefree_part(h: CubicSymTensor, H: VectorField1) -> CubicSymTensor:
    """Subtract the umbilic part; result is trace-free in every index pair."""
    if h.n != H.n:
        raise ValueError("dimension mismatch")
    if np.max(np.abs(h.trace_vector() - H.components)) > 1e-10 * max(1.0, float(np.max(np.abs(H.components)))):
        raise ValueError("H is not the trace of h divided by n")
    return CubicSymTensor(h.entries - c_tensor_array(H.components))


def norm_identity_residual(h: CubicSymTensor, H: VectorField1) -> float:
    """| |hhat|^2 - |h|^2 + 3n^2/(n+2) |H|^2 |."""
    n = h.n
    hhat = tracefree_part(h, H)
    return abs(hhat.norm_sq() - h.norm_sq() + 3.0 * n * n / (n + 2.0) * H.norm_sq())


def random_cubic(rng: np.random.Generator, n: int) -> tuple[CubicSymTensor, VectorField1]:
    """Random full tensor h with its trace vector H."""
    h = CubicSymTensor(trisymmetrize(rng.normal(size=(n, n, n))))
    return h, VectorField1(h.trace_vector())


def random_tracefree(rng: np.random.Generator, n: int) -> CubicSymTensor:
    """Tri-symmetrize a Gaussian array, then project out its trace."""
    h, H = random_cubic(rng, n)
    return tracefree_part(h, H)


# ---------------------------------------------------------------------------
# Contraction identities supporting the Simons-type computation
# ---------------------------------------------------------------------------


def contraction_identity_suite(hhat: CubicSymTensor, H: VectorField1) -> dict[str, float]:
    """Residuals |LHS - RHS| of the auxiliary contraction identities.

    Left sides are six-index sums of hhat/c products; right sides are the
    closed forms in |hhat|^2 |H|^2, the cubic trace sum and the quadratic
    H-contraction, with the stated rational coefficients.
    """
    n = hhat.n
    if H.n != n:
        raise ValueError("dimension mismatch")
    if abs(float(np.max(np.abs(np.einsum("mii->m", hhat.entries))))) > 1e-8:
        raise ValueError("hhat is not trace-free")
    hh = hhat.entries
    Hv = H.components
    c = c_tensor_array(Hv)
    f = n / (n + 2.0)
    f2 = f * f

    hnorm2 = float(np.einsum("mij,mij->", hh, hh))
    Hnorm2 = float(np.dot(Hv, Hv))
    tri = float(np.einsum("mjk,mkl,tlj,t->", hh, hh, hh, Hv))
    quad = float(np.einsum("mij,mjk,i,k->", hh, hh, Hv, Hv))

    res = {}

    lhs_a1 = np.einsum("mij,mkl,tlj,tik->", hh, hh, hh, c)
    lhs_a2 = np.einsum("mij,mkl,tlj,tik->", hh, hh, c, hh)
    rhs_a = 3.0 * f * tri
    res["hhhc_cyclic"] = max(abs(lhs_a1 - rhs_a), abs(lhs_a2 - rhs_a))

    lhs_b1 = np.einsum("mij,mkl,tlk,tij->", hh, hh, hh, c)
    lhs_b2 = np.einsum("mij,mkl,tlk,tij->", hh, hh, c, hh)
    rhs_b = 2.0 * f * tri
    res["hhhc_trace"] = max(abs(lhs_b1 - rhs_b), abs(lhs_b2 - rhs_b))

    lhs_c = np.einsum("mij,mkl,tlj,tik->", hh, hh, c, c)
    res["hhcc_cyclic"] = abs(lhs_c - (f2 * hnorm2 * Hnorm2 + 6.0 * f2 * quad))

    lhs_d = np.einsum("mij,mkl,tlk,tij->", hh, hh, c, c)
    res["hhcc_trace"] = abs(lhs_d - 4.0 * f2 * quad)

    lhs_e = n * np.einsum("mij,mli,tlj,t->", hh, hh, c, Hv)
    quad_mixed = float(np.einsum("mij,mli,j,l->", hh, hh, Hv, Hv))
    res["hhcH_mixed"] = abs(lhs_e - (n * f * hnorm2 * Hnorm2 + 2.0 * n * f * quad_mixed))

    lhs_f1 = np.einsum("mij,mli,tlk,tkj->", hh, hh, hh, c)
    lhs_f2 = np.einsum("mij,mli,tkj,tlk->", hh, hh, hh, c)
    tri_mixed = float(np.einsum("mij,mli,tlj,t->", hh, hh, hh, Hv))
    rhs_f = 2.0 * f * tri_mixed
    res["hhhc_mixed"] = max(abs(lhs_f1 - rhs_f), abs(lhs_f2 - rhs_f))

    lhs_g = np.einsum("mij,mli,tlk,tkj->", hh, hh, c, c)
    res["hhcc_mixed"] = abs(lhs_g - (2.0 * f2 * hnorm2 * Hnorm2 + (n + 6.0) * f2 * quad_mixed))

    # Componentwise expansion of sum_t c^t_{lj} c^t_{ik} into delta/H terms.
    eye = np.eye(n)
    lhs_cc = np.einsum("tlj,tik->ljik", c, c)
    cyc = (
        np.einsum("l,i,jk->ljik", Hv, Hv, eye)
        + np.einsum("i,j,kl->ljik", Hv, Hv, eye)
        + np.einsum("j,k,li->ljik", Hv, Hv, eye)
        + np.einsum("k,l,ij->ljik", Hv, Hv, eye)
    )
    rhs_cc = f2 * (
        cyc
        + 2.0 * np.einsum("l,j,ik->ljik", Hv, Hv, eye)
        + 2.0 * np.einsum("i,k,jl->ljik", Hv, Hv, eye)
        + Hnorm2 * np.einsum("ik,jl->ljik", eye, eye)
    )
    res["cc_cyclic_expansion"] = float(np.max(np.abs(lhs_cc - rhs_cc)))

    return res


def _contraction_suite_loops(hhat: CubicSymTensor, H: VectorField1) -> dict[str, float]:
    """Literal nested-loop evaluation of the same left sides; oracle for the
    einsum expressions at small n."""
    n = hhat.n
    hh = hhat.entries
    Hv = H.components
    c = c_tensor_array(Hv)
    rng = range(n)

    def six(fa, fb):
        acc = 0.0
        for i in rng:
            for j in rng:
                for k in rng:
                    for m in rng:
                        for l in rng:
                            for t in rng:
                                acc += fa[m, i, j] * fa[m, k, l] * fb[0][t, l, j] * fb[1][t, i, k]
        return acc

    def six_trace(fa, fb):
        acc = 0.0
        for i in rng:
            for j in rng:
                for k in rng:
                    for m in rng:
                        for l in rng:
                            for t in rng:
                                acc += fa[m, i, j] * fa[m, k, l] * fb[0][t, l, k] * fb[1][t, i, j]
        return acc

    def six_mixed(fb):
        acc = 0.0
        for i in rng:
            for j in rng:
                for k in rng:
                    for m in rng:
                        for l in rng:
                            for t in rng:
                                acc += hh[m, i, j] * hh[m, l, i] * fb[0][t, l, k] * fb[1][t, k, j]
        return acc

    out = {
        "hhhc_cyclic": six(hh, (hh, c)),
        "hhhc_trace": six_trace(hh, (hh, c)),
        "hhcc_cyclic": six(hh, (c, c)),
        "hhcc_trace": six_trace(hh, (c, c)),
        "hhhc_mixed": six_mixed((hh, c)),
        "hhcc_mixed": six_mixed((c, c)),
    }
    acc = 0.0
    for i in rng:
        for j in rng:
            for m in rng:
                for l in rng:
                    for t in rng:
                        acc += n * hh[m, i, j] * hh[m, l, i] * c[t, l, j] * Hv[t]
    out["hhcH_mixed"] = acc
    return out


# ---------------------------------------------------------------------------
# Li-Li matrix inequality
# ---------------------------------------------------------------------------


def li_li_check(Bs) -> tuple[float, float]:
    """LHS and RHS of: sum N(B_m B_k - B_k B_m) + sum S_mk^2 <= 3/2 S^2."""
    Bs = [np.asarray(B, dtype=float) for B in Bs]
    if len(Bs) < 2:
        raise ValueError("need at least two matrices")
    for B in Bs:
        if np.max(np.abs(B - B.T)) > 1e-12 * max(1.0, float(np.max(np.abs(B)))):
            raise ValueError("matrices must be symmetric")
    lhs = 0.0
    S = 0.0
    for Bm in Bs:
        S += float(np.sum(Bm * Bm))
    for Bm in Bs:
        for Bk in Bs:
            C = Bm @ Bk - Bk @ Bm
            lhs += float(np.sum(C * C))
            lhs += float(np.sum(Bm * Bk)) ** 2
    return lhs, 1.5 * S * S


def li_li_batch_margin(Bs: np.ndarray) -> np.ndarray:
    """RHS - LHS for a batch of tuples, shape (T, m, n, n); >= 0 when the bound holds."""
    prods = np.einsum("tmij,tkjl->tmkil", Bs, Bs)
    comms = prods - np.transpose(prods, (0, 2, 1, 3, 4))
    ncomm = np.einsum("tmkil,tmkil->t", comms, comms)
    smk = np.einsum("tmij,tkij->tmk", Bs, Bs)
    lhs = ncomm + np.einsum("tmk,tmk->t", smk, smk)
    S = np.einsum("tmm->t", smk)
    return 1.5 * S * S - lhs


# ---------------------------------------------------------------------------
# Spectral summary for the Simons inequality
# ---------------------------------------------------------------------------


def jacobi_eigh(A: np.ndarray, tol: float = 1e-13, max_sweeps: int = 64):
    """Eigen-decomposition of a small symmetric matrix by Jacobi rotations."""
    A = np.asarray(A, dtype=float).copy()
    n = A.shape[0]
    V = np.eye(n)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off < tol * max(1.0, np.max(np.abs(np.diag(A)))):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) < 1e-300:
                    continue
                theta = 0.5 * (A[q, q] - A[p, p]) / A[p, q]
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0:
                    t = 1.0
                cth = 1.0 / np.sqrt(t * t + 1.0)
                sth = t * cth
                R = np.eye(n)
                R[p, p] = R[q, q] = cth
                R[p, q] = sth
                R[q, p] = -sth
                A = R.T @ A @ R
                V = V @ R
    return np.diag(A).copy(), V


@dataclass
class SpectralSummary:
    """Eigen-data of M_ij = sum_l hhat^{l*}_{ij} H^{l*} plus the per-direction
    norms S_{i*} in the eigenbasis."""

    lambdas: np.ndarray
    s_istar: np.ndarray
    s_h: float = field(init=False)

    def __post_init__(self):
        self.lambdas = np.asarray(self.lambdas, dtype=float)
        self.s_istar = np.asarray(self.s_istar, dtype=float)
        self.s_h = float(np.sum(self.lambdas**2))
        if np.any(self.s_istar < -1e-12):
            raise ValueError("per-direction norms must be nonnegative")


def spectral_summary(hhat: CubicSymTensor, H: VectorField1) -> SpectralSummary:
    hh = hhat.entries
    M = np.einsum("lij,l->ij", hh, H.components)
    lam, V = jacobi_eigh(M)
    # rotate hhat into the eigenframe e'_i = sum_j V[j, i] e_j
    rotated = np.einsum("am,bi,cj,abc->mij", V, V, V, hh)
    s_istar = np.einsum("mij,mij->m", rotated, rotated)
    return SpectralSummary(lam, s_istar)
