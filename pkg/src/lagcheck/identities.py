"""Machine-checkable residuals for the structure equations of Lagrangian
submanifolds: symmetry of the second fundamental form, Codazzi, the curvature
equations, the Ricci identity, and the Simons-type identity and inequality
for the trace-free second fundamental form.

Each check returns a named residual; the report marks a check as passed when
the residual sits under its tolerance rung (exact-jet, once-FD, or twice-FD,
optionally rescaled).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from .geometry import (
    TOL_FD1,
    TOL_FD2,
    TOL_JET,
    GeometryState,
    bundle_at,
    geometry_state,
    hhat_sq_field,
    maslov_tensor_gradient,
    scalar_laplacian,
)
from .immersions import ChartPoint, Immersion
from .tensors import spectral_summary, CubicSymTensor, VectorField1

# Sign convention for the commutator term of the Simons identity: the square
# is a literal matrix square, so tr (AB - BA)^2 = -N(AB - BA) <= 0.  This is
# the convention under which the identity balances on the product torus.
COMMUTATOR_NOTE = (
    "commutator term uses tr((A B - B A)^2) = -N(A B - B A); verified to "
    "balance the Simons identity on the product torus"
)


# ---------------------------------------------------------------------------
# Structural checks
# ---------------------------------------------------------------------------


def check_structural(state: GeometryState) -> dict[str, float]:
    """Residuals of the pointwise structure equations at one state."""
    if state.grad_h is None:
        raise ValueError("state must be built with derivatives")
    h = state.h.entries
    n = state.n
    res = {}

    tri = 0.0
    for perm in permutations(range(3)):
        tri = max(tri, float(np.max(np.abs(np.transpose(h, perm) - h))))
    res["tri_symmetry"] = tri

    cod = 0.0
    for perm in permutations(range(4)):
        cod = max(cod, float(np.max(np.abs(np.transpose(state.grad_h, perm) - state.grad_h))))
    res["codazzi_full_symmetry"] = cod

    res["h_trace_consistency"] = float(
        np.max(np.abs(np.einsum("mii->m", h) / n - state.H.components))
    )
    res["H_derivative_symmetry"] = float(np.max(np.abs(state.grad_H - state.grad_H.T)))
    res["T_consistency"] = float(np.max(np.abs(state.T.entries - state.T_divergence_form)))
    res["norm_identity"] = norm_identity_pointwise(state)
    res["lagrangian_condition"] = state.lagrangian_residual
    return res


def norm_identity_pointwise(state: GeometryState) -> float:
    n = state.n
    return abs(
        state.hhat_norm_sq() - state.h_norm_sq() + 3.0 * n * n / (n + 2.0) * state.H_norm_sq()
    )


def gauss_rhs_from_state(state: GeometryState) -> np.ndarray:
    n = state.n
    eye = np.eye(n)
    h = state.h.entries
    delta = np.einsum("ik,jl->ijkl", eye, eye) - np.einsum("il,jk->ijkl", eye, eye)
    return state.c_amb * delta + np.einsum("mik,mjl->ijkl", h, h) - np.einsum(
        "mil,mjk->ijkl", h, h
    )


def check_gauss_ricci(state: GeometryState) -> dict[str, float]:
    """Gauss equation (two-method) and the normal-bundle curvature equation."""
    rhs = gauss_rhs_from_state(state)
    return {
        "gauss_two_method": float(np.max(np.abs(state.R - rhs))),
        "ricci_equation": float(np.max(np.abs(state.R_normal - rhs))),
    }


# ---------------------------------------------------------------------------
# Ricci identity for the second covariant derivative of h
# ---------------------------------------------------------------------------


def check_ricci_identity(imm: Immersion, p: ChartPoint) -> float:
    """Residual of the commutation rule for second covariant derivatives of h
    against the curvature contractions, curvature taken from the Gauss form."""
    p = imm.atlas.normalize(p)
    fb = bundle_at(imm, p.chart_id, p.coords[None, :], 4)
    hess = fb.hess_h[..., 0]
    h0 = fb.h0[..., 0]
    rg = fb.gauss_rhs[..., 0]
    lhs = hess - hess.transpose(0, 1, 2, 4, 3)
    rhs = (
        np.einsum("mkj,kilp->mijlp", h0, rg)
        + np.einsum("mik,kjlp->mijlp", h0, rg)
        + np.einsum("kij,kmlp->mijlp", h0, rg)
    )
    return float(np.max(np.abs(lhs - rhs)))


def lemma_laplace_hhat(imm: Immersion, p: ChartPoint) -> tuple[float, float]:
    """Both sides of the rough-Laplacian contraction identity for hhat:
    sum hhat * hhat_{,kk} against (n+2)<hhat, grad T> plus curvature terms."""
    p = imm.atlas.normalize(p)
    n = imm.source_dim
    fb = bundle_at(imm, p.chart_id, p.coords[None, :], 4)
    hh = fb.hhat0[..., 0]
    hess = fb.hess_hhat[..., 0]
    rg = fb.gauss_rhs[..., 0]
    lhs = float(np.einsum("mij,mijkk->", hh, hess))
    grad_t = maslov_tensor_gradient(imm, p)
    rhs = (n + 2.0) * float(np.einsum("mij,ijm->", hh, grad_t))
    rhs += float(np.einsum("mij,mlk,lijk->", hh, hh, rg))
    rhs += float(np.einsum("mij,mil,lkjk->", hh, hh, rg))
    rhs += float(np.einsum("mij,lik,lmjk->", hh, hh, rg))
    return lhs, rhs


# ---------------------------------------------------------------------------
# Simons identity and inequality
# ---------------------------------------------------------------------------


def simons_terms(imm: Immersion, p: ChartPoint) -> dict[str, float]:
    """Every term of the Simons-type identity for (1/2) Lap |hhat|^2."""
    p = imm.atlas.normalize(p)
    state = geometry_state(imm, p, "with_derivatives")
    n = state.n
    hh = state.hhat.entries
    Hv = state.H.components
    hs = state.hhat_norm_sq()

    lhs = 0.5 * scalar_laplacian(imm, hhat_sq_field(imm), p)
    grad_t = maslov_tensor_gradient(imm, p)

    prods = np.einsum("iab,jbc->ijac", hh, hh)
    comms = prods - prods.transpose(1, 0, 2, 3)
    comm_term = float(np.einsum("ijab,ijba->", comms, comms))
    tr_ab = np.einsum("iab,jab->ij", hh, hh)

    terms = {
        "lhs_half_laplacian": lhs,
        "hhat_grad_T": (n + 2.0) * float(np.einsum("mij,ijm->", hh, grad_t)),
        "grad_hhat_sq": state.grad_hhat_norm_sq(),
        "c_term": (n + 1.0) * state.c_amb * hs,
        "HH_term": n * n / (n + 2.0) * hs * state.H_norm_sq(),
        "commutator_term": comm_term,
        "trace_sq_term": -float(np.sum(tr_ab**2)),
        "cubic_term": n * float(np.einsum("mji,mjt,lti,l->", hh, hh, hh, Hv)),
        "quad_term": n * n / (n + 2.0) * float(np.einsum("mij,mjk,i,k->", hh, hh, Hv, Hv)),
        "hhat_sq": hs,
    }
    return terms


def check_simons_identity(imm: Immersion, p: ChartPoint) -> tuple[float, float, float]:
    """Returns (lhs, rhs, relative residual) of the Simons identity."""
    t = simons_terms(imm, p)
    lhs = t["lhs_half_laplacian"]
    rhs = (
        t["hhat_grad_T"]
        + t["grad_hhat_sq"]
        + t["c_term"]
        + t["HH_term"]
        + t["commutator_term"]
        + t["trace_sq_term"]
        + t["cubic_term"]
        + t["quad_term"]
    )
    return lhs, rhs, abs(lhs - rhs) / (1.0 + abs(lhs))


def check_simons_inequality(imm: Immersion, p: ChartPoint) -> dict[str, float]:
    """Margin of the Simons inequality plus the isolated algebraic step."""
    t = simons_terms(imm, p)
    n = imm.source_dim
    lower = (
        t["hhat_grad_T"]
        + t["grad_hhat_sq"]
        + t["c_term"]
        + t["HH_term"]
        - 0.5 * (n + 3.0) * t["hhat_sq"] ** 2
    )
    margin = t["lhs_half_laplacian"] - lower

    state = geometry_state(imm, p, "with_derivatives")
    alg = algebraic_simons_bound(state.hhat.entries, state.H.components)
    return {
        "margin": margin,
        "algebraic_margin": alg["margin"],
        "spectral_consistency": alg["spectral_consistency"],
        "intermediate_margin": alg["intermediate_margin"],
    }


def curvature_contraction_closed_forms(hh: np.ndarray, Hv: np.ndarray, c_amb: float) -> dict[str, float]:
    """Brute-force assembly of the three curvature contractions of hhat with
    the Gauss-form curvature, against their closed forms in |hhat|, |H|, the
    cubic trace sum and the quadratic H-contraction.

    Returns the residual of each contraction and of the equality between the
    first and third (which differ only by rearranging a fully symmetric
    tensor)."""
    n = hh.shape[0]
    from .tensors import c_tensor_array

    h_full = hh + c_tensor_array(Hv)
    eye = np.eye(n)
    rg = (
        c_amb * (np.einsum("ik,jl->ijkl", eye, eye) - np.einsum("il,jk->ijkl", eye, eye))
        + np.einsum("mik,mjl->ijkl", h_full, h_full)
        - np.einsum("mil,mjk->ijkl", h_full, h_full)
    )
    hs = float(np.einsum("mij,mij->", hh, hh))
    Hs = float(np.dot(Hv, Hv))
    f = n / (n + 2.0)
    tri = float(np.einsum("mjk,mkl,tlj,t->", hh, hh, hh, Hv))
    quad = float(np.einsum("mij,mjk,i,k->", hh, hh, Hv, Hv))
    quartic_I = float(
        np.einsum("mij,mkl,tlj,tik->", hh, hh, hh, hh)
        - np.einsum("mij,mkl,tlk,tij->", hh, hh, hh, hh)
    )
    quartic_II = -float(np.einsum("mij,mli,tlk,tkj->", hh, hh, hh, hh))

    term_I = float(np.einsum("mij,mlk,lijk->", hh, hh, rg))
    closed_I = c_amb * hs + f * f * hs * Hs + 2.0 * f * tri + quartic_I + 2.0 * f * f * quad

    term_II = float(np.einsum("mij,mil,lkjk->", hh, hh, rg))
    closed_II = (
        (n - 1.0) * c_amb * hs
        + n * f * f * hs * Hs
        + (n - 2.0) * f * tri
        + (n - 2.0) * f * f * quad
        + quartic_II
    )

    term_III = float(np.einsum("mij,lik,jklm->", hh, hh, rg))

    return {
        "I_closed_form": abs(term_I - closed_I),
        "II_closed_form": abs(term_II - closed_II),
        "III_closed_form": abs(term_III - closed_I),
        "I_equals_III": abs(term_I - term_III),
    }


def algebraic_simons_bound(hh: np.ndarray, Hv: np.ndarray) -> dict[str, float]:
    """The purely algebraic estimate step: the curvature terms of the Simons
    identity dominate -(n+3)/2 |hhat|^4 for any trace-free tri-symmetric hhat.

    Also reports the eigen-decomposition cross-check (the cubic and quadratic
    H-contractions equal n sum lambda_i S_i* + n^2/(n+2) sum lambda_i^2) and
    the unasserted intermediate line with (|H| lambda_i + S_i*)^2.
    """
    n = hh.shape[0]
    hs = float(np.einsum("mij,mij->", hh, hh))
    prods = np.einsum("iab,jbc->ijac", hh, hh)
    comms = prods - prods.transpose(1, 0, 2, 3)
    comm_term = float(np.einsum("ijab,ijba->", comms, comms))
    tr_ab = np.einsum("iab,jab->ij", hh, hh)
    trace_sq_term = -float(np.sum(tr_ab**2))
    cubic = n * float(np.einsum("mji,mjt,lti,l->", hh, hh, hh, Hv))
    quad = n * n / (n + 2.0) * float(np.einsum("mij,mjk,i,k->", hh, hh, Hv, Hv))

    margin = comm_term + trace_sq_term + cubic + quad + 0.5 * (n + 3.0) * hs * hs

    summ = spectral_summary(CubicSymTensor(hh, tol=1e-6), VectorField1(Hv))
    spectral = abs(
        cubic + quad - (n * float(np.dot(summ.lambdas, summ.s_istar)) + n * n / (n + 2.0) * summ.s_h)
    )
    Hnorm = float(np.sqrt(np.dot(Hv, Hv)))
    inter_line = 0.5 * n * float(np.sum((Hnorm * summ.lambdas + summ.s_istar) ** 2))
    intermediate = comm_term + trace_sq_term + cubic + quad + 0.5 * (n + 3.0) * hs * hs - inter_line
    return {
        "margin": margin,
        "spectral_consistency": spectral,
        "intermediate_margin": intermediate,
    }


# ---------------------------------------------------------------------------
# Report assembly
# ---------------------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    max_residual: float
    tolerance: float
    passed: bool


@dataclass
class IdentityReport:
    immersion: str
    params: dict
    seed: int | None
    sample_points: list
    checks: list[CheckResult] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        from .geometry import _jsonable_params

        return {
            "schema": 1,
            "kind": "identities",
            "immersion": self.immersion,
            "params": _jsonable_params(self.params),
            "seed": self.seed,
            "sample_points": [
                {"chart_id": p.chart_id, "coords": p.coords.tolist()} for p in self.sample_points
            ],
            "checks": [
                {
                    "name": c.name,
                    "max_residual": c.max_residual,
                    "tolerance": c.tolerance,
                    "pass": c.passed,
                }
                for c in self.checks
            ],
            "all_pass": self.all_pass,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


DEFAULT_TOLERANCES = {
    "tri_symmetry": TOL_JET,
    "codazzi_full_symmetry": TOL_FD1,
    "h_trace_consistency": TOL_JET,
    "H_derivative_symmetry": TOL_JET,
    "T_consistency": 1e-8,
    "norm_identity": 1e-10,
    "lagrangian_condition": 1e-6,
    "gauss_two_method": TOL_FD1,
    "ricci_equation": 1e-5,
    "maslov_closedness": TOL_FD1,
    "ricci_identity": TOL_FD2,
    "laplace_contraction": TOL_FD1,
    "simons_identity_rel": 1e-3,
    "simons_inequality_margin": TOL_JET,
    "spectral_consistency": 1e-10,
}

HEAVY_POINT_COUNT = 3  # points per report for the FD-heavy checks


def run_identity_suite(
    imm: Immersion,
    points: list[ChartPoint],
    tol_scale: float = 1.0,
    seed: int | None = None,
    heavy: bool = True,
) -> IdentityReport:
    """Evaluate every identity check over the sample points and tabulate."""
    from .geometry import closedness_residual

    agg: dict[str, float] = {}

    def bump(name, value):
        agg[name] = max(agg.get(name, 0.0), float(value))

    for p in points:
        state = geometry_state(imm, p, "with_derivatives")
        for name, val in check_structural(state).items():
            bump(name, val)
        for name, val in check_gauss_ricci(state).items():
            bump(name, val)
        bump("maslov_closedness", closedness_residual(imm, p))

    if heavy:
        for p in points[:HEAVY_POINT_COUNT]:
            bump("ricci_identity", check_ricci_identity(imm, p))
            lhs, rhs = lemma_laplace_hhat(imm, p)
            bump("laplace_contraction", abs(lhs - rhs))
            _, _, rel = check_simons_identity(imm, p)
            bump("simons_identity_rel", rel)
            ineq = check_simons_inequality(imm, p)
            bump("simons_inequality_margin", max(0.0, -ineq["margin"]))
            bump("spectral_consistency", ineq["spectral_consistency"])

    report = IdentityReport(
        immersion=imm.name,
        params=imm.params,
        seed=seed,
        sample_points=list(points),
        notes=[COMMUTATOR_NOTE],
    )
    for name in DEFAULT_TOLERANCES:
        if name not in agg:
            continue
        tol = DEFAULT_TOLERANCES[name] * tol_scale
        report.checks.append(CheckResult(name, agg[name], tol, agg[name] <= tol))
    return report
