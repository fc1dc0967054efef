"""Lagrangian geometry in CP^n through horizontal lifts of homogeneous
coordinates.

A Lagrangian immersion into CP^n (Fubini-Study metric of holomorphic
sectional curvature 4) is handled by lifting its unit-norm homogeneous
representative to a horizontal (Legendrian) immersion into S^{2n+1}: the
representative is renormalized pointwise, a phase potential solving the
horizontality condition is integrated jet-by-jet, and the phase at the base
point is pinned so geometry states do not depend on the incoming
representative.  The flat-ambient frame machinery then applies verbatim in
C^{n+1}, with the ambient curvature constant set to 1.
"""

from __future__ import annotations

import math

import numpy as np

from .immersions import (
    AMBIENT_SPHERE,
    ChartPoint,
    Immersion,
    ImmersionJet,
    SphereAtlas,
    eval_jet,
    register_family,
)
from .geometry import NonLagrangianError
from .jets import ComplexJet, Jet, jet_space, potential_from_gradient

HORIZONTALITY_TOL = 1e-9


class HorizontalityError(NonLagrangianError):
    pass


# ---------------------------------------------------------------------------
# Homogeneous points
# ---------------------------------------------------------------------------


def normalize_representative(z: np.ndarray) -> np.ndarray:
    """Unit-Hermitian-norm representative of a point of CP^n."""
    z = np.asarray(z, dtype=complex)
    nrm = float(np.sqrt(np.sum(np.abs(z) ** 2)))
    if nrm < 1e-300:
        raise ValueError("zero vector is not a projective point")
    return z / nrm


class HomogeneousPoint:
    """Point of CP^n held as a unit-norm homogeneous representative.

    Two representatives differing by a unit-modulus scalar name the same
    point; equality is tested projectively.
    """

    __slots__ = ("z",)

    def __init__(self, z):
        self.z = normalize_representative(z)
        if abs(float(np.sum(np.abs(self.z) ** 2)) - 1.0) > 1e-12:
            raise ValueError("representative is not unit norm")

    def same_point(self, other: "HomogeneousPoint", tol: float = 1e-10) -> bool:
        return projective_distance(self.z, other.z) < tol

    def __repr__(self):
        return f"HomogeneousPoint({self.z!r})"


def projective_distance(z1: np.ndarray, z2: np.ndarray) -> float:
    """Chordal Fubini-Study distance sqrt(1 - |<z1, z2>|^2) of unit reps."""
    z1 = normalize_representative(z1)
    z2 = normalize_representative(z2)
    return float(np.sqrt(max(0.0, 1.0 - np.abs(np.vdot(z2, z1)) ** 2)))


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------


def make_whitney_cpn(theta: float, n: int) -> Immersion:
    """Whitney sphere in CP^n: homogeneous components

    z_j = x_j / (ch t + i sh t x_{n+1}),  j <= n,
    z_{n+1} = (sh t ch t (1 + x_{n+1}^2) + i x_{n+1}) / (ch^2 t + sh^2 t x_{n+1}^2),

    renormalized pointwise to a unit representative.
    """
    if theta <= 0:
        raise ValueError("theta must be positive (theta = 0 is the totally geodesic RP^n)")
    if n < 2:
        raise ValueError("need n >= 2")
    atlas = SphereAtlas(n)
    ch, sh = math.cosh(theta), math.sinh(theta)

    def jet_fn(chart_id, coords, order):
        sp = jet_space(n, order)
        u = Jet.variables(sp, coords)
        x = atlas.embed_jets(chart_id, u)
        xl = x[n]
        denom = ComplexJet(Jet.constant(sp, ch, xl.c.shape[1]), xl.scaled(sh))
        inv = ComplexJet.from_real(Jet.constant(sp, 1.0, xl.c.shape[1])) / denom
        zs = [ComplexJet.from_real(x[j]) * inv for j in range(n)]
        xl2 = xl * xl
        last_num = ComplexJet((1.0 + xl2).scaled(sh * ch), xl)
        last_den = ch * ch + xl2.scaled(sh * sh)
        zs.append(ComplexJet(last_num.re / last_den, last_num.im / last_den))
        norm2 = zs[0].abs2()
        for z in zs[1:]:
            norm2 = norm2 + z.abs2()
        inv_norm = 1.0 / norm2.sqrt()
        out = []
        for z in zs:
            w = z.scale_real(inv_norm)
            out.extend((w.re, w.im))
        return out

    return Immersion(
        name="whitney_cpn",
        source_dim=n,
        ambient=AMBIENT_SPHERE,
        ambient_complex_dim=n + 1,
        params={"theta": float(theta), "n": n},
        atlas=atlas,
        jet_fn=jet_fn,
    )


def make_rpn(n: int) -> Immersion:
    """Totally geodesic real form: x in S^n -> [x] in CP^n."""
    atlas = SphereAtlas(n)

    def jet_fn(chart_id, coords, order):
        sp = jet_space(n, order)
        u = Jet.variables(sp, coords)
        x = atlas.embed_jets(chart_id, u)
        out = []
        for xj in x:
            z = ComplexJet.from_real(xj)
            out.extend((z.re, z.im))
        return out

    return Immersion(
        name="rpn",
        source_dim=n,
        ambient=AMBIENT_SPHERE,
        ambient_complex_dim=n + 1,
        params={"n": n},
        atlas=atlas,
        jet_fn=jet_fn,
    )


def phase_twist(base: Immersion, coeffs) -> Immersion:
    """Multiply the homogeneous representative by exp(i chi(u)) with
    chi = sum_a coeffs[a] * sin(u_a); exercises projective gauge invariance."""
    coeffs = np.asarray(coeffs, dtype=float)

    def jet_fn(chart_id, coords, order):
        jets = base.jet_fn(chart_id, coords, order)
        sp = jets[0].space
        u = Jet.variables(sp, coords)
        chi = None
        for a in range(base.source_dim):
            term = u[a].sin().scaled(coeffs[a])
            chi = term if chi is None else chi + term
        phase = ComplexJet(chi.cos(), chi.sin())
        out = []
        for k in range(0, len(jets), 2):
            w = ComplexJet(jets[k], jets[k + 1]) * phase
            out.extend((w.re, w.im))
        return out

    return Immersion(
        name=f"phase_twist({base.name})",
        source_dim=base.source_dim,
        ambient=base.ambient,
        ambient_complex_dim=base.ambient_complex_dim,
        params=dict(base.params, twist=coeffs),
        atlas=base.atlas,
        jet_fn=jet_fn,
    )


# ---------------------------------------------------------------------------
# Horizontal lift
# ---------------------------------------------------------------------------


def horizontal_lift_jets(imm: Immersion, chart_id: int, coords: np.ndarray, order: int) -> list[Jet]:
    """Jet of the horizontal (Legendrian) lift into S^{2n+1}.

    Steps: renormalize the representative, integrate the phase potential psi
    with d psi = -Re<dZ, iZ>, rotate by e^{i psi}, then pin the phase so the
    largest component at the point is real-positive.  Raises if the
    horizontality 1-form fails to be closed, which happens exactly when the
    underlying immersion is not Lagrangian in CP^n.
    """
    jets = imm.jet_fn(chart_id, coords, order)
    sp = jets[0].space
    m = len(jets) // 2
    Z = [ComplexJet(jets[2 * k], jets[2 * k + 1]) for k in range(m)]
    norm2 = Z[0].abs2()
    for z in Z[1:]:
        norm2 = norm2 + z.abs2()
    inv_norm = 1.0 / norm2.sqrt()
    Z = [z.scale_real(inv_norm) for z in Z]

    # a_a = Re<d_a Z, i Z> = sum_k (Im dZ_k Re Z_k - Re dZ_k Im Z_k)
    nvars = sp.nvars
    a_forms = []
    for a in range(nvars):
        acc = None
        for z in Z:
            term = z.im.partial(a) * z.re - z.re.partial(a) * z.im
            acc = term if acc is None else acc + term
        a_forms.append(acc)
    psi = potential_from_gradient(sp, a_forms)
    phase = ComplexJet(psi.cos(), psi.sin())
    W = [z * phase for z in Z]

    # closedness / horizontality residual across all computed jet orders
    resid = 0.0
    for a in range(nvars):
        acc = None
        for w in W:
            term = w.im.partial(a) * w.re - w.re.partial(a) * w.im
            acc = term if acc is None else acc + term
        resid = max(resid, float(np.max(np.abs(acc.c))))
    if resid > HORIZONTALITY_TOL:
        raise HorizontalityError(
            "horizontality gauge not solvable (Lagrangian condition violated "
            f"in CP^n): residual {resid:.3e}"
        )

    # pin the representative: largest component real-positive at the point
    vals = np.stack([w.re.value + 1j * w.im.value for w in W])  # (m, B)
    k0 = np.argmax(np.abs(vals), axis=0)
    pick = np.take_along_axis(vals, k0[None, :], axis=0)[0]
    phase_const = pick.conj() / np.abs(pick)
    W = [w.scale_complex(phase_const.real, phase_const.imag) for w in W]

    out = []
    for w in W:
        out.extend((w.re, w.im))
    return out


def horizontal_jet(imm: Immersion, p: ChartPoint, order: int) -> ImmersionJet:
    """Public artifact: the lifted jet with its multi-index partials."""
    lifted = Immersion(
        name=f"lift({imm.name})",
        source_dim=imm.source_dim,
        ambient=imm.ambient,
        ambient_complex_dim=imm.ambient_complex_dim,
        params=imm.params,
        atlas=imm.atlas,
        jet_fn=lambda cid, coords, o: horizontal_lift_jets(imm, cid, coords, o),
    )
    return eval_jet(lifted, p, order)


def cpn_geometry_state(imm: Immersion, p: ChartPoint, depth: str = "with_derivatives", frame_gauge=None):
    if imm.ambient != AMBIENT_SPHERE:
        raise ValueError("cpn_geometry_state needs a homogeneous-sphere immersion")
    from .geometry import geometry_state

    return geometry_state(imm, p, depth, frame_gauge)


register_family("whitney_cpn", lambda p: make_whitney_cpn(p.get("theta", 1.0), int(p.get("n", 2))))
register_family("rpn", lambda p: make_rpn(int(p.get("n", 2))))
