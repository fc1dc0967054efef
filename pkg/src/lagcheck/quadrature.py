"""Quadrature over the compact model manifolds and the energy functionals.

Sphere rules are tensor-product Gauss-Legendre in hyperspherical angles; the
nodes are transitioned into the stereographic atlas and carry the exact
angle-to-chart Jacobian, so an integral is the plain weighted sum
sum_k w_k * f(p_k) * density_k with the density read off the induced metric.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import scalar_samples, fd_gradient, bundle_at
from .immersions import (
    ChartPoint,
    Immersion,
    SphereAtlas,
    TorusAtlas,
)
from .jets import Jet, jet_space


def sphere_volume(n: int) -> float:
    return 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)


@dataclass
class QuadratureRule:
    """Nodes in the immersion's atlas plus parameter-space weights.

    `weights` carry the measure of the parameter box (their sum is its
    volume); `chart_jacobians` convert that measure to the chart so that the
    induced-metric density can be evaluated per node.
    """

    domain: str  # "sphere" | "torus"
    n: int
    degree: int
    chart_ids: np.ndarray
    coords: np.ndarray  # (N, n)
    weights: np.ndarray
    chart_jacobians: np.ndarray
    angles: np.ndarray | None = None
    round_density: np.ndarray | None = None

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")

    @property
    def node_count(self) -> int:
        return len(self.weights)

    def nodes(self) -> list[ChartPoint]:
        return [ChartPoint(int(c), x) for c, x in zip(self.chart_ids, self.coords)]

    def parameter_volume(self) -> float:
        return float(np.sum(self.weights))

    def round_sphere_volume(self) -> float:
        """Self-check: integrate 1 against the round-sphere angle density."""
        if self.domain != "sphere":
            raise ValueError("round-sphere check only applies to sphere rules")
        return float(np.sum(self.weights * self.round_density))


def _gl_nodes(a: float, b: float, npts: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(npts)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def torus_rule(n: int, degree: int = 30) -> QuadratureRule:
    t, w = _gl_nodes(0.0, 2.0 * math.pi, degree)
    grids = np.meshgrid(*([t] * n), indexing="ij")
    wgrids = np.meshgrid(*([w] * n), indexing="ij")
    coords = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return QuadratureRule(
        domain="torus",
        n=n,
        degree=degree,
        chart_ids=np.zeros(len(coords), dtype=int),
        coords=coords,
        weights=weights,
        chart_jacobians=np.ones(len(coords)),
    )


def _angles_to_embedded(angles: np.ndarray, n: int) -> np.ndarray:
    """Hyperspherical angles (theta_1..theta_{n-1}, phi) -> x in S^n."""
    N = len(angles)
    x = np.empty((N, n + 1))
    sin_prod = np.ones(N)
    for i in range(n - 1):
        x[:, i] = sin_prod * np.cos(angles[:, i])
        sin_prod = sin_prod * np.sin(angles[:, i])
    x[:, n - 1] = sin_prod * np.cos(angles[:, n - 1])
    x[:, n] = sin_prod * np.sin(angles[:, n - 1])
    return x


def _chart_jacobian(angles: np.ndarray, chart_id: int, n: int) -> np.ndarray:
    """|det d(chart coords)/d(angles)| via order-1 jets."""
    sp = jet_space(n, 1)
    th = Jet.variables(sp, angles.T)
    sin_prod = None
    xs = []
    for i in range(n - 1):
        ci = th[i].cos()
        term = ci if sin_prod is None else sin_prod * ci
        xs.append(term)
        si = th[i].sin()
        sin_prod = si if sin_prod is None else sin_prod * si
    last_cos = th[n - 1].cos()
    last_sin = th[n - 1].sin()
    xs.append(sin_prod * last_cos if sin_prod is not None else last_cos)
    xs.append(sin_prod * last_sin if sin_prod is not None else last_sin)
    # stereographic chart: u = x' / (1 -+ x_{n+1})
    denom = (1.0 - xs[n]) if chart_id == 0 else (1.0 + xs[n])
    inv = 1.0 / denom
    us = [xs[j] * inv for j in range(n)]
    jac = np.empty((len(angles), n, n))
    for j in range(n):
        for a in range(n):
            alpha = [0] * n
            alpha[a] = 1
            jac[:, j, a] = us[j].deriv(tuple(alpha))
    return np.abs(np.linalg.det(jac))


def sphere_rule(n: int, degree: int = 30) -> QuadratureRule:
    """Tensor-product Gauss-Legendre in hyperspherical angles on S^n."""
    if n < 2:
        raise ValueError("sphere rules need n >= 2")
    polar, wpolar = _gl_nodes(0.0, math.pi, degree)
    azim, wazim = _gl_nodes(0.0, 2.0 * math.pi, degree)
    axes = [polar] * (n - 1) + [azim]
    waxes = [wpolar] * (n - 1) + [wazim]
    grids = np.meshgrid(*axes, indexing="ij")
    wgrids = np.meshgrid(*waxes, indexing="ij")
    angles = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)

    x = _angles_to_embedded(angles, n)
    chart_ids = (x[:, n] > 0).astype(int)
    denom = np.where(chart_ids == 0, 1.0 - x[:, n], 1.0 + x[:, n])
    coords = x[:, :n] / denom[:, None]

    round_density = np.ones(len(angles))
    for i in range(n - 1):
        round_density *= np.sin(angles[:, i]) ** (n - 1 - i)

    jacobians = np.empty(len(angles))
    for cid in (0, 1):
        mask = chart_ids == cid
        if np.any(mask):
            jacobians[mask] = _chart_jacobian(angles[mask], cid, n)

    return QuadratureRule(
        domain="sphere",
        n=n,
        degree=degree,
        chart_ids=chart_ids,
        coords=coords,
        weights=weights,
        chart_jacobians=jacobians,
        angles=angles,
        round_density=round_density,
    )


def rule_for(imm: Immersion, degree: int = 30) -> QuadratureRule:
    if isinstance(imm.atlas, SphereAtlas):
        return sphere_rule(imm.source_dim, degree)
    if isinstance(imm.atlas, TorusAtlas):
        return torus_rule(imm.source_dim, degree)
    raise ValueError(f"no compact quadrature domain for {imm.name}")


def _check_rule(imm: Immersion, rule: QuadratureRule):
    if rule.n != imm.source_dim:
        raise ValueError("rule dimension does not match the immersion")
    if rule.domain == "sphere" and not isinstance(imm.atlas, SphereAtlas):
        raise ValueError("sphere rule applied to a non-sphere immersion")
    if rule.domain == "torus" and not isinstance(imm.atlas, TorusAtlas):
        raise ValueError("torus rule applied to a non-torus immersion")


def _node_scalars(imm: Immersion, rule: QuadratureRule, names: list[str]) -> dict[str, np.ndarray]:
    out = {name: np.empty(rule.node_count) for name in names}
    for cid in np.unique(rule.chart_ids):
        mask = rule.chart_ids == cid
        vals = scalar_samples(imm, int(cid), rule.coords[mask], names)
        for name in names:
            out[name][mask] = vals[name]
    return out


def integrate(imm: Immersion, f, rule: QuadratureRule) -> float:
    """Integral of a pointwise scalar against the induced volume measure.

    `f` is either the name of a pipeline scalar ('hhat_sq', 'h_sq', 'H_sq',
    'one') or a callable on ChartPoint.  The reduction is a single np.sum
    over the fixed node order (pairwise), so results are run-to-run stable.
    """
    _check_rule(imm, rule)
    if isinstance(f, str):
        names = ["sqrt_det_g"] if f == "one" else ["sqrt_det_g", f]
        vals = _node_scalars(imm, rule, names)
        fv = np.ones(rule.node_count) if f == "one" else vals[f]
        dens = vals["sqrt_det_g"]
    else:
        dens = _node_scalars(imm, rule, ["sqrt_det_g"])["sqrt_det_g"]
        fv = np.array([f(p) for p in rule.nodes()])
    return float(np.sum(rule.weights * rule.chart_jacobians * fv * dens))


def r2_window_limit(imm: Immersion) -> tuple[float, str]:
    """The gap-hypothesis quantity lim R^{-2} int_{M_R} |h|^2.

    Zero for compact bodies (the integral stabilizes while R^{-2} -> 0) and
    zero for the totally geodesic plane (h vanishes identically)."""
    if imm.compact:
        return 0.0, "compact: integral over M_R stabilizes while R^{-2} -> 0"
    if imm.name == "lagrangian_plane":
        return 0.0, "flat plane: |h| = 0 identically"
    raise ValueError("limit quantity only defined for compact bodies and the plane")


@dataclass
class EnergyReport:
    """Energy functionals of one immersion over its model manifold."""

    immersion: str
    params: dict
    n: int
    degree: int
    node_count: int
    volume: float
    int_hhat_n: float
    int_hhat_sq: float
    int_h_sq: float
    int_H_sq: float
    r2_limit: float
    r2_limit_note: str
    entries: dict = field(init=False)

    def __post_init__(self):
        vals = [self.volume, self.int_hhat_n, self.int_hhat_sq, self.int_h_sq, self.int_H_sq]
        if any(v < -1e-12 for v in vals):
            raise ValueError("energy entries must be nonnegative")
        if self.int_hhat_sq > self.int_h_sq + 1e-9 * max(1.0, self.int_h_sq):
            raise ValueError("int |hhat|^2 exceeds int |h|^2")
        self.entries = {
            "volume": self.volume,
            "int_hhat_n": self.int_hhat_n,
            "int_hhat_sq": self.int_hhat_sq,
            "int_h_sq": self.int_h_sq,
            "int_H_sq": self.int_H_sq,
        }

    def to_dict(self) -> dict:
        from .geometry import _jsonable_params

        return {
            "schema": 1,
            "kind": "energy",
            "immersion": self.immersion,
            "params": _jsonable_params(self.params),
            "rule": {"n": self.n, "degree": self.degree, "node_count": self.node_count},
            "entries": self.entries,
            "r2_limit": self.r2_limit,
            "r2_limit_note": self.r2_limit_note,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        lines = ["name,value,degree,node_count"]
        for name, value in self.entries.items():
            lines.append(f"{name},{value!r},{self.degree},{self.node_count}")
        lines.append(f"r2_limit,{self.r2_limit!r},{self.degree},{self.node_count}")
        return "\n".join(lines) + "\n"


def energy_report(imm: Immersion, rule: QuadratureRule) -> EnergyReport:
    if not imm.compact:
        raise ValueError("energy report needs a compact model domain")
    _check_rule(imm, rule)
    vals = _node_scalars(imm, rule, ["sqrt_det_g", "hhat_sq", "h_sq", "H_sq"])
    base = rule.weights * rule.chart_jacobians * vals["sqrt_det_g"]
    n = imm.source_dim
    limit, note = r2_window_limit(imm)
    return EnergyReport(
        immersion=imm.name,
        params=imm.params,
        n=n,
        degree=rule.degree,
        node_count=rule.node_count,
        volume=float(np.sum(base)),
        int_hhat_n=float(np.sum(base * vals["hhat_sq"] ** (n / 2.0))),
        int_hhat_sq=float(np.sum(base * vals["hhat_sq"])),
        int_h_sq=float(np.sum(base * vals["h_sq"])),
        int_H_sq=float(np.sum(base * vals["H_sq"])),
        r2_limit=limit,
        r2_limit_note=note,
    )


def michael_simon_ratio(imm: Immersion, v, rule: QuadratureRule) -> dict:
    """Sobolev-type diagnostic pair: the L^{n/(n-1)} norm of a nonnegative
    test function against int |grad v| + v |H|, plus the squared-exponent
    variant for n >= 3.  The constant is not asserted, only reported."""
    _check_rule(imm, rule)
    n = imm.source_dim
    vals = _node_scalars(imm, rule, ["sqrt_det_g", "H_sq"])
    base = rule.weights * rule.chart_jacobians * vals["sqrt_det_g"]

    nodes = rule.nodes()
    vv = np.array([v(p) for p in nodes])
    if np.any(vv < -1e-12):
        raise ValueError("negative test function detected at a node")
    vv = np.maximum(vv, 0.0)

    grad_norm = np.empty(rule.node_count)
    for cid in np.unique(rule.chart_ids):
        mask = np.where(rule.chart_ids == cid)[0]
        fb = bundle_at(imm, int(cid), rule.coords[mask], 2)
        g_inv = np.einsum("iab,icb->acb", fb.B0, fb.B0)
        for row, k in enumerate(mask):
            dv = fd_gradient(v, nodes[k])
            grad_norm[k] = math.sqrt(max(0.0, float(np.einsum("ac,a,c->", g_inv[..., row], dv, dv))))

    habs = np.sqrt(vals["H_sq"])
    lhs = float(np.sum(base * vv ** (n / (n - 1.0)))) ** ((n - 1.0) / n)
    rhs = float(np.sum(base * (grad_norm + vv * habs)))
    out = {"ms_lhs": lhs, "ms_rhs_no_constant": rhs}
    if n >= 3:
        p = 2.0 * n / (n - 2.0)
        out["eq320_lhs"] = float(np.sum(base * vv**p)) ** ((n - 2.0) / n)
        out["eq320_rhs_no_constant"] = float(np.sum(base * (grad_norm**2 + vv**2 * vals["H_sq"])))
    else:
        out["eq320_lhs"] = None
        out["eq320_rhs_no_constant"] = None
    return out
