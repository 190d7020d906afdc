"""Pointwise curvature pipeline.

Christoffel symbols and the Riemann tensor come from the metric jet
(g, ∂g, ∂²g). Everything that needs one more derivative (Cotton, Bach, D,
divergences) differences a tensor *field* with the engine's ``tensor_step`` and
adds the Christoffel corrections, rather than using third metric derivatives.

Index conventions:
  dg[k, i, j]          = ∂_k g_ij (derivative indices first)
  gamma[k, i, j]       = Γ^k_ij
  R_abcd               = g_ae R^e_bcd, R^a_bcd = ∂_c Γ^a_db - ∂_d Γ^a_cb + ...
  Ric_bd               = g^ac R_abcd, unit sphere R_ijkl = g_ik g_jl - g_il g_jk
  S                    = Ric - R g / (2(n-1))
  C_ijk                = ∇_i S_jk - ∇_j S_ik
  covariant_derivative = DT[m, a, b, ...] = ∇_m T_ab...
All returned tensors have their indices lowered unless stated otherwise.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import Any

import numpy as np

from .errors import PreconditionError
from .geometry.metric import MetricField, ScalarField

__all__ = [
    "Symmetry",
    "TensorValue",
    "PointGeometry",
    "point_geometry",
    "christoffel",
    "riemann",
    "ricci_scalar_schouten",
    "weyl",
    "cotton",
    "cotton_components",
    "weyl_divergence_check",
    "bach",
    "bach_routes",
    "d_tensor",
    "covariant_derivative",
    "covariant_divergence",
    "covariant_hessian",
    "decomposition_residual",
    "complete_cotton_divergence",
    "ricci_identity_residual",
    "kulkarni_nomizu",
    "schouten_field",
    "weyl_field",
    "cotton_field",
]

type TensorField = Callable[[np.ndarray], np.ndarray]


class Symmetry(str, Enum):
    SYMMETRIC = "symmetric"
    ANTISYMMETRIC = "antisymmetric"  # in the first two indices
    RIEMANN = "riemann"
    TRACE_FREE = "trace_free"
    LOWER_SYMMETRIC = "lower_symmetric"  # in the last two indices


@dataclass(frozen=True)
class TensorValue:
    """Components of a tensor at one point, with declared variance and symmetries."""

    name: str
    components: np.ndarray
    variance: tuple[str, ...]
    metric: np.ndarray
    symmetries: frozenset[Symmetry] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if len(self.variance) != self.components.ndim:
            raise ValueError(
                f"{self.name}: variance {self.variance} does not match rank {self.components.ndim}"
            )
        if any(v not in ("u", "d") for v in self.variance):
            raise ValueError(f"{self.name}: variance entries must be 'u' or 'd'")

    @property
    def rank(self) -> int:
        return self.components.ndim

    @property
    def metric_inverse(self) -> np.ndarray:
        return np.linalg.inv(self.metric)

    @property
    def scale(self) -> float:
        return max(1.0, float(np.max(np.abs(self.components), initial=0.0)))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.components), initial=0.0))

    def _move(self, matrix: np.ndarray, slot: int, variance: str) -> TensorValue:
        moved = np.moveaxis(np.tensordot(matrix, self.components, axes=([1], [slot])), 0, slot)
        new_variance = list(self.variance)
        new_variance[slot] = variance
        return TensorValue(self.name, moved, tuple(new_variance), self.metric, self.symmetries)

    def raise_index(self, slot: int) -> TensorValue:
        if self.variance[slot] == "u":
            return self
        return self._move(self.metric_inverse, slot, "u")

    def lower_index(self, slot: int) -> TensorValue:
        if self.variance[slot] == "d":
            return self
        return self._move(self.metric, slot, "d")

    def lowered(self) -> TensorValue:
        value = self
        for slot in range(self.rank):
            value = value.lower_index(slot)
        return value

    def raised(self) -> TensorValue:
        value = self
        for slot in range(self.rank):
            value = value.raise_index(slot)
        return value

    def norm_squared(self) -> float:
        return float(np.sum(self.lowered().components * self.raised().components))

    def norm(self) -> float:
        return float(np.sqrt(max(self.norm_squared(), 0.0)))

    def trace_defect(self) -> float:
        """Largest single g-trace over every pair of slots."""
        lowered = self.lowered().components
        ginv = self.metric_inverse
        worst = 0.0
        for a in range(self.rank):
            for b in range(a + 1, self.rank):
                contracted = np.einsum(ginv, [0, 1], lowered, _slots(self.rank, a, b))
                worst = max(worst, float(np.max(np.abs(contracted), initial=0.0)))
        return worst

    def symmetry_defect(self) -> float:
        """Largest violation of the declared symmetries, relative to the scale."""
        t = self.lowered().components
        defects = [0.0]
        if Symmetry.SYMMETRIC in self.symmetries:
            defects.append(np.max(np.abs(t - np.swapaxes(t, 0, 1))))
        if Symmetry.ANTISYMMETRIC in self.symmetries:
            defects.append(np.max(np.abs(t + np.swapaxes(t, 0, 1))))
        if Symmetry.LOWER_SYMMETRIC in self.symmetries:
            defects.append(np.max(np.abs(t - np.swapaxes(t, -1, -2))))
        if Symmetry.RIEMANN in self.symmetries:
            defects.append(np.max(np.abs(t + np.einsum("jikl->ijkl", t))))
            defects.append(np.max(np.abs(t + np.einsum("ijlk->ijkl", t))))
            defects.append(np.max(np.abs(t - np.einsum("klij->ijkl", t))))
            defects.append(np.max(np.abs(first_bianchi(t))))
        if Symmetry.TRACE_FREE in self.symmetries:
            defects.append(self.trace_defect())
        return float(max(defects)) / self.scale

    def to_record(self) -> dict[str, Any]:
        return {
            "tensor": self.name,
            "variance": "".join(self.variance),
            "symmetries": sorted(s.value for s in self.symmetries),
            "components": self.components.tolist(),
            "symmetry_defect": self.symmetry_defect(),
        }


def _slots(rank: int, a: int, b: int) -> list[int]:
    # einsum sublist: slot a gets label 0, slot b label 1, others distinct labels
    labels = list(range(2, rank + 2))
    labels[a], labels[b] = 0, 1
    return labels


def first_bianchi(rm: np.ndarray) -> np.ndarray:
    return rm + np.einsum("iljk->ijkl", rm) + np.einsum("iklj->ijkl", rm)


def kulkarni_nomizu(h: np.ndarray, k: np.ndarray) -> np.ndarray:
    """(h ⊙ k)_ijkl = h_ik k_jl + h_jl k_ik - h_il k_jk - h_jk k_il."""
    return (
        np.einsum("ik,jl->ijkl", h, k)
        + np.einsum("jl,ik->ijkl", h, k)
        - np.einsum("il,jk->ijkl", h, k)
        - np.einsum("jk,il->ijkl", h, k)
    )


@dataclass(frozen=True)
class PointGeometry:
    """Curvature data built from the metric 2-jet at one point."""

    x: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    dg: np.ndarray
    gamma: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    schouten: np.ndarray

    @property
    def dimension(self) -> int:
        return self.g.shape[0]

    def weyl(self) -> np.ndarray:
        n = self.dimension
        if n < 3:
            raise PreconditionError(f"Weyl tensor needs n >= 3, got {n}")
        g, ric = self.g, self.ricci
        return (
            self.riemann
            - kulkarni_nomizu(ric, g) / (n - 2)
            + self.scalar * kulkarni_nomizu(g, g) / (2.0 * (n - 1) * (n - 2))
        )


def point_geometry(metric: MetricField, x: np.ndarray) -> PointGeometry:
    g, dg, d2g = metric.jet(x, 2)
    n = g.shape[0]
    g_inv = np.linalg.inv(g)
    gamma_lower = 0.5 * (
        np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg
    )
    gamma = np.einsum("kl,lij->kij", g_inv, gamma_lower)
    dgamma_lower = 0.5 * (
        np.einsum("mijl->mlij", d2g) + np.einsum("mjil->mlij", d2g) - d2g
    )
    dg_inv = -np.einsum("ka,mab,bl->mkl", g_inv, dg, g_inv)
    dgamma = np.einsum("mkl,lij->mkij", dg_inv, gamma_lower) + np.einsum(
        "kl,mlij->mkij", g_inv, dgamma_lower
    )
    riemann_up = (
        np.einsum("cadb->abcd", dgamma)
        - np.einsum("dacb->abcd", dgamma)
        + np.einsum("ace,edb->abcd", gamma, gamma)
        - np.einsum("ade,ecb->abcd", gamma, gamma)
    )
    rm = np.einsum("ae,ebcd->abcd", g, riemann_up)
    ricci = np.einsum("ac,abcd->bd", g_inv, rm)
    ricci = 0.5 * (ricci + ricci.T)
    scalar = float(np.einsum("ij,ij->", g_inv, ricci))
    schouten = ricci - scalar * g / (2.0 * (n - 1))
    return PointGeometry(np.asarray(x, float), g, g_inv, dg, gamma, rm, ricci, scalar, schouten)


def christoffel(metric: MetricField, x: np.ndarray) -> TensorValue:
    """Γ^k_ij; components indexed [k, i, j]."""
    geo = point_geometry(metric, x)
    return TensorValue(
        "christoffel", geo.gamma, ("u", "d", "d"), geo.g, frozenset({Symmetry.LOWER_SYMMETRIC})
    )


def riemann(metric: MetricField, x: np.ndarray) -> TensorValue:
    geo = point_geometry(metric, x)
    return TensorValue("riemann", geo.riemann, ("d",) * 4, geo.g, frozenset({Symmetry.RIEMANN}))


def ricci_scalar_schouten(
    metric: MetricField, x: np.ndarray
) -> tuple[TensorValue, float, TensorValue]:
    """(Ric, R, S) at x."""
    geo = point_geometry(metric, x)
    sym = frozenset({Symmetry.SYMMETRIC})
    return (
        TensorValue("ricci", geo.ricci, ("d", "d"), geo.g, sym),
        geo.scalar,
        TensorValue("schouten", geo.schouten, ("d", "d"), geo.g, sym),
    )


def weyl(metric: MetricField, x: np.ndarray) -> TensorValue:
    geo = point_geometry(metric, x)
    return TensorValue(
        "weyl",
        geo.weyl(),
        ("d",) * 4,
        geo.g,
        frozenset({Symmetry.RIEMANN, Symmetry.TRACE_FREE}),
    )


def decomposition_residual(metric: MetricField, x: np.ndarray) -> float:
    """max |Rm - W - (S ⊙ g)/(n-2)|, reassembling Riemann from Weyl and Schouten."""
    geo = point_geometry(metric, x)
    n = geo.dimension
    rebuilt = geo.weyl() + kulkarni_nomizu(geo.schouten, geo.g) / (n - 2)
    return float(np.max(np.abs(geo.riemann - rebuilt)))


def schouten_field(metric: MetricField) -> TensorField:
    return lambda y: point_geometry(metric, y).schouten


def weyl_field(metric: MetricField) -> TensorField:
    return lambda y: point_geometry(metric, y).weyl()


def _field_step(metric: MetricField, h: float | None) -> float:
    return metric.engine.tensor_step if h is None else h


def covariant_derivative(
    metric: MetricField, tensor: TensorField, x: np.ndarray, h: float | None = None
) -> np.ndarray:
    """∇_m T_{a1...ak} for a field of all-lower components; the new index comes first."""
    x = np.asarray(x, dtype=float)
    step = _field_step(metric, h)
    partial_t = metric.engine.gradient(tensor, x, step)
    t = np.asarray(tensor(x), dtype=float)
    gamma = point_geometry(metric, x).gamma
    result = partial_t.copy()
    for slot in range(t.ndim):
        # Σ_p Γ^p_{m a_slot} T[..p..] -> axes (m, a_slot, rest)
        correction = np.tensordot(gamma, t, axes=([0], [slot]))
        result -= np.moveaxis(correction, 1, 1 + slot)
    return result


def covariant_divergence(
    metric: MetricField,
    tensor: TensorField,
    x: np.ndarray,
    slot: int = 0,
    h: float | None = None,
) -> np.ndarray:
    """∇^i T_{..i..} contracting the derivative with index ``slot`` of T."""
    dt = covariant_derivative(metric, tensor, x, h)
    g_inv = np.linalg.inv(metric.components(x))
    return np.tensordot(g_inv, dt, axes=([0, 1], [0, 1 + slot]))


def cotton_components(metric: MetricField, x: np.ndarray, h: float | None = None) -> np.ndarray:
    ds = covariant_derivative(metric, schouten_field(metric), x, h)
    return ds - np.swapaxes(ds, 0, 1)


def cotton_field(metric: MetricField, h: float | None = None) -> TensorField:
    return partial(cotton_components, metric, h=h)


def cotton(metric: MetricField, x: np.ndarray) -> TensorValue:
    """C_ijk = ∇_i S_jk - ∇_j S_ik."""
    g = metric.components(x)
    return TensorValue(
        "cotton",
        cotton_components(metric, x),
        ("d",) * 3,
        g,
        frozenset({Symmetry.ANTISYMMETRIC, Symmetry.TRACE_FREE}),
    )


def _weyl_divergence(metric: MetricField, x: np.ndarray, h: float | None = None) -> np.ndarray:
    """g^{ml} ∇_m W_ijkl."""
    dw = covariant_derivative(metric, weyl_field(metric), x, h)
    g_inv = np.linalg.inv(metric.components(x))
    return np.einsum("ml,mijkl->ijk", g_inv, dw)


def weyl_divergence_check(metric: MetricField, x: np.ndarray) -> float:
    """max |W_ijkl,^l + ((n-3)/(n-2)) C_ijk|."""
    n = metric.dimension
    if n < 4:
        raise PreconditionError(f"Weyl divergence check needs n >= 4, got {n}")
    div_w = _weyl_divergence(metric, x)
    c = cotton_components(metric, x)
    return float(np.max(np.abs(div_w + (n - 3) / (n - 2) * c)))


def _weyl_schouten_term(geo: PointGeometry) -> np.ndarray:
    s_up = geo.g_inv @ geo.schouten @ geo.g_inv
    return np.einsum("il,ijkl->jk", s_up, geo.weyl())


def bach(metric: MetricField, x: np.ndarray, route: str = "cotton") -> TensorValue:
    """Bach tensor.

    ``route="cotton"``: (n-2) B_jk = -∇^i C_ijk + S^il W_ijkl (all n >= 3).
    ``route="weyl"``:   B_jk = ∇^i ∇^l W_ijkl / (n-3) + S^il W_ijkl / (n-2) (n >= 4).
    """
    n = metric.dimension
    geo = point_geometry(metric, x)
    sw = _weyl_schouten_term(geo)
    match route:
        case "cotton":
            div_c = covariant_divergence(metric, cotton_field(metric), x, slot=0)
            b = (-div_c + sw) / (n - 2)
        case "weyl":
            if n < 4:
                raise PreconditionError("The Weyl-divergence route of Bach needs n >= 4")
            div_div_w = covariant_divergence(
                metric, partial(_weyl_divergence, metric), x, slot=0
            )
            b = div_div_w / (n - 3) + sw / (n - 2)
        case _:
            raise ValueError(f"Unknown Bach route '{route}'")
    return TensorValue(f"bach[{route}]", b, ("d", "d"), geo.g, frozenset({Symmetry.SYMMETRIC}))


def bach_routes(metric: MetricField, x: np.ndarray) -> tuple[TensorValue, TensorValue | None, float]:
    """Both Bach routes and their max difference (the Weyl route only when n >= 4)."""
    primary = bach(metric, x, "cotton")
    if metric.dimension < 4:
        return primary, None, 0.0
    secondary = bach(metric, x, "weyl")
    return primary, secondary, float(np.max(np.abs(primary.components - secondary.components)))


def d_tensor(metric: MetricField, f: ScalarField, x: np.ndarray) -> TensorValue:
    """D_ijk = f² C_ijk - f W_ijkl ∇^l f."""
    geo = point_geometry(metric, x)
    fx = f.value(x)
    grad_up = geo.g_inv @ f.gradient(x)
    c = cotton_components(metric, x)
    d = fx**2 * c - fx * np.einsum("ijkl,l->ijk", geo.weyl(), grad_up)
    return TensorValue(
        "d_tensor", d, ("d",) * 3, geo.g, frozenset({Symmetry.ANTISYMMETRIC, Symmetry.TRACE_FREE})
    )


def covariant_hessian(metric: MetricField, f: ScalarField, x: np.ndarray) -> np.ndarray:
    """∇_i ∇_j f = ∂_i ∂_j f - Γ^k_ij ∂_k f."""
    gamma = point_geometry(metric, x).gamma
    return f.partial_hessian(x) - np.einsum("kij,k->ij", gamma, f.gradient(x))


def ricci_identity_residual(metric: MetricField, f: ScalarField, x: np.ndarray) -> float:
    """max |f_{k,ji} - f_{k,ij} - R_ijkl f^l| with f_{k,ji} = ∇_i ∇_j ∇_k f."""
    dh = covariant_derivative(metric, lambda y: covariant_hessian(metric, f, y), x)
    geo = point_geometry(metric, x)
    lhs = dh - np.swapaxes(dh, 0, 1)
    rhs = np.einsum("ijkl,l->ijk", geo.riemann, geo.g_inv @ f.gradient(x))
    return float(np.max(np.abs(lhs - rhs)))


def complete_cotton_divergence(metric: MetricField, x: np.ndarray, h: float = 1e-2) -> float:
    """The scalar C_{ijk,}^{ijk} = ∇^k ∇^j ∇^i C_ijk.

    Four nested differences; the step is the coarse one to keep roundoff in check.
    """
    c = cotton_field(metric, h=h)

    def div_c(y: np.ndarray) -> np.ndarray:
        return covariant_divergence(metric, c, y, slot=0, h=h)

    def div_div_c(y: np.ndarray) -> np.ndarray:
        return covariant_divergence(metric, div_c, y, slot=0, h=h)

    return float(covariant_divergence(metric, div_div_c, x, slot=0, h=h))
