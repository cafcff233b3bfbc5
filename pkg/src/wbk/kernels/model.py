from dataclasses import dataclass, field

import numpy as np
import structlog
from scipy import linalg

from wbk.geometry import Domain, QuadratureRule, as_point, as_points, build_quadrature
from wbk.kernels.gram import GramSystem, MonomialBasis, assemble_gram
from wbk.settings import get_settings
from wbk.types.errors import DegenerateAnchor, DomainMismatch
from wbk.weights import Weight

logger = structlog.get_logger(__name__)
settings = get_settings()

__all__ = ["KernelModel", "MinimalElement", "build_kernel_model", "kernel_eval", "minimal_element"]


@dataclass(frozen=True, eq=False)
class KernelModel:
    """
    Truncated-basis approximation of the weighted Bergman kernel:
    K(z, t) = e(z) . c(t) with c(t) = conj(gram^-1 e(t)).
    """

    system: GramSystem

    @property
    def domain(self) -> Domain:
        return self.system.domain

    @property
    def weight(self) -> Weight:
        return self.system.weight

    @property
    def rule(self) -> QuadratureRule:
        return self.system.rule

    @property
    def basis(self) -> MonomialBasis:
        return self.system.basis

    def coefficients(self, t) -> np.ndarray:
        """Basis coefficients of K(., t), one column per anchor when `t` is an array."""
        e_t = self.basis.evaluate(as_points(t)).T
        c = np.conj(self.system.solve(e_t))
        return c[:, 0] if np.ndim(t) == 0 else c

    def section(self, z, t) -> np.ndarray:
        """Matrix K(z_i, t_j) without domain checks."""
        return self.basis.evaluate(as_points(z)) @ np.atleast_2d(self.coefficients(as_points(t)))

    def diagonal(self, t) -> np.ndarray:
        """K(t_j, t_j) for each anchor; real part of the computed diagonal."""
        t = as_points(t)
        e_t = self.basis.evaluate(t)
        c = np.conj(self.system.solve(e_t.T))
        return np.real(np.einsum("ij,ji->i", e_t, c))

    def function_values(self, coefficients: np.ndarray, z) -> np.ndarray:
        """Values of sum_j a_j e_j at the points z."""
        return self.basis.evaluate(as_points(z)) @ coefficients

    def norm_sq(self, coefficients: np.ndarray) -> float:
        return self.system.norm_sq(coefficients)

    def require_inside(self, *points):
        for p in points:
            z = as_points(p)
            outside = ~self.domain.contains(z)
            if outside.any():
                raise DomainMismatch(f"{z[outside][0]} is outside {self.domain.describe()}")


def build_kernel_model(
    d: Domain,
    w: Weight,
    degree_cut: int = None,
    resolution: int = None,
    order: int = None,
    rule: QuadratureRule = None,
    basis: MonomialBasis = None,
) -> KernelModel:
    """Builds the quadrature rule (unless given), the Gram system and the model in one go."""
    rule = rule or build_quadrature(d, resolution, order)
    return KernelModel(system=assemble_gram(d, w, rule, degree_cut, basis=basis))


def kernel_eval(km: KernelModel, z, t) -> complex:
    """K(z, t) for points of the model's domain."""
    z, t = as_point(z), as_point(t)
    km.require_inside(z, t)
    return complex(km.section(z, t)[0, 0])


@dataclass(frozen=True)
class MinimalElement:
    """
    The least-norm function phi in the span with phi(anchor) = 1;
    phi = K(., anchor) / K(anchor, anchor) and norm_sq = 1 / K(anchor, anchor).
    """

    anchor: complex
    coefficients: np.ndarray = field(repr=False)
    norm_sq: float
    value_at_anchor: complex


def minimal_element(km: KernelModel, t) -> MinimalElement:
    """
    Solves min ||phi||_mu subject to phi(t) = 1 as a minimum-norm least-squares problem
    in Cholesky coordinates (independently of the kernel's linear solve).

    With gram = L L^H and u = conj(a), ||phi||^2 = |L^H u|^2 and the constraint
    reads conj(e(t)) . u = 1, so v = L^H u is the min-norm solution of
    (conj(e(t)) L^-H) v = 1.
    """
    t = as_point(t)
    km.require_inside(t)
    diagonal = float(km.diagonal(t)[0])
    if diagonal <= settings.DIAGONAL_FLOOR:
        raise DegenerateAnchor(f"K(t, t) = {diagonal:.3g} at t = {t} is at or below the floor")

    e_t = km.basis.evaluate([t])[0]
    factor = km.system.factor
    # row vector conj(e(t)) L^-H, i.e. the conjugate of L^-1 e(t)
    row = np.conj(linalg.solve_triangular(factor, e_t, lower=True))
    v, *_ = np.linalg.lstsq(row[None, :], np.array([1.0 + 0j]), rcond=None)
    u = linalg.solve_triangular(factor.conj().T, v, lower=False)
    coefficients = np.conj(u)

    value = complex(e_t @ coefficients)
    norm_sq = float(np.real(np.vdot(v, v)))
    logger.debug(f"minimal element at {t=}: {norm_sq=:.12g}, {value=}")
    return MinimalElement(anchor=t, coefficients=coefficients, norm_sq=norm_sq, value_at_anchor=value)
