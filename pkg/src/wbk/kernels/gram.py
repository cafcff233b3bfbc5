"""
Weighted Gram systems over a truncated (scaled) monomial basis.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
import structlog
from scipy import linalg
from scipy.special import comb

from wbk.geometry import Domain, QuadratureRule
from wbk.settings import get_settings
from wbk.types.errors import DomainMismatch, InvariantViolation, SingularGram
from wbk.weights import Weight, check_positive

logger = structlog.get_logger(__name__)
settings = get_settings()

__all__ = [
    "MonomialBasis",
    "GramSystem",
    "basis_for",
    "assemble_gram",
    "gram_from_values",
    "assemble_product_gram",
]


@dataclass(frozen=True)
class MonomialBasis:
    """
    e_k(z) = ((z - center) / scale)^k for k >= 0, and
    e_k(z) = (inner_scale / (z - center))^|k| for k < 0 (Laurent terms, annuli only).
    """

    center: complex
    scale: float
    powers: tuple
    inner_scale: Optional[float] = None

    def __len__(self) -> int:
        return len(self.powers)

    @property
    def degree_cut(self) -> int:
        return max(abs(k) for k in self.powers)

    @property
    def is_laurent(self) -> bool:
        return min(self.powers) < 0

    def index_of(self, power: int) -> int:
        return self.powers.index(power)

    def evaluate(self, z) -> np.ndarray:
        """Design matrix with one row per point and one column per basis function."""
        w = np.asarray(z, dtype=complex).reshape(-1) - self.center
        powers = np.asarray(self.powers)
        positive = powers >= 0
        out = np.empty((len(w), len(powers)), dtype=complex)
        out[:, positive] = (w[:, None] / self.scale) ** powers[positive][None, :]
        if not positive.all():
            out[:, ~positive] = (self.inner_scale / w[:, None]) ** (-powers[~positive])[None, :]
        return out

    def raw_monomial(self, degree: int) -> np.ndarray:
        """
        Coefficients of z^degree (about the origin) in this basis,
        by binomial expansion about `center`.
        """
        if degree < 0 or degree not in self.powers:
            raise ValueError(f"z^{degree} is not in the span of this basis")
        coefficients = np.zeros(len(self), dtype=complex)
        for j in range(degree + 1):
            coefficients[self.index_of(j)] = (
                comb(degree, j, exact=True) * self.center ** (degree - j) * self.scale**j
            )
        return coefficients


def basis_for(d: Domain, degree_cut: int, scale: float = None) -> MonomialBasis:
    """
    Monomials about the bounding-box center scaled by its half-width; domains with a
    hole get Laurent terms down to -degree_cut, scaled by the inner radius.
    """
    if degree_cut < 0:
        raise ValueError(f"degree cut must be >= 0, got {degree_cut}")
    scale = scale or d.half_width
    if d.has_hole:
        powers = tuple(range(-degree_cut, degree_cut + 1))
        return MonomialBasis(d.center, scale, powers, inner_scale=d.r_inner)
    return MonomialBasis(d.box_center, scale, tuple(range(degree_cut + 1)))


@dataclass(frozen=True, eq=False)
class GramSystem:
    """
    `gram[j, k] = <e_j | e_k>_mu` (symmetrized), and the lower Cholesky factor of
    `regularized = gram + ridge * I`. Every solve and norm uses `regularized`.
    """

    degree_cut: int
    basis: MonomialBasis
    gram: np.ndarray
    regularized: np.ndarray
    factor: np.ndarray
    ridge: float
    relative_ridge: float
    condition_estimate: float
    domain: Domain
    weight: Weight
    rule: QuadratureRule
    mu: np.ndarray
    design: np.ndarray

    @property
    def size(self) -> int:
        return len(self.basis)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return linalg.cho_solve((self.factor, True), rhs)

    def norm_sq(self, coefficients: np.ndarray) -> float:
        """||f||^2_mu for f = sum_j a_j e_j."""
        u = np.conj(coefficients)
        return float(np.real(np.conj(u) @ self.regularized @ u))

    def summary(self) -> dict:
        return {
            "degree_cut": self.degree_cut,
            "basis_size": self.size,
            "ridge": self.ridge,
            "relative_ridge": self.relative_ridge,
            "condition_estimate": self.condition_estimate,
        }


def _factorize(gram: np.ndarray, label: str):
    max_diagonal = float(np.max(np.real(np.diag(gram))))
    identity = np.eye(len(gram))
    for relative_ridge in settings.RIDGE_SCHEDULE:
        ridge = relative_ridge * max_diagonal
        regularized = gram + ridge * identity
        try:
            factor = linalg.cholesky(regularized, lower=True)
        except linalg.LinAlgError:
            logger.debug(f"cholesky failed for {label} at {relative_ridge=:g}")
            continue
        if relative_ridge > 0:
            logger.warning(f"gram of {label} needed a ridge of {relative_ridge:g} x max diagonal")
        return regularized, factor, ridge, relative_ridge
    raise SingularGram(
        f"gram of {label} is not positive definite even with a ridge of "
        f"{settings.RIDGE_SCHEDULE[-1]:g} x max diagonal ({max_diagonal=:.6g})"
    )


def _condition(regularized: np.ndarray) -> float:
    eigenvalues = np.linalg.eigvalsh(regularized)
    if eigenvalues[0] <= 0:
        return float("inf")
    return float(eigenvalues[-1] / eigenvalues[0])


def assemble_gram(
    d: Domain,
    w: Weight,
    rule: QuadratureRule,
    degree_cut: int = None,
    basis: MonomialBasis = None,
) -> GramSystem:
    """
    Assembles `gram[j, k] = sum_nodes e_j(z) conj(e_k(z)) mu(z) weight` and factorizes it,
    escalating a ridge relative to the largest diagonal through `RIDGE_SCHEDULE`
    until the Cholesky factorization succeeds.

    Parameters
    ----------
    d : Domain
        The domain `rule` was built on.
    w : Weight
        Must be positive at every node.
    rule : QuadratureRule
    degree_cut : int, optional
        Largest monomial degree M (defaults to `DEFAULT_DEGREE`).
    basis : MonomialBasis, optional
        Overrides the default scaled basis from `basis_for`.
    """
    if degree_cut is None:
        degree_cut = basis.degree_cut if basis is not None else settings.DEFAULT_DEGREE
    if rule.domain != d:
        raise DomainMismatch(f"quadrature rule was built on {rule.domain.describe()}, not {d.describe()}")
    basis = basis or basis_for(d, degree_cut)
    return gram_from_values(d, w, rule, basis, check_positive(w, rule))


def gram_from_values(
    d: Domain, w: Weight, rule: QuadratureRule, basis: MonomialBasis, mu: np.ndarray, label: str = None
) -> GramSystem:
    """Gram system for weight values `mu` given at the nodes of `rule`; `w` only labels it."""
    label = label or f"{d.describe()} with {w.describe()}"
    degree_cut = basis.degree_cut
    design = basis.evaluate(rule.nodes)
    gram = design.T @ (np.conj(design) * (mu * rule.weights)[:, None])
    gram = 0.5 * (gram + gram.conj().T)

    diagonal = np.real(np.diag(gram))
    if not np.all(diagonal > 0):
        raise InvariantViolation(f"gram of {label} has non-positive diagonal entries: {diagonal}")

    regularized, factor, ridge, relative_ridge = _factorize(gram, label)
    condition_estimate = _condition(regularized)
    logger.debug(f"assembled gram for {label}: {degree_cut=}, {condition_estimate=:.3g}, {ridge=:g}")

    design.setflags(write=False)
    return GramSystem(
        degree_cut=degree_cut,
        basis=basis,
        gram=gram,
        regularized=regularized,
        factor=factor,
        ridge=ridge,
        relative_ridge=relative_ridge,
        condition_estimate=condition_estimate,
        domain=d,
        weight=w,
        rule=rule,
        mu=mu,
        design=design,
    )


@dataclass(frozen=True, eq=False)
class ProductGram:
    """Gram of the tensor basis e_j(z1) e_k(z2) over a product of two planar domains."""

    first: GramSystem
    second: GramSystem
    gram: np.ndarray

    def kernel(self, z, t) -> complex:
        """K((z1, z2), (t1, t2)) from the full tensor system."""
        e_z = np.kron(self.first.basis.evaluate([z[0]])[0], self.second.basis.evaluate([z[1]])[0])
        e_t = np.kron(self.first.basis.evaluate([t[0]])[0], self.second.basis.evaluate([t[1]])[0])
        coefficients = np.conj(linalg.solve(self.gram, e_t, assume_a="her"))
        return complex(e_z @ coefficients)


def assemble_product_gram(first: GramSystem, second: GramSystem) -> ProductGram:
    """
    Gram over the product quadrature (all pairs of nodes of both rules) in the tensor
    basis. It is accumulated node-by-node over the first factor, so equality with
    `kron(first.gram, second.gram)` is an observation, not a construction.
    """
    n1, n2 = first.size, second.size
    inner_second = second.design.T @ (
        np.conj(second.design) * (second.mu * second.rule.weights)[:, None]
    )
    gram = np.zeros((n1 * n2, n1 * n2), dtype=complex)
    for row, mu_weight in zip(first.design, first.mu * first.rule.weights):
        outer_first = np.outer(row, np.conj(row)) * mu_weight
        gram += np.kron(outer_first, inner_second)
    gram = 0.5 * (gram + gram.conj().T)
    logger.debug(f"assembled product gram of size {n1 * n2}")
    return ProductGram(first=first, second=second, gram=gram)
