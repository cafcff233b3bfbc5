"""
Executable forms of the pointwise kernel identities: reproducing property,
Schwarz inequality, extremal characterization of K(., t), the Toeplitz relation,
transition amplitudes and the evaluation-functional bound.
"""
from dataclasses import dataclass
from typing import Callable, List, Sequence, Union

import numpy as np
import structlog
from scipy import linalg

from wbk.geometry import Domain, QuadratureRule, as_point, as_points
from wbk.kernels.gram import assemble_gram
from wbk.kernels.model import KernelModel, minimal_element
from wbk.settings import get_settings
from wbk.types.errors import DegenerateAnchor, InvariantViolation
from wbk.types.reports import InvariantCheck
from wbk.weights import Weight, constant

logger = structlog.get_logger(__name__)
settings = get_settings()

__all__ = [
    "Extremality",
    "reproducing_residual",
    "schwarz_check",
    "lemma9_extremality",
    "toeplitz_cross_check",
    "transition_amplitude",
    "evaluation_bound_check",
    "hermitian_sweep",
    "diagonal_sweep",
    "schwarz_sweep",
    "minimal_element_sweep",
    "in_span_residuals",
]

FunctionLike = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


def _values(km: KernelModel, f: FunctionLike, z) -> np.ndarray:
    if callable(f):
        return np.asarray(f(as_points(z)), dtype=complex)
    return km.function_values(np.asarray(f, dtype=complex), z)


def reproducing_residual(km: KernelModel, f: FunctionLike, t) -> float:
    """
    |f(t) - sum_nodes f(z) conj(K(z, t)) mu(z) weight|.

    `f` is either a coefficient vector in the model's basis (in-span functions,
    where the residual is pure quadrature and solver error) or a vectorized callable.
    """
    t = as_point(t)
    rule = km.rule
    section = km.section(rule.nodes, t)[:, 0]
    integral = np.sum(_values(km, f, rule.nodes) * np.conj(section) * km.system.mu * rule.weights)
    return float(abs(_values(km, f, t)[0] - integral))


def schwarz_check(km: KernelModel, z, t, slack: float = None) -> bool:
    """|K(z, t)|^2 <= K(z, z) K(t, t) (1 + slack)."""
    slack = settings.SCHWARZ_SLACK if slack is None else slack
    z, t = as_point(z), as_point(t)
    k_zt = km.section(z, t)[0, 0]
    k_zz, k_tt = km.diagonal([z, t])
    return bool(abs(k_zt) ** 2 <= k_zz * k_tt * (1 + slack))


@dataclass(frozen=True)
class Extremality:
    in_S: bool
    dominates: bool
    equals_kernel: bool

    @property
    def consistent(self) -> bool:
        """Membership together with domination forces f = K(., t)."""
        return not (self.in_S and self.dominates) or self.equals_kernel


def lemma9_extremality(km: KernelModel, f: np.ndarray, t, slack: float = 1e-10) -> Extremality:
    """
    Classifies an in-span f (coefficient vector) against the anchor t:
    - in_S: f(t) is real, nonnegative and ||f||_mu <= sqrt(f(t))
    - dominates: f(t) >= K(t, t)
    - equals_kernel: the coefficients of f match those of K(., t) to 1e-8 relative
    """
    t = as_point(t)
    f = np.asarray(f, dtype=complex)
    f_t = complex(km.function_values(f, t)[0])
    kernel_coefficients = km.coefficients(t)
    k_tt = float(km.diagonal(t)[0])

    is_real = abs(f_t.imag) <= slack * max(1.0, abs(f_t))
    value = f_t.real
    norm = np.sqrt(max(km.norm_sq(f), 0.0))
    in_s = is_real and value >= 0 and norm <= np.sqrt(value) * (1 + slack)
    dominates = is_real and value >= k_tt * (1 - slack)
    difference = np.linalg.norm(f - kernel_coefficients)
    equals_kernel = difference <= 1e-8 * np.linalg.norm(kernel_coefficients)
    return Extremality(in_S=bool(in_s), dominates=bool(dominates), equals_kernel=bool(equals_kernel))


def toeplitz_cross_check(
    d: Domain, w: Weight, rule: QuadratureRule, degree_cut: int, t
) -> float:
    """
    Relative discrepancy (unweighted norm) between T_mu^-1 K_D(., t) and K_{D,mu}(., t).

    T_mu is represented on the unweighted-orthonormal basis psi = L^-1 e, where
    gram_1 = L L^H is the unweighted Gram, by m[j, k] = <mu psi_k | psi_j>_1.
    """
    t = as_point(t)
    if not w.is_bounded:
        raise ValueError(f"{w.describe()} is not bounded on {d.describe()}")
    unweighted = assemble_gram(d, constant(1.0), rule, degree_cut)
    weighted = KernelModel(system=assemble_gram(d, w, rule, degree_cut, basis=unweighted.basis))

    factor = unweighted.factor
    # psi values at the nodes: Psi = E L^-T
    psi = linalg.solve_triangular(factor, unweighted.design.T, lower=True).T
    mu = weighted.system.mu
    toeplitz = psi.conj().T @ (psi * (mu * rule.weights)[:, None])
    toeplitz = 0.5 * (toeplitz + toeplitz.conj().T)

    psi_t = linalg.solve_triangular(factor, unweighted.basis.evaluate([t])[0], lower=True)
    unweighted_section = np.conj(psi_t)
    x = linalg.solve(toeplitz, unweighted_section, assume_a="pos")

    # weighted kernel coordinates in psi: y = L^T c
    y = factor.T @ weighted.coefficients(t)
    discrepancy = float(np.linalg.norm(x - y) / np.linalg.norm(y))
    logger.debug(f"toeplitz cross-check for {w.describe()} at {t=}: {discrepancy=:.3g}")
    return discrepancy


def transition_amplitude(km: KernelModel, z, w, slack: float = None) -> float:
    """|K(z, w)| / sqrt(K(z, z) K(w, w)), clamped to 1 within `slack`."""
    slack = settings.HERMITIAN_TOLERANCE if slack is None else slack
    z, w = as_point(z), as_point(w)
    k_zz, k_ww = km.diagonal([z, w])
    for point, value in ((z, k_zz), (w, k_ww)):
        if value <= settings.DIAGONAL_FLOOR:
            raise DegenerateAnchor(f"K(p, p) = {value:.3g} at p = {point} is at or below the floor")
    amplitude = abs(km.section(z, w)[0, 0]) / np.sqrt(k_zz * k_ww)
    if amplitude > 1 + slack:
        raise InvariantViolation(f"transition amplitude {amplitude!r} between {z} and {w} exceeds 1")
    return float(min(amplitude, 1.0))


def evaluation_bound_check(km: KernelModel, f: np.ndarray, t, slack: float = 1e-8) -> bool:
    """|f(t)| <= sqrt(K(t, t)) ||f||_mu for an in-span f."""
    t = as_point(t)
    f_t = abs(km.function_values(np.asarray(f, dtype=complex), t)[0])
    bound = np.sqrt(max(float(km.diagonal(t)[0]), 0.0) * max(km.norm_sq(f), 0.0))
    return bool(f_t <= bound * (1 + slack) + np.finfo(float).tiny)


### Sweeps over sample grids ###
def hermitian_sweep(
    km: KernelModel, grid: Sequence[complex], name: str = "hermitian symmetry"
) -> InvariantCheck:
    """|K(z, t) - conj(K(t, z))| <= tol (1 + |K(z, t)|) over all grid pairs."""
    values = km.section(grid, grid)
    error = np.abs(values - values.conj().T) / (1 + np.abs(values))
    worst = float(error.max()) if error.size else 0.0
    return InvariantCheck.from_bound(name, worst, settings.HERMITIAN_TOLERANCE)


def diagonal_sweep(
    km: KernelModel, grid: Sequence[complex], name: str = "diagonal positivity"
) -> InvariantCheck:
    smallest = float(np.min(km.diagonal(grid)))
    return InvariantCheck(
        name=name,
        passed=smallest >= 0,
        value=smallest,
        bound=0.0,
        detail=f"min K(t, t) = {smallest:.6g}",
    )


def schwarz_sweep(
    km: KernelModel, grid: Sequence[complex], name: str = "schwarz inequality"
) -> InvariantCheck:
    """Largest |K(z, t)|^2 / (K(z, z) K(t, t)) - 1 over all grid pairs."""
    values = km.section(grid, grid)
    diagonal = km.diagonal(grid)
    ratio = np.abs(values) ** 2 / np.outer(diagonal, diagonal)
    excess = float(ratio.max() - 1.0)
    violations = int(np.sum(ratio > 1 + settings.SCHWARZ_SLACK))
    return InvariantCheck(
        name=name,
        passed=violations == 0,
        value=excess,
        bound=settings.SCHWARZ_SLACK,
        detail=f"{violations} violating pairs, max excess {excess:.3g}",
    )


def minimal_element_sweep(
    km: KernelModel, anchors: Sequence[complex], grid: Sequence[complex], tolerance: float = 1e-8
) -> InvariantCheck:
    """phi(z) = K(z, t) / K(t, t) on the grid, with phi from the constrained least-norm solve."""
    worst = 0.0
    grid = as_points(grid)
    for t in as_points(anchors):
        diagonal = float(km.diagonal(t)[0])
        if diagonal <= 1e-8:
            continue
        phi = minimal_element(km, t)
        expected = km.section(grid, t)[:, 0] / diagonal
        actual = km.function_values(phi.coefficients, grid)
        scale = np.maximum(np.abs(expected), 1e-300)
        worst = max(worst, float(np.max(np.abs(actual - expected) / scale)))
        worst = max(worst, abs(phi.norm_sq * diagonal - 1.0))
    return InvariantCheck.from_bound("minimal element identity", worst, tolerance)


def in_span_residuals(km: KernelModel, anchors: Sequence[complex]) -> List[float]:
    """Reproducing residuals of every raw monomial z^k in the span, at every anchor."""
    residuals = []
    degrees = [k for k in km.basis.powers if k >= 0]
    for t in as_points(anchors):
        for k in degrees:
            residuals.append(reproducing_residual(km, km.basis.raw_monomial(k), t))
    return residuals
