"""
Weighted kernels of a disc as restrictions of unweighted kernels of a Hartogs domain.

For a disc D and a radial weight mu, Omega = {(z, w) : |w|^2 < mu(z)} is a Reinhardt
domain on which the monomials z^j w^m are complete and mutually orthogonal across
fiber degrees. Integrating out the fiber analytically,

    <z^j w^m, z^k w^m>_Omega = sum_nodes z^j conj(z)^k pi mu(z)^(m+1) / (m+1) weight,

so the Gram matrix splits into one block per fiber degree m, and at w = s = 0 only
block 0 survives: pi K_Omega((z, 0), (p, 0)) = K_{D, mu}(z, p).
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
import structlog

from wbk.geometry import Domain, QuadratureRule, as_point, build_quadrature
from wbk.kernels.gram import GramSystem, MonomialBasis, basis_for, gram_from_values
from wbk.kernels.model import KernelModel, build_kernel_model
from wbk.settings import get_settings
from wbk.types.errors import DomainMismatch
from wbk.types.main import DomainKind, WeightFamily
from wbk.types.reports import InvariantCheck
from wbk.weights import Weight, check_positive

logger = structlog.get_logger(__name__)
settings = get_settings()

__all__ = [
    "HartogsSystem",
    "fiber_factor",
    "build_hartogs",
    "hartogs_kernel_at_zero_fiber",
    "forelli_rudin_identity",
]


def fiber_factor(mu: np.ndarray, m: int) -> np.ndarray:
    """Integral of |w|^(2m) over the fiber disc |w|^2 < mu."""
    return np.pi * np.asarray(mu, dtype=float) ** (m + 1) / (m + 1)


@dataclass(frozen=True, eq=False)
class HartogsSystem:
    base: Domain
    base_weight: Weight
    base_degree_cut: int
    fiber_degree_cut: int
    rule: QuadratureRule
    basis: MonomialBasis
    blocks: Tuple[GramSystem, ...]

    @property
    def block_grams(self) -> List[np.ndarray]:
        return [block.gram for block in self.blocks]

    def block(self, m: int) -> KernelModel:
        """Kernel model of fiber degree `m`; its kernel is the coefficient of (w conj(s))^m."""
        return KernelModel(system=self.blocks[m])


def build_hartogs(
    d: Domain, w: Weight, M: int = None, L: int = 0, rule: QuadratureRule = None
) -> HartogsSystem:
    """
    Assembles the per-fiber-degree Gram blocks for m = 0..L over the nodes of `rule`,
    each factorized under the shared ridge policy. Mixed fiber degrees are orthogonal
    and not stored.

    Raises `ValueError` unless `d` is a disc and `w` a radial weight about its center,
    and `SingularGram` for a block that cannot be factorized.
    """
    if d.kind != DomainKind.disc:
        raise ValueError(f"Hartogs domains are built over discs, got {d.kind}")
    centered = w.family == WeightFamily.constant or w.center == d.center
    if not (w.is_radial and centered):
        raise ValueError(f"Hartogs domains need a weight radial about the disc center, got {w.describe()}")
    if L < 0:
        raise ValueError(f"fiber degree cut must be >= 0, got {L}")
    M = M or settings.DEFAULT_DEGREE
    rule = rule or build_quadrature(d)
    if rule.domain != d:
        raise DomainMismatch(f"quadrature rule was built on {rule.domain.describe()}, not {d.describe()}")

    basis = basis_for(d, M)
    mu = check_positive(w, rule)

    def assemble(m: int) -> GramSystem:
        label = f"fiber degree {m} over {d.describe()} with {w.describe()}"
        return gram_from_values(d, w, rule, basis, fiber_factor(mu, m), label=label)

    if settings.NUM_THREADS > 1 and L > 0:
        with ThreadPoolExecutor(max_workers=settings.NUM_THREADS) as pool:
            blocks = tuple(pool.map(assemble, range(L + 1)))
    else:
        blocks = tuple(assemble(m) for m in range(L + 1))
    logger.debug(f"built {L + 1} Hartogs blocks over {d.describe()} with {M=}")
    return HartogsSystem(
        base=d,
        base_weight=w,
        base_degree_cut=M,
        fiber_degree_cut=L,
        rule=rule,
        basis=basis,
        blocks=blocks,
    )


def hartogs_kernel_at_zero_fiber(h: HartogsSystem, z, p) -> complex:
    """K_Omega((z, 0), (p, 0)), which only block 0 contributes to."""
    model = h.block(0)
    z, p = as_point(z), as_point(p)
    model.require_inside(z, p)
    return complex(model.section(z, p)[0, 0])


def forelli_rudin_identity(h: HartogsSystem, points, tolerance: float = 1e-12) -> InvariantCheck:
    """
    Largest relative gap between pi K_Omega((z, 0), (p, 0)) and K_{D, mu}(z, p) over all
    pairs of `points`, with the base kernel built on the same rule and basis.
    """
    base = build_kernel_model(h.base, h.base_weight, rule=h.rule, basis=h.basis)
    points = np.asarray([as_point(p) for p in points])
    base.require_inside(points)
    hartogs = np.pi * h.block(0).section(points, points)
    reference = base.section(points, points)
    gap = float(np.max(np.abs(hartogs - reference)) / np.max(np.abs(reference)))
    return InvariantCheck.from_bound("pi K_Omega at zero fiber equals K_D,mu", gap, tolerance)
