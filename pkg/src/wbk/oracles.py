"""
Closed-form weighted Bergman kernels used as ground truth.

For a disc of radius R about `center` and a radial weight, the monomials
w^k (w = z - center) are orthogonal and

    K(z, t) = sum_k (w conj(s))^k / ||w^k||^2_mu,   s = t - center,

with ||w^k||^2 equal to
- pi R^(2k+2) / (k+1) for mu = 1,
- pi R^(2(k+alpha+1)) / (k+alpha+1) for mu = |w|^(2 alpha),
- pi R^(2k+2) B(k+1, beta+1) for mu = (1 - |w|^2/R^2)^beta,
all multiplied by the weight's constant factor. Products of discs multiply.
"""
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import structlog
from scipy.special import betaln

from wbk.geometry import Domain, as_point, as_points
from wbk.settings import get_settings
from wbk.types.errors import OutOfDomain
from wbk.types.main import DomainKind, OracleKind, WeightFamily
from wbk.weights import Weight

logger = structlog.get_logger(__name__)
settings = get_settings()

__all__ = [
    "OracleKernel",
    "disc_unweighted",
    "disc_radial_power",
    "disc_moebius_power",
    "product",
    "oracle_eval",
    "oracle_norm_sq",
    "oracle_for",
]

# points are evaluated in chunks to bound the size of the term matrix
CHUNK_SIZE = 512


@dataclass(frozen=True)
class OracleKernel:
    kind: OracleKind
    radius: float = 1.0
    alpha: float = 0.0
    beta: float = 0.0
    center: complex = 0j
    scale: float = 1.0
    components: Tuple["OracleKernel", ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind == OracleKind.product:
            if len(self.components) < 2:
                raise ValueError("product oracles need at least two components")
            return
        if not self.radius > 0 or not self.scale > 0:
            raise ValueError(f"radius and scale must be > 0, got {self.radius}, {self.scale}")
        if not (self.alpha > -1 and self.beta > -1):
            raise ValueError(f"exponents must be > -1, got {self.alpha=}, {self.beta=}")

    def log_norm_sq(self, k) -> np.ndarray:
        """log ||w^k||^2_mu, vectorized over k."""
        k = np.asarray(k, dtype=float)
        log_r = np.log(self.radius)
        if self.kind == OracleKind.disc_unweighted:
            value = np.log(np.pi) + (2 * k + 2) * log_r - np.log(k + 1)
        elif self.kind == OracleKind.disc_radial_power:
            value = np.log(np.pi) + 2 * (k + self.alpha + 1) * log_r - np.log(k + self.alpha + 1)
        elif self.kind == OracleKind.disc_moebius_power:
            value = np.log(np.pi) + (2 * k + 2) * log_r + betaln(k + 1, self.beta + 1)
        else:
            raise ValueError("product oracles have multi-index norms; use oracle_norm_sq")
        return value + np.log(self.scale)

    def require_inside(self, points: np.ndarray):
        distance = np.abs(points - self.center)
        outside = ~(distance < self.radius)
        if outside.any():
            raise OutOfDomain(
                f"{points[outside][0]} is not strictly inside the oracle disc "
                f"(center={self.center}, radius={self.radius})"
            )

    def _log_coefficients(self, k) -> np.ndarray:
        """log of the coefficients of the series in y = w conj(s) / R^2."""
        k = np.asarray(k, dtype=float)
        return -self.log_norm_sq(k) + 2 * k * np.log(self.radius)

    def _term_count(self, largest: float) -> int:
        """Number of series terms so that the geometric tail is below the relative tolerance."""
        if largest == 0:
            return 1
        log_y = np.log(largest)
        count = 64
        while True:
            k = np.arange(count + 1)
            log_terms = self._log_coefficients(k) + k * log_y
            magnitudes = np.exp(log_terms - log_terms[0])
            ratio = magnitudes[-1] / magnitudes[-2]
            tail = magnitudes[-1] / (1 - ratio) if ratio < 1 else np.inf
            if tail <= settings.SERIES_TAIL_TOLERANCE * magnitudes.sum():
                return count
            if count >= settings.SERIES_MAX_TERMS:
                logger.debug(f"series hit the cap of {count} terms with relative tail {tail:.3g}")
                return count
            count = min(2 * count, settings.SERIES_MAX_TERMS)

    def section(self, z, t) -> np.ndarray:
        """Matrix K(z_i, t_j) for planar oracles."""
        if self.kind == OracleKind.product:
            raise ValueError("product oracles take tuples of points; use oracle_eval")
        z, t = as_points(z), as_points(t)
        self.require_inside(z)
        self.require_inside(t)
        y = (z - self.center)[:, None] * np.conj(t - self.center)[None, :] / self.radius**2
        flat = y.ravel()
        count = self._term_count(float(np.max(np.abs(flat), initial=0.0)))
        coefficients = np.exp(self._log_coefficients(np.arange(count)))

        result = np.empty(flat.shape, dtype=complex)
        for start in range(0, len(flat), CHUNK_SIZE):
            chunk = flat[start : start + CHUNK_SIZE]
            # Horner evaluation of sum_k b_k y^k
            total = np.zeros(chunk.shape, dtype=complex)
            for b in coefficients[::-1]:
                total = total * chunk + b
            result[start : start + CHUNK_SIZE] = total
        return result.reshape(y.shape)

    def diagonal(self, t) -> np.ndarray:
        t = as_points(t)
        return np.array([np.real(self.section(p, p)[0, 0]) for p in t])


def disc_unweighted(radius: float = 1.0, center=0j, scale: float = 1.0) -> OracleKernel:
    return OracleKernel(OracleKind.disc_unweighted, radius=radius, center=as_point(center), scale=scale)


def disc_radial_power(alpha: float, radius: float = 1.0, center=0j, scale: float = 1.0) -> OracleKernel:
    return OracleKernel(
        OracleKind.disc_radial_power, radius=radius, alpha=alpha, center=as_point(center), scale=scale
    )


def disc_moebius_power(beta: float, radius: float = 1.0, center=0j, scale: float = 1.0) -> OracleKernel:
    return OracleKernel(
        OracleKind.disc_moebius_power, radius=radius, beta=beta, center=as_point(center), scale=scale
    )


def product(*components: OracleKernel) -> OracleKernel:
    return OracleKernel(OracleKind.product, components=tuple(components))


PointArg = Union[complex, Sequence[complex]]


def oracle_eval(o: OracleKernel, z: PointArg, t: PointArg) -> complex:
    """K(z, t); for product oracles `z` and `t` are tuples with one point per factor."""
    if o.kind == OracleKind.product:
        if len(z) != len(o.components) or len(t) != len(o.components):
            raise ValueError(f"expected {len(o.components)} coordinates per point")
        value = 1.0 + 0j
        for component, z_i, t_i in zip(o.components, z, t):
            value *= oracle_eval(component, z_i, t_i)
        return value
    return complex(o.section(as_point(z), as_point(t))[0, 0])


def oracle_norm_sq(o: OracleKernel, k: Union[int, Sequence[int]]) -> float:
    """||w^k||^2_mu; for products `k` is a multi-index and the norms multiply."""
    if o.kind == OracleKind.product:
        if len(k) != len(o.components):
            raise ValueError(f"expected a multi-index of length {len(o.components)}")
        return float(np.prod([oracle_norm_sq(c, k_i) for c, k_i in zip(o.components, k)]))
    if k < 0:
        raise ValueError(f"degree must be >= 0, got {k}")
    return float(np.exp(o.log_norm_sq(k)))


def oracle_for(d: Domain, w: Weight) -> Optional[OracleKernel]:
    """The closed-form kernel of (d, w) when one is shipped, else None."""
    if d.kind != DomainKind.disc:
        return None
    same_center = w.center == d.center
    if w.family == WeightFamily.constant:
        return disc_unweighted(d.radius, d.center, scale=w.c * w.scale)
    if w.family == WeightFamily.radial_power and same_center:
        return disc_radial_power(w.alpha, d.radius, d.center, scale=w.scale)
    if w.family == WeightFamily.moebius_power and same_center and w.radius == d.radius:
        return disc_moebius_power(w.beta, d.radius, d.center, scale=w.scale)
    return None
