"""
Weights (positive functions mu on a domain), the local-integrability test for
admissibility, and the piecewise extension of weights across a domain sequence.
"""
from typing import Callable, Dict, List, NamedTuple, Optional, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, root_validator, validator

from wbk.geometry import Domain, QuadratureRule, as_point, as_points, boundary_distance, build_quadrature
from wbk.types.errors import DomainMismatch, InvariantViolation
from wbk.types.main import ExtensionMode, Verdict, WeightFamily
from wbk.types.reports import AdmissibilityReport

logger = structlog.get_logger(__name__)

__all__ = [
    "Weight",
    "WeightSequenceExtension",
    "constant",
    "radial_power",
    "moebius_power",
    "expression",
    "evaluate",
    "check_positive",
    "admissibility_check",
    "extend",
    "extend_values",
    "extend_limit",
    "EXPRESSIONS",
]


class NamedExpression(NamedTuple):
    func: Callable[[np.ndarray, float], np.ndarray]  # (z - center, width) -> mu
    radial: bool
    bounded: bool


EXPRESSIONS: Dict[str, NamedExpression] = {
    "gaussian": NamedExpression(lambda w, s: np.exp(-np.abs(w) ** 2 / s**2), True, True),
    "quartic_radial": NamedExpression(lambda w, s: 1.0 + (np.abs(w) / s) ** 4, True, True),
    "exp_real_part": NamedExpression(lambda w, s: np.exp(w.real / s), False, True),
    # blows up like |z|^-4 at the center; not locally integrable
    "inverse_quartic": NamedExpression(lambda w, s: (np.abs(w) / s) ** -4.0, True, False),
}


class Weight(BaseModel):
    """
    A positive weight mu.

    Families (all multiplied by `scale`):
    - `constant`: c
    - `radial_power`: |z - center|^(2 alpha)
    - `moebius_power`: (1 - |z - center|^2 / radius^2)^beta
    - `expression`: a named built-in from `EXPRESSIONS`, parametrized by `width`

    When `domain` is set, evaluation outside it raises `DomainMismatch`.
    """

    family: WeightFamily
    label: str = ""
    c: float = 1.0
    alpha: float = 0.0
    beta: float = 0.0
    radius: float = 1.0
    center: complex = 0j
    scale: float = 1.0
    name: Optional[str] = None
    width: float = 1.0
    domain: Optional[Domain] = None

    class Config:
        frozen = True
        arbitrary_types_allowed = True

    @validator("center", pre=True, always=True)
    def validate_center(cls, val):
        return as_point(val if val is not None else 0j)

    @validator("c", "scale", "radius", "width")
    def validate_positive(cls, val, field):
        if not val > 0:
            raise ValueError(f"{field.name} must be > 0, got {val}")
        return val

    @validator("alpha", "beta")
    def validate_exponent(cls, val, field):
        if not val > -1:
            raise ValueError(f"{field.name} must be > -1, got {val}")
        return val

    @root_validator(skip_on_failure=True)
    def validate_expression(cls, values):
        if values["family"] == WeightFamily.expression:
            name = values.get("name")
            if name not in EXPRESSIONS:
                raise ValueError(
                    f"`{name}` is not a known expression weight; choose from {sorted(EXPRESSIONS)}"
                )
        return values

    @property
    def is_radial(self) -> bool:
        """True when mu depends only on |z - center|."""
        if self.family == WeightFamily.expression:
            return EXPRESSIONS[self.name].radial
        return True

    @property
    def is_bounded(self) -> bool:
        """True for the families whose values stay bounded on a bounded domain."""
        if self.family == WeightFamily.constant:
            return True
        if self.family == WeightFamily.radial_power:
            return self.alpha >= 0
        if self.family == WeightFamily.moebius_power:
            return self.beta >= 0
        return EXPRESSIONS[self.name].bounded

    def values(self, z) -> np.ndarray:
        """Vectorized mu(z) without any domain check."""
        z = np.asarray(z, dtype=complex)
        if self.family == WeightFamily.constant:
            mu = np.full(z.shape, self.c)
        elif self.family == WeightFamily.radial_power:
            mu = np.abs(z - self.center) ** (2.0 * self.alpha)
        elif self.family == WeightFamily.moebius_power:
            mu = (1.0 - np.abs(z - self.center) ** 2 / self.radius**2) ** self.beta
        else:
            mu = EXPRESSIONS[self.name].func(z - self.center, self.width)
        return self.scale * mu

    def on(self, domain: Domain) -> "Weight":
        """Same weight, declared on `domain`."""
        return self.copy(update={"domain": domain})

    def scaled(self, factor: float) -> "Weight":
        return self.copy(update={"scale": self.scale * factor, "label": ""})

    def describe(self) -> str:
        if self.label:
            return self.label
        prefix = "" if self.scale == 1.0 else f"{self.scale:g}*"
        if self.family == WeightFamily.constant:
            return f"{prefix}constant({self.c:g})"
        if self.family == WeightFamily.radial_power:
            return f"{prefix}radial_power(alpha={self.alpha:g})"
        if self.family == WeightFamily.moebius_power:
            return f"{prefix}moebius_power(beta={self.beta:g}, radius={self.radius:g})"
        return f"{prefix}{self.name}(width={self.width:g})"


def constant(c: float = 1.0, **kwargs) -> Weight:
    return Weight(family=WeightFamily.constant, c=c, **kwargs)


def radial_power(alpha: float, **kwargs) -> Weight:
    return Weight(family=WeightFamily.radial_power, alpha=alpha, **kwargs)


def moebius_power(beta: float, radius: float = 1.0, **kwargs) -> Weight:
    return Weight(family=WeightFamily.moebius_power, beta=beta, radius=radius, **kwargs)


def expression(name: str, width: float = 1.0, **kwargs) -> Weight:
    return Weight(family=WeightFamily.expression, name=name, width=width, **kwargs)


def evaluate(w: Weight, p) -> float:
    """mu(p) for a single point; `DomainMismatch` if `p` lies outside `w.domain`."""
    point = as_point(p)
    if w.domain is not None and not w.domain.contains(np.array([point]))[0]:
        raise DomainMismatch(f"{point} is outside {w.domain.describe()}, where {w.describe()} lives")
    return float(w.values(np.array([point]))[0])


def check_positive(w: Weight, rule: QuadratureRule) -> np.ndarray:
    """
    Evaluates `w` at every node of `rule`, raising `InvariantViolation` if any value
    is not a positive finite number. Returns the values.
    """
    mu = w.values(rule.nodes)
    bad = ~(np.isfinite(mu) & (mu > 0))
    if bad.any():
        where = rule.nodes[bad][:3]
        raise InvariantViolation(
            f"{w.describe()} is not positive at {int(bad.sum())} quadrature nodes of "
            f"{rule.domain.describe()}, e.g. {list(where)}"
        )
    return mu


def _integral_over_compact(
    w: Weight, d: Domain, a: float, rule: QuadratureRule, margin: float
) -> float:
    keep = boundary_distance(d, rule.nodes) >= margin
    if not keep.any():
        return 0.0
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        integrand = w.values(rule.nodes[keep]) ** (-a)
    return float(np.sum(integrand * rule.weights[keep]))


def admissibility_check(w: Weight, d: Domain, a: float, rule: QuadratureRule) -> AdmissibilityReport:
    """
    Numerical test of local integrability of mu^(-a), the sufficient condition for
    mu to be an admissible weight.

    The compact set K is every node at distance >= one cell width from the boundary.
    The estimate over K passes when it is finite and changes by less than 10% when
    the quadrature resolution is doubled; otherwise the verdict is inconclusive.
    A numerical test cannot refute admissibility, so there is no failing verdict.
    """
    if not a > 0:
        raise ValueError(f"a must be > 0, got {a}")
    margin = rule.cell_size
    estimate = _integral_over_compact(w, d, a, rule, margin)
    refined_rule = build_quadrature(d, 2 * rule.resolution, rule.order)
    refined = _integral_over_compact(w, d, a, refined_rule, margin)

    if np.isfinite(estimate) and np.isfinite(refined) and estimate > 0:
        relative_change = abs(refined - estimate) / estimate
    else:
        relative_change = float("inf")
    verdict = Verdict.passed if relative_change < 0.1 else Verdict.inconclusive
    logger.debug(f"admissibility of {w.describe()} at {a=}: {estimate=:.6g}, {refined=:.6g}, {verdict}")
    return AdmissibilityReport(
        weight=w.describe(),
        domain=d.describe(),
        a=a,
        margin=margin,
        integral_estimate=estimate,
        refined_estimate=refined,
        relative_change=relative_change,
        verdict=verdict,
    )


class WeightSequenceExtension(BaseModel):
    """
    Weights mu_1, mu_2, ... on domains D_1, D_2, ... glued into a single function.

    - `outside` mode: the extension of mu_k uses mu_k on D_k and falls back to the
      extension of mu_(k-1) on the rest of D_1 u ... u D_(k-1)
    - `inside` mode: mu_k on D_k, extended by the limit weight mu on the limit domain D
    """

    base_weights: List[Tuple[Domain, Weight]]
    mode: ExtensionMode
    limit: Optional[Tuple[Domain, Weight]] = None

    class Config:
        frozen = True
        arbitrary_types_allowed = True

    @validator("base_weights")
    def validate_not_empty(cls, val):
        if not val:
            raise ValueError("a weight sequence needs at least one (domain, weight) pair")
        return val

    @root_validator(skip_on_failure=True)
    def validate_limit(cls, values):
        if values["mode"] == ExtensionMode.inside and values.get("limit") is None:
            raise ValueError("inside extensions need the limit (domain, weight)")
        return values

    def __len__(self) -> int:
        return len(self.base_weights)


def _check_index(seq: WeightSequenceExtension, k: int):
    if not 1 <= k <= len(seq):
        raise ValueError(f"step index must be in [1, {len(seq)}], got {k}")


def extend_values(seq: WeightSequenceExtension, points, k: int) -> np.ndarray:
    """Vectorized `extend`; raises `DomainMismatch` if any point is not covered."""
    _check_index(seq, k)
    z = as_points(points)
    result = np.full(z.shape, np.nan)
    pending = np.ones(z.shape, dtype=bool)

    if seq.mode == ExtensionMode.inside:
        order = [seq.base_weights[k - 1], seq.limit]
    else:
        order = reversed(seq.base_weights[:k])
    for domain, weight in order:
        hit = pending & domain.contains(z)
        result[hit] = weight.values(z[hit])
        pending &= ~hit

    if pending.any():
        raise DomainMismatch(
            f"{int(pending.sum())} point(s), e.g. {z[pending][0]}, lie outside every domain "
            f"covered by the extension at step {k}"
        )
    return result


def extend(seq: WeightSequenceExtension, p, k: int) -> float:
    """Value of the k-th extended weight at `p` (k is 1-based)."""
    return float(extend_values(seq, [as_point(p)], k)[0])


def extend_limit(seq: WeightSequenceExtension, p, limit: Tuple[Domain, Weight] = None) -> float:
    """
    The limit weight mu continued outside its domain D: mu on D, and on the rest
    mu_j on D_j minus (D_1 u ... u D_(j-1)).
    """
    domain, weight = limit or seq.limit or (None, None)
    if domain is None:
        raise ValueError("extend_limit needs the limit (domain, weight)")
    point = np.array([as_point(p)])
    if domain.contains(point)[0]:
        return float(weight.values(point)[0])
    for d_j, mu_j in seq.base_weights:
        if d_j.contains(point)[0]:
            return float(mu_j.values(point)[0])
    raise DomainMismatch(f"{point[0]} lies outside the limit domain and every sequence domain")
