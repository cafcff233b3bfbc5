"""
Domain/weight sequences and the spot-checks of their convergence hypotheses.

Steps are 1-based: D_1, D_2, ..., D_{n_max}.
"""
from typing import Callable, List, Optional, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, validator

from wbk.geometry import Domain, annulus, build_quadrature, disc, distance_to
from wbk.sampling import sample_nodes
from wbk.types.errors import HypothesisViolation
from wbk.types.main import DomainKind, ExtensionMode, SequenceMode, WeightFamily
from wbk.types.reports import InvariantCheck
from wbk.weights import Weight, WeightSequenceExtension

logger = structlog.get_logger(__name__)

__all__ = [
    "Schedule",
    "harmonic",
    "geometric",
    "SequenceSpec",
    "disc_sequence",
    "identity_sequence",
    "weight_extension",
    "check_increasing_hypotheses",
    "check_outside_hypotheses",
]

# resolution of the rules whose nodes are used for hypothesis spot-checks
SPOT_CHECK_RESOLUTION = 32
# pointwise comparisons between weights tolerate this relative slack
WEIGHT_SLACK = 1e-12


class Schedule(BaseModel):
    """
    A positive sequence eps_n tending to 0:
    `harmonic` is a / (n + 1), `geometric` is a * q^n.
    """

    kind: str = "harmonic"
    a: float = 1.0
    q: float = 0.5

    class Config:
        frozen = True

    @validator("kind")
    def validate_kind(cls, val):
        if val not in ("harmonic", "geometric", "zero"):
            raise ValueError(f"`{val}` is not a known schedule; use harmonic, geometric or zero")
        return val

    @validator("q")
    def validate_ratio(cls, val):
        if not 0 < val < 1:
            raise ValueError(f"geometric ratio must be in (0, 1), got {val}")
        return val

    def __call__(self, n: int) -> float:
        if self.kind == "zero":
            return 0.0
        if self.kind == "harmonic":
            return self.a / (n + 1)
        return self.a * self.q**n


def harmonic(a: float = 1.0) -> Schedule:
    return Schedule(kind="harmonic", a=a)


def geometric(a: float = 1.0, q: float = 0.5) -> Schedule:
    return Schedule(kind="geometric", a=a, q=q)


ZERO = Schedule(kind="zero")


class SequenceSpec(BaseModel):
    """
    D_n = domain_generator(n), mu_n = weight_generator(n) for n = 1..steps,
    approaching (limit_domain, limit_weight).

    `n_map` is N(n) in the increasing-sequence hypothesis (defaults to n itself)
    and `parameter` labels each step in reports (e.g. the radius r_n).
    """

    mode: SequenceMode
    steps: int
    domain_generator: Callable[[int], Domain]
    weight_generator: Callable[[int], Weight]
    limit_domain: Domain
    limit_weight: Weight
    n_map: Optional[Callable[[int], int]] = None
    parameter: Optional[Callable[[int], float]] = None
    parameter_name: str = "parameter"
    label: str = ""

    class Config:
        arbitrary_types_allowed = True

    @validator("steps")
    def validate_steps(cls, val):
        if val < 1:
            raise ValueError(f"a sequence needs at least one step, got {val}")
        return val

    def domain(self, n: int) -> Domain:
        return self.domain_generator(n)

    def weight(self, n: int) -> Weight:
        return self.weight_generator(n)

    def first_index(self, n: int) -> int:
        return self.n_map(n) if self.n_map is not None else n

    def parameter_at(self, n: int) -> Optional[float]:
        return self.parameter(n) if self.parameter is not None else None


def _scaled_domain(d: Domain, grow: float) -> Domain:
    """Grow (grow > 0) or shrink (grow < 0) a closed-form domain about its center."""
    if d.kind == DomainKind.disc:
        return disc(d.center, d.radius * (1 + grow))
    if d.kind == DomainKind.annulus:
        return annulus(d.center, d.r_inner * (1 - grow), d.r_outer * (1 + grow))
    raise ValueError(f"only disc and annulus sequences can be generated, got {d.kind}")


def _follow_domain(w: Weight, limit_domain: Domain, d: Domain) -> Weight:
    """
    Moebius weights that vanish on the boundary of a centered limit disc
    are moved with the disc, so they stay positive on every D_n.
    """
    follows = (
        w.family == WeightFamily.moebius_power
        and limit_domain.kind == DomainKind.disc
        and w.center == limit_domain.center
        and w.radius == limit_domain.radius
    )
    if follows:
        return w.copy(update={"radius": d.radius, "label": ""})
    return w


def disc_sequence(
    mode: SequenceMode,
    limit_domain: Domain,
    limit_weight: Weight,
    steps: int,
    domain_schedule: Schedule = None,
    weight_schedule: Schedule = None,
) -> SequenceSpec:
    """
    Nested closed-form sequences approaching (D, mu).

    - increasing: D_n shrinks D by eps_n (radius R (1 - eps_n)), mu_n = (1 - delta_n) mu
    - outside: D_n grows D by eps_n (radius R (1 + eps_n)), mu_n = (1 + delta_n) mu

    eps_n and delta_n come from `domain_schedule` and `weight_schedule` (zero when
    omitted). Moebius weights follow the radius of D_n so that they stay positive.
    """
    domain_schedule = domain_schedule or ZERO
    weight_schedule = weight_schedule or ZERO
    sign = -1.0 if mode == SequenceMode.increasing else 1.0
    if mode == SequenceMode.increasing and domain_schedule(1) >= 1:
        raise ValueError("increasing sequences need eps_1 < 1 so that D_1 is not empty")
    if mode == SequenceMode.increasing and weight_schedule(1) >= 1:
        raise ValueError("increasing sequences need delta_1 < 1 so that mu_1 stays positive")

    def domain_generator(n: int) -> Domain:
        return _scaled_domain(limit_domain, sign * domain_schedule(n))

    def weight_generator(n: int) -> Weight:
        scaled = limit_weight.scaled(1 + sign * weight_schedule(n))
        return _follow_domain(scaled, limit_domain, domain_generator(n))

    if limit_domain.kind == DomainKind.disc:
        parameter_name = "r_n"

        def parameter(n: int) -> float:
            return domain_generator(n).radius

    else:
        parameter_name = "r_outer_n"

        def parameter(n: int) -> float:
            return domain_generator(n).r_outer

    if domain_schedule.kind == "zero" and weight_schedule.kind != "zero":
        parameter_name = "scale_n"

        def parameter(n: int) -> float:
            return weight_generator(n).scale

    return SequenceSpec(
        mode=mode,
        steps=steps,
        domain_generator=domain_generator,
        weight_generator=weight_generator,
        limit_domain=limit_domain,
        limit_weight=limit_weight,
        parameter=parameter,
        parameter_name=parameter_name,
        label=f"{mode} sequence to {limit_domain.describe()} with {limit_weight.describe()}",
    )


def identity_sequence(mode: SequenceMode, d: Domain, w: Weight, steps: int = 1) -> SequenceSpec:
    """D_n = D and mu_n = mu for every n."""
    return SequenceSpec(
        mode=mode,
        steps=steps,
        domain_generator=lambda n: d,
        weight_generator=lambda n: w,
        limit_domain=d,
        limit_weight=w,
        label=f"identity sequence on {d.describe()}",
    )


def weight_extension(spec: SequenceSpec, upto: int = None) -> WeightSequenceExtension:
    """The glued weights of the first `upto` steps."""
    upto = upto or spec.steps
    pairs = [(spec.domain(n), spec.weight(n)) for n in range(1, upto + 1)]
    mode = ExtensionMode.inside if spec.mode == SequenceMode.increasing else ExtensionMode.outside
    return WeightSequenceExtension(
        base_weights=pairs, mode=mode, limit=(spec.limit_domain, spec.limit_weight)
    )


def _spot_nodes(d: Domain) -> np.ndarray:
    return sample_nodes(build_quadrature(d, SPOT_CHECK_RESOLUTION, 1).nodes)


def _not_above(lower: np.ndarray, upper: np.ndarray) -> bool:
    return bool(np.all(lower <= upper * (1 + WEIGHT_SLACK) + WEIGHT_SLACK * np.abs(upper).max()))


def _pointwise_convergence(spec: SequenceSpec, nodes: np.ndarray, where: str) -> Tuple[bool, str]:
    """max |mu_k - mu| / mu at the nodes never grows along the sequence and ends below its start."""
    limit = spec.limit_weight.values(nodes)
    errors = [
        float(np.max(np.abs(spec.weight(k).values(nodes) - limit) / limit))
        for k in range(1, spec.steps + 1)
    ]
    growing = [k + 2 for k in range(len(errors) - 1) if errors[k + 1] > errors[k] * (1 + 1e-9) + 1e-15]
    shrinks = errors[0] == 0 or spec.steps == 1 or errors[-1] < errors[0]
    ok = not growing and shrinks
    detail = f"weight errors on {where} from {errors[0]:.3g} to {errors[-1]:.3g}"
    if growing:
        detail += f", growing at steps {growing}"
    return ok, detail


def _raise_on_failures(checks: List[InvariantCheck], what: str) -> List[InvariantCheck]:
    failures = [check.describe() for check in checks if not check.passed]
    if failures:
        raise HypothesisViolation(f"{what} hypotheses do not hold", failures=failures)
    return checks


def check_increasing_hypotheses(spec: SequenceSpec) -> List[InvariantCheck]:
    """
    Spot-checks at quadrature nodes of each D_n, for all m >= N(n):
    D_n inside D_m, mu_n <= mu_m <= mu on D_n, and mu_k -> mu pointwise on D_1.
    Raises `HypothesisViolation` listing every failure.
    """
    if spec.mode != SequenceMode.increasing:
        raise ValueError(f"expected an increasing sequence, got {spec.mode}")
    checks = []
    limit = spec.limit_domain
    for n in range(1, spec.steps + 1):
        d_n, mu_n = spec.domain(n), spec.weight(n)
        nodes = _spot_nodes(d_n)
        if not limit.contains(nodes).all():
            checks.append(
                InvariantCheck(name="D_n inside D", passed=False, step=n, detail="nodes of D_n outside D")
            )
        mu_n_values = mu_n.values(nodes)
        limit_values = spec.limit_weight.values(nodes)
        if not _not_above(mu_n_values, limit_values):
            checks.append(
                InvariantCheck(name="mu_n <= mu", passed=False, step=n, detail="mu_n exceeds mu on D_n")
            )
        for m in range(max(spec.first_index(n), n), spec.steps + 1):
            inside = spec.domain(m).contains(nodes)
            if not inside.all():
                checks.append(
                    InvariantCheck(
                        name="nested domains",
                        passed=False,
                        step=n,
                        detail=f"{int((~inside).sum())} nodes of D_{n} outside D_{m}",
                    )
                )
                continue
            mu_m_values = spec.weight(m).values(nodes)
            if not (_not_above(mu_n_values, mu_m_values) and _not_above(mu_m_values, limit_values)):
                checks.append(
                    InvariantCheck(
                        name="monotone weights",
                        passed=False,
                        step=n,
                        detail=f"mu_{n} <= mu_{m} <= mu fails on D_{n}",
                    )
                )

    ok, detail = _pointwise_convergence(spec, _spot_nodes(spec.domain(1)), "D_1")
    checks.append(InvariantCheck(name="pointwise weight convergence", passed=ok, detail=detail))
    if all(check.passed for check in checks):
        checks.insert(
            0, InvariantCheck(name="increasing hypotheses", passed=True, detail=f"{spec.steps} steps")
        )
    return _raise_on_failures(checks, "increasing-sequence")


def check_outside_hypotheses(spec: SequenceSpec, p: int = 1) -> List[InvariantCheck]:
    """
    Spot-checks for approximation from outside:
    - D inside every D_n, and sup over nodes of D_n of dist(., D) shrinking
    - mu <= mu_m on D for every m
    - for m >= p: mu <= mu_m <= mu_p at nodes of D_m, mu_p integrable over D_p
      (finite and stable under refinement), mu_k -> mu pointwise on D
    Raises `HypothesisViolation` listing every failure.
    """
    if spec.mode != SequenceMode.outside:
        raise ValueError(f"expected an outside sequence, got {spec.mode}")
    if not 1 <= p <= spec.steps:
        raise ValueError(f"p must be in [1, {spec.steps}], got {p}")
    checks = []
    limit_nodes = _spot_nodes(spec.limit_domain)
    limit_values = spec.limit_weight.values(limit_nodes)
    mu_p = spec.weight(p)

    spreads = []
    for m in range(1, spec.steps + 1):
        d_m, mu_m = spec.domain(m), spec.weight(m)
        if not d_m.contains(limit_nodes).all():
            checks.append(
                InvariantCheck(name="D inside D_n", passed=False, step=m, detail=f"nodes of D outside D_{m}")
            )
        if not _not_above(limit_values, mu_m.values(limit_nodes)):
            checks.append(
                InvariantCheck(name="mu <= mu_m on D", passed=False, step=m, detail=f"mu exceeds mu_{m}")
            )
        nodes_m = _spot_nodes(d_m)
        spreads.append(float(np.max(distance_to(spec.limit_domain, nodes_m))))
        if m >= p:
            inside_p = spec.domain(p).contains(nodes_m)
            if not _not_above(mu_m.values(nodes_m[inside_p]), mu_p.values(nodes_m[inside_p])):
                checks.append(
                    InvariantCheck(name="mu_m <= mu_p", passed=False, step=m, detail=f"mu_{m} exceeds mu_{p}")
                )

    growing = [m + 2 for m in range(len(spreads) - 1) if spreads[m + 1] > spreads[m] + 1e-12]
    shrinks = spreads[0] == 0 or spec.steps == 1 or spreads[-1] < spreads[0]
    checks.append(
        InvariantCheck(
            name="D_n approaches D from outside",
            passed=not growing and shrinks,
            value=spreads[-1],
            detail=f"sup dist(D_n, D) from {spreads[0]:.3g} to {spreads[-1]:.3g}",
        )
    )

    rule_p = build_quadrature(spec.domain(p), SPOT_CHECK_RESOLUTION, 2)
    refined_p = build_quadrature(spec.domain(p), 2 * SPOT_CHECK_RESOLUTION, 2)
    mass = float(np.sum(mu_p.values(rule_p.nodes) * rule_p.weights))
    refined_mass = float(np.sum(mu_p.values(refined_p.nodes) * refined_p.weights))
    stable = np.isfinite(mass) and np.isfinite(refined_mass) and abs(refined_mass - mass) < 0.1 * abs(mass)
    checks.append(
        InvariantCheck(
            name="mu_p integrable on D_p",
            passed=bool(stable),
            value=mass,
            detail=f"integral of mu_{p} over D_{p}: {mass:.6g} (refined {refined_mass:.6g})",
        )
    )

    ok, detail = _pointwise_convergence(spec, limit_nodes, "D")
    checks.append(InvariantCheck(name="pointwise weight convergence", passed=ok, detail=detail))
    return _raise_on_failures(checks, "outside-approximation")
