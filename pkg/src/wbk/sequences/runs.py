"""
Convergence experiments over domain/weight sequences.

Every run compares per-step kernels K_n = K_{D_n, mu_n} against a reference for the
limit (the closed-form oracle when one exists, otherwise the numerical limit model)
and records the monotonicity and equivalence properties as `InvariantCheck`s.
"""
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import structlog
from exceptiongroup import ExceptionGroup

from wbk.geometry import Domain, as_points, build_quadrature
from wbk.kernels.checks import diagonal_sweep, hermitian_sweep, schwarz_sweep
from wbk.kernels.model import KernelModel, build_kernel_model
from wbk.oracles import OracleKernel, oracle_for
from wbk.sequences.generators import (
    SequenceSpec,
    check_increasing_hypotheses,
    check_outside_hypotheses,
)
from wbk.sequences.rates import rate_fit
from wbk.settings import get_settings
from wbk.types.errors import DomainMismatch, InsufficientData
from wbk.types.main import SequenceMode
from wbk.types.reports import (
    ConvergenceReport,
    InvariantCheck,
    NormConvergenceReport,
    NormStepRecord,
    StepRecord,
    to_pair,
)
from wbk.weights import Weight

logger = structlog.get_logger(__name__)
settings = get_settings()

__all__ = ["SequenceStep", "build_steps", "run_increasing", "run_outside", "thm15_norm_check"]

MONOTONE_SLACK = 1e-8
BOUND_SLACK = 1e-6
# expected bound on sup error / diagonal error at the final outside step
EQUIVALENCE_RATIO_BOUND = 10.0


@dataclass(frozen=True, eq=False)
class SequenceStep:
    index: int
    domain: Domain
    weight: Weight
    model: KernelModel
    oracle: Optional[OracleKernel]
    parameter: Optional[float]
    elapsed_seconds: float


def build_step(spec: SequenceSpec, n: int, degree_cut: int, resolution: int, order: int) -> SequenceStep:
    started = time.perf_counter()
    d_n, mu_n = spec.domain(n), spec.weight(n)
    with structlog.contextvars.bound_contextvars(step=n):
        model = build_kernel_model(d_n, mu_n, degree_cut, resolution, order)
        elapsed = time.perf_counter() - started
        logger.debug(f"built step {n} on {d_n.describe()} in {elapsed:.3f}s")
    return SequenceStep(
        index=n,
        domain=d_n,
        weight=mu_n,
        model=model,
        oracle=oracle_for(d_n, mu_n),
        parameter=spec.parameter_at(n),
        elapsed_seconds=elapsed,
    )


def build_steps(
    spec: SequenceSpec, degree_cut: int = None, resolution: int = None, order: int = None
) -> List[SequenceStep]:
    """
    Builds every step's kernel model, in step order. With `NUM_THREADS` > 1 the steps
    are built concurrently and all failures are raised together as an `ExceptionGroup`.
    """
    degree_cut = degree_cut or settings.DEFAULT_DEGREE
    resolution = resolution or settings.DEFAULT_RESOLUTION
    order = order or settings.DEFAULT_ORDER
    indices = range(1, spec.steps + 1)
    if settings.NUM_THREADS <= 1 or spec.steps == 1:
        return [build_step(spec, n, degree_cut, resolution, order) for n in indices]

    with ThreadPoolExecutor(max_workers=settings.NUM_THREADS) as pool:
        futures = [pool.submit(build_step, spec, n, degree_cut, resolution, order) for n in indices]
    steps, errors = [], []
    for n, future in zip(indices, futures):
        try:
            steps.append(future.result())
        except Exception as exc:
            logger.error(f"step {n} failed: {exc}")
            errors.append(exc)
    if errors:
        raise ExceptionGroup(f"{len(errors)} of {spec.steps} sequence steps failed", errors)
    return steps


@dataclass(frozen=True, eq=False)
class _Reference:
    """Limit kernel values the steps are compared against."""

    model: KernelModel
    oracle: Optional[OracleKernel]
    diagonals: np.ndarray
    numeric_diagonals: np.ndarray
    grid_values: np.ndarray


def _reference(spec: SequenceSpec, anchors, grid, degree_cut, resolution, order) -> _Reference:
    model = build_kernel_model(spec.limit_domain, spec.limit_weight, degree_cut, resolution, order)
    oracle = oracle_for(spec.limit_domain, spec.limit_weight)
    numeric = model.diagonal(anchors)
    if oracle is not None:
        diagonals = oracle.diagonal(anchors)
        grid_values = oracle.section(grid, grid)
    else:
        diagonals = numeric
        grid_values = model.section(grid, grid)
    return _Reference(model, oracle, diagonals, numeric, grid_values)


def _require_inside(d: Domain, points: np.ndarray, what: str):
    outside = ~d.contains(points)
    if outside.any():
        raise DomainMismatch(f"{what} {points[outside][0]} is outside {d.describe()}")


def _step_record(step: SequenceStep, anchors, grid, reference: _Reference) -> StepRecord:
    diagonals = step.model.diagonal(anchors)
    oracle_diagonals = step.oracle.diagonal(anchors) if step.oracle is not None else None
    diagonal_error = float(np.max(np.abs(diagonals - reference.diagonals) / reference.diagonals))
    difference = np.abs(step.model.section(grid, grid) - reference.grid_values)
    sup_error = float(difference.max() / np.abs(reference.grid_values).max())
    system = step.model.system
    return StepRecord(
        step=step.index,
        domain=step.domain.describe(),
        weight=step.weight.describe(),
        parameter=step.parameter,
        diagonals=diagonals.tolist(),
        oracle_diagonals=None if oracle_diagonals is None else oracle_diagonals.tolist(),
        diagonal_error=diagonal_error,
        sup_error=sup_error,
        ridge=system.ridge,
        relative_ridge=system.relative_ridge,
        condition_estimate=system.condition_estimate,
        elapsed_seconds=step.elapsed_seconds,
    )


def _kernel_sweeps(step: SequenceStep, points: np.ndarray) -> List[InvariantCheck]:
    checks = [
        schwarz_sweep(step.model, points),
        hermitian_sweep(step.model, points),
        diagonal_sweep(step.model, points),
    ]
    for check in checks:
        check.step = step.index
    return checks


def _oracle_checks(
    records: List[StepRecord], reference: _Reference, tolerance: float
) -> List[InvariantCheck]:
    """Numerical kernels against closed forms, for the limit and for every step that has one."""
    checks = []
    if reference.oracle is not None:
        error = float(np.max(np.abs(reference.numeric_diagonals - reference.diagonals) / reference.diagonals))
        checks.append(InvariantCheck.from_bound("limit kernel matches oracle", error, tolerance))
    errors = [
        max(abs(k - o) / o for k, o in zip(record.diagonals, record.oracle_diagonals))
        for record in records
        if record.oracle_diagonals is not None
    ]
    if errors:
        worst = int(np.argmax(errors))
        checks.append(
            InvariantCheck.from_bound(
                "step kernels match oracles", float(errors[worst]), tolerance, step=worst + 1
            )
        )
    return checks


def _convergence_checks(report: ConvergenceReport, tolerance: Optional[float]) -> List[InvariantCheck]:
    if tolerance is None or not report.steps:
        return []
    final = report.steps[-1]
    checks = [
        InvariantCheck.from_bound("final diagonal error", final.diagonal_error, tolerance, step=final.step)
    ]
    try:
        report.rate = rate_fit(report.diagonal_series(0))
    except InsufficientData as exc:
        logger.debug(f"no rate fit: {exc}")
    if report.rate is not None and final.diagonal_error > 0:
        checks.append(
            InvariantCheck(
                name="geometric convergence rate",
                passed=report.rate.rate < 0 and report.rate.r_squared >= 0.9,
                value=report.rate.rate,
                detail=f"rate={report.rate.rate:.6g}, r_squared={report.rate.r_squared:.6g}",
            )
        )
    return checks


def _prepare(anchors, grid, region: Domain):
    anchors, grid = as_points(anchors), as_points(grid)
    _require_inside(region, anchors, "anchor")
    _require_inside(region, grid, "grid point")
    return anchors, grid


def _new_report(spec, anchors, grid, reference, degree_cut, resolution, order) -> ConvergenceReport:
    return ConvergenceReport(
        mode=spec.mode,
        limit_domain=spec.limit_domain.describe(),
        limit_weight=spec.limit_weight.describe(),
        parameter_name=spec.parameter_name,
        degree_cut=degree_cut,
        resolution=resolution,
        order=order,
        anchors=[to_pair(t) for t in anchors],
        grid_size=len(grid),
        limit_diagonals=reference.numeric_diagonals.tolist(),
        oracle_limit_diagonals=None if reference.oracle is None else reference.diagonals.tolist(),
    )


def _defaults(degree_cut, resolution, order):
    return (
        degree_cut or settings.DEFAULT_DEGREE,
        resolution or settings.DEFAULT_RESOLUTION,
        order or settings.DEFAULT_ORDER,
    )


def run_increasing(
    spec: SequenceSpec,
    anchors: Sequence[complex],
    grid: Sequence[complex],
    degree_cut: int = None,
    resolution: int = None,
    order: int = None,
    tolerance: Optional[float] = None,
) -> ConvergenceReport:
    """
    Increasing sequence D_n -> D with mu_n <= mu: records per-step diagonals and
    sup-discrepancies over grid pairs, and asserts
    - diagonals never increase along the sequence (slack 1e-8 relative)
    - every step's diagonal stays above the limit diagonal (slack 1e-6 relative)
    - Schwarz, Hermitian symmetry and diagonal positivity at every step.

    Anchors and grid points must lie in D_1. With `tolerance`, the final diagonal
    error and the fitted convergence rate are asserted too.
    """
    if spec.mode != SequenceMode.increasing:
        raise ValueError(f"run_increasing needs an increasing sequence, got {spec.mode}")
    degree_cut, resolution, order = _defaults(degree_cut, resolution, order)
    anchors, grid = _prepare(anchors, grid, spec.domain(1))
    hypotheses = check_increasing_hypotheses(spec)

    reference = _reference(spec, anchors, grid, degree_cut, resolution, order)
    steps = build_steps(spec, degree_cut, resolution, order)
    report = _new_report(spec, anchors, grid, reference, degree_cut, resolution, order)
    report.checks.extend(hypotheses)
    points = np.concatenate([anchors, grid])
    for step in steps:
        report.steps.append(_step_record(step, anchors, grid, reference))
        report.checks.extend(_kernel_sweeps(step, points))

    diagonals = np.array([record.diagonals for record in report.steps])
    # K_m(t, t) - K_n(t, t) relative to K_n(t, t), over all pairs m > n
    worst_increase = 0.0
    for n in range(len(diagonals)):
        for m in range(n + 1, len(diagonals)):
            increase = (diagonals[m] - diagonals[n]) / diagonals[n]
            worst_increase = max(worst_increase, float(increase.max()))
    report.checks.append(
        InvariantCheck.from_bound("diagonals non-increasing", worst_increase, MONOTONE_SLACK)
    )
    shortfall = float(np.max(1.0 - diagonals / reference.numeric_diagonals[None, :]))
    report.checks.append(InvariantCheck.from_bound("diagonals above limit", shortfall, BOUND_SLACK))

    report.checks.extend(_oracle_checks(report.steps, reference, tolerance or 1e-3))
    report.checks.extend(_convergence_checks(report, tolerance))
    logger.info(f"increasing run over {spec.steps} steps: {'pass' if report.passed else 'FAIL'}")
    return report


def run_outside(
    spec: SequenceSpec,
    anchors: Sequence[complex],
    grid: Sequence[complex],
    degree_cut: int = None,
    resolution: int = None,
    order: int = None,
    tolerance: Optional[float] = None,
    p: int = 1,
) -> ConvergenceReport:
    """
    Sequence approximating D from outside: records diagonals and sup-discrepancies and
    asserts that diagonals stay below the limit diagonal (slack 1e-6 relative), plus the
    per-step Schwarz/Hermitian/positivity sweeps.

    With `tolerance`, the final diagonal error and final sup error must both be below it
    and their ratio C = sup error / diagonal error is reported (expected <= 10).
    Anchors and grid points must lie in D.
    """
    if spec.mode != SequenceMode.outside:
        raise ValueError(f"run_outside needs an outside sequence, got {spec.mode}")
    degree_cut, resolution, order = _defaults(degree_cut, resolution, order)
    anchors, grid = _prepare(anchors, grid, spec.limit_domain)
    hypotheses = check_outside_hypotheses(spec, p)

    reference = _reference(spec, anchors, grid, degree_cut, resolution, order)
    steps = build_steps(spec, degree_cut, resolution, order)
    report = _new_report(spec, anchors, grid, reference, degree_cut, resolution, order)
    report.checks.extend(hypotheses)
    points = np.concatenate([anchors, grid])
    for step in steps:
        report.steps.append(_step_record(step, anchors, grid, reference))
        report.checks.extend(_kernel_sweeps(step, points))

    diagonals = np.array([record.diagonals for record in report.steps])
    excess = float(np.max(diagonals / reference.numeric_diagonals[None, :] - 1.0))
    report.checks.append(InvariantCheck.from_bound("diagonals below limit", excess, BOUND_SLACK))
    report.checks.extend(_oracle_checks(report.steps, reference, tolerance or 1e-3))

    final = report.steps[-1]
    if final.diagonal_error > 0:
        report.equivalence_ratio = final.sup_error / final.diagonal_error
    if tolerance is not None:
        report.checks.append(
            InvariantCheck.from_bound("final sup error", final.sup_error, tolerance, step=final.step)
        )
        if report.equivalence_ratio is not None:
            report.checks.append(
                InvariantCheck.from_bound(
                    "diagonal/sup equivalence ratio",
                    report.equivalence_ratio,
                    EQUIVALENCE_RATIO_BOUND,
                    step=final.step,
                )
            )
    report.checks.extend(_convergence_checks(report, tolerance))
    logger.info(f"outside run over {spec.steps} steps: {'pass' if report.passed else 'FAIL'}")
    return report


def thm15_norm_check(
    spec: SequenceSpec,
    anchors: Sequence[complex],
    degree_cut: int = None,
    resolution: int = None,
    order: int = None,
    tolerance: float = 1e-3,
    p: int = 1,
) -> NormConvergenceReport:
    """
    For an outside sequence, the mu-norm over D of each step's kernel section,
    ||K_n(., t)||^2_mu, against K(t, t), and the L2 distance ||K_n(., t) - K(., t)||_mu.

    The distance is computed directly on the quadrature of D and again through the
    expansion ||K_n||^2 - 2 K_n(t, t) + K(t, t), which the reproducing property
    makes equal; their agreement is recorded as a check.
    Converged means both the norm and the distance are within `tolerance`
    (relative to K(t, t) and sqrt(K(t, t))) at the final step.
    """
    if spec.mode != SequenceMode.outside:
        raise ValueError(f"the norm check needs an outside sequence, got {spec.mode}")
    degree_cut, resolution, order = _defaults(degree_cut, resolution, order)
    anchors = as_points(anchors)
    _require_inside(spec.limit_domain, anchors, "anchor")
    hypotheses = check_outside_hypotheses(spec, p)

    rule = build_quadrature(spec.limit_domain, resolution, order)
    limit = build_kernel_model(spec.limit_domain, spec.limit_weight, degree_cut, rule=rule)
    mu_weights = limit.system.mu * rule.weights
    limit_section = limit.section(rule.nodes, anchors)
    limit_diagonals = limit.diagonal(anchors)

    report = NormConvergenceReport(
        limit_domain=spec.limit_domain.describe(),
        limit_weight=spec.limit_weight.describe(),
        parameter_name=spec.parameter_name,
        anchors=[to_pair(t) for t in anchors],
        limit_diagonals=limit_diagonals.tolist(),
        tolerance=tolerance,
        checks=list(hypotheses),
    )
    worst_identity_gap = 0.0
    for step in build_steps(spec, degree_cut, resolution, order):
        section = step.model.section(rule.nodes, anchors)
        step_diagonals = step.model.diagonal(anchors)
        norms = np.sum(np.abs(section) ** 2 * mu_weights[:, None], axis=0)
        distances_sq = np.sum(np.abs(section - limit_section) ** 2 * mu_weights[:, None], axis=0)
        expansion = norms - 2 * step_diagonals + limit_diagonals
        worst_identity_gap = max(
            worst_identity_gap, float(np.max(np.abs(distances_sq - expansion) / limit_diagonals))
        )
        for index, t in enumerate(anchors):
            report.steps.append(
                NormStepRecord(
                    step=step.index,
                    parameter=step.parameter,
                    anchor=to_pair(t),
                    norm_sq=float(norms[index]),
                    diagonal=float(step_diagonals[index]),
                    distance=float(np.sqrt(distances_sq[index])),
                    identity_distance=float(np.sqrt(max(expansion[index], 0.0))),
                )
            )

    report.checks.append(InvariantCheck.from_bound("distance expansion identity", worst_identity_gap, 1e-8))
    final = [record for record in report.steps if record.step == spec.steps]
    norm_gap = max(abs(r.norm_sq - k) / k for r, k in zip(final, limit_diagonals))
    distance_gap = max(r.distance / np.sqrt(k) for r, k in zip(final, limit_diagonals))
    report.checks.append(InvariantCheck.from_bound("final norm matches K(t, t)", float(norm_gap), tolerance))
    report.checks.append(InvariantCheck.from_bound("final distance", float(distance_gap), tolerance))
    report.converged = bool(norm_gap <= tolerance and distance_gap <= tolerance)

    first = [record for record in report.steps if record.step == 1]
    if first and spec.steps > 1:
        shrinking = all(f.distance >= r.distance for f, r in zip(first, final))
        report.checks.append(
            InvariantCheck(
                name="distances shrink", passed=shrinking, detail="final distance <= first distance"
            )
        )
    logger.info(f"norm check over {spec.steps} steps: converged={report.converged}")
    return report
