"""
Runs one configured experiment, writes its tables and manifest, and reports
whether every asserted invariant held.
"""
from datetime import datetime
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd
import structlog
from exceptiongroup import ExceptionGroup

from wbk.forelli_rudin import build_hartogs, forelli_rudin_identity, hartogs_kernel_at_zero_fiber
from wbk.geometry import Domain, build_quadrature, compact_sample_grid
from wbk.kernels.checks import (
    diagonal_sweep,
    evaluation_bound_check,
    hermitian_sweep,
    in_span_residuals,
    lemma9_extremality,
    minimal_element_sweep,
    schwarz_sweep,
    toeplitz_cross_check,
)
from wbk.kernels.model import KernelModel, build_kernel_model
from wbk.oracles import oracle_for
from wbk.sampling import extremality_suite
from wbk.sequences.runs import run_increasing, run_outside, thm15_norm_check
from wbk.types.config import ExperimentConfig
from wbk.types.errors import BergmanError, DomainMismatch
from wbk.types.main import DomainKind, ExperimentKind, OutputFormat
from wbk.types.reports import InvariantCheck, RunManifest
from wbk.utils.formatting import write_manifest, write_table
from wbk.utils.tracking import RunTracker
from wbk.weights import admissibility_check

logger = structlog.get_logger(__name__)

__all__ = ["execute", "EXPERIMENTS"]

REPRODUCING_TOLERANCE = 1e-8
TOEPLITZ_TOLERANCE = 1e-6
EXTREMALITY_SUITE_SIZE = 100


def _grid(config: ExperimentConfig, d: Domain, grid_count: Optional[int]) -> List[complex]:
    return compact_sample_grid(d, config.numeric.margin, grid_count or config.numeric.grid_count)


def _require_anchors(d: Domain, anchors: List[complex]):
    outside = [t for t in anchors if not d.contains(np.array([t]))[0]]
    if outside:
        raise DomainMismatch(f"anchors {outside} are outside {d.describe()}")


def _model_checks(km: KernelModel, anchors: List[complex], grid: List[complex]) -> List[InvariantCheck]:
    """Identities every kernel model has to satisfy."""
    points = list(anchors) + list(grid)
    checks = [
        hermitian_sweep(km, points),
        schwarz_sweep(km, points),
        diagonal_sweep(km, points),
        minimal_element_sweep(km, anchors, grid),
    ]
    residuals = in_span_residuals(km, anchors)
    checks.append(
        InvariantCheck.from_bound("reproducing property on monomials", max(residuals), REPRODUCING_TOLERANCE)
    )

    violations, bound_violations, total = 0, 0, 0
    for t in anchors:
        for f in extremality_suite(km.coefficients(t), EXTREMALITY_SUITE_SIZE):
            total += 1
            violations += not lemma9_extremality(km, f, t).consistent
            bound_violations += not evaluation_bound_check(km, f, t)
    checks.append(
        InvariantCheck(
            name="extremal characterization of K(., t)",
            passed=violations == 0,
            value=float(violations),
            bound=0.0,
            detail=f"{violations} of {total} in-span functions in S dominate K(t, t) without equaling it",
        )
    )
    checks.append(
        InvariantCheck(
            name="evaluation functional bound",
            passed=bound_violations == 0,
            value=float(bound_violations),
            bound=0.0,
            detail=f"{bound_violations} of {total} in-span functions exceed sqrt(K(t, t)) ||f||",
        )
    )
    return checks


def _kernel_table(config: ExperimentConfig, tracker: RunTracker, grid_count: Optional[int]) -> pd.DataFrame:
    d = config.build_domain()
    w = config.build_weight(d)
    numeric = config.numeric
    anchors = config.anchor_points
    _require_anchors(d, anchors)
    if d.kind == DomainKind.indicator:
        # polynomials need not be dense here
        logger.warning(f"K on {d.describe()} is the kernel of the degree-{numeric.M} polynomial subspace")

    with tracker.step("kernel model"):
        km = build_kernel_model(d, w, numeric.M, numeric.resolution, numeric.order)
    tracker.record_system("kernel model", km.system)
    grid = _grid(config, d, grid_count)

    with tracker.step("model checks"):
        tracker.record_checks(_model_checks(km, anchors, grid))

    oracle = oracle_for(d, w)
    if oracle is not None:
        numeric_values = km.section(grid, grid)
        oracle_values = oracle.section(grid, grid)
        error = float(np.max(np.abs(numeric_values - oracle_values)) / np.max(np.abs(oracle_values)))
        tracker.record_checks(
            [InvariantCheck.from_bound("numeric kernel matches oracle on grid", error, numeric.tolerance)]
        )

    values = km.section(anchors, anchors)
    oracle_values = oracle.section(anchors, anchors) if oracle is not None else None
    rows = []
    for i, z in enumerate(anchors):
        for j, t in enumerate(anchors):
            row = {
                "z_re": z.real,
                "z_im": z.imag,
                "t_re": t.real,
                "t_im": t.imag,
                "K": values[i, j],
            }
            if oracle_values is not None:
                row["oracle"] = oracle_values[i, j]
                row["abs_err"] = abs(values[i, j] - oracle_values[i, j])
            rows.append(row)
    return pd.DataFrame(rows)


def _sequence_run(config: ExperimentConfig, tracker: RunTracker, grid_count: Optional[int]) -> pd.DataFrame:
    spec = config.build_sequence()
    numeric = config.numeric
    anchors = config.anchor_points
    increasing = config.experiment == ExperimentKind.increasing_run
    region = spec.domain(1) if increasing else spec.limit_domain
    _require_anchors(region, anchors)
    grid = _grid(config, region, grid_count)

    run = run_increasing if increasing else run_outside
    kwargs = {} if increasing else {"p": config.sequence.p}
    with tracker.step("sequence run"):
        report = run(
            spec,
            anchors,
            grid,
            numeric.M,
            numeric.resolution,
            numeric.order,
            tolerance=numeric.tolerance,
            **kwargs,
        )
    for record in report.steps:
        tracker.record_step(record)
    tracker.record_checks(report.checks)
    if report.rate is not None:
        logger.info(f"fitted rate {report.rate.rate:.4g} (r^2 = {report.rate.r_squared:.4g})")
    return report.to_frame()


def _norm_check(config: ExperimentConfig, tracker: RunTracker, grid_count: Optional[int]) -> pd.DataFrame:
    spec = config.build_sequence()
    numeric = config.numeric
    with tracker.step("norm check"):
        report = thm15_norm_check(
            spec,
            config.anchor_points,
            numeric.M,
            numeric.resolution,
            numeric.order,
            tolerance=numeric.tolerance,
            p=config.sequence.p,
        )
    tracker.record_checks(report.checks)
    return report.to_frame()


def _forelli_rudin(config: ExperimentConfig, tracker: RunTracker, grid_count: Optional[int]) -> pd.DataFrame:
    d = config.build_domain()
    w = config.build_weight(d)
    numeric = config.numeric
    anchors = config.anchor_points
    _require_anchors(d, anchors)
    rule = build_quadrature(d, numeric.resolution, numeric.order)

    with tracker.step("hartogs blocks"):
        h = build_hartogs(d, w, numeric.M, numeric.L, rule)
    for m, block in enumerate(h.blocks):
        tracker.record_system(f"fiber degree {m}", block)

    grid = _grid(config, d, grid_count)
    checks = [forelli_rudin_identity(h, list(anchors) + list(grid))]
    if numeric.L > 0:
        single = build_hartogs(d, w, numeric.M, 0, rule)
        gap = max(
            abs(hartogs_kernel_at_zero_fiber(h, z, p) - hartogs_kernel_at_zero_fiber(single, z, p))
            for z in anchors
            for p in anchors
        )
        checks.append(InvariantCheck.from_bound("zero-fiber kernel independent of L", gap, 0.0))

    oracle = oracle_for(d, w)
    rows = []
    errors = []
    for z in anchors:
        for p in anchors:
            value = np.pi * hartogs_kernel_at_zero_fiber(h, z, p)
            row = {"z_re": z.real, "z_im": z.imag, "p_re": p.real, "p_im": p.imag, "pi_K_Omega": value}
            if oracle is not None:
                expected = complex(oracle.section(z, p)[0, 0])
                row["oracle"] = expected
                row["abs_err"] = abs(value - expected)
                errors.append(abs(value - expected) / abs(expected))
            rows.append(row)
    if errors:
        checks.append(InvariantCheck.from_bound("pi K_Omega matches oracle", max(errors), numeric.tolerance))
    tracker.record_checks(checks)
    return pd.DataFrame(rows)


def _toeplitz(config: ExperimentConfig, tracker: RunTracker, grid_count: Optional[int]) -> pd.DataFrame:
    d = config.build_domain()
    w = config.build_weight(d)
    numeric = config.numeric
    anchors = config.anchor_points
    _require_anchors(d, anchors)
    rule = build_quadrature(d, numeric.resolution, numeric.order)

    rows = []
    with tracker.step("toeplitz relation"):
        for t in anchors:
            discrepancy = toeplitz_cross_check(d, w, rule, numeric.M, t)
            rows.append({"t_re": t.real, "t_im": t.imag, "discrepancy": discrepancy})
    worst = max(row["discrepancy"] for row in rows)
    tracker.record_checks(
        [InvariantCheck.from_bound("inverse Toeplitz maps K_D to K_D,mu", worst, TOEPLITZ_TOLERANCE)]
    )
    return pd.DataFrame(rows)


def _admissibility(config: ExperimentConfig, tracker: RunTracker, grid_count: Optional[int]) -> pd.DataFrame:
    d = config.build_domain()
    w = config.build_weight(d)
    numeric = config.numeric
    rule = build_quadrature(d, numeric.resolution, numeric.order)
    with tracker.step("admissibility"):
        report = admissibility_check(w, d, numeric.a, rule)
    tracker.record_checks(
        [
            InvariantCheck(
                name="local integrability of mu^-a",
                passed=report.verdict == "pass",
                value=report.relative_change,
                bound=0.1,
                detail=(
                    f"verdict {report.verdict}: "
                    f"{report.integral_estimate:.6g} -> {report.refined_estimate:.6g}"
                ),
            )
        ]
    )
    return pd.DataFrame([report.dict()])


EXPERIMENTS: Dict[str, Callable[[ExperimentConfig, RunTracker, Optional[int]], pd.DataFrame]] = {
    "kernel_table": _kernel_table,
    "increasing_run": _sequence_run,
    "outside_run": _sequence_run,
    "thm15_check": _norm_check,
    "forelli_rudin_check": _forelli_rudin,
    "toeplitz_check": _toeplitz,
    "admissibility_check": _admissibility,
}


def execute(config: ExperimentConfig, out_dir=None, grid_count: Optional[int] = None) -> RunManifest:
    """
    Runs the configured experiment and writes `<name>.csv` and `<name>.manifest.json`
    (as selected by `output.formats`) into `out_dir` or `output.directory`.

    Library errors do not propagate: they are recorded in the manifest, which is
    written regardless, with status `error`.
    """
    from wbk import __version__

    directory = Path(out_dir or config.output.directory)
    manifest = RunManifest(
        experiment=str(config.experiment),
        config=config.dict(),
        version=__version__,
        started_at=datetime.now(),
    )
    tracker = RunTracker(manifest)
    formats = {str(f) for f in config.output.formats}

    with structlog.contextvars.bound_contextvars(experiment=config.name):
        logger.info(f"running {config.experiment} `{config.name}`")
        try:
            table = EXPERIMENTS[str(config.experiment)](config, tracker, grid_count)
            if str(OutputFormat.csv) in formats:
                tracker.record_output(write_table(table, directory / f"{config.label}.csv"))
        except (BergmanError, ExceptionGroup, ValueError) as exc:
            tracker.record_error(exc)

        manifest = tracker.finish()
        if str(OutputFormat.json) in formats or manifest.status == "error":
            path = directory / f"{config.label}.manifest.json"
            manifest.outputs.append(str(path))
            write_manifest(manifest, path)
        logger.info(f"{config.experiment} `{config.name}` finished: {manifest.status}")
    return manifest
