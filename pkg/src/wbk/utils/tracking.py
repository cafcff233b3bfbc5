import time
from contextlib import contextmanager
from datetime import datetime
from typing import Iterable, Optional

import structlog

from wbk.kernels.gram import GramSystem
from wbk.types.reports import InvariantCheck, RidgeEntry, RunManifest, StepRecord, StepTiming

logger = structlog.get_logger(__name__)


class RunTracker:
    """
    Collects what an experiment run reports into its `RunManifest`:
    wall-clock per step, the ridge/conditioning log and every asserted check.
    """

    def __init__(self, manifest: RunManifest):
        self.manifest = manifest

    def __repr__(self):
        return f"<RunTracker {self.manifest.experiment} status={self.manifest.status}>"

    @contextmanager
    def step(self, name: str):
        started = time.perf_counter()
        try:
            yield
        finally:
            seconds = time.perf_counter() - started
            logger.debug(f"{name} took {seconds:.3f}s")
            self.manifest.timings.append(StepTiming(name=name, seconds=seconds))

    def record_timing(self, name: str, seconds: float):
        self.manifest.timings.append(StepTiming(name=name, seconds=seconds))

    def record_system(self, name: str, system: GramSystem):
        self.manifest.ridge_log.append(
            RidgeEntry(
                name=name,
                ridge=system.ridge,
                relative_ridge=system.relative_ridge,
                condition_estimate=system.condition_estimate,
            )
        )

    def record_step(self, record: StepRecord, name: Optional[str] = None):
        """Timing and ridge entries of one sequence step."""
        name = name or f"step {record.step}"
        self.record_timing(name, record.elapsed_seconds)
        self.manifest.ridge_log.append(
            RidgeEntry(
                name=name,
                ridge=record.ridge,
                relative_ridge=record.relative_ridge,
                condition_estimate=record.condition_estimate,
            )
        )

    def record_checks(self, checks: Iterable[InvariantCheck]):
        for check in checks:
            if not check.passed:
                logger.warning(f"check failed: {check.describe()}")
            self.manifest.checks.append(check)

    def record_error(self, exc: BaseException):
        message = f"{type(exc).__name__}: {exc}"
        logger.error(message)
        self.manifest.errors.append(message)
        # exception groups and hypothesis violations carry their parts separately
        for inner in getattr(exc, "exceptions", ()):
            self.manifest.errors.append(f"  {type(inner).__name__}: {inner}")
        for failure in getattr(exc, "failures", ()):
            self.manifest.errors.append(f"  {failure}")

    def record_output(self, path):
        self.manifest.outputs.append(str(path))

    def finish(self) -> RunManifest:
        self.manifest.finished_at = datetime.now()
        if self.manifest.errors:
            self.manifest.status = "error"
        else:
            self.manifest.status = "passed" if self.manifest.passed else "failed"
        return self.manifest
