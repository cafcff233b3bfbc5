from datetime import datetime
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd
import structlog
from pydantic import BaseModel, Field

from wbk.types.main import SequenceMode, Verdict

logger = structlog.get_logger(__name__)

# (re, im) pairs keep reports JSON-friendly
PointPair = Tuple[float, float]


def to_pair(z: complex) -> PointPair:
    z = complex(z)
    return (z.real, z.imag)


class InvariantCheck(BaseModel):
    """A single asserted property with the values it was judged on."""

    name: str
    passed: bool
    value: Optional[float] = None
    bound: Optional[float] = None
    detail: str = ""
    step: Optional[int] = None

    @classmethod
    def from_bound(
        cls, name: str, value: float, bound: float, detail: str = "", step: int = None
    ) -> "InvariantCheck":
        """Passes when `value <= bound`."""
        detail = detail or f"{value:.6g} <= {bound:.6g}"
        return cls(name=name, passed=bool(value <= bound), value=value, bound=bound, detail=detail, step=step)

    def describe(self) -> str:
        where = f" at step {self.step}" if self.step is not None else ""
        verdict = "passed" if self.passed else "FAILED"
        return f"{self.name}{where} {verdict}: {self.detail}"


class AdmissibilityReport(BaseModel):
    weight: str
    domain: str
    a: float
    margin: float
    integral_estimate: float
    refined_estimate: float
    relative_change: float
    verdict: Verdict

    class Config:
        use_enum_values = True


class RateFit(BaseModel):
    rate: float
    r_squared: float
    points_used: int


class StepRecord(BaseModel):
    """Everything recorded about one member of a domain/weight sequence."""

    step: int
    domain: str
    weight: str
    parameter: Optional[float] = None
    diagonals: List[float]
    oracle_diagonals: Optional[List[float]] = None
    diagonal_error: float
    sup_error: float
    ridge: float
    relative_ridge: float
    condition_estimate: float
    elapsed_seconds: float = 0.0


class ConvergenceReport(BaseModel):
    mode: SequenceMode
    limit_domain: str
    limit_weight: str
    parameter_name: str = "parameter"
    degree_cut: int
    resolution: int
    order: int
    anchors: List[PointPair]
    grid_size: int
    steps: List[StepRecord] = Field(default_factory=list)
    limit_diagonals: List[float]
    oracle_limit_diagonals: Optional[List[float]] = None
    checks: List[InvariantCheck] = Field(default_factory=list)
    rate: Optional[RateFit] = None
    equivalence_ratio: Optional[float] = None

    class Config:
        use_enum_values = True

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def diagonal_series(self, anchor_index: int = 0) -> List[float]:
        return [step.diagonals[anchor_index] for step in self.steps]

    def to_frame(self) -> pd.DataFrame:
        """One row per (step, anchor); `abs_err` is against the oracle when one exists."""
        rows = []
        for step in self.steps:
            for index, anchor in enumerate(self.anchors):
                diagonal = step.diagonals[index]
                if step.oracle_diagonals is not None:
                    reference = step.oracle_diagonals[index]
                else:
                    reference = self.limit_diagonals[index]
                rows.append(
                    {
                        "step": step.step,
                        self.parameter_name: step.parameter,
                        "anchor_re": anchor[0],
                        "anchor_im": anchor[1],
                        "K(t,t)": diagonal,
                        "oracle": None if step.oracle_diagonals is None else reference,
                        "abs_err": abs(diagonal - reference),
                        "limit_K(t,t)": self.limit_diagonals[index],
                        "diagonal_error": step.diagonal_error,
                        "sup_error": step.sup_error,
                        "ridge": step.ridge,
                        "condition_estimate": step.condition_estimate,
                    }
                )
        return pd.DataFrame(rows)


class NormStepRecord(BaseModel):
    step: int
    parameter: Optional[float] = None
    anchor: PointPair
    norm_sq: float
    diagonal: float
    distance: float
    identity_distance: float


class NormConvergenceReport(BaseModel):
    """Restricted norms ||K_n(., t)||^2_mu over the limit domain and L2 distances to K(., t)."""

    limit_domain: str
    limit_weight: str
    parameter_name: str = "parameter"
    anchors: List[PointPair]
    limit_diagonals: List[float]
    steps: List[NormStepRecord] = Field(default_factory=list)
    tolerance: float
    converged: bool = False
    checks: List[InvariantCheck] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.converged and all(check.passed for check in self.checks)

    def to_frame(self) -> pd.DataFrame:
        limits = {tuple(a): k for a, k in zip(self.anchors, self.limit_diagonals)}
        rows = [
            {
                "step": record.step,
                self.parameter_name: record.parameter,
                "anchor_re": record.anchor[0],
                "anchor_im": record.anchor[1],
                "norm_sq": record.norm_sq,
                "limit_K(t,t)": limits[tuple(record.anchor)],
                "K_n(t,t)": record.diagonal,
                "distance": record.distance,
                "identity_distance": record.identity_distance,
            }
            for record in self.steps
        ]
        return pd.DataFrame(rows)


class StepTiming(BaseModel):
    name: str
    seconds: float


class RidgeEntry(BaseModel):
    name: str
    ridge: float
    relative_ridge: float
    condition_estimate: float


class RunManifest(BaseModel):
    """Machine-readable record of one experiment run."""

    experiment: str
    config: Dict[str, Any]
    version: str
    started_at: datetime
    finished_at: Optional[datetime] = None
    status: str = "running"
    timings: List[StepTiming] = Field(default_factory=list)
    ridge_log: List[RidgeEntry] = Field(default_factory=list)
    checks: List[InvariantCheck] = Field(default_factory=list)
    errors: List[str] = Field(default_factory=list)
    outputs: List[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.errors and all(check.passed for check in self.checks)

    def failures(self) -> List[InvariantCheck]:
        return [check for check in self.checks if not check.passed]
