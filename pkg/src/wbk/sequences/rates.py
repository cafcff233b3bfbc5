from typing import Sequence

import numpy as np
import structlog
from scipy import stats

from wbk.types.errors import InsufficientData
from wbk.types.reports import RateFit

logger = structlog.get_logger(__name__)

MIN_VALUES = 4
MIN_DIFFERENCES = 4


def rate_fit(values: Sequence[float]) -> RateFit:
    """
    Least-squares fit of log|value_n - value_last| against n over every entry but
    the last. Zero differences are dropped; a negative `rate` means geometric
    convergence with ratio exp(rate).

    Raises `InsufficientData` with fewer than 4 values, non-positive values, or fewer
    than 4 nonzero differences left to fit.
    """
    values = np.asarray(values, dtype=float)
    if len(values) < MIN_VALUES:
        raise InsufficientData(f"rate fits need at least {MIN_VALUES} values, got {len(values)}")
    if not np.all(values > 0) or not np.all(np.isfinite(values)):
        raise InsufficientData("rate fits need positive finite values")

    steps = np.arange(1, len(values))
    differences = np.abs(values[:-1] - values[-1])
    keep = differences > 0
    if keep.sum() < MIN_DIFFERENCES:
        raise InsufficientData(
            f"only {int(keep.sum())} nonzero differences to the last value; need {MIN_DIFFERENCES}"
        )
    fit = stats.linregress(steps[keep], np.log(differences[keep]))
    logger.debug(f"rate fit over {int(keep.sum())} points: slope={fit.slope:.6g}, r={fit.rvalue:.6g}")
    return RateFit(rate=float(fit.slope), r_squared=float(fit.rvalue**2), points_used=int(keep.sum()))
