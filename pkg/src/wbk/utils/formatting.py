from pathlib import Path
from typing import List

import numpy as np
import pandas as pd
import structlog

from wbk.settings import get_settings
from wbk.types.reports import RunManifest

logger = structlog.get_logger(__name__)
settings = get_settings()


def float_format() -> str:
    return f"%.{settings.CSV_SIGNIFICANT_DIGITS}g"


def split_complex_columns(df: pd.DataFrame) -> pd.DataFrame:
    """
    Replaces every complex column `x` with `x_re` and `x_im` in place of it,
    since CSV has no complex type.
    """
    columns = {}
    for column in df.columns:
        values = df[column]
        if np.iscomplexobj(values.to_numpy()):
            logger.debug(f"splitting complex column `{column}`")
            columns[f"{column}_re"] = np.real(values.to_numpy())
            columns[f"{column}_im"] = np.imag(values.to_numpy())
        else:
            columns[column] = values
    return pd.DataFrame(columns, index=df.index)


def write_table(df: pd.DataFrame, path) -> Path:
    """
    Writes a table as CSV with a header row, the frame's column order and
    `CSV_SIGNIFICANT_DIGITS` significant digits. Identical frames give identical bytes.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df = split_complex_columns(df)
    df.to_csv(path, index=False, float_format=float_format(), lineterminator="\n")
    logger.debug(f"wrote {len(df)} rows to {path}")
    return path


def write_manifest(manifest: RunManifest, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(manifest.json(indent=2) + "\n", encoding="utf-8")
    logger.debug(f"wrote manifest to {path}")
    return path


def format_summary(manifest: RunManifest) -> List[str]:
    """Human-readable lines for the end of a CLI run."""
    lines = [f"{manifest.experiment}: {manifest.status}"]
    failures = manifest.failures()
    lines.append(f"{len(manifest.checks) - len(failures)}/{len(manifest.checks)} checks passed")
    lines.extend(f"  {check.describe()}" for check in failures)
    lines.extend(f"  error: {error}" for error in manifest.errors)
    lines.extend(f"  wrote {output}" for output in manifest.outputs)
    return lines
