import json
from datetime import datetime

import numpy as np
import pandas as pd
import pytest

from wbk.settings import settings_context
from wbk.types.reports import InvariantCheck, RunManifest
from wbk.utils.formatting import format_summary, split_complex_columns, write_manifest, write_table


@pytest.fixture
def complex_frame() -> pd.DataFrame:
    return pd.DataFrame(
        {
            "step": [1, 2],
            "K": np.array([1 / np.pi + 0.5j, 2.0 - 1j]),
            "abs_err": [1e-17, 3.0],
        }
    )


@pytest.fixture
def sample_manifest() -> RunManifest:
    return RunManifest(
        experiment="kernel_table",
        config={"experiment": "kernel_table"},
        version="0.0.0",
        started_at=datetime(2024, 1, 2, 3, 4, 5),
        status="failed",
        checks=[
            InvariantCheck.from_bound("hermitian symmetry", 0.0, 1e-10),
            InvariantCheck.from_bound("final diagonal error", 0.5, 1e-3, step=8),
        ],
        outputs=["results/kernel_table.csv"],
    )


def test_complex_columns_are_split_in_place(complex_frame):
    df = split_complex_columns(complex_frame)
    assert list(df.columns) == ["step", "K_re", "K_im", "abs_err"]
    np.testing.assert_array_equal(df["K_im"], [0.5, -1.0])


class TestWriteTable:
    def test_significant_digits(self, complex_frame, tmp_path):
        path = write_table(complex_frame, tmp_path / "nested" / "table.csv")
        lines = path.read_text().splitlines()
        assert lines[0] == "step,K_re,K_im,abs_err"
        assert lines[1] == "1,0.318309886183791,0.5,1e-17"

    def test_configurable_digits(self, complex_frame, tmp_path):
        with settings_context(csv_significant_digits=4):
            path = write_table(complex_frame, tmp_path / "table.csv")
        assert path.read_text().splitlines()[1].startswith("1,0.3183,")

    def test_same_frame_same_bytes(self, complex_frame, tmp_path):
        first = write_table(complex_frame, tmp_path / "a.csv").read_bytes()
        assert first == write_table(complex_frame.copy(), tmp_path / "b.csv").read_bytes()
        assert b"\r" not in first


def test_write_manifest(sample_manifest, tmp_path):
    path = write_manifest(sample_manifest, tmp_path / "run.manifest.json")
    data = json.loads(path.read_text())
    assert data["status"] == "failed"
    assert data["checks"][1]["step"] == 8
    assert data["started_at"] == "2024-01-02T03:04:05"


def test_format_summary(sample_manifest):
    lines = format_summary(sample_manifest)
    assert lines[0] == "kernel_table: failed"
    assert lines[1] == "1/2 checks passed"
    assert lines[2] == "  final diagonal error at step 8 FAILED: 0.5 <= 0.001"
    assert lines[-1] == "  wrote results/kernel_table.csv"
