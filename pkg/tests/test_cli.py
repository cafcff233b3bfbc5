import pytest

from wbk.cli import build_parser, main

KERNEL_TABLE = """
experiment = "kernel_table"
name = "cli"
anchors = [[0.0, 0.0], [0.25, 0.25]]

[numeric]
M = 12
resolution = 64
margin = 0.4
grid_count = 4
"""


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "cli.toml"
    path.write_text(KERNEL_TABLE)
    return path


def test_passing_run_exits_zero(config_path, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", str(config_path), "--out", str(out)]) == 0
    assert (out / "cli.csv").exists()
    assert "kernel_table: passed" in capsys.readouterr().out


def test_failed_check_exits_one(tmp_path):
    path = tmp_path / "strict.toml"
    path.write_text(KERNEL_TABLE + "tolerance = 1e-15\n")
    assert main(["run", str(path), "--out", str(tmp_path), "--quiet"]) == 1


def test_run_error_exits_one(tmp_path):
    path = tmp_path / "outside.toml"
    path.write_text('experiment = "kernel_table"\nanchors = [[2.0, 0.0]]\n')
    assert main(["run", str(path), "--out", str(tmp_path), "--quiet"]) == 1
    assert (tmp_path / "kernel_table.manifest.json").exists()


def test_invalid_config_exits_two(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text('experiment = "kernel_table"\n[numeric]\nM = 0\n')
    assert main(["run", str(path), "--out", str(tmp_path)]) == 2
    assert not list(tmp_path.glob("*.csv"))


def test_missing_config_exits_two(tmp_path):
    assert main(["run", str(tmp_path / "missing.toml")]) == 2


@pytest.mark.parametrize("count", ["0", "-3"])
def test_seed_grid_must_be_positive(config_path, tmp_path, count):
    assert main(["run", str(config_path), "--out", str(tmp_path), "--seed-grid", count]) == 2


def test_seed_grid_is_forwarded(config_path, tmp_path, mocker):
    execute = mocker.patch("wbk.cli.execute")
    execute.return_value.passed = True
    assert main(["run", str(config_path), "--out", str(tmp_path), "--seed-grid", "7", "--quiet"]) == 0
    _, kwargs = execute.call_args
    assert kwargs == {"out_dir": str(tmp_path), "grid_count": 7}


def test_a_command_is_required():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])
