import numpy as np
import pytest

from wbk.geometry import annulus, build_quadrature, disc
from wbk.kernels.model import build_kernel_model
from wbk.settings import get_settings
from wbk.weights import constant, moebius_power, radial_power

settings = get_settings()


def pytest_collection_modifyitems(config, items):
    keywordexpr = config.option.keyword
    markexpr = config.option.markexpr
    if keywordexpr or markexpr:
        return

    skip_benchmarks = pytest.mark.skip(
        reason="benchmark marker not selected, use `-m benchmark` to include this test"
    )
    for item in items:
        if "benchmark" in item.keywords:
            item.add_marker(skip_benchmarks)


@pytest.fixture
def unit_disc():
    return disc(0j, 1.0)


@pytest.fixture
def sample_annulus():
    return annulus(0j, 0.2, 1.0)


@pytest.fixture
def unit_weight():
    return constant(1.0)


@pytest.fixture
def disc_rule(unit_disc):
    return build_quadrature(unit_disc, 64, 2)


@pytest.fixture
def unweighted_model(unit_disc, unit_weight, disc_rule):
    return build_kernel_model(unit_disc, unit_weight, 8, rule=disc_rule)


@pytest.fixture
def radial_model(unit_disc, disc_rule):
    return build_kernel_model(unit_disc, radial_power(1.0), 8, rule=disc_rule)


@pytest.fixture
def moebius_model(unit_disc, disc_rule):
    return build_kernel_model(unit_disc, moebius_power(1.0), 8, rule=disc_rule)


@pytest.fixture
def sample_grid():
    return [0j, 0.3 + 0.1j, -0.2 + 0.4j, 0.5j, -0.45 - 0.2j]


@pytest.fixture
def rng():
    return np.random.default_rng(settings.RANDOM_STATE)


@pytest.fixture
def minimal_config_text() -> str:
    return 'experiment = "kernel_table"\n'
