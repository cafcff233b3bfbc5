import numpy as np
import pytest

from wbk.sampling import extremality_suite, random_coefficients, sample_nodes, sample_random, sample_strided
from wbk.settings import get_settings, settings_context
from wbk.types.main import SpotCheckMethod

settings = get_settings()


@pytest.fixture
def nodes() -> np.ndarray:
    return np.linspace(0, 1, 1000) + 1j * np.linspace(-1, 0, 1000)


def test_few_nodes_are_not_sampled(nodes):
    """
    Test that node sets no larger than SPOT_CHECK_SAMPLES are returned whole.
    """
    assert len(sample_nodes(nodes[:100])) == 100


def test_all_method_keeps_every_node(nodes):
    assert len(sample_nodes(nodes, method=SpotCheckMethod.all)) == 1000


def test_random_sample_is_seeded_and_ordered(nodes):
    """
    Test that random sampling returns SPOT_CHECK_SAMPLES distinct nodes,
    in their original order, and the same ones every time.
    """
    first = sample_nodes(nodes)
    assert len(first) == settings.SPOT_CHECK_SAMPLES
    assert len(np.unique(first)) == len(first)
    assert np.all(np.diff(first.real) > 0)
    np.testing.assert_array_equal(first, sample_random(nodes, settings.SPOT_CHECK_SAMPLES))


def test_strided_sample(nodes):
    with settings_context(spot_check_method="strided", spot_check_samples=10):
        sampled = sample_nodes(nodes)
    np.testing.assert_array_equal(sampled, nodes[::100])
    np.testing.assert_array_equal(sample_strided(nodes, 10), sampled)


def test_random_coefficients():
    draws = random_coefficients(9, 5, seed=3)
    assert len(draws) == 5
    assert all(draw.shape == (9,) and np.iscomplexobj(draw) for draw in draws)
    np.testing.assert_array_equal(draws[2], random_coefficients(9, 5, seed=3)[2])


def test_extremality_suite():
    kernel = np.array([1.0, 0.5j, -0.25])
    suite = extremality_suite(kernel, 20)
    assert len(suite) == 20
    np.testing.assert_array_equal(suite[0], kernel)
    # even entries are multiples of the kernel with factor in [0, 2]
    for f in suite[2::2]:
        factor = f[0] / kernel[0]
        assert 0 <= factor.real <= 2
        np.testing.assert_allclose(f, factor * kernel)
    # odd entries move away from the kernel by exactly its norm
    for f in suite[1::2]:
        assert np.linalg.norm(f - kernel) == pytest.approx(np.linalg.norm(kernel))
