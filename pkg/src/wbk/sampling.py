from typing import List

import numpy as np
import structlog

from wbk.settings import get_settings
from wbk.types.main import SpotCheckMethod

logger = structlog.get_logger(__name__)
settings = get_settings()


def sample_nodes(nodes: np.ndarray, num: int = None, method: SpotCheckMethod = None) -> np.ndarray:
    """
    Picks the quadrature nodes that hypothesis spot-checks are evaluated on,
    following `SPOT_CHECK_METHOD` unless `method` is given.
    """
    num = num or settings.SPOT_CHECK_SAMPLES
    method = method or settings.SPOT_CHECK_METHOD
    nodes = np.asarray(nodes)
    if len(nodes) <= num or method == SpotCheckMethod.all:
        return nodes
    if method == SpotCheckMethod.strided:
        return sample_strided(nodes, num)
    return sample_random(nodes, num)


def sample_strided(nodes: np.ndarray, num: int) -> np.ndarray:
    """
    Samples every k-th node so that `num` nodes are returned.

    Example: sampling 5 of 20 nodes:
    [X...X...X...X...X...]
    """
    stride = len(nodes) // num
    return nodes[::stride][:num]


def sample_random(nodes: np.ndarray, num: int) -> np.ndarray:
    """
    Samples a random selection of N nodes based on the RANDOM_STATE seed,
    keeping their original order.

    Example: sampling random 8 of 20 nodes:
    [XX...XX.X..X...X.XX.]
    """
    rng = np.random.default_rng(settings.RANDOM_STATE)
    picks = np.sort(rng.choice(len(nodes), size=num, replace=False))
    return nodes[picks]


def random_coefficients(size: int, count: int, seed: int = None) -> List[np.ndarray]:
    """
    Seeded complex Gaussian coefficient vectors, used to build random in-span
    test functions.
    """
    rng = np.random.default_rng(settings.RANDOM_STATE if seed is None else seed)
    draws = rng.standard_normal((count, size)) + 1j * rng.standard_normal((count, size))
    return [row for row in draws]


def extremality_suite(
    kernel_coefficients: np.ndarray, count: int = 100, seed: int = None
) -> List[np.ndarray]:
    """
    In-span functions around K(., t): exact multiples s K(., t) with s in [0, 2],
    and perturbations K(., t) + g with O(1) random g, which leave the
    extremal set by a clear margin.
    """
    rng = np.random.default_rng(settings.RANDOM_STATE if seed is None else seed)
    size = len(kernel_coefficients)
    scale = np.linalg.norm(kernel_coefficients)
    suite = []
    for index in range(count):
        if index % 2 == 0:
            suite.append(rng.uniform(0.0, 2.0) * kernel_coefficients)
        else:
            g = rng.standard_normal(size) + 1j * rng.standard_normal(size)
            suite.append(kernel_coefficients + scale * g / np.linalg.norm(g))
    suite[0] = kernel_coefficients.copy()
    return suite
