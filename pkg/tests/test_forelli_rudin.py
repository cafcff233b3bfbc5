import numpy as np
import pytest

from wbk.forelli_rudin import (
    build_hartogs,
    fiber_factor,
    forelli_rudin_identity,
    hartogs_kernel_at_zero_fiber,
)
from wbk.geometry import annulus, build_quadrature, disc
from wbk.kernels.gram import assemble_gram
from wbk.oracles import disc_radial_power, oracle_eval
from wbk.settings import settings_context
from wbk.types.errors import DomainMismatch
from wbk.weights import constant, expression, radial_power


def test_fiber_factor():
    assert fiber_factor(0.25, 1) == pytest.approx(np.pi * 0.0625 / 2, rel=1e-15)
    np.testing.assert_allclose(fiber_factor(np.array([1.0, 4.0]), 0), [np.pi, 4 * np.pi])


class TestHartogs:
    @pytest.fixture
    def unweighted(self, unit_disc, disc_rule):
        return build_hartogs(unit_disc, constant(1.0), 8, 3, rule=disc_rule)

    def test_blocks_scale_the_base_gram(self, unweighted, unit_disc, disc_rule):
        base = assemble_gram(unit_disc, constant(1.0), disc_rule, basis=unweighted.basis).gram
        assert len(unweighted.block_grams) == 4
        for m, gram in enumerate(unweighted.block_grams):
            np.testing.assert_allclose(gram, np.pi / (m + 1) * base, rtol=1e-12, atol=1e-12)

    def test_zero_fiber_kernel_at_the_center(self, unweighted):
        assert hartogs_kernel_at_zero_fiber(unweighted, 0j, 0j) == pytest.approx(1 / np.pi**2, rel=1e-10)

    def test_identity_holds_on_the_unweighted_disc(self, unweighted, sample_grid):
        check = forelli_rudin_identity(unweighted, sample_grid)
        assert check.passed, check.describe()
        assert check.name == "pi K_Omega at zero fiber equals K_D,mu"

    def test_radial_weight_against_the_closed_form(self, unit_disc):
        rule = build_quadrature(unit_disc, 128, 2)
        h = build_hartogs(unit_disc, radial_power(1.0), 16, 1, rule=rule)
        value = np.pi * hartogs_kernel_at_zero_fiber(h, 0.4, 0.2)
        expected = oracle_eval(disc_radial_power(1.0, 1.0), 0.4, 0.2)
        assert value == pytest.approx(expected, rel=1e-3)
        assert forelli_rudin_identity(h, [0j, 0.4, 0.2, -0.3j]).passed

    def test_threads_give_the_same_blocks(self, unweighted, unit_disc, disc_rule):
        with settings_context(num_threads=2):
            threaded = build_hartogs(unit_disc, constant(1.0), 8, 3, rule=disc_rule)
        for a, b in zip(unweighted.block_grams, threaded.block_grams):
            np.testing.assert_array_equal(a, b)

    def test_points_outside_the_base_raise(self, unweighted):
        with pytest.raises(DomainMismatch):
            hartogs_kernel_at_zero_fiber(unweighted, 1.5, 0j)


class TestHartogsValidation:
    def test_annulus_is_rejected(self):
        with pytest.raises(ValueError):
            build_hartogs(annulus(0j, 0.2, 1.0), constant(1.0), 4)

    @pytest.mark.parametrize("weight", [radial_power(1.0, center=0.3), expression("exp_real_part")])
    def test_weights_that_are_not_centered_radial_are_rejected(self, unit_disc, weight):
        with pytest.raises(ValueError):
            build_hartogs(unit_disc, weight, 4)

    def test_negative_fiber_degree_is_rejected(self, unit_disc):
        with pytest.raises(ValueError):
            build_hartogs(unit_disc, constant(1.0), 4, -1)

    def test_rule_from_another_domain(self, unit_disc):
        rule = build_quadrature(disc(0j, 0.5), 16, 1)
        with pytest.raises(DomainMismatch):
            build_hartogs(unit_disc, constant(1.0), 4, rule=rule)
