import numpy as np
import pytest

from wbk.geometry import build_quadrature, compact_sample_grid
from wbk.kernels.checks import (
    diagonal_sweep,
    evaluation_bound_check,
    hermitian_sweep,
    in_span_residuals,
    lemma9_extremality,
    minimal_element_sweep,
    reproducing_residual,
    schwarz_check,
    schwarz_sweep,
    toeplitz_cross_check,
    transition_amplitude,
)
from wbk.kernels.model import build_kernel_model
from wbk.sampling import extremality_suite, random_coefficients
from wbk.weights import constant, expression, moebius_power, radial_power


class TestReproducing:
    def test_constant_function(self, unweighted_model):
        one = unweighted_model.basis.raw_monomial(0)
        assert reproducing_residual(unweighted_model, one, 0.3) <= 1e-8

    def test_in_span_monomial(self, unweighted_model):
        z_squared = unweighted_model.basis.raw_monomial(2)
        assert reproducing_residual(unweighted_model, z_squared, 0.5) <= 1e-8

    def test_out_of_span_monomial_is_reported(self, unweighted_model):
        residual = reproducing_residual(unweighted_model, lambda z: z**13, 0.5)
        assert residual > 0
        assert residual == pytest.approx(0.5**13, rel=1e-3)

    def test_every_raw_monomial_at_every_anchor(self, radial_model):
        residuals = in_span_residuals(radial_model, [0j, 0.4, -0.3j])
        assert len(residuals) == 3 * 9
        assert max(residuals) <= 1e-8


class TestSchwarz:
    def test_equal_points(self, unweighted_model):
        assert schwarz_check(unweighted_model, 0.4j, 0.4j)

    def test_opposite_points(self, unweighted_model):
        assert schwarz_check(unweighted_model, 0.5, -0.5)

    def test_sweep_over_grid(self, moebius_model, unit_disc):
        grid = compact_sample_grid(unit_disc, 0.2, 16)
        check = schwarz_sweep(moebius_model, grid)
        assert check.passed, check.describe()
        assert check.value <= 1e-10


class TestExtremality:
    t = 0.2 + 0.1j

    def test_kernel_is_extremal(self, radial_model):
        verdict = lemma9_extremality(radial_model, radial_model.coefficients(self.t), self.t)
        assert (verdict.in_S, verdict.dominates, verdict.equals_kernel) == (True, True, True)

    def test_zero_is_in_s_without_dominating(self, radial_model):
        verdict = lemma9_extremality(radial_model, np.zeros(9, dtype=complex), self.t)
        assert verdict.in_S
        assert not verdict.dominates

    def test_twice_the_kernel_is_not_in_s(self, radial_model):
        verdict = lemma9_extremality(radial_model, 2 * radial_model.coefficients(self.t), self.t)
        assert not verdict.in_S

    def test_suite_is_consistent(self, unweighted_model):
        kernel = unweighted_model.coefficients(self.t)
        verdicts = [lemma9_extremality(unweighted_model, f, self.t) for f in extremality_suite(kernel, 100)]
        assert all(verdict.consistent for verdict in verdicts)
        assert sum(verdict.in_S for verdict in verdicts) > 1


class TestToeplitz:
    def test_unweighted_is_identity(self, unit_disc, disc_rule):
        assert toeplitz_cross_check(unit_disc, constant(1.0), disc_rule, 8, 0.2) <= 1e-10

    def test_moebius_weight(self, unit_disc, disc_rule):
        assert toeplitz_cross_check(unit_disc, moebius_power(1.0), disc_rule, 8, 0j) <= 1e-6

    def test_radial_weight(self, unit_disc, disc_rule):
        assert toeplitz_cross_check(unit_disc, radial_power(1.0), disc_rule, 8, 0.3) <= 1e-6

    def test_unbounded_weight_raises(self, unit_disc, disc_rule):
        with pytest.raises(ValueError):
            toeplitz_cross_check(unit_disc, expression("inverse_quartic"), disc_rule, 8, 0.3)


class TestTransitionAmplitude:
    def test_same_point(self, radial_model):
        assert transition_amplitude(radial_model, 0.3, 0.3) == pytest.approx(1.0, abs=1e-12)

    def test_unit_disc_closed_form(self, unit_disc):
        km = build_kernel_model(unit_disc, constant(1.0), 16, rule=build_quadrature(unit_disc, 64, 2))
        # |K(0, w)| / sqrt(K(0, 0) K(w, w)) = 1 - |w|^2
        assert transition_amplitude(km, 0j, 0.5) == pytest.approx(0.75, rel=1e-6)

    def test_never_exceeds_one(self, moebius_model, sample_grid):
        for z in sample_grid:
            for w in sample_grid:
                assert 0 <= transition_amplitude(moebius_model, z, w) <= 1


class TestEvaluationBound:
    def test_random_in_span_functions(self, moebius_model, sample_grid):
        for f in random_coefficients(9, 20):
            for t in sample_grid:
                assert evaluation_bound_check(moebius_model, f, t)

    def test_kernel_attains_the_bound(self, unweighted_model):
        t = 0.25j
        kernel = unweighted_model.coefficients(t)
        assert evaluation_bound_check(unweighted_model, kernel, t)
        assert not evaluation_bound_check(unweighted_model, kernel, t, slack=-1e-6)


class TestSweeps:
    def test_hermitian(self, radial_model, sample_grid):
        check = hermitian_sweep(radial_model, sample_grid)
        assert check.passed
        assert check.name == "hermitian symmetry"

    def test_diagonal_positivity(self, moebius_model, sample_grid):
        check = diagonal_sweep(moebius_model, sample_grid)
        assert check.passed
        assert check.value > 0

    def test_minimal_element(self, radial_model, sample_grid):
        check = minimal_element_sweep(radial_model, [0.1, -0.2j], sample_grid)
        assert check.passed, check.describe()
