import numpy as np
import pytest

from wbk.geometry import build_quadrature, compact_sample_grid, disc
from wbk.kernels.gram import MonomialBasis
from wbk.kernels.model import build_kernel_model, kernel_eval, minimal_element
from wbk.settings import settings_context
from wbk.types.errors import DegenerateAnchor, DomainMismatch
from wbk.weights import constant, moebius_power, radial_power


class TestKernelEval:
    def test_center_of_unit_disc(self, unweighted_model):
        assert kernel_eval(unweighted_model, 0j, 0j) == pytest.approx(1 / np.pi, rel=1e-10)

    def test_only_constant_term_survives_at_center(self, unweighted_model):
        assert kernel_eval(unweighted_model, 0.5, 0j) == pytest.approx(1 / np.pi, rel=1e-10)

    def test_scaled_disc(self):
        km = build_kernel_model(disc(0j, 2.0), constant(1.0), 8, 64, 2)
        assert kernel_eval(km, 0j, 0j) == pytest.approx(1 / (4 * np.pi), rel=1e-10)

    def test_radial_weight_at_center(self, radial_model):
        assert kernel_eval(radial_model, 0j, 0j) == pytest.approx(2 / np.pi, rel=1e-8)

    def test_outside_points_raise(self, unweighted_model):
        with pytest.raises(DomainMismatch):
            kernel_eval(unweighted_model, 1.2, 0j)

    def test_section_is_hermitian(self, moebius_model, sample_grid):
        values = moebius_model.section(sample_grid, sample_grid)
        np.testing.assert_allclose(values, values.conj().T, rtol=1e-12, atol=1e-14)

    def test_diagonal_matches_section(self, radial_model, sample_grid):
        np.testing.assert_allclose(
            radial_model.diagonal(sample_grid),
            np.real(np.diag(radial_model.section(sample_grid, sample_grid))),
            rtol=1e-12,
        )

    def test_coefficient_shapes(self, unweighted_model):
        assert unweighted_model.coefficients(0.1j).shape == (9,)
        assert unweighted_model.coefficients(np.array([0.1j, 0.2])).shape == (9, 2)


class TestMinimalElement:
    @pytest.mark.parametrize(
        "radius, weight, expected",
        [
            (1.0, constant(1.0), np.pi),
            (2.0, constant(1.0), 4 * np.pi),
            (1.0, radial_power(1.0), np.pi / 2),
        ],
    )
    def test_constants_minimize_at_the_center(self, radius, weight, expected):
        km = build_kernel_model(disc(0j, radius), weight, 8, 64, 2)
        phi = minimal_element(km, 0j)
        assert phi.norm_sq == pytest.approx(expected, rel=1e-8)
        assert phi.value_at_anchor == pytest.approx(1.0, abs=1e-12)
        # phi is the constant function 1
        values = km.function_values(phi.coefficients, [0.3, -0.5j])
        np.testing.assert_allclose(values, [1.0, 1.0], atol=1e-10)

    def test_matches_normalized_kernel(self, moebius_model, sample_grid):
        t = 0.3 - 0.2j
        phi = minimal_element(moebius_model, t)
        diagonal = moebius_model.diagonal(t)[0]
        expected = moebius_model.section(sample_grid, t)[:, 0] / diagonal
        values = moebius_model.function_values(phi.coefficients, sample_grid)
        np.testing.assert_allclose(values, expected, rtol=1e-9)
        assert phi.norm_sq * diagonal == pytest.approx(1.0, rel=1e-9)

    def test_degenerate_anchor_raises(self, unweighted_model):
        with settings_context(diagonal_floor=10.0):
            with pytest.raises(DegenerateAnchor):
                minimal_element(unweighted_model, 0j)


class TestBasisInvariance:
    @pytest.mark.parametrize(
        "basis",
        [
            MonomialBasis(0.2 + 0.1j, 1.5, tuple(range(9))),
            MonomialBasis(-0.3j, 1.0, tuple(range(9))),
        ],
        ids=["shifted_and_scaled", "shifted"],
    )
    def test_same_span_same_kernel(self, basis, moebius_model, unit_disc, disc_rule, sample_grid):
        km = build_kernel_model(unit_disc, moebius_power(1.0), rule=disc_rule, basis=basis)
        expected = moebius_model.section(sample_grid, sample_grid)
        np.testing.assert_allclose(km.section(sample_grid, sample_grid), expected, rtol=1e-8, atol=1e-10)


class TestDegreeStability:
    @pytest.fixture
    def fine_rule(self, unit_disc):
        return build_quadrature(unit_disc, 128, 2)

    def test_doubling_the_degree_on_an_inner_grid(self, unit_disc, fine_rule):
        # |z t| <= 1/4 on this grid, so the series tail beyond degree 12 is below 1e-6 relative
        grid = compact_sample_grid(unit_disc, 0.5, 16)
        low = build_kernel_model(unit_disc, constant(1.0), 12, rule=fine_rule).section(grid, grid)
        high = build_kernel_model(unit_disc, constant(1.0), 24, rule=fine_rule).section(grid, grid)
        assert np.max(np.abs(high - low) / np.abs(high)) <= 1e-6

    def test_added_degrees_contribute_the_series_tail(self, unit_disc, fine_rule):
        grid = compact_sample_grid(unit_disc, 0.3, 16)
        low = build_kernel_model(unit_disc, constant(1.0), 10, rule=fine_rule).section(grid, grid)
        high = build_kernel_model(unit_disc, constant(1.0), 20, rule=fine_rule).section(grid, grid)
        z = np.asarray(grid)
        ratio = z[:, None] * np.conj(z)[None, :]
        tail = sum((k + 1) * ratio**k for k in range(11, 21)) / np.pi
        np.testing.assert_allclose(high - low, tail, rtol=0, atol=1e-7)
