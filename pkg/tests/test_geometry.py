import numpy as np
import pytest
from pydantic import ValidationError

from wbk.geometry import (
    AREA_FLOOR,
    annulus,
    as_point,
    boundary_distance,
    build_quadrature,
    compact_sample_grid,
    contains,
    disc,
    distance_to,
    indicator,
    named_shape,
)
from wbk.types.errors import EmptyDomain


class TestPoints:
    def test_pair_is_coerced(self):
        assert as_point((0.3, -0.4)) == 0.3 - 0.4j

    def test_real_is_coerced(self):
        assert as_point(2) == 2 + 0j

    @pytest.mark.parametrize("value", [complex(np.inf, 0), (np.nan, 0.0), (1.0, 2.0, 3.0)])
    def test_invalid_points_raise(self, value):
        with pytest.raises(ValueError):
            as_point(value)


class TestDomains:
    def test_disc_needs_positive_radius(self):
        with pytest.raises(ValidationError):
            disc(0j, 0.0)

    def test_annulus_needs_ordered_radii(self):
        with pytest.raises(ValidationError):
            annulus(0j, 1.0, 0.5)

    def test_indicator_needs_a_box_with_area(self):
        with pytest.raises(ValidationError):
            indicator(lambda z: np.abs(z) < 1, (0.0, 0.0, -1.0, 1.0))

    def test_unknown_shape_raises(self):
        with pytest.raises(ValueError):
            named_shape("hexagon")

    @pytest.mark.parametrize(
        "domain, point, expected",
        [
            (disc(0j, 1.0), 0j, True),
            (disc(0j, 1.0), 1 + 0j, False),
            (annulus(0j, 0.5, 1.0), 0.25, False),
            (annulus(0j, 0.5, 1.0), 0.75j, True),
            (named_shape("square", half_width=1.0), 0.9 + 0.9j, True),
            (named_shape("ellipse", a=1.0, b=0.5), 0.6j, False),
            (named_shape("stadium", half_length=0.5, radius=0.5), 0.9 + 0.1j, True),
        ],
    )
    def test_contains(self, domain, point, expected):
        assert contains(domain, point) is expected

    def test_domains_are_hashable(self):
        assert disc(0j, 1.0) == disc(0j, 1.0)
        assert len({disc(0j, 1.0), disc(0j, 2.0)}) == 2


class TestQuadrature:
    def test_unit_disc_area(self, unit_disc):
        rule = build_quadrature(unit_disc, 64, 2)
        assert abs(rule.area - np.pi) <= 1e-3

    def test_small_disc_area(self):
        rule = build_quadrature(disc(0j, 0.5), 64, 2)
        assert abs(rule.area - np.pi / 4) <= 1e-3

    def test_annulus_area(self, sample_annulus):
        rule = build_quadrature(sample_annulus, 64, 2)
        assert rule.area == pytest.approx(np.pi * (1.0 - 0.04), rel=1e-10)

    def test_square_area(self):
        rule = build_quadrature(named_shape("square", half_width=1.0), 32, 2)
        assert rule.area == pytest.approx(4.0, rel=1e-12)

    def test_ellipse_area(self):
        rule = build_quadrature(named_shape("ellipse", a=1.0, b=0.5), 128, 2)
        assert rule.area == pytest.approx(np.pi / 2, abs=2e-2)
        assert rule.estimated_area_error > 0

    def test_empty_indicator_raises(self):
        empty = indicator(lambda z: np.zeros(z.shape, dtype=bool), (-1.0, 1.0, -1.0, 1.0))
        with pytest.raises(EmptyDomain):
            build_quadrature(empty, 16, 2)

    def test_nodes_are_strictly_inside(self, sample_annulus):
        rule = build_quadrature(sample_annulus, 32, 3)
        assert sample_annulus.contains(rule.nodes).all()
        assert (rule.weights > 0).all()

    def test_resolution_below_four_raises(self, unit_disc):
        with pytest.raises(ValueError):
            build_quadrature(unit_disc, 2, 2)

    @pytest.mark.parametrize("j, k", [(1, 0), (3, 1), (5, 2), (7, 6)])
    @pytest.mark.parametrize("radius", [0.5, 1.0, 2.0])
    def test_off_diagonal_moments_vanish(self, j, k, radius):
        rule = build_quadrature(disc(0j, radius), 64, 2)
        z = rule.nodes
        moment = rule.integrate(z**j * np.conj(z) ** k)
        assert abs(moment) <= 1e-8 * radius ** (j + k + 2)

    def test_midpoint_rule(self, unit_disc):
        rule = build_quadrature(unit_disc, 64, 1)
        assert rule.order == 1
        assert rule.area == pytest.approx(np.pi, rel=1e-3)

    @pytest.mark.parametrize(
        "domain",
        [
            disc(0j, 1.0),
            annulus(0j, 0.2, 1.0),
            named_shape("square", half_width=1.0),
            named_shape("ellipse", a=1.0, b=0.5),
            named_shape("stadium", half_length=0.5, radius=0.5),
        ],
        ids=["disc", "annulus", "square", "ellipse", "stadium"],
    )
    def test_refinement_does_not_increase_area_error(self, domain):
        errors = [build_quadrature(domain, r, 2).estimated_area_error for r in (16, 32, 64)]
        assert errors[1] <= errors[0]
        assert errors[2] <= errors[1]

    def test_closed_form_area_error_is_the_floor(self, sample_annulus):
        errors = {build_quadrature(sample_annulus, r, 2).estimated_area_error for r in (16, 32, 64)}
        assert errors == {AREA_FLOOR * sample_annulus.area}

    def test_clipped_area_error_bounds_the_refined_gap(self):
        ellipse = named_shape("ellipse", a=1.0, b=0.5)
        coarse, fine = build_quadrature(ellipse, 32, 2), build_quadrature(ellipse, 64, 2)
        assert coarse.estimated_area_error >= abs(coarse.area - fine.area)

    @pytest.mark.parametrize(
        "domain",
        [annulus(0j, 0.2, 1.0), named_shape("ellipse", a=1.0, b=0.5)],
        ids=["annulus", "ellipse"],
    )
    def test_same_inputs_give_identical_rules(self, domain):
        first, second = build_quadrature(domain, 32, 2), build_quadrature(domain, 32, 2)
        np.testing.assert_array_equal(first.nodes, second.nodes)
        np.testing.assert_array_equal(first.weights, second.weights)
        assert first.estimated_area_error == second.estimated_area_error


class TestSampleGrid:
    def test_disc_grid(self, unit_disc):
        grid = compact_sample_grid(unit_disc, 0.5, 5)
        assert len(grid) == 5
        assert all(abs(p) <= 0.5 for p in grid)

    def test_margin_beyond_radius_raises(self, unit_disc):
        with pytest.raises(EmptyDomain):
            compact_sample_grid(unit_disc, 1.5, 5)

    def test_annulus_grid(self, sample_annulus):
        grid = compact_sample_grid(sample_annulus, 0.1, 8)
        assert len(grid) == 8
        assert all(0.3 <= abs(p) <= 0.9 for p in grid)

    def test_grid_is_deterministic(self, unit_disc):
        assert compact_sample_grid(unit_disc, 0.2, 16) == compact_sample_grid(unit_disc, 0.2, 16)

    def test_indicator_grid_keeps_margin(self):
        square = named_shape("square", half_width=1.0)
        grid = compact_sample_grid(square, 0.25, 9)
        assert len(grid) == 9
        assert all(max(abs(p.real), abs(p.imag)) <= 0.75 + 1e-2 for p in grid)

    def test_non_positive_margin_raises(self, unit_disc):
        with pytest.raises(ValueError):
            compact_sample_grid(unit_disc, 0.0, 5)


class TestDistances:
    def test_disc_boundary_distance(self, unit_disc):
        np.testing.assert_allclose(boundary_distance(unit_disc, [0j, 0.5, 2.0]), [1.0, 0.5, 0.0])

    def test_annulus_boundary_distance(self, sample_annulus):
        np.testing.assert_allclose(boundary_distance(sample_annulus, [0.5, 0.9j]), [0.3, 0.1])

    def test_distance_to_closure(self, unit_disc):
        np.testing.assert_allclose(distance_to(unit_disc, [0.5, 2.0, -3j]), [0.0, 1.0, 2.0])

    def test_indicator_distances(self):
        square = named_shape("square", half_width=1.0)
        assert boundary_distance(square, [0j])[0] == pytest.approx(1.0, abs=1e-2)
        assert distance_to(square, [3.0])[0] == pytest.approx(2.0, abs=1e-2)
