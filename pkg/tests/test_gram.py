import numpy as np
import pytest
from scipy import linalg

from wbk.geometry import annulus, build_quadrature, disc
from wbk.kernels.gram import assemble_gram, assemble_product_gram, basis_for
from wbk.kernels.model import KernelModel
from wbk.settings import get_settings
from wbk.types.errors import DomainMismatch, SingularGram
from wbk.weights import constant, moebius_power, radial_power

settings = get_settings()


@pytest.mark.parametrize(
    "weight, degree_cut, expected",
    [
        (constant(1.0), 3, [np.pi, np.pi / 2, np.pi / 3, np.pi / 4]),
        (radial_power(1.0), 2, [np.pi / 2, np.pi / 3, np.pi / 4]),
        (moebius_power(1.0), 1, [np.pi / 2, np.pi / 6]),
    ],
)
def test_unit_disc_gram_is_diagonal(unit_disc, disc_rule, weight, degree_cut, expected):
    """
    Monomials are orthogonal on a centered disc for radial weights, with
    norms given by one-dimensional radial integrals.
    """
    system = assemble_gram(unit_disc, weight, disc_rule, degree_cut)
    np.testing.assert_allclose(np.real(np.diag(system.gram)), expected, rtol=1e-6)
    off_diagonal = system.gram - np.diag(np.diag(system.gram))
    assert np.abs(off_diagonal).max() <= 1e-12


def test_gram_is_hermitian(disc_rule, unit_disc):
    system = assemble_gram(unit_disc, radial_power(0.5), disc_rule, 6)
    np.testing.assert_array_equal(system.gram, system.gram.conj().T)


def test_scaled_basis_keeps_small_discs_well_conditioned():
    d = disc(0.3 + 0.2j, 0.05)
    system = assemble_gram(d, constant(1.0), build_quadrature(d, 64, 2), 12)
    assert system.relative_ridge == 0.0
    assert system.condition_estimate < 1e3


def test_annulus_uses_laurent_basis(sample_annulus):
    system = assemble_gram(sample_annulus, constant(1.0), build_quadrature(sample_annulus, 64, 2), 4)
    assert system.basis.is_laurent
    assert system.size == 9
    assert system.relative_ridge == 0.0


def test_ridge_escalates_when_factorization_fails(unit_disc, disc_rule, mocker):
    cholesky = linalg.cholesky
    attempts = []

    def fail_once(a, lower=False):
        attempts.append(a)
        if len(attempts) == 1:
            raise linalg.LinAlgError("not positive definite")
        return cholesky(a, lower=lower)

    mocker.patch("wbk.kernels.gram.linalg.cholesky", side_effect=fail_once)
    system = assemble_gram(unit_disc, constant(1.0), disc_rule, 2)
    assert len(attempts) == 2
    assert system.relative_ridge == settings.RIDGE_SCHEDULE[1]
    assert system.ridge == pytest.approx(system.relative_ridge * np.pi, rel=1e-6)


def test_singular_gram_raises_after_the_last_ridge(unit_disc, disc_rule, mocker):
    mocker.patch("wbk.kernels.gram.linalg.cholesky", side_effect=linalg.LinAlgError("singular"))
    with pytest.raises(SingularGram):
        assemble_gram(unit_disc, constant(1.0), disc_rule, 2)


def test_rule_from_another_domain_raises(disc_rule):
    with pytest.raises(DomainMismatch):
        assemble_gram(disc(0j, 2.0), constant(1.0), disc_rule, 2)


def test_norm_sq_of_a_monomial(unit_disc, disc_rule):
    system = assemble_gram(unit_disc, constant(1.0), disc_rule, 4)
    coefficients = np.zeros(system.size, dtype=complex)
    coefficients[2] = 1j
    assert system.norm_sq(coefficients) == pytest.approx(np.pi / 3, rel=1e-6)


class TestBasis:
    def test_raw_monomial_about_an_offset_center(self):
        basis = basis_for(disc(0.5, 1.0), 3)
        points = np.array([0.1, 0.2 - 0.3j, 1.1j])
        values = basis.evaluate(points) @ basis.raw_monomial(2)
        np.testing.assert_allclose(values, points**2, rtol=1e-12)

    def test_raw_monomial_out_of_span_raises(self):
        with pytest.raises(ValueError):
            basis_for(disc(0j, 1.0), 3).raw_monomial(4)

    def test_laurent_terms_are_scaled_by_the_inner_radius(self):
        basis = basis_for(annulus(0j, 0.25, 1.0), 2)
        assert basis.powers == (-2, -1, 0, 1, 2)
        np.testing.assert_allclose(basis.evaluate([0.5])[0], [0.25, 0.5, 1.0, 0.5, 0.25])

    def test_negative_degree_cut_raises(self):
        with pytest.raises(ValueError):
            basis_for(disc(0j, 1.0), -1)


def test_product_gram_factorizes():
    first_domain, second_domain = disc(0j, 1.0), disc(0j, 0.5)
    first = assemble_gram(first_domain, constant(1.0), build_quadrature(first_domain, 8, 2), 2)
    second = assemble_gram(second_domain, radial_power(1.0), build_quadrature(second_domain, 8, 2), 2)
    product = assemble_product_gram(first, second)
    np.testing.assert_allclose(product.gram, np.kron(first.gram, second.gram), rtol=1e-10, atol=1e-14)

    z, t = (0.2 + 0.1j, 0.1j), (-0.3, 0.2)
    expected = (
        KernelModel(system=first).section(z[0], t[0])[0, 0]
        * KernelModel(system=second).section(z[1], t[1])[0, 0]
    )
    assert product.kernel(z, t) == pytest.approx(expected, rel=1e-8)
