import math
from fractions import Fraction

import numpy as np
import pytest

from scripts.generator import (
    Generator,
    check_d_monotone,
    dminus_psi,
    dplus_psi,
    phi,
    phi_array,
    phi_prime,
    psi,
    psi_derivative,
    summary,
)
from scripts.measure_model import Atom, NormalizationError, WilliamsonMeasure
from scripts.spec_io import load_measure


@pytest.fixture(scope='module')
def two_atom():
    return Generator(load_measure('two_atom'))


def test_psi_closed_form(two_atom):
    assert psi(two_atom, 0) == 1
    assert psi(two_atom, Fraction(1, 4)) == Fraction(137, 16 * 98) - Fraction(38, 98) + 1
    assert psi(two_atom, Fraction(1, 2)) == Fraction(225, 392)
    assert psi(two_atom, 1) == Fraction(1, 2)
    assert psi(two_atom, 8) == 0
    assert psi(two_atom, 100) == 0
    with pytest.raises(ValueError):
        psi(two_atom, -1)


def test_psi_derivatives(two_atom):
    assert psi_derivative(two_atom, 1, 4) == Fraction(-4, 49)
    assert psi_derivative(two_atom, 0, Fraction(1, 2)) == Fraction(225, 392)
    with pytest.raises(ValueError):
        psi_derivative(two_atom, 2, 1)


def test_one_sided_top_derivative_jumps_at_kink(two_atom):
    assert dminus_psi(two_atom, Fraction(1, 4)) == Fraction(137, 49)
    assert dminus_psi(two_atom, Fraction(1, 2)) == Fraction(137, 49)
    assert dplus_psi(two_atom, Fraction(1, 2)) == Fraction(1, 49)
    assert dminus_psi(two_atom, 2) == dplus_psi(two_atom, 2) == Fraction(1, 49)
    assert dminus_psi(two_atom, 1, order=0) == psi_derivative(two_atom, 1, 1)


def test_phi_inverts_psi(two_atom):
    assert phi(two_atom, 1) == 0
    assert phi(two_atom, 0) == 8
    assert phi(two_atom, Fraction(225, 392)) == Fraction(1, 2)
    assert float(phi(two_atom, float(psi(two_atom, 0.3)))) == pytest.approx(0.3, abs=1e-10)
    y = np.array([0.0, 0.1, 0.5, 0.9, 1.0])
    expected = [float(phi(two_atom, v)) for v in y]
    assert phi_array(two_atom, y) == pytest.approx(expected, abs=1e-10)
    with pytest.raises(ValueError):
        phi(two_atom, 1.5)


def test_phi_prime(two_atom):
    y = float(psi(two_atom, 3.0))
    assert float(phi_prime(two_atom, y)) == pytest.approx(1 / float(psi_derivative(two_atom, 1, 3.0)), rel=1e-8)
    assert phi_prime(two_atom, 0) == -math.inf


def test_strict_generator():
    gen = Generator(load_measure('uniform'))
    assert gen.strict
    assert gen.phi0 == math.inf
    assert phi(gen, 0) == math.inf
    # psi(z) = 1 - z/2 on [0, 1] and 1 / (2z) beyond
    assert float(psi(gen, 0.5)) == pytest.approx(0.75)
    assert float(psi(gen, 4.0)) == pytest.approx(0.125)
    assert float(phi(gen, 0.125)) == pytest.approx(4.0, rel=1e-10)
    assert summary(gen)['phi0'] == 'inf'


def test_unnormalized_measure_is_rejected():
    with pytest.raises(NormalizationError):
        Generator(WilliamsonMeasure(2, (Atom(1, 1),)))


def test_d_monotone_check(two_atom):
    grid = np.linspace(0.01, 4.0, 400)
    assert check_d_monotone(two_atom, grid).passed
    report = check_d_monotone(two_atom, grid, dim=4)
    assert not report.passed
    assert report.order == 2
    with pytest.raises(ValueError):
        check_d_monotone(two_atom, [1.0, 0.5])


def test_summary(two_atom):
    info = summary(two_atom)
    assert info['d'] == 3
    assert not info['strict']
    assert info['phi0'] == 8.0
    assert info['support'] == [0.125, 2.0]
    assert info['normalization_defect'] == 0.0


@pytest.mark.parametrize('name', ['two_atom', 'uniform', 'gapped_mixture'])
def test_psi_of_phi_is_the_identity(name):
    gen = Generator(load_measure(name))
    ys = np.random.default_rng(11).uniform(1e-6, 1.0, 256)
    assert [float(psi(gen, phi(gen, float(y)))) for y in ys] == pytest.approx(list(ys), abs=1e-9)


def test_one_sided_derivatives_match_difference_quotients(two_atom):
    h = Fraction(1, 10 ** 6)
    for z in (Fraction(1, 10), Fraction(1, 2), Fraction(1), Fraction(3)):
        left = (psi_derivative(two_atom, 1, z) - psi_derivative(two_atom, 1, z - h)) / h
        right = (psi_derivative(two_atom, 1, z + h) - psi_derivative(two_atom, 1, z)) / h
        assert float(dminus_psi(two_atom, z)) == pytest.approx(float(left), abs=1e-9)
        assert float(dplus_psi(two_atom, z)) == pytest.approx(float(right), abs=1e-9)
    gapped = Generator(load_measure('gapped_mixture'))
    left = (psi(gapped, 4) - psi(gapped, 4 - h)) / h
    right = (psi(gapped, 4 + h) - psi(gapped, 4)) / h
    assert float(dminus_psi(gapped, 4)) == pytest.approx(float(left), abs=1e-9)
    assert float(dplus_psi(gapped, 4)) == pytest.approx(float(right), abs=1e-9)
    assert dminus_psi(gapped, 4) != dplus_psi(gapped, 4)


def test_point_mass_at_one_half_is_only_two_monotone():
    gen = Generator(load_measure('lower_frechet'))
    grid = np.linspace(0.05, 4.0, 80)
    assert check_d_monotone(gen, grid).passed
    assert not check_d_monotone(gen, grid, dim=3).passed
    report = check_d_monotone(gen, grid, dim=4)
    assert not report.passed
    assert report.z == pytest.approx(2.0, abs=0.1)
