from fractions import Fraction

import numpy as np
import pytest

from scripts.copula_core import ArchCopula, kernel_cdf, marginal
from scripts.decomposition import (
    DegenerateConditioningError,
    _kernel_totals,
    component_masses,
    kernel_atoms,
    kernel_split,
    support_report,
)
from scripts.generator import Generator, phi, psi
from scripts.measure_model import full_support_measure
from scripts.spec_io import load_measure


def copula(name: str) -> ArchCopula:
    return ArchCopula(Generator(load_measure(name)))


@pytest.fixture(scope='module')
def two_atom():
    return copula('two_atom')


def test_discrete_measure_gives_a_purely_discrete_kernel(two_atom):
    split = kernel_split(two_atom, (0.9, 0.9))
    totals = split.totals
    assert float(totals.dis) == pytest.approx(1.0, abs=1e-12)
    assert float(totals.abs) == 0
    assert float(totals.sing) == 0
    mid = split(0.5)
    assert float(sum(mid)) == pytest.approx(float(kernel_cdf(two_atom, (0.9, 0.9), 0.5)), abs=1e-12)


def test_kernel_atoms_of_two_atom(two_atom):
    x = (0.9, 0.9)
    s = float(phi(two_atom.gen, 0.9)) * 2
    atoms = kernel_atoms(two_atom, x)
    assert len(atoms) == 2
    ys = [float(y) for y, _ in atoms]
    assert ys == pytest.approx([float(psi(two_atom.gen, 8 - s)), float(psi(two_atom.gen, 0.5 - s))], abs=1e-12)
    assert sum(float(m) for _, m in atoms) == pytest.approx(1.0, abs=1e-12)
    weights = np.array([32 / 49 / 64, 17 / 49 * 4])
    assert [float(m) for _, m in atoms] == pytest.approx(list(weights / weights.sum()), abs=1e-12)


def test_lower_frechet_kernel_is_one_atom():
    cop = copula('lower_frechet')
    [(y, mass)] = kernel_atoms(cop, (0.3,))
    assert float(y) == pytest.approx(0.7, abs=1e-12)
    assert float(mass) == pytest.approx(1.0, abs=1e-12)


def test_mixed_measure_splits_into_both_parts():
    cop = copula('atoms_and_density')
    totals = kernel_split(cop, (0.7,)).totals
    assert float(totals.abs) > 0
    assert float(totals.dis) > 0
    assert float(totals.abs + totals.dis + totals.sing) == pytest.approx(1.0, abs=1e-12)


def test_marginal_kernels_are_absolutely_continuous(two_atom):
    pair = marginal(two_atom, 2)
    split = kernel_split(pair, (0.5,))
    assert split.hdis(0.4) == 0
    assert split.habs(0.4) == kernel_cdf(pair, (0.5,), 0.4)
    assert kernel_atoms(pair, (0.5,)) == []


def test_degenerate_conditioning_points(two_atom):
    with pytest.raises(DegenerateConditioningError):
        kernel_split(two_atom, (1, 1))
    with pytest.raises(DegenerateConditioningError):
        kernel_split(two_atom, (0.01, 0.01))
    with pytest.raises(ValueError):
        kernel_split(two_atom, (0.5,))


def test_kernel_totals_mark_excluded_points(two_atom):
    rows = _kernel_totals(two_atom, np.array([[0.9, 0.9], [0.01, 0.01], [1.0, 1.0]]))
    assert rows[0] == pytest.approx([0.0, 1.0, 0.0], abs=1e-12)
    assert np.isnan(rows[1]).all()
    assert np.isnan(rows[2]).all()


def test_component_masses_structural(two_atom):
    masses = component_masses(two_atom, 100, seed=1)
    assert (masses.abs, masses.dis, masses.sing) == (0, 1, 0)
    assert masses.method == 'structural'
    assert component_masses(copula('cantor'), 100, seed=1).sing == 1
    assert component_masses(marginal(two_atom, 2), 100, seed=1).abs == 1


def test_component_masses_by_monte_carlo():
    masses = component_masses(copula('atoms_and_density'), 4000, seed=7, workers=2)
    assert masses.method == 'mc'
    assert masses.abs + masses.dis + masses.sing == pytest.approx(1.0, abs=1e-9)
    assert masses.abs > 0 and masses.dis > 0
    assert masses.sing == 0
    assert masses.n <= 4000
    assert set(masses.as_dict()) == {'abs', 'dis', 'sing', 'stderr', 'method', 'n', 'resolution'}
    with pytest.raises(ValueError):
        component_masses(copula('atoms_and_density'), 0, seed=7)


def test_support_report_of_gapped_mixture():
    report = support_report(copula('gapped_mixture'))
    assert not report.full_support
    assert not report.hull_full_support
    assert report.top_level == Fraction(17, 24)
    assert report.graph_f0
    assert report.support_bands == ((Fraction(1, 2), Fraction(11, 18)), (Fraction(2, 3), Fraction(17, 24)))
    assert report.zero_bands == ((0, Fraction(1, 2)), (Fraction(11, 18), Fraction(2, 3)), (Fraction(17, 24), 1))


def test_support_report_of_lower_frechet():
    report = support_report(copula('lower_frechet'))
    assert report.graph_f0
    assert report.support_bands == ()
    assert report.zero_bands == ((0, 1),)


def test_support_report_of_strict_measures():
    uniform = support_report(copula('uniform'))
    assert uniform.hull_full_support and uniform.strict and not uniform.graph_f0
    assert not uniform.full_support
    assert float(uniform.top_level) == pytest.approx(0.5)
    assert [tuple(map(float, band)) for band in uniform.zero_bands] == [(0.5, 1.0)]
    assert uniform.as_dict()['top_level'] == pytest.approx(0.5)
    cantor = support_report(copula('cantor'))
    assert not cantor.full_support and not cantor.hull_full_support
    assert cantor.gaps
    with pytest.raises(ValueError):
        support_report(marginal(copula('two_atom'), 2))


def test_support_report_of_gapless_hull():
    report = support_report(ArchCopula(Generator(full_support_measure(2, 'abs'))))
    assert report.hull_full_support and report.strict
    assert report.gaps == ()
    [(top, one)] = report.zero_bands
    assert 0 < float(top) < 1 and one == 1
    assert not report.full_support


@pytest.mark.parametrize('name', ['atoms_and_density', 'gapped_mixture'])
def test_split_parts_add_up_to_the_kernel(name):
    cop = copula(name)
    rng = np.random.default_rng(17)
    for x, y in rng.uniform(0.01, 0.99, (512, 2)):
        parts = kernel_split(cop, (float(x),))(float(y))
        assert float(sum(parts)) == pytest.approx(float(kernel_cdf(cop, (float(x),), float(y))), abs=1e-10)
