import math
from fractions import Fraction

import pytest

from scripts.copula_core import ArchCopula, cdf, marginal
from scripts.derivative_lab import (
    certify,
    dense_pathology_measure,
    fd_probe,
    mixed_partial_dm2,
    nondiff_points,
    one_sided_dm1,
)
from scripts.generator import Generator, phi_prime
from scripts.measure_model import pure_kind, truncated_power_integral
from scripts.spec_io import load_measure

X = (0.7, 0.7)


def copula(name: str) -> ArchCopula:
    return ArchCopula(Generator(load_measure(name)))


@pytest.fixture(scope='module')
def two_atom():
    return copula('two_atom')


@pytest.fixture(scope='module')
def entries(two_atom):
    return nondiff_points(two_atom, X)


def slopes(cop, x):
    return math.prod(float(phi_prime(cop.gen, v)) for v in x)


def test_mixed_partial_in_two_dimensions_is_the_copula():
    cop = copula('lower_frechet')
    assert mixed_partial_dm2(cop, (0.7,), 0.6) == pytest.approx(float(cdf(cop, (0.7, 0.6))), abs=1e-12)


def test_nondiff_points_of_two_atom(two_atom, entries):
    assert [e.t for e in entries] == [0, Fraction(225, 392)]
    assert [e.q for e in entries] == [Fraction(1, 8), 2]
    assert all(0 < e.y < 1 for e in entries)
    assert entries[0].y < entries[1].y
    scale = slopes(two_atom, X)
    assert entries[0].gap == pytest.approx(scale / 49, rel=1e-12)
    assert entries[1].gap == pytest.approx(scale * 136 / 49, rel=1e-12)


def test_one_sided_derivatives_at_the_zero_level(two_atom, entries):
    y = entries[0].y
    assert one_sided_dm1(two_atom, X, y, 'right') == pytest.approx(slopes(two_atom, X) / 49, rel=1e-9)
    assert one_sided_dm1(two_atom, X, y, 'left') == 0


def test_one_sided_gap_matches_the_atom(two_atom, entries):
    entry = entries[1]
    right = one_sided_dm1(two_atom, X, entry.y, 'right')
    left = one_sided_dm1(two_atom, X, entry.y, 'left')
    assert right - left == pytest.approx(entry.gap, rel=1e-9)
    assert right - left == pytest.approx(one_sided_dm1(two_atom, X, entry.y, 'right', axis=1)
                                         - one_sided_dm1(two_atom, X, entry.y, 'left', axis=1), rel=1e-12)


def test_smooth_points_have_equal_one_sided_derivatives(two_atom):
    left = one_sided_dm1(two_atom, X, 0.95, 'left')
    right = one_sided_dm1(two_atom, X, 0.95, 'right')
    assert left == pytest.approx(right, rel=1e-12)
    probe = fd_probe(two_atom, X, 0.95, 'right')
    assert probe.estimate == pytest.approx(right, rel=1e-3)
    assert len(probe.quotients) == 4


def test_no_atoms_no_nondiff_points():
    assert nondiff_points(copula('uniform'), (0.4,)) == []


def test_certificates(two_atom, entries):
    for entry in entries:
        for axis in (0, 1):
            certificate = certify(two_atom, X, entry, axis=axis)
            assert certificate.verdict
            assert certificate.gap == pytest.approx(entry.gap, rel=1e-9)
    row = certify(two_atom, X, entries[1]).as_row()
    assert row['verdict'] is True
    assert row['t'] == pytest.approx(225 / 392)


def test_invalid_arguments(two_atom):
    with pytest.raises(ValueError):
        fd_probe(two_atom, X, 0.5, 'right', steps=(1e-3, 1e-4, 1e-5))
    with pytest.raises(ValueError):
        fd_probe(two_atom, X, 0.5, 'right', steps=(1e-4, 1e-3, 1e-5, 1e-6))
    with pytest.raises(ValueError):
        fd_probe(two_atom, X, 0.5, 'right', steps=(0.1, 1e-3, 1e-4, 1e-5))
    with pytest.raises(ValueError):
        fd_probe(two_atom, X, 0.5, 'up')
    with pytest.raises(ValueError):
        one_sided_dm1(two_atom, X, 0.5, 'right', axis=2)
    with pytest.raises(ValueError):
        one_sided_dm1(marginal(two_atom, 2), (0.5,), 0.5, 'right')
    with pytest.raises(ValueError):
        nondiff_points(two_atom, (1, 0.5))


def test_dense_pathology_measure():
    single = dense_pathology_measure(3, 1)
    assert len(single.atoms) == 1
    assert float(truncated_power_integral(single, 2, 0, 1)) == pytest.approx(0.5, abs=1e-12)
    assert len(nondiff_points(ArchCopula(Generator(single)), X)) == 1

    pair = dense_pathology_measure(3, 2, points=[Fraction(1, 8), 2])
    assert [float(a.mass) for a in pair.atoms] == pytest.approx([2 / 3, 1 / 3])
    assert float(pair.atoms[1].location / pair.atoms[0].location) == pytest.approx(16.0)

    dense = dense_pathology_measure(2, 16)
    assert pure_kind(dense) == 'dis'
    assert len(dense.atoms) == 16
    entries = nondiff_points(ArchCopula(Generator(dense)), (0.6,))
    assert entries
    ys = [e.y for e in entries]
    assert ys == sorted(ys)
    assert all(e.gap > 0 for e in entries)
    with pytest.raises(ValueError):
        dense_pathology_measure(2, 0)
