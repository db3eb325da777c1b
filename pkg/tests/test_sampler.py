import math

import numpy as np
import pytest
from scipy import stats

from scripts.copula_core import ArchCopula, box_mass_corners, cdf, kendall_cdf, marginal
from scripts.generator import Generator
from scripts.sampler import (
    CHUNK_SIZE,
    SampleBatch,
    chunk_rng,
    histogram,
    sample,
    sample_conditional,
    sample_radial,
)
from scripts.spec_io import load_measure

N = 20000


def copula(name: str) -> ArchCopula:
    return ArchCopula(Generator(load_measure(name)))


@pytest.fixture(scope='module')
def two_atom():
    return copula('two_atom')


@pytest.fixture(scope='module', params=['radial', 'conditional'])
def two_atom_batch(request, two_atom):
    return sample(two_atom, N, seed=11, method=request.param, workers=2)


def test_batch_shape_and_range(two_atom_batch):
    assert two_atom_batch.rows.shape == (N, 3)
    assert two_atom_batch.rows.min() >= 0.0
    assert two_atom_batch.rows.max() <= 1.0


def test_margins_are_uniform(two_atom_batch):
    for i in range(3):
        assert stats.kstest(two_atom_batch.rows[:, i], 'uniform').pvalue > 1e-3


def test_kendall_distribution_within_dkw_band(two_atom, two_atom_batch):
    values = np.sort(cdf(two_atom, two_atom_batch.rows))
    grid = np.linspace(0.01, 0.99, 50)
    empirical = np.searchsorted(values, grid, side='right') / N
    expected = np.array([float(kendall_cdf(two_atom, t, check=False)) for t in grid])
    assert np.max(np.abs(empirical - expected)) < 0.02


def test_box_frequency_matches_box_mass(two_atom, two_atom_batch):
    box = ((0.2, 0.9), (0.3, 0.8), (0.1, 0.7))
    p = float(box_mass_corners(two_atom, box))
    rows = two_atom_batch.rows
    inside = np.all([(rows[:, i] >= lo) & (rows[:, i] <= hi) for i, (lo, hi) in enumerate(box)], axis=0)
    assert inside.mean() == pytest.approx(p, abs=5 * math.sqrt(p * (1 - p) / N) + 1e-4)


def test_lower_frechet_samples_lie_on_the_antidiagonal():
    cop = copula('lower_frechet')
    radial = sample_radial(cop, 1000, seed=5)
    conditional = sample_conditional(cop, 1000, seed=5)
    assert radial.rows.sum(axis=1) == pytest.approx(np.ones(1000), abs=1e-12)
    assert conditional.rows.sum(axis=1) == pytest.approx(np.ones(1000), abs=1e-9)


def test_samples_do_not_depend_on_workers(two_atom):
    n = CHUNK_SIZE + 500
    one = sample_radial(two_atom, n, seed=3, workers=1)
    many = sample_radial(two_atom, n, seed=3, workers=4)
    assert np.array_equal(one.rows, many.rows)
    again = sample_conditional(two_atom, 2000, seed=3, workers=1)
    assert np.array_equal(again.rows, sample_conditional(two_atom, 2000, seed=3, workers=3).rows)
    assert not np.array_equal(sample_radial(two_atom, 2000, seed=4).rows, sample_radial(two_atom, 2000, seed=3).rows)


def test_chunk_streams_are_independent_of_each_other():
    first = chunk_rng(9, 0).random(4)
    assert np.array_equal(first, chunk_rng(9, 0).random(4))
    assert not np.array_equal(first, chunk_rng(9, 1).random(4))


def test_marginal_sampling(two_atom):
    pair = marginal(two_atom, 2)
    for method in ('radial', 'conditional'):
        batch = sample(pair, 5000, seed=2, method=method)
        assert batch.rows.shape == (5000, 2)
        for i in range(2):
            assert stats.kstest(batch.rows[:, i], 'uniform').pvalue > 1e-3


def test_invalid_requests(two_atom):
    with pytest.raises(ValueError):
        sample(two_atom, 0, seed=1)
    with pytest.raises(ValueError):
        sample(two_atom, 10, seed=1, method='rejection')
    with pytest.raises(ValueError):
        sample(two_atom, 10, seed=1, workers=0)
    with pytest.raises(ValueError):
        SampleBatch(2, 3, np.zeros((3, 3)), 'radial', 1)


def test_histogram(two_atom):
    batch = sample_radial(two_atom, 3000, seed=8)
    hist = histogram(batch, 10)
    assert hist.joint.shape == (10, 10)
    assert hist.joint.sum() == 3000
    assert len(hist.marginals) == 3
    assert all(m.sum() == 3000 for m in hist.marginals)
    rows = hist.rows()
    assert len(rows) == 100
    assert rows[0]['x_lo'] == 0.0 and rows[-1]['y_hi'] == 1.0
    with pytest.raises(ValueError):
        histogram(batch, 0)
