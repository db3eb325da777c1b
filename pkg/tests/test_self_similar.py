from fractions import Fraction

import numpy as np
import pytest

from scripts.self_similar import SelfSimilarLaw, cantor_law, make_law, salem_law


def test_cantor_exact_moments():
    moments = cantor_law().exact_moments(2)
    assert moments == [1, Fraction(1, 2), Fraction(3, 8)]


def test_cantor_cdf_plateau_and_ends():
    law = cantor_law()
    values = law.cdf([0.0, 0.4, 0.5, 0.6, 1.0])
    assert values[0] == 0
    assert values[-1] == 1
    assert values[1:4] == pytest.approx([0.5, 0.5, 0.5], abs=law.resolution)


def test_cantor_cdf_is_self_similar():
    law = cantor_law()
    x = np.array([0.05, 0.2, 0.31])
    assert law.cdf(x / 3) == pytest.approx(law.cdf(x) / 2, abs=2 * law.resolution)


def test_partial_moments_at_one_are_the_moments():
    law = salem_law()
    out = law.partial_moments(1.0, 3)
    assert out[:, 0] == pytest.approx(law.moments(3))


def test_salem_quantile_inverts_cdf():
    law = salem_law(Fraction(1, 3))
    x = np.array([0.1, 0.3, 0.77])
    assert law.quantile(law.cdf(x)) == pytest.approx(x, abs=1e-6)
    assert law.cdf(0.5)[0] == pytest.approx(1 / 3, abs=1e-12)


def test_gaps_and_cells():
    law = cantor_law()
    assert law.gaps(2) == [(Fraction(1, 9), Fraction(2, 9)), (Fraction(1, 3), Fraction(2, 3)),
                           (Fraction(7, 9), Fraction(8, 9))]
    assert law.cells(1) == [(0, Fraction(1, 3), Fraction(1, 2)), (Fraction(2, 3), 1, Fraction(1, 2))]
    assert salem_law().gaps(4) == []


def test_invalid_laws():
    with pytest.raises(ValueError):
        salem_law(Fraction(1, 2))
    with pytest.raises(ValueError):
        SelfSimilarLaw(2, (Fraction(1), Fraction(0)))
    with pytest.raises(ValueError):
        make_law('devil', 10)
