"""
Self-similar probability laws on [0, 1] used as singular CDF oracles.

A law is the invariant measure of the maps x -> (x + j) / base, j = 0..base-1,
chosen with probabilities weights[j]. Two families are built in:

- cantor: base 3, weights (1/2, 0, 1/2), the Cantor function;
- salem:  base 2, weights (p, 1 - p), p != 1/2, atom-free and singular with full
  support on [0, 1].

All evaluations descend the base-b digit tree to a fixed depth. Whole cells to the
left of the evaluation point contribute exact cell moments (computed from the
self-similar moment recursion); the single unresolved cell at the bottom
contributes half its mass, so the error is at most half of the largest cell mass
at that depth.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

__all__ = [
    'FAMILIES',
    'DEFAULT_DEPTH',
    'SelfSimilarLaw',
    'cantor_law',
    'salem_law',
    'make_law',
]

FAMILIES = ('cantor', 'salem')
DEFAULT_DEPTH = 24
DEFAULT_SALEM_P = Fraction(1, 3)


@dataclass(frozen=True)
class SelfSimilarLaw:
    """Invariant measure of a uniform-contraction iterated function system."""

    base: int
    weights: tuple[Fraction, ...]
    depth: int = DEFAULT_DEPTH

    def __post_init__(self):
        if self.base < 2:
            raise ValueError(f"base must be >= 2, got {self.base}")
        if len(self.weights) != self.base:
            raise ValueError(f"expected {self.base} weights, got {len(self.weights)}")
        if any(w < 0 for w in self.weights) or sum(self.weights) != 1:
            raise ValueError(f"weights must be nonnegative and sum to 1, got {self.weights}")
        if max(self.weights) >= 1:
            raise ValueError("a degenerate weight vector gives an atom, not a singular law")
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")

    @cached_property
    def resolution(self) -> float:
        """Upper bound on the CDF error of any evaluation at this depth."""
        return float(max(self.weights)) ** self.depth

    @cached_property
    def _float_weights(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights])

    def exact_moments(self, k_max: int) -> list[Fraction]:
        """Moments E[X^k], k = 0..k_max, from the self-similarity identity."""
        b = self.base
        moments = [Fraction(1)]
        for k in range(1, k_max + 1):
            acc = Fraction(0)
            for j, w in enumerate(self.weights):
                if w == 0:
                    continue
                acc += w * sum(math.comb(k, r) * Fraction(j) ** (k - r) * moments[r] for r in range(k))
            scale = Fraction(1, b ** k)
            moments.append(scale * acc / (1 - scale))
        return moments

    def moments(self, k_max: int) -> np.ndarray:
        return np.array([float(m) for m in self.exact_moments(k_max)])

    def partial_moments(self, x, k_max: int) -> np.ndarray:
        """Return P[i] = integral over [0, x] of xi^i, i = 0..k_max, shape (k_max + 1, n)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        m = self.moments(k_max)
        b = self.base
        w = self._float_weights
        out = np.zeros((k_max + 1, x.size))

        full = x >= 1.0
        out[:, full] = m[:, None]
        active = (x > 0.0) & ~full
        left = np.zeros(x.size)
        mass = np.ones(x.size)
        size = 1.0

        for _ in range(self.depth):
            if not active.any():
                break
            size /= b
            digit = np.clip(np.floor((x - left) / size), 0, b - 1).astype(int)
            for j in range(b - 1):
                take = active & (digit > j) & (w[j] > 0)
                if take.any():
                    out[:, take] += self._cell_moments(left[take] + j * size, size, mass[take] * w[j], m)
            left = left + digit * size
            mass = mass * w[digit]
            active &= mass > 0

        if active.any():
            out[:, active] += 0.5 * self._cell_moments(left[active], size, mass[active], m)
        return out

    @staticmethod
    def _cell_moments(start: np.ndarray, size: float, mass: np.ndarray, m: np.ndarray) -> np.ndarray:
        # mass * E[(start + size * X)^i] for i = 0..len(m)-1
        k_max = len(m) - 1
        out = np.zeros((k_max + 1, start.size))
        for i in range(k_max + 1):
            acc = np.zeros(start.size)
            for r in range(i + 1):
                acc += math.comb(i, r) * start ** (i - r) * size ** r * m[r]
            out[i] = mass * acc
        return out

    def cdf(self, x) -> np.ndarray:
        return self.partial_moments(x, 0)[0]

    def quantile(self, p) -> np.ndarray:
        """Generalized inverse of the CDF by digit descent."""
        p = np.clip(np.atleast_1d(np.asarray(p, dtype=float)), 0.0, 1.0)
        w = self._float_weights
        cum = np.concatenate([[0.0], np.cumsum(w)])
        b = self.base
        positive = [j for j in range(b) if w[j] > 0]
        # zero-weight digits are never chosen: map each digit to the nearest positive one
        redirect = np.array([min((j2 for j2 in positive if j2 >= j), default=positive[-1]) for j in range(b)])
        left = np.zeros(p.size)
        size = 1.0
        for _ in range(self.depth):
            size /= b
            digit = redirect[np.minimum(np.searchsorted(cum[1:], p, side='left'), b - 1)]
            p = np.clip((p - cum[digit]) / w[digit], 0.0, 1.0)
            left = left + digit * size
        return left + 0.5 * size

    def gaps(self, levels: int) -> list[tuple[float, float]]:
        """Open gaps of the support down to the given tree level, sorted."""
        zero = [j for j, w in enumerate(self.weights) if w == 0]
        if not zero:
            return []
        found = []
        cells = [(Fraction(0), Fraction(1))]
        for _ in range(levels):
            children = []
            for start, size in cells:
                step = size / self.base
                for j in range(self.base):
                    if self.weights[j] == 0:
                        found.append((start + j * step, start + (j + 1) * step))
                    else:
                        children.append((start + j * step, step))
            cells = children
        found.sort()
        merged: list[tuple[Fraction, Fraction]] = []
        for lo, hi in found:
            if merged and lo <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(hi, merged[-1][1]))
            else:
                merged.append((lo, hi))
        return merged

    def cells(self, level: int) -> list[tuple[Fraction, Fraction, Fraction]]:
        """(start, end, mass) of the positive-mass cells at a tree level."""
        cells = [(Fraction(0), Fraction(1), Fraction(1))]
        for _ in range(level):
            children = []
            for start, end, mass in cells:
                step = (end - start) / self.base
                for j, w in enumerate(self.weights):
                    if w > 0:
                        children.append((start + j * step, start + (j + 1) * step, mass * w))
            cells = children
        return cells


def cantor_law(depth: int = DEFAULT_DEPTH) -> SelfSimilarLaw:
    return SelfSimilarLaw(3, (Fraction(1, 2), Fraction(0), Fraction(1, 2)), depth)


def salem_law(p: Fraction = DEFAULT_SALEM_P, depth: int = 64) -> SelfSimilarLaw:
    p = Fraction(p)
    if p == Fraction(1, 2):
        raise ValueError("p = 1/2 gives the uniform law, which is not singular")
    return SelfSimilarLaw(2, (p, 1 - p), depth)


def make_law(family: str, depth: int, p: Fraction | None = None) -> SelfSimilarLaw:
    if family == 'cantor':
        return cantor_law(depth)
    if family == 'salem':
        return salem_law(DEFAULT_SALEM_P if p is None else p, depth)
    raise ValueError(f"Unknown singular family '{family}'. Available: {', '.join(FAMILIES)}")
