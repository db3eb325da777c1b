"""
Non-differentiability of the order-(d-1) mixed partials of an Archimedean copula.

Differentiating C in all but one of the first d-1 coordinates gives

    prod_{j != i} phi'(x_j) * psi^(d-2)(phi(x_1) + ... + phi(x_{d-1}) + phi(y)),

and the remaining derivative in x_i is one-sided wherever the composite argument
hits 1/q for an atom q of gamma: D- psi^(d-2) and D+ psi^(d-2) differ there by
(d-1)! alpha q^(d-1). Locations come from the atoms; finite differences only
certify them.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from scripts.copula_core import ArchCopula, _phi_sum, _point, _require_full
from scripts.generator import dminus_psi, dplus_psi, phi, phi_prime, psi, psi_derivative
from scripts.measure_model import (
    Atom,
    WilliamsonMeasure,
    dense_rational_points,
    inverse,
    normalize,
)

__all__ = [
    'NonDiffEntry',
    'NonDiffCertificate',
    'FiniteDifferenceError',
    'FDEstimate',
    'mixed_partial_dm2',
    'one_sided_dm1',
    'nondiff_points',
    'dense_pathology_measure',
    'fd_probe',
    'certify',
    'DEFAULT_STEPS',
]

DEFAULT_STEPS = (1e-3, 1e-4, 1e-5, 1e-6)
MIN_STEPS = 4
MAX_STEP = 1e-2
KINK_SNAP = 1e-9
NOISE_MULTIPLE = 10
BRACKET_RELATIVE = 0.05
DIVERGENCE_RATIO = 0.5
DIVERGENCE_FLOOR = 1e-8
SIDES = ('left', 'right')


class FiniteDifferenceError(RuntimeError):
    """One-sided difference quotients do not settle across the step schedule."""


class NonDiffEntry(NamedTuple):
    t: object
    y: float
    gap: float
    q: object


class FDEstimate(NamedTuple):
    estimate: float
    noise: float
    quotients: tuple[float, ...]


@dataclass(frozen=True)
class NonDiffCertificate:
    x: tuple
    y: float
    t: float
    left: float
    right: float
    gap: float
    fd_left: float
    fd_right: float
    noise: float
    steps: tuple[float, ...]
    verdict: bool

    def as_row(self) -> dict:
        return {
            'x': ' '.join(f"{float(v):.12g}" for v in self.x),
            'y': self.y,
            't': self.t,
            'left': self.left,
            'right': self.right,
            'gap': self.gap,
            'fd_left': self.fd_left,
            'fd_right': self.fd_right,
            'verdict': self.verdict,
        }


def _interior(cop: ArchCopula, x, y) -> tuple:
    x = _point(x, cop.dim - 1)
    if any(v in (0, 1) for v in x):
        raise ValueError(f"x must be interior, got {x}")
    if not 0 < y < 1:
        raise ValueError(f"y must be in (0, 1), got {y}")
    return x


def _check_axis(cop: ArchCopula, axis: int) -> None:
    if not 0 <= axis <= cop.dim - 2:
        raise ValueError(f"axis must be in [0, {cop.dim - 2}], got {axis}")


def _phi_primes(cop: ArchCopula, x: tuple) -> list[float]:
    return [float(phi_prime(cop.gen, v)) for v in x]


def mixed_partial_dm2(cop: ArchCopula, x, y, axis: int = 0) -> float:
    """Mixed partial of C in every first-block coordinate except x[axis]."""
    x = _interior(cop, x, y)
    _check_axis(cop, axis)
    z = float(_phi_sum(cop, x)) + float(phi(cop.gen, y))
    value = float(psi_derivative(cop.gen, cop.dim - 2, z))
    for j, slope in enumerate(_phi_primes(cop, x)):
        if j != axis:
            value *= slope
    return value


def _composite(cop: ArchCopula, x: tuple, y):
    """phi-sum of (x, y), snapped onto a kink 1/e when within KINK_SNAP."""
    z = _phi_sum(cop, x) + phi(cop.gen, y)
    floats, stored = cop.gen.kink_reciprocals
    if floats.size:
        i = int(np.argmin(np.abs(floats - float(z))))
        if abs(floats[i] - float(z)) <= KINK_SNAP * max(1.0, float(z)):
            return stored[i]
    return z


def one_sided_dm1(cop: ArchCopula, x, y, side: str, axis: int = 0) -> float:
    """One-sided derivative in x[axis] of mixed_partial_dm2.

    Moving x[axis] right lowers the composite argument, so the right derivative
    takes D- psi^(d-2) and the left one D+ psi^(d-2).
    """
    _require_full(cop, 'one_sided_dm1')
    x = _interior(cop, x, y)
    _check_axis(cop, axis)
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")
    z = _composite(cop, x, y)
    jump = dminus_psi(cop.gen, z) if side == 'right' else dplus_psi(cop.gen, z)
    return math.prod(_phi_primes(cop, x)) * float(jump)


def nondiff_points(cop: ArchCopula, x) -> list[NonDiffEntry]:
    """Levels t = psi(1/q), ordinates y = f^t(x) and jump sizes for every admissible gamma-atom q."""
    _require_full(cop, 'nondiff_points')
    x = _point(x, cop.dim - 1)
    if any(v in (0, 1) for v in x):
        raise ValueError(f"x must be interior, got {x}")
    d = cop.gen.d
    s = _phi_sum(cop, x)
    scale = math.factorial(d - 1) * math.prod(abs(v) for v in _phi_primes(cop, x))
    entries = []
    for atom in cop.measure.atoms:
        w = inverse(atom.location)
        if w <= s:
            continue
        y = float(psi(cop.gen, w - s))
        if not 0 < y < 1:
            continue
        gap = scale * float(atom.mass) * float(atom.location) ** (d - 1)
        entries.append(NonDiffEntry(psi(cop.gen, w), y, gap, atom.location))
    return sorted(entries, key=lambda e: e.y)


def dense_pathology_measure(d: int, n: int, points=None) -> WilliamsonMeasure:
    """Normalized atomic measure on the first n dense rationals with masses proportional to 2^-i."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    points = dense_rational_points(n) if points is None else [Fraction(p) for p in points][:n]
    if len(points) < n:
        raise ValueError(f"need {n} points, got {len(points)}")
    total = Fraction(2 ** n - 1, 2 ** n)
    atoms = tuple(Atom(q, Fraction(1, 2 ** (i + 1)) / total) for i, q in enumerate(points))
    return normalize(WilliamsonMeasure(d, atoms))


def _check_steps(steps) -> tuple[float, ...]:
    steps = tuple(float(h) for h in steps)
    if len(steps) < MIN_STEPS:
        raise ValueError(f"step schedule needs at least {MIN_STEPS} steps, got {len(steps)}")
    if any(not 0 < h <= MAX_STEP for h in steps):
        raise ValueError(f"steps must lie in (0, {MAX_STEP}], got {steps}")
    if any(b >= a for a, b in zip(steps, steps[1:])):
        raise ValueError(f"steps must be strictly decreasing, got {steps}")
    return steps


def fd_probe(cop: ArchCopula, x, y, side: str, steps=DEFAULT_STEPS, axis: int = 0) -> FDEstimate:
    """One-sided difference quotients of mixed_partial_dm2 in x[axis] over a shrinking schedule."""
    x = _interior(cop, x, y)
    _check_axis(cop, axis)
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")
    steps = _check_steps(steps)
    base = mixed_partial_dm2(cop, x, y, axis)
    sign = 1 if side == 'right' else -1
    quotients = []
    for h in steps:
        moved = list(x)
        moved[axis] = float(x[axis]) + sign * h
        if not 0 < moved[axis] < 1:
            raise ValueError(f"step {h} leaves the unit interval at x[{axis}] = {x[axis]}")
        quotients.append(sign * (mixed_partial_dm2(cop, moved, y, axis) - base) / h)
    estimate, previous = quotients[-1], quotients[-2]
    noise = abs(estimate - previous)
    if noise > DIVERGENCE_FLOOR and noise > DIVERGENCE_RATIO * max(abs(estimate), abs(previous)):
        raise FiniteDifferenceError(f"{side} quotients at x={x}, y={y} do not settle: {quotients}")
    return FDEstimate(estimate, noise, tuple(quotients))


def _brackets(fd: float, analytic: float, gap: float) -> bool:
    return abs(fd - analytic) <= BRACKET_RELATIVE * max(abs(analytic), abs(gap))


def certify(cop: ArchCopula, x, entry: NonDiffEntry, steps=DEFAULT_STEPS, axis: int = 0) -> NonDiffCertificate:
    """Analytic one-sided values at an enumerated entry, bracketed by finite differences."""
    x = _point(x, cop.dim - 1)
    left = one_sided_dm1(cop, x, entry.y, 'left', axis)
    right = one_sided_dm1(cop, x, entry.y, 'right', axis)
    fd_left = fd_probe(cop, x, entry.y, 'left', steps, axis)
    fd_right = fd_probe(cop, x, entry.y, 'right', steps, axis)
    gap = right - left
    noise = max(fd_left.noise, fd_right.noise)
    verdict = (abs(gap) > NOISE_MULTIPLE * noise
               and _brackets(fd_left.estimate, left, gap)
               and _brackets(fd_right.estimate, right, gap))
    return NonDiffCertificate(
        x=x,
        y=entry.y,
        t=float(entry.t),
        left=left,
        right=right,
        gap=gap,
        fd_left=fd_left.estimate,
        fd_right=fd_right.estimate,
        noise=noise,
        steps=_check_steps(steps),
        verdict=verdict,
    )
