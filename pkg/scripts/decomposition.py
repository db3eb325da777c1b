"""
Lebesgue decomposition of the Markov kernel and of mu_C.

For x outside the zero set, the kernel of the last coordinate is

    K(x, [0, y]) = M(1/(s + phi(y))) / M(1/s),   s = phi(x_1) + ... + phi(x_{d-1}),

with M(u) the gamma-moment of t^(d-1) over (0, u]. Restricting the numerator to
the absolutely continuous, discrete and singular parts of gamma splits the kernel
into H^abs + H^dis + H^sing; each atom q of gamma becomes a kernel atom at
y = psi(1/q - s).
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from scripts.copula_core import ArchCopula, _phi_sum, _point, kernel_cdf
from scripts.generator import phi, phi_array, psi
from scripts.sampler import DEFAULT_WORKERS, sample_radial
from scripts.measure_model import (
    Real,
    inverse,
    pure_kind,
    resolution_bound,
    support_gaps,
    truncated_power_integral,
)

__all__ = [
    'DegenerateConditioningError',
    'KernelSplit',
    'SplitValues',
    'ComponentMasses',
    'SupportReport',
    'kernel_split',
    'kernel_atoms',
    'component_masses',
    'support_report',
]

PARTS = ('abs', 'dis', 'sing')


class DegenerateConditioningError(ValueError):
    """Kernel split requested at x with M(x) = 1 or x in the zero set."""


class SplitValues(NamedTuple):
    abs: object
    dis: object
    sing: object


@dataclass(frozen=True)
class KernelSplit:
    """H^abs, H^dis, H^sing of the kernel at a fixed conditioning point x."""

    cop: ArchCopula
    x: tuple
    s: object
    denominator: object = field(repr=False)

    def _part(self, part: str, y):
        if not 0 <= y <= 1:
            raise ValueError(f"y must be in [0, 1], got {y}")
        if not self.cop.full:
            # lower-dimensional marginals have absolutely continuous kernels
            return kernel_cdf(self.cop, self.x, y) if part == 'abs' else 0
        z = self.s + phi(self.cop.gen, y) if y < 1 else self.s
        num = truncated_power_integral(self.cop.measure, 0, self.cop.gen.d - 1, z, part=part)
        return num / self.denominator

    def habs(self, y):
        return self._part('abs', y)

    def hdis(self, y):
        return self._part('dis', y)

    def hsing(self, y):
        return self._part('sing', y)

    def __call__(self, y) -> SplitValues:
        return SplitValues(self.habs(y), self.hdis(y), self.hsing(y))

    @property
    def totals(self) -> SplitValues:
        return self(1)


def _conditioning_sum(cop: ArchCopula, x) -> tuple[tuple, object]:
    x = _point(x, cop.dim - 1)
    s = _phi_sum(cop, x)
    if s == 0:
        raise DegenerateConditioningError(f"M(x) = 1 at x = {x}: the kernel is the constant first case")
    if s >= cop.gen.phi0:
        raise DegenerateConditioningError(f"x = {x} lies in the zero set of the marginal copula")
    return x, s


def kernel_split(cop: ArchCopula, x) -> KernelSplit:
    x, s = _conditioning_sum(cop, x)
    denominator = truncated_power_integral(cop.measure, 0, cop.gen.d - 1, s) if cop.full else None
    return KernelSplit(cop, x, s, denominator)


def kernel_atoms(cop: ArchCopula, x) -> list[tuple]:
    """(y_j, mass_j) for every gamma-atom q_j with 1/q_j >= s, sorted by y."""
    x, s = _conditioning_sum(cop, x)
    if not cop.full:
        return []
    d = cop.gen.d
    denominator = truncated_power_integral(cop.measure, 0, d - 1, s)
    atoms = []
    for atom in cop.measure.atoms:
        w = inverse(atom.location)
        if w < s:
            continue
        y = psi(cop.gen, w - s)
        atoms.append((y, atom.mass * atom.location ** (d - 1) / denominator))
    return sorted(atoms, key=lambda entry: float(entry[0]))


@dataclass(frozen=True)
class ComponentMasses:
    abs: float
    dis: float
    sing: float
    stderr: tuple[float, float, float]
    method: str
    n: int = 0
    resolution: float = 0.0

    def as_dict(self) -> dict:
        return {
            'abs': float(self.abs),
            'dis': float(self.dis),
            'sing': float(self.sing),
            'stderr': [float(e) for e in self.stderr],
            'method': self.method,
            'n': self.n,
            'resolution': self.resolution,
        }


def _kernel_totals(cop: ArchCopula, points: np.ndarray) -> np.ndarray:
    """Rows (H^abs(1), H^dis(1), H^sing(1)) at conditioning points; NaN rows for excluded x."""
    d = cop.gen.d
    s = sum(phi_array(cop.gen, points[:, i]) for i in range(points.shape[1]))
    keep = (s > 0) & (s < float(cop.gen.phi0))
    safe = np.where(keep, s, 1.0)
    denominator = truncated_power_integral(cop.measure, 0, d - 1, safe)
    rows = np.stack([truncated_power_integral(cop.measure, 0, d - 1, safe, part=part) for part in PARTS], axis=1)
    rows = rows / denominator[:, None]
    rows[~keep] = np.nan
    return rows


def component_masses(cop: ArchCopula, n: int, seed: int, workers: int | None = None) -> ComponentMasses:
    """mu_C^abs, mu_C^dis, mu_C^sing of the unit cube.

    Pure measures are answered structurally; mixtures by Monte-Carlo
    disintegration: x ~ C^{1:d-1}, averaging the kernel component totals.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    resolution = resolution_bound(cop.measure, cop.gen.d - 1)
    if not cop.full:
        return ComponentMasses(1, 0, 0, (0.0, 0.0, 0.0), 'structural')
    kind = pure_kind(cop.measure)
    if kind is not None:
        values = {part: int(part == kind) for part in PARTS}
        return ComponentMasses(values['abs'], values['dis'], values['sing'], (0.0, 0.0, 0.0), 'structural',
                               resolution=resolution)
    batch = sample_radial(cop, n, seed, workers=workers or DEFAULT_WORKERS)
    rows = _kernel_totals(cop, batch.rows[:, :-1])
    rows = rows[~np.isnan(rows[:, 0])]
    kept = rows.shape[0]
    if kept == 0:
        raise DegenerateConditioningError("every sampled conditioning point fell in the excluded region")
    means = rows.mean(axis=0)
    stderr = rows.std(axis=0, ddof=1) / math.sqrt(kept) if kept > 1 else np.zeros(3)
    return ComponentMasses(float(means[0]), float(means[1]), float(means[2]),
                           tuple(float(e) for e in stderr), 'mc', kept, resolution)


@dataclass(frozen=True)
class SupportReport:
    """Zero-mass and supported level bands of mu_C.

    full_support holds when every open box has positive mass: gamma strict with no
    gaps and no zero band, including the tail band above top_level. hull_full_support
    only asks that gamma has no gaps inside [0, right endpoint].
    """

    full_support: bool
    hull_full_support: bool
    strict: bool
    top_level: Real
    zero_bands: tuple[tuple, ...]
    support_bands: tuple[tuple, ...]
    graph_f0: bool
    gaps: tuple[tuple, ...]
    max_gap: float

    def as_dict(self) -> dict:
        def pair(band):
            return [float(band[0]), float(band[1])]
        return {
            'full_support': self.full_support,
            'hull_full_support': self.hull_full_support,
            'top_level': float(self.top_level),
            'strict': self.strict,
            'graph_f0': self.graph_f0,
            'zero_bands': [pair(b) for b in self.zero_bands],
            'support_bands': [pair(b) for b in self.support_bands],
            'gaps': [pair(g) for g in self.gaps],
            'max_gap': self.max_gap,
        }


def _level_of(cop: ArchCopula, t_location):
    """Level psi(1/t) attached to a point t of the Williamson measure's support."""
    if t_location == 0:
        return 0
    return psi(cop.gen, inverse(t_location))


def support_report(cop: ArchCopula) -> SupportReport:
    """Translate support gaps of gamma into zero-mass level bands of mu_C.

    A gap (a, b) inside [1/phi(0), inf) gives the band (psi(1/a), psi(1/b));
    mass beyond the right endpoint r is zero, giving the band (psi(1/r), 1).
    """
    if not cop.full:
        raise ValueError(f"support_report needs the full {cop.gen.d}-dimensional copula, got dim {cop.dim}")
    measure = cop.measure
    report = support_gaps(measure)
    left = measure.left_endpoint
    zero_bands = [(_level_of(cop, a), _level_of(cop, b)) for a, b in report.gaps if a >= left]
    top_level = _level_of(cop, report.right)
    zero_bands.append((top_level, 1))
    graph_f0 = not measure.strict and measure.atom_mass(left) > 0
    support_bands = []
    for lo, hi in report.components:
        if graph_f0 and lo == hi == left:
            continue
        support_bands.append((_level_of(cop, lo), _level_of(cop, hi)))
    return SupportReport(
        full_support=report.full_support and all(lo >= hi for lo, hi in zero_bands),
        hull_full_support=report.full_support,
        strict=measure.strict,
        top_level=top_level,
        zero_bands=tuple(zero_bands),
        support_bands=tuple(support_bands),
        graph_f0=graph_f0,
        gaps=report.gaps,
        max_gap=report.max_gap,
    )
