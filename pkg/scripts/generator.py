"""
Williamson d-transform of a measure: the generator psi, its derivatives, the
one-sided derivatives of order d-1 and the pseudo-inverse phi.

    psi(z)      = integral of (1 - t z)_+^(d-1) d(gamma)(t)
    psi^(k)(z)  = (d-1)!/(d-1-k)! (-1)^k integral of t^k (1 - t z)_+^(d-1-k)
    D-psi^(d-2) = (d-1)! (-1)^(d-1) gamma-moment of t^(d-1) over (0, 1/z]
    D+psi^(d-2) = same over (0, 1/z)

Scalar calls with exact inputs (int/Fraction) on an exact measure return
Fractions; ndarray inputs are evaluated elementwise in floating point.
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from scripts.measure_model import (
    NORMALIZATION_TOLERANCE,
    NormalizationError,
    WilliamsonMeasure,
    inverse,
    is_exact,
    truncated_power_integral,
)

__all__ = [
    'Generator',
    'DMonotoneReport',
    'psi',
    'psi_derivative',
    'dminus_psi',
    'dplus_psi',
    'phi',
    'phi_array',
    'phi_prime',
    'check_d_monotone',
    'summary',
]

PHI_ITERATIONS = 80
KINK_SNAP_RELATIVE = 1e-9
KINK_SNAP_VALUE = 1e-12
MAX_DOUBLINGS = 200
MONOTONE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Generator:
    """Normalized d-monotone generator induced by a Williamson measure."""

    measure: WilliamsonMeasure

    def __post_init__(self):
        defect = self.normalization_defect
        if defect > NORMALIZATION_TOLERANCE:
            raise NormalizationError(f"psi(1) = {0.5 + defect:.12g} != 1/2; normalize the measure first")

    @property
    def d(self) -> int:
        return self.measure.dimension

    @property
    def strict(self) -> bool:
        return self.measure.strict

    @cached_property
    def phi0(self):
        """phi(0): infinite for strict generators, else 1 / left support endpoint."""
        if self.strict:
            return math.inf
        return inverse(self.measure.left_endpoint)

    @cached_property
    def normalization_defect(self) -> float:
        return abs(float(truncated_power_integral(self.measure, self.d - 1, 0, 1)) - 0.5)

    @cached_property
    def kink_reciprocals(self) -> tuple[np.ndarray, tuple]:
        """Sorted z-locations 1/e of the measure's kinks, as floats and as stored values."""
        keys = sorted(self.measure._reciprocals, key=float)
        return np.array([float(k) for k in keys]), tuple(keys)


def _check_z(z) -> None:
    if isinstance(z, np.ndarray):
        if np.any(z < 0) or np.any(np.isnan(z)):
            raise ValueError("z must be >= 0")
    elif z < 0:
        raise ValueError(f"z must be >= 0, got {z}")


def _clip_unit(value):
    if isinstance(value, np.ndarray):
        return np.clip(value, 0.0, 1.0)
    if is_exact(value):
        return value
    return min(max(value, 0.0), 1.0)


def psi(gen: Generator, z):
    """Williamson d-transform at z in [0, inf]."""
    _check_z(z)
    return _clip_unit(truncated_power_integral(gen.measure, gen.d - 1, 0, z))


def psi_derivative(gen: Generator, k: int, z):
    """k-th derivative of psi, 0 <= k <= d-2 (continuous for these orders)."""
    if not 0 <= k <= gen.d - 2:
        raise ValueError(f"k must be in [0, {gen.d - 2}], got {k}")
    if k == 0:
        return psi(gen, z)
    _check_z(z)
    d = gen.d
    factor = (-1) ** k * math.factorial(d - 1) // math.factorial(d - 1 - k)
    return factor * truncated_power_integral(gen.measure, d - 1 - k, k, z)


def _one_sided(gen: Generator, z, order: int | None, closed: bool):
    d = gen.d
    order = d - 2 if order is None else order
    if not 0 <= order <= d - 2:
        raise ValueError(f"order must be in [0, {d - 2}], got {order}")
    if order < d - 2:
        return psi_derivative(gen, order + 1, z)
    _check_z(z)
    factor = (-1) ** (d - 1) * math.factorial(d - 1)
    return factor * truncated_power_integral(gen.measure, 0, d - 1, z, closed=closed)


def dminus_psi(gen: Generator, z, order: int | None = None):
    """Left derivative of psi^(order) (default order d-2): moment over (0, 1/z]."""
    return _one_sided(gen, z, order, closed=True)


def dplus_psi(gen: Generator, z, order: int | None = None):
    """Right derivative of psi^(order) (default order d-2): moment over (0, 1/z)."""
    return _one_sided(gen, z, order, closed=False)


def _snap_to_kink(gen: Generator, z: float, y):
    floats, stored = gen.kink_reciprocals
    if floats.size == 0:
        return z
    i = int(np.searchsorted(floats, z))
    best = None
    for j in (i - 1, i):
        if 0 <= j < floats.size and abs(floats[j] - z) <= KINK_SNAP_RELATIVE * max(1.0, z):
            if best is None or abs(floats[j] - z) < abs(floats[best] - z):
                best = j
    if best is not None and abs(float(psi(gen, stored[best])) - float(y)) <= KINK_SNAP_VALUE:
        return stored[best]
    return z


def phi(gen: Generator, y):
    """Pseudo-inverse inf{z : psi(z) = y} for y in [0, 1] by bisection on psi."""
    if isinstance(y, np.ndarray):
        return phi_array(gen, y)
    if not 0 <= y <= 1:
        raise ValueError(f"y must be in [0, 1], got {y}")
    if y == 1:
        return 0
    if y == 0:
        return gen.phi0
    target = float(y)
    lo = 0.0
    if gen.strict:
        hi = 1.0
        for _ in range(MAX_DOUBLINGS):
            if float(psi(gen, hi)) <= target:
                break
            hi *= 2.0
    else:
        hi = float(gen.phi0)
    for _ in range(PHI_ITERATIONS):
        mid = 0.5 * (lo + hi)
        if float(psi(gen, mid)) > target:
            lo = mid
        else:
            hi = mid
    return _snap_to_kink(gen, hi, y)


def phi_array(gen: Generator, y: np.ndarray) -> np.ndarray:
    """Elementwise phi by vectorised bisection (no kink snapping)."""
    y = np.asarray(y, dtype=float)
    if np.any((y < 0) | (y > 1)):
        raise ValueError("y must be in [0, 1]")
    lo = np.zeros(y.shape)
    if gen.strict:
        hi = np.ones(y.shape)
        for _ in range(MAX_DOUBLINGS):
            above = (psi(gen, hi) > y) & (y > 0)
            if not above.any():
                break
            hi = np.where(above, 2.0 * hi, hi)
    else:
        hi = np.full(y.shape, float(gen.phi0))
    for _ in range(PHI_ITERATIONS):
        mid = 0.5 * (lo + hi)
        above = psi(gen, mid) > y
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    out = np.where(y >= 1, 0.0, hi)
    return np.where(y <= 0, float(gen.phi0), out)


def phi_prime(gen: Generator, y):
    """phi'(y) = 1 / psi'(phi(y)); for d = 2 psi' is taken as the left derivative."""
    z = phi(gen, y)
    slope = psi_derivative(gen, 1, z) if gen.d >= 3 else dminus_psi(gen, z)
    if isinstance(slope, np.ndarray):
        with np.errstate(divide='ignore'):
            return np.where(slope < 0, 1.0 / np.where(slope < 0, slope, -1.0), -np.inf)
    if slope == 0:
        return -math.inf
    return 1 / slope


@dataclass(frozen=True)
class DMonotoneReport:
    dim: int
    passed: bool
    violation: str | None = None
    order: int | None = None
    z: float | None = None


def _signed_derivatives(gen: Generator, z: np.ndarray, dim: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """(grid, (-1)^k psi^(k)) for k = 0..dim-2; orders past d-1 by forward differences."""
    d = gen.d
    rows = []
    for k in range(min(dim - 2, d - 2) + 1):
        rows.append((z, (-1) ** k * np.asarray(psi_derivative(gen, k, z), dtype=float)))
    if dim - 2 >= d - 1:
        rows.append((z, (-1) ** (d - 1) * np.asarray(dminus_psi(gen, z), dtype=float)))
    while len(rows) < dim - 1:
        grid, values = rows[-1]
        rows.append((grid[:-1], -np.diff(values) / np.diff(grid)))
    return rows


def check_d_monotone(gen: Generator, grid, dim: int | None = None) -> DMonotoneReport:
    """Check dim-monotonicity of psi on a sorted positive grid; report the first violation."""
    dim = gen.d if dim is None else dim
    z = np.asarray(grid, dtype=float)
    if z.size == 0:
        raise ValueError("grid must be non-empty")
    if np.any(np.diff(z) <= 0) or z[0] <= 0:
        raise ValueError("grid must be positive and strictly increasing")
    rows = _signed_derivatives(gen, z, dim)
    for k, (points, values) in enumerate(rows):
        tol = MONOTONE_TOLERANCE * max(1.0, float(np.max(np.abs(values), initial=0.0)))
        bad = np.flatnonzero(values < -tol)
        if bad.size:
            return DMonotoneReport(dim, False, f"(-1)^{k} psi^({k}) is negative", k, float(points[bad[0]]))
    points, values = rows[-1]
    order = dim - 2
    tol = MONOTONE_TOLERANCE * max(1.0, float(np.max(np.abs(values), initial=0.0)))
    bad = np.flatnonzero(np.diff(values) > tol)
    if bad.size:
        return DMonotoneReport(dim, False, f"(-1)^{order} psi^({order}) is not non-increasing", order,
                               float(points[bad[0] + 1]))
    if values.size >= 3:
        slopes = np.diff(values) / np.diff(points)
        scale = max(1.0, float(np.max(np.abs(slopes))))
        bad = np.flatnonzero(np.diff(slopes) < -MONOTONE_TOLERANCE * scale * 1e3)
        if bad.size:
            return DMonotoneReport(dim, False, f"(-1)^{order} psi^({order}) is not convex", order,
                                   float(points[bad[0] + 1]))
    return DMonotoneReport(dim, True)


def summary(gen: Generator) -> dict:
    """JSON-ready description of the generator."""
    return {
        'd': gen.d,
        'strict': gen.strict,
        'phi0': 'inf' if gen.strict else float(gen.phi0),
        'support': [float(gen.measure.left_endpoint), float(gen.measure.right_endpoint)],
        'normalization_defect': gen.normalization_defect,
    }
