"""
Archimedean copulas C(x) = psi(phi(x_1) + ... + phi(x_m)) built on a Williamson
generator: evaluation, marginals, densities, the Markov kernel of the last
coordinate, level functions, level-set and band masses, the Kendall distribution
function and box masses by disintegration.
"""

import math
import warnings
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from scripts.generator import (
    Generator,
    dminus_psi,
    dplus_psi,
    phi,
    phi_array,
    phi_prime,
    psi,
    psi_derivative,
)
from scripts.measure_model import (
    Interval,
    cdf as measure_cdf,
    is_exact,
    lebesgue_components,
    stieltjes_monomial,
    truncated_power_integral,
)

__all__ = [
    'ArchCopula',
    'LevelSetReport',
    'NotAbsolutelyContinuousError',
    'ConsistencyError',
    'QuadratureError',
    'cdf',
    'marginal',
    'density',
    'density_mass',
    'kernel_cdf',
    'kernel_cdf_array',
    'level_function',
    'level_curve',
    'level_mass',
    'band_mass',
    'kendall_cdf',
    'kendall_long_form',
    'measure_cdf_from_kendall',
    'box_mass',
    'box_mass_corners',
]

LEVEL_MASS_TOLERANCE = 1e-10
KENDALL_TOLERANCE = 1e-9
QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-10
QUAD_ACCEPT = 1e-8
SINGULAR_QUAD_ACCEPT = 1e-5


class NotAbsolutelyContinuousError(ValueError):
    """The full-dimensional density does not exist for this generator."""


class ConsistencyError(RuntimeError):
    """Two independent closed forms of the same quantity disagree."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested accuracy."""

    def __init__(self, message: str, estimate: float):
        self.estimate = estimate
        super().__init__(f"{message} (error estimate {estimate:.3g})")


@dataclass(frozen=True)
class ArchCopula:
    """m-dimensional Archimedean copula of a d-monotone generator, 2 <= m <= d."""

    gen: Generator
    dim: int | None = None

    def __post_init__(self):
        if self.dim is None:
            object.__setattr__(self, 'dim', self.gen.d)
        if not 2 <= self.dim <= self.gen.d:
            raise ValueError(f"dim must be in [2, {self.gen.d}], got {self.dim}")

    @property
    def full(self) -> bool:
        return self.dim == self.gen.d

    @property
    def measure(self):
        return self.gen.measure


@dataclass(frozen=True)
class LevelSetReport:
    t: object
    mass: object
    location: object
    form: str
    jump_mass: object = None


def _point(x, length: int, name: str = 'x') -> tuple:
    x = tuple(x)
    if len(x) != length:
        raise ValueError(f"{name} must have {length} coordinates, got {len(x)}")
    for v in x:
        if not 0 <= v <= 1:
            raise ValueError(f"{name} must lie in [0,1]^{length}, got {x}")
    return x


def _require_full(cop: ArchCopula, operation: str) -> None:
    if not cop.full:
        raise ValueError(f"{operation} needs the full {cop.gen.d}-dimensional copula, got dim {cop.dim}")


def _phi_sum(cop: ArchCopula, x: tuple):
    total = 0
    for v in x:
        w = phi(cop.gen, v)
        if w == math.inf:
            return math.inf
        total += w
    return total


def cdf(cop: ArchCopula, x):
    """C(x); a 2-D array of points gives a vector of values."""
    if isinstance(x, np.ndarray) and x.ndim == 2:
        if x.shape[1] != cop.dim:
            raise ValueError(f"points must have {cop.dim} columns, got {x.shape[1]}")
        s = sum(phi_array(cop.gen, x[:, i]) for i in range(cop.dim))
        return psi(cop.gen, s)
    x = _point(x, cop.dim)
    if any(v == 0 for v in x):
        return 0
    return psi(cop.gen, _phi_sum(cop, x))


def marginal(cop: ArchCopula, m: int) -> ArchCopula:
    """m-dimensional marginal: same generator, fewer coordinates."""
    if not 2 <= m < cop.dim:
        raise ValueError(f"m must be in [2, {cop.dim - 1}], got {m}")
    return ArchCopula(cop.gen, m)


def _top_derivative(cop: ArchCopula, z, closed: bool = True):
    """psi^(m-1) for the copula's own dimension m (left derivative when m = d)."""
    order = cop.dim - 2
    return dminus_psi(cop.gen, z, order) if closed else dplus_psi(cop.gen, z, order)


def _density_factor(cop: ArchCopula, s: float) -> float:
    """psi^(m)(s), the part of the density that depends on the coordinate sum."""
    gen, m = cop.gen, cop.dim
    if m < gen.d:
        return float(dminus_psi(gen, s, m - 1))
    if s <= 0:
        return 0.0
    t = 1.0 / s
    return math.factorial(m - 1) * (-1) ** m * gen.measure.density_at(t) * s ** -(m + 1)


def density(cop: ArchCopula, x) -> float:
    """Lebesgue density c(x) at an interior point.

    Always defined for marginals of dimension < d; the full-dimensional density
    requires an absolutely continuous Williamson measure.
    """
    x = _point(x, cop.dim)
    if any(v in (0, 1) for v in x):
        raise ValueError(f"density needs an interior point, got {x}")
    if cop.full:
        parts = lebesgue_components(cop.measure)
        if parts.dis > 0 or parts.sing > 0:
            raise NotAbsolutelyContinuousError(
                f"measure has discrete mass {float(parts.dis):.6g} and singular mass {float(parts.sing):.6g}; "
                f"the {cop.dim}-dimensional copula has no density")
    s = float(_phi_sum(cop, x))
    if s >= float(cop.gen.phi0):
        return 0.0
    value = _density_factor(cop, s)
    for v in x:
        value *= float(phi_prime(cop.gen, v))
    return max(value, 0.0)


def _kink_offsets(cop: ArchCopula) -> list[float]:
    return sorted(float(k) for k in cop.gen.kink_reciprocals[0])


def _accept(cop: ArchCopula) -> float:
    return SINGULAR_QUAD_ACCEPT if cop.measure.singular else QUAD_ACCEPT


def _quad(func, lo: float, hi: float, points: list[float]) -> tuple[float, float]:
    inner = sorted({p for p in points if lo < p < hi})
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', IntegrationWarning)
        if math.isinf(hi):
            split = (inner[-1] if inner else lo) + 1.0
            head, head_err = _quad(func, lo, split, inner)
            tail, tail_err = quad(func, split, math.inf, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)
            return head + tail, head_err + tail_err
        if hi <= lo:
            return 0.0, 0.0
        return quad(func, lo, hi, points=inner or None, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL,
                    limit=max(100, 4 * len(inner)))


def density_mass(cop: ArchCopula, box) -> float:
    """Integral of the bivariate density over box = ((a1, b1), (a2, b2)).

    Nested adaptive quadrature after substituting w = phi(x), which turns the
    density into psi''(w1 + w2); kinks of psi'' along w1 + w2 = 1/e are passed
    as breakpoints.
    """
    if cop.dim != 2:
        raise ValueError(f"density_mass integrates bivariate densities, got dim {cop.dim}")
    parts = lebesgue_components(cop.measure)
    if cop.full and (parts.dis > 0 or parts.sing > 0):
        raise NotAbsolutelyContinuousError("the bivariate copula of a non absolutely continuous measure has no density")
    (a1, b1), (a2, b2) = box
    lo1, hi1 = float(phi(cop.gen, b1)), float(phi(cop.gen, a1))
    lo2, hi2 = float(phi(cop.gen, b2)), float(phi(cop.gen, a2))
    kinks = _kink_offsets(cop)
    estimate = 0.0

    def inner(w1: float) -> float:
        nonlocal estimate
        value, err = _quad(lambda w2: _density_factor(cop, w1 + w2), lo2, hi2, [k - w1 for k in kinks])
        estimate = max(estimate, err)
        return value

    value, err = _quad(inner, lo1, hi1, [k - lo2 for k in kinks] + [k - hi2 for k in kinks if math.isfinite(hi2)])
    if max(err, estimate) > _accept(cop):
        raise QuadratureError("density_mass did not converge", max(err, estimate))
    return value


def kernel_cdf(cop: ArchCopula, x, y):
    """Markov kernel K(x, [0, y]) of the last coordinate given the first m-1."""
    x = _point(x, cop.dim - 1)
    if not 0 <= y <= 1:
        raise ValueError(f"y must be in [0, 1], got {y}")
    if y == 1:
        return 1
    s = _phi_sum(cop, x)
    if s == 0 or s >= cop.gen.phi0:
        return 1
    z = s + phi(cop.gen, y)
    if cop.full:
        d = cop.gen.d
        num = truncated_power_integral(cop.measure, 0, d - 1, z)
        den = truncated_power_integral(cop.measure, 0, d - 1, s)
    else:
        num = psi_derivative(cop.gen, cop.dim - 1, z)
        den = psi_derivative(cop.gen, cop.dim - 1, s)
    ratio = num / den
    return ratio if is_exact(ratio) else min(max(ratio, 0.0), 1.0)


def kernel_cdf_array(cop: ArchCopula, points: np.ndarray, y: float) -> np.ndarray:
    """kernel_cdf at each row of an (n, m-1) array of conditioning points for one y."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != cop.dim - 1:
        raise ValueError(f"points must have shape (n, {cop.dim - 1}), got {points.shape}")
    if not 0 <= y <= 1:
        raise ValueError(f"y must be in [0, 1], got {y}")
    out = np.ones(points.shape[0])
    if y == 1:
        return out
    s = sum(phi_array(cop.gen, points[:, i]) for i in range(points.shape[1]))
    keep = (s > 0) & (s < float(cop.gen.phi0))
    if not keep.any():
        return out
    if y == 0:
        out[keep] = 0.0
        return out
    s = s[keep]
    z = s + float(phi(cop.gen, y))
    if cop.full:
        d = cop.gen.d
        num = truncated_power_integral(cop.measure, 0, d - 1, z)
        den = truncated_power_integral(cop.measure, 0, d - 1, s)
    else:
        num = psi_derivative(cop.gen, cop.dim - 1, z)
        den = psi_derivative(cop.gen, cop.dim - 1, s)
    num, den = np.asarray(num, dtype=float), np.asarray(den, dtype=float)
    out[keep] = np.clip(np.divide(num, den, out=np.ones_like(den), where=den != 0), 0.0, 1.0)
    return out


def level_function(cop: ArchCopula, t, x):
    """f^t(x): the y with C(x, y) = t, or 1 where x lies outside the t-upper cut."""
    x = _point(x, cop.dim - 1)
    if not 0 <= t <= 1:
        raise ValueError(f"t must be in [0, 1], got {t}")
    s = _phi_sum(cop, x)
    level = cop.gen.phi0 if t == 0 else phi(cop.gen, t)
    if s >= level and not (t > 0 and s == level):
        return 1
    if t == 0 and level == math.inf:
        return 0
    return psi(cop.gen, level - s)


def level_curve(cop: ArchCopula, t, grid) -> list[tuple]:
    """Tabulate f^t: rows (x, f^t(x)) for dim 2, (x1, x2, f^t(x1, x2)) for dim 3."""
    if cop.dim not in (2, 3):
        raise ValueError(f"level curves are tabulated for dim 2 and 3, got {cop.dim}")
    grid = [float(g) for g in grid]
    rows = []
    if cop.dim == 2:
        for x in grid:
            rows.append((x, float(level_function(cop, t, (x,)))))
    else:
        for x1, x2 in product(grid, grid):
            rows.append((x1, x2, float(level_function(cop, t, (x1, x2)))))
    return rows


def _jump_form(cop: ArchCopula, z):
    d = cop.gen.d
    jump = dminus_psi(cop.gen, z) - dplus_psi(cop.gen, z)
    return (-z) ** (d - 1) * jump / math.factorial(d - 1)


def level_mass(cop: ArchCopula, t) -> LevelSetReport:
    """mu_C of the level set {C = t}: the gamma-atom at 1/phi(t), cross-checked by the derivative jump."""
    _require_full(cop, 'level_mass')
    if not 0 <= t <= 1:
        raise ValueError(f"t must be in [0, 1], got {t}")
    if t == 1:
        return LevelSetReport(t, 0, 0, 'trivial')
    z = cop.gen.phi0 if t == 0 else phi(cop.gen, t)
    if z == math.inf:
        return LevelSetReport(t, 0, 0, 'trivial')
    location = cop.measure.reciprocal(z)
    mass = cop.measure.atom_mass(location)
    jump = _jump_form(cop, z)
    if abs(float(mass) - float(jump)) > LEVEL_MASS_TOLERANCE:
        raise ConsistencyError(f"level {t}: gamma-atom mass {float(mass):.12g} != derivative jump {float(jump):.12g}")
    return LevelSetReport(t, mass, location, 'gamma-atom', jump)


def band_mass(cop: ArchCopula, s1, s2):
    """mu_C of {s1 <= C <= s2} = gamma([1/phi(s1), 1/phi(s2)])."""
    _require_full(cop, 'band_mass')
    if not 0 <= s1 <= s2 <= 1:
        raise ValueError(f"need 0 <= s1 <= s2 <= 1, got s1={s1}, s2={s2}")
    if s1 == s2:
        return level_mass(cop, s1).mass
    lo = 0 if s1 == 0 else cop.measure.reciprocal(phi(cop.gen, s1))
    hi = cop.measure.reciprocal(phi(cop.gen, s2))
    return stieltjes_monomial(cop.measure, 0, Interval.closed(lo, hi))


def kendall_long_form(cop: ArchCopula, t):
    """F_K(t) from derivatives of psi at phi(t)."""
    _require_full(cop, 'kendall_long_form')
    d = cop.gen.d
    z = cop.gen.phi0 if t == 0 else phi(cop.gen, t)
    if z == math.inf:
        return 0
    total = dminus_psi(cop.gen, z) * (-1) ** (d - 1) * z ** (d - 1) / math.factorial(d - 1)
    for k in range(d - 1):
        total += psi_derivative(cop.gen, k, z) * (-1) ** k * z ** k / math.factorial(k)
    return total


def kendall_cdf(cop: ArchCopula, t, check: bool = True):
    """Kendall distribution function F_K(t) = gamma([0, 1/phi(t)]), checked against the long form."""
    _require_full(cop, 'kendall_cdf')
    if not 0 <= t <= 1:
        raise ValueError(f"t must be in [0, 1], got {t}")
    if t == 1:
        return 1
    z = cop.gen.phi0 if t == 0 else phi(cop.gen, t)
    value = measure_cdf(cop.measure, cop.measure.reciprocal(z))
    if check and z != math.inf:
        long = kendall_long_form(cop, t)
        if abs(float(value) - float(long)) > KENDALL_TOLERANCE:
            raise ConsistencyError(f"Kendall forms disagree at t={t}: {float(value):.12g} vs {float(long):.12g}")
    return value


def measure_cdf_from_kendall(cop: ArchCopula, z):
    """gamma([0, z]) recovered from the Kendall function: F_K(psi(1/z)), or 0 below 1/phi(0)."""
    _require_full(cop, 'measure_cdf_from_kendall')
    if z < 0:
        raise ValueError(f"z must be >= 0, got {z}")
    if z == math.inf:
        return 1
    if z == 0:
        return 0
    if z < cop.measure.left_endpoint:
        return 0
    return kendall_cdf(cop, psi(cop.gen, cop.measure.reciprocal(z)), check=False)


def _box(cop: ArchCopula, box) -> list[tuple]:
    box = [tuple(side) for side in box]
    if len(box) != cop.dim:
        raise ValueError(f"box must have {cop.dim} sides, got {len(box)}")
    for lo, hi in box:
        if not 0 <= lo <= hi <= 1:
            raise ValueError(f"box sides must satisfy 0 <= lo <= hi <= 1, got ({lo}, {hi})")
    return box


def box_mass_corners(cop: ArchCopula, box):
    """mu_C of the box by inclusion-exclusion of C over its corners."""
    box = _box(cop, box)
    total = 0
    for choice in product((0, 1), repeat=cop.dim):
        corner = tuple(side[c] for side, c in zip(box, choice))
        sign = (-1) ** (cop.dim - sum(choice))
        total += sign * cdf(cop, corner)
    return total


def _sum_density(s: float, corners: list[tuple[float, int]], n: int) -> float:
    """Density at s of the volume of {w in box : w_1 + ... + w_n = s}; corners at infinity are dropped."""
    scale = math.factorial(n - 1)
    return sum(sign * (s - c) ** (n - 1) for c, sign in corners if s > c) / scale


def box_mass(cop: ArchCopula, box) -> float:
    """mu_C of a box by disintegration: kernel of the last coordinate against the marginal law of the rest.

    With w_i = phi(x_i) the marginal density times the kernel becomes
    (-1)^n psi^(n)(w_1 + ... + w_n + phi(y)), n = m-1, so the n-fold integral
    collapses onto the sum S with the piecewise polynomial volume density of S
    over the w-box.
    """
    box = _box(cop, box)
    *xs, (y_lo, y_hi) = box
    if y_lo == y_hi or any(lo == hi for lo, hi in xs):
        return 0.0
    gen, n = cop.gen, cop.dim - 1
    w_sides = [(float(phi(gen, hi)), float(phi(gen, lo))) for lo, hi in xs]
    corners = []
    for choice in product((0, 1), repeat=n):
        c = sum(side[k] for side, k in zip(w_sides, choice))
        if math.isfinite(c):
            corners.append((c, (-1) ** sum(choice)))
    corners.sort()
    s_lo = sum(side[0] for side in w_sides)
    s_hi = sum(side[1] for side in w_sides)
    phi_hi = float(phi(gen, y_hi))
    phi_lo = float(phi(gen, y_lo))
    phi0 = float(gen.phi0)
    s_top = min(s_hi, phi0 - phi_hi) if math.isfinite(phi0) else s_hi
    sign = (-1) ** n

    def integrand(s: float) -> float:
        upper = float(_top_derivative(cop, s + phi_hi))
        lower = 0.0 if math.isinf(phi_lo) else float(_top_derivative(cop, s + phi_lo))
        return sign * (upper - lower) * _sum_density(s, corners, n)

    points = [c for c, _ in corners]
    points += [k - phi_hi for k in _kink_offsets(cop)]
    if math.isfinite(phi_lo):
        points += [k - phi_lo for k in _kink_offsets(cop)]
    value, err = _quad(integrand, s_lo, s_top, points)
    if err > _accept(cop):
        raise QuadratureError("box_mass did not converge", err)
    return min(max(value, 0.0), 1.0)
