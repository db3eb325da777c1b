"""
Williamson measures: finite Borel measures on [0, inf) with an explicit Lebesgue
decomposition.

A measure is stored structurally as atoms, density pieces and singular
self-similar components. Everything the copula layer needs reduces to truncated
moments  M_k(u) = integral over [0, u] of t^k d(gamma)(t),  which are closed form
on atoms and pieces (exact in rational arithmetic when the inputs are rational)
and computed by digit descent on singular components.
"""

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Literal, NamedTuple

import numpy as np

from scripts import self_similar

__all__ = [
    'KINDS',
    'Atom',
    'DensityPiece',
    'SingularComponent',
    'WilliamsonMeasure',
    'Interval',
    'LebesgueComponents',
    'SupportGaps',
    'MeasureError',
    'NormalizationError',
    'is_exact',
    'inverse',
    'cdf',
    'stieltjes_monomial',
    'resolution_bound',
    'truncated_power_integral',
    'normalize',
    'rescale',
    'mixture',
    'lebesgue_components',
    'pure_kind',
    'quantile',
    'moment_quantile',
    'support_gaps',
    'approximation_sequence',
    'field_distance',
    'full_support_measure',
    'dense_rational_points',
]

Real = int | float | Fraction
Part = Literal['abs', 'dis', 'sing'] | None

KINDS = ('discrete', 'abs', 'singular')

MASS_TOLERANCE = 1e-12
NORMALIZATION_TOLERANCE = 1e-9
NORMALIZE_BRACKET = (2.0 ** -60, 2.0 ** 60)
NORMALIZE_TOL = 1e-13
NORMALIZE_ITERATIONS = 400
MAX_DEGREE = 6
CHEBYSHEV_PROBES = 16
QUANTILE_ITERATIONS = 100
CANTOR_GAP_LEVELS = 4
APPROX_QUANTILE_FACTOR = 16
APPROX_SINGULAR_DEPTH = 16
DENSE_POINTS = 64
BETA_RIGHT_END = 8
SUPPORT_MERGE_TOL = 1e-12


class MeasureError(ValueError):
    """A measure violates one of its structural invariants."""


class NormalizationError(ValueError):
    """normalize could not bracket the scale c with psi(c) = 1/2."""


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def _integer_valued(e) -> bool:
    return is_exact(e) and Fraction(e).denominator == 1


def inverse(x):
    """1/x, kept rational for ints and Fractions."""
    if isinstance(x, int) and not isinstance(x, bool):
        return Fraction(1, x)
    return 1 / x


def _power(base, exponent):
    """base ** exponent, exact for rational base and integer exponent."""
    if _integer_valued(exponent):
        return base ** int(exponent)
    if base == 0:
        return 0.0
    return float(base) ** float(exponent)


@dataclass(frozen=True)
class Atom:
    location: Real
    mass: Real


@dataclass(frozen=True)
class DensityPiece:
    """Density  sum_j coeffs[j] * (t - origin)^(j + exponent)  on [start, end).

    origin defaults to start; exponent defaults to 0 (a polynomial in the local
    variable t - start). A negative exponent > -1 gives an integrable blow-up at
    the origin.
    """

    start: Real
    end: Real
    coeffs: tuple[Real, ...]
    exponent: Real = 0
    origin: Real | None = None

    def __post_init__(self):
        object.__setattr__(self, 'coeffs', tuple(self.coeffs))
        if self.origin is None:
            object.__setattr__(self, 'origin', self.start)
        if self.start < 0:
            raise MeasureError(f"density piece must lie in [0, inf), got start {self.start}")
        if not self.end > self.start or math.isinf(self.end):
            raise MeasureError(f"density piece needs finite end > start, got [{self.start}, {self.end})")
        if not 1 <= len(self.coeffs) <= MAX_DEGREE + 1:
            raise MeasureError(f"density degree must be <= {MAX_DEGREE}, got {len(self.coeffs) - 1}")
        if not self.exponent > -1:
            raise MeasureError(f"density exponent must be > -1, got {self.exponent}")
        if self.origin > self.start:
            raise MeasureError(f"density origin {self.origin} lies right of start {self.start}")
        self._check_nonnegative()

    @cached_property
    def exact(self) -> bool:
        return (all(is_exact(v) for v in (self.start, self.end, self.origin))
                and all(is_exact(c) for c in self.coeffs)
                and _integer_valued(self.exponent))

    @cached_property
    def _floats(self) -> tuple[float, float, tuple[float, ...]]:
        return float(self.origin), float(self.exponent), tuple(float(c) for c in self.coeffs)

    def value(self, t: float) -> float:
        if not self.start <= t < self.end:
            return 0.0
        origin, exponent, coeffs = self._floats
        x = t - origin
        if x == 0 and exponent < 0:
            return math.inf
        return sum(c * x ** (j + exponent) for j, c in enumerate(coeffs))

    def _check_nonnegative(self) -> None:
        start, end = float(self.start), float(self.end)
        probes = [start + (end - start) * (1 - math.cos((2 * i + 1) * math.pi / (2 * CHEBYSHEV_PROBES))) / 2
                  for i in range(CHEBYSHEV_PROBES)]
        if float(self.exponent) >= 0 or float(self.origin) < start:
            probes.append(start)
        scale = max(abs(float(c)) for c in self.coeffs)
        origin, exponent, coeffs = float(self.origin), float(self.exponent), [float(c) for c in self.coeffs]
        probes.append(end)
        for t in probes:
            x = t - origin
            if x == 0 and exponent != 0:
                continue
            value = sum(c * x ** (j + exponent) for j, c in enumerate(coeffs))
            if value < -1e-12 * max(scale, 1.0):
                raise MeasureError(f"density on [{self.start}, {self.end}) is negative at t={t:.6g}")

    def _primitive(self, k: int, t, exact: bool):
        if exact:
            origin, exponent, coeffs = self.origin, self.exponent, self.coeffs
        else:
            origin, exponent, coeffs = self._floats
            t = float(t)
        x = t - origin
        total = Fraction(0) if exact else 0.0
        for j, c in enumerate(coeffs):
            if c == 0:
                continue
            for i in range(k + 1):
                e = i + j + exponent + 1
                total += c * math.comb(k, i) * origin ** (k - i) * _power(x, e) / e
        return total

    def moment(self, k: int, upper, exact: bool = False):
        """Integral of t^k times the density over [start, min(upper, end))."""
        if upper <= self.start:
            return Fraction(0) if exact else 0.0
        top = self.end if upper >= self.end else upper
        return self._primitive(k, top, exact) - self._primitive(k, self.start, exact)

    def moment_array(self, k: int, upper: np.ndarray) -> np.ndarray:
        origin, exponent, coeffs = self._floats
        top = np.clip(upper, float(self.start), float(self.end))
        out = np.zeros(np.shape(upper))
        for t, sign in ((top, 1.0), (np.full(np.shape(upper), float(self.start)), -1.0)):
            x = np.maximum(t - origin, 0.0)
            for j, c in enumerate(coeffs):
                if c == 0:
                    continue
                for i in range(k + 1):
                    e = i + j + exponent + 1
                    out += sign * c * math.comb(k, i) * origin ** (k - i) * np.power(x, e) / e
        return out

    @cached_property
    def mass(self) -> Real:
        return self.moment(0, self.end, self.exact)


@dataclass(frozen=True)
class SingularComponent:
    """weight times a self-similar law carried onto [start, start + scale]."""

    weight: Real
    start: Real
    scale: Real
    family: str = 'cantor'
    depth: int = self_similar.DEFAULT_DEPTH
    p: Real | None = None

    def __post_init__(self):
        if not self.weight > 0:
            raise MeasureError(f"singular weight must be positive, got {self.weight}")
        if self.start < 0 or not self.scale > 0:
            raise MeasureError(f"singular carrier must be [u, u+s] with u >= 0, s > 0, got u={self.start}, s={self.scale}")
        if self.family not in self_similar.FAMILIES:
            raise MeasureError(f"Unknown singular family '{self.family}'. Available: {', '.join(self_similar.FAMILIES)}")

    @cached_property
    def law(self) -> self_similar.SelfSimilarLaw:
        return self_similar.make_law(self.family, self.depth, self.p)

    @property
    def end(self) -> Real:
        return self.start + self.scale


@dataclass(frozen=True)
class Interval:
    lo: Real
    hi: Real
    lo_closed: bool = False
    hi_closed: bool = True

    @classmethod
    def closed(cls, lo: Real, hi: Real) -> 'Interval':
        return cls(lo, hi, True, True)

    @classmethod
    def open(cls, lo: Real, hi: Real) -> 'Interval':
        return cls(lo, hi, False, False)


class LebesgueComponents(NamedTuple):
    abs: Real
    dis: Real
    sing: Real


def _merge_atoms(atoms) -> tuple[Atom, ...]:
    totals: dict = {}
    for atom in atoms:
        if not atom.location > 0:
            raise MeasureError(f"atoms must sit in (0, inf), got location {atom.location}")
        if not atom.mass > 0:
            raise MeasureError(f"atom masses must be positive, got {atom.mass} at {atom.location}")
        totals[atom.location] = totals.get(atom.location, 0) + atom.mass
    return tuple(Atom(q, totals[q]) for q in sorted(totals))


@dataclass(frozen=True)
class WilliamsonMeasure:
    """Probability measure on (0, inf) tagged with the dimension d of its transform."""

    dimension: int
    atoms: tuple[Atom, ...] = ()
    pieces: tuple[DensityPiece, ...] = ()
    singular: tuple[SingularComponent, ...] = ()

    def __post_init__(self):
        if not isinstance(self.dimension, int) or self.dimension < 2:
            raise MeasureError(f"dimension must be an integer >= 2, got {self.dimension}")
        object.__setattr__(self, 'atoms', _merge_atoms(self.atoms))
        object.__setattr__(self, 'pieces', tuple(sorted(self.pieces, key=lambda p: p.start)))
        object.__setattr__(self, 'singular', tuple(self.singular))
        for left, right in zip(self.pieces, self.pieces[1:]):
            if left.end > right.start:
                raise MeasureError(f"density pieces overlap: [{left.start}, {left.end}) and [{right.start}, {right.end})")
        if abs(self.total_mass - 1) > MASS_TOLERANCE:
            raise MeasureError(f"total mass must be 1, got {float(self.total_mass):.15g}")

    @cached_property
    def total_mass(self) -> Real:
        return sum(lebesgue_components(self))

    @cached_property
    def exact(self) -> bool:
        return (not self.singular
                and all(is_exact(a.location) and is_exact(a.mass) for a in self.atoms)
                and all(p.exact for p in self.pieces))

    @cached_property
    def _atom_pairs(self) -> tuple[tuple[float, float], ...]:
        return tuple((float(a.location), float(a.mass)) for a in self.atoms)

    @cached_property
    def _atom_locations(self) -> np.ndarray:
        return np.array([q for q, _ in self._atom_pairs])

    @cached_property
    def _atom_masses(self) -> np.ndarray:
        return np.array([m for _, m in self._atom_pairs])

    @cached_property
    def _singular_groups(self) -> list[tuple[self_similar.SelfSimilarLaw, np.ndarray, np.ndarray, np.ndarray]]:
        groups: dict = {}
        for comp in self.singular:
            groups.setdefault(comp.law, []).append(comp)
        return [(law,
                 np.array([float(c.start) for c in comps]),
                 np.array([float(c.scale) for c in comps]),
                 np.array([float(c.weight) for c in comps]))
                for law, comps in groups.items()]

    @cached_property
    def left_endpoint(self) -> Real:
        candidates = [a.location for a in self.atoms]
        candidates += [p.start for p in self.pieces if p.mass > 0]
        candidates += [s.start for s in self.singular]
        return min(candidates)

    @cached_property
    def right_endpoint(self) -> Real:
        candidates = [a.location for a in self.atoms]
        candidates += [p.end for p in self.pieces if p.mass > 0]
        candidates += [s.end for s in self.singular]
        return max(candidates)

    @property
    def strict(self) -> bool:
        return self.left_endpoint == 0

    @cached_property
    def kinks(self) -> tuple[Real, ...]:
        """Points where truncated moments are not smooth: atoms, piece ends, carrier ends."""
        points = {a.location for a in self.atoms}
        for p in self.pieces:
            points.update((p.start, p.end))
        for s in self.singular:
            points.update((s.start, s.end))
        return tuple(sorted(e for e in points if e > 0))

    @cached_property
    def _reciprocals(self) -> dict:
        return {inverse(e): e for e in self.kinks}

    def reciprocal(self, z: Real) -> Real:
        """1/z, returning the stored kink exactly when z is the reciprocal of one."""
        if z == 0:
            return math.inf
        if z == math.inf:
            return 0
        hit = self._reciprocals.get(z)
        return hit if hit is not None else inverse(z)

    def atom_mass(self, q: Real) -> Real:
        for atom in self.atoms:
            if atom.location == q:
                return atom.mass
        return 0

    def density_at(self, t: float) -> float:
        return sum(p.value(t) for p in self.pieces)

    def partial_moment(self, k: int, upper, closed: bool = True, part: Part = None):
        """Integral of t^k over [0, upper] (closed) or [0, upper) against the measure or one part.

        Exact (Fraction) when the measure and upper are exact; ndarray upper is
        evaluated elementwise in floating point.
        """
        if isinstance(upper, np.ndarray):
            return self._partial_moment_array(k, upper, closed, part)
        exact = self.exact and is_exact(upper)
        if not exact:
            upper = float(upper)
        total = Fraction(0) if exact else 0.0
        if part in (None, 'dis'):
            pairs = ((a.location, a.mass) for a in self.atoms) if exact else self._atom_pairs
            for q, alpha in pairs:
                if q < upper or (closed and q == upper):
                    total += alpha * q ** k
                else:
                    break
        if part in (None, 'abs'):
            for piece in self.pieces:
                if upper <= piece.start:
                    break
                total += piece.moment(k, upper, exact)
        if part in (None, 'sing') and self.singular:
            total += float(self._partial_moment_array(k, np.array([upper]), closed, 'sing')[0])
        return total

    def _partial_moment_array(self, k: int, upper: np.ndarray, closed: bool, part: Part) -> np.ndarray:
        u = np.asarray(upper, dtype=float)
        out = np.zeros(u.shape)
        if part in (None, 'dis') and self.atoms:
            q = self._atom_locations
            cum = np.concatenate([[0.0], np.cumsum(self._atom_masses * q ** k)])
            out += cum[np.searchsorted(q, u, side='right' if closed else 'left')]
        if part in (None, 'abs'):
            for piece in self.pieces:
                out += piece.moment_array(k, u)
        if part in (None, 'sing'):
            flat = u.ravel()
            for law, starts, scales, weights in self._singular_groups:
                with np.errstate(invalid='ignore'):
                    xi = np.clip((flat[None, :] - starts[:, None]) / scales[:, None], 0.0, 1.0)
                xi = np.where(np.isinf(flat)[None, :], 1.0, xi)
                moments = law.partial_moments(xi.ravel(), k).reshape(k + 1, starts.size, flat.size)
                acc = np.zeros((starts.size, flat.size))
                for i in range(k + 1):
                    acc += (math.comb(k, i) * starts ** (k - i) * scales ** i)[:, None] * moments[i]
                out += (weights[:, None] * acc).sum(axis=0).reshape(u.shape)
        return out


def cdf(measure: WilliamsonMeasure, z):
    """Distribution function gamma([0, z])."""
    if not isinstance(z, np.ndarray) and z < 0:
        raise ValueError(f"cdf needs z >= 0, got {z}")
    return measure.partial_moment(0, z, closed=True)


def stieltjes_monomial(measure: WilliamsonMeasure, k: int, interval: Interval, part: Part = None):
    """Integral of t^k over the interval against the measure (or one Lebesgue part)."""
    if not 0 <= k <= 2 * (measure.dimension - 1):
        raise ValueError(f"k must be in [0, {2 * (measure.dimension - 1)}], got {k}")
    if interval.lo < 0 or interval.hi < interval.lo:
        raise ValueError(f"invalid interval [{interval.lo}, {interval.hi}]")
    upper = measure.partial_moment(k, interval.hi, closed=interval.hi_closed, part=part)
    lower = measure.partial_moment(k, interval.lo, closed=not interval.lo_closed, part=part)
    value = upper - lower
    return value if is_exact(value) else max(value, 0.0)


def resolution_bound(measure: WilliamsonMeasure, k: int = 0, interval: Interval | None = None) -> float:
    """Worst-case error the singular oracles add to a moment of order k."""
    bound = 0.0
    for comp in measure.singular:
        top = float(comp.end) if interval is None else min(float(comp.end), float(interval.hi))
        bound += float(comp.weight) * comp.law.resolution * max(top, 1.0) ** k
    return bound


def truncated_power_integral(measure: WilliamsonMeasure, power: int, shift: int, z,
                             closed: bool = True, part: Part = None):
    """Integral of t^shift * (1 - t z)_+^power over t in (0, 1/z] (closed) or (0, 1/z).

    Expands (1 - tz)^power binomially, so every term is a truncated moment.
    """
    if isinstance(z, np.ndarray):
        z = np.asarray(z, dtype=float)
        with np.errstate(divide='ignore'):
            upper = np.where(z > 0, 1.0 / np.where(z > 0, z, 1.0), np.inf)
        total = np.zeros(z.shape)
        finite_z = np.where(np.isinf(z), 0.0, z)
        for j in range(power + 1):
            moment = measure.partial_moment(shift + j, upper, closed, part)
            total += math.comb(power, j) * (-finite_z) ** j * moment
        return np.where(np.isinf(z), 0.0, total)
    if z == math.inf:
        return 0.0
    if z == 0:
        return measure.partial_moment(shift, math.inf, closed, part)
    upper = measure.reciprocal(z)
    total = 0
    for j in range(power + 1):
        total += math.comb(power, j) * (-z) ** j * measure.partial_moment(shift + j, upper, closed, part)
    return total


def _transform_at(measure: WilliamsonMeasure, c):
    return truncated_power_integral(measure, measure.dimension - 1, 0, c)


def normalize(measure: WilliamsonMeasure) -> WilliamsonMeasure:
    """Push the measure forward under t -> c t so that its transform hits 1/2 at z = 1."""
    half = Fraction(1, 2)
    if abs(_transform_at(measure, 1) - half) <= NORMALIZE_TOL:
        return measure
    lo, hi = NORMALIZE_BRACKET
    if _transform_at(measure, hi) > 0.5:
        raise NormalizationError(f"psi stays above 1/2 up to z = {hi:g}; mass too concentrated near 0")
    if _transform_at(measure, lo) < 0.5:
        raise NormalizationError(f"psi drops below 1/2 before z = {lo:g}; mass too far from 0")
    for _ in range(NORMALIZE_ITERATIONS):
        mid = math.sqrt(lo * hi) if hi > 4 * lo else 0.5 * (lo + hi)
        if _transform_at(measure, mid) > 0.5:
            lo = mid
        else:
            hi = mid
        if hi - lo <= NORMALIZE_TOL * max(1.0, lo):
            break
    scale = 0.5 * (lo + hi)
    if measure.exact:
        candidate = Fraction(scale).limit_denominator(1 << 20)
        if _transform_at(measure, candidate) == half:
            scale = candidate
    return rescale(measure, scale)


def rescale(measure: WilliamsonMeasure, c: Real) -> WilliamsonMeasure:
    """Image of the measure under t -> c t."""
    atoms = tuple(Atom(c * a.location, a.mass) for a in measure.atoms)
    pieces = tuple(
        DensityPiece(c * p.start, c * p.end,
                     tuple(coef * _power(c, -(j + p.exponent) - 1) for j, coef in enumerate(p.coeffs)),
                     p.exponent, c * p.origin)
        for p in measure.pieces
    )
    singular = tuple(replace(s, start=c * s.start, scale=c * s.scale) for s in measure.singular)
    return WilliamsonMeasure(measure.dimension, atoms, pieces, singular)


def _fields(measure: WilliamsonMeasure) -> list[float]:
    values = [float(v) for a in measure.atoms for v in (a.location, a.mass)]
    for p in measure.pieces:
        origin = p.start if p.origin is None else p.origin
        values += [float(p.start), float(p.end), float(p.exponent), float(origin)]
        values += [float(c) for c in p.coeffs]
    values += [float(v) for s in measure.singular for v in (s.weight, s.start, s.scale)]
    return values


def field_distance(a: WilliamsonMeasure, b: WilliamsonMeasure) -> float:
    """Largest relative difference between matching atoms, piece data and singular carriers.

    inf when the two measures are not built from the same components.
    """
    shape = (a.dimension, len(a.atoms), [len(p.coeffs) for p in a.pieces], [s.family for s in a.singular])
    if shape != (b.dimension, len(b.atoms), [len(p.coeffs) for p in b.pieces], [s.family for s in b.singular]):
        return math.inf
    return max((abs(x - y) / max(1.0, abs(x), abs(y)) for x, y in zip(_fields(a), _fields(b))), default=0.0)


def _shift_polynomial(coeffs, origin, new_origin) -> list:
    """Re-expand sum_j c_j (t - origin)^j around new_origin."""
    delta = new_origin - origin
    return [sum(coeffs[j] * math.comb(j, i) * delta ** (j - i) for j in range(i, len(coeffs)))
            for i in range(len(coeffs))]


def _merge_pieces(pieces) -> tuple[DensityPiece, ...]:
    pieces = sorted(pieces, key=lambda p: p.start)
    if all(a.end <= b.start for a, b in zip(pieces, pieces[1:])):
        return tuple(pieces)
    cuts = sorted({p.start for p in pieces} | {p.end for p in pieces})
    merged = []
    for lo, hi in zip(cuts, cuts[1:]):
        covering = [p for p in pieces if p.start <= lo and p.end >= hi]
        if not covering:
            continue
        if len(covering) == 1:
            merged.append(replace(covering[0], start=lo, end=hi))
            continue
        if any(p.exponent != 0 for p in covering):
            raise MeasureError(f"cannot merge overlapping density pieces with non-zero exponent on [{lo}, {hi})")
        coeffs = [0] * (MAX_DEGREE + 1)
        for p in covering:
            for i, c in enumerate(_shift_polynomial(p.coeffs, p.origin, lo)):
                coeffs[i] += c
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs.pop()
        merged.append(DensityPiece(lo, hi, tuple(coeffs)))
    return tuple(merged)


def mixture(weighted: list[tuple[Real, WilliamsonMeasure]]) -> WilliamsonMeasure:
    """Convex combination sum_i w_i gamma_i of measures of equal dimension."""
    weighted = [(w, m) for w, m in weighted if w != 0]
    dims = {m.dimension for _, m in weighted}
    if len(dims) != 1:
        raise MeasureError(f"mixture needs a single dimension, got {sorted(dims)}")
    atoms, pieces, singular = [], [], []
    for w, m in weighted:
        atoms += [Atom(a.location, w * a.mass) for a in m.atoms]
        pieces += [replace(p, coeffs=tuple(w * c for c in p.coeffs)) for p in m.pieces]
        singular += [replace(s, weight=w * s.weight) for s in m.singular]
    return WilliamsonMeasure(dims.pop(), tuple(atoms), _merge_pieces(pieces), tuple(singular))


def lebesgue_components(measure: WilliamsonMeasure) -> LebesgueComponents:
    return LebesgueComponents(
        abs=sum((p.mass for p in measure.pieces), 0),
        dis=sum((a.mass for a in measure.atoms), 0),
        sing=sum((s.weight for s in measure.singular), 0),
    )


def pure_kind(measure: WilliamsonMeasure) -> str | None:
    """'abs', 'dis' or 'sing' when the measure has a single Lebesgue part, else None."""
    present = [name for name, mass in lebesgue_components(measure)._asdict().items() if mass > 0]
    return present[0] if len(present) == 1 else None


def moment_quantile(measure: WilliamsonMeasure, k: int, targets) -> np.ndarray:
    """Smallest u with M_k(u) >= target, elementwise; atoms are hit exactly."""
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    lo = np.zeros(targets.shape)
    hi = np.full(targets.shape, float(measure.right_endpoint))
    for _ in range(QUANTILE_ITERATIONS):
        mid = 0.5 * (lo + hi)
        reached = measure.partial_moment(k, mid) >= targets
        hi = np.where(reached, mid, hi)
        lo = np.where(reached, lo, mid)
    result = hi
    if measure.atoms:
        q = measure._atom_locations
        closed = measure.partial_moment(k, q, closed=True)
        opened = measure.partial_moment(k, q, closed=False)
        j = np.minimum(np.searchsorted(closed, targets, side='left'), q.size - 1)
        hit = (opened[j] < targets) & (targets <= closed[j])
        result = np.where(hit, q[j], result)
    return result


def quantile(measure: WilliamsonMeasure, p) -> np.ndarray:
    """Generalized inverse of the distribution function."""
    return moment_quantile(measure, 0, p)


@dataclass(frozen=True)
class SupportGaps:
    gaps: tuple[tuple[Real, Real], ...]
    components: tuple[tuple[Real, Real], ...]
    left: Real
    right: Real
    strict: bool

    @property
    def full_support(self) -> bool:
        return self.strict and not self.gaps

    @property
    def max_gap(self) -> float:
        return max((float(hi - lo) for lo, hi in self.gaps), default=0.0)


def support_gaps(measure: WilliamsonMeasure) -> SupportGaps:
    """Maximal open zero-mass intervals inside [0, right support endpoint]."""
    pieces = [(a.location, a.location) for a in measure.atoms]
    pieces += [(p.start, p.end) for p in measure.pieces if p.mass > 0]
    for comp in measure.singular:
        holes = comp.law.gaps(CANTOR_GAP_LEVELS)
        if not holes:
            pieces.append((comp.start, comp.end))
            continue
        edges = [Fraction(0)] + [e for hole in holes for e in hole] + [Fraction(1)]
        for a, b in zip(edges[::2], edges[1::2]):
            pieces.append((comp.start + comp.scale * a, comp.start + comp.scale * b))
    pieces.sort()
    components: list[tuple[Real, Real]] = []
    for lo, hi in pieces:
        if components and lo - components[-1][1] <= SUPPORT_MERGE_TOL * max(1, abs(components[-1][1])):
            components[-1] = (components[-1][0], max(hi, components[-1][1]))
        else:
            components.append((lo, hi))
    gaps = []
    if components[0][0] > 0:
        gaps.append((0, components[0][0]))
    gaps += [(a[1], b[0]) for a, b in zip(components, components[1:])]
    return SupportGaps(tuple(gaps), tuple(components), measure.left_endpoint, measure.right_endpoint,
                       measure.strict)


def dense_rational_points(count: int) -> list[Fraction]:
    """First count positive rationals in breadth-first Stern-Brocot order: 1, 1/2, 2, 1/3, 2/3, ..."""
    points: list[Fraction] = []
    level = [((0, 1), (1, 0))]
    while len(points) < count:
        children = []
        for (a, b), (c, e) in level:
            node = (a + c, b + e)
            points.append(Fraction(*node))
            children += [((a, b), node), (node, (c, e))]
        level = children
    return points[:count]


@lru_cache(maxsize=None)
def full_support_measure(dimension: int, kind: str) -> WilliamsonMeasure:
    """Normalized measure of the given kind whose support has no gaps in its hull (or is dense)."""
    if kind == 'discrete':
        weights = [Fraction(1, 2 ** (i + 1)) for i in range(DENSE_POINTS)]
        total = sum(weights)
        atoms = tuple(Atom(q, w / total) for q, w in zip(dense_rational_points(DENSE_POINTS), weights))
        return normalize(WilliamsonMeasure(dimension, atoms))
    if kind == 'abs':
        # linear interpolation of 2^-t on each unit cell
        total = sum(3 * Fraction(1, 2 ** (j + 2)) for j in range(BETA_RIGHT_END))
        pieces = tuple(DensityPiece(j, j + 1, (Fraction(1, 2 ** j) / total, -Fraction(1, 2 ** (j + 1)) / total))
                       for j in range(BETA_RIGHT_END))
        return normalize(WilliamsonMeasure(dimension, pieces=pieces))
    if kind == 'singular':
        total = sum(Fraction(1, 2 ** j) for j in range(BETA_RIGHT_END))
        singular = tuple(SingularComponent(Fraction(1, 2 ** j) / total, j, 1, 'salem', 64)
                         for j in range(BETA_RIGHT_END))
        return normalize(WilliamsonMeasure(dimension, singular=singular))
    raise ValueError(f"Unknown kind '{kind}'. Available: {', '.join(KINDS)}")


def _histogram_pieces(start, end, masses) -> list[DensityPiece]:
    width = (end - start) / len(masses)
    return [DensityPiece(start + i * width, start + (i + 1) * width, (m / width,))
            for i, m in enumerate(masses) if m > 0]


def _cell_masses(piece: DensityPiece, cells: int) -> list:
    edges = [piece.start + (piece.end - piece.start) * Fraction(i, cells) for i in range(cells + 1)]
    return [piece.moment(0, hi, piece.exact) - piece.moment(0, lo, piece.exact) for lo, hi in zip(edges, edges[1:])]


def _approximant(measure: WilliamsonMeasure, kind: str, n: int) -> WilliamsonMeasure:
    d = measure.dimension
    if kind == 'discrete':
        levels = APPROX_QUANTILE_FACTOR * n
        locations = quantile(measure, (np.arange(levels) + 0.5) / levels)
        return WilliamsonMeasure(d, tuple(Atom(float(q), Fraction(1, levels)) for q in locations))
    if kind == 'abs':
        width = Fraction(1, n)
        pieces = [DensityPiece(a.location, a.location + width, (a.mass / width,)) for a in measure.atoms]
        for p in measure.pieces:
            pieces += [p] if p.exponent == 0 else _histogram_pieces(p.start, p.end, _cell_masses(p, n))
        for s in measure.singular:
            level = max(1, math.ceil(math.log(max(float(s.scale) * n, 1.0)) / math.log(s.law.base)))
            for a, b, mass in s.law.cells(level):
                lo, hi = s.start + s.scale * a, s.start + s.scale * b
                pieces.append(DensityPiece(lo, hi, (s.weight * mass / (hi - lo),)))
        return WilliamsonMeasure(d, pieces=_merge_pieces(pieces))
    if kind == 'singular':
        singular = [SingularComponent(a.mass, a.location, Fraction(1, n), 'cantor', APPROX_SINGULAR_DEPTH)
                    for a in measure.atoms]
        for p in measure.pieces:
            width = (p.end - p.start) / n
            for i, mass in enumerate(_cell_masses(p, n)):
                if mass > 0:
                    singular.append(SingularComponent(mass, p.start + i * width, width, 'cantor', APPROX_SINGULAR_DEPTH))
        singular += list(measure.singular)
        return WilliamsonMeasure(d, singular=tuple(singular))
    raise ValueError(f"Unknown kind '{kind}'. Available: {', '.join(KINDS)}")


def approximation_sequence(measure: WilliamsonMeasure, kind: str, n: int) -> WilliamsonMeasure:
    """n-th purely `kind` approximant: (1 - 1/n) gamma_n + (1/n) beta, renormalized."""
    if kind not in KINDS:
        raise ValueError(f"Unknown kind '{kind}'. Available: {', '.join(KINDS)}")
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    weight = Fraction(1, n)
    beta = full_support_measure(measure.dimension, kind)
    return normalize(mixture([(1 - weight, _approximant(measure, kind, n)), (weight, beta)]))
