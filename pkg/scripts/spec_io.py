"""
Measure spec files: parse JSON/YAML specs into WilliamsonMeasure and back.

Spec layout:

    {
      "dimension": 3,
      "atoms":    [{"q": "1/8", "mass": "32/49"}, ...],
      "density":  [{"from": 1, "to": 2, "coeffs": ["1/9"], "exponent": 0}, ...],
      "singular": [{"weight": 1, "carrier": [0, 1], "family": "cantor", "depth": 24}, ...],
      "normalize": false
    }

Numbers may be ints, floats or "p/q" strings; strings are parsed exactly into
Fractions so values like 225/392 survive a round trip untouched.
"""

import json
from fractions import Fraction
from pathlib import Path

import yaml

from scripts.measure_model import (
    Atom,
    DensityPiece,
    MeasureError,
    SingularComponent,
    WilliamsonMeasure,
    normalize,
)
from scripts import self_similar

__all__ = [
    'MEASURES_DIR',
    'MeasureSpecError',
    'parse_number',
    'format_number',
    'measure_from_dict',
    'measure_to_dict',
    'load_measure',
    'dump_measure',
    'canonical_json',
    'bundled_measures',
]

MEASURES_DIR = Path(__file__).resolve().parent.parent / 'measures'

SPEC_KEYS = {'dimension', 'atoms', 'density', 'singular', 'normalize', 'name', 'description'}


class MeasureSpecError(ValueError):
    """Malformed measure spec; `location` points at the offending entry."""

    def __init__(self, location: str, message: str):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


def parse_number(value, location: str = ''):
    """int, float or "p/q" string -> int | float | Fraction."""
    if isinstance(value, bool):
        raise MeasureSpecError(location, f"expected a number, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        text = value.strip()
        try:
            number = Fraction(text)
        except (ValueError, ZeroDivisionError):
            raise MeasureSpecError(location, f"cannot parse number {value!r}") from None
        return number.numerator if number.denominator == 1 and '.' not in text else number
    raise MeasureSpecError(location, f"expected a number, got {type(value).__name__}")


def format_number(value):
    """Inverse of parse_number: Fractions become "p/q" strings."""
    if isinstance(value, Fraction):
        return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"
    return value


def _entries(data: dict, key: str) -> list:
    entries = data.get(key, [])
    if not isinstance(entries, list):
        raise MeasureSpecError(key, f"expected a list, got {type(entries).__name__}")
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise MeasureSpecError(f"{key}[{i}]", f"expected an object, got {type(entry).__name__}")
    return entries


def _require(entry: dict, key: str, location: str):
    if key not in entry:
        raise MeasureSpecError(location, f"missing key '{key}'")
    return entry[key]


def measure_from_dict(data: dict, dimension: int | None = None) -> WilliamsonMeasure:
    """Build a measure from a parsed spec; `dimension` overrides the spec's value."""
    if not isinstance(data, dict):
        raise MeasureSpecError('', f"spec must be an object, got {type(data).__name__}")
    unknown = set(data) - SPEC_KEYS
    if unknown:
        raise MeasureSpecError(sorted(unknown)[0], f"unknown key. Allowed: {', '.join(sorted(SPEC_KEYS))}")

    d = dimension if dimension is not None else _require(data, 'dimension', 'dimension')
    if isinstance(d, bool) or not isinstance(d, int) or d < 2:
        raise MeasureSpecError('dimension', f"must be an integer >= 2, got {d!r}")

    atoms = []
    for i, entry in enumerate(_entries(data, 'atoms')):
        loc = f"atoms[{i}]"
        atoms.append(Atom(parse_number(_require(entry, 'q', loc), f"{loc}.q"),
                          parse_number(_require(entry, 'mass', loc), f"{loc}.mass")))

    pieces = []
    for i, entry in enumerate(_entries(data, 'density')):
        loc = f"density[{i}]"
        coeffs = _require(entry, 'coeffs', loc)
        if not isinstance(coeffs, list) or not coeffs:
            raise MeasureSpecError(f"{loc}.coeffs", "expected a non-empty list")
        origin = entry.get('origin')
        try:
            pieces.append(DensityPiece(
                parse_number(_require(entry, 'from', loc), f"{loc}.from"),
                parse_number(_require(entry, 'to', loc), f"{loc}.to"),
                tuple(parse_number(c, f"{loc}.coeffs[{j}]") for j, c in enumerate(coeffs)),
                parse_number(entry.get('exponent', 0), f"{loc}.exponent"),
                None if origin is None else parse_number(origin, f"{loc}.origin"),
            ))
        except MeasureError as e:
            raise MeasureSpecError(loc, str(e)) from None

    singular = []
    for i, entry in enumerate(_entries(data, 'singular')):
        loc = f"singular[{i}]"
        carrier = _require(entry, 'carrier', loc)
        if not isinstance(carrier, list) or len(carrier) != 2:
            raise MeasureSpecError(f"{loc}.carrier", "expected [u, s]")
        family = entry.get('family', 'cantor')
        depth = entry.get('depth', self_similar.DEFAULT_DEPTH)
        if isinstance(depth, bool) or not isinstance(depth, int) or depth < 1:
            raise MeasureSpecError(f"{loc}.depth", f"must be a positive integer, got {depth!r}")
        p = entry.get('p')
        try:
            singular.append(SingularComponent(
                parse_number(_require(entry, 'weight', loc), f"{loc}.weight"),
                parse_number(carrier[0], f"{loc}.carrier[0]"),
                parse_number(carrier[1], f"{loc}.carrier[1]"),
                family,
                depth,
                None if p is None else parse_number(p, f"{loc}.p"),
            ))
        except (MeasureError, ValueError) as e:
            raise MeasureSpecError(loc, str(e)) from None

    try:
        measure = WilliamsonMeasure(d, tuple(atoms), tuple(pieces), tuple(singular))
    except MeasureError as e:
        raise MeasureSpecError('', str(e)) from None
    return normalize(measure) if data.get('normalize', False) else measure


def measure_to_dict(measure: WilliamsonMeasure) -> dict:
    data: dict = {'dimension': measure.dimension}
    if measure.atoms:
        data['atoms'] = [{'q': format_number(a.location), 'mass': format_number(a.mass)} for a in measure.atoms]
    if measure.pieces:
        data['density'] = []
        for p in measure.pieces:
            entry = {'from': format_number(p.start), 'to': format_number(p.end),
                     'coeffs': [format_number(c) for c in p.coeffs]}
            if p.exponent != 0:
                entry['exponent'] = format_number(p.exponent)
            if p.origin != p.start:
                entry['origin'] = format_number(p.origin)
            data['density'].append(entry)
    if measure.singular:
        data['singular'] = []
        for s in measure.singular:
            entry = {'weight': format_number(s.weight),
                     'carrier': [format_number(s.start), format_number(s.scale)],
                     'family': s.family, 'depth': s.depth}
            if s.p is not None:
                entry['p'] = format_number(s.p)
            data['singular'].append(entry)
    return data


def _resolve(spec: str | Path) -> Path:
    path = Path(spec)
    if path.exists():
        return path
    bundled = MEASURES_DIR / f"{spec}.json"
    if bundled.exists():
        return bundled
    raise MeasureSpecError('', f"no spec file '{spec}' and no bundled measure of that name. "
                               f"Bundled: {', '.join(bundled_measures())}")


def load_measure(spec: str | Path, dimension: int | None = None) -> WilliamsonMeasure:
    """Load a spec from a JSON/YAML path or a bundled measure name."""
    path = _resolve(spec)
    try:
        with open(path) as f:
            data = yaml.safe_load(f) if path.suffix in ('.yaml', '.yml') else json.load(f)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise MeasureSpecError(str(path), f"cannot parse file: {e}") from None
    return measure_from_dict(data, dimension)


def dump_measure(measure: WilliamsonMeasure, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        if path.suffix in ('.yaml', '.yml'):
            yaml.dump(measure_to_dict(measure), f, default_flow_style=False, sort_keys=False)
        else:
            json.dump(measure_to_dict(measure), f, indent=2)
            f.write('\n')


def canonical_json(measure: WilliamsonMeasure) -> str:
    """Key-sorted compact JSON; the input of measure hashes."""
    return json.dumps(measure_to_dict(measure), sort_keys=True, separators=(',', ':'))


def bundled_measures() -> list[str]:
    if not MEASURES_DIR.exists():
        return []
    return sorted(p.stem for p in MEASURES_DIR.glob('*.json'))
