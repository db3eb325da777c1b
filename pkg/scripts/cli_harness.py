#!/usr/bin/env python3
"""
Batch entry point for Williamson measures and their Archimedean copulas.

Usage:
    uv run scripts/cli_harness.py <subcommand> --spec SPEC [--d D] [--out PATH] [--seed N] [--n N] [--grid G]

Subcommands:
    transform   - psi and its one-sided top derivatives on a z grid (or the measure CDF with --what cdf)
    eval        - C at the given points
    kendall     - Kendall distribution function, gamma form and derivative-sum form
    levelmass   - mass of the level set {C = t}
    bandmass    - mass of the band {s1 <= C <= s2}
    levelcurve  - level function f^t tabulated on a grid (d = 2 or 3)
    decompose   - abs/dis/sing masses of mu_C plus the support report
    nondiff     - non-differentiability certificates at a point x
    sample      - exact samples (radial or conditional)
    histogram   - 2-D and marginal histograms of a sample
    approx      - d-infinity trace of discrete/abs/singular approximation sequences
    verify      - acceptance suite over the bundled measures

Options:
    --spec SPEC   - measure spec (JSON/YAML path or bundled name, e.g. two_atom)
    --d D         - override the spec's dimension
    --out PATH    - write CSV/JSON to PATH and record a run folder under out/runs/
    --seed N      - seed for Monte-Carlo work (default: WILLIAMSON_SEED or defaults.yaml)
    --n N         - Monte-Carlo size
    --grid G      - grid resolution
    --workers N   - concurrent sampling chunks

Examples:
    uv run scripts/cli_harness.py transform --spec lower_frechet --grid 8
    uv run scripts/cli_harness.py levelmass --spec two_atom --t 0
    uv run scripts/cli_harness.py decompose --spec atoms_and_density --n 20000
    uv run scripts/cli_harness.py sample --spec two_atom --n 1000 --out samples.csv
    uv run scripts/cli_harness.py verify

Exit codes: 0 success/pass, 1 failed checks or numeric failure, 2 input error.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import yaml
from dotenv import load_dotenv

# Add parent directory to path so we can import from scripts package
sys.path.insert(0, str(Path(__file__).parent.parent))

from scripts import versioning
from scripts.copula_core import (
    ArchCopula,
    ConsistencyError,
    QuadratureError,
    band_mass,
    cdf,
    kendall_cdf,
    kendall_long_form,
    level_curve,
    level_mass,
)
from scripts.decomposition import component_masses, support_report
from scripts.derivative_lab import FiniteDifferenceError, certify, nondiff_points
from scripts.generator import Generator, dminus_psi, dplus_psi, phi_array, psi
from scripts.measure_model import KINDS, approximation_sequence, cdf as measure_cdf
from scripts.sampler import METHODS, histogram, sample
from scripts.spec_io import MeasureSpecError, format_number, load_measure, parse_number

# ANSI colors
GREEN = '\033[92m'
RED = '\033[91m'
CYAN = '\033[36m'
RESET = '\033[0m'

REPO_ROOT = Path(__file__).resolve().parent.parent
DEFAULTS_PATH = REPO_ROOT / 'defaults.yaml'

SUBCOMMANDS = ('transform', 'eval', 'kendall', 'levelmass', 'bandmass', 'levelcurve', 'decompose',
               'nondiff', 'sample', 'histogram', 'approx', 'verify')
NO_SPEC = ('verify',)
TRANSFORM_ZMAX = 8.0
DEFAULT_BINS = 32


def success(msg, file=sys.stdout):
    print(f"{GREEN}✓{RESET} {msg}", file=file)


def error(msg, file=sys.stderr):
    print(f"{RED}✗{RESET} {msg}", file=file)


def info(msg, file=sys.stdout):
    print(f"{CYAN}›{RESET} {msg}", file=file)


def load_defaults(path: Path = DEFAULTS_PATH) -> dict:
    if not path.exists():
        return {}
    with open(path) as f:
        return yaml.safe_load(f) or {}


def default_dinf_grid(d: int, defaults: dict | None = None) -> int:
    """d-infinity grid for dimension d: 256 for d = 2, 64 for d = 3, 32 beyond, unless overridden."""
    table = {int(k): int(v) for k, v in ((defaults or {}).get('dinf_grid') or {2: 256, 3: 64, 4: 32}).items()}
    eligible = [k for k in table if k <= d]
    return table[max(eligible)] if eligible else table[min(table)]


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    spec: str | None = None
    d: int | None = None
    out: Path | None = None
    seed: int = 0
    n: int = 100000
    grid: int | None = None
    workers: int = 4
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise ValueError(f"Unknown subcommand '{self.subcommand}'. Available: {', '.join(SUBCOMMANDS)}")
        if self.d is not None and self.d < 2:
            raise ValueError(f"dimension must be >= 2, got {self.d}")
        if self.n < 1:
            raise ValueError(f"MC size must be >= 1, got {self.n}")
        if self.grid is not None and self.grid < 2:
            raise ValueError(f"grid resolution must be >= 2, got {self.grid}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.spec is None and self.subcommand not in NO_SPEC:
            raise ValueError(f"'{self.subcommand}' needs --spec")


@dataclass(frozen=True)
class Check:
    name: str
    expected: object
    got: object
    tolerance: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            'name': self.name,
            'expected': _json_value(self.expected),
            'got': _json_value(self.got),
            'tolerance': self.tolerance,
            'pass': self.passed,
        }


@dataclass
class VerificationReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, expected, got, tolerance: float = 0.0) -> Check:
        """Numeric check |got - expected| <= tolerance (exact equality when tolerance is 0)."""
        if tolerance == 0:
            passed = got == expected
        else:
            passed = bool(abs(float(got) - float(expected)) <= tolerance)
        check = Check(name, expected, got, tolerance, passed)
        self.checks.append(check)
        return check

    def require(self, name: str, condition: bool, got=None) -> Check:
        check = Check(name, True, bool(condition) if got is None else got, 0.0, bool(condition))
        self.checks.append(check)
        return check

    def as_dict(self) -> dict:
        return {'pass': self.passed, 'checks': [c.as_dict() for c in self.checks]}


@dataclass(frozen=True)
class DinfResult:
    value: float
    bound: float
    grid: int


def dinf_distance(cop_a: ArchCopula, cop_b: ArchCopula, grid: int) -> DinfResult:
    """Max of |A - B| over the midpoint grid ((i + 1/2)/g)^d.

    The true supremum exceeds the grid value by at most d/g (each copula is
    1-Lipschitz in every coordinate); that bound is reported alongside.
    """
    if cop_a.dim != cop_b.dim:
        raise ValueError(f"copulas must share a dimension, got {cop_a.dim} and {cop_b.dim}")
    if grid < 2:
        raise ValueError(f"grid must be >= 2, got {grid}")
    d = cop_a.dim
    points = (np.arange(grid) + 0.5) / grid

    def values(cop: ArchCopula) -> np.ndarray:
        w = phi_array(cop.gen, points)
        total = np.zeros((grid,) * d)
        for axis in range(d):
            shape = [1] * d
            shape[axis] = grid
            total = total + w.reshape(shape)
        return psi(cop.gen, total)

    value = float(np.max(np.abs(values(cop_a) - values(cop_b))))
    return DinfResult(value, d / grid, grid)


def _json_value(value):
    if isinstance(value, Fraction):
        return format_number(value)
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    return value


def _cell(value) -> str:
    if isinstance(value, Fraction):
        return format_number(value)
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def render_csv(header: list[str], rows, comment: str | None = None) -> str:
    buffer = io.StringIO()
    if comment:
        buffer.write(f"# {comment}\n")
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buffer.getvalue()


def render_json(data: dict) -> str:
    return json.dumps(_json_value(data), indent=2, sort_keys=True) + '\n'


def _progress_stream(config: RunConfig):
    # data goes to stdout when there is no --out
    return sys.stdout if config.out else sys.stderr


def _emit(config: RunConfig, text: str) -> None:
    if config.out is None:
        sys.stdout.write(text)
        return
    path = Path(config.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    success(f"Wrote {path}", file=_progress_stream(config))


def _copula(config: RunConfig) -> ArchCopula:
    return ArchCopula(Generator(load_measure(config.spec, config.d)))


def _parse_point(text: str, length: int | None = None) -> tuple:
    values = tuple(parse_number(v.strip(), 'point') for v in text.split(',') if v.strip())
    if length is not None and len(values) != length:
        raise ValueError(f"point must have {length} coordinates, got {len(values)}: '{text}'")
    return values


def cmd_transform(config: RunConfig) -> int:
    cop = _copula(config)
    points = config.grid or 256
    what = config.options.get('what', 'psi')
    zmax = config.options.get('zmax')
    if zmax is None:
        phi0 = float(cop.gen.phi0)
        zmax = 1.25 * phi0 if math.isfinite(phi0) else TRANSFORM_ZMAX
    if what == 'cdf':
        right = float(cop.measure.right_endpoint)
        t = np.linspace(0.0, 1.25 * right, points + 1)
        rows = zip(t, measure_cdf(cop.measure, t))
        _emit(config, render_csv(['t', 'F_gamma'], rows))
        return 0
    z = np.linspace(0.0, float(zmax), points + 1)
    rows = zip(z, psi(cop.gen, z), dminus_psi(cop.gen, z), dplus_psi(cop.gen, z))
    _emit(config, render_csv(['z', 'psi', 'dminus_psi', 'dplus_psi'], rows))
    return 0


def cmd_eval(config: RunConfig) -> int:
    cop = _copula(config)
    text = config.options.get('points')
    if not text:
        raise ValueError("eval needs --points 'x1,...,xd;...'")
    rows = []
    for chunk in text.split(';'):
        if chunk.strip():
            x = _parse_point(chunk, cop.dim)
            rows.append((*x, cdf(cop, x)))
    header = [f"x{i + 1}" for i in range(cop.dim)] + ['C']
    _emit(config, render_csv(header, rows))
    return 0


def cmd_kendall(config: RunConfig) -> int:
    cop = _copula(config)
    points = config.grid or 256
    rows = []
    for i in range(points + 1):
        t = Fraction(i, points)
        rows.append((float(t), kendall_cdf(cop, t, check=False), kendall_long_form(cop, t) if i < points else 1))
    _emit(config, render_csv(['t', 'kendall_gamma', 'kendall_long'], rows))
    return 0


def cmd_levelmass(config: RunConfig) -> int:
    cop = _copula(config)
    t = parse_number(config.options.get('t', '0'), '--t')
    report = level_mass(cop, t)
    _emit(config, render_json({
        't': report.t,
        'mass': report.mass,
        'location': report.location,
        'form': report.form,
        'jump_mass': report.jump_mass,
    }))
    return 0


def cmd_bandmass(config: RunConfig) -> int:
    cop = _copula(config)
    s1 = parse_number(config.options.get('s1', '0'), '--s1')
    s2 = parse_number(config.options.get('s2', '1'), '--s2')
    _emit(config, render_json({'s1': s1, 's2': s2, 'mass': band_mass(cop, s1, s2)}))
    return 0


def cmd_levelcurve(config: RunConfig) -> int:
    cop = _copula(config)
    t = parse_number(config.options.get('t', '1/2'), '--t')
    points = config.grid or 64
    grid = (np.arange(points) + 0.5) / points
    header = ['x', 'f_t'] if cop.dim == 2 else ['x1', 'x2', 'f_t']
    _emit(config, render_csv(header, level_curve(cop, t, grid)))
    return 0


def cmd_decompose(config: RunConfig) -> int:
    cop = _copula(config)
    masses = component_masses(cop, config.n, config.seed, config.workers)
    report = masses.as_dict()
    report['support'] = support_report(cop).as_dict()
    _emit(config, render_json(report))
    return 0


def cmd_nondiff(config: RunConfig) -> int:
    cop = _copula(config)
    text = config.options.get('x')
    x = _parse_point(text, cop.dim - 1) if text else tuple(Fraction(7, 10) for _ in range(cop.dim - 1))
    certificates = [certify(cop, x, entry) for entry in nondiff_points(cop, x)]
    header = ['x', 'y', 't', 'left', 'right', 'gap', 'fd_left', 'fd_right', 'verdict']
    rows = [[c.as_row()[key] for key in header] for c in certificates]
    _emit(config, render_csv(header, rows))
    return 0


def _measure_hash(cop: ArchCopula, seed: int) -> str:
    return versioning.compute_measure_hash(cop.measure, seed)


def cmd_sample(config: RunConfig) -> int:
    cop = _copula(config)
    method = config.options.get('method', 'radial')
    batch = sample(cop, config.n, config.seed, method, config.workers)
    header = [f"u{i + 1}" for i in range(batch.d)]
    comment = f"method={method} seed={config.seed} measure={_measure_hash(cop, config.seed)}"
    _emit(config, render_csv(header, batch.rows, comment))
    return 0


def cmd_histogram(config: RunConfig) -> int:
    cop = _copula(config)
    method = config.options.get('method', 'radial')
    bins = int(config.options.get('bins') or DEFAULT_BINS)
    hist = histogram(sample(cop, config.n, config.seed, method, config.workers), bins)
    header = ['x_lo', 'x_hi', 'y_lo', 'y_hi', 'count']
    rows = [[cell[key] for key in header] for cell in hist.rows()]
    _emit(config, render_csv(header, rows))
    return 0


def cmd_approx(config: RunConfig) -> int:
    cop = _copula(config)
    defaults = config.options.get('defaults', {})
    kinds = config.options.get('kinds') or (defaults.get('approx') or {}).get('kinds') or list(KINDS)
    ns = config.options.get('ns') or (defaults.get('approx') or {}).get('ns') or [10, 100]
    grid = config.grid or default_dinf_grid(cop.dim, defaults)
    rows = []
    log = _progress_stream(config)
    for kind in kinds:
        for n in ns:
            approximant = ArchCopula(Generator(approximation_sequence(cop.measure, kind, int(n))))
            result = dinf_distance(approximant, cop, grid)
            info(f"{kind:9s} n={n:<5d} d_inf={result.value:.6f} (+{result.bound:.4f})", file=log)
            rows.append((kind, n, result.value, result.bound, grid))
    _emit(config, render_csv(['kind', 'n', 'dinf', 'lipschitz_bound', 'grid'], rows))
    return 0


def cmd_verify(config: RunConfig) -> int:
    from scripts.verify import run_verification

    report = run_verification(config.seed, config.n, config.workers, log=_progress_stream(config))
    _emit(config, render_json(report.as_dict()))
    return 0 if report.passed else 1


HANDLERS = {
    'transform': cmd_transform,
    'eval': cmd_eval,
    'kendall': cmd_kendall,
    'levelmass': cmd_levelmass,
    'bandmass': cmd_bandmass,
    'levelcurve': cmd_levelcurve,
    'decompose': cmd_decompose,
    'nondiff': cmd_nondiff,
    'sample': cmd_sample,
    'histogram': cmd_histogram,
    'approx': cmd_approx,
    'verify': cmd_verify,
}


def run(config: RunConfig, out_dir: Path = versioning.OUT_DIR) -> int:
    """Dispatch one subcommand; runs that write a file get a run folder."""
    if config.out is None:
        return HANDLERS[config.subcommand](config)
    measure_hash = None
    if config.spec is not None:
        measure_hash = _measure_hash(_copula(config), config.seed)
    run_number = versioning.create_new_run(config.subcommand, measure_hash, config.seed, config.n,
                                           config.grid or 0, out_dir)
    status = HANDLERS[config.subcommand](config)
    versioning.update_manifest_output(run_number, str(config.out), out_dir)
    versioning.update_manifest_outcome(run_number, status == 0, out_dir)
    info(f"Recorded run {run_number:02d} in {versioning.get_run_path(run_number, out_dir)}",
         file=_progress_stream(config))
    return status


def build_parser() -> argparse.ArgumentParser:
    epilog = """
Examples:
  %(prog)s transform --spec lower_frechet --grid 8      psi of the W generator
  %(prog)s levelmass --spec two_atom --t 0              mass of the zero level set
  %(prog)s bandmass --spec gapped_mixture --s1 1/2 --s2 11/18
  %(prog)s sample --spec two_atom --n 1000 --method conditional
  %(prog)s verify                                       full acceptance suite
"""
    parser = argparse.ArgumentParser(
        description="Williamson measures and d-dimensional Archimedean copulas.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=epilog
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS, metavar="SUBCOMMAND",
                        help=f"one of: {', '.join(SUBCOMMANDS)}")
    parser.add_argument("--spec", help="measure spec path or bundled name")
    parser.add_argument("--d", type=int, help="override the spec's dimension")
    parser.add_argument("--out", type=Path, help="output file (CSV or JSON); records a run folder")
    parser.add_argument("--seed", type=int, help="Monte-Carlo seed (default: WILLIAMSON_SEED or defaults.yaml)")
    parser.add_argument("--n", type=int, help="Monte-Carlo size")
    parser.add_argument("--grid", type=int, help="grid resolution")
    parser.add_argument("--workers", "-w", type=int, help="concurrent sampling chunks")
    parser.add_argument("--t", help="level t (exact 'p/q' allowed)")
    parser.add_argument("--s1", help="lower band level")
    parser.add_argument("--s2", help="upper band level")
    parser.add_argument("--x", help="conditioning point 'x1,...,x_{d-1}'")
    parser.add_argument("--points", help="points 'x1,...,xd;x1,...,xd'")
    parser.add_argument("--method", choices=METHODS, default='radial', help="sampling method")
    parser.add_argument("--bins", type=int, help=f"histogram bins (default: {DEFAULT_BINS})")
    parser.add_argument("--what", choices=('psi', 'cdf'), default='psi', help="transform table")
    parser.add_argument("--zmax", type=float, help="upper end of the transform z grid")
    parser.add_argument("--kinds", help="approximation kinds, comma separated")
    parser.add_argument("--ns", help="approximation indices, comma separated")
    return parser


def resolve_config(args: argparse.Namespace, defaults: dict, environ) -> RunConfig:
    """CLI flag > environment > defaults.yaml."""
    def pick(flag, env_key, default_key, fallback):
        if flag is not None:
            return flag
        if env_key and environ.get(env_key):
            return int(environ[env_key])
        return defaults.get(default_key, fallback)

    options = {
        'defaults': defaults,
        't': args.t,
        's1': args.s1,
        's2': args.s2,
        'x': args.x,
        'points': args.points,
        'method': args.method,
        'bins': args.bins,
        'what': args.what,
        'zmax': args.zmax,
        'kinds': args.kinds.split(',') if args.kinds else None,
        'ns': [int(v) for v in args.ns.split(',')] if args.ns else None,
    }
    return RunConfig(
        subcommand=args.subcommand,
        spec=args.spec,
        d=args.d,
        out=args.out,
        seed=pick(args.seed, 'WILLIAMSON_SEED', 'seed', 0),
        n=pick(args.n, None, 'n', 100000),
        grid=args.grid,
        workers=pick(args.workers, 'WILLIAMSON_WORKERS', 'workers', 4),
        options={k: v for k, v in options.items() if v is not None},
    )


def main(argv: list[str] | None = None) -> int:
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args, load_defaults(), os.environ)
    except ValueError as e:
        parser.error(str(e))
    out_dir = Path(os.environ.get('WILLIAMSON_OUT_DIR', versioning.OUT_DIR))
    try:
        return run(config, out_dir)
    except MeasureSpecError as e:
        error(f"Invalid measure spec: {e}")
        return 2
    except ValueError as e:
        error(str(e))
        return 2
    except (ConsistencyError, QuadratureError, FiniteDifferenceError) as e:
        error(f"{type(e).__name__}: {e}")
        return 1


if __name__ == '__main__':
    sys.exit(main())
