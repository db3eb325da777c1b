"""
Exact simulation from an Archimedean copula.

Two methods, cross-validated against each other:

- radial: T ~ gamma, R = 1/T, S uniform on the unit simplex, U_i = psi(R S_i);
- conditional: U_1 uniform, then each U_k inverts the Markov kernel of the
  k-th coordinate given the first k-1, with kernel atoms located from the atoms
  of gamma rather than by numerical jump hunting.

Work is split into chunks of CHUNK_SIZE rows. Each chunk draws from its own
Philox substream keyed by (seed, chunk index), and chunks run on a bounded
asyncio worker pool, so the batch does not depend on the number of workers.
"""

import asyncio
import math
from dataclasses import dataclass

import numpy as np

from scripts.copula_core import ArchCopula
from scripts.generator import phi_array, psi, psi_derivative
from scripts.measure_model import moment_quantile, quantile, truncated_power_integral

__all__ = [
    'SampleBatch',
    'Histogram',
    'sample_radial',
    'sample_conditional',
    'sample',
    'histogram',
    'chunk_rng',
    'CHUNK_SIZE',
    'DEFAULT_WORKERS',
    'METHODS',
]

CHUNK_SIZE = 8192
DEFAULT_WORKERS = 4
METHODS = ('radial', 'conditional')
INVERSION_ITERATIONS = 64
MAX_DOUBLINGS = 200


@dataclass(frozen=True)
class SampleBatch:
    n: int
    d: int
    rows: np.ndarray
    method: str
    seed: int

    def __post_init__(self):
        if self.rows.shape != (self.n, self.d):
            raise ValueError(f"rows must have shape ({self.n}, {self.d}), got {self.rows.shape}")


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    """Counter-based substream for one chunk."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def _uniform(rng: np.random.Generator, shape) -> np.ndarray:
    """Uniform variates on (0, 1]."""
    return 1.0 - rng.random(shape)


def _radial_chunk(cop: ArchCopula, size: int, rng: np.random.Generator) -> np.ndarray:
    gen = cop.gen
    t = quantile(gen.measure, _uniform(rng, size))
    spacings = rng.standard_exponential((size, gen.d))
    simplex = spacings / spacings.sum(axis=1, keepdims=True)
    rows = psi(gen, simplex / t[:, None])
    return rows[:, :cop.dim]


def _marginal_kernel_inverse(cop: ArchCopula, k: int, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    """z >= s solving g(z) = v g(s) for g = (-1)^(k-1) psi^(k-1), continuous and decreasing."""
    gen = cop.gen
    sign = (-1) ** (k - 1)

    def g(z):
        return sign * psi_derivative(gen, k - 1, z)

    target = v * g(s)
    lo = s.copy()
    if math.isfinite(float(gen.phi0)):
        hi = np.full(s.shape, float(gen.phi0))
    else:
        hi = s + 1.0
        for _ in range(MAX_DOUBLINGS):
            above = g(hi) > target
            if not above.any():
                break
            hi = np.where(above, s + 2.0 * (hi - s), hi)
    for _ in range(INVERSION_ITERATIONS):
        mid = 0.5 * (lo + hi)
        above = g(mid) > target
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    return hi


def _full_kernel_inverse(cop: ArchCopula, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Composite argument z = 1/u for the smallest u with M(u) >= v M(1/s)."""
    measure = cop.measure
    d = cop.gen.d
    target = v * truncated_power_integral(measure, 0, d - 1, s)
    u = moment_quantile(measure, d - 1, target)
    return 1.0 / u


def _conditional_chunk(cop: ArchCopula, size: int, rng: np.random.Generator) -> np.ndarray:
    gen = cop.gen
    rows = np.empty((size, cop.dim))
    rows[:, 0] = _uniform(rng, size)
    s = phi_array(gen, rows[:, 0])
    phi0 = float(gen.phi0)
    for k in range(2, cop.dim + 1):
        v = _uniform(rng, size)
        zero_set = s >= phi0
        top = s <= 0
        live = ~(zero_set | top)
        column = np.zeros(size)
        column[top] = v[top]
        if live.any():
            s_live = s[live]
            if k == gen.d:
                z = _full_kernel_inverse(cop, s_live, v[live])
            else:
                z = _marginal_kernel_inverse(cop, k, s_live, v[live])
            column[live] = psi(gen, np.maximum(z - s_live, 0.0))
        rows[:, k - 1] = column
        if k < cop.dim:
            s = s + phi_array(gen, column)
    return rows


CHUNK_SAMPLERS = {
    'radial': _radial_chunk,
    'conditional': _conditional_chunk,
}


async def _sample_parallel(cop: ArchCopula, n: int, seed: int, method: str, workers: int) -> list[np.ndarray]:
    """Run chunk samplers on a bounded pool; results come back in chunk order."""
    semaphore = asyncio.Semaphore(workers)
    draw = CHUNK_SAMPLERS[method]

    async def sample_chunk(chunk: int) -> np.ndarray:
        size = min(CHUNK_SIZE, n - chunk * CHUNK_SIZE)
        async with semaphore:
            return await asyncio.to_thread(draw, cop, size, chunk_rng(seed, chunk))

    chunks = math.ceil(n / CHUNK_SIZE)
    return await asyncio.gather(*(sample_chunk(c) for c in range(chunks)))


def sample(cop: ArchCopula, n: int, seed: int, method: str = 'radial', workers: int = DEFAULT_WORKERS) -> SampleBatch:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if method not in METHODS:
        raise ValueError(f"Unknown method '{method}'. Available: {', '.join(METHODS)}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    parts = asyncio.run(_sample_parallel(cop, n, seed, method, workers))
    rows = np.clip(np.concatenate(parts, axis=0), 0.0, 1.0)
    return SampleBatch(n, cop.dim, rows, method, seed)


def sample_radial(cop: ArchCopula, n: int, seed: int, workers: int = DEFAULT_WORKERS) -> SampleBatch:
    return sample(cop, n, seed, 'radial', workers)


def sample_conditional(cop: ArchCopula, n: int, seed: int, workers: int = DEFAULT_WORKERS) -> SampleBatch:
    return sample(cop, n, seed, 'conditional', workers)


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    joint: np.ndarray
    marginals: tuple[np.ndarray, ...]

    def rows(self) -> list[dict]:
        """Long-format cells of the joint histogram (first two coordinates)."""
        out = []
        for i in range(self.joint.shape[0]):
            for j in range(self.joint.shape[1]):
                out.append({
                    'x_lo': float(self.edges[i]),
                    'x_hi': float(self.edges[i + 1]),
                    'y_lo': float(self.edges[j]),
                    'y_hi': float(self.edges[j + 1]),
                    'count': int(self.joint[i, j]),
                })
        return out


def histogram(batch: SampleBatch, bins: int) -> Histogram:
    """Joint histogram of the first two coordinates and per-coordinate marginal histograms on [0, 1]."""
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    edges = np.linspace(0.0, 1.0, bins + 1)
    joint, _, _ = np.histogram2d(batch.rows[:, 0], batch.rows[:, 1], bins=[edges, edges])
    marginals = tuple(np.histogram(batch.rows[:, i], bins=edges)[0] for i in range(batch.d))
    return Histogram(edges, joint.astype(int), marginals)
