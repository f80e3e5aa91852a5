# Uniform sampling on spheres, Grassmannians and O(d), plus the batched Monte Carlo driver.
#
# Part of flagmixvol

import math
import logging
import functools
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .MultiVector import Subspace

log = logging.getLogger(__name__)

# sampler(rng, n) -> (values, weights); weights may be a scalar
Sampler = Callable[[np.random.Generator, int], Tuple[Any, Any]]

SEED_LIMIT = 2 ** 64


class NonFiniteSampleError(ValueError):
    def __init__(self, index: int, value: float) -> None:
        super().__init__(f'non-finite sample value ({value}) at sample {index}')
        self.index: int = index


class MCConfig:
    def __init__(self, *, sample_count: int = 100_000, seed: int = 0, batch_count: int = 4,
                 threads: int = 1, chunk_size: int = 16384, target_rel_error: Optional[float] = None) -> None:
        if sample_count < 1:
            raise ValueError(f'invalid sample count ({sample_count})')
        if not 0 <= seed < SEED_LIMIT:
            raise ValueError(f'seed should be a 64-bit unsigned integer ({seed})')
        if batch_count < 1 or threads < 1 or chunk_size < 1:
            raise ValueError(f'invalid batch layout ({batch_count} batches, {threads} threads, chunk {chunk_size})')
        if target_rel_error is not None and target_rel_error <= 0:
            raise ValueError(f'invalid target relative error ({target_rel_error})')

        self.sample_count: int = sample_count
        self.seed: int = seed
        self.batch_count: int = batch_count
        self.threads: int = threads
        self.chunk_size: int = chunk_size
        self.target_rel_error: Optional[float] = target_rel_error

    def __repr__(self) -> str:
        return f'MCConfig({", ".join(f"{k}={v}" for k, v in self.to_dict().items())})'

    def to_dict(self) -> Dict[str, Any]:
        return {
            'sample_count': self.sample_count,
            'seed': self.seed,
            'batch_count': self.batch_count,
            'threads': self.threads,
            'chunk_size': self.chunk_size,
            'target_rel_error': self.target_rel_error,
        }

    @staticmethod
    def from_dict(data: Dict[str, Any]):
        return MCConfig(**data)

    def replace(self, **changes):
        """Copy with some fields changed"""
        data = self.to_dict()
        data.update(changes)
        return MCConfig(**data)

    def spawn(self, offset: int):
        """Independent configuration for a second estimate of the same run"""
        return self.replace(seed=(self.seed + 0x9E3779B97F4A7C15 * offset) % SEED_LIMIT)

    def batch_sizes(self) -> List[int]:
        base, extra = divmod(self.sample_count, self.batch_count)
        return [base + (1 if b < extra else 0) for b in range(self.batch_count)]

    def generators(self) -> List[np.random.Generator]:
        """One independent substream per batch"""
        children = np.random.SeedSequence(self.seed).spawn(self.batch_count)
        return [np.random.Generator(np.random.PCG64(child)) for child in children]

    def rng(self, stream: int = 0) -> np.random.Generator:
        """Generator for auxiliary draws, independent of the batch substreams"""
        return np.random.default_rng([self.seed, 0x666c6167, stream])


class MCEstimate:
    def __init__(self, mean: float, std_error: float, n: int, seed: Optional[int] = None,
                 diagnostics: Optional[Dict[str, Any]] = None) -> None:
        self.mean: float = float(mean)
        self.std_error: float = float(std_error)
        self.n: int = n
        self.seed: Optional[int] = seed
        self.diagnostics: Dict[str, Any] = diagnostics or {}

    def __str__(self) -> str:
        return f'{self.mean:.8g} ± {self.std_error:.3g} (n={self.n})'

    def __repr__(self) -> str:
        return f'MCEstimate({self})'

    @property
    def rel_error(self) -> float:
        return self.std_error / abs(self.mean) if self.mean else math.inf

    def zscore(self, expected: float, expected_error: float = 0.0) -> float:
        sigma = math.hypot(self.std_error, expected_error)
        diff = abs(self.mean - expected)
        if sigma == 0:
            return 0.0 if diff == 0 else math.inf
        return diff / sigma

    def agrees(self, expected: float, *, sigmas: float = 3.0, rel: float = 0.0, expected_error: float = 0.0) -> bool:
        """Within max(sigmas standard errors, rel * |expected|) of the expected value"""
        bound = max(sigmas * math.hypot(self.std_error, expected_error), rel * abs(expected))
        return abs(self.mean - expected) <= bound

    def scaled(self, factor: float):
        return MCEstimate(self.mean * factor, self.std_error * abs(factor), self.n, self.seed, dict(self.diagnostics))

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {'value': self.mean, 'std_error': self.std_error, 'n': self.n, 'seed': self.seed}
        if self.diagnostics:
            data['diagnostics'] = self.diagnostics
        return data


class Grassmann:
    @staticmethod
    def sample_sphere(d: int, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
        """Uniform unit vector(s) on S^{d-1}"""
        if d < 1:
            raise ValueError(f'invalid dimension ({d})')
        z = rng.standard_normal((d,) if size is None else (size, d))
        return z / np.linalg.norm(z, axis=-1, keepdims=True)

    @staticmethod
    def orthonormalise(g: np.ndarray) -> np.ndarray:
        """Orthonormal frame(s) spanning the columns of (stacked) full-rank matrices"""
        if g.shape[-1] == 0:
            return np.zeros(g.shape)
        q, _ = np.linalg.qr(g)
        return q

    @staticmethod
    def sample_grassmann(d: int, k: int, rng: np.random.Generator, size: Optional[int] = None):
        """Uniform k-subspace of R^d; frames of shape (size, d, k) when size is given"""
        if d < 1 or not 0 <= k <= d:
            raise ValueError(f'invalid Grassmannian G({d},{k})')
        frames = Grassmann.orthonormalise(rng.standard_normal((d, k) if size is None else (size, d, k)))
        return Subspace(frames, check=False) if size is None else frames

    @staticmethod
    def sample_grassmann_in(w: Subspace, j: int, rng: np.random.Generator, size: Optional[int] = None):
        """Uniform j-subspace of span(w), as a subspace of R^d"""
        if not 0 <= j <= w.k:
            raise ValueError(f'cannot sample {j}-subspaces of a {w.k}-dimensional space')
        coords = Grassmann.orthonormalise(rng.standard_normal((w.k, j) if size is None else (size, w.k, j)))
        frames = w.frame @ coords
        return Subspace(frames, check=False) if size is None else frames

    @staticmethod
    def sample_orthogonal(u: np.ndarray, j: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform j-subspaces of u^perp for a stack of unit vectors u (n, d); frames (n, d, j)"""
        if not 0 <= j < u.shape[-1]:
            raise ValueError(f'cannot sample {j}-subspaces of u^perp in dimension {u.shape[-1]}')
        g = rng.standard_normal(u.shape + (j,))
        g = g - u[..., :, None] * np.einsum('...d,...dj->...j', u, g)[..., None, :]
        return Grassmann.orthonormalise(g)

    @staticmethod
    def sample_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
        """Haar-distributed orthogonal matrix"""
        if d < 1:
            raise ValueError(f'invalid dimension ({d})')
        q, r = np.linalg.qr(rng.standard_normal((d, d)))
        return q * np.sign(np.diag(r))


class MonteCarlo:
    @staticmethod
    def integrate(sampler: Sampler, config: MCConfig) -> MCEstimate:
        """Weighted-mean estimate of E[value * weight] over independent batches"""
        sizes = config.batch_sizes()
        offsets = [sum(sizes[:b]) for b in range(len(sizes))]
        generators = config.generators()
        log.debug('integrating %d samples in %d batches', config.sample_count, len(sizes))

        def run(b: int) -> Tuple[int, float, float]:
            return MonteCarlo._run_batch(sampler, generators[b], sizes[b], offsets[b], config.chunk_size)

        if config.threads > 1 and len(sizes) > 1:
            with ThreadPoolExecutor(max_workers=config.threads) as pool:
                stats = list(pool.map(run, range(len(sizes))))
        else:
            stats = [run(b) for b in range(len(sizes))]

        n, mean, m2 = functools.reduce(MonteCarlo._merge, stats)
        std_error = math.sqrt(m2 / (n - 1) / n) if n > 1 else 0.0
        estimate = MCEstimate(mean, std_error, n, config.seed)

        if config.target_rel_error is not None and estimate.rel_error > config.target_rel_error:
            estimate.diagnostics['target_missed'] = True
            log.warning('relative error %.3g above target %.3g', estimate.rel_error, config.target_rel_error)
        return estimate

    @staticmethod
    def _run_batch(sampler: Sampler, rng: np.random.Generator, size: int, offset: int,
                   chunk_size: int) -> Tuple[int, float, float]:
        stats = (0, 0.0, 0.0)
        for start in range(0, size, chunk_size):
            m = min(chunk_size, size - start)
            values, weights = sampler(rng, m)
            x = np.broadcast_to(np.asarray(values, dtype=float) * np.asarray(weights, dtype=float), (m,))

            bad = np.flatnonzero(~np.isfinite(x))
            if bad.size:
                raise NonFiniteSampleError(offset + start + int(bad[0]), float(x[bad[0]]))

            mean = float(x.mean())
            stats = MonteCarlo._merge(stats, (m, mean, float(((x - mean) ** 2).sum())))
        return stats

    @staticmethod
    def _merge(a: Tuple[int, float, float], b: Tuple[int, float, float]) -> Tuple[int, float, float]:
        # pairwise update of (count, mean, sum of squared deviations)
        na, ma, sa = a
        nb, mb, sb = b
        if na == 0:
            return b
        if nb == 0:
            return a
        n = na + nb
        delta = mb - ma
        return n, ma + delta * nb / n, sa + sb + delta * delta * na * nb / n
