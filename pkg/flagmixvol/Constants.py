# Closed-form normalisations, the angular weight F_{k,l} and the Grassmannian moment constants.
#
# Part of flagmixvol

import math
import logging
from enum import Enum
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from scipy import integrate, special

from .Grassmann import MCConfig, MonteCarlo, Grassmann
from .MultiVector import Subspace, TiaBasis, det

log = logging.getLogger(__name__)

GAUSS_NODES = 64
CONSISTENCY_TOL = 1e-10
REGULARITY_TOL = 1e-12


class Provenance(Enum):
    EXACT = 'exact'
    MC = 'mc'
    MC_IMPRECISE = 'mc-imprecise'


def binom(a: int, b: int) -> int:
    """Binomial coefficient, zero outside 0 <= b <= a"""
    if a < 0 or b < 0 or b > a:
        return 0
    return math.comb(a, b)


@lru_cache(maxsize=None)
def _gauss_legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = special.roots_legendre(n)
    return (x + 1) / 2, w / 2


class Constants:
    @staticmethod
    def sphere_area(m: int) -> float:
        """H^m(S^m)"""
        if m < 0:
            raise ValueError(f'invalid sphere dimension ({m})')
        return float(2 * math.pi ** ((m + 1) / 2) / special.gamma((m + 1) / 2))

    @staticmethod
    def ball_volume(m: int) -> float:
        """Volume kappa_m of the unit ball in R^m"""
        if m < 0:
            raise ValueError(f'invalid ball dimension ({m})')
        return float(math.pi ** (m / 2) / special.gamma(m / 2 + 1))

    @staticmethod
    def beta_const(d: int, k: int) -> float:
        """Total Hausdorff measure of G(d,k)"""
        if not 0 <= k <= d:
            raise ValueError(f'invalid Grassmannian G({d},{k})')
        value = math.pi ** (k * (d - k) / 2)
        for j in range(1, k + 1):
            value *= special.gamma(j / 2) / special.gamma((d - j + 1) / 2)
        return float(value)

    @staticmethod
    def gamma_consts(d: int, k: int) -> Tuple[float, float]:
        """Flag-measure normalisations (gamma_tilde(d,k), gamma(d,k))"""
        if d < 1 or not 0 <= k <= d - 1:
            raise ValueError(f'invalid flag index k={k} for dimension {d}')

        ks = d - 1 - k
        g = special.gamma
        tilde = 0.5 * math.comb(d - 1, k) * g((d - k) / 2) * g((k + 1) / 2) / (g(0.5) * g(d / 2))
        gamma = math.comb(d - 1, k) / Constants.sphere_area(ks)

        check = tilde * Constants.beta_const(d - 1, ks) / Constants.beta_const(d, ks)
        if abs(check - gamma) > CONSISTENCY_TOL * gamma:
            raise RuntimeError(f'inconsistent flag constants for d={d} k={k} ({check} vs {gamma})')
        return float(tilde), float(gamma)

    @staticmethod
    def _check_kl(k: int, l: int) -> int:
        d = k + l
        if k < 1 or l < 1:
            raise ValueError(f'invalid index pair k={k} l={l}')
        return d

    @staticmethod
    def F_kl(theta: float, k: int, l: int) -> float:
        """Angular weight F_{k,l}(theta) by adaptive quadrature; F(0) = 1/H^{d-1}(S^{d-1}), F(pi) = 0"""
        d = Constants._check_kl(k, l)
        if not 0 <= theta <= math.pi:
            raise ValueError(f'angle out of range ({theta})')

        area = Constants.sphere_area(d - 1)
        if theta == 0:
            return 1 / area
        if theta == math.pi:
            return 0.0

        ks, ls = d - 1 - k, d - 1 - l
        s = math.sin(theta)

        def integrand(t: float) -> float:
            return (math.sin(t * theta) / s) ** ks * (math.sin((1 - t) * theta) / s) ** ls

        value, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-12, epsrel=1e-10)
        return theta / s * value / area

    @staticmethod
    def F_kl_eps(theta: float, k: int, l: int, eps: float) -> float:
        """Cut-off weight F_{k,l}(theta) * 1{theta <= pi - eps}"""
        if not 0 < eps < math.pi:
            raise ValueError(f'cut-off out of range ({eps})')
        return Constants.F_kl(theta, k, l) if theta <= math.pi - eps else 0.0

    @staticmethod
    def F_kl_array(theta: np.ndarray, k: int, l: int, eps: Optional[float] = None) -> np.ndarray:
        """Vectorised F_{k,l} (or its cut-off) using fixed Gauss-Legendre quadrature in t"""
        d = Constants._check_kl(k, l)
        if eps is not None and not 0 < eps < math.pi:
            raise ValueError(f'cut-off out of range ({eps})')

        theta = np.asarray(theta, dtype=float)
        flat = theta.ravel()
        out = np.zeros(flat.shape)
        area = Constants.sphere_area(d - 1)
        cut = math.pi if eps is None else math.pi - eps

        out[flat == 0] = 1 / area
        live = (flat > 0) & (flat < math.pi) & (flat <= cut)
        if live.any():
            th = flat[live]
            s = np.sin(th)
            t, w = _gauss_legendre(GAUSS_NODES)
            a = np.sin(np.outer(th, t)) / s[:, None]
            b = np.sin(np.outer(th, 1 - t)) / s[:, None]
            out[live] = th / s * ((a ** (d - 1 - k) * b ** (d - 1 - l)) @ w) / area
        return out.reshape(theta.shape)

    @staticmethod
    def F_kl_bound(k: int, l: int) -> float:
        """Constant C with F_{k,l}(theta) <= C sin^{1-d}(theta)"""
        d = Constants._check_kl(k, l)
        return math.pi / Constants.sphere_area(d - 1)

    @staticmethod
    def exact_c(d: int, k: int) -> Optional[np.ndarray]:
        """Closed-form c^d_{k,i} where known (k in {0, 1, d-1, d}), else None"""
        if d < 1 or not 0 <= k <= d:
            raise ValueError(f'invalid Grassmannian G({d},{k})')
        if k in (0, d):
            return np.array([1.0])
        if k in (1, d - 1):
            # fourth moments of the uniform law on S^{d-1}; k = d-1 by passing to complements
            return np.array([3.0, 1.0]) / (d * (d + 2))
        return None

    @staticmethod
    def c_constants(d: int, k: int, config: Optional[MCConfig] = None, *,
                    exact: bool = False) -> Tuple[np.ndarray, np.ndarray, List[Provenance]]:
        """Moment constants c^d_{k,i} with standard errors and provenance"""
        known = Constants.exact_c(d, k)
        if known is not None and (exact or k in (0, d)):
            return known, np.zeros(len(known)), [Provenance.EXACT] * len(known)

        config = config or MCConfig()
        base = Subspace(np.eye(d)[:, :k])
        values, errors, provenance = [], [], []
        for i in range(base.max_index() + 1):
            first = list(TiaBasis(base, i).index_sets[0])

            def sampler(rng: np.random.Generator, n: int, rows: List[int] = first):
                frames = Grassmann.sample_grassmann(d, k, rng, size=n)
                return det(frames[:, :k, :]) ** 2 * det(frames[:, rows, :]) ** 2, 1.0

            estimate = MonteCarlo.integrate(sampler, config)
            values.append(estimate.mean)
            errors.append(estimate.std_error)
            if estimate.mean <= 0:
                raise RuntimeError(f'non-positive moment estimate c^{d}_{k},{i} ({estimate.mean})')
            if estimate.diagnostics.get('target_missed'):
                provenance.append(Provenance.MC_IMPRECISE)
            else:
                provenance.append(Provenance.MC)
        log.debug('c^%d_%d = %s', d, k, values)
        return np.array(values), np.array(errors), provenance

    @staticmethod
    def d_matrix(d: int, k: int, c: np.ndarray) -> np.ndarray:
        """Matrix D(d,k) of the constants d^{d,k}_{i,j}"""
        size = min(k, d - k) + 1
        c = np.asarray(c, dtype=float)
        if c.shape != (size,):
            raise ValueError(f'D({d},{k}) needs {size} moment constants, got {c.shape}')

        out = np.zeros((size, size))
        for i in range(size):
            for j in range(size):
                out[i, j] = sum(
                    c[m] * sum(binom(k - j, l) * binom(j, k - i - l) * binom(j, k - m - l) *
                               binom(d - k - j, m + l + i - k) for l in range(k - j + 1))
                    for m in range(size))

        scale = np.abs(out).max()
        if scale == 0 or abs(np.linalg.det(out / scale)) <= REGULARITY_TOL:
            raise RuntimeError(f'D({d},{k}) is singular; check the moment constants')
        return out
