# Independent reference values for mixed volumes: zonotope determinant sums, Minkowski-sum
# volume polynomials in R^3 and the ball identity.
#
# Part of flagmixvol

import math
import logging
import itertools
from typing import Any, Dict, List, Sequence

import numpy as np
from scipy.spatial import ConvexHull

from .Constants import Constants
from .MultiVector import det
from .Polytope import Polytope, affine_frames

log = logging.getLogger(__name__)

VANDERMONDE_COND = 1e8


class OracleResult:
    def __init__(self, values: Sequence[float], method: str, exact: bool) -> None:
        """values[j] = V_{j,d-j}(K, L) = C(d,j) V(K[j], -L[d-j]) for j = 0..d"""
        self.values: List[float] = [float(v) for v in values]
        self.method: str = method
        self.exact: bool = exact

    def __repr__(self) -> str:
        return f'OracleResult({self.method}, {self.values})'

    @property
    def d(self) -> int:
        return len(self.values) - 1

    def mixed(self, k: int) -> float:
        """V(K[k], -L[d-k]) without the binomial factor"""
        return self.values[k] / math.comb(self.d, k)

    def to_dict(self) -> Dict[str, Any]:
        return {'values': self.values, 'method': self.method, 'exact': self.exact}


def _generators(gens: Sequence[Sequence[float]]) -> np.ndarray:
    gens = np.array(gens, dtype=float)
    if gens.ndim != 2 or not len(gens):
        raise ValueError('generators should be a non-empty m x d array')
    return gens


class Oracle:
    @staticmethod
    def zonotope_mixed(gens_K: Sequence[Sequence[float]], gens_L: Sequence[Sequence[float]], k: int) -> float:
        """V_{k,l}(Z_K, Z_L) as the sum of |det(S u T)| over k generators of K and l of L"""
        gk, gl = _generators(gens_K), _generators(gens_L)
        d = gk.shape[1]
        if gl.shape[1] != d:
            raise ValueError(f'generators live in different dimensions ({d} vs {gl.shape[1]})')
        if not 0 <= k <= d:
            raise ValueError(f'invalid index k={k} for dimension {d}')

        rows = [np.vstack([gk[list(s)], gl[list(t)]])
                for s in itertools.combinations(range(len(gk)), k)
                for t in itertools.combinations(range(len(gl)), d - k)]
        if not rows:
            return 0.0
        return float(np.abs(det(np.array(rows))).sum())

    @staticmethod
    def zonotope_volume(gens: Sequence[Sequence[float]]) -> float:
        gens = _generators(gens)
        d = gens.shape[1]
        return Oracle.zonotope_mixed(gens, np.zeros((1, d)), d)

    @staticmethod
    def zonotope_values(gens_K: Sequence[Sequence[float]], gens_L: Sequence[Sequence[float]]) -> OracleResult:
        d = _generators(gens_K).shape[1]
        return OracleResult([Oracle.zonotope_mixed(gens_K, gens_L, j) for j in range(d + 1)],
                            'zonotope', exact=True)

    @staticmethod
    def hull_volume(points: Sequence[Sequence[float]]) -> float:
        """Volume of the convex hull; zero for lower-dimensional point sets"""
        points = np.unique(np.round(np.array(points, dtype=float), 12), axis=0)
        if affine_frames(points)[0].shape[1] < points.shape[1]:
            return 0.0
        return float(ConvexHull(points).volume)

    @staticmethod
    def translative_sum(K: Polytope, L: Polytope) -> float:
        """Vol(K + (-L)), the sum of V_{j,d-j}(K, L) over j"""
        if K.d != L.d:
            raise ValueError(f'bodies live in different dimensions ({K.d} vs {L.d})')
        return Oracle.hull_volume((K.vertices[:, None, :] - L.vertices[None, :, :]).reshape(-1, K.d))

    @staticmethod
    def minkowski_poly_3d(K: Polytope, L: Polytope, sample_ts: Sequence[float] = (1, 2, 3, 4)) -> OracleResult:
        """Fit Vol(K + t(-L)) as a cubic in t; the coefficient of t^(3-j) is V_{j,3-j}(K, L)"""
        if K.d != 3 or L.d != 3:
            raise ValueError(f'Minkowski polynomial fit needs bodies in R^3 ({K.d}, {L.d})')
        ts = np.array(sample_ts, dtype=float)
        if len(ts) < 4:
            raise ValueError(f'need at least four sample points ({list(sample_ts)})')

        vander = np.vander(ts, 4, increasing=True)
        condition = np.linalg.cond(vander)
        if not np.isfinite(condition) or condition > VANDERMONDE_COND:
            raise RuntimeError(f'ill-conditioned Minkowski polynomial fit (condition {condition:.3g})')

        volumes = np.array([Oracle.hull_volume((K.vertices[:, None, :] - t * L.vertices[None, :, :]).reshape(-1, 3))
                            for t in ts])
        coeffs = np.linalg.lstsq(vander, volumes, rcond=None)[0]
        log.debug('Minkowski polynomial coefficients %s', coeffs)
        return OracleResult(coeffs[::-1], 'minkowski-fit', exact=False)

    @staticmethod
    def ball_identity(K: Polytope, k: int) -> float:
        """C(d,k) V(K[k], B[d-k]) = kappa_{d-k} V_k(K)"""
        if not 0 <= k <= K.d:
            raise ValueError(f'invalid index k={k} for dimension {K.d}')
        return Constants.ball_volume(K.d - k) * K.intrinsic_volume(k)
