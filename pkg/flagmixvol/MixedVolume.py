# Mixed volumes V_{k,l}(K, L) = C(d,k) V(K[k], -L[l]) through flag-measure and normal-bundle integrals.
#
# Part of flagmixvol

import math
import logging
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .Ball import Ball
from .Check import Check
from .Constants import Constants
from .FlagMeasure import Body, FlagMeasure, has_flags
from .Grassmann import MCConfig, MCEstimate, MonteCarlo, Grassmann, NonFiniteSampleError
from .MultiVector import det
from .PhiTable import PhiTable
from .Polytope import Polytope

log = logging.getLogger(__name__)

SIN_TOL = 1e-12
REGION_SIN = 0.2


class Mode(Enum):
    FLAG_IR1 = 'flag_IR1'
    FLAG_IR2 = 'flag_IR2'
    DIRECT_IR = 'direct_IR'


class PreconditionError(ValueError):
    def __init__(self, message: str, face_pair: Optional[Tuple[int, int]] = None) -> None:
        super().__init__(message)
        self.face_pair: Optional[Tuple[int, int]] = face_pair


def angle(u: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Angles between rows of u and v, with their sines"""
    cos = np.clip(np.einsum('nd,nd->n', u, v), -1.0, 1.0)
    sin = np.linalg.norm(u - cos[:, None] * v, axis=1)
    return np.arctan2(sin, cos), sin


class MixedVolumeRequest:
    def __init__(self, K: Body, L: Body, k: int, *, eps: Optional[float] = None,
                 config: Optional[MCConfig] = None, mode: Mode = Mode.FLAG_IR2,
                 assume_rotation: bool = False) -> None:
        if K.d != L.d:
            raise PreconditionError(f'bodies live in different dimensions ({K.d} vs {L.d})')
        if not 1 <= k <= K.d - 1:
            raise PreconditionError(f'index k={k} out of range 1..{K.d - 1}')
        if eps is not None and not 0 < eps < math.pi:
            raise PreconditionError(f'cut-off out of range ({eps})')
        if mode is Mode.FLAG_IR1 and eps is None:
            raise PreconditionError('flag_IR1 needs a cut-off eps')
        if mode is Mode.DIRECT_IR and not (isinstance(K, Polytope) and isinstance(L, Polytope)):
            raise PreconditionError('direct_IR needs two polytopes')

        self.K: Body = K
        self.L: Body = L
        self.k: int = k
        self.l: int = K.d - k
        self.d: int = K.d
        self.eps: Optional[float] = eps
        self.config: MCConfig = config or MCConfig()
        self.mode: Mode = mode
        self.assume_rotation: bool = assume_rotation

    def to_dict(self) -> Dict[str, Any]:
        return {
            'K': repr(self.K),
            'L': repr(self.L),
            'd': self.d,
            'k': self.k,
            'eps': self.eps,
            'mode': self.mode.value,
            'assume_rotation': self.assume_rotation,
            'config': self.config.to_dict(),
        }


class DivergenceScan:
    def __init__(self, eps_grid: Sequence[float], negative: List[MCEstimate], positive: List[MCEstimate]) -> None:
        grid = list(eps_grid)
        if any(not 0 < e < math.pi for e in grid) or any(a <= b for a, b in zip(grid, grid[1:])):
            raise ValueError(f'eps grid should be strictly decreasing in (0, pi) ({grid})')
        self.eps_grid: List[float] = grid
        self.negative: List[MCEstimate] = negative
        self.positive: List[MCEstimate] = positive

    def increments(self) -> List[float]:
        values = [e.mean for e in self.negative]
        return [b - a for a, b in zip(values, values[1:])]

    def increment_ratios(self) -> List[float]:
        inc = self.increments()
        return [b / a if a > 0 else math.inf for a, b in zip(inc, inc[1:])]

    def increasing(self) -> bool:
        # common random numbers: every sample term is nondecreasing as eps shrinks
        return all(b.mean > a.mean for a, b in zip(self.negative, self.negative[1:]))

    def checks(self, *, low: float = 0.5, high: float = 2.0) -> List[Check]:
        ratios = self.increment_ratios()
        return [
            Check('divergence increasing', [e.mean for e in self.negative], None, passed=self.increasing()),
            Check('divergence log-rate', ratios, [low, high],
                  passed=bool(ratios) and all(low <= r <= high for r in ratios)),
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'eps': self.eps_grid,
            'negative': [e.to_dict() for e in self.negative],
            'positive': [e.to_dict() for e in self.positive],
            'increments': self.increments(),
            'ratios': self.increment_ratios(),
        }


class MixedVolume:
    @staticmethod
    def _pair_sampler(K: Body, L: Body, k: int, value):
        l = K.d - k

        def sampler(rng: np.random.Generator, n: int):
            u, U, wk = K.sample_flags(k, rng, n)
            v, V, wl = L.sample_flags(l, rng, n)
            return value(u, U, v, V), wk * wl

        return sampler

    @staticmethod
    def _check_table(K: Body, L: Body, k: int, table: PhiTable) -> None:
        if K.d != L.d or table.d != K.d or table.k != k:
            raise ValueError(f'{table!r} does not match bodies in R^{K.d} with k={k}')

    @staticmethod
    def v_kl_eps(K: Body, L: Body, k: int, eps: float, table: PhiTable, config: MCConfig) -> MCEstimate:
        """Cut-off representation: F^(eps)_{k,l}(angle(u,v)) phi^{k,l} against Omega_k(K) x Omega_l(L)"""
        MixedVolume._check_table(K, L, k, table)
        if not 0 < eps < math.pi:
            raise ValueError(f'cut-off out of range ({eps})')
        return MixedVolume._flag_integral(K, L, k, table, config, eps)

    @staticmethod
    def _flag_integral(K: Body, L: Body, k: int, table: PhiTable, config: MCConfig,
                       eps: Optional[float]) -> MCEstimate:
        l = K.d - k
        if not has_flags(K, k) or not has_flags(L, l):
            log.info('flag measure vanishes for %r (k=%d) or %r (l=%d)', K, k, L, l)
            return MCEstimate(0.0, 0.0, config.sample_count, config.seed, {'zero_measure': True})

        def value(u, U, v, V):
            theta, _ = angle(u, v)
            return Constants.F_kl_array(theta, k, l, eps) * table.phi_array(u, U, v, V)

        return MonteCarlo.integrate(MixedVolume._pair_sampler(K, L, k, value), config)

    @staticmethod
    def preconditions(K: Body, L: Body, k: int, *, assume_rotation: bool = False) -> str:
        """Which sufficient condition for the uncut representation holds; PreconditionError if none"""
        if isinstance(K, Ball) or isinstance(L, Ball):
            return 'smooth body'
        if assume_rotation:
            return 'random rotation'
        pair = Polytope.parallel_face_pair(K, L, k)
        if pair is not None:
            raise PreconditionError(f'bodies are not in general relative position: {k}-face {pair[0]} of K and '
                                    f'{K.d - k}-face {pair[1]} of L have intersecting tangent spaces', pair)
        return 'general relative position'

    @staticmethod
    def v_kl_flag(K: Body, L: Body, k: int, table: PhiTable, config: MCConfig, *,
                  assume_rotation: bool = False) -> MCEstimate:
        """Uncut representation, refused unless a sufficient condition holds"""
        MixedVolume._check_table(K, L, k, table)
        condition = MixedVolume.preconditions(K, L, k, assume_rotation=assume_rotation)
        estimate = MixedVolume._flag_integral(K, L, k, table, config, None)
        estimate.diagnostics['precondition'] = condition
        estimate.diagnostics['sin_moment'] = MixedVolume.sin_moment(K, L, k, config.spawn(2))
        return estimate

    @staticmethod
    def sin_moment(K: Body, L: Body, k: int, config: MCConfig) -> Optional[Dict[str, float]]:
        """Estimate of the double integral of sin^{3-d} angle(u,v) against Omega_k(K) x Omega_l(L)"""
        d = K.d
        if not has_flags(K, k) or not has_flags(L, d - k):
            return None

        def value(u, U, v, V):
            _, sin = angle(u, v)
            return sin ** (3.0 - d)

        try:
            estimate = MonteCarlo.integrate(MixedVolume._pair_sampler(K, L, k, value), config)
        except NonFiniteSampleError as e:
            log.warning('sin moment diverges at sample %d', e.index)
            return None
        return {'value': estimate.mean, 'std_error': estimate.std_error}

    @staticmethod
    def v_kl_direct(K: Polytope, L: Polytope, k: int, config: MCConfig) -> MCEstimate:
        """Normal-bundle representation over pairs of k-faces of K and l-faces of L"""
        if not isinstance(K, Polytope) or not isinstance(L, Polytope):
            raise ValueError('direct representation needs two polytopes')
        if K.d != L.d or not 1 <= k <= K.d - 1:
            raise ValueError(f'invalid index k={k} for bodies in R^{K.d} and R^{L.d}')
        l = K.d - k
        if not K.face_list(k) or not L.face_list(l):
            return MCEstimate(0.0, 0.0, config.sample_count, config.seed, {'zero_measure': True})

        def sampler(rng: np.random.Generator, n: int):
            u, A, wk = K.sample_normals(k, rng, n)
            v, B, wl = L.sample_normals(l, rng, n)
            theta, sin = angle(u, v)
            wedge = det(np.concatenate([A, u[:, :, None], B, v[:, :, None]], axis=-1)) ** 2
            values = np.where(sin < SIN_TOL, 0.0, Constants.F_kl_array(theta, k, l) * wedge)
            return values, wk * wl

        return MonteCarlo.integrate(sampler, config)

    @staticmethod
    def run(request: MixedVolumeRequest, table: Optional[PhiTable] = None) -> MCEstimate:
        """Evaluate a request in its mode"""
        K, L, k = request.K, request.L, request.k
        if request.mode is Mode.DIRECT_IR:
            estimate = MixedVolume.v_kl_direct(K, L, k, request.config)
        else:
            table = table or PhiTable.build(request.d, k, exact=True)
            if request.mode is Mode.FLAG_IR1:
                estimate = MixedVolume.v_kl_eps(K, L, k, request.eps, table, request.config)
            else:
                estimate = MixedVolume.v_kl_flag(K, L, k, table, request.config,
                                                 assume_rotation=request.assume_rotation)
        estimate.diagnostics['mode'] = request.mode.value
        return estimate

    @staticmethod
    def mixed_volume(K: Body, L: Body, k: int, table: Optional[PhiTable], config: MCConfig, *,
                     mode: Mode = Mode.FLAG_IR2, eps: Optional[float] = None,
                     assume_rotation: bool = False) -> MCEstimate:
        """V(K[k], L[l]) in the plain convention: the representation applied to -L, divided by C(d,k)"""
        request = MixedVolumeRequest(K, L.reflect(), k, eps=eps, config=config, mode=mode,
                                     assume_rotation=assume_rotation)
        return MixedVolume.run(request, table).scaled(1 / math.comb(K.d, k))

    @staticmethod
    def extrapolate(K: Body, L: Body, k: int, eps_grid: Sequence[float], table: PhiTable, config: MCConfig,
                    *, order: int = 2, sigmas: float = 3.0) -> MCEstimate:
        """eps -> 0 limit of v_kl_eps by Richardson extrapolation over the last two grid points"""
        grid = list(eps_grid)
        if len(grid) < 2 or any(a <= b for a, b in zip(grid, grid[1:])):
            raise ValueError(f'eps grid should be strictly decreasing with at least two points ({grid})')

        # same config for every eps: common random numbers
        values = [MixedVolume.v_kl_eps(K, L, k, eps, table, config) for eps in grid]
        monotone = all(b.mean >= a.mean - sigmas * max(a.std_error, b.std_error) for a, b in zip(values, values[1:]))
        if not monotone:
            log.warning('v_kl_eps is not monotone over the eps grid %s', grid)

        e1, e2 = grid[-2] ** order, grid[-1] ** order
        a, b = e1 / (e1 - e2), -e2 / (e1 - e2)
        first, last = values[-2], values[-1]
        return MCEstimate(a * last.mean + b * first.mean,
                          math.hypot(a * last.std_error, b * first.std_error), last.n, config.seed,
                          {'eps': grid, 'values': [v.mean for v in values], 'monotone': monotone})

    @staticmethod
    def divergence_scan(eps_grid: Sequence[float], config: MCConfig, table: Optional[PhiTable] = None,
                        K: Optional[Polytope] = None, L: Optional[Polytope] = None) -> DivergenceScan:
        """Cut-off integrals of the negative and positive parts of phi^{2,2} for the square in R^4"""
        K = K or Polytope.make_square4d()
        L = L or K
        table = table or PhiTable.build(4, 2, exact=True)
        MixedVolume._check_table(K, L, 2, table)

        negative, positive = [], []
        for eps in eps_grid:
            for sign, out in ((-1.0, negative), (1.0, positive)):
                def value(u, U, v, V, eps=eps, sign=sign):
                    theta, _ = angle(u, v)
                    return Constants.F_kl_array(theta, 2, 2, eps) * np.maximum(sign * table.phi_array(u, U, v, V), 0)

                out.append(MonteCarlo.integrate(MixedVolume._pair_sampler(K, L, 2, value), config))
        scan = DivergenceScan(eps_grid, negative, positive)
        if not scan.increasing():
            log.warning('negative-part integral is not increasing over %s', scan.eps_grid)
        return scan

    @staticmethod
    def region_integral(config: MCConfig, u: Optional[np.ndarray] = None, v: Optional[np.ndarray] = None) -> MCEstimate:
        """Integral of <A,U>^2 <B,V>^2 over the region where U, V are within pi/4 of L = span(e1, e2)
        and |sin(gamma_U - gamma_V)| <= 1/5, for u, v in L^perp and A = L^perp cap u^perp, B = L^perp cap v^perp"""
        u = np.array([0, 0, 1.0, 0]) if u is None else np.asarray(u, dtype=float)
        v = np.array([0, 0, math.cos(1.0), math.sin(1.0)]) if v is None else np.asarray(v, dtype=float)

        def sampler(rng: np.random.Generator, n: int):
            U = Grassmann.sample_orthogonal(np.broadcast_to(u, (n, 4)), 1, rng)[:, :, 0]
            V = Grassmann.sample_orthogonal(np.broadcast_to(v, (n, 4)), 1, rng)[:, :, 0]
            cu = U[:, 0] ** 2 + U[:, 1] ** 2
            cv = V[:, 0] ** 2 + V[:, 1] ** 2
            gu = np.arctan2(U[:, 1], U[:, 0])
            gv = np.arctan2(V[:, 1], V[:, 0])
            inside = (cu > 0.5) & (cv > 0.5) & (np.abs(np.sin(gu - gv)) <= REGION_SIN)
            return (1 - cu) * (1 - cv) * inside, 1.0

        return MonteCarlo.integrate(sampler, config)

    @staticmethod
    def region_target() -> float:
        return math.asin(REGION_SIN) / (36 * math.pi)

    @staticmethod
    def negative_part_bound(u: np.ndarray, v: np.ndarray, table: PhiTable, config: MCConfig,
                            *, sigmas: float = 3.0) -> Check:
        """Double Grassmannian integral of <A,U>^2 phi_- <B,V>^2 against its lower bound (pi/18) arcsin(1/5) sin^2"""
        if table.d != 4 or table.k != 2:
            raise ValueError(f'{table!r} is not the d=4, k=2 table')
        u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
        if abs(u[0]) + abs(u[1]) + abs(v[0]) + abs(v[1]) > 1e-12:
            raise ValueError('u and v should lie in span(e3, e4)')
        a = np.array([0, 0, -u[3], u[2]])
        b = np.array([0, 0, -v[3], v[2]])

        def sampler(rng: np.random.Generator, n: int):
            us, vs = np.broadcast_to(u, (n, 4)), np.broadcast_to(v, (n, 4))
            U = Grassmann.sample_orthogonal(us, 1, rng)
            V = Grassmann.sample_orthogonal(vs, 1, rng)
            weight = FlagMeasure.subspace_weight(U, a[:, None]) * FlagMeasure.subspace_weight(V, b[:, None])
            return np.maximum(-table.phi_array(us, U, vs, V), 0), weight

        estimate = MonteCarlo.integrate(sampler, config)
        sin2 = 1 - float(u @ v) ** 2
        bound = math.pi / 18 * math.asin(REGION_SIN) * sin2
        return Check('negative-part lower bound', estimate.mean, bound, std_error=estimate.std_error,
                     passed=estimate.mean + sigmas * estimate.std_error >= bound,
                     note='lower bound')
