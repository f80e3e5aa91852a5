# Integration of test functions against the flag measures Omega_k of polytopes and balls.
#
# Part of flagmixvol

import math
import logging
from typing import Callable, Optional, Union

import numpy as np

from .Ball import Ball
from .Check import Check
from .Constants import Constants
from .Grassmann import MCConfig, MCEstimate, MonteCarlo, Grassmann
from .MultiVector import det
from .Polytope import Polytope

log = logging.getLogger(__name__)

Body = Union[Polytope, Ball]

# g(u, U) on stacks: u (n, d), U (n, d, k*) -> values (n,)
FlagFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]
# h(u) on stacks: u (n, d) -> values (n,)
SphereFunction = Callable[[np.ndarray], np.ndarray]


def has_flags(body: Body, k: int) -> bool:
    """Whether Omega_k(body) can be non-zero"""
    return isinstance(body, Ball) or bool(body.face_list(k))


class FlagMeasure:
    @staticmethod
    def omega_integrate(body: Body, k: int, g: Optional[FlagFunction], config: MCConfig) -> MCEstimate:
        """Monte Carlo estimate of the integral of g against Omega_k(body); g None integrates 1"""
        if not 0 <= k <= body.d - 1:
            raise ValueError(f'invalid flag index k={k} for dimension {body.d}')
        if not has_flags(body, k):
            log.info('%r has no %d-faces; Omega_%d is zero', body, k, k)
            return MCEstimate(0.0, 0.0, config.sample_count, config.seed,
                              {'zero_measure': f'no {k}-faces (body dimension {body.body_dim})'})

        def sampler(rng: np.random.Generator, n: int):
            u, U, weights = body.sample_flags(k, rng, n)
            return (1.0 if g is None else g(u, U)), weights

        return MonteCarlo.integrate(sampler, config)

    @staticmethod
    def omega_square4d(g: Optional[FlagFunction], config: MCConfig) -> MCEstimate:
        """Omega_2 of the unit square in span(e1, e2) in R^4, by its circle parametrisation"""
        def sampler(rng: np.random.Generator, n: int):
            phi = rng.uniform(0, 2 * math.pi, n)
            u = np.zeros((n, 4))
            u[:, 2], u[:, 3] = np.cos(phi), np.sin(phi)
            a = np.zeros((n, 4))
            a[:, 2], a[:, 3] = -np.sin(phi), np.cos(phi)
            U = Grassmann.sample_orthogonal(u, 1, rng)
            weights = 3 * np.einsum('nd,nd->n', U[:, :, 0], a) ** 2
            return (1.0 if g is None else g(u, U)), weights

        return MonteCarlo.integrate(sampler, config)

    @staticmethod
    def area_measure_integrate(K: Polytope, k: int, h: Optional[SphereFunction], config: MCConfig) -> MCEstimate:
        """sum over k-faces of H^k(F) times the normalised integral of h over nu(K,F)"""
        if not K.face_list(k):
            return MCEstimate(0.0, 0.0, config.sample_count, config.seed)
        norm = Constants.sphere_area(K.d - 1 - k)

        def sampler(rng: np.random.Generator, n: int):
            u, _, weights = K.sample_normals(k, rng, n)
            return (1.0 if h is None else h(u)), weights / norm

        return MonteCarlo.integrate(sampler, config)

    @staticmethod
    def area_measure_marginal_check(K: Polytope, k: int, h: Optional[SphereFunction], config: MCConfig,
                                    *, sigmas: float = 3.0) -> Check:
        """Omega_k with g(u, U) = h(u) against the direct area-measure sum (independent streams)"""
        flag = FlagMeasure.omega_integrate(K, k, None if h is None else (lambda u, U: h(u)), config)
        direct = FlagMeasure.area_measure_integrate(K, k, h, config.spawn(1))
        log.debug('marginal check k=%d: flag %s, direct %s', k, flag, direct)
        return Check.against(f'marginal k={k}', flag, direct.mean, sigmas=sigmas, rel=1e-12,
                             expected_error=direct.std_error)

    @staticmethod
    def subspace_weight(U: np.ndarray, A: np.ndarray) -> np.ndarray:
        """<U, A>^2 for stacks of frames"""
        return det(np.swapaxes(U, -1, -2) @ A) ** 2
