# Euclidean ball as a convex body.
#
# Part of flagmixvol

import math
from typing import Optional, Sequence, Tuple

import numpy as np

from .Constants import Constants
from .Grassmann import Grassmann


class Ball:
    def __init__(self, d: int, radius: float = 1.0, center: Optional[Sequence[float]] = None) -> None:
        if d < 1:
            raise ValueError(f'invalid dimension ({d})')
        if radius <= 0:
            raise ValueError(f'invalid radius ({radius})')
        self.d: int = d
        self.body_dim: int = d
        self.radius: float = float(radius)
        self.center: np.ndarray = np.zeros(d) if center is None else np.array(center, dtype=float)
        if self.center.shape != (d,):
            raise ValueError(f'center should have dimension {d}')

    def __repr__(self) -> str:
        return f'Ball(d={self.d}, radius={self.radius:g})'

    def intrinsic_volume(self, k: int) -> float:
        """C(d,k) kappa_d / kappa_{d-k} r^k"""
        if k < 0 or k > self.d:
            raise ValueError(f'invalid intrinsic volume index ({k})')
        return math.comb(self.d, k) * Constants.ball_volume(self.d) / Constants.ball_volume(self.d - k) \
            * self.radius ** k

    def volume(self) -> float:
        return Constants.ball_volume(self.d) * self.radius ** self.d

    def sample_flags(self, k: int, rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """n weighted flags for Omega_k: u uniform on the sphere, U uniform in u^perp"""
        if not 0 <= k <= self.d - 1:
            raise ValueError(f'invalid flag index ({k})')
        u = Grassmann.sample_sphere(self.d, rng, size=n)
        U = Grassmann.sample_orthogonal(u, self.d - 1 - k, rng)
        weight = Constants.gamma_consts(self.d, k)[1] * Constants.sphere_area(self.d - 1) * self.radius ** k
        return u, U, np.full(n, weight)

    def rotate(self, rho: np.ndarray):
        rho = np.asarray(rho, dtype=float)
        if rho.shape != (self.d, self.d) or np.abs(rho.T @ rho - np.eye(self.d)).max() > 1e-10:
            raise ValueError('rotation matrix is not orthogonal')
        return Ball(self.d, self.radius, rho @ self.center)

    def translate(self, t: Sequence[float]):
        return Ball(self.d, self.radius, self.center + np.asarray(t, dtype=float))

    def reflect(self):
        return Ball(self.d, self.radius, -self.center)

    def scale(self, s: float):
        if s <= 0:
            raise ValueError(f'invalid scale factor ({s})')
        return Ball(self.d, self.radius * s, self.center * s)
