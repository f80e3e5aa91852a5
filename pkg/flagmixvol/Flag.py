# Flags (u, U): a unit vector and a subspace of its orthogonal complement.
#
# Part of flagmixvol

from typing import Optional, Sequence

import numpy as np

from .Grassmann import Grassmann
from .MultiVector import Subspace

UNIT_TOL = 1e-12
ORTHO_TOL = 1e-10


class Flag:
    def __init__(self, u: Sequence[float], U: Subspace) -> None:
        u = np.array(u, dtype=float)
        if u.ndim != 1 or u.shape[0] != U.d:
            raise ValueError(f'flag vector should have dimension {U.d}, got shape {u.shape}')
        if abs(np.linalg.norm(u) - 1) > UNIT_TOL:
            raise ValueError(f'flag vector is not a unit vector (norm {np.linalg.norm(u):.15g})')
        if U.k and np.abs(u @ U.frame).max() > ORTHO_TOL:
            raise ValueError('flag subspace is not orthogonal to the flag vector')

        self.u: np.ndarray = u
        self.U: Subspace = U

    def __repr__(self) -> str:
        return f'Flag(d={self.d}, j={self.j}, u={np.array2string(self.u, precision=4)})'

    @property
    def d(self) -> int:
        return self.U.d

    @property
    def j(self) -> int:
        return self.U.k

    @staticmethod
    def from_vectors(u: Sequence[float], vectors: Sequence[Sequence[float]]):
        """Flag from a unit vector and spanning vectors of U (orthonormalised)"""
        u = np.asarray(u, dtype=float)
        return Flag(u, Subspace.from_vectors(vectors, d=len(u)))

    @staticmethod
    def random(d: int, j: int, rng: np.random.Generator, u: Optional[np.ndarray] = None):
        """Uniform flag in F^perp(d, j), or uniform U in u^perp for a given u"""
        if u is None:
            u = Grassmann.sample_sphere(d, rng)
        frame = Grassmann.sample_orthogonal(np.asarray(u, dtype=float)[None, :], j, rng)[0]
        return Flag(u, Subspace(frame, check=False))

    def rotated(self, rho: np.ndarray):
        rho = np.asarray(rho, dtype=float)
        return Flag(rho @ self.u, self.U.rotated(rho))

    def reflected(self):
        """(-u, U)"""
        return Flag(-self.u, self.U)
