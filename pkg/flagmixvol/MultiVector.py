# Exterior algebra over R^d: k-vectors, simple subspaces and the T_iA decomposition.
#
# Part of flagmixvol

import itertools
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import comb

ORTHO_TOL = 1e-12
RANK_TOL = 1e-10
MAX_DIM = 8

# Completion threshold for extending a frame; any value below 1/sqrt(MAX_DIM) always completes.
COMPLETION_TOL = 0.25


@lru_cache(maxsize=None)
def subsets(d: int, k: int) -> Tuple[Tuple[int, ...], ...]:
    """k-subsets of range(d) in lexicographic order"""
    return tuple(itertools.combinations(range(d), k))


@lru_cache(maxsize=None)
def subset_index(d: int, k: int) -> Dict[Tuple[int, ...], int]:
    """Position of each k-subset in the lexicographic coefficient order"""
    return {s: i for i, s in enumerate(subsets(d, k))}


def det(m: np.ndarray) -> np.ndarray:
    """Determinant over the last two axes; empty matrices have determinant 1"""
    m = np.asarray(m, dtype=float)
    if m.shape[-1] == 0:
        return np.ones(m.shape[:-2])
    return np.linalg.det(m)


def _orthogonalise(v: np.ndarray, basis: Sequence[np.ndarray]) -> np.ndarray:
    # two passes of classical Gram-Schmidt
    for _ in range(2):
        for b in basis:
            v = v - np.dot(b, v) * b
    return v


class MultiVector:
    def __init__(self, d: int, k: int, coeffs: Optional[Sequence[float]] = None) -> None:
        if d < 1 or d > MAX_DIM:
            raise ValueError(f'unsupported dimension ({d})')
        if k < 0 or k > d:
            raise ValueError(f'invalid grade {k} for dimension {d}')

        self.d: int = d
        self.k: int = k
        size = comb(d, k, exact=True)
        if coeffs is None:
            self.coeffs: np.ndarray = np.zeros(size)
        else:
            self.coeffs = np.array(coeffs, dtype=float)
            if self.coeffs.shape != (size,):
                raise ValueError(f'grade {k} in dimension {d} needs {size} coefficients')

    def __repr__(self) -> str:
        terms = []
        for c, s in zip(self.coeffs, subsets(self.d, self.k)):
            if c != 0:
                name = '^'.join(f'e{i + 1}' for i in s) or '1'
                terms.append(f'{c:+.6g}*{name}')
        return f'MultiVector(d={self.d}, k={self.k}, {" ".join(terms) or "0"})'

    @staticmethod
    def scalar(d: int, value: float = 1.0):
        """Grade-0 multivector"""
        return MultiVector(d, 0, [value])

    @staticmethod
    def vector(v: Sequence[float]):
        """Grade-1 multivector from a coordinate vector"""
        v = np.asarray(v, dtype=float)
        return MultiVector(len(v), 1, v)

    @staticmethod
    def basis(d: int, indices: Sequence[int]):
        """Wedge of canonical basis vectors e_i for the given 0-based indices"""
        indices = list(indices)
        mv = MultiVector(d, len(indices))
        if len(set(indices)) != len(indices):
            return mv
        if any(i < 0 or i >= d for i in indices):
            raise IndexError(f'basis index out of range for dimension {d} ({indices})')

        inversions = sum(1 for a, b in itertools.combinations(indices, 2) if a > b)
        mv.coeffs[subset_index(d, len(indices))[tuple(sorted(indices))]] = -1.0 if inversions % 2 else 1.0
        return mv

    @staticmethod
    def from_frame(frame: np.ndarray):
        """Wedge of the columns of a d x k matrix (coefficients are its k x k minors)"""
        frame = np.asarray(frame, dtype=float)
        d, k = frame.shape
        if k == 0:
            return MultiVector.scalar(d)
        rows = np.array(subsets(d, k))
        return MultiVector(d, k, np.linalg.det(frame[rows]))

    def _check_dim(self, other) -> None:
        if self.d != other.d:
            raise ValueError(f'dimension mismatch ({self.d} vs {other.d})')

    def __add__(self, other):
        self._check_dim(other)
        if self.k != other.k:
            raise ValueError(f'grade mismatch ({self.k} vs {other.k})')
        return MultiVector(self.d, self.k, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return MultiVector(self.d, self.k, -self.coeffs)

    def __mul__(self, factor: float):
        return MultiVector(self.d, self.k, self.coeffs * factor)

    __rmul__ = __mul__

    def __xor__(self, other):
        return self.wedge(other)

    def wedge(self, other):
        """Exterior product, with signs from the parity of the sorted merge"""
        self._check_dim(other)
        k = self.k + other.k
        if k > self.d:
            raise ValueError(f'grades {self.k} + {other.k} exceed dimension {self.d}')

        index = subset_index(self.d, k)
        out = np.zeros(comb(self.d, k, exact=True))
        for a, sa in zip(self.coeffs, subsets(self.d, self.k)):
            if a == 0:
                continue
            for b, sb in zip(other.coeffs, subsets(self.d, other.k)):
                if b == 0 or set(sa).intersection(sb):
                    continue
                inversions = sum(1 for i in sa for j in sb if i > j)
                sign = -1.0 if inversions % 2 else 1.0
                out[index[tuple(sorted(sa + sb))]] += sign * a * b
        return MultiVector(self.d, k, out)

    def inner(self, other) -> float:
        """Scalar product induced by the orthonormal basis blades"""
        self._check_dim(other)
        if self.k != other.k:
            raise ValueError(f'grade mismatch ({self.k} vs {other.k})')
        return float(np.dot(self.coeffs, other.coeffs))

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def isclose(self, other, tol: float = 1e-12) -> bool:
        return self.d == other.d and self.k == other.k and bool(np.abs(self.coeffs - other.coeffs).max() <= tol)


class Subspace:
    def __init__(self, frame: np.ndarray, *, check: bool = True) -> None:
        frame = np.array(frame, dtype=float)
        if frame.ndim != 2:
            raise ValueError('frame should be a d x k matrix')

        self.d: int = frame.shape[0]
        self.k: int = frame.shape[1]
        if check and self.k:
            err = float(np.abs(frame.T @ frame - np.eye(self.k)).max())
            if err > ORTHO_TOL:
                raise ValueError(f'frame is not orthonormal (error {err:.3g})')

        self.frame: np.ndarray = frame
        self._blade: Optional[MultiVector] = None
        self._extended: Optional[np.ndarray] = None

    def __repr__(self) -> str:
        return f'Subspace(d={self.d}, k={self.k})'

    @staticmethod
    def from_vectors(vectors: Sequence[Sequence[float]], d: Optional[int] = None):
        """Orthonormalise linearly independent vectors (Gram-Schmidt)"""
        vectors = [np.asarray(v, dtype=float) for v in vectors]
        if not vectors:
            if d is None:
                raise ValueError('dimension needed for an empty frame')
            return Subspace(np.zeros((d, 0)))

        basis: List[np.ndarray] = []
        for v in vectors:
            scale = np.linalg.norm(v)
            w = _orthogonalise(v, basis)
            n = np.linalg.norm(w)
            if scale == 0 or n <= RANK_TOL * scale:
                raise ValueError('vectors are linearly dependent')
            basis.append(w / n)
        return Subspace(np.column_stack(basis))

    @property
    def blade(self) -> MultiVector:
        """Simple unit k-vector of the frame (defined up to sign)"""
        if self._blade is None:
            self._blade = MultiVector.from_frame(self.frame)
        return self._blade

    def max_index(self) -> int:
        return min(self.k, self.d - self.k)

    def extended_basis(self) -> np.ndarray:
        """Orthonormal basis a_1..a_d of R^d whose first k columns are the frame"""
        if self._extended is None:
            basis = list(self.frame.T)
            for e in np.eye(self.d):
                if len(basis) == self.d:
                    break
                w = _orthogonalise(e, basis)
                n = np.linalg.norm(w)
                if n > COMPLETION_TOL:
                    basis.append(w / n)
            self._extended = np.column_stack(basis)
        return self._extended

    def complement(self):
        """Orthogonal complement"""
        return Subspace(self.extended_basis()[:, self.k:], check=False)

    def projector(self) -> np.ndarray:
        return self.frame @ self.frame.T

    def contains(self, x: np.ndarray, tol: float = RANK_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.linalg.norm(x - self.projector() @ x) <= tol * max(1.0, np.linalg.norm(x)))

    def same_span(self, other, tol: float = RANK_TOL) -> bool:
        return self.d == other.d and self.k == other.k and \
            bool(np.abs(self.projector() - other.projector()).max() <= tol)

    def rotated(self, rho: np.ndarray):
        return Subspace(np.asarray(rho) @ self.frame, check=False)

    def tia_basis(self, i: int):
        return TiaBasis(self, i)

    def products_squared(self, frames: np.ndarray) -> np.ndarray:
        """Squared i-th products <self, B>_i^2 for a frame (d, k) or a stack of frames (n, d, k)"""
        frames = np.asarray(frames, dtype=float)
        if frames.shape[-2:] != (self.d, self.k):
            raise ValueError(f'expected {self.d} x {self.k} frames, got {frames.shape[-2:]}')

        coords = self.extended_basis().T @ frames
        out = np.zeros(coords.shape[:-2] + (self.max_index() + 1,))
        for s in subsets(self.d, self.k):
            i = self.k - sum(1 for j in s if j < self.k)
            out[..., i] += det(coords[..., list(s), :]) ** 2
        return out

    def products(self, other) -> np.ndarray:
        """All i-th products <self, other>_i, i = 0..min(k, d-k)"""
        if self.d != other.d or self.k != other.k:
            raise ValueError(f'subspace mismatch ({self.d},{self.k}) vs ({other.d},{other.k})')
        return np.sqrt(self.products_squared(other.frame))

    def product(self, other, i: int) -> float:
        """i-th product: norm of the projection of other's blade onto T_i(self)"""
        if i < 0 or i > self.max_index():
            raise ValueError(f'product index {i} out of range 0..{self.max_index()}')
        return float(self.products(other)[i])

    @staticmethod
    def blade_inner(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Inner products of the blades of (stacks of) orthonormal frames"""
        return det(np.swapaxes(a, -1, -2) @ b)


class TiaBasis:
    def __init__(self, base: Subspace, i: int) -> None:
        if i < 0 or i > base.max_index():
            raise ValueError(f'index {i} out of range 0..{base.max_index()}')

        self.base: Subspace = base
        self.i: int = i
        k = base.k
        ext = base.extended_basis()
        self.index_sets: List[Tuple[int, ...]] = [
            s for s in subsets(base.d, k) if sum(1 for j in s if j < k) == k - i]
        self.elements: List[MultiVector] = [MultiVector.from_frame(ext[:, list(s)]) for s in self.index_sets]

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def projection_norm(self, blade: MultiVector) -> float:
        """Norm of the orthogonal projection of a k-vector onto T_iA"""
        return float(np.sqrt(sum(blade.inner(e) ** 2 for e in self.elements)))
