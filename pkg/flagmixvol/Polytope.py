# Convex polytopes with explicit face lattices, normal cones and external angles.
#
# Part of flagmixvol

import copy
import json
import math
import logging
import operator
import functools
import itertools
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from bitarray import bitarray, frozenbitarray
from scipy.spatial import ConvexHull

from .Constants import Constants
from .Grassmann import Grassmann
from .MultiVector import Subspace, det

log = logging.getLogger(__name__)

RANK_TOL = 1e-10
SUPPORT_TOL = 1e-10
ORTHO_TOL = 1e-10
MAX_ZONOTOPE_GENERATORS = 12
ANGLE_SAMPLES = 200_000


def affine_frames(points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Orthonormal frames of the direction space of aff(points) and of its complement"""
    diffs = points - points[0]
    _, s, vt = np.linalg.svd(diffs, full_matrices=True)
    rank = int(np.sum(s > RANK_TOL * max(1.0, s[0] if len(s) else 0.0)))
    return vt[:rank].T, vt[rank:].T


def mask_of(ids: Iterable[int], size: int) -> frozenbitarray:
    mask = bitarray(size)
    mask.setall(0)
    for i in ids:
        mask[i] = 1
    return frozenbitarray(mask)


def ids_of(mask: bitarray) -> List[int]:
    return [i for i, bit in enumerate(mask) if bit]


def spherical_polygon_area(points: np.ndarray) -> float:
    """Area of a convex spherical polygon given by its vertices on S^2 (any order)"""
    center = points.sum(axis=0)
    center /= np.linalg.norm(center)
    e1 = points[0] - (points[0] @ center) * center
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(center, e1)
    order = np.argsort(np.arctan2(points @ e2, points @ e1))
    ring = points[order]

    area = 0.0
    a = ring[0]
    for b, c in zip(ring[1:-1], ring[2:]):
        # spherical excess of the triangle (a, b, c)
        area += 2 * math.atan2(abs(a @ np.cross(b, c)), 1 + a @ b + b @ c + c @ a)
    return area


class FaceData:
    def __init__(self, dim: int, index: int, vertex_ids: Tuple[int, ...], mask: frozenbitarray,
                 anchor: np.ndarray, frame: np.ndarray, normal_frame: np.ndarray,
                 volume: float, normals: np.ndarray) -> None:
        self.dim: int = dim
        self.index: int = index
        self.vertex_ids: Tuple[int, ...] = vertex_ids
        self.mask: frozenbitarray = mask
        self.anchor: np.ndarray = anchor
        self.frame: np.ndarray = frame
        self.normal_frame: np.ndarray = normal_frame
        self.volume: float = volume
        self.normals: np.ndarray = normals
        self.external_angle: Optional[float] = None
        self.angle_exact: bool = False

    def __repr__(self) -> str:
        return f'FaceData(dim={self.dim}, index={self.index}, vertices={list(self.vertex_ids)}, volume={self.volume:.6g})'

    @property
    def tangent(self) -> Subspace:
        """L(F)"""
        return Subspace(self.frame, check=False)

    @property
    def cone_dim(self) -> int:
        """dim N(K,F) = d - dim F"""
        return self.normal_frame.shape[1]

    def mapped(self, matrix: Optional[np.ndarray] = None, shift: Optional[np.ndarray] = None):
        face = copy.copy(self)
        if matrix is not None:
            face.anchor = matrix @ face.anchor
            face.frame = matrix @ face.frame
            face.normal_frame = matrix @ face.normal_frame
            face.normals = face.normals @ matrix.T
        if shift is not None:
            face.anchor = face.anchor + shift
        return face


class Polytope:
    def __init__(self, vertices: Sequence[Sequence[float]], facets: Sequence[Sequence[int]], *,
                 angle_samples: int = ANGLE_SAMPLES, seed: int = 0) -> None:
        """Polytope from its vertices and (relative) facets given as vertex-id lists"""
        self.vertices: np.ndarray = np.array(vertices, dtype=float)
        if self.vertices.ndim != 2 or not len(self.vertices):
            raise ValueError('vertices should be a non-empty n x d array')
        self.d: int = self.vertices.shape[1]
        self.angle_samples: int = angle_samples
        self.seed: int = seed

        self.affine_frame, _ = affine_frames(self.vertices)
        self.body_dim: int = self.affine_frame.shape[1]
        self.centroid: np.ndarray = self.vertices.mean(axis=0)
        self.extent: float = max(1.0, float(np.ptp(self.vertices, axis=0).max()))

        n = len(self.vertices)
        self.facet_masks: List[frozenbitarray] = []
        for facet in facets:
            if any(i < 0 or i >= n for i in facet):
                raise ValueError(f'facet vertex id out of range ({list(facet)})')
            if affine_frames(self.vertices[list(facet)])[0].shape[1] != self.body_dim - 1:
                raise ValueError(f'facet {list(facet)} does not have dimension {self.body_dim - 1}')
            self.facet_masks.append(mask_of(facet, n))

        self.facet_normals: np.ndarray = np.array([self._facet_normal(m) for m in self.facet_masks]).reshape(-1, self.d)
        self.faces: List[List[FaceData]] = [[] for _ in range(self.body_dim + 1)]
        for mask in sorted(self._lattice(), key=lambda m: (m.count(), m.tolist())):
            self._add_face(mask)

        log.debug('polytope in R^%d: f-vector %s', self.d, self.f_vector())

    def __repr__(self) -> str:
        return f'Polytope(d={self.d}, body_dim={self.body_dim}, f={self.f_vector()})'

    def _lattice(self) -> List[frozenbitarray]:
        # faces are the intersections of facets, plus the body itself
        full = frozenbitarray(len(self.vertices) * '1')
        seen = {full}
        frontier = list(set(self.facet_masks))
        seen.update(frontier)
        while frontier:
            found = []
            for face in frontier:
                for facet in self.facet_masks:
                    meet = face & facet
                    if meet.any() and meet not in seen:
                        seen.add(meet)
                        found.append(meet)
            frontier = found
        return list(seen)

    def _facet_normal(self, mask: frozenbitarray) -> np.ndarray:
        points = self.vertices[ids_of(mask)]
        frame, _ = affine_frames(points)
        outward = points[0] - self.centroid
        outward = outward - frame @ (frame.T @ outward)
        outward = self.affine_frame @ (self.affine_frame.T @ outward)
        return outward / np.linalg.norm(outward)

    def _add_face(self, mask: frozenbitarray) -> None:
        ids = tuple(ids_of(mask))
        points = self.vertices[list(ids)]
        frame, normal_frame = affine_frames(points)
        dim = frame.shape[1]

        if dim == 0:
            volume = 1.0
        elif dim == 1:
            volume = float(np.linalg.norm(points - points[0], axis=1).max())
        else:
            volume = float(ConvexHull((points - points[0]) @ frame).volume)

        containing = [i for i, facet in enumerate(self.facet_masks) if not (mask & ~facet).any()]
        face = FaceData(dim, len(self.faces[dim]), ids, mask, points[0].copy(), frame, normal_frame, volume,
                        self.facet_normals[containing].reshape(-1, self.d))
        self._exact_angle(face)
        self.faces[dim].append(face)

    def _exact_angle(self, face: FaceData) -> None:
        r = self.body_dim - face.dim
        normals = face.normals
        if r == 0:
            angle = 1.0
        elif r == 1:
            angle = 0.5
        elif r == 2:
            angle = math.acos(float(np.clip(normals[0] @ normals[1], -1, 1))) / (2 * math.pi)
        elif r == 3:
            _, _, vt = np.linalg.svd(normals)
            angle = spherical_polygon_area(normals @ vt[:3].T) / (4 * math.pi)
        else:
            return
        face.external_angle = angle
        face.angle_exact = True

    def f_vector(self) -> List[int]:
        return [len(faces) for faces in self.faces]

    def body(self) -> FaceData:
        return self.faces[self.body_dim][0]

    def face_list(self, k: int) -> List[FaceData]:
        """k-faces (empty outside 0..body_dim)"""
        return self.faces[k] if 0 <= k <= self.body_dim else []

    def supports(self, face: FaceData, u: np.ndarray) -> np.ndarray:
        """Whether unit vector(s) u lie in the normal cone N(K, F)"""
        u = np.atleast_2d(u)
        heights = (self.vertices - face.anchor) @ u.T
        return heights.max(axis=0) <= SUPPORT_TOL * self.extent

    def sample_cone(self, face: FaceData, rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
        """n uniform unit vectors of L(F)^perp with their normal-cone membership"""
        coords = Grassmann.sample_sphere(face.cone_dim, rng, size=n)
        u = coords @ face.normal_frame.T
        return u, self.supports(face, u)

    def sample_normal_patch(self, face: FaceData, rng: np.random.Generator, *, budget: int = 10_000):
        """Uniform u on nu(K,F) by rejection, with the patch measure estimated from the acceptance rate

        The patch of a facet is the single outward normal, an atom of weight 1.
        """
        if face.cone_dim == 1:
            return face.normals[0].copy(), 1.0
        u, inside = self.sample_cone(face, rng, budget)
        accepted = int(inside.sum())
        if not accepted:
            raise RuntimeError(f'no normal-cone sample accepted for {face} in {budget} draws')
        weight = accepted / budget * Constants.sphere_area(face.cone_dim - 1)
        return u[np.argmax(inside)], weight

    def face_tangent_normal_frames(self, face: FaceData, u: np.ndarray) -> np.ndarray:
        """Frames of L(F)^perp cap u^perp for a stack of u in L(F)^perp: (n, d, d-1-dim F)"""
        u = np.atleast_2d(u)
        c = u @ face.normal_frame
        c = c / np.linalg.norm(c, axis=1, keepdims=True)
        r = c.shape[1]

        # Householder reflection mapping c to a multiple of e_0; its other columns span c^perp
        s = np.where(c[:, 0] >= 0, 1.0, -1.0)
        w = c.copy()
        w[:, 0] += s
        h = np.eye(r) - 2 * w[:, :, None] * w[:, None, :] / np.einsum('ni,ni->n', w, w)[:, None, None]
        return face.normal_frame @ h[:, :, 1:]

    def normal_subspace(self, face: FaceData, u: Sequence[float]) -> Subspace:
        """L(F)^perp cap u^perp for a single u in nu(K,F)"""
        u = np.asarray(u, dtype=float)
        if not self.supports(face, u)[0] or np.linalg.norm(face.frame.T @ u) > ORTHO_TOL:
            raise ValueError('vector is not in the normal cone of the face')
        return Subspace(self.face_tangent_normal_frames(face, u)[0], check=False)

    def sample_normals(self, k: int, rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """n weighted normal-bundle samples (u, L(F)^perp cap u^perp, weight) over the k-faces

        Faces are drawn by k-volume and u uniformly on the unit sphere of L(F)^perp, so the weights
        integrate sum_F H^k(F) H^{k*}(nu(K,F) cap .).
        """
        faces = self.face_list(k)
        if not faces or k > self.d - 1:
            raise ValueError(f'polytope has no {k}-faces with non-trivial normal cones')
        k_star = self.d - 1 - k
        volumes = np.array([face.volume for face in faces])
        scale = volumes.sum() * Constants.sphere_area(k_star)

        choice = rng.choice(len(faces), size=n, p=volumes / volumes.sum())
        u = np.zeros((n, self.d))
        A = np.zeros((n, self.d, k_star))
        inside = np.zeros(n, dtype=bool)
        for i, face in enumerate(faces):
            rows = np.flatnonzero(choice == i)
            if len(rows):
                u[rows], inside[rows] = self.sample_cone(face, rng, len(rows))
                A[rows] = self.face_tangent_normal_frames(face, u[rows])
        return u, A, scale * inside

    def sample_flags(self, k: int, rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """n weighted flags (u, U) for Omega_k"""
        u, A, weights = self.sample_normals(k, rng, n)
        U = Grassmann.sample_orthogonal(u, self.d - 1 - k, rng)
        gamma = Constants.gamma_consts(self.d, k)[1]
        return u, U, gamma * weights * det(np.swapaxes(U, -1, -2) @ A) ** 2

    def external_angle(self, face: FaceData) -> float:
        """gamma(F, K); Monte Carlo for normal cones of dimension 4 and above"""
        if face.external_angle is None:
            rng = np.random.default_rng([self.seed, face.dim, face.index])
            hits = 0
            for start in range(0, self.angle_samples, 16384):
                _, inside = self.sample_cone(face, rng, min(16384, self.angle_samples - start))
                hits += int(inside.sum())
            face.external_angle = hits / self.angle_samples
        return face.external_angle

    def angle_error(self, face: FaceData) -> float:
        if face.angle_exact:
            return 0.0
        p = self.external_angle(face)
        return math.sqrt(p * (1 - p) / self.angle_samples)

    def intrinsic_volume(self, k: int) -> float:
        """V_k(K) = sum over k-faces of H^k(F) gamma(F, K)"""
        if k < 0 or k > self.d:
            raise ValueError(f'invalid intrinsic volume index ({k})')
        return float(sum(face.volume * self.external_angle(face) for face in self.face_list(k)))

    def volume(self) -> float:
        return self.body().volume if self.body_dim == self.d else 0.0

    def euler_characteristic(self) -> int:
        return sum((-1) ** j * f for j, f in enumerate(self.f_vector()))

    def rotate(self, rho: np.ndarray):
        rho = np.asarray(rho, dtype=float)
        if rho.shape != (self.d, self.d) or np.abs(rho.T @ rho - np.eye(self.d)).max() > ORTHO_TOL:
            raise ValueError('rotation matrix is not orthogonal')
        return self._mapped(rho, None)

    def translate(self, t: Sequence[float]):
        t = np.asarray(t, dtype=float)
        if t.shape != (self.d,):
            raise ValueError(f'translation should have dimension {self.d}')
        return self._mapped(None, t)

    def reflect(self):
        """-K"""
        return self._mapped(-np.eye(self.d), None)

    def scale(self, s: float):
        if s <= 0:
            raise ValueError(f'invalid scale factor ({s})')
        return Polytope(self.vertices * s, self.facets(), angle_samples=self.angle_samples, seed=self.seed)

    def _mapped(self, matrix: Optional[np.ndarray], shift: Optional[np.ndarray]):
        poly = copy.copy(self)
        poly.vertices = self.vertices if matrix is None else self.vertices @ matrix.T
        poly.centroid = self.centroid if matrix is None else matrix @ self.centroid
        if shift is not None:
            poly.vertices = poly.vertices + shift
            poly.centroid = poly.centroid + shift
        if matrix is not None:
            poly.affine_frame = matrix @ self.affine_frame
            poly.facet_normals = self.facet_normals @ matrix.T
        poly.faces = [[face.mapped(matrix, shift) for face in faces] for faces in self.faces]
        return poly

    def facets(self) -> List[List[int]]:
        return [ids_of(m) for m in self.facet_masks]

    @staticmethod
    def parallel_face_pair(K, L, k: int) -> Optional[Tuple[int, int]]:
        """First (F, G) in F_k(K) x F_l(L) with L(F) cap L(G) != {o}, or None"""
        if K.d != L.d or not 1 <= k <= K.d - 1:
            raise ValueError(f'invalid index k={k} for bodies in R^{K.d} and R^{L.d}')
        faces_k, faces_l = K.face_list(k), L.face_list(K.d - k)
        if not faces_k or not faces_l:
            return None

        fk = np.array([face.frame for face in faces_k])
        fl = np.array([face.frame for face in faces_l])
        stacked = np.concatenate([np.broadcast_to(fk[:, None], (len(fk), len(fl)) + fk.shape[1:]),
                                  np.broadcast_to(fl[None, :], (len(fk), len(fl)) + fl.shape[1:])], axis=-1)
        smallest = np.linalg.svd(stacked, compute_uv=False)[..., -1]
        bad = np.argwhere(smallest <= RANK_TOL)
        if len(bad):
            return int(bad[0][0]), int(bad[0][1])
        return None

    @staticmethod
    def general_relative_position(K, L, k: int) -> bool:
        return Polytope.parallel_face_pair(K, L, k) is None

    @staticmethod
    def make_simplex(d: int):
        """Convex hull of the origin and the canonical basis"""
        if d < 1:
            raise ValueError(f'invalid dimension ({d})')
        vertices = np.vstack([np.zeros(d), np.eye(d)])
        return Polytope(vertices, list(itertools.combinations(range(d + 1), d)))

    @staticmethod
    def make_box(d: int, side_lengths: Optional[Sequence[float]] = None):
        """Axis-parallel box [0, s_1] x ... x [0, s_d]; vertex id bit i selects s_i"""
        sides = np.ones(d) if side_lengths is None else np.asarray(side_lengths, dtype=float)
        if d < 1 or sides.shape != (d,) or (sides <= 0).any():
            raise ValueError(f'invalid box ({d}, {side_lengths})')
        ids = range(2 ** d)
        vertices = [[sides[i] if v >> i & 1 else 0.0 for i in range(d)] for v in ids]
        facets = [[v for v in ids if (v >> i & 1) == b] for i in range(d) for b in (0, 1)]
        return Polytope(vertices, facets)

    @staticmethod
    def make_cross(d: int):
        """Cross-polytope conv(+-e_i); vertex 2i is e_i, 2i+1 is -e_i"""
        if d < 2:
            raise ValueError(f'invalid dimension ({d})')
        vertices = np.zeros((2 * d, d))
        for i in range(d):
            vertices[2 * i, i] = 1
            vertices[2 * i + 1, i] = -1
        facets = [[2 * i + s for i, s in enumerate(signs)] for signs in itertools.product((0, 1), repeat=d)]
        return Polytope(vertices, facets)

    @staticmethod
    def make_square4d():
        """Unit square [0,1]^2 x {0}^2 in R^4"""
        vertices = [[0, 0, 0, 0], [1, 0, 0, 0], [1, 1, 0, 0], [0, 1, 0, 0]]
        return Polytope(vertices, [[0, 1], [1, 2], [2, 3], [3, 0]])

    @staticmethod
    def make_zonotope(segments: Sequence[Sequence[float]]):
        """Minkowski sum of the segments [0, g_i]"""
        gens = np.array(segments, dtype=float)
        if gens.ndim != 2 or not len(gens):
            raise ValueError('zonotope needs a non-empty list of generators')
        m, d = gens.shape
        if m > MAX_ZONOTOPE_GENERATORS:
            raise ValueError(f'too many zonotope generators ({m} > {MAX_ZONOTOPE_GENERATORS})')
        if np.linalg.matrix_rank(gens, tol=RANK_TOL) < d:
            raise ValueError('zonotope generators do not span the space')

        sums = np.array(list(itertools.product((0, 1), repeat=m)), dtype=float) @ gens
        points = np.unique(np.round(sums, 12), axis=0)
        tol = SUPPORT_TOL * max(1.0, np.abs(gens).sum())

        normals = []
        for subset in itertools.combinations(range(m), d - 1):
            sub = gens[list(subset)]
            # generalised cross product: cofactors of the (d-1) x d matrix
            n = np.array([(-1) ** i * det(np.delete(sub, i, axis=1)) for i in range(d)])
            length = np.linalg.norm(n)
            if length <= RANK_TOL:
                continue
            n /= length
            if not any(abs(abs(n @ other) - 1) <= 1e-9 for other in normals):
                normals.append(n)

        facet_masks = []
        for n in normals:
            for s in (1.0, -1.0):
                heights = s * points @ n
                facet_masks.append(mask_of(np.flatnonzero(heights >= heights.max() - tol), len(points)))

        full = frozenbitarray(len(points) * '1')
        containing = [[f for f in facet_masks if f[i]] for i in range(len(points))]
        vertex_ids = [i for i in range(len(points))
                      if functools.reduce(operator.and_, containing[i], full).count() == 1]
        remap = {old: new for new, old in enumerate(vertex_ids)}
        facets = [[remap[i] for i in ids_of(f) if i in remap] for f in facet_masks]
        log.debug('zonotope with %d generators: %d vertices, %d facets', m, len(vertex_ids), len(facets))
        return Polytope(points[vertex_ids], facets)

    @staticmethod
    def from_points(points: Sequence[Sequence[float]]):
        """Convex hull of a full-dimensional point set, coplanar hull simplices merged into facets"""
        points = np.array(points, dtype=float)
        hull = ConvexHull(points)
        groups: List[Tuple[np.ndarray, set]] = []
        for equation, simplex in zip(hull.equations, hull.simplices):
            for eq, ids in groups:
                if np.allclose(eq, equation, atol=1e-9):
                    ids.update(simplex)
                    break
            else:
                groups.append((equation, set(simplex)))
        remap = {old: new for new, old in enumerate(hull.vertices)}
        return Polytope(points[hull.vertices], [sorted(remap[i] for i in ids) for _, ids in groups])

    @staticmethod
    def from_dict(data: Dict[str, Any]):
        vertices = np.array(data['vertices'], dtype=float)
        if vertices.ndim != 2 or vertices.shape[1] != int(data['d']):
            raise ValueError(f'vertices do not match dimension {data["d"]}')
        faces = data.get('faces')
        if not faces:
            return Polytope.from_points(vertices)

        body_dim = affine_frames(vertices)[0].shape[1]
        poly = Polytope(vertices, [f['vertex_ids'] for f in faces if f['dim'] == body_dim - 1])
        lattice = {face.mask: face.dim for faces_j in poly.faces for face in faces_j}
        for f in faces:
            mask = mask_of(f['vertex_ids'], len(vertices))
            if lattice.get(mask) != f['dim']:
                raise ValueError(f'face {f["vertex_ids"]} of dimension {f["dim"]} is not in the face lattice')
        return poly

    @staticmethod
    def open(path: str):
        """Load polytope from JSON file"""
        with open(path, 'r', encoding='utf-8') as f:
            return Polytope.from_dict(json.load(f))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'd': self.d,
            'vertices': self.vertices.tolist(),
            'faces': [{'dim': face.dim, 'vertex_ids': list(face.vertex_ids)}
                      for faces in self.faces for face in faces],
        }

    def save(self, path: str) -> None:
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, indent=1)
