# Kernel table for a (d, k, l) triple: moment constants, D matrices, the alpha system and phi^{k,l}.
#
# Part of flagmixvol

import os
import json
import math
import logging
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .Check import Check
from .Constants import Constants, Provenance
from .Flag import Flag
from .Grassmann import MCConfig, MonteCarlo, Grassmann
from .MultiVector import subsets, det

log = logging.getLogger(__name__)

CACHE_VERSION = 1
RESIDUAL_TOL = 1e-10
CACHE_TOL = 1e-10


def flag_basis(u: np.ndarray, U: np.ndarray, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Orthonormal bases (n, d, d) with columns [U | completion of U in u^perp | u]

    With rng, the U block and the completion block are independently rotated.
    """
    n, d, j = U.shape
    stacked = np.concatenate([U, u[:, :, None], np.broadcast_to(np.eye(d), (n, d, d))], axis=-1)
    q, _ = np.linalg.qr(stacked)
    rest = q[:, :, j + 1:]
    if rng is not None:
        if j:
            U = U @ Grassmann.sample_rotation(j, rng)
        if rest.shape[-1]:
            rest = rest @ Grassmann.sample_rotation(rest.shape[-1], rng)
    return np.concatenate([U, rest, u[:, :, None]], axis=-1)


class PhiTable:
    def __init__(self, d: int, k: int, c_k: np.ndarray, c_l: np.ndarray, *,
                 errors: Optional[Dict[str, List[float]]] = None,
                 provenance: Optional[Dict[str, List[Provenance]]] = None,
                 seed: Optional[int] = None, n: Optional[int] = None, exact: bool = False) -> None:
        if d < 2 or not 1 <= k <= d - 1:
            raise ValueError(f'invalid kernel indices d={d} k={k}')

        self.d: int = d
        self.k: int = k
        self.l: int = d - k
        self.k_star: int = d - 1 - k
        self.l_star: int = d - 1 - self.l
        self.c_k: np.ndarray = np.asarray(c_k, dtype=float)
        self.c_l: np.ndarray = np.asarray(c_l, dtype=float)
        self.errors: Dict[str, List[float]] = errors or {
            'c_k': [0.0] * len(self.c_k), 'c_l': [0.0] * len(self.c_l)}
        self.provenance: Dict[str, List[Provenance]] = provenance or {
            'c_k': [Provenance.EXACT] * len(self.c_k), 'c_l': [Provenance.EXACT] * len(self.c_l)}
        self.seed: Optional[int] = seed
        self.n: Optional[int] = n
        self.exact: bool = exact

        self.D_k: np.ndarray = Constants.d_matrix(d - 1, self.k_star, self.c_k)
        self.D_l: np.ndarray = Constants.d_matrix(d - 1, self.l_star, self.c_l)
        self.kron: np.ndarray = np.kron(self.D_k, self.D_l)
        self.condition: float = float(np.linalg.cond(self.kron))

        rhs = np.zeros(self.kron.shape[0])
        rhs[0] = 1 / self.gamma_product
        solution = np.linalg.solve(self.kron.T, rhs)
        residual = np.linalg.norm(solution @ self.kron - rhs)
        if residual >= RESIDUAL_TOL * np.linalg.norm(rhs):
            raise RuntimeError(f'alpha system residual too large ({residual:.3g}, condition {self.condition:.3g})')
        self.alpha: np.ndarray = solution.reshape(self.D_k.shape[0], self.D_l.shape[0])

        # (I, p, J, q) for every term of phi_{p,q}
        self._terms: List[Tuple[List[int], int, List[int], int]] = [
            (list(i_set), self.k_star - sum(1 for i in i_set if i < self.k_star),
             list(j_set), self.l_star - sum(1 for j in j_set if j < self.l_star))
            for i_set in subsets(d - 1, self.k_star) for j_set in subsets(d - 1, self.l_star)]

    def __repr__(self) -> str:
        return f'PhiTable(d={self.d}, k={self.k}, l={self.l}, exact={self.exact})'

    @property
    def gamma_product(self) -> float:
        return Constants.gamma_consts(self.d, self.k)[1] * Constants.gamma_consts(self.d, self.l)[1]

    @staticmethod
    def build(d: int, k: int, config: Optional[MCConfig] = None, *, exact: bool = False):
        """Compute the moment constants and solve for alpha"""
        if d < 2 or not 1 <= k <= d - 1:
            raise ValueError(f'invalid kernel indices d={d} k={k}')
        config = config or MCConfig()
        k_star, l_star = d - 1 - k, k - 1

        c_k, e_k, p_k = Constants.c_constants(d - 1, k_star, config, exact=exact)
        if l_star == k_star:
            c_l, e_l, p_l = c_k, e_k, p_k
        else:
            c_l, e_l, p_l = Constants.c_constants(d - 1, l_star, config.spawn(1), exact=exact)

        all_exact = all(p is Provenance.EXACT for p in p_k + p_l)
        return PhiTable(d, k, c_k, c_l,
                        errors={'c_k': list(map(float, e_k)), 'c_l': list(map(float, e_l))},
                        provenance={'c_k': p_k, 'c_l': p_l},
                        seed=None if all_exact else config.seed,
                        n=None if all_exact else config.sample_count,
                        exact=all_exact)

    @staticmethod
    def cache_path(cache_dir: str, d: int, k: int, config: Optional[MCConfig] = None, *, exact: bool = False) -> str:
        if exact:
            name = f'phi_d{d}_k{k}_exact.json'
        else:
            config = config or MCConfig()
            name = f'phi_d{d}_k{k}_s{config.seed}_n{config.sample_count}_b{config.batch_count}_c{config.chunk_size}.json'
        return os.path.join(cache_dir, name)

    @staticmethod
    def cached(d: int, k: int, config: Optional[MCConfig] = None, *, exact: bool = False,
               cache_dir: Optional[str] = None):
        """Load the table from the cache directory, building and saving it on a miss"""
        if cache_dir is None:
            return PhiTable.build(d, k, config, exact=exact)

        path = PhiTable.cache_path(cache_dir, d, k, config, exact=exact)
        if os.path.exists(path):
            log.debug('phi table cache hit %s', path)
            return PhiTable.open(path)

        table = PhiTable.build(d, k, config, exact=exact)
        os.makedirs(cache_dir, exist_ok=True)
        table.save(path)
        log.info('phi table written to %s', path)
        return table

    @staticmethod
    def from_dict(data: Dict[str, Any]):
        if data.get('version') != CACHE_VERSION:
            raise ValueError(f'unsupported phi table version ({data.get("version")})')
        table = PhiTable(int(data['d']), int(data['k']), data['c_k'], data['c_l'],
                         errors={key: list(value) for key, value in data['errors'].items()},
                         provenance={key: [Provenance(p) for p in value] for key, value in data['provenance'].items()},
                         seed=data.get('seed'), n=data.get('n'), exact=bool(data.get('exact')))
        stored = np.asarray(data['alpha'], dtype=float)
        if stored.shape != table.alpha.shape or \
                np.abs(stored - table.alpha).max() > CACHE_TOL * max(1.0, np.abs(table.alpha).max()):
            raise RuntimeError('cached alpha does not match its moment constants')
        return table

    @staticmethod
    def open(path: str):
        """Load a table saved with save()"""
        with open(path, 'r', encoding='utf-8') as f:
            return PhiTable.from_dict(json.load(f))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'version': CACHE_VERSION,
            'd': self.d,
            'k': self.k,
            'l': self.l,
            'c_k': self.c_k.tolist(),
            'c_l': self.c_l.tolist(),
            'D_k': self.D_k.tolist(),
            'D_l': self.D_l.tolist(),
            'alpha': self.alpha.tolist(),
            'errors': self.errors,
            'provenance': {key: [p.value for p in value] for key, value in self.provenance.items()},
            'seed': self.seed,
            'n': self.n,
            'exact': self.exact,
            'condition': self.condition,
        }

    def save(self, path: str) -> None:
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, indent=1, sort_keys=True)

    def swapped(self):
        """Table for (d, l, k); its alpha is the transpose"""
        return PhiTable(self.d, self.l, self.c_l, self.c_k,
                        errors={'c_k': self.errors['c_l'], 'c_l': self.errors['c_k']},
                        provenance={'c_k': self.provenance['c_l'], 'c_l': self.provenance['c_k']},
                        seed=self.seed, n=self.n, exact=self.exact)

    def _check_frames(self, u: np.ndarray, U: np.ndarray, v: np.ndarray, V: np.ndarray) -> None:
        if u.shape[-1] != self.d or v.shape[-1] != self.d:
            raise ValueError(f'flags should live in R^{self.d}')
        if U.shape[-1] != self.k_star or V.shape[-1] != self.l_star:
            raise ValueError(f'flag dimensions ({U.shape[-1]}, {V.shape[-1]}) do not match '
                             f'table ({self.k_star}, {self.l_star})')

    def phi_terms(self, u: np.ndarray, U: np.ndarray, v: np.ndarray, V: np.ndarray,
                  rng: Optional[np.random.Generator] = None) -> np.ndarray:
        """phi_{p,q} for stacks of flags: u, v (n, d), U (n, d, k*), V (n, d, l*) -> (n, P, Q)"""
        u, v = np.atleast_2d(u), np.atleast_2d(v)
        U = np.asarray(U, dtype=float).reshape(u.shape[0], self.d, self.k_star)
        V = np.asarray(V, dtype=float).reshape(v.shape[0], self.d, self.l_star)
        self._check_frames(u, U, v, V)

        ub = flag_basis(u, U, rng)
        vb = flag_basis(v, V, rng)
        out = np.zeros((u.shape[0],) + self.alpha.shape)
        for i_set, p, j_set, q in self._terms:
            m = np.concatenate([ub[:, :, i_set], u[:, :, None], vb[:, :, j_set], v[:, :, None]], axis=-1)
            out[:, p, q] += det(m) ** 2
        return out

    def phi_array(self, u: np.ndarray, U: np.ndarray, v: np.ndarray, V: np.ndarray) -> np.ndarray:
        return np.einsum('npq,pq->n', self.phi_terms(u, U, v, V), self.alpha)

    def phi_pq(self, flag_u: Flag, flag_v: Flag, p: int, q: int) -> float:
        if not 0 <= p < self.alpha.shape[0] or not 0 <= q < self.alpha.shape[1]:
            raise ValueError(f'index ({p},{q}) out of range for alpha of shape {self.alpha.shape}')
        return float(self.phi_terms(flag_u.u, flag_u.U.frame, flag_v.u, flag_v.U.frame)[0, p, q])

    def phi(self, flag_u: Flag, flag_v: Flag) -> float:
        """phi^{k,l}(u, U, v, V)"""
        return float(self.phi_array(flag_u.u, flag_u.U.frame, flag_v.u, flag_v.U.frame)[0])

    def bound_constant(self) -> float:
        """C with |phi| <= C sin^2(angle(u, v))"""
        return float(np.abs(self.alpha).sum() * len(self._terms))

    @staticmethod
    def phi22_angles(u: np.ndarray, U: np.ndarray, v: np.ndarray, V: np.ndarray) -> np.ndarray:
        """Closed form of phi^{2,2} in R^4 from the angles of U, V to span(u, v)^perp

        u, v (n, 4); U, V (n, 4, 1) or (n, 4).
        """
        u, v = np.atleast_2d(u), np.atleast_2d(v)
        w = np.asarray(U, dtype=float).reshape(u.shape)
        z = np.asarray(V, dtype=float).reshape(v.shape)

        cos_b = np.einsum('nd,nd->n', u, v)
        e = v - cos_b[:, None] * u
        sin2 = np.einsum('nd,nd->n', e, e)
        e = e / np.sqrt(np.where(sin2 > 0, sin2, 1.0))[:, None]

        def project(x: np.ndarray) -> np.ndarray:
            x = x - np.einsum('nd,nd->n', x, u)[:, None] * u
            return x - np.einsum('nd,nd->n', x, e)[:, None] * e

        pw, pz = project(w), project(z)
        cu = np.einsum('nd,nd->n', pw, pw)
        cv = np.einsum('nd,nd->n', pz, pz)
        x = cu * cv - np.einsum('nd,nd->n', pw, pz) ** 2
        value = math.pi ** 2 * sin2 * (25 * x + (1 - cu) + (1 - cv) - 4 * cu - 4 * cv)
        return np.where(sin2 > 0, value, 0.0)

    def verify_pdint(self, config: MCConfig, flag_a: Optional[Flag] = None, flag_b: Optional[Flag] = None,
                     *, sigmas: float = 3.0) -> Check:
        """Compare the double Grassmannian integral of <A,U>^2 phi <V,B>^2 with ||A^u^B^v||^2 / (gamma gamma)"""
        rng = config.rng(7)
        if flag_a is None:
            flag_a = Flag.random(self.d, self.k_star, rng)
        if flag_b is None:
            flag_b = Flag.random(self.d, self.l_star, rng)
        if flag_a.j != self.k_star or flag_b.j != self.l_star:
            raise ValueError('flags do not match the table dimensions')

        u, v = flag_a.u, flag_b.u
        A, B = flag_a.U.frame, flag_b.U.frame
        expected = det(np.column_stack([A, u, B, v])) ** 2 / self.gamma_product

        def sampler(g: np.random.Generator, n: int):
            us = np.broadcast_to(u, (n, self.d))
            vs = np.broadcast_to(v, (n, self.d))
            U = Grassmann.sample_orthogonal(us, self.k_star, g)
            V = Grassmann.sample_orthogonal(vs, self.l_star, g)
            weight_a = det(np.swapaxes(U, -1, -2) @ A) ** 2
            weight_b = det(np.swapaxes(V, -1, -2) @ B) ** 2
            return self.phi_array(us, U, vs, V), weight_a * weight_b

        estimate = MonteCarlo.integrate(sampler, config)
        log.debug('double integral %s vs %.8g', estimate, expected)
        return Check.against(f'pdint d={self.d} k={self.k}', estimate, float(expected), sigmas=sigmas,
                             rel=1e-12)
