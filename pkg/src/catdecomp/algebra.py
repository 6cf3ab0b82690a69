"""Finite-dimensional matrix *-algebras.

Algebras are stored as subspaces of ``B(C^d)`` with an orthonormal
Hilbert-Schmidt basis. The Wedderburn decomposition follows the
matrix-unit construction: minimal projectors ``Q_i`` of a central block,
``E_1j = Q_1 X_j Q_j`` rescaled so that ``E_1j E_1j^† = Q_1``, and
``E_ij = E_1i^† E_1j``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    dag,
    hermitian_part,
    orthonormalize,
    spectral_projectors,
    stacked_null_space,
    subspace_intersection,
)

log = logging.getLogger(__name__)

ALGEBRA_TOL = 1e-8
GENERICITY_GAP = 1e-6
MAX_RESAMPLES = 8
RECONSTRUCTION_TOL = 1e-7


class NumericalDegeneracyError(RuntimeError):
    """Randomized genericity failed after the allowed number of resamples."""


class AlgebraClosureError(RuntimeError):
    """An algebra failed a structural check (closure, matrix units, reconstruction)."""


@dataclass
class OperatorAlgebra:
    ambient_dim: int
    basis: np.ndarray
    contains_identity: bool = True

    @property
    def dim(self) -> int:
        return len(self.basis)

    def closure_error(self) -> float:
        """Worst residual of adjoints and pairwise products outside the span."""
        from .linalg import hs_project

        worst = 0.0
        for a in self.basis:
            worst = max(worst, np.linalg.norm(dag(a) - hs_project(dag(a), self.basis)))
        prods = np.einsum("aij,bjk->abik", self.basis, self.basis).reshape(-1, *self.basis.shape[1:])
        q = self.basis.reshape(self.dim, -1)
        p = prods.reshape(len(prods), -1)
        res = p - (p @ q.conj().T) @ q
        if len(res):
            worst = max(worst, float(np.linalg.norm(res, axis=1).max()))
        return float(worst)


def full_algebra(d: int) -> OperatorAlgebra:
    basis = np.zeros((d * d, d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            basis[i * d + j, i, j] = 1.0
    return OperatorAlgebra(d, basis)


def scalar_algebra(d: int) -> OperatorAlgebra:
    return OperatorAlgebra(d, (np.eye(d, dtype=complex) / np.sqrt(d))[None])


def generate_star_algebra(generators, tol: float = ALGEBRA_TOL, unital: bool = True,
                          derivations=()) -> OperatorAlgebra:
    """Smallest *-algebra containing ``generators``.

    Words are built by left multiplication with the (adjoint-closed)
    generator span until the dimension stops growing. ``derivations`` are
    Hermitian matrices H whose commutator action ``X -> [H, X]`` the result
    must also be invariant under; this is how closure under a modular flow
    ``X -> s^{it} X s^{-it}`` (H = log s) is requested.
    """
    gens = np.asarray(generators, dtype=complex)
    if gens.ndim == 2:
        gens = gens[None]
    d = gens.shape[-1]
    if gens.shape[1] != d:
        raise ValueError("generators must be square")
    g = orthonormalize(np.concatenate([gens, dag(gens)]), tol=tol)
    seeds = [g]
    if unital:
        seeds.insert(0, np.eye(d, dtype=complex)[None])
    basis = orthonormalize(np.concatenate(seeds), tol=tol)
    frontier = basis
    derivations = [np.asarray(h, dtype=complex) for h in derivations]
    for _ in range(d * d + 1):
        if len(frontier) == 0 or len(basis) == d * d:
            break
        cand = [np.einsum("aij,bjk->abik", g, frontier).reshape(-1, d, d)]
        cand.append(dag(frontier))
        for h in derivations:
            cand.append(h[None] @ frontier - frontier @ h[None])
        new = []
        c = np.concatenate(cand)
        for start in range(0, len(c), 4096):
            chunk = c[start:start + 4096]
            cur = np.concatenate([basis] + new) if new else basis
            add = orthonormalize(chunk, tol=tol, basis=cur)
            if len(add):
                new.append(add)
        frontier = np.concatenate(new) if new else np.zeros((0, d, d), dtype=complex)
        basis = np.concatenate([basis, frontier])
    # re-symmetrize the basis against drift: hermitian basis then orthonormalize
    herm = np.concatenate([hermitian_part(basis), hermitian_part(1j * basis)])
    basis = orthonormalize(herm, tol=1e-6)
    contains = bool(np.linalg.norm(_project(np.eye(d), basis) - np.eye(d)) < 1e-8)
    return OperatorAlgebra(d, basis, contains)


def _project(x, basis):
    coeffs = np.einsum("kij,ij->k", basis.conj(), x)
    return np.einsum("k,kij->ij", coeffs, basis)


def _commutator_rows(ops, d):
    eye = np.eye(d)
    for b in ops:
        # vec(XB - BX) = (1 ⊗ B^T - B ⊗ 1) vec(X)
        yield np.kron(eye, b.T) - np.kron(b, eye)


def commutant(alg_or_ops, tol: float = ALGEBRA_TOL) -> OperatorAlgebra:
    """All operators commuting with every element of an algebra or operator set.

    For a raw operator list the adjoints are included, so the result is the
    commutant of the generated *-algebra.
    """
    if isinstance(alg_or_ops, OperatorAlgebra):
        ops = alg_or_ops.basis
        d = alg_or_ops.ambient_dim
    else:
        ops = np.asarray(alg_or_ops, dtype=complex)
        if ops.ndim == 2:
            ops = ops[None]
        d = ops.shape[-1]
        ops = np.concatenate([ops, dag(ops)])
    ops = orthonormalize(ops, tol=1e-12)
    ns = stacked_null_space(_commutator_rows(ops, d), d * d, tol)
    basis = ns.T.reshape(-1, d, d)
    herm = np.concatenate([hermitian_part(basis), hermitian_part(1j * basis)])
    basis = orthonormalize(herm, tol=1e-6)
    return OperatorAlgebra(d, basis, True)


def center(alg: OperatorAlgebra, tol: float = ALGEBRA_TOL) -> OperatorAlgebra:
    comm = commutant(alg, tol)
    basis = subspace_intersection(alg.basis, comm.basis, tol=1e-7)
    herm = np.concatenate([hermitian_part(basis), hermitian_part(1j * basis)])
    basis = orthonormalize(herm, tol=1e-6)
    return OperatorAlgebra(alg.ambient_dim, basis, alg.contains_identity)


def _random_hermitian_element(basis, rng) -> np.ndarray:
    c = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
    return hermitian_part(np.einsum("k,kij->ij", c, basis))


def _group_projectors(h, support_proj=None):
    """Spectral projectors of h grouped with the genericity gap, optionally on a support."""
    if support_proj is None:
        _, projs, vecs = spectral_projectors(h, rel_tol=GENERICITY_GAP)
        return projs, vecs
    w, v = np.linalg.eigh(hermitian_part(support_proj))
    s = v[:, w > 0.5]
    hc = dag(s) @ h @ s
    _, _, vecs = spectral_projectors(hc, rel_tol=GENERICITY_GAP)
    vecs = [s @ vg for vg in vecs]
    return [vg @ dag(vg) for vg in vecs], vecs


def minimal_central_projections(alg: OperatorAlgebra, rng=None, tol: float = ALGEBRA_TOL):
    """Minimal central projections of a unital *-algebra.

    A random Hermitian element of the center is diagonalized and its
    eigenprojectors taken; the draw is rejected unless the number of
    projectors equals dim(center) and every projector lies in the algebra.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    z = center(alg, tol)
    k = z.dim
    if k == 0:
        raise AlgebraClosureError("algebra has an empty center; is it unital?")
    if k == 1:
        p = _project(np.eye(alg.ambient_dim), alg.basis)
        return [hermitian_part(p)]
    for attempt in range(MAX_RESAMPLES):
        h = _random_hermitian_element(z.basis, rng)
        projs, _ = _group_projectors(h)
        # drop a null group when the algebra is non-unital
        projs = [p for p in projs if np.linalg.norm(_project(p, z.basis) - p) < 1e-7]
        if len(projs) == k:
            return projs
        log.debug("center genericity retry %d: %d groups vs dim %d", attempt, len(projs), k)
    raise NumericalDegeneracyError(f"could not separate {k} central blocks in {MAX_RESAMPLES} draws")


@dataclass
class WedderburnBlock:
    """One central block ``P A = V (B(H) ⊗ 1_L) V^†``.

    ``isometry`` has columns indexed ``h * dim_L + l``.
    """

    central_projector: np.ndarray
    isometry: np.ndarray
    dim_H: int
    dim_L: int
    matrix_units: np.ndarray  # (dim_H, dim_H, d, d), matrix_units[i, j] = E_ij
    minimal_projectors: list = field(default_factory=list)

    def unit_relation_error(self) -> float:
        e = self.matrix_units
        n = self.dim_H
        prod = np.einsum("ijab,klbc->ijklac", e, e)
        target = np.einsum("jk,ilac->ijklac", np.eye(n), e)
        return float(np.abs(prod - target).reshape(n**4, -1).sum(axis=1).max()) if n else 0.0

    def isometry_error(self) -> float:
        v = self.isometry
        return float(np.linalg.norm(dag(v) @ v - np.eye(v.shape[1])))

    def expand(self, z) -> np.ndarray:
        """Component of z along this block's matrix units."""
        e = self.matrix_units
        c = np.einsum("ijab,ab->ij", e.conj(), z) / self.dim_L
        return np.einsum("ij,ijab->ab", c, e)


@dataclass
class WedderburnDecomposition:
    blocks: list
    ambient_dim: int
    reconstruction_residual: float = 0.0
    unit_residual: float = 0.0

    def dims(self) -> list:
        return [(b.dim_H, b.dim_L) for b in self.blocks]

    def algebra_dim(self) -> int:
        return sum(b.dim_H**2 for b in self.blocks)

    def reconstruct(self, z) -> np.ndarray:
        return sum(b.expand(z) for b in self.blocks)


def _matrix_units(block_basis, qs, d):
    n = len(qs)
    r = int(round(np.real(np.trace(qs[0]))))
    e = np.zeros((n, n, d, d), dtype=complex)
    e[0, 0] = qs[0]
    for j in range(1, n):
        cands = np.einsum("ab,kbc,cd->kad", qs[0], block_basis, qs[j])
        norms = np.linalg.norm(cands.reshape(len(cands), -1), axis=1)
        best = int(np.argmax(norms))
        if norms[best] < 1e-6:
            raise AlgebraClosureError(
                f"no element links minimal projectors 1 and {j + 1}; block is not a single "
                "equivalence class (closure or tolerance failure)"
            )
        x = cands[best]
        c = norms[best] ** 2 / r
        e[0, j] = x / np.sqrt(c)
    for i in range(1, n):
        e[i, 0] = dag(e[0, i])
    for i in range(1, n):
        for j in range(1, n):
            e[i, j] = e[i, 0] @ e[0, j]
    return e


def _decompose_block(alg: OperatorAlgebra, p: np.ndarray, rng) -> WedderburnBlock:
    d = alg.ambient_dim
    block_basis = orthonormalize(np.einsum("kij,jl->kil", alg.basis, p), tol=1e-7)
    m = len(block_basis)
    n = int(round(np.sqrt(m)))
    if n * n != m:
        raise AlgebraClosureError(f"central block has dimension {m}, not a perfect square")
    rank_p = int(round(np.real(np.trace(p))))
    if rank_p % n:
        raise AlgebraClosureError(f"block rank {rank_p} not divisible by {n}")
    dim_l = rank_p // n
    for attempt in range(MAX_RESAMPLES):
        h = _random_hermitian_element(block_basis, rng)
        qs, vecs = _group_projectors(h, p)
        if len(qs) == n and all(v.shape[1] == dim_l for v in vecs):
            break
        log.debug("block genericity retry %d: %d groups, want %d", attempt, len(qs), n)
    else:
        raise NumericalDegeneracyError(f"could not split a {n}x{n} block into minimal projectors")
    e = _matrix_units(block_basis, qs, d)
    f = vecs[0]
    v = np.zeros((d, n * dim_l), dtype=complex)
    for h_idx in range(n):
        v[:, h_idx * dim_l:(h_idx + 1) * dim_l] = e[h_idx, 0] @ f
    return WedderburnBlock(p, v, n, dim_l, e, [e[i, i] for i in range(n)])


def wedderburn_decompose(alg: OperatorAlgebra, tol: float = ALGEBRA_TOL, rng=None,
                         verify: bool = True) -> WedderburnDecomposition:
    """Decompose a unital *-algebra as ``⊕_P V_P (B(H_P) ⊗ 1_{L_P}) V_P^†``.

    Blocks are sorted by (dim_H, dim_L, rank P) descending. With
    ``verify`` the matrix-unit relations, isometries and reconstruction of
    every basis element are checked against ``RECONSTRUCTION_TOL``.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    ps = minimal_central_projections(alg, rng, tol)
    blocks = [_decompose_block(alg, p, rng) for p in ps]
    blocks.sort(key=lambda b: (b.dim_H, b.dim_L, float(np.real(np.trace(b.central_projector)))),
                reverse=True)
    dec = WedderburnDecomposition(blocks, alg.ambient_dim)
    if sum(b.dim_H**2 for b in blocks) != alg.dim:
        raise AlgebraClosureError(
            f"block dimensions {dec.dims()} do not account for algebra dimension {alg.dim}"
        )
    dec.unit_residual = max(b.unit_relation_error() for b in blocks)
    dec.reconstruction_residual = max(
        float(np.linalg.norm(z - dec.reconstruct(z))) for z in alg.basis
    )
    if verify:
        iso = max(b.isometry_error() for b in blocks)
        if dec.unit_residual > RECONSTRUCTION_TOL or iso > 1e-8:
            raise AlgebraClosureError(
                f"matrix-unit residual {dec.unit_residual:.2e}, isometry residual {iso:.2e}"
            )
        if dec.reconstruction_residual > RECONSTRUCTION_TOL:
            raise AlgebraClosureError(f"reconstruction residual {dec.reconstruction_residual:.2e}")
    _record(dec)
    return dec


# Callables invoked with every finished decomposition; empty unless a caller
# (e.g. an audit in a test suite) registers one.
DECOMPOSITION_HOOKS: list = []


def _record(dec: WedderburnDecomposition) -> None:
    for hook in DECOMPOSITION_HOOKS:
        hook(dec)
