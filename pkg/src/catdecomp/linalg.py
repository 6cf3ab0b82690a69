"""Dense complex-matrix primitives: tensor structure, partial traces,
spectral tools, null spaces and Hilbert-Schmidt geometry.

Conventions used throughout the package:

* Tensor factors are ordered left to right with the leftmost factor most
  significant in row-major index arithmetic (``np.kron`` ordering).
* Operators are vectorized row-major, ``vec(X) = X.reshape(-1)``, so that
  ``vec(A X B) = (A ⊗ B^T) vec(X)``.
* An operator basis is a ``(k, d, d)`` array whose slices are orthonormal
  under ``<X, Y> = Tr[X^† Y]``.
"""

from __future__ import annotations

import functools
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import subspace_angles

DEFAULT_TOL = 1e-9
DEGENERACY_TOL = 1e-8


class DimensionError(ValueError):
    """Raised when tensor shapes do not match operator dimensions."""


def as_operator(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-d operator, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("operator has non-finite entries")
    return a


def dag(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + dag(m))


def tensor_product(*ops) -> np.ndarray:
    """Kronecker product of any number of operators, leftmost most significant."""
    if not ops:
        raise ValueError("need at least one operator")
    return functools.reduce(np.kron, [np.asarray(o, dtype=complex) for o in ops])


def _check_shape(m: np.ndarray, dims: Sequence[int]) -> None:
    dims = list(dims)
    if any(int(d) < 1 for d in dims):
        raise DimensionError(f"dims must be positive, got {dims}")
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"operator is not square: {m.shape}")
    if int(np.prod(dims)) != m.shape[0]:
        raise DimensionError(f"dims {dims} do not multiply to {m.shape[0]}")


def partial_trace(m, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every tensor factor not listed in ``keep``.

    The kept factors stay in their original order.
    """
    m = np.asarray(m, dtype=complex)
    _check_shape(m, dims)
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise DimensionError(f"keep indices {keep} out of range for {n} factors")
    t = m.reshape(list(dims) * 2)
    # einsum subscripts: row index i_k, column index j_k, traced factors share a letter
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    rows = list(letters[:n])
    cols = [letters[n + k] if k in keep else letters[k] for k in range(n)]
    out = [rows[k] for k in keep] + [cols[k] for k in keep]
    r = np.einsum("".join(rows + cols) + "->" + "".join(out), t)
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    return r.reshape(dk, dk)


def permute_factors(m, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of a square operator; ``perm[i]`` is the old index of new factor i."""
    m = np.asarray(m, dtype=complex)
    _check_shape(m, dims)
    n = len(dims)
    t = m.reshape(list(dims) * 2)
    t = t.transpose(list(perm) + [n + p for p in perm])
    d = m.shape[0]
    return t.reshape(d, d)


def null_space(m, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (as columns) of the right-singular vectors with singular value <= tol."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    m = np.asarray(m, dtype=complex)
    _, s, vh = np.linalg.svd(m)
    n = m.shape[1]
    sv = np.zeros(n)
    sv[: len(s)] = s
    return vh[sv <= tol].conj().T


def stacked_null_space(blocks: Iterable[np.ndarray], n: int, tol: float) -> np.ndarray:
    """Null space of a tall matrix given as row blocks, accumulated through QR.

    Keeps memory at O(n^2) regardless of how many blocks are stacked. ``tol``
    is relative to the largest singular value.
    """
    r = np.zeros((0, n), dtype=complex)
    for b in blocks:
        stacked = np.vstack([r, b])
        if stacked.shape[0] > n:
            r = np.linalg.qr(stacked, mode="r")
        else:
            r = stacked
    if r.shape[0] == 0:
        return np.eye(n, dtype=complex)
    _, s, vh = np.linalg.svd(r)
    sv = np.zeros(n)
    sv[: len(s)] = s
    scale = max(1.0, sv.max())
    return vh[sv <= tol * scale].conj().T


def vec(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).reshape(-1)


def hs_inner(x: np.ndarray, y: np.ndarray) -> complex:
    return complex(np.vdot(x, y))


def orthonormalize(ops, tol: float = 1e-10, basis: np.ndarray | None = None) -> np.ndarray:
    """Orthonormal operator basis spanning ``ops``, optionally extending ``basis``.

    Returns only the new directions when ``basis`` is given (the union is
    ``concat(basis, result)``). Candidates are normalized first and a
    direction counts as new when its residual singular value exceeds ``tol``.
    """
    ops = np.asarray(ops, dtype=complex)
    if ops.ndim == 2:
        ops = ops[None]
    if ops.shape[0] == 0:
        d = ops.shape[-1]
        return np.zeros((0, d, d), dtype=complex)
    d1, d2 = ops.shape[1:]
    c = ops.reshape(len(ops), -1)
    norms = np.linalg.norm(c, axis=1)
    c = c[norms > tol] / norms[norms > tol, None]
    q = None
    if basis is not None and len(basis):
        q = np.asarray(basis).reshape(len(basis), -1)
        for _ in range(2):
            c = c - (c @ q.conj().T) @ q
    if c.shape[0] == 0:
        return np.zeros((0, d1, d2), dtype=complex)
    _, s, vh = np.linalg.svd(c, full_matrices=False)
    new = vh[s > tol]
    if q is not None and len(new):
        new = new - (new @ q.conj().T) @ q
        new, _ = np.linalg.qr(new.T)
        new = new.T
    return new.reshape(len(new), d1, d2)


def hs_project(x, basis) -> np.ndarray:
    """Orthogonal projection of ``x`` onto span(basis) in the Hilbert-Schmidt metric."""
    x = np.asarray(x, dtype=complex)
    basis = np.asarray(basis, dtype=complex)
    if len(basis) == 0:
        return np.zeros_like(x)
    if basis.shape[1:] != x.shape:
        raise DimensionError(f"basis shape {basis.shape[1:]} vs operator {x.shape}")
    coeffs = np.einsum("kij,ij->k", basis.conj(), x)
    return np.einsum("k,kij->ij", coeffs, basis)


def span_residual(x, basis) -> float:
    """Hilbert-Schmidt distance from ``x`` to span(basis)."""
    return float(np.linalg.norm(x - hs_project(x, basis)))


def max_principal_angle(a, b) -> float:
    """Largest principal angle between the spans of two operator bases.

    Returns pi/2 when the dimensions differ.
    """
    a = np.asarray(a).reshape(len(a), -1)
    b = np.asarray(b).reshape(len(b), -1)
    if a.shape[0] != b.shape[0]:
        return float(np.pi / 2)
    if a.shape[0] == 0:
        return 0.0
    return float(np.max(subspace_angles(a.T, b.T)))


def subspace_intersection(a, b, tol: float = 1e-8) -> np.ndarray:
    """Orthonormal operator basis of span(a) ∩ span(b), for orthonormal inputs."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if len(a) == 0 or len(b) == 0:
        d = a.shape[-1]
        return np.zeros((0, d, d), dtype=complex)
    shape = a.shape[1:]
    ua = a.reshape(len(a), -1).T
    ub = b.reshape(len(b), -1).T
    coeff = null_space(np.hstack([ua, -ub]), tol)
    vecs = (ua @ coeff[: len(a)]).T
    return orthonormalize(vecs.reshape(-1, *shape), tol=1e-6)


def spectral_projectors(h, rel_tol: float = DEGENERACY_TOL):
    """Eigenvalues and spectral projectors of a Hermitian matrix.

    Eigenvalues closer than ``rel_tol * ||h||_2`` (consecutive gap after
    sorting) share a projector. Returns ``(values, projectors, vectors)``
    with eigenvalues ascending and ``vectors[i]`` the eigenvector columns of
    group ``i``.
    """
    h = hermitian_part(np.asarray(h, dtype=complex))
    w, v = np.linalg.eigh(h)
    scale = max(np.max(np.abs(w)), 1e-300) if len(w) else 1.0
    groups = [[0]]
    for i in range(1, len(w)):
        if w[i] - w[i - 1] <= rel_tol * scale:
            groups[-1].append(i)
        else:
            groups.append([i])
    values, projs, vecs = [], [], []
    for g in groups:
        vg = v[:, g]
        values.append(float(np.mean(w[g])))
        projs.append(vg @ vg.conj().T)
        vecs.append(vg)
    return np.array(values), projs, vecs


def psd_sqrt(m, inverse: bool = False, tol: float = 1e-12) -> np.ndarray:
    """Square root (or pseudo-inverse square root) of a PSD matrix."""
    w, v = np.linalg.eigh(hermitian_part(np.asarray(m, dtype=complex)))
    w = np.clip(w, 0.0, None)
    if inverse:
        f = np.where(w > tol, 1.0 / np.sqrt(np.where(w > tol, w, 1.0)), 0.0)
    else:
        f = np.sqrt(w)
    return (v * f) @ v.conj().T


def psd_log(m, tol: float = 1e-14) -> np.ndarray:
    """Matrix logarithm of a positive definite matrix (eigenvalues floored at ``tol``)."""
    w, v = np.linalg.eigh(hermitian_part(np.asarray(m, dtype=complex)))
    return (v * np.log(np.maximum(w, tol))) @ v.conj().T


def support(m, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Isometry (columns) onto the span of eigenvectors with eigenvalue > tol."""
    w, v = np.linalg.eigh(hermitian_part(np.asarray(m, dtype=complex)))
    return v[:, w > tol]


def trace_norm(m) -> float:
    return float(np.sum(np.linalg.svd(np.asarray(m), compute_uv=False)))


def trace_distance(a, b) -> float:
    return 0.5 * trace_norm(np.asarray(a) - np.asarray(b))


def is_density_matrix(rho, tol: float = 1e-9) -> bool:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return False
    if np.linalg.norm(rho - dag(rho)) > tol:
        return False
    if abs(np.trace(rho) - 1) > tol:
        return False
    return bool(np.linalg.eigvalsh(hermitian_part(rho)).min() >= -tol)


def ket(d: int, i: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[i] = 1.0
    return v


def proj(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())
