"""Fixed points of quantum channels and their block structure.

For a channel Phi the Heisenberg fixed points ``F_{Phi^†}`` form the
commutant of ``{K_i, K_i^†}``. Wedderburn-decomposing that algebra as
``⊕_P V_P (B(H_P) ⊗ 1_{L_P}) V_P^†`` and restricting Phi to each block
(where it acts as ``id_H ⊗ Phi_L``) gives the Schrödinger fixed points
``F_Phi = ⊕_P V_P (B(H_P) ⊗ rho_P) V_P^†`` with rho_P the unique fixed
state of ``Phi_L``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .algebra import OperatorAlgebra, WedderburnDecomposition, commutant, wedderburn_decompose
from .channels import QuantumChannel, choi_distance, pinching
from .linalg import (
    DEFAULT_TOL,
    dag,
    hermitian_part,
    max_principal_angle,
    null_space,
    orthonormalize,
    partial_trace,
)

log = logging.getLogger(__name__)


class FixedPointError(RuntimeError):
    """Inconsistent or degenerate fixed-point computation."""


def fixed_point_space(ch: QuantumChannel, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal operator basis of ``{X : Phi(X) = X}`` from the superoperator null space."""
    if ch.dim_in != ch.dim_out:
        raise ValueError("fixed points need dim_in == dim_out")
    d = ch.dim_in
    s = ch.superoperator() - np.eye(d * d)
    basis = null_space(s, tol).T.reshape(-1, d, d)
    if len(basis) == 0 and ch.trace_preserving:
        raise FixedPointError("CPTP map without a fixed point; tolerance too tight")
    return basis


def adjoint_fixed_point_space(ch: QuantumChannel, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Fixed points of the adjoint, via the eigenvalue-1 eigenspace of its superoperator."""
    return fixed_point_space(ch.adjoint(), tol)


def heisenberg_fixed_algebra(ch: QuantumChannel, tol: float = 1e-8) -> OperatorAlgebra:
    """``F_{Phi^†}`` as the commutant of the Kraus operators and their adjoints."""
    return commutant(ch.kraus, tol)


@dataclass
class FixedPointBlock:
    dim_H: int
    dim_L: int
    isometry: np.ndarray  # columns h * dim_L + l
    state: np.ndarray  # rho_P on L_P
    full_rank: bool
    residual: float  # worst ||Phi(X) - X|| over the block's reconstructed fixed points


@dataclass
class FixedPointStructure:
    channel: QuantumChannel
    wedderburn: WedderburnDecomposition
    blocks: list
    fixed_space_basis: np.ndarray
    heisenberg_basis: np.ndarray
    residual: float = 0.0
    notes: list = field(default_factory=list)

    def dims(self) -> list:
        return [(b.dim_H, b.dim_L) for b in self.blocks]

    def dimension(self) -> int:
        return sum(b.dim_H**2 for b in self.blocks)

    def embed(self, i: int, x) -> np.ndarray:
        """``V_P (x ⊗ rho_P) V_P^†`` for block ``i`` and ``x`` on H_P."""
        b = self.blocks[i]
        return b.isometry @ np.kron(x, b.state) @ dag(b.isometry)


def restricted_superoperator(ch: QuantumChannel, isometry, dim_H: int, dim_L: int) -> np.ndarray:
    """Superoperator of ``Y -> Tr_H[V^† Phi(V (1_H/dim_H ⊗ Y) V^†) V]`` on L."""
    v = np.asarray(isometry)
    s = np.zeros((dim_L * dim_L, dim_L * dim_L), dtype=complex)
    for a in range(dim_L):
        for b in range(dim_L):
            y = np.zeros((dim_L, dim_L), dtype=complex)
            y[a, b] = 1.0
            out = dag(v) @ ch(v @ np.kron(np.eye(dim_H) / dim_H, y) @ dag(v)) @ v
            s[:, a * dim_L + b] = partial_trace(out, [dim_H, dim_L], keep=[1]).reshape(-1)
    return s


def restricted_channel(ch: QuantumChannel, isometry, dim_H: int, dim_L: int) -> QuantumChannel:
    """The block channel Phi_L as a Kraus map."""
    s = restricted_superoperator(ch, isometry, dim_H, dim_L)
    # superoperator -> Choi (output first): J[(a,i),(c,j)] = S[(a,c),(i,j)]
    choi = s.reshape(dim_L, dim_L, dim_L, dim_L).transpose(0, 2, 1, 3).reshape(dim_L**2, dim_L**2)
    return QuantumChannel.from_choi(choi, dim_L, dim_L)


def _unique_fixed_state(superop: np.ndarray, tol: float) -> np.ndarray:
    d = int(round(np.sqrt(superop.shape[0])))
    basis = null_space(superop - np.eye(d * d), tol)
    if basis.shape[1] != 1:
        s = np.linalg.svd(superop - np.eye(d * d), compute_uv=False)
        raise FixedPointError(
            f"restricted channel has {basis.shape[1]}-dimensional fixed space "
            f"(smallest singular values {np.sort(s)[:3]})"
        )
    x = basis[:, 0].reshape(d, d)
    x = x / np.trace(x)
    return hermitian_part(x)


def structure_decompose(ch: QuantumChannel, tol: float = DEFAULT_TOL, rng=None) -> FixedPointStructure:
    """Full block structure ``F_Phi = ⊕_P B(H_P) ⊗ rho_P`` of a channel.

    Raises ``FixedPointError`` when a block's restricted channel has a
    degenerate fixed space or the commutant and null-space routes disagree
    on dim F_Phi.
    """
    if ch.dim_in != ch.dim_out:
        raise ValueError("structure theorem needs dim_in == dim_out")
    rng = np.random.default_rng(0) if rng is None else rng
    heis = heisenberg_fixed_algebra(ch)
    wd = wedderburn_decompose(heis, rng=rng)
    blocks = []
    for wb in wd.blocks:
        s_l = restricted_superoperator(ch, wb.isometry, wb.dim_H, wb.dim_L)
        rho = _unique_fixed_state(s_l, tol)
        evals = np.linalg.eigvalsh(rho)
        if evals.min() < -1e-7:
            raise FixedPointError(f"block fixed point is not PSD (min eigenvalue {evals.min():.2e})")
        blocks.append(FixedPointBlock(wb.dim_H, wb.dim_L, wb.isometry, rho,
                                      bool(evals.min() > 1e-9), 0.0))
    null_basis = fixed_point_space(ch, tol)
    structure = FixedPointStructure(ch, wd, blocks, null_basis, heis.basis)
    if len(null_basis) != structure.dimension():
        raise FixedPointError(
            f"dim F_Phi = {len(null_basis)} from the null space but {structure.dimension()} "
            "from the commutant structure"
        )
    recon = []
    worst = 0.0
    for i, b in enumerate(blocks):
        bw = 0.0
        for h1 in range(b.dim_H):
            for h2 in range(b.dim_H):
                x = np.zeros((b.dim_H, b.dim_H), dtype=complex)
                x[h1, h2] = 1.0
                el = structure.embed(i, x)
                bw = max(bw, float(np.linalg.norm(ch(el) - el)))
                recon.append(el)
        b.residual = bw
        worst = max(worst, bw)
    if worst > 1e-8:
        raise FixedPointError(f"reconstructed fixed points move by {worst:.2e}")
    structure.residual = worst
    structure.fixed_space_basis = orthonormalize(np.array(recon), tol=1e-9)
    if max_principal_angle(structure.fixed_space_basis, null_basis) > 1e-7:
        raise FixedPointError("reconstructed F_Phi differs from the null-space fixed points")
    if not all(b.full_rank for b in blocks):
        structure.notes.append("some block fixed state is rank deficient (transient subspace)")
    return structure


@dataclass
class ChannelVerdict:
    verdict: str  # "TQ" or "PC"
    witness: QuantumChannel | None
    residual: float
    warning: bool
    decomposition: object


def classify_channel_output(ch: QuantumChannel, tol: float = DEFAULT_TOL, rng=None) -> ChannelVerdict:
    """Is the output system of ``ch`` totally quantum or partially classical?

    The normalized Choi state is classified on its output|input cut; a PC
    verdict carries a pinching P with ``P ∘ ch = ch`` checked by Choi distance.
    """
    from .koashi_imoto import classify_bipartite

    state = ch.choi / ch.dim_in
    res = classify_bipartite(state, (ch.dim_out, ch.dim_in), tol=tol, rng=rng)
    if res.verdict == "TQ-Q":
        return ChannelVerdict("TQ", None, res.residual, False, res.decomposition)
    p = pinching(res.witness_projectors)
    resid = choi_distance(p.compose(ch), ch)
    if resid > 2 * tol:
        raise FixedPointError(f"pinching witness does not fix the channel (residual {resid:.2e})")
    warn = resid > tol
    if warn:
        log.warning("PC witness residual %.2e within twice the tolerance", resid)
    return ChannelVerdict("PC", p, resid, warn, res.decomposition)
