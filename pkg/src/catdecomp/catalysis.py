"""Catalytic transformations: the induced catalyst channel, catalytic checks,
ensemble reduction of correlated catalysts, mutual information and contagion.

An instance is ``(rho_S, Lambda, tau)`` with Lambda a channel on S ⊗ C (S
first) and tau a catalyst on C or on C ⊗ E. The transformation is
``sigma_S = Tr_C[Lambda(rho_S ⊗ tau_C)]`` and it is catalytic when
``Tr_S[(Lambda ⊗ id_E)(rho_S ⊗ tau_CE)] = tau_CE``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .channels import QuantumChannel, choi_distance, identity_channel
from .koashi_imoto import KIDecomposition, classify_bipartite
from .linalg import (
    DEFAULT_TOL,
    DimensionError,
    dag,
    hermitian_part,
    is_density_matrix,
    partial_trace,
    psd_sqrt,
    trace_norm,
)

log = logging.getLogger(__name__)

ENTROPY_CUTOFF = 1e-12


class PreconditionError(ValueError):
    """Input does not satisfy the assumptions of the requested test."""


class TheoremViolationError(RuntimeError):
    """A computed outcome contradicts a structural guarantee; points at an upstream numerical problem."""


class ReductionError(RuntimeError):
    """The catalyst does not factorize along its blocks as required."""


@dataclass
class CatalysisInstance:
    rho_s: np.ndarray
    channel: QuantumChannel
    tau: np.ndarray
    dim_c: int
    dim_e: int = 1
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        self.rho_s = np.asarray(self.rho_s, dtype=complex)
        self.tau = np.asarray(self.tau, dtype=complex)
        d_s = self.rho_s.shape[0]
        if self.rho_s.shape != (d_s, d_s):
            raise DimensionError("rho_S must be square")
        if self.tau.shape != (self.dim_c * self.dim_e,) * 2:
            raise DimensionError(f"catalyst shape {self.tau.shape} vs dims ({self.dim_c}, {self.dim_e})")
        if (self.channel.dim_in, self.channel.dim_out) != (d_s * self.dim_c,) * 2:
            raise DimensionError("interaction must act on S ⊗ C")

    @property
    def dim_s(self) -> int:
        return self.rho_s.shape[0]

    @property
    def tau_c(self) -> np.ndarray:
        return partial_trace(self.tau, [self.dim_c, self.dim_e], keep=[0])

    def output_system(self, rho_s=None) -> np.ndarray:
        """``Tr_C[Lambda(rho_S ⊗ tau_C)]``."""
        rho = self.rho_s if rho_s is None else np.asarray(rho_s)
        out = self.channel(np.kron(rho, self.tau_c))
        return partial_trace(out, [self.dim_s, self.dim_c], keep=[0])

    def output_catalyst(self) -> np.ndarray:
        """``Tr_S[(Lambda ⊗ id_E)(rho_S ⊗ tau_CE)]``."""
        joint = self.channel.apply(np.kron(self.rho_s, self.tau),
                                   [self.dim_s * self.dim_c, self.dim_e], on=0)
        return partial_trace(joint, [self.dim_s, self.dim_c, self.dim_e], keep=[1, 2])


def induced_catalyst_channel(inst: CatalysisInstance) -> QuantumChannel:
    """``Gamma(eta) = Tr_S[Lambda(rho_S ⊗ eta)]`` as a channel on C.

    Kraus operators ``(<s| ⊗ 1) K (sqrt(rho_S)|t> ⊗ 1)`` are exact.
    """
    d_s, d_c = inst.dim_s, inst.dim_c
    sq = psd_sqrt(inst.rho_s)
    ks = inst.channel.kraus.reshape(-1, d_s, d_c, d_s, d_c)
    # K[s, c, s', c'] with input s' contracted against sqrt(rho)|t>
    g = np.einsum("kaxby,bt->katxy", ks, sq).reshape(-1, d_c, d_c)
    return QuantumChannel(g)


def _induced_system_channel(inst: CatalysisInstance) -> QuantumChannel:
    """``Xi(rho) = Tr_C[Lambda(rho ⊗ tau_C)]`` as a channel on S."""
    d_s, d_c = inst.dim_s, inst.dim_c
    sq = psd_sqrt(inst.tau_c)
    ks = inst.channel.kraus.reshape(-1, d_s, d_c, d_s, d_c)
    g = np.einsum("kxayb,bt->kaxty", ks, sq)
    # k, c_out, s_out, t, s_in -> Kraus index (k, c_out, t)
    g = g.transpose(0, 1, 3, 2, 4).reshape(-1, d_s, d_s)
    return QuantumChannel(g)


@dataclass
class CatalyticReport:
    catalytic: bool
    residual: float
    trivial: bool
    gamma_distance: float
    factorization_residual: float | None = None


def check_catalytic(inst: CatalysisInstance, tol: float | None = None) -> CatalyticReport:
    """Catalytic residual ``||Tr_S[(Lambda ⊗ id_E)(rho_S ⊗ tau_CE)] - tau_CE||_1`` and triviality.

    ``trivial`` means Gamma is the identity within ``tol`` in Choi
    distance; the factorization residual of Lambda against
    ``Xi_S ⊗ id_C`` is then also reported.
    """
    tol = inst.tol if tol is None else tol
    resid = trace_norm(inst.output_catalyst() - inst.tau)
    gamma = induced_catalyst_channel(inst)
    gdist = choi_distance(gamma, identity_channel(inst.dim_c))
    trivial = gdist <= tol
    fact = None
    if trivial:
        xi = _induced_system_channel(inst)
        fact = choi_distance(inst.channel, xi.tensor(identity_channel(inst.dim_c)))
    return CatalyticReport(resid <= tol, resid, trivial, gdist, fact)


@dataclass
class EnsembleComponent:
    probability: float
    catalyst: np.ndarray  # tau_{C_j^L}
    channel: QuantumChannel  # E_j on S
    dims: tuple  # (dim_L, dim_R)
    factorization_residual: float


@dataclass
class EnsembleReduction:
    components: list
    residual: float  # trace norm of Σ p_j E_j(rho_S) - sigma_S
    probability_sum_error: float
    decomposition: KIDecomposition = field(repr=False, default=None)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([c.probability for c in self.components])

    def apply(self, rho) -> np.ndarray:
        return sum(c.probability * c.channel(rho) for c in self.components)

    def channel(self) -> QuantumChannel:
        """``Σ_j p_j E_j`` as a single channel."""
        ks = [np.sqrt(c.probability) * k for c in self.components for k in c.channel.kraus]
        return QuantumChannel(ks)


def ensemble_reduction(inst: CatalysisInstance, dec: KIDecomposition | None = None,
                       tol: float | None = None, rng=None) -> EnsembleReduction:
    """Split a catalytic transformation into an ensemble of local catalysts.

    With the catalyst's blocks ``Pi_j`` on C, ``E_j(rho) = Tr_C[Lambda(rho ⊗ Pi_j tau_C Pi_j)] / p_j``
    and ``sigma_S = Σ_j p_j E_j(rho_S)``. Each block output must factorize as
    ``(S ⊗ L_j part) ⊗ tau_{C_j^R}`` and stay inside the block.
    """
    tol = inst.tol if tol is None else tol
    rep = check_catalytic(inst, tol)
    if not rep.catalytic:
        raise ReductionError(f"instance is not catalytic (residual {rep.residual:.2e})")
    if dec is None:
        dec = classify_bipartite(inst.tau, (inst.dim_c, inst.dim_e), rng=rng).decomposition
    d_s, d_c = inst.dim_s, inst.dim_c
    tau_c = inst.tau_c
    comps = []
    for b in dec.blocks:
        pinched = b.projector @ tau_c @ b.projector
        p = float(np.real(np.trace(pinched)))
        if p <= 0:
            continue
        big_w = np.kron(np.eye(d_s), b.isometry)
        out = inst.channel(np.kron(inst.rho_s, pinched))
        inner = dag(big_w) @ out @ big_w
        leak = trace_norm(out - big_w @ inner @ dag(big_w))
        dims = [d_s, b.dim_L, b.dim_R]
        m_sl = partial_trace(inner, dims, keep=[0, 1])
        tau_r = partial_trace(inner, dims, keep=[2]) / p
        fact = leak + trace_norm(inner - np.kron(m_sl, tau_r))
        if fact > tol:
            raise ReductionError(f"block (L={b.dim_L}, R={b.dim_R}) does not factorize: {fact:.2e}")
        # Choi of E_j by feeding |a><b| through the pinched map
        choi = np.zeros((d_s * d_s, d_s * d_s), dtype=complex)
        for a in range(d_s):
            for c in range(d_s):
                e = np.zeros((d_s, d_s), dtype=complex)
                e[a, c] = 1.0
                o = inst.channel(np.kron(e, pinched))
                choi += np.kron(partial_trace(o, [d_s, d_c], keep=[0]) / p, e)
        ej = QuantumChannel.from_choi(hermitian_part(choi), d_s, d_s, cutoff=1e-14)
        comps.append(EnsembleComponent(p, b.omega, ej, (b.dim_L, b.dim_R), fact))
    red = EnsembleReduction(comps, 0.0, abs(sum(c.probability for c in comps) - 1.0), dec)
    red.residual = trace_norm(red.apply(inst.rho_s) - inst.output_system())
    if red.probability_sum_error > 1e-10:
        raise ReductionError(f"block probabilities sum to 1 - {red.probability_sum_error:.2e}")
    return red


def von_neumann_entropy(rho, cutoff: float = ENTROPY_CUTOFF) -> float:
    """Entropy in bits."""
    w = np.linalg.eigvalsh(hermitian_part(np.asarray(rho, dtype=complex)))
    w = w[w > cutoff]
    return float(-np.sum(w * np.log2(w)))


def binary_entropy(p: float) -> float:
    return von_neumann_entropy(np.diag([p, 1 - p]))


def mutual_information(rho, dims) -> float:
    """``I(A:B) = S(A) + S(B) - S(AB)`` in bits for ``dims = (d_A, d_B)``."""
    rho = np.asarray(rho, dtype=complex)
    return (von_neumann_entropy(partial_trace(rho, dims, keep=[0]))
            + von_neumann_entropy(partial_trace(rho, dims, keep=[1]))
            - von_neumann_entropy(rho))


@dataclass
class MIReport:
    mi_before: float
    mi_after: float
    delta: float
    mi_preserved: bool
    unitary: bool


def mi_catalysis_test(rho, dims, ch: QuantumChannel, tol: float = DEFAULT_TOL, rng=None) -> MIReport:
    """Compare I(A:B) before and after ``ch`` acts on A of a TQ-Q state.

    On TQ-Q states only unitaries preserve the mutual information; a
    preserved-but-not-unitary outcome raises ``TheoremViolationError``.
    """
    verdict = classify_bipartite(rho, dims, rng=rng)
    if verdict.verdict != "TQ-Q":
        raise PreconditionError(f"state is PC-Q on A ({verdict.reason})")
    if (ch.dim_in, ch.dim_out) != (dims[0], dims[0]):
        raise DimensionError("channel must map A to A")
    before = mutual_information(rho, dims)
    after = mutual_information(ch.apply(rho, dims, on=0), dims)
    delta = before - after
    if delta < -tol:
        raise TheoremViolationError(f"mutual information increased by {-delta:.2e}")
    preserved = abs(delta) <= tol
    unitary = ch.is_unitary()
    if preserved and not unitary:
        raise TheoremViolationError("non-unitary channel preserved the mutual information of a TQ-Q state")
    return MIReport(before, after, delta, preserved, unitary)


@dataclass
class ContagionReport:
    tau_k_full_rank: bool
    min_eigenvalue: float
    verdict: str | None
    state: np.ndarray = field(repr=False, default=None)
    dims: tuple = ()


def contagion_extend(rho, dims, v, tol: float = DEFAULT_TOL, rng=None) -> ContagionReport:
    """Extend A by an isometry ``V: A -> K ⊗ A`` and classify the cut K|AB.

    A verdict is only asserted when the K marginal is full rank; a PC-Q
    outcome then raises ``TheoremViolationError``.
    """
    d_a, d_b = dims
    v = np.asarray(v, dtype=complex)
    if v.ndim != 2 or v.shape[1] != d_a or v.shape[0] % d_a:
        raise DimensionError(f"isometry shape {v.shape} incompatible with d_A = {d_a}")
    if np.linalg.norm(dag(v) @ v - np.eye(d_a)) > 1e-9:
        raise PreconditionError("V is not an isometry")
    if not is_density_matrix(rho, 1e-8):
        raise PreconditionError("input is not a density matrix")
    if classify_bipartite(rho, dims, rng=rng).verdict != "TQ-Q":
        raise PreconditionError("input state is not TQ-Q on A|B")
    d_k = v.shape[0] // d_a
    big = np.kron(v, np.eye(d_b))
    tau = big @ np.asarray(rho, dtype=complex) @ dag(big)
    tau_k = partial_trace(tau, [d_k, d_a, d_b], keep=[0])
    mineig = float(np.linalg.eigvalsh(tau_k).min())
    new_dims = (d_k, d_a * d_b)
    if mineig <= tol:
        return ContagionReport(False, mineig, None, tau, new_dims)
    verdict = classify_bipartite(tau, new_dims, rng=rng).verdict
    if verdict != "TQ-Q":
        raise TheoremViolationError("extension with full-rank K marginal classified PC-Q")
    return ContagionReport(True, mineig, verdict, tau, new_dims)
