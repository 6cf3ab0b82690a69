"""Seeded fixtures: random unitaries, channels and states, planted block structures, named examples.

Every function takes a ``seed`` (int or ``np.random.Generator``). Integer
seeds are passed straight to ``np.random.default_rng``; callers needing many
independent objects should derive per-object seeds with
``np.random.SeedSequence(master).spawn(n)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import QuantumChannel
from .linalg import dag, ket, proj


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def ginibre(rows: int, cols: int, seed=None) -> np.ndarray:
    rng = _rng(seed)
    return (rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))) / np.sqrt(2)


def haar_unitary(d: int, seed=None) -> np.ndarray:
    """Haar-random unitary via QR with the phases of diag(R) absorbed."""
    q, r = np.linalg.qr(ginibre(d, d, seed))
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_isometry(d_in: int, d_out: int, seed=None) -> np.ndarray:
    """``d_out x d_in`` isometry: first columns of a Haar unitary."""
    if d_out < d_in:
        raise ValueError("isometry needs d_out >= d_in")
    return haar_unitary(d_out, seed)[:, :d_in]


def random_state(d: int, rank: int | None = None, seed=None) -> np.ndarray:
    """Induced-measure random density matrix of the given rank (full rank by default)."""
    g = ginibre(d, d if rank is None else rank, seed)
    rho = g @ dag(g)
    return rho / np.trace(rho).real


def random_pure_state(d: int, seed=None) -> np.ndarray:
    return random_state(d, rank=1, seed=seed)


def random_channel(d_in: int, d_out: int, kraus_rank: int, seed=None) -> QuantumChannel:
    """Kraus operators are the ``d_out x d_in`` blocks of a Haar isometry C^{d_in} -> C^{r d_out}."""
    if min(d_in, d_out, kraus_rank) < 1 or kraus_rank > d_in * d_out:
        raise ValueError("need positive dims and kraus_rank <= d_in * d_out")
    if kraus_rank * d_out < d_in:
        raise ValueError("a trace-preserving map needs kraus_rank * d_out >= d_in")
    v = random_isometry(d_in, kraus_rank * d_out, seed)
    return QuantumChannel(v.reshape(kraus_rank, d_out, d_in))


def random_unitary_channel(d: int, seed=None) -> QuantumChannel:
    return QuantumChannel([haar_unitary(d, seed)])


def nondegenerate_spectrum(d: int, rng, gap: float = 0.05) -> np.ndarray:
    """Random probability vector with distinct, strictly positive entries (descending)."""
    while True:
        p = rng.dirichlet(np.ones(d)) * (1 - d * gap / 2) + gap / 2
        p = np.sort(p)[::-1]
        if d == 1 or np.min(-np.diff(p)) > gap / 4:
            return p / p.sum()


def random_nondegenerate_state(d: int, seed=None) -> np.ndarray:
    rng = _rng(seed)
    u = haar_unitary(d, rng)
    return (u * nondegenerate_spectrum(d, rng)) @ dag(u)


@dataclass
class PlantSpec:
    """Block list plus the seed it is realized with.

    For channels, blocks are ``(dim_H, dim_L)``. For PC-Q states, blocks
    are ``(dim_L, dim_R)``; a block with ``dim_R > 1`` gets an extq core.
    """

    blocks: list
    seed: int = 0
    unitary: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.blocks = [tuple(int(x) for x in b) for b in self.blocks]
        if not self.blocks or any(min(b) < 1 for b in self.blocks):
            raise ValueError("block dims must be positive")

    @property
    def total_dim(self) -> int:
        return sum(a * b for a, b in self.blocks)


@dataclass
class PlantedBlock:
    dim_a: int
    dim_b: int
    isometry: np.ndarray
    state: np.ndarray
    probability: float = 1.0


def _block_embeddings(dims):
    total = sum(dims)
    out, start = [], 0
    for d in dims:
        e = np.zeros((total, d), dtype=complex)
        e[start:start + d, :] = np.eye(d)
        out.append(e)
        start += d
    return out


def planted_fixed_point_channel(spec: PlantSpec):
    """Channel ``U (⊕_i id_{H_i} ⊗ R_{rho_i}) U^†`` with ``R_rho`` the replacer onto rho.

    Returns the channel and the planted blocks (isometry columns
    ``h * dim_L + l``, state rho_i on L_i).
    """
    rng = _rng(spec.seed)
    d = spec.total_dim
    u = haar_unitary(d, rng)
    spec.unitary = u
    embeds = _block_embeddings([a * b for a, b in spec.blocks])
    kraus, planted = [], []
    for (dh, dl), e in zip(spec.blocks, embeds):
        rho = random_nondegenerate_state(dl, rng)
        w, v = np.linalg.eigh(rho)
        for a in range(dl):
            for b in range(dl):
                k_l = np.sqrt(w[a]) * np.outer(v[:, a], ket(dl, b).conj())
                kraus.append(u @ e @ np.kron(np.eye(dh), k_l) @ dag(e) @ dag(u))
        planted.append(PlantedBlock(dh, dl, u @ e, rho))
    return QuantumChannel(kraus), planted


def extq_state(d: int, lam) -> np.ndarray:
    """``½ diag(lam)_A ⊗ |0><0|_B + ½ |+><+|_A ⊗ |1><1|_B`` with ``|+> = d^{-1/2} Σ|i>``.

    ``lam`` must be a probability vector with pairwise distinct entries.
    """
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (d,):
        raise ValueError(f"lam must have length {d}")
    if np.any(lam < 0) or abs(lam.sum() - 1) > 1e-12:
        raise ValueError("lam must be a probability vector")
    if d > 1 and np.min(np.diff(np.sort(lam))) <= 1e-12:
        raise ValueError("lam must be nondegenerate")
    plus = np.ones(d) / np.sqrt(d)
    return 0.5 * np.kron(np.diag(lam), proj(ket(2, 0))) + 0.5 * np.kron(proj(plus), proj(ket(2, 1)))


def bb84_state() -> np.ndarray:
    """``½ |0><0|_A ⊗ |0><0|_M + ½ |+><+|_A ⊗ |1><1|_M``."""
    return extq_state(2, [1.0, 0.0])


def bell_state() -> np.ndarray:
    v = (ket(4, 0) + ket(4, 3)) / np.sqrt(2)
    return proj(v)


def example_states(name: str, d: int = 2, lam=None) -> np.ndarray:
    """Named examples: ``"extq"`` (with ``d`` and ``lam``), ``"bb84"``, ``"bell"``."""
    if name == "extq":
        if lam is None:
            lam = np.arange(1, d + 1, dtype=float)
            lam /= lam.sum()
        return extq_state(d, lam)
    if name == "bb84":
        return bb84_state()
    if name == "bell":
        return bell_state()
    raise ValueError(f"unknown example state {name!r}")


def cq_state(probs, conditionals) -> np.ndarray:
    """``Σ_i p_i |i><i| ⊗ rho_i``."""
    n = len(probs)
    return sum(p * np.kron(proj(ket(n, i)), r) for i, (p, r) in enumerate(zip(probs, conditionals)))


def planted_pcq_state(spec: PlantSpec, dim_e: int | None = None):
    """State ``(U ⊗ 1)[⊕_i p_i omega_i ⊗ tau_{R_i E}](U ⊗ 1)^†`` on C ⊗ E.

    Blocks with ``dim_R = 1`` use a pure ``|i>_E``; blocks with
    ``dim_R > 1`` use an extq core on ``R_i ⊗ C^2``. Each block occupies
    its own subspace of E, so the decomposition has exactly these blocks.
    Returns ``(state, (d_C, d_E), planted_blocks)`` with planted isometries
    columns ``l * dim_R + r``.
    """
    rng = _rng(spec.seed)
    e_dims = [1 if dr == 1 else 2 for _, dr in spec.blocks]
    d_c = spec.total_dim
    d_e = sum(e_dims) if dim_e is None else dim_e
    if d_e < sum(e_dims):
        raise ValueError("environment too small for the requested blocks")
    probs = nondegenerate_spectrum(len(spec.blocks), rng) if len(spec.blocks) > 1 else np.ones(1)
    u = haar_unitary(d_c, rng)
    spec.unitary = u
    c_emb = _block_embeddings([dl * dr for dl, dr in spec.blocks])
    e_emb = _block_embeddings(e_dims + ([d_e - sum(e_dims)] if d_e > sum(e_dims) else []))
    state = np.zeros((d_c * d_e, d_c * d_e), dtype=complex)
    planted = []
    for i, (dl, dr) in enumerate(spec.blocks):
        omega = random_nondegenerate_state(dl, rng)
        if dr == 1:
            core = np.ones((1, 1), dtype=complex)
        else:
            core = extq_state(dr, nondegenerate_spectrum(dr, rng))
        blk = probs[i] * np.kron(omega, core)
        emb = np.kron(u @ c_emb[i], e_emb[i])
        state += emb @ blk @ dag(emb)
        planted.append(PlantedBlock(dl, dr, u @ c_emb[i], omega, float(probs[i])))
    return state, (d_c, d_e), planted


def planted_catalysis_instance(spec: PlantSpec, dim_s: int = 2, kraus_rank: int = 2):
    """Block-preserving catalytic instance on S ⊗ C with a PC-Q catalyst on C ⊗ E.

    In block i, with omega_i = Σ_c w_c |c><c| on L_i, the interaction is
    ``Σ_c A^{(i)}_c ⊗ |c><c|_{L_i} ⊗ 1_{R_i}`` for random channels A^{(i)}_c on S.
    It dephases L_i in the eigenbasis of omega_i, which leaves the catalyst
    exactly invariant. Returns ``(rho_s, channel, tau_ce, (d_C, d_E), planted)``.
    """
    rng = _rng(spec.seed)
    tau, (d_c, d_e), planted = planted_pcq_state(PlantSpec(spec.blocks, int(rng.integers(2**63))))
    kraus = []
    for b in planted:
        _, vecs = np.linalg.eigh(b.state)
        for c in range(b.dim_a):
            a_c = random_channel(dim_s, dim_s, kraus_rank, rng)
            pc = b.isometry @ np.kron(proj(vecs[:, c]), np.eye(b.dim_b)) @ dag(b.isometry)
            kraus.extend(np.kron(k, pc) for k in a_c.kraus)
    lam = QuantumChannel(kraus)
    rho_s = random_state(dim_s, seed=rng)
    return rho_s, lam, tau, (d_c, d_e), planted


def swap_operator(d: int) -> np.ndarray:
    s = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            s[j * d + i, i * d + j] = 1.0
    return s

