import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from catdecomp.channels import (
    QuantumChannel,
    depolarizing_channel,
    identity_channel,
    pinching,
    replacer_channel,
    unitary_channel,
)
from catdecomp.fixed_points import (
    adjoint_fixed_point_space,
    classify_channel_output,
    fixed_point_space,
    heisenberg_fixed_algebra,
    restricted_channel,
    structure_decompose,
)
from catdecomp.generators import (
    PlantSpec,
    haar_unitary,
    planted_fixed_point_channel,
    random_channel,
    random_nondegenerate_state,
    random_state,
)
from catdecomp.linalg import (
    max_principal_angle,
    orthonormalize,
    spectral_projectors,
    support,
    trace_distance,
)

seeds = st.integers(0, 2**32 - 1)


def block_pinching(ranks, seed):
    u = haar_unitary(sum(ranks), seed)
    projs, start = [], 0
    for r in ranks:
        m = np.zeros(sum(ranks))
        m[start:start + r] = 1
        projs.append(u @ np.diag(m) @ u.conj().T)
        start += r
    return pinching(projs), projs


def test_fixed_space_depolarizing():
    basis = fixed_point_space(depolarizing_channel(2, 1.0))
    assert len(basis) == 1
    assert np.allclose(basis[0] / basis[0][0, 0], np.eye(2))


def test_fixed_space_pinching():
    ch, _ = block_pinching([2, 1, 3], 0)
    assert len(fixed_point_space(ch)) == 4 + 1 + 9


def test_fixed_space_diagonal_unitary():
    basis = fixed_point_space(unitary_channel(np.diag([1, np.exp(1j)])))
    assert len(basis) == 2
    assert max_principal_angle(basis, orthonormalize(np.array([np.diag([1, 0]), np.diag([0, 1])]))) < 1e-8


def test_structure_replacer():
    sigma = random_nondegenerate_state(3, 4)
    st_ = structure_decompose(replacer_channel(sigma, 3))
    assert st_.dims() == [(1, 3)]
    b = st_.blocks[0]
    assert trace_distance(b.isometry @ b.state @ b.isometry.conj().T, sigma) < 1e-9


def test_structure_pinching():
    ch, projs = block_pinching([3, 2, 1], 1)
    assert structure_decompose(ch).dims() == [(3, 1), (2, 1), (1, 1)]


def test_structure_planted():
    ch, plant = planted_fixed_point_channel(PlantSpec([(2, 1), (1, 2)], seed=2))
    st_ = structure_decompose(ch)
    assert st_.dims() == [(2, 1), (1, 2)]
    for b, p in zip(st_.blocks, plant):
        got = b.isometry @ np.kron(np.eye(b.dim_H) / b.dim_H, b.state) @ b.isometry.conj().T
        want = p.isometry @ np.kron(np.eye(p.dim_a) / p.dim_a, p.state) @ p.isometry.conj().T
        assert trace_distance(got, want) < 1e-7


def test_structure_embedded_elements_are_fixed():
    ch, _ = planted_fixed_point_channel(PlantSpec([(2, 2), (1, 3)], seed=3))
    st_ = structure_decompose(ch)
    assert st_.residual <= 1e-8
    x = np.array([[0.3, 1j], [-1j, 0.7]])
    el = st_.embed(0, x)
    assert np.linalg.norm(ch(el) - el) <= 1e-8


def test_structure_rank_deficient_block_state_flagged():
    # amplitude damping: fixed state |0><0| is rank deficient on the single L block
    ch = QuantumChannel([np.diag([1, 0]), np.array([[0, 1], [0, 0]])])
    st_ = structure_decompose(ch)
    assert st_.dims() == [(1, 2)]
    assert not st_.blocks[0].full_rank
    assert st_.notes


def test_restricted_channel_is_cptp():
    ch, _ = planted_fixed_point_channel(PlantSpec([(2, 2)], seed=4))
    st_ = structure_decompose(ch)
    b = st_.blocks[0]
    r = restricted_channel(ch, b.isometry, b.dim_H, b.dim_L)
    assert r.tp_error() < 1e-9
    assert np.allclose(r(b.state), b.state, atol=1e-9)


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_commutant_equals_adjoint_eigenspace(seed):
    ch = random_channel(3, 3, 2, seed=seed)
    heis = heisenberg_fixed_algebra(ch)
    eig = adjoint_fixed_point_space(ch)
    assert max_principal_angle(heis.basis, eig) <= 1e-7


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_spectral_projectors_of_fixed_point_preserved(seed):
    # unital channel fixing a planted Hermitian rho fixes each spectral projector
    rng = np.random.default_rng(seed)
    u = haar_unitary(4, rng)
    rho = u @ np.diag([0.1, 0.2, 0.2, 0.5]) @ u.conj().T
    ks = [np.sqrt(0.5) * u @ np.diag(np.exp(1j * rng.normal(size=4))) @ u.conj().T for _ in range(2)]
    blk = np.zeros((4, 4), dtype=complex)
    blk[1:3, 1:3] = haar_unitary(2, rng)
    blk[0, 0] = blk[3, 3] = 1
    ch = QuantumChannel([np.sqrt(0.5) * k for k in ks] + [np.sqrt(0.5) * u @ blk @ u.conj().T])
    assert np.allclose(ch(rho), rho, atol=1e-12)
    _, projs, _ = spectral_projectors(rho)
    for p in projs:
        assert np.linalg.norm(ch(p) - p) <= 1e-8


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_fixed_points_parts_and_support(seed):
    ch, _ = planted_fixed_point_channel(PlantSpec([(2, 1), (1, 2)], seed=seed))
    basis = fixed_point_space(ch)
    rng = np.random.default_rng(seed)
    x = np.einsum("k,kij->ij", rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis)), basis)
    herm, anti = (x + x.conj().T) / 2, (x - x.conj().T) / 2
    w, v = np.linalg.eigh(herm)
    pos = (v * np.clip(w, 0, None)) @ v.conj().T
    for part in (herm, anti, pos, pos - herm):
        assert np.linalg.norm(ch(part) - part) <= 1e-8
    # support projector of a fixed density matrix
    if np.trace(pos).real < 1e-6:
        pos = pos - herm
    rho = pos / np.trace(pos).real
    s = support(rho, 1e-9)
    q = s @ s.conj().T
    assert np.real(np.trace((np.eye(len(q)) - q) @ ch(q))) <= 1e-9
    assert np.linalg.eigvalsh(ch.adjoint()(q) - q).min() >= -1e-9


def test_classify_identity_tq():
    assert classify_channel_output(identity_channel(2)).verdict == "TQ"


def test_classify_dephasing_pc():
    v = classify_channel_output(pinching([np.diag([1, 0]), np.diag([0, 1])]))
    assert v.verdict == "PC"
    ks = sorted(np.real(np.diag(k)).round(9).tolist() for k in v.witness.kraus)
    assert ks == [[0.0, 1.0], [1.0, 0.0]]
    assert v.residual <= 1e-9


def test_classify_replacer_pc():
    v = classify_channel_output(replacer_channel(np.eye(2) / 2, 2))
    assert v.verdict == "PC"
    assert v.residual <= 1e-9


def test_classify_random_unitary_tq():
    assert classify_channel_output(unitary_channel(haar_unitary(3, 5))).verdict == "TQ"
