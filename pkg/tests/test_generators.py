import numpy as np
import pytest

from catdecomp.channels import make_channel
from catdecomp.fixed_points import fixed_point_space, structure_decompose
from catdecomp.generators import (
    PlantSpec,
    bb84_state,
    example_states,
    extq_state,
    haar_unitary,
    planted_fixed_point_channel,
    planted_pcq_state,
    random_channel,
    random_isometry,
    random_state,
)
from catdecomp.koashi_imoto import classify_bipartite
from catdecomp.linalg import is_density_matrix, ket, proj, trace_distance


def test_random_channel_deterministic():
    a = random_channel(3, 2, 2, seed=42)
    b = random_channel(3, 2, 2, seed=42)
    assert np.array_equal(a.kraus, b.kraus)


def test_random_channel_validates_and_shape():
    ch = random_channel(2, 3, 2, seed=1)
    make_channel(ch.kraus)
    assert ch.kraus.shape == (2, 3, 2)


def test_haar_unitary_and_isometry():
    u = haar_unitary(5, 0)
    assert np.allclose(u.conj().T @ u, np.eye(5))
    v = random_isometry(2, 5, 1)
    assert np.allclose(v.conj().T @ v, np.eye(2))


def test_random_state_valid():
    assert is_density_matrix(random_state(4, seed=2))
    assert np.linalg.matrix_rank(random_state(4, rank=2, seed=3)) == 2


def test_planted_channel_identity_on_m2():
    ch, plant = planted_fixed_point_channel(PlantSpec([(2, 1)], seed=4))
    assert ch.is_unitary()
    assert len(fixed_point_space(ch)) == 4


def test_planted_channel_replacer_like():
    ch, plant = planted_fixed_point_channel(PlantSpec([(1, 3)], seed=5))
    basis = fixed_point_space(ch)
    assert len(basis) == 1
    rho = plant[0].isometry @ plant[0].state @ plant[0].isometry.conj().T
    assert trace_distance(basis[0] / np.trace(basis[0]), rho) < 1e-10


def test_planted_channel_recovered():
    ch, plant = planted_fixed_point_channel(PlantSpec([(2, 2), (1, 3)], seed=6))
    st_ = structure_decompose(ch)
    assert st_.dims() == [(2, 2), (1, 3)]
    for b, p in zip(st_.blocks, plant):
        got = b.isometry @ np.kron(np.eye(b.dim_H) / b.dim_H, b.state) @ b.isometry.conj().T
        want = p.isometry @ np.kron(np.eye(p.dim_a) / p.dim_a, p.state) @ p.isometry.conj().T
        assert trace_distance(got, want) < 1e-7


def test_planted_pcq_tq_core():
    rho, dims, _ = planted_pcq_state(PlantSpec([(1, 2)], seed=7))
    assert classify_bipartite(rho, dims).verdict == "TQ-Q"


def test_planted_pcq_cq():
    rho, dims, _ = planted_pcq_state(PlantSpec([(1, 1), (1, 1)], seed=8))
    assert classify_bipartite(rho, dims).verdict == "PC-Q"


def test_planted_pcq_recovered():
    rho, dims, plant = planted_pcq_state(PlantSpec([(2, 1), (1, 2)], seed=9))
    assert is_density_matrix(rho)
    v = classify_bipartite(rho, dims)
    got = sorted(((b.dim_L, b.dim_R), b.probability) for b in v.decomposition.blocks)
    want = sorted(((p.dim_a, p.dim_b), p.probability) for p in plant)
    assert [g[0] for g in got] == [w[0] for w in want]
    assert np.allclose([g[1] for g in got], [w[1] for w in want], atol=1e-8)


def test_planted_deterministic():
    a = planted_pcq_state(PlantSpec([(2, 1), (1, 2)], seed=10))[0]
    b = planted_pcq_state(PlantSpec([(2, 1), (1, 2)], seed=10))[0]
    assert np.array_equal(a, b)


def test_extq_matches_formula():
    rho = extq_state(2, [1 / 3, 2 / 3])
    plus = np.ones(2) / np.sqrt(2)
    want = 0.5 * np.kron(np.diag([1 / 3, 2 / 3]), proj(ket(2, 0))) + 0.5 * np.kron(proj(plus), proj(ket(2, 1)))
    assert rho.shape == (4, 4)
    assert np.isclose(np.trace(rho), 1)
    assert np.allclose(rho, want)


def test_bb84_special_case():
    rho = bb84_state()
    plus = np.ones(2) / np.sqrt(2)
    want = 0.5 * np.kron(proj(ket(2, 0)), proj(ket(2, 0))) + 0.5 * np.kron(proj(plus), proj(ket(2, 1)))
    assert np.allclose(rho, want)
    assert np.allclose(example_states("bb84"), rho)


def test_extq_rejects_degenerate():
    with pytest.raises(ValueError, match="nondegenerate"):
        extq_state(2, [0.5, 0.5])
    with pytest.raises(ValueError):
        extq_state(2, [0.7, 0.7])


def test_plant_spec_validation():
    with pytest.raises(ValueError):
        PlantSpec([(0, 2)])
    assert PlantSpec([(2, 3), (1, 2)]).total_dim == 8
