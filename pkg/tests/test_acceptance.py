"""Acceptance criteria 1-10. Each test records one PASS/FAIL line, shown in the terminal summary."""

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE, audit_summary, record

from catdecomp.algebra import generate_star_algebra, wedderburn_decompose
from catdecomp.catalysis import (
    CatalysisInstance,
    TheoremViolationError,
    check_catalytic,
    contagion_extend,
    ensemble_reduction,
    mi_catalysis_test,
    mutual_information,
    binary_entropy,
)
from catdecomp.channels import QuantumChannel
from catdecomp.fixed_points import (
    adjoint_fixed_point_space,
    fixed_point_space,
    heisenberg_fixed_algebra,
    structure_decompose,
)
from catdecomp.generators import (
    PlantSpec,
    bb84_state,
    bell_state,
    cq_state,
    extq_state,
    ginibre,
    haar_unitary,
    nondegenerate_spectrum,
    planted_catalysis_instance,
    planted_fixed_point_channel,
    planted_pcq_state,
    random_channel,
    random_isometry,
    random_state,
    random_unitary_channel,
)
from catdecomp.koashi_imoto import classify_bipartite
from catdecomp.linalg import max_principal_angle, trace_distance, trace_norm

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(autouse=True)
def _fail_line_on_error(request):
    n = int(request.node.name.split("_")[2])
    ACCEPTANCE.pop(n, None)
    yield
    if n not in ACCEPTANCE:
        record(n, False, "test raised before producing a result")


def random_block_spec(rng, max_total=12):
    while True:
        n = int(rng.integers(1, 4))
        blocks = [(int(rng.integers(1, 4)), int(rng.integers(1, 4))) for _ in range(n)]
        if sum(a * b for a, b in blocks) <= max_total:
            return blocks


def planted_channels(n=60, seed=100):
    rng = np.random.default_rng(seed)
    return [planted_fixed_point_channel(PlantSpec(random_block_spec(rng), seed=int(rng.integers(2**31))))
            for _ in range(n)]


def block_state(iso, dim_h, state):
    return iso @ np.kron(np.eye(dim_h) / dim_h, state) @ iso.conj().T


def test_criterion_1_planted_structure_recovery():
    worst, failures = 0.0, 0
    instances = planted_channels()
    for ch, plant in instances:
        st = structure_decompose(ch)
        if sorted(st.dims()) != sorted((p.dim_a, p.dim_b) for p in plant):
            failures += 1
            continue
        remaining = list(plant)
        for b in st.blocks:
            got = block_state(b.isometry, b.dim_H, b.state)
            cands = [(trace_distance(got, block_state(p.isometry, p.dim_a, p.state)), k)
                     for k, p in enumerate(remaining) if (p.dim_a, p.dim_b) == (b.dim_H, b.dim_L)]
            dist, k = min(cands)
            remaining.pop(k)
            worst = max(worst, dist)
    ok = failures == 0 and worst <= 1e-7
    record(1, ok, f"{len(instances)} planted channels, {failures} dimension mismatches, "
                  f"max block-state trace distance {worst:.2e} (tol 1e-7)")
    assert ok


def test_criterion_2_commutant_matches_eigenspace():
    rng = np.random.default_rng(200)
    worst, count = 0.0, 0
    for k in range(100):
        if k % 2:
            d = int(rng.integers(2, 6))
            ch = random_channel(d, d, int(rng.integers(1, 4)), seed=rng)
        else:
            ch, _ = planted_fixed_point_channel(PlantSpec(random_block_spec(rng, 8), seed=int(rng.integers(2**31))))
        heis = heisenberg_fixed_algebra(ch).basis
        eig = adjoint_fixed_point_space(ch)
        worst = max(worst, np.pi / 2 if len(heis) != len(eig) else max_principal_angle(heis, eig))
        count += 1
    ok = worst <= 1e-7
    record(2, ok, f"{count} channels (half planted), max principal angle {worst:.2e} (tol 1e-7)")
    assert ok


def test_criterion_3_dimension_identity():
    bad = 0
    instances = planted_channels()
    for ch, plant in instances:
        st = structure_decompose(ch)
        expected = sum(b.dim_H**2 for b in st.blocks)
        if not (len(fixed_point_space(ch)) == len(adjoint_fixed_point_space(ch)) == expected
                == st.dimension() == sum(p.dim_a**2 for p in plant)):
            bad += 1
    ok = bad == 0
    record(3, ok, f"{len(instances)} planted channels, {bad} violations of dim F = dim F† = sum dim_H^2")
    assert ok


def test_criterion_4_classification_fixtures():
    problems = []
    for name, rho in [("extq(1/3,2/3)", extq_state(2, [1 / 3, 2 / 3])), ("bb84", bb84_state())]:
        if classify_bipartite(rho, (2, 2)).verdict != "TQ-Q":
            problems.append(name)
    rng = np.random.default_rng(400)
    pcq = []
    for k in range(10):
        n = int(rng.integers(2, 4))
        probs = nondegenerate_spectrum(n, rng)
        d_b = int(rng.integers(2, 4))
        pcq.append((f"cq{k}", cq_state(probs, [random_state(d_b, seed=rng) for _ in range(n)]), (n, d_b)))
    for k in range(15):
        blocks = random_block_spec(rng, 6)
        if len(blocks) == 1 and blocks[0][0] == 1:
            # a lone dim_L = 1 block is TQ-Q; add a second block
            blocks = blocks + [(1, 1)]
        rho, dims, _ = planted_pcq_state(PlantSpec(blocks, seed=int(rng.integers(2**31))))
        pcq.append((f"planted{blocks}", rho, dims))
    worst = 0.0
    for name, rho, dims in pcq:
        v = classify_bipartite(rho, dims)
        if v.verdict != "PC-Q" or v.witness is None:
            problems.append(name)
            continue
        resid = trace_norm(v.witness.apply(rho, list(dims), on=0) - rho)
        worst = max(worst, resid)
        if resid > 1e-9:
            problems.append(name)
    ok = not problems
    record(4, ok, f"2 TQ-Q fixtures + {len(pcq)} PC-Q states, max witness residual {worst:.2e} (tol 1e-9)"
                  + (f", failing: {problems}" if problems else ""))
    assert ok


def tq_catalysts(rng, n):
    out = []
    while len(out) < n:
        d_c = int(rng.integers(2, 4))
        if len(out) % 2:
            tau = extq_state(d_c, nondegenerate_spectrum(d_c, rng))
            dims = (d_c, 2)
        else:
            dims = (d_c, int(rng.integers(2, 4)))
            tau = random_state(dims[0] * dims[1], seed=rng)
        if classify_bipartite(tau, dims).verdict == "TQ-Q":
            out.append((tau, dims))
    return out


def test_criterion_5_no_catalysis_falsification():
    rng = np.random.default_rng(500)
    catalysts = tq_catalysts(rng, 25)
    counterexamples, tested, min_resid = 0, 0, np.inf
    while tested < 500:
        tau, (d_c, d_e) = catalysts[tested % len(catalysts)]
        d_s = 2
        lam = random_channel(d_s * d_c, d_s * d_c, int(rng.integers(1, 5)), seed=rng)
        if tested % 2:
            # near-identity interaction, close to the 0.01 threshold on Gamma
            eps = float(rng.uniform(0.02, 0.2))
            lam = QuantumChannel([np.sqrt(1 - eps) * np.eye(d_s * d_c)] + [np.sqrt(eps) * k for k in lam.kraus])
        inst = CatalysisInstance(random_state(d_s, seed=rng), lam, tau, d_c, d_e)
        rep = check_catalytic(inst)
        if rep.gamma_distance <= 0.01:
            continue
        tested += 1
        min_resid = min(min_resid, rep.residual)
        if rep.residual <= 1e-6:
            counterexamples += 1
    ok = counterexamples == 0
    record(5, ok, f"{tested} instances on 25 TQ-Q catalysts (half near-identity), {counterexamples} counterexamples, "
                  f"min catalytic residual {min_resid:.2e} (must exceed 1e-6)")
    assert ok


def test_criterion_6_ensemble_reduction():
    rng = np.random.default_rng(600)
    worst_out, worst_p, n_inst = 0.0, 0.0, 0
    specs = [[(2, 1)], [(1, 1), (1, 1)], [(2, 1), (1, 2)], [(1, 2), (1, 1)], [(2, 2)], [(1, 1), (1, 1), (1, 1)],
             [(2, 1), (1, 1)], [(3, 1)], [(2, 1), (1, 2), (1, 1)], [(1, 3), (2, 1)]]
    for k in range(24):
        blocks = specs[k % len(specs)]
        rho_s, lam, tau, (d_c, d_e), plant = planted_catalysis_instance(
            PlantSpec(blocks, seed=int(rng.integers(2**31))), dim_s=int(rng.integers(2, 4)))
        inst = CatalysisInstance(rho_s, lam, tau, d_c, d_e)
        red = ensemble_reduction(inst)
        n_inst += 1
        got = sorted((tuple(c.dims), c.probability) for c in red.components)
        want = sorted(((p.dim_a, p.dim_b), p.probability) for p in plant)
        if [g[0] for g in got] != [w[0] for w in want]:
            worst_p = np.inf
        else:
            worst_p = max(worst_p, max(abs(g[1] - w[1]) for g, w in zip(got, want)))
        for _ in range(20):
            r = random_state(inst.dim_s, seed=rng)
            worst_out = max(worst_out, trace_distance(red.apply(r), inst.output_system(r)))
    ok = worst_out <= 1e-8 and worst_p <= 1e-10
    record(6, ok, f"{n_inst} planted instances x 20 inputs, max output trace distance {worst_out:.2e} (tol 1e-8), "
                  f"max |p_i - plant| {worst_p:.2e} (tol 1e-10)")
    assert ok


def test_criterion_7_mutual_information():
    bell = mutual_information(bell_state(), (2, 2))
    bb84 = mutual_information(bb84_state(), (2, 2))
    h = binary_entropy(0.5 + np.sqrt(2) / 4)
    rng = np.random.default_rng(700)
    states = []
    for _ in range(5):
        d = int(rng.integers(2, 4))
        states.append((extq_state(d, nondegenerate_spectrum(d, rng)), (d, 2)))
    increases, violations, preserved, max_increase = 0, 0, 0, -np.inf
    for k in range(100):
        rho, dims = states[k % len(states)]
        d = dims[0]
        ch = random_unitary_channel(d, seed=rng) if k % 4 == 0 else \
            random_channel(d, d, int(rng.integers(1, 5)), seed=rng)
        before = mutual_information(rho, dims)
        after = mutual_information(ch.apply(rho, list(dims), on=0), dims)
        max_increase = max(max_increase, after - before)
        if after - before > 1e-9:
            increases += 1
        if abs(after - before) <= 1e-9:
            preserved += 1
            if int(np.sum(np.linalg.eigvalsh(ch.choi) > 1e-9)) != 1:
                violations += 1
        try:
            mi_catalysis_test(rho, dims, ch)
        except TheoremViolationError:
            violations += 1
    ok = abs(bell - 2.0) <= 1e-9 and abs(bb84 - h) <= 1e-6 and increases == 0 and violations == 0
    record(7, ok, f"Bell {bell:.12f}, BB84 {bb84:.9f} vs h {h:.9f}; 100 local channels: {increases} increases "
                  f"(max change {max_increase:.2e}), {preserved} preserved all unitary, {violations} violations")
    assert ok


def test_criterion_8_contagion():
    rng = np.random.default_rng(800)
    verdicts, tried = [], 0
    while len(verdicts) < 50:
        tried += 1
        d = int(rng.integers(2, 4))
        rho = extq_state(d, nondegenerate_spectrum(d, rng))
        d_k = int(rng.integers(2, 4))
        v = random_isometry(d, d_k * d, rng)
        rep = contagion_extend(rho, (d, 2), v)
        if rep.tau_k_full_rank:
            verdicts.append(rep.verdict)
    bad = sum(v != "TQ-Q" for v in verdicts)
    ok = bad == 0
    record(8, ok, f"{len(verdicts)} full-rank extensions ({tried} drawn), {bad} not TQ-Q on K|AB")
    assert ok


def test_criterion_9_wedderburn_internals():
    rng = np.random.default_rng(900)
    worst_rel, worst_rec = 0.0, 0.0
    for _ in range(20):
        d1, m1, d2, m2 = (int(x) for x in rng.integers(1, 4, size=4))
        n = d1 * m1 + d2 * m2
        u = haar_unitary(n, rng)
        gens = []
        for _ in range(2):
            g = np.zeros((n, n), dtype=complex)
            g[:d1 * m1, :d1 * m1] = np.kron(ginibre(d1, d1, rng), np.eye(m1))
            g[d1 * m1:, d1 * m1:] = np.kron(ginibre(d2, d2, rng), np.eye(m2))
            gens.append(u @ g @ u.conj().T)
        alg = generate_star_algebra(gens)
        dec = wedderburn_decompose(alg, rng=rng)
        for b in dec.blocks:
            e = b.matrix_units
            for i in range(b.dim_H):
                for j in range(b.dim_H):
                    for k in range(b.dim_H):
                        for l in range(b.dim_H):
                            want = e[i, l] if j == k else 0
                            worst_rel = max(worst_rel, np.linalg.norm(e[i, j] @ e[k, l] - want))
        worst_rec = max(worst_rec, max(np.linalg.norm(z - dec.reconstruct(z)) for z in alg.basis))
    audit_ok, audit_detail = audit_summary()
    ok = worst_rel <= 1e-7 and worst_rec <= 1e-7 and audit_ok
    record(9, ok, f"direct: 20 algebras, max unit-relation error {worst_rel:.2e}, max reconstruction "
                  f"{worst_rec:.2e}; audit so far: {audit_detail}")
    assert ok


def run_cli(args):
    proc = subprocess.run([sys.executable, "-m", "catdecomp", *args], capture_output=True)
    return proc.returncode, proc.stdout


def test_criterion_10_cli_golden():
    cases = [
        (["state", "classify", "--in", str(GOLDEN / "bb84.json"), "--cut", "2,2", "--tol", "1e-9"], 0,
         lambda r: r["verdict"] == "TQ-Q"),
        (["entropy", "mi", "--in", str(GOLDEN / "bell.json"), "--cut", "2,2"], 0,
         lambda r: abs(r["mi_bits"] - 2.0) <= 1e-9),
        (["state", "classify", "--in", str(GOLDEN / "malformed.json")], 2,
         lambda r: r["status"] == "input-error"),
    ]
    problems = []
    for args, code, check in cases:
        c1, out1 = run_cli(args)
        c2, out2 = run_cli(args)
        if out1 != out2 or c1 != c2:
            problems.append(f"{args[:2]} not byte-identical")
        if c1 != code or not check(json.loads(out1)):
            problems.append(f"{args[:2]} wrong result (exit {c1})")
    ok = not problems
    record(10, ok, "3 CLI examples run twice: " + ("byte-identical, expected results" if ok else "; ".join(problems)))
    assert ok
