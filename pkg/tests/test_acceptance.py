"""Acceptance criteria, one test each, each printing a single PASS/FAIL line."""
import math
import statistics
import time

import numpy as np

from enspec.circuit import CircuitIR, Gate, MarginalSpec, marginal_probability, random_circuit, simulate
from enspec.fastforward import FFParams, build_ff_unitary, verify_ff
from enspec.fk import build_fk, build_hprop, certify_ground_space, history_overlap, history_state
from enspec.hamiltonian import build_h2d, rescale_to_unit, spectral_gap, u_weights, v_weights
from enspec.iqp import IqpGraph, LatticeSpec, ProductInput, build_input_state, build_iqp, conjugate_z
from enspec.linalg import eigendecompose, l1_distance
from enspec.reductions import (PolyBoxParams, anticoncentration_stats, hoeffding_samples, lemma1_bounds,
                               lemma1_grid, polybox_estimate, run_theorem2, worst_case_lemma1)
from enspec.sampling import (circuit_distribution, exact_energy_distribution, perturb_distribution,
                             theorem1_distribution, EnergyGrid)

from conftest import pauli_dense


def report(number, title, passed, detail, elapsed, limit):
    in_time = elapsed <= limit
    ok = passed and in_time
    status = "PASS" if ok else "FAIL"
    print(f"\ncriterion {number:>2} [{status}] {title}: {detail} ({elapsed:.2f}s of {limit:.0f}s)")
    return ok


def test_criterion_01_diagonalization_identity():
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    count = 0
    for shape in [(1, 2), (2, 2), (2, 3), (3, 3)]:
        lat = LatticeSpec(*shape)
        for _ in range(20):
            w = rng.random(lat.n)
            w = w / w.sum() * rng.uniform(0.2, 1.0)
            worst = max(worst, build_h2d(lat, w).consistency_error())
            count += 1
    elapsed = time.perf_counter() - start
    assert report(1, "diagonalization identity", worst <= 1e-10,
                  f"max operator-norm error {worst:.2e} over {count} weight vectors up to 3x3", elapsed, 30)


def test_criterion_02_conjugation():
    start = time.perf_counter()
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 7))
        pairs = [(j, k) for j in range(n) for k in range(j + 1, n)]
        edges = tuple((j, k, float(rng.normal())) for j, k in pairs if rng.random() < 0.5)
        g = IqpGraph(n, edges, tuple(rng.normal(size=n)))
        U = build_iqp(g).unitary()
        l = int(rng.integers(n))
        z = ["I"] * n
        z[l] = "Z"
        dense = U.conj().T @ pauli_dense("".join(z)) @ U
        worst = max(worst, float(np.abs(conjugate_z(l, g).dense() - dense).max()))
    localities = []
    for shape in [(3, 3), (3, 4), (4, 4)]:
        lat = LatticeSpec(*shape)
        localities += [conjugate_z(v, lat.graph()).locality() for v in lat.interior()]
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and max(localities) <= 5
    assert report(2, "closed-form conjugation", ok,
                  f"max entry error {worst:.2e} on 200 graphs; interior locality {max(localities)}", elapsed, 60)


def test_criterion_03_theorem1_distributional():
    start = time.perf_counter()
    rng = np.random.default_rng(303)
    worst = {0.0: 0.0, 0.01: 0.0, 0.05: 0.0}
    oracle_gap = 0.0
    for _ in range(50):
        lat = LatticeSpec(*[(2, 2), (1, 4)][int(rng.integers(2))])
        H = build_h2d(lat, u_weights(4))
        inp = ProductInput.random(4, rng)
        P = circuit_distribution(H, inp)
        q = theorem1_distribution(H, P, 4)
        ideal = exact_energy_distribution(H, build_input_state(inp), EnergyGrid(16))
        oracle_gap = max(oracle_gap, l1_distance(q.q, ideal.q))
        for beta in worst:
            P2 = perturb_distribution(P, beta, int(rng.integers(2**32)))
            q2 = theorem1_distribution(H, P2, 4)
            worst[beta] = max(worst[beta], abs(l1_distance(q2.q, q.q) - beta))
    elapsed = time.perf_counter() - start
    ok = max(worst.values()) <= 1e-12 and oracle_gap <= 1e-12
    detail = ", ".join(f"beta={b}: |l1-beta|<={e:.1e}" for b, e in worst.items())
    assert report(3, "digit-truncating sampler l1 equals injected beta", ok,
                  f"{detail}; ideal vs oracle {oracle_gap:.1e}", elapsed, 60)


def test_criterion_04_theorem2():
    start = time.perf_counter()
    lat = LatticeSpec(2, 2)
    rows = []
    ok = True
    for eps, beta in [(0.0, 0.0), (0.01, 0.02), (0.05, 0.0)]:
        for adversarial in (True, False):
            r = run_theorem2(lat, eps, beta, inputs=20, seed=404, adversarial=adversarial, tol=1e-12)
            ok &= r.passed
            rows.append(f"({eps},{beta}{',adv' if adversarial else ''}) {r.measured:.4g}<={r.bound:.4g}")
    elapsed = time.perf_counter() - start
    assert report(4, "energy-to-basis reduction within 2eps+beta", ok, "; ".join(rows), elapsed, 60)


def test_criterion_05_fast_forward():
    start = time.perf_counter()
    H = build_h2d(LatticeSpec(2, 2), u_weights(4))
    worst_ratio = 0.0
    ok = True
    for T in (1, 2**10, 2**20):
        for a in (4, 8, 16):
            r = verify_ff(H, FFParams(T, a))
            ok &= r.passed
            worst_ratio = max(worst_ratio, r.distance / r.bound)
    times = {}
    for T in (1, 2**10, 2**20):
        samples = []
        for _ in range(7):
            t0 = time.perf_counter()
            build_ff_unitary(H, FFParams(T, 8))
            samples.append(time.perf_counter() - t0)
        times[T] = statistics.median(samples)
    growth = times[2**20] / times[1]
    # linear growth would be a factor of ~1e6; anything below 10 is flat up to noise
    ok &= growth < 10
    elapsed = time.perf_counter() - start
    trend = ", ".join(f"T=2^{int(math.log2(T))}: {s * 1e3:.2f}ms" for T, s in times.items())
    assert report(5, "fast-forward error and cost", ok,
                  f"max distance/bound {worst_ratio:.3f}; build time {trend}; growth x{growth:.2f}",
                  elapsed, 60)


def test_criterion_06_fk_certification():
    start = time.perf_counter()
    rng = np.random.default_rng(606)
    stats = {"prop_min": 0.0, "annihilation": 0.0, "pgs_init": 0.0, "overlap": 0.0, "margin": math.inf}
    ok = True
    for _ in range(50):
        n, T = int(rng.integers(1, 4)), int(rng.integers(1, 7))
        c = random_circuit(n, T, rng)
        Hp = build_hprop(c)
        stats["prop_min"] = min(stats["prop_min"], float(np.linalg.eigvalsh(Hp.dense()).min()))
        for y in range(1 << n):
            stats["annihilation"] = max(stats["annihilation"],
                                        float(np.linalg.norm(Hp.apply(history_state(c, y).vector))))
        x = int(rng.integers(1 << n))
        r_init = certify_ground_space(build_fk(c), x)
        expected = abs(simulate(c, 0).amplitudes[x]) ** 2 / (T + 1)
        stats["pgs_init"] = max(stats["pgs_init"], abs(r_init.pgs_measured - expected))
        ok &= r_init.passed and r_init.ground_dim == 1
        k = int(rng.integers(1, n + 1))
        positions = tuple(sorted(rng.choice(n, size=k, replace=False).tolist()))
        spec = MarginalSpec(positions, tuple(int(b) for b in rng.integers(2, size=k)))
        fk = build_fk(c, init=False, marginal=spec)
        r_pen = certify_ground_space(fk, x)
        ok &= r_pen.passed and r_pen.ground_dim == int(spec.mask(n).sum())
        for sector in r_pen.penalized:
            stats["margin"] = min(stats["margin"], sector["lowest"] - sector["bound"])
        y = fk.ground_labels()[0]
        psi = fk.history_basis([y])[:, 0]
        later = fk.omega_basis(y)[:, 1:]
        stats["overlap"] = max(stats["overlap"],
                               abs(np.linalg.norm(later.conj().T @ psi) - history_overlap(T)))
    ok &= stats["prop_min"] >= -1e-10 and stats["annihilation"] <= 1e-10
    ok &= stats["pgs_init"] <= 1e-10 and stats["overlap"] <= 1e-10 and stats["margin"] >= -1e-10
    elapsed = time.perf_counter() - start
    detail = (f"min eig(H_prop) {stats['prop_min']:.1e}, |H_prop psi| <= {stats['annihilation']:.1e}, "
              f"P_GS error {stats['pgs_init']:.1e}, cos(theta) error {stats['overlap']:.1e}, "
              f"min margin over lemma bound {stats['margin']:.3g}")
    assert report(6, "clock-Hamiltonian certification on 50 circuits", ok, detail, elapsed, 300)


def _polybox_circuit(rng):
    a, b = rng.uniform(0, np.pi, size=2)
    return CircuitIR(3, (Gate("H", (0,)), Gate("RX", (1,), (a,)), Gate("CX", (0, 2)), Gate("RX", (2,), (b,))))


def test_criterion_07_polybox():
    start = time.perf_counter()
    params = PolyBoxParams(0.1, 0.1)
    spec = MarginalSpec((1, 2), (0, 1))
    rng = np.random.default_rng(707)
    runs = 100
    hits = 0
    s = None
    for run in range(runs):
        c = _polybox_circuit(rng)
        p = marginal_probability(c, 0, spec)
        res = polybox_estimate(c, 0, spec, params, seed=run)
        s = res.samples
        hits += abs(res.p_hat - p) <= params.delta_p
    rate = hits / runs
    sigma = math.sqrt(0.9 * 0.1 / runs)
    threshold = 0.9 - 3 * sigma
    expected_s = math.ceil(math.log(20) * 2 * 25 / 0.01)
    ok = rate >= threshold and s == expected_s == hoeffding_samples(0.1, 0.1, 4)
    elapsed = time.perf_counter() - start
    assert report(7, "poly-box success rate", ok,
                  f"{hits}/{runs} within delta_p (needs >= {threshold:.2f}); s = {s}", elapsed, 600)


def test_criterion_08_spectral_facts():
    start = time.perf_counter()
    H = build_h2d(LatticeSpec(2, 2), u_weights(4))
    exact = sorted(float(v) for v in H.eigen.exact_values())
    bit_exact = exact == [z / 16 for z in range(16)] and len(set(exact)) == 16
    numeric = eigendecompose(H.operator()).eigenvalues
    numeric_err = float(np.abs(numeric - np.arange(16) / 16).max())
    gaps = {}
    for shape in [(2, 2), (2, 3), (3, 3)]:
        lat = LatticeSpec(*shape)
        gaps[lat.n] = abs(spectral_gap(build_h2d(lat, v_weights(lat.n)).operator()).gap - 1 / lat.n)
    ok = bit_exact and numeric_err < 1e-10 and max(gaps.values()) <= 1e-10
    elapsed = time.perf_counter() - start
    detail = (f"16 distinct exact levels z/16: {bit_exact} (numeric {numeric_err:.1e}); "
              + ", ".join(f"n={n} gap error {e:.1e}" for n, e in gaps.items()))
    assert report(8, "spectral facts", ok, detail, elapsed, 10)


def test_criterion_09_lemma1():
    start = time.perf_counter()
    rng = np.random.default_rng(909)
    worst_slack = math.inf
    passed = 0
    for trial in range(100):
        n, T = int(rng.integers(1, 3)), int(rng.integers(1, 5))
        c = random_circuit(n, T, rng)
        if trial % 2:
            fk = build_fk(c)
        else:
            fk = build_fk(c, init=False, marginal=MarginalSpec((0,), (int(rng.integers(2)),)))
        H = fk.physical()
        kappa = float(np.abs(np.linalg.eigvalsh(H.dense())).max())
        H = rescale_to_unit(H, kappa, psd=True)
        gap = spectral_gap(H).gap
        state = fk.input_state(int(rng.integers(1 << n)))
        ideal = exact_energy_distribution(H, state, lemma1_grid(gap))
        eps, beta = float(rng.uniform(0, 0.1)), float(rng.uniform(0, 0.1))
        direction = ("down", "up")[trial % 4 // 2]
        d = worst_case_lemma1(ideal, gap, eps, beta, direction)
        r = lemma1_bounds(d, H, state, eps, beta, gap=gap)
        passed += r.passed
        worst_slack = min(worst_slack, r.bound - r.deviation)
    elapsed = time.perf_counter() - start
    assert report(9, "ground-state probability within eps+beta", passed == 100,
                  f"{passed}/100 trials; min slack {worst_slack:.3g}", elapsed, 60)


def test_criterion_10_anticoncentration():
    start = time.perf_counter()
    lat = LatticeSpec(2, 3)
    a = anticoncentration_stats(lat, 200, 1.0, seed=1)
    b = anticoncentration_stats(lat, 200, 1.0, seed=1)
    c = anticoncentration_stats(lat, 200, 1.0, seed=2)
    same = a.fraction == b.fraction and a.per_trial == b.per_trial
    spread = abs(a.fraction - c.fraction)
    elapsed = time.perf_counter() - start
    assert report(10, "anticoncentration diagnostic", same and spread <= 0.1,
                  f"fraction {a.fraction:.4f} (seed 1, repeat identical: {same}), "
                  f"{c.fraction:.4f} (seed 2), spread {spread:.4f}", elapsed, 60)
