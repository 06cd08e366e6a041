"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run with ``pytest -m acceptance -v``. The printed lines go straight to the
terminal, so they show up even when output capture is on.
"""

import itertools
import math
import time

import numpy as np
import pytest
from scipy.stats import spearmanr

from privimmune import (
    Graph,
    MaxDegTask,
    PrivacyBudget,
    SirConfig,
    SpectralCoverTask,
    SpectralWalkTask,
    count_walks4,
    decode_cover,
    generate,
    max_degree,
    parse_generator,
    private_permutation,
    privmaxdeg_explicit,
    privmaxdeg_implicit,
    privminsr_multiset,
    privminsr_walks,
    remove_nodes,
    simulate_sir,
    spectral_radius,
    walks4_through,
)
from privimmune.graph import neighbor_degree_sums
from privimmune.maxdeg import maxdeg_opt, maxdeg_parameters
from privimmune.multicover import MultiCoverInstance, exact_permutation_probability, exp_mech_epsilon
from privimmune.spectral import residual_neighbor_degree_bound

from helpers import (
    enumerate_walks4,
    is_feasible,
    neighbor_pair,
    random_graph,
    random_instance,
    recount_ok,
    star_plus_noise,
    walk_counts_by_convention,
)

pytestmark = pytest.mark.acceptance

# graph for the implicit-vs-explicit comparison, the budget sweep and the SIR check
CHUNG_LU = "chung-lu:n=1000,gamma=2.5,dmin=40,dmax=300,seed={seed}"
CHUNG_LU_TARGET = 20


@pytest.fixture
def verdict(capsys, request):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance] criterion {number:>2}: {'PASS' if ok else 'FAIL'} - {detail} ({request.node.name})")
        assert ok, detail

    return emit


def _enumerated_family():
    # every instance with n, m <= 2, multiplicities in {absent, 1, 2, unbounded}, requirements 0..3
    for n, m in itertools.product((1, 2), repeat=2):
        for mults in itertools.product((0, 1, 2, -1), repeat=n * m):
            sets = [{e: mults[i * n + e] for e in range(n) if mults[i * n + e]} for i in range(m)]
            for req in itertools.product(range(4), repeat=n):
                yield MultiCoverInstance.from_sets(n, sets, req)


def _sampled_family(rng, per_shape=12):
    for n, m in itertools.product(range(1, 7), repeat=2):
        for _ in range(per_shape):
            yield random_instance(rng, n, m, max_req=3, max_mult=3, p=0.5, unbounded=0.15)


def test_c01_decoding_exhaustive(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    instances = perms = bad = 0
    for inst in itertools.chain(_enumerated_family(), _sampled_family(rng)):
        if not is_feasible(inst):
            continue
        instances += 1
        for perm in itertools.permutations(range(inst.num_sets)):
            perms += 1
            bad += not recount_ok(inst, decode_cover(inst, perm))
    elapsed = time.perf_counter() - t0
    ok = bad == 0 and elapsed < 60
    verdict(1, ok, f"{instances} feasible instances, {perms} permutations, {bad} uncovered decodes, {elapsed:.1f}s")


def test_c02_dp_inequality(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    pairs = checks = 0
    worst = -math.inf
    for eps, delta in [(0.1, 0.5), (0.5, 0.2), (1.0, 0.1), (2.0, 0.05), (4.0, 0.01), (8.0, 1e-3)]:
        ep = exp_mech_epsilon(eps, delta)
        for _ in range(10):
            a, b = neighbor_pair(rng, int(rng.integers(1, 5)), int(rng.integers(1, 5)))
            pairs += 1
            for perm in itertools.permutations(range(a.num_sets)):
                p, q = exact_permutation_probability(a, perm, ep), exact_permutation_probability(b, perm, ep)
                worst = max(worst, p - math.exp(eps) * q - delta, q - math.exp(eps) * p - delta)
                checks += 2
    elapsed = time.perf_counter() - t0
    ok = pairs >= 20 and worst <= 1e-12 and elapsed < 60
    verdict(2, ok, f"{pairs} neighbor pairs, {checks} inequalities, worst P - e^eps P' - delta = {worst:.3g}")


def test_c03_implicit_utility_bound(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    budget = PrivacyBudget(1.0, 0.1)
    eps_prime = maxdeg_parameters(budget)["eps_prime"]
    graphs = runs = ok_runs = 0
    while graphs < 50:
        n = int(rng.integers(6, 13))
        g = random_graph(rng, n, float(rng.uniform(0.3, 0.7)))
        dmax = max_degree(g)
        if dmax < 2:
            continue
        D = int(rng.integers(1, dmax))
        opt = maxdeg_opt(g, D)
        bound = 12 * opt * (1 + 1 / eps_prime) * math.log(n)
        task = MaxDegTask(g, D, budget)
        for _ in range(200):
            ok_runs += len(privmaxdeg_implicit(task, rng).nodes) <= bound
        runs += 200
        graphs += 1
    frac = ok_runs / runs
    elapsed = time.perf_counter() - t0
    verdict(3, frac >= 0.99 and elapsed < 600, f"{graphs} graphs, {runs} runs, {frac:.4f} within bound, {elapsed:.1f}s")


def test_c04_explicit_slack(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(404)
    budget = PrivacyBudget(4.0, 0.01, 4.0)
    eps_prime = maxdeg_parameters(budget)["eps_prime"]
    D = 3
    parts = []
    ok = True
    for n in (50, 100, 200):
        hubs = n // 10
        g = star_plus_noise(rng, n, hubs, D, noise_edges=n // 2)
        opt = hubs
        task = MaxDegTask(g, D, budget)
        deg_ok = k_ok = 0
        for _ in range(200):
            sol = privmaxdeg_explicit(task, rng)
            deg_ok += sol.residual_max_degree <= D + 30 * math.log(n) / eps_prime
            k_ok += sol.k <= 30 * opt * math.log(n) / eps_prime
        ok &= deg_ok >= 190 and k_ok >= 190
        parts.append(f"n={n}: degree {deg_ok}/200, k {k_ok}/200")
    elapsed = time.perf_counter() - t0
    verdict(4, ok and elapsed < 600, "; ".join(parts) + f", {elapsed:.1f}s")


def test_c05_implicit_vs_explicit(verdict):
    t0 = time.perf_counter()
    budget = PrivacyBudget(4.0, 1e-2, 4.0)
    rows = []
    for seed in range(30):
        g = generate(parse_generator(CHUNG_LU.format(seed=seed)))
        task = MaxDegTask(g, CHUNG_LU_TARGET, budget)
        imp = privmaxdeg_implicit(task, np.random.default_rng(seed))
        exp = privmaxdeg_explicit(task, np.random.default_rng(seed))
        rows.append(
            (
                len(imp.nodes),
                max_degree(g, remove_nodes(g, imp.nodes)),
                spectral_radius(g, remove_nodes(g, imp.nodes)),
                exp.k,
                exp.residual_max_degree,
                spectral_radius(g, remove_nodes(g, exp.nodes)),
            )
        )
    r = np.array(rows, dtype=float)
    ib, id_, irho, eb, ed, erho = r.mean(axis=0)
    ok = ib > eb and np.all(r[:, 1] == CHUNG_LU_TARGET) and ed > CHUNG_LU_TARGET and erho > irho
    elapsed = time.perf_counter() - t0
    verdict(
        5,
        ok and elapsed < 900,
        f"implicit budget {ib:.1f}, max degree {id_:.2f}, rho {irho:.2f} | "
        f"explicit budget {eb:.1f}, max degree {ed:.2f}, rho {erho:.2f}, {elapsed:.1f}s",
    )


def test_c06_budget_sweep_trends(verdict):
    t0 = time.perf_counter()
    g = generate(parse_generator(CHUNG_LU.format(seed=1)))
    epsilons = [0.25, 0.5, 1.0, 2.0, 4.0]
    budgets, violations = [], []
    for eps in epsilons:
        task = MaxDegTask(g, CHUNG_LU_TARGET, PrivacyBudget(eps, 1e-3, eps))
        sols = [privmaxdeg_explicit(task, np.random.default_rng(s)) for s in range(50)]
        budgets.append(np.mean([s.k for s in sols]))
        violations.append(np.mean([max(s.residual_max_degree - CHUNG_LU_TARGET, 0) for s in sols]))
    rb = spearmanr(epsilons, budgets).statistic
    rv = spearmanr(epsilons, violations).statistic
    elapsed = time.perf_counter() - t0
    ok = rb >= 0.8 and rv <= -0.8 and elapsed < 1200
    means = ", ".join(f"{e:g}: {b:.0f}/{v:.0f}" for e, b, v in zip(epsilons, budgets, violations))
    verdict(6, ok, f"spearman budget {rb:+.2f}, violation {rv:+.2f}; eps: budget/violation {means}; {elapsed:.1f}s")


def test_c07_spectral_certificates(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(707)
    cert_runs = cert_bad = 0
    worst_gap = -math.inf
    for _ in range(30):
        g = random_graph(rng, int(rng.integers(15, 41)), float(rng.uniform(0.1, 0.4)))
        D = max(int(neighbor_degree_sums(g).max()) // 4, 1)
        task = SpectralCoverTask(g, D, PrivacyBudget(1.0, 0.1))
        for _ in range(5):
            res = privminsr_multiset(task, rng)
            rho = spectral_radius(g, remove_nodes(g, res.nodes))
            cert_runs += 1
            cert_bad += residual_neighbor_degree_bound(g, res.nodes) > D or rho > math.sqrt(D) + 1e-6
            worst_gap = max(worst_gap, rho - math.sqrt(D))

    # walks: dense graphs where T^4 = Delta^2 >= 6 ln n / eps' holds
    budget = PrivacyBudget(1.0, 0.01, 1.0)
    ep = exp_mech_epsilon(budget.epsilon, budget.delta)
    walk_graphs = [generate(parse_generator(f"er:n={n},p={p},seed={s}")) for s, (n, p) in enumerate(
        [(40, 0.5), (50, 0.4), (60, 0.3), (50, 0.5)])]
    default_ok = literal_ok = walk_runs = 0
    for g in walk_graphs:
        n = g.n
        T = math.sqrt(max_degree(g))
        assert T**4 >= 6 * math.log(n) / ep
        slack = 30 * math.log(n) / budget.epsilon1
        for _ in range(25):
            a = privminsr_walks(SpectralWalkTask(g, budget), rng)
            default_ok += a.residual_walks4 <= a.report.parameters["theta"] + slack
            b = privminsr_walks(SpectralWalkTask(g, budget, theta=n * T**4), rng)
            literal_ok += b.residual_walks4 <= n * T**4 + slack
            walk_runs += 1
    elapsed = time.perf_counter() - t0
    ok = cert_bad == 0 and default_ok >= 0.95 * walk_runs and literal_ok >= 0.95 * walk_runs and elapsed < 900
    verdict(
        7,
        ok,
        f"multiset {cert_runs} runs, {cert_bad} certificate failures, max rho - sqrt(D) = {worst_gap:.3g}; "
        f"walks {walk_runs} runs: W4 <= 4nT^4 + slack in {default_ok}, "
        f"with theta = nT^4, W4 <= nT^4 + slack in {literal_ok}; {elapsed:.1f}s",
    )


def test_c08_walk_count_oracle(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(808)
    bad = 0
    for _ in range(500):
        n = int(rng.integers(1, 8))
        g = random_graph(rng, n, float(rng.uniform(0.0, 1.0)))
        removed = rng.random(n) < 0.2 if rng.random() < 0.5 else None
        bad += count_walks4(g, removed) != len(enumerate_walks4(g, removed))
        weighted, _ = walk_counts_by_convention(g, removed)
        for v in range(n):
            if removed is None or not removed[v]:
                bad += walks4_through(g, v, removed) != weighted[v]
    elapsed = time.perf_counter() - t0
    verdict(8, bad == 0 and elapsed < 120, f"500 graphs, {bad} mismatches, {elapsed:.1f}s")


def test_c09_sir_spread_decreases(verdict):
    t0 = time.perf_counter()
    g = generate(parse_generator(CHUNG_LU.format(seed=1)))
    means, budgets, ses = [], [], []
    for eps in (4.0, 6.0, 8.0):
        task = MaxDegTask(g, CHUNG_LU_TARGET, PrivacyBudget(eps, 1e-3, eps))
        sizes, ks = [], []
        for s in range(200):
            sol = privmaxdeg_explicit(task, np.random.default_rng(s))
            ks.append(sol.k)
            sizes.append(simulate_sir(g, sol.nodes, SirConfig(0.2, 20, 1, seed=s)).mean_final_size)
        means.append(np.mean(sizes))
        ses.append(np.std(sizes) / math.sqrt(len(sizes)))
        budgets.append(np.mean(ks))
    elapsed = time.perf_counter() - t0
    ok = means[0] > means[1] > means[2] and budgets[0] < budgets[1] < budgets[2] and elapsed < 600
    detail = ", ".join(f"eps {e:g}: budget {b:.0f}, spread {m:.1f} (se {s:.1f})" for e, b, m, s in zip((4, 6, 8), budgets, means, ses))
    verdict(9, ok, f"{detail}; {elapsed:.1f}s")


def _regular_instance(m, q=4, f=3, seed=0):
    # m sets of q elements; every element appears in exactly f sets
    rng = np.random.default_rng(seed)
    n = m * q // f
    slots = rng.permutation(np.repeat(np.arange(n), f))
    sets = [dict.fromkeys(slots[i * q:(i + 1) * q].tolist(), 1) for i in range(m)]
    req = np.bincount(np.concatenate([list(s) for s in sets]), minlength=n) // 2
    return MultiCoverInstance.from_sets(n, sets, req)


def _circulant(n, degree):
    return Graph.from_edges(n, [(i, (i + j) % n) for i in range(n) for j in range(1, degree // 2 + 1)])


def _best_time(fn, repeats=5):
    best = math.inf
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def test_c10_runtime_shape(verdict):
    t0 = time.perf_counter()
    budget = PrivacyBudget(1.0, 0.1)
    # warm the compiled kernels before timing
    private_permutation(_regular_instance(60), 1.0, 0.1, np.random.default_rng(0))
    privmaxdeg_implicit(MaxDegTask(_circulant(50, 8), 4, budget), np.random.default_rng(0))

    worst = 0.0
    parts = []
    ladder = [3000 * 2**i for i in range(5)]
    times = [_best_time(lambda m=m, inst=_regular_instance(m): private_permutation(inst, 1.0, 0.1, np.random.default_rng(1))) for m in ladder]
    for (m1, t1), (m2, t2) in zip(zip(ladder, times), zip(ladder[1:], times[1:])):
        predicted = (m2 * math.log(m2)) / (m1 * math.log(m1))
        worst = max(worst, (t2 / t1) / predicted)
    parts.append("private_permutation m=" + "/".join(str(m) for m in ladder) + " ms=" + "/".join(f"{t * 1e3:.1f}" for t in times))

    degree = 8
    ladder_n = [2000 * 2**i for i in range(5)]
    times_n = [
        _best_time(lambda g=_circulant(n, degree): privmaxdeg_implicit(MaxDegTask(g, degree // 2, budget), np.random.default_rng(1)))
        for n in ladder_n
    ]
    for (n1, t1), (n2, t2) in zip(zip(ladder_n, times_n), zip(ladder_n[1:], times_n[1:])):
        predicted = (n2 * degree**2) / (n1 * degree**2)
        worst = max(worst, (t2 / t1) / predicted)
    parts.append("maxdeg n=" + "/".join(str(n) for n in ladder_n) + " ms=" + "/".join(f"{t * 1e3:.1f}" for t in times_n))
    elapsed = time.perf_counter() - t0
    verdict(10, worst <= 2.0 and elapsed < 600, f"worst observed/predicted ratio {worst:.2f}; " + "; ".join(parts) + f"; {elapsed:.1f}s")
