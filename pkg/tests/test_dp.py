import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from privimmune import PrivacyBudget, child_rng, derive_seed, exponential_choice, sample_laplace, sparse_vector_below


def test_budget_validation():
    PrivacyBudget(1.0, 0.5)
    for bad in [(0.0, 0.1), (1.0, 0.0), (1.0, 1.0), (1.0, 0.1, -1.0)]:
        with pytest.raises(ValueError):
            PrivacyBudget(*bad)


def test_seed_splitting_is_fixed():
    assert derive_seed(7, 3) == derive_seed(7, 3)
    assert derive_seed(7, 3) != derive_seed(7, 4)
    assert derive_seed(7, 3) != derive_seed(8, 3)
    assert child_rng(1, 2).random() == child_rng(1, 2).random()


def test_laplace_replays():
    a = [sample_laplace(1.0, np.random.default_rng(5)) for _ in range(2)]
    assert a[0] == a[1]


def test_laplace_moments():
    rng = np.random.default_rng(0)
    x = np.array([sample_laplace(1.0, rng) for _ in range(100_000)])
    assert abs(x.mean()) < 0.02
    assert abs(x.var() - 2.0) < 0.1
    assert abs((x < 0).mean() - 0.5) < 0.01


def test_laplace_scale():
    rng = np.random.default_rng(1)
    x = np.array([sample_laplace(3.0, rng) for _ in range(50_000)])
    assert np.median(np.abs(x)) == pytest.approx(3.0 * math.log(2), rel=0.03)
    with pytest.raises(ValueError):
        sample_laplace(0.0, rng)


def test_exponential_choice_examples():
    rng = np.random.default_rng(2)
    assert {exponential_choice([4.0], 3.0, rng) for _ in range(20)} == {0}
    draws = np.array([exponential_choice([1.0, 1.0], 2.0, rng) for _ in range(100_000)])
    assert abs((draws == 0).mean() - 0.5) < 0.01
    draws = np.array([exponential_choice([1.0, 0.0], math.log(3), rng) for _ in range(100_000)])
    assert abs((draws == 0).mean() - 0.75) < 0.01
    with pytest.raises(ValueError):
        exponential_choice([], 1.0, rng)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_exponential_choice_softmax_law(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 6))
    u = rng.uniform(-3, 3, size=k)
    eps = float(rng.uniform(0.1, 1.5))
    p = np.exp(eps * u) / np.exp(eps * u).sum()
    trials = 100_000
    counts = np.bincount([exponential_choice(u, eps, rng) for _ in range(trials)], minlength=k)
    se = np.sqrt(p * (1 - p) / trials)
    assert np.all(np.abs(counts / trials - p) <= 3 * se + 1e-12)


def test_exponential_choice_no_overflow():
    rng = np.random.default_rng(3)
    assert exponential_choice([1e6, 0.0], 10.0, rng) == 0


def test_sparse_vector_examples():
    rng = np.random.default_rng(4)
    assert sparse_vector_below([-1e6] * 5, 0.0, 1.0, rng) == 0
    assert sparse_vector_below([1e6] * 100, 0.0, 1.0, rng) is None
    hits = [sparse_vector_below([10, 10, -10, 10], 0.0, 2.0, rng) for _ in range(10_000)]
    assert np.mean([h == 2 for h in hits]) >= 0.95
    with pytest.raises(ValueError):
        sparse_vector_below([1.0], 0.0, 0.0, rng)


def test_sparse_vector_is_lazy():
    def stream():
        yield 5.0
        yield -1e9
        raise AssertionError("read past the crossing")

    assert sparse_vector_below(stream(), 0.0, 10.0, np.random.default_rng(0)) == 1


@given(st.lists(st.integers(-50, 50), min_size=1, max_size=20), st.integers(-50, 50))
def test_sparse_vector_noiseless_limit(queries, threshold):
    threshold += 0.5  # keep queries off the threshold itself
    first = next((i for i, q in enumerate(queries) if q <= threshold), None)
    assert sparse_vector_below(queries, threshold, 1e9, np.random.default_rng(0)) == first
