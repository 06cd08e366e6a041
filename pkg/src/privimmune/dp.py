"""Randomness and the differential-privacy building blocks shared by all mechanisms."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class PrivacyBudget:
    """``epsilon``/``delta`` for the selection stage, ``epsilon1`` for a sparse-vector stop rule.

    ``epsilon1 == 0`` means no stop rule is budgeted.
    """

    epsilon: float
    delta: float
    epsilon1: float = 0.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if not self.epsilon1 >= 0:
            raise ValueError(f"epsilon1 must be non-negative, got {self.epsilon1}")


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def derive_seed(seed: int, index: int) -> int:
    """Child seed for trial ``index``; a fixed function of ``(seed, index)``."""
    words = np.random.SeedSequence([int(seed), int(index)]).generate_state(2, dtype=np.uint32)
    return (int(words[0]) << 32) | int(words[1])


def child_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, index))


def sample_laplace(scale: float, rng: np.random.Generator) -> float:
    """One zero-mean Laplace draw by inverting the CDF of a single uniform."""
    if not scale > 0:
        raise ValueError(f"Laplace scale must be positive, got {scale}")
    while True:
        u = rng.random() - 0.5
        if u != -0.5:
            return -scale * math.copysign(1.0, u) * math.log1p(-2.0 * abs(u))


def exponential_choice(utilities: Sequence[float], eps_prime: float, rng: np.random.Generator) -> int:
    """Index ``i`` drawn with probability proportional to ``exp(eps_prime * utilities[i])``.

    ``eps_prime`` is used as given: fold any sensitivity factor in before calling.
    """
    u = np.asarray(utilities, dtype=np.float64)
    if u.size == 0:
        raise ValueError("cannot choose from an empty candidate list")
    if eps_prime < 0:
        raise ValueError("eps_prime must be non-negative")
    cum = np.cumsum(np.exp(eps_prime * (u - u.max())))
    i = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    return min(i, u.size - 1)


def sparse_vector_below(
    queries: Iterable[float], threshold: float, eps1: float, rng: np.random.Generator
) -> Optional[int]:
    """First index whose noisy query is at or below the noisy threshold, else ``None``.

    The threshold is perturbed once by ``Lap(2/eps1)`` and each query by an
    independent ``Lap(4/eps1)``; both perturbations are subtracted. Queries are
    consumed lazily, so the stream may be a generator.
    """
    if not eps1 > 0:
        raise ValueError(f"eps1 must be positive, got {eps1}")
    noisy_threshold = threshold - sample_laplace(2.0 / eps1, rng)
    for i, q in enumerate(queries):
        if q - sample_laplace(4.0 / eps1, rng) <= noisy_threshold:
            return i
    return None
