"""Private spectral-radius reduction by hitting 4-walks or by covering neighbor-degree sums."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import _kernels
from .dp import PrivacyBudget, make_rng, sparse_vector_below
from .graph import (
    Graph,
    count_walks4,
    max_degree,
    neighbor_degree_sums,
    remove_nodes,
    walk_hitting_utilities,
)
from .multicover import (
    UNBOUNDED,
    ImplicitSolution,
    MultiCoverInstance,
    decode_cover,
    exp_mech_epsilon,
    private_permutation,
)
from .report import DATA_DEPENDENT_MAX_DEGREE, TWO_STAGE, PrivacyReport


def _exp(x: float) -> float:
    # accounted deltas blow up quickly in the max degree; report inf rather than fail
    return math.exp(x) if x < 709.0 else math.inf


@dataclass(frozen=True)
class SpectralWalkTask:
    """``T`` defaults to the square root of the max degree and ``theta`` to ``4 n T^4``."""

    graph: Graph
    budget: PrivacyBudget
    T: Optional[float] = None
    theta: Optional[float] = None

    def __post_init__(self):
        if self.T is not None and not self.T > 0:
            raise ValueError("T must be positive")

    @property
    def resolved_T(self) -> float:
        if self.T is not None:
            return float(self.T)
        return math.sqrt(max_degree(self.graph))

    @property
    def resolved_theta(self) -> float:
        if self.theta is not None:
            return float(self.theta)
        return 4.0 * self.graph.n * self.resolved_T**4


@dataclass(frozen=True)
class WalkSolution:
    nodes: list
    k: int
    permutation: np.ndarray
    trace: np.ndarray
    walks: np.ndarray
    report: PrivacyReport

    @property
    def residual_walks4(self) -> int:
        return int(self.walks[self.k])


def privminsr_walks(task: SpectralWalkTask, rng=None) -> WalkSolution:
    """Private node ordering by 4-walk hitting utility, cut by a sparse-vector stop.

    ``walks[i]`` is the number of 4-walks left after removing the first ``i``
    nodes. The stop rule scans ``walks[0..n]`` against ``theta``; stopping at
    query ``i`` removes ``i`` nodes.
    """
    b = task.budget
    if b.epsilon1 <= 0:
        raise ValueError("the walk-hitting stop rule needs epsilon1 > 0")
    rng = make_rng(rng)
    g = task.graph
    eps_prime = exp_mech_epsilon(b.epsilon, b.delta)
    uniforms = rng.random(g.n)
    perm, trace, walks = _kernels.walk_permutation(g.indptr, g.indices, eps_prime, uniforms)
    theta = task.resolved_theta
    stop = sparse_vector_below(walks.tolist(), theta, b.epsilon1, rng)
    k = g.n if stop is None else stop
    dmax = max_degree(g)
    d2 = float(dmax * dmax)
    report = PrivacyReport(
        mechanism="privminsr-walks",
        guarantee={
            "epsilon": d2 * (b.epsilon + b.epsilon1),
            "delta": d2 * b.delta * _exp((d2 - 1.0) * b.epsilon),
        },
        parameters={
            "max_degree": dmax,
            "eps_prime": eps_prime,
            "epsilon1": b.epsilon1,
            "T": task.resolved_T,
            "theta": theta,
            "threshold_noise_scale": 2.0 / b.epsilon1,
            "query_noise_scale": 4.0 / b.epsilon1,
        },
        caveats=(DATA_DEPENDENT_MAX_DEGREE, TWO_STAGE),
    )
    return WalkSolution(perm[:k].tolist(), k, perm, trace, walks, report)


def greedy_walk_hitting(g: Graph, target: float) -> list:
    """Non-private baseline: remove the top walk-hitting node until at most ``target`` 4-walks remain."""
    removed = np.zeros(g.n, dtype=bool)
    chosen = []
    while count_walks4(g, removed) > target:
        util = np.where(removed, -1, walk_hitting_utilities(g, removed))
        v = int(np.argmax(util))
        chosen.append(v)
        removed[v] = True
    return chosen


def build_spectral_instance(g: Graph, D: int) -> MultiCoverInstance:
    """Sets whose cover pushes every neighbor-degree sum to at most ``D``.

    ``S_v`` holds unbounded copies of ``v`` and ``deg(v)`` copies of each
    neighbor: removing ``v`` lowers each neighbor's sum by at least ``deg(v)``
    counted in the original graph, however the removals interleave.
    ``r_v = max(sum of neighbor degrees - D, 0)``.
    """
    if D < 0:
        raise ValueError("target must be non-negative")
    n = g.n
    deg = g.degrees()
    rows = np.concatenate([np.repeat(np.arange(n, dtype=np.int64), deg), np.arange(n, dtype=np.int64)])
    elems = np.concatenate([g.indices, np.arange(n, dtype=np.int64)])
    mults = np.concatenate([np.repeat(deg, deg), np.full(n, UNBOUNDED, dtype=np.int64)])
    order = np.lexsort((elems, rows))
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg + 1, out=ptr[1:])
    req = np.maximum(neighbor_degree_sums(g) - D, 0)
    return MultiCoverInstance(n, ptr, elems[order], mults[order], req)


def spectral_parameters(budget: PrivacyBudget, dmax: int) -> dict:
    scale = 4.0 * max(dmax, 1)
    eps2 = budget.epsilon / scale
    log_delta2 = math.log(budget.delta) - math.log(scale) - (scale - 1.0) * eps2
    return {
        "max_degree": dmax,
        "eps_prime": eps2,
        "delta_prime": math.exp(log_delta2),
        "log_delta_prime": log_delta2,
        "eps_exp_mech": exp_mech_epsilon(eps2, 0.0, log_delta2),
    }


@dataclass(frozen=True)
class SpectralCoverTask:
    graph: Graph
    target: int
    budget: PrivacyBudget

    def __post_init__(self):
        if self.target < 0:
            raise ValueError("target must be non-negative")


class SpectralCoverResult(NamedTuple):
    solution: ImplicitSolution
    nodes: list
    report: PrivacyReport


def privminsr_multiset(task: SpectralCoverTask, rng=None) -> SpectralCoverResult:
    """Implicit ordering whose decoded removal set certifies ``rho <= sqrt(D)``."""
    rng = make_rng(rng)
    g = task.graph
    inst = build_spectral_instance(g, task.target)
    params = spectral_parameters(task.budget, max_degree(g))
    sol = private_permutation(
        inst, params["eps_prime"], params["delta_prime"], rng, log_delta=params["log_delta_prime"]
    )
    report = PrivacyReport(
        mechanism="privminsr-multiset",
        guarantee={"epsilon": task.budget.epsilon, "delta": task.budget.delta},
        parameters={"D": task.target, "sqrt_D": math.sqrt(task.target), **params},
        caveats=(DATA_DEPENDENT_MAX_DEGREE,),
    )
    return SpectralCoverResult(sol, decode_cover(inst, sol), report)


def residual_neighbor_degree_bound(g: Graph, nodes) -> int:
    """Largest neighbor-degree sum left after removing ``nodes`` (0 if nothing is left)."""
    removed = remove_nodes(g, nodes)
    s = neighbor_degree_sums(g, removed)
    return int(s[~removed].max(initial=0))
