"""Private max-degree reduction: implicit orderings and explicit node prefixes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dp import PrivacyBudget, make_rng, sparse_vector_below
from .graph import Graph, max_degree, remove_nodes
from .multicover import (
    UNBOUNDED,
    ImplicitSolution,
    MultiCoverInstance,
    brute_force_opt,
    decode_cover,
    exp_mech_epsilon,
    greedy_cover,
    private_permutation,
)
from .report import TWO_STAGE, PrivacyReport


def build_maxdeg_instance(g: Graph, D: int) -> MultiCoverInstance:
    """One set per node: unbounded copies of itself and one copy of each neighbor.

    Node ``v`` must be covered ``max(deg(v) - D, 0)`` times, i.e. lose that many
    neighbors or be removed itself.
    """
    if D < 0:
        raise ValueError("target degree must be non-negative")
    n = g.n
    deg = g.degrees()
    rows = np.concatenate([np.repeat(np.arange(n, dtype=np.int64), deg), np.arange(n, dtype=np.int64)])
    elems = np.concatenate([g.indices, np.arange(n, dtype=np.int64)])
    mults = np.concatenate([np.ones(g.indices.shape[0], dtype=np.int64), np.full(n, UNBOUNDED, dtype=np.int64)])
    order = np.lexsort((elems, rows))
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg + 1, out=ptr[1:])
    return MultiCoverInstance(n, ptr, elems[order], mults[order], np.maximum(deg - D, 0))


def maxdeg_parameters(budget: PrivacyBudget) -> dict:
    """Rescaled budget handed to the multi-cover mechanism, plus its per-pick parameter."""
    eps2 = budget.epsilon / 4.0
    log_delta2 = math.log(budget.delta) - math.log(4.0) - 3.0 * eps2
    return {
        "eps_prime": eps2,
        "delta_prime": math.exp(log_delta2),
        "log_delta_prime": log_delta2,
        "eps_exp_mech": exp_mech_epsilon(eps2, 0.0, log_delta2),
    }


@dataclass(frozen=True)
class MaxDegTask:
    graph: Graph
    target_degree: int
    budget: PrivacyBudget

    def __post_init__(self):
        if self.target_degree < 0:
            raise ValueError("target degree must be non-negative")


class ImplicitResult(NamedTuple):
    solution: ImplicitSolution
    nodes: list
    report: PrivacyReport


@dataclass(frozen=True)
class ExplicitSolution:
    nodes: list
    k: int
    residual_max_degree: int
    implicit: ImplicitSolution
    threshold: float
    report: PrivacyReport


def _permutation(inst, params, rng):
    return private_permutation(
        inst, params["eps_prime"], params["delta_prime"], rng, log_delta=params["log_delta_prime"]
    )


def _implicit_report(task: MaxDegTask, params: dict) -> PrivacyReport:
    return PrivacyReport(
        mechanism="privmaxdeg-implicit",
        guarantee={"epsilon": task.budget.epsilon, "delta": task.budget.delta},
        parameters={"D": task.target_degree, **params},
    )


def privmaxdeg_implicit(task: MaxDegTask, rng=None) -> ImplicitResult:
    """Private node ordering whose decoded prefix always brings the max degree to ``D``."""
    rng = make_rng(rng)
    inst = build_maxdeg_instance(task.graph, task.target_degree)
    params = maxdeg_parameters(task.budget)
    sol = _permutation(inst, params, rng)
    return ImplicitResult(sol, decode_cover(inst, sol), _implicit_report(task, params))


def privmaxdeg_explicit(task: MaxDegTask, rng=None, *, threshold_scale: float = 6.0) -> ExplicitSolution:
    """Cut the private ordering where the noisy max residual utility drops below the threshold.

    The query stream is ``L_0, L_1, ..., L_n`` where ``L_i`` is the largest
    residual utility among nodes not in the first ``i`` picks; stopping at query
    ``i`` removes ``i`` nodes. The threshold is ``threshold_scale * ln n / eps'``
    with ``eps' = epsilon / 4``. An unanswered stream removes every node.
    """
    if task.budget.epsilon1 <= 0:
        raise ValueError("explicit mode needs epsilon1 > 0 for its stopping rule")
    rng = make_rng(rng)
    g = task.graph
    inst = build_maxdeg_instance(g, task.target_degree)
    params = maxdeg_parameters(task.budget)
    sol = _permutation(inst, params, rng)
    n = g.n
    threshold = threshold_scale * math.log(max(n, 2)) / params["eps_prime"]
    stop = sparse_vector_below(sol.max_utility.tolist(), threshold, task.budget.epsilon1, rng)
    k = n if stop is None else stop
    nodes = sol.permutation[:k].tolist()
    eps1 = task.budget.epsilon1
    report = PrivacyReport(
        mechanism="privmaxdeg-explicit",
        guarantee={
            "epsilon": task.budget.epsilon,
            "delta": task.budget.delta,
            "stop_rule_epsilon": 4.0 * eps1,
        },
        parameters={
            "D": task.target_degree,
            **params,
            "epsilon1": eps1,
            "threshold": threshold,
            "threshold_scale": threshold_scale,
            "threshold_noise_scale": 2.0 / eps1,
            "query_noise_scale": 4.0 / eps1,
        },
        caveats=(TWO_STAGE,),
    )
    return ExplicitSolution(
        nodes=nodes,
        k=k,
        residual_max_degree=max_degree(g, remove_nodes(g, nodes)),
        implicit=sol,
        threshold=threshold,
        report=report,
    )


def maxdeg_opt(g: Graph, D: int, max_nodes: int = 20) -> int:
    """Fewest node removals bringing the max degree to ``D`` (exhaustive search)."""
    opt, _ = brute_force_opt(build_maxdeg_instance(g, D), max_sets=max_nodes)
    return int(opt)


def greedy_maxdeg(g: Graph, D: int) -> list:
    """Non-private greedy baseline on the same multi-cover instance."""
    return greedy_cover(build_maxdeg_instance(g, D))


def residual_violation(g: Graph, nodes, D: int) -> int:
    """How far the residual max degree exceeds ``D`` (0 if it does not)."""
    return max(max_degree(g, remove_nodes(g, nodes)) - D, 0)


__all__ = [
    "ExplicitSolution",
    "ImplicitResult",
    "MaxDegTask",
    "build_maxdeg_instance",
    "greedy_maxdeg",
    "maxdeg_opt",
    "maxdeg_parameters",
    "privmaxdeg_explicit",
    "privmaxdeg_implicit",
    "residual_violation",
]
