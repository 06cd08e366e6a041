"""Multi-set multi-cover: instances, the private permutation mechanisms, decoding, baselines.

An instance has elements ``0..n-1`` with requirements ``r_e`` and sets that
hold ``m(S, e)`` copies of element ``e``. A multiplicity may be
:data:`UNBOUNDED`, which satisfies any requirement in one step. Sets are
stored in CSR form (``set_ptr``/``set_elem``/``set_mult``) together with the
element-to-set inverse used for incremental utility updates.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import _kernels
from .dp import make_rng

UNBOUNDED = -1


class InfeasibleError(ValueError):
    """Some element cannot reach its requirement even using every set."""

    def __init__(self, element: int, available: int, required: int):
        super().__init__(f"element {element} needs {required} copies but only {available} exist")
        self.element = element


class MultiCoverInstance:
    __slots__ = (
        "universe_size",
        "set_ptr",
        "set_elem",
        "set_mult",
        "requirements",
        "costs",
        "elem_ptr",
        "elem_set",
        "elem_mult",
    )

    def __init__(self, universe_size, set_ptr, set_elem, set_mult, requirements, costs=None):
        n = int(universe_size)
        set_ptr = np.ascontiguousarray(set_ptr, dtype=np.int64)
        set_elem = np.ascontiguousarray(set_elem, dtype=np.int64)
        set_mult = np.ascontiguousarray(set_mult, dtype=np.int64)
        req = np.ascontiguousarray(requirements, dtype=np.int64)
        if req.shape != (n,):
            raise ValueError(f"expected {n} requirements, got {req.shape}")
        if np.any(req < 0):
            raise ValueError("requirements must be non-negative")
        if set_ptr[0] != 0 or set_ptr[-1] != set_elem.shape[0] or set_elem.shape != set_mult.shape:
            raise ValueError("malformed set arrays")
        if set_elem.size and (set_elem.min() < 0 or set_elem.max() >= n):
            raise ValueError(f"set element outside universe [0, {n})")
        if np.any((set_mult <= 0) & (set_mult != UNBOUNDED)):
            raise ValueError("multiplicities must be positive or UNBOUNDED")
        m = set_ptr.shape[0] - 1
        if costs is not None:
            costs = np.ascontiguousarray(costs, dtype=np.float64)
            if costs.shape != (m,) or not np.all(costs > 0) or not np.all(np.isfinite(costs)):
                raise ValueError("costs must be one positive finite value per set")
        # element -> (set, multiplicity) inverse, ordered by set index
        rows = np.repeat(np.arange(m, dtype=np.int64), np.diff(set_ptr))
        order = np.lexsort((rows, set_elem))
        elem_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(set_elem, minlength=n), out=elem_ptr[1:])
        for a in (set_ptr, set_elem, set_mult, req):
            a.setflags(write=False)
        self.universe_size = n
        self.set_ptr = set_ptr
        self.set_elem = set_elem
        self.set_mult = set_mult
        self.requirements = req
        self.costs = costs
        self.elem_ptr = elem_ptr
        self.elem_set = np.ascontiguousarray(rows[order])
        self.elem_mult = np.ascontiguousarray(set_mult[order])

    @classmethod
    def from_sets(
        cls,
        universe_size: int,
        sets: Sequence[Mapping[int, int]],
        requirements: Sequence[int],
        costs: Optional[Sequence[float]] = None,
    ) -> "MultiCoverInstance":
        ptr = [0]
        elems, mults = [], []
        for s in sets:
            for e in sorted(s):
                elems.append(e)
                mults.append(s[e])
            ptr.append(len(elems))
        return cls(universe_size, ptr, elems, mults, requirements, costs)

    # -- derived statistics -------------------------------------------------

    @property
    def num_sets(self) -> int:
        return self.set_ptr.shape[0] - 1

    @property
    def weighted(self) -> bool:
        return self.costs is not None

    @property
    def sets(self) -> list:
        return [dict(zip(e.tolist(), m.tolist())) for e, m in (self.set_items(i) for i in range(self.num_sets))]

    def set_items(self, i: int) -> Tuple[np.ndarray, np.ndarray]:
        lo, hi = self.set_ptr[i], self.set_ptr[i + 1]
        return self.set_elem[lo:hi], self.set_mult[lo:hi]

    @property
    def max_set_size(self) -> int:
        return int(np.diff(self.set_ptr).max(initial=0))

    @property
    def max_frequency(self) -> int:
        return int(np.diff(self.elem_ptr).max(initial=0))

    @property
    def total_requirement(self) -> int:
        return int(self.requirements.sum())

    @property
    def max_cost(self) -> float:
        return float(self.costs.max()) if self.weighted and self.num_sets else 1.0

    def coverage_matrix(self) -> np.ndarray:
        """Dense ``(num_sets, n)`` matrix of multiplicities capped at each requirement."""
        cov = np.zeros((self.num_sets, self.universe_size), dtype=np.int64)
        rows = np.repeat(np.arange(self.num_sets), np.diff(self.set_ptr))
        r = self.requirements[self.set_elem]
        cov[rows, self.set_elem] = np.where(self.set_mult == UNBOUNDED, r, np.minimum(self.set_mult, r))
        return cov

    def check_feasible(self) -> None:
        """Raise :class:`InfeasibleError` naming the first element that cannot be covered."""
        r = self.requirements[self.set_elem]
        capped = np.where(self.set_mult == UNBOUNDED, r, np.minimum(self.set_mult, r))
        avail = np.bincount(self.set_elem, weights=capped, minlength=self.universe_size)
        short = np.flatnonzero(avail < self.requirements)
        if short.size:
            e = int(short[0])
            raise InfeasibleError(e, int(avail[e]), int(self.requirements[e]))

    # -- equality and text serialization -------------------------------------

    def __eq__(self, other):
        if not isinstance(other, MultiCoverInstance):
            return NotImplemented
        same_costs = (self.costs is None and other.costs is None) or (
            self.costs is not None and other.costs is not None and np.array_equal(self.costs, other.costs)
        )
        return (
            self.universe_size == other.universe_size
            and np.array_equal(self.set_ptr, other.set_ptr)
            and np.array_equal(self.set_elem, other.set_elem)
            and np.array_equal(self.set_mult, other.set_mult)
            and np.array_equal(self.requirements, other.requirements)
            and same_costs
        )

    __hash__ = None

    def __repr__(self):
        kind = "weighted " if self.weighted else ""
        return f"<{kind}MultiCoverInstance n={self.universe_size} m={self.num_sets} M={self.total_requirement}>"

    def dumps(self) -> str:
        """Line format: ``n m``, then ``e r_e`` per element, then ``i [cost] e:mult,...`` per set."""
        lines = [f"{self.universe_size} {self.num_sets}"]
        lines += [f"{e} {r}" for e, r in enumerate(self.requirements.tolist())]
        for i in range(self.num_sets):
            elems, mults = self.set_items(i)
            parts = [str(i)]
            if self.weighted:
                parts.append(repr(float(self.costs[i])))
            if elems.size:
                parts.append(",".join(f"{e}:{'*' if m == UNBOUNDED else m}" for e, m in zip(elems.tolist(), mults.tolist())))
            lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "MultiCoverInstance":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        try:
            n, m = (int(t) for t in lines[0].split())
        except (IndexError, ValueError):
            raise ValueError("line 1: expected header 'n m'") from None
        if len(lines) != 1 + n + m:
            raise ValueError(f"expected {1 + n + m} lines, got {len(lines)}")
        req = np.zeros(n, dtype=np.int64)
        for ln_no, line in enumerate(lines[1 : 1 + n], start=2):
            e, r = (int(t) for t in line.split())
            if e != ln_no - 2:
                raise ValueError(f"line {ln_no}: requirements must be listed in element order")
            req[e] = r
        sets, costs = [], []
        for ln_no, line in enumerate(lines[1 + n :], start=2 + n):
            tokens = line.split()
            if int(tokens[0]) != ln_no - 2 - n:
                raise ValueError(f"line {ln_no}: sets must be listed in index order")
            rest = tokens[1:]
            if rest and ":" not in rest[0]:
                costs.append(float(rest[0]))
                rest = rest[1:]
            s = {}
            if rest:
                for item in rest[0].split(","):
                    e, mult = item.split(":")
                    s[int(e)] = UNBOUNDED if mult == "*" else int(mult)
            sets.append(s)
        if costs and len(costs) != m:
            raise ValueError("either every set or no set carries a cost")
        return cls.from_sets(n, sets, req, costs or None)


@dataclass(frozen=True)
class ImplicitSolution:
    """A full ordering of the sets, from which a cover is decoded deterministically.

    ``trace[i]`` is the residual utility of ``permutation[i]`` when it was
    picked; ``max_utility[i]`` is the largest residual utility among sets not
    yet picked after ``i`` picks (length ``m + 1``).
    """

    permutation: np.ndarray
    trace: np.ndarray
    max_utility: np.ndarray
    eps_prime: float
    halvings: int = 0
    parameters: dict = field(default_factory=dict, compare=False)


def exp_mech_epsilon(epsilon: float, delta: float, log_delta: Optional[float] = None) -> float:
    """Per-pick exponential-mechanism parameter ``epsilon / (2 ln(e / delta))``.

    ``log_delta`` replaces ``delta`` when the latter underflows.
    """
    if log_delta is None:
        log_delta = math.log(delta)
    return epsilon / (2.0 * (1.0 - log_delta))


def utility(inst: MultiCoverInstance, set_index: int, residual: Sequence[int]) -> int:
    """``sum_e min(m(S, e), r_e)`` under the given residual requirements."""
    elems, mults = inst.set_items(set_index)
    r = np.asarray(residual, dtype=np.int64)[elems]
    return int(np.where(mults == UNBOUNDED, r, np.minimum(mults, r)).sum())


def utilities(inst: MultiCoverInstance, residual: Sequence[int]) -> np.ndarray:
    r = np.asarray(residual, dtype=np.int64)[inst.set_elem]
    contrib = np.where(inst.set_mult == UNBOUNDED, r, np.minimum(inst.set_mult, r))
    rows = np.repeat(np.arange(inst.num_sets), np.diff(inst.set_ptr))
    return np.bincount(rows, weights=contrib, minlength=inst.num_sets).astype(np.int64)


def _apply(inst: MultiCoverInstance, residual: np.ndarray, set_index: int) -> None:
    elems, mults = inst.set_items(set_index)
    residual[elems] = np.where(mults == UNBOUNDED, 0, np.maximum(residual[elems] - mults, 0))


def private_permutation(
    inst: MultiCoverInstance,
    epsilon: float,
    delta: float,
    rng=None,
    *,
    recompute: bool = False,
    log_delta: Optional[float] = None,
) -> ImplicitSolution:
    """Order all sets by repeated exponential-mechanism draws on residual utility.

    Each pick has probability proportional to ``exp(eps' * A(S))`` with
    ``eps' = epsilon / (2 ln(e/delta))``. Once every requirement is met all
    utilities are zero, so the remaining sets are appended in uniformly random
    order. ``recompute=True`` forces the vectorized path that recomputes all
    utilities from scratch at every pick (used to cross-check the incremental one).
    Front ends whose rescaled ``delta`` underflows pass ``log_delta`` instead.
    """
    if inst.weighted:
        raise ValueError("instance has costs; use weighted_private_permutation")
    if log_delta is None and not 0 < delta < 1:
        raise ValueError("need 0 < delta < 1")
    if not epsilon > 0 or (log_delta is not None and not log_delta < 0):
        raise ValueError("need epsilon > 0 and log_delta < 0")
    rng = make_rng(rng)
    eps_prime = exp_mech_epsilon(epsilon, delta, log_delta)
    m = inst.num_sets
    uniforms = rng.random(m)
    args = (
        inst.set_ptr,
        inst.set_elem,
        inst.set_mult,
        inst.elem_ptr,
        inst.elem_set,
        inst.elem_mult,
        inst.requirements,
        eps_prime,
        uniforms,
    )
    if recompute:
        prefix, trace, lmax = _kernels._cover_perm_np(*args)
    else:
        prefix, trace, lmax = _kernels.cover_permutation(*args)
    rest = np.setdiff1d(np.arange(m, dtype=np.int64), prefix, assume_unique=True)
    tail = rng.permutation(rest)
    pad = m - prefix.shape[0]
    return ImplicitSolution(
        permutation=np.concatenate([prefix, tail]),
        trace=np.concatenate([trace, np.zeros(pad, dtype=np.int64)]),
        max_utility=np.concatenate([lmax, np.zeros(pad, dtype=np.int64)]),
        eps_prime=eps_prime,
        parameters={"epsilon": epsilon, "delta": delta, "eps_prime": eps_prime},
    )


def decode_cover(inst: MultiCoverInstance, solution: Union[ImplicitSolution, Sequence[int]]) -> list:
    """Sets that raise some element's capped coverage, listed in permutation order.

    For each element, walk the permutation and keep every set that increases
    ``min(sum of multiplicities so far, r_e)``; the union over elements meets
    every requirement.
    """
    perm = np.asarray(getattr(solution, "permutation", solution), dtype=np.int64)
    m = inst.num_sets
    if perm.shape != (m,) or not np.array_equal(np.sort(perm), np.arange(m)):
        raise ValueError("permutation must order every set exactly once")
    inst.check_feasible()
    pos = np.empty(m, dtype=np.int64)
    pos[perm] = np.arange(m)
    elem = np.repeat(np.arange(inst.universe_size), np.diff(inst.elem_ptr))
    r = inst.requirements[elem]
    mult = np.where(inst.elem_mult == UNBOUNDED, r, np.minimum(inst.elem_mult, r))
    keep = r > 0
    elem, sets, r, mult = elem[keep], inst.elem_set[keep], r[keep], mult[keep]
    if elem.size == 0:
        return []
    order = np.lexsort((pos[sets], elem))
    elem, sets, r, mult = elem[order], sets[order], r[order], mult[order]
    cum = np.cumsum(mult)
    starts = np.flatnonzero(np.r_[True, elem[1:] != elem[:-1]])
    group_base = np.repeat(cum[starts] - mult[starts], np.diff(np.r_[starts, elem.size]))
    before = cum - mult - group_base
    chosen = np.unique(sets[before < r])
    return chosen[np.argsort(pos[chosen])].tolist()


def covers(inst: MultiCoverInstance, chosen: Sequence[int]) -> bool:
    """Recount check: do the chosen sets meet every requirement?"""
    got = np.zeros(inst.universe_size, dtype=np.int64)
    for s in chosen:
        elems, mults = inst.set_items(int(s))
        got[elems] += np.where(mults == UNBOUNDED, inst.requirements[elems], mults)
    return bool(np.all(got >= inst.requirements))


# -- weighted variant ----------------------------------------------------------


def halving_penalty(num_sets: int, total_req: int, max_cost: float, eps_prime: float, constant: float = 3.0) -> float:
    """Utility penalty ``T`` of the dummy halving set."""
    log_m = math.log(max(num_sets, 2))
    loglog = math.log(math.log(max(total_req * max_cost, math.e)))
    return constant * (log_m + loglog) / eps_prime


def weighted_step_distribution(
    set_utilities: np.ndarray,
    costs: np.ndarray,
    available: np.ndarray,
    theta: float,
    eps_prime: float,
    penalty: float,
) -> np.ndarray:
    """Selection probabilities for one weighted step; the last entry is the halving dummy."""
    u = np.where(available, set_utilities - costs / theta, -np.inf)
    u = np.append(u, -penalty)
    w = np.exp(eps_prime * (u - u.max()))
    return w / w.sum()


def weighted_private_permutation(
    inst: MultiCoverInstance,
    epsilon: float,
    delta: float,
    rng=None,
    *,
    halving_constant: float = 3.0,
) -> ImplicitSolution:
    """Cost-aware private ordering with a never-removed dummy set that halves ``theta``.

    Costs are rescaled so the cheapest set costs 1. Set utility is
    ``A(S) - C(S)/theta``; the dummy has utility ``-T``. ``theta`` starts at the
    total requirement and the loop runs while ``theta >= 1/W``; unpicked sets
    follow in uniformly random order.
    """
    if not inst.weighted:
        raise ValueError("instance has no costs")
    rng = make_rng(rng)
    eps_prime = exp_mech_epsilon(epsilon, delta)
    costs = inst.costs / inst.costs.min()
    max_cost = float(costs.max())
    m = inst.num_sets
    M = inst.total_requirement
    penalty = halving_penalty(m, M, max_cost, eps_prime, halving_constant)
    residual = inst.requirements.copy()
    available = np.ones(m, dtype=bool)
    theta = float(M)
    order, trace = [], []
    halvings = 0
    while theta >= 1.0 / max_cost:
        util = utilities(inst, residual)
        probs = weighted_step_distribution(util, costs, available, theta, eps_prime, penalty)
        cum = np.cumsum(probs)
        pick = min(int(np.searchsorted(cum, rng.random() * cum[-1], side="right")), m)
        if pick == m:
            theta /= 2.0
            halvings += 1
            continue
        order.append(pick)
        trace.append(int(util[pick]))
        available[pick] = False
        _apply(inst, residual, pick)
    tail = rng.permutation(np.flatnonzero(available))
    perm = np.concatenate([np.asarray(order, dtype=np.int64), tail])
    trace = np.concatenate([np.asarray(trace, dtype=np.int64), np.zeros(tail.size, dtype=np.int64)])
    return ImplicitSolution(
        permutation=perm,
        trace=trace,
        max_utility=np.zeros(m + 1, dtype=np.int64),
        eps_prime=eps_prime,
        halvings=halvings,
        parameters={"epsilon": epsilon, "delta": delta, "eps_prime": eps_prime, "T": penalty},
    )


# -- non-private baselines and oracles --------------------------------------------


def greedy_cover(inst: MultiCoverInstance) -> list:
    """Classical greedy: best residual utility (per unit cost if weighted), ties to the lowest index."""
    inst.check_feasible()
    residual = inst.requirements.copy()
    available = np.ones(inst.num_sets, dtype=bool)
    chosen = []
    while residual.any():
        util = utilities(inst, residual).astype(np.float64)
        score = util / inst.costs if inst.weighted else util
        score = np.where(available & (util > 0), score, -np.inf)
        s = int(np.argmax(score))
        chosen.append(s)
        available[s] = False
        _apply(inst, residual, s)
    return chosen


def brute_force_opt(inst: MultiCoverInstance, max_sets: int = 20) -> Tuple[float, list]:
    """Exact minimum count (or cost) cover by subset enumeration, with one witness."""
    m = inst.num_sets
    if m > max_sets:
        raise ValueError(f"{m} sets is too many for enumeration (limit {max_sets})")
    inst.check_feasible()
    cov = inst.coverage_matrix()
    req = inst.requirements
    if not inst.weighted:
        for k in range(m + 1):
            for combo in itertools.combinations(range(m), k):
                if np.all(cov[list(combo)].sum(axis=0) >= req):
                    return k, list(combo)
    best_cost, best = math.inf, None
    bits = np.arange(m, dtype=np.int64)
    chunk = 1 << 14
    for start in range(0, 1 << m, chunk):
        masks = np.arange(start, min(start + chunk, 1 << m), dtype=np.int64)
        pick = ((masks[:, None] >> bits) & 1).astype(np.int64)
        ok = np.all(pick @ cov >= req, axis=1)
        if not ok.any():
            continue
        cost = pick[ok] @ inst.costs
        i = int(np.argmin(cost))
        if cost[i] < best_cost:
            best_cost, best = float(cost[i]), np.flatnonzero(pick[ok][i]).tolist()
    return best_cost, best


def exact_permutation_probability(inst: MultiCoverInstance, permutation: Sequence[int], eps_prime: float) -> float:
    """Probability that the unweighted mechanism emits exactly ``permutation``."""
    perm = [int(s) for s in permutation]
    if sorted(perm) != list(range(inst.num_sets)):
        raise ValueError("permutation must order every set exactly once")
    residual = inst.requirements.copy()
    remaining = list(range(inst.num_sets))
    log_p = 0.0
    for s in perm:
        util = utilities(inst, residual)[remaining] * eps_prime
        top = util.max()
        log_p += eps_prime * utility(inst, s, residual) - (top + math.log(np.exp(util - top).sum()))
        remaining.remove(s)
        _apply(inst, residual, s)
    return math.exp(log_p)
