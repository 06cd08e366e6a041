"""Independent oracles and graph builders shared by the tests."""

import itertools

import numpy as np

from privimmune import Graph, MultiCoverInstance


def adjacency_sets(g):
    return [set(g.neighbors(v).tolist()) for v in range(g.n)]


def enumerate_walks4(g, removed=None):
    """Every length-4 walk as a tuple of 5 nodes, by brute-force extension."""
    alive = [True] * g.n if removed is None else [not r for r in removed]
    adj = adjacency_sets(g)
    walks = [(v,) for v in range(g.n) if alive[v]]
    for _ in range(4):
        walks = [w + (u,) for w in walks for u in sorted(adj[w[-1]]) if alive[u]]
    return walks


def walk_counts_by_convention(g, removed=None):
    """Per node: (occurrences counted with position multiplicity, distinct walks containing it)."""
    weighted = np.zeros(g.n, dtype=np.int64)
    distinct = np.zeros(g.n, dtype=np.int64)
    for w in enumerate_walks4(g, removed):
        for v in w:
            weighted[v] += 1
        for v in set(w):
            distinct[v] += 1
    return weighted, distinct


def random_graph(rng, n, p):
    edges = [(u, v) for u, v in itertools.combinations(range(n), 2) if rng.random() < p]
    return Graph.from_edges(n, edges)


def induced_max_degree(g, removed):
    keep = [v for v in range(g.n) if not removed[v]]
    adj = adjacency_sets(g)
    return max((len(adj[v] & set(keep)) for v in keep), default=0)


def star_plus_noise(rng, n, hubs, D, noise_edges):
    """Hubs with disjoint leaf sets (hub degree >= D + 2) and sparse leaf-leaf noise.

    Leaf degrees stay at most ``D``, so removing exactly the hubs is optimal
    and the optimum equals ``hubs``.
    """
    leaves = np.arange(hubs, n)
    groups = np.array_split(leaves, hubs)
    assert all(len(gp) >= D + 2 for gp in groups), "too few leaves per hub"
    edges = [(h, int(v)) for h, gp in enumerate(groups) for v in gp]
    deg = np.zeros(n, dtype=np.int64)
    deg[leaves] = 1
    seen = set()
    tries = 0
    while len(seen) < noise_edges and tries < 50 * noise_edges:
        tries += 1
        u, v = sorted(int(x) for x in rng.choice(leaves, 2, replace=False))
        if (u, v) in seen or deg[u] >= D or deg[v] >= D:
            continue
        seen.add((u, v))
        deg[u] += 1
        deg[v] += 1
    return Graph.from_edges(n, edges + sorted(seen))


def random_instance(rng, n, m, max_req=3, max_mult=3, p=0.5, unbounded=0.1, costs=False):
    sets = []
    for _ in range(m):
        s = {}
        for e in range(n):
            if rng.random() < p:
                s[e] = -1 if rng.random() < unbounded else int(rng.integers(1, max_mult + 1))
        sets.append(s)
    req = rng.integers(0, max_req + 1, size=n)
    c = rng.uniform(1.0, 5.0, size=m) if costs else None
    return MultiCoverInstance.from_sets(n, sets, req, c)


def recount_ok(inst, chosen):
    got = np.zeros(inst.universe_size, dtype=np.int64)
    for s in chosen:
        for e, mult in inst.sets[s].items():
            got[e] += inst.requirements[e] if mult == -1 else mult
    return bool(np.all(got >= inst.requirements))


def is_feasible(inst):
    return recount_ok(inst, range(inst.num_sets))


def neighbor_pair(rng, n, m, max_req=2):
    """Two toy instances that differ in one finite multiplicity or one requirement, by exactly 1."""
    while True:
        inst = random_instance(rng, n, m, max_req=max_req, max_mult=2, p=0.5, unbounded=0.15)
        sets = [dict(s) for s in inst.sets]
        req = inst.requirements.copy()
        if rng.random() < 0.5:
            s, e = int(rng.integers(m)), int(rng.integers(n))
            cur = sets[s].get(e, 0)
            if cur == -1:
                continue
            new = cur + 1 if cur == 0 or (cur == 1 and rng.random() < 0.5) else cur - 1
            if new:
                sets[s][e] = new
            else:
                del sets[s][e]
        else:
            e = int(rng.integers(n))
            req[e] += 1 if req[e] == 0 or (req[e] < max_req and rng.random() < 0.5) else -1
        other = MultiCoverInstance.from_sets(n, sets, req)
        if is_feasible(inst) and is_feasible(other):
            return inst, other
