"""Hot loops, in a numba flavour (``*_nb``) and a numpy/scipy flavour (``*_np``).

The public wrappers at the bottom dispatch on :func:`privimmune._accel.backend`.
Graphs enter as CSR arrays ``(indptr, indices)`` plus a boolean ``alive`` mask.
Both flavours consume the same pre-drawn uniforms, so for a given seed they
make the same random choices (up to floating-point summation order in the
multi-cover sampler, whose numba path uses a sum tree).
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from ._accel import backend, njit

# Sum-tree total below which sampling weights are re-referenced to the current max.
_RESCALE_BELOW = 1e-150
_TWO_M53 = 1.0 / 9007199254740992.0

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _csr_rows(indptr):
    return np.repeat(np.arange(indptr.shape[0] - 1, dtype=np.int64), np.diff(indptr))


def _adjacency(indptr, indices, dtype):
    n = indptr.shape[0] - 1
    data = np.ones(indices.shape[0], dtype=dtype)
    return sparse.csr_matrix((data, indices, indptr), shape=(n, n))


# --------------------------------------------------------------------------
# degrees and masked products


@njit
def _residual_degrees_nb(indptr, indices, alive):
    n = indptr.shape[0] - 1
    out = np.zeros(n, dtype=np.int64)
    for v in range(n):
        if not alive[v]:
            continue
        c = 0
        for p in range(indptr[v], indptr[v + 1]):
            if alive[indices[p]]:
                c += 1
        out[v] = c
    return out


def _residual_degrees_np(indptr, indices, alive):
    n = indptr.shape[0] - 1
    rows = _csr_rows(indptr)
    keep = alive[rows] & alive[indices]
    return np.bincount(rows[keep], minlength=n).astype(np.int64)


@njit
def _spmv_nb(indptr, indices, alive, x):
    n = indptr.shape[0] - 1
    y = np.zeros_like(x)
    for v in range(n):
        if not alive[v]:
            continue
        for p in range(indptr[v], indptr[v + 1]):
            u = indices[p]
            if alive[u]:
                y[v] += x[u]
    return y


def _spmv_np(indptr, indices, alive, x):
    mask = alive.astype(x.dtype)
    adj = _adjacency(indptr, indices, x.dtype)
    return mask * (adj @ (mask * x))


@njit
def _walk_vectors_nb(indptr, indices, alive):
    n = indptr.shape[0] - 1
    w = np.zeros((5, n), dtype=np.int64)
    for v in range(n):
        if alive[v]:
            w[0, v] = 1
    for k in range(1, 5):
        for v in range(n):
            if not alive[v]:
                continue
            s = 0
            for p in range(indptr[v], indptr[v + 1]):
                u = indices[p]
                if alive[u]:
                    s += w[k - 1, u]
            w[k, v] = s
    return w


def _walk_vectors_np(indptr, indices, alive):
    n = indptr.shape[0] - 1
    adj = _adjacency(indptr, indices, np.int64)
    mask = alive.astype(np.int64)
    w = np.zeros((5, n), dtype=np.int64)
    w[0] = mask
    for k in range(1, 5):
        w[k] = mask * (adj @ w[k - 1])
    return w


# --------------------------------------------------------------------------
# private multi-cover permutation (exponential mechanism, sampled without replacement)


@njit
def _tree_put(wt, mx, size, leaf, weight, util):
    node = size + leaf
    wt[node] = weight
    mx[node] = util
    node //= 2
    while node >= 1:
        a = 2 * node
        wt[node] = wt[a] + wt[a + 1]
        mx[node] = mx[a] if mx[a] >= mx[a + 1] else mx[a + 1]
        node //= 2


@njit
def _tree_rebuild(wt, mx, size):
    for node in range(size - 1, 0, -1):
        a = 2 * node
        wt[node] = wt[a] + wt[a + 1]
        mx[node] = mx[a] if mx[a] >= mx[a + 1] else mx[a + 1]


@njit
def _capped(mult, r):
    # UNBOUNDED is stored as a negative multiplicity and always covers the residual.
    if mult < 0 or mult > r:
        return r
    return mult


@njit
def _cover_perm_nb(set_ptr, set_elem, set_mult, elem_ptr, elem_set, elem_mult, req, eps, uniforms):
    m = set_ptr.shape[0] - 1
    r = req.copy()
    rsum = 0
    for e in range(r.shape[0]):
        rsum += r[e]
    util = np.zeros(m, dtype=np.int64)
    for s in range(m):
        a = 0
        for p in range(set_ptr[s], set_ptr[s + 1]):
            a += _capped(set_mult[p], r[set_elem[p]])
        util[s] = a

    size = 1
    while size < m:
        size *= 2
    wt = np.zeros(2 * size)
    mx = np.full(2 * size, -1, dtype=np.int64)
    ref = 0
    for s in range(m):
        if util[s] > ref:
            ref = util[s]
    for s in range(m):
        wt[size + s] = np.exp(eps * (util[s] - ref))
        mx[size + s] = util[s]
    _tree_rebuild(wt, mx, size)

    perm = np.empty(m, dtype=np.int64)
    trace = np.empty(m, dtype=np.int64)
    lmax = np.zeros(m + 1, dtype=np.int64)
    lmax[0] = mx[1] if mx[1] > 0 else 0
    steps = 0
    while steps < m and rsum > 0:
        if wt[1] < _RESCALE_BELOW:
            ref = mx[1]
            for s in range(m):
                if mx[size + s] >= 0:
                    wt[size + s] = np.exp(eps * (util[s] - ref))
            _tree_rebuild(wt, mx, size)
        target = uniforms[steps] * wt[1]
        node = 1
        while node < size:
            a = 2 * node
            if target < wt[a]:
                node = a
            else:
                target -= wt[a]
                node = a + 1
        s = node - size
        if s >= m or mx[node] < 0 or wt[node] == 0.0:
            # target landed past the last positive leaf through rounding
            s = m - 1
            while mx[size + s] < 0 or wt[size + s] == 0.0:
                s -= 1
        perm[steps] = s
        trace[steps] = util[s]
        _tree_put(wt, mx, size, s, 0.0, -1)
        for p in range(set_ptr[s], set_ptr[s + 1]):
            e = set_elem[p]
            old = r[e]
            if old == 0:
                continue
            mu = set_mult[p]
            new = 0
            if mu > 0 and old > mu:
                new = old - mu
            r[e] = new
            rsum -= old - new
            for q in range(elem_ptr[e], elem_ptr[e + 1]):
                t = elem_set[q]
                if mx[size + t] < 0:
                    continue
                drop = _capped(elem_mult[q], old) - _capped(elem_mult[q], new)
                if drop != 0:
                    util[t] -= drop
                    _tree_put(wt, mx, size, t, np.exp(eps * (util[t] - ref)), util[t])
        steps += 1
        lmax[steps] = mx[1] if mx[1] > 0 else 0
    return perm[:steps], trace[:steps], lmax[: steps + 1]


def _cover_perm_np(set_ptr, set_elem, set_mult, elem_ptr, elem_set, elem_mult, req, eps, uniforms):
    m = set_ptr.shape[0] - 1
    rows = _csr_rows(set_ptr)
    unbounded = set_mult < 0
    r = req.astype(np.int64).copy()
    alive = np.ones(m, dtype=bool)

    def utilities():
        re = r[set_elem]
        contrib = np.where(unbounded | (set_mult > re), re, set_mult)
        return np.rint(np.bincount(rows, weights=contrib, minlength=m)).astype(np.int64)

    perm, trace, lmax = [], [], []
    ref = None
    steps = 0
    while True:
        util = utilities()
        live = np.where(alive, util, -1)
        lmax.append(max(int(live.max(initial=-1)), 0))
        if steps >= m or r.sum() == 0:
            break
        if ref is None:
            ref = int(live.max())
        weights = np.where(alive, np.exp(eps * (util - ref)), 0.0)
        cum = np.cumsum(weights)
        if cum[-1] < _RESCALE_BELOW:
            ref = int(live.max())
            weights = np.where(alive, np.exp(eps * (util - ref)), 0.0)
            cum = np.cumsum(weights)
        s = int(np.searchsorted(cum, uniforms[steps] * cum[-1], side="right"))
        if s >= m or weights[s] == 0.0:
            s = int(np.flatnonzero(weights > 0.0)[-1])
        perm.append(s)
        trace.append(int(util[s]))
        alive[s] = False
        lo, hi = set_ptr[s], set_ptr[s + 1]
        elems = set_elem[lo:hi]
        mults = set_mult[lo:hi]
        r[elems] = np.where(mults < 0, 0, np.maximum(r[elems] - mults, 0))
        steps += 1
    return (
        np.asarray(perm, dtype=np.int64),
        np.asarray(trace, dtype=np.int64),
        np.asarray(lmax, dtype=np.int64),
    )


# --------------------------------------------------------------------------
# walk-hitting permutation: exponential mechanism over 4-walk utilities


@njit
def _sample_linear_nb(util, alive, eps, u):
    n = util.shape[0]
    best = -1
    for v in range(n):
        if alive[v] and (best < 0 or util[v] > util[best]):
            best = v
    ref = util[best]
    total = 0.0
    for v in range(n):
        if alive[v]:
            total += np.exp(eps * (util[v] - ref))
    target = u * total
    acc = 0.0
    last = -1
    for v in range(n):
        if alive[v]:
            w = np.exp(eps * (util[v] - ref))
            acc += w
            if w > 0.0:
                last = v
            if acc > target:
                return v
    return last


@njit
def _walk_perm_nb(indptr, indices, eps, uniforms):
    n = indptr.shape[0] - 1
    alive = np.ones(n, dtype=np.bool_)
    w = _walk_vectors_nb(indptr, indices, alive)
    util = np.empty(n, dtype=np.int64)
    for v in range(n):
        util[v] = 2 * w[4, v] + 2 * w[1, v] * w[3, v] + w[2, v] * w[2, v]
    total = 0
    for v in range(n):
        total += w[2, v] * w[2, v]
    perm = np.empty(n, dtype=np.int64)
    trace = np.empty(n, dtype=np.int64)
    walks = np.zeros(n + 1, dtype=np.int64)
    walks[0] = total
    dist = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    for step in range(n):
        v = _sample_linear_nb(util, alive, eps, uniforms[step])
        perm[step] = v
        trace[step] = util[v]
        # layers of the ball of radius 4 around v, measured before removal
        dist[v] = 0
        queue[0] = v
        head = 0
        tail = 1
        while head < tail:
            x = queue[head]
            head += 1
            if dist[x] == 4:
                continue
            for p in range(indptr[x], indptr[x + 1]):
                y = indices[p]
                if alive[y] and dist[y] < 0:
                    dist[y] = dist[x] + 1
                    queue[tail] = y
                    tail += 1
        alive[v] = False
        total -= w[2, v] * w[2, v]
        for k in range(5):
            w[k, v] = 0
        util[v] = 0
        for k in range(1, 5):
            for i in range(1, tail):
                x = queue[i]
                if dist[x] > k:
                    break
                s = 0
                for p in range(indptr[x], indptr[x + 1]):
                    y = indices[p]
                    if alive[y]:
                        s += w[k - 1, y]
                if k == 2:
                    total += s * s - w[2, x] * w[2, x]
                w[k, x] = s
        for i in range(1, tail):
            x = queue[i]
            util[x] = 2 * w[4, x] + 2 * w[1, x] * w[3, x] + w[2, x] * w[2, x]
        for i in range(tail):
            dist[queue[i]] = -1
        walks[step + 1] = total
    return perm, trace, walks


def _walk_perm_np(indptr, indices, eps, uniforms):
    n = indptr.shape[0] - 1
    alive = np.ones(n, dtype=bool)
    perm = np.empty(n, dtype=np.int64)
    trace = np.empty(n, dtype=np.int64)
    walks = np.zeros(n + 1, dtype=np.int64)
    for step in range(n + 1):
        w = _walk_vectors_np(indptr, indices, alive)
        walks[step] = int((w[2] * w[2]).sum())
        if step == n:
            break
        util = 2 * w[4] + 2 * w[1] * w[3] + w[2] * w[2]
        ref = util[alive].max()
        weights = np.where(alive, np.exp(eps * (util - ref)), 0.0)
        cum = np.cumsum(weights)
        v = int(np.searchsorted(cum, uniforms[step] * cum[-1], side="right"))
        if v >= n or weights[v] == 0.0:
            v = int(np.flatnonzero(weights > 0.0)[-1])
        perm[step] = v
        trace[step] = util[v]
        alive[v] = False
    return perm, trace, walks


# --------------------------------------------------------------------------
# SIR final sizes through per-edge coupled coins (bond percolation)


@njit
def _splitmix_nb(x):
    x = x + _GOLDEN
    x = (x ^ (x >> np.uint64(30))) * _MIX1
    x = (x ^ (x >> np.uint64(27))) * _MIX2
    return x ^ (x >> np.uint64(31))


def splitmix64(x):
    """Vectorized splitmix64 finalizer over a uint64 array."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = x + _GOLDEN
        x = (x ^ (x >> np.uint64(30))) * _MIX1
        x = (x ^ (x >> np.uint64(27))) * _MIX2
        return x ^ (x >> np.uint64(31))


@njit
def _sir_nb(indptr, indices, alive, p, trial_keys, initial):
    n = indptr.shape[0] - 1
    trials = trial_keys.shape[0]
    sizes = np.zeros(trials, dtype=np.int64)
    mark = np.zeros(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    nn = np.uint64(n)
    for t in range(trials):
        stamp = t + 1
        head = 0
        tail = 0
        for j in range(initial.shape[1]):
            v = initial[t, j]
            if v >= 0 and mark[v] != stamp:
                mark[v] = stamp
                queue[tail] = v
                tail += 1
        key = trial_keys[t]
        while head < tail:
            u = queue[head]
            head += 1
            for q in range(indptr[u], indptr[u + 1]):
                x = indices[q]
                if not alive[x] or mark[x] == stamp:
                    continue
                a = u if u < x else x
                b = x if u < x else u
                edge = np.uint64(a) * nn + np.uint64(b)
                coin = _splitmix_nb(key ^ _splitmix_nb(edge))
                if np.float64(coin >> np.uint64(11)) * _TWO_M53 < p:
                    mark[x] = stamp
                    queue[tail] = x
                    tail += 1
        sizes[t] = tail
    return sizes


def _sir_np(indptr, indices, alive, p, trial_keys, initial):
    n = indptr.shape[0] - 1
    rows = _csr_rows(indptr)
    lo = np.minimum(rows, indices).astype(np.uint64)
    hi = np.maximum(rows, indices).astype(np.uint64)
    with np.errstate(over="ignore"):
        edge_hash = splitmix64(lo * np.uint64(n) + hi)
    both_alive = alive[rows] & alive[indices]
    sizes = np.zeros(trial_keys.shape[0], dtype=np.int64)
    for t, key in enumerate(trial_keys):
        coins = splitmix64(np.uint64(key) ^ edge_hash)
        u01 = (coins >> np.uint64(11)).astype(np.float64) * _TWO_M53
        keep = both_alive & (u01 < p)
        graph = sparse.csr_matrix(
            (np.ones(int(keep.sum()), dtype=np.int8), (rows[keep], indices[keep])), shape=(n, n)
        )
        _, labels = csgraph.connected_components(graph, directed=False)
        seeds = initial[t][initial[t] >= 0]
        comps = np.unique(labels[seeds])
        sizes[t] = int(np.isin(labels, comps).sum())
    return sizes


# --------------------------------------------------------------------------
# dispatch


def residual_degrees(indptr, indices, alive):
    if backend() == "numba":
        return _residual_degrees_nb(indptr, indices, alive)
    return _residual_degrees_np(indptr, indices, alive)


def masked_spmv(indptr, indices, alive, x):
    if backend() == "numba":
        return _spmv_nb(indptr, indices, alive, x)
    return _spmv_np(indptr, indices, alive, x)


def walk_vectors(indptr, indices, alive):
    """Rows k = 0..4 hold the number of length-k walks starting at each node."""
    if backend() == "numba":
        return _walk_vectors_nb(indptr, indices, alive)
    return _walk_vectors_np(indptr, indices, alive)


def cover_permutation(set_ptr, set_elem, set_mult, elem_ptr, elem_set, elem_mult, req, eps, uniforms):
    """Sample sets until every requirement is met.

    Returns ``(prefix, chosen_utilities, max_utilities)`` where
    ``max_utilities[i]`` is the largest residual utility among the sets still
    unchosen after ``i`` picks.
    """
    fn = _cover_perm_nb if backend() == "numba" else _cover_perm_np
    return fn(set_ptr, set_elem, set_mult, elem_ptr, elem_set, elem_mult, req, float(eps), uniforms)


def walk_permutation(indptr, indices, eps, uniforms):
    """Full node permutation plus the 4-walk count left after each removal."""
    fn = _walk_perm_nb if backend() == "numba" else _walk_perm_np
    return fn(indptr, indices, float(eps), uniforms)


def sir_final_sizes(indptr, indices, alive, p, trial_keys, initial):
    fn = _sir_nb if backend() == "numba" else _sir_np
    return fn(indptr, indices, alive, float(p), trial_keys, initial)
