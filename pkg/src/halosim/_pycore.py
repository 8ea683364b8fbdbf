"""Pure NumPy implementations of the hot kernels.

These mirror ``_core.pyx`` exactly; ``halosim.kernels`` picks the compiled
version when it is importable. Every function here must stay bit-identical
to its compiled twin (tests/test_kernels.py checks this).
"""

import heapq

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    z = x + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def edge_keys(seed: int, v, u) -> np.ndarray:
    """Keyed 64-bit priority of neighbor ``u`` as seen from vertex ``v``."""
    s = _splitmix64(np.array([seed & _MASK64], dtype=np.uint64))[0]
    v = np.asarray(v, dtype=np.int64).astype(np.uint64)
    u = np.asarray(u, dtype=np.int64).astype(np.uint64)
    return _splitmix64(_splitmix64(s ^ v) ^ u)


def _gather(indptr, indices, frontier):
    """Concatenated (source, neighbor) pairs for ``frontier``, in CSR order."""
    starts = indptr[frontier]
    counts = indptr[frontier + 1] - starts
    total = int(counts.sum())
    if total == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    src = np.repeat(frontier, counts)
    offs = np.arange(total, dtype=np.int64) - np.repeat(np.cumsum(counts) - counts, counts)
    nbr = indices[np.repeat(starts, counts) + offs]
    return src, nbr


def closure_hops(indptr, indices, sources, exclude, allowed, max_hop, fanout, seed):
    n = indptr.shape[0] - 1
    hops = np.full(n, -1, dtype=np.int32)
    contrib = np.zeros(n, dtype=np.int32)
    frontier = np.flatnonzero(sources).astype(np.int64)
    hops[frontier] = 0
    for h in range(1, max_hop + 1):
        if frontier.size == 0:
            break
        src, nbr = _gather(indptr, indices, frontier)
        if exclude is not None and nbr.size:
            keep = ~exclude[nbr].astype(bool)
            src, nbr = src[keep], nbr[keep]
        if fanout >= 0 and nbr.size:
            keys = edge_keys(seed, src, nbr)
            order = np.lexsort((nbr, keys, src))
            src, nbr = src[order], nbr[order]
            group_start = np.flatnonzero(np.r_[True, src[1:] != src[:-1]])
            sizes = np.diff(np.r_[group_start, src.size])
            rank = np.arange(src.size) - np.repeat(group_start, sizes)
            keep = rank < fanout
            src, nbr = src[keep], nbr[keep]
        if allowed is not None and nbr.size:
            keep = allowed[nbr].astype(bool)
            src, nbr = src[keep], nbr[keep]
        keep = hops[nbr] == -1
        src, nbr = src[keep], nbr[keep]
        # first occurrence in (ascending source, selection order) wins
        new, first = np.unique(nbr, return_index=True)
        hops[new] = h
        np.add.at(contrib, src[first], 1)
        frontier = new
    return hops, contrib


def grow_regions(indptr, indices, sizes):
    n = indptr.shape[0] - 1
    k = len(sizes)
    assign = np.full(n, -1, dtype=np.int64)
    deg = np.diff(indptr)
    order = np.lexsort((np.arange(n), -deg)).tolist()
    ind = indices.tolist()
    ptr = indptr.tolist()
    asg = [-1] * n
    cn = [0] * n
    cursor = 0
    for p in range(k - 1):
        target = int(sizes[p])
        heap: list = []
        touched = []
        count = 0
        while count < target:
            v = -1
            while heap:
                negc, u = heapq.heappop(heap)
                if asg[u] == -1 and -negc == cn[u]:
                    v = u
                    break
            if v == -1:
                while asg[order[cursor]] != -1:
                    cursor += 1
                v = order[cursor]
            asg[v] = p
            count += 1
            for j in range(ptr[v], ptr[v + 1]):
                u = ind[j]
                if asg[u] == -1:
                    cn[u] += 1
                    touched.append(u)
                    heapq.heappush(heap, (-cn[u], u))
        for u in touched:
            cn[u] = 0
    assign[:] = asg
    assign[assign == -1] = k - 1
    return assign


def refine(indptr, indices, assign, num_parts, max_size, min_size, max_passes):
    n = indptr.shape[0] - 1
    assign = np.array(assign, dtype=np.int64, copy=True)
    size = np.bincount(assign, minlength=num_parts).astype(np.int64)
    total_moves = 0
    for _ in range(max_passes):
        moved = 0
        for v in range(n):
            lo, hi = indptr[v], indptr[v + 1]
            if lo == hi:
                continue
            own = assign[v]
            counts = np.bincount(assign[indices[lo:hi]], minlength=num_parts)
            if counts[own] == hi - lo:
                continue
            best, best_c = -1, -1
            for q in range(num_parts):
                if q != own and size[q] < max_size and counts[q] > best_c:
                    best, best_c = q, counts[q]
            if best >= 0 and best_c - counts[own] > 0 and size[own] > min_size:
                assign[v] = best
                size[own] -= 1
                size[best] += 1
                moved += 1
        total_moves += moved
        if moved == 0:
            break
    return assign, total_moves
