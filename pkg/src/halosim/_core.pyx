# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled kernels. Semantics are defined by ``_pycore``; keep them identical."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int32_t, int64_t, uint8_t, uint64_t
from libcpp.algorithm cimport sort
from libcpp.pair cimport pair
from libcpp.queue cimport priority_queue
from libcpp.vector cimport vector

cnp.import_array()


cdef inline uint64_t _splitmix64(uint64_t x) nogil:
    cdef uint64_t z = x + <uint64_t>0x9E3779B97F4A7C15ULL
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBULL
    return z ^ (z >> 31)


def edge_keys(seed, v, u):
    cdef uint64_t s = _splitmix64(<uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF))
    shape = np.broadcast(v, u).shape
    cdef const int64_t[::1] vv = np.ascontiguousarray(np.broadcast_to(v, shape), dtype=np.int64).ravel()
    cdef const int64_t[::1] uu = np.ascontiguousarray(np.broadcast_to(u, shape), dtype=np.int64).ravel()
    out = np.empty(vv.shape[0], dtype=np.uint64)
    cdef uint64_t[::1] o = out
    cdef Py_ssize_t i
    for i in range(vv.shape[0]):
        o[i] = _splitmix64(_splitmix64(s ^ <uint64_t>vv[i]) ^ <uint64_t>uu[i])
    return out.reshape(shape)


def closure_hops(indptr_, indices_, sources_, exclude_, allowed_, int max_hop,
                 int64_t fanout, seed):
    cdef const int64_t[::1] indptr = np.ascontiguousarray(indptr_, dtype=np.int64)
    cdef const int64_t[::1] indices = np.ascontiguousarray(indices_, dtype=np.int64)
    cdef const uint8_t[::1] sources = np.ascontiguousarray(sources_, dtype=np.uint8)
    cdef bint has_ex = exclude_ is not None
    cdef bint has_al = allowed_ is not None
    cdef const uint8_t[::1] exclude = np.ascontiguousarray(exclude_ if has_ex else np.zeros(1), dtype=np.uint8)
    cdef const uint8_t[::1] allowed = np.ascontiguousarray(allowed_ if has_al else np.zeros(1), dtype=np.uint8)
    cdef Py_ssize_t n = indptr.shape[0] - 1
    hops_arr = np.full(n, -1, dtype=np.int32)
    contrib_arr = np.zeros(n, dtype=np.int32)
    cdef int32_t[::1] hops = hops_arr
    cdef int32_t[::1] contrib = contrib_arr
    cdef uint64_t s = _splitmix64(<uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF))
    cdef vector[int64_t] frontier, nxt
    cdef vector[pair[uint64_t, int64_t]] cand
    cdef Py_ssize_t v, j, c, limit
    cdef int64_t u
    cdef uint64_t sv
    cdef int h
    for v in range(n):
        if sources[v]:
            hops[v] = 0
            frontier.push_back(v)
    with nogil:
        for h in range(1, max_hop + 1):
            if frontier.size() == 0:
                break
            nxt.clear()
            for c in range(<Py_ssize_t>frontier.size()):
                v = frontier[c]
                if fanout < 0:
                    for j in range(indptr[v], indptr[v + 1]):
                        u = indices[j]
                        if has_ex and exclude[u]:
                            continue
                        if has_al and not allowed[u]:
                            continue
                        if hops[u] == -1:
                            hops[u] = h
                            contrib[v] += 1
                            nxt.push_back(u)
                else:
                    cand.clear()
                    sv = _splitmix64(s ^ <uint64_t>v)
                    for j in range(indptr[v], indptr[v + 1]):
                        u = indices[j]
                        if has_ex and exclude[u]:
                            continue
                        cand.push_back(pair[uint64_t, int64_t](_splitmix64(sv ^ <uint64_t>u), u))
                    if <int64_t>cand.size() > fanout:
                        sort(cand.begin(), cand.end())
                        limit = fanout
                    else:
                        limit = cand.size()
                    for j in range(limit):
                        u = cand[j].second
                        if has_al and not allowed[u]:
                            continue
                        if hops[u] == -1:
                            hops[u] = h
                            contrib[v] += 1
                            nxt.push_back(u)
            sort(nxt.begin(), nxt.end())
            frontier.swap(nxt)
    return hops_arr, contrib_arr


def grow_regions(indptr_, indices_, sizes_):
    cdef const int64_t[::1] indptr = np.ascontiguousarray(indptr_, dtype=np.int64)
    cdef const int64_t[::1] indices = np.ascontiguousarray(indices_, dtype=np.int64)
    cdef const int64_t[::1] sizes = np.ascontiguousarray(sizes_, dtype=np.int64)
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t k = sizes.shape[0]
    deg = np.diff(np.asarray(indptr))
    cdef int64_t[::1] order = np.lexsort((np.arange(n), -deg)).astype(np.int64)
    assign_arr = np.full(n, -1, dtype=np.int64)
    cdef int64_t[::1] asg = assign_arr
    cdef int64_t[::1] cn = np.zeros(n, dtype=np.int64)
    # max-heap on (conn, -vertex) == min-heap on (-conn, vertex)
    cdef priority_queue[pair[int64_t, int64_t]] heap
    cdef vector[int64_t] touched
    cdef pair[int64_t, int64_t] top
    cdef Py_ssize_t p, cursor = 0, j
    cdef int64_t target, count, v, u
    with nogil:
        for p in range(k - 1):
            target = sizes[p]
            count = 0
            while not heap.empty():
                heap.pop()
            touched.clear()
            while count < target:
                v = -1
                while not heap.empty():
                    top = heap.top()
                    heap.pop()
                    u = -top.second
                    if asg[u] == -1 and top.first == cn[u]:
                        v = u
                        break
                if v == -1:
                    while asg[order[cursor]] != -1:
                        cursor += 1
                    v = order[cursor]
                asg[v] = p
                count += 1
                for j in range(indptr[v], indptr[v + 1]):
                    u = indices[j]
                    if asg[u] == -1:
                        cn[u] += 1
                        touched.push_back(u)
                        heap.push(pair[int64_t, int64_t](cn[u], -u))
            for j in range(<Py_ssize_t>touched.size()):
                cn[touched[j]] = 0
        for v in range(n):
            if asg[v] == -1:
                asg[v] = k - 1
    return assign_arr


def refine(indptr_, indices_, assign_, int64_t num_parts, int64_t max_size,
           int64_t min_size, int max_passes):
    cdef const int64_t[::1] indptr = np.ascontiguousarray(indptr_, dtype=np.int64)
    cdef const int64_t[::1] indices = np.ascontiguousarray(indices_, dtype=np.int64)
    assign_arr = np.array(assign_, dtype=np.int64, copy=True)
    cdef int64_t[::1] asg = assign_arr
    cdef int64_t[::1] size = np.bincount(assign_arr, minlength=num_parts).astype(np.int64)
    cdef int64_t[::1] counts = np.zeros(num_parts, dtype=np.int64)
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t v, j, q
    cdef int64_t own, best, best_c, moved, total = 0
    cdef int it
    with nogil:
        for it in range(max_passes):
            moved = 0
            for v in range(n):
                if indptr[v] == indptr[v + 1]:
                    continue
                own = asg[v]
                for j in range(indptr[v], indptr[v + 1]):
                    counts[asg[indices[j]]] += 1
                if counts[own] != indptr[v + 1] - indptr[v]:
                    best = -1
                    best_c = -1
                    for q in range(num_parts):
                        if q != own and size[q] < max_size and counts[q] > best_c:
                            best = q
                            best_c = counts[q]
                    if best >= 0 and best_c - counts[own] > 0 and size[own] > min_size:
                        asg[v] = best
                        size[own] -= 1
                        size[best] += 1
                        moved += 1
                for j in range(indptr[v], indptr[v + 1]):
                    counts[asg[indices[j]]] = 0
            total += moved
            if moved == 0:
                break
    return assign_arr, total
