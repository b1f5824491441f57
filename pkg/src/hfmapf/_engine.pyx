# distutils: language = c++
# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled search kernel.

Line-for-line port of ``hfmapf._engine_py`` (see that module for the
algorithm contract); the two must produce identical label sequences, plans,
and statistics.  Keep any behavioural change mirrored in both files.
"""
import time as _time

from cython.operator cimport dereference as deref
from libcpp.unordered_map cimport unordered_map
from libcpp.unordered_set cimport unordered_set
from libcpp.vector cimport vector

STATUS_FOUND = 0
STATUS_INFEASIBLE = 1
STATUS_TIMEOUT = 2


def _mk_stats(created, pruned, expanded, peak_open):
    return {
        "labels_created": created,
        "labels_pruned": pruned,
        "labels_expanded": expanded,
        "peak_open": peak_open,
    }

cdef struct HE:
    double f
    int t
    double negb
    int idx


cdef inline bint _lt(const HE& a, const HE& b) noexcept nogil:
    if a.f != b.f:
        return a.f < b.f
    if a.t != b.t:
        return a.t < b.t
    if a.negb != b.negb:
        return a.negb < b.negb
    return a.idx < b.idx


cdef inline void _heap_push(vector[HE]& h, HE e) noexcept nogil:
    cdef size_t i, p
    cdef HE tmp
    h.push_back(e)
    i = h.size() - 1
    while i > 0:
        p = (i - 1) >> 1
        if _lt(h[i], h[p]):
            tmp = h[i]
            h[i] = h[p]
            h[p] = tmp
            i = p
        else:
            break


cdef inline HE _heap_pop(vector[HE]& h) noexcept nogil:
    cdef HE top = h[0]
    cdef HE last = h[h.size() - 1]
    h.pop_back()
    cdef size_t n = h.size()
    cdef size_t i = 0
    cdef size_t c
    if n == 0:
        return top
    while True:
        c = 2 * i + 1
        if c >= n:
            break
        if c + 1 < n and _lt(h[c + 1], h[c]):
            c += 1
        if _lt(h[c], last):
            h[i] = h[c]
            i = c
        else:
            break
    h[i] = last
    return top


def search(
    indptr_obj,
    nbr_obj,
    d_obj,
    t_obj,
    c_obj,
    z_obj,
    g_obj,
    int start,
    int goal,
    double b0,
    double bmax,
    double q0,
    int t0,
    h_obj,
    int horizon,
    vkeys_obj,
    ekeys_obj,
    bint relax,
    deadline,
    bint want_trace,
):
    cdef const int[:] indptr = indptr_obj
    cdef const int[:] nbr = nbr_obj
    cdef const double[:] d_arr = d_obj
    cdef const int[:] t_arr = t_obj
    cdef const double[:] c_arr = c_obj
    cdef const double[:] z_arr = z_obj
    cdef const unsigned char[:] g_arr = g_obj
    cdef const double[:] h = h_obj
    cdef const long long[:] vkeys = vkeys_obj
    cdef const long long[:] ekeys = ekeys_obj

    cdef long long kbase = horizon + 2
    cdef unordered_set[long long] vset
    cdef unordered_set[long long] eset
    cdef Py_ssize_t ii
    for ii in range(vkeys.shape[0]):
        vset.insert(vkeys[ii])
    for ii in range(ekeys.shape[0]):
        eset.insert(ekeys[ii])

    trace = [] if want_trace else None
    cdef long long created = 0, pruned = 0, expanded = 0, peak_open = 0

    cdef double INF = float("inf")
    cdef bint has_deadline = deadline is not None
    cdef double dl = deadline if has_deadline else 0.0

    if h[start] == INF or vset.count((<long long>start) * kbase + t0):
        return (
            STATUS_INFEASIBLE,
            None,
            None,
            None,
            0.0,
            0.0,
            0.0,
            _mk_stats(created, pruned, expanded, peak_open),
            trace,
        )

    cdef vector[int] ln, lt, lpar
    cdef vector[double] lc, lb, lq
    cdef vector[char] lgen, lstate
    cdef unordered_map[long long, vector[int]] store
    cdef vector[HE] heap
    cdef vector[int] kept

    ln.push_back(start)
    lt.push_back(t0)
    lc.push_back(0.0)
    lb.push_back(b0)
    lq.push_back(q0)
    lpar.push_back(-1)
    lgen.push_back(0)
    lstate.push_back(0)
    store[(<long long>start) * kbase + t0].push_back(0)
    cdef HE root
    root.f = 0.0 + h[start]
    root.t = t0
    root.negb = -b0
    root.idx = 0
    _heap_push(heap, root)
    created = 1
    peak_open = 1
    cdef long long open_count = 1
    cdef long long pops = 0

    cdef HE top
    cdef int idx, node, time_i, j, tj, p, li, nidx
    cdef double cost_i, b_i, q_i, ncost, nb, nq, hj
    cdef long long key, k
    cdef char cgen[2]
    cdef double cnb[2]
    cdef double cnq[2]
    cdef int n_c, ci
    cdef bint dominated, onchain
    cdef unordered_map[long long, vector[int]].iterator sit
    cdef vector[int]* plst
    cdef size_t si

    while heap.size() > 0:
        top = _heap_pop(heap)
        idx = top.idx
        if lstate[idx] == 2:
            continue
        pops += 1
        if has_deadline and (pops & 255) == 0 and _time.monotonic() > dl:
            return (
                STATUS_TIMEOUT,
                None,
                None,
                None,
                0.0,
                0.0,
                0.0,
                _mk_stats(created, pruned, expanded, peak_open),
                trace,
            )
        lstate[idx] = 1
        open_count -= 1
        expanded += 1
        if want_trace:
            trace.append(top.f)
        node = ln[idx]
        if node == goal:
            path = []
            times = []
            gens = []
            p = idx
            while p != -1:
                path.append(ln[p])
                times.append(lt[p])
                if lpar[p] != -1:
                    gens.append(lgen[p] != 0)
                p = lpar[p]
            path.reverse()
            times.reverse()
            gens.reverse()
            return (
                STATUS_FOUND,
                path,
                times,
                gens,
                lc[idx],
                lb[idx],
                lq[idx],
                _mk_stats(created, pruned, expanded, peak_open),
                trace,
            )
        time_i = lt[idx]
        cost_i = lc[idx]
        b_i = lb[idx]
        q_i = lq[idx]
        for k in range(indptr[node], indptr[node + 1]):
            j = nbr[k]
            hj = h[j]
            if hj == INF:
                continue
            tj = time_i + t_arr[k]
            if tj > horizon:
                continue
            p = idx
            onchain = False
            while p != -1:
                if ln[p] == j:
                    onchain = True
                    break
                p = lpar[p]
            if onchain:
                continue
            if vset.count((<long long>j) * kbase + tj):
                continue
            if eset.count(k * kbase + time_i):
                continue
            ncost = cost_i + d_arr[k]
            key = (<long long>j) * kbase + tj
            n_c = 0
            if relax:
                cgen[0] = 0
                cnb[0] = b_i
                cnq[0] = q_i
                n_c = 1
            else:
                nb = b_i - c_arr[k]
                if nb >= 0.0:
                    cgen[n_c] = 0
                    cnb[n_c] = nb
                    cnq[n_c] = q_i
                    n_c += 1
                if g_arr[k]:
                    nb = b_i - c_arr[k] + z_arr[k]
                    nq = q_i - z_arr[k]
                    if nb >= 0.0 and nb <= bmax and nq >= 0.0:
                        cgen[n_c] = 1
                        cnb[n_c] = nb
                        cnq[n_c] = nq
                        n_c += 1
            for ci in range(n_c):
                nb = cnb[ci]
                nq = cnq[ci]
                sit = store.find(key)
                plst = NULL
                dominated = False
                if sit != store.end():
                    plst = &deref(sit).second
                    if relax:
                        for si in range(plst.size()):
                            li = deref(plst)[si]
                            if lc[li] <= ncost:
                                dominated = True
                                break
                    else:
                        for si in range(plst.size()):
                            li = deref(plst)[si]
                            if lb[li] == nb and lc[li] <= ncost and lq[li] >= nq:
                                dominated = True
                                break
                if dominated:
                    pruned += 1
                    continue
                if plst != NULL and plst.size() > 0:
                    kept.clear()
                    for si in range(plst.size()):
                        li = deref(plst)[si]
                        if lstate[li] == 0 and (
                            (relax and ncost <= lc[li])
                            or (
                                not relax
                                and lb[li] == nb
                                and ncost <= lc[li]
                                and nq >= lq[li]
                            )
                        ):
                            lstate[li] = 2
                            open_count -= 1
                            pruned += 1
                        else:
                            kept.push_back(li)
                    if kept.size() != plst.size():
                        plst[0] = kept
                nidx = <int>ln.size()
                ln.push_back(j)
                lt.push_back(tj)
                lc.push_back(ncost)
                lb.push_back(nb)
                lq.push_back(nq)
                lpar.push_back(idx)
                lgen.push_back(cgen[ci])
                lstate.push_back(0)
                if plst == NULL:
                    store[key].push_back(nidx)
                else:
                    plst.push_back(nidx)
                top.f = ncost + hj
                top.t = tj
                top.negb = -nb
                top.idx = nidx
                _heap_push(heap, top)
                created += 1
                open_count += 1
                if open_count > peak_open:
                    peak_open = open_count

    return (STATUS_INFEASIBLE, None, None, None, 0.0, 0.0, 0.0, _mk_stats(created, pruned, expanded, peak_open), trace)
