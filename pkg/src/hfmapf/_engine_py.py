"""Pure-Python search kernel.

Reference implementation of the temporal labeling search; ``_engine.pyx`` is
a line-for-line port and the two must produce identical label sequences,
plans, and statistics (the engine-parity tests enforce this).  Keep any
behavioural change mirrored in both files.

State: labels live at (node, arrival-time) states.  A candidate label is
pruned only by a stored label at the same state with equal battery, no
higher cost, and no lower fuel; with everything equal the older label wins.
Expansion order: pop minimum (f, time, -battery, creation index); successor
edges in neighbor order; generator-off extension before generator-on, so
exact ties resolve toward quieter plans.
"""
from __future__ import annotations

import heapq
import time as _time

INF = float("inf")

STATUS_FOUND = 0
STATUS_INFEASIBLE = 1
STATUS_TIMEOUT = 2


def search(
    indptr,
    nbr,
    d_arr,
    t_arr,
    c_arr,
    z_arr,
    g_arr,
    start,
    goal,
    b0,
    bmax,
    q0,
    t0,
    h,
    horizon,
    vkeys,
    ekeys,
    relax,
    deadline,
    want_trace,
):
    kbase = horizon + 2
    # native lists: exact doubles/ints and faster element access than ndarray
    indptr = indptr.tolist()
    nbr = nbr.tolist()
    d_arr = d_arr.tolist()
    t_arr = t_arr.tolist()
    c_arr = c_arr.tolist()
    z_arr = z_arr.tolist()
    g_arr = g_arr.tolist()
    h = h.tolist()
    vset = frozenset(int(k) for k in vkeys)
    eset = frozenset(int(k) for k in ekeys)
    trace = [] if want_trace else None
    stats = {
        "labels_created": 0,
        "labels_pruned": 0,
        "labels_expanded": 0,
        "peak_open": 0,
    }
    empty = (STATUS_INFEASIBLE, None, None, None, 0.0, 0.0, 0.0, stats, trace)
    if h[start] == INF or (start * kbase + t0) in vset:
        return empty

    # label buffers; index = creation order
    ln = [start]
    lt = [t0]
    lc = [0.0]
    lb = [b0]
    lq = [q0]
    lpar = [-1]
    lgen = [False]
    lstate = [0]  # 0 open, 1 closed, 2 dead
    store = {start * kbase + t0: [0]}
    heap = [(0.0 + h[start], t0, -b0, 0)]
    stats["labels_created"] = 1
    stats["peak_open"] = 1
    open_count = 1
    pops = 0

    while heap:
        f, _tt, _negb, idx = heapq.heappop(heap)
        if lstate[idx] == 2:
            continue
        pops += 1
        if deadline is not None and (pops & 255) == 0 and _time.monotonic() > deadline:
            return (STATUS_TIMEOUT, None, None, None, 0.0, 0.0, 0.0, stats, trace)
        lstate[idx] = 1
        open_count -= 1
        stats["labels_expanded"] += 1
        if want_trace:
            trace.append(float(f))
        node = ln[idx]
        if node == goal:
            path = []
            times = []
            gens = []
            i = idx
            while i != -1:
                path.append(ln[i])
                times.append(lt[i])
                if lpar[i] != -1:
                    gens.append(lgen[i])
                i = lpar[i]
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
                stats,
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
            if (j * kbase + tj) in vset:
                continue
            if (k * kbase + time_i) in eset:
                continue
            ncost = cost_i + d_arr[k]
            key = j * kbase + tj
            if relax:
                cands = ((False, b_i, q_i),)
            else:
                cands = []
                nb = b_i - c_arr[k]
                if nb >= 0.0:
                    cands.append((False, nb, q_i))
                if g_arr[k]:
                    nb = b_i - c_arr[k] + z_arr[k]
                    nq = q_i - z_arr[k]
                    if 0.0 <= nb <= bmax and nq >= 0.0:
                        cands.append((True, nb, nq))
            for gen, nb, nq in cands:
                lst = store.get(key)
                dominated = False
                if lst is not None:
                    if relax:
                        for li in lst:
                            if lc[li] <= ncost:
                                dominated = True
                                break
                    else:
                        for li in lst:
                            if lb[li] == nb and lc[li] <= ncost and lq[li] >= nq:
                                dominated = True
                                break
                if dominated:
                    stats["labels_pruned"] += 1
                    continue
                if lst:
                    keep = []
                    for li in lst:
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
                            stats["labels_pruned"] += 1
                        else:
                            keep.append(li)
                    if len(keep) != len(lst):
                        store[key] = keep
                        lst = keep
                nidx = len(ln)
                ln.append(j)
                lt.append(tj)
                lc.append(ncost)
                lb.append(nb)
                lq.append(nq)
                lpar.append(idx)
                lgen.append(gen)
                lstate.append(0)
                if lst is None:
                    store[key] = [nidx]
                else:
                    store[key].append(nidx)
                heapq.heappush(heap, (ncost + hj, tj, -nb, nidx))
                stats["labels_created"] += 1
                open_count += 1
                if open_count > stats["peak_open"]:
                    stats["peak_open"] = open_count

    return empty
