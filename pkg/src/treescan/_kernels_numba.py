"""Numba-compiled kernels: the default backend.

Loop-for-loop mirror of `_kernels_numpy`; keep the two in sync. All kernels
are nopython-compiled with on-disk caching so repeated processes skip the
compile.
"""

from __future__ import annotations

import numpy as np
from numba import njit

FNV_OFFSET = np.uint64(0xCBF29CE484222325)
FNV_PRIME = np.uint64(0x100000001B3)


@njit(cache=True)
def cosine_edge_weights(feats, eu, ev):
    n_edges = eu.shape[0]
    n_ch = feats.shape[1]
    w = np.empty(n_edges, dtype=np.float64)
    for e in range(n_edges):
        u = eu[e]
        v = ev[e]
        dot = 0.0
        nu = 0.0
        nv = 0.0
        for ch in range(n_ch):
            fu = feats[u, ch]
            fv = feats[v, ch]
            dot += fu * fv
            nu += fu * fu
            nv += fv * fv
        if nu == 0.0 or nv == 0.0:
            w[e] = 1.0
        else:
            sim = dot / np.sqrt(nu * nv)
            if sim > 1.0:
                sim = 1.0
            elif sim < -1.0:
                sim = -1.0
            w[e] = 1.0 - sim
    return w


@njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def boruvka_select(eu, ev, weight, eid, n_nodes):
    n_edges = eu.shape[0]
    parent = np.arange(n_nodes, dtype=np.int64)
    size = np.ones(n_nodes, dtype=np.int64)
    alive = np.ones(n_edges, dtype=np.bool_)
    n_pick = n_nodes - 1 if n_nodes > 1 else 0
    selected = np.empty(n_pick, dtype=np.int64)
    count = 0
    n_comp = n_nodes
    while n_comp > 1:
        best = np.full(n_nodes, -1, dtype=np.int64)
        for e in range(n_edges):
            if not alive[e]:
                continue
            ru = _find(parent, eu[e])
            rv = _find(parent, ev[e])
            if ru == rv:
                alive[e] = False
                continue
            b = best[ru]
            if b < 0 or weight[e] < weight[b] or (weight[e] == weight[b] and eid[e] < eid[b]):
                best[ru] = e
            b = best[rv]
            if b < 0 or weight[e] < weight[b] or (weight[e] == weight[b] and eid[e] < eid[b]):
                best[rv] = e
        progressed = False
        for r in range(n_nodes):
            e = best[r]
            if e < 0:
                continue
            ru = _find(parent, eu[e])
            rv = _find(parent, ev[e])
            if ru == rv:
                continue
            if size[ru] < size[rv]:
                ru, rv = rv, ru
            parent[rv] = ru
            size[ru] += size[rv]
            selected[count] = e
            count += 1
            n_comp -= 1
            progressed = True
        if not progressed:
            break
    return selected[:count]


@njit(cache=True)
def bfs_tree(adj_ptr, adj_idx, root, n_nodes):
    order = np.empty(n_nodes, dtype=np.int64)
    parent = np.full(n_nodes, -1, dtype=np.int64)
    depth = np.zeros(n_nodes, dtype=np.int64)
    seen = np.zeros(n_nodes, dtype=np.bool_)
    order[0] = root
    seen[root] = True
    head = 0
    tail = 1
    while head < tail:
        i = order[head]
        head += 1
        for k in range(adj_ptr[i], adj_ptr[i + 1]):
            j = adj_idx[k]
            if not seen[j]:
                seen[j] = True
                parent[j] = i
                depth[j] = depth[i] + 1
                order[tail] = j
                tail += 1
    return order, parent, depth, tail


@njit(cache=True)
def scan_up_pass(x, a, b, order, parent, level_ptr):
    n, n_ch = x.shape
    h = np.empty((n, n_ch), dtype=np.float64)
    for i in range(n):
        for ch in range(n_ch):
            h[i, ch] = b[i] * x[i, ch]
    n_levels = level_ptr.shape[0] - 1
    for d in range(n_levels - 1, 0, -1):
        for k in range(level_ptr[d], level_ptr[d + 1]):
            i = order[k]
            p = parent[i]
            for ch in range(n_ch):
                h[p, ch] += a[i] * h[i, ch]
    return h


@njit(cache=True)
def scan_down_pass(h_lr, a, order, parent, level_ptr, literal):
    n, n_ch = h_lr.shape
    h = np.empty((n, n_ch), dtype=np.float64)
    root = order[0]
    for ch in range(n_ch):
        h[root, ch] = h_lr[root, ch]
    n_levels = level_ptr.shape[0] - 1
    for d in range(1, n_levels):
        for k in range(level_ptr[d], level_ptr[d + 1]):
            i = order[k]
            p = parent[i]
            if literal:
                for ch in range(n_ch):
                    h[i, ch] = a[i] * (h_lr[p, ch] - h_lr[i, ch]) + h_lr[i, ch]
            else:
                for ch in range(n_ch):
                    h[i, ch] = a[i] * h[p, ch] + (1.0 - a[i]) * h_lr[i, ch]
    return h


@njit(cache=True)
def scan_backward_pass(x, a, b, c, h_lr, h, g_y, order, parent, level_ptr):
    n, n_ch = x.shape
    n_levels = level_ptr.shape[0] - 1
    root = order[0]

    g_c = np.zeros(n, dtype=np.float64)
    g_a = np.zeros(n, dtype=np.float64)
    g_b = np.zeros(n, dtype=np.float64)
    g_h = np.empty((n, n_ch), dtype=np.float64)
    g_hlr = np.empty((n, n_ch), dtype=np.float64)
    g_x = np.empty((n, n_ch), dtype=np.float64)

    for i in range(n):
        acc = 0.0
        for ch in range(n_ch):
            acc += g_y[i, ch] * h[i, ch]
            g_h[i, ch] = c[i] * g_y[i, ch]
        g_c[i] = acc

    for d in range(n_levels - 1, 0, -1):
        for k in range(level_ptr[d], level_ptr[d + 1]):
            i = order[k]
            p = parent[i]
            acc = 0.0
            for ch in range(n_ch):
                acc += g_h[i, ch] * (h[p, ch] - h_lr[i, ch])
                g_h[p, ch] += a[i] * g_h[i, ch]
                g_hlr[i, ch] = (1.0 - a[i]) * g_h[i, ch]
            g_a[i] += acc
    for ch in range(n_ch):
        g_hlr[root, ch] = g_h[root, ch]

    for d in range(1, n_levels):
        for k in range(level_ptr[d], level_ptr[d + 1]):
            i = order[k]
            p = parent[i]
            acc = 0.0
            for ch in range(n_ch):
                acc += g_hlr[p, ch] * h_lr[i, ch]
                g_hlr[i, ch] += a[i] * g_hlr[p, ch]
            g_a[i] += acc

    for i in range(n):
        acc = 0.0
        for ch in range(n_ch):
            acc += g_hlr[i, ch] * x[i, ch]
            g_x[i, ch] = b[i] * g_hlr[i, ch]
        g_b[i] = acc
    return g_x, g_a, g_b, g_c


@njit(cache=True)
def sequence_scan_pass(x, a, b, order):
    n, n_ch = x.shape
    h = np.empty((n, n_ch), dtype=np.float64)
    prev = order[0]
    for ch in range(n_ch):
        h[prev, ch] = b[prev] * x[prev, ch]
    for k in range(1, n):
        i = order[k]
        for ch in range(n_ch):
            h[i, ch] = a[i] * h[prev, ch] + b[i] * x[i, ch]
        prev = i
    return h


@njit(cache=True)
def _fnv1a64(buf):
    h = FNV_OFFSET
    for k in range(buf.shape[0]):
        h = (h ^ np.uint64(buf[k])) * FNV_PRIME
    return h


def fnv1a64(buf: np.ndarray) -> int:
    return int(_fnv1a64(buf))
