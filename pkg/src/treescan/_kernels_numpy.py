"""Pure numpy/python kernels: the fallback backend.

Each function here has an @njit twin in `_kernels_numba`. Accumulation
order is kept identical between the two (per-level, ascending position
within a level) so outputs match across backends.
"""

from __future__ import annotations

import numpy as np

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_U64_MASK = 0xFFFFFFFFFFFFFFFF


def cosine_edge_weights(feats: np.ndarray, eu: np.ndarray, ev: np.ndarray) -> np.ndarray:
    """Cosine distance per edge; zero-norm endpoints get distance 1."""
    fu = feats[eu]
    fv = feats[ev]
    dot = np.sum(fu * fv, axis=1)
    nu = np.sum(fu * fu, axis=1)
    nv = np.sum(fv * fv, axis=1)
    zero = (nu == 0.0) | (nv == 0.0)
    denom = np.sqrt(np.where(zero, 1.0, nu * nv))
    sim = np.clip(dot / denom, -1.0, 1.0)
    w = 1.0 - sim
    w[zero] = 1.0
    return w


def _find(parent: np.ndarray, x: int) -> int:
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        parent[x], x = root, parent[x]
    return root


def boruvka_select(
    eu: np.ndarray, ev: np.ndarray, weight: np.ndarray, eid: np.ndarray, n_nodes: int
) -> np.ndarray:
    """Positions of the edges picked by component-merge rounds.

    Per round every component selects its cheapest outgoing edge, ties by
    smaller edge id; all selected edges are then merged. Returns fewer than
    n_nodes - 1 positions iff the graph is disconnected.
    """
    n_edges = eu.shape[0]
    parent = np.arange(n_nodes, dtype=np.int64)
    size = np.ones(n_nodes, dtype=np.int64)
    alive = np.ones(n_edges, dtype=np.bool_)
    selected = np.empty(max(n_nodes - 1, 0), dtype=np.int64)
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
            for r in (ru, rv):
                b = best[r]
                if b < 0 or weight[e] < weight[b] or (weight[e] == weight[b] and eid[e] < eid[b]):
                    best[r] = e
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


def bfs_tree(adj_ptr: np.ndarray, adj_idx: np.ndarray, root: int, n_nodes: int):
    """BFS over a CSR adjacency with ascending-index neighbor visits.

    Returns (order, parent, depth, visited_count); parent is -1 at the root.
    """
    order = np.empty(n_nodes, dtype=np.int64)
    parent = np.full(n_nodes, -1, dtype=np.int64)
    depth = np.zeros(n_nodes, dtype=np.int64)
    seen = np.zeros(n_nodes, dtype=np.bool_)
    order[0] = root
    seen[root] = True
    head, tail = 0, 1
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


def scan_up_pass(
    x: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
    order: np.ndarray,
    parent: np.ndarray,
    level_ptr: np.ndarray,
) -> np.ndarray:
    """Bottom-up state: own gated input plus gate-weighted child states."""
    h = b[:, None] * x
    n_levels = level_ptr.shape[0] - 1
    for d in range(n_levels - 1, 0, -1):
        nodes = order[level_ptr[d] : level_ptr[d + 1]]
        np.add.at(h, parent[nodes], a[nodes, None] * h[nodes])
    return h


def scan_down_pass(
    h_lr: np.ndarray,
    a: np.ndarray,
    order: np.ndarray,
    parent: np.ndarray,
    level_ptr: np.ndarray,
    literal: bool,
) -> np.ndarray:
    """Top-down blend; the root keeps its bottom-up state unchanged."""
    h = np.empty_like(h_lr)
    root = order[0]
    h[root] = h_lr[root]
    n_levels = level_ptr.shape[0] - 1
    for d in range(1, n_levels):
        nodes = order[level_ptr[d] : level_ptr[d + 1]]
        gates = a[nodes, None]
        if literal:
            h[nodes] = gates * (h_lr[parent[nodes]] - h_lr[nodes]) + h_lr[nodes]
        else:
            h[nodes] = gates * h[parent[nodes]] + (1.0 - gates) * h_lr[nodes]
    return h


def scan_backward_pass(
    x: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    h_lr: np.ndarray,
    h: np.ndarray,
    g_y: np.ndarray,
    order: np.ndarray,
    parent: np.ndarray,
    level_ptr: np.ndarray,
):
    """Adjoint of the forward passes (updated-parent blend variant).

    Returns (g_x, g_a, g_b, g_c) for the scalar sum(g_y * y).
    """
    n_levels = level_ptr.shape[0] - 1
    root = order[0]

    g_c = np.sum(g_y * h, axis=1)
    g_h = c[:, None] * g_y
    g_a = np.zeros_like(a)
    g_hlr = np.empty_like(h_lr)

    # Adjoint of the top-down blend, deepest level first.
    for d in range(n_levels - 1, 0, -1):
        nodes = order[level_ptr[d] : level_ptr[d + 1]]
        g_a[nodes] += np.sum(g_h[nodes] * (h[parent[nodes]] - h_lr[nodes]), axis=1)
        np.add.at(g_h, parent[nodes], a[nodes, None] * g_h[nodes])
        g_hlr[nodes] = (1.0 - a[nodes, None]) * g_h[nodes]
    g_hlr[root] = g_h[root]

    # Adjoint of the bottom-up pass, root level first.
    for d in range(1, n_levels):
        nodes = order[level_ptr[d] : level_ptr[d + 1]]
        g_up = g_hlr[parent[nodes]]
        g_a[nodes] += np.sum(g_up * h_lr[nodes], axis=1)
        g_hlr[nodes] += a[nodes, None] * g_up

    g_b = np.sum(g_hlr * x, axis=1)
    g_x = b[:, None] * g_hlr
    return g_x, g_a, g_b, g_c


def sequence_scan_pass(
    x: np.ndarray, a: np.ndarray, b: np.ndarray, order: np.ndarray
) -> np.ndarray:
    """Chain recurrence along a permutation; results stored per node id."""
    h = np.empty_like(x)
    prev = order[0]
    h[prev] = b[prev] * x[prev]
    for k in range(1, order.shape[0]):
        i = order[k]
        h[i] = a[i] * h[prev] + b[i] * x[i]
        prev = i
    return h


def fnv1a64(buf: np.ndarray) -> int:
    """64-bit FNV-1a over a uint8 buffer."""
    h = FNV_OFFSET
    for byte in buf.tolist():
        h = ((h ^ byte) * FNV_PRIME) & _U64_MASK
    return h
