"""Grid graph construction and minimum spanning tree machinery.

The 4-connected grid graph over a feature map carries cosine-distance edge
weights. Component-merge (Boruvka-style) rounds with union-find extract the
MST; ties on equal weights go to the smaller edge id, which makes the tree
unique and reproducible. Rooting orients the tree and fixes the breadth-first
propagation order used by all scans.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .backend import kernels
from .errors import ConnectivityError, DimensionError
from .tensors import FeatureMap


@dataclass(frozen=True)
class WeightedEdge:
    """Undirected edge with canonical orientation u < v."""

    u: int
    v: int
    weight: float
    id: int


class EdgeList:
    """Column-oriented edge set; indexes like a sequence of WeightedEdge."""

    __slots__ = ("u", "v", "weight", "id")

    def __init__(self, u: np.ndarray, v: np.ndarray, weight: np.ndarray, eid: np.ndarray):
        self.u = np.array(u, dtype=np.int64, copy=True)
        self.v = np.array(v, dtype=np.int64, copy=True)
        self.weight = np.array(weight, dtype=np.float64, copy=True)
        self.id = np.array(eid, dtype=np.int64, copy=True)
        if not (len(self.u) == len(self.v) == len(self.weight) == len(self.id)):
            raise DimensionError("edge columns must have equal length")
        for a in (self.u, self.v, self.weight, self.id):
            a.flags.writeable = False

    @classmethod
    def from_edges(cls, edges: Iterable[WeightedEdge]) -> "EdgeList":
        rows = [(e.u, e.v, e.weight, e.id) for e in edges]
        if not rows:
            return cls(np.empty(0), np.empty(0), np.empty(0), np.empty(0))
        u, v, w, eid = zip(*rows)
        return cls(np.array(u), np.array(v), np.array(w), np.array(eid))

    def __len__(self) -> int:
        return len(self.u)

    def __getitem__(self, i: int) -> WeightedEdge:
        return WeightedEdge(int(self.u[i]), int(self.v[i]), float(self.weight[i]), int(self.id[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def total_weight(self) -> float:
        return float(self.weight.sum())


def cosine_distance(f1: Sequence[float], f2: Sequence[float]) -> float:
    """1 - cos(f1, f2); pairs with a zero-norm member get distance 1.

    Symmetric, scale-invariant for positive scalings, and in [0, 2].
    """
    a = np.asarray(f1, dtype=np.float64)
    b = np.asarray(f2, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape or a.size == 0:
        raise DimensionError(f"expected equal-length vectors, got shapes {a.shape} and {b.shape}")
    na = float(a @ a)
    nb = float(b @ b)
    if na == 0.0 or nb == 0.0:
        return 1.0
    sim = float(a @ b) / float(np.sqrt(na * nb))
    return 1.0 - min(1.0, max(-1.0, sim))


def build_grid_graph(fmap: FeatureMap) -> EdgeList:
    """Edges between 4-adjacent cells, weighted by cosine distance.

    Ids follow a row-major cell sweep emitting each cell's right edge before
    its down edge, so the id order is deterministic.
    """
    height, width = fmap.height, fmap.width
    idx = np.arange(height * width, dtype=np.int64).reshape(height, width)
    right_u = idx[:, :-1].ravel()
    down_u = idx[:-1, :].ravel()
    all_u = np.concatenate([right_u, down_u])
    all_v = np.concatenate([right_u + 1, down_u + width])
    # right edges sort before down edges at the same cell
    kind = np.concatenate([np.zeros(len(right_u), np.int64), np.ones(len(down_u), np.int64)])
    order = np.lexsort((kind, all_u))
    eu = all_u[order]
    ev = all_v[order]
    weight = kernels().cosine_edge_weights(fmap.nodes, eu, ev)
    return EdgeList(eu, ev, weight, np.arange(len(eu), dtype=np.int64))


def _as_edge_list(edges) -> EdgeList:
    return edges if isinstance(edges, EdgeList) else EdgeList.from_edges(edges)


def boruvka_mst(edges, node_count: int) -> EdgeList:
    """Minimum spanning tree edges, ordered by edge id.

    Ties on weight are broken by the smaller edge id in every merge round,
    which makes the result the unique MST under the (weight, id) order.
    """
    if node_count < 1:
        raise DimensionError("node_count must be positive")
    el = _as_edge_list(edges)
    if len(el) and (el.u.min() < 0 or max(el.u.max(), el.v.max()) >= node_count):
        raise DimensionError("edge endpoints out of range")
    picked = kernels().boruvka_select(el.u, el.v, el.weight, el.id, node_count)
    if len(picked) != node_count - 1:
        raise ConnectivityError(
            f"graph is disconnected: spanned {len(picked) + 1} of {node_count} nodes"
        )
    picked = picked[np.argsort(el.id[picked])]
    return EdgeList(el.u[picked], el.v[picked], el.weight[picked], el.id[picked])


class SpanningTree:
    """Rooted spanning tree with its breadth-first propagation order.

    `parent` holds -1 at the root; `order` lists nodes level by level with
    ties visited in ascending node index; `level_ptr` marks level boundaries
    inside `order` (level d is order[level_ptr[d]:level_ptr[d+1]]).
    """

    __slots__ = ("root", "parent", "order", "depth", "level_ptr", "edges", "__dict__")

    def __init__(self, root, parent, order, depth, level_ptr, edges: EdgeList):
        self.root = int(root)
        self.parent = parent
        self.order = order
        self.depth = depth
        self.level_ptr = level_ptr
        self.edges = edges
        for a in (self.parent, self.order, self.depth, self.level_ptr):
            a.flags.writeable = False

    @property
    def node_count(self) -> int:
        return len(self.parent)

    @property
    def bfs_order(self) -> np.ndarray:
        return self.order

    @cached_property
    def children(self) -> list[np.ndarray]:
        """Per-node child indices, ascending."""
        out: list[np.ndarray] = [np.empty(0, dtype=np.int64) for _ in range(self.node_count)]
        nonroot = np.flatnonzero(self.parent >= 0)
        by_parent = nonroot[np.argsort(self.parent[nonroot], kind="stable")]
        starts = np.searchsorted(self.parent[by_parent], np.arange(self.node_count))
        ends = np.searchsorted(self.parent[by_parent], np.arange(self.node_count), side="right")
        for i in range(self.node_count):
            out[i] = np.sort(by_parent[starts[i] : ends[i]])
        return out

    def degree(self) -> np.ndarray:
        """Tree degree per node (parent plus children)."""
        deg = np.zeros(self.node_count, dtype=np.int64)
        nonroot = np.flatnonzero(self.parent >= 0)
        np.add.at(deg, self.parent[nonroot], 1)
        deg[nonroot] += 1
        return deg


def root_and_order(tree_edges, root: int, node_count: int | None = None) -> SpanningTree:
    """Orient spanning-tree edges away from `root` and fix the BFS order."""
    el = _as_edge_list(tree_edges)
    n = node_count if node_count is not None else len(el) + 1
    if not 0 <= root < n:
        raise IndexError(f"root {root} out of range for {n} nodes")
    if len(el) != n - 1:
        raise ConnectivityError(f"{len(el)} edges cannot span {n} nodes")
    # symmetric CSR adjacency with ascending neighbor lists
    src = np.concatenate([el.u, el.v])
    dst = np.concatenate([el.v, el.u])
    perm = np.lexsort((dst, src))
    adj_idx = dst[perm]
    adj_ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(adj_ptr, src + 1, 1)
    adj_ptr = np.cumsum(adj_ptr)
    order, parent, depth, visited = kernels().bfs_tree(adj_ptr, adj_idx, root, n)
    if visited != n:
        raise ConnectivityError(f"edges reach only {visited} of {n} nodes from root {root}")
    sorted_depth = depth[order]
    level_ptr = np.searchsorted(sorted_depth, np.arange(sorted_depth[-1] + 2))
    return SpanningTree(root, parent, order, depth, level_ptr.astype(np.int64), el)


def mst_tree(fmap: FeatureMap, root: int = 0) -> SpanningTree:
    """Full pipeline: grid graph -> MST -> rooted BFS tree."""
    edges = build_grid_graph(fmap)
    tree_edges = boruvka_mst(edges, fmap.node_count)
    return root_and_order(tree_edges, root, fmap.node_count)
