"""Tree-aware selective scan.

Two propagation passes move state along a rooted spanning tree: the
bottom-up pass sums each node's gate-weighted child states with its own
gated input, and the top-down pass blends each node with its parent so
sibling information reaches every node. Per-node gate/input/output
coefficients come from learned channel projections of the input itself
(the selective mechanism). Everything is linear in the input, which the
dense oracle exploits: it solves the equivalent linear systems by LU
factorization and is kept fully independent of the traversal kernels it
verifies.

The top-down pass has two readings that differ beyond depth one: blending
with the parent's already-updated state (consistent with the dense system
form, the default) or with the parent's bottom-up state. Both are
implemented and both are covered by the oracle.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .backend import kernels
from .errors import ContractError, DataError, DimensionError, SolverError
from .mst import SpanningTree
from .tensors import FeatureMap

GATE_EPS = 1e-12
ORACLE_NODE_CAP = 4096


class ScanVariant(enum.Enum):
    """How the top-down pass reads the parent state."""

    MATRIX = "matrix"  # parent's updated state (matches the dense system)
    LITERAL = "literal"  # parent's bottom-up state


@dataclass(frozen=True)
class ScanParams:
    """Per-node gate (a_bar), input gain (b_bar), and output gain (c_out).

    `normalized` asserts max|a_bar| <= 1/4; the scan passes require it.
    """

    a_bar: np.ndarray
    b_bar: np.ndarray
    c_out: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        for name in ("a_bar", "b_bar", "c_out"):
            arr = np.array(getattr(self, name), dtype=np.float64, copy=True)
            if arr.ndim != 1:
                raise DimensionError(f"{name} must be one-dimensional")
            if not np.all(np.isfinite(arr)):
                raise DataError(f"{name} contains non-finite values")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if not len(self.a_bar) == len(self.b_bar) == len(self.c_out):
            raise DimensionError("parameter vectors must have equal length")

    @property
    def node_count(self) -> int:
        return len(self.a_bar)


@dataclass(frozen=True)
class ScanGradients:
    """Gradients with the same per-node layout as ScanParams."""

    a_bar: np.ndarray
    b_bar: np.ndarray
    c_out: np.ndarray


@dataclass
class ScanState:
    """Intermediate per-node, per-channel state of one scan run."""

    height: int
    width: int
    h_lr: np.ndarray | None = None
    h: np.ndarray | None = None
    y: np.ndarray | None = None


def make_params(fmap: FeatureMap, w_a: np.ndarray, w_b: np.ndarray, w_c: np.ndarray) -> ScanParams:
    """Selective parameterization: per-node coefficients projected from the input.

    a_bar_i = tanh(w_a . x_i), b_bar_i = w_b . x_i, c_out_i = w_c . x_i.
    The result is not yet normalized.
    """
    vecs = []
    for name, w in (("w_a", w_a), ("w_b", w_b), ("w_c", w_c)):
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (fmap.channels,):
            raise DimensionError(f"{name} must have length {fmap.channels}, got shape {w.shape}")
        vecs.append(w)
    nodes = fmap.nodes
    return ScanParams(
        a_bar=np.tanh(nodes @ vecs[0]),
        b_bar=nodes @ vecs[1],
        c_out=nodes @ vecs[2],
    )


def normalize_gates(params: ScanParams) -> ScanParams:
    """Rescale gates so max|a_bar| < 1/4 strictly; zero gates pass through.

    Divides by (4 * max|a_bar| + eps); the eps turns the bound from <= into
    the strict inequality the solvability argument needs.
    """
    peak = float(np.max(np.abs(params.a_bar))) if params.node_count else 0.0
    if peak == 0.0:
        return replace(params, normalized=True)
    return replace(params, a_bar=params.a_bar / (4.0 * peak + GATE_EPS), normalized=True)


def _check_contract(fmap: FeatureMap, tree: SpanningTree, params: ScanParams) -> None:
    if not params.normalized:
        raise ContractError("params must go through normalize_gates before scanning")
    if tree.node_count != fmap.node_count:
        raise DimensionError(
            f"tree has {tree.node_count} nodes, map has {fmap.node_count}"
        )
    if params.node_count != fmap.node_count:
        raise DimensionError(
            f"params cover {params.node_count} nodes, map has {fmap.node_count}"
        )


def _check_variant(variant) -> ScanVariant:
    if not isinstance(variant, ScanVariant):
        raise ContractError(f"variant must be a ScanVariant, got {variant!r}")
    return variant


def scan_up(fmap: FeatureMap, tree: SpanningTree, params: ScanParams) -> ScanState:
    """Bottom-up pass: fills h_lr processing the BFS order in reverse."""
    _check_contract(fmap, tree, params)
    h_lr = kernels().scan_up_pass(
        fmap.nodes, params.a_bar, params.b_bar, tree.order, tree.parent, tree.level_ptr
    )
    return ScanState(height=fmap.height, width=fmap.width, h_lr=h_lr)


def scan_down(
    state: ScanState, tree: SpanningTree, params: ScanParams, variant: ScanVariant
) -> ScanState:
    """Top-down pass: fills h; the root keeps its bottom-up state."""
    variant = _check_variant(variant)
    if state.h_lr is None:
        raise ContractError("scan_down requires a state with h_lr filled")
    h = kernels().scan_down_pass(
        state.h_lr,
        params.a_bar,
        tree.order,
        tree.parent,
        tree.level_ptr,
        variant is ScanVariant.LITERAL,
    )
    return replace(state, h=h)


def project_output(state: ScanState, params: ScanParams) -> FeatureMap:
    """Output projection y_i = c_out_i * h_i, reshaped to the input grid."""
    if state.h is None:
        raise ContractError("project_output requires a state with h filled")
    y = params.c_out[:, None] * state.h
    return FeatureMap(y.reshape(state.height, state.width, -1))


def tree_scan(
    fmap: FeatureMap, tree: SpanningTree, params: ScanParams, variant: ScanVariant
) -> FeatureMap:
    """Full operator: bottom-up, top-down, output projection."""
    state = scan_up(fmap, tree, params)
    state = scan_down(state, tree, params, variant)
    return project_output(state, params)


def propagation_matrices(tree: SpanningTree, params: ScanParams):
    """Dense system matrices (M_up, M_down) for the two passes.

    The bottom-up system is H_lr = M_up H_lr + diag(b) X with
    M_up[i, j] = a_bar_j for each child j of i (the child's own gate scales
    its contribution). The top-down system is H = M_down H + diag(1 - a') H_lr
    with M_down[i, parent(i)] = a'_i and a' equal to a_bar except a'_root = 0,
    which pins the root row to h_root = h_lr_root.
    """
    n = tree.node_count
    child = np.zeros((n, n), dtype=np.float64)
    nonroot = np.flatnonzero(tree.parent >= 0)
    child[tree.parent[nonroot], nonroot] = 1.0
    m_up = child * params.a_bar[None, :]

    a_rooted = params.a_bar.copy()
    a_rooted[tree.root] = 0.0
    parent_mat = np.zeros((n, n), dtype=np.float64)
    parent_mat[nonroot, tree.parent[nonroot]] = 1.0
    m_down = a_rooted[:, None] * parent_mat
    return m_up, m_down


def _root_adjusted_gates(tree: SpanningTree, params: ScanParams) -> np.ndarray:
    a_rooted = params.a_bar.copy()
    a_rooted[tree.root] = 0.0
    return a_rooted


def _solve(system: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"dense propagation system is singular: {exc}") from exc


def _parent_pick(tree: SpanningTree) -> np.ndarray:
    """0/1 matrix selecting each non-root node's parent row."""
    n = tree.node_count
    pick = np.zeros((n, n), dtype=np.float64)
    nonroot = np.flatnonzero(tree.parent >= 0)
    pick[nonroot, tree.parent[nonroot]] = 1.0
    return pick


def oracle_scan(
    fmap: FeatureMap,
    tree: SpanningTree,
    params: ScanParams,
    variant: ScanVariant,
    node_cap: int = ORACLE_NODE_CAP,
) -> FeatureMap:
    """Dense reference: solves the propagation systems by LU factorization.

    Deliberately shares nothing with the traversal kernels. The systems are
    uniquely solvable for any finite gates (the matrices are nilpotent on a
    rooted tree); after normalize_gates the infinity-norm bound
    ||M|| <= 4 max|a_bar| < 1 holds as well.
    """
    variant = _check_variant(variant)
    _check_contract(fmap, tree, params)
    n = tree.node_count
    if n > node_cap:
        raise DimensionError(f"oracle capped at {node_cap} nodes, got {n}")
    m_up, m_down = propagation_matrices(tree, params)
    eye = np.eye(n)
    x = fmap.nodes
    h_lr = _solve(eye - m_up, params.b_bar[:, None] * x)
    a_rooted = _root_adjusted_gates(tree, params)
    if variant is ScanVariant.MATRIX:
        h = _solve(eye - m_down, (1.0 - a_rooted)[:, None] * h_lr)
    else:
        parent_states = _parent_pick(tree) @ h_lr
        h = a_rooted[:, None] * (parent_states - h_lr) + h_lr
    y = params.c_out[:, None] * h
    return FeatureMap(y.reshape(fmap.height, fmap.width, fmap.channels))


def dense_operator(
    tree: SpanningTree, params: ScanParams, variant: ScanVariant
) -> np.ndarray:
    """The (N, N) matrix T with y = T x per channel, built from dense solves."""
    variant = _check_variant(variant)
    n = tree.node_count
    m_up, m_down = propagation_matrices(tree, params)
    eye = np.eye(n)
    up = _solve(eye - m_up, np.diag(params.b_bar))
    a_rooted = _root_adjusted_gates(tree, params)
    if variant is ScanVariant.MATRIX:
        down = _solve(eye - m_down, np.diag(1.0 - a_rooted) @ up)
    else:
        down = (a_rooted[:, None] * (_parent_pick(tree) - eye) + eye) @ up
    return params.c_out[:, None] * down


def scan_backward(
    fmap: FeatureMap,
    tree: SpanningTree,
    params: ScanParams,
    variant: ScanVariant,
    grad_y: FeatureMap,
) -> tuple[FeatureMap, ScanGradients]:
    """Exact gradients of sum(grad_y * tree_scan(x)) via reverse traversals.

    The top-down adjoint runs leaf-to-root and the bottom-up adjoint runs
    root-to-leaf. Gate gradients are taken with respect to the normalized
    a_bar values.
    """
    variant = _check_variant(variant)
    if variant is not ScanVariant.MATRIX:
        raise ContractError("backward pass is defined for the matrix-consistent variant")
    _check_contract(fmap, tree, params)
    if grad_y.data.shape != fmap.data.shape:
        raise DimensionError(
            f"grad_y shape {grad_y.data.shape} does not match input {fmap.data.shape}"
        )
    kern = kernels()
    x = fmap.nodes
    h_lr = kern.scan_up_pass(x, params.a_bar, params.b_bar, tree.order, tree.parent, tree.level_ptr)
    h = kern.scan_down_pass(h_lr, params.a_bar, tree.order, tree.parent, tree.level_ptr, False)
    g_x, g_a, g_b, g_c = kern.scan_backward_pass(
        x,
        params.a_bar,
        params.b_bar,
        params.c_out,
        h_lr,
        h,
        grad_y.nodes,
        tree.order,
        tree.parent,
        tree.level_ptr,
    )
    grad_x = FeatureMap(g_x.reshape(fmap.height, fmap.width, fmap.channels))
    return grad_x, ScanGradients(a_bar=g_a, b_bar=g_b, c_out=g_c)
