"""Baseline scan orders and the 1D chain recurrence along them.

Four fixed traversals of an H x W grid serve as comparison points for the
tree-aware scan: plain raster order, boustrophedon ("continuous") order,
anti-diagonal order, and a nested S-shape that snakes through block x block
tiles and snakes within each tile. Each is a bijection over node indices;
`adjacency_violations` counts consecutive pairs that are not 4-adjacent,
which quantifies how well an order preserves spatial continuity.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .errors import DimensionError
from .scan import ScanParams
from .tensors import FeatureMap


class ScanStrategy(enum.Enum):
    RASTER = "raster"
    CONTINUOUS = "continuous"
    DIAGONAL = "diagonal"
    NESTED_S = "nesteds"


@dataclass(frozen=True)
class ScanPermutation:
    order: np.ndarray
    strategy: ScanStrategy
    block: int | None = None

    def __post_init__(self):
        arr = np.array(self.order, dtype=np.int64, copy=True)
        arr.flags.writeable = False
        object.__setattr__(self, "order", arr)

    def __len__(self) -> int:
        return len(self.order)


def _continuous_grid(height: int, width: int) -> np.ndarray:
    idx = np.arange(height * width, dtype=np.int64).reshape(height, width)
    idx[1::2] = idx[1::2, ::-1]
    return idx.ravel()


def _diagonal_order(height: int, width: int) -> np.ndarray:
    rows, cols = np.divmod(np.arange(height * width, dtype=np.int64), width)
    # anti-diagonals r+c ascending, ascending row within each
    return np.lexsort((rows, rows + cols))


def _nested_s_order(height: int, width: int, block: int) -> np.ndarray:
    idx = np.arange(height * width, dtype=np.int64).reshape(height, width)
    tiles_down = -(-height // block)
    tiles_across = -(-width // block)
    chunks = []
    for tr in range(tiles_down):
        tcs = range(tiles_across) if tr % 2 == 0 else range(tiles_across - 1, -1, -1)
        for tc in tcs:
            tile = idx[tr * block : (tr + 1) * block, tc * block : (tc + 1) * block].copy()
            tile[1::2] = tile[1::2, ::-1]
            chunks.append(tile.ravel())
    return np.concatenate(chunks)


def make_permutation(
    strategy: ScanStrategy, height: int, width: int, block: int = 2
) -> ScanPermutation:
    """Build one of the fixed scan orders for an H x W grid."""
    if height < 1 or width < 1:
        raise DimensionError(f"grid dims must be positive, got {height}x{width}")
    if strategy is ScanStrategy.RASTER:
        order = np.arange(height * width, dtype=np.int64)
    elif strategy is ScanStrategy.CONTINUOUS:
        order = _continuous_grid(height, width)
    elif strategy is ScanStrategy.DIAGONAL:
        order = _diagonal_order(height, width)
    elif strategy is ScanStrategy.NESTED_S:
        if block < 1:
            raise DimensionError(f"block must be positive, got {block}")
        order = _nested_s_order(height, width, block)
    else:
        raise DimensionError(f"unknown strategy {strategy!r}")
    used_block = block if strategy is ScanStrategy.NESTED_S else None
    return ScanPermutation(order=order, strategy=strategy, block=used_block)


def adjacency_violations(perm: ScanPermutation, height: int, width: int) -> int:
    """Consecutive order entries that are not grid-adjacent (Manhattan > 1)."""
    rows, cols = np.divmod(perm.order, width)
    manhattan = np.abs(np.diff(rows)) + np.abs(np.diff(cols))
    return int(np.count_nonzero(manhattan != 1))


def sequence_scan(fmap: FeatureMap, perm: ScanPermutation, params: ScanParams) -> FeatureMap:
    """Chain recurrence h_i = a_bar_i * h_prev + b_bar_i * x_i along the order.

    The output y_i = c_out_i * h_i is returned in grid layout regardless of
    the traversal order.
    """
    if len(perm) != fmap.node_count:
        raise DimensionError(
            f"permutation covers {len(perm)} nodes, map has {fmap.node_count}"
        )
    if params.node_count != fmap.node_count:
        raise DimensionError(
            f"params cover {params.node_count} nodes, map has {fmap.node_count}"
        )
    h = kernels().sequence_scan_pass(fmap.nodes, params.a_bar, params.b_bar, perm.order)
    y = params.c_out[:, None] * h
    return FeatureMap(y.reshape(fmap.height, fmap.width, fmap.channels))
