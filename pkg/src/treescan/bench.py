"""Runtime benchmark across scan strategies, with optional backend comparison.

Every input is derived from a SplitMix64 seed so runs reproduce exactly:
identical seeds give identical maps, identical parameters, and identical
output checksums. Each (size, strategy) cell performs one warm-up run that
is excluded from statistics (this also absorbs JIT compilation), then `reps`
timed runs on a monotonic clock. The checksum is the first 8 hex digits of
a 64-bit FNV-1a over the output's float64 bytes.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import rng
from .backend import active_backend, kernels, numba_available, set_backend
from .baselines import ScanStrategy, adjacency_violations, make_permutation, sequence_scan
from .errors import DimensionError
from .mst import mst_tree
from .scan import ScanVariant, make_params, normalize_gates, tree_scan
from .tensors import FeatureMap

STRATEGY_NAMES = ("tree", "raster", "continuous", "diagonal", "nesteds")
DEFAULT_CHANNELS = 4


@dataclass(frozen=True)
class BenchRecord:
    strategy: str
    backend: str
    nodes: int
    reps: int
    median_s: float
    min_s: float
    max_s: float
    checksum: str

    def __post_init__(self):
        if self.reps < 3:
            raise DimensionError("benchmark records need at least 3 repetitions")
        if not self.min_s <= self.median_s <= self.max_s:
            raise AssertionError("timing order violated")


def checksum_bytes(buf: bytes) -> str:
    """First 8 hex digits of the 64-bit FNV-1a of `buf`."""
    digest = kernels().fnv1a64(np.frombuffer(buf, dtype=np.uint8))
    return f"{digest:016x}"[:8]


def _seed_for(seed: int, height: int, width: int) -> int:
    # one derived stream per grid size, stable across strategy sets
    return int(rng.splitmix64(seed ^ (height * 0x1_0000 + width), 1)[0])


def _make_inputs(seed: int, height: int, width: int, channels: int):
    size_seed = _seed_for(seed, height, width)
    fmap = FeatureMap(rng.random_grid(size_seed, height, width, channels))
    weights = rng.uniform_signed(size_seed ^ 0x5EED, 3 * channels).reshape(3, channels)
    params = normalize_gates(make_params(fmap, *weights))
    return fmap, params


def run_strategy(
    name: str,
    fmap: FeatureMap,
    params,
    variant: ScanVariant = ScanVariant.MATRIX,
    root: int = 0,
    block: int = 2,
) -> FeatureMap:
    """One end-to-end application: order construction plus the scan itself."""
    if name == "tree":
        tree = mst_tree(fmap, root=root)
        return tree_scan(fmap, tree, params, variant)
    strategy = ScanStrategy(name)
    perm = make_permutation(strategy, fmap.height, fmap.width, block=block)
    return sequence_scan(fmap, perm, params)


def cmd_bench(
    sizes: list[tuple[int, int]],
    strategies: list[str] | None = None,
    reps: int = 5,
    seed: int = 1,
    channels: int = DEFAULT_CHANNELS,
    variant: ScanVariant = ScanVariant.MATRIX,
    root: int = 0,
    block: int = 2,
    compare_backends: bool = False,
) -> list[BenchRecord]:
    """Benchmark every size x strategy cell; one record per cell per backend."""
    strategies = list(strategies) if strategies else list(STRATEGY_NAMES)
    if reps < 3:
        raise DimensionError("reps must be at least 3")
    for h, w in sizes:
        if h < 1 or w < 1:
            raise DimensionError(f"sizes must be positive, got {h}x{w}")
    for name in strategies:
        if name not in STRATEGY_NAMES:
            raise DimensionError(f"unknown strategy {name!r}, expected one of {STRATEGY_NAMES}")

    backends = [active_backend()]
    if compare_backends:
        backends = ["numba", "numpy"] if numba_available() else ["numpy"]

    records = []
    previous = active_backend()
    try:
        for backend_name in backends:
            set_backend(backend_name)
            for height, width in sizes:
                fmap, params = _make_inputs(seed, height, width, channels)
                for name in strategies:
                    run_strategy(name, fmap, params, variant, root, block)  # warm-up
                    times = []
                    output = None
                    for _ in range(reps):
                        t0 = time.perf_counter()
                        output = run_strategy(name, fmap, params, variant, root, block)
                        times.append(time.perf_counter() - t0)
                    records.append(
                        BenchRecord(
                            strategy=name,
                            backend=backend_name,
                            nodes=height * width,
                            reps=reps,
                            median_s=float(np.median(times)),
                            min_s=float(np.min(times)),
                            max_s=float(np.max(times)),
                            checksum=checksum_bytes(output.data.tobytes()),
                        )
                    )
    finally:
        set_backend(previous)
    return records


def records_to_csv(records: list[BenchRecord]) -> str:
    lines = ["strategy,backend,nodes,reps,median_s,min_s,max_s,checksum"]
    for r in records:
        lines.append(
            f"{r.strategy},{r.backend},{r.nodes},{r.reps},"
            f"{r.median_s:.9f},{r.min_s:.9f},{r.max_s:.9f},{r.checksum}"
        )
    return "\n".join(lines) + "\n"


def continuity_report(sizes: list[tuple[int, int]], block: int = 2) -> str:
    """Adjacency-violation counts per permutation strategy and size."""
    lines = ["strategy,height,width,adjacency_violations"]
    for height, width in sizes:
        for strategy in ScanStrategy:
            perm = make_permutation(strategy, height, width, block=block)
            lines.append(
                f"{strategy.value},{height},{width},{adjacency_violations(perm, height, width)}"
            )
    return "\n".join(lines) + "\n"
