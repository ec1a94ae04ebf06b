"""Tree-aware selective scan over feature grids.

State propagates along a data-dependent minimum spanning tree instead of a
fixed 1D unrolling: a bottom-up pass aggregates gated child states, a
top-down pass blends in parent (and thereby sibling) context, and an output
projection maps latent states back to the grid. The package also ships the
fixed scan orders used as baselines, a dense LU-based oracle, exact
gradients, depth evaluation metrics and losses, and the subjective-score
curation pipeline, all behind a single `treescan` CLI.

Hot kernels are numba-compiled by default; set TREESCAN_BACKEND=numpy to run
the pure-numpy fallback.
"""

from .backend import active_backend, numba_available, set_backend
from .baselines import (
    ScanPermutation,
    ScanStrategy,
    adjacency_violations,
    make_permutation,
    sequence_scan,
)
from .bench import BenchRecord, cmd_bench, records_to_csv
from .errors import (
    ConnectivityError,
    ContractError,
    DataError,
    DimensionError,
    FormatError,
    SolverError,
    UndefinedStatisticError,
)
from .metrics import (
    MetricReport,
    align_range,
    depth_metrics,
    iqa_losses,
    loss_final,
    loss_final_grad,
    loss_grad,
    loss_mae,
    loss_ssim,
)
from .mos import (
    MosResult,
    ScoreTable,
    SelectionRecord,
    aggregate_mos,
    filter_raters,
    rescale_scores,
    run_mos_pipeline,
    select_depth_maps,
    zscore_normalize,
)
from .mst import (
    EdgeList,
    SpanningTree,
    WeightedEdge,
    boruvka_mst,
    build_grid_graph,
    cosine_distance,
    mst_tree,
    root_and_order,
)
from .scan import (
    ScanGradients,
    ScanParams,
    ScanState,
    ScanVariant,
    dense_operator,
    make_params,
    normalize_gates,
    oracle_scan,
    project_output,
    propagation_matrices,
    scan_backward,
    scan_down,
    scan_up,
    tree_scan,
)
from .tensors import (
    DepthMap,
    FeatureMap,
    load_pgm,
    load_tensor,
    node_id,
    node_rc,
    save_pgm,
    save_tensor,
)

__version__ = "0.1.0"
