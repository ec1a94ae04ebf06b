"""Command-line interface.

Subcommands: scan, baseline, mst, gradcheck, metrics, mos, bench. Every
subcommand is deterministic given its flags and seed (timings excluded).
Exit codes: 0 success, 1 validation/usage error, 2 internal assertion
failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import rng
from .backend import set_backend
from .baselines import ScanStrategy, make_permutation, sequence_scan
from .bench import DEFAULT_CHANNELS, STRATEGY_NAMES, cmd_bench, continuity_report, records_to_csv
from .errors import ContractError, SolverError
from .metrics import align_range, depth_metrics
from .mos import (
    read_candidate_csv,
    read_score_csv,
    run_mos_pipeline,
    select_depth_maps,
    write_mos_csv,
    write_selection_csv,
)
from .mst import build_grid_graph, boruvka_mst, mst_tree, root_and_order
from .scan import ScanVariant, dense_operator, make_params, normalize_gates, scan_backward, tree_scan
from .tensors import DepthMap, FeatureMap, load_pgm, load_tensor, save_pgm, save_tensor

GRADCHECK_THRESHOLD = 1e-4


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage problems, not argparse's 2
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _variant(name: str) -> ScanVariant:
    return ScanVariant.MATRIX if name == "matrix" else ScanVariant.LITERAL


def _seeded_params(fmap: FeatureMap, seed: int):
    weights = rng.uniform_signed(seed, 3 * fmap.channels).reshape(3, fmap.channels)
    return normalize_gates(make_params(fmap, *weights))


def _write_outputs(out: FeatureMap, output_path, pgm_path) -> None:
    if output_path:
        save_tensor(out, output_path)
    if pgm_path:
        channel0 = out.data[:, :, 0]
        save_pgm(DepthMap(channel0 - channel0.min()), pgm_path)


def _cmd_scan(args) -> int:
    fmap = load_tensor(args.input)
    params = _seeded_params(fmap, args.seed)
    tree = mst_tree(fmap, root=args.root)
    out = tree_scan(fmap, tree, params, _variant(args.variant))
    _write_outputs(out, args.output, args.pgm)
    return 0


def _cmd_baseline(args) -> int:
    fmap = load_tensor(args.input)
    params = _seeded_params(fmap, args.seed)
    perm = make_permutation(ScanStrategy(args.strategy), fmap.height, fmap.width, args.block)
    out = sequence_scan(fmap, perm, params)
    _write_outputs(out, args.output, args.pgm)
    return 0


def _cmd_mst(args) -> int:
    fmap = load_tensor(args.input)
    edges = build_grid_graph(fmap)
    tree_edges = boruvka_mst(edges, fmap.node_count)
    root_and_order(tree_edges, args.root, fmap.node_count)  # validates the root
    print(f"root {args.root}")
    for edge in tree_edges:
        print(f"{edge.u} {edge.v} {edge.weight:.17g}")
    return 0


def _cmd_gradcheck(args) -> int:
    size_seed = args.seed
    fmap = FeatureMap(rng.random_grid(size_seed, args.height, args.width, args.channels))
    params = _seeded_params(fmap, size_seed ^ 0xA11CE)
    tree = mst_tree(fmap, root=0)
    grad_y = FeatureMap(
        rng.uniform_signed(size_seed ^ 0xFEED, fmap.node_count * fmap.channels).reshape(
            fmap.height, fmap.width, fmap.channels
        )
        + 2.0  # keep strictly positive so FeatureMap finiteness is trivial
    )
    grad_x, grads = scan_backward(fmap, tree, params, ScanVariant.MATRIX, grad_y)

    def loss_for(p):
        return float(np.sum(grad_y.data * tree_scan(fmap, tree, p, ScanVariant.MATRIX).data))

    step = 1e-5
    worst = 0.0
    for name in ("a_bar", "b_bar", "c_out"):
        base = getattr(params, name)
        analytic = getattr(grads, name)
        fd = np.empty_like(base)
        for i in range(len(base)):
            bumped = base.copy()
            bumped[i] = base[i] + step
            hi = loss_for(replace(params, **{name: bumped}))
            bumped[i] = base[i] - step
            lo = loss_for(replace(params, **{name: bumped}))
            fd[i] = (hi - lo) / (2 * step)
        denom = np.max(np.abs(fd)) + 1e-12
        worst = max(worst, float(np.max(np.abs(analytic - fd)) / denom))

    operator = dense_operator(tree, params, ScanVariant.MATRIX)
    transpose_grad = (operator.T @ grad_y.nodes).reshape(grad_x.data.shape)
    denom = np.max(np.abs(transpose_grad)) + 1e-12
    worst = max(worst, float(np.max(np.abs(grad_x.data - transpose_grad)) / denom))

    print(f"max_rel_error {worst:.6e}")
    return 0 if worst < GRADCHECK_THRESHOLD else 1


def _load_depth(path) -> DepthMap:
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic[:2] == b"P5":
        return load_pgm(path)
    fmap = load_tensor(path)
    if fmap.channels != 1:
        raise UsageError(f"{path}: metrics need a single-channel tensor, got {fmap.channels}")
    return DepthMap(fmap.data[:, :, 0])


def _cmd_metrics(args) -> int:
    pred = _load_depth(args.pred)
    ref = _load_depth(args.ref)
    if args.align:
        pred = align_range(pred, ref)
    report = depth_metrics(pred, ref, eps=args.eps)
    values = report.as_dict()
    if args.csv:
        # column order: rmse,rmse_log,a_rel,s_rel,log10,delta1,delta2,delta3
        print(",".join(f"{v:.12g}" for v in values.values()))
    else:
        for name, value in values.items():
            print(f"{name} {value:.12g}")
    return 0


def _cmd_mos(args) -> int:
    table = read_score_csv(args.scores)
    result = run_mos_pipeline(
        table,
        outlier_rate_cap=args.outlier_cap,
        population_sigma=(args.sigma == "population"),
        screen=not args.no_screen,
    )
    if args.mos_out:
        write_mos_csv(result, args.mos_out)
    if args.candidates and args.select_out:
        selections = select_depth_maps(read_candidate_csv(args.candidates))
        write_selection_csv(selections, args.select_out)
    kept = int(result.rater_valid.sum())
    print(f"raters {kept} excluded {result.excluded_count} items {int(result.item_valid.sum())}")
    return 0


def _parse_sizes(text: str) -> list[tuple[int, int]]:
    sizes = []
    for chunk in text.split(","):
        try:
            h, w = chunk.lower().split("x")
            sizes.append((int(h), int(w)))
        except ValueError as exc:
            raise UsageError(f"bad size {chunk!r}, expected HxW") from exc
    return sizes


def _cmd_bench(args) -> int:
    sizes = _parse_sizes(args.sizes)
    strategies = args.strategies.split(",") if args.strategies else None
    records = cmd_bench(
        sizes,
        strategies=strategies,
        reps=args.reps,
        seed=args.seed,
        channels=args.channels,
        variant=_variant(args.variant),
        root=args.root,
        block=args.block,
        compare_backends=args.compare_backends,
    )
    csv_text = records_to_csv(records)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
    else:
        sys.stdout.write(csv_text)
    # locality diagnostics go to stderr so the CSV stays machine-readable
    sys.stderr.write(continuity_report(sizes, block=args.block))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="treescan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common_io(p):
        p.add_argument("--input", required=True, help="input TSR1 tensor")
        p.add_argument("--output", help="output TSR1 tensor")
        p.add_argument("--pgm", help="optional PGM visualization of channel 0")
        p.add_argument("--seed", type=int, default=1, help="parameter seed")

    p = sub.add_parser("scan", help="tree-aware scan of a feature map")
    common_io(p)
    p.add_argument("--root", type=int, default=0)
    p.add_argument("--variant", choices=["matrix", "literal"], default="matrix")
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("baseline", help="fixed-order baseline scan")
    common_io(p)
    p.add_argument("--strategy", choices=[s.value for s in ScanStrategy], required=True)
    p.add_argument("--block", type=int, default=2)
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("mst", help="print the minimum spanning tree")
    p.add_argument("--input", required=True)
    p.add_argument("--root", type=int, default=0)
    p.set_defaults(func=_cmd_mst)

    p = sub.add_parser("gradcheck", help="verify analytic gradients against finite differences")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--height", type=int, default=4)
    p.add_argument("--width", type=int, default=4)
    p.add_argument("--channels", type=int, default=2)
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("metrics", help="depth metrics between two maps (TSR1 or PGM)")
    p.add_argument("--pred", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--csv", action="store_true", help="machine-readable two-line CSV")
    p.add_argument("--align", action="store_true", help="min-max align pred to ref first")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("mos", help="subjective-score pipeline over CSV tables")
    p.add_argument("--scores", required=True, help='CSV with header "rater,item,dimension,score"')
    p.add_argument("--candidates", help='CSV with header "item,source,score"')
    p.add_argument("--mos-out", help="per-item MOS CSV destination")
    p.add_argument("--select-out", help="selection CSV destination")
    p.add_argument("--sigma", choices=["population", "sample"], default="population")
    p.add_argument("--outlier-cap", type=float, default=0.05)
    p.add_argument("--no-screen", action="store_true", help="skip rater screening")
    p.set_defaults(func=_cmd_mos)

    p = sub.add_parser("bench", help="runtime benchmark across strategies")
    p.add_argument("--sizes", required=True, help="HxW[,HxW...]")
    p.add_argument("--strategies", help=f"comma list from {','.join(STRATEGY_NAMES)}")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--channels", type=int, default=DEFAULT_CHANNELS)
    p.add_argument("--variant", choices=["matrix", "literal"], default="matrix")
    p.add_argument("--root", type=int, default=0)
    p.add_argument("--block", type=int, default=2)
    p.add_argument("--output", help="CSV destination (default stdout)")
    p.add_argument("--backend", choices=["numba", "numpy"], help="force a kernel backend")
    p.add_argument("--compare-backends", action="store_true")
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "backend", None):
            set_backend(args.backend)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except BrokenPipeError:
        return 0
    except (ContractError, SolverError, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:  # console-script hook
    sys.exit(main())


if __name__ == "__main__":
    entry()
