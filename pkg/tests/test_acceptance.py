"""Acceptance suite: one test per release criterion, each at its stated
tolerance. Run with `pytest tests/test_acceptance.py -v -s` to see the
per-criterion pass lines and measured values.
"""

import math
import time

import numpy as np
import pytest

import oracle_utils
from oracle_utils import (
    direct_params,
    exhaustive_min_spanning_weight,
    kruskal_mst,
    norm_gap,
    random_instance,
    relative_gap,
)
from treescan import (
    DepthMap,
    EdgeList,
    FeatureMap,
    ScanStrategy,
    ScanVariant,
    adjacency_violations,
    boruvka_mst,
    build_grid_graph,
    cmd_bench,
    dense_operator,
    depth_metrics,
    iqa_losses,
    loss_final,
    loss_grad,
    loss_mae,
    loss_ssim,
    make_permutation,
    mst_tree,
    normalize_gates,
    oracle_scan,
    propagation_matrices,
    rescale_scores,
    scan_backward,
    select_depth_maps,
    tree_scan,
    zscore_normalize,
)
from treescan.mos import ScoreTable

N_ORACLE_INSTANCES = 500
_instance_cache = None


def oracle_instances():
    global _instance_cache
    if _instance_cache is None:
        _instance_cache = [random_instance(seed) for seed in range(N_ORACLE_INSTANCES)]
    return _instance_cache


def report(label, detail=""):
    suffix = f" ({detail})" if detail else ""
    print(f"\nACCEPTANCE {label}: PASS{suffix}")


def test_c1_oracle_equivalence():
    start = time.perf_counter()
    worst = 0.0
    for fmap, tree, params in oracle_instances():
        for variant in ScanVariant:
            fast = tree_scan(fmap, tree, params, variant)
            dense = oracle_scan(fmap, tree, params, variant)
            worst = max(worst, relative_gap(fast.data, dense.data))
    elapsed = time.perf_counter() - start
    assert worst < 1e-10
    assert elapsed < 30.0
    report("C1 oracle equivalence", f"max rel err {worst:.3e}, {elapsed:.1f}s")


def test_c2_convergence_conditions():
    worst_gate = 0.0
    worst_norm = 0.0
    for fmap, tree, params in oracle_instances():
        peak = float(np.max(np.abs(params.a_bar)))
        assert peak < 0.25
        m_up, m_down = propagation_matrices(tree, params)
        up_norm = float(np.abs(m_up).sum(axis=1).max())
        down_norm = float(np.abs(m_down).sum(axis=1).max())
        assert up_norm < 1.0
        assert down_norm < 1.0
        # the dense solves must never report singularity
        for variant in ScanVariant:
            oracle_scan(fmap, tree, params, variant)
        worst_gate = max(worst_gate, peak)
        worst_norm = max(worst_norm, up_norm, down_norm)
    report(
        "C2 convergence conditions",
        f"gate margin {0.25 - worst_gate:.2e}, max norm {worst_norm:.4f}",
    )


def test_c3_mst_correctness():
    rng = np.random.default_rng(2024)
    small_grids = [(1, 2), (2, 1), (2, 2), (1, 3), (3, 1), (2, 3), (3, 2), (3, 3)]
    draws_per_grid = 100 // len(small_grids) + 1
    checked = 0
    for h, w in small_grids:
        n = h * w
        base = build_grid_graph(FeatureMap(np.ones((h, w, 1))))
        for _ in range(draws_per_grid):
            edges = EdgeList(base.u, base.v, rng.random(len(base)), base.id)
            tree = boruvka_mst(edges, n)
            expected = exhaustive_min_spanning_weight(edges.u, edges.v, edges.weight, n)
            assert tree.total_weight() == pytest.approx(expected, abs=1e-12)
            checked += 1
    assert checked >= 100

    for seed in range(100):
        fmap = FeatureMap(oracle_utils.random_grid(seed, 8, 8, 3))
        edges = build_grid_graph(fmap)
        tree = boruvka_mst(edges, 64)
        total, ids = kruskal_mst(edges.u, edges.v, edges.weight, edges.id, 64)
        assert tree.total_weight() == pytest.approx(total, abs=1e-9)
        assert sorted(tree.id.tolist()) == ids

    features = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.7071, 0.7071]])
    worked = boruvka_mst(build_grid_graph(FeatureMap(features.reshape(2, 2, 2))), 4)
    assert [(e.u, e.v) for e in worked] == [(0, 1), (1, 3), (2, 3)]
    assert worked.total_weight() == pytest.approx(0.5858, abs=1e-3)
    report("C3 MST correctness", f"{checked} exhaustive + 100 kruskal draws")


def test_c4_gradient_checks():
    from dataclasses import replace

    step = 1e-5
    worst_fd = 0.0
    worst_transpose = 0.0
    for seed in range(50):
        rng = np.random.default_rng(seed)
        channels = int(rng.integers(1, 5))
        fmap = FeatureMap(oracle_utils.random_grid(seed, 4, 4, channels))
        tree = mst_tree(fmap, root=int(rng.integers(16)))
        weights = oracle_utils.uniform_signed(seed ^ 0xC0FFEE, 3 * channels).reshape(3, channels)
        params = normalize_gates(
            oracle_utils.make_params(fmap, weights[0] * 2, weights[1], weights[2])
        )
        grad_y = FeatureMap(rng.normal(size=fmap.data.shape) + 2)
        grad_x, grads = scan_backward(fmap, tree, params, ScanVariant.MATRIX, grad_y)

        def loss(p, x=fmap):
            return float(np.sum(grad_y.data * tree_scan(x, tree, p, ScanVariant.MATRIX).data))

        for name in ("a_bar", "b_bar", "c_out"):
            base = getattr(params, name)
            fd = np.empty_like(base)
            for i in range(base.size):
                hi = base.copy()
                hi[i] += step
                lo = base.copy()
                lo[i] -= step
                fd[i] = (
                    loss(replace(params, **{name: hi})) - loss(replace(params, **{name: lo}))
                ) / (2 * step)
            worst_fd = max(worst_fd, norm_gap(getattr(grads, name), fd))

        fd_x = np.empty_like(fmap.data)
        flat = fd_x.reshape(-1)
        base = fmap.data.reshape(-1)
        for i in range(base.size):
            hi = base.copy()
            hi[i] += step
            lo = base.copy()
            lo[i] -= step
            flat[i] = (
                loss(params, FeatureMap(hi.reshape(fmap.data.shape)))
                - loss(params, FeatureMap(lo.reshape(fmap.data.shape)))
            ) / (2 * step)
        worst_fd = max(worst_fd, norm_gap(grad_x.data, fd_x))

        operator = dense_operator(tree, params, ScanVariant.MATRIX)
        expected = (operator.T @ grad_y.nodes).reshape(fmap.data.shape)
        worst_transpose = max(worst_transpose, norm_gap(grad_x.data, expected))

    assert worst_fd < 1e-5
    assert worst_transpose < 1e-10
    report("C4 gradient checks", f"fd {worst_fd:.3e}, transpose {worst_transpose:.3e}")


def test_c5_identity_and_linearity():
    rng = np.random.default_rng(55)
    worst = 0.0
    for trial in range(100):
        h, w = int(rng.integers(2, 8)), int(rng.integers(2, 8))
        c = int(rng.integers(1, 4))
        x1 = rng.random((h, w, c))
        x2 = rng.random((h, w, c))
        fmap = FeatureMap(x1)
        tree = mst_tree(fmap, root=int(rng.integers(h * w)))
        n = h * w

        identity = direct_params(np.zeros(n), np.ones(n), np.ones(n))
        for variant in ScanVariant:
            out = tree_scan(fmap, tree, identity, variant)
            assert np.array_equal(out.data, fmap.data)

        params = direct_params(
            rng.uniform(-0.24, 0.24, n), rng.normal(size=n), rng.normal(size=n)
        )
        alpha, beta = float(rng.normal()), float(rng.normal())
        combined = tree_scan(FeatureMap(alpha * x1 + beta * x2), tree, params, ScanVariant.MATRIX)
        separate = (
            alpha * tree_scan(fmap, tree, params, ScanVariant.MATRIX).data
            + beta * tree_scan(FeatureMap(x2), tree, params, ScanVariant.MATRIX).data
        )
        worst = max(worst, norm_gap(combined.data, separate))
    assert worst < 1e-12
    report("C5 identity and linearity", f"superposition gap {worst:.3e}")


def test_c6_metric_and_loss_golden_values():
    rng = np.random.default_rng(66)
    same = DepthMap(rng.uniform(0.5, 3.0, (6, 6)))
    report_same = depth_metrics(same, same)
    assert report_same.rmse == 0.0
    assert report_same.rmse_log == 0.0
    assert report_same.a_rel == 0.0
    assert report_same.s_rel == 0.0
    assert report_same.log10_err == 0.0
    assert report_same.delta1 == report_same.delta2 == report_same.delta3 == 1.0

    ref = DepthMap(np.ones((5, 5)))
    pred = DepthMap(np.full((5, 5), 2.0))
    doubled = depth_metrics(pred, ref)
    assert doubled.a_rel == pytest.approx(1.0, abs=1e-12)
    assert abs(doubled.log10_err - math.log10(2.0)) < 1e-12
    assert doubled.delta3 == 0.0

    y = np.array([1.0, 4.0, 2.0, 5.0, 3.0])
    _, l_plcc, _ = iqa_losses(-y, y)
    assert l_plcc == pytest.approx(2.0, abs=1e-12)

    a = DepthMap(rng.uniform(0.5, 3.0, (7, 6)))
    b = DepthMap(rng.uniform(0.5, 3.0, (7, 6)))
    assert loss_final(a, b) == loss_mae(a, b) + loss_grad(a, b) + loss_ssim(a, b)
    report("C6 metric and loss golden values")


def test_c7_mos_pipeline():
    rng = np.random.default_rng(77)
    scores = rng.integers(1, 6, size=(8, 40, 2)).astype(float)
    table = ScoreTable(
        tuple(f"r{i}" for i in range(8)), tuple(f"i{j}" for j in range(40)), scores
    )
    normalized = zscore_normalize(table)
    for r in range(8):
        for d in range(2):
            vals = normalized.values[r, :, d]
            vals = vals[~np.isnan(vals)]
            assert abs(vals.mean()) < 1e-12
    rescaled = rescale_scores(normalized)
    for d in range(2):
        vals = rescaled.values[:, :, d]
        vals = vals[~np.isnan(vals)]
        assert vals.min() == 1.0
        assert vals.max() == 100.0

    candidates = {}
    for j in range(1000):
        k = int(rng.integers(1, 7))
        candidates[f"i{j}"] = [(f"s{s}", float(rng.uniform(40, 110))) for s in range(k)]
    records = {r.item: r for r in select_depth_maps(candidates)}
    for item, cands in candidates.items():
        best_score = max(score for _, score in cands)
        winners = sorted(src for src, score in cands if score == best_score)
        assert records[item].source == winners[0]
        assert records[item].retained == (best_score >= 90.0)
    report("C7 MOS pipeline", "1000-item selection vs naive oracle")


def test_c8_runtime_scaling():
    start = time.perf_counter()
    records = cmd_bench(
        sizes=[(64, 64), (128, 128), (256, 256)],
        strategies=["tree"],
        reps=5,
        seed=1,
    )
    elapsed = time.perf_counter() - start
    medians = [r.median_s for r in records]
    ratios = [medians[i + 1] / medians[i] for i in range(2)]
    assert all(r <= 5.0 for r in ratios), ratios
    assert elapsed < 300.0
    report(
        "C8 runtime scaling",
        f"medians {['%.4fs' % m for m in medians]}, ratios {['%.2f' % r for r in ratios]}",
    )


def test_c9_baseline_permutations():
    rng = np.random.default_rng(99)
    for _ in range(50):
        h = int(rng.integers(1, 16))
        w = int(rng.integers(2, 16))
        block = int(rng.integers(1, 5))
        for strategy in ScanStrategy:
            perm = make_permutation(strategy, h, w, block=block)
            assert sorted(perm.order.tolist()) == list(range(h * w))
        continuous = make_permutation(ScanStrategy.CONTINUOUS, h, w)
        assert adjacency_violations(continuous, h, w) == 0
        raster = make_permutation(ScanStrategy.RASTER, h, w)
        assert adjacency_violations(raster, h, w) == h - 1
    report("C9 baseline permutations", "50 random sizes")
