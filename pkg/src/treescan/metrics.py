"""Depth evaluation metrics, training losses, and score-regression losses.

Error metrics (RMSE, log RMSE, absolute/squared relative error, log10
error) and threshold accuracies delta_1..3 follow the standard monocular
depth conventions; zero pixels are epsilon-guarded inside ratios and logs.
The training loss is the unweighted sum of mean absolute error, a central
difference gradient loss, and a structural-similarity loss with an 11x11
Gaussian window (sigma 1.5). Analytic gradients of the full loss with
respect to the prediction are provided; the SSIM term's filtering uses a
hand-rolled symmetric-padded Gaussian so its exact adjoint is available.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, UndefinedStatisticError
from .tensors import DepthMap

DEFAULT_EPS = 1e-8
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
DELTA_BASE = 1.25


@dataclass(frozen=True)
class MetricReport:
    rmse: float
    rmse_log: float
    a_rel: float
    s_rel: float
    log10_err: float
    delta1: float
    delta2: float
    delta3: float

    def __post_init__(self):
        if not self.delta1 <= self.delta2 <= self.delta3:
            raise AssertionError("threshold accuracies must nest")

    def as_dict(self) -> dict[str, float]:
        return {
            "rmse": self.rmse,
            "rmse_log": self.rmse_log,
            "a_rel": self.a_rel,
            "s_rel": self.s_rel,
            "log10": self.log10_err,
            "delta1": self.delta1,
            "delta2": self.delta2,
            "delta3": self.delta3,
        }


def _paired(pred: DepthMap, ref: DepthMap) -> tuple[np.ndarray, np.ndarray]:
    if pred.data.shape != ref.data.shape:
        raise DimensionError(
            f"shape mismatch: pred {pred.data.shape} vs ref {ref.data.shape}"
        )
    return pred.data, ref.data


def align_range(pred: DepthMap, ref: DepthMap) -> DepthMap:
    """Min-max map the prediction onto the reference range (optional helper)."""
    x, y = _paired(pred, ref)
    span = x.max() - x.min()
    if span == 0.0:
        return DepthMap(np.full_like(x, y.min()))
    t = (x - x.min()) / span
    return DepthMap(t * (y.max() - y.min()) + y.min())


def depth_metrics(pred: DepthMap, ref: DepthMap, eps: float = DEFAULT_EPS) -> MetricReport:
    """Standard error and accuracy metrics between prediction and reference."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    x, y = _paired(pred, ref)
    x_safe = np.where(x == 0.0, eps, x)
    y_safe = np.where(y == 0.0, eps, y)
    diff = y - x
    rmse = float(np.sqrt(np.mean(diff**2)))
    rmse_log = float(np.sqrt(np.mean((np.log(y_safe) - np.log(x_safe)) ** 2)))
    a_rel = float(np.mean(np.abs(diff) / y_safe))
    s_rel = float(np.mean(diff**2 / y_safe))
    log10_err = float(np.mean(np.abs(np.log10(y_safe) - np.log10(x_safe))))
    ratio = np.maximum(x_safe / y_safe, y_safe / x_safe)
    deltas = [float(np.mean(ratio < DELTA_BASE**k)) for k in (1, 2, 3)]
    return MetricReport(rmse, rmse_log, a_rel, s_rel, log10_err, *deltas)


def loss_mae(pred: DepthMap, ref: DepthMap) -> float:
    x, y = _paired(pred, ref)
    return float(np.mean(np.abs(y - x)))


def _central_diffs(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """|central difference| per pixel, horizontal and vertical, edge-replicated."""
    padded_w = np.pad(img, ((0, 0), (1, 1)), mode="edge")
    padded_h = np.pad(img, ((1, 1), (0, 0)), mode="edge")
    dh = np.abs(padded_w[:, 2:] - padded_w[:, :-2])
    dv = np.abs(padded_h[2:, :] - padded_h[:-2, :])
    return dh, dv


def loss_grad(pred: DepthMap, ref: DepthMap) -> float:
    """Mean absolute mismatch of central-difference magnitudes, both axes."""
    x, y = _paired(pred, ref)
    xh, xv = _central_diffs(x)
    yh, yv = _central_diffs(y)
    return float(np.mean(np.abs(yh - xh) + np.abs(yv - xv)))


def _gaussian_taps(window: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    offsets = np.arange(window, dtype=np.float64) - (window - 1) / 2.0
    taps = np.exp(-(offsets**2) / (2.0 * sigma**2))
    return taps / taps.sum()


def _sym_index(n: int, radius: int) -> np.ndarray:
    return np.pad(np.arange(n, dtype=np.int64), radius, mode="symmetric")


def _filter_axis(img: np.ndarray, taps: np.ndarray, axis: int) -> np.ndarray:
    """Correlate one axis with symmetric (half-sample reflect) padding."""
    work = img if axis == 1 else img.T
    radius = (len(taps) - 1) // 2
    padded = work[:, _sym_index(work.shape[1], radius)]
    windows = np.lib.stride_tricks.sliding_window_view(padded, len(taps), axis=1)
    out = windows @ taps
    return out if axis == 1 else out.T


def _filter_axis_adjoint(grad: np.ndarray, taps: np.ndarray, axis: int) -> np.ndarray:
    """Exact adjoint of _filter_axis: full correlation, then fold the padding."""
    work = grad if axis == 1 else grad.T
    radius = (len(taps) - 1) // 2
    n = work.shape[1]
    widened = np.zeros((work.shape[0], n + 4 * radius), dtype=np.float64)
    widened[:, 2 * radius : 2 * radius + n] = work
    windows = np.lib.stride_tricks.sliding_window_view(widened, len(taps), axis=1)
    padded_grad = windows @ taps[::-1].copy()
    out = np.zeros_like(work)
    np.add.at(out, (np.arange(work.shape[0])[:, None], _sym_index(n, radius)[None, :]), padded_grad)
    return out if axis == 1 else out.T


def _ssim_filter(img: np.ndarray) -> np.ndarray:
    taps = _gaussian_taps()
    return _filter_axis(_filter_axis(img, taps, axis=1), taps, axis=0)


def _ssim_filter_adjoint(grad: np.ndarray) -> np.ndarray:
    taps = _gaussian_taps()
    return _filter_axis_adjoint(_filter_axis_adjoint(grad, taps, axis=0), taps, axis=1)


def _ssim_fields(x: np.ndarray, y: np.ndarray):
    span = float(y.max() - y.min())
    dyn = span if span > 0.0 else 1.0
    c1 = (SSIM_K1 * dyn) ** 2
    c2 = (SSIM_K2 * dyn) ** 2
    mu_x = _ssim_filter(x)
    mu_y = _ssim_filter(y)
    var_x = _ssim_filter(x * x) - mu_x**2
    var_y = _ssim_filter(y * y) - mu_y**2
    cov = _ssim_filter(x * y) - mu_x * mu_y
    lum_num = 2.0 * mu_x * mu_y + c1
    lum_den = mu_x**2 + mu_y**2 + c1
    con_num = 2.0 * cov + c2
    con_den = var_x + var_y + c2
    ssim_map = (lum_num * con_num) / (lum_den * con_den)
    return ssim_map, mu_x, mu_y, lum_num, lum_den, con_num, con_den


def loss_ssim(pred: DepthMap, ref: DepthMap) -> float:
    """1 - mean SSIM; dynamic range is taken from the reference."""
    x, y = _paired(pred, ref)
    ssim_map = _ssim_fields(x, y)[0]
    return float(1.0 - ssim_map.mean())


def loss_final(pred: DepthMap, ref: DepthMap) -> float:
    """Unweighted sum of the absolute, gradient, and structural losses."""
    return loss_mae(pred, ref) + loss_grad(pred, ref) + loss_ssim(pred, ref)


def loss_mae_grad(pred: DepthMap, ref: DepthMap) -> np.ndarray:
    x, y = _paired(pred, ref)
    return np.sign(x - y) / x.size


def loss_grad_grad(pred: DepthMap, ref: DepthMap) -> np.ndarray:
    x, y = _paired(pred, ref)
    height, width = x.shape
    xh, xv = _central_diffs(x)
    yh, yv = _central_diffs(y)
    grad = np.zeros_like(x)

    rows = np.arange(height)[:, None].repeat(width, axis=1)
    cols = np.arange(width)[None, :].repeat(height, axis=0)

    # d|yh - xh|/dx = -sign(yh - xh) * sign(x_right - x_left) on the clamped stencil
    padded = np.pad(x, ((0, 0), (1, 1)), mode="edge")
    g = -np.sign(yh - xh) * np.sign(padded[:, 2:] - padded[:, :-2]) / x.size
    np.add.at(grad, (rows, np.minimum(cols + 1, width - 1)), g)
    np.add.at(grad, (rows, np.maximum(cols - 1, 0)), -g)

    padded = np.pad(x, ((1, 1), (0, 0)), mode="edge")
    g = -np.sign(yv - xv) * np.sign(padded[2:, :] - padded[:-2, :]) / x.size
    np.add.at(grad, (np.minimum(rows + 1, height - 1), cols), g)
    np.add.at(grad, (np.maximum(rows - 1, 0), cols), -g)
    return grad


def loss_ssim_grad(pred: DepthMap, ref: DepthMap) -> np.ndarray:
    x, y = _paired(pred, ref)
    ssim_map, mu_x, mu_y, lum_num, lum_den, con_num, con_den = _ssim_fields(x, y)
    lum = lum_num / lum_den
    con = con_num / con_den
    scale = -1.0 / x.size  # d(1 - mean)/dS

    d_mu_x = scale * con * (2.0 * mu_y * lum_den - lum_num * 2.0 * mu_x) / lum_den**2
    d_var_x = scale * lum * (-con / con_den)
    d_cov = scale * lum * (2.0 / con_den)

    # mu_x, var_x, cov reach x through F(x), F(x^2), F(x*y)
    d_filter_x = d_mu_x + d_var_x * (-2.0 * mu_x) + d_cov * (-mu_y)
    grad = _ssim_filter_adjoint(d_filter_x)
    grad += 2.0 * x * _ssim_filter_adjoint(d_var_x)
    grad += y * _ssim_filter_adjoint(d_cov)
    return grad


def loss_final_grad(pred: DepthMap, ref: DepthMap) -> np.ndarray:
    """Gradient of loss_final w.r.t. the prediction (0 subgradient at ties)."""
    return loss_mae_grad(pred, ref) + loss_grad_grad(pred, ref) + loss_ssim_grad(pred, ref)


def iqa_losses(pred_scores: np.ndarray, label_scores: np.ndarray) -> tuple[float, float, float]:
    """Score-regression losses: (mse, 1 - Pearson correlation, their sum)."""
    p = np.asarray(pred_scores, dtype=np.float64)
    t = np.asarray(label_scores, dtype=np.float64)
    if p.ndim != 1 or p.shape != t.shape or p.size < 2:
        raise DimensionError(
            f"expected equal-length vectors of size >= 2, got {p.shape} and {t.shape}"
        )
    dp = p - p.mean()
    dt = t - t.mean()
    # single sqrt keeps perfectly (anti)correlated inputs exact
    denom = np.sqrt(np.sum(dp**2) * np.sum(dt**2))
    if denom == 0.0:
        raise UndefinedStatisticError("correlation undefined for zero-variance scores")
    l_mse = float(np.mean((p - t) ** 2))
    l_plcc = float(1.0 - np.sum(dp * dt) / denom)
    return l_mse, l_plcc, l_mse + l_plcc
