"""Slice-wise reconstruction quality metrics and their aggregation.

SSIM uses a Gaussian window of size 11 with sigma 1.5, stability constants
K1 = 0.01 and K2 = 0.03, and a fixed data range of 1.0 (inputs live in
[0, 1]).  Local statistics are Gaussian-weighted first and second moments;
only fully interior window positions contribute (no padding).  These
constants are frozen so that results are reproducible across components.

PSNR of a zero-error slice is reported as positive infinity; the
aggregation averages PSNR over the finite slices only and reports how many
were discarded.  MSE and SSIM means always include every slice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d

from .errors import ValidationError

__all__ = [
    "SliceMetrics",
    "AggregateMetrics",
    "mse",
    "psnr",
    "ssim",
    "slice_metrics",
    "aggregate",
    "metrics_csv",
]

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_DATA_RANGE = 1.0


@dataclass(frozen=True)
class SliceMetrics:
    """Per-slice values; ``psnr`` is ``math.inf`` when the slices agree."""

    mse: float
    psnr: float
    ssim: float


@dataclass(frozen=True)
class AggregateMetrics:
    """Arithmetic means over slices.

    ``psnr`` is ``None`` when every slice had infinite PSNR (undefined
    mean); ``n_discarded_psnr`` counts the infinite-PSNR slices excluded
    from the PSNR mean.
    """

    mse: float
    psnr: float | None
    ssim: float
    n_discarded_psnr: int


def _check_pair(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def mse(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared difference over all pixels."""
    a, b = _check_pair(a, b)
    return float(np.mean((a - b) ** 2))


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    """``10 * log10(peak**2 / mse)``; infinite when the MSE is zero."""
    if peak <= 0:
        raise ValidationError("peak must be positive")
    err = mse(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / err)


def _gaussian_kernel() -> np.ndarray:
    offsets = np.arange(SSIM_WINDOW) - (SSIM_WINDOW - 1) / 2
    k = np.exp(-(offsets**2) / (2.0 * SSIM_SIGMA**2))
    return k / k.sum()


def _windowed_mean(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    tmp = convolve2d(img, kernel[:, None], mode="valid")
    return convolve2d(tmp, kernel[None, :], mode="valid")


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean local structural similarity over interior window positions."""
    a, b = _check_pair(a, b)
    if a.ndim != 2 or min(a.shape) < SSIM_WINDOW:
        raise ValidationError(
            f"ssim needs 2D images at least {SSIM_WINDOW} pixels per side"
        )
    kernel = _gaussian_kernel()
    mu_a = _windowed_mean(a, kernel)
    mu_b = _windowed_mean(b, kernel)
    var_a = _windowed_mean(a * a, kernel) - mu_a * mu_a
    var_b = _windowed_mean(b * b, kernel) - mu_b * mu_b
    cov = _windowed_mean(a * b, kernel) - mu_a * mu_b
    c1 = (SSIM_K1 * SSIM_DATA_RANGE) ** 2
    c2 = (SSIM_K2 * SSIM_DATA_RANGE) ** 2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def slice_metrics(a: np.ndarray, b: np.ndarray) -> SliceMetrics:
    """All three metrics for one reconstructed/truth slice pair."""
    return SliceMetrics(mse=mse(a, b), psnr=psnr(a, b), ssim=ssim(a, b))


def aggregate(per_slice: list[SliceMetrics]) -> AggregateMetrics:
    """Average metrics over slices, discarding infinite PSNRs from the
    PSNR mean only."""
    if not per_slice:
        raise ValidationError("cannot aggregate an empty metrics list")
    finite_psnr = [m.psnr for m in per_slice if math.isfinite(m.psnr)]
    n_discarded = len(per_slice) - len(finite_psnr)
    return AggregateMetrics(
        mse=float(np.mean([m.mse for m in per_slice])),
        psnr=float(np.mean(finite_psnr)) if finite_psnr else None,
        ssim=float(np.mean([m.ssim for m in per_slice])),
        n_discarded_psnr=n_discarded,
    )


def _format_psnr(value: float) -> str:
    return "inf" if math.isinf(value) else repr(value)


def metrics_csv(per_slice: list[SliceMetrics]) -> str:
    """Render per-slice rows as CSV; infinite PSNR becomes the literal
    ``inf``."""
    lines = ["slice_id,mse,psnr,ssim"]
    for i, m in enumerate(per_slice):
        lines.append(f"{i},{m.mse!r},{_format_psnr(m.psnr)},{m.ssim!r}")
    return "\n".join(lines) + "\n"
