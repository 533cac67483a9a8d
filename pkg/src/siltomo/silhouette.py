"""Silhouette operators: strict-positive thresholding, the binarized
forward map S, and the closed-form maximal reconstruction.

``S(x) = T(Hx)`` records, per ray, only whether it met any occupied pixel.
The largest binary image consistent with a feasible binary sinogram ``y``
is ``not(T(H^T(not(y))))``: a pixel is off exactly when some ray that reads
0 crosses it.  Because every traced weight is strictly positive and inputs
are {0,1}, the strict ``> 0`` threshold needs no epsilon.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .geometry import ParallelGeometry
from .xray import CoverageWarning, back_project, coverage_mask, forward_project

__all__ = [
    "threshold_pos",
    "silhouette_forward",
    "maximal_solution",
    "verify_solution",
    "SolutionCheck",
    "binarize_sinogram",
    "binarize_image",
]


def threshold_pos(values: np.ndarray) -> np.ndarray:
    """Map each entry to 1 if strictly positive, else 0 (uint8, same shape)."""
    values = np.asarray(values)
    if not np.all(np.isfinite(values)):
        raise ValidationError("input contains non-finite entries")
    return (values > 0).astype(np.uint8)


def _check_binary(a: np.ndarray, what: str) -> np.ndarray:
    a = np.asarray(a)
    if not np.isin(a, (0, 1)).all():
        raise ValidationError(f"{what} must contain only 0 and 1")
    return a.astype(np.uint8, copy=False)


def silhouette_forward(x: np.ndarray, g: ParallelGeometry) -> np.ndarray:
    """S(x) = T(Hx): binary (V, n_det) sinogram of a binary image."""
    x = _check_binary(x, "image")
    return threshold_pos(forward_project(x, g))


def maximal_solution(
    y: np.ndarray, g: ParallelGeometry, *, mask_uncovered: bool = True
) -> np.ndarray:
    """The pointwise-largest binary image consistent with ``y``.

    Evaluates ``not(T(H^T(not(y))))`` with the matched adjoint.  When ``y``
    is feasible the result reproduces ``y`` under :func:`silhouette_forward`
    and pointwise-dominates every other solution; infeasible ``y`` still
    yields the formula's output (use :func:`verify_solution` to detect).

    The raw formula leaves pixels crossed by no ray at 1.  With
    ``mask_uncovered`` (the default) such pixels are forced to 0 and a
    :class:`CoverageWarning` is emitted; standard geometries cover every
    pixel, so this only fires for degenerate view sets.
    """
    y = _check_binary(y, "sinogram")
    x = 1 - threshold_pos(back_project(1 - y, g))
    if mask_uncovered:
        covered = coverage_mask(g)
        if not covered.all():
            warnings.warn(
                f"{int((~covered).sum())} pixels are crossed by no ray and "
                "were forced to 0",
                CoverageWarning,
                stacklevel=2,
            )
            x = np.where(covered, x, np.uint8(0))
    return x


@dataclass(frozen=True)
class SolutionCheck:
    """Outcome of a feasibility check; truthiness is the verdict."""

    ok: bool
    first_mismatch: int | None = None

    def __bool__(self) -> bool:
        return self.ok


def verify_solution(
    x: np.ndarray, y: np.ndarray, g: ParallelGeometry
) -> SolutionCheck:
    """Does ``S(x)`` equal ``y`` exactly?  Reports the first mismatching
    flattened measurement index otherwise."""
    y = _check_binary(y, "sinogram")
    if y.shape != (g.n_views, g.n_det):
        raise ValidationError(
            f"sinogram shape {y.shape} does not match geometry "
            f"({g.n_views}, {g.n_det})"
        )
    predicted = silhouette_forward(x, g)
    mismatch = np.flatnonzero(predicted.ravel() != y.ravel())
    if mismatch.size:
        return SolutionCheck(ok=False, first_mismatch=int(mismatch[0]))
    return SolutionCheck(ok=True)


def binarize_sinogram(s: np.ndarray, threshold: float) -> np.ndarray:
    """1 where the sinogram entry is strictly above ``threshold``, else 0."""
    s = np.asarray(s)
    if not np.all(np.isfinite(s)):
        raise ValidationError("sinogram contains non-finite entries")
    if not np.isfinite(threshold):
        raise ValidationError("threshold must be finite")
    return (s > threshold).astype(np.uint8)


def binarize_image(x: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Strict-threshold binarization for images; ties map to 0.

    The 0.5 default is the convention for turning raw network outputs into
    binary reconstructions.
    """
    x = np.asarray(x)
    if not np.all(np.isfinite(x)):
        raise ValidationError("image contains non-finite entries")
    if not np.isfinite(threshold):
        raise ValidationError("threshold must be finite")
    return (x > threshold).astype(np.uint8)
