"""The linear X-ray transform and its matched adjoint.

Each measurement is a line integral: row ``m`` of the system matrix holds
the exact intersection lengths of ray ``m`` with every pixel square it
crosses.  Lengths come from a Siddon-style parametric traversal: the sorted
grid-line crossing parameters split the ray's chord through the image
bounding square, and each sub-segment is attributed to the pixel containing
its midpoint.  Segments shorter than ``1e-12 * pixel_size`` are dropped.

The backprojector is the exact transpose of the projector.  Both are
evaluated through one cached sparse matrix per geometry, built by the same
tracing code that serves :func:`trace`, so forward and adjoint weights are
identical by construction and the dot-product identity
``<Hx, y> == <x, H^T y>`` holds to rounding error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse

from .errors import ValidationError
from .geometry import ParallelGeometry, Ray

__all__ = [
    "RaySegment",
    "CoverageWarning",
    "trace",
    "system_matrix",
    "coverage_mask",
    "forward_project",
    "back_project",
]

# Rays steeper than this against an axis are treated as exactly axis-parallel
# when enumerating grid-line crossings; the slab clipping still uses the true
# direction, so chord lengths stay exact.
_PARALLEL_EPS = 1e-300

_LENGTH_DROP = 1e-12  # in units of pixel_size


class CoverageWarning(UserWarning):
    """Emitted when a geometry leaves some pixels untouched by every ray."""


@dataclass(frozen=True)
class RaySegment:
    """One pixel crossed by a ray: flat row-major pixel index and the
    intersection length in world units (always > 0)."""

    pixel_index: int
    length: float


def _trace_angle(
    g: ParallelGeometry, theta: float, offsets: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Trace all rays of one view through the pixel grid.

    Parameters
    ----------
    g : ParallelGeometry
        Geometry supplying grid size and pixel size.
    theta : float
        View angle in radians.
    offsets : ndarray
        Detector-axis offsets of the rays to trace, shape ``(R,)``.

    Returns
    -------
    ray_local, pixel, length : ndarray
        Parallel arrays of local ray index (index into ``offsets``), flat
        row-major pixel index, and intersection length.  Entries are grouped
        by ray and ordered by traversal (increasing ray parameter).
    """
    n = g.img_size
    px = g.pixel_size
    half = g.half_extent
    dir_x, dir_y = math.sin(theta), -math.cos(theta)
    ax_x, ax_y = math.cos(theta), math.sin(theta)

    offsets = np.asarray(offsets, dtype=np.float64)
    ox = offsets * ax_x
    oy = offsets * ax_y

    lines = -half + px * np.arange(n + 1)

    crossings = []
    t_lo = np.full(offsets.shape, -np.inf)
    t_hi = np.full(offsets.shape, np.inf)
    miss = np.zeros(offsets.shape, dtype=bool)
    for o, d in ((ox, dir_x), (oy, dir_y)):
        if abs(d) > _PARALLEL_EPS:
            t = (lines[None, :] - o[:, None]) / d
            crossings.append(t)
            t1 = (-half - o) / d
            t2 = (half - o) / d
            t_lo = np.maximum(t_lo, np.minimum(t1, t2))
            t_hi = np.minimum(t_hi, np.maximum(t1, t2))
        else:
            miss |= (o <= -half) | (o >= half)
    t_hi = np.where(miss, t_lo, t_hi)
    t_hi = np.maximum(t_hi, t_lo)

    t = np.concatenate(crossings, axis=1)
    t = np.clip(t, t_lo[:, None], t_hi[:, None])
    t.sort(axis=1)

    length = np.diff(t, axis=1)
    t_mid = 0.5 * (t[:, :-1] + t[:, 1:])
    mid_x = ox[:, None] + t_mid * dir_x
    mid_y = oy[:, None] + t_mid * dir_y
    col = np.floor((mid_x + half) / px).astype(np.int64)
    row = np.floor((mid_y + half) / px).astype(np.int64)

    keep = (
        (length > _LENGTH_DROP * px)
        & (col >= 0)
        & (col < n)
        & (row >= 0)
        & (row < n)
    )
    ray_local = np.broadcast_to(
        np.arange(offsets.shape[0])[:, None], keep.shape
    )
    return ray_local[keep], (row[keep] * n + col[keep]), length[keep]


def trace(ray: Ray, g: ParallelGeometry) -> list[RaySegment]:
    """Exact pixel-intersection lengths of one ray, in traversal order.

    A ray that misses the image square yields an empty list.  The segment
    lengths of a hitting ray sum to the chord length of the ray through the
    bounding square (up to roundoff and dropped sub-1e-12 grazing slivers).
    """
    theta = g.angles[ray.view_index]
    offsets = np.array([g.det_offset(ray.det_index)])
    _, pixel, length = _trace_angle(g, theta, offsets)
    return [RaySegment(int(p), float(w)) for p, w in zip(pixel, length)]


@lru_cache(maxsize=8)
def _system_matrix(g: ParallelGeometry) -> sparse.csr_matrix:
    n_px = g.img_size * g.img_size
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    offsets = (np.arange(g.n_det) - 0.5 * (g.n_det - 1)) * g.det_spacing
    for v, theta in enumerate(g.angles):
        det, pixel, length = _trace_angle(g, theta, offsets)
        rows.append(det + v * g.n_det)
        cols.append(pixel)
        vals.append(length)
    mat = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(g.n_rays, n_px),
    )
    mat.sum_duplicates()
    return mat


def system_matrix(g: ParallelGeometry) -> sparse.csr_matrix:
    """The sparse system matrix H, rows in measurement order.

    Cached per geometry; callers must not mutate the result.
    """
    return _system_matrix(g)


@lru_cache(maxsize=8)
def coverage_mask(g: ParallelGeometry) -> np.ndarray:
    """Boolean (N, N) mask of pixels crossed by at least one ray."""
    h = system_matrix(g)
    covered = h.getnnz(axis=0) > 0
    covered.flags.writeable = False
    return covered.reshape(g.img_size, g.img_size)


def _check_image(x: np.ndarray, g: ParallelGeometry) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (g.img_size, g.img_size):
        raise ValidationError(
            f"image shape {x.shape} does not match geometry "
            f"({g.img_size}, {g.img_size})"
        )
    x = x.astype(np.float64, copy=False)
    if not np.all(np.isfinite(x)):
        raise ValidationError("image contains non-finite entries")
    return x


def _check_sinogram(y: np.ndarray, g: ParallelGeometry) -> np.ndarray:
    y = np.asarray(y)
    if y.shape != (g.n_views, g.n_det):
        raise ValidationError(
            f"sinogram shape {y.shape} does not match geometry "
            f"({g.n_views}, {g.n_det})"
        )
    y = y.astype(np.float64, copy=False)
    if not np.all(np.isfinite(y)):
        raise ValidationError("sinogram contains non-finite entries")
    return y


def forward_project(x: np.ndarray, g: ParallelGeometry) -> np.ndarray:
    """Apply H: line integrals of image ``x``, returned as (V, n_det)."""
    x = _check_image(x, g)
    y = system_matrix(g) @ x.ravel()
    return y.reshape(g.n_views, g.n_det)


def back_project(y: np.ndarray, g: ParallelGeometry) -> np.ndarray:
    """Apply the exact adjoint H^T, returned as an (N, N) image."""
    y = _check_sinogram(y, g)
    x = system_matrix(g).T @ y.ravel()
    return x.reshape(g.img_size, g.img_size)
