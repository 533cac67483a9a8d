"""Binary test objects: disks, seeded blobs, invisible-notch pairs, and
slice/volume plumbing.

Randomized generators draw from SplitMix64 (Steele, Lea & Flood's constants:
increment 0x9E3779B97F4A7C15, mixers 0xBF58476D1CE4E5B9 and
0x94D049BB133111EB, shifts 30/27/31) so the same seed yields the same
phantom on every platform, independent of NumPy's RNG defaults.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .errors import ValidationError
from .geometry import ParallelGeometry, equispaced_geometry
from .silhouette import silhouette_forward

__all__ = [
    "SplitMix64",
    "disk",
    "random_blob",
    "notch_pair",
    "random_volume",
    "stack_slices",
    "volume_slices",
    "drop_empty_slices",
    "NotchSearchError",
]

_MASK64 = (1 << 64) - 1


class NotchSearchError(RuntimeError):
    """No invisible notch was found within the attempt budget."""


class SplitMix64:
    """Minimal SplitMix64 stream; integer-only state, platform-independent."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        return lo + (hi - lo) * (self.next_u64() >> 11) * 2.0**-53

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] inclusive (modulo bias negligible)."""
        return lo + self.next_u64() % (hi - lo + 1)


def _pixel_centers(size: int) -> tuple[np.ndarray, np.ndarray]:
    coords = np.arange(size) + 0.5
    return np.meshgrid(coords, coords, indexing="ij")


def disk(size: int, center: tuple[float, float], radius: float) -> np.ndarray:
    """Binary image of a disk: pixel on iff its center (at half-integer
    coordinates ``(row + 0.5, col + 0.5)``) lies strictly within ``radius``
    of ``center = (row, col)``."""
    if size < 1:
        raise ValidationError("size must be >= 1")
    if radius < 0:
        raise ValidationError("radius must be >= 0")
    rr, cc = _pixel_centers(size)
    cy, cx = center
    return (((rr - cy) ** 2 + (cc - cx) ** 2) < radius**2).astype(np.uint8)


def random_blob(size: int, seed: int) -> np.ndarray:
    """Connected smooth blob: a chain of 3-6 overlapping disks, then a
    morphological closing.  Deterministic in ``seed`` across platforms."""
    if size < 8:
        raise ValidationError("size must be >= 8")
    rng = SplitMix64(seed)
    n_disks = rng.randint(3, 6)
    img = np.zeros((size, size), dtype=np.uint8)
    cy = rng.uniform(0.35 * size, 0.65 * size)
    cx = rng.uniform(0.35 * size, 0.65 * size)
    for _ in range(n_disks):
        radius = rng.uniform(0.10 * size, 0.20 * size)
        img |= disk(size, (cy, cx), radius)
        # next center inside the current disk, so the union stays connected
        step = rng.uniform(0.2, 0.8) * radius
        angle = rng.uniform(0.0, 2.0 * np.pi)
        cy = min(max(cy + step * np.sin(angle), 0.2 * size), 0.8 * size)
        cx = min(max(cx + step * np.cos(angle), 0.2 * size), 0.8 * size)
    closed = ndimage.binary_closing(
        img, structure=ndimage.generate_binary_structure(2, 2), iterations=2
    )
    return closed.astype(np.uint8)


def notch_pair(
    size: int,
    seed: int = 0,
    geometry: ParallelGeometry | None = None,
    max_attempts: int = 32,
) -> tuple[np.ndarray, np.ndarray]:
    """A pair ``(A, B)`` with ``B`` strictly contained in ``A`` and
    identical silhouettes under ``geometry`` (default: 8 equispaced views).

    ``A`` is a disk and ``B`` is ``A`` minus a smaller interior disk; since
    every ray through an interior point of a convex body exits through
    material on both sides, the notch is invisible to every view.  The
    equality ``S(A) == S(B)`` is verified at construction, retrying with a
    smaller, more central notch; failure raises :class:`NotchSearchError`.
    """
    if size < 16:
        raise ValidationError("size must be >= 16")
    if geometry is None:
        geometry = equispaced_geometry(8, size)
    rng = SplitMix64(seed)
    outer_r = 0.30 * size
    cy = 0.5 * size + rng.uniform(-0.05, 0.05) * size
    cx = 0.5 * size + rng.uniform(-0.05, 0.05) * size
    a = disk(size, (cy, cx), outer_r)
    notch_r = 0.4 * outer_r
    off_y = rng.uniform(-0.2, 0.2) * outer_r
    off_x = rng.uniform(-0.2, 0.2) * outer_r
    sil_a = silhouette_forward(a, geometry)
    for _ in range(max_attempts):
        notch = disk(size, (cy + off_y, cx + off_x), notch_r)
        b = np.where(notch == 1, np.uint8(0), a)
        if notch.any() and (b != a).any():
            if np.array_equal(silhouette_forward(b, geometry), sil_a):
                return a, b
        # carve deeper into the interior
        notch_r = max(0.7 * notch_r, 1.5)
        off_y *= 0.5
        off_x *= 0.5
    raise NotchSearchError(
        f"no invisible notch found for size={size}, seed={seed} within "
        f"{max_attempts} attempts"
    )


def random_volume(size: int, depth: int, seed: int) -> np.ndarray:
    """Random solid ellipsoid, voxelized on a ``(depth, size, size)`` grid.

    The ellipsoid is inscribed with a margin along the depth axis, so the
    first and last slices are typically empty; useful for exercising
    empty-slice removal.
    """
    if size < 8 or depth < 1:
        raise ValidationError("size must be >= 8 and depth >= 1")
    rng = SplitMix64(seed)
    cz = depth * rng.uniform(0.4, 0.6)
    cy = size * rng.uniform(0.4, 0.6)
    cx = size * rng.uniform(0.4, 0.6)
    rz = depth * rng.uniform(0.25, 0.38)
    ry = size * rng.uniform(0.2, 0.35)
    rx = size * rng.uniform(0.2, 0.35)
    zz = np.arange(depth)[:, None, None] + 0.5
    yy = (np.arange(size)[None, :, None] + 0.5)
    xx = (np.arange(size)[None, None, :] + 0.5)
    inside = (
        ((zz - cz) / rz) ** 2 + ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2
    ) < 1.0
    return inside.astype(np.uint8)


def stack_slices(slices: list[np.ndarray]) -> np.ndarray:
    """Stack equally sized 2D slices into a (depth, height, width) volume."""
    if not slices:
        raise ValidationError("cannot stack an empty slice list")
    first = np.asarray(slices[0])
    for s in slices[1:]:
        if np.asarray(s).shape != first.shape:
            raise ValidationError("all slices must have identical shapes")
    return np.stack([np.asarray(s) for s in slices], axis=0)


def volume_slices(volume: np.ndarray) -> list[np.ndarray]:
    """Split a volume back into its ordered list of 2D slices."""
    volume = np.asarray(volume)
    if volume.ndim != 3:
        raise ValidationError(f"expected a 3D volume, got shape {volume.shape}")
    return [volume[i] for i in range(volume.shape[0])]


def drop_empty_slices(volume: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Remove slices with no on-voxels, preserving order.

    Returns the kept sub-volume and the kept slice indices (kept position
    -> original index).  An all-empty volume yields an empty volume and an
    empty index list.
    """
    volume = np.asarray(volume)
    if volume.ndim != 3:
        raise ValidationError(f"expected a 3D volume, got shape {volume.shape}")
    kept = [i for i in range(volume.shape[0]) if volume[i].any()]
    return volume[kept], kept
