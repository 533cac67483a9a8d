"""Exhaustive enumeration oracle for small grids.

Enumerates every binary image on an ``N x N`` grid (bit ``n`` of the image
code is pixel ``n``, row-major), partitions them by their binary sinogram,
and independently identifies each class's unique maximal-norm member.  This
is the ground truth that the closed-form reconstruction is checked against;
it never calls :func:`siltomo.silhouette.maximal_solution` itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError
from .geometry import ParallelGeometry
from .silhouette import maximal_solution
from .xray import system_matrix

__all__ = [
    "MAX_ENUM_PIXELS",
    "FeasibleClass",
    "enumerate_classes",
    "find_nonunique",
    "OracleReport",
    "check_formula",
]

MAX_ENUM_PIXELS = 20

_CHUNK = 1 << 15


@dataclass(frozen=True)
class FeasibleClass:
    """All binary images sharing one silhouette.

    ``solutions`` is an ``(n_members, N, N)`` uint8 array sorted by image
    code; ``max_norm_solution`` is the unique member with the most on
    pixels.
    """

    y: np.ndarray
    solutions: np.ndarray
    max_norm_solution: np.ndarray

    @property
    def n_members(self) -> int:
        return self.solutions.shape[0]


def _code_to_image(code: int, n: int) -> np.ndarray:
    bits = (np.uint64(code) >> np.arange(n * n, dtype=np.uint64)) & np.uint64(1)
    return bits.astype(np.uint8).reshape(n, n)


def enumerate_classes(g: ParallelGeometry) -> list[FeasibleClass]:
    """Partition all ``2**(N*N)`` binary images by silhouette.

    Classes are returned sorted by their sinogram bytes.  Within each class
    the maximal-norm member is found by popcount and checked to be unique.

    Raises
    ------
    CapacityError
        If ``N*N`` exceeds :data:`MAX_ENUM_PIXELS`.
    """
    n = g.img_size
    n_px = n * n
    if n_px > MAX_ENUM_PIXELS:
        raise CapacityError(
            f"{n}x{n} grid has {n_px} pixels; enumeration is capped at "
            f"{MAX_ENUM_PIXELS} (2**{MAX_ENUM_PIXELS} images)"
        )
    h = system_matrix(g).toarray()
    classes: dict[bytes, list[int]] = {}
    total = 1 << n_px
    bit_cols = np.arange(n_px, dtype=np.uint64)
    for start in range(0, total, _CHUNK):
        codes = np.arange(start, min(start + _CHUNK, total), dtype=np.uint64)
        images = ((codes[:, None] >> bit_cols) & 1).astype(np.float64)
        sinos = (images @ h.T) > 0
        for code, key in zip(codes, np.packbits(sinos, axis=1)):
            classes.setdefault(key.tobytes(), []).append(int(code))
    out: list[FeasibleClass] = []
    for key in sorted(classes):
        members = classes[key]
        norms = [code.bit_count() for code in members]
        best = max(norms)
        if norms.count(best) != 1:
            raise AssertionError(
                "maximal-norm member is not unique; the uniqueness theorem "
                f"failed for sinogram key {key!r}"
            )
        y = np.unpackbits(
            np.frombuffer(key, dtype=np.uint8), count=g.n_rays
        ).reshape(g.n_views, g.n_det)
        out.append(
            FeasibleClass(
                y=y,
                solutions=np.stack([_code_to_image(c, n) for c in members]),
                max_norm_solution=_code_to_image(
                    members[norms.index(best)], n
                ),
            )
        )
    return out


def find_nonunique(
    g: ParallelGeometry,
) -> tuple[np.ndarray, np.ndarray] | None:
    """Two distinct binary images with identical silhouettes, if any exist.

    Returns the pair with the smallest image codes from the first
    multi-member class (deterministic), or ``None`` when every silhouette
    determines its image uniquely.
    """
    for cls in enumerate_classes(g):
        if cls.n_members >= 2:
            return cls.solutions[0], cls.solutions[1]
    return None


@dataclass(frozen=True)
class OracleReport:
    n_classes: int
    max_class_size: int
    n_images: int
    formula_matches: bool

    def render(self) -> str:
        verdict = "PASS" if self.formula_matches else "FAIL"
        return "\n".join(
            [
                f"images enumerated: {self.n_images}",
                f"feasible silhouettes (classes): {self.n_classes}",
                f"max class size: {self.max_class_size}",
                f"formula-oracle equivalence: {verdict}",
            ]
        )


def check_formula(g: ParallelGeometry) -> OracleReport:
    """Cross-check the closed-form reconstruction against enumeration.

    For every feasible sinogram the raw formula (coverage mask off) must
    reproduce the class's maximal-norm member exactly, and every member
    must be pointwise dominated by it.
    """
    classes = enumerate_classes(g)
    matches = True
    for cls in classes:
        formula = maximal_solution(cls.y, g, mask_uncovered=False)
        if not np.array_equal(formula, cls.max_norm_solution):
            matches = False
            break
        if (cls.solutions > cls.max_norm_solution[None]).any():
            matches = False
            break
    return OracleReport(
        n_classes=len(classes),
        max_class_size=max(c.n_members for c in classes),
        n_images=sum(c.n_members for c in classes),
        formula_matches=matches,
    )
