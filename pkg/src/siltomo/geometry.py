"""Parallel-beam acquisition geometry and ray enumeration.

Coordinate conventions (frozen; golden tests depend on them)
------------------------------------------------------------
The image is a square grid of ``img_size`` x ``img_size`` pixels of side
``pixel_size``, centered on the world origin, which is also the rotation
center.  Pixel ``(row, col)`` of a row-major image occupies the square

    x in [(col - N/2) * px, (col + 1 - N/2) * px)
    y in [(row - N/2) * px, (row + 1 - N/2) * px)

so the world y coordinate grows with the row index.

A view at angle ``theta`` (radians, in ``[0, pi)``) sends parallel rays with
direction ``(sin(theta), -cos(theta))``.  The detector axis is the
perpendicular unit vector ``(cos(theta), sin(theta))``; detector bin ``d``
is centered at offset ``(d - (n_det - 1) / 2) * det_spacing`` along that
axis from the rotation center, and its ray passes through the bin center.

Consequences worth remembering:

* ``theta = 0``: rays run along -y, one per image column; detector bin ``d``
  reads column ``d`` when ``n_det == img_size`` and spacings are 1.
* ``theta = pi/2``: rays run along +x, one per image row; bin ``d`` reads
  row ``d`` under the same conditions.

Measurements are flattened view-major: ray ``m = view * n_det + det``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError

__all__ = [
    "ParallelGeometry",
    "Ray",
    "equispaced_geometry",
    "rays",
    "format_descriptor",
    "parse_descriptor",
]


@dataclass(frozen=True)
class ParallelGeometry:
    """Immutable description of a parallel-beam scan of a square slice.

    Attributes
    ----------
    n_views : int
        Number of projection angles V.
    angles : tuple of float
        View angles in radians, strictly increasing, each in ``[0, pi)``.
    n_det : int
        Detector bins per view.
    det_spacing : float
        Detector bin width, in the same units as ``pixel_size``.
    img_size : int
        Side length of the square pixel grid.
    pixel_size : float
        Side length of one pixel (canonically 1.0).
    """

    n_views: int
    angles: tuple[float, ...]
    n_det: int
    det_spacing: float = 1.0
    img_size: int = 0
    pixel_size: float = 1.0

    def __post_init__(self) -> None:
        if self.n_views < 1:
            raise ValidationError("n_views must be >= 1")
        if self.n_det < 1:
            raise ValidationError("n_det must be >= 1")
        if self.img_size < 1:
            raise ValidationError("img_size must be >= 1")
        if not (self.det_spacing > 0 and math.isfinite(self.det_spacing)):
            raise ValidationError("det_spacing must be a positive finite real")
        if not (self.pixel_size > 0 and math.isfinite(self.pixel_size)):
            raise ValidationError("pixel_size must be a positive finite real")
        angles = tuple(float(a) for a in self.angles)
        object.__setattr__(self, "angles", angles)
        if len(angles) != self.n_views:
            raise ValidationError(
                f"expected {self.n_views} angles, got {len(angles)}"
            )
        for a in angles:
            if not (0.0 <= a < math.pi):
                raise ValidationError(f"angle {a} outside [0, pi)")
        for lo, hi in zip(angles, angles[1:]):
            if not lo < hi:
                raise ValidationError("angles must be strictly increasing")

    @property
    def n_rays(self) -> int:
        return self.n_views * self.n_det

    @property
    def half_extent(self) -> float:
        """Half the side of the image bounding square, in world units."""
        return 0.5 * self.img_size * self.pixel_size

    def det_offset(self, det_index: int) -> float:
        """Signed offset of a detector bin center along the detector axis."""
        return (det_index - 0.5 * (self.n_det - 1)) * self.det_spacing

    def ray_index(self, view_index: int, det_index: int) -> int:
        """Flattened view-major measurement index of a ray."""
        return view_index * self.n_det + det_index


@dataclass(frozen=True)
class Ray:
    """A single measurement line: ``p(t) = origin + t * direction``."""

    view_index: int
    det_index: int
    origin: tuple[float, float]
    direction: tuple[float, float]


def equispaced_geometry(n_views: int, img_size: int) -> ParallelGeometry:
    """Standard geometry: ``n_views`` equispaced angles ``k * pi / V`` on
    ``[0, pi)``, one detector bin per pixel column, unit spacings.

    Raises
    ------
    ValidationError
        If ``n_views`` or ``img_size`` is not a positive integer.
    """
    if n_views < 1:
        raise ValidationError("n_views must be >= 1")
    if img_size < 1:
        raise ValidationError("img_size must be >= 1")
    angles = tuple(k * math.pi / n_views for k in range(n_views))
    return ParallelGeometry(
        n_views=n_views,
        angles=angles,
        n_det=img_size,
        det_spacing=1.0,
        img_size=img_size,
        pixel_size=1.0,
    )


def rays(g: ParallelGeometry) -> list[Ray]:
    """Enumerate all rays, view-major: ``rays(g)[m]`` is measurement ``m``."""
    out: list[Ray] = []
    for v, theta in enumerate(g.angles):
        dir_x, dir_y = math.sin(theta), -math.cos(theta)
        ax_x, ax_y = math.cos(theta), math.sin(theta)
        for d in range(g.n_det):
            s = g.det_offset(d)
            out.append(
                Ray(
                    view_index=v,
                    det_index=d,
                    origin=(s * ax_x, s * ax_y),
                    direction=(dir_x, dir_y),
                )
            )
    return out


def _format_float(x: float) -> str:
    return repr(float(x))


def format_descriptor(g: ParallelGeometry) -> str:
    """Single-line text form of a geometry, embedded in manifests and
    accepted by every CLI command via ``--geometry``."""
    equi = tuple(k * math.pi / g.n_views for k in range(g.n_views))
    if g.angles == equi:
        angles = "equispaced"
    else:
        angles = ",".join(_format_float(a) for a in g.angles)
    return (
        f"views={g.n_views};det={g.n_det};size={g.img_size};"
        f"spacing={_format_float(g.det_spacing)};"
        f"px={_format_float(g.pixel_size)};angles={angles}"
    )


def parse_descriptor(text: str) -> ParallelGeometry:
    """Parse the descriptor emitted by :func:`format_descriptor`.

    ``angles=equispaced`` expands to ``k * pi / V``; otherwise the value is
    a comma-separated list of radians whose length must equal ``views``.
    """
    fields: dict[str, str] = {}
    for part in text.strip().split(";"):
        if not part:
            continue
        key, sep, value = part.partition("=")
        if not sep:
            raise ValidationError(f"malformed descriptor field {part!r}")
        fields[key.strip()] = value.strip()
    try:
        n_views = int(fields["views"])
        n_det = int(fields["det"])
        img_size = int(fields["size"])
        angle_text = fields["angles"]
    except KeyError as exc:
        raise ValidationError(f"descriptor missing field {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ValidationError(f"bad descriptor value: {exc}") from None
    try:
        det_spacing = float(fields.get("spacing", "1.0"))
        pixel_size = float(fields.get("px", "1.0"))
    except ValueError as exc:
        raise ValidationError(f"bad descriptor value: {exc}") from None
    unknown = set(fields) - {"views", "det", "size", "spacing", "px", "angles"}
    if unknown:
        raise ValidationError(f"unknown descriptor fields: {sorted(unknown)}")
    if angle_text == "equispaced":
        angles = tuple(k * math.pi / n_views for k in range(n_views))
    else:
        try:
            angles = tuple(float(a) for a in angle_text.split(","))
        except ValueError as exc:
            raise ValidationError(f"bad angle list: {exc}") from None
    return ParallelGeometry(
        n_views=n_views,
        angles=angles,
        n_det=n_det,
        det_spacing=det_spacing,
        img_size=img_size,
        pixel_size=pixel_size,
    )
