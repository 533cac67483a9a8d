"""Bit-exact file containers and training-pair export.

Two little-endian binary formats cover all array traffic:

``VolumeFile``  magic ``STV1`` | dtype u8 | u32 depth, height, width | payload
``SinogramFile`` magic ``STS1`` | dtype u8 | u32 n_views, n_det | payload

dtype code 0 is 32-bit float, code 1 is 8-bit binary (payload bytes must be
0 or 1).  Payloads are row-major, depth-major.  Serialization is canonical:
``write(read(bytes)) == bytes`` for every valid file.

Training exports lay out one truth slice, one backprojected network input,
and one measurement sinogram per pair, then write a tab-separated manifest
last, so a manifest's presence implies the export completed.  The manifest
header line carries the geometry descriptor and the measurement mode.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, ValidationError
from .geometry import ParallelGeometry, format_descriptor, parse_descriptor
from .phantom import SplitMix64, random_blob
from .silhouette import silhouette_forward
from .xray import back_project, forward_project

__all__ = [
    "VOLUME_MAGIC",
    "SINOGRAM_MAGIC",
    "DTYPE_F32",
    "DTYPE_BINARY",
    "write_volume",
    "read_volume",
    "write_sinogram",
    "read_sinogram",
    "write_pgm",
    "ManifestRecord",
    "TrainingManifest",
    "write_manifest",
    "read_manifest",
    "export_training_pairs",
]

VOLUME_MAGIC = b"STV1"
SINOGRAM_MAGIC = b"STS1"
DTYPE_F32 = 0
DTYPE_BINARY = 1

_DTYPE_SIZE = {DTYPE_F32: 4, DTYPE_BINARY: 1}


def _encode_payload(data: np.ndarray) -> tuple[int, bytes]:
    data = np.asarray(data)
    if data.dtype == np.uint8 or data.dtype == bool:
        arr = data.astype(np.uint8, copy=False)
        if not np.isin(arr, (0, 1)).all():
            raise ValidationError("binary payload must contain only 0 and 1")
        return DTYPE_BINARY, arr.tobytes(order="C")
    if not np.all(np.isfinite(data)):
        raise ValidationError("payload contains non-finite entries")
    return DTYPE_F32, data.astype("<f4").tobytes(order="C")


def _decode_payload(
    raw: bytes, offset: int, dtype_code: int, count: int
) -> np.ndarray:
    expected = count * _DTYPE_SIZE[dtype_code]
    actual = len(raw) - offset
    if actual != expected:
        raise FormatError(
            f"payload at offset {offset}: expected {expected} bytes, "
            f"got {actual}"
        )
    if dtype_code == DTYPE_F32:
        return np.frombuffer(raw, dtype="<f4", offset=offset).copy()
    arr = np.frombuffer(raw, dtype=np.uint8, offset=offset)
    bad = np.flatnonzero(arr > 1)
    if bad.size:
        raise FormatError(
            f"binary payload contains value {arr[bad[0]]} at offset "
            f"{offset + int(bad[0])}"
        )
    return arr.copy()


def write_volume(volume: np.ndarray, path: str | Path) -> None:
    """Serialize a (depth, height, width) array; uint8/bool arrays become
    the binary dtype, everything else 32-bit float."""
    volume = np.asarray(volume)
    if volume.ndim != 3:
        raise ValidationError(f"expected a 3D volume, got shape {volume.shape}")
    code, payload = _encode_payload(volume)
    header = VOLUME_MAGIC + struct.pack("<BIII", code, *volume.shape)
    Path(path).write_bytes(header + payload)


def read_volume(path: str | Path) -> np.ndarray:
    """Parse a volume file; returns uint8 for binary, float32 for f32."""
    raw = Path(path).read_bytes()
    if len(raw) < 17:
        raise FormatError(f"truncated header: {len(raw)} bytes, need 17")
    if raw[:4] != VOLUME_MAGIC:
        raise FormatError(f"bad magic {raw[:4]!r} at offset 0")
    code, depth, height, width = struct.unpack_from("<BIII", raw, 4)
    if code not in _DTYPE_SIZE:
        raise FormatError(f"unknown dtype code {code} at offset 4")
    data = _decode_payload(raw, 17, code, depth * height * width)
    return data.reshape(depth, height, width)


def write_sinogram(sino: np.ndarray, path: str | Path) -> None:
    """Serialize a (n_views, n_det) array, view-major."""
    sino = np.asarray(sino)
    if sino.ndim != 2:
        raise ValidationError(f"expected a 2D sinogram, got shape {sino.shape}")
    code, payload = _encode_payload(sino)
    header = SINOGRAM_MAGIC + struct.pack("<BII", code, *sino.shape)
    Path(path).write_bytes(header + payload)


def read_sinogram(path: str | Path) -> np.ndarray:
    """Parse a sinogram file; returns uint8 for binary, float32 for f32."""
    raw = Path(path).read_bytes()
    if len(raw) < 13:
        raise FormatError(f"truncated header: {len(raw)} bytes, need 13")
    if raw[:4] != SINOGRAM_MAGIC:
        raise FormatError(f"bad magic {raw[:4]!r} at offset 0")
    code, n_views, n_det = struct.unpack_from("<BII", raw, 4)
    if code not in _DTYPE_SIZE:
        raise FormatError(f"unknown dtype code {code} at offset 4")
    data = _decode_payload(raw, 13, code, n_views * n_det)
    return data.reshape(n_views, n_det)


def write_pgm(img: np.ndarray, path: str | Path) -> None:
    """8-bit binary PGM (P5): [0, 1] maps linearly to [0, 255], clamped,
    rounded half to even."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValidationError(f"expected a 2D image, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValidationError("image contains non-finite entries")
    levels = np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    height, width = img.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + levels.tobytes(order="C"))


@dataclass(frozen=True)
class ManifestRecord:
    pair_id: str
    truth_path: str
    input_path: str
    sino_path: str


@dataclass(frozen=True)
class TrainingManifest:
    geometry: ParallelGeometry
    mode: str
    records: tuple[ManifestRecord, ...]


_MODES = ("silhouette", "linear")


def write_manifest(manifest: TrainingManifest, path: str | Path) -> None:
    if manifest.mode not in _MODES:
        raise ValidationError(f"mode must be one of {_MODES}")
    lines = [
        f"geometry={format_descriptor(manifest.geometry)}\t"
        f"mode={manifest.mode}"
    ]
    for rec in manifest.records:
        lines.append(
            f"{rec.pair_id}\t{rec.truth_path}\t{rec.input_path}\t"
            f"{rec.sino_path}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_manifest(path: str | Path, check_files: bool = True) -> TrainingManifest:
    """Parse a manifest; with ``check_files`` every referenced file must
    exist and parse under its expected container format."""
    path = Path(path)
    lines = path.read_text(encoding="ascii").splitlines()
    if not lines:
        raise FormatError("empty manifest")
    header = dict(
        field.partition("=")[::2] for field in lines[0].split("\t")
    )
    if set(header) != {"geometry", "mode"}:
        raise FormatError(f"bad manifest header: {lines[0]!r}")
    if header["mode"] not in _MODES:
        raise FormatError(f"unknown manifest mode {header['mode']!r}")
    geometry = parse_descriptor(header["geometry"])
    records = []
    for line in lines[1:]:
        parts = line.split("\t")
        if len(parts) != 4:
            raise FormatError(f"bad manifest record: {line!r}")
        records.append(ManifestRecord(*parts))
    if check_files:
        base = path.parent
        for rec in records:
            for vol_path in (rec.truth_path, rec.input_path):
                read_volume(base / vol_path)
            read_sinogram(base / rec.sino_path)
    return TrainingManifest(
        geometry=geometry, mode=header["mode"], records=tuple(records)
    )


def export_training_pairs(
    g: ParallelGeometry,
    mode: str,
    count: int,
    seed: int,
    out_dir: str | Path,
    force: bool = False,
) -> Path:
    """Generate blob phantoms and export (truth, H^T y, y) training pairs.

    In silhouette mode ``y = S(x)`` (binary); in linear mode ``y = Hx``
    (f32).  The network input is ``H^T y`` either way.  Pair phantoms are
    seeded from a SplitMix64 stream over ``seed``, so re-exports are
    byte-identical.  The manifest is written last; an existing manifest is
    refused unless ``force``.
    """
    if mode not in _MODES:
        raise ValidationError(f"mode must be one of {_MODES}")
    if count < 1:
        raise ValidationError("count must be >= 1")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / "manifest.tsv"
    if manifest_path.exists() and not force:
        raise ValidationError(
            f"{manifest_path} already exists; pass force to overwrite"
        )
    rng = SplitMix64(seed)
    records = []
    for i in range(count):
        truth = random_blob(g.img_size, rng.next_u64())
        if mode == "silhouette":
            sino: np.ndarray = silhouette_forward(truth, g)
        else:
            sino = forward_project(truth, g).astype(np.float32)
        net_input = back_project(sino, g).astype(np.float32)
        names = (
            f"pair_{i:05d}_truth.stv",
            f"pair_{i:05d}_input.stv",
            f"pair_{i:05d}_sino.sts",
        )
        write_volume(truth[None], out_dir / names[0])
        write_volume(net_input[None], out_dir / names[1])
        write_sinogram(sino, out_dir / names[2])
        records.append(ManifestRecord(f"pair_{i:05d}", *names))
    write_manifest(
        TrainingManifest(geometry=g, mode=mode, records=tuple(records)),
        manifest_path,
    )
    return manifest_path


def is_finite_positive(value: float) -> bool:
    return math.isfinite(value) and value > 0
