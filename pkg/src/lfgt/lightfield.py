"""4D light field container, PGM directory format, and distortion metrics.

Conventions shared by every module in the package:

* ``samples`` has shape ``(n_u, n_v, height, width)``.  ``u`` and ``v`` index
  the angular grid (view row, view column); ``x`` indexes pixel rows and ``y``
  pixel columns, so ``LF(u, v, x, y) == samples[u, v, x, y]``.
* A scene point with disparity ``d`` seen at ``(x, y)`` in view ``(u, v)``
  appears at ``(x - d*du, y - d*dv)`` in view ``(u + du, v + dv)``, rounded to
  the nearest integer with ties toward +infinity.  Everything that moves
  pixels between views goes through :func:`disparity_shift` so the rounding
  is applied exactly once and identically everywhere.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputFormatError

PEAK = 255.0
METADATA_NAME = "meta.json"
_META_KEYS = ("n_u", "n_v", "width", "height", "bitdepth")


def round_half_up(values):
    """Round to the nearest integer with ties toward +infinity.

    Works elementwise on arrays and returns int64; scalars come back as
    Python ints.
    """
    out = np.floor(np.asarray(values, dtype=np.float64) + 0.5).astype(np.int64)
    if out.ndim == 0:
        return int(out)
    return out


def disparity_shift(disparity: float, du: int, dv: int) -> tuple[int, int]:
    """Integer translation of a constant-disparity region between two views.

    Because source coordinates are integers, rounding the projected position
    is equivalent to rounding the shift itself, so a whole region moves
    rigidly by the returned vector.
    """
    sx = int(math.floor(0.5 - float(disparity) * du))
    sy = int(math.floor(0.5 - float(disparity) * dv))
    return sx, sy


@dataclass(frozen=True)
class LightField:
    """Dense 4D luminance array with immutable samples."""

    samples: np.ndarray

    def __post_init__(self):
        arr = np.array(self.samples, dtype=np.float64, copy=True)
        if arr.ndim != 4:
            raise ValueError(f"samples must be 4D (n_u, n_v, height, width), got {arr.ndim}D")
        if min(arr.shape) < 1:
            raise ValueError(f"all dimensions must be >= 1, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("samples must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def n_u(self) -> int:
        return self.samples.shape[0]

    @property
    def n_v(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[2]

    @property
    def width(self) -> int:
        return self.samples.shape[3]

    def view(self, u: int, v: int) -> np.ndarray:
        return self.samples[u, v]

    def sample(self, u: int, v: int, x: int, y: int) -> float:
        return float(self.samples[u, v, x, y])


@dataclass(frozen=True)
class DisparityMap:
    """Per-pixel disparity for the reference view (0, 0)."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise ValueError(f"disparity map must be 2D, got {arr.ndim}D")
        if not np.isfinite(arr).all():
            raise ValueError("disparity values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def _read_pgm(path: Path) -> tuple[np.ndarray, int]:
    """Parse a binary PGM (P5) file; returns (array, maxval)."""
    raw = path.read_bytes()
    pos = 0

    def next_token() -> bytes:
        nonlocal pos
        while pos < len(raw):
            c = raw[pos : pos + 1]
            if c == b"#":
                while pos < len(raw) and raw[pos : pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            elif c.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise InputFormatError(f"truncated PGM header in {path.name}")
        return raw[start:pos]

    magic = next_token()
    if magic != b"P5":
        raise InputFormatError(f"{path.name}: not a binary PGM (magic {magic!r})")
    try:
        width = int(next_token())
        height = int(next_token())
        maxval = int(next_token())
    except ValueError as exc:
        raise InputFormatError(f"{path.name}: malformed PGM header") from exc
    pos += 1  # single whitespace byte separates header from raster
    if maxval < 1 or maxval > 65535:
        raise InputFormatError(f"{path.name}: unsupported maxval {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.uint8
    count = width * height
    data = np.frombuffer(raw, dtype=dtype, count=count, offset=pos)
    if data.size != count:
        raise InputFormatError(f"{path.name}: truncated PGM raster")
    return data.reshape(height, width).astype(np.int64), maxval


def _write_pgm(path: Path, array: np.ndarray, maxval: int) -> None:
    arr = np.asarray(array)
    if arr.ndim != 2:
        raise ValueError("PGM payload must be 2D")
    if arr.min() < 0 or arr.max() > maxval:
        raise ValueError(f"values outside [0, {maxval}]")
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n{maxval}\n".encode("ascii")
    dtype = np.dtype(">u2") if maxval > 255 else np.uint8
    path.write_bytes(header + arr.astype(dtype).tobytes())


def view_file_name(u: int, v: int) -> str:
    return f"view_{u}_{v}.pgm"


def load_light_field(directory) -> LightField:
    """Read a light field directory: metadata JSON plus one 8-bit PGM per view."""
    d = Path(directory)
    meta_path = d / METADATA_NAME
    if not meta_path.is_file():
        raise InputFormatError(f"missing metadata file {METADATA_NAME} in {d}")
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"malformed {METADATA_NAME}: {exc}") from exc
    for key in _META_KEYS:
        if key not in meta:
            raise InputFormatError(f"{METADATA_NAME} lacks required key {key!r}")
    n_u, n_v = int(meta["n_u"]), int(meta["n_v"])
    width, height = int(meta["width"]), int(meta["height"])
    if meta["bitdepth"] != 8:
        raise InputFormatError(f"unsupported bitdepth {meta['bitdepth']} (only 8 is supported)")
    if n_u < 1 or n_v < 1 or width < 1 or height < 1:
        raise InputFormatError("metadata dimensions must be positive")
    samples = np.empty((n_u, n_v, height, width), dtype=np.float64)
    for u in range(n_u):
        for v in range(n_v):
            p = d / view_file_name(u, v)
            if not p.is_file():
                raise InputFormatError(f"missing view file {p.name}")
            img, maxval = _read_pgm(p)
            if maxval != 255:
                raise InputFormatError(f"{p.name}: unsupported maxval {maxval} for a view")
            if img.shape != (height, width):
                raise InputFormatError(
                    f"{p.name}: dimension mismatch, PGM is {img.shape[1]}x{img.shape[0]}"
                    f" but metadata says {width}x{height}"
                )
            samples[u, v] = img
    return LightField(samples)


def save_light_field(lf: LightField, directory) -> None:
    """Write metadata plus one 8-bit PGM per view; load(save(lf)) is bit-exact
    for integer-valued samples."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    meta = {
        "n_u": lf.n_u,
        "n_v": lf.n_v,
        "width": lf.width,
        "height": lf.height,
        "bitdepth": 8,
    }
    (d / METADATA_NAME).write_text(json.dumps(meta, sort_keys=True) + "\n")
    quantized = np.clip(round_half_up(lf.samples), 0, 255)
    for u in range(lf.n_u):
        for v in range(lf.n_v):
            _write_pgm(d / view_file_name(u, v), quantized[u, v], 255)


def save_label_map(path, labels: np.ndarray) -> None:
    """Write a label map as a 16-bit PGM."""
    arr = np.asarray(labels)
    if arr.max(initial=0) > 65535:
        raise ValueError("label map exceeds 16-bit range")
    _write_pgm(Path(path), arr, 65535)


def load_label_map(path) -> np.ndarray:
    arr, maxval = _read_pgm(Path(path))
    if maxval != 65535:
        raise InputFormatError(f"{Path(path).name}: expected 16-bit PGM label map")
    return arr.astype(np.int32)


DISPARITY_NAME = "disparity.npy"


def save_disparity(path, disparity) -> None:
    values = disparity.values if isinstance(disparity, DisparityMap) else disparity
    np.save(Path(path), np.asarray(values, dtype=np.float64))


def load_disparity(path) -> DisparityMap:
    try:
        values = np.load(Path(path), allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise InputFormatError(f"unreadable disparity map: {exc}") from exc
    if values.ndim != 2:
        raise InputFormatError("disparity map must be 2D")
    return DisparityMap(np.asarray(values, dtype=np.float64))


def psnr(reference, decoded) -> float:
    """Peak signal-to-noise ratio in dB against a 255 peak.

    Accepts ``LightField`` or bare sample arrays; identical inputs return
    ``math.inf`` as the lossless sentinel.
    """
    ref = reference.samples if isinstance(reference, LightField) else np.asarray(reference)
    dec = decoded.samples if isinstance(decoded, LightField) else np.asarray(decoded)
    if ref.shape != dec.shape:
        raise ValueError(f"shape mismatch: {ref.shape} vs {dec.shape}")
    mse = float(np.mean((ref - dec) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / mse)
