"""Coefficient coding and the bitstream container.

The coefficient back-end learns a variance-ranked scan order over
(band, angular-index) positions, assigns each super-ray to one of five
energy classes that discard a suffix of its scan-ordered coefficients,
quantizes the retained coefficients with per-class per-group uniform
steps chosen by a Lagrangian search, and arithmetic-codes the symbols.

Container layout, byte aligned, multi-byte integers little-endian:

    magic "LFGT" | u8 version | u16 n_u | u16 n_v | u16 width
    | u16 height | u32 super_ray_count | u8 mode | f32 alpha
    | u16 k_block | u16 min_obs
    | scan order: uvarint position count, then (uvarint band,
      uvarint angular) per position
    | quantizer table: 5 * 32 uvarint steps, class-major
    | u32 length + bytes for each of: segmentation, disparity,
      class flags, then the five per-class coefficient payloads

Bytes after the final payload are ignored, so streams may be
concatenated and decoded one at a time.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
import struct

import numpy as np

from .contours import (
    decode_disparities,
    decode_segmentation,
    encode_disparities,
    encode_segmentation,
    quantize_disparity,
)
from .entropy import ArithmeticDecoder, ArithmeticEncoder, SymbolDecoder, SymbolEncoder
from .errors import BitstreamError, LfgtError
from .lightfield import DisparityMap, LightField, psnr, round_half_up
from .pipeline import MODES, apply_forward, apply_inverse, compute_bases
from .segmentation import (
    SuperRaySegmentation,
    project_from_medians,
    project_labels,
    slic_segment,
    view_sizes,
)
from .spectral import CoefficientTensor

MAGIC = b"LFGT"
VERSION = 1
GROUP_COUNT = 32
CLASS_COUNT = 5
STEP_LADDER = tuple(1 << i for i in range(11))  # 1 .. 1024


def write_uvarint(out: bytearray, value: int) -> None:
    if value < 0:
        raise ValueError("uvarint encodes non-negative values")
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return


def read_uvarint(data: bytes, pos: int, what: str) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        if pos >= len(data):
            raise BitstreamError(f"truncated {what}")
        byte = data[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, pos
        shift += 7
        if shift > 63:
            raise BitstreamError(f"malformed varint in {what}")


@dataclass(frozen=True)
class CodecConfig:
    """Encoder knobs; the decode-relevant subset travels in the header."""

    mode: str = "separable"
    k: int = 64
    compactness: float = 10.0
    alpha: float = 1.0
    k_block: int = 10
    lam: float = 0.1
    threshold: float = 1.0
    min_obs: int = 2
    class_search_descending: bool = True
    threads: int | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}, expected one of {MODES}")
        if self.k < 1:
            raise ValueError("super-pixel count must be >= 1")
        if not self.compactness > 0:
            raise ValueError("compactness must be positive")
        if not self.alpha >= 0:
            raise ValueError("alpha must be non-negative")
        if self.k_block < 1:
            raise ValueError("block size must be >= 1")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if not self.threshold >= 0:
            raise ValueError("class threshold must be non-negative")
        if self.min_obs < 1:
            raise ValueError("min_obs must be >= 1")
        if self.threads is not None and self.threads < 1:
            raise ValueError("threads must be >= 1 when given")


@dataclass(frozen=True)
class ScanOrder:
    """Coefficient positions in coding order.

    ``positions[r] = (band, angular index)``; ``variances`` aligns with
    ``positions`` (decoded headers carry no variance table and leave it
    None).
    """

    positions: tuple[tuple[int, int], ...]
    variances: tuple[float, ...] | None = None
    rank: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.variances is not None and len(self.variances) != len(self.positions):
            raise ValueError("one variance per position")
        rank = {pos: i for i, pos in enumerate(self.positions)}
        if len(rank) != len(self.positions):
            raise ValueError("duplicate scan position")
        object.__setattr__(self, "rank", rank)


@dataclass(frozen=True)
class QuantizerBank:
    """One step size per (class, scan group)."""

    steps: np.ndarray

    def __post_init__(self):
        steps = np.ascontiguousarray(np.asarray(self.steps, dtype=np.int64))
        if steps.shape != (CLASS_COUNT, GROUP_COUNT):
            raise ValueError(f"step table must be {CLASS_COUNT}x{GROUP_COUNT}")
        if np.any(steps <= 0):
            raise ValueError("nonpositive quantizer step")
        steps.flags.writeable = False
        object.__setattr__(self, "steps", steps)


def learn_scan_order(tensors, min_obs: int = 2) -> ScanOrder:
    """Rank positions by decreasing coefficient variance.

    Positions observed fewer than ``min_obs`` times go after every
    ranked position, ordered by (band, angular index); variance ties
    break the same way.
    """
    tensors = list(tensors)
    if not tensors:
        raise LfgtError("no training tensors")
    counts: dict[int, np.ndarray] = {}
    sums: dict[int, np.ndarray] = {}
    sumsq: dict[int, np.ndarray] = {}
    for tensor in tensors:
        for bands in tensor.coeffs:
            for b, vec in enumerate(bands):
                m = vec.size
                if m == 0:
                    continue
                if b not in counts or counts[b].size < m:
                    for table, width in ((counts, m), (sums, m), (sumsq, m)):
                        old = table.get(b)
                        grown = np.zeros(width, dtype=np.float64)
                        if old is not None:
                            grown[: old.size] = old
                        table[b] = grown
                counts[b][:m] += 1
                sums[b][:m] += vec
                sumsq[b][:m] += vec * vec
    ranked = []
    deferred = []
    for b in sorted(counts):
        n = counts[b]
        mean = sums[b] / n
        var = np.maximum(sumsq[b] / n - mean * mean, 0.0)
        for a in range(n.size):
            if n[a] >= min_obs:
                ranked.append((-var[a], b, a))
            else:
                deferred.append((b, a, var[a]))
    ranked.sort()
    deferred.sort()
    positions = [(b, a) for _, b, a in ranked] + [(b, a) for b, a, _ in deferred]
    variances = [-neg for neg, _, _ in ranked] + [v for _, _, v in deferred]
    return ScanOrder(tuple(positions), tuple(variances))


def discard_count(n: int, class_id: int) -> int:
    """Scan-suffix length dropped by a class; the leading position always
    survives so class 4 keeps exactly the spatio-angular DC."""
    if class_id == 0 or n == 0:
        return 0
    return min(round_half_up(n * class_id / 4), n - 1)


def _rank_grid(scan: ScanOrder) -> np.ndarray:
    max_b = max(b for b, _ in scan.positions) + 1
    max_a = max(a for _, a in scan.positions) + 1
    grid = np.full((max_b, max_a), -1, dtype=np.int64)
    for r, (b, a) in enumerate(scan.positions):
        grid[b, a] = r
    return grid


def _band_lengths(tensor: CoefficientTensor) -> list[np.ndarray]:
    return [
        np.array([vec.size for vec in bands], dtype=np.int64)
        for bands in tensor.coeffs
    ]


def _structure_band_lengths(seg: SuperRaySegmentation, mode: str) -> list[np.ndarray]:
    """Per-super-ray band lengths derived from geometry alone, matching
    the forward transform's output shape."""
    sizes = view_sizes(seg)
    out: list[np.ndarray] = []
    for row in sizes:
        if mode == "nonseparable":
            out.append(np.ones(int(row.sum()), dtype=np.int64))
            continue
        present = row[row > 0]
        max_band = int(present.max()) if present.size else 0
        lengths = np.empty(max_band, dtype=np.int64)
        for b in range(max_band):
            lengths[b] = int(np.count_nonzero(row >= b + 1))
        out.append(lengths)
    return out


class _ScanLayout:
    """Per-super-ray scan bookkeeping shared by the coding stages.

    ``order`` maps scan-sorted slots back into band-major flat storage;
    ``groups`` holds each sorted slot's quantizer group.
    """

    def __init__(self, band_lengths: list[np.ndarray], scan: ScanOrder):
        grid = _rank_grid(scan)
        total = len(scan.positions)
        self.band_lengths = band_lengths
        self.order: list[np.ndarray] = []
        self.groups: list[np.ndarray] = []
        for lengths in band_lengths:
            if lengths.size == 0:
                self.order.append(np.empty(0, dtype=np.int64))
                self.groups.append(np.empty(0, dtype=np.int64))
                continue
            band_idx = np.repeat(np.arange(lengths.size), lengths)
            ang_idx = np.concatenate([np.arange(m) for m in lengths])
            if band_idx.size and (
                lengths.max() > grid.shape[1] or lengths.size > grid.shape[0]
            ):
                raise BitstreamError("scan order does not cover coefficient positions")
            ranks = grid[band_idx, ang_idx]
            if np.any(ranks < 0):
                raise BitstreamError("scan order does not cover coefficient positions")
            order = np.argsort(ranks)
            self.order.append(order)
            self.groups.append(ranks[order] * GROUP_COUNT // total)

    def sorted_values(self, flat: np.ndarray, r: int) -> np.ndarray:
        return flat[self.order[r]]


def _flatten(tensor: CoefficientTensor, r: int) -> np.ndarray:
    bands = tensor.coeffs[r]
    if not bands:
        return np.empty(0, dtype=np.float64)
    return np.concatenate([np.asarray(vec, dtype=np.float64) for vec in bands])


def classify_super_rays(
    tensor: CoefficientTensor,
    scan: ScanOrder,
    threshold: float = 1.0,
    descending: bool = True,
) -> np.ndarray:
    """Assign each super-ray the class whose discarded scan suffix has
    mean energy below the threshold.

    Classes are searched sequentially and winners leave the pool; the
    default order tries the largest discard first.
    """
    layout = _ScanLayout(_band_lengths(tensor), scan)
    n_rays = tensor.n_super_rays
    classes = np.zeros(n_rays, dtype=np.int32)
    assigned = np.zeros(n_rays, dtype=bool)
    search = (4, 3, 2, 1) if descending else (1, 2, 3, 4)
    sorted_vals = [
        layout.sorted_values(_flatten(tensor, r), r) for r in range(n_rays)
    ]
    for class_id in search:
        for r in range(n_rays):
            if assigned[r]:
                continue
            vals = sorted_vals[r]
            dropped = discard_count(vals.size, class_id)
            if dropped:
                tail = vals[vals.size - dropped :]
                mean_energy = float(tail @ tail) / dropped
            else:
                mean_energy = 0.0
            if mean_energy < threshold:
                classes[r] = class_id
                assigned[r] = True
    return classes


def _round_away(values: np.ndarray, steps) -> np.ndarray:
    mag = np.floor(np.abs(values) / steps + 0.5)
    return np.where(values < 0, -mag, mag).astype(np.int64)


def _step_cost(values: np.ndarray, step: int, lam: float) -> float:
    symbols = _round_away(values, step)
    err = values - symbols * step
    distortion = float(err @ err)
    _, counts = np.unique(symbols, return_counts=True)
    total = counts.sum()
    bits = float(np.sum(counts * (np.log2(total) - np.log2(counts))))
    return distortion + lam * bits


def design_quantizers(
    tensor: CoefficientTensor,
    scan: ScanOrder,
    classes: np.ndarray,
    lam: float = 0.1,
) -> QuantizerBank:
    """Per (class, group) Lagrangian step search over the power-of-two
    ladder; rate is the empirical symbol entropy.  Ties keep the smaller
    step; empty cells default to step 1."""
    layout = _ScanLayout(_band_lengths(tensor), scan)
    buckets: list[list[list[np.ndarray]]] = [
        [[] for _ in range(GROUP_COUNT)] for _ in range(CLASS_COUNT)
    ]
    for r in range(tensor.n_super_rays):
        vals = layout.sorted_values(_flatten(tensor, r), r)
        keep = vals.size - discard_count(vals.size, int(classes[r]))
        groups = layout.groups[r][:keep]
        vals = vals[:keep]
        for g in np.unique(groups):
            buckets[int(classes[r])][int(g)].append(vals[groups == g])
    steps = np.ones((CLASS_COUNT, GROUP_COUNT), dtype=np.int64)
    for c in range(CLASS_COUNT):
        for g in range(GROUP_COUNT):
            if not buckets[c][g]:
                continue
            values = np.concatenate(buckets[c][g])
            best_step, best_cost = 1, None
            for step in STEP_LADDER:
                cost = _step_cost(values, step, lam)
                if best_cost is None or cost < best_cost:
                    best_step, best_cost = step, cost
            steps[c, g] = best_step
    return QuantizerBank(steps)


def quantize_tensor(
    tensor: CoefficientTensor,
    scan: ScanOrder,
    classes: np.ndarray,
    bank: QuantizerBank,
):
    """Quantize retained coefficients, zero the discarded suffix.

    Returns (per-super-ray symbol arrays in scan order, per-super-ray
    group arrays aligned with the symbols, dequantized tensor).
    """
    layout = _ScanLayout(_band_lengths(tensor), scan)
    symbols: list[np.ndarray] = []
    group_runs: list[np.ndarray] = []
    deq = CoefficientTensor(mode=tensor.mode, coeffs=[])
    for r in range(tensor.n_super_rays):
        flat = _flatten(tensor, r)
        vals = layout.sorted_values(flat, r)
        keep = vals.size - discard_count(vals.size, int(classes[r]))
        groups = layout.groups[r][:keep]
        step = bank.steps[int(classes[r])][groups]
        qs = _round_away(vals[:keep], step)
        symbols.append(qs)
        group_runs.append(groups)
        deq_sorted = np.zeros(vals.size)
        deq_sorted[:keep] = qs * step
        deq_flat = np.empty(vals.size)
        deq_flat[layout.order[r]] = deq_sorted
        bands = []
        start = 0
        for m in layout.band_lengths[r]:
            bands.append(deq_flat[start : start + m])
            start += m
        deq.coeffs.append(bands)
    return symbols, group_runs, deq


def encode_coefficient_payload(runs) -> bytes:
    """One class's symbols; contexts are keyed by quantizer group and
    magnitude bin position."""
    enc = ArithmeticEncoder()
    sym = SymbolEncoder(enc)
    for values, groups in runs:
        for value, g in zip(values.tolist(), groups.tolist()):
            sym.encode(int(value), tag=int(g))
    return enc.finish()


def decode_coefficient_payload(data: bytes, group_runs) -> list[np.ndarray]:
    dec = ArithmeticDecoder(data)
    sym = SymbolDecoder(dec)
    out = []
    for groups in group_runs:
        out.append(
            np.array([sym.decode(tag=int(g)) for g in groups.tolist()], dtype=np.int64)
        )
    return out


def encode_class_flags(classes: np.ndarray) -> bytes:
    enc = ArithmeticEncoder()
    sym = SymbolEncoder(enc)
    for value in classes.tolist():
        sym.encode(int(value), tag="class")
    return enc.finish()


def decode_class_flags(data: bytes, k: int) -> np.ndarray:
    dec = ArithmeticDecoder(data)
    sym = SymbolDecoder(dec)
    out = np.empty(k, dtype=np.int32)
    for r in range(k):
        value = sym.decode(tag="class")
        if not 0 <= value < CLASS_COUNT:
            raise BitstreamError("class flag out of range")
        out[r] = value
    return out


def _pack_header(
    dims: tuple[int, int, int, int],
    k: int,
    mode: str,
    alpha: float,
    k_block: int,
    min_obs: int,
    scan: ScanOrder,
    bank: QuantizerBank,
) -> bytes:
    buf = bytearray(MAGIC)
    buf.append(VERSION)
    for value in dims:
        if not 0 < value <= 0xFFFF:
            raise LfgtError("dimension does not fit the container")
        buf += struct.pack("<H", value)
    buf += struct.pack("<I", k)
    buf.append(MODES.index(mode))
    buf += struct.pack("<f", alpha)
    buf += struct.pack("<H", k_block)
    buf += struct.pack("<H", min_obs)
    write_uvarint(buf, len(scan.positions))
    for b, a in scan.positions:
        write_uvarint(buf, b)
        write_uvarint(buf, a)
    for c in range(CLASS_COUNT):
        for g in range(GROUP_COUNT):
            write_uvarint(buf, int(bank.steps[c, g]))
    return bytes(buf)


def _parse_header(data: bytes):
    if len(data) < 4 or data[:4] != MAGIC:
        raise BitstreamError("bad magic")
    if len(data) < 5:
        raise BitstreamError("truncated header")
    if data[4] != VERSION:
        raise BitstreamError(f"unsupported version {data[4]}")
    pos = 5
    fixed = struct.calcsize("<HHHHIBfHH")
    if len(data) < pos + fixed:
        raise BitstreamError("truncated header")
    n_u, n_v, width, height, k, mode_id, alpha, k_block, min_obs = struct.unpack_from(
        "<HHHHIBfHH", data, pos
    )
    pos += fixed
    if mode_id >= len(MODES):
        raise BitstreamError("unknown transform mode")
    if min(n_u, n_v, width, height) == 0 or k == 0:
        raise BitstreamError("empty geometry in header")
    count, pos = read_uvarint(data, pos, "scan order")
    positions = []
    for _ in range(count):
        b, pos = read_uvarint(data, pos, "scan order")
        a, pos = read_uvarint(data, pos, "scan order")
        positions.append((b, a))
    steps = np.empty((CLASS_COUNT, GROUP_COUNT), dtype=np.int64)
    for c in range(CLASS_COUNT):
        for g in range(GROUP_COUNT):
            step, pos = read_uvarint(data, pos, "quantizer table")
            if step == 0:
                raise BitstreamError("nonpositive quantizer step")
            steps[c, g] = step
    header = {
        "n_u": n_u,
        "n_v": n_v,
        "width": width,
        "height": height,
        "k": k,
        "mode": MODES[mode_id],
        "alpha": float(alpha),
        "k_block": k_block,
        "min_obs": min_obs,
        "scan": ScanOrder(tuple(positions)),
        "bank": QuantizerBank(steps),
    }
    return header, pos


def _read_section(data: bytes, pos: int, name: str) -> tuple[bytes, int]:
    if pos + 4 > len(data):
        raise BitstreamError(f"truncated {name} section length")
    (length,) = struct.unpack_from("<I", data, pos)
    pos += 4
    if pos + length > len(data):
        raise BitstreamError(f"truncated {name} section")
    return data[pos : pos + length], pos + length


def _class_runs(classes: np.ndarray, per_ray):
    """Group per-super-ray arrays by class, label order within a class."""
    return [
        [per_ray[r] for r in range(len(per_ray)) if classes[r] == c]
        for c in range(CLASS_COUNT)
    ]


def stream_sections(data: bytes) -> dict:
    """Byte sizes of every container section without decoding payloads."""
    header, pos = _parse_header(data)
    header_len = pos
    sizes = {}
    for name in ("segmentation", "disparity", "class flags"):
        payload, pos = _read_section(data, pos, name)
        sizes[name.replace(" ", "_")] = len(payload)
    coeff = []
    for c in range(CLASS_COUNT):
        payload, pos = _read_section(data, pos, f"class {c} coefficients")
        coeff.append(len(payload))
    return {
        "header": header_len,
        "segmentation": sizes["segmentation"],
        "disparity": sizes["disparity"],
        "class_flags": sizes["class_flags"],
        "coefficients": coeff,
        "consumed": pos,
        "n_u": header["n_u"],
        "n_v": header["n_v"],
        "width": header["width"],
        "height": header["height"],
    }


def encode_light_field(lf: LightField, disparity, config: CodecConfig):
    """Full encode; returns (stream bytes, stats dict).

    The per-pixel disparity map is snapped to the 1/8-pixel grid before
    medians are taken so the coded medians round-trip exactly, and alpha
    passes through float32 so the decoder optimizes with the identical
    coupling weight.
    """
    t_total = time.perf_counter()
    if isinstance(disparity, DisparityMap):
        dvals = disparity.values
    else:
        dvals = np.asarray(disparity, dtype=np.float64)
    if dvals.shape != (lf.height, lf.width):
        raise LfgtError("disparity map does not match the view size")

    t0 = time.perf_counter()
    sp = slic_segment(lf.view(0, 0), config.k, config.compactness)
    seg = project_labels(sp, quantize_disparity(dvals), lf.n_u, lf.n_v)
    t_segment = time.perf_counter() - t0

    alpha32 = float(np.float32(config.alpha))
    t0 = time.perf_counter()
    bases = compute_bases(
        seg, config.mode, alpha=alpha32, k_block=config.k_block, threads=config.threads
    )
    t_bases = time.perf_counter() - t0

    t0 = time.perf_counter()
    tensor = apply_forward(lf, seg, bases)
    t_forward = time.perf_counter() - t0

    t0 = time.perf_counter()
    scan = learn_scan_order([tensor], config.min_obs)
    classes = classify_super_rays(
        tensor, scan, config.threshold, config.class_search_descending
    )
    bank = design_quantizers(tensor, scan, classes, config.lam)
    symbols, group_runs, deq = quantize_tensor(tensor, scan, classes, bank)
    t_quantize = time.perf_counter() - t0

    t0 = time.perf_counter()
    seg_bytes = encode_segmentation(sp)
    disp_bytes = encode_disparities(seg.median_disparity)
    class_bytes = encode_class_flags(classes)
    symbol_runs = _class_runs(classes, symbols)
    group_class_runs = _class_runs(classes, group_runs)
    payloads = [
        encode_coefficient_payload(list(zip(symbol_runs[c], group_class_runs[c])))
        for c in range(CLASS_COUNT)
    ]
    t_entropy = time.perf_counter() - t0

    header = _pack_header(
        (lf.n_u, lf.n_v, lf.width, lf.height),
        seg.k,
        config.mode,
        alpha32,
        config.k_block,
        config.min_obs,
        scan,
        bank,
    )
    stream = bytearray(header)
    for section in (seg_bytes, disp_bytes, class_bytes, *payloads):
        stream += struct.pack("<I", len(section))
        stream += section
    stream = bytes(stream)

    recon = np.clip(round_half_up(apply_inverse(deq, seg, bases)), 0, 255).astype(
        np.float64
    )
    quality = psnr(lf.samples, recon)

    total_bits = len(stream) * 8
    seg_share = (len(seg_bytes) + 4) * 8 / total_bits * 100.0
    disp_share = (len(disp_bytes) + 4) * 8 / total_bits * 100.0
    stats = {
        "mode": config.mode,
        "super_rays": int(seg.k),
        "bpp": total_bits / (lf.n_u * lf.n_v * lf.height * lf.width),
        "psnr": quality,
        "bytes": {
            "total": len(stream),
            "header": len(header),
            "segmentation": len(seg_bytes),
            "disparity": len(disp_bytes),
            "class_flags": len(class_bytes),
            "coefficients": [len(p) for p in payloads],
        },
        "rate_split": {
            "segmentation": seg_share,
            "disparity": disp_share,
            "coefficients": 100.0 - seg_share - disp_share,
        },
        "classes": np.bincount(classes, minlength=CLASS_COUNT).tolist(),
        "timing": {
            "segment": t_segment,
            "bases": t_bases,
            "transform": t_forward,
            "quantize": t_quantize,
            "entropy": t_entropy,
            "total": time.perf_counter() - t_total,
        },
    }
    return stream, stats


def decode_light_field(data: bytes):
    """Full decode; returns (LightField, info dict).

    Segmentation, bases, and the coupling optimization are re-derived
    from coded side information, so the reconstruction matches the
    encoder's dequantized coefficients exactly.
    """
    header, pos = _parse_header(data)
    header_len = pos
    seg_bytes, pos = _read_section(data, pos, "segmentation")
    disp_bytes, pos = _read_section(data, pos, "disparity")
    class_bytes, pos = _read_section(data, pos, "class flags")
    payloads = []
    for c in range(CLASS_COUNT):
        payload, pos = _read_section(data, pos, f"class {c} coefficients")
        payloads.append(payload)

    sp = decode_segmentation(seg_bytes, header["height"], header["width"])
    if sp.k != header["k"]:
        raise BitstreamError("super-ray count mismatch")
    medians = decode_disparities(disp_bytes)
    if medians.shape != (sp.k,):
        raise BitstreamError("disparity count mismatch")
    classes = decode_class_flags(class_bytes, sp.k)

    maps = project_from_medians(sp, medians, header["n_u"], header["n_v"])
    seg = SuperRaySegmentation(maps, medians, sp.k)
    bases = compute_bases(
        seg, header["mode"], alpha=header["alpha"], k_block=header["k_block"]
    )

    layout = _ScanLayout(_structure_band_lengths(seg, header["mode"]), header["scan"])
    group_runs: list[np.ndarray] = []
    for r in range(seg.k):
        total = layout.order[r].size
        keep = total - discard_count(total, int(classes[r]))
        group_runs.append(layout.groups[r][:keep])
    per_class_groups = _class_runs(classes, group_runs)
    decoded = [
        decode_coefficient_payload(payloads[c], per_class_groups[c])
        for c in range(CLASS_COUNT)
    ]
    cursor = [0] * CLASS_COUNT
    steps = header["bank"].steps
    tensor = CoefficientTensor(mode=header["mode"], coeffs=[])
    for r in range(seg.k):
        c = int(classes[r])
        qs = decoded[c][cursor[c]]
        cursor[c] += 1
        total = layout.order[r].size
        deq_sorted = np.zeros(total)
        deq_sorted[: qs.size] = qs * steps[c][group_runs[r]]
        deq_flat = np.empty(total)
        deq_flat[layout.order[r]] = deq_sorted
        bands = []
        start = 0
        for m in layout.band_lengths[r]:
            bands.append(deq_flat[start : start + m])
            start += m
        tensor.coeffs.append(bands)

    raw = apply_inverse(tensor, seg, bases)
    samples = np.clip(round_half_up(raw), 0, 255).astype(np.float64)
    info = {
        "mode": header["mode"],
        "super_rays": int(sp.k),
        "alpha": header["alpha"],
        "k_block": header["k_block"],
        "min_obs": header["min_obs"],
        "classes": np.bincount(classes, minlength=CLASS_COUNT).tolist(),
        "bytes": {
            "consumed": pos,
            "header": header_len,
            "segmentation": len(seg_bytes),
            "disparity": len(disp_bytes),
            "class_flags": len(class_bytes),
            "coefficients": [len(p) for p in payloads],
        },
    }
    return LightField(samples), info
