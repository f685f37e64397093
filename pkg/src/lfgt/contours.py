"""Lossless segmentation and disparity payloads.

The reference label map is coded as crack-edge contours: the boundary
between two differently labeled pixels is an edge of the corner lattice,
and the full set of such edges determines the partition.  Edges are traced
into chains (maximal paths preferring to continue straight, then right,
then left), and each chain is sent as a start corner, an initial direction
and a string of {straight, left, right} moves coded with an order-2
adaptive context.  The decoder marks the edges, flood-fills the pixel grid
across uncracked borders and numbers regions in raster order of their first
pixel; the encoder applies the same renumbering, so the round trip is
exact for canonical maps.

Median disparities are quantized to 1/8 pixel, delta-coded in label order
and sent through the same adaptive arithmetic layer.
"""

from __future__ import annotations

import numpy as np

from .entropy import (
    AdaptiveBit,
    ArithmeticDecoder,
    ArithmeticEncoder,
    SymbolDecoder,
    SymbolEncoder,
)
from .errors import BitstreamError
from .segmentation import SuperPixelMap, canonical_labels

# directions on the corner lattice: index -> (dx, dy)
_DIRS = ((-1, 0), (0, 1), (1, 0), (0, -1))  # N, E, S, W
_STRAIGHT, _RIGHT, _LEFT = 0, 1, 2
DISPARITY_SCALE = 8.0


def _crack_arrays(labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Boolean maps of interior crack edges.

    ``vseg[i, j]`` is the vertical segment from corner (i, j) to (i+1, j),
    defined for 0 <= i < H and 1 <= j <= W-1; ``hseg[i, j]`` the horizontal
    segment from (i, j) to (i, j+1), for 1 <= i <= H-1 and 0 <= j < W.
    Border segments are implicit and never coded.
    """
    h, w = labels.shape
    vseg = np.zeros((h, w + 1), dtype=bool)
    hseg = np.zeros((h + 1, w), dtype=bool)
    vseg[:, 1:w] = labels[:, :-1] != labels[:, 1:]
    hseg[1:h, :] = labels[:-1, :] != labels[1:, :]
    return vseg, hseg


def _segment_ref(i: int, j: int, d: int):
    """(array-name, index) of the segment leaving corner (i, j) toward d."""
    if d == 0:
        return "v", i - 1, j
    if d == 2:
        return "v", i, j
    if d == 1:
        return "h", i, j
    return "h", i, j - 1


def _has_segment(vseg, hseg, i, j, d) -> bool:
    name, a, b = _segment_ref(i, j, d)
    arr = vseg if name == "v" else hseg
    if a < 0 or b < 0 or a >= arr.shape[0] or b >= arr.shape[1]:
        return False
    return bool(arr[a, b])


def _clear_segment(vseg, hseg, i, j, d) -> None:
    name, a, b = _segment_ref(i, j, d)
    (vseg if name == "v" else hseg)[a, b] = False


def _set_segment(vseg, hseg, i, j, d) -> None:
    name, a, b = _segment_ref(i, j, d)
    arr = vseg if name == "v" else hseg
    if a < 0 or b < 0 or a >= arr.shape[0] or b >= arr.shape[1]:
        raise BitstreamError("contour chain leaves the lattice")
    arr[a, b] = True


def trace_chains(labels: np.ndarray) -> list[tuple[int, int, int, list[int]]]:
    """Decompose the crack-edge set into chains of differential moves.

    Chains start at the first unvisited segment in corner raster order
    (directions tried E, S, W, N) and extend while any unvisited segment
    continues from the current corner, preferring straight, then right,
    then left.  Every crack edge lands in exactly one chain.
    """
    vseg, hseg = _crack_arrays(labels)
    h, w = labels.shape
    chains = []
    for ci in range(h + 1):
        for cj in range(w + 1):
            for d0 in (1, 2, 3, 0):  # E, S, W, N
                while _has_segment(vseg, hseg, ci, cj, d0):
                    moves: list[int] = []
                    i, j, d = ci, cj, d0
                    _clear_segment(vseg, hseg, i, j, d)
                    i, j = i + _DIRS[d][0], j + _DIRS[d][1]
                    while True:
                        advanced = False
                        for move, nd in (
                            (_STRAIGHT, d),
                            (_RIGHT, (d + 1) % 4),
                            (_LEFT, (d - 1) % 4),
                        ):
                            if _has_segment(vseg, hseg, i, j, nd):
                                _clear_segment(vseg, hseg, i, j, nd)
                                moves.append(move)
                                d = nd
                                i, j = i + _DIRS[d][0], j + _DIRS[d][1]
                                advanced = True
                                break
                        if not advanced:
                            break
                    chains.append((ci, cj, d0, moves))
    return chains


def encode_segmentation(sp: SuperPixelMap) -> bytes:
    """Code the canonical renumbering of the map; decode reproduces it."""
    labels, _ = canonical_labels(sp.labels)
    h, w = labels.shape
    chains = trace_chains(labels)
    enc = ArithmeticEncoder()
    sym = SymbolEncoder(enc)
    move_models: dict[tuple, AdaptiveBit] = {}
    corner_bits = max(1, int(np.ceil(np.log2((h + 1) * (w + 1)))))
    sym.encode(len(chains), tag="count")
    for ci, cj, d0, moves in chains:
        for shift in range(corner_bits - 1, -1, -1):
            enc.encode_bypass((ci * (w + 1) + cj) >> shift & 1)
        enc.encode_bypass(d0 >> 1)
        enc.encode_bypass(d0 & 1)
        sym.encode(len(moves), tag="length")
        prev2, prev1 = 3, 3  # start sentinel
        for move in moves:
            model0 = move_models.setdefault((0, prev2, prev1), AdaptiveBit())
            enc.encode(1 if move == _STRAIGHT else 0, model0)
            if move != _STRAIGHT:
                model1 = move_models.setdefault((1, prev2, prev1), AdaptiveBit())
                enc.encode(1 if move == _RIGHT else 0, model1)
            prev2, prev1 = prev1, move
    return enc.finish()


def decode_segmentation(data: bytes, height: int, width: int) -> SuperPixelMap:
    dec = ArithmeticDecoder(data)
    sym = SymbolDecoder(dec)
    move_models: dict[tuple, AdaptiveBit] = {}
    vseg = np.zeros((height, width + 1), dtype=bool)
    hseg = np.zeros((height + 1, width), dtype=bool)
    corner_bits = max(1, int(np.ceil(np.log2((height + 1) * (width + 1)))))
    n_chains = sym.decode(tag="count")
    if n_chains < 0 or n_chains > (height + 1) * (width + 1) * 2:
        raise BitstreamError("implausible contour chain count")
    for _ in range(n_chains):
        corner = 0
        for _ in range(corner_bits):
            corner = (corner << 1) | dec.decode_bypass()
        i, j = divmod(corner, width + 1)
        if i > height:
            raise BitstreamError("contour start outside the image")
        d = (dec.decode_bypass() << 1) | dec.decode_bypass()
        n_moves = sym.decode(tag="length")
        if n_moves < 0:
            raise BitstreamError("negative chain length")
        ni, nj = i + _DIRS[d][0], j + _DIRS[d][1]
        if not (0 <= ni <= height and 0 <= nj <= width):
            raise BitstreamError("contour leaves the image")
        _set_segment(vseg, hseg, i, j, d)
        i, j = ni, nj
        prev2, prev1 = 3, 3
        for _ in range(n_moves):
            model0 = move_models.setdefault((0, prev2, prev1), AdaptiveBit())
            if dec.decode(model0):
                move = _STRAIGHT
            else:
                model1 = move_models.setdefault((1, prev2, prev1), AdaptiveBit())
                move = _RIGHT if dec.decode(model1) else _LEFT
            if move == _RIGHT:
                d = (d + 1) % 4
            elif move == _LEFT:
                d = (d - 1) % 4
            ni, nj = i + _DIRS[d][0], j + _DIRS[d][1]
            if not (0 <= ni <= height and 0 <= nj <= width):
                raise BitstreamError("contour leaves the image")
            _set_segment(vseg, hseg, i, j, d)
            i, j = ni, nj
            prev2, prev1 = prev1, move
    labels = _fill_regions(vseg, hseg, height, width)
    labels, k = canonical_labels(labels)
    return SuperPixelMap(labels, k)


def _fill_regions(vseg: np.ndarray, hseg: np.ndarray, h: int, w: int) -> np.ndarray:
    """Connected components across uncracked pixel borders by
    min-propagation; region ids become raster-ordered after renumbering."""
    open_h = ~vseg[:, 1:w]   # pixel (i, j-1) ~ (i, j)
    open_v = ~hseg[1:h, :]   # pixel (i-1, j) ~ (i, j)
    comp = np.arange(h * w, dtype=np.int64).reshape(h, w)
    for _ in range(h * w):
        prev = comp
        comp = comp.copy()
        np.minimum(comp[1:, :], np.where(open_v, prev[:-1, :], comp[1:, :]), out=comp[1:, :])
        np.minimum(comp[:-1, :], np.where(open_v, prev[1:, :], comp[:-1, :]), out=comp[:-1, :])
        np.minimum(comp[:, 1:], np.where(open_h, prev[:, :-1], comp[:, 1:]), out=comp[:, 1:])
        np.minimum(comp[:, :-1], np.where(open_h, prev[:, 1:], comp[:, :-1]), out=comp[:, :-1])
        if np.array_equal(comp, prev):
            break
    return comp


def quantize_disparity(values) -> np.ndarray:
    """Round to the 1/8-pixel grid, ties toward +infinity."""
    return np.floor(np.asarray(values, dtype=np.float64) * DISPARITY_SCALE + 0.5) / DISPARITY_SCALE


def encode_disparities(medians: np.ndarray) -> bytes:
    """Delta-code the 1/8-pixel quantized medians in label order."""
    q = np.floor(np.asarray(medians, dtype=np.float64) * DISPARITY_SCALE + 0.5).astype(np.int64)
    enc = ArithmeticEncoder()
    sym = SymbolEncoder(enc)
    sym.encode(int(q.size), tag="count")
    prev = 0
    for value in q.tolist():
        sym.encode(value - prev, tag="delta")
        prev = value
    return enc.finish()


def decode_disparities(data: bytes) -> np.ndarray:
    dec = ArithmeticDecoder(data)
    sym = SymbolDecoder(dec)
    count = sym.decode(tag="count")
    if count < 0:
        raise BitstreamError("negative disparity count")
    out = np.empty(count, dtype=np.float64)
    prev = 0
    for i in range(count):
        prev += sym.decode(tag="delta")
        out[i] = prev / DISPARITY_SCALE
    return out
