"""Reference-view super-pixels and their disparity-driven propagation.

A super-pixel map is computed once on the top-left view; each super-pixel is
then shifted into every other view by the rounded product of its median
disparity and the view offset, which partitions the whole light field into
super-rays.  Projection is anchored: row 0 is filled directly from view
(0, 0); every other row m gets one vertical projection (0, 0) -> (m, 0) and
the resolved map of (m, 0) is then projected horizontally across the row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import LfgtError
from .lightfield import DisparityMap, disparity_shift


@dataclass(frozen=True)
class SuperPixelMap:
    """Labels for the reference view; every value in 0..k-1 occurs."""

    labels: np.ndarray
    k: int

    def __post_init__(self):
        arr = np.array(self.labels, dtype=np.int32, copy=True)
        if arr.ndim != 2:
            raise ValueError("label map must be 2D")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        present = np.bincount(arr.ravel(), minlength=self.k)
        if arr.min() < 0 or arr.max() >= self.k:
            raise ValueError("labels must lie in [0, k)")
        if (present[: self.k] == 0).any():
            raise ValueError("every label in 0..k-1 must occur at least once")
        arr.setflags(write=False)
        object.__setattr__(self, "labels", arr)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


@dataclass(frozen=True)
class SuperRaySegmentation:
    """Per-view label maps plus the median disparity of each super-ray."""

    label_maps: np.ndarray  # (n_u, n_v, height, width) int32
    median_disparity: np.ndarray  # (k,) float64
    k: int

    def __post_init__(self):
        maps = np.array(self.label_maps, dtype=np.int32, copy=True)
        med = np.array(self.median_disparity, dtype=np.float64, copy=True)
        if maps.ndim != 4:
            raise ValueError("label_maps must be (n_u, n_v, height, width)")
        if med.shape != (self.k,):
            raise ValueError("median_disparity must have one entry per super-ray")
        if maps.min() < 0 or maps.max() >= self.k:
            raise ValueError("labels must lie in [0, k)")
        maps.setflags(write=False)
        med.setflags(write=False)
        object.__setattr__(self, "label_maps", maps)
        object.__setattr__(self, "median_disparity", med)

    @property
    def n_u(self) -> int:
        return self.label_maps.shape[0]

    @property
    def n_v(self) -> int:
        return self.label_maps.shape[1]

    @property
    def height(self) -> int:
        return self.label_maps.shape[2]

    @property
    def width(self) -> int:
        return self.label_maps.shape[3]

    @property
    def n_views(self) -> int:
        return self.n_u * self.n_v


@dataclass(frozen=True)
class CoherenceReport:
    coherent: np.ndarray  # (k,) bool

    @property
    def cons_percent(self) -> float:
        if self.coherent.size == 0:
            return 0.0
        return 100.0 * float(np.count_nonzero(self.coherent)) / self.coherent.size


def lower_median(values) -> float:
    """Median taking the lower of the two middle values for even counts."""
    arr = np.sort(np.asarray(values, dtype=np.float64), kind="stable")
    if arr.size == 0:
        raise ValueError("median of empty set")
    return float(arr[(arr.size - 1) // 2])


def canonical_labels(labels: np.ndarray) -> tuple[np.ndarray, int]:
    """Renumber labels by first appearance in raster order."""
    arr = np.asarray(labels)
    flat = arr.ravel()
    uniq, first = np.unique(flat, return_index=True)
    order = np.argsort(first, kind="stable")
    mapping = np.empty(int(uniq.max()) + 1, dtype=np.int32)
    mapping[uniq[order]] = np.arange(order.size, dtype=np.int32)
    return mapping[arr].astype(np.int32), int(order.size)


def connected_components(labels: np.ndarray) -> np.ndarray:
    """Component id per pixel, where a component is a 4-connected region of
    equal label.  The id is the smallest flat raster index in the component,
    computed by min-propagation until fixpoint."""
    arr = np.asarray(labels)
    h, w = arr.shape
    comp = np.arange(h * w, dtype=np.int64).reshape(h, w)
    same_v = arr[1:, :] == arr[:-1, :]
    same_h = arr[:, 1:] == arr[:, :-1]
    for _ in range(h * w):
        prev = comp
        comp = comp.copy()
        np.minimum(comp[1:, :], np.where(same_v, prev[:-1, :], comp[1:, :]), out=comp[1:, :])
        np.minimum(comp[:-1, :], np.where(same_v, prev[1:, :], comp[:-1, :]), out=comp[:-1, :])
        np.minimum(comp[:, 1:], np.where(same_h, prev[:, :-1], comp[:, 1:]), out=comp[:, 1:])
        np.minimum(comp[:, :-1], np.where(same_h, prev[:, 1:], comp[:, :-1]), out=comp[:, :-1])
        if np.array_equal(comp, prev):
            break
    return comp


def _label_slices(labels: np.ndarray, k: int):
    """Counting sort of pixel coordinates by label: returns (xs, ys, offsets)
    such that label j owns xs[offsets[j]:offsets[j+1]]."""
    flat = labels.ravel()
    order = np.argsort(flat, kind="stable")
    counts = np.bincount(flat, minlength=k)
    offsets = np.concatenate(([0], np.cumsum(counts)))
    xs, ys = np.unravel_index(order, labels.shape)
    return xs.astype(np.int64), ys.astype(np.int64), offsets


def slic_segment(
    view: np.ndarray, k: int, compactness: float = 10.0, iterations: int = 10
) -> SuperPixelMap:
    """Grid-seeded local k-means over (luminance, x, y).

    Distance is d_lum + (compactness / S) * d_xy with S = sqrt(N / k); each
    center claims pixels inside a 2S x 2S window, ties go to the
    lower-numbered center.  After the fixed iteration budget, fragments that
    are not their label's largest component are merged into the nearest
    adjacent super-pixel, and labels are renumbered in raster order.
    """
    img = np.asarray(view, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("view must be 2D")
    h, w = img.shape
    n = h * w
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if compactness <= 0:
        raise ValueError("compactness must be positive")
    s = math.sqrt(n / k)
    rows = max(1, int(h / s + 0.5))
    cols = max(1, int(w / s + 0.5))
    # cell-centroid seeding: a grid cell of pixels [i*h/rows, (i+1)*h/rows)
    # has centroid (i + 0.5) * h / rows - 0.5, so on structureless input the
    # update step leaves the centers where they started
    cx = (np.arange(rows, dtype=np.float64) + 0.5) * h / rows - 0.5
    cy = (np.arange(cols, dtype=np.float64) + 0.5) * w / cols - 0.5
    centers_x = np.repeat(cx, cols)
    centers_y = np.tile(cy, rows)
    seed_x = np.clip(np.floor(centers_x + 0.5).astype(np.int64), 0, h - 1)
    seed_y = np.clip(np.floor(centers_y + 0.5).astype(np.int64), 0, w - 1)
    centers_l = img[seed_x, seed_y].astype(np.float64)
    n_centers = rows * cols

    weight = compactness / s
    labels = np.zeros((h, w), dtype=np.int32)
    for _ in range(iterations):
        dist = np.full((h, w), np.inf)
        labels = np.full((h, w), -1, dtype=np.int32)
        for ci in range(n_centers):
            cxi, cyi, cli = centers_x[ci], centers_y[ci], centers_l[ci]
            x0 = max(0, int(math.floor(cxi - s)))
            x1 = min(h, int(math.floor(cxi + s)) + 1)
            y0 = max(0, int(math.floor(cyi - s)))
            y1 = min(w, int(math.floor(cyi + s)) + 1)
            if x0 >= x1 or y0 >= y1:
                continue
            dx = np.arange(x0, x1, dtype=np.float64) - cxi
            dy = np.arange(y0, y1, dtype=np.float64) - cyi
            d_xy = np.sqrt(dx[:, None] ** 2 + dy[None, :] ** 2)
            d = np.abs(img[x0:x1, y0:y1] - cli) + weight * d_xy
            win_dist = dist[x0:x1, y0:y1]
            win_lab = labels[x0:x1, y0:y1]
            better = d < win_dist
            win_dist[better] = d[better]
            win_lab[better] = ci
        if (labels < 0).any():
            # window rounding can strand pixels in corners; nearest center wins
            mx, my = np.nonzero(labels < 0)
            d2 = (mx[:, None] - centers_x[None, :]) ** 2 + (my[:, None] - centers_y[None, :]) ** 2
            labels[mx, my] = np.argmin(d2, axis=1).astype(np.int32)
        counts = np.bincount(labels.ravel(), minlength=n_centers).astype(np.float64)
        sum_l = np.bincount(labels.ravel(), weights=img.ravel(), minlength=n_centers)
        xs_idx = np.repeat(np.arange(h, dtype=np.float64), w)
        ys_idx = np.tile(np.arange(w, dtype=np.float64), h)
        sum_x = np.bincount(labels.ravel(), weights=xs_idx, minlength=n_centers)
        sum_y = np.bincount(labels.ravel(), weights=ys_idx, minlength=n_centers)
        nonzero = counts > 0
        centers_l[nonzero] = sum_l[nonzero] / counts[nonzero]
        centers_x[nonzero] = sum_x[nonzero] / counts[nonzero]
        centers_y[nonzero] = sum_y[nonzero] / counts[nonzero]

    labels = _merge_orphans(labels, n_centers)
    labels, k_actual = canonical_labels(labels)
    return SuperPixelMap(labels, k_actual)


def _merge_orphans(labels: np.ndarray, n_labels: int) -> np.ndarray:
    """Keep each label's largest 4-connected component; merge every other
    fragment into the nearest adjacent super-pixel (centroid distance, ties
    to the smaller label)."""
    h, w = labels.shape
    labels = labels.copy()
    comp = connected_components(labels)
    flat_comp = comp.ravel()
    flat_lab = labels.ravel()
    comp_ids, comp_index, comp_sizes = np.unique(
        flat_comp, return_inverse=True, return_counts=True
    )
    comp_label = flat_lab[comp_ids]

    # largest component per label, ties to the earliest (smallest root id)
    main = {}
    for ci, (lab, size) in enumerate(zip(comp_label, comp_sizes)):
        best = main.get(lab)
        if best is None or size > best[0] or (size == best[0] and comp_ids[ci] < comp_ids[best[1]]):
            main[lab] = (size, ci)
    main_comp = {lab: ci for lab, (_, ci) in main.items()}

    sum_x = np.bincount(comp_index, weights=np.repeat(np.arange(h), w).astype(np.float64))
    sum_y = np.bincount(comp_index, weights=np.tile(np.arange(w), h).astype(np.float64))
    label_centroid = {}
    for lab, ci in main_comp.items():
        label_centroid[lab] = (sum_x[ci] / comp_sizes[ci], sum_y[ci] / comp_sizes[ci])

    fixed = np.zeros((h, w), dtype=bool)
    order = np.argsort(flat_comp, kind="stable")
    comp_pixels = {}
    sorted_comp = flat_comp[order]
    boundaries = np.flatnonzero(np.diff(sorted_comp)) + 1
    for ci, chunk in enumerate(np.split(order, boundaries)):
        comp_pixels[ci] = chunk
    for lab, ci in main_comp.items():
        px = comp_pixels[ci]
        fixed.ravel()[px] = True

    orphans = [ci for ci in range(comp_ids.size) if main_comp.get(comp_label[ci]) != ci]
    orphans.sort(key=lambda ci: comp_ids[ci])
    guard = 0
    while orphans:
        guard += 1
        if guard > comp_ids.size + 2:
            raise LfgtError("orphan merging failed to make progress")
        progressed = False
        remaining = []
        for ci in orphans:
            px = comp_pixels[ci]
            xs, ys = np.unravel_index(px, (h, w))
            adj = set()
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                nx, ny = xs + dx, ys + dy
                ok = (nx >= 0) & (nx < h) & (ny >= 0) & (ny < w)
                nx, ny = nx[ok], ny[ok]
                sel = fixed[nx, ny]
                adj.update(labels[nx[sel], ny[sel]].tolist())
            if not adj:
                remaining.append(ci)
                continue
            ox, oy = float(xs.mean()), float(ys.mean())
            target = min(
                adj,
                key=lambda lab: (
                    (label_centroid[lab][0] - ox) ** 2 + (label_centroid[lab][1] - oy) ** 2,
                    lab,
                ),
            )
            labels[xs, ys] = target
            fixed[xs, ys] = True
            progressed = True
        if remaining and not progressed:
            raise LfgtError("orphan merging stalled on an enclosed fragment")
        orphans = remaining
    return labels


def project_labels(
    sp: SuperPixelMap, disparity, n_u: int, n_v: int
) -> SuperRaySegmentation:
    """Propagate reference super-pixels to every view using per-label median
    disparity (lower median for even counts)."""
    if isinstance(disparity, DisparityMap):
        dmap = disparity.values
    else:
        dmap = np.asarray(disparity, dtype=np.float64)
    if dmap.shape != sp.labels.shape:
        raise ValueError("disparity map shape must match the label map")
    xs, ys, offsets = _label_slices(sp.labels, sp.k)
    medians = np.empty(sp.k, dtype=np.float64)
    for lk in range(sp.k):
        px = dmap[xs[offsets[lk] : offsets[lk + 1]], ys[offsets[lk] : offsets[lk + 1]]]
        medians[lk] = lower_median(px)
    maps = project_from_medians(sp, medians, n_u, n_v)
    return SuperRaySegmentation(maps, medians, sp.k)


def project_from_medians(
    sp: SuperPixelMap, medians: np.ndarray, n_u: int, n_v: int
) -> np.ndarray:
    """Label maps for all views from reference labels plus per-label medians."""
    if n_u < 1 or n_v < 1:
        raise ValueError("angular dimensions must be >= 1")
    medians = np.asarray(medians, dtype=np.float64)
    if medians.shape != (sp.k,):
        raise ValueError("need one median per label")
    h, w = sp.labels.shape
    maps = np.empty((n_u, n_v, h, w), dtype=np.int32)
    maps[0, 0] = sp.labels
    for v in range(1, n_v):
        maps[0, v] = _project_view(sp.labels, sp.k, medians, 0, v)
    for u in range(1, n_u):
        anchor = _project_view(sp.labels, sp.k, medians, u, 0)
        maps[u, 0] = anchor
        for v in range(1, n_v):
            maps[u, v] = _project_view(anchor, sp.k, medians, 0, v)
    return maps


def _project_view(
    source: np.ndarray, k: int, medians: np.ndarray, du: int, dv: int
) -> np.ndarray:
    """Shift every label rigidly by its rounded disparity offset; collisions
    keep the higher-disparity label (ties to the smaller id), holes are
    filled by a multi-source BFS preferring lower disparity."""
    h, w = source.shape
    out = np.full((h, w), -1, dtype=np.int32)
    best = np.full((h, w), -np.inf)
    xs, ys, offsets = _label_slices(source, k)
    for lk in range(k):
        lo, hi = offsets[lk], offsets[lk + 1]
        if lo == hi:
            continue
        sx, sy = disparity_shift(medians[lk], du, dv)
        xt = xs[lo:hi] + sx
        yt = ys[lo:hi] + sy
        ok = (xt >= 0) & (xt < h) & (yt >= 0) & (yt < w)
        xt, yt = xt[ok], yt[ok]
        # strict > keeps the earlier (smaller) label on equal disparity
        sel = medians[lk] > best[xt, yt]
        out[xt[sel], yt[sel]] = lk
        best[xt[sel], yt[sel]] = medians[lk]
    _fill_holes(out, medians)
    return out


def _fill_holes(out: np.ndarray, medians: np.ndarray) -> None:
    """4-connected BFS fill where lower disparity always outranks distance:
    each disparity level floods every hole it can reach before the next level
    starts, so a dis-occluded pixel takes the furthest surface adjacent to its
    region.  Within one level ties go to the nearer front, then the smallest
    label id."""
    h, w = out.shape
    if not (out < 0).any():
        return
    if (out >= 0).sum() == 0:
        raise LfgtError("projected view has no labeled pixels to fill from")
    big = np.int32(np.iinfo(np.int32).max)
    levels = np.unique(medians[np.unique(out[out >= 0])])
    for level in levels:
        while True:
            holes = out < 0
            if not holes.any():
                return
            best_l = np.full((h, w), big, dtype=np.int32)
            for shift in range(4):
                nl = np.full((h, w), -1, dtype=np.int32)
                if shift == 0:
                    nl[1:, :] = out[:-1, :]
                elif shift == 1:
                    nl[:-1, :] = out[1:, :]
                elif shift == 2:
                    nl[:, 1:] = out[:, :-1]
                else:
                    nl[:, :-1] = out[:, 1:]
                valid = holes & (nl >= 0)
                valid &= np.where(valid, medians[np.clip(nl, 0, None)], np.inf) == level
                better = valid & (nl < best_l)
                best_l[better] = nl[better]
            frontier = holes & (best_l < big)
            if not frontier.any():
                break
            out[frontier] = best_l[frontier]


def coherence(seg: SuperRaySegmentation) -> CoherenceReport:
    """A super-ray is coherent when its per-view pixel sets are identical up
    to pure translation; absence from any view breaks coherence."""
    shapes = [None] * seg.k
    coherent = np.ones(seg.k, dtype=bool)
    for u in range(seg.n_u):
        for v in range(seg.n_v):
            labels = seg.label_maps[u, v]
            xs, ys, offsets = _label_slices(labels, seg.k)
            for lk in range(seg.k):
                if not coherent[lk]:
                    continue
                lo, hi = offsets[lk], offsets[lk + 1]
                if lo == hi:
                    coherent[lk] = False
                    continue
                px = xs[lo:hi]
                py = ys[lo:hi]
                order = np.lexsort((px, py))
                norm = np.stack([px[order] - px.min(), py[order] - py.min()], axis=1)
                if shapes[lk] is None:
                    shapes[lk] = norm
                elif norm.shape != shapes[lk].shape or not np.array_equal(norm, shapes[lk]):
                    coherent[lk] = False
    return CoherenceReport(coherent)


def view_sizes(seg: SuperRaySegmentation) -> np.ndarray:
    """Super-pixel pixel counts per view, shape (k, n_u * n_v), canonical
    view order u * n_v + v."""
    sizes = np.empty((seg.k, seg.n_views), dtype=np.int64)
    for u in range(seg.n_u):
        for v in range(seg.n_v):
            sizes[:, u * seg.n_v + v] = np.bincount(
                seg.label_maps[u, v].ravel(), minlength=seg.k
            )
    return sizes
