"""Local graphs over super-rays.

Vertex order is canonical everywhere: views enumerated by (u, v), and pixels
inside a view by column then row, i.e. sorted by (y, x), following a vertical
scan line.  The combinatorial Laplacian L = D - A is built dense; supports
are small by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lightfield import disparity_shift
from .segmentation import SuperRaySegmentation


@dataclass(frozen=True)
class LocalGraph:
    """Undirected unweighted graph with dense adjacency and Laplacian."""

    vertices: np.ndarray  # (n, 4) pixel graphs as (u, v, x, y); (n, 2) view graphs
    adjacency: np.ndarray  # (n, n) uint8, symmetric, zero diagonal
    laplacian: np.ndarray  # (n, n) float64

    @property
    def n(self) -> int:
        return self.vertices.shape[0]


def _finish(vertices: np.ndarray, adjacency: np.ndarray) -> LocalGraph:
    adjacency = adjacency.astype(np.uint8)
    np.fill_diagonal(adjacency, 0)
    if not np.array_equal(adjacency, adjacency.T):
        raise ValueError("adjacency must be symmetric")
    degrees = adjacency.sum(axis=1, dtype=np.float64)
    laplacian = np.diag(degrees) - adjacency.astype(np.float64)
    vertices = np.ascontiguousarray(vertices, dtype=np.int32)
    for arr in (vertices, adjacency, laplacian):
        arr.setflags(write=False)
    return LocalGraph(vertices, adjacency, laplacian)


def canonical_pixels(mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pixel coordinates of a boolean mask sorted by (y, x)."""
    xs, ys = np.nonzero(mask)
    order = np.lexsort((xs, ys))
    return xs[order].astype(np.int64), ys[order].astype(np.int64)


def _index_grid(xs: np.ndarray, ys: np.ndarray, base: int = 0):
    """Bounding-box lookup grid mapping (x, y) to vertex index, -1 outside."""
    x0, y0 = int(xs.min()), int(ys.min())
    grid = np.full((int(xs.max()) - x0 + 1, int(ys.max()) - y0 + 1), -1, dtype=np.int64)
    grid[xs - x0, ys - y0] = np.arange(base, base + xs.size)
    return grid, x0, y0


def _lookup(grid: np.ndarray, x0: int, y0: int, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    out = np.full(xs.shape, -1, dtype=np.int64)
    ok = (
        (xs >= x0)
        & (xs < x0 + grid.shape[0])
        & (ys >= y0)
        & (ys < y0 + grid.shape[1])
    )
    out[ok] = grid[xs[ok] - x0, ys[ok] - y0]
    return out


def spatial_graph_from_mask(mask: np.ndarray, u: int = 0, v: int = 0) -> LocalGraph:
    """4-connectivity graph over the pixels of one view's super-pixel."""
    xs, ys = canonical_pixels(np.asarray(mask, dtype=bool))
    n = xs.size
    vertices = np.column_stack(
        [np.full(n, u), np.full(n, v), xs, ys]
    ).astype(np.int32)
    adjacency = np.zeros((n, n), dtype=np.uint8)
    if n:
        grid, x0, y0 = _index_grid(xs, ys)
        for dx, dy in ((1, 0), (0, 1)):
            nbr = _lookup(grid, x0, y0, xs + dx, ys + dy)
            ok = nbr >= 0
            src = np.arange(n)[ok]
            dst = nbr[ok]
            adjacency[src, dst] = 1
            adjacency[dst, src] = 1
    return _finish(vertices, adjacency)


def build_spatial_graph(seg: SuperRaySegmentation, label: int, view: tuple[int, int]) -> LocalGraph:
    """Spatial graph of one super-pixel; empty super-pixels give an empty graph."""
    u, v = view
    mask = seg.label_maps[u, v] == label
    return spatial_graph_from_mask(mask, u, v)


def build_nonseparable_graph(seg: SuperRaySegmentation, label: int) -> LocalGraph:
    """Whole super-ray graph: per-view 4-connectivity plus angular edges from
    each pixel to its disparity-projected correspondent in the four adjacent
    views, kept only when the correspondent carries the same label."""
    d = float(seg.median_disparity[label])
    per_view = []
    total = 0
    for u in range(seg.n_u):
        for v in range(seg.n_v):
            mask = seg.label_maps[u, v] == label
            xs, ys = canonical_pixels(mask)
            if xs.size:
                grid, x0, y0 = _index_grid(xs, ys, base=total)
            else:
                grid, x0, y0 = None, 0, 0
            per_view.append((u, v, xs, ys, grid, x0, y0))
            total += xs.size

    vertices = np.empty((total, 4), dtype=np.int32)
    adjacency = np.zeros((total, total), dtype=np.uint8)
    base = 0
    for u, v, xs, ys, grid, x0, y0 in per_view:
        n = xs.size
        if n == 0:
            continue
        vertices[base : base + n, 0] = u
        vertices[base : base + n, 1] = v
        vertices[base : base + n, 2] = xs
        vertices[base : base + n, 3] = ys
        idx = np.arange(base, base + n)
        for dx, dy in ((1, 0), (0, 1)):
            nbr = _lookup(grid, x0, y0, xs + dx, ys + dy)
            ok = nbr >= 0
            adjacency[idx[ok], nbr[ok]] = 1
            adjacency[nbr[ok], idx[ok]] = 1
        base += n

    for u, v, xs, ys, grid, x0, y0 in per_view:
        if xs.size == 0:
            continue
        idx_here = _lookup(grid, x0, y0, xs, ys)
        for du, dv in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nu, nv = u + du, v + dv
            if not (0 <= nu < seg.n_u and 0 <= nv < seg.n_v):
                continue
            _, _, _, _, ngrid, nx0, ny0 = per_view[nu * seg.n_v + nv]
            if ngrid is None:
                continue
            sx, sy = disparity_shift(d, du, dv)
            nbr = _lookup(ngrid, nx0, ny0, xs + sx, ys + sy)
            ok = nbr >= 0
            adjacency[idx_here[ok], nbr[ok]] = 1
            adjacency[nbr[ok], idx_here[ok]] = 1
    return _finish(vertices, adjacency)


def build_angular_graph(views) -> LocalGraph:
    """Graph over the views where a band exists: 4-adjacency on the angular
    grid, and any isolated view (processed in canonical order) gains one edge
    to its nearest present view, ties resolved by canonical order."""
    vs = sorted(set((int(u), int(v)) for u, v in views))
    if not vs:
        raise ValueError("angular graph needs at least one view")
    n = len(vs)
    index = {uv: i for i, uv in enumerate(vs)}
    vertices = np.array(vs, dtype=np.int32)
    adjacency = np.zeros((n, n), dtype=np.uint8)
    for i, (u, v) in enumerate(vs):
        for du, dv in ((1, 0), (0, 1)):
            j = index.get((u + du, v + dv))
            if j is not None:
                adjacency[i, j] = 1
                adjacency[j, i] = 1
    if n > 1:
        for i, (u, v) in enumerate(vs):
            if adjacency[i].any():
                continue
            best = None
            for j, (ou, ov) in enumerate(vs):
                if j == i:
                    continue
                d2 = (u - ou) ** 2 + (v - ov) ** 2
                if best is None or d2 < best[0]:
                    best = (d2, j)
            adjacency[i, best[1]] = 1
            adjacency[best[1], i] = 1
    return _finish(vertices, adjacency)
