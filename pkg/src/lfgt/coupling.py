"""Coupled spatial eigenbases for shape-varying super-rays.

When a super-ray's shape differs between views, independently computed
spatial bases decorrelate the per-view coefficients.  This module rotates
each non-reference basis by a block-orthogonal matrix B that keeps the
Laplacian nearly diagonal while aligning the basis with the reference view's
over a sparse set of corresponding pixels:

    minimize  ||B^T D B - D||_F^2 + alpha * ||F^T U0 - G^T Ui B||_F^2
    subject to  B^T B = I

solved blockwise by projected gradient descent on the orthogonal manifold
(tangent projection, Armijo backtracking, QR retraction).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .graphs import canonical_pixels, spatial_graph_from_mask
from .lightfield import disparity_shift
from .segmentation import SuperRaySegmentation
from .spectral import EigenBasis, diagonalize

MAX_CORRESPONDENCES = 15
ARMIJO_C = 1e-4
ARMIJO_SHRINK = 0.5
MAX_BACKTRACKS = 60
MAX_ITERATIONS = 200
GRAD_TOL = 1e-6
PLATEAU_TOL = 1e-9
PLATEAU_SPAN = 5


@dataclass(frozen=True)
class CorrespondenceSet:
    """Sparse pixel pairing between the reference view and a target view."""

    pairs: np.ndarray  # (p, 2) int64: reference index, target index
    f: np.ndarray      # (n0, p) one-hot selection of reference vertices
    g: np.ndarray      # (ni, p) one-hot selection of target vertices


@dataclass
class CoupledBasis:
    """Optimized basis for one view plus per-block diagnostics."""

    basis: np.ndarray                    # (ni, ni) assembled U_i B
    blocks: list[np.ndarray] = field(default_factory=list)
    block_slices: list[tuple[int, int]] = field(default_factory=list)
    objective_traces: list[list[float]] = field(default_factory=list)

    def as_eigenbasis(self, eigenvalues: np.ndarray) -> EigenBasis:
        return EigenBasis(self.basis, eigenvalues, source="coupled")


def farthest_point_sample(points: np.ndarray, count: int) -> np.ndarray:
    """Greedy max-min subset of 2D points.

    The seed is the point closest to the centroid; each following pick
    maximizes the minimum distance to the points already chosen.  All ties
    resolve to the smallest index, which is canonical vertex order here.
    """
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    if count >= n:
        return np.arange(n, dtype=np.int64)
    centroid = pts.mean(axis=0)
    d2 = ((pts - centroid) ** 2).sum(axis=1)
    seed = int(np.argmin(d2))
    chosen = [seed]
    min_d2 = ((pts - pts[seed]) ** 2).sum(axis=1)
    for _ in range(count - 1):
        pick = int(np.argmax(min_d2))
        chosen.append(pick)
        min_d2 = np.minimum(min_d2, ((pts - pts[pick]) ** 2).sum(axis=1))
    return np.array(sorted(chosen), dtype=np.int64)


def build_correspondences(
    ref_pixels: tuple[np.ndarray, np.ndarray],
    target_pixels: tuple[np.ndarray, np.ndarray],
    disparity: float,
    dview: tuple[int, int],
) -> CorrespondenceSet | None:
    """Pair reference pixels with their disparity-projected positions inside
    the target super-pixel; at most 15 pairs survive, thinned by farthest
    point sampling on the reference coordinates.  Returns None when nothing
    matches."""
    rx, ry = ref_pixels
    tx, ty = target_pixels
    n0, ni = rx.size, tx.size
    if n0 == 0 or ni == 0:
        return None
    sx, sy = disparity_shift(disparity, dview[0], dview[1])
    target_index = {(int(x), int(y)): j for j, (x, y) in enumerate(zip(tx, ty))}
    ref_idx = []
    tgt_idx = []
    for i in range(n0):
        j = target_index.get((int(rx[i] + sx), int(ry[i] + sy)))
        if j is not None:
            ref_idx.append(i)
            tgt_idx.append(j)
    if not ref_idx:
        return None
    ref_idx = np.array(ref_idx, dtype=np.int64)
    tgt_idx = np.array(tgt_idx, dtype=np.int64)
    if ref_idx.size > MAX_CORRESPONDENCES:
        pts = np.column_stack([rx[ref_idx], ry[ref_idx]])
        keep = farthest_point_sample(pts, MAX_CORRESPONDENCES)
        ref_idx = ref_idx[keep]
        tgt_idx = tgt_idx[keep]
    p = ref_idx.size
    f = np.zeros((n0, p))
    g = np.zeros((ni, p))
    f[ref_idx, np.arange(p)] = 1.0
    g[tgt_idx, np.arange(p)] = 1.0
    pairs = np.column_stack([ref_idx, tgt_idx])
    return CorrespondenceSet(pairs, f, g)


def coupling_objective(
    b: np.ndarray,
    eigenvalues: np.ndarray,
    u0: np.ndarray,
    ui: np.ndarray,
    f: np.ndarray,
    g: np.ndarray,
    alpha: float,
) -> float:
    lam = np.asarray(eigenvalues, dtype=np.float64)
    lb = lam[:, None] * b
    diag_term = b.T @ lb - np.diag(lam)
    align = f.T @ u0 - g.T @ ui @ b
    return float(np.sum(diag_term * diag_term) + alpha * np.sum(align * align))


def coupling_gradient(
    b: np.ndarray,
    eigenvalues: np.ndarray,
    u0: np.ndarray,
    ui: np.ndarray,
    f: np.ndarray,
    g: np.ndarray,
    alpha: float,
) -> np.ndarray:
    lam = np.asarray(eigenvalues, dtype=np.float64)
    lb = lam[:, None] * b                       # D B
    grad_diag = 4.0 * (lb @ (b.T @ lb) - lb * lam[None, :])
    gui = g.T @ ui                              # (p, k)
    residual = gui @ b - f.T @ u0               # (p, k)
    grad_align = 2.0 * alpha * (gui.T @ residual)
    return grad_diag + grad_align


def _retract(m: np.ndarray) -> np.ndarray:
    """Thin QR with the R diagonal forced positive (zeros count as +1)."""
    q, r = np.linalg.qr(m)
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    return q * d[None, :]


def optimize_block(
    eigenvalues: np.ndarray,
    u0_block: np.ndarray,
    ui_block: np.ndarray,
    f: np.ndarray,
    g: np.ndarray,
    alpha: float,
    max_iterations: int = MAX_ITERATIONS,
) -> tuple[np.ndarray, list[float]]:
    """Projected gradient descent over one block, started at identity.

    Accepted iterates are monotone, so the final objective never exceeds the
    identity initialization's.  A non-finite objective aborts the block and
    falls back to identity.
    """
    k = len(eigenvalues)
    b = np.eye(k)
    obj = coupling_objective(b, eigenvalues, u0_block, ui_block, f, g, alpha)
    trace = [obj]
    if not np.isfinite(obj):
        warnings.warn("coupling objective non-finite at identity; block left uncoupled")
        return np.eye(k), trace
    for _ in range(max_iterations):
        grad = coupling_gradient(b, eigenvalues, u0_block, ui_block, f, g, alpha)
        btg = b.T @ grad
        tangent = grad - b @ ((btg + btg.T) * 0.5)
        gnorm2 = float(np.sum(tangent * tangent))
        if np.sqrt(gnorm2) < GRAD_TOL * (1.0 + abs(obj)):
            break
        step = 1.0
        accepted = False
        for _ in range(MAX_BACKTRACKS):
            cand = _retract(b - step * tangent)
            cobj = coupling_objective(cand, eigenvalues, u0_block, ui_block, f, g, alpha)
            if np.isfinite(cobj) and cobj <= obj - ARMIJO_C * step * gnorm2:
                accepted = True
                break
            step *= ARMIJO_SHRINK
        if not accepted:
            break
        b, obj = cand, cobj
        trace.append(obj)
        span = PLATEAU_SPAN
        if len(trace) > span:
            drop = trace[-span - 1] - trace[-1]
            if drop < PLATEAU_TOL * (1.0 + abs(trace[-span - 1])):
                break
    if not np.isfinite(obj):
        warnings.warn("coupling optimization diverged; block left uncoupled")
        return np.eye(k), trace
    return b, trace


def coupled_band_count(n_reference: int, n_target: int) -> int:
    """Bands eligible for coupling: the largest multiple of 10 not above the
    reference size, clipped to the target size."""
    return min((n_reference // 10) * 10, n_target)


def couple_super_ray(
    seg: SuperRaySegmentation,
    label: int,
    alpha: float = 1.0,
    k_block: int = 10,
    pixels: dict[int, tuple[np.ndarray, np.ndarray]] | None = None,
) -> tuple[dict[int, EigenBasis], dict[int, CoupledBasis]]:
    """Spatial bases for every view of one super-ray.

    The reference is the first view in canonical order where the super-ray
    is present.  Views whose Laplacian equals the reference's reuse its basis
    object; other views are diagonalized and then coupled blockwise when
    correspondences exist.  Returns (bases by view index, diagnostics for the
    views that were optimized).
    """
    if k_block < 1:
        raise ValueError("k_block must be >= 1")
    views = []
    view_pixels = {}
    for u in range(seg.n_u):
        for v in range(seg.n_v):
            vi = u * seg.n_v + v
            if pixels is not None:
                if vi in pixels:
                    xs, ys = pixels[vi]
                else:
                    continue
            else:
                xs, ys = canonical_pixels(seg.label_maps[u, v] == label)
                if xs.size == 0:
                    continue
            views.append(vi)
            view_pixels[vi] = (xs, ys)
    if not views:
        raise ValueError(f"super-ray {label} is empty in every view")

    def graph_for(vi):
        u, v = divmod(vi, seg.n_v)
        xs, ys = view_pixels[vi]
        mask = np.zeros((seg.height, seg.width), dtype=bool)
        mask[xs, ys] = True
        return spatial_graph_from_mask(mask, u, v)

    ref_vi = views[0]
    ref_graph = graph_for(ref_vi)
    ref_basis = diagonalize(ref_graph.laplacian)
    n0 = ref_basis.n
    d = float(seg.median_disparity[label])
    bases = {ref_vi: ref_basis}
    diagnostics: dict[int, CoupledBasis] = {}
    ru, rv = divmod(ref_vi, seg.n_v)

    for vi in views[1:]:
        graph = graph_for(vi)
        if graph.laplacian.shape == ref_graph.laplacian.shape and np.array_equal(
            graph.laplacian, ref_graph.laplacian
        ):
            bases[vi] = ref_basis
            continue
        basis_i = diagonalize(graph.laplacian)
        u, v = divmod(vi, seg.n_v)
        corr = build_correspondences(
            view_pixels[ref_vi], view_pixels[vi], d, (u - ru, v - rv)
        )
        if corr is None:
            bases[vi] = basis_i
            continue
        ni = basis_i.n
        n_opt = coupled_band_count(n0, ni)
        coupled = CoupledBasis(basis=np.array(basis_i.vectors))
        start = 0
        while start < n_opt:
            stop = min(start + k_block, n_opt)
            block_b, trace = optimize_block(
                basis_i.eigenvalues[start:stop],
                ref_basis.vectors[:, start:stop],
                basis_i.vectors[:, start:stop],
                corr.f,
                corr.g,
                alpha,
            )
            coupled.basis[:, start:stop] = basis_i.vectors[:, start:stop] @ block_b
            coupled.blocks.append(block_b)
            coupled.block_slices.append((start, stop))
            coupled.objective_traces.append(trace)
            start = stop
        coupled.basis.setflags(write=False)
        bases[vi] = coupled.as_eigenbasis(basis_i.eigenvalues)
        diagnostics[vi] = coupled
    return bases, diagnostics
