"""Per-super-ray transform orchestration.

Bases depend only on geometry (segmentation plus median disparities), never
on luminance, so an encoder and a decoder that share the coded segmentation
compute bit-identical bases here.  Work is distributed over a thread pool
with results gathered in super-ray order; repeated Laplacians are served
from a digest-keyed cache, which is safe because ``diagonalize`` is a pure
function of its input.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .coupling import CoupledBasis, couple_super_ray
from .graphs import build_angular_graph, build_nonseparable_graph, spatial_graph_from_mask
from .lightfield import LightField
from .segmentation import SuperRaySegmentation, view_sizes
from .spectral import CoefficientTensor, EigenBasis, band_membership, diagonalize

MODES = ("nonseparable", "separable", "separable-opt")


def _digest(arr: np.ndarray) -> bytes:
    return hashlib.sha1(arr.tobytes()).digest()


@dataclass
class TransformBases:
    """Everything needed to run the forward or inverse transform."""

    mode: str
    k: int
    n_u: int
    n_v: int
    sizes: np.ndarray                                   # (k, n_views)
    pixels: list[dict[int, tuple[np.ndarray, np.ndarray]]]
    spatial: list[dict[int, EigenBasis]] | None = None
    nonseparable: list[EigenBasis] | None = None
    nonseparable_vertices: list[np.ndarray] | None = None
    coupling: list[dict[int, CoupledBasis]] | None = None
    angular_cache: dict[tuple[int, ...], EigenBasis] = field(default_factory=dict)

    def angular_basis(self, membership: np.ndarray) -> EigenBasis:
        key = tuple(int(m) for m in membership)
        basis = self.angular_cache.get(key)
        if basis is None:
            views = [divmod(vi, self.n_v) for vi in key]
            graph = build_angular_graph(views)
            basis = diagonalize(graph.laplacian)
            self.angular_cache[key] = basis
        return basis


def _canonical_pixels_by_label(seg: SuperRaySegmentation):
    """Per super-ray, per view: pixel coordinates in canonical (y, x) order,
    extracted with one counting sort per view."""
    out: list[dict[int, tuple[np.ndarray, np.ndarray]]] = [dict() for _ in range(seg.k)]
    for u in range(seg.n_u):
        for v in range(seg.n_v):
            vi = u * seg.n_v + v
            labels = seg.label_maps[u, v]
            flat = labels.ravel()
            order = np.argsort(flat, kind="stable")
            counts = np.bincount(flat, minlength=seg.k)
            offsets = np.concatenate(([0], np.cumsum(counts)))
            xs, ys = np.unravel_index(order, labels.shape)
            for lk in range(seg.k):
                lo, hi = offsets[lk], offsets[lk + 1]
                if lo == hi:
                    continue
                px, py = xs[lo:hi], ys[lo:hi]
                sub = np.lexsort((px, py))
                out[lk][vi] = (px[sub].astype(np.int64), py[sub].astype(np.int64))
    return out


def compute_bases(
    seg: SuperRaySegmentation,
    mode: str,
    alpha: float = 1.0,
    k_block: int = 10,
    threads: int | None = None,
) -> TransformBases:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}, expected one of {MODES}")
    sizes = view_sizes(seg)
    pixels = _canonical_pixels_by_label(seg)
    bases = TransformBases(
        mode=mode, k=seg.k, n_u=seg.n_u, n_v=seg.n_v, sizes=sizes, pixels=pixels
    )
    workers = threads if threads and threads > 0 else min(32, os.cpu_count() or 1)
    cache: dict[tuple[int, bytes], EigenBasis] = {}

    def cached_diagonalize(lap: np.ndarray) -> EigenBasis:
        key = (lap.shape[0], _digest(lap))
        basis = cache.get(key)
        if basis is None:
            basis = diagonalize(lap)
            cache[key] = basis
        return basis

    if mode == "nonseparable":
        def solve(label: int):
            graph = build_nonseparable_graph(seg, label)
            return diagonalize(graph.laplacian), graph.vertices

        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(solve, range(seg.k)))
        bases.nonseparable = [basis for basis, _ in results]
        bases.nonseparable_vertices = [verts for _, verts in results]
        return bases

    if mode == "separable":
        def solve(label: int):
            per_view: dict[int, EigenBasis] = {}
            ref_lap = None
            ref_basis = None
            for vi in sorted(pixels[label]):
                xs, ys = pixels[label][vi]
                u, v = divmod(vi, seg.n_v)
                mask = np.zeros((seg.height, seg.width), dtype=bool)
                mask[xs, ys] = True
                lap = spatial_graph_from_mask(mask, u, v).laplacian
                if ref_lap is None:
                    ref_basis = cached_diagonalize(lap)
                    ref_lap = lap
                    per_view[vi] = ref_basis
                elif lap.shape == ref_lap.shape and np.array_equal(lap, ref_lap):
                    per_view[vi] = ref_basis
                else:
                    per_view[vi] = cached_diagonalize(lap)
            return per_view

        with ThreadPoolExecutor(max_workers=workers) as pool:
            bases.spatial = list(pool.map(solve, range(seg.k)))
        return bases

    def solve(label: int):
        return couple_super_ray(
            seg, label, alpha=alpha, k_block=k_block, pixels=pixels[label]
        )

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(solve, range(seg.k)))
    bases.spatial = [r[0] for r in results]
    bases.coupling = [r[1] for r in results]
    return bases


def spatial_forward(
    lf: LightField, seg: SuperRaySegmentation, bases: TransformBases
) -> list[dict[int, np.ndarray]]:
    """First stage of the separable transform: per view spectra."""
    out: list[dict[int, np.ndarray]] = [dict() for _ in range(seg.k)]
    for label in range(seg.k):
        for vi, basis in bases.spatial[label].items():
            u, v = divmod(vi, seg.n_v)
            xs, ys = bases.pixels[label][vi]
            signal = lf.samples[u, v, xs, ys]
            out[label][vi] = basis.vectors.T @ signal
    return out


def apply_forward(
    lf: LightField, seg: SuperRaySegmentation, bases: TransformBases
) -> CoefficientTensor:
    if (lf.n_u, lf.n_v, lf.height, lf.width) != (
        seg.n_u,
        seg.n_v,
        seg.height,
        seg.width,
    ):
        raise ValueError("light field and segmentation geometry differ")
    tensor = CoefficientTensor(mode=bases.mode, coeffs=[])
    if bases.mode == "nonseparable":
        for label in range(seg.k):
            basis = bases.nonseparable[label]
            verts = bases.nonseparable_vertices[label]
            signal = lf.samples[verts[:, 0], verts[:, 1], verts[:, 2], verts[:, 3]]
            spectrum = basis.vectors.T @ signal
            tensor.coeffs.append([np.array([c]) for c in spectrum])
        return tensor

    spectra = spatial_forward(lf, seg, bases)
    for label in range(seg.k):
        bands_out: list[np.ndarray] = []
        membership = band_membership(bases.sizes[label])
        for b, views_b in enumerate(membership):
            vec = np.array([spectra[label][vi][b] for vi in views_b])
            ang = bases.angular_basis(views_b)
            bands_out.append(ang.vectors.T @ vec)
        tensor.coeffs.append(bands_out)
    return tensor


def apply_inverse(
    tensor: CoefficientTensor, seg: SuperRaySegmentation, bases: TransformBases
) -> np.ndarray:
    """Synthesize samples from a coefficient tensor; returns the raw float
    array (no rounding or clipping)."""
    if tensor.mode != bases.mode:
        raise ValueError(f"tensor mode {tensor.mode!r} does not match bases {bases.mode!r}")
    out = np.zeros((seg.n_u, seg.n_v, seg.height, seg.width))
    if bases.mode == "nonseparable":
        for label in range(seg.k):
            basis = bases.nonseparable[label]
            verts = bases.nonseparable_vertices[label]
            spectrum = np.array([vec[0] for vec in tensor.coeffs[label]])
            signal = basis.vectors @ spectrum
            out[verts[:, 0], verts[:, 1], verts[:, 2], verts[:, 3]] = signal
        return out

    for label in range(seg.k):
        membership = band_membership(bases.sizes[label])
        spectra = {
            vi: np.zeros(int(bases.sizes[label][vi])) for vi in bases.pixels[label]
        }
        for b, views_b in enumerate(membership):
            ang = bases.angular_basis(views_b)
            vec = ang.vectors @ tensor.coeffs[label][b]
            for slot, vi in enumerate(views_b):
                spectra[int(vi)][b] = vec[slot]
        for vi, basis in bases.spatial[label].items():
            u, v = divmod(vi, seg.n_v)
            xs, ys = bases.pixels[label][vi]
            out[u, v, xs, ys] = basis.vectors @ spectra[vi]
    return out
