"""Deterministic Laplacian eigenbases and graph Fourier transforms.

``diagonalize`` wraps the dense symmetric eigensolver with three
determinism layers so that identical Laplacians always produce bitwise
identical bases:

* eigenvalues ascending (solver order, validated),
* inside any cluster of eigenvalues closer than 1e-9 the rotational freedom
  is pinned by ordered Gram-Schmidt of the cluster projector applied to the
  canonical axes,
* each eigenvector is sign-normalized so its first entry larger than 1e-12
  in magnitude is positive.

Forward analysis is U^T f; synthesis is U f_hat; U stores eigenvectors as
columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GraphSizeError

MAX_DENSE_NODES = 6500
CLUSTER_GAP = 1e-9
SIGN_EPS = 1e-12


def orthonormality_tolerance(n: int) -> float:
    return 1e-9 if n <= 256 else 1e-7


@dataclass(frozen=True)
class EigenBasis:
    """Orthonormal eigenvectors (columns) with ascending eigenvalues."""

    vectors: np.ndarray
    eigenvalues: np.ndarray
    source: str = "exact"

    @property
    def n(self) -> int:
        return self.vectors.shape[0]


def _pin_degenerate(w: np.ndarray, q: np.ndarray) -> None:
    """Replace each degenerate cluster's vectors with the ordered
    Gram-Schmidt basis of the cluster projector against the canonical axes."""
    n = w.size
    edges = (np.flatnonzero(np.diff(w) > CLUSTER_GAP) + 1).tolist()
    bounds = [0] + edges + [n]
    for a, b in zip(bounds[:-1], bounds[1:]):
        m = b - a
        if m <= 1:
            continue
        block = q[:, a:b]
        chosen: list[np.ndarray] = []
        for j in range(n):
            col = block @ block[j, :]
            for c in chosen:
                col = col - (c @ col) * c
            nn = float(np.linalg.norm(col))
            if nn <= 1e-8:
                continue
            col = col / nn
            for c in chosen:
                col = col - (c @ col) * c
            col = col / np.linalg.norm(col)
            chosen.append(col)
            if len(chosen) == m:
                break
        if len(chosen) == m:
            q[:, a:b] = np.column_stack(chosen)


def _fix_signs(q: np.ndarray) -> None:
    for j in range(q.shape[1]):
        col = q[:, j]
        nz = np.flatnonzero(np.abs(col) > SIGN_EPS)
        if nz.size and col[nz[0]] < 0:
            col *= -1.0  # in-place multiply; unary ufuncs with out= aliasing a strided view miscompute on this platform


def diagonalize(laplacian: np.ndarray, max_nodes: int = MAX_DENSE_NODES) -> EigenBasis:
    """Eigendecomposition of a graph Laplacian with deterministic output."""
    lap = np.asarray(laplacian, dtype=np.float64)
    if lap.ndim != 2 or lap.shape[0] != lap.shape[1]:
        raise ValueError("laplacian must be square")
    n = lap.shape[0]
    if n == 0:
        raise ValueError("laplacian must be non-empty")
    if n > max_nodes:
        raise GraphSizeError(
            f"graph has {n} nodes, above the dense solver cap of {max_nodes}; "
            "increase the super-pixel count so supports shrink"
        )
    scale = 1.0 + float(np.abs(lap).max())
    if float(np.abs(lap - lap.T).max()) > 1e-9 * scale:
        raise ValueError("laplacian must be symmetric")
    w, q = np.linalg.eigh(lap)
    if w[0] < -1e-6:
        raise ValueError(f"matrix is indefinite (smallest eigenvalue {w[0]:.3e})")
    q = np.ascontiguousarray(q)
    _pin_degenerate(w, q)
    _fix_signs(q)
    w.setflags(write=False)
    q.setflags(write=False)
    return EigenBasis(q, w)


def gft_forward(basis: EigenBasis, signal: np.ndarray) -> np.ndarray:
    sig = np.asarray(signal, dtype=np.float64)
    if sig.shape[0] != basis.n:
        raise ValueError(f"signal length {sig.shape[0]} does not match basis size {basis.n}")
    return basis.vectors.T @ sig


def gft_inverse(basis: EigenBasis, coefficients: np.ndarray) -> np.ndarray:
    coe = np.asarray(coefficients, dtype=np.float64)
    if coe.shape[0] != basis.n:
        raise ValueError(f"coefficient length {coe.shape[0]} does not match basis size {basis.n}")
    return basis.vectors @ coe


@dataclass
class CoefficientTensor:
    """Ragged transform-domain container.

    ``coeffs[s][b]`` holds super-ray ``s``'s band-``b`` coefficient vector.
    In the separable modes the vector runs over the angular transform output
    for that band; in the non-separable mode every band is a single
    coefficient.
    """

    mode: str
    coeffs: list[list[np.ndarray]] = field(default_factory=list)

    @property
    def n_super_rays(self) -> int:
        return len(self.coeffs)

    def super_ray_count(self, s: int) -> int:
        return int(sum(vec.size for vec in self.coeffs[s]))

    def total_count(self) -> int:
        return sum(self.super_ray_count(s) for s in range(self.n_super_rays))

    def energy(self) -> float:
        total = 0.0
        for bands in self.coeffs:
            for vec in bands:
                total += float(vec @ vec)
        return total


def band_membership(sizes_row: np.ndarray) -> list[np.ndarray]:
    """View indices owning each band: band b exists in a view whose
    super-pixel has at least b + 1 pixels."""
    n_bands = int(sizes_row.max(initial=0))
    return [np.flatnonzero(sizes_row >= b + 1) for b in range(n_bands)]
