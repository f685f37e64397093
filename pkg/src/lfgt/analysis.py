"""Evaluation artifacts: energy-compaction curves, inter-view band
statistics, and rate-allocation accounting, all emitted as data files
rather than figures.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .codec import ScanOrder, decode_light_field, stream_sections
from .errors import LfgtError
from .lightfield import LightField, psnr
from .spectral import CoefficientTensor

LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class CompactionCurve:
    """Cumulative energy against cumulative coefficient fraction.

    ``all_zero`` marks a tensor with no energy, for which the energy
    fraction is defined as identically 1.
    """

    fraction_kept: np.ndarray
    fraction_energy: np.ndarray
    all_zero: bool = False

    def __post_init__(self):
        kept = np.asarray(self.fraction_kept, dtype=np.float64)
        energy = np.asarray(self.fraction_energy, dtype=np.float64)
        if kept.shape != energy.shape or kept.ndim != 1 or kept.size == 0:
            raise ValueError("curve needs matching nonempty coordinate arrays")
        if np.any(np.diff(kept) < -1e-12) or np.any(np.diff(energy) < -1e-9):
            raise ValueError("curve coordinates must be non-decreasing")
        if abs(kept[-1] - 1.0) > 1e-9 or abs(energy[-1] - 1.0) > 1e-9:
            raise ValueError("curve must end at (1, 1)")
        object.__setattr__(self, "fraction_kept", kept)
        object.__setattr__(self, "fraction_energy", energy)

    def energy_at(self, kept_fraction: float) -> float:
        """Energy fraction retained when keeping the first
        ``kept_fraction`` of coefficients (step interpolation)."""
        idx = np.searchsorted(self.fraction_kept, kept_fraction + 1e-12)
        if idx == 0:
            return 0.0
        return float(self.fraction_energy[min(idx, self.fraction_kept.size) - 1])


def _position_tables(tensor: CoefficientTensor):
    counts: dict[int, np.ndarray] = {}
    energy: dict[int, np.ndarray] = {}
    for bands in tensor.coeffs:
        for b, vec in enumerate(bands):
            m = vec.size
            if m == 0:
                continue
            if b not in counts or counts[b].size < m:
                for table in (counts, energy):
                    old = table.get(b)
                    grown = np.zeros(m, dtype=np.float64)
                    if old is not None:
                        grown[: old.size] = old
                    table[b] = grown
            counts[b][:m] += 1
            energy[b][:m] += vec * vec
    return counts, energy


def compaction_curve(
    tensor: CoefficientTensor, scan: ScanOrder | None = None
) -> CompactionCurve:
    """Pool coefficient energy over super-rays and accumulate it along
    the scan order; with no scan, positions run band-ascending, i.e. by
    increasing spatial eigenvalue index.
    """
    counts, energy = _position_tables(tensor)
    total_count = sum(int(c.sum()) for c in counts.values())
    if total_count == 0:
        raise LfgtError("empty coefficient tensor")
    if scan is None:
        order = [(b, a) for b in sorted(counts) for a in range(counts[b].size)]
    else:
        order = list(scan.positions)
        observed = {(b, a) for b in counts for a in range(counts[b].size)}
        if not observed.issubset(order):
            raise LfgtError("scan order does not cover the tensor")
    total_energy = sum(float(e.sum()) for e in energy.values())
    kept = np.empty(len(order))
    retained = np.empty(len(order))
    cum_n = 0
    cum_e = 0.0
    for i, (b, a) in enumerate(order):
        if b in counts and a < counts[b].size:
            cum_n += int(counts[b][a])
            cum_e += float(energy[b][a])
        kept[i] = cum_n / total_count
        retained[i] = 1.0 if total_energy == 0.0 else cum_e / total_energy
    return CompactionCurve(kept, retained, all_zero=total_energy == 0.0)


@dataclass(frozen=True)
class BandStatistics:
    """Per-band second-order statistics across super-rays.

    ``band_correlations[b]`` is the inter-view correlation matrix of
    spatial band ``b`` (NaN where under two paired samples exist or a
    sample is constant).  ``covariance`` is the population covariance of
    the leading bands over complete observations, and ``log_variance``
    holds log10 variances of the post-angular coefficients indexed by
    (band, angular index), floored at 1e-300.
    """

    band_correlations: np.ndarray
    covariance: np.ndarray
    covariance_samples: int
    log_variance: np.ndarray


def band_statistics(
    spectra, tensor: CoefficientTensor, n_views: int, max_bands: int = 64
) -> BandStatistics:
    """Second-order statistics of spatial spectra and the post-angular
    tensor; one observation per super-ray per view owning the band."""
    if n_views < 2:
        raise LfgtError("need at least two views")
    n_rays = len(spectra)
    max_band = 0
    for per_view in spectra:
        for vec in per_view.values():
            max_band = max(max_band, vec.size)
    n_bands = min(max_bands, max_band)

    # ragged (super-ray, view) -> band value tables, NaN where absent
    table = np.full((n_bands, n_rays, n_views), np.nan)
    for r, per_view in enumerate(spectra):
        for vi, vec in per_view.items():
            upto = min(vec.size, n_bands)
            table[:upto, r, vi] = vec[:upto]

    corrs = np.full((n_bands, n_views, n_views), np.nan)
    for b in range(n_bands):
        for vi in range(n_views):
            if np.any(~np.isnan(table[b, :, vi])):
                corrs[b, vi, vi] = 1.0
            for vj in range(vi + 1, n_views):
                both = ~np.isnan(table[b, :, vi]) & ~np.isnan(table[b, :, vj])
                if both.sum() < 2:
                    continue
                x = table[b, both, vi]
                y = table[b, both, vj]
                sx = x.std()
                sy = y.std()
                if sx == 0.0 or sy == 0.0:
                    continue
                rho = float(np.mean((x - x.mean()) * (y - y.mean())) / (sx * sy))
                rho = min(1.0, max(-1.0, rho))
                corrs[b, vi, vj] = rho
                corrs[b, vj, vi] = rho

    complete = ~np.isnan(table).any(axis=0)  # (ray, view) pairs with all bands
    samples = np.stack(
        [table[:, r, v] for r in range(n_rays) for v in range(n_views) if complete[r, v]]
    ) if complete.any() else np.empty((0, n_bands))
    if samples.shape[0] >= 2:
        centered = samples - samples.mean(axis=0)
        cov = centered.T @ centered / samples.shape[0]
        cov = (cov + cov.T) / 2.0
    else:
        cov = np.full((n_bands, n_bands), np.nan)

    max_ang = max(
        (vec.size for bands in tensor.coeffs for vec in bands), default=0
    )
    tensor_bands = max((len(bands) for bands in tensor.coeffs), default=0)
    log_var = np.full((tensor_bands, max_ang), np.nan)
    for b in range(tensor_bands):
        for a in range(max_ang):
            vals = [
                bands[b][a]
                for bands in tensor.coeffs
                if b < len(bands) and a < bands[b].size
            ]
            if len(vals) < 2:
                continue
            log_var[b, a] = math.log10(max(float(np.var(vals)), LOG_FLOOR))

    return BandStatistics(corrs, cov, int(samples.shape[0]), log_var)


def mean_band_correlation(stats: BandStatistics, bands) -> float:
    """Mean absolute off-diagonal inter-view correlation over the given
    bands, skipping missing entries."""
    picked = []
    for b in bands:
        if b >= stats.band_correlations.shape[0]:
            continue
        mat = stats.band_correlations[b]
        off = ~np.eye(mat.shape[0], dtype=bool)
        vals = mat[off]
        picked.append(np.abs(vals[~np.isnan(vals)]))
    if not picked:
        return float("nan")
    merged = np.concatenate(picked)
    return float(merged.mean()) if merged.size else float("nan")


def rate_allocation_report(data: bytes, reference: LightField) -> dict:
    """Three-way rate split plus bpp and PSNR for a decodable stream.

    Header and class-flag bytes count toward the coefficients line; the
    three percentages sum to 100 exactly.
    """
    sections = stream_sections(data)
    decoded, _ = decode_light_field(data)
    total = sections["consumed"]
    seg = (sections["segmentation"] + 4) / total * 100.0
    disp = (sections["disparity"] + 4) / total * 100.0
    pixels = (
        sections["n_u"] * sections["n_v"] * sections["width"] * sections["height"]
    )
    return {
        "segmentation_percent": seg,
        "disparity_percent": disp,
        "coefficients_percent": 100.0 - seg - disp,
        "bpp": total * 8 / pixels,
        "psnr": psnr(reference, decoded),
        "total_bytes": total,
    }


def write_csv(path, fieldnames, rows) -> None:
    """Floats are written with 17 significant digits so a read-back
    reproduces them bit-for-bit."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(fieldnames)
        for row in rows:
            out = []
            for cell in row:
                if isinstance(cell, (float, np.floating)):
                    out.append(f"{float(cell):.17g}")
                else:
                    out.append(str(cell))
            writer.writerow(out)


def read_csv(path):
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        fieldnames = next(reader)
        rows = []
        for raw in reader:
            row = []
            for cell in raw:
                try:
                    row.append(int(cell))
                except ValueError:
                    try:
                        row.append(float(cell))
                    except ValueError:
                        row.append(cell)
            rows.append(row)
    return fieldnames, rows


def compaction_rows(curve: CompactionCurve):
    return [
        (i, float(curve.fraction_kept[i]), float(curve.fraction_energy[i]))
        for i in range(curve.fraction_kept.size)
    ]


def correlation_rows(stats: BandStatistics):
    n_bands, n_views, _ = stats.band_correlations.shape
    return [
        (b, vi, vj, float(stats.band_correlations[b, vi, vj]))
        for b in range(n_bands)
        for vi in range(n_views)
        for vj in range(n_views)
    ]


def covariance_rows(stats: BandStatistics):
    n = stats.covariance.shape[0]
    rows = []
    for i in range(n):
        for j in range(n):
            value = float(stats.covariance[i, j])
            log_abs = (
                float("nan")
                if math.isnan(value)
                else math.log10(max(abs(value), LOG_FLOOR))
            )
            rows.append((i, j, value, log_abs))
    return rows


def log_variance_rows(stats: BandStatistics):
    n_bands, n_ang = stats.log_variance.shape
    return [
        (b, a, float(stats.log_variance[b, a]))
        for b in range(n_bands)
        for a in range(n_ang)
    ]
