"""Transform pipeline: basis construction, forward/inverse, energy bookkeeping."""

import numpy as np
import pytest

from lfgt import (
    LightField,
    apply_forward,
    apply_inverse,
    compute_bases,
    project_labels,
    slic_segment,
)
from lfgt.pipeline import MODES, CoefficientTensor, band_membership, spatial_forward
from lfgt.segmentation import view_sizes


def small_scene(seed=4, n_u=2, n_v=2, size=16, k=5):
    rng = np.random.default_rng(seed)
    lf = LightField(rng.uniform(0.0, 255.0, (n_u, n_v, size, size)))
    sp = slic_segment(lf.view(0, 0), k)
    seg = project_labels(sp, np.zeros((size, size)), n_u, n_v)
    return lf, seg


_textured_cache = {}


def textured_seg_and_bases(textured_lf, mode, k=24):
    # bases for the textured fixture are expensive; share them across tests
    key = (mode, k)
    if key not in _textured_cache:
        lf, disparity, _ = textured_lf
        sp = slic_segment(lf.view(0, 0), k)
        seg = project_labels(sp, disparity.values, lf.n_u, lf.n_v)
        _textured_cache[key] = (seg, compute_bases(seg, mode))
    return _textured_cache[key]


class TestBandMembership:
    def test_frozen_example(self):
        bands = band_membership(np.array([3, 1, 2]))
        assert [b.tolist() for b in bands] == [[0, 1, 2], [0, 2], [0]]

    def test_equal_sizes_full_membership(self):
        bands = band_membership(np.array([4, 4, 4]))
        assert len(bands) == 4
        for b in bands:
            assert b.tolist() == [0, 1, 2]

    def test_band_count_is_max_size(self):
        sizes = np.array([2, 7, 5, 0])
        bands = band_membership(sizes)
        assert len(bands) == 7
        # view j participates in band b iff its cell holds more than b pixels
        for b, members in enumerate(bands):
            assert members.tolist() == [j for j, s in enumerate(sizes) if s > b]


class TestComputeBases:
    def test_unknown_mode_rejected(self):
        _, seg = small_scene()
        with pytest.raises(ValueError):
            compute_bases(seg, "bogus")

    def test_modes_tuple(self):
        assert MODES == ("nonseparable", "separable", "separable-opt")

    def test_coherent_views_share_spatial_basis(self):
        # zero disparity: every view sees the same cell, so the per-view
        # spatial basis is computed once and reused by object identity
        _, seg = small_scene()
        bases = compute_bases(seg, "separable")
        for r in range(seg.k):
            per_view = bases.spatial[r]
            first = per_view[0]
            assert all(per_view[vi] is first for vi in per_view)

    def test_nonseparable_basis_spans_all_pixels(self):
        _, seg = small_scene()
        bases = compute_bases(seg, "nonseparable")
        for r in range(seg.k):
            n = int(view_sizes(seg)[r].sum())
            assert bases.nonseparable[r].vectors.shape == (n, n)

    def test_angular_cache_shared_across_super_rays(self):
        lf, seg = small_scene()
        bases = compute_bases(seg, "separable")
        assert bases.angular_cache == {}
        apply_forward(lf, seg, bases)
        # all cells are coherent across the 2x2 views: one membership key
        assert list(bases.angular_cache) == [(0, 1, 2, 3)]
        again = bases.angular_basis(np.array([0, 1, 2, 3]))
        assert again is bases.angular_cache[(0, 1, 2, 3)]


class TestRoundTrip:
    @pytest.mark.parametrize("mode", MODES)
    def test_flat_disparity_scene(self, mode):
        lf, seg = small_scene()
        bases = compute_bases(seg, mode)
        tensor = apply_forward(lf, seg, bases)
        back = apply_inverse(tensor, seg, bases)
        assert np.max(np.abs(back - lf.samples)) < 1e-8

    @pytest.mark.parametrize("mode", MODES)
    def test_textured_scene(self, mode, textured_lf):
        lf = textured_lf[0]
        seg, bases = textured_seg_and_bases(textured_lf, mode)
        tensor = apply_forward(lf, seg, bases)
        back = apply_inverse(tensor, seg, bases)
        assert np.max(np.abs(back - lf.samples)) < 1e-8

    @pytest.mark.parametrize("mode", MODES)
    def test_total_energy_preserved(self, mode):
        lf, seg = small_scene(seed=9)
        bases = compute_bases(seg, mode)
        tensor = apply_forward(lf, seg, bases)
        pixel_energy = float(np.sum(lf.samples**2))
        assert tensor.energy() == pytest.approx(pixel_energy, rel=1e-6)

    def test_mode_mismatch_rejected(self):
        lf, seg = small_scene()
        sep = compute_bases(seg, "separable")
        non = compute_bases(seg, "nonseparable")
        tensor = apply_forward(lf, seg, non)
        with pytest.raises(ValueError):
            apply_inverse(tensor, seg, sep)


class TestSpatialStage:
    def test_per_view_energy_preserved(self):
        lf, seg = small_scene(seed=2)
        bases = compute_bases(seg, "separable")
        spectra = spatial_forward(lf, seg, bases)
        for r in range(seg.k):
            for vi, vec in spectra[r].items():
                u, v = divmod(vi, seg.n_v)
                mask = seg.label_maps[u, v] == r
                cell = lf.samples[u, v][mask]
                assert np.sum(vec**2) == pytest.approx(np.sum(cell**2), rel=1e-6)

    def test_separable_band_lengths_follow_membership(self):
        lf, seg = small_scene(seed=7)
        bases = compute_bases(seg, "separable")
        tensor = apply_forward(lf, seg, bases)
        for r in range(seg.k):
            sizes = view_sizes(seg)[r]
            bands = band_membership(sizes)
            assert len(tensor.coeffs[r]) == len(bands)
            for b, members in enumerate(bands):
                assert tensor.coeffs[r][b].size == members.size


class TestNonseparableBands:
    def test_singleton_bands(self):
        lf, seg = small_scene(seed=3)
        bases = compute_bases(seg, "nonseparable")
        tensor = apply_forward(lf, seg, bases)
        for r in range(seg.k):
            n = int(view_sizes(seg)[r].sum())
            assert len(tensor.coeffs[r]) == n
            assert all(band.size == 1 for band in tensor.coeffs[r])


class TestCoupledMode:
    def test_coupling_engages_on_shape_varying_scene(self, textured_lf):
        lf = textured_lf[0]
        seg, bases = textured_seg_and_bases(textured_lf, "separable-opt")
        assert bases.coupling is not None
        coupled = [r for r in range(seg.k) if bases.coupling[r]]
        assert coupled, "expected at least one shape-varying super-ray"
        _, plain = textured_seg_and_bases(textured_lf, "separable")
        t_opt = apply_forward(lf, seg, bases)
        t_sep = apply_forward(lf, seg, plain)
        diff = max(
            np.max(np.abs(a - b))
            for r in coupled
            for a, b in zip(t_opt.coeffs[r], t_sep.coeffs[r])
            if a.size
        )
        assert diff > 1e-6

    def test_coherent_scene_degenerates_to_separable(self):
        lf, seg = small_scene()
        opt = compute_bases(seg, "separable-opt")
        sep = compute_bases(seg, "separable")
        assert all(not per_ray for per_ray in opt.coupling)
        t_opt = apply_forward(lf, seg, opt)
        t_sep = apply_forward(lf, seg, sep)
        for r in range(seg.k):
            for a, b in zip(t_opt.coeffs[r], t_sep.coeffs[r]):
                np.testing.assert_array_equal(a, b)


class TestDeterminism:
    def test_thread_count_does_not_change_output(self, textured_lf):
        lf, disparity, _ = textured_lf
        sp = slic_segment(lf.view(0, 0), 12)
        seg = project_labels(sp, disparity.values, lf.n_u, lf.n_v)
        one = compute_bases(seg, "separable-opt", threads=1)
        four = compute_bases(seg, "separable-opt", threads=4)
        t1 = apply_forward(lf, seg, one)
        t4 = apply_forward(lf, seg, four)
        for r in range(seg.k):
            assert len(t1.coeffs[r]) == len(t4.coeffs[r])
            for a, b in zip(t1.coeffs[r], t4.coeffs[r]):
                np.testing.assert_array_equal(a, b)


class TestCoefficientTensor:
    def test_counts_and_energy(self):
        coeffs = (
            (np.array([3.0, 4.0]), np.array([0.0])),
            (np.array([2.0]),),
        )
        tensor = CoefficientTensor(mode="separable", coeffs=coeffs)
        assert tensor.n_super_rays == 2
        assert tensor.super_ray_count(0) == 3
        assert tensor.super_ray_count(1) == 1
        assert tensor.total_count() == 4
        assert tensor.energy() == pytest.approx(29.0)
