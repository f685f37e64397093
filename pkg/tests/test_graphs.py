"""Local graph construction: spatial 4-connectivity, angular links, combined graphs."""

import numpy as np
import pytest

from lfgt import LocalGraph
from lfgt.graphs import (
    build_angular_graph,
    build_nonseparable_graph,
    build_spatial_graph,
    canonical_pixels,
    spatial_graph_from_mask,
)
from lfgt.segmentation import SuperRaySegmentation


def single_pixel_cells(n_u, n_v):
    """2x2 image, one label per pixel, zero disparity, over an n_u x n_v grid."""
    maps = np.zeros((n_u, n_v, 2, 2), dtype=np.int32)
    maps[:, :] = np.array([[0, 1], [2, 3]])
    return SuperRaySegmentation(label_maps=maps, median_disparity=np.zeros(4), k=4)


class TestCanonicalOrder:
    def test_pixels_sort_by_column_then_row(self):
        mask = np.array([[1, 0], [1, 1]], dtype=bool)
        xs, ys = canonical_pixels(mask)
        assert list(zip(xs.tolist(), ys.tolist())) == [(0, 0), (1, 0), (1, 1)]

    def test_nonseparable_vertices_are_view_major(self):
        g = build_nonseparable_graph(single_pixel_cells(2, 2), 0)
        np.testing.assert_array_equal(
            g.vertices, [[0, 0, 0, 0], [0, 1, 0, 0], [1, 0, 0, 0], [1, 1, 0, 0]])


class TestSpatialGraph:
    def test_l_tromino_is_a_three_path(self):
        mask = np.array([[1, 0], [1, 1]], dtype=bool)
        g = spatial_graph_from_mask(mask)
        np.testing.assert_array_equal(
            g.laplacian, [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])

    def test_diagonal_pixels_are_not_adjacent(self):
        mask = np.array([[1, 0], [0, 1]], dtype=bool)
        g = spatial_graph_from_mask(mask)
        np.testing.assert_array_equal(g.adjacency, np.zeros((2, 2)))

    def test_from_segmentation_matches_mask_construction(self):
        seg = single_pixel_cells(1, 1)
        g = build_spatial_graph(seg, 2, (0, 0))
        mask = seg.label_maps[0, 0] == 2
        np.testing.assert_array_equal(g.laplacian, spatial_graph_from_mask(mask).laplacian)

    def test_laplacian_rows_sum_to_zero(self):
        rng = np.random.default_rng(0)
        mask = rng.uniform(size=(6, 7)) < 0.7
        mask[3, 3] = True
        g = spatial_graph_from_mask(mask)
        np.testing.assert_allclose(g.laplacian.sum(axis=1), 0.0, atol=0)
        np.testing.assert_array_equal(g.laplacian, g.laplacian.T)


class TestAngularGraph:
    def test_single_view(self):
        g = build_angular_graph([(0, 0)])
        np.testing.assert_array_equal(g.laplacian, [[0.0]])

    def test_isolated_views_are_linked_pairwise(self):
        # (0,0) and (1,1) are not grid neighbours; the repair joins them
        g = build_angular_graph([(0, 0), (1, 1)])
        np.testing.assert_array_equal(g.laplacian, [[1, -1], [-1, 1]])

    def test_full_2x2_grid_is_a_four_cycle(self):
        g = build_angular_graph([(0, 0), (0, 1), (1, 0), (1, 1)])
        np.testing.assert_array_equal(
            g.laplacian,
            [[2, -1, -1, 0], [-1, 2, 0, -1], [-1, 0, 2, -1], [0, -1, -1, 2]])


class TestNonseparableGraph:
    def test_single_pixel_cell_spans_the_view_lattice(self):
        g = build_nonseparable_graph(single_pixel_cells(2, 2), 0)
        eigenvalues = np.linalg.eigvalsh(g.laplacian)
        np.testing.assert_allclose(eigenvalues, [0.0, 2.0, 2.0, 4.0], atol=1e-12)

    def test_view_links_require_the_projected_pixel_to_share_the_label(self):
        maps = np.ones((1, 2, 3, 3), dtype=np.int32)
        maps[0, 0, 0, 0] = 0
        maps[0, 1, 2, 2] = 0
        seg = SuperRaySegmentation(label_maps=maps, median_disparity=np.zeros(2), k=2)
        g = build_nonseparable_graph(seg, 0)
        # disparity 0 projects (0,0) onto (0,0), which holds label 1 there
        np.testing.assert_array_equal(g.laplacian, np.zeros((2, 2)))

    def test_mixed_spatial_and_view_edges(self):
        maps = np.zeros((1, 2, 1, 2), dtype=np.int32)
        seg = SuperRaySegmentation(label_maps=maps, median_disparity=np.zeros(1), k=1)
        g = build_nonseparable_graph(seg, 0)
        # two pixels per view plus two view links form a four cycle
        eigenvalues = np.linalg.eigvalsh(g.laplacian)
        np.testing.assert_allclose(eigenvalues, [0.0, 2.0, 2.0, 4.0], atol=1e-12)
