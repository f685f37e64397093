"""Deterministic Laplacian eigendecomposition and graph Fourier transforms."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_connected_laplacian
from lfgt import diagonalize, gft_forward, gft_inverse
from lfgt.errors import GraphSizeError
from lfgt.spectral import orthonormality_tolerance

P3 = np.array([[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]])
C4 = np.array([
    [2.0, -1.0, 0.0, -1.0],
    [-1.0, 2.0, -1.0, 0.0],
    [0.0, -1.0, 2.0, -1.0],
    [-1.0, 0.0, -1.0, 2.0],
])


class TestNamedGraphs:
    def test_three_path_spectrum_and_vectors(self):
        basis = diagonalize(P3)
        np.testing.assert_allclose(basis.eigenvalues, [0.0, 1.0, 3.0], atol=1e-12)
        expected = np.array([
            [1 / math.sqrt(3), 1 / math.sqrt(2), 1 / math.sqrt(6)],
            [1 / math.sqrt(3), 0.0, -2 / math.sqrt(6)],
            [1 / math.sqrt(3), -1 / math.sqrt(2), 1 / math.sqrt(6)],
        ])
        np.testing.assert_allclose(basis.vectors, expected, atol=1e-12)

    def test_four_cycle_spectrum(self):
        basis = diagonalize(C4)
        np.testing.assert_allclose(basis.eigenvalues, [0.0, 2.0, 2.0, 4.0], atol=1e-12)

    def test_four_cycle_degenerate_pair_spans_the_exact_subspace(self):
        basis = diagonalize(C4)
        pair = basis.vectors[:, 1:3]
        projector = pair @ pair.T
        expected = 0.5 * np.array([
            [1.0, 0.0, -1.0, 0.0],
            [0.0, 1.0, 0.0, -1.0],
            [-1.0, 0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0, 1.0],
        ])
        np.testing.assert_allclose(projector, expected, atol=1e-9)


class TestDeterminism:
    def test_repeated_calls_are_bitwise_identical(self):
        rng = np.random.default_rng(21)
        lap = random_connected_laplacian(rng, 40)
        a = diagonalize(lap)
        b = diagonalize(lap.copy())
        np.testing.assert_array_equal(a.vectors, b.vectors)
        np.testing.assert_array_equal(a.eigenvalues, b.eigenvalues)

    def test_sign_convention_first_sizable_entry_positive(self):
        rng = np.random.default_rng(22)
        for _ in range(20):
            basis = diagonalize(random_connected_laplacian(rng, int(rng.integers(2, 30))))
            for col in basis.vectors.T:
                lead = col[np.abs(col) > 1e-8][0]
                assert lead > 0


class TestEightNodeRegression:
    def test_degenerate_eight_node_graph_keeps_orthonormality(self):
        """Eight-node graphs exercise the 64-byte column stride where aliased
        in-place ufuncs miscompute on some builds; the basis must stay clean."""
        rng = np.random.default_rng(0)
        lap = random_connected_laplacian(rng, 8)
        basis = diagonalize(lap)
        gram = basis.vectors.T @ basis.vectors
        assert np.max(np.abs(gram - np.eye(8))) <= 1e-9
        residual = lap @ basis.vectors - basis.vectors * basis.eigenvalues
        assert np.max(np.abs(residual)) <= 1e-6 * (1.0 + basis.eigenvalues[-1])


class TestValidation:
    def test_indefinite_matrix_is_rejected(self):
        with pytest.raises(ValueError):
            diagonalize(np.array([[0.0, 2.0], [2.0, 0.0]]))

    def test_asymmetric_matrix_is_rejected(self):
        with pytest.raises(ValueError):
            diagonalize(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_size_cap_refuses_oversized_graphs(self):
        with pytest.raises(GraphSizeError):
            diagonalize(np.broadcast_to(0.0, (6501, 6501)))

    def test_tolerance_steps_up_for_large_graphs(self):
        assert orthonormality_tolerance(256) == 1e-9
        assert orthonormality_tolerance(257) == 1e-7


class TestTransform:
    def test_round_trip_and_parseval(self):
        rng = np.random.default_rng(30)
        for n in (2, 9, 33, 120):
            basis = diagonalize(random_connected_laplacian(rng, n))
            signal = rng.normal(size=n)
            spectrum = gft_forward(basis, signal)
            np.testing.assert_allclose(gft_inverse(basis, spectrum), signal, atol=1e-10)
            assert spectrum @ spectrum == pytest.approx(signal @ signal, rel=1e-12)

    def test_constant_signal_is_pure_first_band(self):
        basis = diagonalize(P3)
        spectrum = gft_forward(basis, np.full(3, 5.0))
        np.testing.assert_allclose(spectrum, [5.0 * math.sqrt(3), 0.0, 0.0], atol=1e-12)

    @settings(deadline=None, max_examples=40)
    @given(st.integers(min_value=1, max_value=12), st.integers(min_value=0, max_value=1 << 30))
    def test_reconstruction_property(self, n, seed):
        rng = np.random.default_rng(seed)
        lap = random_connected_laplacian(rng, n) if n > 1 else np.zeros((1, 1))
        basis = diagonalize(lap)
        n_nodes = lap.shape[0]
        tol = orthonormality_tolerance(n_nodes)
        assert np.max(np.abs(basis.vectors.T @ basis.vectors - np.eye(n_nodes))) <= tol
        residual = lap @ basis.vectors - basis.vectors * basis.eigenvalues
        assert np.max(np.abs(residual)) <= 1e-6 * (1.0 + basis.eigenvalues[-1])
        assert np.all(np.diff(basis.eigenvalues) >= 0.0)
        assert basis.eigenvalues[0] >= -1e-9
