"""Shared fixtures: small deterministic scenes reused across test modules."""

import numpy as np
import pytest


def random_connected_laplacian(rng, n, extra_edges=None):
    """Laplacian of a random connected graph: spanning tree plus extra edges."""
    adj = np.zeros((n, n))
    for i in range(1, n):
        j = int(rng.integers(0, i))
        adj[i, j] = adj[j, i] = 1.0
    if extra_edges is None:
        extra_edges = int(rng.integers(0, max(1, n)))
    for _ in range(extra_edges):
        a, b = rng.integers(0, n, size=2)
        if a != b:
            adj[a, b] = adj[b, a] = 1.0
    return np.diag(adj.sum(axis=1)) - adj

from lfgt import (
    Background,
    CodecConfig,
    Layer,
    SyntheticScene,
    encode_light_field,
    render_synthetic,
)


def textured_scene_spec():
    """Three-layer scene with texture on every surface.

    Shapes and disparities are chosen so that all layers stay inside the
    frame over a 3x3 view grid at 56x56 pixels.
    """
    background = Background(disparity=0.0, luminance=80.0, gradient=(0.3, 0.5), noise_sigma=3.0)
    layers = (
        Layer(shape="rect", disparity=1.0, luminance=120.0, gradient=(-0.4, 0.2),
              noise_sigma=1.0, top_left=(8, 6), size=(14, 18)),
        Layer(shape="disk", disparity=2.0, luminance=170.0, gradient=(0.0, -0.6),
              noise_sigma=2.0, center=(30, 32), radius=11.0),
    )
    return SyntheticScene(background=background, layers=layers, seed=11)


@pytest.fixture(scope="session")
def textured_lf():
    lf, disp, labels = render_synthetic(textured_scene_spec(), 3, 3, 56, 56)
    return lf, disp, labels


@pytest.fixture(scope="session")
def flat_lf():
    scene = SyntheticScene(background=Background(disparity=0.0, luminance=96.0), layers=(), seed=0)
    lf, disp, labels = render_synthetic(scene, 2, 2, 24, 24)
    return lf, disp, labels


@pytest.fixture(scope="session")
def encoded_textured(textured_lf):
    """One shared default-config encode of the textured scene."""
    lf, disp, _ = textured_lf
    config = CodecConfig(mode="separable", k=24, lam=0.1)
    data, stats = encode_light_field(lf, disp, config)
    return lf, disp, config, data, stats
