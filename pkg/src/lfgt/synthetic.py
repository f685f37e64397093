"""Layered synthetic scenes with exact ground truth.

The generator exists so geometry-dependent code can be tested against known
answers: every surface sits at a single disparity and carries a flat or
smoothly shaded (optionally textured) luminance pattern, so projected
positions, occlusion bands, label maps and per-pixel disparity are all
available in closed form.  Texture is attached to the surface, not to the
frame, so views of an unoccluded surface are exact translates of each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LfgtError
from .lightfield import DisparityMap, LightField, disparity_shift, round_half_up


@dataclass(frozen=True)
class Layer:
    """A flat foreground surface, either a disk or an axis-aligned rectangle.

    ``gradient`` is the (per-row, per-column) luminance slope evaluated in
    reference-view coordinates; ``noise_sigma`` adds Gaussian surface texture.
    """

    shape: str
    disparity: float
    luminance: float = 128.0
    gradient: tuple[float, float] = (0.0, 0.0)
    noise_sigma: float = 0.0
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 0.0
    top_left: tuple[int, int] = (0, 0)
    size: tuple[int, int] = (0, 0)

    def __post_init__(self):
        if self.shape not in ("disk", "rect"):
            raise ValueError(f"unknown layer shape {self.shape!r}")


@dataclass(frozen=True)
class Background:
    disparity: float = 0.0
    luminance: float = 96.0
    gradient: tuple[float, float] = (0.0, 0.0)
    noise_sigma: float = 0.0


@dataclass(frozen=True)
class SyntheticScene:
    """Background plus layers ordered back to front by increasing disparity."""

    background: Background = field(default_factory=Background)
    layers: tuple[Layer, ...] = ()
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        disparities = [layer.disparity for layer in self.layers]
        if any(b < a for a, b in zip(disparities, disparities[1:])):
            raise ValueError("layers must be ordered by non-decreasing disparity")


def layer_mask(layer: Layer, height: int, width: int) -> np.ndarray:
    """Boolean support of the layer in reference-view coordinates."""
    if layer.shape == "disk":
        cx, cy = layer.center
        xs = np.arange(height, dtype=np.float64)[:, None] - cx
        ys = np.arange(width, dtype=np.float64)[None, :] - cy
        return xs * xs + ys * ys <= layer.radius * layer.radius
    x0, y0 = (round_half_up(c) for c in layer.top_left)
    h, w = (round_half_up(c) for c in layer.size)
    mask = np.zeros((height, width), dtype=bool)
    if h > 0 and w > 0:
        if x0 < 0 or y0 < 0 or x0 + h > height or y0 + w > width:
            raise LfgtError("rect layer extends outside the reference frame")
        mask[x0 : x0 + h, y0 : y0 + w] = True
    return mask


def render_synthetic(
    scene: SyntheticScene, n_u: int, n_v: int, width: int, height: int
) -> tuple[LightField, DisparityMap, np.ndarray]:
    """Render all views of a layered scene.

    Returns ``(light_field, disparity, labels)`` where disparity and labels
    describe the reference view (0, 0); label 0 is the background and layer
    ``i`` carries label ``i + 1``.  A layer whose shifted support would leave
    the frame in any view is an error, so every layer is fully visible (or
    occluded by a closer layer) everywhere.
    """
    if n_u < 1 or n_v < 1 or width < 1 or height < 1:
        raise ValueError("geometry must be positive")
    bg = scene.background
    rng = np.random.default_rng(scene.seed)

    shifts_bg = [disparity_shift(bg.disparity, u, v) for u in range(n_u) for v in range(n_v)]
    pad = max(max(abs(sx), abs(sy)) for sx, sy in shifts_bg)
    if bg.noise_sigma > 0:
        bg_tex = rng.normal(0.0, bg.noise_sigma, (height + 2 * pad, width + 2 * pad))
    else:
        bg_tex = None

    masks = []
    values = []
    coords = []
    for layer in scene.layers:
        mask = layer_mask(layer, height, width)
        xs, ys = np.nonzero(mask)
        if xs.size == 0:
            raise LfgtError("layer support is empty")
        val = (
            layer.luminance
            + layer.gradient[0] * xs
            + layer.gradient[1] * ys
        )
        if layer.noise_sigma > 0:
            tex = rng.normal(0.0, layer.noise_sigma, (height, width))
            val = val + tex[xs, ys]
        masks.append(mask)
        coords.append((xs, ys))
        values.append(val)
        for u in range(n_u):
            for v in range(n_v):
                sx, sy = disparity_shift(layer.disparity, u, v)
                if (
                    xs.min() + sx < 0
                    or xs.max() + sx >= height
                    or ys.min() + sy < 0
                    or ys.max() + sy >= width
                ):
                    raise LfgtError(
                        f"layer shifted out of frame at view ({u}, {v}); "
                        "shrink the layer or its disparity"
                    )

    labels = np.zeros((height, width), dtype=np.int32)
    disparity = np.full((height, width), bg.disparity, dtype=np.float64)
    for i, mask in enumerate(masks):
        labels[mask] = i + 1
        disparity[mask] = scene.layers[i].disparity

    xs_grid = np.arange(height, dtype=np.int64)[:, None]
    ys_grid = np.arange(width, dtype=np.int64)[None, :]
    samples = np.empty((n_u, n_v, height, width), dtype=np.float64)
    for u in range(n_u):
        for v in range(n_v):
            sx, sy = disparity_shift(bg.disparity, u, v)
            xr = xs_grid - sx
            yr = ys_grid - sy
            img = bg.luminance + bg.gradient[0] * xr + bg.gradient[1] * yr
            img = np.broadcast_to(img, (height, width)).astype(np.float64, copy=True)
            if bg_tex is not None:
                img += bg_tex[xr + pad, yr + pad]
            # layers are ordered back to front; later writes win
            for (xs, ys), val, layer in zip(coords, values, scene.layers):
                lsx, lsy = disparity_shift(layer.disparity, u, v)
                img[xs + lsx, ys + lsy] = val
            samples[u, v] = np.clip(img, 0.0, 255.0)
    return LightField(samples), DisparityMap(disparity), labels
