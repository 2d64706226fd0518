"""Deterministic software rasterizer for the observation images.

Orthographic projection along -z onto a 128x128 pane per rope; beads are
filled disks painted back to front by z, colored white at bead 0 shading
through a fixed hue ramp to red at the final bead (the traversal-order
convention the crossing oracle uses).  No anti-aliasing, no lighting:
byte-identical output for identical inputs.
"""
from __future__ import annotations

import colorsys
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from PIL import Image

from .geometry import KnotConfiguration, WorldState, center_of_mass

PANE_SIZE = 128
BEAD_PIXEL_RADIUS = 3
# Fixed orthographic half-width in meters: apparent rope size varies
# with actual extent, and crossings stay a few pixels wide.
CAMERA_HALF_EXTENT = 0.6


@dataclass(frozen=True)
class Camera:
    """Orthographic camera looking down -z, centered on the rope."""

    center: np.ndarray
    half_extent: float = CAMERA_HALF_EXTENT

    def __post_init__(self):
        center = np.asarray(self.center, dtype=np.float64).reshape(3)
        if self.half_extent <= 0:
            raise ValueError("half_extent must be positive")
        object.__setattr__(self, "center", center)


@dataclass(frozen=True)
class Observation:
    """RGB byte tensor [3, 128, 256]: manipulated pane | goal pane."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.shape != (3, PANE_SIZE, 2 * PANE_SIZE) or px.dtype != np.uint8:
            raise ValueError(
                f"expected uint8 [3, {PANE_SIZE}, {2 * PANE_SIZE}], "
                f"got {px.dtype} {px.shape}"
            )
        object.__setattr__(self, "pixels", px)


def camera_for(config: KnotConfiguration) -> Camera:
    """Camera tracking the rope's center of mass at fixed half-extent."""
    return Camera(center=center_of_mass(config))


@lru_cache(maxsize=8)
def bead_colors(n: int) -> np.ndarray:
    """White at bead 0 ramping through the hue wheel to pure red at n-1."""
    colors = np.empty((n, 3), dtype=np.uint8)
    for i in range(n):
        t = i / (n - 1)
        # Saturation rises from 0 (white) while hue slides to 0 (red).
        r, g, b = colorsys.hsv_to_rgb(0.58 * (1.0 - t), t, 1.0)
        colors[i] = (round(r * 255), round(g * 255), round(b * 255))
    colors.setflags(write=False)
    return colors


@lru_cache(maxsize=1)
def _disk_offsets() -> tuple[np.ndarray, np.ndarray]:
    r = BEAD_PIXEL_RADIUS
    dy, dx = np.mgrid[-r : r + 1, -r : r + 1]
    keep = dx * dx + dy * dy <= r * r
    return dy[keep].copy(), dx[keep].copy()


def render_pane(config: KnotConfiguration, camera: Camera) -> np.ndarray:
    """Rasterize one rope to an RGB [3, 128, 128] byte array."""
    pts = config.points
    n = pts.shape[0]
    scale = PANE_SIZE / (2.0 * camera.half_extent)
    # Pixel centers; row 0 is the top of the image (+y up in world).
    cols = np.floor((pts[:, 0] - camera.center[0] + camera.half_extent) * scale).astype(
        np.int64
    )
    rows = np.floor((camera.center[1] + camera.half_extent - pts[:, 1]) * scale).astype(
        np.int64
    )

    # Painter's algorithm: draw in ascending z so the highest bead wins;
    # exact z ties resolve to the larger bead index.
    order = np.lexsort((np.arange(n), pts[:, 2]))
    colors = bead_colors(n)
    dy, dx = _disk_offsets()

    frame = np.zeros((PANE_SIZE, PANE_SIZE, 3), dtype=np.uint8)
    for idx in order:
        ys = rows[idx] + dy
        xs = cols[idx] + dx
        keep = (ys >= 0) & (ys < PANE_SIZE) & (xs >= 0) & (xs < PANE_SIZE)
        frame[ys[keep], xs[keep]] = colors[idx]
    return np.ascontiguousarray(frame.transpose(2, 0, 1))


def render_observation(state: WorldState) -> Observation:
    """Manipulated rope on the left pane, goal exemplar on the right."""
    left = render_pane(state.manipulated, camera_for(state.manipulated))
    right = render_pane(state.goal, camera_for(state.goal))
    return Observation(np.concatenate([left, right], axis=2))


def _as_chw(pixels) -> np.ndarray:
    px = pixels.pixels if isinstance(pixels, Observation) else np.asarray(pixels)
    if px.ndim != 3 or px.shape[0] != 3 or px.dtype != np.uint8:
        raise ValueError(f"expected uint8 [3, H, W], got {px.dtype} {px.shape}")
    return px


def observation_to_image(pixels) -> Image.Image:
    return Image.fromarray(_as_chw(pixels).transpose(1, 2, 0), mode="RGB")


def write_png(path, pixels) -> None:
    """8-bit RGB PNG, no alpha; accepts an Observation or [3, H, W] bytes."""
    observation_to_image(pixels).save(path, format="PNG")


def read_png(path) -> np.ndarray:
    """Load a pane or observation PNG back to [3, H, W] uint8."""
    with Image.open(path) as img:
        arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return arr.transpose(2, 0, 1)
