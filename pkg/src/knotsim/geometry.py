"""Core geometric types shared by the physics, crossing oracle and renderer.

A rope is an ordered closed loop of bead positions; all world-scale
constants (rest length, bead count) live here so every subsystem agrees
on them.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

# World scale: every other constant in the package is expressed relative
# to the rest length.  ~2 m of rope at the default bead count.
REST_LENGTH = 0.05
DEFAULT_BEAD_COUNT = 40
MIN_BEAD_COUNT = 8

# Validity bounds on consecutive bead distance, as factors of REST_LENGTH.
# The physics keeps edges far tighter; these bound what counts as a rope
# at all.
MIN_EDGE_FACTOR = 0.25
MAX_EDGE_FACTOR = 4.0

_KNOT_MAGIC = b"KNOT"
_KNOT_VERSION = 1


class InvalidConfiguration(ValueError):
    """Raised when a point set does not describe a valid closed rope."""


def _freeze(a: np.ndarray) -> np.ndarray:
    # Private copy so neither side can mutate shared state.
    a = np.array(a, dtype=np.float64, order="C", copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class KnotConfiguration:
    """Ordered closed loop of 3D key points; point B-1 connects back to 0."""

    points: np.ndarray

    def __post_init__(self):
        pts = _freeze(np.asarray(self.points, dtype=np.float64))
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise InvalidConfiguration(f"expected (B, 3) points, got {pts.shape}")
        if pts.shape[0] < MIN_BEAD_COUNT:
            raise InvalidConfiguration(
                f"need at least {MIN_BEAD_COUNT} beads, got {pts.shape[0]}"
            )
        if not np.all(np.isfinite(pts)):
            raise InvalidConfiguration("non-finite coordinate")
        edges = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
        lo = MIN_EDGE_FACTOR * REST_LENGTH
        hi = MAX_EDGE_FACTOR * REST_LENGTH
        if edges.min() < lo or edges.max() > hi:
            raise InvalidConfiguration(
                f"edge length outside [{lo:g}, {hi:g}]: "
                f"min {edges.min():g}, max {edges.max():g}"
            )
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]


def edge_lengths_valid(points: np.ndarray) -> bool:
    """Check only the consecutive-distance bound (cheap pre-validation)."""
    pts = np.asarray(points, dtype=np.float64)
    if not np.all(np.isfinite(pts)):
        return False
    edges = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    return bool(
        edges.min() >= MIN_EDGE_FACTOR * REST_LENGTH
        and edges.max() <= MAX_EDGE_FACTOR * REST_LENGTH
    )


def circle_configuration(bead_count: int = DEFAULT_BEAD_COUNT) -> KnotConfiguration:
    """Planar regular polygon in z=0 with every edge exactly at rest length."""
    radius = REST_LENGTH / (2.0 * np.sin(np.pi / bead_count))
    angles = 2.0 * np.pi * np.arange(bead_count) / bead_count
    pts = np.stack(
        [radius * np.cos(angles), radius * np.sin(angles), np.zeros(bead_count)],
        axis=1,
    )
    return KnotConfiguration(pts)


@dataclass(frozen=True)
class WorldState:
    """Manipulated rope plus the episode's immutable goal exemplar."""

    manipulated: KnotConfiguration
    goal: KnotConfiguration
    velocities: np.ndarray
    step_index: int = 0

    def __post_init__(self):
        vel = _freeze(np.asarray(self.velocities, dtype=np.float64))
        if vel.shape != self.manipulated.points.shape:
            raise ValueError(
                f"velocities shape {vel.shape} != points shape "
                f"{self.manipulated.points.shape}"
            )
        if self.step_index < 0:
            raise ValueError("step_index must be non-negative")
        object.__setattr__(self, "velocities", vel)


def _clamp_unit(v: np.ndarray) -> np.ndarray:
    # Clamped on ingestion, never rejected; NaN maps to 0.
    v = np.nan_to_num(np.asarray(v, dtype=np.float64), nan=0.0)
    return np.clip(v, -1.0, 1.0)


@dataclass(frozen=True)
class Action:
    """Normalized grasp location + force, every component clamped to [-1, 1]."""

    location: np.ndarray
    force: np.ndarray

    def __post_init__(self):
        loc = _freeze(_clamp_unit(self.location))
        frc = _freeze(_clamp_unit(self.force))
        if loc.shape != (3,) or frc.shape != (3,):
            raise ValueError("location and force must be 3-vectors")
        object.__setattr__(self, "location", loc)
        object.__setattr__(self, "force", frc)

    @classmethod
    def from_array(cls, a) -> "Action":
        a = np.asarray(a, dtype=np.float64).reshape(-1)
        if a.shape != (6,):
            raise ValueError(f"action must have 6 components, got {a.shape}")
        return cls(location=a[:3], force=a[3:])

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.location, self.force])


@dataclass(frozen=True)
class Box:
    """Axis-aligned workspace box with positive extent on each axis."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = _freeze(np.asarray(self.lo, dtype=np.float64))
        hi = _freeze(np.asarray(self.hi, dtype=np.float64))
        if lo.shape != (3,) or hi.shape != (3,):
            raise ValueError("box corners must be 3-vectors")
        if not np.all(hi > lo):
            raise ValueError("box must have positive extent on each axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def centered(cls, center: np.ndarray, half_extent: float) -> "Box":
        center = np.asarray(center, dtype=np.float64)
        return cls(lo=center - half_extent, hi=center + half_extent)


def nearest_key_point(config: KnotConfiguration, p) -> int:
    """Index of the bead closest to p; ties break to the smallest index."""
    p = np.asarray(p, dtype=np.float64)
    d2 = np.einsum("ij,ij->i", config.points - p, config.points - p)
    # argmin returns the first minimum, which is the smallest index.
    return int(np.argmin(d2))


def center_of_mass(config: KnotConfiguration) -> np.ndarray:
    """Unweighted mean of all key points."""
    return config.points.mean(axis=0)


def denormalize_action(action: Action, workspace: Box, f_max: float):
    """Map a normalized action to a world-space grasp point and force in N.

    Location maps affinely from [-1, 1]^3 onto the workspace box; force
    scales component-wise by f_max.
    """
    mid = 0.5 * (workspace.lo + workspace.hi)
    half = 0.5 * (workspace.hi - workspace.lo)
    return mid + action.location * half, action.force * f_max


def save_knot(path, config: KnotConfiguration) -> None:
    """Write one configuration: magic, u32 version, u32 bead count, B*3 f64 LE."""
    pts = config.points
    with open(path, "wb") as fh:
        fh.write(_KNOT_MAGIC)
        fh.write(struct.pack("<II", _KNOT_VERSION, pts.shape[0]))
        fh.write(pts.astype("<f8").tobytes(order="C"))


def load_knot(path) -> KnotConfiguration:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != _KNOT_MAGIC:
        raise InvalidConfiguration(f"{path}: not a knot configuration file")
    version, count = struct.unpack_from("<II", data, 4)
    if version != _KNOT_VERSION:
        raise InvalidConfiguration(f"{path}: unsupported version {version}")
    expected = 12 + count * 3 * 8
    if len(data) != expected:
        raise InvalidConfiguration(
            f"{path}: truncated file ({len(data)} bytes, expected {expected})"
        )
    pts = np.frombuffer(data, dtype="<f8", offset=12).reshape(count, 3)
    return KnotConfiguration(pts)
