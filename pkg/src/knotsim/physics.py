"""Deterministic bead-chain rope dynamics in a viscous medium.

Forces: stretch springs between cyclic neighbours, a discrete-curvature
bending term, penalty repulsion between non-adjacent beads, and linear
drag.  Integration is semi-implicit Euler; the rope floats (no gravity,
no ground plane).
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from functools import lru_cache

import numpy as np

from .geometry import (
    REST_LENGTH,
    InvalidConfiguration,
    KnotConfiguration,
    _freeze,
    edge_lengths_valid,
)

# Divergence guard: nothing in a sane episode approaches these.
_MAX_MAGNITUDE = 1e3

# Material damping along each edge as a fraction of critical for the
# stretch mode.  Keeps the free rope from ringing (kinetic energy must
# decay frame over frame) while leaving bulk coasting untouched.
_EDGE_DAMPING_RATIO = 0.7


class SimulationDiverged(Exception):
    """A coordinate or velocity left the sane range; abort the episode."""


@dataclass(frozen=True)
class SimParams:
    """Integrator and material constants.

    One environment step holds the applied force for
    dt * substeps_per_frame * frame_skip seconds.
    """

    dt: float = 1e-3
    substeps_per_frame: int = 1
    frame_skip: int = 24
    k_stretch: float = 500.0
    k_bend: float = 0.01
    bead_radius: float = 0.02
    c_drag: float = 0.1
    f_max: float = 2.0
    mass: float = 0.01

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise ValueError(f"{f.name} must be positive")

    @property
    def frame_duration(self) -> float:
        return self.dt * self.substeps_per_frame * self.frame_skip


@dataclass(frozen=True)
class RopeState:
    positions: KnotConfiguration
    velocities: np.ndarray

    def __post_init__(self):
        vel = _freeze(np.asarray(self.velocities, dtype=np.float64))
        if vel.shape != self.positions.points.shape:
            raise ValueError("velocities shape mismatch")
        if not np.all(np.isfinite(vel)):
            raise ValueError("non-finite velocity")
        object.__setattr__(self, "velocities", vel)

    @classmethod
    def at_rest(cls, config: KnotConfiguration) -> "RopeState":
        return cls(config, np.zeros_like(config.points))


def _stretch_forces(pts: np.ndarray, vel: np.ndarray, params: SimParams) -> np.ndarray:
    ahead = np.roll(pts, -1, axis=0) - pts
    length = np.linalg.norm(ahead, axis=1, keepdims=True)
    unit = ahead / length
    # Hooke along each cyclic edge plus a dashpot on the edge's rate of
    # stretch; both are pairwise equal and opposite.
    c_edge = _EDGE_DAMPING_RATIO * np.sqrt(params.k_stretch * params.mass)
    rate = np.einsum(
        "ij,ij->i", np.roll(vel, -1, axis=0) - vel, unit
    )[:, None]
    pull = (params.k_stretch * (length - REST_LENGTH) + c_edge * rate) * unit
    return pull - np.roll(pull, 1, axis=0)

def _bend_forces(pts: np.ndarray, k_bend: float) -> np.ndarray:
    # Discrete curvature vector at each bead; k_bend/r0^2 has spring
    # units.  The cyclic Laplacian sums to zero over the loop.
    lap = np.roll(pts, -1, axis=0) - 2.0 * pts + np.roll(pts, 1, axis=0)
    return (k_bend / REST_LENGTH**2) * lap


@lru_cache(maxsize=8)
def _nonadjacent_mask(n: int) -> np.ndarray:
    idx = np.arange(n)
    sep = np.abs(idx[:, None] - idx[None, :])
    mask = (sep > 1) & (sep != n - 1)
    mask.setflags(write=False)
    return mask


def _collision_forces(pts: np.ndarray, params: SimParams) -> np.ndarray:
    n = pts.shape[0]
    contact = 2.0 * params.bead_radius
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    # Only non-adjacent pairs repel; neighbours are held by springs.
    overlap = (dist < contact) & _nonadjacent_mask(n)
    if not overlap.any():
        return np.zeros_like(pts)
    k_c = 10.0 * params.k_stretch
    safe = np.where(dist > 1e-12, dist, 1.0)
    direction = diff / safe[:, :, None]
    if (dist[overlap] <= 1e-12).any():
        # Coincident beads: deterministic antisymmetric push along x.
        idx = np.arange(n)
        fallback = np.sign(idx[:, None] - idx[None, :]).astype(float)
        degenerate = dist <= 1e-12
        direction[degenerate] = 0.0
        direction[..., 0] = np.where(degenerate, fallback, direction[..., 0])
    magnitude = np.where(overlap, k_c * (contact - dist), 0.0)
    return np.einsum("ij,ijk->ik", magnitude, direction)


def internal_forces(state: RopeState, params: SimParams) -> np.ndarray:
    """Per-bead sum of stretch, bending, self-collision and drag forces."""
    pts = state.positions.points
    return (
        _stretch_forces(pts, state.velocities, params)
        + _bend_forces(pts, params.k_bend)
        + _collision_forces(pts, params)
        - params.c_drag * state.velocities
    )


def step_frame(
    state: RopeState,
    grasp_index: int,
    applied_force: np.ndarray,
    params: SimParams,
) -> RopeState:
    """Advance one environment frame with the force held on one bead.

    Raises SimulationDiverged when the state leaves the sane range.
    """
    pts = state.positions.points.copy()
    vel = state.velocities.copy()
    n = pts.shape[0]
    if not 0 <= grasp_index < n:
        raise IndexError(f"grasp index {grasp_index} out of range for {n} beads")
    applied = np.asarray(applied_force, dtype=np.float64)

    inv_m = 1.0 / params.mass
    dt = params.dt
    for _ in range(params.frame_skip * params.substeps_per_frame):
        force = (
            _stretch_forces(pts, vel, params)
            + _bend_forces(pts, params.k_bend)
            + _collision_forces(pts, params)
            - params.c_drag * vel
        )
        force[grasp_index] += applied
        vel = vel + dt * inv_m * force
        pts = pts + dt * vel

    if (
        not np.all(np.isfinite(pts))
        or not np.all(np.isfinite(vel))
        or np.abs(pts).max() > _MAX_MAGNITUDE
        or np.abs(vel).max() > _MAX_MAGNITUDE
        or not edge_lengths_valid(pts)
    ):
        raise SimulationDiverged("rope state left the sane range")
    try:
        positions = KnotConfiguration(pts)
    except InvalidConfiguration as exc:  # pragma: no cover - guarded above
        raise SimulationDiverged(str(exc)) from exc
    return RopeState(positions, vel)


def apply_reset_noise(
    config: KnotConfiguration, scale: float, rng: np.random.Generator
) -> KnotConfiguration:
    """Add i.i.d. uniform noise in [-scale, scale] per coordinate.

    Re-draws up to 10 times if the noised loop violates the validity
    bounds, then shrinks the last draw until it fits.
    """
    if scale < 0:
        raise ValueError("noise scale must be non-negative")
    if scale == 0:
        return config
    pts = config.points
    noise = None
    for _ in range(10):
        noise = rng.uniform(-scale, scale, size=pts.shape)
        if edge_lengths_valid(pts + noise):
            return KnotConfiguration(pts + noise)
    # Clamp: halve the offending draw until the bounds hold (scale 0 is
    # always valid because the input configuration is).
    while not edge_lengths_valid(pts + noise):
        noise *= 0.5
    return KnotConfiguration(pts + noise)


def kinetic_energy(state: RopeState, params: SimParams) -> float:
    return 0.5 * params.mass * float(np.einsum("ij,ij->", state.velocities, state.velocities))


_PARAM_KEYS = [f.name for f in fields(SimParams)]
_INT_KEYS = {"substeps_per_frame", "frame_skip"}


def save_params(path, params: SimParams) -> None:
    """Flat `key = value` text config, one line per field."""
    with open(path, "w") as fh:
        for key in _PARAM_KEYS:
            fh.write(f"{key} = {getattr(params, key)!r}\n")


def load_params(path) -> SimParams:
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, text = line.partition("=")
            key = key.strip()
            if key not in _PARAM_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            text = text.strip()
            values[key] = int(text) if key in _INT_KEYS else float(text)
    missing = sorted(set(_PARAM_KEYS) - set(values))
    if missing:
        raise ValueError(f"{path}: missing keys: {', '.join(missing)}")
    return SimParams(**values)
