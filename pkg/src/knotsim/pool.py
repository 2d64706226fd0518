"""Configuration pools: random-policy generation, splits and manifests.

Pools are produced by rolling a random policy from a simple loop and
snapshotting settled states whose Gauss code has the target crossing
count, with automated filters standing in for manual curation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .gauss import compute_gauss_code, crossing_count, format_code
from .geometry import (
    Action,
    Box,
    InvalidConfiguration,
    KnotConfiguration,
    center_of_mass,
    circle_configuration,
    denormalize_action,
    load_knot,
    nearest_key_point,
    save_knot,
)
from .oracle import code_with_retry
from .physics import RopeState, SimParams, step_frame

SPLITS = ("train", "test")
MANIFEST_NAME = "manifest.txt"

# Automated stand-ins for manual goal curation: overly elongated or
# self-pinched snapshots make poor exemplars.
MAX_ASPECT_RATIO = 3.0

# Random steps after each snapshot attempt, so one settled state is not
# harvested repeatedly.
_COOLDOWN_STEPS = 10
_MAX_SETTLE_HOLDS = 10


class PoolError(Exception):
    """Pool file or manifest problem."""


class GenerationTimeout(PoolError):
    """Step budget exhausted before enough configurations were accepted."""


@dataclass(frozen=True)
class PoolEntry:
    config: KnotConfiguration
    relpath: str


@dataclass
class ConfigPool:
    """Configurations grouped by crossing count and train/test split."""

    by_x: dict[int, dict[str, list[PoolEntry]]] = field(default_factory=dict)

    def configs(self, x: int, split: str) -> list[KnotConfiguration]:
        return [e.config for e in self.by_x.get(x, {}).get(split, [])]

    def crossing_counts(self) -> list[int]:
        return sorted(self.by_x)

    def size(self, x: int, split: str) -> int:
        return len(self.by_x.get(x, {}).get(split, []))

    @classmethod
    def from_split(
        cls,
        configs_by_x: Mapping[int, Sequence[KnotConfiguration]],
        train_fraction: float = 0.5,
    ) -> "ConfigPool":
        """First ceil(fraction * n) configs (generation order) go to train."""
        pool = cls()
        for x, configs in sorted(configs_by_x.items()):
            n_train = math.ceil(len(configs) * train_fraction)
            groups = {"train": configs[:n_train], "test": configs[n_train:]}
            pool.by_x[x] = {
                split: [
                    PoolEntry(cfg, f"x{x}/{split}_{i:03d}.knot")
                    for i, cfg in enumerate(members)
                ]
                for split, members in groups.items()
            }
        return pool

    def save(self, root) -> Path:
        """Write every configuration plus the manifest; returns its path."""
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        lines = []
        for x in sorted(self.by_x):
            for split in SPLITS:
                for entry in self.by_x[x].get(split, []):
                    target = root / entry.relpath
                    target.parent.mkdir(parents=True, exist_ok=True)
                    save_knot(target, entry.config)
                    lines.append(f"{x} {split} {entry.relpath}")
        manifest = root / MANIFEST_NAME
        manifest.write_text("".join(line + "\n" for line in lines))
        return manifest

    @classmethod
    def load(cls, root, verify: bool = True) -> "ConfigPool":
        """Read a pool directory; verifies claimed crossing counts."""
        root = Path(root)
        manifest = root / MANIFEST_NAME
        if not manifest.is_file():
            raise PoolError(f"no pool manifest at {manifest}")
        pool = cls()
        for lineno, raw in enumerate(manifest.read_text().splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3 or parts[1] not in SPLITS:
                raise PoolError(f"{manifest}:{lineno}: expected 'x split path'")
            x_text, split, relpath = parts
            try:
                x = int(x_text)
            except ValueError as exc:
                raise PoolError(f"{manifest}:{lineno}: bad crossing count") from exc
            try:
                config = load_knot(root / relpath)
            except (OSError, InvalidConfiguration) as exc:
                raise PoolError(f"{manifest}:{lineno}: {exc}") from exc
            if verify:
                code = compute_gauss_code(config)
                if crossing_count(code) != x:
                    raise PoolError(
                        f"{relpath}: claims {x} crossings but computes "
                        f"{format_code(code)}"
                    )
            pool.by_x.setdefault(x, {s: [] for s in SPLITS})[split].append(
                PoolEntry(config, relpath)
            )
        return pool


def _aspect_ratio(points: np.ndarray) -> float:
    spans = points[:, :2].max(axis=0) - points[:, :2].min(axis=0)
    lo = spans.min()
    return float("inf") if lo <= 0 else float(spans.max() / lo)


def _min_nonadjacent_separation(points: np.ndarray) -> float:
    n = points.shape[0]
    diff = points[:, None, :] - points[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    idx = np.arange(n)
    sep = np.abs(idx[:, None] - idx[None, :])
    dist[(sep <= 1) | (sep == n - 1)] = np.inf
    return float(dist.min())


def _settled(state: RopeState, params: SimParams, speed: float):
    """Hold zero force in 24-frame units until the rope stops moving."""
    frames = 0
    for _ in range(_MAX_SETTLE_HOLDS):
        for _ in range(24):
            state = step_frame(state, 0, np.zeros(3), params)
        frames += 24
        if np.abs(state.velocities).max() < speed:
            return state, frames
    return None, frames


def generate_configurations(
    target_x: int,
    count: int,
    params: SimParams,
    rng: np.random.Generator,
    step_budget: int = 1_000_000,
    bead_count: int = 40,
    settle_speed: float = 1e-3,
) -> list[KnotConfiguration]:
    """Roll a random policy and snapshot settled states at target_x.

    Raises GenerationTimeout when the budget runs out and propagates
    SimulationDiverged (callers map it to a dedicated exit code).
    """
    if target_x < 0:
        raise ValueError("target crossing count must be non-negative")
    state = RopeState.at_rest(circle_configuration(bead_count))
    accepted: list[KnotConfiguration] = []
    steps = 0
    cooldown = 0
    while len(accepted) < count:
        if steps >= step_budget:
            raise GenerationTimeout(
                f"{len(accepted)}/{count} configurations at #X={target_x} "
                f"within {step_budget} steps"
            )
        action = Action.from_array(rng.uniform(-1.0, 1.0, size=6))
        box = Box.centered(center_of_mass(state.positions), 1.0)
        point, force = denormalize_action(action, box, params.f_max)
        grasp = nearest_key_point(state.positions, point)
        state = step_frame(state, grasp, force, params)
        steps += 1
        cooldown -= 1
        if cooldown > 0:
            continue
        code = code_with_retry(state.positions, steps)
        if crossing_count(code) != target_x:
            continue

        settled, frames = _settled(state, params, settle_speed)
        steps += frames
        cooldown = _COOLDOWN_STEPS
        if settled is None:
            continue
        state = settled
        snapshot = settled.positions
        code = code_with_retry(snapshot, steps)
        if crossing_count(code) != target_x:
            continue
        if _aspect_ratio(snapshot.points) > MAX_ASPECT_RATIO:
            continue
        if _min_nonadjacent_separation(snapshot.points) < params.bead_radius:
            continue
        accepted.append(snapshot)
    return accepted
