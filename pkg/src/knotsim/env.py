"""Episodic goal-conditioned knot manipulation tasks.

An episode pairs a manipulated rope with an immutable goal exemplar.
Success is exact Gauss-code equality after a physics frame; reaching the
horizon without success is a timeout.  Reward is sparse: +5 on success,
-5 on timeout, 0 otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gauss import GaussCode, codes_equal, crossing_count, format_code
from .geometry import (
    Action,
    Box,
    KnotConfiguration,
    WorldState,
    center_of_mass,
    denormalize_action,
    nearest_key_point,
)
from .oracle import code_with_retry
from .physics import (
    RopeState,
    SimParams,
    SimulationDiverged,
    apply_reset_noise,
    step_frame,
)
from .pool import ConfigPool, PoolError
from .render import Observation, render_observation

TASKS = ("unknot", "tie", "convert")
SPLITS = ("train", "test")

REWARD_SUCCESS = 5.0
REWARD_TIMEOUT = -5.0
DEFAULT_HORIZON = 50
RESET_NOISE_SCALE = 0.015

# Initial / goal crossing sets per task.
_TASK_DEFAULTS = {
    "unknot": ((2, 3, 4), (0,)),
    "tie": ((0,), (2, 3, 4)),
    "convert": ((1, 2, 3), (2, 3, 4)),
}

_RESAMPLE_TRIES = 10


class EmptyPool(PoolError):
    """The pool cannot satisfy the task spec's crossing sets and split."""


@dataclass(frozen=True)
class TaskSpec:
    """Which task to run, at which crossing counts, on which split."""

    task: str
    initial_x_set: tuple[int, ...]
    goal_x_set: tuple[int, ...]
    split: str = "train"

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if self.split not in SPLITS:
            raise ValueError(f"unknown split {self.split!r}")
        initial = tuple(sorted(set(int(x) for x in self.initial_x_set)))
        goal = tuple(sorted(set(int(x) for x in self.goal_x_set)))
        if not initial or not goal:
            raise ValueError("crossing sets must be non-empty")
        if any(x < 0 for x in initial + goal):
            raise ValueError("crossing counts must be non-negative")
        object.__setattr__(self, "initial_x_set", initial)
        object.__setattr__(self, "goal_x_set", goal)

    @classmethod
    def default(cls, task: str, split: str = "train") -> "TaskSpec":
        initial, goal = _TASK_DEFAULTS[task]
        return cls(task, initial, goal, split)

    @classmethod
    def at_crossings(cls, task: str, x: int, split: str = "train") -> "TaskSpec":
        """Single-crossing-count setting: unknot starts at x, tie targets
        x, convert maps x-1 to x (the pairing implied by the defaults)."""
        if task == "unknot":
            return cls(task, (x,), (0,), split)
        if task == "tie":
            return cls(task, (0,), (x,), split)
        if task == "convert":
            if x < 1:
                raise ValueError("convert needs a goal crossing count >= 1")
            return cls(task, (x - 1,), (x,), split)
        raise ValueError(f"unknown task {task!r}")


@dataclass(frozen=True)
class StepResult:
    observation: Observation
    reward: float
    terminated: bool
    truncated: bool
    info: dict

    def __post_init__(self):
        if self.terminated and self.truncated:
            raise ValueError("terminated and truncated are mutually exclusive")


def _pick(entries: list[KnotConfiguration], rng: np.random.Generator):
    return entries[int(rng.integers(len(entries)))]


def _gather(pool: ConfigPool, x_set, split) -> list[KnotConfiguration]:
    members: list[KnotConfiguration] = []
    for x in x_set:
        configs = pool.configs(x, split)
        if not configs:
            raise EmptyPool(f"pool has no {split} configurations at #X={x}")
        members.extend(configs)
    return members


def _noised_initial(
    config: KnotConfiguration,
    noise_scale: float,
    rng: np.random.Generator,
) -> tuple[KnotConfiguration, GaussCode]:
    """Reset noise that must not change the crossing count; falls back to
    the clean configuration when ten draws all do."""
    want = crossing_count(code_with_retry(config, 0))
    for _ in range(_RESAMPLE_TRIES):
        candidate = apply_reset_noise(config, noise_scale, rng)
        code = code_with_retry(candidate, 0)
        if crossing_count(code) == want:
            return candidate, code
    return config, code_with_retry(config, 0)


def reset(
    spec: TaskSpec,
    pool: ConfigPool,
    seed,
    noise_scale: float = RESET_NOISE_SCALE,
) -> tuple[WorldState, Observation]:
    """Sample initial and goal configurations and start an episode.

    Initial draws get reset noise (crossing-count preserving); a draw
    whose code already equals the goal code is resampled to avoid
    zero-length episodes.
    """
    rng = np.random.default_rng(seed)
    initial_members = _gather(pool, spec.initial_x_set, spec.split)
    goal_members = _gather(pool, spec.goal_x_set, spec.split)

    state = None
    for _ in range(_RESAMPLE_TRIES):
        initial, initial_code = _noised_initial(
            _pick(initial_members, rng), noise_scale, rng
        )
        goal = _pick(goal_members, rng)
        goal_code = code_with_retry(goal, 0)
        state = WorldState(
            manipulated=initial,
            goal=goal,
            velocities=np.zeros_like(initial.points),
            step_index=0,
        )
        if not codes_equal(initial_code, goal_code):
            break
    return state, render_observation(state)


def step(
    state: WorldState,
    action: Action,
    params: SimParams,
    horizon: int = DEFAULT_HORIZON,
    goal_code: GaussCode | None = None,
) -> tuple[WorldState, StepResult]:
    """Advance one frame: grasp, apply force, re-run the oracle, grade.

    The workspace box for the grasp location is [-1, 1]^3 meters
    centered on the manipulated rope's center of mass at grasp time.
    """
    if goal_code is None:
        goal_code = code_with_retry(state.goal, state.step_index)

    box = Box.centered(center_of_mass(state.manipulated), 1.0)
    grasp_point, force = denormalize_action(action, box, params.f_max)
    grasp_index = nearest_key_point(state.manipulated, grasp_point)

    diverged = False
    try:
        rope = step_frame(
            RopeState(state.manipulated, state.velocities), grasp_index, force, params
        )
        manipulated, velocities = rope.positions, rope.velocities
    except SimulationDiverged:
        diverged = True
        manipulated, velocities = state.manipulated, state.velocities

    next_state = WorldState(
        manipulated=manipulated,
        goal=state.goal,
        velocities=velocities,
        step_index=state.step_index + 1,
    )
    current_code = code_with_retry(manipulated, next_state.step_index)

    if diverged:
        reward, terminated, truncated = REWARD_TIMEOUT, False, True
    elif codes_equal(current_code, goal_code):
        reward, terminated, truncated = REWARD_SUCCESS, True, False
    elif next_state.step_index >= horizon:
        reward, terminated, truncated = REWARD_TIMEOUT, False, True
    else:
        reward, terminated, truncated = 0.0, False, False

    info = {
        "gauss_code_current": format_code(current_code),
        "gauss_code_goal": format_code(goal_code),
        "step_index": next_state.step_index,
    }
    if diverged:
        info["diverged"] = True
    result = StepResult(
        observation=render_observation(next_state),
        reward=reward,
        terminated=terminated,
        truncated=truncated,
        info=info,
    )
    return next_state, result


class KnotEnv:
    """Stateful wrapper over the functional reset/step operations.

    One instance is one episode stream: single-threaded, deterministic
    under a fixed seed, and strict about stepping finished episodes.
    """

    def __init__(
        self,
        spec: TaskSpec,
        pool: ConfigPool,
        params: SimParams | None = None,
        horizon: int = DEFAULT_HORIZON,
        noise_scale: float = RESET_NOISE_SCALE,
    ):
        self.spec = spec
        self.pool = pool
        self.params = params if params is not None else SimParams()
        self.horizon = horizon
        self.noise_scale = noise_scale
        self.state: WorldState | None = None
        self._goal_code: GaussCode | None = None
        self._done = True

    def reset(self, seed) -> tuple[Observation, dict]:
        self.state, observation = reset(
            self.spec, self.pool, seed, noise_scale=self.noise_scale
        )
        self._goal_code = code_with_retry(self.state.goal, 0)
        self._done = False
        info = {
            "gauss_code_current": format_code(code_with_retry(self.state.manipulated, 0)),
            "gauss_code_goal": format_code(self._goal_code),
            "step_index": 0,
        }
        return observation, info

    def step(self, action) -> StepResult:
        if self.state is None:
            raise RuntimeError("reset() must be called before step()")
        if self._done:
            raise RuntimeError("episode finished; call reset()")
        if not isinstance(action, Action):
            action = Action.from_array(action)
        self.state, result = step(
            self.state, action, self.params, self.horizon, self._goal_code
        )
        self._done = result.terminated or result.truncated
        return result

    @property
    def done(self) -> bool:
        return self._done

    @property
    def goal_code(self) -> GaussCode | None:
        return self._goal_code


def format_log_record(
    step_index: int,
    action: Action,
    reward: float,
    terminated: bool,
    truncated: bool,
    gauss_code_current: str,
    gauss_code_goal: str,
) -> str:
    """One episode-log line; key=value fields, action as six floats."""
    action_text = ",".join(repr(float(v)) for v in action.as_array())
    return (
        f"step={step_index} action={action_text} reward={reward:g} "
        f"terminated={'true' if terminated else 'false'} "
        f"truncated={'true' if truncated else 'false'} "
        f"gauss_code_current={gauss_code_current} "
        f"gauss_code_goal={gauss_code_goal}"
    )
