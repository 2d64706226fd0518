"""Policy rollouts, success-rate evaluation and generalization matrices.

Episode seeds are pre-assigned from the master seed, so results are
byte-identical across runs and worker counts; workers only change the
wall time.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .env import DEFAULT_HORIZON, KnotEnv, TaskSpec, format_log_record
from .geometry import Action
from .physics import SimParams
from .pool import ConfigPool


@dataclass(frozen=True)
class RandomPolicy:
    """Actions uniform on [-1, 1]^6, reproducible per episode."""

    seed: int = 0

    def action_stream(self, episode_seed):
        rng = np.random.default_rng([self.seed, *_as_seed_tuple(episode_seed)])
        while True:
            yield rng.uniform(-1.0, 1.0, size=6)


@dataclass(frozen=True)
class ReplayPolicy:
    """Replays a recorded action sequence, then holds still."""

    actions: tuple

    def action_stream(self, episode_seed):
        for action in self.actions:
            yield np.asarray(action, dtype=np.float64)
        while True:
            yield np.zeros(6)


def _as_seed_tuple(seed) -> tuple[int, ...]:
    if isinstance(seed, (tuple, list)):
        return tuple(int(s) for s in seed)
    return (int(seed),)


@dataclass(frozen=True)
class Rollout:
    """One full episode: per-step log lines plus summary fields."""

    seed_label: str
    lines: tuple[str, ...]
    success: bool
    length: int
    total_reward: float

    def text(self) -> str:
        return "".join(line + "\n" for line in self.lines)


@dataclass(frozen=True)
class EvalReport:
    """Aggregate over N seeded episodes of one task setting.

    wall_time is informational only and deliberately excluded from the
    machine-readable record so reports stay byte-identical across runs.
    """

    task: str
    x_setting: str
    split: str
    episodes: int
    success_count: int
    success_rate: float
    mean_episode_length: float
    wall_time: float

    def to_record(self) -> str:
        return (
            f"task={self.task} x={self.x_setting} split={self.split} "
            f"episodes={self.episodes} success_count={self.success_count} "
            f"success_rate={self.success_rate!r} "
            f"mean_episode_length={self.mean_episode_length!r}"
        )


def x_label(spec: TaskSpec) -> str:
    """The task's complexity setting: initial #X for unknot, goal #X
    otherwise."""
    xs = spec.initial_x_set if spec.task == "unknot" else spec.goal_x_set
    return ",".join(str(x) for x in xs)


def rollout(
    policy,
    spec: TaskSpec,
    pool: ConfigPool,
    params: SimParams | None = None,
    seed=0,
    horizon: int = DEFAULT_HORIZON,
) -> Rollout:
    """Run one episode to termination or truncation and log every step."""
    env = KnotEnv(spec, pool, params=params, horizon=horizon)
    env.reset(_as_seed_tuple(seed))
    stream = policy.action_stream(seed)
    lines = []
    total = 0.0
    success = False
    steps = 0
    while not env.done:
        action = Action.from_array(next(stream))
        result = env.step(action)
        total += result.reward
        steps += 1
        success = success or result.terminated
        lines.append(
            format_log_record(
                steps - 1,
                action,
                result.reward,
                result.terminated,
                result.truncated,
                result.info["gauss_code_current"],
                result.info["gauss_code_goal"],
            )
        )
    label = ",".join(str(s) for s in _as_seed_tuple(seed))
    return Rollout(
        seed_label=label,
        lines=tuple(lines),
        success=success,
        length=steps,
        total_reward=total,
    )


def evaluate(
    policy,
    spec: TaskSpec,
    pool: ConfigPool,
    params: SimParams | None = None,
    episodes: int = 256,
    seed: int = 0,
    workers: int = 1,
    horizon: int = DEFAULT_HORIZON,
) -> tuple[EvalReport, list[Rollout]]:
    """N independent episodes with pre-assigned seeds (seed, index)."""
    if episodes < 1:
        raise ValueError("need at least one episode")
    started = time.perf_counter()

    def one(index: int) -> Rollout:
        return rollout(policy, spec, pool, params, (seed, index), horizon)

    if workers <= 1:
        results = [one(i) for i in range(episodes)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(one, range(episodes)))

    successes = sum(r.success for r in results)
    mean_len = sum(r.length for r in results) / episodes
    report = EvalReport(
        task=spec.task,
        x_setting=x_label(spec),
        split=spec.split,
        episodes=episodes,
        success_count=successes,
        success_rate=successes / episodes,
        mean_episode_length=mean_len,
        wall_time=time.perf_counter() - started,
    )
    return report, results


def generalization_matrix(
    policy,
    task: str,
    train_x_list,
    eval_x_list,
    pool: ConfigPool,
    params: SimParams | None = None,
    episodes: int = 128,
    seed: int = 0,
    workers: int = 1,
) -> list[list[EvalReport]]:
    """One evaluation per (training #X, eval #X) cell on the test split.

    Policies here carry no training state, so rows differ only by their
    pre-assigned seeds; the shape and protocol match the learned-policy
    use case.
    """
    matrix = []
    for row, train_x in enumerate(train_x_list):
        row_reports = []
        for col, eval_x in enumerate(eval_x_list):
            spec = TaskSpec.at_crossings(task, eval_x, split="test")
            report, _ = evaluate(
                policy,
                spec,
                pool,
                params,
                episodes=episodes,
                seed=int(np.random.default_rng([seed, row, col]).integers(2**63)),
                workers=workers,
            )
            row_reports.append(report)
        matrix.append(row_reports)
    return matrix


def human_table(reports: list[EvalReport]) -> str:
    """Aligned text table, wall time included."""
    header = (
        "task",
        "#X",
        "split",
        "episodes",
        "successes",
        "rate",
        "mean_len",
        "wall_s",
    )
    rows = [header]
    for r in reports:
        rows.append(
            (
                r.task,
                r.x_setting,
                r.split,
                str(r.episodes),
                str(r.success_count),
                f"{r.success_rate:.4f}",
                f"{r.mean_episode_length:.2f}",
                f"{r.wall_time:.2f}",
            )
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    return "\n".join(
        "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
        for row in rows
    )
