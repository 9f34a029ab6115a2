"""Timing of the filter chain stages and the controller solve on synthetic worlds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controller import ReactiveController, ReferencePath, Variant
from .filters import TIMING_COLUMNS, run_filter_chain
from .gridmap import GridGeometry
from .rmp import RobotState
from .se2 import Pose2, Tangent2
from .sim import Box, Circle, World, sense
from .tuning import Tuning

STAGES = tuple(c for c in TIMING_COLUMNS if c != "timestamp")
CONTROLLER = "controller_ms"
# soft budgets in ms, checked against the mean
BUDGETS = {"total_ms": 100.0, "gdf_ms": 25.0, CONTROLLER: 2.0}
MIN_REPS = 10


@dataclass(frozen=True)
class StageStats:
    mean: float
    p95: float
    budget: float | None

    @property
    def within_budget(self) -> bool | None:
        return None if self.budget is None else self.mean <= self.budget


def synthetic_world(rng: np.random.Generator, extent: float, n_obstacles: int = 12) -> World:
    half = 0.5 * extent
    obstacles = []
    for i in range(n_obstacles):
        cx, cy = rng.uniform(-0.9 * half, 0.9 * half, 2)
        # keep the body's own neighbourhood clear so the controller has a free start
        if abs(cx) < 0.8 and abs(cy) < 0.8:
            cx += 1.6 if cx >= 0 else -1.6
        if i % 2:
            obstacles.append(Circle(cx, cy, rng.uniform(0.1, 0.05 * extent + 0.1), 1.0))
        else:
            w, h = rng.uniform(0.1, 0.1 * extent + 0.1, 2)
            obstacles.append(Box(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2, 1.0))
    return World(tuple(obstacles), (-half, -half, half, half), 0.0)


def bench(grid: int = 200, reps: int = 100, seed: int = 0, tuning: Tuning | None = None,
          resolution: float = 0.04) -> dict[str, StageStats]:
    """Mean and p95 per stage over ``reps`` fresh synthetic worlds of ``grid`` x ``grid`` cells."""
    if reps < MIN_REPS:
        raise ValueError(f"bench needs at least {MIN_REPS} repetitions")
    if grid < 8:
        raise ValueError("grid must be at least 8 cells")
    tuning = tuning or Tuning.default()
    rng = np.random.default_rng(seed)
    extent = grid * resolution
    geo = GridGeometry(extent, extent, resolution)
    goal = Pose2(0.4 * extent, 0.0, 0.0)
    path = ReferencePath([Pose2.identity(), goal])
    samples = {k: [] for k in STAGES + (CONTROLLER,)}
    # one untimed pass so jit compilation is not billed to the first repetition
    run_filter_chain(np.zeros(geo.shape), geo, goal.translation, tuning.filters, ground_height=0.0)
    for _ in range(reps):
        world = synthetic_world(rng, extent)
        pose = Pose2.identity()
        obs = sense(world, pose, geo, occlusion=True)
        snap = run_filter_chain(obs, geo, goal.translation, tuning.filters, ground_height=0.0)
        for k in STAGES:
            samples[k].append(snap.timings_ms[k])
        ctrl = ReactiveController(path, Variant.FULL_RMP, tuning.rmp, tuning.follower)
        state = RobotState(pose, Tangent2(0.2, 0.0, 0.0))
        # assembly plus solve, as timed inside the tick
        samples[CONTROLLER].append(ctrl.tick(state, snap).solve_ms)
    return {
        k: StageStats(float(np.mean(v)), float(np.percentile(v, 95)), BUDGETS.get(k))
        for k, v in samples.items()
    }


def format_report(stats: dict[str, StageStats], grid: int, reps: int) -> str:
    lines = [f"grid {grid}x{grid}, {reps} repetitions",
             f"{'stage':<20}{'mean_ms':>10}{'p95_ms':>10}{'budget_ms':>11}  status"]
    for k, s in stats.items():
        budget = "" if s.budget is None else f"{s.budget:.1f}"
        status = {None: "", True: "ok", False: "over"}[s.within_budget]
        lines.append(f"{k:<20}{s.mean:>10.3f}{s.p95:>10.3f}{budget:>11}  {status}")
    return "\n".join(lines) + "\n"
