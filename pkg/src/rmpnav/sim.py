"""Deterministic 2D kinematic simulator and scenario runner."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import se2
from .controller import ReactiveController, ReferencePath, Status, Variant, path_tracking_error
from .filters import run_filter_chain
from .gridmap import GridGeometry, GridMap, recenter
from .rmp import RobotState, sphere_world_position
from .se2 import Pose2, Tangent2
from .tuning import Tuning


@dataclass(frozen=True)
class Box:
    xmin: float
    ymin: float
    xmax: float
    ymax: float
    height: float

    def contains(self, x, y):
        return (x >= self.xmin) & (x <= self.xmax) & (y >= self.ymin) & (y <= self.ymax)

    def distance(self, x: float, y: float) -> float:
        dx = max(self.xmin - x, 0.0, x - self.xmax)
        dy = max(self.ymin - y, 0.0, y - self.ymax)
        return math.hypot(dx, dy)

    def blocks(self, bx: float, by: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Whether the segment from (bx, by) to each (x, y) crosses the box (slab test)."""
        t_lo = np.zeros(x.shape)
        t_hi = np.ones(x.shape)
        for b, q, lo, hi in ((bx, x, self.xmin, self.xmax), (by, y, self.ymin, self.ymax)):
            d = q - b
            with np.errstate(divide="ignore", invalid="ignore"):
                t0 = (lo - b) / d
                t1 = (hi - b) / d
            parallel = d == 0
            inside_slab = (b >= lo) & (b <= hi)
            near = np.where(parallel, np.where(inside_slab, -np.inf, np.inf), np.minimum(t0, t1))
            far = np.where(parallel, np.where(inside_slab, np.inf, -np.inf), np.maximum(t0, t1))
            t_lo = np.maximum(t_lo, near)
            t_hi = np.minimum(t_hi, far)
        return t_lo <= t_hi


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    radius: float
    height: float

    def contains(self, x, y):
        return (x - self.cx) ** 2 + (y - self.cy) ** 2 <= self.radius ** 2

    def distance(self, x: float, y: float) -> float:
        return max(math.hypot(x - self.cx, y - self.cy) - self.radius, 0.0)

    def blocks(self, bx: float, by: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        dx, dy = x - bx, y - by
        L2 = dx * dx + dy * dy
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(L2 > 0, ((self.cx - bx) * dx + (self.cy - by) * dy) / L2, 0.0)
        t = np.clip(t, 0.0, 1.0)
        return (bx + t * dx - self.cx) ** 2 + (by + t * dy - self.cy) ** 2 <= self.radius ** 2


@dataclass(frozen=True)
class World:
    obstacles: tuple = ()
    bounds: tuple[float, float, float, float] = (-10.0, -10.0, 10.0, 10.0)
    ground: float = 0.0

    def in_bounds(self, x, y):
        xmin, ymin, xmax, ymax = self.bounds
        return (x >= xmin) & (x <= xmax) & (y >= ymin) & (y <= ymax)

    def height_at(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        h = np.full(np.broadcast(x, y).shape, self.ground)
        for ob in self.obstacles:
            h = np.where(ob.contains(x, y), np.maximum(h, self.ground + ob.height), h)
        return np.where(self.in_bounds(x, y), h, np.nan)


def sense(world: World, pose: Pose2, geometry: GridGeometry, occlusion: bool = True,
          noise: float = 0.0, rng: np.random.Generator | None = None) -> np.ndarray:
    """Ground-truth heights on the grid, with cells hidden behind taller obstacles set to NaN."""
    x, y = geometry.cell_centers()
    h = world.height_at(x, y)
    if noise > 0:
        if rng is None:
            raise ValueError("noise needs an rng")
        h = h + rng.normal(0.0, noise, h.shape)
    if occlusion:
        bx, by = pose.x, pose.y
        hidden = np.zeros(h.shape, dtype=bool)
        for ob in world.obstacles:
            if ob.contains(bx, by):
                continue
            taller = world.ground + ob.height > np.nan_to_num(h, nan=-np.inf) + 1e-9
            hidden |= taller & ~ob.contains(x, y) & ob.blocks(bx, by, x, y)
        h[hidden] = np.nan
    return h


def step_body(pose: Pose2, twist: Tangent2, dt: float) -> Pose2:
    if not dt > 0:
        raise ValueError("dt must be positive")
    return pose @ se2.exp(twist * dt)


def check_collision(world: World, pose: Pose2, spheres) -> bool:
    """True iff a sphere overlaps an obstacle footprint; touching does not count."""
    for sphere in spheres:
        px, py = sphere_world_position(pose, sphere)
        for ob in world.obstacles:
            if ob.distance(px, py) < sphere.radius:
                return True
    return False


SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["world", "start", "variant", "seed", "duration_s"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "world": {
            "type": "object",
            "required": ["bounds", "obstacles"],
            "additionalProperties": False,
            "properties": {
                "bounds": {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4},
                "ground": {"type": "number"},
                "obstacles": {
                    "type": "array",
                    "items": {
                        "oneOf": [
                            {
                                "type": "object",
                                "required": ["type", "min", "max", "height"],
                                "additionalProperties": False,
                                "properties": {
                                    "type": {"const": "box"},
                                    "min": {"$ref": "#/$defs/vec2"},
                                    "max": {"$ref": "#/$defs/vec2"},
                                    "height": {"type": "number", "exclusiveMinimum": 0},
                                },
                            },
                            {
                                "type": "object",
                                "required": ["type", "center", "radius", "height"],
                                "additionalProperties": False,
                                "properties": {
                                    "type": {"const": "circle"},
                                    "center": {"$ref": "#/$defs/vec2"},
                                    "radius": {"type": "number", "exclusiveMinimum": 0},
                                    "height": {"type": "number", "exclusiveMinimum": 0},
                                },
                            },
                        ]
                    },
                },
            },
        },
        "path": {"type": "array", "items": {"$ref": "#/$defs/pose"}, "minItems": 1},
        "goal": {"$ref": "#/$defs/pose"},
        "variant": {"enum": [v.value for v in Variant]},
        "start": {"$ref": "#/$defs/pose"},
        "seed": {"type": "integer", "minimum": 0},
        "duration_s": {"type": "number", "exclusiveMinimum": 0},
        "start_jitter": {"type": "array", "items": {"type": "number", "minimum": 0},
                         "minItems": 2, "maxItems": 2},
        "sensor_noise": {"type": "number", "minimum": 0},
        "occlusion": {"type": "boolean"},
        "tuning": {"type": "object", "additionalProperties": {"type": ["number", "string"]}},
    },
    "oneOf": [{"required": ["path"]}, {"required": ["goal"]}],
    "$defs": {
        "vec2": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "pose": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
    },
}


@dataclass(frozen=True)
class Scenario:
    world: World
    path: tuple
    start: Pose2
    variant: Variant = Variant.FULL_RMP
    seed: int = 0
    duration_s: float = 60.0
    start_jitter: tuple[float, float] = (0.0, 0.0)
    sensor_noise: float = 0.0
    occlusion: bool = True
    tuning: dict = field(default_factory=dict)
    name: str = ""

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        obstacles = []
        for ob in d["world"]["obstacles"]:
            if ob["type"] == "box":
                obstacles.append(Box(*ob["min"], *ob["max"], ob["height"]))
            else:
                obstacles.append(Circle(*ob["center"], ob["radius"], ob["height"]))
        world = World(tuple(obstacles), tuple(d["world"]["bounds"]), d["world"].get("ground", 0.0))
        path = d["path"] if "path" in d else [d["goal"]]
        return cls(
            world=world,
            path=tuple(Pose2(*p) for p in path),
            start=Pose2(*d["start"]),
            variant=Variant(d["variant"]),
            seed=int(d["seed"]),
            duration_s=float(d["duration_s"]),
            start_jitter=tuple(d.get("start_jitter", (0.0, 0.0))),
            sensor_noise=float(d.get("sensor_noise", 0.0)),
            occlusion=bool(d.get("occlusion", True)),
            tuning=dict(d.get("tuning", {})),
            name=d.get("name", ""),
        )

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)


def load_scenario(path) -> Scenario:
    return Scenario.from_dict(json.loads(Path(path).read_text()))


SHIPPED = Path(__file__).parent / "scenarios"


def shipped_scenario(name: str) -> Scenario:
    return load_scenario(SHIPPED / f"{name}.json")


@dataclass
class RunResult:
    trajectory: list
    collisions: int
    outcome: str
    mean_speed: float
    pte: np.ndarray
    tick_ms: list
    filter_ms: list
    rows: list
    scenario: Scenario | None = None

    @property
    def final_pose(self) -> Pose2:
        return self.trajectory[-1]

    @property
    def reached(self) -> bool:
        return self.outcome == Status.GOAL_REACHED.value


RUN_LOG_COLUMNS = ("t", "x", "y", "theta", "vx", "vy", "wtheta", "carrot_x", "carrot_y", "pte", "status")


def _snap_origin(pose: Pose2, res: float) -> Pose2:
    return Pose2(round(pose.x / res) * res, round(pose.y / res) * res, 0.0)


def run_scenario(scenario: Scenario, tuning: Tuning | None = None, physics_hz: float = 100.0,
                 geometry: GridGeometry | None = None, occlusion: bool | None = None) -> RunResult:
    tuning = (tuning or Tuning.default()).with_overrides(scenario.tuning)
    cfg = tuning.follower
    rng = np.random.default_rng(scenario.seed)
    pos_std, th_std = scenario.start_jitter
    jitter = rng.normal(0.0, 1.0, 3) * np.array([pos_std, pos_std, th_std])
    pose = Pose2(scenario.start.x + jitter[0], scenario.start.y + jitter[1], scenario.start.theta + jitter[2])
    state = RobotState(pose)
    path = ReferencePath(scenario.path)
    ctrl = ReactiveController(path, scenario.variant, tuning.rmp, cfg)
    base = geometry or GridGeometry()
    occlusion = scenario.occlusion if occlusion is None else occlusion
    n_sub = int(round(physics_hz * cfg.dt))
    if n_sub < 1 or abs(n_sub - physics_hz * cfg.dt) > 1e-9:
        raise ValueError("physics rate must be an integer multiple of the control rate")
    h = cfg.dt / n_sub

    memory = None
    trajectory = [pose]
    rows, tick_ms, filter_ms = [], [], []
    collisions = 0
    in_contact = check_collision(scenario.world, pose, tuning.rmp.spheres)
    outcome = "Timeout"
    n_ticks = int(math.floor(scenario.duration_s / cfg.dt + 1e-9))
    for k in range(n_ticks):
        t = k * cfg.dt
        geo = base.with_origin(_snap_origin(state.pose, base.resolution))
        obs = sense(scenario.world, state.pose, geo, occlusion, scenario.sensor_noise, rng)
        if memory is not None:
            # keep what was seen before where the current scan has holes
            old = recenter(memory, geo.origin)["elevation"]
            obs = np.where(np.isnan(obs), old, obs)
        memory = GridMap(geo, {"elevation": obs})
        goal = ctrl.peek_goal(state.pose)
        snap = run_filter_chain(obs, geo, goal.translation, tuning.filters,
                                ground_height=scenario.world.ground, timestamp=t)
        filter_ms.append(snap.timings_ms["total_ms"])
        res = ctrl.tick(state, snap)
        tick_ms.append(res.solve_ms)
        st = res.status
        rows.append((t, state.pose.x, state.pose.y, state.pose.theta, res.twist.vx, res.twist.vy,
                     res.twist.wtheta, res.carrot.x, res.carrot.y, st.pte, st.state.value))
        if st.state.terminal:
            outcome = st.state.value
            break
        pose = state.pose
        for _ in range(n_sub):
            pose = step_body(pose, res.twist, h)
            contact = check_collision(scenario.world, pose, tuning.rmp.spheres)
            if contact and not in_contact:
                collisions += 1
            in_contact = contact
        state = RobotState(pose, res.twist, res.accel)
        trajectory.append(pose)

    pts = np.array([[p.x, p.y] for p in trajectory])
    travelled = float(np.sum(np.hypot(*np.diff(pts, axis=0).T))) if len(pts) > 1 else 0.0
    elapsed = max(len(trajectory) - 1, 1) * cfg.dt
    return RunResult(
        trajectory=trajectory,
        collisions=collisions,
        outcome=outcome,
        mean_speed=travelled / elapsed,
        pte=path_tracking_error(trajectory, path),
        tick_ms=tick_ms,
        filter_ms=filter_ms,
        rows=rows,
        scenario=scenario,
    )


def write_run_log(path, result: RunResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RUN_LOG_COLUMNS)
        for row in result.rows:
            w.writerow([f"{v:.6f}" if isinstance(v, float) else v for v in row])


def write_timing_log(path, result: RunResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("tick", "filter_ms", "solve_ms"))
        for i, (f, s) in enumerate(zip(result.filter_ms, result.tick_ms)):
            w.writerow((i, f"{f:.4f}", f"{s:.4f}"))


SUITE_COLUMNS = ("scenario", "variant", "reps", "mean_collisions", "max_collisions",
                 "total_collisions", "success_rate", "mean_speed")


def run_suite(scenarios, repetitions: int = 10, variants=None, tuning: Tuning | None = None,
              progress=None) -> tuple[list, dict]:
    """Run every scenario/variant pair ``repetitions`` times with seeds seed, seed+1, ...

    Returns (table rows, results keyed by (scenario name, variant)).
    """
    table, results = [], {}
    for sc in scenarios:
        for variant in variants or [sc.variant]:
            runs = []
            for rep in range(repetitions):
                r = run_scenario(sc.with_(variant=Variant(variant), seed=sc.seed + rep), tuning)
                runs.append(r)
                if progress:
                    progress(sc, variant, rep, r)
            cols = [r.collisions for r in runs]
            table.append({
                "scenario": sc.name,
                "variant": Variant(variant).value,
                "reps": repetitions,
                "mean_collisions": float(np.mean(cols)),
                "max_collisions": int(np.max(cols)),
                "total_collisions": int(np.sum(cols)),
                "success_rate": float(np.mean([r.reached for r in runs])),
                "mean_speed": float(np.mean([r.mean_speed for r in runs])),
            })
            results[(sc.name, Variant(variant).value)] = runs
    return table, results


def write_suite_table(path, table) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, SUITE_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in table:
            w.writerow({k: (f"{v:.4f}" if isinstance(v, float) else v) for k, v in row.items()})
