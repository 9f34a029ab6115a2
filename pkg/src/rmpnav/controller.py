"""Carrot-on-a-stick path following around the RMP solve."""

from __future__ import annotations

import enum
import math
import time
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import rmp, se2
from .rmp import RmpParams, RobotState
from .se2 import Pose2, Tangent2

ZERO_TWIST = Tangent2(0.0, 0.0, 0.0)
DUPLICATE_DISTANCE = 1e-9


class Status(enum.Enum):
    RUNNING = "Running"
    GOAL_REACHED = "GoalReached"
    GOAL_UNREACHABLE = "GoalUnreachable"
    STUCK = "Stuck"

    @property
    def terminal(self) -> bool:
        return self is not Status.RUNNING


class Variant(enum.Enum):
    """Which policies the controller assembles.

    Every variant keeps damping and regularization. FULL_RMP adds the other
    four with distance-activated metrics. POTENTIAL_FIELD keeps only the
    free-space goal and obstacle terms at fixed unit metrics. GDF_ONLY keeps
    the two goal terms. GDF_AVOIDANCE drops the free-space goal term and
    holds the GDF metric at one so the body still settles on the goal.
    """

    FULL_RMP = "FullRMP"
    POTENTIAL_FIELD = "PotentialField"
    GDF_ONLY = "GdfOnly"
    GDF_AVOIDANCE = "GdfAvoidance"


@dataclass(frozen=True)
class ControllerStatus:
    state: Status
    progress: float
    pte: float


@dataclass(frozen=True)
class FollowerConfig:
    d_carrot: float = 1.5
    position_tolerance: float = 0.15
    angular_tolerance: float = 0.2
    stuck_window: float = 10.0
    stuck_displacement: float = 0.15
    # how far past the latched projection the next projection may jump
    projection_window: float = 3.0
    unreachable_ticks: int = 5
    dt: float = 0.1

    def __post_init__(self):
        for name in ("d_carrot", "position_tolerance", "angular_tolerance", "stuck_window",
                     "stuck_displacement", "projection_window", "dt"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.unreachable_ticks < 1:
            raise ValueError("unreachable_ticks must be at least 1")


class ReferencePath:
    """Piecewise-linear path through poses, resampled to a maximum spacing."""

    def __init__(self, poses, max_spacing: float = 0.5):
        poses = [p if isinstance(p, Pose2) else Pose2(*p) for p in poses]
        if not poses:
            raise ValueError("path needs at least one pose")
        out = [poses[0]]
        for p in poses[1:]:
            q = out[-1]
            dist = math.hypot(p.x - q.x, p.y - q.y)
            if dist < DUPLICATE_DISTANCE:
                # same place: the later pose only updates the heading
                out[-1] = Pose2(q.x, q.y, p.theta)
                continue
            n = math.ceil(dist / max_spacing)
            heading = math.atan2(p.y - q.y, p.x - q.x)
            for i in range(1, n):
                t = i / n
                out.append(Pose2(q.x + t * (p.x - q.x), q.y + t * (p.y - q.y), heading))
            out.append(p)
        self.poses = tuple(out)
        self.points = np.array([[p.x, p.y] for p in out])
        seg = np.diff(self.points, axis=0)
        self.seg_len = np.hypot(seg[:, 0], seg[:, 1])
        self.arclength = np.concatenate(([0.0], np.cumsum(self.seg_len)))

    @property
    def length(self) -> float:
        return float(self.arclength[-1])

    @property
    def final(self) -> Pose2:
        return self.poses[-1]

    def project(self, point, s_min: float = 0.0, window: float = math.inf) -> float:
        """Arclength of the nearest path point with arclength in [s_min, s_min + window].

        Ties go to the larger arclength.
        """
        if len(self.poses) == 1:
            return 0.0
        p = np.asarray(point, dtype=float)
        a = self.points[:-1]
        d = self.points[1:] - a
        L = self.seg_len
        with np.errstate(invalid="ignore", divide="ignore"):
            t = np.where(L > 0, np.einsum("ij,ij->i", p - a, d) / (L * L), 0.0)
        s0 = self.arclength[:-1]
        s_lo = np.clip((s_min - s0) / np.where(L > 0, L, 1.0), 0.0, 1.0)
        s_hi = np.clip((s_min + window - s0) / np.where(L > 0, L, 1.0), 0.0, 1.0)
        usable = (s0 + L >= s_min) & (s0 <= s_min + window)
        t = np.clip(t, s_lo, s_hi)
        closest = a + t[:, None] * d
        dist = np.hypot(closest[:, 0] - p[0], closest[:, 1] - p[1])
        dist[~usable] = np.inf
        s = s0 + t * L
        best = np.min(dist)
        ties = np.nonzero(dist <= best + 1e-12)[0]
        return float(np.max(s[ties]))

    def pose_at(self, s: float) -> Pose2:
        """Path position at arclength ``s`` with heading along the tangent."""
        if s >= self.length:
            return self.final
        if len(self.poses) == 1:
            return self.final
        s = max(s, 0.0)
        i = int(np.searchsorted(self.arclength, s, side="right")) - 1
        i = min(i, len(self.seg_len) - 1)
        t = (s - self.arclength[i]) / self.seg_len[i]
        a, b = self.points[i], self.points[i + 1]
        pos = a + t * (b - a)
        return Pose2(pos[0], pos[1], math.atan2(b[1] - a[1], b[0] - a[0]))


def carrot(path: ReferencePath, pose: Pose2, d_carrot: float, s_min: float = 0.0,
           window: float = math.inf) -> tuple[Pose2, float]:
    """Look-ahead goal ``d_carrot`` past the projection of ``pose``; returns (goal, projection)."""
    s = path.project(pose.translation, s_min, window)
    return path.pose_at(s + d_carrot), s


def path_tracking_error(executed, reference: ReferencePath) -> np.ndarray:
    """Distance from each executed pose to the piecewise-linear reference."""
    pts = np.array([[p.x, p.y] if isinstance(p, Pose2) else p[:2] for p in executed], dtype=float)
    ref = reference.points
    if len(ref) == 1:
        return np.hypot(pts[:, 0] - ref[0, 0], pts[:, 1] - ref[0, 1])
    a = ref[:-1]
    d = ref[1:] - a
    L2 = np.einsum("ij,ij->i", d, d)
    rel = pts[:, None, :] - a[None, :, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(L2 > 0, np.einsum("pij,ij->pi", rel, d) / L2, 0.0)
    t = np.clip(t, 0.0, 1.0)
    diff = rel - t[..., None] * d[None, :, :]
    return np.min(np.hypot(diff[..., 0], diff[..., 1]), axis=1)


@dataclass(frozen=True)
class TickResult:
    twist: Tangent2
    status: ControllerStatus
    accel: Tangent2
    carrot: Pose2
    solve_ms: float
    policies: tuple = ()


class ReactiveController:
    """Per-run controller loop state: latched projection, debounce and stuck history."""

    def __init__(self, path: ReferencePath, variant: Variant = Variant.FULL_RMP,
                 params: RmpParams | None = None, config: FollowerConfig | None = None):
        self.path = path
        self.variant = Variant(variant)
        self.params = params or RmpParams()
        self.config = config or FollowerConfig()
        self.progress = 0.0
        self._unreachable_count = 0
        n = int(round(self.config.stuck_window / self.config.dt))
        self._history = deque(maxlen=n + 1)

    def assemble(self, state: RobotState, snapshot, goal: Pose2) -> list:
        p = self.params
        v = self.variant
        pf = v is Variant.POTENTIAL_FIELD
        pols = []
        if v is not Variant.POTENTIAL_FIELD:
            # without the free-space goal term nothing else pulls the body onto the goal
            fixed_gdf = v is Variant.GDF_AVOIDANCE
            pols.append(rmp.gdf_goal_policy(state, snapshot, goal, p.gdf_goal, fixed_gdf))
        if v is not Variant.GDF_AVOIDANCE:
            pols.append(rmp.freespace_goal_policy(state, goal, p.freespace_goal, pf))
        if v is not Variant.GDF_ONLY:
            for sphere in p.spheres:
                pols.append(rmp.obstacle_policy(state, snapshot, sphere, p.obstacle, pf))
        if v in (Variant.FULL_RMP, Variant.GDF_AVOIDANCE):
            pols.append(rmp.heading_policy(state, goal, p.heading))
        pols.append(rmp.damping_policy(state, p.damping))
        pols.append(rmp.regularization_policy(state, p.regularization_s))
        return pols

    def _goal_disconnected(self, state: RobotState, snapshot) -> bool:
        if snapshot is None:
            return False
        if snapshot.gdf_invalid:
            return True
        geo = snapshot.geometry
        idx = geo.world_to_index(state.pose.translation)
        if idx is None:
            return False
        r, c = idx
        f = snapshot["f_gdf"][max(r - 2, 0):r + 3, max(c - 2, 0):c + 3]
        return not np.isfinite(f).any()

    def _reached(self, pose: Pose2) -> bool:
        goal = self.path.final
        cfg = self.config
        return (math.hypot(goal.x - pose.x, goal.y - pose.y) < cfg.position_tolerance
                and abs(se2.wrap_angle(goal.theta - pose.theta)) < cfg.angular_tolerance)

    def peek_goal(self, pose: Pose2) -> Pose2:
        """The carrot ``tick`` would use at ``pose``, without latching progress."""
        cfg = self.config
        return carrot(self.path, pose, cfg.d_carrot, self.progress, cfg.projection_window)[0]

    def tick(self, state: RobotState, snapshot) -> TickResult:
        cfg = self.config
        goal, s = carrot(self.path, state.pose, cfg.d_carrot, self.progress, cfg.projection_window)
        self.progress = max(self.progress, s)
        pte = float(path_tracking_error([state.pose], self.path)[0])
        self._history.append(state.pose.translation)

        if self._reached(state.pose):
            return self._stop(Status.GOAL_REACHED, goal, pte)
        self._unreachable_count = self._unreachable_count + 1 if self._goal_disconnected(state, snapshot) else 0
        if self._unreachable_count >= cfg.unreachable_ticks:
            return self._stop(Status.GOAL_UNREACHABLE, goal, pte)
        if len(self._history) == self._history.maxlen:
            moved = math.hypot(*(self._history[-1] - self._history[0]))
            if moved < cfg.stuck_displacement:
                return self._stop(Status.STUCK, goal, pte)

        t0 = time.perf_counter()
        pols = self.assemble(state, snapshot, goal)
        a = rmp.solve(pols)
        solve_ms = (time.perf_counter() - t0) * 1e3
        twist = rmp.integrate(a, state.velocity, cfg.dt, self.params.limits)
        status = ControllerStatus(Status.RUNNING, self.progress, pte)
        return TickResult(twist, status, a, goal, solve_ms, tuple(pols))

    def _stop(self, kind: Status, goal: Pose2, pte: float) -> TickResult:
        return TickResult(ZERO_TWIST, ControllerStatus(kind, self.progress, pte), ZERO_TWIST, goal, 0.0)
