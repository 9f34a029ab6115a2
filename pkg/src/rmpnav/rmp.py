"""Motion policies {f, M}, their distance activations and the closed-form solve.

Body policies act on the full body acceleration (ax, ay, atheta). Sphere
policies act on the translational acceleration of one collision sphere and
are pulled back to the body through ``sphere_jacobian``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import se2
from .gridmap import OutOfBounds, sample_bilinear
from .se2 import Pose2, Tangent2

CLEARANCE_EPS = 1e-3
MIN_HEADING_SPEED = 0.01


class SingularMetric(np.linalg.LinAlgError):
    """The summed pulled-back metric has no inverse."""


@dataclass(frozen=True)
class PolicyParams:
    k: float = 1.0
    d_c: float = 1.0
    alpha: float = 10.0

    def __post_init__(self):
        if self.k < 0 or self.d_c <= 0 or self.alpha <= 0:
            raise ValueError(f"invalid policy parameters {self}")


@dataclass(frozen=True)
class CollisionSphere:
    offset: tuple[float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("sphere radius must be positive")


def default_spheres() -> tuple[CollisionSphere, ...]:
    return (
        CollisionSphere((0.25, 0.0), 0.25),
        CollisionSphere((0.0, 0.0), 0.25),
        CollisionSphere((-0.25, 0.0), 0.25),
    )


@dataclass(frozen=True)
class RmpParams:
    gdf_goal: PolicyParams = PolicyParams(k=2.0)
    freespace_goal: PolicyParams = PolicyParams(k=1.5)
    obstacle: PolicyParams = PolicyParams(k=0.3, d_c=0.5, alpha=15.0)
    heading: PolicyParams = PolicyParams(k=1.5)
    damping: PolicyParams = PolicyParams(k=2.5)
    regularization_s: float = 0.05
    # componentwise |vx|, |vy|, |wtheta| limits of the integrated twist
    limits: tuple[float, float, float] = (0.5, 0.5, 1.0)
    spheres: tuple[CollisionSphere, ...] = field(default_factory=default_spheres)

    def __post_init__(self):
        if self.regularization_s < 0:
            raise ValueError("regularization scale must be non-negative")
        if any(not lim > 0 for lim in self.limits):
            raise ValueError("velocity limits must be positive")


@dataclass(frozen=True)
class MotionPolicy:
    """One {f, M} pair. ``sphere`` is None for body policies."""

    f: np.ndarray
    M: np.ndarray
    sphere: CollisionSphere | None = None
    name: str = ""

    @property
    def is_body(self) -> bool:
        return self.sphere is None


@dataclass(frozen=True)
class RobotState:
    pose: Pose2
    velocity: Tangent2 = Tangent2(0.0, 0.0, 0.0)
    prev_accel: Tangent2 = Tangent2(0.0, 0.0, 0.0)


def activation(d: float, d_c: float, alpha: float, mode: str) -> float:
    """Logistic switch that is ~1 when ``d`` is closer (or farther) than ``d_c``."""
    z = alpha * (d - d_c)
    # split on the sign so exp never overflows
    if z >= 0:
        e = math.exp(-z)
        closer = e / (1.0 + e)
    else:
        closer = 1.0 / (1.0 + math.exp(z))
    if mode == "closer":
        return closer
    if mode == "farther":
        return 1.0 - closer
    raise ValueError(f"unknown activation mode {mode!r}")


def _body(f, weight, name) -> MotionPolicy:
    return MotionPolicy(np.asarray(f, dtype=float), weight * np.eye(3), None, name)


def _zero_body(name) -> MotionPolicy:
    return _body(np.zeros(3), 0.0, name)


def goal_distance(state: RobotState, goal: Pose2) -> float:
    return math.hypot(goal.x - state.pose.x, goal.y - state.pose.y)


def gdf_goal_policy(state: RobotState, snapshot, goal: Pose2, p: PolicyParams,
                    fixed_metric: bool = False) -> MotionPolicy:
    name = "gdf_goal"
    if snapshot is None or snapshot.gdf_invalid:
        return _zero_body(name)
    pos = state.pose.translation
    try:
        g = np.array([sample_bilinear(snapshot.geometry, snapshot["grad_gdf_x"], pos),
                      sample_bilinear(snapshot.geometry, snapshot["grad_gdf_y"], pos)])
    except OutOfBounds:
        return _zero_body(name)
    if not np.all(np.isfinite(g)) or not g.any():
        return _zero_body(name)
    # map axes are parallel to the inertial frame, so R_BM = R(-theta)
    g_body = se2.rotate_gradient(Pose2(0.0, 0.0, -state.pose.theta), g)
    f = np.array([-p.k * g_body[0], -p.k * g_body[1], 0.0])
    w = 1.0 if fixed_metric else activation(goal_distance(state, goal), p.d_c, p.alpha, "farther")
    return _body(f, w, name)


def freespace_goal_policy(state: RobotState, goal: Pose2, p: PolicyParams,
                          fixed_metric: bool = False) -> MotionPolicy:
    err = se2.log(se2.between(state.pose, goal)).as_array()
    w = 1.0 if fixed_metric else activation(goal_distance(state, goal), p.d_c, p.alpha, "closer")
    return _body(p.k * err, w, "freespace_goal")


def sphere_world_position(pose: Pose2, sphere: CollisionSphere) -> np.ndarray:
    return pose.transform_point(sphere.offset)


def obstacle_policy(state: RobotState, snapshot, sphere: CollisionSphere, p: PolicyParams,
                    fixed_metric: bool = False) -> MotionPolicy:
    """Repulsion of one sphere along +grad f_sdf, scaled by 1 / clearance."""
    zero = MotionPolicy(np.zeros(2), np.zeros((2, 2)), sphere, "obstacle")
    if snapshot is None:
        return zero
    pos = sphere_world_position(state.pose, sphere)
    geo = snapshot.geometry
    try:
        d = sample_bilinear(geo, snapshot["f_sdf"], pos)
        g = np.array([sample_bilinear(geo, snapshot["grad_sdf_x"], pos),
                      sample_bilinear(geo, snapshot["grad_sdf_y"], pos)])
    except OutOfBounds:
        return zero
    if not (math.isfinite(d) and np.all(np.isfinite(g))) or not g.any():
        return zero
    clearance = d - sphere.radius
    g_body = se2.rotate_gradient(Pose2(0.0, 0.0, -state.pose.theta), g)
    f = p.k * g_body / max(clearance, CLEARANCE_EPS)
    w = 1.0 if fixed_metric else activation(max(clearance, 0.0), p.d_c, p.alpha, "closer")
    return MotionPolicy(f, w * np.eye(2), sphere, "obstacle")


def heading_policy(state: RobotState, goal: Pose2, p: PolicyParams,
                   fixed_metric: bool = False) -> MotionPolicy:
    v = state.velocity
    if math.hypot(v.vx, v.vy) < MIN_HEADING_SPEED:
        return _zero_body("heading")
    f = np.array([0.0, 0.0, p.k * math.atan2(v.vy, v.vx)])
    w = 1.0 if fixed_metric else activation(goal_distance(state, goal), p.d_c, p.alpha, "farther")
    return _body(f, w, "heading")


def damping_policy(state: RobotState, p: PolicyParams) -> MotionPolicy:
    return _body(-p.k * state.velocity.as_array(), 1.0, "damping")


def regularization_policy(state: RobotState, s: float) -> MotionPolicy:
    return _body(state.prev_accel.as_array(), s, "regularization")


def sphere_jacobian(sphere: CollisionSphere) -> np.ndarray:
    tx, ty = sphere.offset
    return np.array([[1.0, 0.0, -ty], [0.0, 1.0, tx]])


def solve(policies) -> Tangent2:
    """Body acceleration minimising the summed metric-weighted residuals."""
    A = np.zeros((3, 3))
    b = np.zeros(3)
    for pol in policies:
        if pol.is_body:
            A += pol.M
            b += pol.M @ pol.f
        else:
            J = sphere_jacobian(pol.sphere)
            JtM = J.T @ pol.M
            A += JtM @ J
            b += JtM @ pol.f
    eig = np.linalg.eigvalsh(A)
    if eig[0] <= 1e-12 * max(eig[-1], 1.0):
        raise SingularMetric("summed metric is singular; a positive regularization scale prevents this")
    return Tangent2.from_array(np.linalg.solve(A, b))


def integrate(a: Tangent2, velocity: Tangent2, dt: float, limits) -> Tangent2:
    if not dt > 0:
        raise ValueError("dt must be positive")
    v = velocity.as_array() + a.as_array() * dt
    lim = np.asarray(limits, dtype=float)
    return Tangent2.from_array(np.clip(v, -lim, lim))
