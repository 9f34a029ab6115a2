"""SE(2) poses, tangent vectors and the frame changes used by the controller.

Tangent vectors are ordered (vx, vy, wtheta). Angles are kept in (-pi, pi].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_SMALL_ANGLE = 1e-8


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    t = math.remainder(float(theta), 2.0 * math.pi)
    if t <= -math.pi:
        t += 2.0 * math.pi
    return t


@dataclass(frozen=True)
class Tangent2:
    vx: float = 0.0
    vy: float = 0.0
    wtheta: float = 0.0

    @classmethod
    def from_array(cls, a) -> "Tangent2":
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.vx, self.vy, self.wtheta])

    def __add__(self, other: "Tangent2") -> "Tangent2":
        return Tangent2(self.vx + other.vx, self.vy + other.vy, self.wtheta + other.wtheta)

    def __sub__(self, other: "Tangent2") -> "Tangent2":
        return Tangent2(self.vx - other.vx, self.vy - other.vy, self.wtheta - other.wtheta)

    def __neg__(self) -> "Tangent2":
        return Tangent2(-self.vx, -self.vy, -self.wtheta)

    def __mul__(self, s: float) -> "Tangent2":
        return Tangent2(self.vx * s, self.vy * s, self.wtheta * s)

    __rmul__ = __mul__


@dataclass(frozen=True)
class Pose2:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @classmethod
    def identity(cls) -> "Pose2":
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Pose2":
        return cls(m[0, 2], m[1, 2], math.atan2(m[1, 0], m[0, 0]))

    @property
    def translation(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([[c, -s], [s, c]])

    def matrix(self) -> np.ndarray:
        m = np.eye(3)
        m[:2, :2] = self.rotation()
        m[0, 2], m[1, 2] = self.x, self.y
        return m

    def transform_point(self, p) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([self.x + c * p[0] - s * p[1], self.y + s * p[0] + c * p[1]])

    def __matmul__(self, other: "Pose2") -> "Pose2":
        return compose(self, other)


def compose(a: Pose2, b: Pose2) -> Pose2:
    c, s = math.cos(a.theta), math.sin(a.theta)
    return Pose2(a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y, a.theta + b.theta)


def inverse(t: Pose2) -> Pose2:
    c, s = math.cos(t.theta), math.sin(t.theta)
    return Pose2(-c * t.x - s * t.y, s * t.x - c * t.y, -t.theta)


def between(a: Pose2, b: Pose2) -> Pose2:
    """Relative pose a^-1 * b."""
    return compose(inverse(a), b)


def _v_coeffs(theta: float) -> tuple[float, float]:
    # V = [[a, -b], [b, a]] with a = sin(t)/t, b = (1 - cos(t))/t
    if abs(theta) < _SMALL_ANGLE:
        return 1.0 - theta * theta / 6.0, theta / 2.0
    return math.sin(theta) / theta, (1.0 - math.cos(theta)) / theta


def exp(v: Tangent2) -> Pose2:
    a, b = _v_coeffs(v.wtheta)
    return Pose2(a * v.vx - b * v.vy, b * v.vx + a * v.vy, v.wtheta)


def log(t: Pose2) -> Tangent2:
    """Logarithm map on the principal branch; defined at theta = pi as well."""
    theta = t.theta
    a, b = _v_coeffs(theta)
    det = a * a + b * b
    return Tangent2((a * t.x + b * t.y) / det, (-b * t.x + a * t.y) / det, theta)


def adjoint(t: Pose2) -> np.ndarray:
    """3x3 adjoint, so that log(T exp(xi) T^-1) = adjoint(T) @ xi."""
    m = np.eye(3)
    m[:2, :2] = t.rotation()
    m[0, 2] = t.y
    m[1, 2] = -t.x
    return m


def rotate_gradient(t: Pose2, g) -> np.ndarray:
    """Express a map-frame gradient in the frame rotated by ``t``.

    Equivalent to padding ``g`` with a zero angular part and applying
    ``adjoint(t)``; the translation column drops out.
    """
    c, s = math.cos(t.theta), math.sin(t.theta)
    return np.array([c * g[0] - s * g[1], s * g[0] + c * g[1]])
