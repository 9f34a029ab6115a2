"""Fixed-size multi-layer 2.5D grid with world <-> cell geometry.

Cells are stored row-major with index (0, 0) at the most negative (x, y)
corner; rows follow y and columns follow x. The map frame is axis-aligned
with the inertial frame, so the geometry origin is a pure translation that
marks the map centre.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .se2 import Pose2


class OutOfBounds(ValueError):
    pass


class UnknownLayer(KeyError):
    pass


@dataclass(frozen=True)
class GridGeometry:
    length_x: float = 8.0
    length_y: float = 8.0
    resolution: float = 0.04
    origin: Pose2 = field(default_factory=Pose2.identity)

    def __post_init__(self):
        if self.resolution <= 0 or self.length_x <= 0 or self.length_y <= 0:
            raise ValueError("grid lengths and resolution must be positive")
        if self.origin.theta != 0.0:
            raise ValueError("map frame must be axis-aligned with the inertial frame")

    @property
    def n_cols(self) -> int:
        return int(round(self.length_x / self.resolution))

    @property
    def n_rows(self) -> int:
        return int(round(self.length_y / self.resolution))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    @property
    def corner(self) -> tuple[float, float]:
        """World coordinates of the outer corner of cell (0, 0)."""
        return (
            self.origin.x - 0.5 * self.n_cols * self.resolution,
            self.origin.y - 0.5 * self.n_rows * self.resolution,
        )

    def world_to_index(self, p) -> tuple[int, int] | None:
        """(row, col) of the containing cell, or None when outside the map."""
        x0, y0 = self.corner
        col = math.floor((p[0] - x0) / self.resolution)
        row = math.floor((p[1] - y0) / self.resolution)
        if 0 <= row < self.n_rows and 0 <= col < self.n_cols:
            return (row, col)
        return None

    def clamp_to_index(self, p) -> tuple[int, int]:
        """Containing cell of the closest in-map point to ``p``."""
        x0, y0 = self.corner
        col = math.floor((p[0] - x0) / self.resolution)
        row = math.floor((p[1] - y0) / self.resolution)
        return (min(max(row, 0), self.n_rows - 1), min(max(col, 0), self.n_cols - 1))

    def index_to_world(self, row: int, col: int) -> np.ndarray:
        x0, y0 = self.corner
        return np.array([x0 + (col + 0.5) * self.resolution, y0 + (row + 0.5) * self.resolution])

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid (X, Y) of cell centres, each of shape ``self.shape``."""
        x0, y0 = self.corner
        xs = x0 + (np.arange(self.n_cols) + 0.5) * self.resolution
        ys = y0 + (np.arange(self.n_rows) + 0.5) * self.resolution
        return np.meshgrid(xs, ys)

    def contains(self, p) -> bool:
        return self.world_to_index(p) is not None

    def with_origin(self, origin: Pose2) -> "GridGeometry":
        return replace(self, origin=origin)


def sample_bilinear(geometry: GridGeometry, values: np.ndarray, p) -> float:
    """Bilinear interpolation of a layer at world point ``p``.

    Non-finite corners are skipped: if any of the four surrounding cells is
    unknown the value of the nearest finite one is returned instead, and NaN
    when none is finite.
    """
    if geometry.world_to_index(p) is None:
        raise OutOfBounds(f"point {tuple(p)} outside map")
    x0, y0 = geometry.corner
    u = (p[0] - x0) / geometry.resolution - 0.5
    v = (p[1] - y0) / geometry.resolution - 0.5
    n_rows, n_cols = values.shape
    # points within half a cell of the border clamp onto the outermost centres
    u = min(max(u, 0.0), n_cols - 1.0)
    v = min(max(v, 0.0), n_rows - 1.0)
    c0 = min(int(math.floor(u)), n_cols - 2) if n_cols > 1 else 0
    r0 = min(int(math.floor(v)), n_rows - 2) if n_rows > 1 else 0
    fu, fv = u - c0, v - r0
    c1, r1 = min(c0 + 1, n_cols - 1), min(r0 + 1, n_rows - 1)
    q00, q01 = values[r0, c0], values[r0, c1]
    q10, q11 = values[r1, c0], values[r1, c1]
    if math.isfinite(q00) and math.isfinite(q01) and math.isfinite(q10) and math.isfinite(q11):
        return float(
            (1 - fv) * ((1 - fu) * q00 + fu * q01) + fv * ((1 - fu) * q10 + fu * q11)
        )
    best, best_d = math.nan, math.inf
    # row-major order so ties go to the lowest index
    for r, c, dv, du in ((r0, c0, fv, fu), (r0, c1, fv, 1 - fu), (r1, c0, 1 - fv, fu), (r1, c1, 1 - fv, 1 - fu)):
        q = values[r, c]
        d = du * du + dv * dv
        if math.isfinite(q) and d < best_d:
            best, best_d = float(q), d
    return best


class GridMap:
    """Named layers over one geometry. Unknown cells hold NaN."""

    def __init__(self, geometry: GridGeometry, layers: dict[str, np.ndarray] | None = None):
        self.geometry = geometry
        self._layers: dict[str, np.ndarray] = {}
        for name, values in (layers or {}).items():
            self.add_layer(name, values)

    def add_layer(self, name: str, values=None) -> np.ndarray:
        if values is None:
            values = np.full(self.geometry.shape, np.nan)
        values = np.asarray(values, dtype=float)
        if values.shape != self.geometry.shape:
            raise ValueError(f"layer {name!r} has shape {values.shape}, expected {self.geometry.shape}")
        self._layers[name] = values
        return values

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self._layers[name]
        except KeyError:
            raise UnknownLayer(name) from None

    def __contains__(self, name: str) -> bool:
        return name in self._layers

    @property
    def layer_names(self) -> list[str]:
        return list(self._layers)

    def sample(self, name: str, p) -> float:
        return sample_bilinear(self.geometry, self[name], p)


def recenter(grid: GridMap, new_origin: Pose2) -> GridMap:
    """Move the map to ``new_origin``, shifting data by whole cells.

    World points keep their values wherever both old and new maps cover them;
    newly exposed cells are NaN.
    """
    geo = grid.geometry
    res = geo.resolution
    dc = int(round((new_origin.x - geo.origin.x) / res))
    dr = int(round((new_origin.y - geo.origin.y) / res))
    out = GridMap(geo.with_origin(new_origin))
    n_rows, n_cols = geo.shape
    for name in grid.layer_names:
        src = grid[name]
        dst = np.full(geo.shape, np.nan)
        if abs(dr) < n_rows and abs(dc) < n_cols:
            dst[max(0, -dr):n_rows - max(0, dr), max(0, -dc):n_cols - max(0, dc)] = src[
                max(0, dr):n_rows - max(0, -dr), max(0, dc):n_cols - max(0, -dc)
            ]
        out.add_layer(name, dst)
    return out
