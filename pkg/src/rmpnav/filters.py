"""Elevation map -> traversability, SDF and GDF layers with unit gradients."""

from __future__ import annotations

import csv
import math
import threading
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ._kernels import EDT_BIG, edt_sq, fast_march
from .gridmap import GridGeometry

_GRAD_EPS = 1e-9


@dataclass
class FilterParams:
    inpaint_radius: float = 0.10
    slope_critical: float = math.radians(30.0)
    roughness_window: int = 3
    roughness_critical: float = 0.05
    # height above the body's ground level that counts as a wall/step
    step_critical: float = 0.15
    traversability_threshold: float = 0.5
    gradient_sigma: float = 2.0
    # the geodesic field has ridges and walls a wide kernel would smear
    gdf_gradient_sigma: float = 0.5
    gdf_barrier_slope: float = 2.0
    # cells closer than this to an obstacle are impassable for the geodesic field only
    gdf_inflation: float = 0.0

    def __post_init__(self):
        for name in ("inpaint_radius", "slope_critical", "roughness_window",
                     "roughness_critical", "step_critical", "gradient_sigma",
                     "gdf_gradient_sigma", "gdf_barrier_slope"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.traversability_threshold < 1.0:
            raise ValueError("traversability_threshold must lie strictly inside (0, 1)")
        if not self.gdf_inflation >= 0:
            raise ValueError("gdf_inflation must be non-negative")


def inpaint(elevation: np.ndarray, radius: float, resolution: float) -> np.ndarray:
    """Fill NaN cells with the value of the nearest valid cell within ``radius``.

    Ties between equidistant valid cells go to the lowest row-major index.
    Cells with no valid cell in range stay NaN.
    """
    out = np.array(elevation, dtype=float)
    missing = np.isnan(out)
    if not missing.any() or missing.all():
        return out
    reach = int(math.floor(radius / resolution + 1e-9))
    offsets = [
        (dr * dr + dc * dc, dr, dc)
        for dr in range(-reach, reach + 1)
        for dc in range(-reach, reach + 1)
        if 0 < dr * dr + dc * dc and math.sqrt(dr * dr + dc * dc) * resolution <= radius + 1e-12
    ]
    # (distance, row offset, col offset) order == (distance, source index) order
    offsets.sort()
    n_rows, n_cols = out.shape
    padded = np.full((n_rows + 2 * reach, n_cols + 2 * reach), np.nan)
    padded[reach:reach + n_rows, reach:reach + n_cols] = elevation
    todo = missing.copy()
    for _, dr, dc in offsets:
        src = padded[reach + dr:reach + dr + n_rows, reach + dc:reach + dc + n_cols]
        take = todo & ~np.isnan(src)
        out[take] = src[take]
        todo &= ~take
        if not todo.any():
            break
    return out


def traversability(elevation: np.ndarray, p: FilterParams, resolution: float,
                   ground_height: float | None = None) -> np.ndarray:
    """Continuous traversability in [0, 1] from slope, roughness and step height.

    ``ground_height`` is the terrain level under the body; when given, cells
    rising ``step_critical`` above it score 0. Unknown cells score 0.
    """
    gy, gx = np.gradient(elevation, resolution)
    slope = np.arctan(np.hypot(gx, gy))
    size = int(p.roughness_window)
    # window statistics over known cells only; a running-sum filter would
    # otherwise smear one NaN along its whole row and column
    known = np.isfinite(elevation)
    z = np.where(known, elevation, 0.0)
    count = ndimage.uniform_filter(known.astype(float), size=size, mode="nearest")
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = ndimage.uniform_filter(z, size=size, mode="nearest") / count
        mean_sq = ndimage.uniform_filter(z * z, size=size, mode="nearest") / count
        rough = np.sqrt(np.clip(mean_sq - mean * mean, 0.0, None))
    cost = np.maximum(slope / p.slope_critical, rough / p.roughness_critical)
    if ground_height is not None:
        cost = np.maximum(cost, np.abs(elevation - ground_height) / p.step_critical)
    with np.errstate(invalid="ignore"):
        trav = np.clip(1.0 - cost, 0.0, 1.0)
    trav[~np.isfinite(trav) | ~known] = 0.0
    return trav


def binarize(trav: np.ndarray, threshold: float) -> np.ndarray:
    return (trav >= threshold).astype(np.uint8)


def unit_gradient(field_: np.ndarray, resolution: float, sigma: float,
                  barrier_slope: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian-smoothed Sobel gradient normalised to unit length.

    With ``barrier_slope`` set, non-finite cells and a band around the map
    border are first filled with the value of their nearest finite cell plus
    ``barrier_slope`` times the distance to it, so the smoothed field rises
    into walls instead of bleeding across them. Non-finite cells and flat
    spots get a zero gradient.
    """
    valid = np.isfinite(field_)
    if not valid.any():
        z = np.zeros(field_.shape)
        return z, z.copy()
    pad = 0
    smooth_in = field_
    if barrier_slope is not None:
        pad = int(math.ceil(4 * sigma)) + 2
        padded = np.pad(np.where(valid, field_, np.nan), pad, constant_values=np.nan)
        dist, (ri, ci) = ndimage.distance_transform_edt(np.isnan(padded), return_indices=True)
        smooth_in = padded[ri, ci] + barrier_slope * resolution * dist
    smooth = ndimage.gaussian_filter(smooth_in, sigma, mode="nearest")
    gx = ndimage.sobel(smooth, axis=1, mode="nearest") / (8.0 * resolution)
    gy = ndimage.sobel(smooth, axis=0, mode="nearest") / (8.0 * resolution)
    if pad:
        gx = gx[pad:-pad, pad:-pad]
        gy = gy[pad:-pad, pad:-pad]
    norm = np.hypot(gx, gy)
    ok = valid & (norm > _GRAD_EPS)
    with np.errstate(invalid="ignore", divide="ignore"):
        ux = np.where(ok, gx / norm, 0.0)
        uy = np.where(ok, gy / norm, 0.0)
    return ux, uy


def map_diagonal(shape: tuple[int, int], resolution: float) -> float:
    return math.hypot(shape[0], shape[1]) * resolution


def sdf(binary: np.ndarray, resolution: float, sigma: float = 2.0):
    """Signed distance (meters) to the free/obstacle boundary plus unit gradient.

    Free cells hold +distance to the nearest obstacle cell, obstacle cells
    -distance to the nearest free cell. A map with no obstacle (or no free
    cell) is capped at +/- the map diagonal with a zero gradient.
    """
    free = binary.astype(bool)
    cap = map_diagonal(binary.shape, resolution)
    if free.all() or not free.any():
        f = np.full(binary.shape, cap if free.all() else -cap)
        return f, np.zeros(binary.shape), np.zeros(binary.shape)
    d_out = np.sqrt(edt_sq(~free)) * resolution
    d_in = np.sqrt(edt_sq(free)) * resolution
    f = np.where(free, d_out, -d_in)
    gx, gy = unit_gradient(f, resolution, sigma)
    return f, gx, gy


def nearest_passable(binary: np.ndarray, cell: tuple[int, int]) -> tuple[int, int] | None:
    """Closest traversable cell to ``cell``; ties to the lowest row-major index."""
    if binary[cell]:
        return cell
    rows, cols = np.nonzero(binary)
    if rows.size == 0:
        return None
    d2 = (rows - cell[0]) ** 2 + (cols - cell[1]) ** 2
    k = int(np.argmin(d2))
    return (int(rows[k]), int(cols[k]))


def gdf(binary: np.ndarray, geometry: GridGeometry, goal_world, sigma: float = 0.5,
        barrier_slope: float = 2.0):
    """Geodesic distance (meters) to the goal seed by fast marching.

    Returns ``(f_gdf, grad_x, grad_y, seed)``. The goal is clamped into the
    map and moved to the nearest traversable cell; ``seed`` is None (and
    every cell +inf) when no traversable cell exists. The descent direction
    toward the goal is minus the returned gradient.
    """
    passable = binary.astype(bool)
    seed = nearest_passable(binary, geometry.clamp_to_index(goal_world))
    if seed is None:
        f = np.full(binary.shape, np.inf)
        return f, np.zeros(binary.shape), np.zeros(binary.shape), None
    f = fast_march(passable, seed[0], seed[1], geometry.resolution)
    gx, gy = unit_gradient(f, geometry.resolution, sigma, barrier_slope)
    return f, gx, gy, seed


LAYER_NAMES = (
    "elevation_filled", "traversability", "traversability_binary",
    "f_sdf", "grad_sdf_x", "grad_sdf_y", "f_gdf", "grad_gdf_x", "grad_gdf_y",
)


@dataclass(frozen=True)
class MapSnapshot:
    geometry: GridGeometry
    layers: dict
    goal_seed: tuple[int, int] | None
    timestamp: float = 0.0
    timings_ms: dict = field(default_factory=dict)

    @property
    def gdf_invalid(self) -> bool:
        return self.goal_seed is None

    def __getitem__(self, name: str) -> np.ndarray:
        return self.layers[name]


def run_filter_chain(elevation: np.ndarray, geometry: GridGeometry, goal_world,
                     p: FilterParams | None = None, ground_height: float | None = None,
                     timestamp: float = 0.0) -> MapSnapshot:
    p = p or FilterParams()
    res = geometry.resolution
    if ground_height is None:
        center = geometry.clamp_to_index(geometry.origin.translation)
        patch = elevation[max(center[0] - 2, 0):center[0] + 3, max(center[1] - 2, 0):center[1] + 3]
        ground_height = float(np.nanmedian(patch)) if np.isfinite(patch).any() else 0.0

    t0 = time.perf_counter()
    filled = inpaint(elevation, p.inpaint_radius, res)
    t1 = time.perf_counter()
    trav = traversability(filled, p, res, ground_height)
    binary = binarize(trav, p.traversability_threshold)
    t2 = time.perf_counter()
    f_sdf, sgx, sgy = sdf(binary, res, p.gradient_sigma)
    t3 = time.perf_counter()
    passable = binary if p.gdf_inflation == 0 else binary & (f_sdf > p.gdf_inflation)
    f_gdf, ggx, ggy, seed = gdf(passable, geometry, goal_world,
                                  p.gdf_gradient_sigma, p.gdf_barrier_slope)
    t4 = time.perf_counter()

    layers = {
        "elevation_filled": filled, "traversability": trav, "traversability_binary": binary,
        "f_sdf": f_sdf, "grad_sdf_x": sgx, "grad_sdf_y": sgy,
        "f_gdf": f_gdf, "grad_gdf_x": ggx, "grad_gdf_y": ggy,
    }
    for arr in layers.values():
        arr.flags.writeable = False
    timings = {
        "inpaint_ms": (t1 - t0) * 1e3,
        "traversability_ms": (t2 - t1) * 1e3,
        "sdf_ms": (t3 - t2) * 1e3,
        "gdf_ms": (t4 - t3) * 1e3,
        "total_ms": (t4 - t0) * 1e3,
    }
    return MapSnapshot(geometry, layers, seed, timestamp, timings)


class SnapshotSlot:
    """Latest-value slot between the filter chain and the controller.

    ``publish`` swaps a reference; readers get whatever was last published
    and never wait on the filter chain.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._snapshot: MapSnapshot | None = None
        self.version = 0

    def publish(self, snapshot: MapSnapshot) -> None:
        with self._lock:
            self._snapshot = snapshot
            self.version += 1

    def latest(self) -> MapSnapshot | None:
        with self._lock:
            return self._snapshot


TIMING_COLUMNS = ("timestamp", "inpaint_ms", "traversability_ms", "sdf_ms", "gdf_ms", "total_ms")


def write_timing_log(path, snapshots_or_rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TIMING_COLUMNS)
        for item in snapshots_or_rows:
            if isinstance(item, MapSnapshot):
                row = {"timestamp": item.timestamp, **item.timings_ms}
            else:
                row = item
            w.writerow([f"{row[c]:.6f}" for c in TIMING_COLUMNS])
