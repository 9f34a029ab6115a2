"""Field images: 16-bit grayscale PGM for scalar layers, RGB PPM for overlays.

Scalar mapping is linear from [lo, hi] onto [1, 65535]; non-finite cells
(unknown or unreachable) are written as 0. The sidecar JSON next to each PGM
records lo, hi, resolution and the map corner so values can be recovered.
Row 0 of the image is the top (largest y) of the map.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .filters import FilterParams, MapSnapshot, run_filter_chain
from .gridmap import GridGeometry
from .se2 import Pose2

PGM_MAX = 65535
# overlay colours
FREE_RGB = (235, 235, 235)
BLOCKED_RGB = (40, 40, 40)
PATH_RGB = (30, 110, 230)
TRAJ_RGB = (220, 40, 40)
START_RGB = (20, 160, 60)
GOAL_RGB = (240, 170, 0)


def to_gray16(values: np.ndarray, lo: float | None = None, hi: float | None = None):
    """Quantise a field to uint16; returns (image, lo, hi)."""
    v = np.asarray(values, dtype=float)
    finite = np.isfinite(v)
    if lo is None:
        lo = float(v[finite].min()) if finite.any() else 0.0
    if hi is None:
        hi = float(v[finite].max()) if finite.any() else 1.0
    span = hi - lo if hi > lo else 1.0
    out = np.zeros(v.shape, dtype=np.uint16)
    scaled = np.clip((v[finite] - lo) / span, 0.0, 1.0)
    out[finite] = np.rint(1 + scaled * (PGM_MAX - 1)).astype(np.uint16)
    return out, lo, hi


def write_pgm(path, values: np.ndarray, geometry: GridGeometry | None = None,
              lo: float | None = None, hi: float | None = None, name: str = "") -> dict:
    """Write a 16-bit binary PGM plus ``<path>.json``; returns the sidecar dict."""
    img, lo, hi = to_gray16(values, lo, hi)
    img = img[::-1]
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n{PGM_MAX}\n".encode())
        fh.write(img.astype(">u2").tobytes())
    meta = {"layer": name, "lo": lo, "hi": hi, "nonfinite": 0, "min_code": 1, "max_code": PGM_MAX}
    if geometry is not None:
        meta.update(resolution=geometry.resolution, corner=list(geometry.corner))
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return meta


def read_pgm(path) -> np.ndarray:
    """Inverse of ``write_pgm`` for the raw codes, in map row order."""
    data = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        tokens.append(data[pos:end])
        pos = end
    if tokens[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h, maxval = (int(t) for t in tokens[1:])
    dtype = ">u2" if maxval > 255 else "u1"
    # exactly one whitespace byte separates the header from the raster
    img = np.frombuffer(data, dtype=dtype, count=w * h, offset=pos + 1).reshape(h, w)
    return img[::-1].astype(np.uint16)


def write_ppm(path, rgb: np.ndarray) -> None:
    """Write an 8-bit RGB PPM; ``rgb`` is in map row order (row 0 = lowest y)."""
    img = np.ascontiguousarray(np.asarray(rgb, dtype=np.uint8)[::-1])
    with open(path, "wb") as fh:
        fh.write(f"P6\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        fh.write(img.tobytes())


def world_geometry(bounds, resolution: float = 0.04) -> GridGeometry:
    xmin, ymin, xmax, ymax = bounds
    center = Pose2(0.5 * (xmin + xmax), 0.5 * (ymin + ymax), 0.0)
    return GridGeometry(xmax - xmin, ymax - ymin, resolution, center)


def world_fields(world, goal, params: FilterParams | None = None,
                 resolution: float = 0.04) -> MapSnapshot:
    """Filter chain over the whole world, without occlusion, for figures."""
    from .sim import sense

    geo = world_geometry(world.bounds, resolution)
    elevation = sense(world, geo.origin, geo, occlusion=False)
    return run_filter_chain(elevation, geo, (goal.x, goal.y), params, ground_height=world.ground)


def _draw_polyline(rgb, geometry: GridGeometry, points, colour) -> None:
    pts = [np.asarray(p, dtype=float) for p in points]
    step = 0.5 * geometry.resolution
    for a, b in zip(pts, pts[1:] if len(pts) > 1 else pts):
        n = max(int(math.ceil(np.hypot(*(b - a)) / step)), 1)
        for t in np.linspace(0.0, 1.0, n + 1):
            idx = geometry.world_to_index(a + t * (b - a))
            if idx is not None:
                rgb[idx] = colour


def _draw_dot(rgb, geometry: GridGeometry, p, colour, radius_cells: int = 2) -> None:
    idx = geometry.world_to_index(p)
    if idx is None:
        return
    r, c = idx
    rows, cols = rgb.shape[:2]
    for dr in range(-radius_cells, radius_cells + 1):
        for dc in range(-radius_cells, radius_cells + 1):
            if dr * dr + dc * dc <= radius_cells * radius_cells and 0 <= r + dr < rows and 0 <= c + dc < cols:
                rgb[r + dr, c + dc] = colour


def overlay(snapshot: MapSnapshot, trajectory=(), reference=()) -> np.ndarray:
    """Traversability background with the reference path and executed trajectory."""
    geo = snapshot.geometry
    binary = np.asarray(snapshot["traversability_binary"], dtype=bool)
    rgb = np.empty(binary.shape + (3,), dtype=np.uint8)
    rgb[binary] = FREE_RGB
    rgb[~binary] = BLOCKED_RGB
    ref = [(p.x, p.y) for p in reference]
    traj = [(p.x, p.y) for p in trajectory]
    if ref:
        _draw_polyline(rgb, geo, ref, PATH_RGB)
        _draw_dot(rgb, geo, ref[-1], GOAL_RGB)
    if traj:
        _draw_polyline(rgb, geo, traj, TRAJ_RGB)
        _draw_dot(rgb, geo, traj[0], START_RGB)
    return rgb


def render_run(out_dir, scenario, trajectory, params: FilterParams | None = None,
               resolution: float = 0.04) -> list[Path]:
    """Traversability, SDF and GDF images of the scenario world plus the trajectory overlay."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    snap = world_fields(scenario.world, scenario.path[-1], params, resolution)
    geo = snap.geometry
    written = []
    for layer, lo, hi in (("traversability", 0.0, 1.0), ("f_sdf", None, None), ("f_gdf", None, None)):
        p = out / f"{layer}.pgm"
        write_pgm(p, snap[layer], geo, lo, hi, layer)
        written.append(p)
    p = out / "trajectory.ppm"
    write_ppm(p, overlay(snap, trajectory, scenario.path))
    written.append(p)
    return written
