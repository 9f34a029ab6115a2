"""Synthetic snapshots with analytic fields for policy and controller tests."""

import numpy as np

from rmpnav.filters import MapSnapshot
from rmpnav.gridmap import GridGeometry

GEO = GridGeometry(8.0, 8.0, 0.04)


def wall_snapshot(normal, offset, geometry=GEO, gdf_dir=(1.0, 0.0)):
    """Straight wall: free where n.p < offset, f_sdf = offset - n.p.

    ``normal`` points from free space into the wall. The GDF is a plane
    descending along ``gdf_dir``.
    """
    n = np.asarray(normal, float) / np.linalg.norm(normal)
    g = np.asarray(gdf_dir, float) / np.linalg.norm(gdf_dir)
    x, y = geometry.cell_centers()
    f_sdf = offset - (n[0] * x + n[1] * y)
    f_gdf = 100.0 - (g[0] * x + g[1] * y)
    layers = {
        "f_sdf": f_sdf,
        "grad_sdf_x": np.full(x.shape, -n[0]), "grad_sdf_y": np.full(x.shape, -n[1]),
        "f_gdf": f_gdf,
        "grad_gdf_x": np.full(x.shape, -g[0]), "grad_gdf_y": np.full(x.shape, -g[1]),
        "traversability_binary": (f_sdf > 0).astype(np.uint8),
    }
    return MapSnapshot(geometry, layers, (0, 0))


def free_snapshot(geometry=GEO, gdf_dir=(1.0, 0.0)):
    """No obstacles within reach: SDF large with zero gradient."""
    snap = wall_snapshot((1.0, 0.0), 1e3, geometry, gdf_dir)
    layers = dict(snap.layers)
    layers["grad_sdf_x"] = np.zeros(geometry.shape)
    layers["grad_sdf_y"] = np.zeros(geometry.shape)
    return MapSnapshot(geometry, layers, (0, 0))
