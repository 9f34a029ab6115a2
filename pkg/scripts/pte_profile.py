"""Path tracking error along the straight paths, with and without the pillar."""

import numpy as np
from scipy.signal import find_peaks

from rmpnav.controller import ReferencePath
from rmpnav.sim import run_scenario, shipped_scenario


def main():
    for name in ("straight_free", "straight_obstacle"):
        sc = shipped_scenario(name)
        r = run_scenario(sc)
        path = ReferencePath(sc.path)
        s = np.array([path.project(p.translation) for p in r.trajectory])
        peaks, props = find_peaks(r.pte, prominence=0.1)
        print(f"{name}: {r.outcome}, mean PTE {np.mean(r.pte):.4f} m, max {r.pte.max():.3f} m")
        for i in peaks[np.argsort(-props["prominences"])]:
            print(f"  peak {r.pte[i]:.3f} m at s = {s[i]:.2f} m")


if __name__ == "__main__":
    main()
