"""Seeded repetitions of every variant on the corridor course."""

import argparse
from pathlib import Path

from rmpnav.sim import run_suite, shipped_scenario, write_suite_table

VARIANTS = ("FullRMP", "GdfOnly", "PotentialField")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=10)
    ap.add_argument("--out", type=Path, default=Path("out/corridor"))
    args = ap.parse_args()

    def progress(sc, variant, rep, r):
        p = r.final_pose
        print(f"{variant} rep {rep}: {r.outcome} at ({p.x:.2f}, {p.y:.2f}), {r.collisions} collisions", flush=True)

    table, _ = run_suite([shipped_scenario("corridor_course")], args.reps, VARIANTS, progress=progress)
    args.out.mkdir(parents=True, exist_ok=True)
    write_suite_table(args.out / "suite.csv", table)
    for row in table:
        print(f"{row['variant']}: success {row['success_rate']:.0%}, "
              f"total collisions {row['total_collisions']}, mean speed {row['mean_speed']:.3f} m/s")


if __name__ == "__main__":
    main()
