"""Run the wall scenario once per variant and print where each one ends."""

import argparse
import math
from pathlib import Path

from rmpnav import se2
from rmpnav.render import render_run
from rmpnav.sim import run_scenario, shipped_scenario, write_run_log

VARIANTS = ("PotentialField", "GdfOnly", "GdfAvoidance", "FullRMP")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("out/study1"))
    args = ap.parse_args()
    sc = shipped_scenario("study1_wall")
    goal = sc.path[-1]
    print("variant,outcome,x,y,theta_deg,goal_dist,heading_err_deg,collisions")
    for v in VARIANTS:
        run = sc.with_(variant=v)
        r = run_scenario(run)
        p = r.final_pose
        dist = math.hypot(p.x - goal.x, p.y - goal.y)
        err = math.degrees(se2.wrap_angle(p.theta - goal.theta))
        print(f"{v},{r.outcome},{p.x:.3f},{p.y:.3f},{math.degrees(p.theta):.1f},{dist:.3f},{err:.1f},{r.collisions}")
        d = args.out / v
        d.mkdir(parents=True, exist_ok=True)
        write_run_log(d / "run_log.csv", r)
        render_run(d, run, r.trajectory)


if __name__ == "__main__":
    main()
