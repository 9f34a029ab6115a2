"""Filter chain and controller timing against the per-stage budgets."""

import argparse

from rmpnav.bench import bench, format_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grid", type=int, nargs="+", default=[50, 100, 200])
    ap.add_argument("--reps", type=int, default=100)
    args = ap.parse_args()
    for n in args.grid:
        print(format_report(bench(n, args.reps), n, args.reps))
        print()


if __name__ == "__main__":
    main()
