"""Command-line entry point: run, suite, bench, render, validate.

Exit codes: 0 success, 1 runtime failure or malformed scenario, 2 usage error
(bad flags, unknown tuning key, missing input file).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import jsonschema

from .bench import MIN_REPS, bench, format_report
from .controller import Variant
from .se2 import Pose2
from .sim import (SCENARIO_SCHEMA, SHIPPED, Scenario, run_scenario, run_suite, write_run_log,
                  write_suite_table, write_timing_log)
from .tuning import Tuning, UnknownTuningKey

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class MalformedScenario(Exception):
    pass


def _value_lines(text: str) -> dict[tuple, int]:
    """1-based line of every value in a JSON document, keyed by its path."""
    decoder = json.JSONDecoder()
    lines: dict[tuple, int] = {}

    def skip(i):
        while i < len(text) and text[i] in " \t\r\n":
            i += 1
        return i

    def walk(i, path):
        i = skip(i)
        lines[path] = text.count("\n", 0, i) + 1
        if text[i] == "{":
            i = skip(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                key, i = decoder.raw_decode(text, skip(i))
                i = skip(i) + 1  # colon
                i = skip(walk(i, path + (key,)))
                if text[i] == "}":
                    return i + 1
                i += 1  # comma
        if text[i] == "[":
            i = skip(i + 1)
            if text[i] == "]":
                return i + 1
            n = 0
            while True:
                i = skip(walk(i, path + (n,)))
                n += 1
                if text[i] == "]":
                    return i + 1
                i += 1
        return decoder.raw_decode(text, i)[1]

    walk(0, ())
    return lines


def validate_text(text: str) -> list[str]:
    """Human-readable problems with a scenario document, each with its line."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        return [f"line {e.lineno}: invalid JSON: {e.msg}"]
    lines = _value_lines(text)
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    out = []
    for err in sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path))):
        path = tuple(err.absolute_path)
        where = "/".join(map(str, path)) or "<root>"
        out.append(f"line {lines.get(path, 1)}: {where}: {err.message}")
    return out


def load_checked(path) -> Scenario:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(str(p))
    text = p.read_text()
    problems = validate_text(text)
    if problems:
        raise MalformedScenario(f"{p}:\n  " + "\n  ".join(problems))
    return Scenario.from_dict(json.loads(text))


def _overrides(pairs) -> dict:
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _tuning(args) -> Tuning:
    base = Tuning.load(args.tuning) if getattr(args, "tuning", None) else Tuning.default()
    try:
        return base.with_overrides(_overrides(args.set))
    except UnknownTuningKey as e:
        raise UsageError(f"unknown tuning key {e.args[0]!r}") from None
    except ValueError as e:
        raise UsageError(f"bad tuning value: {e}") from None


def _scenario(args) -> Scenario:
    sc = load_checked(args.scenario)
    if args.seed is not None:
        sc = sc.with_(seed=args.seed)
    if getattr(args, "variant", None):
        sc = sc.with_(variant=Variant(args.variant))
    if args.no_occlusion:
        sc = sc.with_(occlusion=False)
    return sc


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args) -> int:
    from .render import render_run

    tuning = _tuning(args)
    sc = _scenario(args)
    out = _out_dir(args)
    result = run_scenario(sc, tuning)
    write_run_log(out / "run_log.csv", result)
    if args.timing:
        write_timing_log(out / "timing.csv", result)
    summary = {
        "scenario": sc.name, "variant": sc.variant.value, "seed": sc.seed,
        "outcome": result.outcome, "collisions": result.collisions,
        "final_pose": [round(v, 6) for v in (result.final_pose.x, result.final_pose.y, result.final_pose.theta)],
        "mean_speed": round(result.mean_speed, 6),
        "mean_pte": round(float(result.pte.mean()), 6), "max_pte": round(float(result.pte.max()), 6),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    if not args.no_render:
        render_run(out, sc, result.trajectory, tuning.with_overrides(sc.tuning).filters)
    print(json.dumps(summary))
    return EXIT_OK


def cmd_suite(args) -> int:
    from .render import render_run

    tuning = _tuning(args)
    paths = args.scenario or sorted(str(p) for p in SHIPPED.glob("*.json"))
    scenarios = []
    for p in paths:
        args.scenario = p
        scenarios.append(_scenario(args))
    out = _out_dir(args)
    variants = [Variant(v) for v in args.variants.split(",")] if args.variants else None

    def progress(sc, variant, rep, r):
        print(f"{sc.name} {Variant(variant).value} rep {rep}: {r.outcome}, {r.collisions} collisions",
              file=sys.stderr, flush=True)

    table, results = run_suite(scenarios, args.reps, variants, tuning, progress)
    write_suite_table(out / "suite.csv", table)
    if not args.no_render:
        by_name = {sc.name: sc for sc in scenarios}
        for (name, variant), runs in results.items():
            sc = by_name[name]
            render_run(out / (name or "scenario") / variant, sc, runs[0].trajectory,
                       tuning.with_overrides(sc.tuning).filters)
    with open(out / "suite.csv") as fh:
        sys.stdout.write(fh.read())
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.reps < MIN_REPS:
        raise UsageError(f"--reps must be at least {MIN_REPS}")
    tuning = _tuning(args)
    stats = bench(args.grid, args.reps, args.seed or 0, tuning)
    report = format_report(stats, args.grid, args.reps)
    sys.stdout.write(report)
    if args.out:
        out = _out_dir(args)
        (out / "bench.txt").write_text(report)
        with open(out / "bench.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("stage", "mean_ms", "p95_ms", "budget_ms", "within_budget"))
            for k, s in stats.items():
                w.writerow((k, f"{s.mean:.4f}", f"{s.p95:.4f}", s.budget or "", s.within_budget))
    return EXIT_OK


def read_run_log(path) -> list[Pose2]:
    with open(path) as fh:
        return [Pose2(float(r["x"]), float(r["y"]), float(r["theta"])) for r in csv.DictReader(fh)]


def cmd_render(args) -> int:
    from .render import render_run

    tuning = _tuning(args)
    sc = _scenario(args)
    trajectory = ()
    if args.trajectory:
        if not Path(args.trajectory).is_file():
            raise FileNotFoundError(args.trajectory)
        trajectory = read_run_log(args.trajectory)
    for p in render_run(_out_dir(args), sc, trajectory, tuning.with_overrides(sc.tuning).filters):
        print(p)
    return EXIT_OK


def cmd_validate(args) -> int:
    paths = args.scenario or sorted(str(p) for p in SHIPPED.glob("*.json"))
    bad = 0
    for p in paths:
        if not Path(p).is_file():
            raise FileNotFoundError(p)
        problems = validate_text(Path(p).read_text())
        if problems:
            bad += 1
            print(f"{p}: invalid")
            for line in problems:
                print(f"  {line}")
        else:
            print(f"{p}: ok")
    return EXIT_FAILURE if bad else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rmpnav", description="Reactive RMP navigation simulator.")
    sub = parser.add_subparsers(dest="verb", required=True, metavar="{run,suite,bench,render,validate}")

    def common(p, scenario_many=False, out_required=True):
        if scenario_many:
            p.add_argument("--scenario", action="append", metavar="PATH",
                           help="scenario file; repeatable; defaults to the shipped set")
        else:
            p.add_argument("--scenario", required=True, metavar="PATH")
        p.add_argument("--out", required=out_required, metavar="DIR")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="tuning override; repeatable")
        p.add_argument("--tuning", metavar="PATH", help="tuning file replacing the shipped defaults")
        p.add_argument("--seed", type=int)
        p.add_argument("--no-occlusion", action="store_true")

    p = sub.add_parser("run", help="run one scenario")
    common(p)
    p.add_argument("--variant", choices=[v.value for v in Variant])
    p.add_argument("--timing", action="store_true", help="also write wall-clock timing.csv")
    p.add_argument("--no-render", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("suite", help="repeat scenarios across variants")
    common(p, scenario_many=True)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--variants", metavar="V1,V2", help="comma-separated variants; default the scenario's own")
    p.add_argument("--no-render", action="store_true")
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("bench", help="time the filter chain and controller")
    p.add_argument("--grid", type=int, default=200)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--tuning", metavar="PATH")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("render", help="field images of a scenario world")
    common(p)
    p.add_argument("--trajectory", metavar="RUN_LOG", help="overlay the poses of a run log")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("validate", help="check scenario files against the schema")
    p.add_argument("--scenario", action="append", metavar="PATH")
    p.add_argument("paths", nargs="*", metavar="PATH")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verb == "validate":
        args.scenario = (args.scenario or []) + args.paths
    if getattr(args, "reps", 1) is not None and getattr(args, "reps", 1) < 1:
        parser.error("--reps must be positive")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"rmpnav: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as e:
        print(f"rmpnav: error: no such file: {e.args[0] if e.args else e}", file=sys.stderr)
        return EXIT_USAGE
    except MalformedScenario as e:
        print(f"rmpnav: error: malformed scenario {e}", file=sys.stderr)
        return EXIT_FAILURE
    except Exception as e:  # noqa: BLE001 - the CLI contract maps every runtime failure to 1
        print(f"rmpnav: error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
