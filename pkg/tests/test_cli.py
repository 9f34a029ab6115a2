import json
import subprocess
import sys

import pytest

from rmpnav import cli
from rmpnav.bench import bench
from rmpnav.sim import SHIPPED, run_scenario, shipped_scenario, write_run_log

STUDY1 = str(SHIPPED / "study1_wall.json")


def run_cli(*argv):
    try:
        return cli.main(list(argv))
    except SystemExit as e:
        return e.code


def test_validate_shipped_ok(capsys):
    assert run_cli("validate") == 0
    out = capsys.readouterr().out
    assert out.count(": ok") == len(list(SHIPPED.glob("*.json")))


def test_validate_reports_line_context(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "world": {"bounds": [0, 0, 1, 1], "obstacles": [\n'
                 '    {"type": "box", "min": [0, 0], "max": [1], "height": 1}]},\n'
                 '  "start": [0, 0, 0],\n  "variant": "Nope",\n'
                 '  "seed": 0, "duration_s": 5, "goal": [1, 1, 0]\n}\n')
    assert run_cli("validate", str(p)) == 1
    out = capsys.readouterr().out
    assert "line 5: variant" in out
    assert "line 3: world/obstacles/0" in out


def test_validate_invalid_json_line(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "world": {},\n  oops\n}\n')
    assert run_cli("validate", str(p)) == 1
    assert "line 3: invalid JSON" in capsys.readouterr().out


def test_value_lines_locates_nested_values():
    text = '{\n "a": [\n  1,\n  {"b": "x"}\n ],\n "c": {}\n}'
    lines = cli._value_lines(text)
    assert lines[("a",)] == 2 and lines[("a", 0)] == 3 and lines[("a", 1, "b")] == 4
    assert lines[("c",)] == 6


def test_missing_file_has_its_own_exit_code(tmp_path, capsys):
    assert run_cli("validate", str(tmp_path / "none.json")) == 2
    assert run_cli("run", "--scenario", str(tmp_path / "none.json"), "--out", str(tmp_path / "o")) == 2
    assert "no such file" in capsys.readouterr().err


def test_malformed_scenario_run_exits_1(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"world": {"bounds": [0, 0, 1, 1], "obstacles": []}}')
    assert run_cli("run", "--scenario", str(p), "--out", str(tmp_path / "o")) == 1


def test_unknown_verb_and_bad_flags_exit_2(capsys):
    assert run_cli("frobnicate") == 2
    assert "usage" in capsys.readouterr().err
    assert run_cli("run") == 2
    assert run_cli("bench", "--reps", "5") == 2
    assert run_cli("bench", "--reps", "0") == 2


def test_unknown_tuning_key_exit_2(tmp_path, capsys):
    assert run_cli("run", "--scenario", STUDY1, "--out", str(tmp_path), "--set", "obstacle.gain=1") == 2
    assert "unknown tuning key" in capsys.readouterr().err
    assert run_cli("run", "--scenario", STUDY1, "--out", str(tmp_path), "--set", "noequals") == 2


def test_run_writes_log_matching_library_and_renders(tmp_path, capsys):
    out = tmp_path / "nested" / "out"
    assert run_cli("run", "--scenario", STUDY1, "--out", str(out)) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["outcome"] == "GoalReached" and summary["collisions"] == 0
    direct = run_scenario(shipped_scenario("study1_wall"))
    write_run_log(tmp_path / "direct.csv", direct)
    assert (out / "run_log.csv").read_bytes() == (tmp_path / "direct.csv").read_bytes()
    for name in ("traversability.pgm", "f_sdf.pgm", "f_gdf.pgm", "trajectory.ppm", "summary.json"):
        assert (out / name).is_file()
    assert not (out / "timing.csv").exists()


def test_run_flags_reach_the_simulation(tmp_path, capsys):
    out = tmp_path / "o"
    assert run_cli("run", "--scenario", STUDY1, "--out", str(out), "--variant", "PotentialField",
                   "--seed", "5", "--no-occlusion", "--no-render", "--timing") == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["variant"] == "PotentialField" and summary["seed"] == 5
    assert summary["outcome"] == "Stuck"
    assert (out / "timing.csv").is_file() and not (out / "trajectory.ppm").exists()


def test_render_with_trajectory(tmp_path, capsys):
    out = tmp_path / "o"
    assert run_cli("run", "--scenario", STUDY1, "--out", str(out), "--no-render") == 0
    assert run_cli("render", "--scenario", STUDY1, "--out", str(tmp_path / "r"),
                   "--trajectory", str(out / "run_log.csv")) == 0
    assert (tmp_path / "r" / "trajectory.ppm").is_file()
    assert run_cli("render", "--scenario", STUDY1, "--out", str(tmp_path / "r"),
                   "--trajectory", str(tmp_path / "none.csv")) == 2


def test_suite_writes_table(tmp_path, capsys):
    sc = json.loads((SHIPPED / "study1_wall.json").read_text())
    sc.update(name="quick", duration_s=3)
    p = tmp_path / "quick.json"
    p.write_text(json.dumps(sc))
    assert run_cli("suite", "--scenario", str(p), "--reps", "2", "--variants", "FullRMP,GdfOnly",
                   "--out", str(tmp_path / "s")) == 0
    table = (tmp_path / "s" / "suite.csv").read_text().splitlines()
    assert table[0].startswith("scenario,variant,reps")
    assert len(table) == 3
    assert (tmp_path / "s" / "quick" / "GdfOnly" / "trajectory.ppm").is_file()


def test_bench_verb(tmp_path, capsys):
    assert run_cli("bench", "--grid", "40", "--reps", "10", "--out", str(tmp_path)) == 0
    out = capsys.readouterr().out
    for stage in ("inpaint_ms", "traversability_ms", "sdf_ms", "gdf_ms", "total_ms", "controller_ms"):
        assert stage in out
    assert (tmp_path / "bench.csv").read_text().startswith("stage,mean_ms,p95_ms")


def test_bench_small_grid_is_cheaper():
    small = bench(50, 10)
    large = bench(200, 10)
    assert small["total_ms"].mean < large["total_ms"].mean


def test_bench_repetitions_self_consistent():
    few = bench(100, 10, seed=1)
    many = bench(100, 100, seed=1)
    # the band comes from the 100-sample run; a 10-sample p95 is close to the maximum
    for k in ("inpaint_ms", "traversability_ms", "sdf_ms", "gdf_ms", "total_ms", "controller_ms"):
        assert few[k].mean <= many[k].p95


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "rmpnav", "validate"], capture_output=True, text=True)
    assert r.returncode == 0 and "ok" in r.stdout
