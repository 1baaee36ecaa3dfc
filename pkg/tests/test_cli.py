from pathlib import Path

import pytest

from mineps.cli import FAILED, OK, USAGE, load_config, main, parse_config_text
from mineps.engines import ConfigError
from mineps.scenarios import ladder_blocks_run
from mineps.records import read_trace, write_trace

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_config_parsing(tmp_path):
    d = parse_config_text("variant = grid  # comment\n\nhorizon = 1_000\nscripts = a.s, b.s\n", tmp_path)
    assert d == {"variant": "grid", "horizon": 1000,
                 "scripts": (str(tmp_path / "a.s"), str(tmp_path / "b.s"))}
    with pytest.raises(ConfigError, match="unknown config key"):
        parse_config_text("colour = red\n")
    with pytest.raises(ConfigError, match=":1: expected"):
        parse_config_text("variant grid\n")
    with pytest.raises(ConfigError, match="integer"):
        parse_config_text("horizon = lots\n")
    cfg = load_config(str(CONFIGS / "ladder.cfg"), ["horizon=10"])
    assert cfg.variant == "ladder" and cfg.horizon == 10


def test_run_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.trace", tmp_path / "b.trace"
    for out in (a, b):
        assert main(["run", str(CONFIGS / "grid-scripted.cfg"), "-o", str(out)]) == OK
    assert a.read_bytes() == b.read_bytes()
    assert "400 stages" in capsys.readouterr().err


def test_run_to_stdout(capsys):
    assert main(["run", "--set", "variant=ladder", "--set", "horizon=5"]) == OK
    out = capsys.readouterr().out
    assert out.startswith('{"config"') and len(out.splitlines()) == 6


def test_check_passes_and_fails(tmp_path, capsys):
    path = tmp_path / "g.trace"
    main(["run", str(CONFIGS / "grid-scripted.cfg"), "-o", str(path)])
    assert main(["check", str(path)]) == OK
    assert "claims: pass" in capsys.readouterr().out
    trace = read_trace(path)
    take = next(e for r in trace.records for e in r.effects if e["op"] == "dst_take")
    take["first"][0] = 0
    write_trace(trace, path)
    assert main(["check", str(path), "--suite", "dst-empty"]) == FAILED
    assert "failed: dst-empty" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["run", "--set", "variant=spiral"],
    ["run", "--set", "colour=3"],
    ["run", "--set", "horizon"],
    ["run", "/nonexistent.cfg"],
    ["run", "--set", "scripts=/nonexistent.script"],
    ["check", "/nonexistent.trace"],
    ["scenario"],
    ["scenario", "no-such-scenario"],
    ["tie-check", "--ceer", "x"],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == USAGE


def test_check_rejects_garbage_and_unknown_suite(tmp_path, capsys):
    bad = tmp_path / "bad.trace"
    bad.write_text("garbage\n")
    assert main(["check", str(bad)]) == USAGE
    assert "line 1" in capsys.readouterr().err
    good = tmp_path / "good.trace"
    main(["run", "--set", "horizon=10", "-o", str(good)])
    assert main(["check", str(good), "--suite", "bogus"]) == USAGE


def test_bad_script_is_usage_error(tmp_path):
    script = tmp_path / "bad.script"
    script.write_text("W one two\n")
    assert main(["run", "--set", "horizon=3", "--set", f"scripts={script}"]) == USAGE


def test_scenario_commands(tmp_path, capsys):
    assert main(["scenario", "--list"]) == OK
    assert "ladder-blocks" in capsys.readouterr().out.split()
    assert main(["scenario", "tie-weak", "--trace-dir", str(tmp_path)]) == OK
    assert main(["scenario", "ladder-blocks", "--show", "--trace-dir", str(tmp_path)]) == OK
    out = capsys.readouterr().out
    assert "PASS" in out and "aaaabbbbaaaabbbb" in out
    assert (tmp_path / "ladder-blocks.ladder.trace").exists()


def test_render(tmp_path, capsys):
    path = tmp_path / "l.trace"
    write_trace(ladder_blocks_run()[1], path)
    svg = tmp_path / "row.svg"
    assert main(["render", str(path), "--row", "3", "--svg", str(svg)]) == OK
    assert capsys.readouterr().out.startswith("row 3: 16 programs")
    assert svg.read_text().startswith("<svg")
    assert main(["render", str(path), "--row", "40"]) == USAGE


def test_friedberg(tmp_path, capsys):
    table = tmp_path / "t.txt"
    table.write_text("FC:1:1\nFC:1:1  # duplicate\nTC:2\nEMPTY\n")
    assert main(["friedberg", str(table)]) == OK
    out = capsys.readouterr().out
    assert "4 programs, 3 classes" in out and "one-to-one: True" in out
    table.write_text("FC:1\n")
    assert main(["friedberg", str(table)]) == USAGE


def test_refine(tmp_path, capsys):
    fam = tmp_path / "fam.txt"
    fam.write_text("mod 2 0 infinite\nfinite 4,6 finite:6\n")
    assert main(["refine", str(fam), "--count", "5"]) == OK
    out = capsys.readouterr().out
    assert "L = [0]" in out and "X starts [8, 12, 16, 20, 24]" in out and "max=4" in out
    fam.write_text("mod 2 0 sometimes\n")
    assert main(["refine", str(fam)]) == USAGE


def test_tie_check(tmp_path, capsys):
    ceer = tmp_path / "r.txt"
    ceer.write_text("P 0 1\nP 2 3\n")
    table = tmp_path / "psi.txt"
    table.write_text("FC:0:1\nFC:0:1\nFC:1:1\nFC:1:1\n")
    args = ["tie-check", "--ceer", str(ceer), "--table", str(table), "--horizon", "4"]
    assert main(args + ["--t", "affine:2,0"]) == OK
    assert "tie holds" in capsys.readouterr().out
    assert main(args + ["--t", "affine:0,1"]) == FAILED
    assert main(args + ["--t", "affine:0,1", "--mode", "weak"]) == OK
    assert main(args + ["--t", "cubic:1"]) == USAGE
