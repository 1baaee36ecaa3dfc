"""Command-line entry point.

Exit codes: 0 success, 1 a checked property failed, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import fields
from pathlib import Path
from typing import Optional, Sequence

from .ceer import CeerBuilder
from .engines import ConfigError, Engine, RunConfig, build_phi
from .kernel import parse_descriptor
from .machine import ScriptError
from .numbering import Eps, FunctionTranslation, TableTranslation
from .records import TraceFormatError, read_trace, serialize
from .reductions import (Budgeted, Finite, FiniteSet, Inconclusive, Infinite, PredicateSet,
                         friedberg_from_decider, refine_family, table_oracle, ties_check,
                         backward_translation, Undecided)
from .numbering import check_translation
from .scenarios import SCENARIOS, run_scenario
from .trace import SUITES, check, render_blocks, render_svg

OK, FAILED, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# Config files

_INT_KEYS = {f.name for f in fields(RunConfig)} - {"variant", "rflag_scope", "scripts"}


def parse_config_text(text: str, base: Optional[Path] = None, source: str = "<config>") -> dict:
    """``key = value`` lines; ``scripts`` is a comma-separated path list
    resolved against ``base``."""
    known = {f.name for f in fields(RunConfig)}
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        out[key] = _convert(key, value, base, f"{source}:{lineno}")
    return out


def _convert(key: str, value: str, base: Optional[Path], where: str):
    if key in _INT_KEYS:
        try:
            return int(value.replace("_", ""))
        except ValueError:
            raise ConfigError(f"{where}: {key} must be an integer, got {value!r}") from None
    if key == "scripts":
        paths = [v.strip() for v in value.split(",") if v.strip()]
        return tuple(str((base / p) if base is not None and not Path(p).is_absolute() else p)
                     for p in paths)
    return value


def load_config(path: Optional[str], overrides: Sequence[str] = ()) -> RunConfig:
    d: dict = {}
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        d = parse_config_text(text, p.parent, str(p))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = (part.strip() for part in item.split("=", 1))
        if key not in {f.name for f in fields(RunConfig)}:
            raise ConfigError(f"unknown config key {key!r}")
        d[key] = _convert(key, value, Path.cwd(), "--set")
    return RunConfig.from_dict(d)


# --------------------------------------------------------------------------
# Subcommands

def _write(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _load_trace(path: str):
    try:
        return read_trace(path)
    except OSError as exc:
        raise UsageError(f"cannot read trace {path}: {exc.strerror}") from None
    except TraceFormatError as exc:
        raise UsageError(f"{path}: {exc}") from None


def cmd_run(args) -> int:
    config = load_config(args.config, args.set)
    phi = build_phi(config)
    trace = Engine(config, phi).run()
    _write(serialize(trace), args.output)
    if args.output not in (None, "-"):
        fired = sum(r.fired for r in trace.records)
        deferred = sum(r.deferral is not None for r in trace.records)
        print(f"{config.variant}: {trace.horizon} stages, {fired} fired, {deferred} deferred -> {args.output}",
              file=sys.stderr)
    return OK


def cmd_check(args) -> int:
    trace = _load_trace(args.trace)
    suites = args.suite
    if suites != "all":
        names = [s.strip() for s in suites.split(",") if s.strip()]
        unknown = [s for s in names if s not in SUITES]
        if unknown:
            raise UsageError(f"unknown suite(s): {', '.join(unknown)} (choose from {', '.join(SUITES)})")
    phi = None
    if not args.no_machine:
        try:
            phi = build_phi(RunConfig.from_dict(trace.config))
        except (ConfigError, ScriptError, TypeError):
            phi = None
    report = check(trace, suites, phi=phi)
    sys.stdout.write(report.text())
    if not report.ok:
        print(f"failed: {', '.join(report.failed())}", file=sys.stderr)
    return OK if report.ok else FAILED


def cmd_scenario(args) -> int:
    if args.list:
        for name in SCENARIOS:
            print(name)
        return OK
    names = list(SCENARIOS) if args.all else args.names
    if not names:
        raise UsageError("name a scenario, or pass --all or --list")
    for name in names:
        if name not in SCENARIOS:
            raise UsageError(f"unknown scenario {name!r} (see --list)")
    status = OK
    for name in names:
        res = run_scenario(name)
        sys.stdout.write(res.report())
        for label, text in res.rendered.items():
            if args.show:
                sys.stdout.write(f"-- {label}\n{text}")
        if args.trace_dir:
            d = Path(args.trace_dir)
            d.mkdir(parents=True, exist_ok=True)
            for label, trace in res.traces.items():
                (d / f"{name}.{label}.trace").write_text(serialize(trace))
        if not res.ok:
            status = FAILED
    return status


def cmd_render(args) -> int:
    trace = _load_trace(args.trace)
    try:
        text = render_blocks(trace, args.row, args.col)
        svg = render_svg(trace, args.row, args.col) if args.svg else None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _write(text, args.output)
    if svg is not None:
        Path(args.svg).write_text(svg)
    return OK


def _read_table(path: str) -> list:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    out = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            out.append(parse_descriptor(line))
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: {exc}") from None
    return out


def cmd_friedberg(args) -> int:
    table = _read_table(args.table)
    psi = Eps.from_table(table)
    try:
        oracle = table_oracle(psi, args.budget)
        fr = friedberg_from_decider(psi, oracle, len(table), args.budget, probe_limit=len(table))
        back = backward_translation(oracle, fr.forward)
    except Undecided as exc:
        raise UsageError(f"table is not decidable structurally: {exc}") from None
    print(f"{len(table)} programs, {len(fr.forward)} classes")
    for i, m in enumerate(fr.forward):
        print(f"eta_{i} = psi_{m} = {table[m]}")
    fw = check_translation(fr.forward_translation(), fr.eta, psi, range(len(fr.forward)), 0, args.budget)
    bw = check_translation(back, psi, fr.eta, range(len(table)), 0, args.budget)
    ok = fr.one_to_one() and fw.certified and bw.certified
    print(f"one-to-one: {fr.one_to_one()}  eta->psi certified: {fw.certified}  psi->eta certified: {bw.certified}")
    return OK if ok else FAILED


def _parse_family_line(line: str, where: str):
    """``<set> <hint>``: sets ``mod K R``, ``finite a,b,...``, ``above B``;
    hints ``infinite``, ``finite:BOUND``, ``budget:STAGES``."""
    parts = line.split()
    try:
        kind = parts[0]
        if kind == "mod":
            k, r = int(parts[1]), int(parts[2])
            src, rest = PredicateSet(lambda x, k=k, r=r: x % k == r, f"{r} mod {k}"), parts[3:]
        elif kind == "finite":
            vals = {int(v) for v in parts[1].split(",") if v} if parts[1] != "-" else set()
            src, rest = FiniteSet(vals), parts[2:]
        elif kind == "above":
            b = int(parts[1])
            src, rest = PredicateSet(lambda x, b=b: x > b, f"> {b}"), parts[2:]
        else:
            raise ValueError(f"unknown set kind {kind!r}")
        if len(rest) != 1:
            raise ValueError("expected exactly one hint")
        hint = rest[0]
        if hint == "infinite":
            h = Infinite()
        elif hint.startswith("finite:"):
            h = Finite(int(hint[7:]))
        elif hint.startswith("budget:"):
            h = Budgeted(int(hint[7:]))
        else:
            raise ValueError(f"unknown hint {hint!r}")
    except (IndexError, ValueError) as exc:
        raise UsageError(f"{where}: {exc}") from None
    return src, h


def cmd_refine(args) -> int:
    try:
        text = Path(args.family).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {args.family}: {exc.strerror}") from None
    J, hints = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            src, h = _parse_family_line(line, f"{args.family}:{lineno}")
            J.append(src)
            hints.append(h)
    try:
        ref = refine_family(J, hints)
        first = ref.X.take(args.count)
    except Inconclusive as exc:
        print(f"inconclusive: {exc}")
        return FAILED
    for d in ref.log:
        extra = f" max={d.maximum}" if d.cond == "b" else ""
        print(f"level {d.level}: cond {d.cond} ({d.hint}){extra}")
    print(f"L = {sorted(ref.L)}")
    print(f"X starts {first}")
    bad = ref.verify(J, args.count)
    print("postcondition: " + ("holds" if not bad else f"fails at {bad[:5]}"))
    return OK if not bad else FAILED


def _parse_translation(spec: str):
    """``affine:A,B`` for ``q -> A*q + B`` or ``table:PATH`` of ``q y`` lines."""
    if spec.startswith("affine:"):
        try:
            a, b = (int(v) for v in spec[7:].split(","))
        except ValueError:
            raise UsageError(f"bad affine translation {spec!r}") from None
        return FunctionTranslation(lambda q: a * q + b, spec)
    if spec.startswith("table:"):
        path = spec[6:]
        try:
            rows = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
            return TableTranslation({int(q): int(y) for q, y in rows})
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read translation table {path}: {exc}") from None
    raise UsageError(f"unknown translation spec {spec!r}")


def cmd_tie_check(args) -> int:
    table = _read_table(args.table)
    try:
        R = CeerBuilder.from_lines(Path(args.ceer).read_text().splitlines())
    except OSError as exc:
        raise UsageError(f"cannot read {args.ceer}: {exc.strerror}") from None
    except ValueError as exc:
        raise UsageError(f"{args.ceer}: {exc}") from None
    t = _parse_translation(args.t)
    rep = ties_check(R, t, Eps.from_table(table), args.mode, args.horizon, args.budget)
    print(f"mode: {rep.mode}")
    print(f"subrelation: {rep.subrelation}" + (f" {rep.violated[:2]}" if rep.violated else ""))
    print(f"classes checked: {rep.classes_checked}, missed: {rep.classes_missed}")
    print("tie holds" if rep.holds else "tie fails")
    return OK if rep.holds else FAILED


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mineps", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a construction and write its trace")
    p.add_argument("config", nargs="?", help="key = value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    p.add_argument("-o", "--output", help="trace file (default: stdout)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check", help="replay a trace and run invariant suites")
    p.add_argument("trace")
    p.add_argument("--suite", default="all", help=f"comma-separated subset of: {', '.join(SUITES)}")
    p.add_argument("--no-machine", action="store_true", help="skip checks that need the programming system")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("scenario", help="run built-in scripted scenarios")
    p.add_argument("names", nargs="*")
    p.add_argument("--list", action="store_true")
    p.add_argument("--all", action="store_true")
    p.add_argument("--show", action="store_true", help="print rendered diagrams")
    p.add_argument("--trace-dir", help="write the scenario traces here")
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("render", help="draw the block evolution of one row")
    p.add_argument("trace")
    p.add_argument("--row", type=int, required=True, help="i")
    p.add_argument("--col", type=int, help="j (grid variant)")
    p.add_argument("-o", "--output")
    p.add_argument("--svg", help="also write an SVG drawing here")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("friedberg", help="extract a one-to-one numbering from a descriptor table")
    p.add_argument("table", help="one descriptor per line (EMPTY, FC:v:n, TC:v)")
    p.add_argument("--budget", type=int, default=64)
    p.set_defaults(func=cmd_friedberg)

    p = sub.add_parser("refine", help="refine a hinted family of sets")
    p.add_argument("family", help="lines '<set> <hint>', e.g. 'mod 2 0 infinite'")
    p.add_argument("--count", type=int, default=50)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("tie-check", help="check that a ceer ties a translation into a table")
    p.add_argument("--ceer", required=True, help="'P p q' lines")
    p.add_argument("--table", required=True, help="descriptor table for psi")
    p.add_argument("--t", required=True, help="affine:A,B or table:PATH")
    p.add_argument("--mode", choices=("strong", "weak"), default="strong")
    p.add_argument("--horizon", type=int, default=64)
    p.add_argument("--budget", type=int, default=64)
    p.set_defaults(func=cmd_tie_check)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    try:
        return args.func(args)
    except (UsageError, ConfigError, ScriptError) as exc:
        print(f"mineps: error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
