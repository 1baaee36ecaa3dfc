"""Trace records and their line-oriented JSON serialization.

A trace file is one header line followed by one line per executed stage::

    {"format": "mineps-trace", "version": 1, "variant": "ladder", "config": {...}}
    {"stage": 0, "form": {...}, "fired": true, "deferral": null, "effects": [...]}

Keys are written sorted and without whitespace so that equal traces are
byte-identical.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

FORMAT = "mineps-trace"
VERSION = 1


class TraceFormatError(ValueError):
    pass


@dataclass
class TraceRecord:
    stage: int
    form: dict
    fired: bool
    deferral: Optional[str] = None
    effects: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"stage": self.stage, "form": self.form, "fired": self.fired,
                "deferral": self.deferral, "effects": self.effects}


@dataclass
class Trace:
    variant: str
    config: dict
    records: list = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return len(self.records)

    def fired(self) -> list[TraceRecord]:
        return [r for r in self.records if r.fired]


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def serialize(trace: Trace) -> str:
    lines = [_dump({"format": FORMAT, "version": VERSION, "variant": trace.variant,
                    "config": trace.config})]
    lines += [_dump(r.to_dict()) for r in trace.records]
    return "\n".join(lines) + "\n"


def deserialize(text: str) -> Trace:
    lines = text.splitlines()
    if not lines:
        raise TraceFormatError("line 1: empty trace file")
    try:
        head = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise TraceFormatError(f"line 1: not a trace header ({exc.msg})") from None
    if not isinstance(head, dict) or head.get("format") != FORMAT:
        raise TraceFormatError("line 1: not a trace header")
    if head.get("version") != VERSION:
        raise TraceFormatError(f"line 1: unsupported version {head.get('version')!r}")
    trace = Trace(head["variant"], head.get("config", {}))
    expected = 0
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            rec = TraceRecord(d["stage"], d["form"], d["fired"], d["deferral"], d["effects"])
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise TraceFormatError(f"line {lineno}: malformed record ({exc})") from None
        if rec.stage != expected:
            raise TraceFormatError(f"line {lineno}: expected stage {expected}, got {rec.stage}")
        if bool(rec.effects) != rec.fired:
            raise TraceFormatError(f"line {lineno}: effects present iff fired")
        expected += 1
        trace.records.append(rec)
    return trace


def write_trace(trace: Trace, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(trace))


def read_trace(path) -> Trace:
    with open(path, encoding="utf-8") as fh:
        return deserialize(fh.read())


def records_of(trace: Trace, op: str) -> Iterable[tuple[TraceRecord, dict]]:
    for rec in trace.records:
        for eff in rec.effects:
            if eff["op"] == op:
                yield rec, eff
