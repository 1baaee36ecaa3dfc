"""A toy universal machine standing in for the fixed programming system.

Index ``e`` decodes (totally) into a register-machine program; indices in a
reserved range are served instead by harness-supplied scripts, which is how
tests plant specific enumerations and translation candidates.

Instruction codes, decoded from ``c`` by ``c % 5``:

====  =================  ==================================================
op    instruction        effect
====  =================  ==================================================
0     ``INC r``          ``r = c // 5``; increment register r
1     ``DEC r, t``       ``(r, t) = unpair(c // 5)``; if r is zero jump to
                         t, else decrement r and fall through
2     ``JMP t``          ``t = c // 5``
3     ``HALT``
4     ``NOP``            padding
====  =================  ==================================================

A program index is ``0`` for the empty program, otherwise
``e - 1 = pair(code_0, rest)`` with ``rest`` the index of the remaining
instructions.  Input sits in register 0, output is read from register 0.
Each executed instruction is one step; running off the end (or jumping
outside the program) halts without costing a step.
"""
from __future__ import annotations

import bisect
import re
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, Optional

from .kernel import BudgetExhausted, Converges, EvalOutcome, pair, unpair

INC, DEC, JMP, HALT, NOP = range(5)

Instr = tuple  # (op,) or (op, a) or (op, a, b)


def decode_instr(c: int) -> Instr:
    op, arg = c % 5, c // 5
    if op == INC:
        return (INC, arg)
    if op == DEC:
        r, t = unpair(arg)
        return (DEC, r, t)
    if op == JMP:
        return (JMP, arg)
    if op == HALT:
        return (HALT,)
    return (NOP,)


def encode_instr(ins: Instr) -> int:
    op = ins[0]
    if op == INC or op == JMP:
        return 5 * ins[1] + op
    if op == DEC:
        return 5 * pair(ins[1], ins[2]) + op
    if op in (HALT, NOP):
        return op
    raise ValueError(f"bad instruction {ins!r}")


@lru_cache(maxsize=65536)
def decode(e: int) -> tuple[Instr, ...]:
    prog = []
    while e > 0:
        c, e = unpair(e - 1)
        prog.append(decode_instr(c))
    return tuple(prog)


def assemble(prog: Iterable[Instr]) -> int:
    e = 0
    for ins in reversed(list(prog)):
        e = pair(encode_instr(ins), e) + 1
    return e


IDENTITY = assemble([])
SUCCESSOR = assemble([(INC, 0)])
LOOP = assemble([(JMP, 0)])


# --------------------------------------------------------------------------
# Resumable runs

HALTED, LOOPING, RUNNING = "halted", "looping", "running"


@dataclass
class Run:
    """A computation of one program on one input, resumable to larger budgets.

    Divergence is detected (never reported as an outcome, only used to stop
    simulating) when the program returns to a checkpointed instruction with
    every register at least its checkpoint value and every register that was
    tested for zero in between unchanged: the segment then repeats forever.
    """

    prog: tuple[Instr, ...]
    pc: int = 0
    steps: int = 0
    regs: dict = field(default_factory=dict)
    status: str = RUNNING
    cp_pc: int = -1
    cp_regs: dict = field(default_factory=dict)
    cp_next: int = 1
    zero_tested: set = field(default_factory=set)

    def advance(self, limit: int) -> None:
        """Simulate until halted, proven looping, or ``steps == limit``."""
        prog, regs = self.prog, self.regs
        n = len(prog)
        pc, steps = self.pc, self.steps
        while self.status == RUNNING:
            if pc < 0 or pc >= n:
                self.status = HALTED
                break
            if pc == self.cp_pc and self._repeats(regs):
                self.status = LOOPING
                break
            if steps >= limit:
                break
            if steps == self.cp_next:
                self.cp_pc, self.cp_regs = pc, dict(regs)
                self.zero_tested = set()
                self.cp_next *= 2
            ins = prog[pc]
            op = ins[0]
            steps += 1
            if op == INC:
                regs[ins[1]] = regs.get(ins[1], 0) + 1
                pc += 1
            elif op == DEC:
                r = ins[1]
                v = regs.get(r, 0)
                if v == 0:
                    self.zero_tested.add(r)
                    pc = ins[2]
                else:
                    regs[r] = v - 1
                    pc += 1
            elif op == JMP:
                pc = ins[1]
            elif op == HALT:
                self.status = HALTED
                pc = n
                break
            else:
                pc += 1
        self.pc, self.steps = pc, steps

    def _repeats(self, regs: dict) -> bool:
        cp = self.cp_regs
        for r, v in cp.items():
            if regs.get(r, 0) < v:
                return False
        for r in self.zero_tested:
            if regs.get(r, 0) != cp.get(r, 0):
                return False
        return True

    @property
    def output(self) -> int:
        return self.regs.get(0, 0)


class RegisterMachine:
    """Step-bounded evaluation with per-(e, x) resumable caching."""

    def __init__(self) -> None:
        self._runs: dict[tuple[int, int], Run] = {}

    def run(self, e: int, x: int, limit: int) -> Run:
        key = (e, x)
        r = self._runs.get(key)
        if r is None:
            r = Run(decode(e), regs={0: x} if x else {})
            self._runs[key] = r
        if r.status == RUNNING and r.steps < limit:
            r.advance(limit)
        return r

    def forget(self, e: int, x: int) -> None:
        """Drop a cached run once its outcome has been recorded elsewhere."""
        self._runs.pop((e, x), None)

    def probe(self, e: int, x: int, limit: int):
        """``("halt", y, steps)``, ``("never",)`` or ``("unknown",)`` within ``limit`` steps."""
        r = self.run(e, x, limit)
        if r.status == HALTED and r.steps <= limit:
            return ("halt", r.output, r.steps)
        if r.status == LOOPING:
            return ("never",)
        return ("unknown",)


# --------------------------------------------------------------------------
# Scripts

class ScriptError(ValueError):
    pass


class Script:
    """Harness-supplied behaviour for one reserved index."""

    name = "script"

    def point(self, x: int) -> Optional[tuple[int, int]]:
        """``(value, step)`` if the script ever converges on ``x``."""
        raise NotImplementedError


class FiniteScript(Script):
    def __init__(self, points: dict[int, tuple[int, int]] | None = None, name: str = "finite"):
        self.points = dict(points or {})
        self.name = name

    def point(self, x: int):
        return self.points.get(x)

    def reveal(self, x: int, y: int, step: int) -> None:
        old = self.points.get(x)
        if old is not None and old != (y, step):
            raise ScriptError(f"input {x} revealed twice with different behaviour")
        self.points[x] = (y, step)


class FunctionScript(Script):
    """Behaviour given by a closed-form rule ``x -> (value, step) | None``."""

    def __init__(self, fn: Callable[[int], Optional[tuple[int, int]]], name: str = "function"):
        self.fn = fn
        self.name = name

    def point(self, x: int):
        return self.fn(x)


def enumeration_script(elements: Iterable[tuple[int, int]], name: str = "enum") -> FiniteScript:
    """A W-role script: each ``(element, step)`` enters the domain at ``step``."""
    s = FiniteScript(name=name)
    for x, step in elements:
        s.reveal(x, 0, step)
    return s


def graph_script(points: Iterable[tuple[int, int, int]], name: str = "graph") -> FiniteScript:
    s = FiniteScript(name=name)
    for x, y, step in points:
        s.reveal(x, y, step)
    return s


_LINE = re.compile(r"^\s*(W|G)((?:\s+\d+)+)\s*$")


def parse_script_text(text: str, source: str = "<script>") -> dict[int, FiniteScript]:
    """Parse ``W <index> <step> <element>`` / ``G <index> <step> <input> <output>`` lines.

    Blank lines and ``#`` comments are ignored.  Steps must be nondecreasing
    per index in file order.
    """
    scripts: dict[int, FiniteScript] = {}
    last_step: dict[int, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise ScriptError(f"{source}:{lineno}: malformed record {raw!r}")
        kind, nums = m.group(1), [int(t) for t in m.group(2).split()]
        if kind == "W" and len(nums) != 3 or kind == "G" and len(nums) != 4:
            raise ScriptError(f"{source}:{lineno}: wrong field count for {kind} record")
        e, step = nums[0], nums[1]
        if step < last_step.get(e, 0):
            raise ScriptError(f"{source}:{lineno}: step {step} decreases for index {e}")
        last_step[e] = step
        script = scripts.setdefault(e, FiniteScript(name=f"{source}#{e}"))
        x, y = (nums[2], 0) if kind == "W" else (nums[2], nums[3])
        try:
            script.reveal(x, y, step)
        except ScriptError as exc:
            raise ScriptError(f"{source}:{lineno}: {exc}") from None
    return scripts


def load_script_file(path: str | Path) -> dict[int, FiniteScript]:
    p = Path(path)
    return parse_script_text(p.read_text(), source=str(p))


def script_lines(scripts: dict[int, FiniteScript]) -> list[str]:
    """Serialize finite scripts back to records, ordered by index then step."""
    out = []
    for e in sorted(scripts):
        pts = sorted(scripts[e].points.items(), key=lambda kv: (kv[1][1], kv[0]))
        for x, (y, step) in pts:
            out.append(f"G {e} {step} {x} {y}")
    return out


class ScriptedBackend:
    """Registry of scripts over the reserved index range.

    Indices ``e >= floor`` with ``e % modulus == 0`` are reserved.  A
    reserved index with no registered script is nowhere convergent.
    """

    def __init__(self, modulus: int = 2 ** 20, floor: int = 2 ** 20,
                 scripts: dict[int, Script] | None = None):
        if modulus < 1 or floor < 0:
            raise ValueError("modulus must be positive and floor nonnegative")
        self.modulus = modulus
        self.floor = floor
        self._scripts: dict[int, Script] = {}
        for e, s in (scripts or {}).items():
            self.register(e, s)

    def reserved(self, e: int) -> bool:
        return e >= self.floor and e % self.modulus == 0

    def register(self, e: int, script: Script) -> None:
        if not self.reserved(e):
            raise ScriptError(f"index {e} is outside the reserved scripted range")
        if e in self._scripts:
            raise ScriptError(f"index {e} registered twice")
        self._scripts[e] = script

    def script(self, e: int) -> Optional[Script]:
        return self._scripts.get(e)

    def indices(self) -> list[int]:
        return sorted(self._scripts)

    def probe(self, e: int, x: int, limit: int):
        s = self._scripts.get(e)
        pt = s.point(x) if s is not None else None
        if pt is None:
            return ("never",)
        y, step = pt
        if step <= limit:
            return ("halt", y, step)
        return ("unknown",)


# --------------------------------------------------------------------------
# The combined programming system

class _Frontier:
    """Everything known about one index's graph, in order of visibility."""

    __slots__ = ("next_x", "pending", "vis", "items", "limit")

    def __init__(self) -> None:
        self.next_x = 0
        self.pending: list[int] = []
        self.vis: list[int] = []        # sorted visibility stages
        self.items: list[tuple[int, int]] = []  # (x, y) aligned with vis
        self.limit = 0                  # max stage s the frontier is complete for


class Phi:
    """Step-bounded semantics: ``phi_e^s(x)`` converges iff ``x < s`` and the
    computation halts in fewer than ``s`` steps.
    """

    def __init__(self, scripts: ScriptedBackend | None = None,
                 machine: RegisterMachine | None = None):
        self.scripts = scripts if scripts is not None else ScriptedBackend()
        self.machine = machine if machine is not None else RegisterMachine()
        self._frontiers: dict[int, _Frontier] = {}

    def is_scripted(self, e: int) -> bool:
        return self.scripts.reserved(e)

    def _probe(self, e: int, x: int, limit: int, settle: bool = False):
        if self.scripts.reserved(e):
            return self.scripts.probe(e, x, limit)
        res = self.machine.probe(e, x, limit)
        if settle and res[0] != "unknown":
            self.machine.forget(e, x)
        return res

    def step_eval(self, e: int, x: int, s: int) -> EvalOutcome:
        if x >= s:
            return BudgetExhausted(s)
        res = self._probe(e, x, s - 1)
        if res[0] == "halt":
            return Converges(res[1])
        return BudgetExhausted(s)

    def _extend(self, e: int, s: int) -> _Frontier:
        fr = self._frontiers.get(e)
        if fr is None:
            fr = self._frontiers[e] = _Frontier()
        if s <= fr.limit:
            return fr
        limit = s - 1
        found: list[tuple[int, int, int]] = []
        still: list[int] = []
        for x in fr.pending:
            res = self._probe(e, x, limit, settle=True)
            if res[0] == "halt":
                found.append((max(x, res[2]) + 1, x, res[1]))
            elif res[0] == "unknown":
                still.append(x)
        for x in range(fr.next_x, s):
            res = self._probe(e, x, limit, settle=True)
            if res[0] == "halt":
                found.append((max(x, res[2]) + 1, x, res[1]))
            elif res[0] == "unknown":
                still.append(x)
        fr.next_x = max(fr.next_x, s)
        fr.pending = still
        # new discoveries all become visible after the previous limit
        found.sort()
        for v, x, y in found:
            fr.vis.append(v)
            fr.items.append((x, y))
        fr.limit = s
        return fr

    def graph_enum(self, e: int, s: int) -> list[tuple[int, int]]:
        """The finite graph of ``phi_e^s`` as ``(x, y)`` pairs."""
        if s <= 0:
            return []
        fr = self._extend(e, s)
        cut = bisect.bisect_right(fr.vis, s)
        return fr.items[:cut]

    def w_enum(self, e: int, s: int) -> set[int]:
        return {x for x, _ in self.graph_enum(e, s)}

    def range_enum(self, e: int, s: int) -> set[int]:
        return {y for _, y in self.graph_enum(e, s)}
