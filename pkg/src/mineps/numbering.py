"""Numberings as stage-indexed tables of assignment rules.

A rule assigns descriptors to a decidable set of programs from some stage
on.  Looking up program ``p`` at stage ``t`` returns the descriptor of the
latest rule (greatest stage ``<= t``, later appends breaking ties) that
covers ``p``.  Stage 0 is the initialization pseudo-stage; a rule appended
while running stage ``s`` carries stage ``s + 1``.

Parametric rules are unavoidable: a single construction step can reassign
``2**(i+1)`` programs with ``i`` in the hundreds.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Protocol

from . import geometry as geo
from .kernel import (EMPTY, AuxIndex, Descriptor, Distinct, Equal, EqVerdict,
                     EvalEnvironment, Unknown, Converges, const_prefix, ext_equal, extends,
                     pair, parse_descriptor, unpair)
from .lazyset import Progression


class BrokenEngine(RuntimeError):
    """A lookup found no covering rule."""


# --------------------------------------------------------------------------
# Rules

class Rule:
    stage: int
    kind: str = ""

    def key(self) -> tuple:
        raise NotImplementedError

    def matches(self, p: int) -> bool:
        raise NotImplementedError

    def descriptor(self, p: int) -> Descriptor:
        raise NotImplementedError

    def sample(self, limit: int) -> list[int]:
        """Some covered programs, least first (at most ``limit``)."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Explicit(Rule):
    stage: int
    p: int
    d: Descriptor
    kind = "explicit"

    def key(self):
        return ("p", self.p)

    def matches(self, p):
        return p == self.p

    def descriptor(self, p):
        return self.d

    def sample(self, limit):
        return [self.p][:limit]

    def to_dict(self):
        return {"kind": self.kind, "stage": self.stage, "p": self.p, "d": str(self.d)}


@dataclass(frozen=True)
class BaseLayout(Rule):
    """Initialization of a whole construction, stage 0."""

    layout: str   # grid | ladder | grown
    stage: int = 0
    kind = "base"

    def key(self):
        return ("base",)

    def matches(self, p):
        return p >= 0

    def descriptor(self, p):
        if self.layout == "grid":
            loc = geo.locate_grid(p)
            if loc is None:
                return EMPTY
            i, j, pos = loc
            return const_prefix(pair(i, j), pos // 2 + 1)
        if self.layout == "ladder":
            loc = geo.locate_ladder(p)
            if loc is None:
                return EMPTY
            i, pos = loc
            return const_prefix(i, pos // 2 + 1)
        if self.layout == "grown":
            r = p % 3
            if r == 2:
                return EMPTY
            i, j = unpair(p // 3)
            return const_prefix(i, 2 * j + 1 + r)
        raise ValueError(self.layout)

    def sample(self, limit):
        return list(range(limit))

    def to_dict(self):
        return {"kind": self.kind, "stage": self.stage, "layout": self.layout}


@dataclass(frozen=True)
class Table(Rule):
    """A finite table; programs past its end are nowhere defined."""

    entries: tuple
    stage: int = 0
    kind = "table"

    def key(self):
        return ("base",)

    def matches(self, p):
        return p >= 0

    def descriptor(self, p):
        return self.entries[p] if p < len(self.entries) else EMPTY

    def sample(self, limit):
        return list(range(min(limit, len(self.entries))))

    def to_dict(self):
        return {"kind": self.kind, "stage": self.stage, "entries": [str(d) for d in self.entries]}


def _row_locate(layout: str, p: int):
    """``(i, j, pos)``; ``j`` is ``None`` for the two-index layout."""
    if layout == "grid":
        return geo.locate_grid(p)
    loc = geo.locate_ladder(p)
    return None if loc is None else (loc[0], None, loc[1])


def _row_program(layout: str, i: int, j: Optional[int], pos: int) -> int:
    return geo.grid_program(i, j, pos) if layout == "grid" else geo.ladder_program(i, pos)


def _row_value(layout: str, i: int, j: Optional[int]) -> int:
    return pair(i, j) if layout == "grid" else i


@dataclass(frozen=True)
class RowBlocks(Rule):
    """Every program of a row holds the finite constant of its block at height ``h``."""

    stage: int
    layout: str
    i: int
    j: Optional[int]
    h: int
    kind = "row_blocks"

    def key(self):
        return ("row", self.i, self.j)

    def matches(self, p):
        loc = _row_locate(self.layout, p)
        return loc is not None and loc[0] == self.i and loc[1] == self.j

    def descriptor(self, p):
        pos = _row_locate(self.layout, p)[2]
        return const_prefix(_row_value(self.layout, self.i, self.j), geo.block_length(pos, self.h))

    def sample(self, limit):
        n = min(limit, geo.row_size(self.i))
        return [_row_program(self.layout, self.i, self.j, pos) for pos in range(n)]

    def to_dict(self):
        return {"kind": self.kind, "stage": self.stage, "layout": self.layout,
                "i": self.i, "j": self.j, "h": self.h}


@dataclass(frozen=True)
class RowAlpha(Rule):
    """E-side programs get ``alpha_l``, E-bar-side programs get ``alpha_m``.

    With ``j`` set this covers one row at height ``h``.  With ``j is None``
    under the three-index layout it covers every row ``(i, *)``, each at the
    height recorded in ``heights`` (default 0).
    """

    stage: int
    layout: str
    i: int
    j: Optional[int]
    h: int
    family: str
    l: int
    m: int
    all_rows: bool = False
    heights: tuple = ()     # ((j, h), ...) for all_rows
    kind = "row_alpha"

    def key(self):
        return ("rowall", self.i) if self.all_rows else ("row", self.i, self.j)

    def _height(self, j):
        if not self.all_rows:
            return self.h
        return dict(self.heights).get(j, 0)

    def matches(self, p):
        loc = _row_locate(self.layout, p)
        if loc is None or loc[0] != self.i:
            return False
        return self.all_rows or loc[1] == self.j

    def descriptor(self, p):
        _, j, pos = _row_locate(self.layout, p)
        _, bar = geo.block_of(pos, self._height(j))
        return AuxIndex(self.family, self.m if bar else self.l)

    def sample(self, limit):
        j = 0 if self.all_rows else self.j
        n = min(limit, geo.row_size(self.i))
        return [_row_program(self.layout, self.i, j, pos) for pos in range(n)]

    def to_dict(self):
        return {"kind": self.kind, "stage": self.stage, "layout": self.layout, "i": self.i,
                "j": self.j, "h": self.h, "family": self.family, "l": self.l, "m": self.m,
                "all_rows": self.all_rows, "heights": [list(x) for x in self.heights]}


@dataclass(frozen=True)
class DstPrefix(Rule):
    """The ``n`` least members ``q_0 < ... < q_{n-1}`` of a snapshot of the
    unused-program pool get ``value`` below ``(mult * r + offset) * 2**h``.
    """

    stage: int
    pool: Progression
    n: int
    value: int
    mult: int
    offset: int
    h: int
    kind = "dst_prefix"

    def key(self):
        return ("dst",)

    def matches(self, p):
        r = self.pool.rank(p)
        return r is not None and r < self.n

    def descriptor(self, p):
        r = self.pool.rank(p)
        return const_prefix(self.value, (self.mult * r + self.offset) << self.h)

    def sample(self, limit):
        return self.pool.first(min(limit, self.n))

    def to_dict(self):
        return {"kind": self.kind, "stage": self.stage, "pool": self.pool.to_text(), "n": self.n,
                "value": self.value, "mult": self.mult, "offset": self.offset, "h": self.h}


@dataclass(frozen=True)
class DstThin(Rule):
    """Programs ``d(r)`` (the ``2r``-th member of a pool snapshot) get the
    abandoned finite constants of row-family ``i``.

    ``segments`` lists ``(j, start, count, h)``: ``d(start + k)`` for
    ``k < count`` gets ``pair(i, j)`` below ``(k + 1) * 2**h``.  When
    ``open_rows`` is set, rows past the last listed segment continue with
    height 0 and ``2**i`` programs each.
    """

    stage: int
    pool: Progression
    i: int
    segments: tuple
    open_rows: bool = False
    kind = "dst_thin"

    def key(self):
        return ("dst",)

    def _segment(self, n: int):
        for j, start, count, h in self.segments:
            if start <= n < start + count:
                return j, n - start, h
        if self.open_rows and self.segments:
            j, start, count, h = self.segments[-1]
            rest = n - (start + count)
            if rest >= 0:
                size = 1 << self.i
                return j + 1 + rest // size, rest % size, 0
        return None

    def matches(self, p):
        r = self.pool.rank(p)
        if r is None or r % 2:
            return False
        return self._segment(r // 2) is not None

    def descriptor(self, p):
        j, k, h = self._segment(self.pool.rank(p) // 2)
        return const_prefix(pair(self.i, j), (k + 1) << h)

    def sample(self, limit):
        out = []
        for j, start, count, h in self.segments:
            for k in range(min(count, limit - len(out))):
                out.append(self.pool.select(2 * (start + k)))
            if len(out) >= limit:
                break
        return sorted(out)

    def to_dict(self):
        return {"kind": self.kind, "stage": self.stage, "pool": self.pool.to_text(), "i": self.i,
                "segments": [list(s) for s in self.segments], "open_rows": self.open_rows}


def rule_from_dict(d: dict) -> Rule:
    kind = d["kind"]
    if kind == "explicit":
        return Explicit(d["stage"], d["p"], parse_descriptor(d["d"]))
    if kind == "base":
        return BaseLayout(d["layout"], d["stage"])
    if kind == "table":
        return Table(tuple(parse_descriptor(t) for t in d["entries"]), d["stage"])
    if kind == "row_blocks":
        return RowBlocks(d["stage"], d["layout"], d["i"], d["j"], d["h"])
    if kind == "row_alpha":
        return RowAlpha(d["stage"], d["layout"], d["i"], d["j"], d["h"], d["family"], d["l"],
                        d["m"], d["all_rows"], tuple(tuple(x) for x in d["heights"]))
    if kind == "dst_prefix":
        return DstPrefix(d["stage"], Progression.from_text(d["pool"]), d["n"], d["value"],
                         d["mult"], d["offset"], d["h"])
    if kind == "dst_thin":
        return DstThin(d["stage"], Progression.from_text(d["pool"]), d["i"],
                       tuple(tuple(s) for s in d["segments"]), d["open_rows"])
    raise ValueError(f"unknown rule kind {kind!r}")


# --------------------------------------------------------------------------
# Numberings

class Eps:
    """A numbering given by its rule table."""

    def __init__(self, layout: str = "table", env: EvalEnvironment | None = None):
        self.layout = layout
        self.env = env
        self.rules: list[Rule] = []
        self._by_key: dict[tuple, list[tuple[int, Rule]]] = {}

    @classmethod
    def from_table(cls, descriptors: Iterable[Descriptor], env: EvalEnvironment | None = None) -> "Eps":
        e = cls("table", env)
        e.append(Table(tuple(descriptors)))
        return e

    def __len__(self) -> int:
        return len(self.rules)

    def append(self, rule: Rule) -> None:
        # lookup stops at the first match per key, so stages must not go back
        if self.rules and rule.stage < self.rules[-1].stage:
            raise BrokenEngine(f"rule at stage {rule.stage} logged after stage {self.rules[-1].stage}")
        seq = len(self.rules)
        self.rules.append(rule)
        self._by_key.setdefault(rule.key(), []).append((seq, rule))

    def keys_for(self, p: int) -> list[tuple]:
        keys: list[tuple] = [("p", p), ("base",)]
        if self.layout == "grid":
            loc = geo.locate_grid(p)
            if loc is None:
                keys.append(("dst",))
            else:
                keys += [("row", loc[0], loc[1]), ("rowall", loc[0])]
        elif self.layout == "ladder":
            loc = geo.locate_ladder(p)
            if loc is None:
                keys.append(("dst",))
            else:
                keys.append(("row", loc[0], None))
        elif self.layout == "grown":
            if p % 3 == 2:
                keys.append(("dst",))
        return keys

    def covering(self, p: int) -> list[tuple[int, Rule]]:
        """All ``(seq, rule)`` covering ``p``, ordered by (stage, seq)."""
        out = []
        for key in self.keys_for(p):
            for seq, rule in self._by_key.get(key, ()):
                if rule.matches(p):
                    out.append((seq, rule))
        out.sort(key=lambda sr: (sr[1].stage, sr[0]))
        return out

    def lookup(self, p: int, stage: int) -> Descriptor:
        best = None
        for key in self.keys_for(p):
            for seq, rule in reversed(self._by_key.get(key, ())):
                if rule.stage > stage:
                    continue
                if best is not None and (rule.stage, seq) < best[0]:
                    break
                if rule.matches(p):
                    best = ((rule.stage, seq), rule)
                    break
        if best is None:
            raise BrokenEngine(f"no rule covers program {p} at stage {stage}")
        return best[1].descriptor(p)

    def history(self, p: int) -> list[tuple[int, Descriptor]]:
        """The descriptor chain of ``p`` in rule order."""
        return [(rule.stage, rule.descriptor(p)) for _, rule in self.covering(p)]

    def equiv(self, p: int, q: int, stage: int, budget: int,
              env: EvalEnvironment | None = None) -> EqVerdict:
        return ext_equal(self.lookup(p, stage), self.lookup(q, stage), budget, env or self.env)

    def to_dicts(self) -> list[dict]:
        return [r.to_dict() for r in self.rules]

    @classmethod
    def from_dicts(cls, layout: str, dicts: Iterable[dict], env=None) -> "Eps":
        e = cls(layout, env)
        for d in dicts:
            e.append(rule_from_dict(d))
        return e


def lookup(psi: Eps, p: int, stage: int) -> Descriptor:
    return psi.lookup(p, stage)


def equiv(psi: Eps, p: int, q: int, stage: int, budget: int, env=None) -> EqVerdict:
    return psi.equiv(p, q, stage, budget, env)


def monotonicity_violations(psi: Eps, programs: Iterable[int], budget: int,
                            env: EvalEnvironment | None = None,
                            allow: Callable[[int, int], bool] | None = None) -> list[tuple[int, int, Descriptor, Descriptor]]:
    """Programs whose descriptor chain is not increasing.

    Each successor must extend its predecessor; ``Unknown`` is tolerated
    only when the successor is machine- or aux-backed.  ``allow(p, stage)``
    can excuse documented overwrites.
    """
    env = env or psi.env
    bad = []
    for p in programs:
        chain = psi.history(p)
        for (s0, d0), (s1, d1) in zip(chain, chain[1:]):
            if allow is not None and allow(p, s1):
                continue
            verdict = extends(d1, d0, budget, env) if _prefix_kind(d0) else ext_equal(d0, d1, budget, env)
            if isinstance(verdict, Distinct):
                bad.append((p, s1, d0, d1))
    return bad


def _prefix_kind(d: Descriptor) -> bool:
    from .kernel import prefix_shape
    return prefix_shape(d) is not None


# --------------------------------------------------------------------------
# Translations

class TranslationUndefined(LookupError):
    pass


class TranslationSource(Protocol):
    def __call__(self, p: int, budget: int) -> Optional[int]: ...


@dataclass
class TableTranslation:
    table: dict

    def __call__(self, p, budget):
        return self.table.get(p)


@dataclass
class FunctionTranslation:
    fn: Callable[[int], Optional[int]]
    name: str = "fn"

    def __call__(self, p, budget):
        return self.fn(p)


@dataclass
class MachineTranslation:
    phi: object
    e: int

    def __call__(self, p, budget):
        out = self.phi.step_eval(self.e, p, max(budget, p + 1))
        return out.value if isinstance(out, Converges) else None


def apply_translation(t, p: int, budget: int) -> int:
    y = t(p, budget)
    if y is None:
        raise TranslationUndefined(f"translation undefined on {p} within budget {budget}")
    return y


@dataclass
class TranslationReport:
    verdicts: dict = field(default_factory=dict)   # p -> EqVerdict
    notes: dict = field(default_factory=dict)      # p -> str

    @property
    def counts(self) -> Counter:
        return Counter(type(v).__name__ for v in self.verdicts.values())

    @property
    def certified(self) -> bool:
        return all(isinstance(v, Equal) for v in self.verdicts.values())

    def distinct(self) -> dict:
        return {p: v for p, v in self.verdicts.items() if isinstance(v, Distinct)}


def check_translation(t, theta: Eps, psi: Eps, programs: Iterable[int], stage: int, budget: int,
                      env: EvalEnvironment | None = None) -> TranslationReport:
    """Per-program verdict on ``theta_p = psi_{t(p)}``."""
    report = TranslationReport()
    for p in programs:
        y = t(p, budget)
        if y is None:
            report.verdicts[p] = Unknown(budget)
            report.notes[p] = "t-undefined"
            continue
        report.verdicts[p] = ext_equal(theta.lookup(p, stage), psi.lookup(y, stage), budget,
                                       env or psi.env or theta.env)
    return report
