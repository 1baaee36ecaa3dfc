"""Constructions relating numberings, translations and ceers, run on concrete instances.

* Extracting a one-to-one numbering from a decision procedure for program
  equivalence, and deciding equivalence through a translation into a
  one-to-one numbering.
* Building a tying ceer from a pair of translations, and a translation
  back from a tying ceer.
* Bounded checkers for strong and weak ties.
* The refinement of finitely many c.e. sets to an infinite computable set
  on which each of them is either everything or nothing.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Protocol, Sequence, Union

from .ceer import CeerBuilder, rst_closure
from .kernel import Descriptor, Distinct, Equal, EvalEnvironment, Unknown, ext_equal
from .numbering import Eps

Oracle = Callable[[int, int], bool]

FINAL = sys.maxsize   # a stage past every rule


class Undecided(LookupError):
    """A bounded search ran out of budget before it could answer."""


# --------------------------------------------------------------------------
# One-to-one numberings and equivalence deciders

def friedberg_equiv_decider(t, p: int, q: int, budget: int) -> bool:
    """Decide ``psi_p = psi_q`` as ``t(p) = t(q)``, where ``t`` translates
    ``psi`` into a one-to-one numbering (the caller vouches for that)."""
    tp, tq = t(p, budget), t(q, budget)
    if tp is None or tq is None:
        bad = p if tp is None else q
        raise Undecided(f"translation undefined on {bad} within budget {budget}")
    return tp == tq


@dataclass
class MinimalPrograms:
    programs: list
    exhausted: bool     # True when fewer than `count` were found below probe_limit


def minimal_programs(oracle: Oracle, count: int, probe_limit: int = 1024) -> MinimalPrograms:
    """The first ``count`` least representatives: ``m_0 = 0`` and each next
    ``m`` is the least program inequivalent to every earlier one."""
    found: list[int] = []
    p = 0
    while len(found) < count and p < probe_limit:
        if not any(oracle(p, m) for m in found):
            found.append(p)
        p += 1
    return MinimalPrograms(found, len(found) < count)


@dataclass
class FriedbergResult:
    eta: Eps
    forward: list                 # i -> m_i, so eta_i = psi_{m_i}
    exhausted: bool
    separations: dict = field(default_factory=dict)   # (i, i') -> verdict

    def forward_translation(self):
        """``i -> m_i``, translating ``eta`` into ``psi``."""
        fw = self.forward
        return lambda i, budget=0: fw[i] if i < len(fw) else None

    def one_to_one(self) -> bool:
        return all(isinstance(v, Distinct) for v in self.separations.values())


def friedberg_from_decider(psi: Union[Eps, Sequence[Descriptor]], oracle: Oracle, count: int,
                           budget: int = 64, probe_limit: int = 1024,
                           env: EvalEnvironment | None = None) -> FriedbergResult:
    """``eta_i = psi_{m_i}`` over the least representatives, with pairwise
    separation verdicts as evidence of one-to-one-ness on the prefix."""
    if not isinstance(psi, Eps):
        psi = Eps.from_table(psi, env)
    env = env or psi.env
    mp = minimal_programs(oracle, count, probe_limit)
    descs = [psi.lookup(m, FINAL) for m in mp.programs]
    eta = Eps.from_table(descs, env)
    seps = {}
    for a in range(len(descs)):
        for b in range(a + 1, len(descs)):
            seps[(a, b)] = ext_equal(descs[a], descs[b], budget, env)
    return FriedbergResult(eta, mp.programs, mp.exhausted, seps)


def backward_translation(oracle: Oracle, forward: Sequence[int]):
    """``p -> i`` with ``p`` equivalent to ``m_i``, translating ``psi`` into ``eta``."""
    def t(p, budget=0):
        for i, m in enumerate(forward):
            if oracle(p, m):
                return i
        return None
    return t


def table_oracle(psi: Union[Eps, Sequence[Descriptor]], budget: int = 64,
                 env: EvalEnvironment | None = None) -> Oracle:
    """Equivalence on a table whose entries the kernel decides structurally."""
    if not isinstance(psi, Eps):
        psi = Eps.from_table(psi, env)

    def oracle(p: int, q: int) -> bool:
        v = ext_equal(psi.lookup(p, FINAL), psi.lookup(q, FINAL), budget, env or psi.env)
        if isinstance(v, Unknown):
            raise Undecided(f"cannot decide programs {p} and {q} within budget {budget}")
        return isinstance(v, Equal)
    return oracle


# --------------------------------------------------------------------------
# Ties

@dataclass
class RoundtripCeer:
    R: CeerBuilder
    diverged: list      # programs on which t or t' was undefined


def ceer_from_roundtrip(t, t_prime, programs, budget: int) -> RoundtripCeer:
    """The closure of ``{(p, t(t'(p)))}`` over ``programs``."""
    pairs, diverged = [], []
    for p in programs:
        y = t_prime(p, budget)
        z = None if y is None else t(y, budget)
        if z is None:
            diverged.append(p)
        else:
            pairs.append((p, z))
    return RoundtripCeer(rst_closure(pairs), diverged)


def translation_from_ceer(R: CeerBuilder, t, exceptional: Sequence[tuple[int, int]], p: int,
                          search_budget: int, budget: int = 64) -> int:
    """The first ``q`` with ``p`` related to ``t(q)``, else the target of
    ``p``'s exceptional class.

    Search order is (closure stage, q): at stage ``n`` the relation
    generated by the first ``n`` committed pairs is tried against
    ``q <= n``.  Stages run up to ``search_budget``.
    """
    grow = CeerBuilder()
    images: dict[int, Optional[int]] = {}
    for n in range(search_budget + 1):
        if 0 < n <= len(R.pairs):
            grow.add_pair(*R.pairs[n - 1])
        for q in range(n + 1):
            if q not in images:
                images[q] = t(q, budget)
            if images[q] is not None and grow.related(p, images[q]):
                return q
    for rep, q in exceptional:
        if R.related(p, rep):
            return q
    raise Undecided(f"no q found for program {p} within {search_budget} stages "
                    f"and it lies in no exceptional class")


def translation_from_ceer_fn(R: CeerBuilder, t, exceptional, search_budget: int):
    """:func:`translation_from_ceer` as a translation source."""
    cache: dict[int, Optional[int]] = {}

    def t_prime(p, budget=64):
        if p not in cache:
            try:
                cache[p] = translation_from_ceer(R, t, exceptional, p, search_budget, budget)
            except Undecided:
                cache[p] = None
        return cache[p]
    return t_prime


@dataclass
class TieReport:
    mode: str
    subrelation: str                  # holds-on-sample | violated | unknown
    violated: Optional[tuple] = None  # (p, q, verdict)
    classes_checked: int = 0
    classes_missed: list = field(default_factory=list)  # least members of missed classes
    unknown_pairs: int = 0

    @property
    def holds(self) -> bool:
        """Strong: no violation and no missed class.  Weak: no violation
        (the missed count is the finite exception set)."""
        if self.subrelation == "violated":
            return False
        return self.mode == "weak" or not self.classes_missed


def ties_check(R: CeerBuilder, t, psi: Eps, mode: str = "strong", horizon: int = 64,
               budget: int = 64, stage: int = FINAL, env: EvalEnvironment | None = None) -> TieReport:
    """Check that ``R`` is a subrelation of ``Equiv(psi)`` on its committed
    pairs below ``horizon`` and that ``{t(q) | q < horizon}`` meets every
    class among the programs below ``horizon``."""
    if mode not in ("strong", "weak"):
        raise ValueError("mode is 'strong' or 'weak'")
    env = env or psi.env
    report = TieReport(mode, "holds-on-sample")
    for p, q in R.pairs:
        if p >= horizon or q >= horizon:
            continue
        v = ext_equal(psi.lookup(p, stage), psi.lookup(q, stage), budget, env)
        if isinstance(v, Distinct):
            report.subrelation, report.violated = "violated", (p, q, v)
            break
        if isinstance(v, Unknown):
            report.unknown_pairs += 1
    if report.subrelation != "violated" and report.unknown_pairs:
        report.subrelation = "unknown"
    image = {y for q in range(horizon) if (y := t(q, budget)) is not None}
    reps_hit = {R.representative(y) for y in image}
    for cls in R.classes_among(range(horizon)):
        report.classes_checked += 1
        if R.representative(min(cls)) not in reps_hit:
            report.classes_missed.append(min(cls))
            if mode == "strong":
                break
    return report


# --------------------------------------------------------------------------
# Refinement of finitely many c.e. sets

class SetSource(Protocol):
    name: str

    def enumerate(self, s: int) -> set: ...

    contains: Optional[Callable[[int], bool]]


@dataclass
class PredicateSet:
    """A decidable set; its stage-``s`` enumeration is its members below ``s``."""
    pred: Callable[[int], bool]
    name: str = "pred"

    def enumerate(self, s: int) -> set:
        return {x for x in range(s) if self.pred(x)}

    def contains(self, x: int) -> bool:
        return bool(self.pred(x))


@dataclass
class FiniteSet:
    values: frozenset
    name: str = "finite"

    def __post_init__(self):
        self.values = frozenset(self.values)

    def enumerate(self, s: int) -> set:
        return {x for x in self.values if x < s}

    def contains(self, x: int) -> bool:
        return x in self.values


@dataclass
class MachineSet:
    """``W_e`` through the programming system; membership is not decidable."""
    phi: object
    e: int
    name: str = "W"
    contains = None

    def enumerate(self, s: int) -> set:
        return set(self.phi.w_enum(self.e, s))


@dataclass(frozen=True)
class Infinite:
    pass


@dataclass(frozen=True)
class Finite:
    bound: int          # no member of J exceeds this


@dataclass(frozen=True)
class Budgeted:
    stages: int


class Inconclusive(RuntimeError):
    pass


class Chain:
    """An infinite computable set given by a decidable step over its parent,
    generated in increasing order and cached."""

    def __init__(self, parent: Optional["Chain"], keep: Callable[[int], bool],
                 scan_limit: int = 1 << 20, label: str = "X"):
        self.parent = parent
        self.keep = keep
        self.scan_limit = scan_limit
        self.label = label
        self._elems: list[int] = []
        self._members: set[int] = set()
        self._source = iter(parent) if parent is not None else _naturals()
        self._seen = -1

    def _advance(self) -> bool:
        for x in self._source:
            self._seen = x
            if self.keep(x):
                self._elems.append(x)
                self._members.add(x)
                return True
            if x > self.scan_limit:
                break
        raise Inconclusive(f"{self.label}: no further element below {self.scan_limit}")

    def take(self, n: int) -> list[int]:
        while len(self._elems) < n:
            self._advance()
        return self._elems[:n]

    def __iter__(self) -> Iterator[int]:
        k = 0
        while True:
            if k >= len(self._elems):
                self._advance()
            yield self._elems[k]
            k += 1

    def __contains__(self, x: int) -> bool:
        while self._seen < x:
            self._advance()
        return x in self._members


def _naturals() -> Iterator[int]:
    x = 0
    while True:
        yield x
        x += 1


@dataclass
class LevelDecision:
    level: int
    cond: str            # "a" (infinite intersection) or "b" (finite)
    hint: object
    maximum: Optional[int] = None   # cond b: max of the intersection, -1 when empty


@dataclass
class RefinementResult:
    X: Chain
    L: frozenset
    log: list
    chain: list          # X_0, ..., X_n

    def verify(self, J: Sequence, count: int) -> list[tuple[int, int]]:
        """Pairs ``(x, l)`` among the first ``count`` elements of X where
        ``x in J_l`` disagrees with ``l in L``.  Needs decidable sets."""
        bad = []
        for x in self.X.take(count):
            for l, src in enumerate(J):
                if bool(src.contains(x)) != (l in self.L):
                    bad.append((x, l))
        return bad

    def chain_nested(self, count: int) -> bool:
        """``X_0 ⊇ X_1 ⊇ ...`` on the first ``count`` elements of each level."""
        for lo, hi in zip(self.chain, self.chain[1:]):
            if not all(x in lo for x in hi.take(count)):
                return False
        return True


def _classify(level: int, src, hint, parent: Chain) -> tuple[str, Optional[int]]:
    if isinstance(hint, Infinite):
        return "a", None
    if isinstance(hint, Finite):
        if src.contains is not None:
            hits = [x for x in range(hint.bound + 1) if src.contains(x) and x in parent]
        else:
            hits = [x for x in src.enumerate(hint.bound + 1) if x in parent]
        return "b", max(hits, default=-1)
    if isinstance(hint, Budgeted):
        half = {x for x in src.enumerate(hint.stages // 2) if x in parent}
        full = {x for x in src.enumerate(hint.stages) if x in parent}
        if full == half:
            return "b", max(full, default=-1)
        if min(full - half) > max(half, default=-1) and src.contains is not None:
            return "a", None
        raise Inconclusive(f"level {level}: cannot classify {src.name} within {hint.stages} stages")
    raise ValueError(f"level {level}: unknown hint {hint!r}")


def refine_family(J: Sequence, hints: Sequence, scan_limit: int = 1 << 20) -> RefinementResult:
    """Refine ``X_0 = N`` through each ``J_l`` in turn.

    Infinite intersection: keep the even-ranked elements of the increasing
    enumeration of ``J_l ∩ X_l`` (needs decidable ``J_l``).  Finite
    intersection: keep ``X_l`` above its maximum.  ``L`` collects the
    levels of the first kind.
    """
    if len(J) != len(hints):
        raise ValueError("one hint per set")
    X = Chain(None, lambda x: True, scan_limit, "X_0")
    chain, log, L = [X], [], set()
    for level, (src, hint) in enumerate(zip(J, hints)):
        cond, maximum = _classify(level, src, hint, X)
        if cond == "a":
            if src.contains is None:
                raise Inconclusive(f"level {level}: an infinite intersection needs a decidable set")
            X = _even_ranked(X, src.contains, scan_limit, f"X_{level + 1}")
            L.add(level)
        else:
            X = Chain(X, (lambda m: lambda x: x > m)(maximum), scan_limit, f"X_{level + 1}")
        chain.append(X)
        log.append(LevelDecision(level, cond, hint, maximum))
    return RefinementResult(X, frozenset(L), log, chain)


def _even_ranked(parent: Chain, member: Callable[[int], bool], scan_limit: int, label: str) -> Chain:
    """Elements of ``parent ∩ J`` whose rank in that intersection is even."""
    state = {"rank": 0}

    def keep(x):
        if not member(x):
            return False
        r = state["rank"]
        state["rank"] += 1
        return r % 2 == 0
    return Chain(parent, keep, scan_limit, label)
