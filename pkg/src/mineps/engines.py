"""The three stage constructions, run to a finite horizon.

Variants:

``grid``
    Rows ``(i, j)`` of ``2**(i+1)`` even programs each.  Translation flags
    ``(i, j, l)`` merge the blocks of one row; refuting ``W_i`` sends the
    E-side of a row to ``alpha_l`` and the E-bar-side to ``alpha_m``.
``ladder``
    One row per ``i``; translation flags are ``(i, l)``.
``grown``
    Programs ``3<i,j>`` / ``3<i,j>+1`` start as ``i`` below ``2j+1`` /
    ``2j+2``; the E / E-bar sets are built up rather than computed, and
    refuting ``W_i`` splits them onto two aux functions.

Stage ``s`` is dispatched on its decoded form: ``s = pair(a, r)``; ``a = 0``
is the aux-placement form ``<0, r>``; otherwise ``r = pair(b, r')`` with
``b = 0`` the refutation form for ``i = a - 1`` and ``b > 0`` the
translation form.  The grid variant reads ``l`` from ``r' = pair(l, -)``;
the others treat ``r'`` as a wildcard so that each form recurs forever.

Every state change is an *effect* dict.  The engine computes a stage's
effects against the pre-stage state and then applies them through
:meth:`EngineState.apply`, the same path trace replay uses.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from typing import Iterable, Iterator, Optional

from . import geometry as geo
from .aux import AuxNumbering, NotFoundWithinBudget
from .ceer import CeerBuilder
from .kernel import (AuxIndex, EvalEnvironment, TotalConstant, const_prefix, pair,
                     prefix_shape, unpair)
from .lazyset import Cofinite, Progression
from .machine import Phi, ScriptedBackend, load_script_file
from .numbering import (BaseLayout, DstPrefix, DstThin, Eps, Explicit, RowAlpha,
                        RowBlocks, rule_from_dict)
from .records import Trace, TraceRecord

VARIANTS = ("grid", "ladder", "grown")
SCOPES = ("trigger-row", "all-rows")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    variant: str = "ladder"
    horizon: int = 1000
    aux_search_budget: int = 4096
    stability_window: int = 100
    rflag_scope: str = "trigger-row"
    detail_limit: int = 6
    script_modulus: int = 2 ** 20
    script_floor: int = 2 ** 20
    scripts: tuple = ()

    def __post_init__(self) -> None:
        self.scripts = tuple(self.scripts)
        self.validate()

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r} (choose from {', '.join(VARIANTS)})")
        if self.rflag_scope not in SCOPES:
            raise ConfigError(f"unknown rflag_scope {self.rflag_scope!r}")
        if self.horizon < 1:
            raise ConfigError("horizon must be at least 1")
        for name in ("aux_search_budget", "script_modulus"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        for name in ("stability_window", "detail_limit", "script_floor"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scripts"] = list(self.scripts)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        return cls(**d)


def build_phi(config: RunConfig) -> Phi:
    backend = ScriptedBackend(config.script_modulus, config.script_floor)
    for path in config.scripts:
        try:
            scripts = load_script_file(path)
        except OSError as exc:
            raise ConfigError(f"cannot read script file {path}: {exc.strerror}") from None
        for e, sc in scripts.items():
            backend.register(e, sc)
    return Phi(backend)


# --------------------------------------------------------------------------
# Stage forms

def decode_stage(variant: str, s: int) -> dict:
    a, r = unpair(s)
    if a == 0:
        return {"kind": "place", "l": r}
    b, rest = unpair(r)
    i = a - 1
    if b == 0:
        return {"kind": "refute", "i": i}
    if variant == "grid":
        return {"kind": "translate", "i": i, "j": b - 1, "l": unpair(rest)[0]}
    if variant == "ladder":
        return {"kind": "translate", "i": i, "l": b - 1}
    return {"kind": "translate", "i": i, "j": b - 1}


def stage_of(variant: str, kind: str, i: int = 0, j: int = 0, l: int = 0, wildcard: int = 0) -> int:
    """The stage number of a form (inverse of :func:`decode_stage`)."""
    if kind == "place":
        return pair(0, l)
    if kind == "refute":
        return pair(i + 1, pair(0, wildcard))
    if variant == "grid":
        return pair(i + 1, pair(j + 1, pair(l, wildcard)))
    if variant == "ladder":
        return pair(i + 1, pair(l + 1, wildcard))
    return pair(i + 1, pair(j + 1, wildcard))


# --------------------------------------------------------------------------
# Block geometry

def row_program(variant: str, i: int, j: Optional[int], pos: int) -> int:
    return geo.grid_program(i, j, pos) if variant == "grid" else geo.ladder_program(i, pos)


def locate_row(variant: str, p: int):
    """``((i, j), pos)`` for a row program (``j`` is None on the ladder), else None."""
    if variant == "grid":
        loc = geo.locate_grid(p)
        return None if loc is None else ((loc[0], loc[1]), loc[2])
    loc = geo.locate_ladder(p)
    return None if loc is None else ((loc[0], None), loc[1])


def row_value(variant: str, i: int, j: Optional[int]) -> int:
    return pair(i, j) if variant == "grid" else i


def formula_blocks(variant: str, i: int, j: Optional[int], h: int) -> list[tuple[tuple, tuple]]:
    """All ``(E, E-bar)`` blocks of a row at height ``h``, from the closed form."""
    out = []
    for k in range(geo.num_blocks(i, h)):
        e, ebar = geo.block_positions(h, k)
        out.append((tuple(row_program(variant, i, j, x) for x in e),
                    tuple(row_program(variant, i, j, x) for x in ebar)))
    return out


def merge_blocks(blocks: list) -> list:
    """One height step: new block ``k`` is old blocks ``2k`` (E side) and ``2k+1`` (E-bar side)."""
    return [(blocks[2 * k][0] + blocks[2 * k][1], blocks[2 * k + 1][0] + blocks[2 * k + 1][1])
            for k in range(len(blocks) // 2)]


# --------------------------------------------------------------------------
# State

@dataclass
class EngineState:
    variant: str
    scope: str = "trigger-row"
    detail_limit: int = 6
    stage: int = 0
    r_flags: dict = field(default_factory=dict)     # i -> stage whose conditions held
    r_triggers: dict = field(default_factory=dict)  # i -> rflag effect
    t_flags: dict = field(default_factory=dict)     # flag tuple -> stage
    heights: dict = field(default_factory=dict)     # (i, j) -> height
    src: Cofinite = field(default_factory=Cofinite)
    dst: Progression = None
    psi: Eps = None
    E: dict = field(default_factory=dict)
    Ebar: dict = field(default_factory=dict)
    tracked: dict = field(default_factory=dict)     # (i, j) -> blocks, kept incrementally
    overwrites: list = field(default_factory=list)

    @classmethod
    def fresh(cls, variant: str, scope: str = "trigger-row", detail_limit: int = 6,
              env: EvalEnvironment | None = None) -> "EngineState":
        if variant not in VARIANTS:
            raise ConfigError(f"unknown variant {variant!r}")
        st = cls(variant, scope, detail_limit)
        st.dst = Progression(3, 2) if variant == "grown" else Progression(2, 1)
        st.psi = Eps(variant, env)
        st.psi.append(BaseLayout(variant))
        return st

    # geometry -------------------------------------------------------------
    def row_key(self, i: int, j: Optional[int]) -> tuple:
        return (i, j if self.variant == "grid" else None)

    def height(self, i: int, j: Optional[int] = None) -> int:
        return self.heights.get(self.row_key(i, j), 0)

    def num(self, i: int, j: Optional[int] = None) -> int:
        return geo.num_blocks(i, self.height(i, j))

    def block(self, i: int, j: Optional[int] = None, k: int = 0) -> tuple[list, list]:
        if self.variant == "grown":
            return list(self.E.get(i, [])), list(self.Ebar.get(i, []))
        n = self.num(i, j)
        if not 0 <= k < n:
            raise IndexError(f"block {k} out of range (num = {n})")
        e, ebar = geo.block_positions(self.height(i, j), k)
        return ([row_program(self.variant, i, j, x) for x in e],
                [row_program(self.variant, i, j, x) for x in ebar])

    def tracked_blocks(self, i: int, j: Optional[int] = None) -> list:
        """Incrementally maintained blocks (rows with ``i <= detail_limit``)."""
        key = self.row_key(i, j)
        if key not in self.tracked:
            if i > self.detail_limit:
                raise ValueError(f"row {key} is not tracked (detail_limit = {self.detail_limit})")
            blocks = formula_blocks(self.variant, i, key[1], 0)
            for _ in range(self.heights.get(key, 0)):
                blocks = merge_blocks(blocks)
            self.tracked[key] = blocks
        return self.tracked[key]

    # mutation ------------------------------------------------------------
    def apply(self, eff: dict, stage: int) -> None:
        op = eff["op"]
        if op == "src_remove":
            self.src = self.src.without(eff["values"])
        elif op == "dst_take":
            self.dst = self.dst.take(eff["n"])
        elif op == "dst_thin":
            self.dst = self.dst.thin() if eff["count"] is None else self.dst.thin_prefix(eff["count"])
        elif op == "rflag":
            self.r_flags[eff["i"]] = stage
            self.r_triggers[eff["i"]] = eff
        elif op == "tflag":
            flag = tuple(eff["flag"])
            self.t_flags[flag] = stage
            if self.variant != "grown":
                key = self.row_key(flag[0], flag[1] if self.variant == "grid" else None)
                if key in self.tracked:
                    self.tracked[key] = merge_blocks(self.tracked[key])
                self.heights[key] = self.heights.get(key, 0) + 1
        elif op == "rule":
            self.psi.append(rule_from_dict(eff["rule"]))
        elif op == "e_grow":
            self.E.setdefault(eff["i"], []).append(eff["p"])
        elif op == "ebar_grow":
            self.Ebar.setdefault(eff["i"], []).append(eff["q"])
        elif op == "overwrite":
            self.overwrites.append((stage, eff["i"], eff["keep_row"]))
        elif op == "merge":
            pass   # informational: carries the merged blocks for the checker
        else:
            raise ValueError(f"unknown effect {op!r}")

    def snapshot(self) -> dict:
        """Every field, in comparable form."""
        return {
            "variant": self.variant, "stage": self.stage,
            "r_flags": dict(self.r_flags), "t_flags": dict(self.t_flags),
            "heights": dict(self.heights), "src": sorted(self.src.removed),
            "dst": self.dst.to_text(), "rules": self.psi.to_dicts(),
            "E": {i: list(v) for i, v in self.E.items()},
            "Ebar": {i: list(v) for i, v in self.Ebar.items()},
            "overwrites": list(self.overwrites),
        }


def height(state: EngineState, i: int, j: Optional[int] = None) -> int:
    return state.height(i, j)


def num(state: EngineState, i: int, j: Optional[int] = None) -> int:
    return state.num(i, j)


def block(state: EngineState, i: int, j: Optional[int] = None, k: int = 0):
    return state.block(i, j, k)


# --------------------------------------------------------------------------
# The engine

class Engine:
    def __init__(self, config: RunConfig, phi: Phi | None = None):
        self.config = config
        self.phi = phi if phi is not None else build_phi(config)
        self.family = config.variant
        self.aux = AuxNumbering(self.family, self.phi)
        self.env = EvalEnvironment(machine=self.phi, aux={self.family: self.aux})
        self.state = EngineState.fresh(config.variant, config.rflag_scope,
                                       config.detail_limit, self.env)
        self.records: list[TraceRecord] = []

    @property
    def variant(self) -> str:
        return self.config.variant

    def trace(self) -> Trace:
        return Trace(self.variant, self.config.to_dict(), list(self.records))

    def run_stage(self) -> TraceRecord:
        st = self.state
        s = st.stage
        form = decode_stage(self.variant, s)
        deferral = None
        try:
            if form["kind"] == "place":
                effects = self._place(form, s)
            elif self.variant == "grown":
                effects = (self._refute_grown(form, s) if form["kind"] == "refute"
                           else self._translate_grown(form, s))
            else:
                effects = (self._refute_rows(form, s) if form["kind"] == "refute"
                           else self._translate_rows(form, s))
        except NotFoundWithinBudget as exc:
            effects, deferral = [], f"aux search: {exc}"
        for eff in effects:
            st.apply(eff, s)
        st.stage = s + 1
        rec = TraceRecord(s, form, bool(effects), deferral, effects)
        self.records.append(rec)
        return rec

    def run(self, horizon: int | None = None) -> Trace:
        target = self.config.horizon if horizon is None else horizon
        while self.state.stage < target:
            self.run_stage()
        return self.trace()

    # helpers --------------------------------------------------------------
    @staticmethod
    def _rule(rule) -> dict:
        return {"op": "rule", "rule": rule.to_dict()}

    def _take(self, n: int) -> dict:
        return {"op": "dst_take", "n": n, "first": self.state.dst.first(min(n, 8))}

    def _extenders(self, prefix) -> list[int]:
        return self.aux.find_extenders(prefix, self.state.src, 2, self.config.aux_search_budget)

    # <0, l> -----------------------------------------------------------------
    def _place(self, form, s):
        l = form["l"]
        st = self.state
        if l not in st.src:
            return []
        p = st.dst.min()
        return [{"op": "src_remove", "values": [l]}, self._take(1),
                self._rule(Explicit(s + 1, p, AuxIndex(self.family, l)))]

    # grid / ladder ----------------------------------------------------------
    def _translate_rows(self, form, s):
        st, v = self.state, self.variant
        i, l = form["i"], form["l"]
        j = form.get("j")
        flag = (i, j, l) if v == "grid" else (i, l)
        if not l < i or i in st.r_flags or flag in st.t_flags:
            return []
        h = st.height(i, j)
        nb = geo.num_blocks(i, h)
        if nb > s:      # rng(phi_l^s) has fewer than s elements
            return []
        rng = self.phi.range_enum(l, s)
        if len(rng) < nb:
            return []
        key = st.row_key(i, j)
        hit = set()
        for y in rng:
            loc = locate_row(v, y)
            if loc is not None and loc[0] == key:
                hit.add(loc[1] >> (h + 1))
        if len(hit) < nb:
            return []
        n = nb // 2
        value = row_value(v, i, j)
        merged = None
        if i <= st.detail_limit:
            merged = [[list(e), list(b)] for e, b in merge_blocks(st.tracked_blocks(i, j))]
        return [
            {"op": "tflag", "flag": list(flag)},
            {"op": "merge", "i": i, "j": key[1], "h": h + 1, "blocks": merged},
            self._take(n),
            self._rule(DstPrefix(s + 1, st.dst, n, value, 2, 1, h)),
            self._rule(RowBlocks(s + 1, v, i, key[1], h + 1)),
        ]

    def _crossing_rows(self, i: int, s: int):
        """Least ``(j, k, x, p, q)`` with ``x = pair(p, q)`` in ``W_i^s``, ``p`` in an
        E-half and ``q`` in the matching E-bar-half of row ``(i, j)``."""
        st, v = self.state, self.variant
        j0 = 0 if v == "grid" else None
        # any crossing pair has p >= f(i, 0, 0) and q >= f(i, 0, 1); pair is monotone
        if pair(row_program(v, i, j0, 0), row_program(v, i, j0, 1)) >= s:
            return None
        best = None
        for x in sorted(self.phi.w_enum(i, s)):
            p, q = unpair(x)
            lp, lq = locate_row(v, p), locate_row(v, q)
            if lp is None or lq is None or lp[0] != lq[0] or lp[0][0] != i:
                continue
            h = st.heights.get(lp[0], 0)
            kp, bar_p = geo.block_of(lp[1], h)
            kq, bar_q = geo.block_of(lq[1], h)
            if kp != kq or bar_p or not bar_q:
                continue
            cand = (lp[0][1] if v == "grid" else 0, kp, x, p, q)
            if best is None or cand[:2] < best[:2]:
                best = cand
        return best

    def _refute_rows(self, form, s):
        st, v = self.state, self.variant
        i = form["i"]
        if i in st.r_flags:
            return []
        found = self._crossing_rows(i, s)
        if found is None:
            return []
        j, k, x, p, q = found
        jj = j if v == "grid" else None
        l, m = self._extenders(const_prefix(row_value(v, i, jj), 2 ** i))
        h = st.height(i, jj)
        nb = geo.num_blocks(i, h)
        effects = [
            {"op": "rflag", "i": i, "j": jj, "k": k, "x": x, "p": p, "q": q, "l": l, "m": m},
            {"op": "src_remove", "values": [l, m]},
        ]
        if v == "ladder":
            effects += [
                self._take(nb),
                self._rule(RowAlpha(s + 1, v, i, None, h, self.family, l, m)),
                self._rule(DstPrefix(s + 1, st.dst, nb, i, 1, 1, h)),
            ]
        elif st.scope == "trigger-row":
            effects += [
                {"op": "dst_thin", "count": nb},
                self._rule(RowAlpha(s + 1, v, i, j, h, self.family, l, m)),
                self._rule(DstThin(s + 1, st.dst, i, ((j, 0, nb, h),))),
            ]
        else:
            flagged = sorted((key[1], hh) for key, hh in st.heights.items() if key[0] == i and hh)
            last = max([jr for jr, _ in flagged] + [j])
            segments, start = [], 0
            for jr in range(last + 1):
                hh = st.heights.get((i, jr), 0)
                count = geo.num_blocks(i, hh)
                segments.append((jr, start, count, hh))
                start += count
            effects += [
                {"op": "dst_thin", "count": None},
                {"op": "overwrite", "i": i, "keep_row": j},
                self._rule(RowAlpha(s + 1, v, i, None, 0, self.family, l, m, True, tuple(flagged))),
                self._rule(DstThin(s + 1, st.dst, i, tuple(segments), True)),
            ]
        return effects

    # grown -------------------------------------------------------------------
    def _grown_lengths(self, programs: Iterable[int], stage: int) -> dict:
        out = {}
        for p in programs:
            shape = prefix_shape(self.state.psi.lookup(p, stage))
            out[p] = shape[1] if shape is not None else None
        return out

    def _refute_grown(self, form, s):
        st = self.state
        i = form["i"]
        E, Ebar = st.E.get(i, []), st.Ebar.get(i, [])
        if i in st.r_flags or not E or not Ebar:
            return []
        if pair(min(E), min(Ebar)) >= s:
            return []
        es, bs = set(E), set(Ebar)
        hit = None
        for x in sorted(self.phi.w_enum(i, s)):
            p, q = unpair(x)
            if p in es and q in bs:
                hit = (x, p, q)
                break
        if hit is None:
            return []
        lengths = self._grown_lengths(E + Ebar, s)
        n = max(v for v in lengths.values() if v is not None)
        k, l = self._extenders(const_prefix(i, n))
        effects = [
            {"op": "rflag", "i": i, "j": None, "k": None, "x": hit[0], "p": hit[1], "q": hit[2],
             "l": k, "m": l, "n": n},
            {"op": "src_remove", "values": [k, l]},
            self._take(1),
        ]
        effects += [self._rule(Explicit(s + 1, p, AuxIndex(self.family, k))) for p in E]
        effects += [self._rule(Explicit(s + 1, q, AuxIndex(self.family, l))) for q in Ebar]
        effects.append(self._rule(Explicit(s + 1, st.dst.min(), TotalConstant(i))))
        return effects

    def _translate_grown(self, form, s):
        st = self.state
        i, j = form["i"], form["j"]
        if i in st.r_flags or (i, j) in st.t_flags:
            return []
        a = 3 * pair(i, j)
        if not self.phi.is_scripted(j) and a >= 2 * s:
            return []   # a machine output within s steps on x < s is below 2s
        rng = self.phi.range_enum(j, s)
        if a not in rng or a + 1 not in rng:
            return []
        members = st.E.get(i, []) + st.Ebar.get(i, []) + [a, a + 1]
        lengths = self._grown_lengths(members, s)
        n = max(v for v in lengths.values() if v is not None)
        effects = [
            {"op": "tflag", "flag": [i, j]},
            {"op": "e_grow", "i": i, "p": a},
            {"op": "ebar_grow", "i": i, "q": a + 1},
        ]
        effects += [self._rule(Explicit(s + 1, p, const_prefix(i, n)))
                    for p in members if lengths[p] != n]
        q0, q1 = st.dst.first(2)
        effects += [
            self._take(2),
            self._rule(Explicit(s + 1, q0, const_prefix(i, 2 * j + 1))),
            self._rule(Explicit(s + 1, q1, const_prefix(i, 2 * j + 2))),
        ]
        return effects


def run(config: RunConfig, phi: Phi | None = None) -> Trace:
    return Engine(config, phi).run()


def run_stage(engine: Engine) -> tuple[EngineState, TraceRecord]:
    rec = engine.run_stage()
    return engine.state, rec


# --------------------------------------------------------------------------
# Replay and derived objects

def replay(trace: Trace, env: EvalEnvironment | None = None) -> Iterator[tuple[EngineState, TraceRecord]]:
    """Yield ``(state, record)`` after applying each record in turn.

    The same state object is mutated throughout.
    """
    cfg = trace.config
    st = EngineState.fresh(trace.variant, cfg.get("rflag_scope", "trigger-row"),
                           cfg.get("detail_limit", 6), env)
    for rec in trace.records:
        for eff in rec.effects:
            st.apply(eff, rec.stage)
        st.stage = rec.stage + 1
        yield st, rec


def final_state(trace: Trace, env: EvalEnvironment | None = None) -> EngineState:
    cfg = trace.config
    st = EngineState.fresh(trace.variant, cfg.get("rflag_scope", "trigger-row"),
                           cfg.get("detail_limit", 6), env)
    for st, _ in replay(trace, env):
        pass
    return st


def _star(R: CeerBuilder, members: Iterable[int], bound: Optional[int]) -> None:
    ms = sorted(p for p in members if bound is None or p < bound)
    for q in ms[1:]:
        R.add_pair(ms[0], q)


def companion_ceer(trace: Trace, l: Optional[int] = None, program_bound: Optional[int] = None,
                   max_row_size: int = 1 << 16) -> CeerBuilder:
    """Replay a trace and list the pairs of the variant's companion relation.

    Classes are committed as stars around their least member (same closure
    as listing every pair).  ``program_bound`` restricts to programs below
    it; it is required for the grid variant's all-rows scope, whose
    refutation classes are infinite.  Rows larger than ``max_row_size``
    are skipped.
    """
    v = trace.variant
    R = CeerBuilder()
    if v == "grid" and l is None:
        raise ValueError("the grid companion relation is parameterized by l")
    if v == "grown":
        st = final_state(trace)
        for i in sorted(st.E):
            _star(R, st.E[i], program_bound)
            _star(R, st.Ebar.get(i, []), program_bound)
        return R
    refuted = {eff["i"] for rec in trace.records for eff in rec.effects if eff["op"] == "rflag"}
    scope = trace.config.get("rflag_scope", "trigger-row")
    heights: dict = {}
    for rec in trace.records:
        for eff in rec.effects:
            if eff["op"] == "tflag":
                flag = eff["flag"]
                i = flag[0]
                j = flag[1] if v == "grid" else None
                h = heights.get((i, j), 0) + 1
                heights[(i, j)] = h
                if geo.row_size(i) > max_row_size:
                    continue
                whole = v == "grid" and i <= l and i not in refuted
                if v == "grid" and i <= l and i in refuted:
                    continue
                for e, ebar in formula_blocks(v, i, j, h):
                    if whole:
                        _star(R, e + ebar, program_bound)
                    else:
                        _star(R, e, program_bound)
                        _star(R, ebar, program_bound)
            elif eff["op"] == "rflag":
                i = eff["i"]
                if geo.row_size(i) > max_row_size:
                    continue
                if v == "grid" and scope == "all-rows":
                    if program_bound is None:
                        raise ValueError("all-rows scope needs a program_bound")
                    rows = []
                    j = 0
                    while row_program(v, i, j, 0) < program_bound:
                        rows.append(j)
                        j += 1
                else:
                    rows = [eff["j"]]
                side_e, side_b = [], []
                for j in rows:
                    for e, ebar in formula_blocks(v, i, j, heights.get((i, j), 0)):
                        side_e += e
                        side_b += ebar
                _star(R, side_e, program_bound)
                _star(R, side_b, program_bound)
    return R


class UnstableSnapshot(RuntimeError):
    pass


@dataclass
class RowSnapshot:
    height: int
    num: int
    stable: bool
    last_change: Optional[int]


@dataclass
class InfinitySnapshot:
    variant: str
    horizon: int
    window: int
    rows: dict          # (i, j) -> RowSnapshot for rows that ever changed
    E: dict             # grown: i -> list
    Ebar: dict
    e_stable: dict      # grown: i -> bool

    def row(self, i: int, j: Optional[int] = None) -> RowSnapshot:
        key = (i, j if self.variant == "grid" else None)
        if key in self.rows:
            return self.rows[key]
        return RowSnapshot(0, geo.num_blocks(i, 0), True, None)

    def blocks(self, i: int, j: Optional[int] = None) -> list:
        return formula_blocks(self.variant, i, j, self.row(i, j).height)


def infinity_snapshot(trace: Trace, window: int) -> InfinitySnapshot:
    """Final-stage heights / E-sets, each flagged stable iff unchanged in
    the last ``window`` stages."""
    v, horizon = trace.variant, trace.horizon
    cutoff = horizon - window
    changes: dict = {}
    heights: dict = {}
    E: dict = {}
    Ebar: dict = {}
    e_change: dict = {}
    for rec in trace.records:
        for eff in rec.effects:
            if eff["op"] == "tflag" and v != "grown":
                flag = eff["flag"]
                key = (flag[0], flag[1] if v == "grid" else None)
                heights[key] = heights.get(key, 0) + 1
                changes[key] = rec.stage
            elif eff["op"] == "e_grow":
                E.setdefault(eff["i"], []).append(eff["p"])
                e_change[eff["i"]] = rec.stage
            elif eff["op"] == "ebar_grow":
                Ebar.setdefault(eff["i"], []).append(eff["q"])
                e_change[eff["i"]] = rec.stage
    rows = {key: RowSnapshot(h, geo.num_blocks(key[0], h), changes[key] < cutoff, changes[key])
            for key, h in heights.items()}
    return InfinitySnapshot(v, horizon, window, rows, E, Ebar,
                            {i: st < cutoff for i, st in e_change.items()})


class ComplementEnumeration:
    """The increasing enumeration of the naturals outside a decidable set,
    used as a total translation ``n -> n-th non-excluded number``."""

    def __init__(self, excluded, name: str = "complement"):
        self.excluded = excluded
        self.name = name
        self._values: list[int] = []
        self._next = 0

    def _fill(self, n: int) -> None:
        while len(self._values) <= n:
            if not self.excluded(self._next):
                self._values.append(self._next)
            self._next += 1

    def value(self, n: int) -> int:
        self._fill(n)
        return self._values[n]

    def __call__(self, p: int, budget: int = 0) -> int:
        return self.value(p)

    def first(self, n: int) -> list[int]:
        if n > 0:
            self._fill(n - 1)
        return self._values[:n]


def counterexample_t(trace: Trace, i: int, X=None, L=None, window: Optional[int] = None,
                     check_rows: int = 64) -> ComplementEnumeration:
    """A translation whose range avoids the E-half of block 0 of row ``i``
    (ladder), or of every row ``(i, x)`` with ``x`` in ``X`` (grid).

    On the grid the row height for ``x`` in ``X`` is ``|L|``; rows
    ``(i, x)`` with ``x < check_rows`` that the trace did touch must agree
    and be stable, else :class:`UnstableSnapshot`.
    """
    v = trace.variant
    if window is None:
        window = trace.config.get("stability_window", 100)
    snap = infinity_snapshot(trace, window)
    if v == "ladder":
        row = snap.row(i)
        if not row.stable:
            raise UnstableSnapshot(f"row {i} changed at stage {row.last_change}, inside the window")
        h = row.height
        return ComplementEnumeration(
            lambda p: (lambda loc: loc is not None and loc[0] == i and loc[1] < (1 << h))(geo.locate_ladder(p)),
            name=f"avoid-E{i},0")
    if v != "grid":
        raise ValueError("counterexample translations exist for the grid and ladder variants")
    if X is None:
        raise ValueError("the grid counterexample needs the refined set X")
    if L is not None:
        h = len(L)
        for x in range(check_rows):
            if x in X:
                row = snap.row(i, x)
                if row.last_change is not None and (not row.stable or row.height != h):
                    raise UnstableSnapshot(
                        f"row ({i}, {x}) has height {row.height} (stable={row.stable}), expected {h}")

        def height_of(x):
            return h
    else:
        def height_of(x):
            row = snap.row(i, x)
            if not row.stable:
                raise UnstableSnapshot(f"row ({i}, {x}) changed at stage {row.last_change}")
            return row.height

    def excluded(p):
        loc = geo.locate_grid(p)
        if loc is None or loc[0] != i or loc[1] not in X:
            return False
        return loc[2] < (1 << height_of(loc[1]))

    return ComplementEnumeration(excluded, name=f"avoid-E{i},X,0")
