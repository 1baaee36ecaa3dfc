"""Trace replay, the invariant battery, and block-evolution diagrams."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import geometry as geo
from .aux import AuxNumbering
from .engines import (EngineState, formula_blocks, locate_row, row_program, row_value)
from .kernel import (AuxIndex, Distinct, Empty, EvalEnvironment, Unknown, ext_equal,
                     extends, prefix_shape, unpair)
from .numbering import rule_from_dict
from .records import (Trace, TraceFormatError, TraceRecord, deserialize, read_trace,
                      serialize, write_trace)

__all__ = ["Trace", "TraceRecord", "TraceFormatError", "serialize", "deserialize",
           "read_trace", "write_trace", "SUITES", "CheckReport", "check",
           "render_blocks", "render_svg"]

SUITES = ("monotonicity", "flag-shape", "dst-empty", "graph-monotone", "merge-law",
          "eset-monotone", "claims")


@dataclass
class CheckResult:
    status: str = "pass"            # pass | fail | skip
    stage: Optional[int] = None     # first failing stage
    detail: str = ""
    checked: int = 0


@dataclass
class CheckReport:
    results: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(r.status != "fail" for r in self.results.values())

    def failed(self) -> list[str]:
        return [name for name, r in self.results.items() if r.status == "fail"]

    def lines(self) -> list[str]:
        out = []
        for name, r in self.results.items():
            line = f"{name}: {r.status}"
            if r.status == "fail":
                line += f" at stage {r.stage}: {r.detail}"
            elif r.status == "skip":
                line += f" ({r.detail})"
            else:
                line += f" ({r.checked} checks)"
            out.append(line)
        return out

    def text(self) -> str:
        return "\n".join(self.lines()) + "\n"


class _Checker:
    def __init__(self, trace: Trace, suites: Iterable[str], phi=None, budget: int = 64,
                 window: int = 256, sample: int = 16):
        self.trace = trace
        self.v = trace.variant
        self.suites = list(suites)
        self.phi = phi
        self.budget = budget
        self.window = window
        self.sample = sample
        self.aux = AuxNumbering(self.v, phi)
        self.env = EvalEnvironment(machine=phi, aux={self.v: self.aux})
        self.report = CheckReport({name: CheckResult() for name in self.suites})

    def on(self, name: str) -> bool:
        r = self.report.results.get(name)
        return r is not None and r.status == "pass"

    def ok(self, name: str) -> None:
        self.report.results[name].checked += 1

    def fail(self, name: str, stage: int, detail: str) -> None:
        r = self.report.results[name]
        if r.status == "pass":
            r.status, r.stage, r.detail = "fail", stage, detail

    def skip(self, name: str, why: str) -> None:
        r = self.report.results.get(name)
        if r is not None and r.status == "pass":
            r.status, r.detail = "skip", why

    # ------------------------------------------------------------------
    def run(self) -> CheckReport:
        cfg = self.trace.config
        st = EngineState.fresh(self.v, cfg.get("rflag_scope", "trigger-row"),
                               cfg.get("detail_limit", 6), self.env)
        if self.v == "grown":
            for name in ("flag-shape", "merge-law"):
                self.skip(name, "no computed blocks in this variant")
        else:
            self.skip("eset-monotone", "only the grown variant builds E-sets")
        for rec in self.trace.records:
            self.before_record(st, rec)
            overwrite = [e for e in rec.effects if e["op"] == "overwrite"]
            for eff in rec.effects:
                self.before_effect(st, rec, eff, overwrite)
                st.apply(eff, rec.stage)
            st.stage = rec.stage + 1
            self.after_record(st, rec)
        self.at_end(st)
        return self.report

    def before_record(self, st: EngineState, rec: TraceRecord) -> None:
        s = rec.stage
        if self.on("dst-empty"):
            for eff in rec.effects:
                if eff["op"] == "dst_take":
                    programs = eff["first"]
                elif eff["op"] == "dst_thin":
                    n = eff["count"] if eff["count"] is not None else 4
                    programs = [st.dst.select(2 * r) for r in range(min(n, 8))]
                else:
                    continue
                for p in programs:
                    d = st.psi.lookup(p, s)
                    if p not in st.dst or not isinstance(d, Empty):
                        self.fail("dst-empty", s, f"removed program {p} has {d} (in Dst: {p in st.dst})")
                        break
                    self.ok("dst-empty")
        if self.on("monotonicity"):
            for eff in rec.effects:
                op = eff["op"]
                if op == "src_remove":
                    bad = [x for x in eff["values"] if x not in st.src]
                    if bad:
                        self.fail("monotonicity", s, f"Src removal of absent {bad}")
                elif op == "rflag" and eff["i"] in st.r_flags:
                    self.fail("monotonicity", s, f"R-flag {eff['i']} set twice")
                elif op == "tflag" and tuple(eff["flag"]) in st.t_flags:
                    self.fail("monotonicity", s, f"t-flag {eff['flag']} set twice")
                self.ok("monotonicity")
        if self.on("merge-law"):
            for eff in rec.effects:
                if eff["op"] != "merge" or eff["blocks"] is None:
                    continue
                i, j, h = eff["i"], eff["j"], eff["h"]
                if st.height(i, j) != h - 1:
                    self.fail("merge-law", s, f"merge to height {h} from height {st.height(i, j)}")
                    continue
                old = formula_blocks(self.v, i, j, h - 1)
                new = formula_blocks(self.v, i, j, h)
                got = [(tuple(e), tuple(b)) for e, b in eff["blocks"]]
                if got != new:
                    self.fail("merge-law", s, f"row ({i}, {j}) blocks disagree with the closed form")
                    continue
                for k, (e, b) in enumerate(got):
                    if (set(e) != set(old[2 * k][0]) | set(old[2 * k][1])
                            or set(b) != set(old[2 * k + 1][0]) | set(old[2 * k + 1][1])):
                        self.fail("merge-law", s, f"row ({i}, {j}) block {k} is not a union of old blocks")
                        break
                self.ok("merge-law")

    def before_effect(self, st: EngineState, rec: TraceRecord, eff: dict, overwrite: list) -> None:
        if eff["op"] == "rule" and self.on("graph-monotone"):
            rule = rule_from_dict(eff["rule"])
            for p in rule.sample(self.sample):
                if overwrite and self._overwrite_exempt(p, overwrite):
                    continue
                old = st.psi.lookup(p, rec.stage + 1)
                new = rule.descriptor(p)
                if prefix_shape(old) is not None:
                    verdict = extends(new, old, self.budget, self.env)
                else:
                    verdict = ext_equal(old, new, self.budget, self.env)
                if isinstance(verdict, Distinct):
                    self.fail("graph-monotone", rec.stage,
                              f"program {p}: {new} does not extend {old}")
                    return
                self.ok("graph-monotone")
        if eff["op"] == "e_grow" and self.on("eset-monotone"):
            if eff["p"] in st.E.get(eff["i"], []):
                self.fail("eset-monotone", rec.stage, f"{eff['p']} already in E_{eff['i']}")
            elif eff["i"] in st.r_flags:
                self.fail("eset-monotone", rec.stage, f"E_{eff['i']} grows after its R-flag")
            else:
                self.ok("eset-monotone")

    def _overwrite_exempt(self, p: int, overwrite: list) -> bool:
        loc = locate_row(self.v, p)
        if loc is None:
            return False
        (i, j), _ = loc
        return any(o["i"] == i and o["keep_row"] != j for o in overwrite)

    def after_record(self, st: EngineState, rec: TraceRecord) -> None:
        s = rec.stage
        for eff in rec.effects:
            if eff["op"] == "tflag" and self.on("flag-shape"):
                flag = eff["flag"]
                i, l = flag[0], flag[-1]
                j = flag[1] if self.v == "grid" else None
                if not l < i:
                    self.fail("flag-shape", s, f"t-flag {flag} has l >= i")
                elif st.height(i, j) > i:
                    self.fail("flag-shape", s, f"height of row ({i}, {j}) exceeds {i}")
                else:
                    self.ok("flag-shape")
            if eff["op"] == "tflag" and "claims" in self.report.results:
                self._claim_range(st, rec, eff)
            if eff["op"] == "rflag" and self.on("claims"):
                self._claim_split(st, rec, eff)
        if self.v == "grown" and self.on("claims"):
            for eff in rec.effects:
                if eff["op"] == "tflag":
                    i = eff["flag"][0]
                    members = st.E.get(i, []) + st.Ebar.get(i, [])
                    ds = {st.psi.lookup(p, s + 1) for p in members}
                    if len(ds) != 1 or prefix_shape(next(iter(ds)))[0] != i:
                        self.fail("claims", s, f"E_{i} and E-bar_{i} do not share one constant: {ds}")
                    else:
                        self.ok("claims")

    def _claim_range(self, st: EngineState, rec: TraceRecord, eff: dict) -> None:
        if self.v == "grown" or not self.on("claims"):
            return
        if self.phi is None:
            return
        flag = eff["flag"]
        i, l = flag[0], flag[-1]
        j = flag[1] if self.v == "grid" else None
        if i > st.detail_limit or not l < i:
            return      # malformed flags belong to flag-shape
        rng = self.phi.range_enum(l, rec.stage)
        # the flag was raised against the blocks of the previous height
        for k, (e, b) in enumerate(formula_blocks(self.v, i, j, st.height(i, j) - 1)):
            if rng.isdisjoint(e) and rng.isdisjoint(b):
                self.fail("claims", rec.stage, f"t-flag {flag}: the range misses block {k}")
                return
        self.ok("claims")

    def _claim_split(self, st: EngineState, rec: TraceRecord, eff: dict) -> None:
        s = rec.stage
        i, l, m = eff["i"], eff["l"], eff["m"]
        a, b = AuxIndex(self.v, l), AuxIndex(self.v, m)
        if l == m or not isinstance(self.aux.separate(l, m, self.budget), Distinct):
            self.fail("claims", s, f"R-flag {i}: aux indices {l}, {m} not provably distinct")
            return
        if self.v == "grown":
            sides = [(st.E.get(i, []), a), (st.Ebar.get(i, []), b)]
        else:
            j = eff["j"]
            e_side, b_side = [], []
            for e, bb in formula_blocks(self.v, i, j, st.height(i, j)) if i <= 10 else []:
                e_side += e
                b_side += bb
            sides = [(e_side, a), (b_side, b)]
        for programs, want in sides:
            for p in programs:
                got = st.psi.lookup(p, s + 1)
                if got != want:
                    self.fail("claims", s, f"R-flag {i}: program {p} holds {got}, expected {want}")
                    return
        verdict = ext_equal(st.psi.lookup(eff["p"], s + 1), st.psi.lookup(eff["q"], s + 1),
                            self.budget, self.env)
        if not isinstance(verdict, Distinct):
            self.fail("claims", s, f"R-flag {i}: trigger pair ({eff['p']}, {eff['q']}) not separated")
            return
        self.ok("claims")

    def at_end(self, st: EngineState) -> None:
        s = st.stage
        if self.on("dst-empty"):
            for p in st.dst.first(self.sample):
                d = st.psi.lookup(p, s)
                if not isinstance(d, Empty):
                    self.fail("dst-empty", s, f"program {p} still in Dst holds {d}")
                    break
                self.ok("dst-empty")
        if self.on("claims"):
            self._claim_rows(st)
            self._claim_unique(st)
        if self.phi is None and "claims" in self.report.results and self.v != "grown":
            r = self.report.results["claims"]
            if r.status == "pass":
                r.detail = "range checks skipped without a machine"

    def _claim_rows(self, st: EngineState) -> None:
        """Unrefuted rows: block k holds value^<(k+1)*2^h on both halves."""
        if self.v == "grown":
            return
        rows = {key for key in st.heights} | {(i, 0 if self.v == "grid" else None)
                                              for i in range(min(st.detail_limit, 6) + 1)}
        for i, j in sorted(rows, key=lambda r: (r[0], r[1] or 0)):
            if i in st.r_flags or i > st.detail_limit:
                continue
            h = st.height(i, j)
            value = row_value(self.v, i, j)
            for k, (e, b) in enumerate(formula_blocks(self.v, i, j, h)):
                for p in e + b:
                    d = st.psi.lookup(p, st.stage)
                    if prefix_shape(d) != (value, (k + 1) << h):
                        self.fail("claims", st.stage,
                                  f"row ({i}, {j}) block {k}: program {p} holds {d}")
                        return
            self.ok("claims")

    def _claim_unique(self, st: EngineState) -> None:
        """Programs of the fresh stream carry descriptors no other program has."""
        base = (lambda p: p % 2 == 1) if self.v != "grown" else (lambda p: p % 3 == 2)
        exempt = set()
        if self.v == "grown":
            for i in st.E:
                if i not in st.r_flags:
                    exempt |= set(st.E[i]) | set(st.Ebar.get(i, []))
        ds = {p: st.psi.lookup(p, st.stage) for p in range(self.window)}
        for p, dp in ds.items():
            if not base(p) or isinstance(dp, Empty):
                continue
            for q, dq in ds.items():
                if q == p or q in exempt:
                    continue
                v = ext_equal(dp, dq, self.budget, self.env)
                if not isinstance(v, (Distinct, Unknown)):
                    self.fail("claims", st.stage, f"fresh program {p} shares {dp} with {q}")
                    return
            self.ok("claims")


def check(trace: Trace, suites: Iterable[str] | str = "all", phi=None, budget: int = 64,
          window: int = 256) -> CheckReport:
    """Replay ``trace`` and evaluate the selected invariant suites at every stage.

    Checks that need the programming system (range hits of translation
    flags) run only when ``phi`` is given.
    """
    if suites == "all":
        suites = SUITES
    elif isinstance(suites, str):
        suites = [s.strip() for s in suites.split(",") if s.strip()]
    unknown = [s for s in suites if s not in SUITES]
    if unknown:
        raise ValueError(f"unknown suite(s): {', '.join(unknown)} (choose from {', '.join(SUITES)})")
    return _Checker(trace, suites, phi, budget, window).run()


# --------------------------------------------------------------------------
# Rendering

def _span(positions: list[int]) -> str:
    if len(positions) <= 2:
        return " ".join(map(str, positions))
    return f"{positions[0]}-{positions[-1]}"


def _pairs(n: int) -> str:
    return "1 pair" if n == 1 else f"{n} pairs"


def _label(d) -> str:
    shape = prefix_shape(d)
    if shape is not None and shape[1] > 0:
        return f"<{shape[1]}"
    return str(d)


def _row_lines(st: EngineState, v: str, i: int, j: Optional[int], stage: int) -> list[str]:
    h = st.height(i, j)
    cells = []
    for k in range(geo.num_blocks(i, h)):
        e, b = geo.block_positions(h, k)
        ds = {st.psi.lookup(row_program(v, i, j, x), stage) for x in list(e) + list(b)}
        lab = _label(next(iter(ds))) if len(ds) == 1 else "?"
        cells.append(f"[{_span(list(e))}|{_span(list(b))}]:{lab}")
    return ["  " + " ".join(cells)]


def _alternation(st: EngineState, v: str, i: int, j: Optional[int], stage: int,
                 l: int, m: int) -> str:
    out = []
    for x in range(geo.row_size(i)):
        d = st.psi.lookup(row_program(v, i, j, x), stage)
        out.append("a" if d == AuxIndex(v, l) else "b" if d == AuxIndex(v, m) else "?")
    return "  " + "".join(out)


def _events(trace: Trace, i: int, j: Optional[int]):
    v = trace.variant
    if v == "grown":
        raise ValueError("block diagrams exist for the grid and ladder variants only")
    if i > 8:
        raise ValueError("rows beyond i = 8 are too wide to draw")
    if v == "grid" and j is None:
        raise ValueError("the grid variant needs a row j")
    cfg = trace.config
    st = EngineState.fresh(v, cfg.get("rflag_scope", "trigger-row"), cfg.get("detail_limit", 6))
    yield "init", 0, st, None
    for rec in trace.records:
        hit = None
        for eff in rec.effects:
            if eff["op"] == "tflag":
                f = eff["flag"]
                if f[0] == i and (v != "grid" or f[1] == j):
                    hit = ("t", eff)
            elif eff["op"] == "rflag" and eff["i"] == i:
                if v != "grid" or eff["j"] == j or cfg.get("rflag_scope") == "all-rows":
                    hit = ("r", eff)
        for eff in rec.effects:
            st.apply(eff, rec.stage)
        st.stage = rec.stage + 1
        if hit is not None:
            yield hit[0], rec.stage, st, hit[1]


def render_blocks(trace: Trace, i: int, j: Optional[int] = None) -> str:
    """Text diagram of how the classes of one row evolve.

    One entry per event touching the row: the initial layout, each
    translation flag (a merge), and a refutation (the alternation of the
    two aux functions, ``a`` for the E-side and ``b`` for the E-bar-side).
    Each block is drawn ``[E positions|E-bar positions]:<length``.
    """
    v = trace.variant
    name = f"({i}, {j})" if v == "grid" else f"{i}"
    lines = [f"row {name}: {geo.row_size(i)} programs, positions 0-{geo.row_size(i) - 1}"]
    for kind, stage, st, eff in _events(trace, i, j):
        shown = 0 if kind == "init" else stage + 1
        if kind == "init":
            lines.append(f"stage 0 init: {_pairs(st.num(i, j))}")
            lines += _row_lines(st, v, i, j, 0)
        elif kind == "t":
            lines.append(f"stage {stage} t-flag l={eff['flag'][-1]}: {_pairs(st.num(i, j))}")
            lines += _row_lines(st, v, i, j, shown)
        else:
            p, q = unpair(eff["x"])
            lines.append(f"stage {stage} r-flag via pair ({p}, {q}): a=alpha_{eff['l']} b=alpha_{eff['m']}")
            lines.append(_alternation(st, v, i, j, shown, eff["l"], eff["m"]))
    return "\n".join(lines) + "\n"


_PALETTE = ("#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948",
            "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac")


def render_svg(trace: Trace, i: int, j: Optional[int] = None, cell: int = 18) -> str:
    """The same evolution as :func:`render_blocks`, one band per event, with
    programs coloured by class."""
    v = trace.variant
    width = geo.row_size(i)
    bands = []
    for kind, stage, st, eff in _events(trace, i, j):
        shown = 0 if kind == "init" else stage + 1
        classes: dict = {}
        colours = []
        for x in range(width):
            d = st.psi.lookup(row_program(v, i, j, x), shown)
            if kind != "r":
                k, bar = geo.block_of(x, st.height(i, j))
                d = (d, bar)
            colours.append(classes.setdefault(d, len(classes)))
        bands.append((f"stage {stage} {kind}", colours))
    h = (len(bands) * 2 + 1) * cell
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{(width + 10) * cell}" height="{h}">']
    for row, (label, colours) in enumerate(bands):
        y = (2 * row + 1) * cell
        for x, c in enumerate(colours):
            out.append(f'<rect x="{x * cell}" y="{y}" width="{cell - 2}" height="{cell - 2}" '
                       f'fill="{_PALETTE[c % len(_PALETTE)]}"/>')
        out.append(f'<text x="{(width + 1) * cell}" y="{y + cell - 4}" font-size="{cell - 6}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
