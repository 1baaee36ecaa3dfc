"""Built-in scripted instances with their expected outcomes.

Each scenario builds its own programming system, runs what it needs and
returns a :class:`ScenarioResult` holding one line per expectation, the
traces it produced and any rendered output.  Everything is a pure
function of the scenario name.
"""
from __future__ import annotations

import random
from math import isqrt
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

from . import geometry as geo
from .aux import AuxNumbering
from .engines import Engine, RunConfig, companion_ceer, counterexample_t, final_state
from .kernel import (AuxIndex, Distinct, Equal, FiniteConstant, TotalConstant, EMPTY,
                     ext_equal, pair, prefix_shape)
from .machine import FunctionScript, Phi, ScriptedBackend, enumeration_script
from .numbering import (Eps, FunctionTranslation, MachineTranslation, check_translation)
from .records import Trace, serialize
from .reductions import (Finite, FiniteSet, Infinite, PredicateSet,
                         backward_translation, ceer_from_roundtrip, friedberg_equiv_decider,
                         friedberg_from_decider, refine_family, table_oracle, ties_check,
                         translation_from_ceer_fn)
from .ceer import CeerBuilder
from .trace import check, render_blocks


@dataclass
class ScenarioResult:
    name: str
    checks: list = field(default_factory=list)     # (description, passed)
    traces: dict = field(default_factory=dict)     # label -> Trace
    rendered: dict = field(default_factory=dict)   # label -> text

    @property
    def ok(self) -> bool:
        return bool(self.checks) and all(passed for _, passed in self.checks)

    def expect(self, description: str, passed: bool) -> bool:
        self.checks.append((description, bool(passed)))
        return bool(passed)

    def lines(self) -> list[str]:
        return [f"{'PASS' if passed else 'FAIL'} {desc}" for desc, passed in self.checks]

    def report(self) -> str:
        return f"scenario {self.name}\n" + "\n".join(self.lines()) + "\n"

    def fingerprint(self) -> str:
        """Everything the scenario produced, as one string."""
        parts = [self.report()]
        for label in sorted(self.traces):
            parts.append(f"-- trace {label}\n" + serialize(self.traces[label]))
        for label in sorted(self.rendered):
            parts.append(f"-- rendered {label}\n" + self.rendered[label])
        return "".join(parts)


def scripted_phi(scripts: dict) -> Phi:
    """Every index scripted; indices without a script are nowhere defined."""
    return Phi(ScriptedBackend(1, 0, scripts))


def _scripted_config(variant: str, horizon: int, **kw) -> RunConfig:
    return RunConfig(variant=variant, horizon=horizon, script_modulus=1, script_floor=0, **kw)


def _run(variant: str, horizon: int, scripts: dict, **kw):
    phi = scripted_phi(scripts)
    eng = Engine(_scripted_config(variant, horizon, **kw), phi)
    return eng, eng.run()


def _onto() -> FunctionScript:
    return FunctionScript(lambda x: (x, 0), "identity")


def _flag_stages(trace: Trace, op: str) -> list:
    return [(rec.stage, eff) for rec in trace.records for eff in rec.effects if eff["op"] == op]


def golden_text(name: str) -> str:
    return resources.files("mineps").joinpath("golden", name).read_text(encoding="utf-8")


# --------------------------------------------------------------------------
# Block evolution of one ladder row

LADDER_BLOCKS_ROW = 3


def ladder_blocks_run():
    """Row 3 is merged twice (by phi_0, then phi_1), then W_3 reveals a pair
    crossing block 0 at height 2."""
    i = LADDER_BLOCKS_ROW
    base = geo.ladder_program(i, 0)
    sweep = FunctionScript(lambda x: (base + 2 * x, 0), "row-sweep")
    crossing = pair(geo.ladder_program(i, 0), geo.ladder_program(i, 4))
    scripts = {0: sweep, 1: FunctionScript(lambda x: (base + 2 * x, 0), "row-sweep"),
               i: enumeration_script([(crossing, 0)], "crossing")}
    return _run("ladder", 3000, scripts)


def scenario_ladder_blocks() -> ScenarioResult:
    res = ScenarioResult("ladder-blocks")
    eng, trace = ladder_blocks_run()
    res.traces["ladder"] = trace
    i = LADDER_BLOCKS_ROW
    flags = [eff["flag"] for _, eff in _flag_stages(trace, "tflag") if eff["flag"][0] == i]
    res.expect("row 3 receives exactly two translation flags, from phi_0 then phi_1",
               flags == [[i, 0], [i, 1]])
    rflags = [eff for _, eff in _flag_stages(trace, "rflag") if eff["i"] == i]
    res.expect("W_3 is refuted once, on block 0", len(rflags) == 1 and rflags[0]["k"] == 0)
    text = render_blocks(trace, i)
    res.rendered["row-3"] = text
    counts = [line.split(": ")[1] for line in text.splitlines() if line.startswith("stage") and "pairs" in line]
    res.expect("classes progress 8 -> 4 -> 2 pairs", counts == ["8 pairs", "4 pairs", "2 pairs"])
    res.expect("final line alternates alpha_l and alpha_m in runs of 4",
               text.splitlines()[-1].strip() == "aaaabbbbaaaabbbb")
    res.expect("diagram matches the golden file byte for byte", text == golden_text("ladder_blocks.txt"))
    res.expect("trace passes every invariant suite", check(trace, "all", phi=eng.phi).ok)
    return res


# --------------------------------------------------------------------------
# Refutation of a candidate ceer

def _refute_checks(res: ScenarioResult, eng: Engine, trace: Trace, i: int, p: int, q: int) -> None:
    st = final_state(trace)
    hits = [eff for _, eff in _flag_stages(trace, "rflag") if eff["i"] == i]
    if not res.expect(f"R-flag for W_{i} fires", len(hits) == 1):
        return
    eff = hits[0]
    res.expect(f"the trigger is the injected pair ({p}, {q})", (eff["p"], eff["q"]) == (p, q))
    l, m = eff["l"], eff["m"]
    sep = AuxNumbering(trace.variant, eng.phi).separate(l, m, 64)
    res.expect(f"aux indices {l} and {m} are provably distinct (witness input {getattr(sep, 'witness', None)})",
               isinstance(sep, Distinct))
    dp, dq = st.psi.lookup(p, st.stage), st.psi.lookup(q, st.stage)
    res.expect(f"program {p} holds alpha_{l} and program {q} holds alpha_{m}",
               dp == AuxIndex(trace.variant, l) and dq == AuxIndex(trace.variant, m))
    res.expect("hence the injected pair is outside Equiv(psi)",
               isinstance(ext_equal(dp, dq, 64, eng.env), Distinct))
    res.expect("trace passes every invariant suite", check(trace, "all", phi=eng.phi).ok)


def scenario_grid_refute(scope: str = "trigger-row") -> ScenarioResult:
    name = "grid-refute" if scope == "trigger-row" else "grid-refute-all-rows"
    res = ScenarioResult(name)
    i = 1
    p, q = geo.grid_program(i, 0, 0), geo.grid_program(i, 0, 1)
    eng, trace = _run("grid", 400, {i: enumeration_script([(pair(p, q), 0)])}, rflag_scope=scope)
    res.traces["grid"] = trace
    _refute_checks(res, eng, trace, i, p, q)
    if scope == "all-rows":
        st = final_state(trace)
        far = geo.grid_program(i, 5, 0)
        res.expect("all-rows scope reassigns rows beyond the trigger row",
                   st.psi.lookup(far, st.stage) == st.psi.lookup(p, st.stage))
        res.expect("the overwrite is logged", len(st.overwrites) == 1)
    return res


def scenario_ladder_refute() -> ScenarioResult:
    res = ScenarioResult("ladder-refute")
    i = 2
    p, q = geo.ladder_program(i, 0), geo.ladder_program(i, 1)
    eng, trace = _run("ladder", 1500, {i: enumeration_script([(pair(p, q), 0)])})
    res.traces["ladder"] = trace
    _refute_checks(res, eng, trace, i, p, q)
    return res


def scenario_grown_refute() -> ScenarioResult:
    """phi_0 and phi_1 are onto, so E_2 and E-bar_2 grow twice each; W_2
    then reveals a pair crossing them."""
    res = ScenarioResult("grown-refute")
    i = 2
    a0, a1 = 3 * pair(i, 0), 3 * pair(i, 1)
    crossing = pair(a0, a0 + 1)
    reveal_step = 600
    eng, trace = _run("grown", 1500, {0: _onto(), 1: _onto(),
                                      i: enumeration_script([(crossing, reveal_step)])})
    res.traces["grown"] = trace
    hits = [(s, eff) for s, eff in _flag_stages(trace, "rflag") if eff["i"] == i]
    if not res.expect(f"R-flag for W_{i} fires", len(hits) == 1):
        return res
    s_flag, eff = hits[0]
    res.expect("the flag waits for the injected pair", s_flag > reveal_step)
    # state just before the flag
    pre = Trace(trace.variant, trace.config, trace.records[:s_flag])
    st0 = final_state(pre)
    E, Ebar = st0.E.get(i, []), st0.Ebar.get(i, [])
    res.expect(f"E_{i} = {E} and E-bar_{i} = {Ebar} are nonempty", E == [a0, a1] and Ebar == [a0 + 1, a1 + 1])
    ds = {st0.psi.lookup(x, s_flag) for x in E + Ebar}
    shape = prefix_shape(next(iter(ds))) if len(ds) == 1 else None
    res.expect(f"before the flag all of them hold one constant-{i} prefix ({', '.join(map(str, ds))})",
               shape is not None and shape[0] == i)
    st = final_state(trace)
    k, l = eff["l"], eff["m"]
    fam = trace.variant
    res.expect(f"after the flag E_{i} holds alpha_{k} and E-bar_{i} holds alpha_{l}",
               all(st.psi.lookup(x, st.stage) == AuxIndex(fam, k) for x in E)
               and all(st.psi.lookup(x, st.stage) == AuxIndex(fam, l) for x in Ebar))
    sep = AuxNumbering(fam, eng.phi).separate(k, l, 64)
    res.expect(f"alpha_{k} and alpha_{l} are provably distinct", isinstance(sep, Distinct))
    fresh = [rec for rec in trace.records if rec.stage == s_flag][0]
    totals = [e for e in fresh.effects
              if e["op"] == "rule" and e["rule"].get("d") == str(TotalConstant(i))]
    res.expect(f"a fresh program receives the total constant {i}", len(totals) == 1)
    res.expect(f"E_{i} stops growing", st.E[i] == E and st.Ebar[i] == Ebar)
    res.expect("trace passes every invariant suite", check(trace, "all", phi=eng.phi).ok)
    return res


# --------------------------------------------------------------------------
# Counterexample translations

def _avoid_checks(res: ScenarioResult, trace: Trace, t, E0: set, R: CeerBuilder, window: int) -> None:
    image = {t(q) for q in range(window)}
    res.expect(f"rng(t) misses the E-side of block 0 ({len(E0)} programs below the window)",
               not image & E0)
    leaks = [(p, q) for p, q in R.pairs if (p in E0) != (q in E0)]
    res.expect(f"the companion ceer never relates those programs to outsiders ({len(R.pairs)} pairs)",
               not leaks)


def ladder_counterexample_run():
    i = 2
    base = geo.ladder_program(i, 0)
    return _run("ladder", 1500, {0: FunctionScript(lambda x: (base + 2 * x, 0), "row-sweep")})


def scenario_ladder_counterexample() -> ScenarioResult:
    res = ScenarioResult("ladder-counterexample")
    i = 2
    eng, trace = ladder_counterexample_run()
    res.traces["ladder"] = trace
    t = counterexample_t(trace, i)
    st = final_state(trace)
    res.expect("row 2 stabilizes at height 1", st.height(i) == 1)
    E0 = set(st.block(i, None, 0)[0])
    R = companion_ceer(trace)
    _avoid_checks(res, trace, t, E0, R, 256)
    tie = ties_check(R, lambda q, b=0: t(q), st.psi, "weak", horizon=64)
    res.expect(f"the class of E-side block 0 is among the missed classes ({tie.classes_missed})",
               min(E0) in tie.classes_missed)
    return res


def grid_counterexample_run():
    """phi_0 sweeps the rows (2, j) for even j only."""
    i = 2
    size = geo.row_size(i)
    sweep = FunctionScript(lambda x: (geo.grid_program(i, 2 * (x // size), x % size), 0), "even-rows")
    return _run("grid", 6000, {0: sweep})


def scenario_grid_counterexample() -> ScenarioResult:
    res = ScenarioResult("grid-counterexample")
    i = 2
    eng, trace = grid_counterexample_run()
    res.traces["grid"] = trace
    # J_l = rows of i ever flagged by phi_l; the harness knows them exactly.
    J = [PredicateSet(lambda j: j % 2 == 0, "even rows"), FiniteSet(set(), "no rows")]
    ref = refine_family(J, [Infinite(), Finite(-1)])
    res.expect("L = {0}", ref.L == frozenset({0}))
    res.expect("x in J_l iff l in L on the first 50 elements of X", not ref.verify(J, 50))
    flagged = {eff["flag"][1] for _, eff in _flag_stages(trace, "tflag") if eff["flag"][0] == i}
    res.expect(f"the run flags only even rows ({sorted(flagged)})",
               flagged and all(j % 2 == 0 for j in flagged))
    t = counterexample_t(trace, i, ref.X, sorted(ref.L), check_rows=8)
    X8 = [x for x in ref.X.take(4)]
    E0 = set()
    for x in X8:
        E0 |= {geo.grid_program(i, x, pos) for pos in range(1 << len(ref.L))}
    R = companion_ceer(trace, l=0)
    _avoid_checks(res, trace, t, E0, R, 4096)
    return res


# --------------------------------------------------------------------------
# Ties

def ladder_weak_tie_run():
    """phi_3 enumerates every number except program 12 (row 2, position 0)."""
    gap = geo.ladder_program(2, 0)
    skip = FunctionScript(lambda x: (x if x < gap else x + 1, 0), "all-but-12")
    return _run("ladder", 2000, {3: skip})


def scenario_ladder_weak_tie() -> ScenarioResult:
    res = ScenarioResult("ladder-weak-tie")
    eng, trace = ladder_weak_tie_run()
    res.traces["ladder"] = trace
    st = final_state(trace)
    R = companion_ceer(trace)
    t = MachineTranslation(eng.phi, 3)
    tie = ties_check(R, t, st.psi, "weak", horizon=128)
    res.expect(f"the companion ceer is a subrelation of Equiv(psi) ({tie.subrelation})",
               tie.subrelation == "holds-on-sample")
    rows = [geo.locate_ladder(p) for p in tie.classes_missed]
    res.expect(f"every missed class lies in a row i <= 3 ({tie.classes_missed})",
               tie.classes_missed and all(r is not None and r[0] <= 3 for r in rows))
    res.expect("so the tie is weak, not strong", tie.holds and not ties_check(R, t, st.psi, "strong", 128).holds)
    return res


def _halves_instance(n: int):
    psi = Eps.from_table([FiniteConstant(p // 2, 1) for p in range(2 * n)])
    theta = Eps.from_table([FiniteConstant(q, 1) for q in range(n)])
    return psi, theta


def scenario_tie_strong() -> ScenarioResult:
    """psi_p = theta_{p div 2}; t(q) = 2q translates theta into psi and
    t'(p) = p div 2 translates back."""
    res = ScenarioResult("tie-strong")
    n = 32
    psi, theta = _halves_instance(n)
    t = FunctionTranslation(lambda q: 2 * q)
    t_back = FunctionTranslation(lambda p: p // 2)
    res.expect("t translates theta into psi",
               check_translation(t, theta, psi, range(n), 0, 16).certified)
    rt = ceer_from_roundtrip(t, t_back, range(2 * n), 16)
    res.expect("the round trip is defined everywhere on the window", not rt.diverged)
    tie = ties_check(rt.R, t, psi, "strong", horizon=2 * n)
    res.expect(f"it strongly ties t ({tie.classes_checked} classes, none missed)", tie.holds)
    t2 = translation_from_ceer_fn(rt.R, t, [], 4 * n)
    rep = check_translation(t2, psi, theta, range(2 * n), 0, 16)
    res.expect(f"the translation rebuilt from the ceer certifies psi <= theta ({dict(rep.counts)})",
               rep.certified and not rep.distinct())
    return res


def scenario_tie_weak() -> ScenarioResult:
    """R pairs 2k with 2k+1 for k >= 1; t(q) = 2q + 1 misses the class {0},
    covered by the exceptional target theta_0 = psi_0."""
    res = ScenarioResult("tie-weak")
    n = 32
    psi, theta = _halves_instance(n)
    R = CeerBuilder((2 * k, 2 * k + 1) for k in range(1, n))
    t = FunctionTranslation(lambda q: 2 * q + 1)
    res.expect("t translates theta into psi", check_translation(t, theta, psi, range(n), 0, 16).certified)
    tie = ties_check(R, t, psi, "weak", horizon=2 * n)
    res.expect(f"R weakly ties t, missing exactly {tie.classes_missed}", tie.holds and tie.classes_missed == [0])
    t2 = translation_from_ceer_fn(R, t, [(0, 0)], 4 * n)
    rep = check_translation(t2, psi, theta, range(2 * n), 0, 16)
    res.expect(f"the rebuilt translation certifies psi <= theta ({dict(rep.counts)})",
               rep.certified and not rep.distinct())
    res.expect("program 0 goes to its exceptional target", t2(0) == 0)
    return res


# --------------------------------------------------------------------------
# One-to-one numberings

def random_table(rng: random.Random, size: int) -> list:
    pool = [EMPTY] + [FiniteConstant(rng.randrange(4), rng.randrange(1, 4)) for _ in range(4)] \
        + [TotalConstant(rng.randrange(4)) for _ in range(2)]
    return [rng.choice(pool) for _ in range(size)]


def friedberg_instance(psi_list: list) -> tuple[bool, str]:
    """Extract a one-to-one numbering from a table and certify both translations."""
    psi = Eps.from_table(psi_list)
    oracle = table_oracle(psi)
    fr = friedberg_from_decider(psi, oracle, len(psi_list), probe_limit=len(psi_list))
    distinct_entries = len(set(psi_list))
    if len(fr.forward) != distinct_entries or not fr.one_to_one():
        return False, "extracted numbering is not one-to-one on all distinct entries"
    fw = check_translation(fr.forward_translation(), fr.eta, psi, range(len(fr.forward)), 0, 16)
    bw = check_translation(backward_translation(oracle, fr.forward), psi, fr.eta,
                           range(len(psi_list)), 0, 16)
    if not (fw.certified and bw.certified):
        return False, "translations between psi and eta are not certified"
    # converse: deciding equivalence through the translation into eta
    back = backward_translation(oracle, fr.forward)
    for p in range(len(psi_list)):
        for q in range(len(psi_list)):
            brute = isinstance(ext_equal(psi_list[p], psi_list[q], 16), Equal)
            if friedberg_equiv_decider(back, p, q, 16) != brute:
                return False, f"decider disagrees on ({p}, {q})"
    return True, f"{len(psi_list)} programs, {len(fr.forward)} classes"


def scenario_friedberg_roundtrip() -> ScenarioResult:
    res = ScenarioResult("friedberg-roundtrip")
    for seed in range(20):
        rng = random.Random(seed)
        table = random_table(rng, rng.randrange(1, 65))
        ok, why = friedberg_instance(table)
        res.expect(f"table {seed}: {why}", ok)
    return res


# --------------------------------------------------------------------------
# Refinement

def refinement_families() -> list:
    """Ten families of decidable sets (n <= 4) with truthful hints."""
    def mod(k, r=0):
        return PredicateSet(lambda x: x % k == r, f"{r} mod {k}")

    def above(b):
        return PredicateSet(lambda x: x > b, f"> {b}")

    def fin(*xs):
        return FiniteSet(set(xs), "{" + ",".join(map(str, xs)) + "}")
    I = Infinite()
    return [
        ([mod(2), mod(3)], [I, I]),
        ([fin(1, 2)], [Finite(2)]),
        ([], []),
        ([mod(2, 1), mod(2)], [I, Finite(0)]),
        ([fin(), mod(5), above(100)], [Finite(0), I, I]),
        ([mod(3, 1), mod(3, 2), mod(3)], [I, Finite(0), Finite(0)]),
        ([fin(0, 7, 40), mod(4), mod(8), above(3)], [Finite(40), I, Finite(0), I]),
        ([PredicateSet(lambda x: x % 6 in (1, 2), "1 or 2 mod 6"), mod(2)], [I, Finite(0)]),
        ([mod(7), mod(7, 3), fin(5, 9), mod(2)], [I, Finite(0), Finite(9), I]),
        ([PredicateSet(lambda x: isqrt(x) ** 2 == x, "squares"), mod(4), mod(3, 1), mod(2, 1)],
         [I, I, I, Finite(0)]),
    ]


def scenario_refinement() -> ScenarioResult:
    res = ScenarioResult("refinement")
    for n, (J, hints) in enumerate(refinement_families()):
        ref = refine_family(J, hints)
        bad = ref.verify(J, 50)
        res.expect(f"family {n}: L = {sorted(ref.L)}, x in J_l iff l in L on 50 elements",
                   not bad)
        res.expect(f"family {n}: the chain X_0 ⊇ ... ⊇ X_{len(J)} is nested", ref.chain_nested(50))
    return res


# --------------------------------------------------------------------------
# Invariant battery with mixed adversaries

def battery_config(variant: str, horizon: int = 10_000) -> RunConfig:
    return RunConfig(variant=variant, horizon=horizon, script_modulus=5, script_floor=0)


def battery_phi() -> Phi:
    """Indices divisible by 5 are scripted, the rest run as register machines."""
    scripts = {
        0: _onto(),
        5: FunctionScript(lambda x: (2 * x, 0), "evens"),
        10: FunctionScript(lambda x: (x * x, x), "slow squares"),
        15: enumeration_script([(pair(geo.grid_program(1, 0, 0), geo.grid_program(1, 0, 1)), 50),
                                (pair(geo.ladder_program(1, 0), geo.ladder_program(1, 1)), 50)],
                               "crossing"),
    }
    return Phi(ScriptedBackend(5, 0, scripts))


def battery_run(variant: str, horizon: int = 10_000):
    eng = Engine(battery_config(variant, horizon), battery_phi())
    return eng, eng.run()


def scenario_battery(variant: str) -> ScenarioResult:
    res = ScenarioResult(f"battery-{variant}")
    eng, trace = battery_run(variant)
    res.traces[variant] = trace
    report = check(trace, "all", phi=eng.phi)
    for line in report.lines():
        res.expect(line, not line.split(": ", 1)[1].startswith("fail"))
    res.expect("at least one R-flag and one translation flag fire",
               _flag_stages(trace, "rflag") and _flag_stages(trace, "tflag"))
    return res


SCENARIOS: dict[str, Callable[[], ScenarioResult]] = {
    "ladder-blocks": scenario_ladder_blocks,
    "grid-refute": scenario_grid_refute,
    "grid-refute-all-rows": lambda: scenario_grid_refute("all-rows"),
    "ladder-refute": scenario_ladder_refute,
    "grown-refute": scenario_grown_refute,
    "grid-counterexample": scenario_grid_counterexample,
    "ladder-counterexample": scenario_ladder_counterexample,
    "ladder-weak-tie": scenario_ladder_weak_tie,
    "tie-strong": scenario_tie_strong,
    "tie-weak": scenario_tie_weak,
    "friedberg-roundtrip": scenario_friedberg_roundtrip,
    "refinement": scenario_refinement,
    "battery-grid": lambda: scenario_battery("grid"),
    "battery-ladder": lambda: scenario_battery("ladder"),
    "battery-grown": lambda: scenario_battery("grown"),
}


def run_scenario(name: str) -> ScenarioResult:
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r} (choose from {', '.join(SCENARIOS)})")
    return SCENARIOS[name]()
