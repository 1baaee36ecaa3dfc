import copy

import pytest

from mineps import geometry as geo
from mineps.engines import final_state, row_program
from mineps.kernel import FiniteConstant
from mineps.numbering import Explicit
from mineps.records import Trace
from mineps.scenarios import battery_run, golden_text, ladder_blocks_run
from mineps.trace import SUITES, check, render_blocks, render_svg


@pytest.fixture(scope="module")
def healthy():
    out = {}
    for v, horizon in (("ladder", 3000), ("grid", 3000), ("grown", 1500)):
        eng, trace = battery_run(v, horizon)
        out[v] = (trace, eng.phi)
    return out


def _copy(trace):
    return Trace(trace.variant, dict(trace.config), copy.deepcopy(trace.records))


def _effects(trace, op):
    return [(rec, eff) for rec in trace.records for eff in rec.effects if eff["op"] == op]


@pytest.mark.parametrize("variant", ["ladder", "grid", "grown"])
def test_healthy_traces_pass(healthy, variant):
    trace, phi = healthy[variant]
    report = check(trace, "all", phi=phi)
    assert report.ok, report.text()


# --------------------------------------------------------------------------
# Planted faults: each breaks exactly one suite

def plant_dst_empty(trace):
    t = _copy(trace)
    rec, eff = _effects(t, "dst_take")[0]
    eff["first"][0] = 0          # program 0 is a row program, never Empty
    return t


def plant_merge_law(trace):
    t = _copy(trace)
    rec, eff = next((r, e) for r, e in _effects(t, "merge") if e["blocks"])
    e, b = eff["blocks"][0]
    eff["blocks"][0] = [b, e]
    return t


def plant_monotonicity(trace):
    t = _copy(trace)
    removes = _effects(t, "src_remove")
    first, later = removes[0][1], removes[1][1]
    later["values"] = list(later["values"]) + [first["values"][0]]
    return t


def plant_flag_shape(trace):
    t = _copy(trace)
    rec, eff = _effects(t, "tflag")[0]
    eff["flag"][-1] = eff["flag"][0] + 3
    return t


def plant_graph_monotone(trace):
    """An early Explicit rule on a row program, later contradicted by that row's R-flag."""
    t = _copy(trace)
    rec_r, eff_r = _effects(t, "rflag")[-1]
    i = eff_r["i"]
    j = eff_r.get("j")
    p = row_program(t.variant, i, j, 0)
    rec = next(r for r in t.records if r.fired and r.stage < rec_r.stage)
    rec.effects.append({"op": "rule", "rule": Explicit(rec.stage + 1, p, FiniteConstant(999, 1)).to_dict()})
    return t


def plant_eset_monotone(trace):
    t = _copy(trace)
    rec, eff = _effects(t, "e_grow")[0]
    rec.effects.insert(rec.effects.index(eff) + 1, dict(eff))
    return t


def plant_claims(trace):
    """Stretch one program of an unrefuted row beyond its block length."""
    t = _copy(trace)
    st = final_state(t)
    i = next(i for i in range(1, st.detail_limit + 1) if i not in st.r_flags)
    j = 0 if t.variant == "grid" else None
    p = row_program(t.variant, i, j, 0)
    h = st.height(i, j)
    rec = [r for r in t.records if r.fired][-1]
    value = i if t.variant == "ladder" else geo.pair(i, j)
    rec.effects.append({"op": "rule", "rule": Explicit(rec.stage + 1, p, FiniteConstant(value, (2 << h) + 1)).to_dict()})
    return t


PLANTS = [
    ("ladder", "dst-empty", plant_dst_empty),
    ("grid", "dst-empty", plant_dst_empty),
    ("ladder", "merge-law", plant_merge_law),
    ("grid", "merge-law", plant_merge_law),
    ("ladder", "monotonicity", plant_monotonicity),
    ("grown", "monotonicity", plant_monotonicity),
    ("ladder", "flag-shape", plant_flag_shape),
    ("grid", "flag-shape", plant_flag_shape),
    ("ladder", "graph-monotone", plant_graph_monotone),
    ("grid", "graph-monotone", plant_graph_monotone),
    ("grown", "eset-monotone", plant_eset_monotone),
    ("ladder", "claims", plant_claims),
    ("grid", "claims", plant_claims),
]


@pytest.mark.parametrize("variant, suite, plant", PLANTS, ids=[f"{v}-{s}" for v, s, _ in PLANTS])
def test_planted_fault_trips_only_its_suite(healthy, variant, suite, plant):
    trace, phi = healthy[variant]
    report = check(plant(trace), "all", phi=phi)
    assert report.failed() == [suite], report.text()


def test_suite_selection(healthy):
    trace, phi = healthy["ladder"]
    report = check(trace, "dst-empty,merge-law")
    assert list(report.results) == ["dst-empty", "merge-law"]
    report = check(trace, ["claims"])
    assert "without a machine" in report.results["claims"].detail
    with pytest.raises(ValueError, match="unknown suite"):
        check(trace, "dst-empty,bogus")


def test_skipped_suites_are_reported(healthy):
    trace, _ = healthy["grown"]
    lines = check(trace, "all").lines()
    assert any(line.startswith("merge-law: skip") for line in lines)
    trace, _ = healthy["ladder"]
    assert check(trace, "all").results["eset-monotone"].status == "skip"
    assert set(check(trace).results) == set(SUITES)


# --------------------------------------------------------------------------
# Rendering

@pytest.fixture(scope="module")
def ladder_blocks():
    return ladder_blocks_run()[1]


def test_render_matches_golden(ladder_blocks):
    assert render_blocks(ladder_blocks, 3) == golden_text("ladder_blocks.txt")


def test_render_untouched_row(ladder_blocks):
    text = render_blocks(ladder_blocks, 2)
    assert text.splitlines()[0] == "row 2: 8 programs, positions 0-7"
    assert text.splitlines()[1] == "stage 0 init: 4 pairs"
    assert len(text.splitlines()) == 3


def test_render_svg(ladder_blocks):
    svg = render_svg(ladder_blocks, 3)
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert svg.count("<rect") >= 16


def test_render_errors(healthy, ladder_blocks):
    with pytest.raises(ValueError):
        render_blocks(ladder_blocks, 9)
    with pytest.raises(ValueError):
        render_blocks(healthy["grown"][0], 1)
    with pytest.raises(ValueError):
        render_blocks(healthy["grid"][0], 1)
