import re
from pathlib import Path

import pytest

from helpers import ALL_FIXTURES, compile_text, compiled, fixture_text
from wfcheck.dsl import parse_workflow
from wfcheck.promela import (
    EmitConfig, emit_files, emit_ltl, emit_model_source, emit_pattern_library, spin_available,
    syntax_check, verify,
)

DATA = Path(__file__).parent / "data"
GOLDEN = "travel_agency.wf"


def inline_blocks(text: str) -> dict:
    """name -> full text of each ``inline`` definition, trailing whitespace stripped."""
    out = {}
    lines = [ln.rstrip() for ln in text.splitlines()]
    i = 0
    while i < len(lines):
        m = re.match(r"inline (\w+)\(", lines[i])
        if not m:
            i += 1
            continue
        depth, j, block = 0, i, []
        while True:
            block.append(lines[j])
            depth += lines[j].count("{") - lines[j].count("}")
            j += 1
            if depth == 0:
                break
        out[m.group(1)] = "\n".join(block)
        i = j
    return out


def squash(text: str) -> str:
    return re.sub(r"\s+", "", text)


@pytest.mark.parametrize("name", ["send", "recv", "parallelSplit", "exclusiveChoice"])
def test_library_matches_reference_exactly(name):
    ref = inline_blocks((DATA / "reference_inlines.pr").read_text())
    got = inline_blocks(emit_pattern_library())
    assert got[name] == ref[name]


def test_library_contents():
    lib = emit_pattern_library()
    assert set(inline_blocks(lib)) >= {"send", "recv", "parallelSplit", "synchronization",
                                       "exclusiveChoice", "cancelCase", "simpleMerge2"}
    assert "#define MAXARRAYSIZE 16" in lib
    assert "#define MAXARRAYSIZE 4" in emit_pattern_library(EmitConfig(max_array_size=4))


def test_golden_globals_and_dispatcher():
    src = emit_model_source(compiled(GOLDEN))
    ref = (DATA / "reference_travel_agency_head.pr").read_text()
    decls = [d for d in squash(ref).split(";") if d.startswith(("chan", "int"))]
    got = squash(src)
    pos = 0
    for d in decls:  # in order, each exactly once
        assert got.count(d + ";") == 1, d
        assert got.index(d + ";") >= pos
        pos = got.index(d + ";")
    dispatcher = ref[ref.index("proctype myRun"):]
    assert squash(dispatcher) in got
    assert '#include "utils.pr"' in src


def test_golden_proctypes_and_init():
    src = emit_model_source(compiled(GOLDEN))
    names = re.findall(r"^proctype (\w+)\(", src, re.M)
    assert names == ["myRun", "Book", "BookFlight", "BookHotel", "ChargeBuyer", "SendFailure"]
    init = src[src.index("init{"):]
    assert re.findall(r"run (\w+)\(\)", init) == ["Book", "ChargeBuyer", "SendFailure"]
    assert "piIds[0]=-1;" in init
    assert "cancelCase(qsCancel,4,piIds,cc_msgs,1);" in src
    assert "unless { len(qsCancel[1])>0;" in src


def test_observation_modes_in_emission():
    flags = emit_model_source(compiled(GOLDEN, "flags"))
    scalar = emit_model_source(compiled(GOLDEN, "scalar"))
    none = emit_model_source(compiled(GOLDEN, "none"))
    assert "done[3]=1" in flags and "s=3" in scalar
    assert "done[" not in none and not re.search(r"\bs=\d", none)
    assert emit_ltl(compiled(GOLDEN, "none")).strip() == "" or "ltl" not in emit_ltl(
        compiled(GOLDEN, "none"))


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_emission_is_idempotent(name, tmp_path):
    cw = compiled(name)
    a = emit_files(cw, str(tmp_path / "a"))
    b = emit_files(compile_text(fixture_text(name)), str(tmp_path / "b"))
    assert [Path(x).name for x in a] == [Path(x).name for x in b]
    assert len(a) == 3
    for x, y in zip(a, b):
        assert Path(x).read_bytes() == Path(y).read_bytes()


def test_empty_workflow():
    cw = compile_text("workflow Empty {\n}\n")
    src = emit_model_source(cw)
    assert "init{" in src and "proctype" not in src


# -- optional SPIN cross-check -----------------------------------------------------


spin = pytest.mark.skipif(not spin_available(), reason="SPIN_BIN not set")


@spin
@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_spin_accepts_emitted_files(name):
    cw = compiled(name)
    r = syntax_check(emit_model_source(cw) + emit_ltl(cw), emit_pattern_library())
    assert r.ok, r.output


@spin
@pytest.mark.parametrize("name, errors", [(GOLDEN, True), ("travel_agency_repaired.wf", False)])
def test_spin_deadlock_agrees(name, errors):
    cw = compiled(name)
    r = verify(emit_model_source(cw), emit_pattern_library())
    assert r.ok and (r.errors > 0) == errors, r.output
