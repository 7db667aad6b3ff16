import json
import subprocess
import sys

import pytest

from helpers import ALL_FIXTURES, FIXTURES, GOLDEN, MUTANTS, REPAIRED, fixture_text, mutate
from wfcheck.cli import main

EXPECTED = {name: 0 for name in ALL_FIXTURES} | {GOLDEN.name: 3}
MUTANT_EXPECTED = {"golden-nofail": 1, "golden-split": 1, "repaired-split": 1}


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_exit_codes_on_fixtures(capsys, name):
    code, out, err = run(capsys, "check", FIXTURES / name)
    doc = json.loads(out)
    assert code == EXPECTED[name] == doc["exitCode"]
    assert doc["verdicts"][0]["property"] == "deadlock"
    assert err == ""


@pytest.mark.parametrize("key", sorted(MUTANT_EXPECTED))
def test_exit_codes_on_mutants(capsys, tmp_path, key):
    path = tmp_path / f"{key}.wf"
    path.write_text(MUTANTS[key]())
    code, out, _ = run(capsys, "check", path)
    doc = json.loads(out)
    assert code == MUTANT_EXPECTED[key]
    objective = next(v for v in doc["verdicts"] if v["property"] == "objective")
    assert objective["outcome"] == "VIOLATED" and objective["trace"]["steps"]


def test_objective_flags_exit_zero(capsys):
    code, out, _ = run(capsys, "check", GOLDEN, "--prop", "objective", "--mode", "flags")
    assert code == 0
    (v,) = json.loads(out)["verdicts"]
    assert v["outcome"] == "HOLDS" and v["vacuous"] is False


def test_response_scalar_is_vacuous(capsys):
    code, out, _ = run(capsys, "check", GOLDEN, "--prop", "response", "--mode", "scalar")
    assert code == 0
    (v,) = json.loads(out)["verdicts"]
    assert v["outcome"] == "HOLDS" and v["vacuous"] is True
    assert {"p": True, "q": True} not in v["vacuity"]["valuationsSeen"]


def test_inline_formula_and_fairness(capsys):
    code, out, _ = run(capsys, "check", REPAIRED, "--prop-formula", "<> (reached_1 || reached_2)", "--fair",
                       "--deadlock")
    doc = json.loads(out)
    assert code == 0 and doc["fairness"] is True
    assert [v["property"] for v in doc["verdicts"]] == ["deadlock", "<> (reached_1 || reached_2)"]


def test_bfs_safety_gives_a_trace(capsys):
    code, out, _ = run(capsys, "check", GOLDEN, "--prop", "objective", "--deadlock",
                       "--bfs-safety")
    assert code == 3
    dead = json.loads(out)["verdicts"][0]
    assert dead["outcome"] == "DEADLOCK" and dead["trace"]["steps"]


@pytest.mark.parametrize("argv", [
    ["check", "missing.wf"],
    ["check", GOLDEN, "--prop", "nosuch"],
    ["check", GOLDEN, "--max-states", "0"],
    ["check", GOLDEN, "--prop-formula", "[] (p &&"],
    ["check", GOLDEN, "--mode", "bogus"],
    ["frobnicate", GOLDEN],
])
def test_usage_errors_exit_two(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == "" and err


@pytest.mark.parametrize("old, new", [
    ("process ChargeBuyer {", "process ChargeBuyer"),
    ("id 1 parent 0", "id 1 parent 3"),
])
def test_model_errors_exit_two_with_diagnostics(capsys, tmp_path, old, new):
    path = tmp_path / "bad.wf"
    path.write_text(mutate(fixture_text(GOLDEN.name), old, new))
    code, out, err = run(capsys, "check", path)
    assert code == 2 and out == ""
    assert err.startswith(str(path) + ":")


def test_limit_warning_goes_to_stderr(capsys):
    code, out, err = run(capsys, "check", REPAIRED, "--max-states", "50")
    assert "search limit reached" in err
    assert json.loads(out)["verdicts"][0]["limitExceeded"] is True


def test_emit_writes_three_files_idempotently(capsys, tmp_path):
    code, out, err = run(capsys, "emit", GOLDEN, "-o", tmp_path / "a")
    assert code == 0 and err == ""
    paths = out.split()
    assert sorted(p.rsplit(".", 1)[1] for p in paths) == ["ltl", "pml", "pr"]
    first = {p: open(p, "rb").read() for p in paths}
    run(capsys, "emit", GOLDEN, "-o", tmp_path / "a")
    assert {p: open(p, "rb").read() for p in paths} == first


def test_emit_array_size_too_small(capsys, tmp_path):
    code, out, err = run(capsys, "emit", GOLDEN, "--max-array-size", "2", "-o", tmp_path)
    assert code == 2 and out == ""
    assert "sizeq 4" in err and "MAXARRAYSIZE 2" in err
    assert not list(tmp_path.iterdir())


def test_simulate_is_byte_identical(capsys):
    a = run(capsys, "simulate", GOLDEN, "--seed", "7")
    b = run(capsys, "simulate", GOLDEN, "--seed", "7")
    assert a == b and a[1].splitlines()[-1].startswith("end: ")


def test_simulate_deadlocking_fixture_exits_three(capsys):
    code, out, _ = run(capsys, "simulate", GOLDEN, "--seed", "1")
    assert code == 3 and "invalid end state" in out


def _outcome(last: str) -> str:
    done = last.split("done: ")[1].split(";")[0]
    blocked = last.split("blocked: ")[1] if "blocked: " in last else ""
    if "ChargeBuyer" in done and "SendFailure" not in done:
        return "success" + ("" if not blocked else f" ({blocked} blocked)")
    if "SendFailure" in done and "ChargeBuyer" not in done:
        return "cancelled" + ("" if not blocked else f" ({blocked} blocked)")
    return "other"


@pytest.mark.parametrize("path, allowed", [
    (GOLDEN, {"success (SendFailure[3] blocked)", "cancelled (ChargeBuyer[2] blocked)"}),
    (REPAIRED, {"success", "cancelled"}),
])
def test_simulation_outcomes_over_1000_seeds(capsys, path, allowed):
    """Every run ends in the success path or a cancel path ending in SendFailure.

    On the literal model the notifier of the path not taken is left blocked
    (an invalid end state); the repaired model ends cleanly.
    """
    from wfcheck.checker import simulate
    from wfcheck.cli import final_summary
    from wfcheck.dsl import compile_to_kernel, load_workflow
    m = compile_to_kernel(load_workflow(path)).model
    seen = set()
    for seed in range(1000):
        r = simulate(m, seed)
        assert r.finished
        seen.add(_outcome(final_summary(m, r.final)))
    assert seen == allowed
    code, out, _ = run(capsys, "simulate", path, "--seed", "999")
    assert _outcome(out.splitlines()[-1]) in allowed


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "wfcheck", "check", str(REPAIRED), "--prop",
                        "objective"], capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["exitCode"] == 0
