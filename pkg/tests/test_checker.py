import hashlib
import json
from pathlib import Path

import pytest

from equivalence import compare_case
from helpers import compiled, fixture_text, graph_of, reach_of
from oracles import bfs, invalid_end_states
from test_kernel import c, model
from wfcheck.checker import (
    DEADLOCK, HOLDS, MODEL_ERROR, VIOLATED, Limits, ShapeUnsupported, Trace, TraceReplayError,
    check_deadlock, check_ltl_property, detect_vacuity, explore, format_counterexample,
    replay, simulate,
)
from wfcheck.checker.search import BACKEND, accepting_scc, backend, ndfs
from wfcheck.kernel import (
    Assign, BinOp, ChannelDecl, GlobalDecl, Recv, Send, Skip, Template, Var, canonical_state_digest,
)
from wfcheck.ltl import Not, ltl_to_buchi, normalize_negation, parse_formula

GOLDEN, REPAIRED = "travel_agency.wf", "travel_agency_repaired.wf"


def ltl(key, prop, mode="flags", fair=False, **kw):
    cw, g = graph_of(key, mode)
    f, table = cw.properties[prop]
    return check_ltl_property(cw.model, f, props=table, fair=fair, graph=g, name=prop, **kw)


def counter_model():
    """x = 1; x = 2 and then stop: three states, the last one stutters."""
    m = model(Template("P", (), (Assign(Var("x"), c(1)), Assign(Var("x"), c(2)))),
              globals_=[GlobalDecl("x")])
    return m, {"p": lambda st: m.read_global(st, "x") == 2,
               "z": lambda st: m.read_global(st, "x") == 0}


# -- reachability and deadlock -------------------------------------------------


FROZEN = json.loads((Path(__file__).parent / "golden_counts.json").read_text())


def model_digest(cw) -> str:
    return hashlib.sha256(repr(cw.source).encode()).hexdigest()


@pytest.mark.parametrize("key", sorted(FROZEN))
def test_frozen_state_counts(key):
    """Counts recorded on the first full run; the digest pins the model they belong to."""
    name, mode = key.split("/")
    want = FROZEN[key]
    cw = compiled(name, mode)
    assert model_digest(cw) == want["modelDigest"], "model changed: re-record golden_counts.json"
    g = explore(cw.model) if mode == "none" else graph_of(name, mode)[1]
    assert (len(g.states), g.transition_count) == (want["states"], want["transitions"])
    assert g.complete and g.check_digests() == want["states"]


@pytest.mark.parametrize("mode", ["flags", "scalar"])
def test_golden_count_matches_oracle(mode):
    r = bfs(compiled(GOLDEN, mode).model)
    assert len(r.states) == FROZEN[f"{GOLDEN}/{mode}"]["states"]
    assert r.edges == FROZEN[f"{GOLDEN}/{mode}"]["transitions"]


def test_receive_that_is_never_sent_deadlocks():
    m = model(Template("P", (), (Recv(Var("q"), Var("x")),)),
              globals_=[GlobalDecl("x")], channels=[ChannelDecl("q")])
    v = check_deadlock(m)
    assert v.outcome == DEADLOCK and v.states_explored == 1
    assert v.trace.steps == [] and v.error == "invalid end state: stuck P[1]"


def test_zero_processes_hold():
    v = check_deadlock(model(active=()))
    assert v.outcome == HOLDS and v.states_explored == 1


def test_send_then_receive_holds():
    m = model(Template("S", (), (Send(Var("q"), c(1)),)),
              Template("R", (), (Recv(Var("q"), Var("x")),)),
              globals_=[GlobalDecl("x")], channels=[ChannelDecl("q")])
    assert check_deadlock(m).outcome == HOLDS


@pytest.mark.parametrize("mode", ["flags", "scalar"])
def test_golden_deadlocks_and_oracle_agrees(mode):
    cw, g = graph_of(GOLDEN, mode)
    v = check_deadlock(cw.model, graph=g)
    assert v.outcome == DEADLOCK
    assert "SendFailure" in v.error
    # success leaves SendFailure waiting, cancellation leaves ChargeBuyer waiting
    r = bfs(cw.model)
    stuck = set()
    for i in invalid_end_states(cw.model, r):
        st = r.states[i]
        stuck.add(frozenset(st.procs[p].template for p in cw.model.stuck_processes(st)))
    assert frozenset({"ChargeBuyer"}) in stuck
    assert any("SendFailure" in s and "ChargeBuyer" not in s for s in stuck)
    final = replay(cw.model, v.trace)
    assert not cw.model.is_valid_end_state(final)
    assert not cw.model.enabled_transitions(final)


def test_bfs_deadlock_trace_is_shortest():
    cw = compiled(GOLDEN)
    v = check_deadlock(cw.model, bfs=True)
    r = bfs(cw.model)
    dist = {0: 0}
    for i in range(len(r.states)):  # BFS order: parents precede children
        for j in r.succ[i]:
            dist.setdefault(j, dist[i] + 1)
    shortest = min(dist[i] for i in invalid_end_states(cw.model, r))
    assert len(v.trace) == shortest


@pytest.mark.parametrize("mode", ["flags", "scalar"])
def test_repaired_holds(mode):
    cw, g = graph_of(REPAIRED, mode)
    v = check_deadlock(cw.model, graph=g)
    assert v.outcome == HOLDS
    assert v.states_explored == FROZEN[f"{REPAIRED}/{mode}"]["states"]
    assert not invalid_end_states(cw.model, bfs(cw.model))


@pytest.mark.parametrize("key, expect", [(GOLDEN, True), (REPAIRED, False)])
def test_charge_without_both_bookings(key, expect):
    # the golden join reads the channels its split writes, so Book can take
    # back its own activation tokens and charge with an activity never run
    m = graph_of(key, "flags")[0].model
    charged = [m.read_global(st, "done") for st in reach_of(key, "flags").states
               if m.read_global(st, "done")[1]]
    assert charged
    assert any(not (d[4] and d[5]) for d in charged) is expect


def test_monotone_limits():
    m = compiled(REPAIRED).model
    sizes = [len(explore(m, Limits(max_states=n)).states) for n in (10, 100, 1000, 10_000)]
    assert sizes == sorted(sizes) and all(s <= n for s, n in zip(sizes, (10, 100, 1000, 10_000)))
    v = check_deadlock(m, Limits(max_states=100))
    assert v.outcome == HOLDS and not v.complete and v.to_dict()["limitExceeded"]


def test_model_error_verdict():
    m = model(Template("P", (), (Assign(Var("x"), BinOp("/", c(1), Var("x"))),)),
              globals_=[GlobalDecl("x")])
    v = check_deadlock(m)
    assert v.outcome == MODEL_ERROR and "zero" in v.error.lower()
    assert v.to_dict()["limitExceeded"]


# -- objective and response -----------------------------------------------------------


@pytest.mark.parametrize("key", [GOLDEN, REPAIRED])
@pytest.mark.parametrize("mode", ["flags", "scalar"])
@pytest.mark.parametrize("fair", [False, True])
def test_objective_and_response_hold(key, mode, fair):
    for prop in ("objective", "response"):
        assert ltl(key, prop, mode, fair).outcome == HOLDS


def test_response_vacuity_depends_on_mode():
    flags = ltl(GOLDEN, "response", "flags").vacuity
    scalar = ltl(GOLDEN, "response", "scalar").vacuity
    assert not flags.vacuous and flags.witness is not None
    cw = compiled(GOLDEN)
    final = replay(cw.model, flags.witness)
    f, table = cw.properties["response"]
    assert cw.model.compile_prop(table["p"])(final) and cw.model.compile_prop(table["q"])(final)
    # one scalar cannot record two milestones at once
    assert scalar.vacuous and scalar.witness is None
    assert {"p": True, "q": True} not in scalar.valuations
    assert ltl(GOLDEN, "response", "scalar").to_dict()["vacuous"] is True


def test_objective_is_not_vacuous():
    assert ltl(GOLDEN, "objective").vacuity.vacuous is False


def test_vacuity_needs_always_implies_shape():
    cw = compiled(GOLDEN)
    f, table = cw.properties["objective"]
    with pytest.raises(ShapeUnsupported):
        detect_vacuity(cw.model, "<> p", props=table)
    with pytest.raises(ShapeUnsupported):
        detect_vacuity(cw.model, "[] (<> p -> q)", props=table)
    # the checker still answers; it just has no vacuity report
    assert ltl(GOLDEN, "objective", vacuity=True).vacuity is not None
    v = check_ltl_property(cw.model, "<> p", props=table)
    assert v.vacuity is None


# -- mutants -----------------------------------------------------------------------


@pytest.mark.parametrize("fair", [False, True])
def test_missing_failure_notice_violates_objective(fair):
    cw, g = graph_of("golden-nofail")
    v = ltl("golden-nofail", "objective", fair=fair)
    assert v.outcome == VIOLATED
    m = cw.model
    final = replay(m, v.trace)
    assert v.trace.lasso_start == len(v.trace)  # the stuck final state repeats
    f, table = cw.properties["objective"]
    q, r = (m.compile_prop(table[n]) for n in ("q", "r"))
    assert not q(final) and not r(final)
    # p held on the way
    p = m.compile_prop(table["p"])
    states = [m.initial_state()]
    for t in v.trace.transitions:
        states.append(m.fire(states[-1], t))
    assert any(p(s) for s in states)
    assert ltl("golden-nofail", "response", fair=fair).outcome == HOLDS


def test_missing_failure_notice_deadlocks():
    cw, g = graph_of("golden-nofail")
    v = check_deadlock(cw.model, graph=g)
    assert v.outcome == DEADLOCK and "SendFailure" in v.error


def test_split_mutant_on_golden_deadlocks_for_the_old_reason():
    cw, g = graph_of("golden-split")
    v = check_deadlock(cw.model, graph=g)
    assert v.outcome == DEADLOCK
    assert v.error == "invalid end state: stuck ChargeBuyer[2]"


@pytest.mark.parametrize("fair", [False, True])
def test_split_mutant_on_repaired_livelocks(fair):
    """The join never completes, but its timeout loop keeps moving."""
    cw, g = graph_of("repaired-split")
    assert check_deadlock(cw.model, graph=g).outcome == HOLDS
    v = ltl("repaired-split", "objective", fair=fair)
    assert v.outcome == VIOLATED
    loop = v.trace.steps[v.trace.lasso_start:]
    assert loop and {s.template for s in loop} == {"Book"}
    assert any("timeout" in s.stmt for s in loop)
    replay(cw.model, v.trace)


# -- traces --------------------------------------------------------------------------


def test_trace_replay_detects_tampering():
    cw, _ = graph_of("golden-nofail")
    v = ltl("golden-nofail", "objective")
    bad = Trace(list(v.trace.steps), list(v.trace.transitions), v.trace.lasso_start, "00")
    with pytest.raises(TraceReplayError):
        replay(cw.model, bad)
    swapped = list(v.trace.transitions)
    swapped[0], swapped[-1] = swapped[-1], swapped[0]
    with pytest.raises(TraceReplayError):
        replay(cw.model, Trace(v.trace.steps, swapped, v.trace.lasso_start,
                               v.trace.final_digest))


def test_format_counterexample():
    import json
    cw, _ = graph_of("repaired-split")
    v = ltl("repaired-split", "objective")
    text = format_counterexample(v.trace)
    assert len(text.splitlines()) == len(v.trace)
    assert text.splitlines()[v.trace.lasso_start].startswith("loop> ")
    records = [json.loads(x) for x in format_counterexample(v.trace, "structured").splitlines()]
    assert len(records) == len(v.trace)
    assert all(r["lassoStart"] == v.trace.lasso_start <= len(v.trace) for r in records)
    assert [r["step"] for r in records] == list(range(len(v.trace)))
    final = replay(cw.model, v.trace)
    assert canonical_state_digest(cw.model, final).hex() == v.to_dict()["trace"]["finalDigest"]
    with pytest.raises(ValueError):
        format_counterexample(v.trace, "xml")


def test_empty_stutter_trace_text():
    m, props = counter_model()
    v = check_ltl_property(m, "[] z", props=props)
    assert v.outcome == VIOLATED
    assert format_counterexample(v.trace).strip().endswith("[final state repeats forever]")


# -- semantics on tiny models ------------------------------------------------------


@pytest.mark.parametrize("text, outcome", [
    ("<> p", HOLDS), ("[] !p", VIOLATED), ("<> [] p", HOLDS), ("[] <> !p", VIOLATED),
    ("X X p", HOLDS), ("X p", VIOLATED), ("z", HOLDS), ("X z", VIOLATED),
    ("z U p", VIOLATED), ("!p U p", HOLDS), ("[] (p -> X p)", HOLDS),
])
def test_stutter_semantics(text, outcome):
    m, props = counter_model()
    assert check_ltl_property(m, text, props=props).outcome == outcome
    assert check_ltl_property(m, text, props=props, fair=True).outcome == outcome


def test_duality_on_fixtures():
    """Exactly one of f and !f holds on a model with a single run."""
    m, props = counter_model()
    for text in ["<> p", "[] z", "z U p", "X X p", "<> [] p"]:
        f = parse_formula(text, set(props))
        a = check_ltl_property(m, f, props=props).outcome
        b = check_ltl_property(m, Not(f), props=props).outcome
        assert {a, b} == {HOLDS, VIOLATED}


def test_fairness_excludes_unfair_cycles():
    """P spins forever unless Q gets to run; only an unfair run avoids done."""
    from wfcheck.kernel import Do
    m = model(Template("P", (), (Do(((Skip(),),)),)),
              Template("Q", (), (Assign(Var("d"), c(1)),)),
              globals_=[GlobalDecl("d")])
    props = {"d": lambda st: m.read_global(st, "d") == 1}
    assert check_ltl_property(m, "<> d", props=props).outcome == VIOLATED
    assert check_ltl_property(m, "<> d", props=props, fair=True).outcome == HOLDS


def test_determinism():
    from helpers import MUTANTS, compile_text
    a = ltl("repaired-split", "objective").to_dict()
    cw = compile_text(MUTANTS["repaired-split"]())
    f, table = cw.properties["objective"]
    b = check_ltl_property(cw.model, f, props=table, name="objective").to_dict()
    assert a == b
    d1 = check_deadlock(compiled(GOLDEN).model).to_dict()
    d2 = check_deadlock(compile_text(fixture_text(GOLDEN)).model).to_dict()
    assert d1 == d2


def test_simulate_is_deterministic():
    m = compiled(GOLDEN).model
    a, b = simulate(m, seed=7), simulate(m, seed=7)
    assert a.trace.steps == b.trace.steps and a.trace.final_digest == b.trace.final_digest
    assert a.finished
    replay(m, a.trace)


# -- search backends and the independent product oracle -----------------------------


def test_backend_flag():
    assert BACKEND in ("cython", "python")


@pytest.mark.parametrize("key, prop", [
    ("golden-nofail", "objective"), ("golden-split", "objective"),
    ("repaired-split", "objective"), (REPAIRED, "objective"), (GOLDEN, "response"),
])
def test_backends_agree(key, prop):
    pytest.importorskip("wfcheck.checker._search")
    cw, g = graph_of(key)
    f, table = cw.properties[prop]
    aut = ltl_to_buchi(normalize_negation(Not(f)))
    g.label({n: cw.model.compile_prop(table[n]) for n in aut.propositions})
    enc = aut.encode()
    assert ndfs(g, enc, backend("python")) == ndfs(g, enc, backend("cython"))
    for fair in (False, True):
        assert accepting_scc(g, enc, fair, backend("python")) == \
            accepting_scc(g, enc, fair, backend("cython"))


@pytest.mark.parametrize("key", ["golden-split", "repaired-split"])
def test_mutants_match_product_oracle(key):
    cw, g = graph_of(key)
    f, table = cw.properties["objective"]
    res = compare_case(cw, f, table, graph=g)
    assert not res.get("skipped") and res["agree"] and res["oracle"]


@pytest.mark.parametrize("key", ["pattern_sync_3.wf", "pattern_cancel_tree.wf",
                                 "pattern_split_3.wf"])
@pytest.mark.parametrize("mode", ["flags", "scalar"])
def test_fixtures_match_product_oracle(key, mode):
    cw, g = graph_of(key, mode)
    for prop, (f, table) in cw.properties.items():
        res = compare_case(cw, f, table, graph=g)
        assert res["agree"], (prop, res)
