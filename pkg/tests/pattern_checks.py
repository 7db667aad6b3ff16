"""Exhaustive checks of the pattern fixtures (one function per pattern).

Every function explores its fixture with the independent BFS oracle and
returns a small JSON-able report: ``ok`` plus the counts it was based on.
"""

from __future__ import annotations

from itertools import permutations

from helpers import compiled
from oracles import bfs, invalid_end_states
from wfcheck.kernel import canonical_state_digest

MAX_STATES = 10_000


def _g(m, st, name):
    return m.read_global(st, name)


def _buf(m, st, name):
    return st.channels[m.channel_names.index(name)]


def _proc(st, template):
    return next((p for p in st.procs if p.template == template), None)


def _local(m, st, template, name):
    p = _proc(st, template)
    return m.view(st, p.pid).locals[name]


def _report(r, ok, **extra):
    return {"ok": bool(ok), "states": len(r.states), "transitions": r.edges,
            "terminals": len(r.quiescent), **extra}


def check_exclusive_choice() -> dict:
    """At most one branch channel ever holds a token, exactly one for an in-range choice."""
    cw = compiled("pattern_choice.wf")
    m = cw.model
    r = bfs(m, MAX_STATES)

    def held(st):
        return sum(1 << i for i in range(2) if _buf(m, st, f"qs[{i}]"))

    # search over (state, channels that ever held a message)
    seen = {(0, held(r.states[0]))}
    todo = list(seen)
    finals = set()
    while todo:
        s, mask = todo.pop()
        if not r.succ[s]:
            finals.add((s, mask))
        for t in r.succ[s]:
            node = (t, mask | held(r.states[t]))
            if node not in seen:
                seen.add(node)
                todo.append(node)
    bad = 0
    classes: dict = {}
    for s, mask in finals:
        st = r.states[s]
        c = _local(m, st, "Chooser", "c")
        ones = bin(mask).count("1")
        if ones > 1 or (0 <= c < 2) != (ones == 1):
            bad += 1
        flags = tuple(_g(m, st, "done")[1:3])
        classes.setdefault(c, set()).add(flags)
    partition = {str(c): sorted(map(list, v)) for c, v in sorted(classes.items())}
    ok = (not bad and classes.get(0) == {(1, 0)} and classes.get(1) == {(0, 1)}
          and classes.get(-1) == {(0, 0)} and not invalid_end_states(m, r))
    return _report(r, ok, runClasses=partition, violations=bad)


def check_parallel_split(n: int) -> dict:
    """All n branches run; the sends happen inside one atomic block."""
    cw = compiled(f"pattern_split_{n}.wf")
    m = cw.model
    r = bfs(m, MAX_STATES)
    split = None
    torn = 0
    for st in r.states:
        tokens = sum(len(_buf(m, st, f"qs[{i}]")) + _g(m, st, "done")[i + 1] for i in range(n))
        if 0 < tokens < n:
            p = _proc(st, "Split")
            torn += p is None or st.holder != p.pid
        p = _proc(st, "Split")
        if p is not None and m.is_done(p) and split is None:
            split = [len(_buf(m, st, f"qs[{i}]")) for i in range(n)]
    finals_ok = all(_g(m, r.states[i], "done")[1:n + 1] == [1] * n for i in r.quiescent)
    ok = finals_ok and torn == 0 and split == [1] * n and not invalid_end_states(m, r)
    return _report(r, ok, bufferLengthsAfterSplit=split, interleavedPartialSplits=torn)


def check_synchronization(n: int) -> dict:
    """The join completes in every run; terminal states do not depend on send order."""
    cw = compiled(f"pattern_sync_{n}.wf")
    m = cw.model
    r = bfs(m, MAX_STATES)

    def sent(st):
        return tuple(_g(m, st, "done")[2:2 + n])

    # which terminal digests each completion order of the senders can reach
    by_order: dict = {}
    seen = {(0, ())}
    todo = [(0, ())]
    while todo:
        s, order = todo.pop()
        if not r.succ[s]:
            d = canonical_state_digest(m, r.states[s]).hex()
            by_order.setdefault(order, set()).add(d)
        for t in r.succ[s]:
            before, after = sent(r.states[s]), sent(r.states[t])
            new = tuple(i for i in range(n) if after[i] and not before[i])
            node = (t, order + new)
            if node not in seen:
                seen.add(node)
                todo.append(node)
    orders = set(by_order)
    complete = all(
        _g(m, r.states[i], "done")[1] == 1
        and not any(st for st in r.states[i].channels)
        and _local(m, r.states[i], "Join", "msgs") == [1] * n
        and _local(m, r.states[i], "Join", "sy_count") == n
        for i in r.quiescent)
    same = len({frozenset(v) for v in by_order.values()}) == 1
    ok = (complete and same and orders == set(permutations(range(n)))
          and not invalid_end_states(m, r))
    return _report(r, ok, sendOrders=len(orders), terminalDigests=len(set().union(*by_order.values())),
                   orderInsensitive=same)


def check_cancel_case_tree() -> dict:
    """After the root is cancelled every live descendant terminates, level by level."""
    cw = compiled("pattern_cancel_tree.wf")
    m = cw.model
    r = bfs(m, MAX_STATES)
    bad = 0
    full_chain = 0
    for i in r.quiescent:
        st = r.states[i]
        done = _g(m, st, "done")
        if not all(m.is_done(p) for p in st.procs):
            bad += 1
        if done[3] and not done[2]:
            bad += 1  # the leaf can only hear of it through Mid
        for level, name in ((1, "Root"), (2, "Mid"), (3, "Leaf")):
            if _proc(st, name) is not None and not done[level]:
                bad += 1
        full_chain += done[1:4] == [1, 1, 1]
    ok = bad == 0 and full_chain > 0 and not invalid_end_states(m, r)
    return _report(r, ok, violations=bad, terminalsWithWholeChain=full_chain)


def check_simple_merge() -> dict:
    """The merge continues on the first message it takes; the other stays queued."""
    cw = compiled("pattern_merge.wf")
    m = cw.model
    r = bfs(m, MAX_STATES)
    bad = 0
    for st in r.states:
        done = _g(m, st, "done")
        if not done[1]:
            continue
        queued = len(_buf(m, st, "qs[0]")) + len(_buf(m, st, "qs[1]"))
        if queued != done[2] + done[3] - 1:
            bad += 1
        x = _local(m, st, "Merge", "x")
        drained = [v for v, ch in ((1, "qs[0]"), (2, "qs[1]")) if not _buf(m, st, ch)
                   and done[v + 1]]
        if x not in drained:
            bad += 1
    firsts = sorted({_local(m, r.states[i], "Merge", "x") for i in r.quiescent})
    ok = bad == 0 and firsts == [1, 2] and not invalid_end_states(m, r)
    return _report(r, ok, violations=bad, firstMessages=firsts)


def all_checks() -> dict:
    return {
        "exclusive_choice": check_exclusive_choice(),
        **{f"parallel_split_{n}": check_parallel_split(n) for n in (1, 2, 3)},
        **{f"synchronization_{n}": check_synchronization(n) for n in (2, 3)},
        "cancel_case_tree": check_cancel_case_tree(),
        "simple_merge": check_simple_merge(),
    }
