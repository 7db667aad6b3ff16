"""Product search over CSR graphs, pure-Python implementation.

The model graph is ``(m_off, m_tgt, m_pid)`` with per-state proposition
bitmasks ``labels``; the automaton is ``(b_off, b_tgt, b_pos, b_neg,
b_acc)``. Product node ``s * B + q`` pairs model state ``s`` with automaton
state ``q``; the automaton reads the label of the state being entered, and
the initial product nodes come from reading the label of model state 0.

Both functions mirror ``_search.pyx`` step for step, so the two
implementations return identical results.
"""

from __future__ import annotations


def initial_nodes(labels, b_off, b_tgt, b_pos, b_neg, b_init: int) -> list[int]:
    lab = labels[0]
    out = []
    for f in range(b_off[b_init], b_off[b_init + 1]):
        if (b_pos[f] & ~lab) == 0 and (b_neg[f] & lab) == 0:
            v = b_tgt[f]
            if v not in out:
                out.append(v)
    return out


def _next(u, k, B, m_off, m_tgt, labels, b_off, b_tgt, b_pos, b_neg):
    """Successor number ``k`` and up of product node ``u``: (v, edge, k')."""
    s, q = divmod(u, B)
    m0, b0 = m_off[s], b_off[q]
    db = b_off[q + 1] - b0
    tot = (m_off[s + 1] - m0) * db
    while k < tot:
        e = m0 + k // db
        f = b0 + k % db
        k += 1
        t = m_tgt[e]
        lab = labels[t]
        if (b_pos[f] & ~lab) == 0 and (b_neg[f] & lab) == 0:
            return t * B + b_tgt[f], e, k
    return -1, -1, k


def ndfs(m_off, m_tgt, labels, b_off, b_tgt, b_pos, b_neg, b_acc, b_init: int):
    """Nested depth-first search for an accepting cycle.

    Returns ``None`` or ``(nodes, edges, loop_start)``: ``edges[i]`` is the
    model edge from ``nodes[i]`` to ``nodes[i + 1]`` and the last edge closes
    the loop back to ``nodes[loop_start]``.
    """
    n = len(m_off) - 1
    B = len(b_off) - 1
    blue = bytearray(n * B)
    red = bytearray(n * B)
    onstack = bytearray(n * B)
    args = (B, m_off, m_tgt, labels, b_off, b_tgt, b_pos, b_neg)
    for r in initial_nodes(labels, b_off, b_tgt, b_pos, b_neg, b_init):
        if blue[r]:
            continue
        nodes, cursor, into = [r], [0], [-1]
        blue[r] = onstack[r] = 1
        while nodes:
            u = nodes[-1]
            v, e, cursor[-1] = _next(u, cursor[-1], *args)
            if v >= 0:
                if not blue[v]:
                    blue[v] = onstack[v] = 1
                    nodes.append(v)
                    cursor.append(0)
                    into.append(e)
                continue
            if b_acc[u % B]:
                found = _red(u, red, onstack, args)
                if found is not None:
                    rnodes, rinto, closing, target = found
                    path = nodes + rnodes[1:]
                    edges = into[1:] + rinto[1:] + [closing]
                    return path, edges, nodes.index(target)
            nodes.pop()
            cursor.pop()
            into.pop()
            onstack[u] = 0
    return None


def _red(seed, red, onstack, args):
    nodes, cursor, into = [seed], [0], [-1]
    while nodes:
        u = nodes[-1]
        v, e, cursor[-1] = _next(u, cursor[-1], *args)
        if v < 0:
            nodes.pop()
            cursor.pop()
            into.pop()
            continue
        if onstack[v]:
            return nodes, into, e, v
        if not red[v]:
            red[v] = 1
            nodes.append(v)
            cursor.append(0)
            into.append(e)
    return None


def accepting_scc(m_off, m_tgt, m_pid, labels, b_off, b_tgt, b_pos, b_neg, b_acc,
                  b_init: int, fair: bool):
    """First (in Tarjan completion order) reachable SCC that is nontrivial,
    contains an accepting node and, with ``fair``, is weakly fair: every
    process enabled in all of its nodes moves on one of its internal edges.
    Returns the SCC's nodes in stack order, or ``None``.
    """
    n = len(m_off) - 1
    B = len(b_off) - 1
    P = max(m_pid, default=-1) + 1
    index = [-1] * (n * B)
    low = [0] * (n * B)
    comp = [-1] * (n * B)
    onstack = bytearray(n * B)
    args = (B, m_off, m_tgt, labels, b_off, b_tgt, b_pos, b_neg)
    counter = 0
    ncomp = 0
    scc_stack: list[int] = []
    for r in initial_nodes(labels, b_off, b_tgt, b_pos, b_neg, b_init):
        if index[r] >= 0:
            continue
        index[r] = low[r] = counter
        counter += 1
        scc_stack.append(r)
        onstack[r] = 1
        nodes, cursor = [r], [0]
        while nodes:
            u = nodes[-1]
            v, e, cursor[-1] = _next(u, cursor[-1], *args)
            if v >= 0:
                if index[v] < 0:
                    index[v] = low[v] = counter
                    counter += 1
                    scc_stack.append(v)
                    onstack[v] = 1
                    nodes.append(v)
                    cursor.append(0)
                elif onstack[v] and index[v] < low[u]:
                    low[u] = index[v]
                continue
            nodes.pop()
            cursor.pop()
            if nodes and low[u] < low[nodes[-1]]:
                low[nodes[-1]] = low[u]
            if low[u] != index[u]:
                continue
            members = []
            while True:
                w = scc_stack.pop()
                onstack[w] = 0
                comp[w] = ncomp
                members.append(w)
                if w == u:
                    break
            if _qualifies(members, ncomp, comp, m_pid, P, b_acc, fair, args):
                members.reverse()
                return members
            ncomp += 1
    return None


def _qualifies(members, c, comp, m_pid, P, b_acc, fair, args) -> bool:
    B, m_off = args[0], args[1]
    if not any(b_acc[w % B] for w in members):
        return False
    internal = False
    count = [0] * P
    moved = bytearray(P)
    for w in members:
        s = w // B
        seen = set()
        for e in range(m_off[s], m_off[s + 1]):
            p = m_pid[e]
            if p >= 0 and p not in seen:
                seen.add(p)
                count[p] += 1
        k = 0
        while True:
            v, e, k = _next(w, k, *args)
            if v < 0:
                break
            if comp[v] == c:
                internal = True
                if m_pid[e] >= 0:
                    moved[m_pid[e]] = 1
    if not internal:
        return False
    if fair:
        for p in range(P):
            if count[p] == len(members) and not moved[p]:
                return False
    return True
