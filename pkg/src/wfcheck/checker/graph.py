"""Explicit state-space construction."""

from __future__ import annotations

from array import array
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..kernel import Model, ModelError, SystemState, Transition, canonical_state_digest

STUTTER = -1


class LimitExceeded(Exception):
    """Raised only when a caller asks for limits to be fatal."""


@dataclass(frozen=True)
class Limits:
    max_states: int = 1_000_000
    max_depth: int = 100_000

    def __post_init__(self):
        if self.max_states < 1 or self.max_depth < 1:
            raise ValueError("limits must be positive")


@dataclass
class StateGraph:
    """Reachable states in discovery order plus CSR successor arrays.

    Every quiescent state (no enabled transition) gets one stutter edge to
    itself with mover -1, so each maximal run is infinite. States cut off by
    a limit get no edges at all.
    """

    model: Model
    states: list[SystemState]
    index: dict
    offsets: array
    targets: array
    movers: array
    transitions: list[Optional[Transition]]
    parent: list[int]  # tree edge into each state, -1 for the root
    depth: list[int]
    quiescent: list[int]
    truncated: list[int]
    error: Optional[tuple[int, ModelError]] = None
    labels: array = field(default_factory=lambda: array("Q"))
    label_names: tuple = ()

    @property
    def complete(self) -> bool:
        return not self.truncated and self.error is None

    @property
    def transition_count(self) -> int:
        return sum(1 for t in self.transitions if t is not None)

    def successors(self, s: int) -> list[tuple[int, int]]:
        return [(e, self.targets[e]) for e in range(self.offsets[s], self.offsets[s + 1])]

    def path_to(self, s: int) -> list[int]:
        """Edge indices along the search tree from the root to ``s``."""
        out = []
        while self.parent[s] >= 0:
            e = self.parent[s]
            out.append(e)
            s = self.source_of(e)
        out.reverse()
        return out

    def source_of(self, e: int) -> int:
        lo, hi = 0, len(self.offsets) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.offsets[mid] <= e:
                lo = mid
            else:
                hi = mid
        return lo

    def label(self, props: dict[str, Callable[[SystemState], bool]]) -> None:
        """Attach one bitmask per state; bit i is ``props[names[i]]``."""
        names = tuple(props)
        if len(names) > 64:
            raise ValueError("at most 64 propositions per property")
        preds = [props[n] for n in names]
        self.labels = array("Q", (sum(1 << i for i, p in enumerate(preds) if p(s))
                                  for s in self.states))
        self.label_names = names

    def check_digests(self) -> int:
        """Assert digest injectivity over the stored states; returns the count."""
        seen: dict[bytes, SystemState] = {}
        for s in self.states:
            d = canonical_state_digest(self.model, s)
            other = seen.setdefault(d, s)
            if other != s:
                raise AssertionError("state digest collision")
        return len(seen)


def explore(model: Model, limits: Limits = Limits(), *, order: str = "dfs",
            check_channels: bool = True) -> StateGraph:
    """Build the reachable graph by DFS (default) or BFS.

    Successors are generated lowest pid first, options in syntactic order,
    so numbering and search trees are reproducible. A model error stops the
    search and is recorded with the state it occurred in.
    """
    init = model.initial_state()
    states = [init]
    index = {init: 0}
    parent, depth = [-1], [0]
    succ: dict[int, list[tuple[Transition, int]]] = {}
    truncated: list[int] = []
    error = None
    caps = model.capacities

    def expand(s: int) -> Optional[list[tuple[Transition, SystemState]]]:
        nonlocal error
        try:
            return model.successors(states[s])
        except ModelError as exc:
            error = (s, exc)
            return None

    def add(st: SystemState, d: int) -> tuple[int, bool]:
        i = index.get(st)
        if i is not None:
            return i, False
        if check_channels:
            for k, buf in enumerate(st.channels):
                if len(buf) > max(caps[k], 0):
                    raise AssertionError(f"channel {model.channel_names[k]} over capacity")
        i = len(states)
        states.append(st)
        index[st] = i
        parent.append(-1)
        depth.append(d)
        return i, True

    tree_in: dict[int, tuple[int, int]] = {}  # child -> (source, position among successors)
    if order == "bfs":
        queue = deque([0])
        while queue and error is None:
            s = queue.popleft()
            if depth[s] >= limits.max_depth:
                truncated.append(s)
                continue
            moves = expand(s)
            if moves is None:
                break
            if len(states) + len({st for _, st in moves if st not in index}) > limits.max_states:
                truncated.append(s)
                continue
            out = []
            for pos, (t, st) in enumerate(moves):
                j, new = add(st, depth[s] + 1)
                if new:
                    tree_in[j] = (s, pos)
                    queue.append(j)
                out.append((t, j))
            succ[s] = out
    elif order == "dfs":
        stack = [0]
        while stack and error is None:
            s = stack.pop()
            if s in succ:
                continue
            if depth[s] >= limits.max_depth:
                truncated.append(s)
                continue
            moves = expand(s)
            if moves is None:
                break
            if len(states) + len({st for _, st in moves if st not in index}) > limits.max_states:
                truncated.append(s)
                continue
            out = []
            fresh = []
            for pos, (t, st) in enumerate(moves):
                j, new = add(st, depth[s] + 1)
                if new:
                    tree_in[j] = (s, pos)
                    fresh.append(j)
                out.append((t, j))
            succ[s] = out
            stack.extend(reversed(fresh))
    else:
        raise ValueError(f"unknown search order {order!r}")

    offsets = array("q", [0])
    targets = array("q")
    movers = array("q")
    transitions: list[Optional[Transition]] = []
    quiescent = []
    cut = set(truncated)
    if error is not None:
        cut.add(error[0])
    for s in range(len(states)):
        out = succ.get(s)
        if out is None:
            if s not in cut and s not in succ:
                # discovered but never expanded (search stopped early)
                cut.add(s)
                truncated.append(s)
        elif not out:
            quiescent.append(s)
            targets.append(s)
            movers.append(STUTTER)
            transitions.append(None)
        else:
            for t, j in out:
                targets.append(j)
                movers.append(t.pid)
                transitions.append(t)
        offsets.append(len(targets))
    for j, (s, pos) in tree_in.items():
        parent[j] = offsets[s] + pos
    truncated = sorted(set(truncated) - ({error[0]} if error else set()))
    return StateGraph(model, states, index, offsets, targets, movers, transitions, parent,
                      depth, quiescent, truncated, error)
