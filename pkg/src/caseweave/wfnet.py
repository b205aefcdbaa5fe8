"""Workflow nets: token game, silent closure, and trace alignment.

A workflow net has one source place (the initial marking puts a single token
there) and one sink place; transitions either carry an activity label or are
silent.  Finality is covering: a marking is final when the sink place holds a
token, possibly after firing silent transitions only.

Alignment follows the usual move costs: synchronous moves and silent model
moves are free, visible model moves and log moves cost 1.  The search is
uniform-cost A* over (marking, trace position) pairs with an admissible
heuristic counting trace symbols that label no transition at all.
"""

from __future__ import annotations

import heapq
import threading
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .model import EventLog, InputError

Marking = dict[str, int]
FrozenMarking = tuple[tuple[str, int], ...]

DEFAULT_MARKING_BUDGET = 10_000
DEFAULT_STATE_BUDGET = 1_000_000


class BudgetExceeded(RuntimeError):
    """A bounded search ran out of budget; callers treat the cost as infinite."""


class NotEnabled(ValueError):
    """Attempt to fire a transition that the marking does not enable."""


@dataclass(frozen=True)
class Transition:
    tid: str
    label: str | None  # None means silent

    @property
    def silent(self) -> bool:
        return self.label is None


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    problems: tuple[str, ...]


@dataclass(frozen=True)
class Move:
    """One alignment move: 'sync', 'model' (activity None if silent), or 'log'."""

    kind: str
    activity: str | None
    transition: str | None


@dataclass(frozen=True)
class Alignment:
    cost: int
    moves: tuple[Move, ...]


def freeze(marking: Marking) -> FrozenMarking:
    return tuple(sorted((p, n) for p, n in marking.items() if n > 0))


def thaw(frozen: FrozenMarking) -> Marking:
    return dict(frozen)


class WorkflowNet:
    """Immutable net structure plus memoized closure/advance lookups.

    Arcs connect places to transitions or transitions to places, weight 1.
    Construction validates referential integrity only; semantic soundness
    checks live in :func:`validate_net` so that callers can inspect problems
    instead of catching exceptions.
    """

    def __init__(
        self,
        places: Iterable[str],
        transitions: Iterable[Transition],
        arcs: Iterable[tuple[str, str]],
    ) -> None:
        self.places = tuple(dict.fromkeys(places))
        self.transitions = tuple(transitions)
        self.arcs = tuple(dict.fromkeys(arcs))
        place_set = set(self.places)
        tids = [t.tid for t in self.transitions]
        if len(set(tids)) != len(tids):
            raise InputError("duplicate transition ids")
        tid_set = set(tids)
        if place_set & tid_set:
            raise InputError("place and transition ids overlap")
        self.preset: dict[str, Marking] = {t: {} for t in tids}
        self.postset: dict[str, Marking] = {t: {} for t in tids}
        place_out: dict[str, int] = {p: 0 for p in self.places}
        place_in: dict[str, int] = {p: 0 for p in self.places}
        for src, dst in self.arcs:
            if src in place_set and dst in tid_set:
                self.preset[dst][src] = self.preset[dst].get(src, 0) + 1
                place_out[src] += 1
            elif src in tid_set and dst in place_set:
                self.postset[src][dst] = self.postset[src].get(dst, 0) + 1
                place_in[dst] += 1
            else:
                raise InputError(f"arc ({src}, {dst}) does not connect a place and a transition")
        self._sources = tuple(p for p in self.places if place_in[p] == 0)
        self._sinks = tuple(p for p in self.places if place_out[p] == 0)
        self.labels = frozenset(t.label for t in self.transitions if t.label is not None)
        by_label: dict[str, list[Transition]] = {}
        for t in self.transitions:
            if t.label is not None:
                by_label.setdefault(t.label, []).append(t)
        self._by_label = {label: tuple(ts) for label, ts in by_label.items()}
        self._silent = tuple(t for t in self.transitions if t.silent)
        self._lock = threading.Lock()
        self._closure_memo: dict[FrozenMarking, tuple[frozenset[str], bool]] = {}
        self._advance_memo: dict[tuple[FrozenMarking, str], FrozenMarking | None] = {}

    @property
    def input_place(self) -> str:
        if len(self._sources) != 1:
            raise InputError(f"net has {len(self._sources)} source places, expected 1")
        return self._sources[0]

    @property
    def output_place(self) -> str:
        if len(self._sinks) != 1:
            raise InputError(f"net has {len(self._sinks)} sink places, expected 1")
        return self._sinks[0]

    def initial_marking(self) -> Marking:
        return {self.input_place: 1}

    def transition(self, tid: str) -> Transition:
        for t in self.transitions:
            if t.tid == tid:
                return t
        raise KeyError(tid)


def _is_enabled(net: WorkflowNet, marking: Marking, tid: str) -> bool:
    return all(marking.get(p, 0) >= n for p, n in net.preset[tid].items())


def enabled_transitions(net: WorkflowNet, marking: Marking) -> frozenset[str]:
    """Ids of transitions the marking enables directly (no silent closure)."""
    return frozenset(t.tid for t in net.transitions if _is_enabled(net, marking, t.tid))


def fire(net: WorkflowNet, marking: Marking, tid: str) -> Marking:
    """Fire ``tid``; raises NotEnabled when the preset is not covered."""
    if tid not in net.preset:
        raise KeyError(tid)
    if not _is_enabled(net, marking, tid):
        raise NotEnabled(f"transition {tid} not enabled")
    new = dict(marking)
    for p, n in net.preset[tid].items():
        left = new[p] - n
        if left:
            new[p] = left
        else:
            del new[p]
    for p, n in net.postset[tid].items():
        new[p] = new.get(p, 0) + n
    return new


def _silent_closure(
    net: WorkflowNet, marking: Marking, budget: int
) -> list[tuple[FrozenMarking, Marking, tuple[str, ...]]]:
    """BFS over silent-only firings; shortest silent path per marking.

    Returns entries in BFS order (definition order among silent transitions),
    so the first entry satisfying a predicate is the deterministic choice.
    Raises BudgetExceeded past ``budget`` distinct markings.
    """
    start = freeze(marking)
    seen = {start}
    out = [(start, dict(marking), ())]
    queue = [(dict(marking), ())]
    while queue:
        current, path = queue.pop(0)
        for t in net._silent:
            if not _is_enabled(net, current, t.tid):
                continue
            nxt = fire(net, current, t.tid)
            key = freeze(nxt)
            if key in seen:
                continue
            if len(seen) >= budget:
                raise BudgetExceeded(f"silent closure exceeded {budget} markings")
            seen.add(key)
            entry = path + (t.tid,)
            out.append((key, nxt, entry))
            queue.append((nxt, entry))
    return out


def _closure_facts(
    net: WorkflowNet, marking: Marking, budget: int
) -> tuple[frozenset[str], bool]:
    """(activities enabled through the closure, finality) for a marking, memoized."""
    key = freeze(marking)
    hit = net._closure_memo.get(key)
    if hit is not None:
        return hit
    acts: set[str] = set()
    final = False
    out_place = net.output_place
    for _frozen, m, _path in _silent_closure(net, marking, budget):
        if m.get(out_place, 0) >= 1:
            final = True
        for t in net.transitions:
            if t.label is not None and _is_enabled(net, m, t.tid):
                acts.add(t.label)
    facts = (frozenset(acts), final)
    with net._lock:
        net._closure_memo[key] = facts
    return facts


def enabled_activities(
    net: WorkflowNet, marking: Marking, budget: int = DEFAULT_MARKING_BUDGET
) -> frozenset[str]:
    """Activity labels fireable from ``marking`` after any silent prefix."""
    return _closure_facts(net, marking, budget)[0]


def is_final(
    net: WorkflowNet, marking: Marking, budget: int = DEFAULT_MARKING_BUDGET
) -> bool:
    """True when the sink place can be covered by firing silent transitions only."""
    return _closure_facts(net, marking, budget)[1]


def advance(
    net: WorkflowNet,
    marking: Marking,
    activity: str,
    budget: int = DEFAULT_MARKING_BUDGET,
) -> Marking | None:
    """Fire ``activity`` after the shortest silent prefix; None if unreachable.

    Deterministic: BFS order over silent firings, definition order among
    transitions sharing the label.  Memoized per (marking, activity).
    """
    key = (freeze(marking), activity)
    if key in net._advance_memo:
        hit = net._advance_memo[key]
        return None if hit is None else thaw(hit)
    result: Marking | None = None
    for _frozen, m, _path in _silent_closure(net, marking, budget):
        for t in net._by_label.get(activity, ()):
            if _is_enabled(net, m, t.tid):
                result = fire(net, m, t.tid)
                break
        if result is not None:
            break
    with net._lock:
        net._advance_memo[key] = None if result is None else freeze(result)
    return result


def infer_start_activity(net: WorkflowNet, budget: int = DEFAULT_MARKING_BUDGET) -> str:
    """The unique activity enabled at the initial marking."""
    acts = enabled_activities(net, net.initial_marking(), budget)
    if len(acts) != 1:
        raise InputError(f"expected exactly one start activity, found {sorted(acts)}")
    return next(iter(acts))


def validate_net(
    net: WorkflowNet,
    start_activity: str | None = None,
    budget: int = DEFAULT_MARKING_BUDGET,
) -> ValidationReport:
    """Check workflow-net shape; collects problems instead of raising.

    Checks: unique source and sink place, every node on a path from source to
    sink, a final marking reachable from the initial one, and (when given)
    exactly one transition labeled ``start_activity`` that lies on no cycle.
    """
    problems: list[str] = []
    if len(net._sources) != 1:
        problems.append(f"expected one source place, found {list(net._sources)}")
    if len(net._sinks) != 1:
        problems.append(f"expected one sink place, found {list(net._sinks)}")

    succ: dict[str, set[str]] = {}
    pred: dict[str, set[str]] = {}
    for src, dst in net.arcs:
        succ.setdefault(src, set()).add(dst)
        pred.setdefault(dst, set()).add(src)

    def reach(start: str, edges: dict[str, set[str]]) -> set[str]:
        seen = {start}
        stack = [start]
        while stack:
            node = stack.pop()
            for nxt in edges.get(node, ()):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return seen

    nodes = set(net.places) | {t.tid for t in net.transitions}
    if len(net._sources) == 1 and len(net._sinks) == 1:
        fwd = reach(net._sources[0], succ)
        bwd = reach(net._sinks[0], pred)
        stranded = sorted(nodes - (fwd & bwd))
        if stranded:
            problems.append(f"nodes not on a source-to-sink path: {stranded}")
        try:
            if not _final_reachable(net, budget):
                problems.append("no final marking reachable from the initial marking")
        except BudgetExceeded:
            problems.append("reachability check exceeded the marking budget")

    if start_activity is not None:
        starters = [t for t in net.transitions if t.label == start_activity]
        if len(starters) != 1:
            problems.append(
                f"expected one transition labeled {start_activity!r}, found {len(starters)}"
            )
        else:
            tid = starters[0].tid
            downstream: set[str] = set()
            stack = list(succ.get(tid, ()))
            while stack:
                node = stack.pop()
                if node in downstream:
                    continue
                downstream.add(node)
                stack.extend(succ.get(node, ()))
            if tid in downstream:
                problems.append(f"start transition {tid} lies on a cycle")
    return ValidationReport(ok=not problems, problems=tuple(problems))


def _final_reachable(net: WorkflowNet, budget: int) -> bool:
    """Token-game BFS from the initial marking until a final marking appears."""
    start = net.initial_marking()
    seen = {freeze(start)}
    queue = [start]
    out_place = net.output_place
    while queue:
        m = queue.pop(0)
        if m.get(out_place, 0) >= 1:
            return True
        for t in net.transitions:
            if not _is_enabled(net, m, t.tid):
                continue
            nxt = fire(net, m, t.tid)
            key = freeze(nxt)
            if key in seen:
                continue
            if len(seen) >= budget:
                raise BudgetExceeded(f"reachability exceeded {budget} markings")
            seen.add(key)
            queue.append(nxt)
    return False


def align_trace(
    net: WorkflowNet,
    trace: Sequence[str],
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> Alignment:
    """Minimum-cost alignment of ``trace`` against the net's runs.

    Cost 0 if and only if the trace is the visible projection of a run.  Raises
    BudgetExceeded after settling ``state_budget`` search states; callers treat
    that as an infinite cost.
    """
    trace = tuple(trace)
    n = len(trace)
    # h[i]: symbols at or after position i that no transition can ever match.
    h = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        h[i] = h[i + 1] + (0 if trace[i] in net.labels else 1)

    out_place = net.output_place
    start = (freeze(net.initial_marking()), 0)
    counter = 0
    heap: list[tuple[int, int, int, tuple[FrozenMarking, int]]] = [(h[0], 0, counter, start)]
    best_g: dict[tuple[FrozenMarking, int], int] = {start: 0}
    parent: dict[tuple[FrozenMarking, int], tuple[tuple[FrozenMarking, int], Move]] = {}
    settled: set[tuple[FrozenMarking, int]] = set()

    while heap:
        _f, g, _c, state = heapq.heappop(heap)
        if state in settled:
            continue
        settled.add(state)
        if len(settled) > state_budget:
            raise BudgetExceeded(f"alignment exceeded {state_budget} states")
        fm, pos = state
        marking = thaw(fm)
        if pos == n and marking.get(out_place, 0) >= 1:
            moves: list[Move] = []
            cur = state
            while cur in parent:
                cur, move = parent[cur]
                moves.append(move)
            moves.reverse()
            return Alignment(cost=g, moves=tuple(moves))

        def push(nstate: tuple[FrozenMarking, int], ng: int, move: Move) -> None:
            nonlocal counter
            if nstate in settled:
                return
            old = best_g.get(nstate)
            if old is not None and old <= ng:
                return
            best_g[nstate] = ng
            parent[nstate] = (state, move)
            counter += 1
            heapq.heappush(heap, (ng + h[nstate[1]], ng, counter, nstate))

        for t in net.transitions:
            if not _is_enabled(net, marking, t.tid):
                continue
            nfm = freeze(fire(net, marking, t.tid))
            if t.silent:
                push((nfm, pos), g, Move("model", None, t.tid))
            else:
                if pos < n and t.label == trace[pos]:
                    push((nfm, pos + 1), g, Move("sync", t.label, t.tid))
                push((nfm, pos), g + 1, Move("model", t.label, t.tid))
        if pos < n:
            push((fm, pos + 1), g + 1, Move("log", trace[pos], None))
    raise BudgetExceeded("alignment search space exhausted without reaching a final marking")


class AlignmentCache:
    """Trace -> Alignment memo for one net: lock-free reads, locked inserts."""

    def __init__(self) -> None:
        self._data: dict[tuple[str, ...], Alignment] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._data)

    def get_or_compute(
        self,
        net: WorkflowNet,
        trace: Sequence[str],
        state_budget: int = DEFAULT_STATE_BUDGET,
    ) -> Alignment:
        key = tuple(trace)
        hit = self._data.get(key)
        if hit is not None:
            return hit
        result = align_trace(net, key, state_budget)
        with self._lock:
            self._data.setdefault(key, result)
        return self._data[key]


def log_alignment_cost(
    net: WorkflowNet,
    log: EventLog,
    cache: AlignmentCache | None = None,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> int:
    """Sum of per-case alignment costs; BudgetExceeded propagates."""
    if cache is None:
        cache = AlignmentCache()
    return sum(cache.get_or_compute(net, c.trace, state_budget).cost for c in log.cases)
