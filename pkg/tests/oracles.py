"""Independent reference implementations for cross-checking.

Everything here recomputes results from first principles: a distance DP that
does not go through an LCS, exhaustive enumeration of run projections instead
of a guided search, and permutation scans instead of the Hungarian method.
Only net STRUCTURE (preset/postset maps) is shared with the package; no search
or scoring code is reused.
"""

from __future__ import annotations

import heapq
import itertools
import random
from typing import Sequence

from caseweave import Transition, WorkflowNet


class OracleBudget(Exception):
    """The exhaustive method blew its cap; the caller should skip the instance."""


def edit_distance_reference(a: Sequence[str], b: Sequence[str]) -> int:
    """Insert/delete distance via the classic distance DP (no LCS detour)."""
    m, n = len(a), len(b)
    dp = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        dp[i][0] = i
    for j in range(n + 1):
        dp[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            best = min(dp[i - 1][j] + 1, dp[i][j - 1] + 1)
            if a[i - 1] == b[j - 1]:
                best = min(best, dp[i - 1][j - 1])
            dp[i][j] = best
    return dp[m][n]


def brute_force_matching_cost(
    xs: list[tuple[str, ...]], ys: list[tuple[str, ...]]
) -> int:
    """Min-cost perfect matching by trying every permutation (pads with empties)."""
    size = max(len(xs), len(ys))
    a = xs + [()] * (size - len(xs))
    b = ys + [()] * (size - len(ys))
    best = None
    for perm in itertools.permutations(range(size)):
        cost = sum(edit_distance_reference(a[i], b[perm[i]]) for i in range(size))
        if best is None or cost < best:
            best = cost
    return best or 0


# --- token game primitives, reimplemented locally ---------------------------


def _enabled(net: WorkflowNet, marking: dict[str, int], tid: str) -> bool:
    return all(marking.get(p, 0) >= n for p, n in net.preset[tid].items())


def _fire(net: WorkflowNet, marking: dict[str, int], tid: str) -> dict[str, int]:
    out = dict(marking)
    for p, n in net.preset[tid].items():
        out[p] -= n
        if not out[p]:
            del out[p]
    for p, n in net.postset[tid].items():
        out[p] = out.get(p, 0) + n
    return out


def _freeze(marking: dict[str, int]) -> tuple[tuple[str, int], ...]:
    return tuple(sorted(marking.items()))


def _shortest_completion(net: WorkflowNet, cap: int) -> int:
    """Fewest visible firings from the initial to a final marking (Dijkstra)."""
    start = {net.input_place: 1}
    out_place = net.output_place
    counter = 0
    heap = [(0, counter, start)]
    seen: dict[tuple, int] = {_freeze(start): 0}
    while heap:
        cost, _c, marking = heapq.heappop(heap)
        if marking.get(out_place, 0) >= 1:
            return cost
        if len(seen) > cap:
            raise OracleBudget("completion search blew the cap")
        for t in net.transitions:
            if not _enabled(net, marking, t.tid):
                continue
            nxt = _fire(net, marking, t.tid)
            ncost = cost + (0 if t.label is None else 1)
            key = _freeze(nxt)
            if key not in seen or seen[key] > ncost:
                seen[key] = ncost
                counter += 1
                heapq.heappush(heap, (ncost, counter, nxt))
    raise OracleBudget("net cannot complete")


def run_projections(net: WorkflowNet, max_len: int, cap: int = 250_000) -> set[tuple[str, ...]]:
    """Every visible projection (up to ``max_len``) of every completing run."""
    start = {net.input_place: 1}
    out_place = net.output_place
    initial = (_freeze(start), ())
    seen = {initial}
    queue: list[tuple[dict[str, int], tuple[str, ...]]] = [(start, ())]
    projections: set[tuple[str, ...]] = set()
    while queue:
        marking, word = queue.pop()
        if marking.get(out_place, 0) >= 1:
            projections.add(word)
        for t in net.transitions:
            if not _enabled(net, marking, t.tid):
                continue
            next_word = word if t.label is None else word + (t.label,)
            if len(next_word) > max_len:
                continue
            nxt = _fire(net, marking, t.tid)
            key = (_freeze(nxt), next_word)
            if key in seen:
                continue
            if len(seen) > cap:
                raise OracleBudget("projection enumeration blew the cap")
            seen.add(key)
            queue.append((nxt, next_word))
    return projections


def brute_force_alignment_cost(
    net: WorkflowNet, trace: Sequence[str], cap: int = 250_000
) -> int:
    """Min over completing run projections of the insert/delete distance.

    Projections longer than |trace| plus the all-delete-and-replay bound can
    never win, which keeps the enumeration finite even for looping nets.
    """
    trace = tuple(trace)
    upper = len(trace) + _shortest_completion(net, cap)
    candidates = run_projections(net, len(trace) + upper, cap)
    if not candidates:
        raise OracleBudget("no completing run within the length bound")
    return min(edit_distance_reference(trace, word) for word in candidates)


# --- random structured nets and traces ---------------------------------------


_ACTIVITIES = ["a", "b", "c", "d", "e", "f"]


def _random_tree(rng: random.Random, budget: int, depth: int) -> tuple:
    """Pattern tree with a transition budget: leaves, seq, xor, and, loop."""
    if budget <= 1 or depth >= 3:
        return ("leaf", rng.choice(_ACTIVITIES))
    roll = rng.random()
    if roll < 0.35:
        return ("leaf", rng.choice(_ACTIVITIES))
    if roll < 0.60:
        left_budget = rng.randint(1, budget - 1)
        return (
            "seq",
            _random_tree(rng, left_budget, depth + 1),
            _random_tree(rng, budget - left_budget, depth + 1),
        )
    if roll < 0.80:
        left_budget = rng.randint(1, budget - 1)
        return (
            "xor",
            _random_tree(rng, left_budget, depth + 1),
            _random_tree(rng, budget - left_budget, depth + 1),
        )
    if roll < 0.92 and budget >= 4:
        left_budget = rng.randint(1, budget - 3)
        return (
            "and",
            _random_tree(rng, left_budget, depth + 1),
            _random_tree(rng, budget - 2 - left_budget, depth + 1),
        )
    if budget >= 2:
        return ("loop", _random_tree(rng, budget - 1, depth + 1))
    return ("leaf", rng.choice(_ACTIVITIES))


def _tree_size(tree: tuple) -> int:
    kind = tree[0]
    if kind == "leaf":
        return 1
    if kind == "seq" or kind == "xor":
        return _tree_size(tree[1]) + _tree_size(tree[2])
    if kind == "and":
        return 2 + _tree_size(tree[1]) + _tree_size(tree[2])
    return 1 + _tree_size(tree[1])  # loop: child plus the back edge


def random_structured_net(rng: random.Random, max_transitions: int = 8) -> WorkflowNet:
    """A small workflow net composed of sequence/choice/parallel/loop patterns.

    Always has the shape source -> S -> body -> silent -> sink, so "S" is the
    unique start activity and the net stays sound by construction.
    """
    body_budget = max_transitions - 2  # S plus the closing silent transition
    tree = _random_tree(rng, body_budget, 0)
    while _tree_size(tree) > body_budget:
        tree = _random_tree(rng, body_budget, 0)

    places: list[str] = []
    transitions: list[Transition] = []
    arcs: list[tuple[str, str]] = []
    counters = {"p": 0, "t": 0}

    def new_place() -> str:
        counters["p"] += 1
        name = f"p{counters['p']}"
        places.append(name)
        return name

    def new_transition(label: str | None) -> str:
        counters["t"] += 1
        name = f"t{counters['t']}"
        transitions.append(Transition(name, label))
        return name

    def compile_tree(node: tuple, entry: str, exit_: str) -> None:
        kind = node[0]
        if kind == "leaf":
            tid = new_transition(node[1])
            arcs.append((entry, tid))
            arcs.append((tid, exit_))
        elif kind == "seq":
            mid = new_place()
            compile_tree(node[1], entry, mid)
            compile_tree(node[2], mid, exit_)
        elif kind == "xor":
            compile_tree(node[1], entry, exit_)
            compile_tree(node[2], entry, exit_)
        elif kind == "and":
            split = new_transition(None)
            join = new_transition(None)
            arcs.append((entry, split))
            arcs.append((join, exit_))
            for child in (node[1], node[2]):
                before, after = new_place(), new_place()
                arcs.append((split, before))
                arcs.append((after, join))
                compile_tree(child, before, after)
        else:  # loop: child runs once or more
            compile_tree(node[1], entry, exit_)
            back = new_transition(None)
            arcs.append((exit_, back))
            arcs.append((back, entry))

    source = new_place()
    body_entry = new_place()
    body_exit = new_place()
    sink = new_place()
    start = new_transition("S")
    arcs.append((source, start))
    arcs.append((start, body_entry))
    compile_tree(tree, body_entry, body_exit)
    closer = new_transition(None)
    arcs.append((body_exit, closer))
    arcs.append((closer, sink))
    return WorkflowNet(places=places, transitions=transitions, arcs=arcs)


def sample_run_projection(
    net: WorkflowNet, rng: random.Random, step_cap: int = 60
) -> list[str]:
    """Visible labels of one random play of the token game."""
    marking = {net.input_place: 1}
    word: list[str] = []
    for _ in range(step_cap):
        if marking.get(net.output_place, 0) >= 1:
            break
        enabled = [t for t in net.transitions if _enabled(net, marking, t.tid)]
        if not enabled:
            break
        t = rng.choice(enabled)
        if t.label is not None:
            word.append(t.label)
        marking = _fire(net, marking, t.tid)
    return word


def random_trace(net: WorkflowNet, rng: random.Random, max_len: int = 6) -> tuple[str, ...]:
    """Half mutated run projections, half arbitrary words (with an outsider symbol)."""
    if rng.random() < 0.5:
        word = sample_run_projection(net, rng)[:max_len]
        for _ in range(rng.randint(0, 2)):
            mutation = rng.random()
            if mutation < 0.4 and word:
                del word[rng.randrange(len(word))]
            elif mutation < 0.8 and len(word) < max_len:
                word.insert(rng.randrange(len(word) + 1), rng.choice(_ACTIVITIES + ["z"]))
            elif word:
                word[rng.randrange(len(word))] = rng.choice(_ACTIVITIES + ["z"])
        return tuple(word)
    length = rng.randint(0, max_len)
    return tuple(rng.choice(_ACTIVITIES + ["S", "z"]) for _ in range(length))
