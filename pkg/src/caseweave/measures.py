"""Log-to-log quality measures between two correlations of one event stream.

Both logs must partition the same underlying stream; events are matched by
identity (their stream index), so the measures quantify how well the generated
case structure reproduces the original one.  All l2l measures live in [0, 1]
with 1 meaning perfect agreement; the smape measures are error rates with 0
meaning perfect agreement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .model import Case, EventLog, InputError, elapsed_time, cycle_time


def edit_distance_ins_del(a: tuple[str, ...], b: tuple[str, ...]) -> int:
    """Insertions-plus-deletions distance: |a| + |b| - 2 * LCS(a, b)."""
    if not a or not b:
        return len(a) + len(b)
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[-1]))
        prev = cur
    return len(a) + len(b) - 2 * prev[-1]


def min_matching_cost(
    traces_a: list[tuple[str, ...]], traces_b: list[tuple[str, ...]]
) -> int:
    """Minimum total edit distance of a perfect matching between the two lists.

    Unequal lengths are padded with empty traces, which cost their partner's
    length to match.
    """
    size = max(len(traces_a), len(traces_b))
    if size == 0:
        return 0
    a = traces_a + [()] * (size - len(traces_a))
    b = traces_b + [()] * (size - len(traces_b))
    cost = np.zeros((size, size), dtype=np.int64)
    for i, ta in enumerate(a):
        for j, tb in enumerate(b):
            cost[i, j] = edit_distance_ins_del(ta, tb)
    rows, cols = linear_sum_assignment(cost)
    return int(cost[rows, cols].sum())


def l2l_trace(original: EventLog, generated: EventLog) -> float:
    """Distinct-trace similarity; each original trace picks its nearest partner."""
    originals = sorted({c.trace for c in original.cases})
    partners = sorted({c.trace for c in generated.cases})
    total_distance = 0
    total_length = 0
    for trace in originals:
        distance, partner = min(
            (edit_distance_ins_del(trace, other), other) for other in partners
        )
        total_distance += distance
        total_length += len(trace) + len(partner)
    if total_length == 0:
        return 1.0
    return 1.0 - total_distance / total_length


def l2l_freq(original: EventLog, generated: EventLog) -> float:
    """Frequency-aware similarity via an optimal case matching.

    1 - (matching cost / number of events), clamped at 0: the cost of a
    matching can reach twice the event count.
    """
    cost = min_matching_cost(
        [c.trace for c in original.cases], [c.trace for c in generated.cases]
    )
    return max(0.0, 1.0 - cost / len(original.base.events))


def _pair_by_first_event(
    original: EventLog, generated: EventLog
) -> list[tuple[Case, Case]]:
    by_first = {c.events[0].index: c for c in generated.cases}
    pairs = []
    for case in original.cases:
        partner = by_first.get(case.events[0].index)
        if partner is not None:
            pairs.append((case, partner))
    return pairs


def l2l_first(original: EventLog, generated: EventLog) -> float:
    """Shared tail events between cases that open with the same event."""
    non_start = len(original.base.events) - len(original.cases)
    if non_start == 0:
        return 0.0
    shared = 0
    for case, partner in _pair_by_first_event(original, generated):
        tail = {e.index for e in case.events[1:]}
        partner_tail = {e.index for e in partner.events[1:]}
        shared += len(tail & partner_tail)
    return shared / non_start


def _ngram_fraction(original: EventLog, generated: EventLog, width: int) -> float:
    """Mean per-case fraction of event n-grams that reappear contiguously."""
    present: set[tuple[int, ...]] = set()
    for case in generated.cases:
        indices = [e.index for e in case.events]
        for k in range(len(indices) - width + 1):
            present.add(tuple(indices[k : k + width]))
    total = 0.0
    for case in original.cases:
        indices = [e.index for e in case.events]
        windows = len(indices) - width + 1
        if windows <= 0:
            continue  # short cases contribute 0, the case count stays as is
        hits = sum(
            tuple(indices[k : k + width]) in present for k in range(windows)
        )
        total += hits / windows
    return total / len(original.cases)


def l2l_2gram(original: EventLog, generated: EventLog) -> float:
    return _ngram_fraction(original, generated, 2)


def l2l_3gram(original: EventLog, generated: EventLog) -> float:
    return _ngram_fraction(original, generated, 3)


def l2l_case(original: EventLog, generated: EventLog) -> float:
    """Fraction of original cases reproduced exactly (same events, same order)."""
    exact = {tuple(e.index for e in c.events) for c in generated.cases}
    hits = sum(tuple(e.index for e in c.events) in exact for c in original.cases)
    return hits / len(original.cases)


def smape_et(original: EventLog, generated: EventLog) -> float:
    """Symmetric error of per-event elapsed times between the two case contexts."""
    non_start = len(original.base.events) - len(original.cases)
    if non_start == 0:
        return 0.0

    def per_event(log: EventLog) -> dict[int, int]:
        out: dict[int, int] = {}
        for case in log.cases:
            for position, event in enumerate(case.events, start=1):
                out[event.index] = elapsed_time(case, position)
        return out

    a, b = per_event(original), per_event(generated)
    total = 0.0
    for index, left in a.items():
        right = b[index]
        if left + right > 0:
            total += abs(left - right) / (left + right)
    return total / non_start


def smape_ct(original: EventLog, generated: EventLog) -> float:
    """Symmetric error of cycle times over cases that open with the same event."""
    total = 0.0
    for case, partner in _pair_by_first_event(original, generated):
        left, right = cycle_time(case), cycle_time(partner)
        if left + right > 0:
            total += abs(left - right) / (left + right)
    return total / len(original.cases)


@dataclass(frozen=True)
class MeasureReport:
    l2l_trace: float
    l2l_freq: float
    l2l_first: float
    l2l_2gram: float
    l2l_3gram: float
    l2l_case: float
    smape_et: float
    smape_ct: float
    notes: tuple[str, ...] = ()

    FIELDS = (
        "l2l_trace",
        "l2l_freq",
        "l2l_first",
        "l2l_2gram",
        "l2l_3gram",
        "l2l_case",
        "smape_et",
        "smape_ct",
    )

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in self.FIELDS}

    def to_text(self) -> str:
        lines = [f"{name}: {value:.6f}" for name, value in self.as_dict().items()]
        lines.extend(f"note: {note}" for note in self.notes)
        return "\n".join(lines) + "\n"


def evaluate(original: EventLog, generated: EventLog) -> MeasureReport:
    """All eight measures; the logs must correlate the same stream."""
    if original.base != generated.base:
        raise InputError("logs disagree on the underlying event stream")
    notes: list[str] = []
    if len(original.cases) != len(generated.cases):
        notes.append(
            f"case counts differ ({len(original.cases)} vs {len(generated.cases)}); "
            "the matching pads with empty cases"
        )
    return MeasureReport(
        l2l_trace=l2l_trace(original, generated),
        l2l_freq=l2l_freq(original, generated),
        l2l_first=l2l_first(original, generated),
        l2l_2gram=l2l_2gram(original, generated),
        l2l_3gram=l2l_3gram(original, generated),
        l2l_case=l2l_case(original, generated),
        smape_et=smape_et(original, generated),
        smape_ct=smape_ct(original, generated),
        notes=tuple(notes),
    )
