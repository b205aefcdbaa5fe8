"""Shared fixtures: the worked demo process, paired logs, and the loop net.

The demo fixtures encode a small claim handling process whose energies,
decoder decisions, and measure values were derived by hand; tests assert those
frozen numbers.
"""

from __future__ import annotations

import random
import zlib
from pathlib import Path

import pytest

from caseweave import (
    EventLog,
    RuleSet,
    Transition,
    UncorrelatedLog,
    WorkflowNet,
    build_uncorrelated_log,
    correlate,
    parse_rules,
)
from caseweave.logio import parse_timestamp

FIXTURES = Path(__file__).parent / "fixtures"

# Base instant shared with the CSV fixtures (07/06/2020 09:00 local wall clock).
BASE = parse_timestamp("2020-06-07 09:00")

DEMO_EVENTS = [
    ("A", 0, {"Res": "Kate", "Type": "Home"}),
    ("A", 30, {"Res": "John", "Type": "Car"}),
    ("B", 60, {"Res": "Kate", "Type": "Home"}),
    ("A", 90, {"Res": "Mark", "Type": "Car"}),
    ("B", 120, {"Res": "John", "Type": "Car"}),
    ("C", 180, {"Res": "Sue", "Type": "Home"}),
    ("C", 240, {"Res": "Claire", "Type": "Car"}),
    ("D", 270, {"Res": "Mark", "Type": "Car"}),
]

DEMO_RULES_TEXT = """\
e[i].Type == e[i-1].Type
IF e[i].Act == "B" AND e[j].Act == "A" THEN e[i].Res == e[j].Res
IF e[i].Act == "C" AND e[j].Act == "B" THEN e[i].Res != e[j].Res
IF e[i].Act == "B" THEN 30 <= duration <= 120
IF e[i].Act == "D" THEN 120 <= duration <= 150
"""

# A hand-checked correlation of the demo stream (not the ground truth):
# c1 = <e1,e3,e6>, c2 = <e2,e5,e7>, c3 = <e4,e8>.
DEMO_X = {1: "c1", 2: "c2", 3: "c1", 4: "c3", 5: "c2", 6: "c1", 7: "c2", 8: "c3"}
# The ground truth: c1 = <e1,e3,e6>, c2 = <e2,e5,e8>, c3 = <e4,e7>.
DEMO_TRUTH = {1: "c1", 2: "c2", 3: "c1", 4: "c3", 5: "c2", 6: "c1", 7: "c3", 8: "c2"}


def make_demo_stream() -> UncorrelatedLog:
    return build_uncorrelated_log(
        [(act, BASE + minutes, attrs) for act, minutes, attrs in DEMO_EVENTS]
    )


def make_demo_net() -> WorkflowNet:
    """Claim process: A, then either C directly or B (repeatable) then C or D."""
    return WorkflowNet(
        places=["q1", "q2", "q3", "q4"],
        transitions=[
            Transition("t1", "A"),
            Transition("t2", "B"),
            Transition("t3", "C"),
            Transition("t4", "D"),
            Transition("t5", None),
        ],
        arcs=[
            ("q1", "t1"),
            ("t1", "q2"),
            ("q2", "t2"),
            ("t2", "q3"),
            ("q2", "t3"),
            ("t3", "q4"),
            ("q3", "t4"),
            ("t4", "q4"),
            ("q3", "t5"),
            ("t5", "q2"),
        ],
    )


def make_loop_net() -> WorkflowNet:
    """A; loop over B with exits C (before B) or D (after B); then E and F in parallel."""
    return WorkflowNet(
        places=[f"p{i}" for i in range(1, 10)],
        transitions=[
            Transition("t1", "A"),
            Transition("t2", "B"),
            Transition("t3", "C"),
            Transition("t4", "D"),
            Transition("t5", None),
            Transition("t6", None),
            Transition("t7", "E"),
            Transition("t8", "F"),
            Transition("t9", None),
        ],
        arcs=[
            ("p1", "t1"),
            ("t1", "p2"),
            ("p2", "t2"),
            ("t2", "p3"),
            ("p2", "t3"),
            ("t3", "p4"),
            ("p3", "t4"),
            ("t4", "p4"),
            ("p3", "t5"),
            ("t5", "p2"),
            ("p4", "t6"),
            ("t6", "p5"),
            ("t6", "p6"),
            ("p5", "t7"),
            ("t7", "p7"),
            ("p6", "t8"),
            ("t8", "p8"),
            ("p7", "t9"),
            ("p8", "t9"),
            ("t9", "p9"),
        ],
    )


# Paired 9-event logs with hand-derived measure values.
PAIRED_ACTIVITIES = ["A", "A", "A", "B", "C", "C", "B", "B", "C"]
PAIRED_MINUTES = [0, 30, 40, 45, 60, 180, 240, 250, 290]
PAIRED_L = {1: "c1", 2: "c2", 3: "c3", 4: "c1", 5: "c1", 6: "c2", 7: "c2", 8: "c3", 9: "c3"}
PAIRED_L2 = {1: "c1", 2: "c2", 3: "c3", 4: "c1", 5: "c2", 6: "c3", 7: "c2", 8: "c3", 9: "c1"}


def make_paired_logs() -> tuple[EventLog, EventLog]:
    stream = build_uncorrelated_log(
        [(act, BASE + m, None) for act, m in zip(PAIRED_ACTIVITIES, PAIRED_MINUTES)]
    )
    return correlate(stream, PAIRED_L), correlate(stream, PAIRED_L2)


def make_demo_rules() -> RuleSet:
    return parse_rules(DEMO_RULES_TEXT)


@pytest.fixture
def demo_stream() -> UncorrelatedLog:
    return make_demo_stream()


@pytest.fixture
def demo_net() -> WorkflowNet:
    return make_demo_net()


@pytest.fixture
def demo_rules() -> RuleSet:
    return make_demo_rules()


@pytest.fixture
def demo_x(demo_stream) -> EventLog:
    return correlate(demo_stream, DEMO_X)


@pytest.fixture
def demo_truth(demo_stream) -> EventLog:
    return correlate(demo_stream, DEMO_TRUTH)


@pytest.fixture
def loop_net() -> WorkflowNet:
    return make_loop_net()


@pytest.fixture
def paired_logs() -> tuple[EventLog, EventLog]:
    return make_paired_logs()


def decorate_with_case_attrs(log: EventLog, attrs_for_case) -> EventLog:
    """Rebuild a correlated log with extra per-event attributes.

    ``attrs_for_case(case_id)`` returns the attribute dict merged into every
    event of that case.  Event order and indices are preserved.
    """
    records = []
    for event in log.base.events:
        merged = dict(event.attributes)
        merged.update(attrs_for_case(log.assignment[event.index]))
        records.append((event.activity, event.timestamp, merged))
    stream = build_uncorrelated_log(records)
    return correlate(stream, dict(log.assignment))


def seeded_rng(*parts) -> random.Random:
    """A Random whose seed derives from the test-local parts, for reproducibility."""
    return random.Random(zlib.crc32(repr(parts).encode()))
