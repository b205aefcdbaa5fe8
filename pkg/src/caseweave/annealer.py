"""Event-case correlation: greedy streaming decoder plus simulated annealing.

The decoder assigns one event at a time.  A start-activity event always opens a
new case.  Otherwise, open cases whose marking can reach the event's activity
(through silent transitions) compete on the number of satisfied rules; when no
open case can replay the activity, every existing case competes instead and the
winner's marking stays untouched, recording the event as a deviation.  Score
ties are broken uniformly at random.

The annealer keeps a population of candidate correlations.  A neighbor keeps a
prefix of the stream's assignments, replays it to rebuild case markings, and
re-decodes the suffix; the cut point is drawn closer to the end of the stream
as the level rises.  Candidates are compared lexicographically on the energy
triple (alignment cost fa, rule cost fr, duration variance ft); a worse
candidate is still adopted with probability exp(-delta/tau) under a
logarithmic cooling schedule.  The best individual ever seen is tracked
separately and never regresses.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .model import Case, Event, EventLog, InputError, UncorrelatedLog, correlate, elapsed_time
from .rules import RuleSet, rule_cost, score
from .wfnet import (
    DEFAULT_MARKING_BUDGET,
    DEFAULT_STATE_BUDGET,
    AlignmentCache,
    Marking,
    WorkflowNet,
    advance,
    enabled_activities,
    infer_start_activity,
    is_final,
    log_alignment_cost,
)


@dataclass
class AnnealerConfig:
    """Knobs for :func:`run`; defaults suit small to mid-size streams."""

    tau_init: float = 100.0
    s_max: int = 10
    population: int = 5
    seed: int = 0
    workers: int = 1
    marking_budget: int = DEFAULT_MARKING_BUDGET
    state_budget: int = DEFAULT_STATE_BUDGET
    # Recompute every energy without the shared alignment memo and compare.
    debug_recompute: bool = False


@dataclass(frozen=True)
class Individual:
    """A correlated log with its cached energy triple."""

    log: EventLog
    fa: int
    fr: float
    ft: float

    @property
    def energies(self) -> tuple[int, float, float]:
        return (self.fa, self.fr, self.ft)


@dataclass(frozen=True)
class IterationRecord:
    """One population slot after one annealing iteration."""

    s_curr: int
    tau_curr: float
    slot: int
    fa: int
    fr: float
    ft: float
    accepted: bool
    global_best_fa: int
    global_best_fr: float
    global_best_ft: float


@dataclass(frozen=True)
class AnnealerResult:
    best: Individual
    records: tuple[IterationRecord, ...]


@dataclass
class CaseRun:
    """Mutable per-case decoder state."""

    case_id: str
    events: list[Event] = field(default_factory=list)
    marking: Marking = field(default_factory=dict)
    closed: bool = False

    def as_case(self) -> Case:
        return Case(self.case_id, tuple(self.events))


class StreamDecoder:
    """Feeds events one by one and accumulates an index -> case assignment."""

    def __init__(
        self,
        net: WorkflowNet,
        rules: RuleSet,
        rng: random.Random,
        start_activity: str | None = None,
        marking_budget: int = DEFAULT_MARKING_BUDGET,
    ) -> None:
        self.net = net
        self.rules = rules
        self.rng = rng
        self.marking_budget = marking_budget
        self.start_activity = (
            start_activity
            if start_activity is not None
            else infer_start_activity(net, marking_budget)
        )
        self.cases: dict[str, CaseRun] = {}
        self.order: list[CaseRun] = []
        self.assignment: dict[int, str] = {}

    def open_case(self, case_id: str | None = None) -> CaseRun:
        if case_id is None:
            n = len(self.order) + 1
            while f"c{n}" in self.cases:
                n += 1
            case_id = f"c{n}"
        if case_id in self.cases:
            raise InputError(f"case id {case_id} already open")
        run = CaseRun(case_id=case_id, marking=self.net.initial_marking())
        self.cases[case_id] = run
        self.order.append(run)
        return run

    def _advance(self, run: CaseRun, activity: str) -> bool:
        """Replay ``activity`` in the case's marking if reachable; update closed."""
        nxt = advance(self.net, run.marking, activity, self.marking_budget)
        if nxt is None:
            return False
        run.marking = nxt
        run.closed = is_final(self.net, nxt, self.marking_budget)
        return True

    def _pick(self, candidates: Sequence[CaseRun], event: Event) -> CaseRun:
        if len(candidates) == 1:
            return candidates[0]
        scores = [score(self.rules, event, run.as_case()) for run in candidates]
        top = max(scores)
        tied = [run for run, s in zip(candidates, scores) if s == top]
        if len(tied) == 1:
            return tied[0]
        return self.rng.choice(tied)

    def step(self, event: Event) -> str:
        """Assign ``event`` to a case and return the chosen case id."""
        if event.activity == self.start_activity:
            chosen = self.open_case()
            if not self._advance(chosen, event.activity):
                raise InputError(
                    f"start activity {event.activity!r} cannot fire from the initial marking"
                )
        else:
            fitting = [
                run
                for run in self.order
                if not run.closed
                and event.activity
                in enabled_activities(self.net, run.marking, self.marking_budget)
            ]
            if fitting:
                chosen = self._pick(fitting, event)
                self._advance(chosen, event.activity)
            elif self.order:
                # No case can replay the activity: every case competes and the
                # winner absorbs the event without moving its marking.
                chosen = self._pick(list(self.order), event)
            else:
                chosen = self.open_case()
        chosen.events.append(event)
        self.assignment[event.index] = chosen.case_id
        return chosen.case_id

    def run(self, events: Iterable[Event]) -> dict[int, str]:
        for event in events:
            self.step(event)
        return self.assignment


def replay_prefix(
    decoder: StreamDecoder,
    stream: UncorrelatedLog,
    assignment: dict[int, str],
    cut: int,
) -> None:
    """Load events before 1-based ``cut`` into ``decoder`` with fixed case ids.

    Markings are rebuilt by replay: an event whose activity is reachable from
    its case's marking fires through the shortest silent prefix, anything else
    leaves the marking unchanged (same reading as decoder scenario 3).
    """
    for event in stream.events[: cut - 1]:
        case_id = assignment[event.index]
        run = decoder.cases.get(case_id)
        if run is None:
            run = decoder.open_case(case_id)
        decoder._advance(run, event.activity)
        run.events.append(event)
        decoder.assignment[event.index] = case_id


def _duration_samples(log: EventLog) -> list[tuple[str, int]]:
    """(activity, elapsed minutes) for every non-first event of every case."""
    samples: list[tuple[str, int]] = []
    for case in log.cases:
        for position in range(2, len(case.events) + 1):
            samples.append(
                (case.events[position - 1].activity, elapsed_time(case, position))
            )
    return samples


def duration_means(log: EventLog) -> dict[str, float]:
    """Mean elapsed time per activity, over non-first events of each case."""
    per_activity: dict[str, list[int]] = {}
    for activity, duration in _duration_samples(log):
        per_activity.setdefault(activity, []).append(duration)
    return {act: sum(vals) / len(vals) for act, vals in per_activity.items()}


def time_variance(log: EventLog) -> float:
    """Variance of inter-event durations around their per-activity means.

    Durations are taken per case over every non-first event; the denominator is
    the count of such events.  A log of singleton cases scores 0.
    """
    samples = _duration_samples(log)
    if not samples:
        return 0.0
    mean = duration_means(log)
    return sum((mean[act] - duration) ** 2 for act, duration in samples) / len(samples)


def evaluate_individual(
    stream: UncorrelatedLog,
    assignment: dict[int, str],
    net: WorkflowNet,
    rules: RuleSet,
    cache: AlignmentCache | None = None,
    config: AnnealerConfig | None = None,
) -> Individual:
    """Build the correlated log and compute its energy triple."""
    config = config or AnnealerConfig()
    log = correlate(stream, assignment)
    fa = log_alignment_cost(net, log, cache, config.state_budget)
    if config.debug_recompute and cache is not None:
        fresh = log_alignment_cost(net, log, None, config.state_budget)
        if fresh != fa:
            raise AssertionError(f"memoized alignment cost {fa} != recomputed {fresh}")
    fr = rule_cost(log, rules)
    ft = time_variance(log)
    return Individual(log=log, fa=fa, fr=fr, ft=ft)


def initial_individual(
    stream: UncorrelatedLog,
    net: WorkflowNet,
    rules: RuleSet,
    rng: random.Random,
    config: AnnealerConfig | None = None,
    cache: AlignmentCache | None = None,
    start_activity: str | None = None,
) -> Individual:
    """Decode the whole stream greedily and evaluate it."""
    config = config or AnnealerConfig()
    decoder = StreamDecoder(net, rules, rng, start_activity, config.marking_budget)
    assignment = decoder.run(stream.events)
    return evaluate_individual(stream, assignment, net, rules, cache, config)


def neighbor(
    stream: UncorrelatedLog,
    current: Individual,
    s_curr: int,
    net: WorkflowNet,
    rules: RuleSet,
    rng: random.Random,
    config: AnnealerConfig,
    start_activity: str | None = None,
) -> dict[int, str]:
    """Propose a new assignment by re-decoding a random suffix.

    The cut point is uniform on [floor(n * (s_curr - 1) / s_max) + 1, n], so
    early levels may rebuild everything and late levels only touch the tail.
    """
    n = len(stream)
    low = (n * (s_curr - 1)) // config.s_max + 1
    cut = rng.randint(low, n)
    decoder = StreamDecoder(net, rules, rng, start_activity, config.marking_budget)
    replay_prefix(decoder, stream, current.log.assignment, cut)
    for event in stream.events[cut - 1 :]:
        decoder.step(event)
    return decoder.assignment


def delta_cost(current: Individual, candidate: Individual) -> float:
    """Energy increase along the first lexicographic component that got worse."""
    if candidate.fa > current.fa:
        return float(candidate.fa - current.fa)
    if candidate.fr > current.fr:
        return candidate.fr - current.fr
    return candidate.ft - current.ft


def acceptance_prob(delta: float, tau: float) -> float:
    """exp(-delta / tau); above 1 means certain acceptance."""
    if tau <= 0:
        raise InputError(f"temperature must be positive, got {tau}")
    exponent = -delta / tau
    if exponent >= 709.0:  # math.exp overflows just past this
        return math.inf
    return math.exp(exponent)


def cooling(tau_init: float, s_curr: int) -> float:
    """Logarithmic schedule tau_init / ln(1 + s)."""
    if s_curr < 1:
        raise InputError(f"level must be at least 1, got {s_curr}")
    return tau_init / math.log(1 + s_curr)


def select_next(
    current: Individual, candidate: Individual, tau: float, rng: random.Random
) -> Individual:
    """Lexicographic improvement wins outright; anything else needs the coin.

    The RNG is consulted only when the candidate does not improve the deciding
    component, so equal-or-better proposals never disturb the random stream.
    """
    if candidate.fa < current.fa:
        return candidate
    if candidate.fa == current.fa:
        if candidate.fr < current.fr:
            return candidate
        if candidate.fr == current.fr:
            if candidate.ft < current.ft or acceptance_prob(
                delta_cost(current, candidate), tau
            ) >= rng.random():
                return candidate
            return current
    if acceptance_prob(delta_cost(current, candidate), tau) >= rng.random():
        return candidate
    return current


def _lex_best(best: Individual | None, contenders: Iterable[Individual]) -> Individual:
    for candidate in contenders:
        if best is None or candidate.energies < best.energies:
            best = candidate
    if best is None:
        raise InputError("empty population")
    return best


def run(
    stream: UncorrelatedLog,
    net: WorkflowNet,
    rules: RuleSet,
    config: AnnealerConfig | None = None,
) -> AnnealerResult:
    """Population annealing over suffix re-decodes; deterministic per seed.

    Each slot owns a Random seeded from one master stream, so slot trajectories
    are independent of scheduling; with ``workers > 1`` the slots advance in a
    thread pool and the global best is reduced once per iteration in slot
    order, which keeps parallel output identical to serial output.
    """
    config = config or AnnealerConfig()
    if config.population < 1 or config.s_max < 1:
        raise InputError("population and s_max must be at least 1")
    start_activity = infer_start_activity(net, config.marking_budget)
    cache = AlignmentCache()
    master = random.Random(config.seed)
    rngs = [random.Random(master.getrandbits(64)) for _ in range(config.population)]

    def build(slot: int) -> Individual:
        return initial_individual(
            stream, net, rules, rngs[slot], config, cache, start_activity
        )

    def step(args: tuple[int, int, float]) -> tuple[Individual, bool]:
        slot, s_curr, tau = args
        current = population[slot]
        proposal = neighbor(
            stream, current, s_curr, net, rules, rngs[slot], config, start_activity
        )
        candidate = evaluate_individual(stream, proposal, net, rules, cache, config)
        chosen = select_next(current, candidate, tau, rngs[slot])
        return chosen, chosen is candidate

    slots = range(config.population)
    pool = ThreadPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
    try:
        mapper = pool.map if pool is not None else map
        population = list(mapper(build, slots))
        best = _lex_best(None, population)
        records: list[IterationRecord] = []
        for s_curr in range(1, config.s_max + 1):
            tau = cooling(config.tau_init, s_curr)
            outcomes = list(mapper(step, [(slot, s_curr, tau) for slot in slots]))
            for slot, (chosen, _accepted) in zip(slots, outcomes):
                population[slot] = chosen
            best = _lex_best(best, population)
            for slot, (chosen, accepted) in zip(slots, outcomes):
                records.append(
                    IterationRecord(
                        s_curr=s_curr,
                        tau_curr=tau,
                        slot=slot,
                        fa=chosen.fa,
                        fr=chosen.fr,
                        ft=chosen.ft,
                        accepted=accepted,
                        global_best_fa=best.fa,
                        global_best_fr=best.fr,
                        global_best_ft=best.ft,
                    )
                )
    finally:
        if pool is not None:
            pool.shutdown()
    return AnnealerResult(best=best, records=tuple(records))
