"""Correlation constraint DSL: parsing, printing, and evaluation.

Three rule shapes, one per line, ``#`` starts a comment:

    e[i].Attr == e[i-1].Attr
    IF <cond> AND <cond> ... THEN <boolean tree over consequences>
    IF <cond> AND <cond> ... THEN <min> <= duration <= <max>

Conditions compare ``e[i]`` or ``e[j]`` attributes against constants.
Consequences compare ``e[j]`` against a constant or ``e[i]`` against ``e[j]``
attribute-to-attribute, combined with AND/OR and parentheses.  ``e[j]`` is the
closest earlier event whose conditions hold; rules that never mention ``e[j]``
in their conditions read it as the immediate predecessor.  Duration rules bound
the minutes between ``e[i]`` and its predecessor.

Attribute names resolve against the event payload; ``Act`` is the activity and
``Ts`` the timestamp.  A comparison with a missing attribute is unsatisfied,
never an error.  Both sides parsing as integers compare numerically, anything
else compares as strings.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

from .model import Case, Event, EventLog, InputError, Scalar

OPS = ("<=", ">=", "==", "!=", "<", ">")


class RuleSyntaxError(InputError):
    """Rule text that does not parse; message carries line and column."""


@dataclass(frozen=True)
class Comparison:
    """One comparison: ``subject`` is "i" or "j"; constant or i-vs-j form.

    ``rhs_attr`` set means the right side is ``e[j].rhs_attr`` (and subject is
    "i"); otherwise ``value`` is the constant right side.
    """

    subject: str
    attr: str
    op: str
    value: Scalar | None = None
    rhs_attr: str | None = None


@dataclass(frozen=True)
class And:
    items: tuple["Expr", ...]


@dataclass(frozen=True)
class Or:
    items: tuple["Expr", ...]


Expr = Union[Comparison, And, Or]


@dataclass(frozen=True)
class EqRule:
    """Attribute must match the immediate predecessor's."""

    label: str
    attribute: str


@dataclass(frozen=True)
class IfThenRule:
    label: str
    conditions: tuple[Comparison, ...]
    consequence: Expr
    uses_j: bool


@dataclass(frozen=True)
class EventTimeRule:
    label: str
    conditions: tuple[Comparison, ...]
    dur_min: int
    dur_max: int


Rule = Union[EqRule, IfThenRule, EventTimeRule]


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...]

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)


@dataclass
class RuleDiagnostics:
    """Collects soft findings during evaluation (missing attributes, padding)."""

    missing_attributes: list[tuple[int, str]] = field(default_factory=list)

    def record_missing(self, event_index: int, attribute: str) -> None:
        self.missing_attributes.append((event_index, attribute))


# ---------------------------------------------------------------------------
# Tokenizer and parser


_TOKEN_RE = re.compile(
    r"""
      (?P<ws>[ \t]+)
    | (?P<eref>e\[i-1\]|e\[i\]|e\[j\])
    | (?P<op><=|>=|==|!=|<|>)
    | (?P<int>-?\d+)
    | (?P<string>"[^"\n]*")
    | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<dot>\.)
    | (?P<lparen>\()
    | (?P<rparen>\))
    """,
    re.VERBOSE,
)

_KEYWORDS = {"IF", "THEN", "AND", "OR", "duration"}


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    col: int


def _tokenize_line(text: str, line_no: int) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        if text[pos] == "#":
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise RuleSyntaxError(f"line {line_no}, column {pos + 1}: unexpected {text[pos]!r}")
        kind = m.lastgroup or ""
        if kind != "ws":
            token_text = m.group()
            if kind == "name" and token_text in _KEYWORDS:
                kind = "kw"
            tokens.append(_Token(kind, token_text, line_no, pos + 1))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], line_no: int) -> None:
        self.tokens = tokens
        self.line_no = line_no
        self.pos = 0

    def _err(self, message: str) -> RuleSyntaxError:
        col = self.tokens[self.pos].col if self.pos < len(self.tokens) else (
            self.tokens[-1].col + len(self.tokens[-1].text) if self.tokens else 1
        )
        return RuleSyntaxError(f"line {self.line_no}, column {col}: {message}")

    def peek(self, kind: str | None = None, text: str | None = None) -> _Token | None:
        if self.pos >= len(self.tokens):
            return None
        tok = self.tokens[self.pos]
        if kind is not None and tok.kind != kind:
            return None
        if text is not None and tok.text != text:
            return None
        return tok

    def take(self, kind: str, text: str | None = None, what: str = "") -> _Token:
        tok = self.peek(kind, text)
        if tok is None:
            raise self._err(f"expected {what or text or kind}")
        self.pos += 1
        return tok

    def at_end(self) -> bool:
        return self.pos >= len(self.tokens)

    # attr: bare identifier or quoted string
    def parse_attr(self) -> str:
        tok = self.peek("name") or self.peek("string")
        if tok is None:
            raise self._err("expected an attribute name")
        self.pos += 1
        return tok.text[1:-1] if tok.kind == "string" else tok.text

    def parse_const(self) -> Scalar:
        tok = self.peek("string") or self.peek("int") or self.peek("name")
        if tok is None:
            raise self._err("expected a constant")
        self.pos += 1
        if tok.kind == "string":
            return tok.text[1:-1]
        if tok.kind == "int":
            return int(tok.text)
        return tok.text  # bare word constant reads as a string

    def parse_rule(self, label: str) -> Rule:
        if self.peek("kw", "IF"):
            return self.parse_if_rule(label)
        return self.parse_eq_rule(label)

    def parse_eq_rule(self, label: str) -> EqRule:
        lead = self.take("eref", what="e[i]")
        if lead.text != "e[i]":
            raise self._err("plain attribute rules start with e[i]")
        self.take("dot", what=".")
        attr = self.parse_attr()
        self.take("op", "==", what="==")
        rhs = self.take("eref", what="e[i-1]")
        if rhs.text != "e[i-1]":
            raise self._err("plain attribute rules compare against e[i-1]")
        self.take("dot", what=".")
        rhs_attr = self.parse_attr()
        if rhs_attr != attr:
            raise self._err(f"attribute mismatch: {attr} vs {rhs_attr}")
        if not self.at_end():
            raise self._err("unexpected trailing input")
        return EqRule(label=label, attribute=attr)

    def parse_if_rule(self, label: str) -> Rule:
        self.take("kw", "IF")
        conditions = [self.parse_condition()]
        while self.peek("kw", "AND"):
            self.pos += 1
            conditions.append(self.parse_condition())
        self.take("kw", "THEN", what="THEN")
        if self.peek("int") is not None:
            rule = self.parse_duration_tail(label, tuple(conditions))
        else:
            consequence = self.parse_or()
            uses_j = any(c.subject == "j" for c in conditions)
            rule = IfThenRule(
                label=label,
                conditions=tuple(conditions),
                consequence=consequence,
                uses_j=uses_j,
            )
        if not self.at_end():
            raise self._err("unexpected trailing input")
        return rule

    def parse_condition(self) -> Comparison:
        ref = self.take("eref", what="e[i] or e[j]")
        if ref.text == "e[i-1]":
            raise self._err("conditions may reference e[i] or e[j] only")
        subject = "i" if ref.text == "e[i]" else "j"
        self.take("dot", what=".")
        attr = self.parse_attr()
        op = self.take("op", what="a comparison operator").text
        value = self.parse_const()
        return Comparison(subject=subject, attr=attr, op=op, value=value)

    def parse_duration_tail(self, label: str, conditions: tuple[Comparison, ...]) -> EventTimeRule:
        if any(c.subject == "j" for c in conditions):
            raise self._err("duration rules may not constrain e[j]")
        lo = int(self.take("int").text)
        self.take("op", "<=", what="<=")
        self.take("kw", "duration", what="duration")
        self.take("op", "<=", what="<=")
        hi = int(self.take("int").text)
        if lo > hi:
            raise self._err(f"empty duration range [{lo}, {hi}]")
        return EventTimeRule(label=label, conditions=conditions, dur_min=lo, dur_max=hi)

    # consequence grammar: OR of ANDs of atoms, parentheses regroup
    def parse_or(self) -> Expr:
        items = [self.parse_and()]
        while self.peek("kw", "OR"):
            self.pos += 1
            items.append(self.parse_and())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def parse_and(self) -> Expr:
        items = [self.parse_atom()]
        while self.peek("kw", "AND"):
            self.pos += 1
            items.append(self.parse_atom())
        return items[0] if len(items) == 1 else And(tuple(items))

    def parse_atom(self) -> Expr:
        if self.peek("lparen"):
            self.pos += 1
            inner = self.parse_or()
            self.take("rparen", what=")")
            return inner
        ref = self.take("eref", what="e[i] or e[j]")
        if ref.text == "e[i-1]":
            raise self._err("consequences may reference e[i] or e[j] only")
        self.take("dot", what=".")
        attr = self.parse_attr()
        op = self.take("op", what="a comparison operator").text
        if ref.text == "e[i]":
            rhs = self.take("eref", what="e[j]")
            if rhs.text != "e[j]":
                raise self._err("attribute-to-attribute consequences compare e[i] with e[j]")
            self.take("dot", what=".")
            rhs_attr = self.parse_attr()
            return Comparison(subject="i", attr=attr, op=op, rhs_attr=rhs_attr)
        value = self.parse_const()
        return Comparison(subject="j", attr=attr, op=op, value=value)


def parse_rules(text: str) -> RuleSet:
    """Parse rule text; labels are C1, C2, ... in line order."""
    rules: list[Rule] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        tokens = _tokenize_line(raw, line_no)
        if not tokens:
            continue
        parser = _Parser(tokens, line_no)
        rules.append(parser.parse_rule(f"C{len(rules) + 1}"))
    return RuleSet(rules=tuple(rules))


# ---------------------------------------------------------------------------
# Pretty printing (canonical form; parse(pretty(rs)) == rs)


_BARE_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")


def _fmt_attr(attr: str) -> str:
    return attr if _BARE_NAME.fullmatch(attr) and attr not in _KEYWORDS else f'"{attr}"'


def _fmt_const(value: Scalar) -> str:
    return str(value) if isinstance(value, int) else f'"{value}"'


def _fmt_comparison(c: Comparison) -> str:
    lhs = f"e[{c.subject}].{_fmt_attr(c.attr)}"
    if c.rhs_attr is not None:
        return f"{lhs} {c.op} e[j].{_fmt_attr(c.rhs_attr)}"
    return f"{lhs} {c.op} {_fmt_const(c.value)}"


def _fmt_expr(expr: Expr, parent: str = "or") -> str:
    if isinstance(expr, Comparison):
        return _fmt_comparison(expr)
    if isinstance(expr, And):
        return " AND ".join(_fmt_expr(item, "and") for item in expr.items)
    body = " OR ".join(_fmt_expr(item, "or") for item in expr.items)
    return f"({body})" if parent == "and" else body


def pretty_rules(ruleset: RuleSet) -> str:
    lines = []
    for rule in ruleset.rules:
        if isinstance(rule, EqRule):
            attr = _fmt_attr(rule.attribute)
            lines.append(f"e[i].{attr} == e[i-1].{attr}")
        elif isinstance(rule, EventTimeRule):
            conds = " AND ".join(_fmt_comparison(c) for c in rule.conditions)
            lines.append(f"IF {conds} THEN {rule.dur_min} <= duration <= {rule.dur_max}")
        else:
            conds = " AND ".join(_fmt_comparison(c) for c in rule.conditions)
            lines.append(f"IF {conds} THEN {_fmt_expr(rule.consequence)}")
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# Evaluation


_INT_RE = re.compile(r"-?\d+$")


def _as_int(value: Scalar) -> int | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return value
    if isinstance(value, str) and _INT_RE.fullmatch(value):
        return int(value)
    return None


def _compare(lhs: Scalar | None, op: str, rhs: Scalar | None) -> bool:
    """Missing operands are never satisfied; ints beat lexicographic order."""
    if lhs is None or rhs is None:
        return False
    li, ri = _as_int(lhs), _as_int(rhs)
    a, b = (li, ri) if li is not None and ri is not None else (str(lhs), str(rhs))
    if op == "==":
        return a == b
    if op == "!=":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def _attr_value(event: Event, name: str, diag: RuleDiagnostics | None) -> Scalar | None:
    if name == "Act":
        return event.activity
    if name == "Ts":
        return event.timestamp
    value = event.attributes.get(name)
    if value is None and diag is not None:
        diag.record_missing(event.index, name)
    return value


def _conds_hold(
    conditions: tuple[Comparison, ...],
    subject: str,
    event: Event,
    diag: RuleDiagnostics | None,
) -> bool:
    return all(
        _compare(_attr_value(event, c.attr, diag), c.op, c.value)
        for c in conditions
        if c.subject == subject
    )


def _eval_expr(expr: Expr, e_i: Event, e_j: Event, diag: RuleDiagnostics | None) -> bool:
    if isinstance(expr, Comparison):
        if expr.rhs_attr is not None:
            return _compare(
                _attr_value(e_i, expr.attr, diag), expr.op, _attr_value(e_j, expr.rhs_attr, diag)
            )
        return _compare(_attr_value(e_j, expr.attr, diag), expr.op, expr.value)
    if isinstance(expr, And):
        return all(_eval_expr(item, e_i, e_j, diag) for item in expr.items)
    return any(_eval_expr(item, e_i, e_j, diag) for item in expr.items)


def _closest_j(
    rule: IfThenRule, events: tuple[Event, ...], upto: int, diag: RuleDiagnostics | None
) -> Event | None:
    """Nearest earlier event whose j-conditions hold; positions upto-1 .. 1."""
    for k in range(upto - 1, 0, -1):
        if _conds_hold(rule.conditions, "j", events[k - 1], diag):
            return events[k - 1]
    return None


def e_sat(rule: Rule, event: Event, case: Case, diag: RuleDiagnostics | None = None) -> int:
    """1 when appending ``event`` to ``case`` positively satisfies the rule.

    The event is read as the tentative last event of the case.  A rule whose
    conditions do not apply scores 0, not 1: vacuous truth earns nothing.
    """
    events = case.events
    if isinstance(rule, EqRule):
        if not events:
            return 0
        lhs = _attr_value(event, rule.attribute, diag)
        rhs = _attr_value(events[-1], rule.attribute, diag)
        return int(_compare(lhs, "==", rhs))
    if isinstance(rule, EventTimeRule):
        if not _conds_hold(rule.conditions, "i", event, diag) or not events:
            return 0
        duration = event.timestamp - events[-1].timestamp
        return int(rule.dur_min <= duration <= rule.dur_max)
    if not _conds_hold(rule.conditions, "i", event, diag):
        return 0
    if rule.uses_j:
        anchor = _closest_j(rule, events, len(events) + 1, diag)
    else:
        anchor = events[-1] if events else None
    if anchor is None:
        return 0
    return int(_eval_expr(rule.consequence, event, anchor, diag))


def score(
    rules: RuleSet, event: Event, case: Case, diag: RuleDiagnostics | None = None
) -> int:
    """Number of rules the tentative assignment of ``event`` to ``case`` satisfies."""
    return sum(e_sat(rule, event, case, diag) for rule in rules)


def trigger(rule: Rule, case: Case, diag: RuleDiagnostics | None = None) -> bool:
    """Whether the case activates the rule at all (plain attribute rules always do)."""
    events = case.events
    if isinstance(rule, EqRule):
        return True
    if isinstance(rule, EventTimeRule):
        return any(_conds_hold(rule.conditions, "i", e, diag) for e in events)
    if not rule.uses_j:
        return any(_conds_hold(rule.conditions, "i", e, diag) for e in events)
    for i in range(2, len(events) + 1):
        if _conds_hold(rule.conditions, "i", events[i - 1], diag) and (
            _closest_j(rule, events, i, diag) is not None
        ):
            return True
    return False


def e_vio(
    rule: Rule, case: Case, position: int, diag: RuleDiagnostics | None = None
) -> bool:
    """Whether the event at 1-based ``position`` violates the rule in its case.

    A rule whose conditions do not reach the position cannot be violated there;
    in particular nothing violates at position 1 except an applicable rule whose
    consequence fails against a committed earlier anchor (impossible at 1).
    """
    events = case.events
    event = events[position - 1]
    if isinstance(rule, EqRule):
        if position == 1:
            return False
        lhs = _attr_value(event, rule.attribute, diag)
        rhs = _attr_value(events[position - 2], rule.attribute, diag)
        return not _compare(lhs, "==", rhs)
    if isinstance(rule, EventTimeRule):
        if position == 1 or not _conds_hold(rule.conditions, "i", event, diag):
            return False
        duration = event.timestamp - events[position - 2].timestamp
        return not rule.dur_min <= duration <= rule.dur_max
    if not _conds_hold(rule.conditions, "i", event, diag):
        return False
    if rule.uses_j:
        anchor = _closest_j(rule, events, position, diag)
    else:
        anchor = events[position - 2] if position >= 2 else None
    if anchor is None:
        return False
    return not _eval_expr(rule.consequence, event, anchor, diag)


def vio(rule: Rule, case: Case, diag: RuleDiagnostics | None = None) -> bool:
    """Whether any position of the case violates the rule."""
    return any(e_vio(rule, case, p, diag) for p in range(1, len(case.events) + 1))


def rule_cost(log: EventLog, rules: RuleSet, diag: RuleDiagnostics | None = None) -> float:
    """Mean over cases of (violated triggered rules / triggered rules).

    Cases that trigger nothing contribute 0.  Always within [0, 1].
    """
    if not rules.rules or not log.cases:
        return 0.0
    total = 0.0
    for case in log.cases:
        triggered = [rule for rule in rules if trigger(rule, case, diag)]
        if not triggered:
            continue
        violated = sum(vio(rule, case, diag) for rule in triggered)
        total += violated / len(triggered)
    return total / len(log.cases)
