"""Transition-system models and parsers.

Two system kinds are supported: labelled transition systems (LTS), read
from Aldebaran ``.aut`` text, and generative probabilistic transition
systems (PTS), read from a simple line format with exact rational
weights.  Parsed systems are immutable and safe to share.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Union

# Exact rational arithmetic throughout; Fraction keeps gcd(num, den) = 1
# and den > 0, which is exactly the invariant the probabilistic side needs.
Rational = Fraction


class ParseError(ValueError):
    """Raised when a system description cannot be parsed."""


class SystemError_(ValueError):
    """Raised when a system violates a structural invariant."""


@dataclass(frozen=True)
class LabelledTransitionSystem:
    """A finite LTS over an ordered alphabet of action labels.

    Transitions are stored as (source, label index, target) triples; the
    alphabet maps label indices back to label strings.
    """

    num_states: int
    alphabet: tuple[str, ...]
    transitions: frozenset[tuple[int, int, int]]
    initial: int = 0
    _succ: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.num_states < 0:
            raise SystemError_("num_states must be non-negative")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise SystemError_("alphabet entries must be unique")
        for (src, lab, dst) in self.transitions:
            if not (0 <= src < self.num_states and 0 <= dst < self.num_states):
                raise SystemError_(f"transition ({src},{lab},{dst}) out of state range")
            if not (0 <= lab < len(self.alphabet)):
                raise SystemError_(f"transition ({src},{lab},{dst}) out of label range")
        succ: dict[tuple[int, int], list[int]] = {}
        for (src, lab, dst) in sorted(self.transitions):
            succ.setdefault((src, lab), []).append(dst)
        self._succ.update(succ)

    @property
    def num_labels(self) -> int:
        return len(self.alphabet)

    def successors(self, state: int, label: int) -> tuple[int, ...]:
        """Targets of `label`-transitions leaving `state`, ascending."""
        return tuple(self._succ.get((state, label), ()))

    def moves(self, state: int) -> tuple[tuple[int, int], ...]:
        """All (label, target) pairs leaving `state`, sorted."""
        out = []
        for lab in range(self.num_labels):
            for dst in self.successors(state, lab):
                out.append((lab, dst))
        return tuple(out)

    def enabled(self, state: int) -> frozenset[int]:
        """Labels with at least one transition from `state`."""
        return frozenset(lab for lab in range(self.num_labels)
                         if self._succ.get((state, lab)))

    def label_index(self, label: str) -> int:
        try:
            return self.alphabet.index(label)
        except ValueError:
            raise SystemError_(f"unknown label {label!r}") from None


@dataclass(frozen=True)
class ProbabilisticTransitionSystem:
    """A generative PTS: each state carries a distribution on (label, target).

    Every state's weights must be positive and sum exactly to 1, checked
    with exact rational arithmetic.
    """

    num_states: int
    alphabet: tuple[str, ...]
    rows: tuple[tuple[tuple[int, int, Rational], ...], ...]
    initial: int = 0

    def __post_init__(self):
        if len(set(self.alphabet)) != len(self.alphabet):
            raise SystemError_("alphabet entries must be unique")
        if len(self.rows) != self.num_states:
            raise SystemError_("one row per state required")
        for state, row in enumerate(self.rows):
            total = Fraction(0)
            seen = set()
            for (lab, dst, w) in row:
                if not (0 <= lab < len(self.alphabet)):
                    raise SystemError_(f"state {state}: label index {lab} out of range")
                if not (0 <= dst < self.num_states):
                    raise SystemError_(f"state {state}: target {dst} out of range")
                if w <= 0:
                    raise SystemError_(f"state {state}: non-positive weight {w}")
                if (lab, dst) in seen:
                    raise SystemError_(f"state {state}: duplicate entry for label/target")
                seen.add((lab, dst))
                total += w
            if total != 1:
                raise SystemError_(f"weights at state {state} sum to {total}")

    @property
    def num_labels(self) -> int:
        return len(self.alphabet)

    def row(self, state: int) -> tuple[tuple[int, int, Rational], ...]:
        return self.rows[state]

    def weight(self, state: int, label: int, target: int) -> Rational:
        for (lab, dst, w) in self.rows[state]:
            if lab == label and dst == target:
                return w
        return Fraction(0)

    def moves(self, state: int) -> tuple[tuple[int, int], ...]:
        return tuple((lab, dst) for (lab, dst, _w) in sorted(self.rows[state]))

    def label_index(self, label: str) -> int:
        try:
            return self.alphabet.index(label)
        except ValueError:
            raise SystemError_(f"unknown label {label!r}") from None


TransitionSystem = Union[LabelledTransitionSystem, ProbabilisticTransitionSystem]


def _split_aut_triple(body: str, lineno: int) -> tuple[str, str, str]:
    # (src, label, dst) with the label possibly quoted; quoted labels may
    # contain commas and spaces.
    body = body.strip()
    if not (body.startswith("(") and body.endswith(")")):
        raise ParseError(f"line {lineno}: transition must be parenthesized: {body!r}")
    inner = body[1:-1]
    head, _, rest = inner.partition(",")
    rest, _, tail = rest.rpartition(",")
    if not _ or not rest.strip():
        raise ParseError(f"line {lineno}: malformed transition {body!r}")
    return head.strip(), rest.strip(), tail.strip()


def parse_aut(text: str) -> LabelledTransitionSystem:
    """Parse an Aldebaran ``.aut`` document.

    Header ``des (init, m, n)`` declares the initial state, the number of
    transition lines and the number of states.  Each following line has the
    shape ``(src, "label", dst)``; the quotes are optional when the label
    contains no spaces or commas.  The alphabet is the labels in order of
    first occurrence.  Duplicate transitions are dropped with a warning.
    """
    lines = [ln for ln in (raw.strip() for raw in text.splitlines()) if ln]
    if not lines:
        raise ParseError("empty document")
    header = lines[0]
    if not header.startswith("des"):
        raise ParseError(f"malformed header: {header!r}")
    spec = header[3:].strip()
    if not (spec.startswith("(") and spec.endswith(")")):
        raise ParseError(f"malformed header: {header!r}")
    parts = [p.strip() for p in spec[1:-1].split(",")]
    if len(parts) != 3:
        raise ParseError(f"malformed header: {header!r}")
    try:
        init, m, n = (int(p) for p in parts)
    except ValueError:
        raise ParseError(f"malformed header: {header!r}") from None
    if n < 1 or not (0 <= init < n):
        raise ParseError(f"initial state {init} out of range [0,{n})")
    body = lines[1:]
    if len(body) != m:
        raise ParseError(f"transition count mismatch: header says {m}, found {len(body)}")

    alphabet: list[str] = []
    index: dict[str, int] = {}
    transitions: set[tuple[int, int, int]] = set()
    for offset, line in enumerate(body, start=2):
        src_s, label, dst_s = _split_aut_triple(line, offset)
        if len(label) >= 2 and label[0] == '"' and label[-1] == '"':
            label = label[1:-1]
        try:
            src, dst = int(src_s), int(dst_s)
        except ValueError:
            raise ParseError(f"line {offset}: malformed transition {line!r}") from None
        if not (0 <= src < n and 0 <= dst < n):
            raise ParseError(f"line {offset}: state index out of range [0,{n})")
        if label not in index:
            index[label] = len(alphabet)
            alphabet.append(label)
        triple = (src, index[label], dst)
        if triple in transitions:
            warnings.warn(f"duplicate transition ({src},{label!r},{dst}) dropped")
        transitions.add(triple)
    return LabelledTransitionSystem(
        num_states=n,
        alphabet=tuple(alphabet),
        transitions=frozenset(transitions),
        initial=init,
    )


def render_aut(lts: LabelledTransitionSystem) -> str:
    """Render an LTS as ``.aut`` text with canonical transition order."""
    lines = [f"des ({lts.initial},{len(lts.transitions)},{lts.num_states})"]
    for (src, lab, dst) in sorted(lts.transitions):
        lines.append(f'({src},"{lts.alphabet[lab]}",{dst})')
    return "\n".join(lines) + "\n"


def parse_pts(text: str) -> ProbabilisticTransitionSystem:
    """Parse a PTS document.

    The header line is ``pts n label...`` (state count, then the alphabet in
    order); each following non-empty line is ``src label p/q dst``.  Weights
    are exact rationals; each state's weights must sum to 1.
    """
    lines = [ln for ln in (raw.strip() for raw in text.splitlines()) if ln]
    if not lines:
        raise ParseError("empty document")
    head = lines[0].split()
    if len(head) < 2 or head[0] != "pts":
        raise ParseError(f"malformed header: {lines[0]!r}")
    try:
        n = int(head[1])
    except ValueError:
        raise ParseError(f"malformed header: {lines[0]!r}") from None
    alphabet = tuple(head[2:])
    if len(set(alphabet)) != len(alphabet):
        raise ParseError("alphabet entries must be unique")
    index = {lab: i for i, lab in enumerate(alphabet)}
    rows: list[list[tuple[int, int, Rational]]] = [[] for _ in range(n)]
    for offset, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != 4:
            raise ParseError(f"line {offset}: expected 'src label p/q dst', got {line!r}")
        src_s, label, weight_s, dst_s = parts
        try:
            src, dst = int(src_s), int(dst_s)
            w = Fraction(weight_s)
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"line {offset}: malformed entry {line!r}") from None
        if not (0 <= src < n and 0 <= dst < n):
            raise ParseError(f"line {offset}: state index out of range [0,{n})")
        if label not in index:
            raise ParseError(f"line {offset}: label {label!r} not in declared alphabet")
        if w <= 0:
            raise ParseError(f"line {offset}: non-positive weight {w}")
        rows[src].append((index[label], dst, w))
    for state in range(n):
        total = sum((w for (_l, _d, w) in rows[state]), Fraction(0))
        if total != 1:
            raise ParseError(f"weights at state {state} sum to {total}")
    try:
        return ProbabilisticTransitionSystem(
            num_states=n,
            alphabet=alphabet,
            rows=tuple(tuple(sorted(r)) for r in rows),
        )
    except SystemError_ as exc:
        raise ParseError(str(exc)) from None


def reachable(sys: TransitionSystem, seeds: Iterable[int]) -> frozenset[int]:
    """Least set of states containing `seeds` and closed under transitions."""
    seen: set[int] = set()
    frontier = list(seeds)
    for s in frontier:
        if not (0 <= s < sys.num_states):
            raise SystemError_(f"seed state {s} out of range")
    while frontier:
        x = frontier.pop()
        if x in seen:
            continue
        seen.add(x)
        for (_lab, dst) in sys.moves(x):
            if dst not in seen:
                frontier.append(dst)
    return frozenset(seen)


def deadlock_states(lts: LabelledTransitionSystem) -> frozenset[int]:
    """States with no outgoing transition; empty iff the LTS is serial."""
    return frozenset(x for x in range(lts.num_states) if not lts.moves(x))


def disjoint_union(a: TransitionSystem, b: TransitionSystem) -> TransitionSystem:
    """Combine two systems of the same kind side by side.

    States of `b` are shifted by ``a.num_states``; the alphabet is `a`'s
    followed by whatever `b` adds, so queries comparing a state of `a`
    with a state of `b` can run on the combined system.
    """
    if type(a) is not type(b):
        raise SystemError_("cannot combine a labelled with a probabilistic system")
    alphabet = list(a.alphabet)
    remap = {}
    for i, lab in enumerate(b.alphabet):
        if lab not in alphabet:
            alphabet.append(lab)
        remap[i] = alphabet.index(lab)
    offset = a.num_states
    if isinstance(a, LabelledTransitionSystem):
        transitions = set(a.transitions)
        transitions.update((src + offset, remap[lab], dst + offset)
                           for (src, lab, dst) in b.transitions)
        return LabelledTransitionSystem(
            num_states=a.num_states + b.num_states,
            alphabet=tuple(alphabet),
            transitions=frozenset(transitions),
            initial=a.initial,
        )
    rows = list(a.rows)
    rows += [tuple(sorted((remap[lab], dst + offset, w) for (lab, dst, w) in row))
             for row in b.rows]
    return ProbabilisticTransitionSystem(
        num_states=a.num_states + b.num_states,
        alphabet=tuple(alphabet),
        rows=tuple(rows),
        initial=a.initial,
    )
