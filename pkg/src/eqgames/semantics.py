"""Semantics instances: determinized states and one-step successor profiles.

Each of the six supported equivalences is driven by three ingredients:
how a plain system state embeds into a determinized state (`embed`), how a
determinized state makes one observable step (`step`), and what is
observable at depth zero (`depth0_key`).  Successor profiles are the
canonical normal forms of one step:

* bisimilarity / simulation -- the raw (label, successor) set of a state;
* trace / serial trace       -- one successor set per label;
* probabilistic trace        -- per label, a weight and a conditional
                                distribution;
* failure                    -- the trace map plus the maximal refusal sets.

Profiles are immutable; continuation slots are generic so the exploration
engine can re-key them by integer ids without re-deriving the shapes.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

from .systems import (ProbabilisticTransitionSystem, TransitionSystem,
                      deadlock_states)


class InstanceViolation(ValueError):
    """The chosen semantics does not apply to the given system or state."""


class Semantics(enum.Enum):
    BISIMILARITY = "bisimilarity"
    TRACE = "trace"
    SERIAL_TRACE = "serial-trace"
    PROBABILISTIC_TRACE = "probabilistic-trace"
    SIMULATION = "simulation"
    FAILURE = "failure"

    @classmethod
    def parse(cls, name: str) -> "Semantics":
        key = name.strip().lower().replace("_", "-")
        for sem in cls:
            if sem.value == key:
                return sem
        raise ValueError(f"unknown semantics {name!r}; choose from "
                         + ", ".join(s.value for s in cls))

    @property
    def on_pts(self) -> bool:
        return self is Semantics.PROBABILISTIC_TRACE

    @property
    def requires_serial(self) -> bool:
        # Serial traces need every reachable state set to stay non-empty.
        return self is Semantics.SERIAL_TRACE

    @property
    def uses_state_sets(self) -> bool:
        return self in (Semantics.TRACE, Semantics.SERIAL_TRACE, Semantics.FAILURE)

    @property
    def directed(self) -> bool:
        return self is Semantics.SIMULATION

    @property
    def strict_infinite_capable(self) -> bool:
        # Instances whose depth-0 observation is trivial, so the infinite
        # game is meaningful.
        return self in (Semantics.BISIMILARITY, Semantics.SERIAL_TRACE,
                        Semantics.PROBABILISTIC_TRACE)


@dataclass(frozen=True)
class DetState:
    """Canonical state of the determinized system.

    kind 'single': payload is a state index (bisimilarity, simulation).
    kind 'set':    payload is a sorted tuple of state indices (trace family).
    kind 'dist':   payload is a sorted tuple of (state, weight) with
                   positive weights summing to 1 (probabilistic trace).
    """

    kind: str
    payload: Union[int, tuple]

    @staticmethod
    def single(state: int) -> "DetState":
        return DetState("single", state)

    @staticmethod
    def of_set(states) -> "DetState":
        return DetState("set", tuple(sorted(set(states))))

    @staticmethod
    def of_dist(pairs) -> "DetState":
        acc: dict[int, Fraction] = {}
        for state, w in pairs:
            w = Fraction(w)
            if w < 0:
                raise InstanceViolation(f"negative weight {w} in distribution")
            if w:
                acc[state] = acc.get(state, Fraction(0)) + w
        total = sum(acc.values(), Fraction(0))
        if total != 1:
            raise InstanceViolation(f"distribution weights sum to {total}, not 1")
        return DetState("dist", tuple(sorted(acc.items())))

    def states(self) -> tuple[int, ...]:
        """Underlying system states, for reachability and rendering."""
        if self.kind == "single":
            return (self.payload,)
        if self.kind == "set":
            return self.payload
        return tuple(s for (s, _w) in self.payload)

    def sort_key(self):
        if self.kind == "single":
            return (0, (self.payload,))
        if self.kind == "set":
            return (1, self.payload)
        return (2, self.payload)

    def __lt__(self, other: "DetState"):
        return self.sort_key() < other.sort_key()

    def render(self) -> str:
        if self.kind == "single":
            return str(self.payload)
        if self.kind == "set":
            return "{" + ",".join(str(s) for s in self.payload) + "}"
        return "{" + ", ".join(f"{s}:{w}" for (s, w) in self.payload) + "}"

    def to_json(self):
        if self.kind == "single":
            return {"kind": "single", "state": self.payload}
        if self.kind == "set":
            return {"kind": "set", "states": list(self.payload)}
        return {"kind": "dist", "weights": [[s, str(w)] for (s, w) in self.payload]}

    @staticmethod
    def from_json(data) -> "DetState":
        kind = data.get("kind")
        if kind == "single":
            return DetState.single(int(data["state"]))
        if kind == "set":
            return DetState.of_set(int(s) for s in data["states"])
        if kind == "dist":
            return DetState.of_dist((int(s), Fraction(w)) for s, w in data["weights"])
        raise ValueError(f"unknown DetState kind {kind!r}")


_DIST_ENTRY = re.compile(r"^\s*(\d+)\s*:\s*([0-9/]+)\s*$")


def parse_detstate(text: str) -> DetState:
    """Parse ``5``, ``{}``, ``{0,2}`` or ``{0:1/2, 1:1/2}``."""
    text = text.strip()
    if not text:
        raise ValueError("empty state expression")
    if not text.startswith("{"):
        return DetState.single(int(text))
    if not text.endswith("}"):
        raise ValueError(f"unbalanced braces in {text!r}")
    inner = text[1:-1].strip()
    if not inner:
        return DetState.of_set(())
    if ":" in inner:
        pairs = []
        for part in inner.split(","):
            m = _DIST_ENTRY.match(part)
            if not m:
                raise ValueError(f"bad distribution entry {part!r}")
            pairs.append((int(m.group(1)), Fraction(m.group(2))))
        return DetState.of_dist(pairs)
    return DetState.of_set(int(p) for p in inner.split(","))


# ---------------------------------------------------------------------------
# Successor profiles


@dataclass(frozen=True)
class TransitionsProfile:
    """Raw branching of a single state: a set of (label, continuation)."""

    moves: tuple

    def continuations(self) -> list:
        return _dedup(c for (_lab, c) in self.moves)

    def map_continuations(self, fn) -> "TransitionsProfile":
        return TransitionsProfile(tuple(sorted(
            ((lab, fn(c)) for (lab, c) in self.moves),
            key=lambda m: (m[0], _cont_key(m[1])))))


@dataclass(frozen=True)
class LabelMapProfile:
    """Per-label successor; entries are None for disabled labels (serial
    traces) and the empty state set for plain traces."""

    succ: tuple

    def continuations(self) -> list:
        return _dedup(c for c in self.succ if c is not None)

    def map_continuations(self, fn) -> "LabelMapProfile":
        return LabelMapProfile(tuple(None if c is None else fn(c) for c in self.succ))


@dataclass(frozen=True)
class FailureProfile:
    """Trace map together with the maximal refusal sets of the members."""

    succ: tuple
    refusals: frozenset  # frozenset of frozensets of label indices

    def continuations(self) -> list:
        return _dedup(self.succ)

    def map_continuations(self, fn) -> "FailureProfile":
        return FailureProfile(tuple(fn(c) for c in self.succ), self.refusals)


@dataclass(frozen=True)
class WeightedProfile:
    """Per-label (weight, conditional continuation); None when the label
    has probability zero."""

    branches: tuple

    def continuations(self) -> list:
        return _dedup(c for b in self.branches if b is not None for c in (b[1],))

    def map_continuations(self, fn) -> "WeightedProfile":
        return WeightedProfile(tuple(
            None if b is None else (b[0], fn(b[1])) for b in self.branches))


SuccessorProfile = Union[TransitionsProfile, LabelMapProfile, FailureProfile, WeightedProfile]


def _cont_key(c):
    return c.sort_key() if isinstance(c, DetState) else c


def _dedup(items) -> list:
    seen = []
    for item in items:
        if item not in seen:
            seen.append(item)
    return sorted(seen, key=_cont_key)


# ---------------------------------------------------------------------------
# Instance operations


def validate_instance(sem: Semantics, sys: TransitionSystem) -> None:
    """Check that `sys` satisfies the branching discipline of `sem`."""
    is_pts = isinstance(sys, ProbabilisticTransitionSystem)
    if sem.on_pts and not is_pts:
        raise InstanceViolation(f"{sem.value} requires a probabilistic system")
    if not sem.on_pts and is_pts:
        raise InstanceViolation(f"{sem.value} requires a labelled transition system")
    if sem.requires_serial:
        dead = deadlock_states(sys)
        if dead:
            raise InstanceViolation(
                f"{sem.value} requires a serial system; deadlock states: "
                + ",".join(map(str, sorted(dead))))


def embed(sem: Semantics, state: int) -> DetState:
    """Embed a plain system state into the determinized state space."""
    if sem in (Semantics.BISIMILARITY, Semantics.SIMULATION):
        return DetState.single(state)
    if sem.uses_state_sets:
        return DetState.of_set((state,))
    return DetState.of_dist(((state, Fraction(1)),))


def check_detstate(sem: Semantics, sys: TransitionSystem, s: DetState) -> None:
    expected = {"single"} if sem in (Semantics.BISIMILARITY, Semantics.SIMULATION) \
        else {"set"} if sem.uses_state_sets else {"dist"}
    if s.kind not in expected:
        raise InstanceViolation(f"{sem.value} does not operate on {s.kind!r} states")
    if sem is Semantics.SERIAL_TRACE and not s.payload:
        raise InstanceViolation("serial traces exclude the empty state set")
    for x in s.states():
        if not (0 <= x < sys.num_states):
            raise InstanceViolation(f"state {x} out of range")


def step(sem: Semantics, sys: TransitionSystem, s: DetState) -> SuccessorProfile:
    """One determinized step from `s`, in canonical normal form."""
    validate_instance(sem, sys)
    check_detstate(sem, sys, s)
    if sem in (Semantics.BISIMILARITY, Semantics.SIMULATION):
        return TransitionsProfile(tuple(sorted(
            (lab, DetState.single(dst)) for (lab, dst) in sys.moves(s.payload))))

    if sem is Semantics.PROBABILISTIC_TRACE:
        weights: list[Fraction] = [Fraction(0)] * sys.num_labels
        targets: list[dict[int, Fraction]] = [dict() for _ in range(sys.num_labels)]
        for (x, wx) in s.payload:
            for (lab, dst, w) in sys.row(x):
                weights[lab] += wx * w
                targets[lab][dst] = targets[lab].get(dst, Fraction(0)) + wx * w
        branches = []
        for lab in range(sys.num_labels):
            if weights[lab] == 0:
                branches.append(None)
            else:
                cond = DetState.of_dist(
                    (dst, w / weights[lab]) for (dst, w) in targets[lab].items())
                branches.append((weights[lab], cond))
        return WeightedProfile(tuple(branches))

    # Trace family: per-label union of member successors.
    per_label = []
    for lab in range(sys.num_labels):
        union: set[int] = set()
        for x in s.payload:
            union.update(sys.successors(x, lab))
        per_label.append(DetState.of_set(union))
    if sem is Semantics.TRACE:
        return LabelMapProfile(tuple(per_label))
    if sem is Semantics.SERIAL_TRACE:
        return LabelMapProfile(tuple(
            c if c.payload else None for c in per_label))
    # Failure: add the maximal refusal sets of the member states.
    all_labels = frozenset(range(sys.num_labels))
    refusals = antichain_max(
        frozenset(all_labels - sys.enabled(x)) for x in s.payload)
    return FailureProfile(tuple(per_label), refusals)


def antichain_max(sets) -> frozenset:
    """Keep only the inclusion-maximal sets of a family."""
    family = set(sets)
    return frozenset(a for a in family
                     if not any(a < b for b in family))


def depth0_key(sem: Semantics, s: DetState):
    """What is observable with zero steps left.

    For traces and failures that is whether the state set is empty; the
    other instances observe nothing at depth zero.
    """
    if sem in (Semantics.TRACE, Semantics.FAILURE):
        return len(s.payload) > 0
    return "*"


def continuations(profile: SuccessorProfile) -> list:
    """All continuation states of a profile, deduplicated and ordered."""
    return profile.continuations()


RelationOracle = Callable[[object, object], bool]


def profiles_match(sem: Semantics, p: SuccessorProfile, q: SuccessorProfile,
                   rel: RelationOracle) -> bool:
    """Do two profiles agree up to `rel` on continuations?

    For the simulation instance the check is directed: p must be
    simulated by q.  Everywhere else `rel` is consulted in both
    directions, so an equivalence oracle yields blockwise equality.
    """
    if sem is Semantics.BISIMILARITY:
        return (_transitions_covered(p.moves, q.moves, rel)
                and _transitions_covered(q.moves, p.moves, lambda a, b: rel(b, a)))
    if sem is Semantics.SIMULATION:
        return _transitions_covered(p.moves, q.moves, rel)
    if sem is Semantics.PROBABILISTIC_TRACE:
        for bp, bq in zip(p.branches, q.branches):
            if (bp is None) != (bq is None):
                return False
            if bp is None:
                continue
            (wp, cp), (wq, cq) = bp, bq
            if wp != wq:
                return False
            if not (rel(cp, cq) and rel(cq, cp)):
                return False
        return True
    if sem is Semantics.SERIAL_TRACE:
        for cp, cq in zip(p.succ, q.succ):
            if (cp is None) != (cq is None):
                return False  # enabled label sets differ
            if cp is not None and not (rel(cp, cq) and rel(cq, cp)):
                return False
        return True
    if sem is Semantics.FAILURE:
        if p.refusals != q.refusals:
            return False
        return all(rel(cp, cq) and rel(cq, cp) for cp, cq in zip(p.succ, q.succ))
    # Plain traces.
    return all(rel(cp, cq) and rel(cq, cp) for cp, cq in zip(p.succ, q.succ))


def _transitions_covered(moves_p, moves_q, rel) -> bool:
    for (lab, c) in moves_p:
        if not any(lab == lab_q and rel(c, cq) for (lab_q, cq) in moves_q):
            return False
    return True


def join_detstates(sem: Semantics, a: DetState, b: DetState) -> DetState:
    """Union of two state sets (trace family only)."""
    if not sem.uses_state_sets:
        raise InstanceViolation(f"{sem.value} states have no join")
    return DetState.of_set(a.payload + b.payload)


def mix_detstates(a: DetState, b: DetState, w: Fraction) -> DetState:
    """Convex combination w*a + (1-w)*b of two distributions."""
    w = Fraction(w)
    if not (0 <= w <= 1):
        raise InstanceViolation("mixing weight must lie in [0,1]")
    pairs = [(s, w * p) for (s, p) in a.payload] + \
            [(s, (1 - w) * p) for (s, p) in b.payload]
    return DetState.of_dist(pairs)
