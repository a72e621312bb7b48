"""Independent ground truths used to validate the engine.

Two separate routes are provided on purpose.  `BehaviourArena.value`
unfolds the observable behaviour of a determinized state to a given depth
into a hash-consed canonical tree (so equality is id comparison).  The
path- and DP-style oracles (`trace_set`, `word_distribution`,
`failure_pairs`, `simulation_preorder`) work directly on the raw
transition relation and never touch the step machinery, so the two routes
cannot share a bug.

These are exponential desk-scale tools, not decision procedures.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Optional

from . import semantics as sm
from .semantics import DetState, Semantics
from .systems import LabelledTransitionSystem, ProbabilisticTransitionSystem, TransitionSystem
from .engine import (DetGraph, _signature, _canonical_blocks,
                     WordWitness, WordProbabilityWitness, FailurePairWitness,
                     MoveTreeWitness, SimulationChainWitness, Witness)

MAX_DEPTH = 8
MAX_STATES = 12


class BehaviourArena:
    """Hash-consing arena for depth-n behaviour values of one instance.

    A depth-(n+1) value packs the depth-0 observation together with the
    successor profile whose continuations are replaced by their depth-n
    values, so value equality at depth n means indistinguishability by
    every observation of depth at most n.
    """

    def __init__(self, sem: Semantics, system: TransitionSystem):
        if system.num_states > MAX_STATES:
            raise ValueError(f"oracle is capped at {MAX_STATES} states")
        self.semantics = sem
        self.system = system
        self._intern: dict = {}
        self._forms: list = []
        self._memo: dict = {}
        self._leq_memo: dict = {}

    def _id(self, form) -> int:
        got = self._intern.get(form)
        if got is None:
            got = len(self._intern)
            self._intern[form] = got
            self._forms.append(form)
        return got

    def value(self, s: DetState, depth: int) -> int:
        """Canonical id of the depth-`depth` behaviour of `s`."""
        if depth < 0:
            raise ValueError("depth must be non-negative")
        if depth > MAX_DEPTH:
            raise ValueError(f"oracle is capped at depth {MAX_DEPTH}")
        key = (s, depth)
        got = self._memo.get(key)
        if got is not None:
            return got
        sem = self.semantics
        obs = sm.depth0_key(sem, s)
        if depth == 0:
            form = ("key", obs)
        else:
            profile = sm.step(sem, self.system, s)
            if sem is Semantics.BISIMILARITY:
                children = sorted({(lab, self.value(c, depth - 1))
                                   for (lab, c) in profile.moves})
                form = ("branch", obs, tuple(children))
            elif sem is Semantics.SIMULATION:
                gens = sorted({(lab, self.value(c, depth - 1))
                               for (lab, c) in profile.moves})
                form = ("sim", obs, self._antichain(gens))
            elif sem is Semantics.PROBABILISTIC_TRACE:
                branches = tuple(
                    None if b is None else (b[0], self.value(b[1], depth - 1))
                    for b in profile.branches)
                form = ("dist", obs, branches)
            elif sem is Semantics.FAILURE:
                succ = tuple(self.value(c, depth - 1) for c in profile.succ)
                form = ("fail", obs, succ,
                        tuple(sorted(tuple(sorted(r)) for r in profile.refusals)))
            else:
                succ = tuple(None if c is None else self.value(c, depth - 1)
                             for c in profile.succ)
                form = ("map", obs, succ)
        vid = self._id(form)
        self._memo[key] = vid
        return vid

    def _antichain(self, gens):
        keep = []
        for (lab, v) in gens:
            if not any(lab == lab2 and v != w and self.value_leq(v, w)
                       for (lab2, w) in gens):
                keep.append((lab, v))
        return tuple(keep)

    def value_leq(self, v: int, w: int) -> bool:
        """Simulation order between two values of equal depth."""
        if v == w:
            return True
        key = (v, w)
        got = self._leq_memo.get(key)
        if got is not None:
            return got
        self._leq_memo[key] = False  # cycles cannot occur; depth decreases
        form_v = self._forms[v]
        form_w = self._forms[w]
        if form_v[0] == "key" or form_w[0] == "key":
            result = form_v == form_w
        else:
            gens_v, gens_w = form_v[2], form_w[2]
            result = all(
                any(lab == lab2 and self.value_leq(c, d) for (lab2, d) in gens_w)
                for (lab, c) in gens_v)
        self._leq_memo[key] = result
        return result


def behaviour(sem: Semantics, system: TransitionSystem, s: DetState, depth: int,
              arena: Optional[BehaviourArena] = None) -> int:
    """Depth-`depth` behaviour id of `s` (fresh arena unless one is given)."""
    if arena is None:
        arena = BehaviourArena(sem, system)
    return arena.value(s, depth)


# ---------------------------------------------------------------------------
# Path- and DP-based oracles on the raw systems


def _succ_set(lts: LabelledTransitionSystem, states: frozenset[int], lab: int) -> frozenset[int]:
    out: set[int] = set()
    for x in states:
        out.update(lts.successors(x, lab))
    return frozenset(out)


def trace_set(lts: LabelledTransitionSystem, states: Iterable[int], n: int) -> frozenset:
    """Words of length exactly n labelling a path from some member state."""
    result: set[tuple[int, ...]] = set()
    frontier = [((), frozenset(states))]
    for _ in range(n):
        nxt = []
        for (word, cur) in frontier:
            for lab in range(lts.num_labels):
                sa = _succ_set(lts, cur, lab)
                if sa:
                    nxt.append((word + (lab,), sa))
        frontier = nxt
    for (word, cur) in frontier:
        if cur:
            result.add(word)
    return frozenset(result)


def word_distribution(pts: ProbabilisticTransitionSystem, d, n: int) -> dict:
    """Exact distribution over length-n words emitted from distribution `d`."""
    if isinstance(d, DetState):
        pairs = d.payload
    else:
        pairs = tuple(d)
    joint: dict[tuple[tuple[int, ...], int], Fraction] = {
        ((), x): Fraction(w) for (x, w) in pairs}
    for _ in range(n):
        nxt: dict[tuple[tuple[int, ...], int], Fraction] = {}
        for ((word, x), p) in joint.items():
            for (lab, dst, w) in pts.row(x):
                key = (word + (lab,), dst)
                nxt[key] = nxt.get(key, Fraction(0)) + p * w
        joint = nxt
    out: dict[tuple[int, ...], Fraction] = {}
    for ((word, _x), p) in joint.items():
        out[word] = out.get(word, Fraction(0)) + p
    return out


def failure_pairs(lts: LabelledTransitionSystem, states: Iterable[int], n: int) -> frozenset:
    """Pairs (word, maximal refusal set) observable with words of length
    at most n-1; the refusal families are antichain-reduced per word."""
    result: set[tuple[tuple[int, ...], frozenset[int]]] = set()
    all_labels = frozenset(range(lts.num_labels))
    frontier = [((), frozenset(states))]
    for _ in range(n):
        nxt = []
        for (word, cur) in frontier:
            if not cur:
                continue
            for refusal in sm.antichain_max(
                    frozenset(all_labels - lts.enabled(x)) for x in cur):
                result.add((word, refusal))
            for lab in range(lts.num_labels):
                sa = _succ_set(lts, cur, lab)
                if sa:
                    nxt.append((word + (lab,), sa))
        frontier = nxt
    return frozenset(result)


def simulation_preorder(lts: LabelledTransitionSystem, n: int) -> frozenset:
    """n-fold refinement of the total relation by the simulation step."""
    states = range(lts.num_states)
    rel = {(x, y) for x in states for y in states}
    for _ in range(n):
        nxt = set()
        for (x, y) in rel:
            if all(any((lab2 == lab and (dx, dy) in rel)
                       for (lab2, dy) in lts.moves(y))
                   for (lab, dx) in lts.moves(x)):
                nxt.add((x, y))
        if nxt == rel:
            break
        rel = nxt
    return frozenset(rel)


# ---------------------------------------------------------------------------
# Exact (non-cumulative) depth-n kernel on an explored graph


def exact_depth_partition(g: DetGraph, n: int) -> tuple[int, ...]:
    """Kernel of the depth-exactly-n observation, as canonical block ids.

    Unlike the engine's cumulative refinement this re-partitions from the
    signatures alone each round, so states that differ at depth 0 may be
    identified again at greater depths (possible for plain traces).
    """
    blocks = []
    keys: dict = {}
    for s in g.states:
        blocks.append(keys.setdefault(sm.depth0_key(g.semantics, s), len(keys)))
    for _ in range(n):
        keys = {}
        blocks = [keys.setdefault(_signature(g, blocks, i), len(keys))
                  for i in range(len(g.states))]
    return _canonical_blocks(blocks)


# ---------------------------------------------------------------------------
# Witness validation (path/DP route only)


def _word_indices(sys: TransitionSystem, word) -> tuple[int, ...]:
    return tuple(sys.label_index(lab) if isinstance(lab, str) else lab
                 for lab in word)


def _has_trace(lts: LabelledTransitionSystem, states, word) -> bool:
    cur = frozenset(states)
    for lab in _word_indices(lts, word):
        cur = _succ_set(lts, cur, lab)
        if not cur:
            return False
    return bool(cur)


def _has_failure_pair(lts: LabelledTransitionSystem, states, word, refused) -> bool:
    cur = frozenset(states)
    for lab in _word_indices(lts, word):
        cur = _succ_set(lts, cur, lab)
    refused_idx = frozenset(_word_indices(lts, sorted(refused)))
    return any(not (lts.enabled(x) & refused_idx) for x in cur)


def witness_holds(sem: Semantics, system: TransitionSystem,
                  s: DetState, t: DetState, witness: Witness) -> bool:
    """Replay a distinguishing witness against the raw system."""
    if isinstance(witness, WordWitness):
        return _has_trace(system, s.states(), witness.word) != \
            _has_trace(system, t.states(), witness.word)
    if isinstance(witness, FailurePairWitness):
        return _has_failure_pair(system, s.states(), witness.word, witness.refused) != \
            _has_failure_pair(system, t.states(), witness.word, witness.refused)
    if isinstance(witness, WordProbabilityWitness):
        if witness.p_left == witness.p_right:
            return False
        word = _word_indices(system, witness.word)
        dist_s = word_distribution(system, s, len(word))
        dist_t = word_distribution(system, t, len(word))
        return dist_s.get(word, Fraction(0)) == witness.p_left and \
            dist_t.get(word, Fraction(0)) == witness.p_right
    if isinstance(witness, MoveTreeWitness):
        return _move_tree_holds(system, s.payload, t.payload, witness.root)
    if isinstance(witness, SimulationChainWitness):
        return _chain_holds(system, s.payload, t.payload, witness)
    raise TypeError(f"unknown witness {witness!r}")


def _move_tree_holds(lts: LabelledTransitionSystem, x: int, y: int,
                     node: MoveTreeNode) -> bool:
    lab = lts.label_index(node.label)
    mover, other = (x, y) if node.side == "left" else (y, x)
    if node.challenge not in lts.successors(mover, lab):
        return False
    replies = lts.successors(other, lab)
    answered = {state for (state, _node) in node.responses}
    if set(replies) != answered:
        return False
    for (state, child) in node.responses:
        cx, cy = (node.challenge, state) if node.side == "left" else (state, node.challenge)
        if not _move_tree_holds(lts, cx, cy, child):
            return False
    return True


def _chain_holds(lts: LabelledTransitionSystem, x: int, y: int,
                 witness: SimulationChainWitness) -> bool:
    lo, hi = (x, y) if witness.direction == "left-not-simulated" else (y, x)
    for (label, challenger, responder) in witness.steps:
        lab = lts.label_index(label)
        if challenger not in lts.successors(lo, lab):
            return False
        if responder is None:
            return not lts.successors(hi, lab)
        if responder not in lts.successors(hi, lab):
            return False
        lo, hi = challenger, responder
    return witness.steps[-1][2] is None if witness.steps else False
