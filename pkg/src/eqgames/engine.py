"""Determinized exploration and relation refinement.

`explore` builds the reachable part of the determinized system (for plain
traces this is the classical subset construction).  `refine_once` sharpens
a relation over determinized states by one observation step; iterating
from the depth-0 kernel decides depth-n equivalence, iterating to the
greatest fixpoint decides the limit.  Distinguishing witnesses are read
back off the refinement levels.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

from . import semantics as sm
from .semantics import DetState, Semantics, InstanceViolation
from .systems import TransitionSystem

DEFAULT_BUDGET = int(os.environ.get("EQGAMES_BUDGET", "100000"))

LIMIT = "limit"
INFINITE = "infinite"
Depth = Union[int, str]


class BudgetExceeded(RuntimeError):
    pass


class StrictInfiniteError(InstanceViolation):
    """Raised when the infinite-depth mode is not meaningful for an instance.

    `degenerate` is True for instances where Duplicator wins every position
    of the infinite game, so callers can report that instead of failing.
    """

    def __init__(self, message: str, degenerate: bool):
        super().__init__(message)
        self.degenerate = degenerate


class DetGraph:
    """Reachable determinized states with id-resolved successor profiles."""

    def __init__(self, sem: Semantics, system: TransitionSystem):
        self.semantics = sem
        self.system = system
        self.alphabet: tuple[str, ...] = system.alphabet
        self.states: list[DetState] = []
        self.index: dict[DetState, int] = {}
        self.profiles: list[sm.SuccessorProfile] = []
        self.id_profiles: list[sm.SuccessorProfile] = []
        self.seeds: list[int] = []

    def __len__(self) -> int:
        return len(self.states)

    def state_id(self, s: DetState) -> int:
        return self.index[s]

    def extend(self, seed_states: Sequence[DetState], budget: int = DEFAULT_BUDGET) -> list[int]:
        """BFS-close the graph over the given seeds; returns their ids."""
        frontier: deque[int] = deque()

        def intern(s: DetState) -> int:
            got = self.index.get(s)
            if got is None:
                got = len(self.states)
                if got >= budget:
                    raise BudgetExceeded(
                        f"exploration budget of {budget} determinized states "
                        f"exceeded with {len(frontier)} states still on the frontier")
                self.index[s] = got
                self.states.append(s)
                self.profiles.append(None)  # filled below
                self.id_profiles.append(None)
                frontier.append(got)
            return got

        seed_ids = [intern(s) for s in seed_states]
        while frontier:
            i = frontier.popleft()
            profile = sm.step(self.semantics, self.system, self.states[i])
            self.profiles[i] = profile
            self.id_profiles[i] = profile.map_continuations(intern)
        return seed_ids


def explore(sem: Semantics, system: TransitionSystem,
            seed_states: Sequence[DetState],
            budget: int = DEFAULT_BUDGET) -> DetGraph:
    """Close the determinized system over the seeds (BFS order, seeds first)."""
    sm.validate_instance(sem, system)
    for s in seed_states:
        sm.check_detstate(sem, system, s)
    g = DetGraph(sem, system)
    g.seeds = g.extend(seed_states, budget)
    return g


# ---------------------------------------------------------------------------
# Relations over determinized states


@dataclass(frozen=True)
class RelationState:
    """Either a partition (block per state) or a preorder (bitmask rows)."""

    mode: str                     # 'partition' | 'preorder'
    blocks: Optional[tuple] = None
    leq: Optional[tuple] = None   # leq[i] has bit j set iff i <= j
    level: int = 0

    def related(self, i: int, j: int) -> bool:
        if self.mode == "partition":
            return self.blocks[i] == self.blocks[j]
        return bool(self.leq[i] >> j & 1) and bool(self.leq[j] >> i & 1)

    def leq_related(self, i: int, j: int) -> bool:
        if self.mode == "partition":
            return self.blocks[i] == self.blocks[j]
        return bool(self.leq[i] >> j & 1)

    def same_relation(self, other: "RelationState") -> bool:
        if self.mode != other.mode:
            return False
        if self.mode == "partition":
            return _canonical_blocks(self.blocks) == _canonical_blocks(other.blocks)
        return self.leq == other.leq


def _canonical_blocks(blocks: Sequence[int]) -> tuple[int, ...]:
    remap: dict[int, int] = {}
    out = []
    for b in blocks:
        if b not in remap:
            remap[b] = len(remap)
        out.append(remap[b])
    return tuple(out)


def initial_relation(g: DetGraph, mode: str = "finite") -> RelationState:
    """Depth-0 kernel (`finite`) or the total relation (`strict_infinite`).

    The strict-infinite mode is only meaningful where depth-0 observations
    are trivial; for plain traces and failures Duplicator wins every
    position of the infinite game, which is signalled via
    StrictInfiniteError(degenerate=True).
    """
    sem = g.semantics
    if mode == "strict_infinite" and not sem.strict_infinite_capable:
        degenerate = sem in (Semantics.TRACE, Semantics.FAILURE)
        raise StrictInfiniteError(
            f"infinite-depth mode is undefined for {sem.value}: depth-0 "
            "observations are non-trivial"
            + (" and Duplicator wins every position of the infinite game"
               if degenerate else ""),
            degenerate=degenerate)
    n = len(g.states)
    if sem.directed:
        keys = [sm.depth0_key(sem, s) for s in g.states]
        rows = []
        for i in range(n):
            mask = 0
            for j in range(n):
                if mode == "strict_infinite" or keys[i] == keys[j]:
                    mask |= 1 << j
            rows.append(mask)
        return RelationState(mode="preorder", leq=tuple(rows), level=0)
    if mode == "strict_infinite":
        return RelationState(mode="partition", blocks=(0,) * n, level=0)
    keys = {}
    blocks = []
    for s in g.states:
        key = sm.depth0_key(sem, s)
        blocks.append(keys.setdefault(key, len(keys)))
    return RelationState(mode="partition", blocks=tuple(blocks), level=0)


def _signature(g: DetGraph, blocks: Sequence[int], i: int):
    sem = g.semantics
    p = g.id_profiles[i]
    if sem is Semantics.BISIMILARITY:
        return frozenset((lab, blocks[c]) for (lab, c) in p.moves)
    if sem is Semantics.PROBABILISTIC_TRACE:
        return tuple(None if b is None else (b[0], blocks[b[1]]) for b in p.branches)
    if sem is Semantics.FAILURE:
        return (tuple(blocks[c] for c in p.succ), p.refusals)
    # trace / serial trace
    return tuple(-1 if c is None else blocks[c] for c in p.succ)


def refine_once(g: DetGraph, r: RelationState) -> RelationState:
    """One refinement pass: keep a pair related iff it was related and its
    profiles still match under the current relation."""
    n = len(g.states)
    if r.mode == "preorder":
        rows = list(r.leq)
        # per state and label, the bitmask of successor ids
        succ_masks: list[dict[int, int]] = []
        for i in range(n):
            masks: dict[int, int] = {}
            for (lab, c) in g.id_profiles[i].moves:
                masks[lab] = masks.get(lab, 0) | (1 << c)
            succ_masks.append(masks)
        new_rows = []
        for i in range(n):
            mask = rows[i]
            out = 0
            j_mask = mask
            while j_mask:
                j = (j_mask & -j_mask).bit_length() - 1
                j_mask &= j_mask - 1
                ok = True
                for (lab, c) in g.id_profiles[i].moves:
                    candidates = succ_masks[j].get(lab, 0)
                    if not (rows[c] & candidates):
                        ok = False
                        break
                if ok:
                    out |= 1 << j
            new_rows.append(out)
        return RelationState(mode="preorder", leq=tuple(new_rows), level=r.level + 1)
    keys: dict = {}
    new_blocks = []
    for i in range(n):
        key = (r.blocks[i], _signature(g, r.blocks, i))
        new_blocks.append(keys.setdefault(key, len(keys)))
    return RelationState(mode="partition", blocks=tuple(new_blocks), level=r.level + 1)


def refinement_levels(g: DetGraph, r0: RelationState,
                      max_level: Optional[int] = None) -> list[RelationState]:
    """Refine until a fixpoint (or `max_level`); returns all levels seen.

    The last entry is stable: refining it again changes nothing, so level
    n for n beyond the list length equals the final entry.
    """
    n = len(g.states)
    cap = n * n + 1 if r0.mode == "preorder" else n + 1
    if max_level is not None:
        cap = min(cap, max_level)
    levels = [r0]
    while len(levels) <= cap:
        nxt = refine_once(g, levels[-1])
        if nxt.same_relation(levels[-1]):
            break
        levels.append(nxt)
    return levels


def level_at(levels: Sequence[RelationState], n: int) -> RelationState:
    return levels[n] if n < len(levels) else levels[-1]


def related_at(levels: Sequence[RelationState], i: int, j: int, n: int) -> bool:
    return level_at(levels, n).related(i, j)


def split_level(levels: Sequence[RelationState], i: int, j: int) -> Optional[int]:
    """Least level at which i and j stop being related; None if they never do."""
    if levels[-1].related(i, j):
        return None
    lo, hi = 0, len(levels) - 1
    if levels[0].related(i, j):
        # related is antitone in the level, so binary search works
        while lo + 1 < hi:
            mid = (lo + hi) // 2
            if levels[mid].related(i, j):
                lo = mid
            else:
                hi = mid
        return hi
    return 0


def split_level_leq(levels: Sequence[RelationState], i: int, j: int) -> Optional[int]:
    if levels[-1].leq_related(i, j):
        return None
    lo, hi = 0, len(levels) - 1
    if levels[0].leq_related(i, j):
        while lo + 1 < hi:
            mid = (lo + hi) // 2
            if levels[mid].leq_related(i, j):
                lo = mid
            else:
                hi = mid
        return hi
    return 0


# ---------------------------------------------------------------------------
# Verdicts and witnesses


@dataclass(frozen=True)
class WordWitness:
    word: tuple[str, ...]

    def to_json(self):
        return {"type": "word", "word": list(self.word)}


@dataclass(frozen=True)
class WordProbabilityWitness:
    word: tuple[str, ...]
    p_left: Fraction
    p_right: Fraction

    def to_json(self):
        return {"type": "word_probability", "word": list(self.word),
                "p_left": str(self.p_left), "p_right": str(self.p_right)}


@dataclass(frozen=True)
class FailurePairWitness:
    word: tuple[str, ...]
    refused: frozenset[str]

    def to_json(self):
        return {"type": "failure_pair", "word": list(self.word),
                "refused": sorted(self.refused)}


@dataclass(frozen=True)
class MoveTreeNode:
    side: str                  # 'left' | 'right'
    label: str
    challenge: int             # successor state picked on `side`
    responses: tuple           # ((responder state, MoveTreeNode), ...)

    def to_json(self):
        return {"side": self.side, "label": self.label, "challenge": self.challenge,
                "responses": [{"state": s, "reply": node.to_json()}
                              for (s, node) in self.responses]}


@dataclass(frozen=True)
class MoveTreeWitness:
    root: MoveTreeNode

    def to_json(self):
        return {"type": "move_tree", "tree": self.root.to_json()}


@dataclass(frozen=True)
class SimulationChainWitness:
    direction: str             # 'left-not-simulated' | 'right-not-simulated'
    steps: tuple               # ((label, challenger state, responder state | None), ...)

    def to_json(self):
        return {"type": "simulation_chain", "direction": self.direction,
                "steps": [{"label": lab, "challenger": c, "responder": r}
                          for (lab, c, r) in self.steps]}


Witness = Union[WordWitness, WordProbabilityWitness, FailurePairWitness,
                MoveTreeWitness, SimulationChainWitness]


@dataclass(frozen=True)
class Verdict:
    kind: str                  # 'equivalent_up_to' | 'equivalent_limit' | 'distinguished'
    depth: Optional[int] = None
    witness: Optional[Witness] = None
    infinite_mode_degenerate: bool = False

    @property
    def equivalent(self) -> bool:
        return self.kind != "distinguished"

    def to_json(self):
        return {
            "kind": self.kind,
            "equivalent": self.equivalent,
            "depth": self.depth,
            "witness": self.witness.to_json() if self.witness else None,
            "infinite_mode_degenerate": self.infinite_mode_degenerate,
        }


# ---------------------------------------------------------------------------
# Witness extraction


def extract_witness(g: DetGraph, levels: Sequence[RelationState],
                    i: int, j: int) -> Witness:
    """Distinguishing evidence for a split pair, chosen deterministically:
    least label in alphabet order first, then least continuation ids."""
    sem = g.semantics
    if sem is Semantics.SIMULATION:
        return _simulation_witness(g, levels, i, j)
    if split_level(levels, i, j) is None:
        raise ValueError("extract_witness called on a pair that never splits")
    if sem is Semantics.BISIMILARITY:
        return MoveTreeWitness(_move_tree(g, levels, i, j))
    if sem is Semantics.PROBABILISTIC_TRACE:
        return _probability_witness(g, levels, i, j)
    return _word_witness(g, levels, i, j)


def _word_witness(g: DetGraph, levels, i: int, j: int) -> Witness:
    sem = g.semantics
    word: list[str] = []
    while True:
        m = split_level(levels, i, j)
        p, q = g.id_profiles[i], g.id_profiles[j]
        if m == 0:
            if sem is Semantics.FAILURE:
                return FailurePairWitness(tuple(word), frozenset())
            return WordWitness(tuple(word))
        rel = level_at(levels, m - 1)
        descended = False
        for lab in range(len(g.alphabet)):
            cp = p.succ[lab]
            cq = q.succ[lab]
            if cp is None or cq is None:
                if (cp is None) != (cq is None):
                    # serial traces: the label is enabled on exactly one side
                    word.append(g.alphabet[lab])
                    return WordWitness(tuple(word))
                continue
            if not rel.related(cp, cq):
                word.append(g.alphabet[lab])
                i, j = cp, cq
                descended = True
                break
        if descended:
            continue
        if sem is Semantics.FAILURE:
            return FailurePairWitness(tuple(word),
                                      _distinguishing_refusal(g, i, j))
        raise AssertionError("profile mismatch without a witnessing label")


def _distinguishing_refusal(g: DetGraph, i: int, j: int) -> frozenset[str]:
    # Least refusal set (by size, then label order) covered by exactly one
    # side's maximal refusals.
    fam_p = g.id_profiles[i].refusals
    fam_q = g.id_profiles[j].refusals
    labels = range(len(g.alphabet))
    candidates = sorted(
        (frozenset(c) for c in _subsets(tuple(labels))),
        key=lambda c: (len(c), tuple(sorted(c))))
    for cand in candidates:
        in_p = any(cand <= r for r in fam_p)
        in_q = any(cand <= r for r in fam_q)
        if in_p != in_q:
            return frozenset(g.alphabet[lab] for lab in cand)
    raise AssertionError("refusal families do not differ")


def _subsets(items: tuple):
    for mask in range(1 << len(items)):
        yield tuple(items[k] for k in range(len(items)) if mask >> k & 1)


def _probability_witness(g: DetGraph, levels, i: int, j: int) -> Witness:
    word: list[str] = []
    acc = Fraction(1)
    while True:
        m = split_level(levels, i, j)
        assert m is not None and m > 0
        rel = level_at(levels, m - 1)
        p, q = g.id_profiles[i], g.id_profiles[j]
        for lab in range(len(g.alphabet)):
            bp, bq = p.branches[lab], q.branches[lab]
            wp = bp[0] if bp else Fraction(0)
            wq = bq[0] if bq else Fraction(0)
            if wp != wq:
                word.append(g.alphabet[lab])
                return WordProbabilityWitness(tuple(word), acc * wp, acc * wq)
            if bp and not rel.related(bp[1], bq[1]):
                word.append(g.alphabet[lab])
                acc *= wp
                i, j = bp[1], bq[1]
                break
        else:
            raise AssertionError("profile mismatch without a witnessing label")


def _move_tree(g: DetGraph, levels, i: int, j: int) -> MoveTreeNode:
    m = split_level(levels, i, j)
    assert m is not None and m > 0
    rel = level_at(levels, m - 1)
    p, q = g.id_profiles[i], g.id_profiles[j]
    for side, mine, theirs in (("left", p, q), ("right", q, p)):
        for (lab, c) in mine.moves:
            replies = [d for (lab2, d) in theirs.moves if lab2 == lab]
            if all(not (rel.related(c, d) if side == "left" else rel.related(d, c))
                   for d in replies):
                responses = tuple(
                    (g.states[d].payload,
                     _move_tree(g, levels, *((c, d) if side == "left" else (d, c))))
                    for d in replies)
                return MoveTreeNode(side=side, label=g.alphabet[lab],
                                    challenge=g.states[c].payload,
                                    responses=responses)
    raise AssertionError("no winning challenge found for a split pair")


def _simulation_witness(g: DetGraph, levels, i: int, j: int) -> Witness:
    left_split = split_level_leq(levels, i, j)
    right_split = split_level_leq(levels, j, i)
    if left_split is None and right_split is None:
        raise ValueError("extract_witness called on a pair that never splits")
    if right_split is None or (left_split is not None and left_split <= right_split):
        direction, lo, hi = "left-not-simulated", i, j
    else:
        direction, lo, hi = "right-not-simulated", j, i
    steps = []
    while True:
        m = split_level_leq(levels, lo, hi)
        assert m is not None and m > 0
        rel = level_at(levels, m - 1)
        p, q = g.id_profiles[lo], g.id_profiles[hi]
        chosen = None
        for (lab, c) in p.moves:
            replies = [d for (lab2, d) in q.moves if lab2 == lab]
            if all(not rel.leq_related(c, d) for d in replies):
                chosen = (lab, c, replies)
                break
        assert chosen is not None, "no winning challenge for an unsimulated pair"
        lab, c, replies = chosen
        if not replies:
            steps.append((g.alphabet[lab], g.states[c].payload, None))
            return SimulationChainWitness(direction, tuple(steps))
        # best defence: the reply surviving deepest, ties by least id
        best = max(replies,
                   key=lambda d: (len(levels) + 1
                                  if split_level_leq(levels, c, d) is None
                                  else split_level_leq(levels, c, d), -d))
        steps.append((g.alphabet[lab], g.states[c].payload, g.states[best].payload))
        lo, hi = c, best


# ---------------------------------------------------------------------------
# Decision procedures


def decide(sem: Semantics, system: TransitionSystem, x: int, y: int,
           depth: Depth = LIMIT, budget: int = DEFAULT_BUDGET) -> Verdict:
    """Decide depth-n / limit / infinite-depth equivalence of two states."""
    sm.validate_instance(sem, system)
    return decide_pair_detstates(sem, system, sm.embed(sem, x), sm.embed(sem, y),
                                 depth, budget)


def decide_pair_detstates(sem: Semantics, system: TransitionSystem,
                          s: DetState, t: DetState,
                          depth: Depth = LIMIT,
                          budget: int = DEFAULT_BUDGET) -> Verdict:
    sm.validate_instance(sem, system)
    sm.check_detstate(sem, system, s)
    sm.check_detstate(sem, system, t)
    if depth == INFINITE and not sem.strict_infinite_capable:
        if sem in (Semantics.TRACE, Semantics.FAILURE):
            # Duplicator wins every position of the infinite game here.
            return Verdict(kind="equivalent_limit", infinite_mode_degenerate=True)
        raise StrictInfiniteError(
            f"infinite-depth mode is undefined for {sem.value}", degenerate=False)
    g = explore(sem, system, [s, t], budget)
    i, j = g.seeds[0], g.seeds[1] if len(g.seeds) > 1 else g.seeds[0]
    mode = "strict_infinite" if depth == INFINITE else "finite"
    r0 = initial_relation(g, mode)
    if isinstance(depth, int):
        levels = refinement_levels(g, r0, max_level=depth)
        if related_at(levels, i, j, depth):
            return Verdict(kind="equivalent_up_to", depth=depth)
        return Verdict(kind="distinguished", depth=split_level(levels, i, j),
                       witness=extract_witness(g, levels, i, j))
    levels = refinement_levels(g, r0)
    if levels[-1].related(i, j):
        return Verdict(kind="equivalent_limit")
    return Verdict(kind="distinguished", depth=split_level(levels, i, j),
                   witness=extract_witness(g, levels, i, j))


def extract_duplicator_strategy(g: DetGraph, r: RelationState) -> list[tuple[DetState, DetState]]:
    """The relation Duplicator can safely keep claiming: related pairs of
    states that occur as continuations somewhere in the explored graph."""
    conts: set[int] = set()
    for profile in g.id_profiles:
        conts.update(profile.continuations())
    ordered = sorted(conts)
    out = []
    for a in ordered:
        for b in ordered:
            if r.leq_related(a, b) if r.mode == "preorder" else r.related(a, b):
                out.append((g.states[a], g.states[b]))
    return out


# ---------------------------------------------------------------------------
# Export


def export_determinization(g: DetGraph) -> dict:
    """JSON- and DOT-renderable view of the explored determinized system."""
    sem = g.semantics
    nodes = []
    edges = []
    for i, s in enumerate(g.states):
        node = {"id": i, "state": s.to_json(), "label": s.render(),
                "seed": i in g.seeds}
        p = g.id_profiles[i]
        if sem is Semantics.FAILURE:
            node["refusals"] = sorted(sorted(g.alphabet[l] for l in r)
                                      for r in p.refusals)
        nodes.append(node)
        if sem in (Semantics.BISIMILARITY, Semantics.SIMULATION):
            for (lab, c) in p.moves:
                edges.append({"from": i, "label": g.alphabet[lab], "to": c})
        elif sem is Semantics.PROBABILISTIC_TRACE:
            for lab, b in enumerate(p.branches):
                if b is not None:
                    edges.append({"from": i, "label": g.alphabet[lab],
                                  "weight": str(b[0]), "to": b[1]})
        else:
            for lab, c in enumerate(p.succ):
                if c is not None:
                    edges.append({"from": i, "label": g.alphabet[lab], "to": c})
    graph_json = {
        "semantics": sem.value,
        "alphabet": list(g.alphabet),
        "states": nodes,
        "edges": edges,
        "seeds": list(g.seeds),
    }
    return {"graph": graph_json, "dot": _to_dot(g, nodes, edges)}


def _to_dot(g: DetGraph, nodes, edges) -> str:
    lines = ["digraph determinization {", "  rankdir=LR;"]
    for node in nodes:
        label = node["label"].replace('"', '\\"')
        if "refusals" in node:
            refusals = " ".join("{" + ",".join(r) + "}" for r in node["refusals"])
            label += f"\\nrefuses {refusals}" if refusals else ""
        shape = ', shape=box' if node["seed"] else ''
        lines.append(f'  n{node["id"]} [label="{label}"{shape}];')
    for e in edges:
        text = e["label"] + (f' : {e["weight"]}' if "weight" in e else "")
        lines.append(f'  n{e["from"]} -> n{e["to"]} [label="{text}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
