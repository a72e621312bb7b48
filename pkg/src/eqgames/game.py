"""The playable equivalence game.

One round has two steps: Duplicator claims a finite relation between
determinized states that is supposed to entail equality of the current
configuration's successor structures, then Spoiler challenges one claimed
pair, which becomes the next configuration.  When the rounds run out,
Duplicator wins exactly if the final configuration is indistinguishable
with zero steps left.  A player who cannot move loses; infinite play is a
Duplicator win.

Whether a claimed relation entails successor equality is instance
specific: equivalence closure plus matching for bisimilarity, exact
weights plus equivalence closure for probabilistic traces, a directed
reachability closure for simulation, and for the trace family a
join-semilattice saturation (add a claimed set's partner whenever the set
itself is already covered) equivalent to full congruence closure.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

from . import semantics as sm
from .semantics import DetState, Semantics
from .systems import TransitionSystem
from . import engine as eng

INFINITE = eng.INFINITE


@dataclass(frozen=True)
class MoveRelation:
    """Duplicator's claim: a finite set of (left, right[, direction]) pairs.

    Directions ('le'/'ge') are only meaningful for the simulation instance,
    where a pair claims an inequality instead of an equality.
    """

    pairs: tuple  # of (DetState, DetState, Optional[str])

    @staticmethod
    def of(pairs, directed: bool = False) -> "MoveRelation":
        norm = []
        for entry in pairs:
            if len(entry) == 2:
                u, v = entry
                tag = None
            else:
                u, v, tag = entry
            if tag not in (None, "le", "ge"):
                raise ValueError(f"bad direction tag {tag!r}")
            if directed and tag is None:
                raise ValueError("simulation claims need a direction tag")
            if not directed and tag is not None:
                raise ValueError("direction tags only apply to simulation")
            norm.append((u, v, tag))
        uniq = sorted(set(norm),
                      key=lambda p: (p[0].sort_key(), p[1].sort_key(), str(p[2])))
        return MoveRelation(tuple(uniq))

    def __len__(self):
        return len(self.pairs)

    def to_json(self):
        return [{"left": u.to_json(), "right": v.to_json(), "dir": tag}
                for (u, v, tag) in self.pairs]

    @staticmethod
    def from_json(data, directed: bool = False) -> "MoveRelation":
        return MoveRelation.of(
            ((DetState.from_json(e["left"]), DetState.from_json(e["right"]),
              e.get("dir")) for e in data),
            directed=directed)


# ---------------------------------------------------------------------------
# Congruence machinery


def saturate(pairs: Sequence[tuple[frozenset, frozenset]], base: frozenset) -> frozenset:
    """Least superset of `base` closed under: whenever one side of a claimed
    pair is contained, add the other side."""
    closure = set(base)
    rules = [(frozenset(u), frozenset(v)) for (u, v) in pairs]
    rules += [(v, u) for (u, v) in rules]
    changed = True
    while changed:
        changed = False
        for (u, v) in rules:
            if u <= closure and not v <= closure:
                closure |= v
                changed = True
    return frozenset(closure)


def sets_congruent(pairs, u: frozenset, v: frozenset) -> bool:
    """Are two state sets equated by the join-semilattice congruence closure
    of the claimed pairs?  Decided by saturation in both directions."""
    return u <= saturate(pairs, v) and v <= saturate(pairs, u)


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        parent = self.parent
        if x not in parent:
            parent[x] = x
            return x
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra

    def same(self, a, b) -> bool:
        return self.find(a) == self.find(b)


def _claim_graph(pairs) -> dict:
    """Directed claim edges for simulation: u -> v means `u below v`."""
    edges: dict = {}
    for (u, v, tag) in pairs:
        if tag == "le":
            edges.setdefault(u, set()).add(v)
        else:
            edges.setdefault(v, set()).add(u)
    return edges


def _claimed_leq(edges: dict, a, b) -> bool:
    if a == b:
        return True
    seen = {a}
    stack = [a]
    while stack:
        x = stack.pop()
        for y in edges.get(x, ()):
            if y == b:
                return True
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return False


# ---------------------------------------------------------------------------
# Admissibility


def check_admissible(sem: Semantics, system: TransitionSystem,
                     left: DetState, right: DetState, move: MoveRelation,
                     direction: Optional[str] = None) -> tuple[bool, str]:
    """Does the claimed relation entail equality (or the claimed inequality)
    of the two configurations' successor structures?  Returns a verdict and
    a human-readable explanation."""
    sm.check_detstate(sem, system, left)
    sm.check_detstate(sem, system, right)
    for (u, v, tag) in move.pairs:
        sm.check_detstate(sem, system, u)
        sm.check_detstate(sem, system, v)
        if sem.directed and tag is None:
            return False, "simulation claims need a direction tag"
        if not sem.directed and tag is not None:
            return False, "direction tags only apply to simulation"
    p = sm.step(sem, system, left)
    q = sm.step(sem, system, right)
    alphabet = system.alphabet

    if sem is Semantics.BISIMILARITY:
        uf = _UnionFind()
        for (u, v, _t) in move.pairs:
            uf.union(u, v)
        ok = sm.profiles_match(sem, p, q, lambda a, b: uf.same(a, b))
        if ok:
            return True, "claimed pairs match the two successor sets"
        for (lab, c) in p.moves:
            if not any(lab == lab2 and uf.same(c, d) for (lab2, d) in q.moves):
                return False, (f"left move {alphabet[lab]!r} to {c.render()} has no "
                               "matching right move under the claimed pairs")
        for (lab, d) in q.moves:
            if not any(lab == lab2 and uf.same(c, d) for (lab2, c) in p.moves):
                return False, (f"right move {alphabet[lab]!r} to {d.render()} has no "
                               "matching left move under the claimed pairs")
        return False, "successor sets do not match under the claimed pairs"

    if sem is Semantics.SIMULATION:
        edges = _claim_graph(move.pairs)
        msgs = []
        if direction in (None, "le"):
            for (lab, c) in p.moves:
                if not any(lab == lab2 and _claimed_leq(edges, c, d)
                           for (lab2, d) in q.moves):
                    msgs.append(f"left move {alphabet[lab]!r} to {c.render()} is not "
                                "claimed below any right move")
        if direction in (None, "ge"):
            for (lab, d) in q.moves:
                if not any(lab == lab2 and _claimed_leq(edges, d, c)
                           for (lab2, c) in p.moves):
                    msgs.append(f"right move {alphabet[lab]!r} to {d.render()} is not "
                                "claimed below any left move")
        if msgs:
            return False, "; ".join(msgs)
        return True, "claimed inequalities cover the successor structures"

    if sem is Semantics.PROBABILISTIC_TRACE:
        uf = _UnionFind()
        for (u, v, _t) in move.pairs:
            uf.union(u, v)
        for lab, (bp, bq) in enumerate(zip(p.branches, q.branches)):
            wp = bp[0] if bp else Fraction(0)
            wq = bq[0] if bq else Fraction(0)
            if wp != wq:
                return False, f"weights differ at label {alphabet[lab]!r}: {wp} vs {wq}"
            if bp and not uf.same(bp[1], bq[1]):
                return False, (f"conditional successors at label {alphabet[lab]!r} "
                               f"({bp[1].render()} vs {bq[1].render()}) are not "
                               "related by the claimed pairs")
        return True, "weights agree and conditionals are claimed equal"

    # Trace family: join-semilattice congruence via saturation.
    set_pairs = [(frozenset(u.payload), frozenset(v.payload))
                 for (u, v, _t) in move.pairs]
    if sem is Semantics.SERIAL_TRACE:
        enabled_p = tuple(c is not None for c in p.succ)
        enabled_q = tuple(c is not None for c in q.succ)
        if enabled_p != enabled_q:
            diff = [alphabet[i] for i in range(len(alphabet))
                    if enabled_p[i] != enabled_q[i]]
            return False, f"enabled label sets differ at: {', '.join(diff)}"
    if sem is Semantics.FAILURE and p.refusals != q.refusals:
        def fmt(fam):
            return " ".join("{" + ",".join(sorted(alphabet[l] for l in r)) + "}"
                            for r in sorted(tuple(sorted(r)) for r in fam))
        return False, f"refusal families differ: {fmt(p.refusals)} vs {fmt(q.refusals)}"
    for lab in range(len(alphabet)):
        cp, cq = p.succ[lab], q.succ[lab]
        if cp is None and cq is None:
            continue
        u, v = frozenset(cp.payload), frozenset(cq.payload)
        if not sets_congruent(set_pairs, u, v):
            return False, (f"successor sets at label {alphabet[lab]!r} "
                           f"({cp.render()} vs {cq.render()}) are not in the "
                           "congruence closure of the claimed pairs")
    return True, "per-label successor sets are congruent under the claimed pairs"


def brute_force_congruent(pairs, u: frozenset, v: frozenset,
                          universe: frozenset) -> bool:
    """Reference congruence closure in the free join semilattice (with
    bottom) over `universe`: close the claimed pairs under equivalence and
    binary joins, then test the query pair.  Exponential; testing only."""
    elems = [frozenset(c) for r in range(len(universe) + 1)
             for c in itertools.combinations(sorted(universe), r)]
    uf = _UnionFind()
    for (a, b) in pairs:
        uf.union(frozenset(a), frozenset(b))
    changed = True
    while changed:
        changed = False
        reps: dict = {}
        for e in elems:
            reps.setdefault(uf.find(e), []).append(e)
        for group in reps.values():
            a = group[0]
            for b in group[1:]:
                for c in elems:
                    if not uf.same(a | c, b | c):
                        uf.union(a | c, b | c)
                        changed = True
    return uf.same(u, v)


# ---------------------------------------------------------------------------
# Sessions

_COUNTER = itertools.count(1)


@dataclass
class GameSession:
    semantics: Semantics
    system: TransitionSystem
    left: DetState
    right: DetState
    rounds: Union[int, str]
    human_role: Optional[str] = None          # 'spoiler' | 'duplicator' | None
    max_strikes: int = 3
    session_id: str = field(default_factory=lambda: f"g{next(_COUNTER)}")
    graph: Optional[eng.DetGraph] = None      # reusable cache, else built here
    levels: Optional[list] = None

    def __post_init__(self):
        sm.validate_instance(self.semantics, self.system)
        sm.check_detstate(self.semantics, self.system, self.left)
        sm.check_detstate(self.semantics, self.system, self.right)
        if self.human_role not in (None, "spoiler", "duplicator"):
            raise ValueError(f"bad role {self.human_role!r}")
        if self.graph is None:
            self.graph = eng.explore(self.semantics, self.system,
                                     [self.left, self.right])
        else:
            self.graph.extend([self.left, self.right])
        mode = "finite"
        if self.rounds == INFINITE:
            # raises for instances where the infinite game is degenerate
            eng.initial_relation(self.graph, "strict_infinite")
            mode = "strict_infinite"
        elif not (isinstance(self.rounds, int) and self.rounds >= 0):
            raise ValueError(f"rounds must be a non-negative int or {INFINITE!r}")
        self.mode = mode
        if self.levels is None:
            self._refresh_levels()
        self.round_no = 0
        self.rounds_left = self.rounds
        self.direction: Optional[str] = None   # simulation only, fixed by picks
        self.phase = "await_duplicator"
        self.pending: Optional[MoveRelation] = None
        self.winner: Optional[str] = None
        self.reason: Optional[str] = None
        self.strikes = 0
        self.round_cap = 2 * len(self.graph)
        self._seen_configs = {self._config_key()}
        self.transcript: list = []
        self._event("referee", {"type": "start",
                                "semantics": self.semantics.value,
                                "rounds": self.rounds,
                                "human_role": self.human_role})
        if self.rounds == 0:
            self._call_bluff()

    # -- bookkeeping

    def _config_key(self):
        return (self.left, self.right, self.direction)

    def _event(self, actor: str, move: dict):
        self.transcript.append({
            "round": self.round_no,
            "actor": actor,
            "move": move,
            "config": {"left": self.left.to_json(), "right": self.right.to_json(),
                       "direction": self.direction},
        })

    def _refresh_levels(self):
        r0 = eng.initial_relation(self.graph, self.mode)
        self.levels = eng.refinement_levels(self.graph, r0)

    def _ensure_explored(self, states: Sequence[DetState]):
        new = [s for s in states if s not in self.graph.index]
        if new:
            self.graph.extend(new)
            self._refresh_levels()
            self.round_cap = 2 * len(self.graph)

    def _finish(self, winner: str, reason: str):
        self.phase = "finished"
        self.winner = winner
        self.reason = reason
        self._event("referee", {"type": "finish", "winner": winner, "reason": reason})

    def _call_bluff(self):
        kl = sm.depth0_key(self.semantics, self.left)
        kr = sm.depth0_key(self.semantics, self.right)
        if kl == kr:
            self._finish("duplicator", "final configuration agrees on depth-0 observations")
        else:
            self._finish("spoiler", "final configuration differs at depth 0")

    # -- moves

    def duplicator_move(self, move: MoveRelation, by: str = "human") -> tuple[bool, str]:
        """Submit Duplicator's relation.  Inadmissible submissions are
        rejected; after `max_strikes` rejections Duplicator forfeits."""
        if self.phase != "await_duplicator":
            raise ValueError(f"not awaiting a Duplicator move (phase {self.phase})")
        ok, why = check_admissible(self.semantics, self.system,
                                   self.left, self.right, move, self.direction)
        if not ok:
            self.strikes += 1
            self._event("duplicator", {"type": "rejected", "by": by,
                                       "claims": move.to_json(), "reason": why,
                                       "strikes": self.strikes})
            if self.strikes >= self.max_strikes:
                self._finish("spoiler",
                             f"duplicator forfeited after {self.strikes} inadmissible moves")
            return False, why
        self._ensure_explored([d for (u, v, _t) in move.pairs for d in (u, v)])
        self.pending = move
        self._event("duplicator", {"type": "relation", "by": by,
                                   "claims": move.to_json()})
        if not move.pairs:
            self._finish("duplicator", "spoiler has no pair to challenge")
        else:
            self.phase = "await_spoiler"
        return True, "admissible"

    def duplicator_resign(self, by: str = "engine"):
        if self.phase != "await_duplicator":
            raise ValueError(f"not awaiting a Duplicator move (phase {self.phase})")
        self._event("duplicator", {"type": "resign", "by": by})
        self._finish("spoiler", "duplicator cannot produce an admissible relation")

    def spoiler_pick(self, pair, by: str = "human"):
        """Spoiler challenges one claimed pair, which becomes the next
        configuration (for directed claims, oriented lower-first)."""
        if self.phase != "await_spoiler":
            raise ValueError(f"not awaiting a Spoiler pick (phase {self.phase})")
        if len(pair) == 2:
            pair = (pair[0], pair[1], None)
        matches = [entry for entry in self.pending.pairs if entry == tuple(pair)]
        if not matches:
            raise ValueError("challenged pair was not claimed")
        (u, v, tag) = matches[0]
        self._event("spoiler", {"type": "pick", "by": by,
                                "left": u.to_json(), "right": v.to_json(),
                                "dir": tag})
        if tag == "ge":
            u, v = v, u
        self.left, self.right = u, v
        if self.semantics.directed:
            self.direction = "le"
        self.pending = None
        self.round_no += 1
        if isinstance(self.rounds_left, int):
            self.rounds_left -= 1
            if self.rounds_left == 0:
                self._call_bluff()
                return
        else:
            key = self._config_key()
            if key in self._seen_configs:
                self._finish("duplicator", "configuration repeated; play is infinite")
                return
            self._seen_configs.add(key)
            if self.round_no >= self.round_cap:
                self._finish("duplicator", "round cap reached; play is infinite")
                return
        self.phase = "await_duplicator"

    # -- engine players

    def _target_level(self) -> int:
        if self.rounds_left == INFINITE:
            return len(self.levels) - 1
        return min(self.rounds_left - 1, len(self.levels) - 1)

    def _restricted_kernel(self, level: int) -> MoveRelation:
        # Reflexive pairs are omitted: every congruence closure is reflexive,
        # so they never help admissibility, and without them an identical
        # configuration yields the empty claim, stalling Spoiler at once.
        rel = self.levels[level]
        g = self.graph
        i, j = g.index[self.left], g.index[self.right]
        p, q = g.id_profiles[i], g.id_profiles[j]
        sem = self.semantics
        pairs = []
        if sem is Semantics.BISIMILARITY:
            for (lab, c) in p.moves:
                for (lab2, d) in q.moves:
                    if lab == lab2 and c != d and rel.related(c, d):
                        pairs.append((g.states[c], g.states[d]))
        elif sem is Semantics.SIMULATION:
            for (lab, c) in p.moves:
                for (lab2, d) in q.moves:
                    if lab != lab2 or c == d:
                        continue
                    if rel.leq_related(c, d):
                        pairs.append((g.states[c], g.states[d], "le"))
                    if self.direction is None and rel.leq_related(d, c):
                        pairs.append((g.states[c], g.states[d], "ge"))
        elif sem is Semantics.PROBABILISTIC_TRACE:
            for bp, bq in zip(p.branches, q.branches):
                if bp and bq and bp[1] != bq[1] and rel.related(bp[1], bq[1]):
                    pairs.append((g.states[bp[1]], g.states[bq[1]]))
        else:
            for cp, cq in zip(p.succ, q.succ):
                if cp is not None and cq is not None and cp != cq \
                        and rel.related(cp, cq):
                    pairs.append((g.states[cp], g.states[cq]))
        return MoveRelation.of(pairs, directed=sem.directed)

    def engine_duplicator_move(self) -> Optional[MoveRelation]:
        """The canonical Duplicator strategy: claim the deepest-level
        relation kernel restricted to the configuration's continuation
        pairs that is still admissible; None means resign."""
        if self.phase != "await_duplicator":
            raise ValueError(f"not awaiting a Duplicator move (phase {self.phase})")
        for level in range(self._target_level(), -1, -1):
            move = self._restricted_kernel(level)
            ok, _why = check_admissible(self.semantics, self.system,
                                        self.left, self.right, move, self.direction)
            if ok:
                return move
        return None

    def _pair_split(self, entry) -> Optional[int]:
        (u, v, tag) = entry
        self._ensure_explored([u, v])
        g = self.graph
        i, j = g.index[u], g.index[v]
        if tag is None:
            return eng.split_level(self.levels, i, j)
        if tag == "ge":
            i, j = j, i
        return eng.split_level_leq(self.levels, i, j)

    def engine_spoiler_move(self):
        """Challenge the claimed pair that can be refuted soonest; the
        least pair if every claim holds in the limit (Spoiler is losing)."""
        if self.phase != "await_spoiler":
            raise ValueError(f"not awaiting a Spoiler pick (phase {self.phase})")
        if not self.pending.pairs:
            raise ValueError("no pair to pick")
        infinity = len(self.levels) + 1

        def rank(entry):
            split = self._pair_split(entry)
            return (infinity if split is None else split,
                    entry[0].sort_key(), entry[1].sort_key(), str(entry[2]))

        return min(self.pending.pairs, key=rank)

    def step_engines(self):
        """Advance one half-round with the engine playing the due role."""
        if self.phase == "await_duplicator":
            move = self.engine_duplicator_move()
            if move is None:
                self.duplicator_resign(by="engine")
            else:
                self.duplicator_move(move, by="engine")
        elif self.phase == "await_spoiler":
            self.spoiler_pick(self.engine_spoiler_move(), by="engine")
        else:
            raise ValueError("session already finished")

    def candidate_pairs(self) -> MoveRelation:
        """Every continuation pair of the current configuration, per label
        (unfiltered: assembling an admissible claim is the player's job)."""
        g = self.graph
        i, j = g.index[self.left], g.index[self.right]
        p, q = g.id_profiles[i], g.id_profiles[j]
        sem = self.semantics
        pairs = []
        if sem in (Semantics.BISIMILARITY, Semantics.SIMULATION):
            for (lab, c) in p.moves:
                for (lab2, d) in q.moves:
                    if lab != lab2:
                        continue
                    if sem.directed:
                        pairs.append((g.states[c], g.states[d], "le"))
                        if self.direction is None:
                            pairs.append((g.states[c], g.states[d], "ge"))
                    else:
                        pairs.append((g.states[c], g.states[d]))
        elif sem is Semantics.PROBABILISTIC_TRACE:
            for bp, bq in zip(p.branches, q.branches):
                if bp and bq:
                    pairs.append((g.states[bp[1]], g.states[bq[1]]))
        else:
            for cp, cq in zip(p.succ, q.succ):
                if cp is not None and cq is not None:
                    pairs.append((g.states[cp], g.states[cq]))
        return MoveRelation.of(pairs, directed=sem.directed)

    def engine_hint(self) -> Optional[dict]:
        if self.phase == "await_duplicator":
            move = self.engine_duplicator_move()
            return {"kind": "relation",
                    "claims": move.to_json() if move is not None else None,
                    "resign": move is None}
        if self.phase == "await_spoiler":
            (u, v, tag) = self.engine_spoiler_move()
            return {"kind": "pick", "left": u.to_json(), "right": v.to_json(),
                    "dir": tag}
        return None

    def snapshot(self) -> dict:
        cand = []
        if self.phase == "await_duplicator":
            cand = self.candidate_pairs().to_json()
        return {
            "session_id": self.session_id,
            "semantics": self.semantics.value,
            "config": {"left": self.left.to_json(), "right": self.right.to_json(),
                       "direction": self.direction},
            "phase": self.phase,
            "rounds": self.rounds,
            "rounds_left": self.rounds_left,
            "round": self.round_no,
            "human_role": self.human_role,
            "strikes": self.strikes,
            "winner": self.winner,
            "reason": self.reason,
            "pending_relation": self.pending.to_json() if self.pending else None,
            "candidate_pairs": cand,
            "transcript": list(self.transcript),
        }


def new_session(sem: Semantics, system: TransitionSystem, left: DetState,
                right: DetState, rounds: Union[int, str],
                human_role: Optional[str] = None,
                max_strikes: int = 3,
                graph: Optional[eng.DetGraph] = None,
                levels: Optional[list] = None) -> GameSession:
    return GameSession(semantics=sem, system=system, left=left, right=right,
                       rounds=rounds, human_role=human_role,
                       max_strikes=max_strikes, graph=graph, levels=levels)


def play_engine_vs_engine(sem: Semantics, system: TransitionSystem,
                          left: DetState, right: DetState,
                          rounds: Union[int, str],
                          graph: Optional[eng.DetGraph] = None,
                          levels: Optional[list] = None) -> GameSession:
    session = new_session(sem, system, left, right, rounds,
                          graph=graph, levels=levels)
    while session.phase != "finished":
        session.step_engines()
    return session


def replay_transcript(sem: Semantics, system: TransitionSystem,
                      left: DetState, right: DetState,
                      rounds: Union[int, str], transcript: list,
                      human_role: Optional[str] = None,
                      max_strikes: int = 3) -> GameSession:
    """Re-apply the player moves of a transcript to a fresh session."""
    session = new_session(sem, system, left, right, rounds,
                          human_role=human_role, max_strikes=max_strikes)
    for event in transcript:
        move = event["move"]
        kind = move.get("type")
        if event["actor"] == "referee":
            continue
        if session.phase == "finished":
            raise ValueError("transcript continues after the game finished")
        if kind in ("relation", "rejected"):
            claims = MoveRelation.from_json(move["claims"], directed=sem.directed)
            session.duplicator_move(claims, by=move.get("by", "human"))
        elif kind == "resign":
            session.duplicator_resign(by=move.get("by", "engine"))
        elif kind == "pick":
            pair = (DetState.from_json(move["left"]),
                    DetState.from_json(move["right"]), move.get("dir"))
            session.spoiler_pick(pair, by=move.get("by", "human"))
        else:
            raise ValueError(f"unknown transcript move {kind!r}")
    return session
