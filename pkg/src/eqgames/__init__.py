"""Behavioural-equivalence engine and Spoiler/Duplicator games for labelled
and probabilistic transition systems."""

from .systems import (
    LabelledTransitionSystem,
    ProbabilisticTransitionSystem,
    ParseError,
    Rational,
    deadlock_states,
    disjoint_union,
    parse_aut,
    parse_pts,
    reachable,
    render_aut,
)
from .semantics import (
    DetState,
    InstanceViolation,
    Semantics,
    continuations,
    depth0_key,
    embed,
    parse_detstate,
    profiles_match,
    step,
    validate_instance,
)
from .engine import (
    BudgetExceeded,
    DetGraph,
    INFINITE,
    LIMIT,
    RelationState,
    StrictInfiniteError,
    Verdict,
    decide,
    decide_pair_detstates,
    explore,
    export_determinization,
    extract_duplicator_strategy,
    extract_witness,
    initial_relation,
    refine_once,
    refinement_levels,
)
from .game import (
    GameSession,
    MoveRelation,
    check_admissible,
    new_session,
    play_engine_vs_engine,
    replay_transcript,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
