from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from eqgames import (ParseError, deadlock_states, parse_aut, parse_pts,
                     reachable, render_aut)
from eqgames import fixtures

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures"


def test_empty_system():
    lts = parse_aut("des (0,0,1)")
    assert lts.num_states == 1
    assert lts.transitions == frozenset()
    assert deadlock_states(lts) == frozenset({0})


def test_sys1_matches_paper_processes():
    lts = fixtures.sys1()
    assert lts.num_states == 7
    assert lts.alphabet == ("a", "b")
    expected = {(0, 0, 1), (2, 0, 3), (2, 1, 4), (5, 1, 6)}
    assert lts.transitions == frozenset(expected)
    assert lts.initial == 0


def test_self_loop():
    lts = parse_aut('des (0,1,1)\n(0,"a",0)')
    assert lts.transitions == frozenset({(0, 0, 0)})
    assert deadlock_states(lts) == frozenset()


def test_unquoted_labels_and_spaces():
    lts = parse_aut("des (1, 2, 3)\n( 0 , tau , 1 )\n(1,\"a b,c\",2)")
    assert lts.alphabet == ("tau", "a b,c")
    assert lts.initial == 1


def test_malformed_header():
    for bad in ("", "des 0,0,1", "des (0,0)", "des (x,0,1)", "nonsense"):
        with pytest.raises(ParseError):
            parse_aut(bad)


def test_header_spacing_variants():
    assert parse_aut("des(0,0,2)").num_states == 2
    assert parse_aut("des ( 0 , 0 , 2 )").num_states == 2


def test_out_of_range_state():
    with pytest.raises(ParseError, match="out of range"):
        parse_aut('des (0,1,2)\n(0,"a",5)')
    with pytest.raises(ParseError, match="out of range"):
        parse_aut("des (3,0,2)")


def test_transition_count_mismatch():
    with pytest.raises(ParseError, match="count mismatch"):
        parse_aut('des (0,2,2)\n(0,"a",1)')


def test_duplicate_transition_warns_and_dedups():
    with pytest.warns(UserWarning, match="duplicate"):
        lts = parse_aut('des (0,2,2)\n(0,"a",1)\n(0,"a",1)')
    assert len(lts.transitions) == 1


def test_fixture_files_match_embedded_texts():
    for name, text in fixtures.ALL_TEXTS.items():
        assert (FIXTURE_DIR / name).read_text() == text


def test_round_trip_fixtures():
    for make in (fixtures.sys1, fixtures.sys2, fixtures.sys3):
        lts = make()
        assert parse_aut(render_aut(lts)) == lts


@st.composite
def random_lts_text(draw):
    n = draw(st.integers(1, 6))
    labels = draw(st.lists(st.sampled_from(["a", "b", "c", "tau"]),
                           min_size=1, max_size=3, unique=True))
    triples = draw(st.lists(
        st.tuples(st.integers(0, n - 1), st.sampled_from(labels),
                  st.integers(0, n - 1)),
        max_size=10, unique=True))
    init = draw(st.integers(0, n - 1))
    lines = [f"des ({init},{len(triples)},{n})"]
    lines += [f'({s},"{lab}",{t})' for (s, lab, t) in triples]
    return "\n".join(lines)


@settings(max_examples=60, deadline=None)
@given(random_lts_text())
def test_round_trip_random(text):
    lts = parse_aut(text)
    again = parse_aut(render_aut(lts))
    # the rendered alphabet may be reordered by first occurrence, so compare
    # by resolved labels
    def resolved(sys):
        return frozenset((s, sys.alphabet[l], t) for (s, l, t) in sys.transitions)
    assert resolved(again) == resolved(lts)
    assert again.num_states == lts.num_states and again.initial == lts.initial
    # and once canonical, rendering is a fixed point
    assert render_aut(again) == render_aut(parse_aut(render_aut(again)))


def test_reachable_bfs_oracle():
    lts = fixtures.sys1()
    assert reachable(lts, {0}) == frozenset({0, 1})
    assert reachable(lts, {2}) == frozenset({2, 3, 4})
    assert reachable(lts, set()) == frozenset()


@settings(max_examples=40, deadline=None)
@given(random_lts_text(), st.sets(st.integers(0, 5)), st.sets(st.integers(0, 5)))
def test_reachable_monotone_idempotent(text, seeds_a, seeds_b):
    lts = parse_aut(text)
    a = {s for s in seeds_a if s < lts.num_states}
    b = {s for s in seeds_b if s < lts.num_states} | a
    ra, rb = reachable(lts, a), reachable(lts, b)
    assert ra <= rb
    assert reachable(lts, ra) == ra


def test_deadlocks_sys1():
    assert deadlock_states(fixtures.sys1()) == frozenset({1, 3, 4, 6})


def test_parse_pts_dirac():
    pts = parse_pts("pts 1 a\n0 a 1/1 0")
    assert pts.num_states == 1
    assert pts.rows[0] == ((0, 0, Fraction(1)),)


def test_parse_pts_sys4():
    pts = fixtures.sys4()
    assert pts.num_states == 6
    assert pts.alphabet == ("a", "b", "c", "e")
    for state in range(pts.num_states):
        assert sum((w for (_l, _d, w) in pts.rows[state]), Fraction(0)) == 1


def test_parse_pts_bad_sum():
    with pytest.raises(ParseError, match=r"weights at state 0 sum to 1/2"):
        parse_pts("pts 1 a\n0 a 1/2 0")


def test_parse_pts_rejects_bad_weights():
    with pytest.raises(ParseError):
        parse_pts("pts 1 a\n0 a 0/1 0")
    with pytest.raises(ParseError):
        parse_pts("pts 1 a\n0 a -1/2 0\n0 a 3/2 0")
    with pytest.raises(ParseError):
        parse_pts("pts 1 a\n0 b 1/1 0")
    with pytest.raises(ParseError):
        parse_pts("pts 1 a\nnot a line")


def test_pts_accepts_integer_weights():
    pts = parse_pts("pts 2 a\n0 a 1 1\n1 a 1/1 1")
    assert pts.weight(0, 0, 1) == 1


def test_systems_are_immutable():
    lts = fixtures.sys1()
    with pytest.raises(AttributeError):
        lts.num_states = 9


def test_disjoint_union_compares_across_systems():
    from eqgames import disjoint_union
    from eqgames.engine import LIMIT, decide
    from eqgames.semantics import Semantics

    left = parse_aut('des (0,2,3)\n(0,"a",1)\n(1,"b",2)')
    right = parse_aut('des (0,2,3)\n(0,"a",1)\n(1,"c",2)')
    both = disjoint_union(left, right)
    assert both.num_states == 6
    assert both.alphabet == ("a", "b", "c")
    offset = left.num_states
    # same shape up to the second action, then they diverge
    verdict = decide(Semantics.TRACE, both, 0, 0 + offset, LIMIT)
    assert verdict.kind == "distinguished" and verdict.depth == 2
    # a system is bisimilar to its own second copy
    twice = disjoint_union(left, left)
    for x in range(left.num_states):
        assert decide(Semantics.BISIMILARITY, twice, x, x + offset,
                      LIMIT).equivalent


def test_disjoint_union_pts():
    from eqgames import disjoint_union
    from eqgames.engine import LIMIT, decide
    from eqgames.semantics import Semantics
    pts = fixtures.sys4()
    twice = disjoint_union(pts, pts)
    assert twice.num_states == 12
    verdict = decide(Semantics.PROBABILISTIC_TRACE, twice, 0,
                     pts.num_states + 4, LIMIT)
    assert verdict.equivalent


def test_disjoint_union_kind_mismatch():
    from eqgames import disjoint_union
    with pytest.raises(Exception, match="cannot combine"):
        disjoint_union(fixtures.sys1(), fixtures.sys4())
