"""Built-in example systems used in docs and tests.

SYS1 and SYS2 are small process-term systems whose interesting state sets
are trace- resp. failure-equivalent; SYS3 packs ``a.(b+c)`` and
``a.b + a.c`` into one LTS; SYS4 is a probabilistic system with two
differently shaped but trace-equivalent halves.  The same texts are
shipped as files under ``fixtures/`` at the repository root.
"""

from __future__ import annotations

from .systems import LabelledTransitionSystem, ProbabilisticTransitionSystem, parse_aut, parse_pts

# States: p1=0, p1'=1, p2=2, p2'=3, p2''=4, p3=5, p3'=6.
SYS1_AUT = """\
des (0,4,7)
(0,"a",1)
(2,"a",3)
(2,"b",4)
(5,"b",6)
"""

# States: p1=0 (a.0), p2=1 (a.0+b.0), p3=2 (b.0), deadlock=3.
# State 4 is an unreachable c-loop that only puts "c" into the alphabet,
# so refusal sets range over {a,b,c}.
SYS2_AUT = """\
des (0,5,5)
(0,"a",3)
(1,"a",3)
(1,"b",3)
(2,"b",3)
(4,"c",4)
"""

# Left half: x0=0 -a-> x1=1, x1 -b-> x2=2, x1 -c-> x3=3.
# Right half: y0=4 -a-> y1=5, y0 -a-> y2=6, y1 -b-> y3=7, y2 -c-> y4=8.
SYS3_AUT = """\
des (0,7,9)
(0,"a",1)
(1,"b",2)
(1,"c",3)
(4,"a",5)
(4,"a",6)
(5,"b",7)
(6,"c",8)
"""

# s0=0, u1=1, u2=2, d=3 (absorbing e-loop), t0=4, v=5.
SYS4_PTS = """\
pts 6 a b c e
0 a 1/2 1
0 a 1/2 2
1 b 1/1 3
2 c 1/1 3
3 e 1/1 3
4 a 1/1 5
5 b 1/2 3
5 c 1/2 3
"""


def sys1() -> LabelledTransitionSystem:
    return parse_aut(SYS1_AUT)


def sys2() -> LabelledTransitionSystem:
    return parse_aut(SYS2_AUT)


def sys3() -> LabelledTransitionSystem:
    return parse_aut(SYS3_AUT)


def sys4() -> ProbabilisticTransitionSystem:
    return parse_pts(SYS4_PTS)


def sys4_skewed() -> ProbabilisticTransitionSystem:
    """SYS4 with the right half's branching weights changed to 1/3, 2/3."""
    return parse_pts(SYS4_PTS.replace("5 b 1/2 3", "5 b 1/3 3")
                             .replace("5 c 1/2 3", "5 c 2/3 3"))


ALL_TEXTS = {
    "sys1.aut": SYS1_AUT,
    "sys2.aut": SYS2_AUT,
    "sys3.aut": SYS3_AUT,
    "sys4.pts": SYS4_PTS,
}
