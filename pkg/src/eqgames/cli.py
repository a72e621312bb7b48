"""Command-line front end: check, determinize, play, serve, oracle.

Exit codes for `check`: 0 when the states are equivalent, 1 when they are
distinguished, 2 on any error.  State expressions are plain indices for
single states, ``{0,2}`` for state sets and ``{0:1/2,1:1/2}`` for
distributions; ``{}`` is the empty set.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import engine as eng
from . import game as gm
from . import oracle as orc
from . import semantics as sm
from .semantics import DetState, Semantics
from .systems import parse_aut, parse_pts


def _load_system(path: str):
    text = Path(path).read_text()
    if path.endswith(".pts") or text.lstrip().startswith("pts"):
        return parse_pts(text)
    return parse_aut(text)


def _seed_pair(args, sem: Semantics, system):
    if args.states is not None:
        x, y = args.states
        return sm.embed(sem, x), sm.embed(sem, y)
    if args.sets and len(args.sets) == 2:
        return sm.parse_detstate(args.sets[0]), sm.parse_detstate(args.sets[1])
    raise SystemExit2("provide either --states X Y or two --set expressions")


class SystemExit2(Exception):
    """Usage or input error; mapped to exit code 2."""


def _parse_depth(text: str):
    if text in (eng.LIMIT, eng.INFINITE):
        return text
    try:
        n = int(text)
    except ValueError:
        raise SystemExit2(f"depth must be an integer, 'limit' or 'infinite', got {text!r}")
    if n < 0:
        raise SystemExit2("depth must be non-negative")
    return n


def _emit(args, payload: dict, text: str):
    if args.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def run_check(args) -> int:
    sem = Semantics.parse(args.semantics)
    system = _load_system(args.input)
    s, t = _seed_pair(args, sem, system)
    verdict = eng.decide_pair_detstates(sem, system, s, t,
                                        _parse_depth(args.depth), args.budget)
    lines = []
    if verdict.equivalent:
        kind = "equivalent up to depth " + str(verdict.depth) \
            if verdict.kind == "equivalent_up_to" else "equivalent in the limit"
        lines.append(f"{s.render()} and {t.render()} are {kind} under {sem.value}")
        if verdict.infinite_mode_degenerate:
            lines.append("note: infinite-depth mode is degenerate for this instance; "
                         "Duplicator wins every position")
    else:
        lines.append(f"{s.render()} and {t.render()} are distinguished at depth "
                     f"{verdict.depth} under {sem.value}")
        lines.append(f"witness: {json.dumps(verdict.witness.to_json(), sort_keys=True)}")
    _emit(args, {"left": s.to_json(), "right": t.to_json(),
                 "semantics": sem.value, "verdict": verdict.to_json()},
          "\n".join(lines))
    return 0 if verdict.equivalent else 1


def run_determinize(args) -> int:
    sem = Semantics.parse(args.semantics)
    system = _load_system(args.input)
    if args.sets:
        seeds = [sm.parse_detstate(expr) for expr in args.sets]
    else:
        seeds = [sm.embed(sem, system.initial)]
    graph = eng.explore(sem, system, seeds, args.budget)
    export = eng.export_determinization(graph)
    if args.output:
        base = Path(args.output)
        base.with_suffix(".json").write_text(
            json.dumps(export["graph"], indent=2, sort_keys=True) + "\n")
        base.with_suffix(".dot").write_text(export["dot"])
        print(f"wrote {base.with_suffix('.json')} and {base.with_suffix('.dot')}")
    elif args.format == "dot":
        print(export["dot"], end="")
    else:
        print(json.dumps(export["graph"], indent=2, sort_keys=True))
    return 0


def run_oracle(args) -> int:
    """Cross-check engine relatedness against the behaviour-value oracle."""
    sem = Semantics.parse(args.semantics)
    system = _load_system(args.input)
    s, t = _seed_pair(args, sem, system)
    depth = _parse_depth(args.depth)
    if depth in (eng.LIMIT, eng.INFINITE):
        raise SystemExit2("the oracle needs a finite depth")
    arena = orc.BehaviourArena(sem, system)
    agree = arena.value(s, depth) == arena.value(t, depth)
    verdict = eng.decide_pair_detstates(sem, system, s, t, depth, args.budget)
    match = agree == verdict.equivalent
    _emit(args, {"depth": depth, "oracle_equal": agree,
                 "engine_equivalent": verdict.equivalent, "agree": match},
          f"oracle: {'equal' if agree else 'different'} at depth {depth}; "
          f"engine: {'equivalent' if verdict.equivalent else 'distinguished'}; "
          f"{'AGREE' if match else 'MISMATCH'}")
    return 0 if match else 2


def run_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="warning")
    return 0


# ---------------------------------------------------------------------------
# Interactive play


def _print_relation(move: gm.MoveRelation):
    for k, (u, v, tag) in enumerate(move.pairs):
        rel = {"le": "<=", "ge": ">=", None: "="}[tag]
        print(f"  [{k}] {u.render()} {rel} {v.render()}")


def _parse_claims(text: str, sem: Semantics) -> gm.MoveRelation:
    # e.g.  ({1,3},{3}); ({4,6},{4})   or with tags:  ({1},{2},le)
    pairs = []
    for chunk in filter(None, (c.strip() for c in text.split(";"))):
        if not (chunk.startswith("(") and chunk.endswith(")")):
            raise ValueError(f"claim must be parenthesized: {chunk!r}")
        inner = chunk[1:-1]
        parts, depth = [], 0
        start = 0
        for k, ch in enumerate(inner):
            if ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
            elif ch == "," and depth == 0:
                parts.append(inner[start:k])
                start = k + 1
        parts.append(inner[start:])
        parts = [p.strip() for p in parts]
        if len(parts) == 2:
            pairs.append((sm.parse_detstate(parts[0]), sm.parse_detstate(parts[1])))
        elif len(parts) == 3:
            pairs.append((sm.parse_detstate(parts[0]), sm.parse_detstate(parts[1]),
                          parts[2]))
        else:
            raise ValueError(f"claim needs 2 or 3 components: {chunk!r}")
    return gm.MoveRelation.of(pairs, directed=sem.directed)


def run_play(args) -> int:
    sem = Semantics.parse(args.semantics)
    system = _load_system(args.input)
    s, t = _seed_pair(args, sem, system)
    rounds = _parse_depth(args.rounds) if args.rounds != eng.INFINITE else eng.INFINITE
    if rounds == eng.LIMIT:
        raise SystemExit2("rounds must be an integer or 'infinite'")
    role = None if args.role == "none" else args.role
    session = gm.new_session(sem, system, s, t, rounds, human_role=role,
                             max_strikes=args.strikes)
    print(f"game on {args.input}: {s.render()} vs {t.render()}, "
          f"{rounds} round(s), {sem.value}; you play {role or 'nobody (engines only)'}")
    while session.phase != "finished":
        print(f"\nround {session.round_no + 1}, rounds left {session.rounds_left}: "
              f"config {session.left.render()} vs {session.right.render()}"
              + (f" [{session.direction}]" if session.direction else ""))
        if session.phase == "await_duplicator":
            if role != "duplicator":
                session.step_engines()
                last = session.transcript[-1]["move"]
                if last["type"] == "relation":
                    print("engine Duplicator claims:")
                    _print_relation(gm.MoveRelation.from_json(
                        last["claims"], directed=sem.directed))
                else:
                    print("engine Duplicator resigns")
                continue
            line = input("duplicator> ").strip()
            if line in ("quit", "exit"):
                session.duplicator_resign(by="human")
                break
            if line == "hint":
                hint = session.engine_hint()
                print("hint:", json.dumps(hint, sort_keys=True))
                continue
            if line == "engine":
                session.step_engines()
                continue
            if line == "resign":
                session.duplicator_resign(by="human")
                continue
            try:
                claims = _parse_claims(line[5:] if line.startswith("move ") else line,
                                       sem)
            except ValueError as exc:
                print(f"could not parse move: {exc}")
                continue
            ok, why = session.duplicator_move(claims, by="human")
            print("accepted" if ok else f"rejected: {why} "
                  f"({session.max_strikes - session.strikes} attempt(s) left)")
        else:
            print("claimed pairs:")
            _print_relation(session.pending)
            if role != "spoiler":
                session.step_engines()
                picked = session.transcript[-1]["move"]
                print(f"engine Spoiler picks "
                      f"{DetState.from_json(picked['left']).render()} vs "
                      f"{DetState.from_json(picked['right']).render()}")
                continue
            line = input("spoiler> ").strip()
            if line in ("quit", "exit"):
                print("spoiler leaves; duplicator wins by default")
                session._finish("duplicator", "spoiler abandoned the game")
                break
            if line == "hint":
                print("hint:", json.dumps(session.engine_hint(), sort_keys=True))
                continue
            if line == "engine":
                session.step_engines()
                continue
            try:
                index = int(line.split()[-1])
                pair = session.pending.pairs[index]
            except (ValueError, IndexError):
                print("pick a pair by index, e.g. 'pick 0'")
                continue
            session.spoiler_pick(pair, by="human")
    print(f"\n{session.winner} wins: {session.reason}")
    if args.transcript:
        Path(args.transcript).write_text(
            json.dumps(session.transcript, indent=2, sort_keys=True) + "\n")
        print(f"transcript written to {args.transcript}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eqgames",
        description="Behavioural-equivalence checking and equivalence games "
                    "on labelled and probabilistic transition systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_pair=True):
        p.add_argument("input", help=".aut or .pts file")
        p.add_argument("--semantics", required=True,
                       help="bisimilarity | trace | serial-trace | "
                            "probabilistic-trace | simulation | failure")
        if with_pair:
            p.add_argument("--states", nargs=2, type=int, metavar=("X", "Y"),
                           help="two plain state indices")
            p.add_argument("--set", dest="sets", action="append", metavar="EXPR",
                           help="determinized state expression such as '{0,2}' "
                                "or '{0:1/2,1:1/2}'; give twice")
        p.add_argument("--budget", type=int, default=eng.DEFAULT_BUDGET,
                       help="exploration budget in determinized states "
                            "(default from EQGAMES_BUDGET or 100000)")
        p.add_argument("--format", choices=["text", "json", "dot"], default="text")

    p_check = sub.add_parser("check", help="decide equivalence of two states")
    common(p_check)
    p_check.add_argument("--depth", default=eng.LIMIT,
                         help="round count, 'limit' or 'infinite'")

    p_det = sub.add_parser("determinize", help="export the determinized system")
    common(p_det, with_pair=False)
    p_det.add_argument("--set", dest="sets", action="append", metavar="EXPR",
                       help="seed expression; defaults to the initial state")
    p_det.add_argument("--output", help="basename for .json/.dot files")

    p_play = sub.add_parser("play", help="play the equivalence game interactively")
    common(p_play)
    p_play.add_argument("--rounds", default="3", help="round count or 'infinite'")
    p_play.add_argument("--role", choices=["duplicator", "spoiler", "none"],
                        default="duplicator")
    p_play.add_argument("--strikes", type=int, default=3,
                        help="inadmissible attempts before forfeit")
    p_play.add_argument("--transcript", help="write the transcript JSON here")

    p_oracle = sub.add_parser("oracle", help="cross-check engine vs oracle")
    common(p_oracle)
    p_oracle.add_argument("--depth", default="3", help="finite depth")

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"check": run_check, "determinize": run_determinize,
                "play": run_play, "oracle": run_oracle, "serve": run_serve}
    try:
        return handlers[args.command](args)
    except (SystemExit2, OSError, ValueError, eng.BudgetExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
