"""Generators for the case-study inputs shipped under ``fixtures/``."""
from __future__ import annotations

from pathlib import Path

# ---------------------------------------------------------------------------
# Two bisimilar three-player arenas.  Players x and y want p and q
# respectively; z wants neither.  Every state except s0 and s1 is absorbing.

_BISIM_HEADER = """\
players x y z
actions x: a b
actions y: a b
actions z: a b a' b'
state s0
state s1
{extra}state s2: p
state s3: q
state s4
initial s0
goal x: F p
goal y: F q
goal z: G ~(p | q)
"""

_VOTE_ROWS = """\
trans {s} b * a -> s2
trans {s} a * b -> s2
trans {s} * b a' -> s3
trans {s} * a b' -> s3
trans {s} a * a -> s4
trans {s} b * b -> s4
trans {s} * a a' -> s4
trans {s} * b b' -> s4
"""

_SINKS = """\
trans s2 * * * -> s2
trans s3 * * * -> s3
trans s4 * * * -> s4
"""


def bisim_arena(split: bool) -> str:
    """Six-state arena when ``split`` (s1 duplicated as s1'), else five states."""
    if split:
        body = (
            "trans s0 b a a -> s1\ntrans s0 b a a' -> s1\n"
            "trans s0 a b b -> s1\ntrans s0 a b b' -> s1\n"
            "trans s0 a b a -> s1'\ntrans s0 a b a' -> s1'\n"
            "trans s0 b a b -> s1'\ntrans s0 b a b' -> s1'\n"
            "trans s0 a a * -> s4\ntrans s0 b b * -> s4\n"
        )
        body += _VOTE_ROWS.format(s="s1") + _VOTE_ROWS.format(s="s1'")
        extra = "state s1'\n"
    else:
        body = (
            "trans s0 a b * -> s1\ntrans s0 b a * -> s1\n"
            "trans s0 a a * -> s4\ntrans s0 b b * -> s4\n"
        )
        body += _VOTE_ROWS.format(s="s1")
        extra = ""
    return _BISIM_HEADER.format(extra=extra) + body + _SINKS


# ---------------------------------------------------------------------------
# Gossip protocol: replica managers alternate between gossiping (s_i true)
# and servicing; a manager may only start gossiping when some other manager
# is servicing.


def gossip(n: int) -> str:
    out = []
    for i in range(1, n + 1):
        others = " | ".join(f"~s{j}" for j in range(1, n + 1) if j != i)
        out.append(
            f"module RM{i} controls s{i}\n"
            f"  init\n"
            f"    :: true ~> s{i}' := true;\n"
            f"  update\n"
            f"    :: s{i} ~> s{i}' := true;\n"
            f"    :: s{i} ~> s{i}' := false;\n"
            f"    :: ~s{i} & ({others}) ~> s{i}' := true;\n"
            f"  goal G F ~s{i};\n"
        )
    return "\n".join(out)


def gossip_all_gossiping(n: int) -> str:
    return "G(" + " & ".join(f"~s{i}" for i in range(1, n + 1)) + ")"


def gossip_some_servicing(n: int) -> str:
    return " | ".join(f"G F s{i}" for i in range(1, n + 1))


# ---------------------------------------------------------------------------
# Replica control: an environment walks the request queue q1..qn; at q_i a
# strict majority of yes votes sends it to q0 (access granted), otherwise to
# q_{i+1}.  From q0 the queue restarts at q1 and q_n always goes to q0.
# Votes are variables set one step ahead of the state that reads them.


def _majority(n: int) -> list[list[int]]:
    need = n // 2 + 1
    from itertools import combinations

    return [list(c) for c in combinations(range(1, n + 1), need)]


def replica(n: int) -> str:
    qs = [f"q{k}" for k in range(n + 1)]

    def goto(k: int) -> str:
        return " ".join(f"{q}' := {'true' if j == k else 'false'};" for j, q in enumerate(qs))

    yes = " | ".join("(" + " & ".join(f"v{j}" for j in c) + ")" for c in _majority(n))
    lines = [f"module Environment controls {', '.join(qs)}", "  init", f"    :: true ~> {goto(0)}", "  update"]
    lines.append(f"    :: q0 ~> {goto(1)}")
    for k in range(1, n):
        lines.append(f"    :: q{k} & ({yes}) ~> {goto(0)}")
        lines.append(f"    :: q{k} & ~({yes}) ~> {goto(k + 1)}")
    lines.append(f"    :: q{n} ~> {goto(0)}")
    lines.append("  goal true;")
    out = ["\n".join(lines) + "\n"]
    for i in range(1, n + 1):
        out.append(
            f"module P{i} controls v{i}\n"
            f"  init\n"
            f"    :: true ~> v{i}' := true;\n"
            f"    :: true ~> v{i}' := false;\n"
            f"  update\n"
            f"    :: true ~> v{i}' := true;\n"
            f"    :: true ~> v{i}' := false;\n"
            f"  goal G F (q{i} & X q0);\n"
        )
    return "\n".join(out)


def replica_never_updated(n: int) -> str:
    return "G ~q0"


def replica_requests_answered(n: int) -> str:
    return " & ".join(f"G(q{i} -> F q0)" for i in range(1, n + 1))


def replica_granted_infinitely_often(n: int) -> str:
    return " & ".join(f"G F (q{i} & X q0)" for i in range(1, n + 1))


# ---------------------------------------------------------------------------
# Grid world: two agents on a 4x4 grid, coordinates in binary (low bit
# first).  Agent A starts at (0,0) and wants (3,3); agent B starts at (3,3)
# and wants (0,0).  Each agent must move to a free neighbouring cell every
# step.  Layout rows are listed from y = 0 upwards; '#' marks an obstacle.

GRID_NO_SAFE_NE = (
    "....",
    ".##.",
    "##..",
    "###.",
)

# same corridor with (1,1) opened, giving room to step aside
GRID_SAFE_NE = (
    "....",
    "..#.",
    "##..",
    "###.",
)


def _bits(agent: str, x: int, y: int) -> list[tuple[str, bool]]:
    return [
        (f"x0{agent}", bool(x & 1)),
        (f"x1{agent}", bool(x & 2)),
        (f"y0{agent}", bool(y & 1)),
        (f"y1{agent}", bool(y & 2)),
    ]


def _cell(agent: str, x: int, y: int) -> str:
    return " & ".join(v if b else f"~{v}" for v, b in _bits(agent, x, y))


def grid_moves(layout: tuple[str, ...]) -> dict[tuple[int, int], list[tuple[int, int]]]:
    size = len(layout)
    free = {(x, y) for y in range(size) for x in range(size) if layout[y][x] == "."}
    moves = {}
    for x, y in sorted(free):
        moves[(x, y)] = [
            (x + dx, y + dy)
            for dx, dy in ((0, 1), (0, -1), (1, 0), (-1, 0))
            if (x + dx, y + dy) in free
        ]
    return moves


def grid(layout: tuple[str, ...]) -> str:
    size = len(layout)
    assert size == 4 and all(len(r) == 4 for r in layout)
    moves = grid_moves(layout)
    starts = {"a": (0, 0), "b": (size - 1, size - 1)}
    goals = {"a": (size - 1, size - 1), "b": (0, 0)}
    out = []
    for agent in ("a", "b"):
        variables = [v for v, _ in _bits(agent, 0, 0)]
        sx, sy = starts[agent]
        init = " ".join(f"{v}' := {'true' if b else 'false'};" for v, b in _bits(agent, sx, sy))
        lines = [f"module Agent{agent.upper()} controls {', '.join(variables)}", "  init", f"    :: true ~> {init}", "  update"]
        for (x, y), targets in moves.items():
            for tx, ty in targets:
                assign = " ".join(
                    f"{v}' := {'true' if b else 'false'};" for v, b in _bits(agent, tx, ty)
                )
                lines.append(f"    :: {_cell(agent, x, y)} ~> {assign}")
        gx, gy = goals[agent]
        lines.append(f"  goal X F ({_cell(agent, gx, gy)});")
        out.append("\n".join(lines) + "\n")
    return "\n".join(out)


def grid_safety() -> str:
    """Agents never share a cell (from the first real position on)."""
    same = " & ".join(f"({v}a <-> {v}b)" for v in ("x0", "x1", "y0", "y1"))
    return f"X G ~({same})"


# ---------------------------------------------------------------------------


def fixture_files() -> dict[str, str]:
    files = {
        "bisim1.arena": bisim_arena(split=True),
        "bisim2.arena": bisim_arena(split=False),
        "grid_no_safe_ne.srml": grid(GRID_NO_SAFE_NE),
        "grid_safe_ne.srml": grid(GRID_SAFE_NE),
        "grid_safety.ltl": grid_safety() + "\n",
    }
    for n in (2, 3, 4):
        files[f"gossip{n}.srml"] = gossip(n)
    for n in (2, 3):
        files[f"replica{n}.srml"] = replica(n)
    return files


def write_fixtures(directory: str | Path) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in sorted(fixture_files().items()):
        path = directory / name
        path.write_text(text)
        written.append(path)
    return written
