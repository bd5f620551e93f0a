"""Command-line interface.

Exit status: 0 for yes/bisimilar, 1 for no/not bisimilar, 2 for errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .automata.dot import dpw_to_dot
from .automata.dpw import DEFAULT_MAX_STATES, ltl_to_dpw
from .equilibrium import Verdict, a_nash, e_nash, non_emptiness
from .game import LtlGame, parse_arena
from .ltl import Formula, parse_ltl
from .srml import load_srml

EXIT_YES, EXIT_NO, EXIT_ERROR = 0, 1, 2


@dataclass
class RunConfig:
    command: str
    inputs: list[Path]
    phi: str | None = None
    phi_file: Path | None = None
    json: bool = False
    jobs: int = 1
    deterministic: bool = False
    max_states: int = DEFAULT_MAX_STATES
    max_automaton: int = DEFAULT_MAX_STATES
    export_dot: Path | None = None
    out: Path | None = None
    force: bool = False

    def __post_init__(self):
        if self.max_states <= 0 or self.max_automaton <= 0 or self.jobs <= 0:
            raise ValueError("caps and --jobs must be positive")

    @property
    def engine_options(self) -> dict:
        return {"max_states": self.max_states, "max_automaton": self.max_automaton, "jobs": self.jobs}


def input_kind(path: Path, text: str) -> str:
    if path.suffix == ".srml":
        return "srml"
    if path.suffix == ".arena":
        return "arena"
    first = next((ln.split()[0] for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith(("#", "//"))), "")
    return "arena" if first == "players" else "srml"


def load_game(path: Path, max_states: int = DEFAULT_MAX_STATES) -> tuple[LtlGame, Formula | None]:
    text = path.read_text()
    if input_kind(path, text) == "arena":
        return parse_arena(text), None
    return load_srml(text, max_states)


def _query(cfg: RunConfig, embedded: Formula | None) -> Formula:
    if cfg.phi is not None:
        return parse_ltl(cfg.phi)
    if cfg.phi_file is not None:
        return parse_ltl(cfg.phi_file.read_text())
    if embedded is not None:
        return embedded
    raise ValueError("a query formula is required (--phi, --phi-file or a 'query' line)")


def format_verdict(v: Verdict, yes: str = "YES", no: str = "NO", witness_title: str = "witness") -> str:
    lines = [yes if v.answer else no]
    if v.cycle:
        lines.append("winners: " + (" ".join(v.winners) if v.winners else "(none)"))
    if v.cycle:
        lines.append(f"{witness_title}:")
        for title, steps in (("prefix", v.prefix), ("cycle", v.cycle)):
            lines.append(f"  {title}:")
            for state, acts in steps:
                lines.append(f"    {state}  ({', '.join(acts)})")
    if v.stats:
        lines.append("stats: " + " ".join(f"{k}={v.stats[k]}" for k in sorted(v.stats)))
    return "\n".join(lines) + "\n"


def _emit(cfg: RunConfig, v: Verdict, **kwargs) -> int:
    if cfg.json:
        sys.stdout.write(json.dumps(v.to_json(), indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(format_verdict(v, **kwargs))
    return EXIT_YES if v.answer else EXIT_NO


def _export_goal_automata(cfg: RunConfig, g: LtlGame, extra: Formula | None = None) -> None:
    if cfg.export_dot is None:
        return
    cfg.export_dot.mkdir(parents=True, exist_ok=True)
    for player, goal in zip(g.players, g.goals):
        (cfg.export_dot / f"goal_{player}.dot").write_text(dpw_to_dot(ltl_to_dpw(goal, cfg.max_automaton)))
    if extra is not None:
        (cfg.export_dot / "query.dot").write_text(dpw_to_dot(ltl_to_dpw(extra, cfg.max_automaton)))


def cmd_solve(cfg: RunConfig) -> int:
    g, _ = load_game(cfg.inputs[0], cfg.max_states)
    _export_goal_automata(cfg, g)
    return _emit(cfg, non_emptiness(g, **cfg.engine_options))


def cmd_e_nash(cfg: RunConfig) -> int:
    g, embedded = load_game(cfg.inputs[0], cfg.max_states)
    phi = _query(cfg, embedded)
    _export_goal_automata(cfg, g, phi)
    return _emit(cfg, e_nash(g, phi, **cfg.engine_options))


def cmd_a_nash(cfg: RunConfig) -> int:
    g, embedded = load_game(cfg.inputs[0], cfg.max_states)
    phi = _query(cfg, embedded)
    _export_goal_automata(cfg, g, phi)
    return _emit(cfg, a_nash(g, phi, **cfg.engine_options), witness_title="counterexample")


def cmd_synthesize(cfg: RunConfig) -> int:
    from .synthesis import dump_transducer, synthesize_profile, transducer_to_dot, validate_equilibrium

    g, _ = load_game(cfg.inputs[0], cfg.max_states)
    _export_goal_automata(cfg, g)
    v = non_emptiness(g, **cfg.engine_options)
    if not v.answer:
        return _emit(cfg, v)
    out = cfg.out or Path("strategies")
    targets = [out / f"strategy_{p}.json" for p in g.players]
    clash = [t for t in targets if t.exists()]
    if clash and not cfg.force:
        raise FileExistsError(f"{clash[0]} exists; use --force to overwrite")
    profile = synthesize_profile(v.parity_game, v.winner_ids, v.witness, v.punishments)
    if not validate_equilibrium(g, profile, cfg.max_automaton):
        raise RuntimeError("synthesized profile failed validation")
    out.mkdir(parents=True, exist_ok=True)
    for t, path in zip(profile, targets):
        path.write_text(dump_transducer(v.parity_game, t))
        if cfg.export_dot is not None:
            cfg.export_dot.mkdir(parents=True, exist_ok=True)
            (cfg.export_dot / f"strategy_{g.players[t.player]}.dot").write_text(
                transducer_to_dot(v.parity_game, t)
            )
    code = _emit(cfg, v)
    if not cfg.json:
        for path in targets:
            sys.stdout.write(f"wrote {path}\n")
    return code


def cmd_bisim(cfg: RunConfig) -> int:
    from .game import check_bisimilar

    if len(cfg.inputs) != 2:
        raise ValueError("bisim needs exactly two inputs")
    a, _ = load_game(cfg.inputs[0], cfg.max_states)
    b, _ = load_game(cfg.inputs[1], cfg.max_states)
    same = check_bisimilar(a, b)
    if cfg.json:
        sys.stdout.write(json.dumps({"bisimilar": same}) + "\n")
    else:
        sys.stdout.write("BISIMILAR\n" if same else "NOT BISIMILAR\n")
    return EXIT_YES if same else EXIT_NO


COMMANDS = {
    "solve": cmd_solve,
    "e-nash": cmd_e_nash,
    "a-nash": cmd_a_nash,
    "synthesize": cmd_synthesize,
    "bisim": cmd_bisim,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ratver", description="Rational verification of concurrent games.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        if name == "bisim":
            p.add_argument("inputs", nargs=2, type=Path)
        else:
            p.add_argument("inputs", nargs=1, type=Path)
        if name in ("e-nash", "a-nash"):
            p.add_argument("--phi", help="query formula")
            p.add_argument("--phi-file", type=Path, help="file holding the query formula")
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--deterministic", action="store_true", help="reproducible output (always on)")
        p.add_argument("--max-states", type=int, default=DEFAULT_MAX_STATES)
        p.add_argument("--max-automaton", type=int, default=DEFAULT_MAX_STATES)
        p.add_argument("--export-dot", type=Path, help="directory for DOT renderings")
        if name == "synthesize":
            p.add_argument("--out", type=Path, help="directory for strategy files")
            p.add_argument("--force", action="store_true", help="overwrite existing files")
    return parser


def main(argv: list[str] | None = None) -> int:
    level = getattr(logging, os.environ.get("EVE_LOG", "WARNING").upper(), logging.WARNING)
    logging.basicConfig(
        level=level,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(
            command=args.command,
            inputs=list(args.inputs),
            phi=getattr(args, "phi", None),
            phi_file=getattr(args, "phi_file", None),
            json=args.json,
            jobs=args.jobs,
            deterministic=args.deterministic,
            max_states=args.max_states,
            max_automaton=args.max_automaton,
            export_dot=args.export_dot,
            out=getattr(args, "out", None),
            force=getattr(args, "force", False),
        )
        return COMMANDS[cfg.command](cfg)
    except (OSError, ValueError, RuntimeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
