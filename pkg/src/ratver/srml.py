"""Simple Reactive Modules: parser and compilation to a concurrent game.

A system is a list of modules, each controlling a disjoint set of Boolean
variables through guarded commands::

    module toggle controls x
      init
        :: true ~> x' := true;
        :: true ~> x' := false;
      update
        :: x ~> x' := false;
        :: ~x ~> x' := true;
      goal G F x;

An optional top-level ``query <formula>;`` records a formula for E-Nash or
A-Nash checks.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .game import ConcurrentGameStructure, LtlGame, StateSpaceTooLarge
from .ltl import (
    TRUE,
    Formula,
    LtlSyntaxError,
    TokenStream,
    atoms,
    eval_propositional,
    is_propositional,
    parse_formula,
    tokenize,
)

DEFAULT_MAX_STATES = 10**6
PRE_INITIAL = "<pre>"
IDLE = "idle"
KEYWORDS = frozenset({"module", "controls", "init", "update", "goal", "query"})


class SrmlError(ValueError):
    pass


class SrmlSyntaxError(SrmlError):
    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"{message} at line {line}, column {column}")
        self.message = message
        self.line = line
        self.column = column


class DuplicateVariable(SrmlError):
    pass


class ForeignAssignment(SrmlError):
    pass


class ConflictingAssignment(SrmlError):
    pass


@dataclass(frozen=True)
class GuardedCommand:
    guard: Formula
    assignments: tuple[tuple[str, Formula], ...]


@dataclass
class SrmlModule:
    name: str
    controls: tuple[str, ...]
    init: list[GuardedCommand] = field(default_factory=list)
    update: list[GuardedCommand] = field(default_factory=list)
    goal: Formula | None = None


@dataclass
class SrmlSystem:
    modules: list[SrmlModule]
    query: Formula | None = None

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(v for mod in self.modules for v in mod.controls)


def parse_srml(text: str) -> SrmlSystem:
    try:
        tokens = tokenize(text)
    except LtlSyntaxError as exc:
        raise SrmlSyntaxError(exc.message, exc.line, exc.column) from None
    ts = TokenStream(tokens, error=SrmlSyntaxError)
    modules: list[SrmlModule] = []
    query = None
    while ts.peek.kind != "eof":
        if ts.accept("query"):
            if query is not None:
                ts.fail("second query")
            query = parse_formula(ts)
            ts.expect(";")
        elif ts.at("module"):
            modules.append(_parse_module(ts))
        else:
            ts.fail("expected 'module' or 'query'")
    if not modules:
        raise SrmlSyntaxError("no modules", 1, 1)
    _check_system(modules)
    return SrmlSystem(modules, query)


def _ident(ts: TokenStream) -> str:
    tok = ts.peek
    if tok.kind != "ident" or tok.text in KEYWORDS or tok.text.endswith("'"):
        ts.fail("expected an identifier")
    return ts.advance().text


def _parse_module(ts: TokenStream) -> SrmlModule:
    ts.expect("module")
    name = _ident(ts)
    ts.expect("controls")
    controls = [_ident(ts)]
    while ts.accept(","):
        controls.append(_ident(ts))
    if len(set(controls)) != len(controls):
        raise DuplicateVariable(f"module {name} lists a variable twice")
    mod = SrmlModule(name, tuple(controls))
    if ts.accept("init"):
        mod.init = _parse_commands(ts, mod)
    if ts.accept("update"):
        mod.update = _parse_commands(ts, mod)
    if ts.accept("goal"):
        mod.goal = parse_formula(ts)
        ts.expect(";")
    return mod


def _parse_commands(ts: TokenStream, mod: SrmlModule) -> list[GuardedCommand]:
    commands = []
    while ts.at("::"):
        start = ts.advance()
        guard = _propositional(ts)
        ts.expect("~>")
        assignments: list[tuple[str, Formula]] = []
        while ts.peek.kind == "ident" and ts.peek.text.endswith("'"):
            tok = ts.advance()
            var = tok.text[:-1]
            if var not in mod.controls:
                raise ForeignAssignment(
                    f"module {mod.name} assigns {var}, which it does not control "
                    f"(line {tok.line}, column {tok.column})"
                )
            if any(var == v for v, _ in assignments):
                raise ConflictingAssignment(
                    f"{var} assigned twice in one command (line {start.line})"
                )
            ts.expect(":=")
            assignments.append((var, _propositional(ts)))
            ts.expect(";")
        if not assignments:
            ts.expect(";")
        commands.append(GuardedCommand(guard, tuple(assignments)))
    return commands


def _propositional(ts: TokenStream) -> Formula:
    tok = ts.peek
    f = parse_formula(ts)
    if not is_propositional(f):
        ts.fail("temporal operator in a propositional expression", tok)
    return f


def _check_system(modules: list[SrmlModule]) -> None:
    owner: dict[str, str] = {}
    names = set()
    for mod in modules:
        if mod.name in names:
            raise SrmlError(f"module {mod.name} declared twice")
        names.add(mod.name)
        for v in mod.controls:
            if v in owner:
                raise DuplicateVariable(f"variable {v} controlled by {owner[v]} and {mod.name}")
            owner[v] = mod.name
    declared = set(owner)
    for mod in modules:
        for cmd in mod.init + mod.update:
            used = atoms(cmd.guard).union(*(atoms(e) for _, e in cmd.assignments))
            unknown = used - declared
            if unknown:
                raise SrmlError(f"module {mod.name} uses undeclared variables {sorted(unknown)}")


def build_cgs(system: SrmlSystem, max_states: int = DEFAULT_MAX_STATES) -> LtlGame:
    """Compile to an LTL game over the reachable valuations plus a pre-initial state.

    Action ``iK``/``uK`` picks the K-th init/update command of a module;
    ``idle`` is the only action when no command is enabled and leaves the
    module's variables unchanged.
    """
    mods = system.modules
    variables = system.variables
    action_names = tuple(
        tuple(f"i{k}" for k in range(len(mod.init)))
        + tuple(f"u{k}" for k in range(len(mod.update)))
        + (IDLE,)
        for mod in mods
    )
    idle = [len(names) - 1 for names in action_names]
    offset_update = [len(mod.init) for mod in mods]

    def commands_at(val: frozenset | None):
        per = []
        for i, mod in enumerate(mods):
            if val is None:
                env, pool, base = frozenset(), mod.init, 0
            else:
                env, pool, base = val, mod.update, offset_update[i]
            enabled = tuple(base + k for k, c in enumerate(pool) if eval_propositional(c.guard, env))
            per.append(enabled or (idle[i],))
        return per

    def apply(val: frozenset | None, joint) -> frozenset:
        env = val if val is not None else frozenset()
        out = set(env)
        for i, (mod, a) in enumerate(zip(mods, joint)):
            if a == idle[i]:
                continue
            cmd = mod.init[a] if a < offset_update[i] else mod.update[a - offset_update[i]]
            for var, expr in cmd.assignments:
                if eval_propositional(expr, env):
                    out.add(var)
                else:
                    out.discard(var)
        return frozenset(out)

    index: dict = {None: 0}
    order: list = [None]
    available = []
    transitions = []
    k = 0
    while k < len(order):
        val = order[k]
        k += 1
        avail = commands_at(val)
        row = {}
        for joint in itertools.product(*avail):
            nxt = apply(val, joint)
            if nxt not in index:
                if len(order) >= max_states:
                    raise StateSpaceTooLarge(f"SRML system exceeded {max_states} states")
                index[nxt] = len(order)
                order.append(nxt)
            row[joint] = index[nxt]
        available.append(tuple(avail))
        transitions.append(row)

    def state_name(val) -> str:
        if val is None:
            return PRE_INITIAL
        return "".join("1" if v in val else "0" for v in variables)

    structure = ConcurrentGameStructure(
        tuple(mod.name for mod in mods),
        action_names,
        [state_name(v) for v in order],
        0,
        available,
        transitions,
    )
    labels = [frozenset() if v is None else v for v in order]
    goals = [mod.goal if mod.goal is not None else TRUE for mod in mods]
    return LtlGame(structure, labels, goals)


def load_srml(text: str, max_states: int = DEFAULT_MAX_STATES) -> tuple[LtlGame, Formula | None]:
    system = parse_srml(text)
    return build_cgs(system, max_states), system.query
