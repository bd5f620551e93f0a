"""Graphviz DOT rendering of automata, for debugging."""
from __future__ import annotations

from .dpw import DeterministicParityAutomaton
from .nbw import NondeterministicBuchiAutomaton, mask_letter


def _letters(masks: list[int], atoms: tuple[str, ...]) -> str:
    return " ".join("{" + ",".join(sorted(mask_letter(m, atoms))) + "}" for m in masks)


def nbw_to_dot(a: NondeterministicBuchiAutomaton) -> str:
    lines = ["digraph nbw {", "  rankdir=LR;"]
    for q in range(a.n_states):
        shape = "doublecircle" if q in a.accepting else "circle"
        lines.append(f'  q{q} [shape={shape}, label="{q}"];')
    for q in sorted(a.initial):
        lines.append(f"  init{q} [shape=point]; init{q} -> q{q};")
    for q, row in enumerate(a.edges):
        for bits, t in row:
            masks = [m for m in range(a.n_letters) if bits >> m & 1]
            lines.append(f'  q{q} -> q{t} [label="{_letters(masks, a.atoms)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def dpw_to_dot(d: DeterministicParityAutomaton) -> str:
    lines = ["digraph dpw {", "  rankdir=LR;"]
    for q in range(d.n_states):
        lines.append(f'  q{q} [label="{q} / {d.priority[q]}"];')
    lines.append(f"  init [shape=point]; init -> q{d.initial};")
    for q, row in enumerate(d.delta):
        grouped: dict[int, list[int]] = {}
        for m, t in enumerate(row):
            grouped.setdefault(t, []).append(m)
        for t, masks in sorted(grouped.items()):
            lines.append(f'  q{q} -> q{t} [label="{_letters(masks, d.atoms)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
