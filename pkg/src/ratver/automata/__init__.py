from .dpw import (
    AutomatonTooLarge,
    DeterministicParityAutomaton,
    complement,
    dpw_accepts_lasso,
    ltl_to_dpw,
    minimize,
    nbw_to_dpw,
)
from .nbw import NondeterministicBuchiAutomaton, letter_mask, ltl_to_nbw, mask_letter, nbw_accepts_lasso

__all__ = [
    "AutomatonTooLarge",
    "DeterministicParityAutomaton",
    "NondeterministicBuchiAutomaton",
    "complement",
    "dpw_accepts_lasso",
    "letter_mask",
    "ltl_to_dpw",
    "ltl_to_nbw",
    "mask_letter",
    "minimize",
    "nbw_accepts_lasso",
    "nbw_to_dpw",
]

from .dot import dpw_to_dot, nbw_to_dot
from .streett import GraphLasso, StreettCondition, parity_to_streett, streett_emptiness

__all__ += [
    "GraphLasso",
    "StreettCondition",
    "dpw_to_dot",
    "nbw_to_dot",
    "parity_to_streett",
    "streett_emptiness",
]
