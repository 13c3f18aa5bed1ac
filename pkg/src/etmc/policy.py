"""Event-triggered transmission decisions."""

import math
from dataclasses import dataclass

from . import lookahead


@dataclass
class PolicyState:
    """Per-trial mutable policy memory.

    last_g holds the look-ahead value from the most recent decide() call
    that actually evaluated one (nan while the trigger is latched).
    """

    D: int
    triggered: bool = False
    Rk: int = 0
    x_Rk: float = 0.0
    last_g: float = math.nan


def decide(ps, info, params, model):
    """One transmission decision; returns (bit, updated state).

    Latches on as soon as the look-ahead value turns nonnegative and stays
    on until the next reception clears it.
    """
    if ps.triggered:
        ps.last_g = math.nan
        return 1, ps
    g = lookahead.lookahead_G(info, ps.D, params, model)
    ps.last_g = g
    if g >= 0.0:
        ps.triggered = True
        return 1, ps
    return 0, ps


def on_reception(ps, k, x_k):
    """Reset the trigger and move the anchor to the new reception."""
    ps.triggered = False
    ps.Rk = k
    ps.x_Rk = x_k
    return ps


def nominal_decide(k0, D, k):
    """Open-loop pattern started at k0: hold off D steps, then transmit."""
    if k < k0:
        raise ValueError("query precedes the pattern start")
    return 1 if k - k0 >= D else 0
