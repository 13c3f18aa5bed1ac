"""Action-dependent finite-state Markov packet-drop channel.

The channel state evolves under one of two column-stochastic transition
matrices, selected each step by the sensor's transmit bit. A transmission
attempt in state gamma is lost with probability e[gamma]. State indices are
1-based at every public interface; storage is 0-based internally.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InconsistentReceptionError, NumericalFailureError

_RENORM_TOL = 1e-9
_STOCHASTIC_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ChannelModel:
    """Channel description: silent matrix p0, transmit matrix p1, drop vector e.

    Matrices are stored column-stochastic (column j is the distribution of
    the next state given current state j+1). The success vector d = 1 - e
    is derived. Instances compare by identity so they can key caches.
    """

    p0: np.ndarray
    p1: np.ndarray
    e: np.ndarray
    n: int = field(init=False)
    d: np.ndarray = field(init=False)

    def __post_init__(self):
        p0 = np.array(self.p0, dtype=float)
        p1 = np.array(self.p1, dtype=float)
        e = np.atleast_1d(np.array(self.e, dtype=float))
        for arr in (p0, p1, e):
            arr.setflags(write=False)
        d = 1.0 - e
        d.setflags(write=False)
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "p1", p1)
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "n", int(e.shape[0]))
        object.__setattr__(self, "d", d)


def validate(model):
    """Check model invariants; return the list of violations (empty when valid).

    Each violation message names the offending matrix or vector, the
    1-based column or entry index, and the deviation.
    """
    issues = []
    n = model.n
    e = model.e
    if e.ndim != 1 or n < 1:
        issues.append("dimension mismatch: e must be a nonempty vector")
        return issues
    if not np.isfinite(e).all():
        issues.append("probability out of range: e has a non-finite entry")
    else:
        for i in range(n):
            if not (0.0 <= e[i] <= 1.0):
                issues.append(
                    f"probability out of range: e entry {i + 1} is {e[i]!r}")
    for name, mat in (("p0", model.p0), ("p1", model.p1)):
        if mat.ndim != 2 or mat.shape != (n, n):
            issues.append(
                f"dimension mismatch: {name} has shape {mat.shape}, expected ({n}, {n})")
            continue
        if not np.isfinite(mat).all():
            issues.append(f"probability out of range: {name} has a non-finite entry")
            continue
        for j in range(n):
            col = mat[:, j]
            if (col < -_STOCHASTIC_TOL).any() or (col > 1.0 + _STOCHASTIC_TOL).any():
                issues.append(f"probability out of range: {name} column {j + 1}")
            deviation = float(col.sum()) - 1.0
            if abs(deviation) > _STOCHASTIC_TOL:
                issues.append(
                    f"not column-stochastic: {name} column {j + 1} "
                    f"deviates by {deviation:+.3g}")
    return issues


def _sample_index(col, u):
    # inverse-CDF walk: cumulative sums left to right, ties toward the
    # lower index (u equal to a partial sum selects that index)
    acc = 0.0
    last = len(col) - 1
    for i in range(last):
        acc += col[i]
        if u <= acc:
            return i
    return last


def step_state(model, gamma, action, rng):
    """Draw the next channel state (1-based) given the current state and action.

    Consumes exactly one uniform draw from rng.
    """
    if not 1 <= gamma <= model.n:
        raise ValueError(f"state index {gamma} out of range 1..{model.n}")
    mat = model.p1 if action else model.p0
    return _sample_index(mat[:, gamma - 1], rng.random()) + 1


def sample_initial_state(dist, rng):
    """Draw a 1-based state from a distribution vector, one uniform draw."""
    return _sample_index(np.asarray(dist, dtype=float), rng.random()) + 1


def sample_reception(model, gamma, action, rng):
    """Reception bit for this step.

    Returns 0 without touching rng when action is 0. When action is 1,
    consumes one uniform draw and succeeds with probability d[gamma].
    """
    if not action:
        return 0
    if not 1 <= gamma <= model.n:
        raise ValueError(f"state index {gamma} out of range 1..{model.n}")
    return 1 if rng.random() < model.d[gamma - 1] else 0


def belief_update(model, p, t, r, gamma_if_received=None):
    """One-step update of the sensor's belief over the channel state.

    On a reception the acknowledged state resets the belief to the
    corresponding transmit-matrix column. Otherwise the belief is pushed
    through the transition matrix matching the action taken; a silent step
    uses p0 and an unacknowledged attempt uses p1. The result is
    renormalized, and a correction larger than 1e-9 is treated as a hard
    failure since stochastic matrices preserve mass.
    """
    if r and not t:
        raise InconsistentReceptionError()
    if r:
        if gamma_if_received is None:
            raise ValueError("reception reported without the acknowledged state")
        if not 1 <= gamma_if_received <= model.n:
            raise ValueError(
                f"state index {gamma_if_received} out of range 1..{model.n}")
        out = model.p1[:, gamma_if_received - 1].copy()
    elif t:
        out = model.p1 @ np.asarray(p, dtype=float)
    else:
        out = model.p0 @ np.asarray(p, dtype=float)
    mass = float(out.sum())
    if abs(mass - 1.0) > _RENORM_TOL:
        raise NumericalFailureError(
            f"belief mass drifted to {mass!r}; transition matrices preserve "
            f"mass, so the inputs are corrupted")
    return out / mass
