"""Offline certification: ultimate-bound thresholds, hold-off feasibility,
and transmission-fraction bounds.

The necessary threshold compute_B0 and the sufficient threshold
compute_Bstar depend only on the plant constants. Everything else combines
the plant with the channel through the resolvent rows of the weighted
kernel b * P1E (shared with the look-ahead cache), evaluated at real
window offsets theta:

    Z_theta(b) = b^theta * d^T (I - b * P1E)^{-1}.

The per-state feasibility vector at offset theta is

    Q(theta) = (Z(abar^2) - Z(c^2)) * B / c^(2 theta)
             + Mbar * (Z(a^2) - Z(1)),

and certification of a hold-off D requires Q(D) < 0 elementwise. The
transmission-fraction machinery counts how far past D the strict negativity
extends and weighs it against the expected number of failed attempts per
transmission spell.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import lookahead
from .errors import (BracketNotFoundError, DivergentSeriesError,
                     FeasibilityError)

_C0_SCAN_CAP = 10 ** 6
_BRACKET_CAP_FACTOR = 1e12
_BISECT_RTOL = 1e-6

C0_UNBOUNDED = math.inf


def compute_B0(params):
    """Necessary lower limit for the ultimate bound: below this value no
    policy can hold the decaying envelope, whatever the channel."""
    abar2 = params.abar * params.abar
    if params.Mbar == 0.0:
        return 0.0
    return (params.Mbar * math.log(params.a * params.a)
            / math.log(params.c * params.c / abar2))


def compute_Bstar(params):
    """Sufficient ultimate-bound threshold.

    Works on the one-variable reduction F of the silent-run performance
    deviation evaluated at the window where the decaying envelope meets the
    floor. When F is non-increasing at the necessary limit B0 (central
    difference with step 1e-6 * B0), B0 itself is sufficient and is
    returned exactly. Otherwise the second zero of the concave F beyond B0
    is bracketed by doubling (factor-of-two steps, capped at 1e12 * B0) and
    refined by bisection to 1e-6 relative accuracy.
    """
    b0 = compute_B0(params)
    if b0 == 0.0:
        return 0.0
    a2 = params.a * params.a
    abar2 = params.abar * params.abar
    c2 = params.c * params.c
    mbar = params.Mbar
    p1c = math.log(a2 / abar2)
    p2c = math.log(a2 * c2 / abar2)
    p3c = math.log(1.0 / c2)
    p4c = math.log(math.log(1.0 / abar2) / (mbar * math.log(a2)))

    def kink_window(bv):
        # worst admissible squared state at bound bv, then the window at
        # which its decayed envelope reaches bv
        worst = math.exp(p3c * p4c / p2c) * bv ** (p1c / p2c)
        return math.log(worst / bv) / p3c

    def f_reduced(bv):
        w = kink_window(bv)
        return abar2 ** w * bv + mbar * (a2 ** w - 1.0) - bv

    h = 1e-6 * b0
    slope = (f_reduced(b0 + h) - f_reduced(b0 - h)) / (2.0 * h)
    if slope <= 0.0:
        return b0

    cap = _BRACKET_CAP_FACTOR * b0
    last_positive = b0 if f_reduced(b0) > 0.0 else None
    hi = 2.0 * b0
    bracket = None
    while hi <= cap:
        value = f_reduced(hi)
        if value > 0.0:
            last_positive = hi
        elif last_positive is not None:
            bracket = (last_positive, hi)
            break
        hi *= 2.0
    if bracket is None:
        raise BracketNotFoundError(
            "bracket not found: no sign change of the reduced performance "
            f"function up to {cap:.3g} although the slope test demanded one")
    lo, hi = bracket
    while hi - lo > _BISECT_RTOL * lo:
        mid = 0.5 * (lo + hi)
        if f_reduced(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _resolvent_row(model, b):
    cache = lookahead._cache_for(model)
    return model.d @ lookahead._inverse(cache, b)


def q_vector(theta, params, model):
    """Per-state feasibility vector Q(theta); negative entries certify."""
    abar2 = params.abar * params.abar
    a2 = params.a * params.a
    c2 = params.c * params.c
    z_abar2 = abar2 ** theta * _resolvent_row(model, abar2)
    z_c2 = c2 ** theta * _resolvent_row(model, c2)
    z_a2 = a2 ** theta * _resolvent_row(model, a2)
    z_one = _resolvent_row(model, 1.0)
    return ((z_abar2 - z_c2) * (params.B / c2 ** theta)
            + params.Mbar * (z_a2 - z_one))


def check_feasible_D(D, params, model):
    """Whether hold-off D certifies: returns (flag, Q(D))."""
    q = q_vector(float(D), params, model)
    return bool((q < 0.0).all()), q


def q_x_vector(theta, X, params, model):
    """Feasibility vector for trajectories currently above threshold X: the
    envelope coefficient is the larger of X and the floor-crossing level."""
    abar2 = params.abar * params.abar
    a2 = params.a * params.a
    c2 = params.c * params.c
    coeff = max(float(X), params.B / c2 ** theta)
    z_abar2 = abar2 ** theta * _resolvent_row(model, abar2)
    z_c2 = c2 ** theta * _resolvent_row(model, c2)
    z_a2 = a2 ** theta * _resolvent_row(model, a2)
    z_one = _resolvent_row(model, 1.0)
    return (z_abar2 - z_c2) * coeff + params.Mbar * (z_a2 - z_one)


def c0_of_X(X, D, params, model):
    """Largest extra hold-off beyond D that keeps q_x_vector strictly
    negative; math.inf when the scan passes 10^6 without a sign change.

    Strict negativity at D + extra implies it at every smaller offset, so a
    linear scan from zero is exact.
    """
    ok, q = check_feasible_D(D, params, model)
    if not ok:
        raise FeasibilityError(
            f"feasibility vector at hold-off {D} is not elementwise negative "
            f"(max entry {float(q.max()):.6g})")
    extra = 0
    while extra < _C0_SCAN_CAP:
        q = q_x_vector(float(D + extra + 1), X, params, model)
        if not (q < 0.0).all():
            return extra
        extra += 1
    return C0_UNBOUNDED


def c1_constant(model):
    """Worst-state expected number of failed attempts during a continuous
    transmission spell: max_i of d^T (P1E) (I - P1E)^{-2} applied to basis
    state i, computed with two transposed linear solves."""
    rho = lookahead.transmission_kernel_radius(model)
    if rho >= 1.0:
        raise DivergentSeriesError(rho)
    pe = model.p1 * model.e[None, :]
    eye_minus_t = (np.eye(model.n) - pe).T
    first = np.linalg.solve(eye_minus_t, pe.T @ model.d)
    second = np.linalg.solve(eye_minus_t, first)
    return float(second.max())


def tf_bound_state(X, D, params, model):
    """Upper bound on the long-run transmission fraction over the horizon
    during which trajectories stay above squared-state threshold X."""
    c0 = c0_of_X(X, D, params, model)
    if c0 == C0_UNBOUNDED:
        return 0.0
    if c0 == 0:
        return 1.0
    c1 = c1_constant(model)
    return c1 / (c0 + c1)


def tf_bound_asymptotic(D, params, model):
    """Transmission-fraction bound with no state threshold; by construction
    this is tf_bound_state evaluated at the envelope floor crossing, and the
    shared code path keeps the two identical."""
    c2 = params.c * params.c
    return tf_bound_state(params.B / c2 ** D, D, params, model)


def default_state_grid(params):
    """Squared-state thresholds B * 2^m for m in [-2, 14]."""
    return [params.B * 2.0 ** m for m in range(-2, 15)]


@dataclass
class CertificationReport:
    """Everything the offline pipeline can say about one configuration.

    feasible is the spectral gate a^2 * rho(P1E) < 1; the remaining fields
    are None when a prerequisite fails, with an explanation in notes.
    """

    rho_p1e: float
    feasible: bool
    b0: float
    bstar: float
    q_at_D: np.ndarray | None
    q_feasible: bool
    c0_inf: float | None
    c1: float | None
    tf_inf_bound: float | None
    tf_state_bounds: list
    notes: list

    def to_document(self):
        def scalar(value):
            if value is None:
                return None
            if value == C0_UNBOUNDED:
                return "unbounded"
            return float(value)

        return {
            "rho_p1e": float(self.rho_p1e),
            "spectral_feasible": bool(self.feasible),
            "b0": float(self.b0),
            "bstar": float(self.bstar),
            "q_at_D": None if self.q_at_D is None else
                      [float(v) for v in self.q_at_D],
            "q_feasible": bool(self.q_feasible),
            "c0_inf": scalar(self.c0_inf),
            "c1": scalar(self.c1),
            "tf_inf_bound": scalar(self.tf_inf_bound),
            "tf_state_bounds": [
                {"X": float(row["X"]), "bound": scalar(row["bound"])}
                for row in self.tf_state_bounds
            ],
            "notes": list(self.notes),
        }


def run_certification(params, model, D, x_grid=None):
    """Full offline pipeline for one hold-off choice."""
    notes = []
    rho = lookahead.transmission_kernel_radius(model)
    a2 = params.a * params.a
    spectral_ok = a2 * rho < 1.0
    b0 = compute_B0(params)
    bstar = compute_Bstar(params)
    if params.B <= bstar:
        notes.append(f"B = {params.B:g} does not exceed the sufficient "
                     f"threshold {bstar:.6g}")
    q_at_d = None
    q_ok = False
    c0_inf = None
    c1 = None
    tf_inf = None
    state_bounds = []
    if not spectral_ok:
        notes.append(f"spectral feasibility fails: a^2 * rho(P1E) = "
                     f"{a2 * rho:.6g} >= 1")
    else:
        q_ok, q_at_d = check_feasible_D(D, params, model)
        if not q_ok:
            notes.append(f"feasibility vector at D = {D} has a nonnegative "
                         f"entry (max {float(q_at_d.max()):.6g})")
        else:
            notes.append(f"feasibility margin at D = {D}: "
                         f"{float((-q_at_d).min()):.6g}")
            c0_inf = c0_of_X(params.B / (params.c * params.c) ** D,
                             D, params, model)
            c1 = c1_constant(model)
            tf_inf = tf_bound_asymptotic(D, params, model)
            if x_grid is None:
                x_grid = default_state_grid(params)
            for X in x_grid:
                state_bounds.append(
                    {"X": float(X), "bound": tf_bound_state(X, D, params, model)})
    return CertificationReport(
        rho_p1e=rho, feasible=spectral_ok, b0=b0, bstar=bstar,
        q_at_D=q_at_d, q_feasible=q_ok, c0_inf=c0_inf, c1=c1,
        tf_inf_bound=tf_inf, tf_state_bounds=state_bounds, notes=notes)
