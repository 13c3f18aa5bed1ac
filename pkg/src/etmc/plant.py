"""Scalar plant, controller bookkeeping, and per-step noise sampling."""

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PlantParams:
    """Loop constants. Build through from_gain or from_abar_factor to get
    validation; the raw constructor stores whatever it is given."""

    a: float
    L: float
    abar: float
    c: float
    M: float
    Mbar: float
    B: float

    @staticmethod
    def from_gain(a, L, c, M, B):
        abar = a + L
        params = PlantParams(a=float(a), L=float(L), abar=float(abar),
                             c=float(c), M=float(M),
                             Mbar=float(M) / (float(a) * float(a) - 1.0),
                             B=float(B))
        issues = params.violations()
        if issues:
            raise ValueError("; ".join(issues))
        return params

    @staticmethod
    def from_abar_factor(a, factor, c, M, B):
        """Closed-loop rate given as a fraction of the envelope rate c."""
        abar = float(factor) * float(c)
        return PlantParams.from_gain(a, abar - float(a), c, M, B)

    def violations(self):
        issues = []
        a2 = self.a * self.a
        abar2 = self.abar * self.abar
        c2 = self.c * self.c
        if a2 <= 1.0:
            issues.append("open-loop rate must satisfy a^2 > 1")
        if not (-1.0 < self.abar < 1.0):
            issues.append("closed-loop rate abar must lie in (-1, 1)")
        if not (0.0 < abar2 < c2 < 1.0):
            issues.append("rates must satisfy 0 < abar^2 < c^2 < 1")
        if self.abar != self.a + self.L:
            issues.append("gain inconsistency: abar must equal a + L exactly")
        if not self.M > 0.0:
            issues.append("noise variance M must be positive")
        if a2 > 1.0 and self.Mbar != self.M / (a2 - 1.0):
            issues.append("Mbar must equal M / (a^2 - 1) exactly")
        if not self.B > 0.0:
            issues.append("ultimate bound B must be positive")
        return issues


@dataclass
class LoopState:
    """Per-step loop variables; the *_plus fields hold post-reception values."""

    k: int
    x: float
    xhat: float
    xhat_plus: float
    z: float
    z_plus: float


def initial_state(x0):
    """Step-0 state after the forced initialization reception."""
    x0 = float(x0)
    return LoopState(k=0, x=x0, xhat=x0, xhat_plus=x0, z=0.0, z_plus=0.0)


def apply_reception(state, r):
    if r:
        return LoopState(k=state.k, x=state.x, xhat=state.xhat,
                         xhat_plus=state.x, z=state.z, z_plus=0.0)
    return LoopState(k=state.k, x=state.x, xhat=state.xhat,
                     xhat_plus=state.xhat, z=state.z, z_plus=state.z)


def advance(state, params, v):
    """Advance plant and observer one step under noise sample v.

    The closed-loop form x' = abar*x - L*z_plus + v is used; it agrees with
    the control form x' = a*x + L*xhat_plus + v because abar = a + L and
    z_plus = x - xhat_plus. The post-reception fields of the returned state
    provisionally hold the predicted values until the next reception.
    """
    x1 = params.abar * state.x - params.L * state.z_plus + v
    xhat1 = params.abar * state.xhat_plus
    z1 = x1 - xhat1
    return LoopState(k=state.k + 1, x=x1, xhat=xhat1, xhat_plus=xhat1,
                     z=z1, z_plus=z1)


def performance_h(k, x_k, Rk, x_Rk, params):
    """Signed deviation of x_k^2 from the decaying envelope anchored at the
    latest reception: positive values violate the target."""
    c2 = params.c * params.c
    return x_k * x_k - max(c2 ** (k - Rk) * x_Rk * x_Rk, params.B)


def make_noise_sampler(kind, M):
    """Return a callable(rng) drawing one zero-mean sample of variance M."""
    if kind == "gaussian":
        sigma = math.sqrt(M)
        return lambda rng: rng.normal(0.0, sigma)
    if kind == "uniform":
        half_width = math.sqrt(3.0 * M)
        return lambda rng: rng.uniform(-half_width, half_width)
    if kind == "two_point":
        magnitude = math.sqrt(M)
        return lambda rng: magnitude if rng.random() < 0.5 else -magnitude
    raise ValueError(f"unknown noise kind: {kind!r}")
