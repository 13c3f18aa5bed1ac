"""Dense matrix kernel: spectral radius, Neumann-series inversion, integer powers.

Everything operates on small square float64 arrays (the channel dimension,
typically single digits). Results are deterministic for fixed inputs.
"""

import numpy as np

from .errors import DivergentSeriesError, NumericalFailureError

_RAYLEIGH_RTOL = 1e-12
_MAX_POWER_ITER = 100_000
_RESIDUAL_TOL = 1e-10


def spectral_radius(m, max_iter=_MAX_POWER_ITER):
    """Spectral radius of a square matrix by power iteration.

    Intended for elementwise-nonnegative matrices, where the dominant
    eigenvalue is the Perron root and iteration from a positive start
    vector is reliable. Starts from the all-ones vector and stops once
    two successive Rayleigh-quotient estimates agree to 1e-12 relative.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("spectral_radius needs a square matrix")
    u = np.ones(m.shape[0])
    est = 0.0
    for it in range(1, max_iter + 1):
        w = m @ u
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            # the iterate fell into the kernel; no direction grows
            return 0.0
        prev = est
        est = float(u @ w) / float(u @ u)
        u = w / norm_w
        if it > 1 and abs(est - prev) <= _RAYLEIGH_RTOL * max(abs(est), 1e-300):
            return abs(est)
    raise NumericalFailureError("power iteration did not converge",
                                iterations=max_iter)


def neumann_inverse(m):
    """Return (I - m)^{-1} for spectral radius rho(m) < 1.

    The Neumann series I + m + m^2 + ... sums to this inverse under the
    precondition, but the value is computed by a direct LU-backed solve,
    which stays accurate as rho(m) approaches 1. The residual
    max|(I - m) X - I| is checked against 1e-10 before returning.
    """
    m = np.asarray(m, dtype=float)
    rho = spectral_radius(m)
    if rho >= 1.0:
        raise DivergentSeriesError(rho)
    eye = np.eye(m.shape[0])
    a = eye - m
    x = np.linalg.solve(a, eye)
    residual = float(np.max(np.abs(a @ x - eye)))
    if residual > _RESIDUAL_TOL:
        raise NumericalFailureError(
            f"inverse residual {residual:.3g} exceeds {_RESIDUAL_TOL:g}")
    return x


def mat_power(m, k):
    """m raised to the integer power k >= 0; k = 0 gives the identity."""
    if k < 0:
        raise ValueError("negative matrix power")
    return np.linalg.matrix_power(np.asarray(m, dtype=float), k)
