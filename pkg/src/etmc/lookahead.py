"""Closed-form look-ahead machinery for the transmission policy.

Everything here evaluates expectations over the window W between a decision
instant and the next successful reception, assuming the sensor holds off
for D steps and then transmits on every step until it gets through. Under
that pattern the window-length probabilities have matrix geometric
structure driven by the kernel

    P1E = p1 @ diag(e),

the transmit transition matrix with each column scaled by its drop
probability. Window probabilities are

    omega_D(w, p) = d^T (P1E)^(w-D) p0^D p,        w >= D,

and every expectation of the form E[b^W ...] reduces to a few terms built
from the resolvent (I - b * P1E)^{-1} at five scalar weights

    b in {abar^2, a*abar, a^2, c^2, 1}.

All weighted sums converge exactly when a^2 * rho(P1E) < 1, since a^2 is
the largest weight in use.

Factorizations and the row vectors they induce are cached per channel model
(keyed by object identity) and per exact weight value, so repeated policy
evaluations inside a simulation cost a handful of length-n dot products.
Cache inserts happen under a lock; published entries are immutable, and
results are bitwise identical however the cache was warmed.
"""

import math
import threading
import weakref
from dataclasses import dataclass

import numpy as np

from . import matrix_core
from .errors import DivergentSeriesError


@dataclass
class SensorInfo:
    """Snapshot of what the sensor knows at decision time.

    k is the current step, x the plant state, z the observer error, Rk the
    latest reception step, x_Rk the state acknowledged there, and p the
    current belief over channel states.
    """

    k: int
    x: float
    z: float
    Rk: int
    x_Rk: float
    p: np.ndarray


class _ModelCache:
    """Per-model factorization cache; see the module docstring."""

    def __init__(self, model):
        self.p0 = model.p0
        self.p1 = model.p1
        self.d = model.d
        self.pe = model.p1 * model.e[None, :]
        self.rho = matrix_core.spectral_radius(self.pe)
        self.lock = threading.RLock()
        self.inv = {}        # b -> (I - b*P1E)^{-1}
        self.p0_pow = {0: np.eye(model.n)}   # D -> p0^D
        self.rows_g = {}     # (b, D) -> b^D * d^T inv(b) p0^D
        self.rows_gt = {}    # (b, D) -> b^D * d^T inv(b) p0^(D-1) p1
        self.rows_f = {}     # (b, D) -> list over j of the f row at mu = D + j
        self.rows_ft = {}    # (b, D) -> list over j of the f-tilde row
        self.a_mat = {}      # (b, D) -> inv(b) @ p0^D
        self.at_mat = {}     # (b, D) -> inv(b) @ p0^(D-1) @ p1
        self.u_pref = {}     # b -> list over j of d^T (b*P1E)^j


_caches = weakref.WeakKeyDictionary()
_registry_lock = threading.Lock()


def _cache_for(model):
    cache = _caches.get(model)
    if cache is None:
        with _registry_lock:
            cache = _caches.get(model)
            if cache is None:
                cache = _ModelCache(model)
                _caches[model] = cache
    return cache


def transmission_kernel_radius(model):
    """rho(P1E), cached per model."""
    return _cache_for(model).rho


def _inverse(cache, b):
    inv = cache.inv.get(b)
    if inv is None:
        weighted_rho = abs(b) * cache.rho
        if weighted_rho >= 1.0:
            raise DivergentSeriesError(weighted_rho, b=b)
        with cache.lock:
            inv = cache.inv.get(b)
            if inv is None:
                inv = matrix_core.neumann_inverse(b * cache.pe)
                cache.inv[b] = inv
    return inv


def _p0_power(cache, D):
    mat = cache.p0_pow.get(D)
    if mat is None:
        with cache.lock:
            mat = cache.p0_pow.get(D)
            if mat is None:
                mat = matrix_core.mat_power(cache.p0, D)
                cache.p0_pow[D] = mat
    return mat


def _a_matrix(cache, b, D):
    key = (b, D)
    mat = cache.a_mat.get(key)
    if mat is None:
        with cache.lock:
            mat = cache.a_mat.get(key)
            if mat is None:
                mat = _inverse(cache, b) @ _p0_power(cache, D)
                cache.a_mat[key] = mat
    return mat


def _at_matrix(cache, b, D):
    key = (b, D)
    mat = cache.at_mat.get(key)
    if mat is None:
        with cache.lock:
            mat = cache.at_mat.get(key)
            if mat is None:
                mat = _inverse(cache, b) @ _p0_power(cache, D - 1) @ cache.p1
                cache.at_mat[key] = mat
    return mat


def _row_g(cache, b, D):
    key = (b, D)
    row = cache.rows_g.get(key)
    if row is None:
        with cache.lock:
            row = cache.rows_g.get(key)
            if row is None:
                row = (b ** D) * (cache.d @ _a_matrix(cache, b, D))
                cache.rows_g[key] = row
    return row


def _row_gt(cache, b, D):
    key = (b, D)
    row = cache.rows_gt.get(key)
    if row is None:
        with cache.lock:
            row = cache.rows_gt.get(key)
            if row is None:
                row = (b ** D) * (cache.d @ _at_matrix(cache, b, D))
                cache.rows_gt[key] = row
    return row


def _u_prefixes(cache, b, j):
    # rows d^T (b*P1E)^i for i = 0..j
    rows = cache.u_pref.get(b)
    if rows is None or j >= len(rows):
        with cache.lock:
            rows = cache.u_pref.setdefault(b, [cache.d])
            while j >= len(rows):
                rows.append(b * (rows[-1] @ cache.pe))
    return rows


def _row_f(cache, b, D, j):
    key = (b, D)
    rows = cache.rows_f.get(key)
    if rows is None or j >= len(rows):
        with cache.lock:
            rows = cache.rows_f.setdefault(key, [])
            if j >= len(rows):
                prefixes = _u_prefixes(cache, b, j)
                a_mat = _a_matrix(cache, b, D)
                scale = b ** D
                while j >= len(rows):
                    rows.append(scale * (prefixes[len(rows)] @ a_mat))
    return rows[j]


def _row_ft(cache, b, D, j):
    key = (b, D)
    rows = cache.rows_ft.get(key)
    if rows is None or j >= len(rows):
        with cache.lock:
            rows = cache.rows_ft.setdefault(key, [])
            if j >= len(rows):
                prefixes = _u_prefixes(cache, b, j)
                at_mat = _at_matrix(cache, b, D)
                scale = b ** D
                while j >= len(rows):
                    rows.append(scale * (prefixes[len(rows)] @ at_mat))
    return rows[j]


def omega(model, D, w, p):
    """Probability that the next reception lands exactly w steps ahead under
    belief p, with a hold-off of D silent steps first."""
    if D < 0:
        raise ValueError("hold-off D must be nonnegative")
    if w < D:
        raise ValueError(f"window w={w} must be at least the hold-off D={D}")
    cache = _cache_for(model)
    v = _p0_power(cache, D) @ np.asarray(p, dtype=float)
    for _ in range(w - D):
        v = cache.pe @ v
    return float(cache.d @ v)


def omega_tilde(model, D, w, gamma):
    """Window probability one step after a reception acknowledged in state
    gamma (1-based); requires D >= 1 because the reception step precedes."""
    if D < 1:
        raise ValueError("hold-off D must be at least 1 here")
    if w < D:
        raise ValueError(f"window w={w} must be at least the hold-off D={D}")
    cache = _cache_for(model)
    v = _p0_power(cache, D - 1) @ cache.p1[:, gamma - 1]
    for _ in range(w - D):
        v = cache.pe @ v
    return float(cache.d @ v)


def series_g(model, D, b, p):
    """Closed form of sum_w b^w * omega_D(w, p), the expectation of b^W."""
    cache = _cache_for(model)
    return float(_row_g(cache, b, D) @ np.asarray(p, dtype=float))


def series_f(model, D, b, p, mu):
    """Closed form of the tail sum_{w >= mu} b^w * omega_D(w, p), mu >= D."""
    if mu < D:
        raise ValueError(f"cutoff mu={mu} must be at least the hold-off D={D}")
    cache = _cache_for(model)
    return float(_row_f(cache, b, D, mu - D) @ np.asarray(p, dtype=float))


def series_g_tilde(model, D, b, gamma):
    """series_g conditioned on a reception just acknowledged in state gamma."""
    if D < 1:
        raise ValueError("hold-off D must be at least 1 here")
    cache = _cache_for(model)
    return float(_row_gt(cache, b, D)[gamma - 1])


def series_f_tilde(model, D, b, gamma, nu):
    """series_f conditioned on a reception just acknowledged in state gamma."""
    if D < 1:
        raise ValueError("hold-off D must be at least 1 here")
    if nu < D:
        raise ValueError(f"cutoff nu={nu} must be at least the hold-off D={D}")
    cache = _cache_for(model)
    return float(_row_ft(cache, b, D, nu - D)[gamma - 1])


def cutoff_mu(D, k, Rk, x_Rk, params):
    """Smallest window w >= D at which the decayed anchor mass
    c^(2(k - Rk + w)) * x_Rk^2 falls to the floor B.

    Computed from a logarithm and corrected by direct comparison, so the
    returned value is exact despite floating-point rounding.
    """
    c2 = params.c * params.c
    anchor = c2 ** (k - Rk) * x_Rk * x_Rk
    if anchor <= params.B:
        return D
    guess = math.ceil(math.log(x_Rk * x_Rk / params.B) / math.log(1.0 / c2))
    w = max(D, guess - (k - Rk))
    while w > D and c2 ** (w - 1) * anchor <= params.B:
        w -= 1
    while c2 ** w * anchor > params.B:
        w += 1
    return w


def cutoff_nu(D, x_Sj, params):
    """cutoff_mu specialized to decision instants right after a reception."""
    return cutoff_mu(D, 0, 0, x_Sj, params)


def lookahead_G(info, D, params, model):
    """Expected performance deviation at the next reception if the sensor
    stays silent for D more steps and then transmits until success.

    The policy transmits exactly when this value is nonnegative. The value
    combines the five weighted window sums with the quadratic observer
    terms; the envelope part switches from decay to floor at the cutoff
    window mu, which splits each affected sum into a head and a tail.
    """
    cache = _cache_for(model)
    a2 = params.a * params.a
    if a2 * cache.rho >= 1.0:
        raise DivergentSeriesError(a2 * cache.rho, b=a2)
    abar2 = params.abar * params.abar
    a_abar = params.a * params.abar
    c2 = params.c * params.c
    p = np.asarray(info.p, dtype=float)
    k_minus_R = info.k - info.Rk
    anchor = c2 ** k_minus_R * info.x_Rk * info.x_Rk
    j = cutoff_mu(D, info.k, info.Rk, info.x_Rk, params) - D
    g_abar2 = float(_row_g(cache, abar2, D) @ p)
    g_aabar = float(_row_g(cache, a_abar, D) @ p)
    g_a2 = float(_row_g(cache, a2, D) @ p)
    g_c2 = float(_row_g(cache, c2, D) @ p)
    g_one = float(_row_g(cache, 1.0, D) @ p)
    f_one = float(_row_f(cache, 1.0, D, j) @ p)
    f_c2 = float(_row_f(cache, c2, D, j) @ p)
    x = info.x
    z = info.z
    return (g_abar2 * x * x
            + 2.0 * (g_aabar - g_abar2) * x * z
            + (g_a2 + g_abar2 - 2.0 * g_aabar) * z * z
            + params.Mbar * (g_a2 - g_one)
            - (params.B * f_one + anchor * (g_c2 - f_c2)))


def perf_eval_J(x_Sj, gamma_Sj, D, params, model):
    """Expected performance deviation at the following reception, evaluated
    right after a reception of x_Sj acknowledged in channel state gamma_Sj,
    for a hold-off of D. The observer error is zero at such instants, which
    removes the cross terms that lookahead_G carries."""
    cache = _cache_for(model)
    a2 = params.a * params.a
    if a2 * cache.rho >= 1.0:
        raise DivergentSeriesError(a2 * cache.rho, b=a2)
    abar2 = params.abar * params.abar
    c2 = params.c * params.c
    j = cutoff_nu(D, x_Sj, params) - D
    gt_abar2 = float(_row_gt(cache, abar2, D)[gamma_Sj - 1])
    gt_a2 = float(_row_gt(cache, a2, D)[gamma_Sj - 1])
    gt_c2 = float(_row_gt(cache, c2, D)[gamma_Sj - 1])
    gt_one = float(_row_gt(cache, 1.0, D)[gamma_Sj - 1])
    ft_one = float(_row_ft(cache, 1.0, D, j)[gamma_Sj - 1])
    ft_c2 = float(_row_ft(cache, c2, D, j)[gamma_Sj - 1])
    x2 = x_Sj * x_Sj
    return (gt_abar2 * x2
            + params.Mbar * (gt_a2 - gt_one)
            - (params.B * ft_one + x2 * (gt_c2 - ft_c2)))


def open_loop_H(w, y, params):
    """Performance deviation w steps after a reception of squared state y
    when every intermediate step stays silent."""
    abar2 = params.abar * params.abar
    a2 = params.a * params.a
    c2 = params.c * params.c
    return (abar2 ** w * y + params.Mbar * (a2 ** w - 1.0)
            - max(c2 ** w * y, params.B))


def truncation_window(model, b, D, tol=1e-12):
    """Number of terms after which the weighted window series at weight b is
    below tol in absolute value; used by series-sum cross checks."""
    q = abs(b) * transmission_kernel_radius(model)
    if q >= 1.0:
        raise DivergentSeriesError(q, b=b)
    if q == 0.0:
        return D
    return D + math.ceil(math.log(tol * (1.0 - q)) / math.log(q))
