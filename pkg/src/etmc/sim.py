"""Monte Carlo harness for the closed loop.

Trials are bitwise reproducible: trial i of an ensemble uses a counter-based
generator keyed by seed + i, and every random draw inside a trial happens in
a fixed order (initial channel state, then per step: drop when transmitting,
channel transition, noise). Ensemble aggregation sums per-trial arrays with
a pairwise tree ordered by trial index, so results are independent of thread
count and completion order.
"""

import csv
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import channel, lookahead, plant, policy
from .errors import DivergentSeriesError


@dataclass
class TrialConfig:
    params: plant.PlantParams
    model: channel.ChannelModel
    D: int
    x0: float
    horizon: int
    seed: int
    noise_kind: str = "gaussian"
    gamma0_dist: np.ndarray | None = None  # None means uniform over states


@dataclass
class TrialRecord:
    """Per-step trajectory arrays (length horizon + 1) plus reception times.

    g_value[k] is the look-ahead value computed at step k, nan on steps
    where the latched trigger skipped the evaluation (and at step 0).
    """

    x: np.ndarray
    xhat_plus: np.ndarray
    t: np.ndarray
    r: np.ndarray
    gamma: np.ndarray
    g_value: np.ndarray
    s_times: np.ndarray


@dataclass
class EnsembleStats:
    mean_x2: np.ndarray
    envelope: np.ndarray
    tf_cum: np.ndarray
    tf_state_buckets: list
    trials: int


def envelope(k, x0, params):
    """Offline performance ceiling at step k for initial state x0."""
    c2 = params.c * params.c
    return max(c2 ** k * x0 * x0, params.B)


def envelope_array(horizon, x0, params):
    c2 = params.c * params.c
    steps = np.arange(horizon + 1)
    return np.maximum(c2 ** steps * (x0 * x0), params.B)


def run_trial(cfg):
    """Execute one closed-loop trajectory of cfg.horizon steps.

    Step 0 is the forced initialization reception: the controller starts
    synchronized to x0, the policy anchor is (0, x0), and no drop is drawn.
    On every later step the sensor observes, decides, the drop fires at the
    current channel state when transmitting, the acknowledged feedback
    updates belief and anchors, and channel, plant, and noise advance.
    """
    params = cfg.params
    model = cfg.model
    rho = lookahead.transmission_kernel_radius(model)
    a2 = params.a * params.a
    if a2 * rho >= 1.0:
        raise DivergentSeriesError(a2 * rho, b=a2)
    horizon = int(cfg.horizon)
    rng = np.random.default_rng(np.random.Philox(key=cfg.seed))
    noise = plant.make_noise_sampler(cfg.noise_kind, params.M)
    if cfg.gamma0_dist is None:
        gamma0_dist = np.full(model.n, 1.0 / model.n)
    else:
        gamma0_dist = np.asarray(cfg.gamma0_dist, dtype=float)

    x_arr = np.empty(horizon + 1)
    xhat_arr = np.empty(horizon + 1)
    t_arr = np.zeros(horizon + 1, dtype=np.int8)
    r_arr = np.zeros(horizon + 1, dtype=np.int8)
    gamma_arr = np.zeros(horizon + 1, dtype=np.int64)
    g_arr = np.full(horizon + 1, math.nan)

    gamma = channel.sample_initial_state(gamma0_dist, rng)
    state = plant.initial_state(cfg.x0)
    ps = policy.PolicyState(D=cfg.D, Rk=0, x_Rk=float(cfg.x0))
    s_list = [0]
    x_arr[0] = state.x
    xhat_arr[0] = state.xhat_plus
    t_arr[0] = 1
    r_arr[0] = 1
    gamma_arr[0] = gamma
    p = channel.belief_update(model, gamma0_dist, 1, 1, gamma)
    if horizon >= 1:
        gamma_next = channel.step_state(model, gamma, 1, rng)
        state = plant.advance(state, params, noise(rng))
        gamma = gamma_next

    for k in range(1, horizon + 1):
        info = lookahead.SensorInfo(k=k, x=state.x, z=state.z,
                                    Rk=ps.Rk, x_Rk=ps.x_Rk, p=p)
        t, ps = policy.decide(ps, info, params, model)
        r = channel.sample_reception(model, gamma, t, rng)
        x_arr[k] = state.x
        t_arr[k] = t
        r_arr[k] = r
        gamma_arr[k] = gamma
        g_arr[k] = ps.last_g
        if r:
            policy.on_reception(ps, k, state.x)
            s_list.append(k)
        state = plant.apply_reception(state, r)
        xhat_arr[k] = state.xhat_plus
        p = channel.belief_update(model, p, t, r, gamma if r else None)
        if k < horizon:
            gamma_next = channel.step_state(model, gamma, t, rng)
            state = plant.advance(state, params, noise(rng))
            gamma = gamma_next

    return TrialRecord(x=x_arr, xhat_plus=xhat_arr, t=t_arr, r=r_arr,
                       gamma=gamma_arr, g_value=g_arr,
                       s_times=np.asarray(s_list, dtype=np.int64))


def _pairwise_sum(arrays):
    # fixed binary tree over the input order, independent of how the
    # arrays were produced
    items = list(arrays)
    if not items:
        raise ValueError("nothing to sum")
    while len(items) > 1:
        merged = [items[i] + items[i + 1] for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            merged.append(items[-1])
        items = merged
    return items[0]


def run_ensemble(cfg, trials, threads=1, x_buckets=None):
    """Aggregate `trials` independent trials seeded cfg.seed + index."""
    configs = [replace(cfg, seed=cfg.seed + i) for i in range(int(trials))]
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            records = list(pool.map(run_trial, configs))
    else:
        records = [run_trial(c) for c in configs]
    sum_x2 = _pairwise_sum([rec.x * rec.x for rec in records])
    mean_x2 = sum_x2 / float(trials)
    env = envelope_array(cfg.horizon, cfg.x0, cfg.params)
    # transmissions counted from step 1: step 0 is the forced reception
    sum_t = _pairwise_sum([np.cumsum(rec.t, dtype=np.float64) - float(rec.t[0])
                           for rec in records])
    tf_cum = np.zeros(cfg.horizon + 1)
    steps = np.arange(1, cfg.horizon + 1, dtype=np.float64)
    tf_cum[1:] = sum_t[1:] / (float(trials) * steps)
    if x_buckets is None:
        x_buckets = default_bucket_edges(cfg.params)
    buckets = empirical_tf_state(records, x_buckets)
    return EnsembleStats(mean_x2=mean_x2, envelope=env, tf_cum=tf_cum,
                         tf_state_buckets=buckets, trials=int(trials))


def default_bucket_edges(params):
    """Bucket edges B * 2^m for m in [-2, 15]; thresholds are lower edges."""
    return [params.B * 2.0 ** m for m in range(-2, 16)]


def empirical_tf_state(records, x_edges):
    """Bucketed first-crossing transmission fractions.

    The threshold of a bucket is its lower edge X. A trial enters at its
    first reception S_j with squared state below X; its contribution is
    (transmissions over steps 1..S_j, elapsed steps S_j), and the bucket
    estimate is the ratio of the summed contributions. Trials whose first
    crossing is the forced step-0 reception are excluded (empty horizon),
    as are trials that never cross; both exclusions are counted. The se
    field is a delta-method standard error of the ratio.
    """
    prepared = []
    for rec in records:
        s = rec.s_times
        xs2 = rec.x[s] ** 2
        t_cum = np.cumsum(rec.t, dtype=np.int64)
        prepared.append((s, xs2, t_cum))
    out = []
    for bi in range(len(x_edges) - 1):
        x_lo = float(x_edges[bi])
        x_hi = float(x_edges[bi + 1])
        numerators = []
        denominators = []
        excluded_s0 = 0
        never_crossed = 0
        for s, xs2, t_cum in prepared:
            below = np.nonzero(xs2 < x_lo)[0]
            if below.size == 0:
                never_crossed += 1
                continue
            j = int(below[0])
            if j == 0:
                excluded_s0 += 1
                continue
            s_j = int(s[j])
            numerators.append(float(t_cum[s_j] - t_cum[0]))
            denominators.append(float(s_j))
        count = len(numerators)
        row = {"X_lo": x_lo, "X_hi": x_hi, "count": count,
               "excluded_s0": excluded_s0, "never_crossed": never_crossed}
        if count:
            total_num = math.fsum(numerators)
            total_den = math.fsum(denominators)
            estimate = total_num / total_den
            row["tf_empirical"] = estimate
            if count > 1:
                residuals = (np.asarray(numerators)
                             - estimate * np.asarray(denominators))
                mean_den = total_den / count
                row["se"] = float(np.std(residuals, ddof=1)
                                  / (math.sqrt(count) * mean_den))
            else:
                row["se"] = None
        else:
            row["tf_empirical"] = None
            row["se"] = None
        out.append(row)
    return out


def _fmt(value):
    if value is None:
        return ""
    return repr(float(value))


def write_run_csv(path, stats):
    """Per-step table: k, mean_x2, envelope, tf_cum. Floats are written in
    shortest round-trip form."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "mean_x2", "envelope", "tf_cum"])
        for k in range(len(stats.mean_x2)):
            writer.writerow([k, _fmt(stats.mean_x2[k]), _fmt(stats.envelope[k]),
                             _fmt(stats.tf_cum[k])])


def write_bucket_csv(path, buckets, bounds=None):
    """Bucket table: X_lo, X_hi, tf_empirical, tf_bound, count."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["X_lo", "X_hi", "tf_empirical", "tf_bound", "count"])
        for i, row in enumerate(buckets):
            bound = None if bounds is None else bounds[i]
            writer.writerow([_fmt(row["X_lo"]), _fmt(row["X_hi"]),
                             _fmt(row["tf_empirical"]), _fmt(bound),
                             row["count"]])


def config_fingerprint(document):
    """sha256 over the canonical JSON serialization of a config document."""
    blob = json.dumps(document, sort_keys=True,
                      separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def write_manifest(path, document, trials, gamma0_dist=None, extras=None):
    """Run manifest: config echo, seed derivation, content hash. Contains no
    timestamps so identical runs produce identical files."""
    n_states = len(document.get("channel", {}).get("e", [])) or None
    manifest = {
        "config": document,
        "config_hash": config_fingerprint(document),
        "trials": int(trials),
        "seeds": {
            "base": document.get("sim", {}).get("seed"),
            "per_trial": "base + trial index",
        },
        "gamma0_dist": (list(map(float, gamma0_dist))
                        if gamma0_dist is not None else
                        ("uniform over states" if n_states else None)),
    }
    if extras:
        manifest.update(extras)
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
