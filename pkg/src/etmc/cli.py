"""Command-line interface: certify, simulate, verify, bounds.

Exit codes: 0 success, 1 certification or verification failure, 2 config
error, 3 numeric failure.
"""

import argparse
import dataclasses
import json
import math
import os
import sys

import numpy as np

from . import certify as cert
from . import channel as channel_mod
from . import config as config_mod
from . import lookahead, matrix_core, plant, sim
from .errors import (BracketNotFoundError, ConfigError, DivergentSeriesError,
                     EtmcError, FeasibilityError, NumericalFailureError)

EXIT_OK = 0
EXIT_CERTIFICATION = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="etmc",
        description="Certify and simulate event-triggered transmission "
                    "over a Markov packet-drop channel.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_cert = sub.add_parser("certify",
                            help="run the offline certification pipeline")
    p_cert.add_argument("config")
    p_cert.add_argument("--out", help="output directory (default from config)")

    p_sim = sub.add_parser("simulate", help="run a Monte Carlo ensemble")
    p_sim.add_argument("config")
    p_sim.add_argument("--trials", type=int)
    p_sim.add_argument("--horizon", type=int)
    p_sim.add_argument("--seed", type=int)
    p_sim.add_argument("--out")
    p_sim.add_argument("--threads", type=int,
                       help="worker threads (default: available cores; the "
                            "ETMC_THREADS environment variable wins)")
    p_sim.add_argument("--force", action="store_true",
                       help="simulate even when certification fails")

    p_ver = sub.add_parser("verify",
                           help="cross-check closed forms against direct sums")
    p_ver.add_argument("config")
    p_ver.add_argument("--suite", default="all",
                       choices=["series", "identities", "signs", "all"])

    p_bnd = sub.add_parser("bounds",
                           help="tabulate transmission-fraction bounds")
    p_bnd.add_argument("config")
    p_bnd.add_argument("--d-range", default="1:6",
                       help="inclusive hold-off range, e.g. 1:6")
    p_bnd.add_argument("--x-grid",
                       help="comma-separated squared-state thresholds")
    p_bnd.add_argument("--out")
    return parser


def _resolve_threads(requested):
    env = os.environ.get("ETMC_THREADS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"ETMC_THREADS must be an integer, got {env!r}"
                              ) from exc
    if requested:
        return max(1, int(requested))
    return os.cpu_count() or 1


def _certification_verdict(cfg, report):
    reasons = []
    if not report.feasible:
        reasons.append("spectral feasibility fails (a^2 * rho(P1E) >= 1)")
    if cfg.params.B <= report.bstar:
        reasons.append("B <= B*")
    if report.feasible and not report.q_feasible:
        reasons.append("Q(D) not negative")
    return reasons


def cmd_certify(args):
    cfg = config_mod.load_config(args.config)
    report = cert.run_certification(cfg.params, cfg.model, cfg.D)
    out_dir = args.out or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    document = report.to_document()
    document["config_hash"] = sim.config_fingerprint(config_mod.to_document(cfg))
    path = os.path.join(out_dir, "certification.json")
    with open(path, "w") as fh:
        json.dump(document, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"rho(P1E) = {report.rho_p1e:.9g}")
    print(f"B0 = {report.b0:.9g}")
    print(f"B* = {report.bstar:.9g}")
    if report.q_at_D is not None:
        print(f"Q({cfg.D}) max entry = {float(report.q_at_D.max()):.9g}")
    if report.tf_inf_bound is not None:
        print(f"asymptotic transmission-fraction bound = "
              f"{report.tf_inf_bound:.9g}")
    print(f"report written to {path}")
    reasons = _certification_verdict(cfg, report)
    if reasons:
        print("NOT CERTIFIED: " + "; ".join(reasons))
        return EXIT_CERTIFICATION
    print("CERTIFIED")
    return EXIT_OK


def _bucket_bounds(buckets, D, params, model):
    bounds = []
    for row in buckets:
        try:
            bounds.append(cert.tf_bound_state(row["X_lo"], D, params, model))
        except EtmcError:
            bounds.append(None)
    return bounds


def _render_simulation_figures(out_dir, stats, cfg, bounds):
    import matplotlib
    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    meta = {"Software": None}
    steps = np.arange(len(stats.mean_x2))

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.semilogy(steps, stats.mean_x2, label="mean of x^2")
    ax.semilogy(steps, stats.envelope, label="envelope", linestyle="--")
    ax.set_xlabel("step")
    ax.set_ylabel("second moment")
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "fig_mean_x2.png"), metadata=meta)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(steps, stats.tf_cum)
    ax.set_xlabel("step")
    ax.set_ylabel("cumulative transmission fraction")
    ax.set_ylim(0.0, 1.0)
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "fig_tf_cum.png"), metadata=meta)
    plt.close(fig)

    xs = [row["X_lo"] for row in stats.tf_state_buckets
          if row["tf_empirical"] is not None]
    ys = [row["tf_empirical"] for row in stats.tf_state_buckets
          if row["tf_empirical"] is not None]
    bx = [row["X_lo"] for row, b in zip(stats.tf_state_buckets, bounds)
          if b is not None]
    by = [b for b in bounds if b is not None]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if xs:
        ax.semilogx(xs, ys, marker="o", label="empirical")
    if bx:
        ax.semilogx(bx, by, marker="s", linestyle="--", label="bound")
    ax.set_xlabel("squared-state threshold X")
    ax.set_ylabel("transmission fraction")
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "fig_buckets.png"), metadata=meta)
    plt.close(fig)


def cmd_simulate(args):
    cfg = config_mod.load_config(args.config)
    updates = {}
    if args.trials is not None:
        updates["trials"] = args.trials
    if args.horizon is not None:
        updates["horizon"] = args.horizon
    if args.seed is not None:
        updates["seed"] = args.seed
    if updates:
        cfg = dataclasses.replace(cfg, **updates)
    if cfg.trials < 1 or cfg.horizon < 1:
        raise ConfigError("trials and horizon must be at least 1")
    threads = _resolve_threads(args.threads)

    report = cert.run_certification(cfg.params, cfg.model, cfg.D)
    reasons = _certification_verdict(cfg, report)
    if reasons:
        if not args.force:
            print("certification failed: " + "; ".join(reasons))
            print("pass --force to simulate anyway")
            return EXIT_CERTIFICATION
        print("warning: simulating an uncertified configuration "
              "(" + "; ".join(reasons) + ")", file=sys.stderr)

    trial_cfg = sim.TrialConfig(
        params=cfg.params, model=cfg.model, D=cfg.D, x0=cfg.x0,
        horizon=cfg.horizon, seed=cfg.seed, noise_kind=cfg.noise_kind,
        gamma0_dist=(np.asarray(cfg.gamma0_dist, dtype=float)
                     if cfg.gamma0_dist is not None else None))
    stats = sim.run_ensemble(trial_cfg, cfg.trials, threads=threads)

    out_dir = args.out or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    document = config_mod.to_document(cfg)
    bounds = _bucket_bounds(stats.tf_state_buckets, cfg.D, cfg.params,
                            cfg.model)
    if "csv" in cfg.formats:
        sim.write_run_csv(os.path.join(out_dir, "run.csv"), stats)
        sim.write_bucket_csv(os.path.join(out_dir, "buckets.csv"),
                             stats.tf_state_buckets, bounds)
    sim.write_manifest(os.path.join(out_dir, "manifest.json"), document,
                       cfg.trials, gamma0_dist=cfg.gamma0_dist,
                       extras={"threads_used": threads})
    if "png" in cfg.formats:
        _render_simulation_figures(out_dir, stats, cfg, bounds)
    terminal_tf = float(stats.tf_cum[-1])
    print(f"{cfg.trials} trials over {cfg.horizon} steps written to {out_dir}")
    print(f"terminal cumulative transmission fraction = {terminal_tf:.6g}")
    return EXIT_OK


def _random_instance(rng):
    """Random plant and channel with a^2 * rho(P1E) <= 0.9."""
    n = int(rng.integers(2, 6))
    p0 = rng.random((n, n)) + 0.05
    p0 /= p0.sum(axis=0, keepdims=True)
    p1 = rng.random((n, n)) + 0.05
    p1 /= p1.sum(axis=0, keepdims=True)
    e_vec = rng.random(n)
    a = float(rng.uniform(1.03, 1.5))
    sign = 1.0 if rng.random() < 0.7 else -1.0
    factor = sign * float(rng.uniform(0.2, 0.98))
    c = float(rng.uniform(0.85, 0.995))
    m_var = float(rng.uniform(0.25, 4.0))
    big_b = float(rng.uniform(1.0, 50.0))
    rho = matrix_core.spectral_radius(p1 * e_vec[None, :])
    limit = 0.9 / (a * a)
    if rho > limit:
        e_vec = e_vec * (limit / rho)
    model = channel_mod.ChannelModel(p0, p1, e_vec)
    params = plant.PlantParams.from_abar_factor(a, factor, c, m_var, big_b)
    return params, model


def _oracle_window_terms(model, D, p, w_max):
    """omega_D(w, p) for w = D..w_max, built by direct iteration."""
    pe = model.p1 * model.e[None, :]
    v = matrix_core.mat_power(model.p0, D) @ np.asarray(p, dtype=float)
    probs = []
    for _ in range(D, w_max + 1):
        probs.append(float(model.d @ v))
        v = pe @ v
    return probs


def _oracle_series(model, D, b, p, mu=None):
    """Truncated sum of b^w * omega_D(w, p), optionally from w = mu on."""
    w_max = lookahead.truncation_window(model, b, D)
    probs = _oracle_window_terms(model, D, p, w_max)
    start = D if mu is None else mu
    return math.fsum(b ** w * probs[w - D]
                     for w in range(start, w_max + 1) if w >= start)


def _oracle_lookahead(info, D, params, model):
    """Direct weighted sum matching lookahead_G, with the raw max() term."""
    a2 = params.a * params.a
    w_max = lookahead.truncation_window(model, a2, D)
    probs = _oracle_window_terms(model, D, info.p, w_max)
    abar = params.abar
    a = params.a
    c2 = params.c * params.c
    anchor = c2 ** (info.k - info.Rk) * info.x_Rk * info.x_Rk
    terms = []
    for w in range(D, w_max + 1):
        ew = (abar ** (2 * w) * info.x * info.x
              + 2.0 * (a ** w * abar ** w - abar ** (2 * w)) * info.x * info.z
              + (a ** (2 * w) + abar ** (2 * w) - 2.0 * a ** w * abar ** w)
              * info.z * info.z
              + params.Mbar * (a ** (2 * w) - 1.0)
              - max(c2 ** w * anchor, params.B))
        terms.append(probs[w - D] * ew)
    return math.fsum(terms)


def _oracle_perf_eval(x_sj, gamma, D, params, model):
    a2 = params.a * params.a
    w_max = lookahead.truncation_window(model, a2, D)
    pvec = model.p1[:, gamma - 1]
    probs = _oracle_window_terms(model, D - 1, pvec, w_max - 1)
    abar2 = params.abar * params.abar
    c2 = params.c * params.c
    x2 = x_sj * x_sj
    terms = []
    for w in range(D, w_max + 1):
        ew = (abar2 ** w * x2 + params.Mbar * (a2 ** w - 1.0)
              - max(c2 ** w * x2, params.B))
        terms.append(probs[w - D] * ew)
    return math.fsum(terms)


def _close(lhs, rhs, tol=1e-8):
    return abs(lhs - rhs) <= tol * max(1.0, abs(lhs), abs(rhs))


def _suite_series(cfg, count=100):
    rng = np.random.default_rng(20260822)
    worst = 0.0
    for _ in range(count):
        params, model = _random_instance(rng)
        D = int(rng.integers(1, 6))
        n = model.n
        p = rng.random(n)
        p /= p.sum()
        gamma = int(rng.integers(1, n + 1))
        weights = [params.abar * params.abar, params.a * params.abar,
                   params.a * params.a, params.c * params.c, 1.0]
        for b in weights:
            g_closed = lookahead.series_g(model, D, b, p)
            g_direct = _oracle_series(model, D, b, p)
            worst = max(worst, abs(g_closed - g_direct))
            if not _close(g_closed, g_direct):
                return False, (f"series_g mismatch at b={b!r}: "
                               f"{g_closed!r} vs {g_direct!r}")
            mu = D + int(rng.integers(0, 9))
            f_closed = lookahead.series_f(model, D, b, p, mu)
            f_direct = _oracle_series(model, D, b, p, mu=mu)
            if not _close(f_closed, f_direct):
                return False, (f"series_f mismatch at b={b!r}, mu={mu}: "
                               f"{f_closed!r} vs {f_direct!r}")
            pvec = model.p1[:, gamma - 1]
            gt_closed = lookahead.series_g_tilde(model, D, b, gamma)
            gt_direct = _oracle_shifted(model, D, b, pvec)
            if not _close(gt_closed, gt_direct):
                return False, (f"series_g_tilde mismatch at b={b!r}: "
                               f"{gt_closed!r} vs {gt_direct!r}")
            nu = D + int(rng.integers(0, 9))
            ft_closed = lookahead.series_f_tilde(model, D, b, gamma, nu)
            ft_direct = _oracle_shifted(model, D, b, pvec, mu=nu)
            if not _close(ft_closed, ft_direct):
                return False, (f"series_f_tilde mismatch at b={b!r}, nu={nu}: "
                               f"{ft_closed!r} vs {ft_direct!r}")
        info = lookahead.SensorInfo(
            k=int(rng.integers(1, 20)), x=float(rng.uniform(-40.0, 40.0)),
            z=float(rng.uniform(-10.0, 10.0)), Rk=0,
            x_Rk=float(rng.uniform(0.0, 60.0)), p=p)
        g_value = lookahead.lookahead_G(info, D, params, model)
        g_direct = _oracle_lookahead(info, D, params, model)
        if not _close(g_value, g_direct):
            return False, (f"lookahead_G mismatch: {g_value!r} vs {g_direct!r}")
        x_sj = float(rng.uniform(0.0, 60.0))
        j_value = lookahead.perf_eval_J(x_sj, gamma, D, params, model)
        j_direct = _oracle_perf_eval(x_sj, gamma, D, params, model)
        if not _close(j_value, j_direct):
            return False, (f"perf_eval_J mismatch: {j_value!r} vs {j_direct!r}")
    return True, f"{count} randomized instances, worst gap {worst:.3g}"


def _oracle_shifted(model, D, b, pvec, mu=None):
    """Truncated conditioned series: silent prefix D-1, then pvec."""
    w_max = lookahead.truncation_window(model, b, D)
    pe = model.p1 * model.e[None, :]
    v = matrix_core.mat_power(model.p0, D - 1) @ np.asarray(pvec, dtype=float)
    probs = []
    for _ in range(D, w_max + 1):
        probs.append(float(model.d @ v))
        v = pe @ v
    start = D if mu is None else mu
    return math.fsum(b ** w * probs[w - D]
                     for w in range(start, w_max + 1) if w >= start)


def _suite_identities(cfg, samples=100_000, states=5):
    params, model = cfg.params, cfg.model
    rng = np.random.default_rng(8260228)
    sigma = math.sqrt(params.M)
    abar = params.abar
    gain = params.L
    a = params.a
    for trial in range(states):
        x = float(rng.uniform(-30.0, 30.0))
        z = float(rng.uniform(-8.0, 8.0))
        k_minus_r = int(rng.integers(0, 6))
        x_anchor = float(rng.uniform(0.0, 40.0))
        D = int(rng.integers(1, 4))
        p = rng.random(model.n)
        p /= p.sum()
        gamma = int(rng.integers(1, model.n + 1))
        v = rng.normal(0.0, sigma, size=samples)

        # silent-step tower: holding off one extra step now equals stepping
        # silently and holding off D from there
        info_long = lookahead.SensorInfo(k=k_minus_r, x=x, z=z, Rk=0,
                                         x_Rk=x_anchor, p=p)
        lhs = lookahead.lookahead_G(info_long, D + 1, params, model)
        x1 = abar * x - gain * z + v
        z1 = a * z + v
        p1 = model.p0 @ p
        p1 = p1 / p1.sum()
        mean, half = _quadratic_g_stats(x1, z1, k_minus_r + 1, x_anchor, p1,
                                        D, params, model)
        if abs(lhs - mean) > 3.0 * half + 1e-9:
            return False, (f"silent-step tower broke at case {trial}: "
                           f"{lhs!r} vs {mean!r} +- {half!r}")

        # reception tower: the post-reception evaluation equals stepping
        # once from the reception and holding off D from there
        x_s = float(rng.uniform(-30.0, 30.0))
        lhs_j = lookahead.perf_eval_J(x_s, gamma, D + 1, params, model)
        x1 = abar * x_s + v
        z1 = v.copy()
        p1 = model.p1[:, gamma - 1]
        mean, half = _quadratic_g_stats(x1, z1, 1, x_s, p1, D, params, model)
        if abs(lhs_j - mean) > 3.0 * half + 1e-9:
            return False, (f"reception tower broke at case {trial}: "
                           f"{lhs_j!r} vs {mean!r} +- {half!r}")
    return True, f"{states} states x {samples} samples, both towers inside 3 SE"


def _quadratic_g_stats(x1, z1, k_minus_r, x_anchor, p, D, params, model):
    """Mean and standard error of lookahead_G over vectorized (x1, z1).

    The look-ahead value is a fixed quadratic in (x1, z1) once the belief
    and the anchor are fixed, so the closed-form scalars are fetched once
    and broadcast; per sample this matches lookahead_G bit for bit.
    """
    abar2 = params.abar * params.abar
    a_abar = params.a * params.abar
    a2 = params.a * params.a
    c2 = params.c * params.c
    anchor = c2 ** k_minus_r * x_anchor * x_anchor
    mu = lookahead.cutoff_mu(D, k_minus_r, 0, x_anchor, params)
    g_abar2 = lookahead.series_g(model, D, abar2, p)
    g_aabar = lookahead.series_g(model, D, a_abar, p)
    g_a2 = lookahead.series_g(model, D, a2, p)
    g_c2 = lookahead.series_g(model, D, c2, p)
    g_one = lookahead.series_g(model, D, 1.0, p)
    f_one = lookahead.series_f(model, D, 1.0, p, mu)
    f_c2 = lookahead.series_f(model, D, c2, p, mu)
    values = (g_abar2 * x1 * x1
              + 2.0 * (g_aabar - g_abar2) * x1 * z1
              + (g_a2 + g_abar2 - 2.0 * g_aabar) * z1 * z1
              + params.Mbar * (g_a2 - g_one)
              - (params.B * f_one + anchor * (g_c2 - f_c2)))
    mean = float(values.mean())
    half = float(values.std(ddof=1) / math.sqrt(values.size))
    return mean, half


def _suite_signs(cfg):
    params, model = cfg.params, cfg.model
    abar2 = params.abar * params.abar
    a2 = params.a * params.a
    c2 = params.c * params.c

    # once positive, the silent-run deviation stays positive (for B > B*)
    bstar = cert.compute_Bstar(params)
    if params.B <= bstar:
        return False, (f"sign scan needs B > B*; got B={params.B:g}, "
                       f"B*={bstar:.6g}")
    y_grid = np.linspace(0.0, 1e6, 200)
    w_grid = np.arange(1, 501, dtype=float)[:, None]
    h_grid = (abar2 ** w_grid * y_grid[None, :]
              + params.Mbar * (a2 ** w_grid - 1.0)
              - np.maximum(c2 ** w_grid * y_grid[None, :], params.B))
    positive = h_grid > 0.0
    ever_positive = np.maximum.accumulate(positive, axis=0)
    reversals = int(np.logical_and(ever_positive[:-1], ~positive[1:]).sum())
    if reversals:
        return False, f"{reversals} sign reversals in the silent-run scan"

    # the feasibility vector grows strictly through integer offsets when the
    # ultimate bound sits at the necessary limit
    b0 = cert.compute_B0(params)
    params_b0 = dataclasses.replace(params, B=b0)
    previous = cert.q_vector(0.0, params_b0, model)
    for theta in range(1, 201):
        current = cert.q_vector(float(theta), params_b0, model)
        if not (current > previous).all():
            return False, f"feasibility vector not strictly increasing at theta={theta}"
        previous = current

    # post-reception evaluations never exceed the per-state aggregate
    rng = np.random.default_rng(41)
    pi_cache = {}
    worst = -math.inf
    for _ in range(10_000):
        theta = int(rng.integers(1, 11))
        gamma = int(rng.integers(1, model.n + 1))
        x_sj = float(rng.uniform(0.0, 1e4))
        key = (theta, gamma)
        if key not in pi_cache:
            reach = (matrix_core.mat_power(model.p0, theta - 1)
                     @ model.p1[:, gamma - 1])
            pi_cache[key] = float(cert.q_vector(float(theta), params, model)
                                  @ reach)
        bound = pi_cache[key]
        value = lookahead.perf_eval_J(x_sj, gamma, theta, params, model)
        worst = max(worst, value - bound)
        if value > bound + 1e-9:
            return False, (f"post-reception value exceeded the aggregate: "
                           f"{value!r} > {bound!r}")
    return True, (f"sign scan clean, 200 strict increases, "
                  f"worst aggregate slack {worst:.3g}")


def cmd_verify(args):
    cfg = config_mod.load_config(args.config)
    suites = (["series", "identities", "signs"] if args.suite == "all"
              else [args.suite])
    runners = {"series": _suite_series, "identities": _suite_identities,
               "signs": _suite_signs}
    all_ok = True
    for name in suites:
        try:
            ok, detail = runners[name](cfg)
        except EtmcError as exc:
            ok, detail = False, str(exc)
        all_ok = all_ok and ok
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return EXIT_OK if all_ok else EXIT_CERTIFICATION


def _parse_d_range(text):
    try:
        lo, hi = text.split(":")
        lo, hi = int(lo), int(hi)
    except ValueError as exc:
        raise ConfigError(f"bad --d-range {text!r}; expected lo:hi") from exc
    if lo < 1 or hi < lo:
        raise ConfigError(f"bad --d-range {text!r}")
    return lo, hi


def _render_bounds_figure(out_dir, rows_inf, rows_state):
    import matplotlib
    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4.5))
    by_d = {}
    for d_value, x_value, bound in rows_state:
        by_d.setdefault(d_value, []).append((x_value, bound))
    for d_value, points in sorted(by_d.items()):
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        ax.semilogx(xs, ys, marker="o", label=f"D={d_value}")
    for d_value, bound in rows_inf:
        if bound is not None:
            ax.axhline(bound, linestyle=":", linewidth=0.8)
    ax.set_xlabel("squared-state threshold X")
    ax.set_ylabel("transmission-fraction bound")
    if by_d:
        ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "fig_bounds.png"),
                metadata={"Software": None})
    plt.close(fig)


def cmd_bounds(args):
    cfg = config_mod.load_config(args.config)
    d_lo, d_hi = _parse_d_range(args.d_range)
    if args.x_grid:
        try:
            x_grid = [float(v) for v in args.x_grid.split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad --x-grid {args.x_grid!r}") from exc
    else:
        x_grid = cert.default_state_grid(cfg.params)
    out_dir = args.out or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)

    rows_inf = []
    rows_state = []
    c2 = cfg.params.c * cfg.params.c
    identity_gap = 0.0
    for d_value in range(d_lo, d_hi + 1):
        try:
            inf_bound = cert.tf_bound_asymptotic(d_value, cfg.params, cfg.model)
        except (FeasibilityError, DivergentSeriesError) as exc:
            print(f"D={d_value}: infeasible ({exc})")
            rows_inf.append((d_value, None))
            continue
        crossing = cfg.params.B / c2 ** d_value
        state_at_crossing = cert.tf_bound_state(crossing, d_value, cfg.params,
                                                cfg.model)
        identity_gap = max(identity_gap, abs(inf_bound - state_at_crossing))
        rows_inf.append((d_value, inf_bound))
        for x_value in x_grid:
            rows_state.append((d_value, float(x_value),
                               cert.tf_bound_state(x_value, d_value,
                                                   cfg.params, cfg.model)))
        print(f"D={d_value}: asymptotic bound {inf_bound:.9g}")
    if identity_gap > 1e-12:
        print(f"asymptotic/state-threshold identity violated by "
              f"{identity_gap:.3g}")
        return EXIT_CERTIFICATION

    with open(os.path.join(out_dir, "bounds_inf.csv"), "w", newline="") as fh:
        import csv as _csv
        writer = _csv.writer(fh)
        writer.writerow(["D", "tf_inf_bound"])
        for d_value, bound in rows_inf:
            writer.writerow([d_value, "" if bound is None else repr(bound)])
    with open(os.path.join(out_dir, "bounds_state.csv"), "w", newline="") as fh:
        import csv as _csv
        writer = _csv.writer(fh)
        writer.writerow(["D", "X", "tf_state_bound"])
        for d_value, x_value, bound in rows_state:
            writer.writerow([d_value, repr(x_value), repr(bound)])
    _render_bounds_figure(out_dir, rows_inf, rows_state)
    print(f"tables written to {out_dir}")
    return EXIT_OK


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {"certify": cmd_certify, "simulate": cmd_simulate,
                "verify": cmd_verify, "bounds": cmd_bounds}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FeasibilityError as exc:
        print(f"certification failure: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATION
    except (DivergentSeriesError, NumericalFailureError,
            BracketNotFoundError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
