"""Command-line driver: enumerate, fit, backtest, and forecast.

Artifacts are tidy CSVs whose first line is a ``# manifest: <digest>``
comment binding them to the run manifest; a rerun with the same data,
config, and seed reproduces every table byte for byte.  Wall-clock timings
go to a separate ``timings.json`` so they never perturb the digest.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
error.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, artifacts, data, models
from . import portfolio as pf
from .data import BENCH_NAME, EngineConfig
from .engine import Engine, initial_scales
from .errors import ConfigError, DataError, NumericalError
from .forecast import (
    bma_one_step_moments,
    mean_path,
    path_quantiles,
    returns_moments,
    simulate_paths,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

QUANTILES = (0.05, 0.5, 0.95)
RULE_NAMES = ("target", "constrained", "neutral")


# -- shared plumbing ---------------------------------------------------------


def _read_config(args) -> EngineConfig:
    text = ""
    if getattr(args, "config", None):
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}")
    cfg = data.parse_config(text)
    if getattr(args, "alpha_grid", None):
        cfg = dataclasses.replace(
            cfg, alpha_grid=data._parse_grid("alpha_grid", args.alpha_grid)
        )
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    data._validate_config(cfg)
    return cfg


def _load_panel(args, cfg):
    """Load, optionally forward-fill, and order the panel.

    Returns (prices frame, model column names, log-price matrix). The
    benchmark column, when present, is modeled as the last series; a CTA
    column is carried in the frame for reporting but never modeled.
    """
    if not getattr(args, "data", None):
        raise ConfigError("--data is required for this command")
    try:
        frame = data.load_prices(args.data)
    except OSError as exc:
        raise DataError(f"cannot read data file: {exc}")
    if getattr(args, "ffill", False):
        frame = data.forward_fill(frame)
    names, P = data.model_matrix(frame, order=cfg.series or None)
    return frame, names, np.log(P)


def _resolved_config_text(cfg, names) -> str:
    assets = tuple(n for n in names if n != BENCH_NAME)
    return data.serialize_config(dataclasses.replace(cfg, series=assets))


def _make_manifest(command: str, cfg, names, data_path) -> artifacts.RunManifest:
    return artifacts.RunManifest(
        command=command,
        config_text=_resolved_config_text(cfg, names),
        input_digest=artifacts.input_digest(data_path),
        seed=cfg.seed,
        version=__version__,
    )


def _out_dir(args) -> Path:
    out = Path(getattr(args, "out", ".") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _finish(out: Path, man: artifacts.RunManifest, timings: dict) -> None:
    artifacts.write_manifest(man, out / "manifest.json")
    volatile = dataclasses.replace(man, timings=dict(timings))
    artifacts.write_manifest(volatile, out / "timings.json")


def _build_engine(cfg, names, Y_train) -> Engine:
    if Y_train.shape[0] <= cfg.max_lag:
        raise DataError(
            f"training range has {Y_train.shape[0]} rows; warm-up needs more than "
            f"the maximum lag {cfg.max_lag}"
        )
    space = models.enumerate_models(
        len(names),
        cfg.max_lag,
        cfg.discount_pairs(),
        max_parents=None if cfg.max_parents < 0 else cfg.max_parents,
    )
    s0 = initial_scales(Y_train)
    return Engine(
        space, len(names), cfg.max_lag, cfg.alpha_grid, cfg.rho, s0, n0=cfg.n0, c0=cfg.c0
    )


def _train(engine: Engine, Y, th: float, record=None) -> None:
    """Sequential pass: observe, prune, then optionally record the step."""
    for t in range(Y.shape[0]):
        updated = engine.observe(Y[t])
        if updated and th > 0.0:
            engine.prune(th)
        if updated and record is not None:
            record(t)
    if engine.n_updates == 0:
        raise DataError("training range empty after warm-up")


def _map_alpha(engine: Engine) -> float:
    post = engine.alpha_posterior()
    return max(engine.alphas, key=lambda a: post[a])


def _train_rows(frame, cfg) -> int:
    """Number of leading rows in the training range (all rows if no split)."""
    if not cfg.split_date:
        return len(frame.dates)
    train, _ = data.split_frame(frame, cfg.split_date)
    return len(train.dates)


def _mc_seed(base_seed: int, tag: int) -> int:
    return int(np.random.SeedSequence((base_seed, tag)).generate_state(1)[0])


# -- enumerate ----------------------------------------------------------------


def _series_model_count(n_cands: int, cap, d: int, k: int) -> int:
    if cap is None or cap >= n_cands:
        sets = 2**n_cands
    else:
        sets = sum(math.comb(n_cands, c) for c in range(cap + 1))
    return sets * (d + 1) * k


def _memory_estimate_bytes(m, d, k, cap, n_alpha) -> int:
    """Rough filter footprint: per-model state matrices plus one probability
    table per replica."""
    total = 0
    n_models = 0
    for j in range(m):
        n_cands = m - 1 - j
        top = n_cands if cap is None else min(cap, n_cands)
        for c in range(top + 1):
            sets = math.comb(n_cands, c)
            for lag in range(d + 1):
                p = 1 + lag + c
                total += sets * k * (p * p + p + 2) * 8
                n_models += sets * k
    total += n_alpha * n_models * 8 * 2
    return total


def cmd_enumerate(args) -> int:
    cfg = _read_config(args)
    if getattr(args, "num_series", None):
        m = args.num_series
        names = None
    elif getattr(args, "data", None):
        _, names, _ = _load_panel(args, cfg)
        m = len(names)
    elif cfg.series:
        names = cfg.series
        m = len(names)
    else:
        raise ConfigError("need --num-series, --data, or a series list in the config")
    if m < 1:
        raise ConfigError(f"need at least one series, got {m}")
    d = cfg.max_lag
    k = len(cfg.discount_pairs())
    cap = None if cfg.max_parents < 0 else cfg.max_parents

    counts = [_series_model_count(m - 1 - j, cap, d, k) for j in range(m)]
    total = sum(counts)
    joint = 1
    for c in counts:
        joint *= c
    print(f"model space for m={m} series, max lag d={d}, k={k} discount pairs")
    for j, c in enumerate(counts):
        label = names[j] if names else f"series {j}"
        print(f"  {label}: {c} models")
    if cap is None:
        print(f"total models: (2^{m} - 1) * ({d} + 1) * {k} = {total}")
    else:
        print(f"total models (parents capped at {cap}): {total}")
    print(f"joint combinations across series: {joint} (~{float(joint):.4e})")
    mem = _memory_estimate_bytes(m, d, k, cap, len(cfg.alpha_grid))
    print(f"estimated filter memory: ~{mem / 2**20:.1f} MiB")
    if total > models.DEFAULT_MAX_MODELS:
        raise models.CapacityError(
            f"model space has {total} members (> {models.DEFAULT_MAX_MODELS}); restrict "
            "parents (max_parents) or shrink the lag or discount grids"
        )
    return EXIT_OK


# -- fit -----------------------------------------------------------------------


def _record_step(engine, cfg, names, date_iso, rows):
    """Append one date's trajectory records (called after the update)."""
    post = engine.alpha_posterior()
    for a in engine.alphas:
        rows["alpha"].append([date_iso, a, post[a], engine.cum_loglik[a]])
    a_map = _map_alpha(engine)
    for a in engine.alphas:
        for j, name in enumerate(names):
            summ = engine.summary(a, j)
            rows["marginal"].append(
                [
                    date_iso,
                    a,
                    name,
                    summ["e_lag"],
                    summ["e_delta"],
                    summ["e_beta"],
                    summ["top_prob"],
                    summ["entropy"],
                    summ["n_models"],
                ]
            )
            for p in sorted(summ["inclusion"]):
                rows["inclusion"].append([date_iso, a, name, names[p], summ["inclusion"][p]])
    for j, name in enumerate(names):
        table = engine.table(a_map, j)
        probs = table.probs
        order = np.argsort(-probs, kind="stable")[: cfg.trajectory_max_models]
        for rank, i in enumerate(order):
            sp = table.specs[int(i)]
            parents = "|".join(names[p] for p in sp.parents)
            rows["model"].append(
                [date_iso, a_map, name, rank, float(probs[i]), sp.lag, sp.delta, sp.beta, parents]
            )


def _write_fit_artifacts(out, digest, engine, names, rows):
    artifacts.write_table(
        out / "alpha_trajectory.csv",
        digest,
        ["date", "alpha", "posterior", "cum_loglik"],
        rows["alpha"],
    )
    artifacts.write_table(
        out / "marginal_trajectory.csv",
        digest,
        ["date", "alpha", "series", "e_lag", "e_delta", "e_beta", "top_prob", "entropy", "n_models"],
        rows["marginal"],
    )
    artifacts.write_table(
        out / "inclusion_trajectory.csv",
        digest,
        ["date", "alpha", "series", "parent", "prob"],
        rows["inclusion"],
    )
    artifacts.write_table(
        out / "model_trajectory.csv",
        digest,
        ["date", "alpha", "series", "rank", "prob", "lag", "delta", "beta", "parents"],
        rows["model"],
    )

    final_rows = {"lag": [], "discount": []}
    for a in engine.alphas:
        for j, name in enumerate(names):
            table = engine.table(a, j)
            for lag, prob in sorted(models.marginal_posterior(table, "lag").items()):
                final_rows["lag"].append([a, name, lag, prob])
            for param in ("delta", "beta"):
                for v, prob in sorted(models.marginal_posterior(table, param).items()):
                    final_rows["discount"].append([a, name, param, v, prob])
    artifacts.write_table(
        out / "lag_posterior.csv", digest, ["alpha", "series", "lag", "prob"], final_rows["lag"]
    )
    artifacts.write_table(
        out / "discount_posterior.csv",
        digest,
        ["alpha", "series", "parameter", "value", "prob"],
        final_rows["discount"],
    )
    post = engine.alpha_posterior()
    artifacts.write_table(
        out / "alpha_posterior.csv",
        digest,
        ["alpha", "posterior", "cum_loglik"],
        [[a, post[a], engine.cum_loglik[a]] for a in engine.alphas],
    )


def _write_omega(out, digest, engine, names):
    a_map = _map_alpha(engine)
    mom = bma_one_step_moments(engine.forecast_inputs(a_map), engine.history_tail())
    rows = []
    for i, ni in enumerate(names):
        for j, nj in enumerate(names):
            rows.append([ni, nj, float(mom.Q[i, j]), float(mom.K[i, j])])
    artifacts.write_table(
        out / "omega_estimate.csv", digest, ["row", "col", "covariance", "precision"], rows
    )


def cmd_fit(args) -> int:
    t0 = time.monotonic()
    cfg = _read_config(args)
    frame, names, Y = _load_panel(args, cfg)
    n_train = _train_rows(frame, cfg)
    out = _out_dir(args)
    man = _make_manifest(f"fit ffill={int(args.ffill)}", cfg, names, args.data)
    digest = artifacts.manifest_digest(man)

    engine = _build_engine(cfg, names, Y[:n_train])
    rows = {"alpha": [], "marginal": [], "inclusion": [], "model": []}
    dates = frame.dates

    def record(t):
        _record_step(engine, cfg, names, dates[t].isoformat(), rows)

    _train(engine, Y[:n_train], cfg.prune_threshold, record=record)
    _write_fit_artifacts(out, digest, engine, names, rows)
    _write_omega(out, digest, engine, names)
    engine.save(out / "snapshot.pkl")
    _finish(out, man, {"fit_seconds": time.monotonic() - t0})

    post = engine.alpha_posterior()
    a_map = _map_alpha(engine)
    n_models = sum(b.n_models for b in engine.banks)
    print(
        f"fit: {engine.n_updates} updates over {len(names)} series; "
        f"{n_models} models after pruning; top alpha {a_map} (p={post[a_map]:.3f})"
    )
    print(f"artifacts in {out}")
    return EXIT_OK


# -- backtest -------------------------------------------------------------------


def _load_or_fit_state(args, cfg, Y, n_train) -> Engine:
    state_path = getattr(args, "state", None)
    if state_path:
        try:
            engine = Engine.load(state_path)
        except OSError as exc:
            raise ConfigError(f"cannot read state snapshot: {exc}")
        if engine.t != n_train:
            raise ConfigError(
                f"state snapshot saw {engine.t} rows but the training range has {n_train}"
            )
        return engine
    engine = _build_engine(cfg, args._names, Y[:n_train])
    _train(engine, Y[:n_train], cfg.prune_threshold)
    return engine


def _resolve_rules(args, names):
    if args.rule == "all":
        rules = list(RULE_NAMES)
        if BENCH_NAME not in names:
            print("note: no BENCH column; skipping the benchmark-neutral rule", file=sys.stderr)
            rules.remove("neutral")
        return rules
    if args.rule == "neutral" and BENCH_NAME not in names:
        raise ConfigError("the benchmark-neutral rule needs a BENCH column in the data")
    return [args.rule]


def _solve_rule(rule, rm, tradable, bench_idx, target):
    f_tr = rm.f[tradable]
    Q_tr = rm.Q[np.ix_(tradable, tradable)]
    if rule == "target":
        w = pf.target_portfolio(f_tr, Q_tr, target).w
    elif rule == "constrained":
        w = pf.constrained_target_portfolio(f_tr, Q_tr, target).w
    else:
        w = pf.benchmark_neutral_portfolio(
            f_tr,
            Q_tr,
            spread=target,
            bench_mean=float(rm.f[bench_idx]),
            bench_cov=rm.Q[tradable, bench_idx],
        ).w
    return w, f_tr, Q_tr


def cmd_backtest(args) -> int:
    t0 = time.monotonic()
    cfg = _read_config(args)
    if not cfg.split_date:
        raise ConfigError("backtest needs split_date in the config")
    frame, names, Y = _load_panel(args, cfg)
    n_train = _train_rows(frame, cfg)
    n_test = len(frame.dates) - n_train
    k = args.horizon
    if k < 1:
        raise ConfigError(f"--horizon must be >= 1, got {k}")
    rules = _resolve_rules(args, names)
    out = _out_dir(args)
    man = _make_manifest(
        f"backtest horizon={k} rule={args.rule} ffill={int(args.ffill)}",
        cfg,
        names,
        args.data,
    )
    digest = artifacts.manifest_digest(man)

    args._names = names
    engine = _load_or_fit_state(args, cfg, Y, n_train)
    fit_done = time.monotonic()

    m = len(names)
    alphas = engine.alphas
    tradable = [i for i, n in enumerate(names) if n != BENCH_NAME]
    bench_idx = names.index(BENCH_NAME) if BENCH_NAME in names else -1
    target = cfg.target_daily if k == 1 else cfg.target_period

    # point forecasts per (test date, alpha, horizon); scored after the loop
    points = np.full((n_test, len(alphas), k, m), np.nan)
    scales = np.full((n_test, len(alphas), m), np.nan)
    stderr_rows = []
    port_rows = {r: [] for r in rules}
    rrs = {r: [] for r in rules}
    crs = {r: 1.0 for r in rules}
    cta_rows = []
    cta_cr = 1.0
    cta = frame.column("CTA") if frame.has_cta else None

    for i in range(n_test):
        t = n_train + i
        date_iso = frame.dates[t].isoformat()
        tail = engine.history_tail()
        inputs = {a: engine.forecast_inputs(a) for a in alphas}
        for ia, a in enumerate(alphas):
            mom = bma_one_step_moments(inputs[a], tail)
            points[i, ia, 0] = mom.f
            scales[i, ia] = np.diag(mom.Q)
            if k > 1:
                points[i, ia, 1:] = mean_path(inputs[a], tail, k)[1:]
            z = (Y[t] - mom.f) / np.sqrt(np.diag(mom.Q))
            for j, name in enumerate(names):
                stderr_rows.append([date_iso, a, name, float(z[j])])

        if i % k == 0 and i + k - 1 < n_test:
            a_star = _map_alpha(engine)
            tensor = simulate_paths(
                inputs[a_star], tail, k, cfg.nmc, _mc_seed(cfg.seed, i), workers=args.workers
            )
            rm = returns_moments(tensor, Y[t - 1], k)
            realized = np.exp(Y[t + k - 1] - Y[t - 1]) - 1.0
            for rule in rules:
                try:
                    w, f_tr, Q_tr = _solve_rule(rule, rm, tradable, bench_idx, target)
                    ev = pf.evaluate_period(w, realized[tradable], f_tr, Q_tr)
                    status = "ok"
                except NumericalError:
                    ev = {"rr": 0.0, "pr": float("nan"), "psr": float("nan")}
                    status = "failed"
                rrs[rule].append(ev["rr"])
                crs[rule] *= 1.0 + ev["rr"]
                sr = pf.summarize_returns(np.array(rrs[rule]), k)["sharpe"]
                port_rows[rule].append(
                    [date_iso, a_star, ev["rr"], crs[rule], ev["pr"], sr, ev["psr"], status]
                )
            if cta is not None:
                cta_rr = float(cta[t + k - 1] / cta[t - 1] - 1.0)
                cta_cr *= 1.0 + cta_rr
                cta_rows.append([date_iso, float(cta[t + k - 1]), cta_rr, cta_cr])

        engine.observe(Y[t])
        if cfg.prune_threshold > 0.0:
            engine.prune(cfg.prune_threshold)

    # forecast accuracy per (alpha, horizon), pooled over dates and series
    acc_rows = []
    for ia, a in enumerate(alphas):
        for h in range(1, k + 1):
            errs = []
            for i in range(n_test):
                t = n_train + i
                if i + h - 1 < n_test:
                    errs.append(Y[t + h - 1] - points[i, ia, h - 1])
            if errs:
                E = np.asarray(errs)
                acc_rows.append(
                    [a, h, float(np.sqrt(np.mean(E**2))), float(np.mean(np.abs(E))), E.shape[0]]
                )

    artifacts.write_table(
        out / "forecast_accuracy.csv",
        digest,
        ["alpha", "horizon", "rmse", "mad", "n_dates"],
        acc_rows,
    )
    artifacts.write_table(
        out / "standardized_errors.csv",
        digest,
        ["date", "alpha", "series", "z"],
        stderr_rows,
    )
    summary_rows = []
    for rule in rules:
        artifacts.write_table(
            out / f"portfolio_{rule}.csv",
            digest,
            ["date", "alpha", "rr", "cr", "pr", "sr", "psr", "status"],
            port_rows[rule],
        )
        summ = pf.summarize_returns(np.array(rrs[rule]), k)
        summary_rows.append(
            [rule, len(rrs[rule]), summ["mrr"], summ["risk"], summ["sharpe"], summ["cr"]]
        )
        print(
            f"{rule}: periods={len(rrs[rule])} mrr={summ['mrr']:.6f} "
            f"risk={summ['risk']:.6f} sharpe={summ['sharpe']:.3f} cr={summ['cr']:.4f}"
        )
    artifacts.write_table(
        out / "portfolio_summary.csv",
        digest,
        ["rule", "n_periods", "mrr", "risk", "sharpe", "cr"],
        summary_rows,
    )
    if cta is not None:
        artifacts.write_table(
            out / "cta_reference.csv",
            digest,
            ["date", "price", "rr", "cr"],
            cta_rows,
        )
    engine.save(out / "snapshot.pkl")
    _finish(
        out,
        man,
        {
            "fit_seconds": fit_done - t0,
            "backtest_seconds": time.monotonic() - fit_done,
            "total_seconds": time.monotonic() - t0,
        },
    )
    print(f"backtest: {n_test} test dates, horizon {k}; artifacts in {out}")
    return EXIT_OK


# -- forecast -------------------------------------------------------------------


def cmd_forecast(args) -> int:
    t0 = time.monotonic()
    cfg = _read_config(args)
    frame, names, Y = _load_panel(args, cfg)
    n_train = _train_rows(frame, cfg)
    k = args.horizon
    if k < 1:
        raise ConfigError(f"--horizon must be >= 1, got {k}")
    out = _out_dir(args)
    man = _make_manifest(
        f"forecast horizon={k} ffill={int(args.ffill)}", cfg, names, args.data
    )
    digest = artifacts.manifest_digest(man)

    args._names = names
    engine = _load_or_fit_state(args, cfg, Y, n_train)
    a_star = _map_alpha(engine)
    inputs = engine.forecast_inputs(a_star)
    tail = engine.history_tail()

    mom = bma_one_step_moments(inputs, tail)
    tensor = simulate_paths(
        inputs, tail, k, cfg.nmc, _mc_seed(cfg.seed, 0), workers=args.workers
    )
    mc_mean = tensor.samples.mean(axis=0)
    mc_var = tensor.samples.var(axis=0, ddof=1)
    qs = path_quantiles(tensor, QUANTILES)

    # one-step self-check: analytic moments against the sampler, with the
    # tolerance recorded so the agreement is auditable from the artifact
    d1 = tensor.samples[:, 0, :] - mc_mean[0]
    se_mean = tensor.samples[:, 0, :].std(axis=0, ddof=1) / np.sqrt(cfg.nmc)
    se_var = np.sqrt(np.maximum((d1**4).mean(axis=0) - mc_var[0] ** 2, 0.0) / cfg.nmc)
    rows = []
    agree = True
    for j, name in enumerate(names):
        f_tol = 4.0 * float(se_mean[j])
        q_tol = 4.0 * float(se_var[j])
        ok = abs(mom.f[j] - mc_mean[0, j]) <= f_tol and abs(mom.Q[j, j] - mc_var[0, j]) <= q_tol
        agree = agree and ok
        rows.append(
            [
                name,
                float(mom.f[j]),
                float(mom.Q[j, j]),
                float(mc_mean[0, j]),
                f_tol,
                float(mc_var[0, j]),
                q_tol,
                int(ok),
            ]
        )
    artifacts.write_table(
        out / "forecast_analytic.csv",
        digest,
        ["series", "f", "q", "mc_f", "f_tol", "mc_q", "q_tol", "within_tol"],
        rows,
    )
    cov_rows = []
    for i, ni in enumerate(names):
        for j, nj in enumerate(names):
            cov_rows.append([ni, nj, float(mom.Q[i, j]), float(mom.K[i, j])])
    artifacts.write_table(
        out / "forecast_cov.csv", digest, ["row", "col", "covariance", "precision"], cov_rows
    )
    mc_rows = []
    for h in range(k):
        for j, name in enumerate(names):
            mc_rows.append(
                [
                    h + 1,
                    name,
                    float(mc_mean[h, j]),
                    float(mc_var[h, j]),
                    float(qs[0, h, j]),
                    float(qs[1, h, j]),
                    float(qs[2, h, j]),
                ]
            )
    artifacts.write_table(
        out / "forecast_mc.csv",
        digest,
        ["horizon", "series", "mean", "variance", "q05", "q50", "q95"],
        mc_rows,
    )
    if getattr(args, "paths", None):
        np.savez_compressed(args.paths, samples=tensor.samples, seed=tensor.seed)
    _finish(out, man, {"total_seconds": time.monotonic() - t0})
    origin = frame.dates[n_train - 1].isoformat()
    print(
        f"forecast from {origin} under alpha {a_star}, horizons 1..{k}; "
        f"one-step analytic/MC agreement: {'OK' if agree else 'OUTSIDE TOLERANCE'}"
    )
    print(f"artifacts in {out}")
    return EXIT_OK


# -- argument parsing ------------------------------------------------------------


def _add_common(p, with_horizon=False, with_state=False):
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--data", help="CSV price table")
    p.add_argument("--out", default=".", help="artifact directory")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--ffill", action="store_true", help="fill gaps of up to 3 business days")
    p.add_argument("--workers", type=int, default=1, help="threads for path simulation")
    p.add_argument("--alpha-grid", dest="alpha_grid", help="override the alpha grid")
    if with_horizon:
        p.add_argument("--horizon", type=int, default=1, help="forecast horizon in days")
    if with_state:
        p.add_argument("--state", help="fitted snapshot from a previous fit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ddnm",
        description="Sequential forecasting and portfolio backtesting over "
        "dependence-network time-series models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="report model-space size and memory")
    _add_common(p)
    p.add_argument("--num-series", type=int, help="count series without a data file")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("fit", help="train over the training range, write trajectories")
    _add_common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("backtest", help="sequential test-range evaluation")
    _add_common(p, with_horizon=True, with_state=True)
    p.add_argument(
        "--rule",
        choices=("target", "constrained", "neutral", "all"),
        default="all",
        help="portfolio rule(s) to evaluate",
    )
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("forecast", help="forecast from the end of the training range")
    _add_common(p, with_horizon=True, with_state=True)
    p.add_argument("--paths", help="also dump the simulated path tensor (.npz)")
    p.set_defaults(func=cmd_forecast)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
