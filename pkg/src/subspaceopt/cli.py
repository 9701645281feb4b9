"""Command-line driver: generate instances, solve them with any of the four
methods, emit diagnostics, benchmark factorization times, and sweep
parameter grids into aggregate tables.

All outputs are CSV or flat key-value text.  Exit codes: 0 success,
1 numerical failure (artifacts still saved), 2 usage or config error.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from pathlib import Path

import numpy as np

from .certificates import (
    AlignmentError,
    NoCertificateError,
    build_dual_certificate,
    eigen_gap,
    kkt_residual,
    quadratic_growth_probe,
)
from .datagen import (
    Instance,
    ModelConfig,
    generate_instance,
    pca_projection,
    random_fantope,
    random_projection,
    recovery_error,
)
from .fantope import ProjectionMatrix, pnk_project
from .objectives import (
    CorruptedHuberLoss,
    HuberParams,
    QuadraticLoss,
    SpikedHuberLoss,
)
from .solvers import (
    TERM_DEGENERATE,
    StepPolicy,
    StopRule,
    solve_frank_wolfe,
    solve_goi,
    solve_pgd_convex,
    solve_pgd_nonconvex,
)

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_USAGE = 2

SOLVERS = ("goi", "pgd", "pgd-convex", "fw")
INITS = ("pca", "random-projection", "random-fantope")
DEFAULT_SHRINK = {"spiked": 0.9, "corrupted": 0.8}


class ConfigError(Exception):
    """Invalid configuration or arguments; maps to exit code 2."""


# ---------------------------------------------------------------------------
# config helpers

def _read_ini(path) -> configparser.ConfigParser:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    cfg = configparser.ConfigParser()
    cfg.read(p)
    return cfg

def _parse_seeds(raw: str) -> list[int]:
    parts = raw.replace(",", " ").split()
    if not parts:
        raise ConfigError("seeds must be a nonempty list of integers")
    try:
        return [int(s) for s in parts]
    except ValueError as exc:
        raise ConfigError(f"invalid seed list {raw!r}") from exc

def _model_config(cfg: configparser.ConfigParser, seed: int,
                  overrides: dict | None = None) -> ModelConfig:
    if not cfg.has_section("model"):
        raise ConfigError("config needs a [model] section")
    sec = dict(cfg["model"])
    if overrides:
        sec.update({k: str(v) for k, v in overrides.items()})
    try:
        model = sec["model"]
        n = int(sec["n"])
        k = int(sec["k"])
        m = int(sec["m"])
        p = float(sec["p"])
    except KeyError as exc:
        raise ConfigError(f"[model] section is missing field {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"[model] section has a malformed field: {exc}") from exc
    try:
        return ModelConfig(n=n, k=k, m=m, p=p, model=model, seed=seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

def _huber_params(model: str, gamma, shrink) -> HuberParams:
    if shrink is None:
        shrink = DEFAULT_SHRINK[model]
    try:
        return HuberParams(gamma=gamma, shrink=shrink)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

def _build_objective(instance: Instance, name: str, gamma, shrink):
    if name == "quadratic":
        pts = instance.data.points
        M = (pts.T @ pts) / instance.config.m
        return QuadraticLoss(M)
    params = _huber_params(instance.config.model, gamma, shrink)
    if instance.config.model == "spiked":
        return SpikedHuberLoss(instance.data, params)
    return CorruptedHuberLoss(instance.data, params)

def _write_kv(path, mapping: dict):
    lines = "".join(f"{key}={value}\n" for key, value in mapping.items())
    Path(path).write_text(lines)

def _format_kv(mapping: dict) -> str:
    return "\n".join(f"{key}={value}" for key, value in mapping.items())


# ---------------------------------------------------------------------------
# generate

def cmd_generate(args) -> int:
    cfg = _read_ini(args.config)
    if not cfg.has_section("run"):
        raise ConfigError("config needs a [run] section with seeds")
    seeds = _parse_seeds(cfg["run"].get("seeds", ""))
    out = Path(args.out or cfg["run"].get("out", "runs"))
    out.mkdir(parents=True, exist_ok=True)
    for seed in sorted(seeds):
        config = _model_config(cfg, seed)
        instance = generate_instance(config)
        instance.save(out / f"seed{seed:04d}")
    print(f"generated {len(seeds)} instance(s) under {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# solve

def _load_point(path, n: int) -> np.ndarray:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"init file not found: {p}")
    M = np.loadtxt(p, delimiter=",", ndmin=2)
    if M.shape == (n, n):
        return M
    if M.shape[0] == n and M.shape[1] < n:
        return M @ M.T  # stored as a frame
    raise ConfigError(f"init file {p} has shape {M.shape}, expected ({n}, {n}) "
                      f"or ({n}, k)")

def _initial_point(init: str, instance: Instance, k: int, seed: int):
    n = instance.config.n
    if init == "pca":
        return pca_projection(instance.data, k)
    if init == "random-projection":
        return random_projection(n, k, np.random.default_rng(seed))
    if init == "random-fantope":
        return random_fantope(n, k, np.random.default_rng(seed))
    if init.startswith("file:"):
        return _load_point(init[5:], n)
    raise ConfigError(f"unknown init {init!r}; use one of {INITS} or file:PATH")

def _to_frame(point, k: int) -> np.ndarray:
    if isinstance(point, ProjectionMatrix):
        return point.frame
    return pnk_project(point, k).frame

def cmd_solve(args) -> int:
    instance = Instance.load(_instance_dir(args.instance))
    k = instance.config.k
    objective = _build_objective(instance, args.objective, args.gamma, args.shrink)
    default_policy = "inverse-beta" if args.objective == "quadratic" \
        else "empirical-lambda"
    policy_kind = args.policy or default_policy
    if policy_kind == "fixed":
        if args.eta is None:
            raise ConfigError("--policy fixed requires --eta")
        policy = StepPolicy("fixed", args.eta)
    else:
        policy = StepPolicy(policy_kind)
    stop = StopRule(gap_tol=args.tol, max_iters=args.max_iters,
                    gap_every=args.gap_every)
    start = _initial_point(args.init, instance, k, args.seed)
    x_ref = _load_point(args.ref, instance.config.n) if args.ref else None

    if args.solver == "goi":
        point, trace = solve_goi(objective, k, _to_frame(start, k), policy,
                                 stop, x_ref=x_ref)
    elif args.solver == "pgd":
        init = start if isinstance(start, ProjectionMatrix) \
            else pnk_project(start, k)
        point, trace = solve_pgd_nonconvex(objective, k, init, policy, stop,
                                           x_ref=x_ref)
    elif args.solver == "pgd-convex":
        init = start.matrix if isinstance(start, ProjectionMatrix) else start
        point, trace = solve_pgd_convex(objective, k, init, policy,
                                        budget=args.budget, stop=stop,
                                        x_ref=x_ref)
    else:  # fw
        linesearch = StepPolicy("fw-exact-linesearch"
                                if args.fw_linesearch == "exact"
                                else "fw-quadratic-surrogate")
        init = start.matrix if isinstance(start, ProjectionMatrix) else start
        point, trace = solve_frank_wolfe(objective, k, init, linesearch, stop,
                                         x_ref=x_ref)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    X = point.matrix if isinstance(point, ProjectionMatrix) else point
    np.savetxt(out / "solution.csv", X, fmt="%.17g", delimiter=",")
    trace.to_csv(out / "trace.csv")
    _write_kv(out / "result.txt", {
        "solver": args.solver,
        "objective": args.objective,
        "init": args.init,
        "policy": policy.kind,
        "termination": trace.termination,
        "iterations": len(trace) - 1,
        "f_final": f"{trace.final_f:.17g}",
        "gap_final": f"{trace.final_gap:.17g}",
    })
    print(f"{args.solver}: {trace.termination} after {len(trace) - 1} "
          f"iteration(s), f={trace.final_f:.6g}, gap={trace.final_gap:.3g}; "
          f"artifacts in {out}")
    if trace.termination == TERM_DEGENERATE:
        return EXIT_NUMERICAL
    return EXIT_OK


# ---------------------------------------------------------------------------
# diagnose

def cmd_diagnose(args) -> int:
    instance = Instance.load(_instance_dir(args.instance))
    k = instance.config.k
    sol = Path(args.solution)
    if not sol.exists():
        raise ConfigError(f"solution file not found: {sol}")
    X = np.loadtxt(sol, delimiter=",", ndmin=2)
    objective = _build_objective(instance, args.objective, args.gamma, args.shrink)

    from .solvers import duality_gap

    report: dict = {f: getattr(instance.config, f)
                    for f in ("model", "n", "k", "m", "p", "seed")}
    gap_report = eigen_gap(X, objective, k)
    report["eigen_gap"] = f"{gap_report.gap:.17g}"
    report["r_star"] = gap_report.r_star
    report["duality_gap"] = f"{duality_gap(X, objective, k):.17g}"
    report["recovery_error"] = f"{recovery_error(X, instance.truth):.17g}"
    x_pca = pca_projection(instance.data, k)
    report["pca_recovery_error"] = f"{recovery_error(x_pca, instance.truth):.17g}"
    try:
        cert = build_dual_certificate(X, objective)
        report["kkt_residual"] = f"{kkt_residual(X, cert, objective, k):.17g}"
    except (NoCertificateError, AlignmentError) as exc:
        report["kkt_residual"] = f"unavailable ({exc})"
    if gap_report.gap > 0:
        growth = quadratic_growth_probe(X, objective, k, gap_report.gap,
                                        samples=args.growth_samples)
        report["growth_worst_slack"] = f"{growth.worst_slack:.17g}"
        report["growth_violations"] = growth.violations
    text = _format_kv(report)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench

def run_bench(objective, k: int, init_frame, iters: int, repeats: int):
    """Run the QR-based and eigendecomposition-based methods for a fixed
    number of iterations and collect per-iteration factorization times.

    Returns (rows, summary): rows are (repeat, solver, iter, fact_time_ns)
    tuples, and the summary maps solver name to per-repeat mean times plus
    the overall eig/qr mean ratio.
    """
    policy = StepPolicy("empirical-lambda") if getattr(objective, "data", None) \
        is not None else StepPolicy("inverse-beta")
    stop = StopRule(gap_tol=0.0, max_iters=iters, gap_every=0)
    rows = []
    rep_means: dict[str, list[float]] = {"goi": [], "pgd": []}
    for rep in range(repeats):
        _, trace_goi = solve_goi(objective, k, init_frame, policy, stop)
        _, trace_pgd = solve_pgd_nonconvex(objective, k,
                                           ProjectionMatrix(init_frame),
                                           policy, stop)
        for name, trace in (("goi", trace_goi), ("pgd", trace_pgd)):
            times = trace.fact_time_ns[1:]  # row 0 logs the initial point
            rep_means[name].append(float(np.mean(times)))
            rows.extend((rep, name, it, ns)
                        for it, ns in zip(trace.iters[1:], times))
    mean_qr = float(np.mean(rep_means["goi"]))
    mean_eig = float(np.mean(rep_means["pgd"]))
    summary = {
        "mean_qr_ns": mean_qr,
        "mean_eig_ns": mean_eig,
        "eig_over_qr_ratio": mean_eig / mean_qr,
        "qr_rep_means_ns": rep_means["goi"],
        "eig_rep_means_ns": rep_means["pgd"],
        "qr_rep_variance": float(np.var(rep_means["goi"])),
        "eig_rep_variance": float(np.var(rep_means["pgd"])),
    }
    return rows, summary

def cmd_bench(args) -> int:
    instance = Instance.load(_instance_dir(args.instance))
    k = instance.config.k
    objective = _build_objective(instance, args.objective, args.gamma, args.shrink)
    init = pca_projection(instance.data, k)
    rows, summary = run_bench(objective, k, init.frame, args.iters, args.repeats)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "timing.csv", "w") as fh:
        fh.write("repeat,solver,iter,fact_time_ns\n")
        for rep, name, it, ns in rows:
            fh.write(f"{rep},{name},{it},{ns}\n")
    _write_kv(out / "summary.txt", summary)
    print(_format_kv(summary))
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep

def _sweep_values(raw: str, parameter: str) -> list:
    parts = raw.replace(",", " ").split()
    if not parts:
        raise ConfigError("[sweep] values must be nonempty")
    return [float(v) if parameter == "p" else int(v) for v in parts]

def run_sweep_cell(cfg, parameter: str, value, seed: int, gamma: float,
                   shrink, tol: float, max_iters: int):
    """Generate, solve (projected gradient from the PCA warm start), and
    diagnose one (value, seed) cell; returns the diagnostics row."""
    config = _model_config(cfg, seed, overrides={parameter: value})
    instance = generate_instance(config)
    objective = _build_objective(instance, "huber", gamma, shrink)
    k = config.k
    init = pca_projection(instance.data, k)
    point, trace = solve_pgd_nonconvex(
        objective, k, init, StepPolicy("empirical-lambda"),
        StopRule(gap_tol=tol, max_iters=max_iters),
    )
    gap_report = eigen_gap(point.matrix, objective, k)
    return {
        "value": value,
        "seed": seed,
        "eigen_gap": gap_report.gap,
        "recovery_error": recovery_error(point.matrix, instance.truth),
        "pca_recovery_error": recovery_error(init, instance.truth),
        "termination": trace.termination,
    }

def cmd_sweep(args) -> int:
    cfg = _read_ini(args.config)
    if not cfg.has_section("sweep"):
        raise ConfigError("config needs a [sweep] section")
    parameter = cfg["sweep"].get("parameter", "").strip()
    if parameter not in ("p", "n"):
        raise ConfigError(f"[sweep] parameter must be 'p' or 'n', got {parameter!r}")
    values = _sweep_values(cfg["sweep"].get("values", ""), parameter)
    if not cfg.has_section("run"):
        raise ConfigError("config needs a [run] section with seeds")
    seeds = sorted(_parse_seeds(cfg["run"].get("seeds", "")))
    gamma = cfg.getfloat("objective", "gamma", fallback=0.1)
    shrink = cfg.getfloat("objective", "shrink", fallback=None)
    tol = cfg.getfloat("solver", "tol", fallback=1e-10)
    max_iters = cfg.getint("solver", "max_iters", fallback=20_000)

    out = Path(args.out or cfg["run"].get("out", "runs/sweep"))
    out.mkdir(parents=True, exist_ok=True)
    detail_rows = []
    aggregate_rows = []
    for value in values:
        cells = [run_sweep_cell(cfg, parameter, value, seed, gamma, shrink,
                                tol, max_iters) for seed in seeds]
        detail_rows.extend(cells)
        aggregate_rows.append({
            "value": value,
            "eigen_gap_mean": np.mean([c["eigen_gap"] for c in cells]),
            "recovery_error_mean": np.mean([c["recovery_error"] for c in cells]),
            "pca_recovery_error_mean": np.mean(
                [c["pca_recovery_error"] for c in cells]),
            "seeds": len(seeds),
        })
    with open(out / "detail.csv", "w") as fh:
        fh.write(f"{parameter},seed,eigen_gap,recovery_error,"
                 f"pca_recovery_error,termination\n")
        for c in detail_rows:
            fh.write(f"{c['value']},{c['seed']},{c['eigen_gap']:.17g},"
                     f"{c['recovery_error']:.17g},"
                     f"{c['pca_recovery_error']:.17g},{c['termination']}\n")
    with open(out / "aggregate.csv", "w") as fh:
        fh.write(f"{parameter},eigen_gap_mean,recovery_error_mean,"
                 f"pca_recovery_error_mean,seeds\n")
        for row in aggregate_rows:
            fh.write(f"{row['value']},{row['eigen_gap_mean']:.17g},"
                     f"{row['recovery_error_mean']:.17g},"
                     f"{row['pca_recovery_error_mean']:.17g},{row['seeds']}\n")
    print(f"sweep over {parameter} in {values} with {len(seeds)} seed(s); "
          f"tables in {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point

def _instance_dir(path) -> Path:
    p = Path(path)
    if not (p / "config.txt").exists():
        raise ConfigError(f"not an instance directory (no config.txt): {p}")
    return p

def _add_objective_flags(parser):
    parser.add_argument("--objective", choices=("huber", "quadratic"),
                        default="huber",
                        help="loss: the model's robust loss, or the quadratic "
                             "distance to the sample covariance (closed-form "
                             "oracle)")
    parser.add_argument("--gamma", type=float, default=0.1,
                        help="Huber knee (default 0.1)")
    parser.add_argument("--shrink", type=float, default=None,
                        help="shrink multiplier a (default 0.9 spiked / "
                             "0.8 corrupted)")

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subspaceopt",
        description="Generate, solve, and diagnose subspace-recovery "
                    "instances over rank-k projection matrices.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write instances from a config file")
    g.add_argument("--config", required=True)
    g.add_argument("--out", default=None)
    g.set_defaults(fn=cmd_generate)

    s = sub.add_parser("solve", help="solve one instance")
    s.add_argument("instance", help="instance directory")
    s.add_argument("--solver", choices=SOLVERS, required=True)
    s.add_argument("--init", default="pca",
                   help="pca | random-projection | random-fantope | file:PATH")
    s.add_argument("--policy", choices=("empirical-lambda", "inverse-beta",
                                        "theorem-goi", "fixed"), default=None)
    s.add_argument("--eta", type=float, default=None,
                   help="step size for --policy fixed")
    s.add_argument("--fw-linesearch", choices=("exact", "surrogate"),
                   default="exact")
    s.add_argument("--budget", type=int, default=None,
                   help="rank budget r' for pgd-convex")
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--max-iters", type=int, default=10_000)
    s.add_argument("--gap-every", type=int, default=1)
    s.add_argument("--seed", type=int, default=0, help="seed for random inits")
    s.add_argument("--ref", default=None,
                   help="reference point file for the distance column")
    s.add_argument("--out", required=True)
    _add_objective_flags(s)
    s.set_defaults(fn=cmd_solve)

    d = sub.add_parser("diagnose", help="report optimality diagnostics")
    d.add_argument("instance")
    d.add_argument("--solution", required=True)
    d.add_argument("--growth-samples", type=int, default=200)
    d.add_argument("--out", default=None)
    _add_objective_flags(d)
    d.set_defaults(fn=cmd_diagnose)

    b = sub.add_parser("bench", help="per-iteration factorization timing")
    b.add_argument("instance")
    b.add_argument("--iters", type=int, default=25)
    b.add_argument("--repeats", type=int, default=5)
    b.add_argument("--out", required=True)
    _add_objective_flags(b)
    b.set_defaults(fn=cmd_bench)

    w = sub.add_parser("sweep", help="grid of instances, aggregate table")
    w.add_argument("--config", required=True)
    w.add_argument("--out", default=None)
    w.set_defaults(fn=cmd_sweep)
    return parser

def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except np.linalg.LinAlgError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
