"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line
(run with ``pytest tests/test_acceptance.py -v -s``).

The full-scale experiment (n=100, k=10, m=500, p=0.1, 20 seeds per model)
runs once in a module fixture and feeds criteria 5 through 8.
"""

import time

import numpy as np
import pytest

from subspaceopt import (
    CorruptedHuberLoss,
    HuberParams,
    ModelConfig,
    QuadraticLoss,
    SpikedHuberLoss,
    StepPolicy,
    StopRule,
    build_dual_certificate,
    corrupted_loss,
    eigen_gap,
    fantope_project,
    generate_instance,
    kkt_residual,
    pca_projection,
    quadratic_growth_probe,
    random_fantope,
    random_projection,
    recovery_error,
    solve_frank_wolfe,
    solve_goi,
    solve_pgd_convex,
    solve_pgd_nonconvex,
    spiked_loss,
    symmetrize,
)
from subspaceopt.cli import run_bench
from subspaceopt.datagen import SampleSet


def _report(num, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"\nACCEPTANCE {num} ({name}): {status}" + (f" [{detail}]" if detail else ""))
    assert ok, f"criterion {num} ({name}): {detail}"


def oracle_fantope_project(X, k, iters=200):
    # independent reference path: ascending eigh + fixed-count bisection
    vals, vecs = np.linalg.eigh(0.5 * (X + X.T))
    lo, hi = vals.min() - 1.0, vals.max()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.clip(vals - mid, 0.0, 1.0).sum() >= k:
            lo = mid
        else:
            hi = mid
    c = np.clip(vals - 0.5 * (lo + hi), 0.0, 1.0)
    return (vecs * c) @ vecs.T


def fd_gradient(fn, X, h):
    n = X.shape[0]
    G = np.zeros_like(X)
    for i in range(n):
        for j in range(i, n):
            E = np.zeros_like(X)
            E[i, j] = E[j, i] = 1.0
            d = (fn(X + h * E) - fn(X - h * E)) / (2.0 * h)
            G[i, j] = G[j, i] = d if i == j else 0.5 * d
    return G


def gapped_quadratic(rng, n, k):
    # spectrum split so the hull projection of M is a rank-k projector with
    # a comfortable gradient eigen-gap (top - rest > 1)
    spec = np.concatenate([
        np.sort(rng.uniform(1.8, 2.2, size=k))[::-1],
        np.sort(rng.uniform(-0.3, 0.2, size=n - k))[::-1],
    ])
    basis, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return QuadraticLoss(symmetrize((basis * spec) @ basis.T))


def fit_log_slope(ts, hs):
    A = np.vstack([ts, np.ones_like(ts)]).T
    coef, *_ = np.linalg.lstsq(A, hs, rcond=None)
    resid = hs - A @ coef
    ss_tot = np.sum((hs - hs.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss_tot
    return coef[0], r2


# ---------------------------------------------------------------------------
# criterion 1: projection oracle equivalence


def test_criterion_1_projection_oracle():
    rng = np.random.default_rng(100)
    t0 = time.perf_counter()
    worst_oracle = worst_idem = worst_expand = 0.0
    prev = {}
    for _ in range(500):
        X = symmetrize(2.0 * rng.standard_normal((8, 8)))
        for k in (1, 2, 3):
            Xp, _ = fantope_project(X, k)
            worst_oracle = max(worst_oracle,
                               np.linalg.norm(Xp - oracle_fantope_project(X, k)))
            Xpp, _ = fantope_project(Xp, k)
            worst_idem = max(worst_idem, np.linalg.norm(Xpp - Xp))
            if k in prev:
                Y, PY = prev[k]
                worst_expand = max(worst_expand,
                                   np.linalg.norm(Xp - PY) - np.linalg.norm(X - Y))
            prev[k] = (X, Xp)
    elapsed = time.perf_counter() - t0
    ok = (worst_oracle <= 1e-9 and worst_idem <= 1e-10
          and worst_expand <= 1e-10 and elapsed < 10.0)
    _report(1, "projection oracle equivalence", ok,
            f"oracle dev {worst_oracle:.2e}, idem {worst_idem:.2e}, "
            f"expansion slack {worst_expand:.2e}, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# criterion 2: closed-form solver oracle


def test_criterion_2_solver_oracle():
    rng = np.random.default_rng(200)
    n, k = 24, 3
    obj = gapped_quadratic(rng, n, k)
    target, wf = fantope_project(obj.M, k)
    assert wf.rank == k  # the construction puts the optimum on a projector
    f_star = obj.value_and_grad(target)[0]

    errs = {}
    point, _ = solve_goi(obj, k, random_projection(n, k, rng),
                         StepPolicy("inverse-beta"),
                         StopRule(gap_tol=1e-13, max_iters=5000))
    errs["goi"] = np.linalg.norm(point.matrix - target)
    point, _ = solve_pgd_nonconvex(obj, k, random_projection(n, k, rng),
                                   StepPolicy("inverse-beta"),
                                   StopRule(gap_tol=1e-13, max_iters=5000))
    errs["pgd"] = np.linalg.norm(point.matrix - target)
    X, _ = solve_pgd_convex(obj, k, random_fantope(n, k, rng),
                            StepPolicy("inverse-beta"),
                            stop=StopRule(gap_tol=1e-13, max_iters=5000))
    errs["pgd-convex"] = np.linalg.norm(X - target)
    X, trace_fw = solve_frank_wolfe(obj, k, np.eye(n) * (k / n),
                                    StepPolicy("fw-exact-linesearch"),
                                    StopRule(gap_tol=1e-13, max_iters=5000))
    errs["fw"] = np.linalg.norm(X - target)

    beta = obj.metadata(k).beta
    fw_bound_ok = all(
        f_val - f_star <= 4.0 * (2 * k) * beta / (row + 1) + 1e-12
        for row, f_val in enumerate(trace_fw.f)
    )
    ok = all(e <= 1e-6 for e in errs.values()) and fw_bound_ok
    _report(2, "closed-form solver oracle", ok,
            ", ".join(f"{s} {e:.1e}" for s, e in errs.items())
            + f", fw bound {'ok' if fw_bound_ok else 'violated'}")


# ---------------------------------------------------------------------------
# criterion 3: gradient correctness


def test_criterion_3_gradient_finite_differences():
    rng = np.random.default_rng(300)
    n, m = 20, 30
    worst = {"spiked": 0.0, "corrupted": 0.0}
    for model, loss, params in (
        ("spiked", spiked_loss, HuberParams(gamma=0.1, shrink=0.9)),
        ("corrupted", corrupted_loss, HuberParams(gamma=0.1, shrink=0.8)),
    ):
        for _ in range(10):
            data = SampleSet(rng.standard_normal((m, n)))
            for _ in range(5):
                X = symmetrize(rng.standard_normal((n, n)))
                _, grad = loss(X, data, params)
                h = 1e-5 * (1.0 + np.linalg.norm(X))
                fd = fd_gradient(lambda Y: loss(Y, data, params)[0], X, h)
                rel = np.linalg.norm(fd - grad) / max(np.linalg.norm(grad), 1e-12)
                worst[model] = max(worst[model], rel)
    ok = all(v <= 1e-5 for v in worst.values())
    _report(3, "gradient correctness", ok,
            f"worst rel err spiked {worst['spiked']:.2e}, "
            f"corrupted {worst['corrupted']:.2e}")


# ---------------------------------------------------------------------------
# criterion 4: coupling and linear convergence at desk scale


def test_criterion_4_goi_pgd_coupling_and_rate():
    t0 = time.perf_counter()
    inst = generate_instance(ModelConfig(n=60, k=5, m=200, p=0.1,
                                         model="spiked", seed=0))
    k = inst.config.k
    obj = SpikedHuberLoss(inst.data, HuberParams(gamma=0.1, shrink=0.9))
    init = pca_projection(inst.data, k)

    ref, ref_trace = solve_pgd_convex(obj, k, init.matrix,
                                      StepPolicy("empirical-lambda"),
                                      stop=StopRule(gap_tol=1e-12,
                                                    max_iters=50_000))
    assert ref_trace.termination == "gap-tol"
    f_star = obj.value_and_grad(ref)[0]

    stop = StopRule(gap_tol=1e-10, max_iters=3000)
    xs, ys = [], []
    _, trace_pgd = solve_pgd_nonconvex(obj, k, init,
                                       StepPolicy("empirical-lambda"), stop,
                                       callback=lambda t, X: xs.append(X.copy()))
    _, trace_goi = solve_goi(obj, k, init.frame,
                             StepPolicy("empirical-lambda"), stop,
                             callback=lambda t, Y: ys.append(Y.copy()))

    # (a) trajectories coalesce below 1e-6 within 300 iterations and stay there
    T = min(len(xs), len(ys))
    dists = np.array([np.linalg.norm(xs[t] - ys[t]) for t in range(T)])
    coupled_from = None
    for t in range(min(T, 301)):
        if np.all(dists[t:] <= 1e-6):
            coupled_from = t
            break
    coupling_ok = coupled_from is not None

    # (b) log suboptimality of the factored method is linear over the final
    # 80 percent of iterations
    h = np.asarray(trace_goi.f) - f_star
    idx = np.arange(len(h))
    start = len(h) // 5
    mask = h[start:] > 1e-14 * (1.0 + abs(f_star))
    slope, r2 = fit_log_slope(idx[start:][mask].astype(float),
                              np.log(h[start:][mask]))
    rate_ok = slope < 0 and r2 >= 0.98

    # (c) the spectral rank test holds at every projected-gradient step
    flags_ok = all(trace_pgd.rank_flag)
    elapsed = time.perf_counter() - t0
    ok = coupling_ok and rate_ok and flags_ok and elapsed < 60.0
    _report(4, "coupling and linear rate", ok,
            f"coupled from t={coupled_from}, slope {slope:.3f}, R2 {r2:.4f}, "
            f"rank flags {'all true' if flags_ok else 'VIOLATED'}, "
            f"{elapsed:.1f}s")


# ---------------------------------------------------------------------------
# criteria 5-8 share the full-scale experiment


FULL_SCALE = dict(n=100, k=10, m=500, p=0.1, seeds=20)


@pytest.fixture(scope="module")
def full_scale_runs():
    t0 = time.perf_counter()
    runs = {"spiked": [], "corrupted": []}
    for model, shrink, loss_cls in (("spiked", 0.9, SpikedHuberLoss),
                                    ("corrupted", 0.8, CorruptedHuberLoss)):
        for seed in range(FULL_SCALE["seeds"]):
            config = ModelConfig(n=FULL_SCALE["n"], k=FULL_SCALE["k"],
                                 m=FULL_SCALE["m"], p=FULL_SCALE["p"],
                                 model=model, seed=seed)
            inst = generate_instance(config)
            obj = loss_cls(inst.data, HuberParams(gamma=0.1, shrink=shrink))
            init = pca_projection(inst.data, config.k)
            point, trace = solve_pgd_nonconvex(
                obj, config.k, init, StepPolicy("empirical-lambda"),
                StopRule(gap_tol=1e-10, max_iters=30_000))
            runs[model].append({
                "instance": inst,
                "objective": obj,
                "point": point,
                "trace": trace,
                "eigen_gap": eigen_gap(point, obj, config.k).gap,
                "recovery": recovery_error(point, inst.truth),
                "recovery_pca": recovery_error(init, inst.truth),
            })
    runs["elapsed"] = time.perf_counter() - t0
    return runs


def test_criterion_5_table_direction(full_scale_runs):
    details = []
    ok = full_scale_runs["elapsed"] < 1200.0
    ratio_limit = {"spiked": 0.25, "corrupted": 0.6}
    for model in ("spiked", "corrupted"):
        rows = full_scale_runs[model]
        solved = all(r["trace"].termination == "gap-tol" for r in rows)
        gaps = np.array([r["eigen_gap"] for r in rows])
        mean_gap = gaps.mean()
        ratio = (np.mean([r["recovery"] for r in rows])
                 / np.mean([r["recovery_pca"] for r in rows]))
        model_ok = (solved and np.all(gaps > 0) and 1.0 <= mean_gap <= 6.0
                    and ratio <= ratio_limit[model])
        ok = ok and model_ok
        details.append(f"{model}: gap mean {mean_gap:.2f}, "
                       f"recovery ratio {ratio:.3f}")
    details.append(f"{full_scale_runs['elapsed']:.0f}s")
    _report(5, "full-scale recovery direction", ok, "; ".join(details))


def test_criterion_6_certificates(full_scale_runs):
    n = FULL_SCALE["n"]
    k = FULL_SCALE["k"]
    worst_kkt = worst_orth = 0.0
    ranks_ok = True
    for model in ("spiked", "corrupted"):
        for r in full_scale_runs[model]:
            cert = build_dual_certificate(r["point"], r["objective"])
            worst_kkt = max(worst_kkt,
                            kkt_residual(r["point"], cert, r["objective"], k))
            rank1 = int(np.count_nonzero(np.linalg.eigvalsh(cert.z1) > 1e-9))
            rank2 = int(np.count_nonzero(np.linalg.eigvalsh(cert.z2) > 1e-9))
            ranks_ok = ranks_ok and (rank1 + rank2 == n)
            worst_orth = max(worst_orth, np.linalg.norm(cert.z1 @ cert.z2))
    ok = worst_kkt <= 1e-8 and ranks_ok and worst_orth <= 1e-9
    _report(6, "strict-complementarity certificates", ok,
            f"worst kkt {worst_kkt:.2e}, ranks sum to n: {ranks_ok}, "
            f"worst |z1 z2| {worst_orth:.2e}")


def test_criterion_7_quadratic_growth(full_scale_runs):
    k = FULL_SCALE["k"]
    total_viol = 0
    worst = np.inf
    rng = np.random.default_rng(700)
    for model in ("spiked", "corrupted"):
        for r in full_scale_runs[model]:
            report = quadratic_growth_probe(r["point"], r["objective"], k,
                                            delta=r["eigen_gap"], samples=200,
                                            rng=rng)
            total_viol += report.violations
            worst = min(worst, report.worst_slack)
    ok = total_viol == 0
    _report(7, "quadratic growth probe", ok,
            f"violations {total_viol}, worst slack {worst:.2e}")


def test_criterion_8_frank_wolfe_certificate(full_scale_runs):
    run = full_scale_runs["spiked"][0]
    k = FULL_SCALE["k"]
    inst = run["instance"]
    init = pca_projection(inst.data, k)
    _, trace = solve_frank_wolfe(run["objective"], k, init.matrix,
                                 StepPolicy("fw-exact-linesearch"),
                                 StopRule(gap_tol=1e-8, max_iters=30_000),
                                 x_ref=run["point"].matrix)
    gap_ok = trace.termination == "gap-tol" and trace.final_gap <= 1e-8
    v_sq = np.asarray(trace.v_dist_ref) ** 2
    ma = np.convolve(v_sq, np.ones(5) / 5.0, mode="valid")
    increases = int(np.sum(np.diff(ma) > 1e-12 * (1.0 + ma[0])))
    trend_ok = increases == 0 and v_sq[-1] < v_sq[0]
    ok = gap_ok and trend_ok
    _report(8, "frank-wolfe vertex certificate", ok,
            f"gap {trace.final_gap:.2e} in {len(trace) - 1} iters, "
            f"moving-average increases {increases}, "
            f"v_sq {v_sq[0]:.2e} -> {v_sq[-1]:.2e}")


# ---------------------------------------------------------------------------
# criterion 9: factorization timing direction


def test_criterion_9_timing_direction():
    inst = generate_instance(ModelConfig(n=1000, k=10, m=200, p=0.1,
                                         model="spiked", seed=0))
    obj = SpikedHuberLoss(inst.data, HuberParams(gamma=0.1, shrink=0.9))
    init = pca_projection(inst.data, 10)
    _, summary = run_bench(obj, 10, init.frame, iters=25, repeats=3)
    ratio = summary["eig_over_qr_ratio"]
    ok = ratio > 1.0
    _report(9, "factorization timing direction", ok,
            f"mean eig {summary['mean_eig_ns'] / 1e6:.2f} ms vs "
            f"mean qr {summary['mean_qr_ns'] / 1e6:.3f} ms, ratio {ratio:.0f}x")


# ---------------------------------------------------------------------------
# criterion 10: cold-start contrast


def test_criterion_10_cold_start_contrast():
    inst = generate_instance(ModelConfig(n=60, k=5, m=200, p=0.1,
                                         model="spiked", seed=1))
    k = inst.config.k
    obj = SpikedHuberLoss(inst.data, HuberParams(gamma=0.1, shrink=0.9))
    stop = StopRule(gap_tol=1e-10, max_iters=5000)
    cold_init = random_projection(inst.config.n, k,
                                  np.random.default_rng(0)).matrix
    _, cold = solve_pgd_convex(obj, k, cold_init,
                               StepPolicy("empirical-lambda"), stop=stop)
    warm = pca_projection(inst.data, k)
    _, warm_trace = solve_pgd_convex(obj, k, warm.matrix,
                                     StepPolicy("empirical-lambda"), stop=stop)
    cold_high = sum(r > k for r in cold.proj_rank[1:])
    warm_high = sum(r > k for r in warm_trace.proj_rank[1:])
    ok = (cold.termination == "gap-tol" and warm_trace.termination == "gap-tol"
          and cold_high > 0 and warm_high == 0)
    _report(10, "cold-start rank contrast", ok,
            f"cold: {cold_high} iterations above rank k (max "
            f"{max(cold.proj_rank)}), warm: {warm_high}")
