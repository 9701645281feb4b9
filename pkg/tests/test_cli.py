import filecmp

import numpy as np
import pytest

from subspaceopt import Instance, SolveTrace, fantope_project
from subspaceopt.cli import main


def write_gen_config(path, model="spiked", n=16, k=2, m=30, p=0.1,
                     seeds="0 1 2"):
    path.write_text(
        "[model]\n"
        f"model = {model}\nn = {n}\nk = {k}\nm = {m}\np = {p}\n"
        "[run]\n"
        f"seeds = {seeds}\n"
    )


@pytest.fixture()
def generated(tmp_path):
    cfg = tmp_path / "gen.ini"
    write_gen_config(cfg)
    out = tmp_path / "instances"
    assert main(["generate", "--config", str(cfg), "--out", str(out)]) == 0
    return out


def test_generate_writes_instance_per_seed(generated):
    dirs = sorted(p.name for p in generated.iterdir())
    assert dirs == ["seed0000", "seed0001", "seed0002"]
    inst = Instance.load(generated / "seed0001")
    assert inst.config.seed == 1
    assert inst.data.m == 30


def test_generate_idempotent(tmp_path, generated):
    cfg = tmp_path / "gen.ini"
    out2 = tmp_path / "instances2"
    assert main(["generate", "--config", str(cfg), "--out", str(out2)]) == 0
    for seed_dir in ("seed0000", "seed0001", "seed0002"):
        for fname in ("config.txt", "samples.csv", "truth.csv"):
            assert filecmp.cmp(generated / seed_dir / fname,
                               out2 / seed_dir / fname, shallow=False)


def test_generate_rejects_bad_p(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    write_gen_config(cfg, p=0.6)
    assert main(["generate", "--config", str(cfg), "--out",
                 str(tmp_path / "x")]) == 2
    assert "p must be in (0,0.5]" in capsys.readouterr().err


def test_generate_rejects_empty_seeds(tmp_path, capsys):
    cfg = tmp_path / "empty.ini"
    write_gen_config(cfg, seeds="")
    assert main(["generate", "--config", str(cfg), "--out",
                 str(tmp_path / "x")]) == 2
    assert "seeds" in capsys.readouterr().err


def test_unknown_solver_usage_error(generated, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["solve", str(generated / "seed0000"), "--solver", "nope",
              "--out", str(tmp_path / "o")])
    assert exc.value.code == 2


def test_solve_quadratic_matches_projection_oracle(generated, tmp_path):
    inst_dir = generated / "seed0000"
    out = tmp_path / "solved"
    rc = main(["solve", str(inst_dir), "--solver", "pgd-convex",
               "--objective", "quadratic", "--tol", "1e-12",
               "--out", str(out)])
    assert rc == 0
    X = np.loadtxt(out / "solution.csv", delimiter=",")
    inst = Instance.load(inst_dir)
    M = inst.data.points.T @ inst.data.points / inst.config.m
    target, _ = fantope_project(M, inst.config.k)
    assert np.linalg.norm(X - target) <= 1e-8
    result = dict(line.split("=", 1)
                  for line in (out / "result.txt").read_text().splitlines())
    assert result["termination"] == "gap-tol"


@pytest.mark.parametrize("solver", ["goi", "pgd", "pgd-convex", "fw"])
def test_solve_all_solvers_run(generated, tmp_path, solver):
    out = tmp_path / f"run_{solver}"
    rc = main(["solve", str(generated / "seed0000"), "--solver", solver,
               "--tol", "1e-8", "--max-iters", "3000", "--out", str(out)])
    assert rc == 0
    trace = SolveTrace.from_csv(out / "trace.csv")
    assert trace.termination == "gap-tol"
    X = np.loadtxt(out / "solution.csv", delimiter=",")
    assert X.shape == (16, 16)


def test_solve_trace_csv_roundtrip(generated, tmp_path):
    out = tmp_path / "run"
    main(["solve", str(generated / "seed0000"), "--solver", "pgd",
          "--tol", "1e-8", "--out", str(out)])
    trace = SolveTrace.from_csv(out / "trace.csv")
    again = tmp_path / "again.csv"
    trace.to_csv(again)
    assert (out / "trace.csv").read_text() == again.read_text()


def test_solve_init_from_file(generated, tmp_path):
    out1 = tmp_path / "first"
    main(["solve", str(generated / "seed0000"), "--solver", "pgd",
          "--tol", "1e-8", "--out", str(out1)])
    out2 = tmp_path / "second"
    rc = main(["solve", str(generated / "seed0000"), "--solver", "pgd",
               "--init", f"file:{out1 / 'solution.csv'}", "--tol", "1e-8",
               "--out", str(out2)])
    assert rc == 0
    trace = SolveTrace.from_csv(out2 / "trace.csv")
    assert len(trace) <= 3  # warm start from a solved point is immediate


def test_diagnose_reports_and_errors(generated, tmp_path, capsys):
    inst_dir = generated / "seed0000"
    out = tmp_path / "run"
    main(["solve", str(inst_dir), "--solver", "pgd", "--tol", "1e-11",
          "--out", str(out)])
    capsys.readouterr()
    report_path = tmp_path / "report.txt"
    rc = main(["diagnose", str(inst_dir), "--solution",
               str(out / "solution.csv"), "--growth-samples", "50",
               "--out", str(report_path)])
    assert rc == 0
    text = report_path.read_text()
    kv = dict(line.split("=", 1) for line in text.strip().splitlines())
    assert float(kv["eigen_gap"]) > 0
    assert float(kv["recovery_error"]) < float(kv["pca_recovery_error"])
    assert float(kv["kkt_residual"]) <= 1e-8
    assert int(kv["growth_violations"]) == 0
    # unsolved point: duality gap far above tolerance, certificate refused
    pca_out = tmp_path / "pca_report.txt"
    x_pca = tmp_path / "x_pca.csv"
    inst = Instance.load(inst_dir)
    from subspaceopt import pca_projection
    np.savetxt(x_pca, pca_projection(inst.data, inst.config.k).matrix,
               fmt="%.17g", delimiter=",")
    rc = main(["diagnose", str(inst_dir), "--solution", str(x_pca),
               "--growth-samples", "10", "--out", str(pca_out)])
    assert rc == 0
    kv = dict(line.split("=", 1)
              for line in pca_out.read_text().strip().splitlines())
    assert float(kv["duality_gap"]) > 1e-6


def test_diagnose_missing_solution(generated, capsys):
    rc = main(["diagnose", str(generated / "seed0000"), "--solution",
               str(generated / "nope.csv")])
    assert rc == 2
    assert "not found" in capsys.readouterr().err


def test_bench_reports_timing(generated, tmp_path, capsys):
    out = tmp_path / "bench"
    rc = main(["bench", str(generated / "seed0000"), "--iters", "5",
               "--repeats", "2", "--out", str(out)])
    assert rc == 0
    lines = (out / "timing.csv").read_text().strip().splitlines()
    assert lines[0] == "repeat,solver,iter,fact_time_ns"
    assert len(lines) == 1 + 2 * 2 * 5  # repeats x solvers x iters
    summary = dict(line.split("=", 1)
                   for line in (out / "summary.txt").read_text().splitlines())
    assert float(summary["eig_over_qr_ratio"]) > 0


def test_sweep_aggregate_table(tmp_path):
    cfg = tmp_path / "sweep.ini"
    cfg.write_text(
        "[model]\nmodel = spiked\nn = 16\nk = 2\nm = 30\np = 0.1\n"
        "[solver]\ntol = 1e-9\nmax_iters = 3000\n"
        "[sweep]\nparameter = p\nvalues = 0.1 0.3\n"
        "[run]\nseeds = 0 1\n"
    )
    out = tmp_path / "sweep_out"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    agg = (out / "aggregate.csv").read_text().strip().splitlines()
    assert agg[0] == "p,eigen_gap_mean,recovery_error_mean," \
                     "pca_recovery_error_mean,seeds"
    assert len(agg) == 3
    # deterministic: running again gives identical tables
    out2 = tmp_path / "sweep_out2"
    assert main(["sweep", "--config", str(cfg), "--out", str(out2)]) == 0
    assert (out / "aggregate.csv").read_text() == \
        (out2 / "aggregate.csv").read_text()
    assert (out / "detail.csv").read_text() == (out2 / "detail.csv").read_text()


def test_solve_flag_variants(generated, tmp_path):
    inst_dir = str(generated / "seed0000")
    variants = [
        ["--solver", "goi", "--policy", "theorem-goi", "--init",
         "random-projection", "--seed", "3"],
        ["--solver", "pgd-convex", "--budget", "6", "--init",
         "random-fantope"],
        ["--solver", "fw", "--fw-linesearch", "surrogate", "--tol", "1e-7"],
        ["--solver", "goi", "--policy", "fixed", "--eta", "0.01"],
        ["--solver", "pgd", "--objective", "quadratic"],
    ]
    for i, extra in enumerate(variants):
        out = tmp_path / f"v{i}"
        rc = main(["solve", inst_dir, "--max-iters", "4000",
                   "--out", str(out)] + extra)
        assert rc == 0, extra
        assert (out / "trace.csv").exists()


def test_solve_fixed_policy_requires_eta(generated, tmp_path, capsys):
    rc = main(["solve", str(generated / "seed0000"), "--solver", "pgd",
               "--policy", "fixed", "--out", str(tmp_path / "x")])
    assert rc == 2
    assert "--eta" in capsys.readouterr().err


def test_solve_ref_distance_coupling(generated, tmp_path):
    # the QR-based and eigendecomposition-based methods from the same warm
    # start report matching distance columns against a shared reference
    inst_dir = generated / "seed0000"
    ref_out = tmp_path / "ref"
    main(["solve", str(inst_dir), "--solver", "pgd-convex", "--tol", "1e-12",
          "--out", str(ref_out)])
    ref = str(ref_out / "solution.csv")
    traces = {}
    for solver in ("goi", "pgd"):
        out = tmp_path / solver
        rc = main(["solve", str(inst_dir), "--solver", solver, "--tol",
                   "1e-10", "--ref", ref, "--out", str(out)])
        assert rc == 0
        traces[solver] = SolveTrace.from_csv(out / "trace.csv")
    tail = min(len(traces["goi"]), len(traces["pgd"]))
    dist_diffs = [abs(traces["goi"].dist_ref[t] - traces["pgd"].dist_ref[t])
                  for t in range(tail - 5, tail)]
    f_diffs = [abs(traces["goi"].f[t] - traces["pgd"].f[t])
               for t in range(tail - 5, tail)]
    assert max(dist_diffs) <= 1e-6
    assert max(f_diffs) <= 1e-8


def test_sweep_table_direction_full_scale(tmp_path):
    # eigen-gap shrinks as the corruption probability grows
    cfg = tmp_path / "sweep.ini"
    cfg.write_text(
        "[model]\nmodel = spiked\nn = 100\nk = 10\nm = 500\np = 0.1\n"
        "[sweep]\nparameter = p\nvalues = 0.05 0.25 0.5\n"
        "[run]\nseeds = 0 1 2\n"
    )
    out = tmp_path / "sweep_out"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    rows = (out / "aggregate.csv").read_text().strip().splitlines()[1:]
    gaps = [float(r.split(",")[1]) for r in rows]
    assert gaps[0] > gaps[1] > gaps[2]
    assert all(g > 0 for g in gaps)


def test_sweep_dimension_leaves_gap_flat(tmp_path):
    # growing the ambient dimension (fixed k, m, p) barely moves the
    # eigen-gap, unlike the corruption sweep
    cfg = tmp_path / "nsweep.ini"
    cfg.write_text(
        "[model]\nmodel = spiked\nn = 100\nk = 10\nm = 500\np = 0.1\n"
        "[sweep]\nparameter = n\nvalues = 100 200\n"
        "[run]\nseeds = 0 1 2\n"
    )
    out = tmp_path / "nsweep_out"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    rows = (out / "aggregate.csv").read_text().strip().splitlines()[1:]
    gaps = [float(r.split(",")[1]) for r in rows]
    assert all(1.0 <= g <= 6.0 for g in gaps)
    assert abs(gaps[1] - gaps[0]) <= 1.0


def test_sweep_empty_seeds_rejected(tmp_path, capsys):
    cfg = tmp_path / "sweep.ini"
    cfg.write_text(
        "[model]\nmodel = spiked\nn = 16\nk = 2\nm = 30\np = 0.1\n"
        "[sweep]\nparameter = p\nvalues = 0.1\n"
        "[run]\nseeds =\n"
    )
    assert main(["sweep", "--config", str(cfg), "--out",
                 str(tmp_path / "x")]) == 2
    assert "seeds" in capsys.readouterr().err
