"""The four iterative methods: factored gradient steps closed by one QR
(orthogonal-iteration style), projected gradient over the rank-k projection
set, projected gradient over its convex hull with an optional rank budget,
and Frank-Wolfe with line search.  Includes step-size policies, stopping
rules, and full per-iteration traces.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .fantope import (
    ProjectionMatrix,
    fantope_lmo,
    projection_rank_at_most,
    waterfill_threshold,
)
from .objectives import empirical_lambda
from .spectral import (
    DegenerateFrameError,
    ensure_orthonormal,
    qr_orthonormalize,
    subspace_change,
    sym_eig,
    symmetrize,
)

__all__ = [
    "TERM_GAP",
    "TERM_MAX_ITERS",
    "TERM_STALLED",
    "TERM_DEGENERATE",
    "StepPolicy",
    "StopRule",
    "SolveTrace",
    "duality_gap",
    "fw_surrogate_step",
    "golden_section",
    "solve_goi",
    "solve_pgd_nonconvex",
    "solve_pgd_convex",
    "solve_frank_wolfe",
]

TERM_GAP = "gap-tol"
TERM_MAX_ITERS = "max-iters"
TERM_STALLED = "stalled-stationary"
TERM_DEGENERATE = "degenerate-frame"

TRACE_COLUMNS = ("iter", "f", "gap", "rank_flag", "dist_ref", "step", "fact_time_ns")

FIXED_KINDS = ("fixed", "inverse-beta", "theorem-goi", "empirical-lambda")
LINESEARCH_KINDS = ("fw-exact-linesearch", "fw-quadratic-surrogate")


@dataclass(frozen=True)
class StepPolicy:
    """Step-size rule.

    Fixed-step kinds: ``fixed`` (uses ``value``), ``inverse-beta`` (1/beta),
    ``theorem-goi`` (1 / (5 max(beta, g_bound))), ``empirical-lambda``
    (1 / lambda_1(sum q q^T) of the objective's sample set).  Frank-Wolfe
    kinds choose a per-iteration step in [0, 1]: ``fw-exact-linesearch``
    (golden-section on the segment) or ``fw-quadratic-surrogate``
    (closed-form minimizer of the smoothness upper model).
    """

    kind: str
    value: float | None = None

    def __post_init__(self):
        if self.kind not in FIXED_KINDS + LINESEARCH_KINDS:
            raise ValueError(f"unknown step policy kind: {self.kind!r}")
        if self.kind == "fixed" and (self.value is None or self.value <= 0):
            raise ValueError("fixed step policy requires value > 0")

    def step_size(self, objective, k: int) -> float:
        if self.kind == "fixed":
            return float(self.value)
        if self.kind == "inverse-beta":
            return 1.0 / objective.metadata(k).beta
        if self.kind == "theorem-goi":
            md = objective.metadata(k)
            return 1.0 / (5.0 * max(md.beta, md.g_bound))
        if self.kind == "empirical-lambda":
            data = getattr(objective, "data", None)
            if data is None:
                raise ValueError(
                    "empirical-lambda needs an objective carrying sample data"
                )
            return 1.0 / empirical_lambda(data)
        raise ValueError(f"{self.kind} does not define a fixed step size")


@dataclass(frozen=True)
class StopRule:
    """Termination criteria shared by all solvers.

    ``gap_every`` controls how often the duality gap is evaluated (it costs
    one extra eigendecomposition); 0 disables gap evaluation entirely, in
    which case only the iteration cap applies.  A run stalls out when the
    iterate moves less than ``stall_tol`` in Frobenius norm for
    ``stall_iters`` consecutive iterations while a known gap exceeds
    ``gap_tol``.
    """

    gap_tol: float = 1e-10
    max_iters: int = 10_000
    gap_every: int = 1
    stall_tol: float = 1e-12
    stall_iters: int = 3


@dataclass
class SolveTrace:
    """Per-iteration solve record; row 0 logs the initial point.

    Extra per-method fields: ``proj_rank`` (realized projection rank, convex
    PGD) and ``v_dist_ref`` (distance of the linear-oracle vertex to the
    reference, Frank-Wolfe).  CSV export carries the fixed column schema
    plus the termination reason.
    """

    iters: list = field(default_factory=list)
    f: list = field(default_factory=list)
    gap: list = field(default_factory=list)
    rank_flag: list = field(default_factory=list)
    dist_ref: list = field(default_factory=list)
    step: list = field(default_factory=list)
    fact_time_ns: list = field(default_factory=list)
    termination: str = ""
    proj_rank: list = field(default_factory=list)
    v_dist_ref: list = field(default_factory=list)

    def record(self, it, f, gap, rank_flag, dist_ref, step, fact_ns):
        self.iters.append(int(it))
        self.f.append(float(f))
        self.gap.append(float(gap))
        self.rank_flag.append(bool(rank_flag))
        self.dist_ref.append(float(dist_ref))
        self.step.append(float(step))
        self.fact_time_ns.append(int(fact_ns))

    def __len__(self) -> int:
        return len(self.iters)

    @property
    def final_f(self) -> float:
        return self.f[-1]

    @property
    def final_gap(self) -> float:
        """Most recent finite duality gap, NaN if none was evaluated."""
        for g in reversed(self.gap):
            if not math.isnan(g):
                return g
        return math.nan

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write(f"# termination={self.termination}\n")
            fh.write(",".join(TRACE_COLUMNS) + "\n")
            rows = zip(self.iters, self.f, self.gap, self.rank_flag,
                       self.dist_ref, self.step, self.fact_time_ns)
            for it, f, gap, rk, dist, step, ns in rows:
                fh.write(f"{it},{f:.17g},{gap:.17g},{int(rk)},"
                         f"{dist:.17g},{step:.17g},{ns}\n")

    @classmethod
    def from_csv(cls, path) -> "SolveTrace":
        trace = cls()
        with open(path) as fh:
            first = fh.readline().strip()
            if not first.startswith("# termination="):
                raise ValueError(f"{path}: missing termination header line")
            trace.termination = first.split("=", 1)[1]
            header = fh.readline().strip()
            if header != ",".join(TRACE_COLUMNS):
                raise ValueError(f"{path}: unexpected trace header {header!r}")
            for line in fh:
                parts = line.strip().split(",")
                if len(parts) != len(TRACE_COLUMNS):
                    raise ValueError(f"{path}: malformed row {line!r}")
                trace.record(int(parts[0]), float(parts[1]), float(parts[2]),
                             bool(int(parts[3])), float(parts[4]),
                             float(parts[5]), int(parts[6]))
        return trace


def _as_matrix(point) -> np.ndarray:
    if isinstance(point, ProjectionMatrix):
        return point.matrix.copy()
    X = np.asarray(point, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {X.shape}")
    return symmetrize(X)


def _as_frame(init, k: int) -> np.ndarray:
    if isinstance(init, ProjectionMatrix):
        Q = init.frame
    else:
        Q = np.asarray(init, dtype=float)
    if Q.ndim != 2 or Q.shape[1] != k:
        raise ValueError(f"expected an (n, {k}) frame, got shape {Q.shape}")
    return ensure_orthonormal(Q.copy())


def _as_feasible_matrix(point, k: int, tol: float = 1e-6) -> np.ndarray:
    X = _as_matrix(point)
    trace_err = abs(float(np.trace(X)) - k)
    w = np.linalg.eigvalsh(X)
    box_err = max(0.0, -float(w[0]), float(w[-1]) - 1.0)
    if trace_err > tol * max(1.0, k) or box_err > tol:
        raise ValueError(
            f"initial point is infeasible: |trace - k| = {trace_err:.3e}, "
            f"spectral-box violation = {box_err:.3e}"
        )
    return X


def _dist(X, ref) -> float:
    if ref is None:
        return math.nan
    return float(np.linalg.norm(X - ref))


def _gap(X, grad, k: int) -> float:
    V = fantope_lmo(grad, k)
    return float(np.sum((X - V.matrix) * grad))


def _gap_if_due(X, grad, k: int, stop: StopRule, t: int) -> float:
    if stop.gap_every > 0 and t % stop.gap_every == 0:
        return _gap(X, grad, k)
    return math.nan


def duality_gap(X, objective, k: int) -> float:
    """<X - V, grad f(X)> with V the linear-oracle vertex at X.

    Nonnegative by construction and an upper bound on the suboptimality
    f(X) - f* over the feasible set (convexity).
    """
    X = _as_matrix(X)
    _, grad = objective.value_and_grad(X)
    return _gap(X, grad, k)


def golden_section(fn, lo: float, hi: float, tol: float = 1e-10) -> float:
    """Golden-section minimization of a unimodal function on [lo, hi] to an
    interval of width ``tol``; returns the interval midpoint."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    h = b - a
    c, d = b - invphi * h, a + invphi * h
    fc, fd = fn(c), fn(d)
    while h > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            h = b - a
            c = b - invphi * h
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + invphi * h
            fd = fn(d)
    return 0.5 * (a + b)


def fw_surrogate_step(gap: float, beta: float, dist_sq: float) -> float:
    """Closed-form minimizer over [0, 1] of the quadratic upper model
    eta -> -eta * gap + eta^2 * beta * dist_sq / 2."""
    if dist_sq <= 0.0:
        return 0.0
    return min(1.0, max(0.0, gap / (beta * dist_sq)))


def _stall_update(stall: int, move: float, last_gap: float,
                  stop: StopRule) -> int:
    # a stall needs a *known* gap above tolerance plus no movement
    gap_known_positive = not math.isnan(last_gap) and last_gap > stop.gap_tol
    if move <= stop.stall_tol and gap_known_positive:
        return stall + 1
    return 0


def solve_goi(objective, k: int, init, policy: StepPolicy,
              stop: StopRule | None = None, x_ref=None, callback=None):
    """Factored gradient method: one gradient step on the n-by-k frame
    followed by one QR re-orthonormalization per iteration.

    Iterates Z = Q - eta * grad f(Q Q^T) Q, (Q, R) = QR(Z); every iterate
    Q Q^T is a rank-k projection by construction.  Stops on duality gap <=
    ``stop.gap_tol``, the iteration cap, a stationary stall, or a
    numerically rank-deficient Z (termination ``degenerate-frame``, with the
    trace up to that point attached).

    Parameters
    ----------
    objective : object with ``value_and_grad(X) -> (float, ndarray)``
    k : int
        Subspace dimension.
    init : ProjectionMatrix or (n, k) array
        Starting frame (re-orthonormalized if drifted).
    policy : StepPolicy
        Must resolve to a fixed step size.
    stop : StopRule, optional
    x_ref : optional reference point for the distance column.
    callback : optional ``callback(t, Y_t)`` invoked at every logged point.

    Returns
    -------
    (ProjectionMatrix, SolveTrace)
    """
    stop = stop or StopRule()
    Q = _as_frame(init, k)
    eta = policy.step_size(objective, k)
    ref = _as_matrix(x_ref) if x_ref is not None else None
    trace = SolveTrace()

    Y = Q @ Q.T
    val, grad = objective.value_and_grad(Y)
    gap = _gap_if_due(Y, grad, k, stop, 0)
    trace.record(0, val, gap, True, _dist(Y, ref), math.nan, 0)
    if callback is not None:
        callback(0, Y)

    last_gap = gap
    stall = 0
    reason = TERM_MAX_ITERS
    for t in range(1, stop.max_iters + 1):
        if not math.isnan(last_gap) and last_gap <= stop.gap_tol:
            reason = TERM_GAP
            break
        Z = Q - eta * (grad @ Q)
        t0 = time.perf_counter_ns()
        try:
            Q_next, _ = qr_orthonormalize(Z)
        except DegenerateFrameError:
            reason = TERM_DEGENERATE
            break
        fact_ns = time.perf_counter_ns() - t0
        move = subspace_change(Q, Q_next)
        Q = Q_next
        Y = Q @ Q.T
        val, grad = objective.value_and_grad(Y)
        gap = _gap_if_due(Y, grad, k, stop, t)
        if not math.isnan(gap):
            last_gap = gap
        trace.record(t, val, gap, True, _dist(Y, ref), eta, fact_ns)
        if callback is not None:
            callback(t, Y)
        stall = _stall_update(stall, move, last_gap, stop)
        if stall >= stop.stall_iters:
            reason = TERM_STALLED
            break
    if reason == TERM_MAX_ITERS and not math.isnan(last_gap) \
            and last_gap <= stop.gap_tol:
        reason = TERM_GAP
    trace.termination = reason
    return ProjectionMatrix(Q), trace


def solve_pgd_nonconvex(objective, k: int, init, policy: StepPolicy,
                        stop: StopRule | None = None, x_ref=None,
                        callback=None):
    """Projected gradient over the rank-k projection set.

    Each step eigendecomposes the shifted matrix X - eta * grad f(X) and
    keeps the top-k projector.  The rank-flag column records whether the
    convex-hull projection of the shifted matrix would itself have rank k
    (the spectral test), i.e. whether the nonconvex and convex projections
    coincide at that step.

    Returns
    -------
    (ProjectionMatrix, SolveTrace)
    """
    stop = stop or StopRule()
    X = _as_matrix(init)
    n = X.shape[0]
    eta = policy.step_size(objective, k)
    ref = _as_matrix(x_ref) if x_ref is not None else None
    trace = SolveTrace()

    val, grad = objective.value_and_grad(X)
    gap = _gap_if_due(X, grad, k, stop, 0)
    trace.record(0, val, gap, True, _dist(X, ref), math.nan, 0)
    if callback is not None:
        callback(0, X)

    Q = None
    last_gap = gap
    stall = 0
    reason = TERM_MAX_ITERS
    for t in range(1, stop.max_iters + 1):
        if not math.isnan(last_gap) and last_gap <= stop.gap_tol:
            reason = TERM_GAP
            break
        shifted = X - eta * grad
        t0 = time.perf_counter_ns()
        dec = sym_eig(shifted)
        fact_ns = time.perf_counter_ns() - t0
        rank_ok = True if k >= n else projection_rank_at_most(dec, k, k)
        Q = dec.eigenvectors[:, :k]
        X_next = Q @ Q.T
        move = float(np.linalg.norm(X_next - X))
        X = X_next
        val, grad = objective.value_and_grad(X)
        gap = _gap_if_due(X, grad, k, stop, t)
        if not math.isnan(gap):
            last_gap = gap
        trace.record(t, val, gap, rank_ok, _dist(X, ref), eta, fact_ns)
        if callback is not None:
            callback(t, X)
        stall = _stall_update(stall, move, last_gap, stop)
        if stall >= stop.stall_iters:
            reason = TERM_STALLED
            break
    if reason == TERM_MAX_ITERS and not math.isnan(last_gap) \
            and last_gap <= stop.gap_tol:
        reason = TERM_GAP
    trace.termination = reason
    if Q is None:
        Q = sym_eig(X).eigenvectors[:, :k]
    return ProjectionMatrix(Q.copy()), trace


def solve_pgd_convex(objective, k: int, init, policy: StepPolicy,
                     budget: int | None = None, stop: StopRule | None = None,
                     x_ref=None, callback=None):
    """Projected gradient over the convex hull (full spectral projection
    each step).

    When a rank ``budget`` r' is supplied, each step first runs the spectral
    rank test at r'; a failure is logged (rank flag False) and the step
    falls back to the full projection rather than erroring.  The realized
    projection rank per iteration is kept in ``trace.proj_rank``.

    Returns
    -------
    (ndarray, SolveTrace)
    """
    stop = stop or StopRule()
    X = _as_feasible_matrix(init, k)
    n = X.shape[0]
    if budget is not None and not k <= budget <= n - 1:
        raise ValueError(f"budget must satisfy k <= r' <= n-1, got {budget}")
    eta = policy.step_size(objective, k)
    ref = _as_matrix(x_ref) if x_ref is not None else None
    trace = SolveTrace()

    val, grad = objective.value_and_grad(X)
    gap = _gap_if_due(X, grad, k, stop, 0)
    init_rank = int(np.count_nonzero(np.linalg.eigvalsh(X) > 1e-9))
    trace.record(0, val, gap, True, _dist(X, ref), math.nan, 0)
    trace.proj_rank.append(init_rank)
    if callback is not None:
        callback(0, X)

    last_gap = gap
    stall = 0
    reason = TERM_MAX_ITERS
    for t in range(1, stop.max_iters + 1):
        if not math.isnan(last_gap) and last_gap <= stop.gap_tol:
            reason = TERM_GAP
            break
        shifted = X - eta * grad
        t0 = time.perf_counter_ns()
        dec = sym_eig(shifted)
        fact_ns = time.perf_counter_ns() - t0
        wf = waterfill_threshold(dec.eigenvalues, k)
        limit = budget if budget is not None else k
        within = True if limit >= n else projection_rank_at_most(dec, k, limit)
        X_next = symmetrize((dec.eigenvectors * wf.clipped) @ dec.eigenvectors.T)
        move = float(np.linalg.norm(X_next - X))
        X = X_next
        val, grad = objective.value_and_grad(X)
        gap = _gap_if_due(X, grad, k, stop, t)
        if not math.isnan(gap):
            last_gap = gap
        trace.record(t, val, gap, within, _dist(X, ref), eta, fact_ns)
        trace.proj_rank.append(wf.rank)
        if callback is not None:
            callback(t, X)
        stall = _stall_update(stall, move, last_gap, stop)
        if stall >= stop.stall_iters:
            reason = TERM_STALLED
            break
    if reason == TERM_MAX_ITERS and not math.isnan(last_gap) \
            and last_gap <= stop.gap_tol:
        reason = TERM_GAP
    trace.termination = reason
    return X, trace


def solve_frank_wolfe(objective, k: int, init, linesearch: StepPolicy | None = None,
                      stop: StopRule | None = None, x_ref=None, callback=None):
    """Frank-Wolfe over the convex hull with per-iteration line search.

    Each iteration computes the rank-k linear-oracle vertex V from the k
    smallest eigenvectors of the gradient, which also yields the duality
    gap <X - V, grad> for free; the step in [0, 1] comes either from
    golden-section search on the segment or from the closed-form quadratic
    surrogate.  ``trace.v_dist_ref`` records ||V_t - x_ref||_F when a
    reference is supplied.

    Returns
    -------
    (ndarray, SolveTrace)
    """
    linesearch = linesearch or StepPolicy("fw-exact-linesearch")
    if linesearch.kind not in LINESEARCH_KINDS:
        raise ValueError(f"Frank-Wolfe needs a line-search policy, got "
                         f"{linesearch.kind!r}")
    stop = stop or StopRule()
    X = _as_feasible_matrix(init, k)
    ref = _as_matrix(x_ref) if x_ref is not None else None
    trace = SolveTrace()
    beta = None
    if linesearch.kind == "fw-quadratic-surrogate":
        beta = objective.metadata(k).beta

    val, grad = objective.value_and_grad(X)
    reason = TERM_MAX_ITERS
    for t in range(stop.max_iters + 1):
        t0 = time.perf_counter_ns()
        V = fantope_lmo(grad, k)
        fact_ns = time.perf_counter_ns() - t0
        Vm = V.matrix
        gap = float(np.sum((X - Vm) * grad))
        vdist = _dist(Vm, ref)
        D = Vm - X
        dist_sq = float(np.sum(D * D))
        converged = gap <= stop.gap_tol or dist_sq == 0.0
        if converged or t == stop.max_iters:
            trace.record(t, val, gap, True, _dist(X, ref), math.nan, fact_ns)
            trace.v_dist_ref.append(vdist)
            if callback is not None:
                callback(t, X)
            reason = TERM_GAP if converged else TERM_MAX_ITERS
            break
        if linesearch.kind == "fw-quadratic-surrogate":
            eta_t = fw_surrogate_step(gap, beta, dist_sq)
        else:
            eta_t = golden_section(
                lambda s: objective.value_and_grad(X + s * D)[0], 0.0, 1.0,
                tol=1e-10,
            )
        trace.record(t, val, gap, True, _dist(X, ref), eta_t, fact_ns)
        trace.v_dist_ref.append(vdist)
        if callback is not None:
            callback(t, X)
        X = X + eta_t * D
        val, grad = objective.value_and_grad(X)
    trace.termination = reason
    return X, trace
