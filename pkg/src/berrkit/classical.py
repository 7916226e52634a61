"""Classical iterative solvers instrumented with backward-error traces.

Every solver starts from x_0 = 0, records its first trace row at iteration 1,
checks berr against the tolerance whenever a row is recorded (every
``trace_every`` iterations and at the end), and recomputes the residual from
scratch every RECOMPUTE_EVERY iterations to cap recurrence drift. Identical
config and seed give bitwise-identical numeric trace columns.
"""

import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import RequiresSymmetricError
from .factorize import BidiagState
from .operators import ShiftedOperator, norm2

__all__ = [
    "Termination",
    "SolverConfig",
    "SolveTrace",
    "SolveResult",
    "richardson",
    "richardson_ne",
    "cg",
    "minres",
    "lsqr",
    "regularized_solve",
    "RECOMPUTE_EVERY",
]

# residual refresh period (iterations) for drift control
RECOMPUTE_EVERY = 1000


class Termination(str, Enum):
    TOLERANCE_REACHED = "ToleranceReached"
    MAX_ITERATIONS = "MaxIterations"
    BREAKDOWN = "Breakdown"
    EXACT_SOLUTION = "ExactSolution"


@dataclass
class SolverConfig:
    """Knobs shared by the classical solvers.

    step_constant is the C in the Richardson step sizes 1/(C ||A||_2) and
    1/(C ||A||_2^2); it must be at least 1 for the convergence guarantees.
    """

    step_constant: float = 1.0
    max_iterations: int = 1000
    berr_tolerance: float = 1e-6
    trace_every: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.step_constant < 1.0:
            raise ValueError("step_constant must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not (0.0 < self.berr_tolerance < 1.0):
            raise ValueError("berr_tolerance must be in (0, 1)")
        if self.trace_every < 1:
            raise ValueError("trace_every must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


@dataclass
class SolveTrace:
    """Per-iteration history; berr[i] == residual_norm[i] / (opnorm * x_norm[i])
    exactly as stored."""

    opnorm: float
    iterations: list = field(default_factory=list)
    berr: list = field(default_factory=list)
    residual_norm: list = field(default_factory=list)
    x_norm: list = field(default_factory=list)
    wall_nanos: list = field(default_factory=list)

    def record(self, k, residual_norm, x_norm, t0):
        if self.iterations and k <= self.iterations[-1]:
            raise ValueError("trace iterations must be strictly increasing")
        self.iterations.append(int(k))
        self.berr.append(residual_norm / (self.opnorm * x_norm))
        self.residual_norm.append(float(residual_norm))
        self.x_norm.append(float(x_norm))
        self.wall_nanos.append(time.perf_counter_ns() - t0)

    def __len__(self):
        return len(self.iterations)

    @property
    def final_berr(self):
        return self.berr[-1] if self.berr else math.nan

    def rows(self):
        return list(
            zip(self.iterations, self.berr, self.residual_norm, self.x_norm, self.wall_nanos)
        )


@dataclass
class SolveResult:
    x: np.ndarray
    trace: SolveTrace
    termination: Termination
    opnorm_used: float
    iterations: int
    certified_berr_bound: float = None


def _check_rhs(op, b):
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (op.rows,):
        raise ValueError(f"b has shape {b.shape}, expected ({op.rows},)")
    if not np.any(b):
        raise ValueError("b must be nonzero")
    return b


def _traced_residual(op, b, x, own_residual_norm, trace_vs):
    """Residual norm and opnorm to record: the solver's own, or measured
    against a different operator (used by the regularized wrapper to report
    berr with respect to the unshifted A)."""
    if trace_vs is None:
        return own_residual_norm
    orig_op, _ = trace_vs
    return norm2(orig_op.apply(x) - b)


def richardson(op, b, config=None, opnorm=None):
    """Richardson iteration x_{k+1} = x_k - eta (A x_k - b) on symmetric PSD A.

    With eta = 1/(C ||A||_2) the backward error after k iterations is at most
    C/k, which is what the default per-iteration trace shows.
    """
    cfg = config or SolverConfig()
    if not op.symmetric:
        raise RequiresSymmetricError("richardson expects a symmetric PSD operator")
    b = _check_rhs(op, b)
    s = float(op.opnorm() if opnorm is None else opnorm)
    eta = 1.0 / (cfg.step_constant * s)
    t0 = time.perf_counter_ns()
    trace = SolveTrace(opnorm=s)
    x = np.zeros(op.cols)
    r = -b  # r tracks A x - b
    termination = Termination.MAX_ITERATIONS
    k = 0
    for k in range(1, cfg.max_iterations + 1):
        x = x - eta * r
        if k % RECOMPUTE_EVERY == 0:
            r = op.apply(x) - b
        else:
            r = r - eta * op.apply(r)
        if k % cfg.trace_every == 0 or k == cfg.max_iterations:
            rn = norm2(r)
            xn = norm2(x)
            stop = None
            if rn == 0.0:
                stop = Termination.EXACT_SOLUTION
            elif rn < cfg.berr_tolerance * s * xn:
                stop = Termination.TOLERANCE_REACHED
            trace.record(k, rn, xn, t0)
            if stop is not None:
                termination = stop
                break
    return SolveResult(x, trace, termination, s, k)


def richardson_ne(op, b, config=None, opnorm=None):
    """Richardson on the normal equations: x_{k+1} = x_k - eta A^T (A x_k - b),
    eta = 1/(C ||A||_2^2). Works for any (possibly rectangular) A."""
    cfg = config or SolverConfig()
    b = _check_rhs(op, b)
    s = float(op.opnorm() if opnorm is None else opnorm)
    eta = 1.0 / (cfg.step_constant * s * s)
    t0 = time.perf_counter_ns()
    trace = SolveTrace(opnorm=s)
    x = np.zeros(op.cols)
    r = -b
    termination = Termination.MAX_ITERATIONS
    k = 0
    for k in range(1, cfg.max_iterations + 1):
        g = op.apply_adjoint(r)
        x = x - eta * g
        if k % RECOMPUTE_EVERY == 0:
            r = op.apply(x) - b
        else:
            r = r - eta * op.apply(g)
        if k % cfg.trace_every == 0 or k == cfg.max_iterations:
            rn = norm2(r)
            xn = norm2(x)
            stop = None
            if rn == 0.0:
                stop = Termination.EXACT_SOLUTION
            elif xn > 0.0 and rn < cfg.berr_tolerance * s * xn:
                stop = Termination.TOLERANCE_REACHED
            if xn > 0.0:
                trace.record(k, rn, xn, t0)
            if stop is not None:
                termination = stop
                break
    return SolveResult(x, trace, termination, s, k)


def cg(op, b, config=None, opnorm=None, trace_vs=None):
    """Conjugate gradients on symmetric PSD A, traced in backward error.

    trace_vs, if given, is a (operator, opnorm) pair; recorded rows then carry
    the residual measured against that operator instead (one extra matvec per
    recorded row).
    """
    cfg = config or SolverConfig()
    if not op.symmetric:
        raise RequiresSymmetricError("cg expects a symmetric PSD operator")
    b = _check_rhs(op, b)
    s = float(op.opnorm() if opnorm is None else opnorm)
    trace_s = trace_vs[1] if trace_vs is not None else s
    t0 = time.perf_counter_ns()
    trace = SolveTrace(opnorm=trace_s)
    x = np.zeros(op.cols)
    r = b.copy()  # r tracks b - A x
    p = r.copy()
    rs = float(r @ r)
    termination = Termination.MAX_ITERATIONS
    k = 0
    for k in range(1, cfg.max_iterations + 1):
        ap = op.apply(p)
        pap = float(p @ ap)
        if pap <= 0.0:
            termination = Termination.BREAKDOWN
            k -= 1
            break
        gamma = rs / pap
        x = x + gamma * p
        if k % RECOMPUTE_EVERY == 0:
            r = b - op.apply(x)
        else:
            r = r - gamma * ap
        rs_new = float(r @ r)
        if k % cfg.trace_every == 0 or k == cfg.max_iterations or rs_new == 0.0:
            rn = math.sqrt(rs_new)
            xn = norm2(x)
            stop = None
            if rn == 0.0:
                stop = Termination.EXACT_SOLUTION
            elif rn < cfg.berr_tolerance * s * xn:
                stop = Termination.TOLERANCE_REACHED
            trace.record(k, _traced_residual(op, b, x, rn, trace_vs), xn, t0)
            if stop is not None:
                termination = stop
                break
        p = r + (rs_new / rs) * p
        rs = rs_new
    return SolveResult(x, trace, termination, s, k)


def minres(op, b, config=None, opnorm=None, trace_vs=None):
    """MINRES on symmetric A (Paige-Saunders recurrences, no preconditioner).

    The residual norm comes from the QR recurrence and is refreshed with an
    exact matvec every RECOMPUTE_EVERY iterations.
    """
    cfg = config or SolverConfig()
    if not op.symmetric:
        raise RequiresSymmetricError("minres expects a symmetric operator")
    b = _check_rhs(op, b)
    s = float(op.opnorm() if opnorm is None else opnorm)
    trace_s = trace_vs[1] if trace_vs is not None else s
    t0 = time.perf_counter_ns()
    trace = SolveTrace(opnorm=trace_s)
    n = op.cols
    beta1 = norm2(b)
    y = b.copy()
    r1 = b.copy()
    r2 = b.copy()
    oldb = 0.0
    beta = beta1
    dbar = 0.0
    epsln = 0.0
    phibar = beta1
    cs = -1.0
    sn = 0.0
    w = np.zeros(n)
    w2 = np.zeros(n)
    x = np.zeros(n)
    termination = Termination.MAX_ITERATIONS
    k = 0
    for k in range(1, cfg.max_iterations + 1):
        v = y / beta
        y = op.apply(v)
        if k >= 2:
            y = y - (beta / oldb) * r1
        alfa = float(v @ y)
        y = y - (alfa / beta) * r2
        r1 = r2
        r2 = y
        oldb = beta
        beta = norm2(y)
        oldeps = epsln
        delta = cs * dbar + sn * alfa
        gbar = sn * dbar - cs * alfa
        epsln = sn * beta
        dbar = -cs * beta
        gamma = max(math.hypot(gbar, beta), np.finfo(float).tiny)
        cs = gbar / gamma
        sn = beta / gamma
        phi = cs * phibar
        phibar = sn * phibar
        w1 = w2
        w2 = w
        w = (v - oldeps * w1 - delta * w2) / gamma
        x = x + phi * w
        rn = phibar
        if k % RECOMPUTE_EVERY == 0:
            rn = norm2(b - op.apply(x))
        if k % cfg.trace_every == 0 or k == cfg.max_iterations or beta == 0.0:
            xn = norm2(x)
            stop = None
            if rn == 0.0 or (beta == 0.0 and rn <= 1e-15 * beta1):
                stop = Termination.EXACT_SOLUTION
            elif xn > 0.0 and rn < cfg.berr_tolerance * s * xn:
                stop = Termination.TOLERANCE_REACHED
            elif beta == 0.0:
                stop = Termination.BREAKDOWN
            if xn > 0.0:
                trace.record(k, _traced_residual(op, b, x, rn, trace_vs), xn, t0)
            if stop is not None:
                termination = stop
                break
    return SolveResult(x, trace, termination, s, k)


def lsqr(op, b, config=None, opnorm=None):
    """LSQR over the shared bidiagonalization (plain recurrence, no stored
    bases). Traces berr with the recursive residual-norm estimate, refreshed
    exactly every RECOMPUTE_EVERY iterations."""
    cfg = config or SolverConfig()
    b = _check_rhs(op, b)
    s = float(op.opnorm() if opnorm is None else opnorm)
    state = BidiagState(op, b, opnorm=s, reorth="plain", store_basis=False)
    t0 = time.perf_counter_ns()
    trace = SolveTrace(opnorm=s)
    x = np.zeros(op.cols)
    w = state.q_latest().copy()
    phibar = state.beta1
    rhobar = state.alphas[0]
    termination = Termination.MAX_ITERATIONS
    k = 0
    for k in range(1, cfg.max_iterations + 1):
        state.step()
        beta_next = state.betas[k - 1]
        alpha_next = state.alphas[k] if len(state.alphas) > k else 0.0
        rho = max(math.hypot(rhobar, beta_next), np.finfo(float).tiny)
        c = rhobar / rho
        sn = beta_next / rho
        theta = sn * alpha_next
        rhobar = -c * alpha_next
        phi = c * phibar
        phibar = sn * phibar
        x = x + (phi / rho) * w
        if not state.breakdown:
            w = state.q_latest() - (theta / rho) * w
        rn = phibar
        if k % RECOMPUTE_EVERY == 0:
            rn = norm2(op.apply(x) - b)
        if k % cfg.trace_every == 0 or k == cfg.max_iterations or state.breakdown:
            xn = norm2(x)
            stop = None
            if rn == 0.0 or (state.breakdown and rn <= 1e-15 * state.beta1):
                stop = Termination.EXACT_SOLUTION
            elif xn > 0.0 and rn < cfg.berr_tolerance * s * xn:
                stop = Termination.TOLERANCE_REACHED
            elif state.breakdown:
                stop = Termination.BREAKDOWN
            if xn > 0.0:
                trace.record(k, rn, xn, t0)
            if stop is not None:
                termination = stop
                break
    return SolveResult(x, trace, termination, s, k)


def regularized_solve(op, b, k, inner="cg", opnorm=None, trace_every=1, seed=0):
    """Solve (A + delta I) x = b with delta = 2 (ln k / k)^2 ||A||_2 for k
    inner CG or MINRES steps; the shift makes the inner system well enough
    conditioned that the returned x carries the certified backward-error bound
    5 (ln k / k)^2 against the original A.

    Requires symmetric PSD A and k >= 9. The trace reports berr against the
    original operator (one extra matvec per recorded row).
    """
    if k < 9:
        raise ValueError("the shift schedule needs k >= 9")
    if not op.symmetric:
        raise RequiresSymmetricError("regularized_solve expects symmetric PSD A")
    if inner not in ("cg", "minres"):
        raise ValueError(f"unknown inner solver {inner!r}")
    b = _check_rhs(op, b)
    s = float(op.opnorm() if opnorm is None else opnorm)
    ratio_sq = (math.log(k) / k) ** 2
    shift = 2.0 * ratio_sq * s
    shifted = ShiftedOperator(op, shift)
    shifted.set_opnorm(s + shift)  # exact for PSD A
    cfg = SolverConfig(
        step_constant=1.0,
        max_iterations=k,
        berr_tolerance=1e-300,  # run all k steps unless the residual hits 0
        trace_every=trace_every,
        seed=seed,
    )
    solver = cg if inner == "cg" else minres
    res = solver(shifted, b, cfg, opnorm=s + shift, trace_vs=(op, s))
    return SolveResult(
        x=res.x,
        trace=res.trace,
        termination=res.termination,
        opnorm_used=s,
        iterations=res.iterations,
        certified_berr_bound=5.0 * ratio_sq,
    )
