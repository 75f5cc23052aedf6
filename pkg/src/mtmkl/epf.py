"""Exact-penalty descent driver for the min-max kernel-weight problem.

Each outer iteration maximizes the T duals at the current weights,
minimizes the resulting linear surrogate over the feasible region in
closed form, and moves along the convex-combination direction with a
backtracking step accepted by a sufficient-decrease ratio test on the
true penalty value.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .kernels import KernelBank
from .learners import DualSolution, LearnerKind, LinearizedObjective, linearize, solve_all_tasks
from .theta import FeasibleRegion, ThetaState, blend_states, initial_state, solve_region

__all__ = [
    "SolverConfig",
    "IterationTrace",
    "FitResult",
    "inner_value",
    "epf_value",
    "descent_direction",
    "directional_derivative",
    "line_search",
    "fit",
    "LineSearchStalled",
]

_STATIONARY_TOL = 1e-12


class LineSearchStalled(Warning):
    pass


@dataclass
class SolverConfig:
    """Penalty/descent knobs.

    eta is accepted for interface completeness but unused: every
    supported dual is concave, so the inner problem has one global
    maximizer and no near-active set to track.  fixed_step, when set,
    disables the line search and uses that step every iteration (step 1
    makes the loop coincide with plain block-coordinate alternation).
    """

    nu: float = 2.0
    eta: float = 1e-3
    eps0: float = 0.1
    beta: float = 0.5
    sigma: float = 0.1
    tol_rel: float = 1e-4
    tol_inner: float = 1e-6
    max_outer: int = 200
    max_backtracks: int = 30
    seed: int | None = None
    random_init: bool = False
    fixed_step: float | None = None

    def __post_init__(self):
        if self.nu <= 1:
            raise ValueError("penalty nu must be > 1")
        if not 0 < self.beta < 1:
            raise ValueError("beta must be in (0, 1)")
        if not 0 < self.sigma < 1:
            raise ValueError("sigma must be in (0, 1)")
        if not 0 < self.eps0 <= 1:
            raise ValueError("eps0 must be in (0, 1]")
        if self.fixed_step is not None and not 0 < self.fixed_step <= 1:
            raise ValueError("fixed_step must be in (0, 1]")


@dataclass
class IterationTrace:
    """Per-iteration descent records, exportable as CSV."""

    rows: list[dict] = field(default_factory=list)

    COLUMNS = ("iteration", "omega", "inner_value", "penalty",
               "directional_derivative", "step", "backtracks", "theta_change", "nu")

    def record(self, **kw) -> None:
        self.rows.append(kw)

    def write_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=self.COLUMNS)
            w.writeheader()
            for row in self.rows:
                w.writerow({k: row[k] for k in self.COLUMNS})


@dataclass
class FitResult:
    state: ThetaState
    duals: DualSolution
    trace: IterationTrace
    converged: bool
    iterations: int
    final_penalty: float
    warning: str | None = None


def inner_value(state: ThetaState, bank: KernelBank, kind: LearnerKind,
                labels, tol: float,
                warm: DualSolution | None = None) -> tuple[float, DualSolution]:
    """Total maximized dual value V(theta) and the per-task maximizers."""
    duals = solve_all_tasks(kind, bank, state.theta, labels, tol, warm=warm)
    return duals.total, duals


def epf_value(omega: float, V: float, nu: float) -> float:
    """Penalty value omega + nu * max(0, V - omega)."""
    return omega + nu * max(0.0, V - omega)


def descent_direction(state: ThetaState, duals: DualSolution, bank: KernelBank,
                      kind: LearnerKind, labels,
                      region: FeasibleRegion) -> tuple[ThetaState, LinearizedObjective]:
    """Closed-form minimizer of the current linear surrogate, with its omega."""
    lin = linearize(kind, duals, bank, labels)
    target = solve_region(lin.c, region)
    target.omega = lin.value(target.theta)
    return target, lin


def directional_derivative(omega: float, theta: np.ndarray, omega_hat: float,
                           theta_hat: np.ndarray, lin: LinearizedObjective,
                           nu: float) -> float:
    """Directional derivative of the penalty along x_hat - x_k.

    Nonpositive whenever theta_hat minimizes the surrogate and nu > 1.
    """
    g_cur = lin.value(theta) - omega
    g_hat = lin.value(theta_hat) - omega_hat
    return (omega_hat + nu * max(0.0, g_hat)) - (omega + nu * max(0.0, g_cur))


def line_search(state: ThetaState, target: ThetaState, G: float, P_cur: float,
                config: SolverConfig, evaluator) -> tuple[float, ThetaState, float, object]:
    """Largest step in {1, beta, beta^2, ...} passing the ratio test.

    evaluator(trial_state) must return (P, V, duals) with P the exact
    penalty at the trial point (the T inner problems re-solved).  Raises
    LineSearchStalled (as a warning-carrying exception via RuntimeError
    semantics) after max_backtracks rejections.
    """
    if G >= 0:
        raise ValueError("line search requires a strict descent direction (G < 0)")
    eps = 1.0
    for _ in range(config.max_backtracks):
        trial = blend_states(state, target, eps)
        P_trial, V_trial, duals_trial = evaluator(trial)
        if (P_trial - P_cur) / (eps * G) >= config.sigma:
            return eps, trial, P_trial, (V_trial, duals_trial)
        eps *= config.beta
    raise _Stalled()


class _Stalled(Exception):
    pass


def fit(bank: KernelBank, kind: LearnerKind, labels, region: FeasibleRegion,
        config: SolverConfig | None = None,
        trace_path=None) -> FitResult:
    """Run the full descent loop until the iterate stalls or converges.

    labels: per-task label vectors (None entries for svdd/ocsvm).
    Convergence: stationary direction, relative weight change below
    tol_rel, or relative penalty decrease below tol_rel.  If the penalty
    residual V - omega has not vanished at the end, the loop reruns once
    with nu scaled by 10.
    """
    config = config or SolverConfig()
    T, M = bank.n_tasks, bank.n_kernels
    rng = np.random.default_rng(config.seed) if config.random_init else None
    state = initial_state(region, T, M, rng=rng)

    result = _descend(bank, kind, labels, region, config, state, config.nu)

    V = result.duals.total
    omega = result.state.omega
    if V - omega > 1e-6 * (1.0 + abs(omega)):
        # penalty not exact at this nu; one retry at nu*10 from where we stopped
        retry = _descend(bank, kind, labels, region,
                         config, result.state, config.nu * 10.0)
        retry.trace.rows = result.trace.rows + retry.trace.rows
        retry.iterations += result.iterations
        result = retry

    if trace_path is not None:
        result.trace.write_csv(trace_path)
    return result


def _descend(bank, kind, labels, region, config, state, nu) -> FitResult:
    trace = IterationTrace()
    V, duals = inner_value(state, bank, kind, labels, config.tol_inner)
    state = state.copy()
    state.omega = V  # start with zero penalty
    P = epf_value(state.omega, V, nu)
    converged = False
    warning = None

    def evaluator(trial: ThetaState):
        V_t, duals_t = inner_value(trial, bank, kind, labels, config.tol_inner, warm=duals)
        return epf_value(trial.omega, V_t, nu), V_t, duals_t

    k = 0
    for k in range(1, config.max_outer + 1):
        target, lin = descent_direction(state, duals, bank, kind, labels, region)
        G = directional_derivative(state.omega, state.theta, target.omega,
                                   target.theta, lin, nu)
        if G >= -_STATIONARY_TOL:
            converged = True
            trace.record(iteration=k, omega=state.omega, inner_value=V, penalty=P,
                         directional_derivative=G, step=0.0, backtracks=0,
                         theta_change=0.0, nu=nu)
            break

        if config.fixed_step is not None:
            eps = config.fixed_step
            new_state = blend_states(state, target, eps)
            P_new, V_new, duals_new = evaluator(new_state)
            backtracks = 0
        else:
            try:
                eps, new_state, P_new, (V_new, duals_new) = line_search(
                    state, target, G, P, config, evaluator)
                backtracks = int(round(np.log(eps) / np.log(config.beta))) if eps < 1 else 0
            except _Stalled:
                warning = "line search stalled; treating current iterate as converged"
                warnings.warn(warning, LineSearchStalled)
                converged = True
                break

        dtheta = float(np.linalg.norm(new_state.theta - state.theta))
        trace.record(iteration=k, omega=new_state.omega, inner_value=V_new,
                     penalty=P_new, directional_derivative=G, step=eps,
                     backtracks=backtracks, theta_change=dtheta, nu=nu)

        rel_theta = dtheta / max(1.0, float(np.linalg.norm(state.theta)))
        rel_P = abs(P - P_new) / max(1.0, abs(P))
        state, duals, V, P = new_state, duals_new, V_new, P_new
        if rel_theta < config.tol_rel or rel_P < config.tol_rel:
            converged = True
            break

    if not converged:
        warning = f"iteration cap {config.max_outer} reached before convergence"
        warnings.warn(warning)

    # final duals re-solved at the final weights
    V, duals = inner_value(state, bank, kind, labels, config.tol_inner, warm=duals)
    P = epf_value(state.omega, V, nu)
    return FitResult(state=state, duals=duals, trace=trace, converged=converged,
                     iterations=k, final_penalty=P, warning=warning)
