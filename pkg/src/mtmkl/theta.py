"""Closed-form minimizers of a linear objective over mixed-norm regions.

These solve min c'theta subject to theta >= 0 and an Lp ball, an Lp-Lq
group ball, or the composite common/independent/partially-shared regions
built from them.

One deliberate departure from the published closed form: for p > 1,
q = 1 the whole budget must go to the group with the LARGEST dual norm
||max(-c^t, 0)||_{p/(p-1)}, not the smallest.  Each group's best
attainable contribution is -sigma^t * ||max(-c^t,0)||_{p/(p-1)}, so
minimizing the total means spending the budget where that norm is
largest.  The argmin variant is a sign slip in the source derivation;
the exhaustive-budget oracle in the test suite confirms argmax.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FeasibleRegion",
    "ThetaState",
    "solve_lp_ball",
    "solve_lplq",
    "solve_region",
]

# exponents r = 1/(p-1) explode as p -> 1; snap to the exact p = 1 branch
_P_ONE_TOL = 1e-9


@dataclass(frozen=True)
class FeasibleRegion:
    """Declarative feasible set for the kernel weights.

    variant: "lp_ball"  - single group, ||theta||_p <= radius
             "lplq"     - T groups, (sum_t ||theta^t||_p^q)^(1/q) <= radius
             "cs"       - theta^t = zeta for all t, ||zeta||_p <= 1
             "is"       - per-task ||theta^t||_p <= 1
             "pscs"     - theta^t = zeta + gamma^t, ||zeta||_p <= 1,
                          (sum_t ||gamma^t||_p^q)^(1/q) <= gamma_radius
    All variants additionally require theta >= 0.
    """

    variant: str
    p: float = 2.0
    q: float = 1.0
    radius: float = 1.0
    gamma_radius: float = 1.0  # pscs only; 0 collapses pscs to cs

    def __post_init__(self):
        if self.variant not in ("lp_ball", "lplq", "cs", "is", "pscs"):
            raise ValueError(f"unknown region variant: {self.variant!r}")
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.q < 1:
            raise ValueError("q must be >= 1")
        if self.radius <= 0:
            raise ValueError("radius must be > 0")
        if self.gamma_radius < 0:
            raise ValueError("gamma radius must be >= 0")

    def feasibility_violation(self, state: "ThetaState") -> float:
        """Max constraint violation of a ThetaState (0 when feasible)."""
        theta = state.theta
        v = max(0.0, float(-np.min(theta)))
        p, q = self.p, self.q
        if self.variant == "lp_ball":
            v = max(v, _norm(theta.ravel(), p) - self.radius)
        elif self.variant == "lplq":
            v = max(v, _group_norm(theta, p, q) - self.radius)
        elif self.variant == "cs":
            v = max(v, _norm(theta[0], p) - self.radius)
            v = max(v, float(np.max(np.abs(theta - theta[0][None, :]))))
        elif self.variant == "is":
            for t in range(theta.shape[0]):
                v = max(v, _norm(theta[t], p) - self.radius)
        else:  # pscs
            v = max(v, _norm(state.zeta, p) - self.radius)
            v = max(v, _group_norm(state.gamma, p, q) - self.gamma_radius)
            v = max(v, float(np.max(np.abs(theta - state.zeta[None, :] - state.gamma))))
        return v


@dataclass
class ThetaState:
    """Current kernel-weight iterate, with the zeta/gamma split for pscs/cs."""

    theta: np.ndarray  # T x M
    zeta: np.ndarray | None = None  # M
    gamma: np.ndarray | None = None  # T x M
    omega: float = 0.0

    def copy(self) -> "ThetaState":
        return ThetaState(
            theta=self.theta.copy(),
            zeta=None if self.zeta is None else self.zeta.copy(),
            gamma=None if self.gamma is None else self.gamma.copy(),
            omega=self.omega,
        )


def _norm(v: np.ndarray, p: float) -> float:
    if p == 1:
        return float(np.sum(np.abs(v)))
    return float(np.sum(np.abs(v) ** p) ** (1.0 / p))


def _group_norm(theta: np.ndarray, p: float, q: float) -> float:
    g = np.array([_norm(theta[t], p) for t in range(theta.shape[0])])
    return _norm(g, q)


def _snap(x: float) -> float:
    return 1.0 if abs(x - 1.0) <= _P_ONE_TOL else x


def solve_lp_ball(c: np.ndarray, p: float, a: float = 1.0) -> np.ndarray:
    """argmin c'theta over {theta >= 0, ||theta||_p <= a}.

    With any negative coefficient the ball constraint is active; the
    minimizer points along max(-c, 0) raised to 1/(p-1) (all mass on the
    most negative coordinate when p = 1).  c >= 0 gives theta = 0.
    """
    c = np.asarray(c, dtype=float)
    if not np.all(np.isfinite(c)):
        raise ValueError("coefficients must be finite")
    p = _snap(p)
    if p < 1:
        raise ValueError("p must be >= 1")
    if a <= 0:
        raise ValueError("radius must be > 0")
    ct = np.maximum(-c, 0.0)
    if not ct.any():
        return np.zeros_like(c)
    if p == 1:
        theta = np.zeros_like(c)
        theta[int(np.argmin(c))] = a
        return theta
    r = 1.0 / (p - 1.0)
    ct = ct / ct.max()  # the direction is 0-homogeneous in c; avoid underflow
    powed = ct ** r
    denom = np.sum(ct ** (r + 1.0)) ** (r / (r + 1.0))  # ||ct||_{r+1}^r
    return a * powed / denom


def solve_lplq(c: np.ndarray, p: float, q: float, a: float = 1.0) -> np.ndarray:
    """argmin sum_t c^t.theta^t over {theta >= 0, (sum_t ||theta^t||_p^q)^(1/q) <= a}.

    c is T x M.  Groups with no negative coefficient get exactly zero.
    Group budgets sigma^t follow the dual-norm allocation; see the module
    docstring for the p > 1, q = 1 argmax correction.
    """
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[1] == 0:
        raise ValueError("c must be a T x M matrix with nonempty groups")
    if not np.all(np.isfinite(c)):
        raise ValueError("coefficients must be finite")
    p, q = _snap(p), _snap(q)
    if p < 1 or q < 1:
        raise ValueError("p and q must be >= 1")
    if a <= 0:
        raise ValueError("radius must be > 0")
    T = c.shape[0]
    theta = np.zeros_like(c)
    ct = np.maximum(-c, 0.0)
    if not ct.any():
        return theta
    ct = ct / ct.max()  # the solution is 0-homogeneous in c; avoid underflow

    if p > 1:
        r = 1.0 / (p - 1.0)
        dual = np.sum(ct ** (r + 1.0), axis=1) ** (1.0 / (r + 1.0))  # ||ct^t||_{r+1}
        if q == 1:
            t0 = int(np.argmax(dual))  # largest dual norm wins the whole budget
            theta[t0] = solve_lp_ball(c[t0], p, a)
            return theta
        s = 1.0 / (q - 1.0)
        denom = np.sum(dual ** (s + 1.0)) ** (1.0 / q)
        for t in range(T):
            if dual[t] > 0.0:
                sigma = a * dual[t] ** s / denom
                theta[t] = sigma * (ct[t] ** r) / dual[t] ** r
        return theta

    # p = 1: each group puts its mass on its most negative coordinate
    idx = np.argmin(c, axis=1)
    best = np.maximum(-c[np.arange(T), idx], 0.0)
    if q == 1:
        t0 = int(np.argmax(best))
        theta[t0, idx[t0]] = a
        return theta
    s = 1.0 / (q - 1.0)
    denom = np.sum(best ** (s + 1.0)) ** (1.0 / q)
    for t in range(T):
        if best[t] > 0.0:
            theta[t, idx[t]] = a * best[t] ** s / denom
    return theta


def solve_region(c: np.ndarray, region: FeasibleRegion) -> ThetaState:
    """Minimize sum_t c^t.theta^t over the declared region, in closed form.

    cs aggregates the groups into one Lp-ball solve; is solves per task;
    pscs separates exactly into the zeta ball plus the gamma group ball
    (the objective is (sum_t c^t)'zeta + sum_t c^t.gamma^t with
    independent constraints, so one pass is exact).
    """
    c = np.asarray(c, dtype=float)
    if c.ndim != 2:
        raise ValueError("c must be T x M")
    T, M = c.shape
    if region.variant == "lp_ball":
        if T != 1:
            raise ValueError("lp_ball region expects a single group")
        return ThetaState(theta=solve_lp_ball(c[0], region.p, region.radius)[None, :])
    if region.variant == "lplq":
        return ThetaState(theta=solve_lplq(c, region.p, region.q, region.radius))
    if region.variant == "cs":
        zeta = solve_lp_ball(c.sum(axis=0), region.p, region.radius)
        return ThetaState(theta=np.tile(zeta, (T, 1)), zeta=zeta)
    if region.variant == "is":
        theta = np.vstack([solve_lp_ball(c[t], region.p, region.radius) for t in range(T)])
        return ThetaState(theta=theta)
    # pscs
    zeta = solve_lp_ball(c.sum(axis=0), region.p, region.radius)
    if region.gamma_radius > 0:
        gamma = solve_lplq(c, region.p, region.q, region.gamma_radius)
    else:
        gamma = np.zeros_like(c)
    return ThetaState(theta=zeta[None, :] + gamma, zeta=zeta, gamma=gamma)


def initial_state(region: FeasibleRegion, T: int, M: int,
                  rng: np.random.Generator | None = None) -> ThetaState:
    """Deterministic uniform feasible start, or a seeded random one.

    Uniform: every coordinate of the relevant block at radius * M^(-1/p)
    (scaled by T^(-1/q) for grouped constraints); pscs starts with
    gamma = 0 so the tasks begin fully shared.
    """
    p, q = _snap(region.p), _snap(region.q)
    if rng is None:
        u = np.full(M, region.radius * M ** (-1.0 / p))
        if region.variant == "lp_ball":
            return ThetaState(theta=u[None, :])
        if region.variant == "lplq":
            return ThetaState(theta=np.tile(u * T ** (-1.0 / q), (T, 1)))
        if region.variant == "is":
            return ThetaState(theta=np.tile(u, (T, 1)))
        # cs / pscs
        state = ThetaState(theta=np.tile(u, (T, 1)), zeta=u.copy())
        if region.variant == "pscs":
            state.gamma = np.zeros((T, M))
        return state

    def random_in_ball(shape, p_, scale):
        v = rng.uniform(0.1, 1.0, size=shape)
        return scale * v / _norm(v.ravel(), p_)

    if region.variant == "lp_ball":
        return ThetaState(theta=random_in_ball((1, M), p, region.radius))
    if region.variant == "lplq":
        theta = rng.uniform(0.1, 1.0, size=(T, M))
        return ThetaState(theta=theta * (region.radius / _group_norm(theta, p, q)))
    if region.variant == "is":
        theta = np.vstack([random_in_ball(M, p, region.radius) for _ in range(T)])
        return ThetaState(theta=theta)
    zeta = random_in_ball(M, p, region.radius)
    state = ThetaState(theta=np.tile(zeta, (T, 1)), zeta=zeta)
    if region.variant == "pscs":
        state.gamma = np.zeros((T, M))
    return state


def blend_states(state: ThetaState, target: ThetaState, eps: float) -> ThetaState:
    """Convex combination state + eps*(target - state), blockwise.

    Both endpoints feasible and the regions convex, so the blend stays
    feasible for any eps in [0, 1].
    """
    out = ThetaState(theta=(1 - eps) * state.theta + eps * target.theta)
    if state.zeta is not None and target.zeta is not None:
        out.zeta = (1 - eps) * state.zeta + eps * target.zeta
    if state.gamma is not None and target.gamma is not None:
        out.gamma = (1 - eps) * state.gamma + eps * target.gamma
    out.omega = (1 - eps) * state.omega + eps * target.omega
    return out
