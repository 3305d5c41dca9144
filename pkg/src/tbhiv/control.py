"""Optimal treatment allocation by the forward-backward sweep.

The controls are the fractions of co-infected active cases (I_TH) sent to
joint TB/HIV treatment (u1) and to TB-only treatment (u2), constrained to
the triangle u1, u2 >= 0, u1 + u2 <= 0.95.  The Hamiltonian is quadratic
and separable in the controls, so its pointwise minimizer over the triangle
has a closed form.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .integrate import TimeGrid, Trajectory, integrate_backward, integrate_forward
from .model import (
    A, A_T, C_H, I_TH, N_STATES, R_H, DomainError, Params, _checked, rhs_controlled,
)

log = logging.getLogger(__name__)

U_MAX = 0.95
VARIANTS = ("J", "J1", "J2", "J3")


@dataclass(frozen=True)
class CostSpec:
    """Cost functional variant and control weights.

    ``J``  : A_T + W1/2 u1^2 + W2/2 u2^2
    ``J1`` : A + A_T + W1/2 u1^2 + W2/2 u2^2
    ``J2`` : A + A_T + W1/2 u1^2, u2 held at ``frozen``
    ``J3`` : A + A_T + W2/2 u2^2, u1 held at ``frozen``
    """

    variant: str = "J"
    W1: float = 50.0
    W2: float = 50.0
    frozen: float = 0.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown cost variant {self.variant!r}; expected one of {VARIANTS}")
        if self.W1 < 0 or self.W2 < 0:
            raise ValueError("cost weights must be non-negative")
        if self.uses_u1 and self.W1 == 0 or self.uses_u2 and self.W2 == 0:
            raise ValueError("zero weight on an active control: minimizer is not unique")
        if not 0 <= self.frozen <= U_MAX:
            raise ValueError(f"frozen control value must lie in [0, {U_MAX}]")

    @property
    def uses_u1(self) -> bool:
        return self.variant != "J3"

    @property
    def uses_u2(self) -> bool:
        return self.variant != "J2"

    @property
    def counts_aids(self) -> bool:
        return self.variant != "J"

    def integrand(self, x, u1, u2):
        """Running cost; ``x`` may be one state or a stack of states."""
        x = np.asarray(x, dtype=float)
        val = x[..., A_T] + (x[..., A] if self.counts_aids else 0.0)
        if self.uses_u1:
            val = val + 0.5 * self.W1 * np.square(u1)
        if self.uses_u2:
            val = val + 0.5 * self.W2 * np.square(u2)
        return val


def is_feasible(u1, u2) -> bool:
    u1, u2 = np.asarray(u1), np.asarray(u2)
    return bool(np.all(u1 >= 0) and np.all(u2 >= 0) and np.all(u1 + u2 <= U_MAX))


def hamiltonian(x, lam, u1: float, u2: float, cost: CostSpec, params: Params) -> float:
    return float(cost.integrand(x, u1, u2) + np.dot(lam, rhs_controlled(x, u1, u2, params)))


def _adjoint_rhs(v: list[float], lam: np.ndarray, u1: float, u2: float,
                 cost: CostSpec, P: Params) -> np.ndarray:
    s, lt, it, rr, ih, a, ch, lth, ith, rh, at = v
    n = s + lt + it + rr + ih + a + ch + lth + ith + rh + at
    (l_s, l_lt, l_it, l_r, l_ih, l_a, l_ch,
     l_lth, l_ith, l_rh, l_at) = lam.tolist()
    mu = P.mu
    foi_t = P.beta1 * (it + ith + at) / n
    foi_h = P.beta2 * (ih + ith + lth + rh + P.eta_C * ch + P.eta_A * (a + at)) / n

    # <lam, f> = (terms linear in x) + foi_t * g_t(x) + foi_h * g_h(x)
    g_t = (s * (l_lt - l_s) + P.beta1p * rr * (l_lt - l_r)
           + P.psi * ih * (l_ith - l_ih) + P.beta2p * rh * (l_lth - l_rh))
    g_h = s * (l_ih - l_s) + P.delta * it * (l_ith - l_it) + rr * (l_ih - l_r)

    # d foi / dx_j = (beta * weight_j - foi) / N: the -foi/N part hits every state
    common = -(g_t * foi_t + g_h * foi_h) / n
    bt = g_t * P.beta1 / n
    bh = g_h * P.beta2 / n

    grad = np.array([
        -mu * l_s + foi_t * (l_lt - l_s) + foi_h * (l_ih - l_s),
        -(P.k1 + P.tau1 + mu) * l_lt + P.k1 * l_it + P.tau1 * l_r,
        -(P.tau2 + P.d_T + mu) * l_it + P.tau2 * l_r
        + foi_h * P.delta * (l_ith - l_it) + bt,
        -mu * l_r + foi_t * P.beta1p * (l_lt - l_r) + foi_h * (l_ih - l_r),
        -(P.rho1 + P.phi + mu) * l_ih + P.rho1 * l_a + P.phi * l_ch
        + foi_t * P.psi * (l_ith - l_ih) + bh,
        P.alpha1 * l_ih - (P.alpha1 + mu + P.d_A) * l_a + bh * P.eta_A,
        P.omega1 * l_ih - (P.omega1 + mu) * l_ch + bh * P.eta_C,
        P.r * P.tau3 * l_ch - (P.k2 + P.tau3 + mu) * l_lth + P.k2 * l_ith
        + (1 - P.r) * P.tau3 * l_rh + bh,
        P.rho2 * (u1 * l_ch + u2 * l_rh + (1 - u1 - u2) * l_at)
        - (P.rho2 + mu + P.d_T) * l_ith + bt + bh,
        P.omega2 * l_a - (P.omega2 + mu) * l_rh
        + foi_t * P.beta2p * (l_lth - l_rh) + bh,
        P.alpha2 * l_ith - (P.alpha2 + mu + P.d_TA) * l_at + bt + bh * P.eta_A,
    ])
    grad += common
    grad[A_T] += 1.0
    if cost.counts_aids:
        grad[A] += 1.0
    return -grad


def adjoint_rhs(x, lam, u1: float, u2: float, cost: CostSpec, params: Params) -> np.ndarray:
    """Costate derivative -dH/dx, including the dependence of both forces
    of infection on the total population."""
    v = _checked(x, N_STATES)
    return _adjoint_rhs(v, np.asarray(lam, dtype=float), u1, u2, cost, params)


def switching_coefficients(x, lam, params: Params):
    """Linear coefficients of u1 and u2 in the Hamiltonian.

    dH/du1 = W1 u1 + a1 and dH/du2 = W2 u2 + a2 with
    a1 = rho2 I_TH (lam_CH - lam_AT), a2 = rho2 I_TH (lam_RH - lam_AT).
    Works on single nodes or stacked arrays.
    """
    x, lam = np.asarray(x, dtype=float), np.asarray(lam, dtype=float)
    flux = params.rho2 * x[..., I_TH]
    return flux * (lam[..., C_H] - lam[..., A_T]), flux * (lam[..., R_H] - lam[..., A_T])


def project_triangle(c1, c2, w1: float, w2: float, cap: float = U_MAX):
    """Minimize w1/2 (u1-c1)^2 + w2/2 (u2-c2)^2 over u >= 0, u1 + u2 <= cap.

    KKT: u_i = max(0, c_i - nu / w_i) with nu >= 0 the multiplier of the sum
    constraint.  Vectorized over arrays of targets.
    """
    c1, c2 = np.broadcast_arrays(np.asarray(c1, dtype=float), np.asarray(c2, dtype=float))
    u1 = np.maximum(c1, 0.0)
    u2 = np.maximum(c2, 0.0)
    over = u1 + u2 > cap
    if np.any(over):
        # both coordinates positive on the line
        nu = (c1 + c2 - cap) / (1.0 / w1 + 1.0 / w2)
        b1 = c1 - nu / w1
        b2 = c2 - nu / w2
        # one coordinate pinned at zero: the other takes the whole cap
        v1 = np.where(b2 <= 0, cap, np.where(b1 <= 0, 0.0, b1))
        v2 = np.where(b2 <= 0, 0.0, np.where(b1 <= 0, cap, b2))
        u1 = np.where(over, v1, u1)
        u2 = np.where(over, v2, u2)
        # exact feasibility after floating-point arithmetic
        excess = u1 + u2 - cap
        fix = excess > 0
        if np.any(fix):
            u2 = np.where(fix, np.maximum(cap - u1, 0.0), u2)
            u1 = np.where(fix & (u1 > cap), cap, u1)
    if u1.ndim == 0:
        return float(u1), float(u2)
    return u1, u2


def pointwise_minimizer(x, lam, cost: CostSpec, params: Params):
    """Minimizer of the Hamiltonian over the admissible triangle.

    Accepts single nodes or stacked node arrays.  For single-control
    variants the inactive control stays at ``cost.frozen`` and the active
    one is clipped to [0, 0.95 - frozen].
    """
    a1, a2 = switching_coefficients(x, lam, params)
    if cost.variant == "J2":
        u1 = np.clip(-a1 / cost.W1, 0.0, U_MAX - cost.frozen)
        u2 = np.full_like(u1, cost.frozen)
    elif cost.variant == "J3":
        u2 = np.clip(-a2 / cost.W2, 0.0, U_MAX - cost.frozen)
        u1 = np.full_like(u2, cost.frozen)
    else:
        return project_triangle(-a1 / cost.W1, -a2 / cost.W2, cost.W1, cost.W2)
    if np.ndim(u1) == 0:
        return float(u1), float(u2)
    return u1, u2


def evaluate_cost(state: Trajectory, controls, cost: CostSpec) -> float:
    """Composite trapezoid rule for the running cost on the state grid."""
    controls = np.asarray(controls, dtype=float)
    if controls.shape != (state.grid.n_steps + 1, 2):
        raise ValueError("controls must hold one (u1, u2) row per grid node")
    f = cost.integrand(state.values, controls[:, 0], controls[:, 1])
    return float(state.grid.h * (f.sum() - 0.5 * (f[0] + f[-1])))


def simulate_controlled(x0, params: Params, grid: TimeGrid, controls) -> Trajectory:
    """State trajectory under a piecewise-constant control path."""
    def f(t, x, u):
        return rhs_controlled(x, u[0], u[1], params)
    return integrate_forward(f, x0, grid, controls=controls)


def solve_adjoint(state: Trajectory, params: Params, cost: CostSpec, controls) -> Trajectory:
    def g(t, lam, x, u):
        return _adjoint_rhs(_checked(x, N_STATES), lam, u[0], u[1], cost, params)
    return integrate_backward(g, np.zeros(N_STATES), state, state.grid, controls=controls)


def constant_controls(grid: TimeGrid, u1: float, u2: float) -> np.ndarray:
    out = np.empty((grid.n_steps + 1, 2))
    out[:, 0] = u1
    out[:, 1] = u2
    return out


@dataclass
class SweepOptions:
    omega: float = 0.5
    tol: float = 1e-4
    max_iter: int = 500
    update: bool = True
    initial: np.ndarray | None = None  # (n+1, 2); defaults to (p, q) clipped to the triangle


@dataclass
class SweepResult:
    controls: np.ndarray
    state: Trajectory
    adjoint: Trajectory
    cost: float
    iterations: int
    converged: bool
    rel_change: float
    initial_cost: float
    cost_spec: CostSpec
    history: list = field(default_factory=list)

    @property
    def u1(self) -> np.ndarray:
        return self.controls[:, 0]

    @property
    def u2(self) -> np.ndarray:
        return self.controls[:, 1]


def _initial_controls(params: Params, cost: CostSpec, grid: TimeGrid) -> np.ndarray:
    u1, u2 = params.p, params.q
    if cost.variant == "J2":
        u2 = cost.frozen
    elif cost.variant == "J3":
        u1 = cost.frozen
    if u1 + u2 > U_MAX or u1 < 0 or u2 < 0:
        u1, u2 = project_triangle(u1, u2, 1.0, 1.0)
    return constant_controls(grid, u1, u2)


def _rel_change(new, old) -> float:
    worst = 0.0
    for k in range(2):
        scale = np.max(np.abs(new[:, k]))
        diff = np.max(np.abs(new[:, k] - old[:, k]))
        if diff == 0:
            continue
        worst = max(worst, diff / scale if scale > 0 else np.inf)
    return worst


def fbsm_solve(x0, params: Params, cost: CostSpec, grid: TimeGrid,
               options: SweepOptions | None = None) -> SweepResult:
    """Forward-backward sweep for the optimal treatment allocation.

    Each iteration integrates the state forward, the costate backward from
    zero, takes the pointwise Hamiltonian minimizer at every node and
    relaxes toward it: u <- (1 - omega) u + omega u_candidate.  Stops when
    the max-norm relative change of both controls drops below ``tol``.

    A converged sweep returns its final iterate unless that costs more than
    the starting controls; otherwise the cheapest iterate seen is returned.
    Non-convergence is reported through ``converged`` rather than raised.
    """
    opts = options or SweepOptions()
    if opts.initial is None:
        u = _initial_controls(params, cost, grid)
    else:
        u = np.array(opts.initial, dtype=float)
        if u.shape != (grid.n_steps + 1, 2):
            raise ValueError("initial controls must hold one row per grid node")
        if not is_feasible(u[:, 0], u[:, 1]) and opts.update:
            raise DomainError("initial controls are not admissible")

    state = simulate_controlled(x0, params, grid, u)
    J = evaluate_cost(state, u, cost)
    adj = solve_adjoint(state, params, cost, u)
    initial_cost = J
    best = (J, u, state, adj)
    history = [J]
    converged = False
    change = np.inf
    it = 0
    if not opts.update:
        return SweepResult(u, state, adj, J, 0, True, 0.0, J, cost, history)

    while it < opts.max_iter:
        it += 1
        c1, c2 = pointwise_minimizer(state.values, adj.values, cost, params)
        cand = np.column_stack([c1, c2])
        new = (1 - opts.omega) * u + opts.omega * cand
        # convex combinations of feasible points can drift past the cap by an ulp
        new[:, 0], new[:, 1] = _snap(new[:, 0], new[:, 1], cost)
        change = _rel_change(new, u)
        u = new
        state = simulate_controlled(x0, params, grid, u)
        J = evaluate_cost(state, u, cost)
        adj = solve_adjoint(state, params, cost, u)
        history.append(J)
        log.debug("sweep %d: J = %.10g, change = %.3g", it, J, change)
        if J <= best[0]:
            best = (J, u, state, adj)
        if change < opts.tol:
            converged = True
            break

    J_best, u_best, s_best, a_best = best
    if converged and J <= initial_cost + 1e-9:
        # the converged extremal, unless it is worse than the starting point
        J_best, u_best, s_best, a_best = J, u, state, adj
    return SweepResult(u_best, s_best, a_best, J_best, it, converged, change,
                       initial_cost, cost, history)


def _snap(u1, u2, cost: CostSpec):
    if cost.variant == "J2":
        return np.clip(u1, 0.0, U_MAX - cost.frozen), np.full_like(u2, cost.frozen)
    if cost.variant == "J3":
        return np.full_like(u1, cost.frozen), np.clip(u2, 0.0, U_MAX - cost.frozen)
    u1 = np.clip(u1, 0.0, U_MAX)
    u2 = np.clip(u2, 0.0, U_MAX)
    over = u1 + u2 > U_MAX
    u2 = np.where(over, U_MAX - u1, u2)
    return u1, u2
