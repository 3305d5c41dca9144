"""State layout, parameters and right-hand sides of the TB-HIV/AIDS model.

States are plain float arrays of length 11 in the order given by
``STATE_NAMES``.  Use the index constants (``S``, ``L_T``, ...) rather
than bare integers when picking components out of a state vector.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

STATE_NAMES = ("S", "L_T", "I_T", "R", "I_H", "A", "C_H", "L_TH", "I_TH", "R_H", "A_T")
S, L_T, I_T, R, I_H, A, C_H, L_TH, I_TH, R_H, A_T = range(11)
N_STATES = 11

HIV_NAMES = ("S", "I_H", "A", "C_H")
TB_NAMES = ("S", "L_T", "I_T", "R")
HIV_INDEX = (S, I_H, A, C_H)
TB_INDEX = (S, L_T, I_T, R)

# relative size below which a negative component is treated as round-off
ROUNDOFF_FRACTION = 1e-9

# default initial compartment sizes in units of N(0)/120
INITIAL_WEIGHTS = (66, 37, 5, 2, 2, 1, 1, 2, 2, 1, 1)


class DomainError(ValueError):
    """Inputs outside the domain where the model equations make sense."""


@dataclass(frozen=True)
class Params:
    """Model parameters; defaults are the reference parameter set.

    The transmission rates ``beta1`` and ``beta2`` are scenario inputs; the
    defaults (0.6 and 0.1) are the optimal-control baseline.  Rates are per
    year.
    """

    Lambda: float = 430.0
    mu: float = 1.0 / 70.0
    beta1: float = 0.6
    beta2: float = 0.1
    eta_C: float = 0.9
    eta_A: float = 1.05
    k1: float = 0.5
    tau1: float = 2.0
    tau2: float = 1.0
    beta1p: float = 0.9
    d_T: float = 0.1
    delta: float = 1.03
    psi: float = 1.07
    phi: float = 1.0
    rho1: float = 0.1
    alpha1: float = 0.33
    omega1: float = 0.09
    d_A: float = 0.3
    rho2: float = 1.0
    p: float = 0.1
    q: float = 0.3
    tau3: float = 2.0
    k2: float = 1.3 * 0.5
    r: float = 0.3
    beta2p: float = 1.1
    omega2: float = 0.15
    alpha2: float = 0.33
    d_TA: float = 0.33

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not np.isfinite(v) or v < 0:
                raise DomainError(f"parameter {f.name} must be finite and >= 0, got {v}")
        if self.eta_A < 1 or self.delta < 1 or self.psi < 1 or self.beta2p < 1:
            raise DomainError("eta_A, delta, psi and beta2p must be >= 1")
        if self.eta_C > 1 or self.beta1p > 1:
            raise DomainError("eta_C and beta1p must be <= 1")
        if self.p + self.q > 1:
            raise DomainError(f"p + q must not exceed 1, got {self.p + self.q}")
        if self.r > 1:
            raise DomainError(f"r must not exceed 1, got {self.r}")

    def replace(self, **changes) -> "Params":
        return replace(self, **changes)

    @classmethod
    def names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


def initial_state(N0: float = 30000.0) -> np.ndarray:
    """Default initial distribution scaled to a total population ``N0``."""
    return np.array(INITIAL_WEIGHTS, dtype=float) * (N0 / 120.0)


def _checked(x, n: int) -> list[float]:
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise DomainError(f"expected a state of length {n}, got shape {x.shape}")
    total = float(x.sum())
    if not total > 0:
        raise DomainError(f"total population must be positive, got {total}")
    if x.min() < 0:
        if x.min() < -ROUNDOFF_FRACTION * total:
            bad = int(np.argmin(x))
            raise DomainError(f"negative compartment {bad} = {x[bad]:g}")
        x = np.maximum(x, 0.0)
    return x.tolist()


def _unchecked(x, n: int) -> list[float]:
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise DomainError(f"expected a state of length {n}, got shape {x.shape}")
    return x.tolist()


def force_of_infection_tb(x, params: Params) -> float:
    """TB force of infection, beta1 (I_T + I_TH + A_T) / N."""
    v = _checked(x, N_STATES)
    return params.beta1 * (v[I_T] + v[I_TH] + v[A_T]) / sum(v)


def force_of_infection_hiv(x, params: Params) -> float:
    """HIV force of infection for the full model.

    AIDS classes are weighted by ``eta_A`` and treated chronic individuals by
    ``eta_C``.
    """
    v = _checked(x, N_STATES)
    P = params
    infectious = (v[I_H] + v[I_TH] + v[L_TH] + v[R_H]
                  + P.eta_C * v[C_H] + P.eta_A * (v[A] + v[A_T]))
    return P.beta2 * infectious / sum(v)


def _full_rhs(v: list[float], u1: float, u2: float, P: Params) -> np.ndarray:
    s, lt, it, rr, ih, a, ch, lth, ith, rh, at = v
    n = s + lt + it + rr + ih + a + ch + lth + ith + rh + at
    lam_t = P.beta1 * (it + ith + at) / n
    lam_h = P.beta2 * (ih + ith + lth + rh + P.eta_C * ch + P.eta_A * (a + at)) / n
    mu = P.mu
    return np.array([
        P.Lambda - lam_t * s - lam_h * s - mu * s,
        lam_t * s + P.beta1p * lam_t * rr - (P.k1 + P.tau1 + mu) * lt,
        P.k1 * lt - (P.tau2 + P.d_T + mu + P.delta * lam_h) * it,
        P.tau1 * lt + P.tau2 * it - (P.beta1p * lam_t + lam_h + mu) * rr,
        lam_h * s - (P.rho1 + P.phi + P.psi * lam_t + mu) * ih
        + P.alpha1 * a + lam_h * rr + P.omega1 * ch,
        P.rho1 * ih + P.omega2 * rh - P.alpha1 * a - (mu + P.d_A) * a,
        P.phi * ih + u1 * P.rho2 * ith + P.r * P.tau3 * lth - (P.omega1 + mu) * ch,
        P.beta2p * lam_t * rh - (P.k2 + P.tau3 + mu) * lth,
        P.delta * lam_h * it + P.psi * lam_t * ih + P.alpha2 * at + P.k2 * lth
        - (P.rho2 + mu + P.d_T) * ith,
        u2 * P.rho2 * ith + (1 - P.r) * P.tau3 * lth - (P.beta2p * lam_t + P.omega2 + mu) * rh,
        (1 - (u1 + u2)) * P.rho2 * ith - (P.alpha2 + mu + P.d_TA) * at,
    ])


def rhs_controlled(x, u1: float, u2: float, params: Params, *, strict: bool = True) -> np.ndarray:
    """Time derivative of the full state under treatment fractions ``u1``, ``u2``.

    ``u1`` is the fraction of co-infected active cases taking TB and HIV
    treatment, ``u2`` the fraction taking TB treatment only.

    With ``strict=False`` the state is used as given: no positivity check,
    no clamping of round-off negatives.  Finite-difference Jacobians need
    this to step across the boundary of the positive orthant.
    """
    if strict:
        if not (u1 >= 0 and u2 >= 0 and u1 + u2 <= 1):
            raise DomainError(f"controls must satisfy u1, u2 >= 0 and u1 + u2 <= 1, got ({u1}, {u2})")
        v = _checked(x, N_STATES)
    else:
        v = _unchecked(x, N_STATES)
    return _full_rhs(v, u1, u2, params)


def rhs_uncontrolled(x, params: Params, *, strict: bool = True) -> np.ndarray:
    """Full model with the constant treatment fractions ``p`` and ``q``."""
    return rhs_controlled(x, params.p, params.q, params, strict=strict)


def rhs_hiv_only(x4, params: Params, *, strict: bool = True) -> np.ndarray:
    """HIV-only sub-model on (S, I_H, A, C_H)."""
    s, ih, a, ch = _checked(x4, 4) if strict else _unchecked(x4, 4)
    P = params
    n = s + ih + a + ch
    lam_h = P.beta2 * (ih + P.eta_C * ch + P.eta_A * a) / n
    return np.array([
        P.Lambda - lam_h * s - P.mu * s,
        lam_h * s - (P.rho1 + P.phi + P.mu) * ih + P.alpha1 * a + P.omega1 * ch,
        P.rho1 * ih - (P.alpha1 + P.mu + P.d_A) * a,
        P.phi * ih - (P.omega1 + P.mu) * ch,
    ])


def rhs_tb_only(x4, params: Params, *, strict: bool = True) -> np.ndarray:
    """TB-only sub-model on (S, L_T, I_T, R)."""
    s, lt, it, rr = _checked(x4, 4) if strict else _unchecked(x4, 4)
    P = params
    lam_t = P.beta1 * it / (s + lt + it + rr)
    return np.array([
        P.Lambda - lam_t * s - P.mu * s,
        lam_t * s + P.beta1p * lam_t * rr - (P.k1 + P.tau1 + P.mu) * lt,
        P.k1 * lt - (P.tau2 + P.d_T + P.mu) * it,
        P.tau1 * lt + P.tau2 * it - (P.beta1p * lam_t + P.mu) * rr,
    ])


def disease_deaths_rate(x, params: Params) -> np.ndarray:
    """Disease-induced death rate d_T (I_T + I_TH) + d_A A + d_TA A_T.

    Accepts a single state or an array of states (one per row).
    """
    x = np.asarray(x, dtype=float)
    P = params
    return (P.d_T * (x[..., I_T] + x[..., I_TH]) + P.d_A * x[..., A]
            + P.d_TA * x[..., A_T])


def embed_hiv(x4) -> np.ndarray:
    x = np.zeros(N_STATES)
    x[list(HIV_INDEX)] = x4
    return x


def embed_tb(x4) -> np.ndarray:
    x = np.zeros(N_STATES)
    x[list(TB_INDEX)] = x4
    return x
