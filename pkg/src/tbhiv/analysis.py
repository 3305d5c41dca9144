"""Reproduction numbers, equilibria and local stability."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import (
    DomainError, N_STATES, Params, rhs_hiv_only, rhs_uncontrolled,
)

STABLE = "locally-asymptotically-stable"
UNSTABLE = "unstable"
MARGINAL = "marginal"


class NoEndemicEquilibrium(ValueError):
    """Raised when the HIV-only model has no endemic equilibrium (R1 <= 1)."""


@dataclass(frozen=True)
class ReproductionNumbers:
    r1: float
    r2: float
    r0: float


@dataclass
class StabilityReport:
    point: np.ndarray
    eigenvalues: np.ndarray
    classification: str
    jacobian: np.ndarray

    @property
    def stable(self) -> bool:
        return self.classification == STABLE


def _hiv_constants(P: Params):
    c1 = P.rho1 + P.phi + P.mu
    c2 = P.alpha1 + P.mu + P.d_A
    c3 = P.omega1 + P.mu
    return c1, c2, c3


def _hiv_removal(P: Params) -> float:
    # mu (C3 (rho1 + C2) + C2 phi + rho1 d_A) + rho1 omega1 d_A
    _, c2, c3 = _hiv_constants(P)
    return P.mu * (c3 * (P.rho1 + c2) + c2 * P.phi + P.rho1 * P.d_A) + P.rho1 * P.omega1 * P.d_A


def _hiv_infectivity(P: Params) -> float:
    # C3 (C2 + eta_A rho1) + eta_C phi C2
    _, c2, c3 = _hiv_constants(P)
    return c3 * (c2 + P.eta_A * P.rho1) + P.eta_C * P.phi * c2


def _population(P: Params, N):
    if N is None:
        if P.mu <= 0:
            raise DomainError("mu must be positive")
        return P.Lambda / P.mu
    if not N > 0:
        raise DomainError(f"population N must be positive, got {N}")
    return N


def r1(params: Params, N: float | None = None) -> float:
    """Basic reproduction number of the HIV-only model.

    ``N`` is the population in the leading Lambda/(mu N) factor; it defaults
    to the disease-free population Lambda/mu, where that factor is one.
    """
    P = params
    N = _population(P, N)
    denom = N * P.mu * _hiv_removal(P)
    if denom <= 0:
        raise DomainError("zero denominator in R1")
    return P.beta2 * P.Lambda * _hiv_infectivity(P) / denom


def r2(params: Params, N: float | None = None) -> float:
    """Basic reproduction number of the TB-only model (``N`` as in :func:`r1`)."""
    P = params
    N = _population(P, N)
    c5 = P.mu + P.d_T + P.tau2
    c4 = P.mu + P.k1 + P.tau1
    if P.mu <= 0 or c4 <= 0 or c5 <= 0:
        raise DomainError("zero denominator in R2")
    return P.Lambda / (P.mu * N) * (P.beta1 / c5) * (P.k1 / c4)


def r0(params: Params, N: float | None = None) -> ReproductionNumbers:
    a, b = r1(params, N), r2(params, N)
    return ReproductionNumbers(a, b, max(a, b))


def dfe_full(params: Params) -> np.ndarray:
    if params.mu <= 0:
        raise DomainError("mu must be positive")
    x = np.zeros(N_STATES)
    x[0] = params.Lambda / params.mu
    return x


def dfe_hiv(params: Params) -> np.ndarray:
    return dfe_full(params)[:4]


def beta_star(params: Params, N: float | None = None) -> float:
    """HIV transmission rate at which R1 equals one.

    With the default ``N`` (Lambda/mu) this is the closed form
    removal / infectivity; for other ``N`` it carries the factor mu N / Lambda.
    """
    P = params
    N = _population(P, N)
    inf = _hiv_infectivity(P)
    if inf <= 0 or P.Lambda <= 0:
        raise DomainError("zero denominator in beta*")
    return _hiv_removal(P) / inf * (P.mu * N / P.Lambda)


def endemic_equilibrium_hiv(params: Params) -> np.ndarray:
    """Endemic equilibrium (S*, I_H*, A*, C_H*) of the HIV-only model.

    The steady-state force of infection satisfies
    lam* = mu (R1(N*) - 1) where N* is the endemic total population, which
    differs from Lambda/mu once AIDS deaths are present.  Solving that
    relation together with the component formulas gives the explicit
    lam* = Q (R1 - 1) / (C2 C3 + rho1 C3 + phi C2), R1 taken at N = Lambda/mu
    and Q the HIV removal term.
    """
    P = params
    R1 = r1(P)
    if not R1 > 1:
        raise NoEndemicEquilibrium(f"R1 = {R1:.6g} <= 1: no endemic equilibrium")
    _, c2, c3 = _hiv_constants(P)
    Q = _hiv_removal(P)
    lam = Q * (R1 - 1) / (c2 * c3 + P.rho1 * c3 + P.phi * c2)
    D = -(lam + P.mu) * Q
    s = P.Lambda / (lam + P.mu)
    ih = -lam * P.Lambda * c2 * c3 / D
    a = -P.rho1 * lam * P.Lambda * c3 / D
    ch = -P.phi * lam * P.Lambda * c2 / D
    return np.array([s, ih, a, ch])


def jacobian_hiv_dfe(params: Params, N: float | None = None) -> np.ndarray:
    """Jacobian of the HIV-only model at its DFE, in its closed reference form.

    The reference form carries +C2 and +C3 in positions (3,3) and (4,4);
    differentiating the model gives -C2 and -C3 there.  The reference form is
    returned unchanged; use :func:`numerical_jacobian` for stability work.
    """
    P = params
    N = _population(P, N)
    c1, c2, c3 = _hiv_constants(P)
    g = P.beta2 * P.Lambda / (P.mu * N)
    return np.array([
        [-P.mu, -g, -g * P.eta_A, -g * P.eta_C],
        [0.0, g - c1, g * P.eta_A + P.alpha1, g * P.eta_C + P.omega1],
        [0.0, P.rho1, c2, 0.0],
        [0.0, P.phi, 0.0, c3],
    ])


def numerical_jacobian(rhs: Callable, point, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian, step rel_step * max(1, |x_i|) per coordinate."""
    x = np.asarray(point, dtype=float)
    n = x.size
    J = np.empty((n, n))
    for j in range(n):
        h = rel_step * max(1.0, abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        J[:, j] = (np.asarray(rhs(xp)) - np.asarray(rhs(xm))) / (2 * h)
    if not np.all(np.isfinite(J)):
        raise FloatingPointError("non-finite entries in finite-difference Jacobian")
    return J


def classify_eigenvalues(eigenvalues, tol: float = 1e-7) -> str:
    re = np.real(eigenvalues)
    if np.any(re > tol):
        return UNSTABLE
    if np.any(np.abs(re) <= tol):
        return MARGINAL
    return STABLE


def classify_stability(rhs: Callable, point, tol: float = 1e-7) -> StabilityReport:
    """Linear stability of an equilibrium of ``x' = rhs(x)``.

    Any positive real part beyond ``tol`` makes the point unstable; otherwise
    a real part within ``tol`` of zero makes it marginal.
    """
    point = np.asarray(point, dtype=float)
    J = numerical_jacobian(rhs, point)
    ev = np.linalg.eigvals(J)
    return StabilityReport(point, ev, classify_eigenvalues(ev, tol), J)


def full_dfe_stability(params: Params, tol: float = 1e-7) -> StabilityReport:
    return classify_stability(lambda x: rhs_uncontrolled(x, params, strict=False),
                              dfe_full(params), tol)


def hiv_dfe_stability(params: Params, tol: float = 1e-7) -> StabilityReport:
    return classify_stability(lambda x: rhs_hiv_only(x, params, strict=False),
                              dfe_hiv(params), tol)


def hiv_endemic_stability(params: Params, tol: float = 1e-7) -> StabilityReport:
    return classify_stability(lambda x: rhs_hiv_only(x, params, strict=False),
                              endemic_equilibrium_hiv(params), tol)
