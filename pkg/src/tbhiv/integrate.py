"""Fixed-step classical RK4, forward for states and backward for costates.

Both directions share one uniform grid.  Piecewise-constant inputs
(controls) are held over each interval: stages of the step from node i to
node i+1 all see ``controls[i]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


class IntegrationError(RuntimeError):
    def __init__(self, t: float, message: str = "non-finite state"):
        super().__init__(f"{message} at t = {t:g}")
        self.t = t


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    T: float
    n_steps: int

    def __post_init__(self):
        if not self.T > self.t0:
            raise ValueError(f"grid end {self.T} must exceed start {self.t0}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps}")

    @classmethod
    def from_step(cls, T: float, h: float, t0: float = 0.0) -> "TimeGrid":
        """Grid on [t0, T] whose step is ``h`` rounded to divide the span."""
        n = max(1, int(round((T - t0) / h)))
        return cls(t0, T, n)

    @property
    def h(self) -> float:
        return (self.T - self.t0) / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t0, self.T, self.n_steps + 1)

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.t0, self.T, self.n_steps * factor)


@dataclass
class Trajectory:
    grid: TimeGrid
    values: np.ndarray  # shape (n_steps + 1, dim)

    def __post_init__(self):
        if self.values.shape[0] != self.grid.n_steps + 1:
            raise ValueError("trajectory needs one value per grid node")

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]


def _check(y, t):
    if not np.all(np.isfinite(y)):
        raise IntegrationError(t)


def integrate_forward(rhs: Callable, x0, grid: TimeGrid, controls=None) -> Trajectory:
    """Integrate ``x' = rhs(t, x)`` from ``grid.t0`` to ``grid.T``.

    If ``controls`` is given (one row per node), ``rhs`` is called as
    ``rhs(t, x, controls[i])`` with the row of the interval's left node.
    """
    h = grid.h
    times = grid.times
    x = np.array(x0, dtype=float)
    _check(x, times[0])
    out = np.empty((grid.n_steps + 1, x.size))
    out[0] = x
    if controls is None:
        f = rhs
    else:
        controls = np.asarray(controls, dtype=float)
    for i in range(grid.n_steps):
        t = times[i]
        if controls is not None:
            ui = controls[i]
            f = lambda tt, y: rhs(tt, y, ui)  # noqa: E731
        try:
            k1 = f(t, x)
            k2 = f(t + h / 2, x + h / 2 * k1)
            k3 = f(t + h / 2, x + h / 2 * k2)
            k4 = f(t + h, x + h * k3)
        except (FloatingPointError, ZeroDivisionError) as exc:
            raise IntegrationError(t, str(exc)) from exc
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        _check(x, times[i + 1])
        out[i + 1] = x
    return Trajectory(grid, out)


def integrate_backward(rhs: Callable, lam_T, state: Trajectory, grid: TimeGrid,
                       controls=None) -> Trajectory:
    """Integrate ``lam' = rhs(t, lam, x(t))`` from ``grid.T`` back to ``grid.t0``.

    States at stage midpoints are linear interpolants of neighbouring nodes.
    ``controls`` are held as in :func:`integrate_forward`, and passed as a
    fourth argument when given.
    """
    if state.grid != grid:
        raise ValueError("state trajectory and adjoint grid differ")
    h = grid.h
    times = grid.times
    xs = state.values
    lam = np.array(lam_T, dtype=float)
    _check(lam, times[-1])
    out = np.empty((grid.n_steps + 1, lam.size))
    out[-1] = lam
    if controls is not None:
        controls = np.asarray(controls, dtype=float)
    for i in range(grid.n_steps - 1, -1, -1):
        t1 = times[i + 1]
        x1, x0 = xs[i + 1], xs[i]
        xm = 0.5 * (x0 + x1)
        if controls is None:
            f = rhs
        else:
            ui = controls[i]
            f = lambda tt, y, xx: rhs(tt, y, xx, ui)  # noqa: E731
        try:
            k1 = f(t1, lam, x1)
            k2 = f(t1 - h / 2, lam - h / 2 * k1, xm)
            k3 = f(t1 - h / 2, lam - h / 2 * k2, xm)
            k4 = f(times[i], lam - h * k3, x0)
        except (FloatingPointError, ZeroDivisionError) as exc:
            raise IntegrationError(t1, str(exc)) from exc
        lam = lam - h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        _check(lam, times[i])
        out[i] = lam
    return Trajectory(grid, out)
