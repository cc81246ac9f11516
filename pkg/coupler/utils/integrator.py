"""Fixed-step classical Runge-Kutta integration for small dense ODE systems."""

from typing import Callable, Tuple

import numpy as np

# State is a tuple of arrays integrated together (e.g. amplitudes and propagator)
State = Tuple[np.ndarray, ...]
Rhs = Callable[[State], State]


def _axpy(state: State, slope: State, h: float) -> State:
    return tuple(y + h * k for y, k in zip(state, slope))


def rk4_step(rhs: Rhs, state: State, h: float) -> State:
    """
    Advance an autonomous system by one RK4 step.

    Args:
        rhs: Function returning the derivative of every component of the state
        state: Current state
        h: Step size

    Returns:
        State after one step
    """
    k1 = rhs(state)
    k2 = rhs(_axpy(state, k1, 0.5 * h))
    k3 = rhs(_axpy(state, k2, 0.5 * h))
    k4 = rhs(_axpy(state, k3, h))
    return tuple(
        y + (h / 6.0) * (a + 2.0 * (b + c) + d)
        for y, a, b, c, d in zip(state, k1, k2, k3, k4)
    )


def uniform_grid(zeta_max: float, steps: int) -> Tuple[np.ndarray, float]:
    """Grid of steps+1 points on [0, zeta_max] and its step size."""
    grid = np.linspace(0.0, zeta_max, steps + 1)
    return grid, zeta_max / steps
