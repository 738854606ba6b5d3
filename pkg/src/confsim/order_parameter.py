"""Order-parameter evolution: smoothed gradient modulus, mollifier, driving force, time step.

The evolution law is degenerate where the spatial gradient vanishes, so the
modulus |p| is replaced by the smooth surrogate sqrt(kappa^2 + p^2) >= kappa,
making the equation uniformly parabolic for kappa > 0.  The time step freezes
that coefficient at the current state and treats the diffusion implicitly
(weight theta), the reaction explicitly, guarded by a maximum-increment check.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded

from .grid_field import Grid, ScalarField, d1
from .material import MaterialParams, double_well


class StepRejected(RuntimeError):
    """The increment guard tripped; the time step is too large for the state."""

    def __init__(self, increment: float, guard: float):
        self.increment = increment
        self.guard = guard
        super().__init__(f"step increment {increment:.3e} exceeds guard {guard:.3e}")


class InsufficientHistory(RuntimeError):
    pass


@dataclass(frozen=True)
class RegularizationParams:
    """kappa in (0, 1], time step, implicitness weight and mollifier width."""

    kappa: float
    dt: float
    theta: float = 1.0
    kappa_m: Optional[float] = None  # mollifier window width; defaults to kappa
    increment_guard: float = 1.0

    def __post_init__(self):
        if not (0 < self.kappa <= 1):
            raise ValueError(f"kappa must lie in (0, 1], got {self.kappa}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (0.5 <= self.theta <= 1.0):
            raise ValueError(f"theta must lie in [0.5, 1], got {self.theta}")
        if self.kappa_m is None:
            object.__setattr__(self, "kappa_m", self.kappa)
        if not self.kappa_m > 0:
            raise ValueError(f"kappa_m must be positive, got {self.kappa_m}")
        if not self.increment_guard > 0:
            raise ValueError("increment_guard must be positive")


def smoothed_abs(p, kappa: float):
    """sqrt(kappa^2 + p^2); equals |p| at kappa = 0 and is >= max(|p|, kappa)."""
    return np.hypot(np.asarray(p, dtype=float), kappa) if np.ndim(p) else float(np.hypot(p, kappa))


def smoothed_abs_primitive(p, kappa: float):
    """Integral of the smoothed modulus from 0 to p, in closed form.

    Equals (p*sqrt(p^2+kappa^2) + kappa^2*asinh(p/kappa))/2, an odd function
    of p that reduces to p|p|/2 at kappa = 0.
    """
    p = np.asarray(p, dtype=float)
    if kappa == 0.0:
        out = 0.5 * p * np.abs(p)
    else:
        out = 0.5 * (p * np.hypot(p, kappa) + kappa**2 * np.arcsinh(p / kappa))
    return float(out) if out.ndim == 0 else out


def _causal_bump(tau: np.ndarray) -> np.ndarray:
    out = np.zeros_like(tau)
    inside = (tau >= 0.0) & (tau < 1.0)
    out[inside] = np.exp(-1.0 / (1.0 - tau[inside] ** 2))
    return out


class MollifierState:
    """Causal moving average of the order-parameter history.

    Holds kernel weights sampled on the lags j*dt < kappa_m and a ring buffer
    of past frames, most recent first.  Weights are nonnegative and sum to one
    exactly, so a constant-in-time history is reproduced without error.  When
    fewer frames than the window needs are available (early time), the missing
    mass is assigned to the oldest frame, which equals the initial state.
    """

    def __init__(self, kappa_m: float, dt: float):
        if kappa_m <= 0 or dt <= 0:
            raise ValueError("kappa_m and dt must be positive")
        self.kappa_m = kappa_m
        self.dt = dt
        m = max(1, int(round(kappa_m / dt)))
        tau = np.arange(m) / m
        w = _causal_bump(tau)
        self.weights = w / w.sum()
        self.frames: deque[np.ndarray] = deque(maxlen=m)
        self.time = None
        self._grid = None

    @property
    def window_size(self) -> int:
        return len(self.weights)

    @property
    def first_moment(self) -> float:
        """Mean lag of the kernel, in time units."""
        lags = np.arange(self.window_size) * self.dt
        return float(np.dot(self.weights, lags))

    def push(self, f: ScalarField, t: float):
        self.frames.appendleft(f.values.copy())
        self.time = t
        self._grid = f.grid

    def state_arrays(self) -> list[np.ndarray]:
        return [a.copy() for a in self.frames]

    def restore(self, arrays, grid: Grid, t: float):
        self.frames.clear()
        for a in arrays:
            self.frames.append(np.asarray(a, dtype=float))
        self.time = t
        self._grid = grid


def mollify(state: MollifierState, t: float) -> ScalarField:
    """Kernel-weighted average over the window (t - kappa_m, t]."""
    if not state.frames:
        raise InsufficientHistory("no frames buffered")
    if state.time is not None and abs(t - state.time) > 1e-9 * max(1.0, abs(t)):
        raise ValueError(f"mollifier buffer is at t = {state.time}, asked for t = {t}")
    k = len(state.frames)
    w = state.weights
    stacked = np.stack(state.frames)
    if k >= state.window_size:
        values = w @ stacked
    else:
        values = w[:k] @ stacked
        values += (1.0 - w[:k].sum()) * stacked[-1]
    return ScalarField(state._grid, values)


def driving_force(
    u: ScalarField,
    u_x: ScalarField,
    s: ScalarField,
    s_x: ScalarField,
    params: MaterialParams,
) -> ScalarField:
    """Configurational driving force acting on the order parameter.

    Pointwise c*(-lam*(u_x + 2u/x) + e*s + well'(s)) minus the curvature-like
    correction 2*c*nu/x * s_x; bounded because the grid keeps x >= a > 0.
    """
    grid = u.grid
    if any(f.grid != grid for f in (u_x, s, s_x)):
        raise ValueError("fields must share a grid")
    x = grid.x
    _, well_prime = double_well(s.values, params.well_weight)
    f1 = params.c * (
        -params.lam * (u_x.values + 2.0 * u.values / x) + params.e * s.values + well_prime
    )
    f = f1 - (2.0 * params.c * params.nu / x) * s_x.values
    return ScalarField(grid, f)


def semi_implicit_step(
    s: ScalarField,
    force: ScalarField,
    material: MaterialParams,
    reg: RegularizationParams,
    dt: Optional[float] = None,
) -> ScalarField:
    """One frozen-coefficient step of the regularized evolution equation.

    The diffusion coefficient c*nu*|s_x|_kappa is taken from the current state
    (bounded below by c*nu*kappa, so the system is never singular), diffusion
    is advanced with weight theta, the reaction -force*(|s_x|_kappa - kappa)
    explicitly.  Boundary values are pinned to exactly zero.
    """
    if dt is None:
        dt = reg.dt
    grid = s.grid
    n = grid.n
    h = grid.h

    s_x = d1(s).values
    mod = np.hypot(s_x, reg.kappa)
    coef = material.c * material.nu * mod

    rhs = s.values.copy()
    reaction = -force.values * (mod - reg.kappa)
    rhs[1:-1] += dt * reaction[1:-1]
    if reg.theta < 1.0:
        lap = (s.values[2:] - 2.0 * s.values[1:-1] + s.values[:-2]) / h**2
        rhs[1:-1] += dt * (1.0 - reg.theta) * coef[1:-1] * lap
    rhs[0] = 0.0
    rhs[-1] = 0.0

    beta = reg.theta * dt * coef[1:-1] / h**2
    diag = np.ones(n)
    diag[1:-1] += 2.0 * beta
    lower = np.zeros(n)
    upper = np.zeros(n)
    lower[0:-2] = -beta
    upper[2:] = -beta

    ab = np.zeros((3, n))
    ab[0, 1:] = upper[1:]
    ab[1, :] = diag
    ab[2, :-1] = lower[:-1]
    new = solve_banded((1, 1), ab, rhs)
    new[0] = 0.0
    new[-1] = 0.0

    increment = float(np.max(np.abs(new - s.values)))
    if not np.isfinite(increment) or increment > reg.increment_guard:
        raise StepRejected(increment, reg.increment_guard)
    return ScalarField(grid, new)
