"""Finite-difference core for one scalar wave field u_tt = u_xx on [0, 1].

The field is advanced by an explicit leapfrog scheme on a uniform grid,

    u_j^{n+1} = 2 u_j^n - u_j^{n-1} + r^2 (u_{j+1}^n - 2 u_j^n + u_{j-1}^n),

with the Courant ratio r = dt/dx <= 1. Boundary nodes are closed by
ghost-node elimination so that the interior stencil and the boundary
relation hold simultaneously:

* pinned end            u(0, t) = 0
* tip mass              u_x(1, t) + m u_tt(1, t) = S(t)
* Robin end             u_x(0, t) = gamma u_t(0, t) + beta u(0, t) + ext(t)
* pinned trace          u(1, t) = value(t)

The tip-mass closure uses a centered second difference in time for the
boundary acceleration; the Robin closure uses a centered first
difference, which keeps the whole scheme second order. One-sided
3-point stencils (exact on quadratics) supply the boundary slopes that
feed the control laws.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from ._backend import get_kernel
from ._kernels_py import (
    LEFT_DIRICHLET_ZERO,
    LEFT_ROBIN,
    RIGHT_DIRICHLET_VALUE,
    RIGHT_TIP_MASS,
)

__all__ = [
    "SystemParams",
    "Grid",
    "FieldHistory",
    "BoundaryTraces",
    "WarmupError",
    "StructuralError",
    "step_interior",
    "apply_dirichlet_zero_left",
    "apply_tip_mass_right",
    "apply_robin_left",
    "apply_dirichlet_trace_right",
    "sample_traces",
    "backward_time_derivative",
    "slope_left",
    "slope_right",
    "second_order_backstep",
]


class StructuralError(ValueError):
    """Raised when array shapes or grid parameters are inconsistent."""


class WarmupError(RuntimeError):
    """Raised when a backward time difference lacks history."""


@dataclass(frozen=True)
class SystemParams:
    """Physical and gain constants of the plant/observer pair.

    m      tip mass at the controlled end
    alpha  velocity gain of the stabilizing feedback
    a      angular-velocity gain of the stabilizing feedback
    beta   position gain of the observer's Robin injection
    gamma  velocity gain of the observer's Robin injection
    """

    m: float = 5.0
    alpha: float = 2.0
    a: float = 2.0
    beta: float = 1.5
    gamma: float = 1.5

    def __post_init__(self):
        for name in ("m", "alpha", "a", "beta", "gamma"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    def hypothesis_report(self) -> dict[str, bool]:
        """Tri-valued stability hypotheses, reported rather than enforced.

        The failure scenarios (constant-disturbance counterexample) must
        stay expressible, so violations never raise here.
        """
        return {
            "gamma_not_one": self.gamma != 1.0,
            "m_not_a": self.m != self.a,
            "m_not_a_gamma": self.m != self.a * self.gamma,
        }

    def hypothesis_warnings(self) -> list[str]:
        msgs = []
        if self.gamma == 1.0:
            msgs.append("gamma = 1 violates the stability hypotheses")
        if self.m == self.a:
            msgs.append("m = a violates the stability hypotheses")
        if self.m == self.a * self.gamma:
            msgs.append("m = a*gamma violates the stability hypotheses")
        return msgs


@dataclass(frozen=True)
class Grid:
    """Uniform grid: node j sits at x = j*dx, j = 0..n_cells."""

    n_cells: int
    r: float = 0.5

    def __post_init__(self):
        if self.n_cells < 3:
            raise StructuralError(f"grid too coarse: n_cells={self.n_cells} < 3")
        if not 0.0 < self.r <= 1.0:
            raise StructuralError(f"Courant ratio must satisfy 0 < r <= 1, got {self.r}")

    @property
    def dx(self) -> float:
        return 1.0 / self.n_cells

    @property
    def dt(self) -> float:
        return self.r * self.dx

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    def nodes(self) -> NDArray[np.float64]:
        return np.linspace(0.0, 1.0, self.n_cells + 1)


class FieldHistory:
    """Three consecutive time levels of one discretized field.

    ``prev`` and ``curr`` hold the two completed levels at t - dt and t;
    ``new`` is the level under construction at t + dt. ``rotate`` cycles
    the three buffers without copying, so no level ever aliases another.
    """

    __slots__ = ("prev", "curr", "new", "t")

    def __init__(self, prev: NDArray, curr: NDArray, t: float = 0.0):
        prev = np.asarray(prev, dtype=float)
        curr = np.asarray(curr, dtype=float)
        if prev.shape != curr.shape or prev.ndim != 1:
            raise StructuralError(f"level shapes differ: {prev.shape} vs {curr.shape}")
        self.prev = prev.copy()
        self.curr = curr.copy()
        self.new = np.empty_like(curr)
        self.t = t

    @property
    def n_nodes(self) -> int:
        return self.curr.shape[0]

    def rotate(self, dt: float) -> None:
        """Promote the finished new level; recycle the oldest buffer."""
        self.prev, self.curr, self.new = self.curr, self.new, self.prev
        self.t += dt

    def copy(self) -> "FieldHistory":
        out = FieldHistory(self.prev, self.curr, self.t)
        out.new[:] = self.new
        return out


def _check(field: FieldHistory, grid: Grid) -> None:
    if field.n_nodes != grid.n_nodes:
        raise StructuralError(
            f"field has {field.n_nodes} nodes, grid expects {grid.n_nodes}")


def step_interior(field: FieldHistory, grid: Grid) -> FieldHistory:
    """Fill the new level at interior nodes j = 1..n_cells-1.

    Boundary nodes of ``field.new`` are left untouched; apply one of the
    boundary closures afterwards.
    """
    _check(field, grid)
    r2 = grid.r * grid.r
    p, c, out = field.prev, field.curr, field.new
    out[1:-1] = 2.0 * c[1:-1] - p[1:-1] + r2 * (c[2:] - 2.0 * c[1:-1] + c[:-2])
    return field


def apply_dirichlet_zero_left(field: FieldHistory) -> FieldHistory:
    field.new[0] = 0.0
    return field


def apply_tip_mass_right(field: FieldHistory, boundary_input: float,
                         disturbance: float, params: SystemParams,
                         grid: Grid) -> FieldHistory:
    """Close the tip-mass end: u_x(1) + m u_tt(1) = U + F.

    Eliminating the ghost node between the interior stencil at j = N and
    the centered boundary relation gives the scalar update

        u_N^{n+1} = 2 u_N^n - u_N^{n-1}
                    + dt^2 (S - (u_N^n - u_{N-1}^n)/dx) / (m + dx/2).
    """
    _check(field, grid)
    if not params.m > 0.0:
        raise ValueError(f"tip mass must be positive, got {params.m}")
    dx, dt = grid.dx, grid.dt
    c, p = field.curr, field.prev
    s = boundary_input + disturbance
    field.new[-1] = (2.0 * c[-1] - p[-1]
                     + dt * dt * (s - (c[-1] - c[-2]) / dx) / (params.m + 0.5 * dx))
    return field


def apply_robin_left(field: FieldHistory, external_input: float,
                     params: SystemParams, grid: Grid) -> FieldHistory:
    """Close the Robin end: u_x(0) = gamma u_t(0) + beta u(0) + ext.

    The centered time derivative makes the eliminated relation linear in
    the unknown node value; the linear coefficient 1/r^2 + gamma/r is
    strictly positive for gamma, dt, dx > 0.
    """
    _check(field, grid)
    dx, dt, r = grid.dx, grid.dt, grid.r
    gamma, beta = params.gamma, params.beta
    r2 = r * r
    denom = 1.0 / r2 + gamma / r
    assert denom > 0.0
    c, p = field.curr, field.prev
    field.new[0] = (2.0 * (c[1] - c[0]) + (2.0 * c[0] - p[0]) / r2
                    + (gamma / r) * p[0] - 2.0 * dx * beta * c[0]
                    - 2.0 * dx * external_input) / denom
    return field


def apply_dirichlet_trace_right(field: FieldHistory, value: float) -> FieldHistory:
    field.new[-1] = value
    return field


def kernel_step(field: FieldHistory, grid: Grid, params: SystemParams,
                left_kind: int, ext: float,
                right_kind: int, right_input: float,
                kernel=None) -> FieldHistory:
    """One fused interior+boundary step through the selected backend.

    Produces bit-identical results to composing ``step_interior`` with
    the individual boundary closures.
    """
    _check(field, grid)
    if kernel is None:
        kernel = get_kernel()
    kernel(field.prev, field.curr, field.new, grid.r, grid.dx, grid.dt,
           left_kind, ext, params.gamma, params.beta,
           right_kind, right_input, params.m)
    return field


def slope_left(values: NDArray, dx: float) -> float:
    """One-sided second-order u_x(0); exact on quadratics."""
    if values.shape[0] < 3:
        raise StructuralError("grid too coarse for one-sided slopes")
    return (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dx)


def slope_right(values: NDArray, dx: float) -> float:
    """One-sided second-order u_x(1); exact on quadratics."""
    if values.shape[0] < 3:
        raise StructuralError("grid too coarse for one-sided slopes")
    return (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * dx)


@dataclass
class BoundaryTraces:
    """Ring buffers of sampled boundary quantities for one field.

    value0/value1 are the node values at x=0 and x=1; slope0/slope1 the
    one-sided spatial derivatives there. Depth 4 is enough for the
    backward second differences the control laws need.
    """

    dt: float
    depth: int = 4
    value0: deque = field(default_factory=lambda: deque(maxlen=4))
    value1: deque = field(default_factory=lambda: deque(maxlen=4))
    slope0: deque = field(default_factory=lambda: deque(maxlen=4))
    slope1: deque = field(default_factory=lambda: deque(maxlen=4))

    def __post_init__(self):
        if self.depth < 3:
            raise StructuralError("trace buffers need depth >= 3")
        for name in ("value0", "value1", "slope0", "slope1"):
            setattr(self, name, deque(getattr(self, name), maxlen=self.depth))

    def sample(self, values: NDArray, dx: float) -> None:
        self.value0.append(float(values[0]))
        self.value1.append(float(values[-1]))
        self.slope0.append(slope_left(values, dx))
        self.slope1.append(slope_right(values, dx))

    def __len__(self) -> int:
        return len(self.value1)

    def latest(self, key: str) -> float:
        return getattr(self, key)[-1]

    def rate(self, key: str, order: int = 1) -> float:
        """Backward time derivative of one trace; 0.0 while warming up."""
        try:
            return backward_time_derivative(getattr(self, key), order, self.dt)
        except WarmupError:
            return 0.0


def sample_traces(field: FieldHistory, grid: Grid, traces: BoundaryTraces) -> BoundaryTraces:
    """Record boundary values and one-sided slopes of the current level."""
    _check(field, grid)
    traces.sample(field.curr, grid.dx)
    return traces


def backward_time_derivative(samples, order: int, dt: float) -> float:
    """First or second backward difference of a sampled boundary trace."""
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    if len(samples) < order + 1:
        raise WarmupError(f"need {order + 1} samples, have {len(samples)}")
    s = list(samples)[-3:]
    if order == 1:
        return (s[-1] - s[-2]) / dt
    return (s[-1] - 2.0 * s[-2] + s[-3]) / (dt * dt)


def second_order_backstep(position: NDArray, velocity: NDArray, grid: Grid,
                          params: SystemParams, left_kind: int, ext0: float,
                          right_kind: int, right_input0: float) -> NDArray:
    """Build the t = -dt level from initial position and velocity.

    Uses u(-dt) = u(0) - dt u_t(0) + (dt^2/2) u_tt(0) with the
    acceleration taken from the same ghost-eliminated relations the
    stepper uses, so the first step is second-order accurate.
    """
    p = np.asarray(position, dtype=float)
    w = np.asarray(velocity, dtype=float)
    if p.shape != w.shape or p.shape[0] != grid.n_nodes:
        raise StructuralError("initial position/velocity shape mismatch")
    dx, dt, r = grid.dx, grid.dt, grid.r
    r2 = r * r
    delta = np.zeros_like(p)
    delta[1:-1] = r2 * (p[2:] - 2.0 * p[1:-1] + p[:-2])
    prev = p - dt * w + 0.5 * delta
    if left_kind == LEFT_DIRICHLET_ZERO:
        prev[0] = 0.0
    elif left_kind == LEFT_ROBIN:
        accel = (2.0 * p[1] - 2.0 * p[0]
                 - 2.0 * dx * (params.gamma * w[0] + params.beta * p[0] + ext0)) / (dx * dx)
        prev[0] = p[0] - dt * w[0] + 0.5 * dt * dt * accel
    if right_kind == RIGHT_TIP_MASS:
        tip = dt * dt * (right_input0 - (p[-1] - p[-2]) / dx) / (params.m + 0.5 * dx)
        prev[-1] = p[-1] - dt * w[-1] + 0.5 * tip
    elif right_kind == RIGHT_DIRICHLET_VALUE:
        prev[-1] = right_input0
    return prev
