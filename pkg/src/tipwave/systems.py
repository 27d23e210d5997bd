"""Coupled closed-loop systems and their boundary control laws.

Three drivers share one stepping protocol:

* ``SingleFieldLoop``  one wave field with any boundary pair (open
  plant, or either error system of the estimator analysis);
* ``ObserverLoop``     plant + boundary-injected observer, closed by
  the estimated-state feedback U = -alpha*u^_t(1) - a*u^_xt(1);
* ``EsoLoop``          plant + disturbance estimator pair (v, q), where
  q(1, t) is pinned to the output mismatch v(1, t) - u(1, t) and the
  control cancels the estimated total disturbance q_x(1) + m q_tt(1).

The control evaluated at step n uses boundary traces up to t_n only
(one-step explicit lag), and returns 0 while the trace buffers warm up.
Time derivatives of traces are backward differences; q_tt(1) comes from
differencing the pinned q(1) trace, never from a one-sided spatial
second derivative.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from ._backend import get_kernel
from ._kernels_py import (
    LEFT_DIRICHLET_ZERO,
    LEFT_ROBIN,
    RIGHT_DIRICHLET_VALUE,
    RIGHT_TIP_MASS,
)
from .wave_core import (
    BoundaryTraces,
    FieldHistory,
    Grid,
    SystemParams,
    kernel_step,
    second_order_backstep,
)
from .energy import energy as field_energy

__all__ = [
    "BlowUpError",
    "control_observer",
    "control_eso",
    "boundary_ode_states",
    "SingleFieldLoop",
    "ObserverLoop",
    "EsoLoop",
]

BLOWUP_LIMIT = 1e12


class BlowUpError(RuntimeError):
    """A field value exceeded the blow-up guard."""

    def __init__(self, field_name: str, step_index: int, t: float, value: float):
        self.field_name = field_name
        self.step_index = step_index
        self.t = t
        self.value = value
        super().__init__(
            f"field {field_name!r} blew up at step {step_index} (t={t:.6g}): "
            f"|value| = {value:.3e} > {BLOWUP_LIMIT:.0e}")


def control_observer(observer_traces: BoundaryTraces, params: SystemParams) -> float:
    """Estimated-state feedback from the observer's tip traces."""
    if len(observer_traces) < 2:
        return 0.0
    return (-params.alpha * observer_traces.rate("value1", 1)
            - params.a * observer_traces.rate("slope1", 1))


def control_eso(v_traces: BoundaryTraces, q_traces: BoundaryTraces,
                params: SystemParams) -> float:
    """Disturbance-cancelling feedback from the estimator traces.

    The q_x(1) + m q_tt(1) part cancels the estimated total disturbance;
    the v - q differences estimate the plant's tip velocity and angular
    velocity.
    """
    if len(v_traces) < 3 or len(q_traces) < 3:
        return 0.0
    return (q_traces.latest("slope1") + params.m * q_traces.rate("value1", 2)
            - params.alpha * (v_traces.rate("value1", 1) - q_traces.rate("value1", 1))
            - params.a * (v_traces.rate("slope1", 1) - q_traces.rate("slope1", 1)))


def _guard(field: FieldHistory, name: str, step_index: int) -> None:
    peak = float(np.max(np.abs(field.new)))
    if not peak <= BLOWUP_LIMIT:
        raise BlowUpError(name, step_index, field.t, peak)


def _as_array(values, grid: Grid) -> NDArray[np.float64]:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (grid.n_nodes,):
        raise ValueError(f"initial data must have {grid.n_nodes} nodes, got {arr.shape}")
    return arr.copy()


class SingleFieldLoop:
    """One wave field under a fixed boundary pair.

    left_kind:  LEFT_DIRICHLET_ZERO or LEFT_ROBIN
    right_kind: RIGHT_TIP_MASS or RIGHT_DIRICHLET_VALUE

    Per-step inputs (Robin external slope, tip boundary input, pinned
    value) are passed to ``step``; the constructor takes their t=0
    values for the second-order start.
    """

    def __init__(self, grid: Grid, params: SystemParams, position, velocity,
                 left_kind: int, right_kind: int,
                 ext0: float = 0.0, right_input0: float = 0.0, kernel=None):
        self.grid = grid
        self.params = params
        self.left_kind = left_kind
        self.right_kind = right_kind
        self.kernel = kernel if kernel is not None else get_kernel()
        p = _as_array(position, grid)
        w = _as_array(velocity, grid)
        prev = second_order_backstep(p, w, grid, params, left_kind, ext0,
                                     right_kind, right_input0)
        self.field = FieldHistory(prev, p, t=0.0)
        self.traces = BoundaryTraces(dt=grid.dt)
        self.traces.sample(self.field.curr, grid.dx)
        self.step_index = 0

    @property
    def t(self) -> float:
        return self.field.t

    def step(self, ext: float = 0.0, right_input: float = 0.0) -> None:
        kernel_step(self.field, self.grid, self.params,
                    self.left_kind, ext, self.right_kind, right_input,
                    kernel=self.kernel)
        self.step_index += 1
        _guard(self.field, "field", self.step_index)
        self.field.rotate(self.grid.dt)
        self.traces.sample(self.field.curr, self.grid.dx)

    def boundary_state(self) -> float:
        """m * u_t(1), the plant's tip momentum state."""
        return self.params.m * self.traces.rate("value1", 1)

    def energy(self, space_tag: str, eta: float | None = None) -> float:
        if eta is None:
            eta = self.boundary_state() if space_tag in ("H1", "H2", "H") else 0.0
        return field_energy(space_tag, self.field, eta, self.params, self.grid)


class ObserverLoop:
    """Plant + Luenberger observer under estimated-state feedback.

    The plant keeps its pinned left end; the observer's left end is the
    Robin injection fed by the measured plant slope u_x(0, t). Both tip
    ends receive the same control, the plant additionally the
    disturbance.
    """

    def __init__(self, grid: Grid, params: SystemParams,
                 u0, ut0, uhat0, uhatt0,
                 initial_disturbance: float = 0.0, kernel=None):
        self.grid = grid
        self.params = params
        self.kernel = kernel if kernel is not None else get_kernel()
        pu, wu = _as_array(u0, grid), _as_array(ut0, grid)
        ph, wh = _as_array(uhat0, grid), _as_array(uhatt0, grid)
        # warm-up control is 0, so the back-step sees S_u = F(0), S_obs = 0
        from .wave_core import slope_left

        uprev = second_order_backstep(pu, wu, grid, params, LEFT_DIRICHLET_ZERO, 0.0,
                                      RIGHT_TIP_MASS, initial_disturbance)
        hprev = second_order_backstep(ph, wh, grid, params, LEFT_ROBIN,
                                      slope_left(pu, grid.dx), RIGHT_TIP_MASS, 0.0)
        self.u = FieldHistory(uprev, pu, t=0.0)
        self.uhat = FieldHistory(hprev, ph, t=0.0)
        self.u_traces = BoundaryTraces(dt=grid.dt)
        self.uhat_traces = BoundaryTraces(dt=grid.dt)
        self.u_traces.sample(self.u.curr, grid.dx)
        self.uhat_traces.sample(self.uhat.curr, grid.dx)
        self.step_index = 0
        self.last_control = 0.0

    @property
    def t(self) -> float:
        return self.u.t

    def step(self, disturbance_value: float = 0.0) -> None:
        """Advance plant and observer by one dt with F(t_n) given."""
        g, p = self.grid, self.params
        control = control_observer(self.uhat_traces, p)
        measured_slope = self.u_traces.latest("slope0")
        kernel_step(self.u, g, p, LEFT_DIRICHLET_ZERO, 0.0,
                    RIGHT_TIP_MASS, control + disturbance_value, kernel=self.kernel)
        kernel_step(self.uhat, g, p, LEFT_ROBIN, measured_slope,
                    RIGHT_TIP_MASS, control, kernel=self.kernel)
        self.step_index += 1
        _guard(self.u, "u", self.step_index)
        _guard(self.uhat, "uhat", self.step_index)
        self.u.rotate(g.dt)
        self.uhat.rotate(g.dt)
        self.u_traces.sample(self.u.curr, g.dx)
        self.uhat_traces.sample(self.uhat.curr, g.dx)
        self.last_control = control

    def boundary_states(self) -> tuple[float, float]:
        """(eta, psi) = boundary-dynamics states of plant and observer."""
        p = self.params
        shared = p.a * self.uhat_traces.latest("slope1")
        eta = p.m * self.u_traces.rate("value1", 1) + shared
        psi = p.m * self.uhat_traces.rate("value1", 1) + shared
        return eta, psi

    def error_field(self) -> FieldHistory:
        """Observer-error field uhat - u as a two-level history."""
        err = FieldHistory(self.uhat.prev - self.u.prev,
                           self.uhat.curr - self.u.curr, t=self.t)
        return err

    def energies(self) -> dict[str, float]:
        eta, psi = self.boundary_states()
        return {
            "u_H1": field_energy("H1", self.u, eta, self.params, self.grid),
            "uhat_H2": field_energy("H2", self.uhat, psi, self.params, self.grid),
            "err_H2": field_energy(
                "H2", self.error_field(),
                self.params.m * (self.uhat_traces.rate("value1", 1)
                                 - self.u_traces.rate("value1", 1)),
                self.params, self.grid),
        }


class EsoLoop:
    """Plant + extended-state-observer pair under disturbance cancellation.

    Step order matters and is fixed: control from traces at t_n, then u,
    then v (Robin fed by the measured plant slope), then q, whose right
    node is pinned to the fresh levels' mismatch v - u so the coupling
    identity holds exactly at every sample time.
    """

    def __init__(self, grid: Grid, params: SystemParams,
                 u0, ut0, v0, vt0, q0, qt0,
                 initial_disturbance: float = 0.0, kernel=None):
        self.grid = grid
        self.params = params
        self.kernel = kernel if kernel is not None else get_kernel()
        from .wave_core import slope_left

        pu, wu = _as_array(u0, grid), _as_array(ut0, grid)
        pv, wv = _as_array(v0, grid), _as_array(vt0, grid)
        pq, wq = _as_array(q0, grid), _as_array(qt0, grid)
        uprev = second_order_backstep(pu, wu, grid, params, LEFT_DIRICHLET_ZERO, 0.0,
                                      RIGHT_TIP_MASS, initial_disturbance)
        vprev = second_order_backstep(pv, wv, grid, params, LEFT_ROBIN,
                                      slope_left(pu, grid.dx), RIGHT_TIP_MASS, 0.0)
        qprev = second_order_backstep(pq, wq, grid, params, LEFT_ROBIN, 0.0,
                                      RIGHT_DIRICHLET_VALUE, vprev[-1] - uprev[-1])
        self.u = FieldHistory(uprev, pu, t=0.0)
        self.v = FieldHistory(vprev, pv, t=0.0)
        self.q = FieldHistory(qprev, pq, t=0.0)
        self.u_traces = BoundaryTraces(dt=grid.dt)
        self.v_traces = BoundaryTraces(dt=grid.dt)
        self.q_traces = BoundaryTraces(dt=grid.dt)
        for tr, f in ((self.u_traces, self.u), (self.v_traces, self.v),
                      (self.q_traces, self.q)):
            tr.sample(f.curr, grid.dx)
        self.step_index = 0
        self.last_control = 0.0

    @property
    def t(self) -> float:
        return self.u.t

    def tip_displacement(self) -> float:
        """u(1, t) at the current level, the argument of the uncertainty."""
        return self.u_traces.latest("value1")

    def step(self, f_value: float = 0.0, d_value: float = 0.0) -> None:
        """One dt advance with uncertainty and disturbance values at t_n."""
        g, p = self.grid, self.params
        control = control_eso(self.v_traces, self.q_traces, p)
        measured_slope = self.u_traces.latest("slope0")
        kernel_step(self.u, g, p, LEFT_DIRICHLET_ZERO, 0.0,
                    RIGHT_TIP_MASS, control + f_value + d_value, kernel=self.kernel)
        kernel_step(self.v, g, p, LEFT_ROBIN, measured_slope,
                    RIGHT_TIP_MASS, control, kernel=self.kernel)
        kernel_step(self.q, g, p, LEFT_ROBIN, 0.0,
                    RIGHT_DIRICHLET_VALUE, self.v.new[-1] - self.u.new[-1],
                    kernel=self.kernel)
        self.step_index += 1
        for f, name in ((self.u, "u"), (self.v, "v"), (self.q, "q")):
            _guard(f, name, self.step_index)
            f.rotate(g.dt)
        for tr, f in ((self.u_traces, self.u), (self.v_traces, self.v),
                      (self.q_traces, self.q)):
            tr.sample(f.curr, g.dx)
        self.last_control = control

    def boundary_states(self) -> tuple[float, float]:
        """(eta, psi): tip-dynamics states of the closed loop."""
        p = self.params
        slope_gap = p.a * (self.v_traces.latest("slope1") - self.q_traces.latest("slope1"))
        eta = p.m * self.u_traces.rate("value1", 1) + slope_gap
        psi = eta - p.m * self.q_traces.rate("value1", 1)
        return eta, psi

    def energies(self) -> dict[str, float]:
        eta, _ = self.boundary_states()
        return {
            "u_H1": field_energy("H1", self.u, eta, self.params, self.grid),
            "v_Hbb1": field_energy("Hbb1", self.v, 0.0, self.params, self.grid),
            "q_Hbb1": field_energy("Hbb1", self.q, 0.0, self.params, self.grid),
        }


def boundary_ode_states(loop) -> tuple[float, float]:
    """(eta, psi) of a loop; the plant-only driver reports (eta, eta)."""
    if isinstance(loop, (ObserverLoop, EsoLoop)):
        return loop.boundary_states()
    if isinstance(loop, SingleFieldLoop):
        eta = loop.boundary_state()
        return eta, eta
    raise TypeError(f"not a loop state: {type(loop).__name__}")
