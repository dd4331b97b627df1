"""Time integration: classical RK4 for (Z, conj(Z_t)) and the label flow
dh/dt = b(h, t), with b-based step control and spectral hygiene."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import (
    ModelError,
    NearSingularNodeError,
    WaveState,
    derive,
    rhs,
    tail_energy_fraction,
    with_fields,
)
from .spectral import TWO_PI, Field, dealias, krasny_filter, norm_linf

STOP_COMPLETED = "completed"
STOP_BLOWUP = "blowup_detected"
STOP_RESOLUTION = "resolution_lost"
STOP_NEAR_SINGULAR = "near_singular_node"

# Tail-energy fraction of conj(Z_t) above cutoff/2 that declares the run
# under-resolved.
RESOLUTION_TAIL_FRACTION = 1e-4


@dataclass(frozen=True)
class StepControl:
    """Step-size control.  cfl <= 0 disables adaptivity (fixed dt_init)."""

    dt_init: float = 1e-2
    cfl: float = 0.5
    dt_max: float = 0.1
    dt_min: float = 1e-9
    t_final: float = 1.0
    filter_eps: float = 1e-13

    def __post_init__(self):
        if self.t_final <= 0.0:
            raise ValueError("t_final must be positive")
        if not self.dt_min <= self.dt_init <= self.dt_max:
            raise ValueError("need dt_min <= dt_init <= dt_max")


@dataclass
class TimeSeries:
    """Evolution record: one dict row per observation plus the outcome."""

    rows: list = field(default_factory=list)
    stop_reason: str = STOP_COMPLETED
    final_state: WaveState | None = None
    states: list = field(default_factory=list)


def _advance(state: WaveState, dz, dztbar, dlabels, dt: float) -> WaveState:
    z = Field(state.grid, state.z.values + dt * dz.values)
    ztbar = Field(state.grid, state.ztbar.values + dt * dztbar.values)
    pos = state.label_pos + dt * dlabels
    return with_fields(state, z, ztbar, state.t + dt, pos)


def rk4_step(state: WaveState, dt: float, fields=None) -> WaveState:
    """One classical Runge-Kutta step; prognostic fields are re-dealiased and
    Krasny-filtered afterwards, label positions wrapped mod 2pi."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    k1 = rhs(state, fields)
    k2 = rhs(_advance(state, *k1, 0.5 * dt))
    k3 = rhs(_advance(state, *k2, 0.5 * dt))
    k4 = rhs(_advance(state, *k3, dt))
    dz = (k1[0].values + 2.0 * k2[0].values + 2.0 * k3[0].values + k4[0].values) / 6.0
    dzt = (k1[1].values + 2.0 * k2[1].values + 2.0 * k3[1].values + k4[1].values) / 6.0
    dl = (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]) / 6.0
    z = krasny_filter(dealias(Field(state.grid, state.z.values + dt * dz)))
    ztbar = krasny_filter(dealias(Field(state.grid, state.ztbar.values + dt * dzt)))
    pos = np.mod(state.label_pos + dt * dl, TWO_PI)
    return with_fields(state, z, ztbar, state.t + dt, pos)


def advance_labels(state: WaveState, dt: float) -> np.ndarray:
    """RK4 on the labels alone (b frozen at the current time)."""
    b = derive(state).b

    def vel(pos):
        from .spectral import interpolate
        return np.real(interpolate(b, pos))

    h = state.label_pos
    l1 = vel(h)
    l2 = vel(h + 0.5 * dt * l1)
    l3 = vel(h + 0.5 * dt * l2)
    l4 = vel(h + dt * l3)
    return np.mod(h + dt * (l1 + 2 * l2 + 2 * l3 + l4) / 6.0, TWO_PI)


def propose_dt(state: WaveState, ctrl: StepControl, fields=None) -> float:
    if ctrl.cfl <= 0.0:
        return ctrl.dt_init
    if fields is None:
        fields = derive(state)
    bmax = max(1.0, norm_linf(fields.b))
    dt = ctrl.cfl * state.grid.spacing / bmax
    return float(min(ctrl.dt_max, max(ctrl.dt_min, dt)))


def evolve(state: WaveState, ctrl: StepControl, observers=(),
           record_every: int = 1, keep_states: bool = False,
           step_offset: int = 0) -> TimeSeries:
    """Advance to t_final or until a stop condition.

    observers: callables (state, fields) -> dict merged into the record row.
    Rows are recorded every record_every steps and at the final state.
    Stop reasons are reported in the TimeSeries, not raised.
    """
    series = TimeSeries()
    step = step_offset

    def record(st: WaveState, flds, dt: float) -> None:
        row = {"t": st.t, "step": step, "dt": dt}
        for obs in observers:
            row.update(obs(st, flds))
        series.rows.append(row)
        if keep_states:
            series.states.append(st)

    while True:
        if not (state.z.is_finite() and state.ztbar.is_finite()):
            series.stop_reason = STOP_BLOWUP
            break
        try:
            flds = derive(state)
        except NearSingularNodeError:
            series.stop_reason = STOP_NEAR_SINGULAR
            break
        except ModelError:
            series.stop_reason = STOP_BLOWUP
            break
        done = state.t >= ctrl.t_final - 1e-14
        dt = propose_dt(state, ctrl, flds)
        dt = min(dt, max(ctrl.t_final - state.t, 1e-15))
        if tail_energy_fraction(state.ztbar) > RESOLUTION_TAIL_FRACTION:
            series.stop_reason = STOP_RESOLUTION
            record(state, flds, dt)
            break
        if step % record_every == 0 or done:
            record(state, flds, dt)
        if done:
            series.stop_reason = STOP_COMPLETED
            break
        try:
            state = rk4_step(state, dt, flds)
        except (NearSingularNodeError, ModelError):
            series.stop_reason = STOP_NEAR_SINGULAR
            break
        step += 1

    series.final_state = state
    return series
