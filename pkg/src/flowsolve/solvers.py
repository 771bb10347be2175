"""Fixed-schedule samplers for ``dx/dt = v(x, t)``: Euler, Heun, Kutta's RK-3
and the cached multistep flow solver with its optional corrector.

The flow solver of order ``s`` combines the fresh velocity at ``t_prev``
with up to ``s - 1`` cached velocities from earlier steps, so it costs one
field evaluation per step.  ``order=1`` is Euler, bit for bit.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .coeffs import MAX_ORDER, StepCoefficients, step_coefficients
from .core import (
    CountingField,
    FlowSolveError,
    HistoryBuffer,
    InvalidArgumentError,
    InvalidStateError,
    TimeSchedule,
    VelocityEvalRecord,
    VelocityField,
    as_state,
    check_finite,
)

__all__ = [
    "Method",
    "SolverConfig",
    "TrajectoryRecord",
    "SolverStepError",
    "step_euler",
    "step_heun",
    "step_rk3",
    "step_flow_predict",
    "step_flow_correct",
    "sample",
    "expected_nfe",
]


class Method(str, enum.Enum):
    EULER = "euler"
    HEUN = "heun"
    RK3 = "rk3"
    FLOW = "flow"


_EVALS_PER_STEP = {Method.EULER: 1, Method.HEUN: 2, Method.RK3: 3, Method.FLOW: 1}


class SolverStepError(FlowSolveError):
    """A step failed; ``step`` is the 0-based interval index."""

    def __init__(self, message: str, step: int, t: float):
        super().__init__(message)
        self.step = step
        self.t = t


@dataclass(frozen=True)
class SolverConfig:
    """Which stepper to run and on what grid.

    ``order`` and ``use_corrector`` only matter for ``method="flow"``.
    ``warmup_corrector`` applies the corrector to the start-up steps (the
    ones taken with less than ``order - 1`` cached velocities) even when
    ``use_corrector`` is off.  Without it the first Euler step leaves an
    O(h^2) error behind and caps the global order at 2.
    """

    method: Method | str
    schedule: TimeSchedule
    order: int = 1
    use_corrector: bool = False
    warmup_corrector: bool = True

    def __post_init__(self):
        try:
            object.__setattr__(self, "method", Method(self.method))
        except ValueError:
            raise InvalidArgumentError(f"unknown method {self.method!r}") from None
        if not isinstance(self.schedule, TimeSchedule):
            raise InvalidArgumentError("schedule must be a TimeSchedule")
        if self.method is Method.FLOW and not 1 <= self.order <= MAX_ORDER:
            raise InvalidArgumentError(f"flow order must be in [1, {MAX_ORDER}], got {self.order}")

    @property
    def label(self) -> str:
        if self.method is not Method.FLOW:
            return self.method.value
        return f"flow{self.order}{'+c' if self.use_corrector else ''}"


@dataclass
class TrajectoryRecord:
    times: tuple[float, ...]
    states: list[np.ndarray]
    nfe: int
    per_step_coeffs: list[StepCoefficients | None] = dc_field(default_factory=list)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def as_array(self) -> np.ndarray:
        return np.stack(self.states)


def expected_nfe(method: Method | str, n_steps: int) -> int:
    return _EVALS_PER_STEP[Method(method)] * n_steps


def _check_interval(t_prev: float, t_next: float) -> float:
    if not t_next < t_prev:
        raise InvalidArgumentError(f"time must decrease: t_prev={t_prev}, t_next={t_next}")
    return t_next - t_prev


def _eval(field: VelocityField, x: np.ndarray, t: float) -> np.ndarray:
    return check_finite(field.eval(x, t), t)


# ---------------------------------------------------------------------------
# one-step methods
# ---------------------------------------------------------------------------

def step_euler(field: VelocityField, x, t_prev: float, t_next: float) -> np.ndarray:
    h = _check_interval(t_prev, t_next)
    x = np.asarray(x, dtype=np.float64)
    return x + h * _eval(field, x, t_prev)


def step_heun(field: VelocityField, x, t_prev: float, t_next: float) -> np.ndarray:
    h = _check_interval(t_prev, t_next)
    x = np.asarray(x, dtype=np.float64)
    v0 = _eval(field, x, t_prev)
    x_hat = x + h * v0
    v1 = _eval(field, x_hat, t_next)
    return x + 0.5 * h * (v0 + v1)


def step_rk3(field: VelocityField, x, t_prev: float, t_next: float) -> np.ndarray:
    """Kutta's third-order method (weights 1/6, 4/6, 1/6)."""
    h = _check_interval(t_prev, t_next)
    x = np.asarray(x, dtype=np.float64)
    k1 = _eval(field, x, t_prev)
    k2 = _eval(field, x + 0.5 * h * k1, t_prev + 0.5 * h)
    k3 = _eval(field, x - h * k1 + 2.0 * h * k2, t_next)
    return x + h * (k1 + 4.0 * k2 + k3) / 6.0


# ---------------------------------------------------------------------------
# cached multistep predictor / corrector
# ---------------------------------------------------------------------------

def _combination(coeffs: StepCoefficients, v_base: np.ndarray, node_vs: Sequence[np.ndarray]) -> np.ndarray:
    out = np.zeros_like(v_base)
    for b, v in zip(coeffs.b, node_vs):
        out += b * (v - v_base)
    return out


def step_flow_predict(
    x,
    t_prev: float,
    t_next: float,
    buffer: HistoryBuffer,
    v_cur,
    order: int | None = None,
    *,
    return_coeffs: bool = False,
):
    """Advance ``x`` from ``t_prev`` to ``t_next`` without evaluating the field.

    ``v_cur`` is the velocity already computed at ``(x, t_prev)``.  The
    newest ``min(len(buffer), order - 1)`` cached records serve as extra
    interpolation nodes; with no usable history this is an Euler step.
    """
    h = _check_interval(t_prev, t_next)
    x = np.asarray(x, dtype=np.float64)
    v_cur = np.asarray(v_cur, dtype=np.float64)
    n_hist = len(buffer) if order is None else min(len(buffer), order - 1)
    records = buffer.newest_first(n_hist)
    # records come out newest first, i.e. ascending offsets t_m - t_prev
    if records and not records[0].t > t_prev:
        raise InvalidArgumentError(
            f"cached time {records[0].t} is not earlier in the schedule than t_prev={t_prev}"
        )
    x_next = x + h * v_cur
    coeffs = None
    if records:
        coeffs = step_coefficients(t_prev, t_next, [r.t for r in records])
        x_next = x_next + _combination(coeffs, v_cur, [r.v for r in records])
    return (x_next, coeffs) if return_coeffs else x_next


def step_flow_correct(
    x_prev_predicted,
    v_new,
    t_prev: float,
    t_cur: float,
    buffer: HistoryBuffer,
    n_hist: int | None = None,
    *,
    return_coeffs: bool = False,
):
    """Refine the endpoint of the previous interval ``[t_prev, t_cur]``.

    The buffer's newest record must be the evaluation at ``t_prev`` that
    started that interval; the ``n_hist`` records before it (default: all)
    are the nodes the predictor used.  ``v_new``, freshly evaluated at
    ``t_cur``, joins them as one more node, and the predictor's history
    term is swapped for the higher-order one.  The buffer is not modified.
    """
    if len(buffer) == 0:
        raise InvalidStateError("corrector needs the evaluation that started the previous interval")
    _check_interval(t_prev, t_cur)
    base = buffer.newest
    if base.t != t_prev:
        raise InvalidArgumentError(f"newest cached time {base.t} does not match t_prev={t_prev}")
    older = buffer.newest_first()[1:]
    if n_hist is not None:
        older = older[:n_hist]
    v_new = np.asarray(v_new, dtype=np.float64)
    x = np.asarray(x_prev_predicted, dtype=np.float64)

    # predictor term that produced x_prev_predicted
    if older:
        pred = step_coefficients(t_prev, t_cur, [r.t for r in older])
        x = x - _combination(pred, base.v, [r.v for r in older])
    corr = step_coefficients(t_prev, t_cur, [t_cur] + [r.t for r in older])
    x = x + _combination(corr, base.v, [v_new] + [r.v for r in older])
    return (x, corr) if return_coeffs else x


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

_ONE_STEP = {Method.EULER: step_euler, Method.HEUN: step_heun, Method.RK3: step_rk3}


def sample(
    config: SolverConfig,
    field: VelocityField,
    x_init,
    history: Sequence[VelocityEvalRecord] | None = None,
) -> TrajectoryRecord:
    """Integrate from ``schedule[0]`` to ``schedule[-1]``.

    ``x_init`` may be a single state ``(d,)`` or a batch ``(n, d)``.
    ``history`` optionally pre-fills the flow solver's cache with
    evaluations from before ``schedule[0]`` (newest last); those are not
    counted as function evaluations of this run.
    """
    x = as_state(x_init)
    if field.dim is not None and x.shape[-1] != field.dim:
        raise InvalidArgumentError(f"initial state has dimension {x.shape[-1]}, field expects {field.dim}")
    counted = CountingField(field)
    times = config.schedule.times
    states = [x]
    coeff_log: list[StepCoefficients | None] = []

    if config.method is not Method.FLOW:
        stepper = _ONE_STEP[config.method]
        for n, (t_prev, t_next) in enumerate(config.schedule.intervals()):
            try:
                x = stepper(counted, x, t_prev, t_next)
            except FlowSolveError as exc:
                raise SolverStepError(f"step {n} ({t_prev} -> {t_next}) failed: {exc}", n, t_prev) from exc
            states.append(x)
            coeff_log.append(None)
        return TrajectoryRecord(times, states, counted.nfe, coeff_log)

    order = config.order
    # the corrector needs the record that started the previous interval
    # plus the order-1 nodes its predictor used
    buffer = HistoryBuffer(capacity=order)
    for rec in history or ():
        buffer.push(rec)
    prev_hist = None  # history count used by the previous predictor step

    for n, (t_prev, t_next) in enumerate(config.schedule.intervals()):
        try:
            v = _eval(counted, x, t_prev)
            x_eval = x
            correct = prev_hist is not None and (
                config.use_corrector or (config.warmup_corrector and prev_hist < order - 1)
            )
            if correct:
                x = step_flow_correct(x, v, buffer.newest.t, t_prev, buffer, prev_hist)
                states[-1] = x
                if not np.all(np.isfinite(x)):
                    raise SolverStepError("corrector produced non-finite state", n, t_prev)
            n_hist = min(len(buffer), order - 1)
            x_next, coef = step_flow_predict(x, t_prev, t_next, buffer, v, order, return_coeffs=True)
            if not np.all(np.isfinite(x_next)):
                raise SolverStepError("predictor produced non-finite state", n, t_prev)
            buffer.push(VelocityEvalRecord(t_prev, v, x_eval))
        except SolverStepError:
            raise
        except FlowSolveError as exc:
            raise SolverStepError(f"step {n} ({t_prev} -> {t_next}) failed: {exc}", n, t_prev) from exc
        prev_hist = n_hist
        coeff_log.append(coef)
        x = x_next
        states.append(x)
    return TrajectoryRecord(times, states, counted.nfe, coeff_log)
