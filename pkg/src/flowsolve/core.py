"""Shared domain types: states, time schedules, velocity fields and the
velocity-evaluation history cache.

Time runs *downward* from 1 (noise) to 0 (data), so every step size
``h = t_next - t_prev`` is negative.  Nothing in the solvers assumes
``h > 0``.

States are plain float64 numpy arrays.  A single trajectory is a 1-D array
of shape ``(d,)``; a batch of independent trajectories is ``(n, d)``.  A
velocity field evaluated on a batch counts as one function evaluation per
trajectory, so NFE bookkeeping is identical for both layouts.
"""
from __future__ import annotations

import abc
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

__all__ = [
    "FlowSolveError",
    "InvalidArgumentError",
    "InvalidStateError",
    "NumericalFailureError",
    "SingularSystemError",
    "as_state",
    "check_finite",
    "TimeSchedule",
    "make_uniform_schedule",
    "make_shifted_schedule",
    "VelocityEvalRecord",
    "HistoryBuffer",
    "history_push",
    "history_pop_newest",
    "VelocityField",
    "CountingField",
    "FunctionField",
]


class FlowSolveError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(FlowSolveError, ValueError):
    pass


class InvalidStateError(FlowSolveError, RuntimeError):
    pass


class NumericalFailureError(FlowSolveError, ArithmeticError):
    """A computation produced a non-finite or inaccurate result.

    ``t`` carries the time at which the failure was detected, when known.
    """

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


class SingularSystemError(NumericalFailureError):
    pass


def as_state(x) -> np.ndarray:
    """Convert ``x`` to a float64 state array and validate it.

    Accepts a scalar (promoted to ``(1,)``), a vector ``(d,)`` or a batch
    ``(n, d)``.
    """
    arr = np.array(x, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim not in (1, 2) or arr.shape[-1] < 1:
        raise InvalidArgumentError(f"state must have shape (d,) or (n, d) with d >= 1, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericalFailureError("state contains non-finite entries")
    return arr


def check_finite(v: np.ndarray, t: float, what: str = "velocity") -> np.ndarray:
    if not np.all(np.isfinite(v)):
        raise NumericalFailureError(f"non-finite {what} at t={t!r}", t=t)
    return v


# ---------------------------------------------------------------------------
# schedules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TimeSchedule:
    """Strictly decreasing sequence of times ``t_0 > t_1 > ... > t_N``.

    By default the schedule must run from exactly 1.0 to exactly 0.0; pass
    ``partial=True`` to allow any sub-range of ``[0, 1]``.
    """

    times: tuple[float, ...]
    partial: bool = False

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        object.__setattr__(self, "times", times)
        if len(times) < 2:
            raise InvalidArgumentError("a schedule needs at least two times")
        arr = np.asarray(times)
        if not np.all(np.isfinite(arr)):
            raise InvalidArgumentError("schedule times must be finite")
        if not np.all(np.diff(arr) < 0):
            raise InvalidArgumentError("schedule times must be strictly decreasing")
        if not self.partial and (times[0] != 1.0 or times[-1] != 0.0):
            raise InvalidArgumentError(
                f"full schedule must run from 1.0 to 0.0, got {times[0]} .. {times[-1]}"
            )

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    @property
    def steps(self) -> np.ndarray:
        """Signed step sizes ``h_n = t_n - t_{n-1}`` (all negative)."""
        return np.diff(np.asarray(self.times))

    def intervals(self) -> Iterator[tuple[float, float]]:
        return zip(self.times[:-1], self.times[1:])

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, i):
        return self.times[i]

    def __iter__(self):
        return iter(self.times)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.times)


def make_uniform_schedule(n_steps: int) -> TimeSchedule:
    """``n_steps`` equal intervals from 1.0 down to 0.0."""
    if int(n_steps) != n_steps or n_steps < 1:
        raise InvalidArgumentError(f"n_steps must be a positive integer, got {n_steps!r}")
    n = int(n_steps)
    # exact endpoints, and k/n rather than linspace so that n=4 gives exact quarters
    times = [1.0 - k / n for k in range(n)] + [0.0]
    return TimeSchedule(tuple(times))


def make_shifted_schedule(n_steps: int, shift: float) -> TimeSchedule:
    """Uniform grid warped by ``t = s*u / (1 + (s-1)*u)`` with ``u = 1 - k/N``.

    ``shift > 1`` concentrates steps near t=0 in relative terms (spends more
    of the range at high noise); ``shift = 1`` is the uniform grid.
    """
    if int(n_steps) != n_steps or n_steps < 1:
        raise InvalidArgumentError(f"n_steps must be a positive integer, got {n_steps!r}")
    if not np.isfinite(shift) or shift <= 0:
        raise InvalidArgumentError(f"shift must be positive, got {shift!r}")
    n = int(n_steps)
    times = []
    for k in range(n + 1):
        u = 1.0 - k / n
        times.append(shift * u / (1.0 + (shift - 1.0) * u))
    times[0], times[-1] = 1.0, 0.0
    return TimeSchedule(tuple(times))


# ---------------------------------------------------------------------------
# history cache
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VelocityEvalRecord:
    """One cached evaluation ``v = field(x, t)``."""

    t: float
    v: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        if np.shape(self.v) != np.shape(self.x):
            raise InvalidArgumentError(
                f"record v and x shapes differ: {np.shape(self.v)} vs {np.shape(self.x)}"
            )


@dataclass
class HistoryBuffer:
    """Bounded FIFO of velocity evaluations, newest last.

    Times must strictly decrease in insertion order; pushing at capacity
    drops the oldest record.
    """

    capacity: int
    records: deque = field(default_factory=deque)

    def __post_init__(self):
        if int(self.capacity) != self.capacity or self.capacity < 1:
            raise InvalidArgumentError(f"capacity must be a positive integer, got {self.capacity!r}")
        recs, self.records = list(self.records), deque()
        for r in recs:
            self.push(r)

    def push(self, record: VelocityEvalRecord) -> "HistoryBuffer":
        if self.records and not record.t < self.records[-1].t:
            raise InvalidArgumentError(
                f"record time {record.t} must be strictly less than newest stored time {self.records[-1].t}"
            )
        self.records.append(record)
        while len(self.records) > self.capacity:
            self.records.popleft()
        return self

    def pop_newest(self) -> VelocityEvalRecord:
        if not self.records:
            raise InvalidStateError("cannot pop from an empty history buffer")
        return self.records.pop()

    @property
    def newest(self) -> VelocityEvalRecord:
        if not self.records:
            raise InvalidStateError("history buffer is empty")
        return self.records[-1]

    def newest_first(self, k: int | None = None) -> list[VelocityEvalRecord]:
        """Up to ``k`` most recent records, most recent first."""
        recs = list(reversed(self.records))
        return recs if k is None else recs[:k]

    @property
    def times(self) -> list[float]:
        return [r.t for r in self.records]

    def copy(self) -> "HistoryBuffer":
        return HistoryBuffer(self.capacity, deque(self.records))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


def history_push(buffer: HistoryBuffer, record: VelocityEvalRecord) -> HistoryBuffer:
    return buffer.push(record)


def history_pop_newest(buffer: HistoryBuffer) -> tuple[HistoryBuffer, VelocityEvalRecord]:
    rec = buffer.pop_newest()
    return buffer, rec


# ---------------------------------------------------------------------------
# velocity fields
# ---------------------------------------------------------------------------

class VelocityField(abc.ABC):
    """Right-hand side ``v(x, t)`` of the flow ODE ``dx/dt = v``.

    Subclasses implement :meth:`velocity`; callers go through :meth:`eval`,
    which validates the input and bumps :attr:`nfe`.  The counter is a plain
    integer, so share a field across threads only through per-run
    :class:`CountingField` wrappers (which is what the samplers do).
    """

    #: state dimension, or None if the field accepts any dimension
    dim: int | None = None

    def __init__(self):
        self.nfe = 0

    @abc.abstractmethod
    def velocity(self, x: np.ndarray, t: float) -> np.ndarray:
        """Evaluate without bookkeeping.  ``x`` is ``(d,)`` or ``(n, d)``."""

    def eval(self, x, t: float) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.dim is not None and x.shape[-1] != self.dim:
            raise InvalidArgumentError(f"field expects dimension {self.dim}, got {x.shape[-1]}")
        self.nfe += 1
        v = np.asarray(self.velocity(x, float(t)), dtype=np.float64)
        return np.broadcast_to(v, x.shape).copy() if v.shape != x.shape else v

    __call__ = eval

    def reset_nfe(self) -> None:
        self.nfe = 0


class CountingField(VelocityField):
    """Per-run NFE counter around a shared field."""

    def __init__(self, inner: VelocityField):
        super().__init__()
        self.inner = inner
        self.dim = inner.dim

    def velocity(self, x, t):
        return self.inner.eval(x, t)


class FunctionField(VelocityField):
    """Wrap a plain callable ``f(x, t)`` as a velocity field."""

    def __init__(self, fn, dim: int | None = None):
        super().__init__()
        self.fn = fn
        self.dim = dim

    def velocity(self, x, t):
        return self.fn(x, t)
