"""Step coefficients for the cached multistep update.

Over one interval ``[t_prev, t_next]`` (``h = t_next - t_prev``) the exact
increment is expanded in Taylor series around ``t_prev``::

    x(t_next) - x(t_prev) = sum_i C_i * v^(i)(t_prev) / i!,   C_i = h**(i+1) / (i+1)

The derivative terms with ``i >= 1`` are replaced by a weighted sum of
cached velocity differences ``D_m = v(t_m) - v(t_prev)``.  Matching Taylor
coefficients gives the Vandermonde system

    sum_m B_m * delta_m**i = C_i,   i = 1..p,   delta_m = t_m - t_prev

which :func:`solve_b` solves for ``B``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import InvalidArgumentError, NumericalFailureError, SingularSystemError

__all__ = [
    "MAX_ORDER",
    "RESIDUAL_TOL",
    "StepCoefficients",
    "compute_c",
    "vandermonde",
    "solve_b",
    "step_coefficients",
    "node_weights",
]

MAX_ORDER = 4
RESIDUAL_TOL = 1e-10


def compute_c(t_prev: float, t_next: float, p: int, *, with_zeroth: bool = False) -> np.ndarray:
    """Taylor-integral coefficients ``C_i = h**(i+1)/(i+1)`` for ``i = 1..p``.

    With ``with_zeroth=True`` the array starts at ``C_0 = h`` (the Euler
    weight), so it has ``p + 1`` entries.
    """
    if not 0 <= p <= MAX_ORDER:
        raise InvalidArgumentError(f"order must be in [0, {MAX_ORDER}], got {p}")
    h = float(t_next) - float(t_prev)
    if h == 0.0:
        raise InvalidArgumentError(f"coincident times t_prev == t_next == {t_prev}")
    start = 0 if with_zeroth else 1
    i = np.arange(start, p + 1, dtype=np.float64)
    return h ** (i + 1) / (i + 1)


def vandermonde(deltas) -> np.ndarray:
    """Matrix ``R[i-1, m] = deltas[m]**i`` for ``i = 1..p`` (no column of ones)."""
    d = np.asarray(deltas, dtype=np.float64)
    powers = np.arange(1, d.size + 1)
    return d[None, :] ** powers[:, None]


def solve_b(deltas, c) -> np.ndarray:
    """Solve ``sum_m B_m * deltas[m]**i = c[i-1]`` for ``B``.

    Raises
    ------
    SingularSystemError
        Repeated or zero nodes.
    NumericalFailureError
        Residual of the solved system above ``RESIDUAL_TOL``.
    """
    d = np.asarray(deltas, dtype=np.float64).ravel()
    c = np.asarray(c, dtype=np.float64).ravel()
    p = d.size
    if c.size != p:
        raise InvalidArgumentError(f"need as many coefficients as nodes, got {c.size} and {p}")
    if p == 0:
        return np.zeros(0)
    if p > MAX_ORDER:
        raise InvalidArgumentError(f"at most {MAX_ORDER} nodes supported, got {p}")
    if not np.all(np.isfinite(d)) or not np.all(np.isfinite(c)):
        raise InvalidArgumentError("nodes and coefficients must be finite")
    if np.any(d == 0.0):
        raise SingularSystemError("zero node offset makes the Vandermonde system singular")
    if np.unique(d).size != p:
        raise SingularSystemError(f"duplicated node offsets {d.tolist()}")

    R = vandermonde(d)
    try:
        b = np.linalg.solve(R, c)  # LU with partial pivoting
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
    residual = np.max(np.abs(R @ b - c))
    if not np.isfinite(residual) or residual > RESIDUAL_TOL:
        raise NumericalFailureError(
            f"Vandermonde solve residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e} for nodes {d.tolist()}"
        )
    return b


@dataclass(frozen=True)
class StepCoefficients:
    """Everything needed to apply one multistep update.

    ``deltas`` are node offsets ``t_m - t_prev``.  For a predictor step all
    nodes lie in the past, so every offset is positive; a corrector step
    also includes the just-evaluated node at ``t_next`` whose offset is
    ``h < 0``.  Offsets are kept sorted ascending either way.
    """

    h: float
    deltas: np.ndarray
    c: np.ndarray
    b: np.ndarray

    @property
    def p(self) -> int:
        return int(self.deltas.size)

    def residual(self) -> float:
        if self.p == 0:
            return 0.0
        return float(np.max(np.abs(vandermonde(self.deltas) @ self.b - self.c)))


def step_coefficients(t_prev: float, t_next: float, node_times) -> StepCoefficients:
    """Coefficients for an update over ``[t_prev, t_next]`` using the
    velocities cached at ``node_times`` (in the order given)."""
    node_times = np.asarray(node_times, dtype=np.float64).ravel()
    deltas = node_times - float(t_prev)
    c = compute_c(t_prev, t_next, deltas.size)
    b = solve_b(deltas, c)
    return StepCoefficients(h=float(t_next) - float(t_prev), deltas=deltas, c=c, b=b)


def node_weights(coeffs: StepCoefficients) -> np.ndarray:
    """Expand ``h*v_prev + sum_m B_m (v_m - v_prev)`` into per-node weights.

    Returns ``[w_prev, w_1, ..., w_p]`` such that the increment equals
    ``w_prev * v_prev + sum_m w_m * v_m``.
    """
    return np.concatenate([[coeffs.h - coeffs.b.sum()], coeffs.b])
