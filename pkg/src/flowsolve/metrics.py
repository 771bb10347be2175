"""Error norms, convergence-order fits and sample-distribution distances."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .core import InvalidArgumentError

__all__ = [
    "ConvergenceResult",
    "endpoint_error",
    "rmse",
    "fit_order",
    "psd_sqrt",
    "gaussian_w2",
    "sample_w2",
    "energy_distance",
    "ERROR_FLOOR",
]

#: errors below this are treated as round-off and left out of order fits
ERROR_FLOOR = 1e-13
_EIG_FLOOR = 1e-12


def endpoint_error(approx, exact, norm: str = "l2") -> float:
    a = np.asarray(approx, dtype=np.float64)
    b = np.asarray(exact, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"shape mismatch: {a.shape} vs {b.shape}")
    diff = (a - b).ravel()
    if norm == "l2":
        return float(np.linalg.norm(diff))
    if norm == "linf":
        return float(np.max(np.abs(diff))) if diff.size else 0.0
    raise InvalidArgumentError(f"unknown norm {norm!r}")


def rmse(approx, exact) -> float:
    """Root-mean-square over trajectories of the per-trajectory L2 error."""
    a = np.atleast_2d(np.asarray(approx, dtype=np.float64))
    b = np.atleast_2d(np.asarray(exact, dtype=np.float64))
    if a.shape != b.shape:
        raise InvalidArgumentError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean(np.sum((a - b) ** 2, axis=-1))))


@dataclass(frozen=True)
class ConvergenceResult:
    step_counts: tuple[int, ...]
    errors: tuple[float, ...]
    slope: float
    r_squared: float
    excluded: tuple[int, ...] = ()

    @property
    def warned(self) -> bool:
        return bool(self.excluded)


def fit_order(step_counts, errors) -> ConvergenceResult:
    """Least-squares slope of ``log(error)`` against ``log(1/N)``.

    Points with error below :data:`ERROR_FLOOR` are dropped (with a
    ``RuntimeWarning``) and listed in ``excluded``.
    """
    n = np.asarray(step_counts, dtype=np.float64)
    e = np.asarray(errors, dtype=np.float64)
    if n.shape != e.shape or n.ndim != 1:
        raise InvalidArgumentError("step_counts and errors must be equal-length sequences")
    if np.any(np.diff(n) <= 0) or np.any(n <= 0):
        raise InvalidArgumentError("step counts must be positive and strictly increasing")
    keep = np.isfinite(e) & (e > ERROR_FLOOR)
    excluded = tuple(int(k) for k in n[~keep])
    if excluded:
        warnings.warn(f"excluding step counts {excluded}: error at or below floor", RuntimeWarning, stacklevel=2)
    if keep.sum() < 3:
        raise InvalidArgumentError(f"need at least 3 usable points, have {int(keep.sum())}")
    lx, ly = np.log(1.0 / n[keep]), np.log(e[keep])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - np.sum(resid**2) / ss_tot)
    return ConvergenceResult(tuple(int(k) for k in n), tuple(float(x) for x in e), float(slope), float(r2), excluded)


def psd_sqrt(C: np.ndarray) -> np.ndarray:
    """Symmetric square root via ``eigh``; eigenvalues clamped at 1e-12 (then 0 below it)."""
    w, V = np.linalg.eigh(C)
    w = np.where(w < _EIG_FLOOR, 0.0, w)
    return (V * np.sqrt(w)) @ V.T


def _check_sym(C, name):
    C = np.atleast_2d(np.asarray(C, dtype=np.float64))
    if C.shape[0] != C.shape[1]:
        raise InvalidArgumentError(f"{name} must be square, got {C.shape}")
    if not np.allclose(C, C.T, rtol=1e-10, atol=1e-12):
        raise InvalidArgumentError(f"{name} is not symmetric")
    return 0.5 * (C + C.T)


def gaussian_w2(mean_a, cov_a, mean_b, cov_b) -> float:
    """Squared 2-Wasserstein (Frechet) distance between two Gaussians."""
    ma = np.atleast_1d(np.asarray(mean_a, dtype=np.float64))
    mb = np.atleast_1d(np.asarray(mean_b, dtype=np.float64))
    Ca, Cb = _check_sym(cov_a, "cov_a"), _check_sym(cov_b, "cov_b")
    if not (ma.shape == mb.shape and Ca.shape == Cb.shape == (ma.size, ma.size)):
        raise InvalidArgumentError("mean/covariance dimensions disagree")
    rb = psd_sqrt(Cb)
    cross = psd_sqrt(0.5 * ((rb @ Ca @ rb) + (rb @ Ca @ rb).T))
    w2 = np.sum((ma - mb) ** 2) + np.trace(Ca) + np.trace(Cb) - 2.0 * np.trace(cross)
    return float(max(w2, 0.0))


def sample_w2(samples_a, samples_b) -> float:
    """:func:`gaussian_w2` on the sample means and covariances."""
    a = np.atleast_2d(samples_a)
    b = np.atleast_2d(samples_b)
    cov = lambda s: np.atleast_2d(np.cov(s, rowvar=False))  # noqa: E731
    return gaussian_w2(a.mean(0), cov(a), b.mean(0), cov(b))


def energy_distance(samples_a, samples_b) -> float:
    """``2 E|A-B| - E|A-A'| - E|B-B'|`` with all pairs (V-statistic)."""
    a = np.asarray(samples_a, dtype=np.float64)
    b = np.asarray(samples_b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise InvalidArgumentError("energy distance needs non-empty sample sets")
    a = a.reshape(len(a), -1) if a.ndim else a.reshape(1, 1)
    b = b.reshape(len(b), -1) if b.ndim else b.reshape(1, 1)
    if a.shape[1] != b.shape[1]:
        raise InvalidArgumentError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    ab = cdist(a, b).mean()
    aa = cdist(a, a).mean()
    bb = cdist(b, b).mean()
    return float(max(2.0 * ab - aa - bb, 0.0))
