"""Velocity fields with known behaviour.

* :class:`PolyTimeField` -- ``v = sum_i a_i t**i``, independent of ``x``.
* :class:`AffineField` -- ``v = A x + b``, solved exactly with ``expm``.
* :class:`GaussianMixtureFlowField` -- the exact marginal velocity of the
  straight-line path between N(0, I) noise at t=1 and an isotropic Gaussian
  mixture at t=0.
* :class:`GridField` -- multilinear interpolation of a tabulated field,
  loaded from a ``FLOWGRID`` file (see :mod:`flowsolve.gridfile`).
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import expm
from scipy.special import logsumexp

from .core import InvalidArgumentError, VelocityField, as_state

__all__ = [
    "PolyTimeField",
    "AffineField",
    "GaussianMixtureFlowField",
    "GridField",
    "GridRangeError",
    "eval_poly_time",
    "exact_endpoint_poly",
    "eval_gm_flow",
]


class PolyTimeField(VelocityField):
    """``v(x, t) = sum_i coeffs[i] * t**i`` in every component."""

    def __init__(self, coeffs, dim: int | None = None):
        super().__init__()
        self.coeffs = np.atleast_1d(np.asarray(coeffs, dtype=np.float64))
        if self.coeffs.ndim != 1 or self.coeffs.size == 0:
            raise InvalidArgumentError("coeffs must be a non-empty vector")
        self.dim = dim

    def velocity(self, x, t):
        return np.full(np.shape(x), np.polynomial.polynomial.polyval(t, self.coeffs))

    def antiderivative(self, t: float) -> float:
        i = np.arange(self.coeffs.size)
        return float(np.sum(self.coeffs * t ** (i + 1) / (i + 1)))

    def exact_endpoint(self, x1, t_from: float, t_to: float) -> np.ndarray:
        x1 = as_state(x1)
        return x1 + (self.antiderivative(t_to) - self.antiderivative(t_from))


def eval_poly_time(field: PolyTimeField, x, t: float) -> np.ndarray:
    return field.eval(as_state(x), t)


def exact_endpoint_poly(field: PolyTimeField, x1, t_from: float, t_to: float) -> np.ndarray:
    return field.exact_endpoint(x1, t_from, t_to)


class AffineField(VelocityField):
    """``v(x, t) = A x + b`` with constant ``A`` (d x d) and ``b`` (d)."""

    def __init__(self, A, b=None):
        super().__init__()
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InvalidArgumentError(f"A must be square, got shape {A.shape}")
        d = A.shape[0]
        b = np.zeros(d) if b is None else np.asarray(b, dtype=np.float64).reshape(d)
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise InvalidArgumentError("A and b must be finite")
        self.A, self.b, self.dim = A, b, d

    def velocity(self, x, t):
        return x @ self.A.T + self.b

    def propagator(self, dt: float) -> np.ndarray:
        """``exp(M dt)`` for the augmented generator ``M = [[A, b], [0, 0]]``."""
        d = self.dim
        M = np.zeros((d + 1, d + 1))
        M[:d, :d] = self.A
        M[:d, d] = self.b
        return expm(M * dt)

    def exact_endpoint(self, x1, t_from: float, t_to: float) -> np.ndarray:
        x1 = as_state(x1)
        P = self.propagator(t_to - t_from)
        return x1 @ P[:-1, :-1].T + P[:-1, -1]


class GaussianMixtureFlowField(VelocityField):
    r"""Marginal velocity of ``x_t = t*x1 + (1-t)*x0`` with ``x1 ~ N(0, I)``
    and ``x0 ~ sum_k w_k N(mu_k, sigma0^2 I)``.

    Given component ``k``, ``(x0, x1, x_t)`` is jointly Gaussian with

        x_t | k ~ N((1-t) mu_k, s_t^2 I),   s_t^2 = (1-t)^2 sigma0^2 + t^2
        Cov(x1, x_t) = t I,   Cov(x0, x_t) = (1-t) sigma0^2 I

    so conditioning on ``x_t = x`` gives

        E[x1 - x0 | x, k] = (t - (1-t) sigma0^2) / s_t^2 * (x - (1-t) mu_k) - mu_k

    and the field is the responsibility-weighted sum over ``k`` with
    ``r_k ∝ w_k N(x; (1-t) mu_k, s_t^2 I)``.  The shared isotropic variance
    means the normalising constants cancel in ``r_k``.
    """

    def __init__(self, weights, means, std: float):
        super().__init__()
        w = np.asarray(weights, dtype=np.float64).ravel()
        mu = np.atleast_2d(np.asarray(means, dtype=np.float64))
        if mu.shape[0] != w.size:
            raise InvalidArgumentError(f"{w.size} weights but {mu.shape[0]} means")
        if np.any(w <= 0) or not np.isclose(w.sum(), 1.0, rtol=0, atol=1e-12):
            raise InvalidArgumentError("weights must be positive and sum to 1")
        if not np.isfinite(std) or std <= 0:
            raise InvalidArgumentError(f"std must be positive, got {std!r}")
        self.weights, self.means, self.std = w, mu, float(std)
        self.log_weights = np.log(w)
        self.dim = mu.shape[1]

    def marginal_var(self, t: float) -> float:
        return (1.0 - t) ** 2 * self.std**2 + t**2

    def responsibilities(self, x, t: float) -> np.ndarray:
        """Posterior component probabilities, shape ``x.shape[:-1] + (K,)``."""
        x = np.asarray(x, dtype=np.float64)
        s2 = self.marginal_var(t)
        centres = (1.0 - t) * self.means  # (K, d)
        sq = np.sum((x[..., None, :] - centres) ** 2, axis=-1)
        logits = self.log_weights - 0.5 * sq / s2
        return np.exp(logits - logsumexp(logits, axis=-1, keepdims=True))

    def velocity(self, x, t):
        if not 0.0 <= t <= 1.0:
            raise InvalidArgumentError(f"t must lie in [0, 1], got {t}")
        x = np.asarray(x, dtype=np.float64)
        s2 = self.marginal_var(t)
        gain = (t - (1.0 - t) * self.std**2) / s2
        r = self.responsibilities(x, t)  # (..., K)
        mean_mu = r @ self.means  # (..., d)
        # sum_k r_k [gain (x - (1-t) mu_k) - mu_k]
        return gain * x - (gain * (1.0 - t) + 1.0) * mean_mu

    def sample_data(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Exact draws from the t=0 mixture."""
        k = rng.choice(self.weights.size, size=n, p=self.weights)
        return self.means[k] + self.std * rng.standard_normal((n, self.dim))

    def log_density_data(self, x0) -> np.ndarray:
        x0 = np.asarray(x0, dtype=np.float64)
        d = self.dim
        s2 = self.std**2
        sq = np.sum((x0[..., None, :] - self.means) ** 2, axis=-1)
        comp = self.log_weights - 0.5 * sq / s2 - 0.5 * d * np.log(2 * np.pi * s2)
        return logsumexp(comp, axis=-1)


def eval_gm_flow(field: GaussianMixtureFlowField, x, t: float) -> np.ndarray:
    return field.eval(as_state(x), t)


class GridRangeError(InvalidArgumentError):
    pass


class GridField(VelocityField):
    """Velocity tabulated on a regular ``(t, x_1, ..., x_dim)`` grid.

    ``values`` has shape ``(t_points, *x_points, dim)``.  Queries are
    multilinear; anything outside the grid box raises :class:`GridRangeError`.
    """

    def __init__(self, x_min, x_max, x_points, t_min: float, t_max: float, t_points: int, values):
        super().__init__()
        values = np.asarray(values, dtype=np.float64)
        dim = values.shape[-1]
        if dim not in (1, 2) or values.ndim != dim + 2:
            raise InvalidArgumentError(f"values must have shape (t, *x, dim) with dim in (1, 2), got {values.shape}")
        self.dim = dim
        self.x_min = np.broadcast_to(np.asarray(x_min, dtype=np.float64), (dim,)).copy()
        self.x_max = np.broadcast_to(np.asarray(x_max, dtype=np.float64), (dim,)).copy()
        self.x_points = tuple(int(n) for n in np.broadcast_to(np.asarray(x_points), (dim,)))
        self.t_min, self.t_max, self.t_points = float(t_min), float(t_max), int(t_points)
        if values.shape != (self.t_points, *self.x_points, dim):
            raise InvalidArgumentError(
                f"values shape {values.shape} does not match grid {(self.t_points, *self.x_points, dim)}"
            )
        if min(self.x_points + (self.t_points,)) < 2:
            raise InvalidArgumentError("every grid axis needs at least 2 points")
        if np.any(self.x_max <= self.x_min) or not self.t_max > self.t_min:
            raise InvalidArgumentError("grid ranges must have max > min")
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("grid values must be finite")
        self.values = values

    @property
    def axes(self) -> list[np.ndarray]:
        ax = [np.linspace(self.t_min, self.t_max, self.t_points)]
        ax += [np.linspace(lo, hi, n) for lo, hi, n in zip(self.x_min, self.x_max, self.x_points)]
        return ax

    def velocity(self, x, t):
        x = np.asarray(x, dtype=np.float64)
        if not self.t_min <= t <= self.t_max:
            raise GridRangeError(f"t={t} outside grid range [{self.t_min}, {self.t_max}]")
        if np.any(x < self.x_min) or np.any(x > self.x_max):
            raise GridRangeError(f"state outside grid box [{self.x_min}, {self.x_max}]")
        flat = x.reshape(-1, self.dim)
        t_idx = (t - self.t_min) / (self.t_max - self.t_min) * (self.t_points - 1)
        coords = [np.full(flat.shape[0], t_idx)]
        for j in range(self.dim):
            span = self.x_max[j] - self.x_min[j]
            coords.append((flat[:, j] - self.x_min[j]) / span * (self.x_points[j] - 1))
        return _multilinear(self.values, coords).reshape(x.shape)


def _multilinear(values: np.ndarray, coords: list[np.ndarray]) -> np.ndarray:
    """Interpolate ``values[..., comp]`` at fractional indices ``coords``."""
    n = coords[0].shape[0]
    lo, frac = [], []
    for axis, c in enumerate(coords):
        i0 = np.clip(np.floor(c).astype(int), 0, values.shape[axis] - 2)
        lo.append(i0)
        frac.append(c - i0)
    out = np.zeros((n, values.shape[-1]))
    for corner in range(1 << len(coords)):
        idx, w = [], np.ones(n)
        for axis in range(len(coords)):
            bit = (corner >> axis) & 1
            idx.append(lo[axis] + bit)
            w = w * (frac[axis] if bit else 1.0 - frac[axis])
        out += w[:, None] * values[tuple(idx)]
    return out
