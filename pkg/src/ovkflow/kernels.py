"""Scalar and operator-valued kernels on spatio-temporal sites.

The operator-valued kernel is separable and diagonal,

    K((x, t), (x', t')) = [ k_x(x, x') k_t(t, t') + alpha * k_x(x, x') d2k_t(t, t') ] * I_d,

where d2k_t = d/dt d/dt' k_t is the derivative kernel of the temporal
factor. For the Gaussian family, k(a, b) = exp(-||a - b||^2 / sigma^2)
(no factor 2 in the denominator), and with u = t - t':

    d/dt   k_t = -2u/sigma^2 * exp(-u^2/sigma^2)
    d/dt d/dt' k_t = (2/sigma^2 - 4u^2/sigma^4) * exp(-u^2/sigma^2)

The derivative kernel has positive diagonal 2/sigma^2 and is positive
semidefinite; both facts are enforced by tests. Matern factors
(nu in {3/2, 5/2}) are available for the alpha = 0 part only; they have
no derivative-kernel counterpart here, so alpha > 0 together with a
Matern temporal factor is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InputError, UnsupportedError
from .points import SpatioTemporalPoint

__all__ = [
    "ScalarKernel",
    "TimeRegularizedKernel",
    "eval_scalar",
    "eval_dt_dt_scalar",
    "eval_ov",
]

_MATERN_NUS = (1.5, 2.5)


@dataclass(frozen=True)
class ScalarKernel:
    """Stationary scalar kernel: family 'gaussian' or 'matern' with bandwidth sigma."""

    family: str
    sigma: float
    nu: float | None = None

    def __post_init__(self):
        if self.family not in ("gaussian", "matern"):
            raise InputError(f"unknown kernel family: {self.family!r}")
        if not np.isfinite(self.sigma) or self.sigma <= 0:
            raise InputError("kernel bandwidth sigma must be positive")
        if self.family == "matern":
            if self.nu not in _MATERN_NUS:
                raise InputError("matern smoothness nu must be 1.5 or 2.5")
        elif self.nu is not None:
            raise InputError("nu is only meaningful for the matern family")
        object.__setattr__(self, "sigma", float(self.sigma))
        if self.nu is not None:
            object.__setattr__(self, "nu", float(self.nu))

    def of_sqdist(self, d2: np.ndarray) -> np.ndarray:
        """Kernel values from squared distances (vectorized)."""
        d2 = np.asarray(d2, dtype=float)
        s = self.sigma
        if self.family == "gaussian":
            return np.exp(-d2 / s**2)
        r = np.sqrt(d2)
        if self.nu == 1.5:
            q = np.sqrt(3.0) * r / s
            return (1.0 + q) * np.exp(-q)
        q = np.sqrt(5.0) * r / s
        return (1.0 + q + q * q / 3.0) * np.exp(-q)

    def pairwise(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """(n, m) kernel matrix between rows of A and rows of B."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        return self.of_sqdist(cdist(A, B, "sqeuclidean"))


def _as_vec(a) -> np.ndarray:
    v = np.atleast_1d(np.asarray(a, dtype=float))
    if v.ndim != 1:
        raise InputError("kernel arguments must be scalars or 1-d vectors")
    return v


def eval_scalar(k: ScalarKernel, a, b) -> float:
    """k(a, b) for a single pair of (possibly vector) inputs."""
    va, vb = _as_vec(a), _as_vec(b)
    if va.shape != vb.shape:
        raise InputError("kernel arguments must have matching shapes")
    d2 = float(np.sum((va - vb) ** 2))
    return float(k.of_sqdist(d2))


def _require_gaussian(k: ScalarKernel, what: str) -> None:
    if k.family != "gaussian":
        raise UnsupportedError(f"{what} requires a gaussian temporal kernel")


def _gauss_udiff(t, tp) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    tp = np.asarray(tp, dtype=float)
    return np.atleast_1d(t)[:, None] - np.atleast_1d(tp)[None, :]


def _gauss_dt_dt_of_u(u: np.ndarray, sigma: float) -> np.ndarray:
    # d/dt d/dt' exp(-(t-t')^2/s^2) = (2/s^2 - 4u^2/s^4) exp(-u^2/s^2)
    s2 = sigma * sigma
    return (2.0 / s2 - 4.0 * u * u / (s2 * s2)) * np.exp(-u * u / s2)


def _gauss_dt_of_u(u: np.ndarray, sigma: float) -> np.ndarray:
    # d/dt exp(-(t-t')^2/s^2) = -2u/s^2 exp(-u^2/s^2)
    s2 = sigma * sigma
    return (-2.0 * u / s2) * np.exp(-u * u / s2)


def _gauss_dt_dt_dt_of_u(u: np.ndarray, sigma: float) -> np.ndarray:
    # d/dt of the derivative kernel: (8u^3/s^6 - 12u/s^4) exp(-u^2/s^2)
    s2 = sigma * sigma
    s4 = s2 * s2
    return (8.0 * u**3 / (s4 * s2) - 12.0 * u / s4) * np.exp(-u * u / s2)


def eval_dt_dt_scalar(k: ScalarKernel, t: float, tp: float) -> float:
    """Derivative kernel d/dt d/dt' k(t, t') of a gaussian temporal factor."""
    _require_gaussian(k, "the derivative kernel")
    if not (np.isfinite(t) and np.isfinite(tp)):
        raise InputError("time arguments must be finite")
    u = np.array([[float(t) - float(tp)]])
    return float(_gauss_dt_dt_of_u(u, k.sigma)[0, 0])


@dataclass(frozen=True)
class TimeRegularizedKernel:
    """Separable operator-valued kernel K0 + alpha * K1 acting as s(., .) * I_d.

    K0 = k_x k_t * I_d carries the fit; K1 = k_x (d/dt d/dt' k_t) * I_d
    penalizes temporal roughness. alpha = 0 reduces to the plain
    separable kernel.
    """

    spatial: ScalarKernel
    temporal: ScalarKernel
    alpha: float = 0.0
    output_dim: int = 1

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha < 0:
            raise InputError("alpha must be nonnegative")
        if int(self.output_dim) != self.output_dim or self.output_dim < 1:
            raise InputError("output_dim must be a positive integer")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "output_dim", int(self.output_dim))
        if self.alpha > 0:
            _require_gaussian(self.temporal, "alpha > 0")

    def scalar_cross(self, X1, t1, X2, t2) -> np.ndarray:
        """(n, m) scalar part s = k_x k_t + alpha k_x d2k_t between two site lists."""
        kx = self.spatial.pairwise(X1, X2)
        u = _gauss_udiff(t1, t2)
        if self.temporal.family == "gaussian":
            s2 = self.temporal.sigma ** 2
            kt = np.exp(-u * u / s2)
        else:
            kt = self.temporal.of_sqdist(u * u)
        s = kx * kt
        if self.alpha > 0:
            s = s + self.alpha * kx * _gauss_dt_dt_of_u(u, self.temporal.sigma)
        return s

    def scalar_cross_dt(self, X1, t1, X2, t2) -> np.ndarray:
        """d/dt of scalar_cross with respect to the first time argument."""
        _require_gaussian(self.temporal, "the temporal derivative")
        kx = self.spatial.pairwise(X1, X2)
        u = _gauss_udiff(t1, t2)
        s = kx * _gauss_dt_of_u(u, self.temporal.sigma)
        if self.alpha > 0:
            s = s + self.alpha * kx * _gauss_dt_dt_dt_of_u(u, self.temporal.sigma)
        return s


def eval_ov(K: TimeRegularizedKernel, p: SpatioTemporalPoint, q: SpatioTemporalPoint) -> np.ndarray:
    """The d x d block K(p, q): a scalar multiple of the identity."""
    if p.x.shape != q.x.shape:
        raise InputError("points must share the spatial dimension")
    s = K.scalar_cross(p.x[None, :], [p.t], q.x[None, :], [q.t])[0, 0]
    return float(s) * np.eye(K.output_dim)
