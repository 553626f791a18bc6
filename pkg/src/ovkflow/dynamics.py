"""Flow maps, trajectory pair generation, and builtin benchmark observables.

Analytic flows use closed forms; integrated flows advance a vector
field with classical fixed-substep RK4. The substep defaults to dt/50
for a single flow call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InputError
from .points import Box, PointSet

__all__ = [
    "FlowMap",
    "TrajectoryDataset",
    "flow",
    "flow_batch",
    "generate_pairs",
    "Observable",
    "builtin_observable",
]

DEFAULT_SUBSTEPS = 50


@dataclass(frozen=True)
class FlowMap:
    """Discrete-time flow of a dynamical system.

    kind 'analytic' carries a closed-form map phi(x, t0, dt); kind
    'integrated' advances vector_field with RK4. Builtins keep both a
    vector field and (where available) the closed form so integrator
    accuracy can be checked against truth.
    """

    dim: int
    kind: str
    name: str
    vector_field: Callable | None = None
    analytic_map: Callable | None = None
    h_int: float | None = None

    def __post_init__(self):
        if self.kind not in ("analytic", "integrated"):
            raise InputError(f"unknown flow kind: {self.kind!r}")
        if self.kind == "analytic" and self.analytic_map is None:
            raise InputError("analytic flow needs a closed-form map")
        if self.kind == "integrated" and self.vector_field is None:
            raise InputError("integrated flow needs a vector field")
        if self.h_int is not None and self.h_int <= 0:
            raise InputError("h_int must be positive")

    @staticmethod
    def identity(dim: int = 1) -> "FlowMap":
        return FlowMap(
            dim,
            "analytic",
            "identity",
            vector_field=lambda x, t: np.zeros_like(x),
            analytic_map=lambda x, t0, dt: np.array(x, dtype=float, copy=True),
        )

    @staticmethod
    def linear_contraction(rate: float = -1.0, dim: int = 1) -> "FlowMap":
        if not np.isfinite(rate):
            raise InputError("rate must be finite")
        return FlowMap(
            dim,
            "analytic",
            "linear_contraction",
            vector_field=lambda x, t, a=rate: a * np.asarray(x, dtype=float),
            analytic_map=lambda x, t0, dt, a=rate: np.asarray(x, dtype=float) * np.exp(a * dt),
        )

    @staticmethod
    def sine2pi(h_int: float | None = None) -> "FlowMap":
        # dx/dt = sin(2 pi x): fixed points at 0, 1/2, 1; the middle one attracts
        return FlowMap(
            1,
            "integrated",
            "sine2pi",
            vector_field=lambda x, t: np.sin(2.0 * np.pi * np.asarray(x, dtype=float)),
            h_int=h_int,
        )

    @staticmethod
    def custom(vector_field: Callable, dim: int, h_int: float | None = None) -> "FlowMap":
        return FlowMap(dim, "integrated", "custom", vector_field=vector_field, h_int=h_int)


def _rk4(v: Callable, x: np.ndarray, t0: float, dt: float, n_sub: int) -> np.ndarray:
    h = dt / n_sub
    t = t0
    for _ in range(n_sub):
        k1 = v(x, t)
        k2 = v(x + 0.5 * h * k1, t + 0.5 * h)
        k3 = v(x + 0.5 * h * k2, t + 0.5 * h)
        k4 = v(x + h * k3, t + h)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
    return x


def flow_batch(f: FlowMap, X: np.ndarray, t0: float, dt: float) -> np.ndarray:
    """Advance every row of X by dt. Rows have f.dim columns."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if not np.all(np.isfinite(X)):
        raise InputError("flow states must be finite")
    if X.shape[1] != f.dim:
        raise InputError(f"states must have {f.dim} columns")
    if f.kind == "analytic":
        return np.asarray(f.analytic_map(X, t0, dt), dtype=float)
    if dt < 0:
        raise InputError("integrated flows require dt >= 0")
    if dt == 0:
        return X.copy()
    if f.h_int is None:
        n_sub = DEFAULT_SUBSTEPS
    else:
        n_sub = max(1, int(np.ceil(dt / f.h_int)))
    return _rk4(f.vector_field, X, t0, dt, n_sub)


def flow(f: FlowMap, x, t0: float, dt: float) -> np.ndarray:
    """Single-state version of flow_batch."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return flow_batch(f, x[None, :], t0, dt)[0]


@dataclass(frozen=True)
class TrajectoryDataset:
    """Aligned (x_now, x_next) state pairs one dt apart."""

    x_now: PointSet
    x_next: PointSet
    dt: float
    observable_dim: int = 1

    def __post_init__(self):
        if len(self.x_now) != len(self.x_next):
            raise InputError("x_now and x_next must have the same length")
        if self.x_now.time_axis or self.x_next.time_axis:
            raise InputError("trajectory states are time-free")
        if not np.isfinite(self.dt) or self.dt <= 0:
            raise InputError("dt must be positive")
        if self.observable_dim < 1:
            raise InputError("observable_dim must be positive")

    def __len__(self) -> int:
        return len(self.x_now)


def _hull_box(base: Box, pts: np.ndarray) -> Box:
    lo = np.minimum(base.lower, pts.min(axis=0) - 1e-12)
    hi = np.maximum(base.upper, pts.max(axis=0) + 1e-12)
    return Box(lo, hi)


def generate_pairs(
    f: FlowMap, initial: PointSet, dt: float, observable_dim: int = 1
) -> TrajectoryDataset:
    """Advance each initial state by one dt and package the pairs."""
    if initial.time_axis:
        raise InputError("initial states must be time-free")
    if not np.isfinite(dt) or dt <= 0:
        raise InputError("dt must be positive")
    nxt = flow_batch(f, initial.coords, 0.0, dt)
    x_next = PointSet(nxt, _hull_box(initial.domain, nxt), kind="flowed")
    return TrajectoryDataset(initial, x_next, float(dt), observable_dim)


def save_pairs_csv(data: TrajectoryDataset, path) -> None:
    """Paired now/next rows: # meta line, header, one pair per row."""
    k = data.x_now.coords.shape[1]
    names = [f"x_now_{j + 1}" for j in range(k)] + [f"x_next_{j + 1}" for j in range(k)]
    with open(path, "w", newline="") as fh:
        fh.write(f"# dt={data.dt!r} observable_dim={data.observable_dim}\n")
        fh.write(",".join(names) + "\n")
        for a, b in zip(data.x_now.coords, data.x_next.coords):
            fh.write(",".join(repr(float(v)) for v in np.concatenate([a, b])) + "\n")


def load_pairs_csv(path) -> TrajectoryDataset:
    """Read back a trajectory CSV written by save_pairs_csv."""
    with open(path, newline="") as fh:
        meta = fh.readline().strip()
        if not meta.startswith("# "):
            raise InputError(f"trajectory file missing meta line: {path}")
        fields = dict(kv.split("=", 1) for kv in meta[2:].split() if "=" in kv)
        try:
            dt = float(fields["dt"])
            obs_dim = int(fields["observable_dim"])
        except (KeyError, ValueError) as exc:
            raise InputError(f"bad trajectory meta in {path}: {exc}") from None
        header = fh.readline().strip().split(",")
        try:
            rows = np.array(
                [[float(v) for v in line.split(",")] for line in fh if line.strip()]
            )
        except ValueError as exc:
            raise InputError(f"malformed trajectory file {path}: {exc}") from None
    if rows.size == 0 or rows.ndim != 2 or rows.shape[1] != len(header) or len(header) % 2:
        raise InputError(f"bad trajectory table in {path}")
    k = len(header) // 2
    now, nxt = rows[:, :k], rows[:, k:]
    lo = np.minimum(now.min(axis=0), nxt.min(axis=0)) - 1e-12
    hi = np.maximum(now.max(axis=0), nxt.max(axis=0)) + 1e-12
    box = Box(lo, hi)
    return TrajectoryDataset(
        PointSet(now, box), PointSet(nxt, box, kind="flowed"), dt, obs_dim
    )


@dataclass(frozen=True)
class Observable:
    """Closed-form benchmark observable, optionally time-dependent."""

    name: str
    dim: int
    state_dim: int
    time_dependent: bool
    fn: Callable
    dt_fn: Callable | None = None

    def __call__(self, X: np.ndarray, T: np.ndarray | None = None) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.time_dependent:
            if T is None:
                raise InputError(f"observable {self.name!r} needs time values")
            return self.fn(X, np.asarray(T, dtype=float))
        return self.fn(X)

    def time_derivative(self, X: np.ndarray, T: np.ndarray) -> np.ndarray:
        if self.dt_fn is None:
            raise InputError(f"observable {self.name!r} has no time derivative")
        return self.dt_fn(np.atleast_2d(np.asarray(X, dtype=float)), np.asarray(T, dtype=float))


def _circle(X):
    ang = 2.0 * np.pi * X[:, 0]
    return np.column_stack([np.sin(ang), np.cos(ang)])


def _coordinate(X):
    return np.array(X, dtype=float, copy=True)


def _standing_wave(X, T):
    px, pt = np.pi * X[:, 0], np.pi * T
    return np.column_stack([np.sin(px) * np.cos(pt), np.cos(px) * np.sin(pt)])


def _standing_wave_dt(X, T):
    px, pt = np.pi * X[:, 0], np.pi * T
    return np.column_stack([-np.pi * np.sin(px) * np.sin(pt), np.pi * np.cos(px) * np.cos(pt)])


def builtin_observable(name: str, state_dim: int = 1) -> Observable:
    """Named closed-form observables used by the benchmark experiments.

    'circle'        x -> (sin 2 pi x, cos 2 pi x) on scalar states
    'coordinate'    x -> x
    'standing_wave' (x, t) -> (sin(pi x) cos(pi t), cos(pi x) sin(pi t)),
                    with its exact time derivative
    """
    if name == "circle":
        return Observable("circle", 2, 1, False, _circle)
    if name == "coordinate":
        return Observable("coordinate", state_dim, state_dim, False, _coordinate)
    if name == "standing_wave":
        return Observable("standing_wave", 2, 1, True, _standing_wave, _standing_wave_dt)
    raise InputError(f"unknown builtin observable: {name!r}")
