"""Sample-site geometry: boxes, point sets, fill distance.

Point sets carry joint coordinates of shape (n, k). When a set is
spatio-temporal the last column is the time coordinate; state-only sets
(used by the Koopman routines) have no time column and evaluate kernels
at t = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import InputError

__all__ = [
    "Box",
    "SpatioTemporalPoint",
    "PointSet",
    "grid_points",
    "random_points",
    "bounding_domain",
    "fill_distance",
    "min_separation",
]


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given by per-axis lower/upper bounds."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise InputError("box bounds must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise InputError("box bounds must be finite")
        if np.any(hi <= lo):
            raise InputError("box must have positive extent on every axis")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def contains(self, pts: np.ndarray) -> bool:
        pts = np.atleast_2d(pts)
        return bool(np.all(pts >= self.lower) and np.all(pts <= self.upper))


@dataclass(frozen=True)
class SpatioTemporalPoint:
    """A single sample site (x, t)."""

    x: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        if x.ndim != 1 or not np.all(np.isfinite(x)) or not np.isfinite(self.t):
            raise InputError("point coordinates must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", float(self.t))


@dataclass(frozen=True)
class PointSet:
    """Finite collection of pairwise-distinct sample sites.

    coords: (n, k) joint coordinates. If time_axis is True the last
    column holds t and the spatial part is coords[:, :-1].
    """

    coords: np.ndarray
    domain: Box
    time_axis: bool = False
    kind: str = "explicit"
    seed: int | None = None

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.ndim != 2 or c.shape[0] == 0:
            raise InputError("coords must be a nonempty (n, k) array")
        if not np.all(np.isfinite(c)):
            raise InputError("coords must be finite")
        if c.shape[1] != self.domain.dim:
            raise InputError("coords dimension does not match domain")
        if self.time_axis and c.shape[1] < 2:
            raise InputError("time_axis requires at least one spatial column")
        if len(np.unique(c, axis=0)) != c.shape[0]:
            raise InputError("points must be pairwise distinct")
        if not self.domain.contains(c):
            raise InputError("points must lie inside the domain")
        object.__setattr__(self, "coords", c)

    def __len__(self) -> int:
        return self.coords.shape[0]

    @property
    def spatial(self) -> np.ndarray:
        return self.coords[:, :-1] if self.time_axis else self.coords

    @property
    def times(self) -> np.ndarray:
        if self.time_axis:
            return self.coords[:, -1]
        return np.zeros(len(self))

    def point(self, i: int) -> SpatioTemporalPoint:
        return SpatioTemporalPoint(self.spatial[i], float(self.times[i]))

    def to_csv(self, path) -> None:
        save_pointset_csv(self, path)


def grid_points(domain: Box, counts, time_axis: bool = False) -> PointSet:
    """Endpoint-inclusive tensor grid with counts[i] nodes on axis i."""
    counts = np.atleast_1d(np.asarray(counts, dtype=int))
    if counts.shape[0] != domain.dim:
        raise InputError("one count per domain axis required")
    if np.any(counts < 2):
        raise InputError("grid needs at least 2 nodes per axis")
    axes = [
        np.linspace(domain.lower[i], domain.upper[i], counts[i])
        for i in range(domain.dim)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    coords = np.column_stack([m.ravel() for m in mesh])
    return PointSet(coords, domain, time_axis=time_axis, kind="grid")


def random_points(domain: Box, n: int, seed: int, time_axis: bool = False) -> PointSet:
    """n points drawn uniformly from the box, reproducible under seed."""
    if n < 1:
        raise InputError("n must be positive")
    rng = np.random.default_rng(seed)
    coords = rng.uniform(domain.lower, domain.upper, size=(n, domain.dim))
    return PointSet(coords, domain, time_axis=time_axis, kind="uniform_random", seed=seed)


def bounding_domain(coords: np.ndarray) -> Box:
    """Smallest axis-aligned box around coords, padded to positive extent.

    The pad scales with the coordinate magnitude so it survives float
    rounding even when an axis is degenerate (all values equal), as for
    a single site or a fixed-time snapshot.
    """
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    lo, hi = coords.min(axis=0), coords.max(axis=0)
    pad = 1e-9 * np.maximum(hi - lo, np.maximum(np.abs(lo), 1.0))
    return Box(lo - pad, hi + pad)


def _default_probe_resolution(dim: int) -> int:
    # dense 1-d scan is cheap; higher dims use a coarser per-axis count
    if dim == 1:
        return 2048
    if dim == 2:
        return 256
    return 64


def fill_distance(ps: PointSet, probe_resolution: int | None = None) -> float:
    """sup_x min_i ||x - x_i|| over the domain, probe-grid approximation.

    The supremum is taken over an endpoint-inclusive probe grid with
    probe_resolution nodes per axis, so the result is a lower bound of
    the true fill distance that converges as the resolution grows.
    """
    dim = ps.domain.dim
    if probe_resolution is None:
        probe_resolution = _default_probe_resolution(dim)
    if probe_resolution < 10:
        raise InputError("probe_resolution must be at least 10")
    axes = [
        np.linspace(ps.domain.lower[i], ps.domain.upper[i], probe_resolution)
        for i in range(dim)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    probes = np.column_stack([m.ravel() for m in mesh])
    tree = cKDTree(ps.coords)
    dist, _ = tree.query(probes, k=1)
    return float(np.max(dist))


def min_separation(ps: PointSet) -> float:
    """Smallest pairwise distance in the set (0 never occurs: sets are distinct)."""
    if len(ps) < 2:
        return np.inf
    tree = cKDTree(ps.coords)
    dist, _ = tree.query(ps.coords, k=2)
    return float(np.min(dist[:, 1]))


def save_pointset_csv(ps: PointSet, path) -> None:
    """Write sites as CSV: spatial columns x_1..x_d, then t if present."""
    d = ps.spatial.shape[1]
    names = [f"x_{j + 1}" for j in range(d)]
    if ps.time_axis:
        names.append("t")
    with open(path, "w", newline="") as fh:
        fh.write(",".join(names) + "\n")
        for row in ps.coords:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def load_pointset_csv(path, domain: Box | None = None) -> PointSet:
    """Read a point-set CSV written by save_pointset_csv."""
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        if not header:
            raise InputError(f"empty point-set file: {path}")
        names = header.split(",")
        try:
            coords = np.array(
                [[float(v) for v in line.split(",")] for line in fh if line.strip()]
            )
        except ValueError as exc:
            raise InputError(f"malformed point-set file {path}: {exc}") from None
    if coords.size == 0:
        raise InputError(f"no rows in point-set file: {path}")
    if coords.shape[1] != len(names):
        raise InputError(f"ragged rows in point-set file: {path}")
    time_axis = names[-1] == "t"
    if domain is None:
        domain = bounding_domain(coords)
    return PointSet(coords, domain, time_axis=time_axis)
