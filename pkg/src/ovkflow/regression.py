"""Vector-valued kernel ridge regression in the time-regularized RKHS.

The fitted model is the representer expansion

    f(x, t) = sum_i s((x, t), (x_i, t_i)) c_i,      c in R^{n x d},

with stacked coefficients solving (G + lam I) c = y over the block Gram
matrix. Prediction and exact temporal differentiation reduce to scalar
kernel rows against the centers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .gram import assemble_gram, solve_ridge
from .kernels import ScalarKernel, TimeRegularizedKernel
from .points import Box, PointSet, SpatioTemporalPoint, bounding_domain

__all__ = [
    "TrainingSet",
    "RepresenterModel",
    "fit",
    "predict",
    "predict_time_derivative",
    "empirical_errors",
    "load_training_csv",
    "save_model",
    "load_model",
]

DEFAULT_LAMBDA_PER_SITE = 1e-8
ARCHIVE_MAGIC = "ovkflow-model"
ARCHIVE_VERSION = 1


@dataclass(frozen=True)
class TrainingSet:
    """Sample sites with one d-vector target per site."""

    inputs: PointSet
    targets: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.targets, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        if y.ndim != 2 or y.shape[0] != len(self.inputs):
            raise InputError("targets must be (n_sites, d)")
        if not np.all(np.isfinite(y)):
            raise InputError("targets must be finite")
        object.__setattr__(self, "targets", y)

    @property
    def output_dim(self) -> int:
        return self.targets.shape[1]


@dataclass(frozen=True)
class RepresenterModel:
    kernel: TimeRegularizedKernel
    centers: PointSet
    coefficients: np.ndarray
    lam: float
    rkhs_norm_sq: float


def default_lambda(n_sites: int) -> float:
    return DEFAULT_LAMBDA_PER_SITE * n_sites


def fit(K: TimeRegularizedKernel, data: TrainingSet, lam: float | None = None) -> RepresenterModel:
    """Ridge-regularized representer fit of the training targets."""
    if data.output_dim != K.output_dim:
        raise InputError(
            f"targets have {data.output_dim} components but kernel output_dim is {K.output_dim}"
        )
    if lam is None:
        lam = default_lambda(len(data.inputs))
    G = assemble_gram(K, data.inputs)
    c = solve_ridge(G, data.targets.ravel(), lam)
    norm_sq = float(c @ (G.entries @ c))
    coeffs = c.reshape(len(data.inputs), K.output_dim)
    return RepresenterModel(K, data.inputs, coeffs, float(lam), max(norm_sq, 0.0))


def _cross_rows(m: RepresenterModel, X: np.ndarray, T: np.ndarray) -> np.ndarray:
    return m.kernel.scalar_cross(X, T, m.centers.spatial, m.centers.times)


def _check_probe(m: RepresenterModel, p: SpatioTemporalPoint) -> None:
    if p.x.shape[0] != m.centers.spatial.shape[1]:
        raise InputError("probe spatial dimension does not match the model centers")


def predict(m: RepresenterModel, p: SpatioTemporalPoint) -> np.ndarray:
    """Model value f(p) as a length-d vector."""
    _check_probe(m, p)
    row = _cross_rows(m, p.x[None, :], np.array([p.t]))
    return (row @ m.coefficients)[0]


def predict_batch(m: RepresenterModel, X: np.ndarray, T: np.ndarray) -> np.ndarray:
    """Vectorized model values at many sites, shape (n, d)."""
    return _cross_rows(m, X, T) @ m.coefficients


def predict_time_derivative(m: RepresenterModel, p: SpatioTemporalPoint) -> np.ndarray:
    """Exact d/dt of the model at p (gaussian temporal factor only)."""
    _check_probe(m, p)
    row = m.kernel.scalar_cross_dt(p.x[None, :], np.array([p.t]), m.centers.spatial, m.centers.times)
    return (row @ m.coefficients)[0]


def predict_time_derivative_batch(m: RepresenterModel, X: np.ndarray, T: np.ndarray) -> np.ndarray:
    row = m.kernel.scalar_cross_dt(X, T, m.centers.spatial, m.centers.times)
    return row @ m.coefficients


def empirical_errors(m: RepresenterModel, field, dt_field, grid: PointSet) -> tuple[float, float]:
    """Discrete L2 errors of the model and its t-derivative against a truth field.

    field(x, t) and dt_field(x, t) map (n, d_x), (n,) arrays to (n, d)
    values; the squared errors are summed with uniform cell-volume
    weights so the result approximates the integral norm over the grid's
    domain.
    """
    X, T = grid.spatial, grid.times
    vol = float(np.prod(grid.domain.upper - grid.domain.lower))
    w = vol / len(grid)
    diff_f = predict_batch(m, X, T) - np.asarray(field(X, T), dtype=float)
    diff_d = predict_time_derivative_batch(m, X, T) - np.asarray(dt_field(X, T), dtype=float)
    l2_field = float(np.sqrt(np.sum(diff_f**2) * w))
    l2_dt = float(np.sqrt(np.sum(diff_d**2) * w))
    return l2_field, l2_dt


def load_training_csv(path, domain: Box | None = None) -> TrainingSet:
    """Read a training CSV with header x_1..x_k,t,y_1..y_d."""
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        if not header:
            raise InputError(f"empty training file: {path}")
        names = header.split(",")
        try:
            rows = np.array(
                [[float(v) for v in line.split(",")] for line in fh if line.strip()]
            )
        except ValueError as exc:
            raise InputError(f"malformed training file {path}: {exc}") from None
    x_cols = [i for i, s in enumerate(names) if s.startswith("x_")]
    y_cols = [i for i, s in enumerate(names) if s.startswith("y_")]
    if "t" not in names or not x_cols or not y_cols:
        raise InputError(f"training header must name x_*, t and y_* columns: {path}")
    t_col = names.index("t")
    if rows.size == 0:
        raise InputError(f"no rows in training file: {path}")
    if rows.ndim != 2 or rows.shape[1] != len(names):
        raise InputError(f"ragged rows in training file: {path}")
    coords = np.column_stack([rows[:, x_cols], rows[:, t_col]])
    if domain is None:
        domain = bounding_domain(coords)
    inputs = PointSet(coords, domain, time_axis=True)
    return TrainingSet(inputs, rows[:, y_cols])


def _fmt(v: float) -> str:
    return repr(float(v))


def save_model(m: RepresenterModel, path) -> None:
    """Serialize a fitted model to the versioned text archive format."""
    k = m.kernel
    d_x = m.centers.spatial.shape[1]
    with open(path, "w", newline="") as fh:
        fh.write(f"{ARCHIVE_MAGIC} {ARCHIVE_VERSION}\n")
        fh.write("[kernel]\n")
        fh.write(f"spatial.family = {k.spatial.family}\n")
        fh.write(f"spatial.sigma = {_fmt(k.spatial.sigma)}\n")
        if k.spatial.nu is not None:
            fh.write(f"spatial.nu = {_fmt(k.spatial.nu)}\n")
        fh.write(f"temporal.family = {k.temporal.family}\n")
        fh.write(f"temporal.sigma = {_fmt(k.temporal.sigma)}\n")
        if k.temporal.nu is not None:
            fh.write(f"temporal.nu = {_fmt(k.temporal.nu)}\n")
        fh.write(f"alpha = {_fmt(k.alpha)}\n")
        fh.write(f"output_dim = {k.output_dim}\n")
        fh.write("[ridge]\n")
        fh.write(f"lambda = {_fmt(m.lam)}\n")
        fh.write(f"rkhs_norm_sq = {_fmt(m.rkhs_norm_sq)}\n")
        fh.write("[domain]\n")
        fh.write("lower = " + ",".join(_fmt(v) for v in m.centers.domain.lower) + "\n")
        fh.write("upper = " + ",".join(_fmt(v) for v in m.centers.domain.upper) + "\n")
        fh.write("[centers]\n")
        fh.write(",".join([f"x_{j + 1}" for j in range(d_x)] + ["t"]) + "\n")
        for row in m.centers.coords:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
        fh.write("[coefficients]\n")
        fh.write(",".join(f"c_{j + 1}" for j in range(k.output_dim)) + "\n")
        for row in m.coefficients:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _split_sections(lines: list[str], path) -> dict[str, list[str]]:
    sections: dict[str, list[str]] = {}
    current = None
    for line in lines:
        line = line.rstrip("\n")
        if not line.strip():
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            sections[current] = []
        elif current is None:
            raise InputError(f"content before first section in archive: {path}")
        else:
            sections[current].append(line)
    return sections


def _kv(section: list[str], path) -> dict[str, str]:
    out = {}
    for line in section:
        if "=" not in line:
            raise InputError(f"expected key = value line in archive: {path}")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def load_model(path) -> RepresenterModel:
    """Read back an archive written by save_model."""
    with open(path, newline="") as fh:
        first = fh.readline().strip().split()
        if len(first) != 2 or first[0] != ARCHIVE_MAGIC:
            raise InputError(f"not a model archive: {path}")
        if int(first[1]) != ARCHIVE_VERSION:
            raise InputError(f"unsupported archive version {first[1]}: {path}")
        sections = _split_sections(fh.readlines(), path)
    for name in ("kernel", "ridge", "domain", "centers", "coefficients"):
        if name not in sections:
            raise InputError(f"archive missing [{name}] section: {path}")
    kcfg = _kv(sections["kernel"], path)
    rcfg = _kv(sections["ridge"], path)
    dcfg = _kv(sections["domain"], path)
    try:
        spatial = ScalarKernel(
            kcfg["spatial.family"],
            float(kcfg["spatial.sigma"]),
            float(kcfg["spatial.nu"]) if "spatial.nu" in kcfg else None,
        )
        temporal = ScalarKernel(
            kcfg["temporal.family"],
            float(kcfg["temporal.sigma"]),
            float(kcfg["temporal.nu"]) if "temporal.nu" in kcfg else None,
        )
        kernel = TimeRegularizedKernel(
            spatial, temporal, float(kcfg["alpha"]), int(kcfg["output_dim"])
        )
        lam = float(rcfg["lambda"])
        norm_sq = float(rcfg["rkhs_norm_sq"])
        domain = Box(
            np.array([float(v) for v in dcfg["lower"].split(",")]),
            np.array([float(v) for v in dcfg["upper"].split(",")]),
        )
        centers_rows = sections["centers"]
        coords = np.array([[float(v) for v in r.split(",")] for r in centers_rows[1:]])
        coeff_rows = sections["coefficients"]
        coeffs = np.array([[float(v) for v in r.split(",")] for r in coeff_rows[1:]])
    except (KeyError, ValueError) as exc:
        raise InputError(f"malformed model archive {path}: {exc}") from None
    centers = PointSet(coords, domain, time_axis=True)
    if coeffs.shape != (len(centers), kernel.output_dim):
        raise InputError(f"coefficient block shape mismatch in archive: {path}")
    return RepresenterModel(kernel, centers, coeffs, lam, norm_sq)
