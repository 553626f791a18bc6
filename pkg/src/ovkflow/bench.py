"""Benchmark experiment harness: configs, runners, rate reports, CSV output.

Experiments are driven by INI-style config files. A [kernel] section
holds spatial.family / spatial.sigma / temporal.family / temporal.sigma
/ alpha / output_dim; an [experiment] section holds sweep sizes, lambda,
dt, rank_list, seed, output_dir and per-experiment options; fit and
forecast read file paths from a [data] section. All result tables are
CSV ('.' decimal, comma separator, one header row) and rerun
bit-identically for a fixed config and seed.
"""

from __future__ import annotations

import configparser
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import (
    FlowMap,
    builtin_observable,
    flow_batch,
    generate_pairs,
    load_pairs_csv,
)
from .errors import InputError
from .kernels import ScalarKernel, TimeRegularizedKernel
from .koopman import (
    KOOPMAN_PINV_RTOL,
    build_koopman,
    decompose,
    forecast_batch,
    forecast_error_curve,
    load_forecast_model,
    make_forecast,
    operator_gap,
    save_forecast_model,
)
from .points import Box, PointSet, fill_distance, grid_points, load_pointset_csv
from .regression import (
    default_lambda,
    empirical_errors,
    fit,
    load_model,
    load_training_csv,
    predict_batch,
    predict_time_derivative_batch,
    save_model,
)

__all__ = [
    "ExperimentConfig",
    "RateReport",
    "load_config",
    "fit_slope",
    "run_exp1",
    "run_exp2",
    "run_exp3",
    "run_fit",
    "run_forecast",
    "run_experiment",
]

logger = logging.getLogger(__name__)

EXPERIMENTS = ("exp1", "exp2", "exp3", "fit", "forecast")


@dataclass
class ExperimentConfig:
    experiment: str
    kernel: TimeRegularizedKernel
    sweep: tuple[int, ...]
    lam_spec: str
    dt: float
    rank_list: tuple[int, ...]
    seed: int
    output_dir: str
    parallel: bool = False
    options: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InputError(f"unknown experiment: {self.experiment!r}")
        if any(n <= 0 for n in self.sweep):
            raise InputError("sweep sizes must be positive")
        if any(r <= 0 for r in self.rank_list):
            raise InputError("ranks must be positive")
        if not np.isfinite(self.dt) or self.dt <= 0:
            raise InputError("dt must be positive")
        self.resolve_lambda(max(self.sweep) if self.sweep else 1)  # validate spec

    def resolve_lambda(self, n_sites: int) -> float:
        spec = self.lam_spec
        if spec == "auto":
            return default_lambda(n_sites)
        if spec.startswith("schedule:"):
            try:
                r = float(spec.split(":", 1)[1])
            except ValueError:
                raise InputError(f"bad lambda schedule: {spec!r}") from None
            if r <= 0:
                raise InputError("lambda schedule exponent r must be positive")
            return float(n_sites) ** (-1.0 / (2.0 * r + 1.0))
        try:
            lam = float(spec)
        except ValueError:
            raise InputError(f"bad lambda value: {spec!r}") from None
        if lam < 0 or not np.isfinite(lam):
            raise InputError("lambda must be nonnegative")
        return lam

    def opt(self, key: str, default: str | None = None) -> str | None:
        return self.options.get(key, default)

    def opt_float(self, key: str, default: float) -> float:
        raw = self.options.get(key)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            raise InputError(f"option {key} must be a number, got {raw!r}") from None

    def opt_int(self, key: str, default: int) -> int:
        raw = self.options.get(key)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise InputError(f"option {key} must be an integer, got {raw!r}") from None

    def opt_bool(self, key: str, default: bool) -> bool:
        raw = self.options.get(key)
        if raw is None:
            return default
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise InputError(f"option {key} must be a boolean, got {raw!r}")

    def echo_lines(self) -> list[str]:
        k = self.kernel
        lines = [
            f"experiment = {self.experiment}",
            f"kernel.spatial.family = {k.spatial.family}",
            f"kernel.spatial.sigma = {k.spatial.sigma!r}",
            f"kernel.temporal.family = {k.temporal.family}",
            f"kernel.temporal.sigma = {k.temporal.sigma!r}",
            f"kernel.alpha = {k.alpha!r}",
            f"kernel.output_dim = {k.output_dim}",
            f"sweep = {','.join(str(n) for n in self.sweep)}",
            f"lambda = {self.lam_spec}",
            f"dt = {self.dt!r}",
            f"rank_list = {','.join(str(r) for r in self.rank_list)}",
            f"seed = {self.seed}",
            f"output_dir = {self.output_dir}",
            f"parallel = {self.parallel}",
        ]
        if k.spatial.nu is not None:
            lines.insert(3, f"kernel.spatial.nu = {k.spatial.nu!r}")
        if k.temporal.nu is not None:
            lines.insert(-8, f"kernel.temporal.nu = {k.temporal.nu!r}")
        for key in sorted(self.options):
            lines.append(f"{key} = {self.options[key]}")
        return lines


def _parse_int_list(raw: str, what: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in raw.split(",") if v.strip())
    except ValueError:
        raise InputError(f"{what} must be a comma-separated integer list, got {raw!r}") from None


def _kernel_from_section(sec) -> TimeRegularizedKernel:
    def getk(key, default=None):
        if key in sec:
            return sec[key]
        if default is None:
            raise InputError(f"config missing kernel.{key}")
        return default

    def family_and_nu(prefix):
        fam = getk(f"{prefix}.family", "gaussian")
        nu_raw = sec.get(f"{prefix}.nu")
        if fam in ("matern32", "matern52"):
            return "matern", 1.5 if fam == "matern32" else 2.5
        nu = float(nu_raw) if nu_raw is not None else None
        return fam, nu

    sf, snu = family_and_nu("spatial")
    tf, tnu = family_and_nu("temporal")
    try:
        spatial = ScalarKernel(sf, float(getk("spatial.sigma")), snu)
        temporal = ScalarKernel(tf, float(getk("temporal.sigma")), tnu)
        return TimeRegularizedKernel(
            spatial, temporal, float(getk("alpha", "0")), int(getk("output_dim", "1"))
        )
    except ValueError as exc:
        raise InputError(f"bad kernel config: {exc}") from None


def load_config(
    path,
    experiment: str | None = None,
    out: str | None = None,
    seed: int | None = None,
    parallel: bool = False,
) -> ExperimentConfig:
    """Parse an experiment config file; CLI flags override file values."""
    p = Path(path)
    if not p.is_file():
        raise InputError(f"config file not found: {path}")
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read(p)
    except configparser.Error as exc:
        raise InputError(f"malformed config {path}: {exc}") from None
    if "kernel" not in cp:
        raise InputError(f"config missing [kernel] section: {path}")
    kernel = _kernel_from_section(cp["kernel"])
    exp_sec = cp["experiment"] if "experiment" in cp else {}
    name = experiment or exp_sec.get("name")
    if name is None:
        raise InputError("experiment name missing (no CLI subcommand or name key)")
    if experiment and "name" in exp_sec and exp_sec["name"] != experiment:
        raise InputError(
            f"config names experiment {exp_sec['name']!r} but {experiment!r} was requested"
        )
    options = {k: v for k, v in exp_sec.items() if k not in
               ("name", "sweep", "lambda", "dt", "rank_list", "seed", "output_dir")}
    if "data" in cp:
        for k, v in cp["data"].items():
            options[f"data.{k}"] = v
    try:
        seed_val = seed if seed is not None else int(exp_sec.get("seed", "0"))
    except ValueError:
        raise InputError("seed must be an integer") from None
    try:
        dt_val = float(exp_sec.get("dt", "0.1"))
    except ValueError:
        raise InputError("dt must be a number") from None
    return ExperimentConfig(
        experiment=name,
        kernel=kernel,
        sweep=_parse_int_list(exp_sec.get("sweep", "64,128,256,512"), "sweep"),
        lam_spec=exp_sec.get("lambda", "auto"),
        dt=dt_val,
        rank_list=_parse_int_list(exp_sec.get("rank_list", "1,2,4,8"), "rank_list"),
        seed=seed_val,
        output_dir=out or exp_sec.get("output_dir", "ovk-results"),
        parallel=parallel,
        options=options,
    )


def fit_slope(ns, errs) -> tuple[float, float]:
    """OLS slope and standard error of log(err) against log(N)."""
    ns = np.asarray(ns, dtype=float)
    errs = np.asarray(errs, dtype=float)
    if ns.shape != errs.shape or ns.ndim != 1 or ns.size < 2:
        raise InputError("fit_slope needs at least 2 aligned (N, err) points")
    if np.any(errs <= 0) or np.any(ns <= 0):
        raise InputError("fit_slope requires positive sizes and errors")
    x, y = np.log(ns), np.log(errs)
    xbar = x.mean()
    sxx = np.sum((x - xbar) ** 2)
    if sxx == 0:
        raise InputError("fit_slope needs at least two distinct sizes")
    slope = float(np.sum((x - xbar) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * xbar)
    resid = y - (slope * x + intercept)
    dof = x.size - 2
    stderr = float(np.sqrt(np.sum(resid**2) / dof / sxx)) if dof > 0 else 0.0
    return slope, stderr


@dataclass(frozen=True)
class RateReport:
    """Convergence table with per-metric fitted slopes (when >= 3 rows)."""

    columns: tuple[str, ...]
    rows: np.ndarray
    slopes: dict

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]


def _near_square_factors(n: int) -> tuple[int, int]:
    best = None
    for a in range(1, int(np.sqrt(n)) + 1):
        if n % a == 0:
            best = (a, n // a)
    if best is None or best[0] < 2:
        raise InputError(f"sweep size {n} does not factor into a 2-d grid (>= 2 per axis)")
    # larger count on the time axis: the derivative metric is bound by
    # temporal resolution, so this keeps both error series strictly falling
    return best


_UNIT_SQUARE = Box(np.array([0.0, 0.0]), np.array([1.0, 1.0]))


def _exp1_entry(kernel: TimeRegularizedKernel, lam: float, n: int, eval_res: int):
    nx, nt = _near_square_factors(n)
    train = grid_points(_UNIT_SQUARE, (nx, nt), time_axis=True)
    obs = builtin_observable("standing_wave")
    targets = obs(train.spatial, train.times)
    from .regression import TrainingSet

    model = fit(kernel, TrainingSet(train, targets), lam)
    eval_grid = grid_points(_UNIT_SQUARE, (eval_res, eval_res), time_axis=True)
    l2_field, l2_dt = empirical_errors(model, obs, obs.time_derivative, eval_grid)
    return n, fill_distance(train), l2_field, l2_dt


def run_exp1(cfg: ExperimentConfig) -> RateReport:
    """Convergence of the fitted field and its t-derivative on the
    standing-wave benchmark over grid training sets of growing size."""
    if cfg.kernel.output_dim != 2:
        raise InputError("exp1 needs kernel.output_dim = 2 (the benchmark field is planar)")
    eval_res = cfg.opt_int("eval_resolution", 64)
    jobs = [(cfg.kernel, cfg.resolve_lambda(n), n, eval_res) for n in cfg.sweep]
    if cfg.parallel and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(len(jobs), 4)) as ex:
            entries = list(ex.map(_exp1_entry, *zip(*jobs)))
    else:
        entries = [_exp1_entry(*j) for j in jobs]
    entries.sort(key=lambda r: r[0])
    rows = np.array(entries, dtype=float)
    columns = ("n", "h_fill", "l2_field", "l2_dt")
    if cfg.opt_bool("sobolev_proxy", False):
        combined = np.sqrt(rows[:, 2] ** 2 + rows[:, 3] ** 2)
        rows = np.column_stack([rows, combined])
        columns = columns + ("sobolev_proxy",)
    slopes = {}
    if rows.shape[0] >= 3:
        for j, name in enumerate(columns[2:], start=2):
            slopes[name] = fit_slope(rows[:, 0], rows[:, j])
    return RateReport(columns, rows, slopes)


def state_grid_1d(n: int, lo: float, hi: float, offset: float = 0.0, avoid=()) -> PointSet:
    """Uniform 1-d state grid, nudged off any `avoid` values by `offset`."""
    if n < 2:
        raise InputError("state grid needs at least 2 points")
    xs = np.linspace(lo + offset, hi - offset, n)
    for a in avoid:
        below = (xs > a - offset) & (xs < a)
        xs[below] = a - offset
        above = (xs >= a) & (xs < a + offset)
        xs[above] = a + offset
    return PointSet(xs[:, None], Box(np.array([lo]), np.array([hi])))


def _system_flow(name: str, cfg: ExperimentConfig) -> FlowMap:
    if name == "sine2pi":
        return FlowMap.sine2pi()
    if name == "linear_contraction":
        return FlowMap.linear_contraction(cfg.opt_float("rate", -1.0))
    if name == "identity":
        return FlowMap.identity()
    raise InputError(f"unknown system: {name!r}")


def _system_states(name: str, n: int, cfg: ExperimentConfig) -> PointSet:
    if name == "sine2pi":
        off = cfg.opt_float("offset", 1e-3)
        return state_grid_1d(n, 0.0, 1.0, offset=off, avoid=(0.0, 0.5, 1.0))
    lo = cfg.opt_float("domain_lo", -1.0)
    hi = cfg.opt_float("domain_hi", 1.0)
    return state_grid_1d(n, lo, hi)


_EXP2_PROBES = (
    lambda x: np.sin(2 * np.pi * x[:, 0]),
    lambda x: np.cos(2 * np.pi * x[:, 0]),
    lambda x: np.sin(4 * np.pi * x[:, 0]),
    lambda x: np.cos(4 * np.pi * x[:, 0]),
    lambda x: np.sin(6 * np.pi * x[:, 0]),
)


def _exp2_entry(kernel: TimeRegularizedKernel, n: int, dt: float, rtol: float,
                max_modes: int, offset: float):
    states = state_grid_1d(n, 0.0, 1.0, offset=offset, avoid=(0.0, 0.5, 1.0))
    pairs = generate_pairs(FlowMap.sine2pi(), states, dt, observable_dim=2)
    op = build_koopman(kernel, pairs, rtol)
    dec = decompose(op, max_modes)
    return n, op, dec


@dataclass(frozen=True)
class Exp2Result:
    eig_rows: np.ndarray  # n, k, re, im, modulus, argument, residual
    gap_rows: np.ndarray  # n_small, n_large, gap


def run_exp2(cfg: ExperimentConfig) -> Exp2Result:
    """Koopman spectra of the circle observable's dynamics and the
    successive-size operator self-convergence proxy."""
    if cfg.kernel.output_dim != 1:
        raise InputError("exp2 runs on a scalar kernel (kernel.output_dim = 1)")
    max_modes = cfg.opt_int("max_modes", 5)
    rtol = cfg.opt_float("pinv_rtol", KOOPMAN_PINV_RTOL)
    offset = cfg.opt_float("offset", 1e-3)
    jobs = [(cfg.kernel, n, cfg.dt, rtol, max_modes, offset) for n in cfg.sweep]
    if cfg.parallel and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(len(jobs), 4)) as ex:
            entries = list(ex.map(_exp2_entry, *zip(*jobs)))
    else:
        entries = [_exp2_entry(*j) for j in jobs]
    entries.sort(key=lambda r: r[0])
    eig_rows = []
    for n, _, dec in entries:
        for k in range(dec.n_modes):
            lam = dec.eigenvalues[k]
            eig_rows.append(
                (n, k + 1, lam.real, lam.imag, abs(lam), float(np.angle(lam)),
                 float(dec.residuals[k]))
            )
    gap_rows = []
    for (n_a, op_a, _), (n_b, op_b, _) in zip(entries, entries[1:]):
        gap_rows.append((n_a, n_b, operator_gap(op_a, op_b, _EXP2_PROBES)))
    return Exp2Result(np.array(eig_rows, dtype=float), np.array(gap_rows, dtype=float))


@dataclass(frozen=True)
class Exp3Result:
    curve_rows: np.ndarray  # rank, steps, time, err
    eig_rows: np.ndarray    # k, re, im, modulus, argument, residual


def run_exp3(cfg: ExperimentConfig) -> Exp3Result:
    """Spectral forecast error against the true flow, swept over
    truncation ranks."""
    if cfg.kernel.output_dim != 1:
        raise InputError("exp3 runs on a scalar kernel (kernel.output_dim = 1)")
    system = cfg.opt("system", "sine2pi")
    obs_name = cfg.opt("observable", "circle" if system == "sine2pi" else "coordinate")
    n = cfg.opt_int("n", cfg.sweep[-1] if cfg.sweep else 200)
    horizon = cfg.opt_int("horizon", 10)
    max_modes = cfg.opt_int("max_modes", 16)
    rtol = cfg.opt_float("pinv_rtol", KOOPMAN_PINV_RTOL)
    eval_res = cfg.opt_int("eval_resolution", 256)

    flow_map = _system_flow(system, cfg)
    states = _system_states(system, n, cfg)
    obs = builtin_observable(obs_name, state_dim=states.coords.shape[1])
    pairs = generate_pairs(flow_map, states, cfg.dt, observable_dim=obs.dim)
    op = build_koopman(cfg.kernel, pairs, rtol)
    dec = decompose(op, max_modes)

    lo, hi = states.domain.lower[0], states.domain.upper[0]
    pad = 0.02 * (hi - lo)
    eval_states = state_grid_1d(eval_res, lo + pad, hi - pad)

    def truth(X, steps):
        return obs(flow_batch(flow_map, X, 0.0, steps * cfg.dt))

    ranks = [r for r in cfg.rank_list if r <= dec.n_modes]
    if not ranks:
        raise InputError("no requested rank is within the retained mode count")
    curve_rows = []
    for r in ranks:
        fm = make_forecast(dec, op, obs, r, cfg.dt)
        for steps, t, err in forecast_error_curve(fm, truth, eval_states, horizon):
            curve_rows.append((r, steps, t, err))
    eig_rows = [
        (k + 1, dec.eigenvalues[k].real, dec.eigenvalues[k].imag,
         abs(dec.eigenvalues[k]), float(np.angle(dec.eigenvalues[k])),
         float(dec.residuals[k]))
        for k in range(dec.n_modes)
    ]
    return Exp3Result(np.array(curve_rows, dtype=float), np.array(eig_rows, dtype=float))


@dataclass(frozen=True)
class FitResult:
    model: object
    summary: dict
    prediction_rows: np.ndarray | None
    prediction_header: tuple[str, ...] | None


def run_fit(cfg: ExperimentConfig) -> FitResult:
    """Fit (or load) a representer model, optionally evaluate it at probes."""
    model_in = cfg.opt("data.model_in")
    if model_in:
        model = load_model(model_in)
    else:
        training_path = cfg.opt("data.training")
        if not training_path:
            raise InputError("fit needs data.training (CSV) or data.model_in (archive)")
        data = load_training_csv(training_path)
        lam = cfg.resolve_lambda(len(data.inputs))
        model = fit(cfg.kernel, data, lam)
    pred_rows = None
    pred_header = None
    probes_path = cfg.opt("data.probes")
    if probes_path:
        probes = load_pointset_csv(probes_path)
        if not probes.time_axis:
            raise InputError("probe CSV must include a t column")
        X, T = probes.spatial, probes.times
        vals = predict_batch(model, X, T)
        cols = [X, T[:, None], vals]
        d = model.kernel.output_dim
        names = [f"x_{j + 1}" for j in range(X.shape[1])] + ["t"]
        names += [f"f_{j + 1}" for j in range(d)]
        if model.kernel.temporal.family == "gaussian":
            cols.append(predict_time_derivative_batch(model, X, T))
            names += [f"dt_f_{j + 1}" for j in range(d)]
        pred_rows = np.column_stack(cols)
        pred_header = tuple(names)
    train_rms = None
    if not model_in and cfg.opt("data.training"):
        resid = predict_batch(model, data.inputs.spatial, data.inputs.times) - data.targets
        train_rms = float(np.sqrt(np.mean(np.sum(resid**2, axis=1))))
    summary = {
        "n_sites": len(model.centers),
        "lambda": model.lam,
        "rkhs_norm_sq": model.rkhs_norm_sq,
        "train_rms": train_rms,
    }
    return FitResult(model, summary, pred_rows, pred_header)


@dataclass(frozen=True)
class ForecastResult:
    fm: object
    eig_rows: np.ndarray
    value_rows: np.ndarray | None
    value_header: tuple[str, ...] | None


def run_forecast(cfg: ExperimentConfig) -> ForecastResult:
    """Build (or load) a spectral forecast model and evaluate it."""
    model_in = cfg.opt("data.model_in")
    if model_in:
        fm = load_forecast_model(model_in)
    else:
        pairs_path = cfg.opt("data.pairs")
        if pairs_path:
            pairs = load_pairs_csv(pairs_path)
        else:
            system = cfg.opt("system", "sine2pi")
            n = cfg.opt_int("n", 200)
            states = _system_states(system, n, cfg)
            pairs = generate_pairs(_system_flow(system, cfg), states, cfg.dt)
        obs_name = cfg.opt("observable", "circle")
        obs = builtin_observable(obs_name, state_dim=pairs.x_now.coords.shape[1])
        op = build_koopman(cfg.kernel, pairs, cfg.opt_float("pinv_rtol", KOOPMAN_PINV_RTOL))
        dec = decompose(op, cfg.opt_int("max_modes", 16))
        rank = cfg.opt_int("rank", min(int(cfg.rank_list[-1]), dec.n_modes))
        if rank > dec.n_modes:
            raise InputError(f"rank {rank} exceeds the {dec.n_modes} retained modes")
        fm = make_forecast(dec, op, obs, rank, cfg.dt)
    dec = fm.decomposition
    eig_rows = np.array(
        [
            (k + 1, dec.eigenvalues[k].real, dec.eigenvalues[k].imag,
             abs(dec.eigenvalues[k]), float(np.angle(dec.eigenvalues[k])),
             float(dec.residuals[k]))
            for k in range(fm.rank)
        ],
        dtype=float,
    )
    value_rows = None
    value_header = None
    states_path = cfg.opt("data.states")
    if states_path:
        states = load_pointset_csv(states_path)
        if states.time_axis:
            raise InputError("forecast states are time-free (no t column)")
        steps_list = _parse_int_list(cfg.opt("steps", "0,1,2,3,4,5"), "steps")
        if any(s < 0 for s in steps_list):
            raise InputError("steps must be nonnegative")
        X = states.spatial
        m = fm.projection_coeffs.shape[1]
        rows = []
        for s in steps_list:
            vals = forecast_batch(fm, X, s)
            for i in range(X.shape[0]):
                rows.append((s, s * fm.dt, *X[i], *vals[i]))
        value_header = ("steps", "time") + tuple(
            f"x_{j + 1}" for j in range(X.shape[1])
        ) + tuple(f"f_{j + 1}" for j in range(m))
        value_rows = np.array(rows, dtype=float)
    return ForecastResult(fm, eig_rows, value_rows, value_header)


def _write_csv(path: Path, header, rows, int_cols=()) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in np.atleast_2d(rows):
            cells = []
            for j, v in enumerate(row):
                cells.append(str(int(v)) if j in int_cols else repr(float(v)))
            fh.write(",".join(cells) + "\n")


def run_experiment(cfg: ExperimentConfig, outdir: Path) -> list[Path]:
    """Run one experiment and write its CSV tables; returns written paths."""
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(name, header, rows, int_cols=()):
        path = outdir / name
        _write_csv(path, header, rows, int_cols)
        written.append(path)

    if cfg.experiment == "exp1":
        report = run_exp1(cfg)
        emit("exp1_rates.csv", report.columns, report.rows, int_cols=(0,))
        slope_rows = [
            (name, report.slopes[name][0], report.slopes[name][1])
            for name in report.columns[2:]
            if name in report.slopes
        ]
        path = outdir / "exp1_slopes.csv"
        with open(path, "w", newline="") as fh:
            fh.write("series,slope,stderr\n")
            for name, slope, stderr in slope_rows:
                fh.write(f"{name},{slope!r},{stderr!r}\n")
        written.append(path)
    elif cfg.experiment == "exp2":
        res = run_exp2(cfg)
        emit(
            "exp2_eigenvalues.csv",
            ("n", "k", "re", "im", "modulus", "argument", "residual"),
            res.eig_rows,
            int_cols=(0, 1),
        )
        emit("exp2_gaps.csv", ("n_small", "n_large", "gap"), res.gap_rows, int_cols=(0, 1))
    elif cfg.experiment == "exp3":
        res = run_exp3(cfg)
        emit(
            "exp3_error_curves.csv",
            ("rank", "steps", "time", "err"),
            res.curve_rows,
            int_cols=(0, 1),
        )
        emit(
            "exp3_eigenvalues.csv",
            ("k", "re", "im", "modulus", "argument", "residual"),
            res.eig_rows,
            int_cols=(0,),
        )
    elif cfg.experiment == "fit":
        res = run_fit(cfg)
        model_path = outdir / cfg.opt("data.model_out", "model.txt")
        save_model(res.model, model_path)
        written.append(model_path)
        path = outdir / "fit_summary.csv"
        with open(path, "w", newline="") as fh:
            fh.write("n_sites,lambda,rkhs_norm_sq,train_rms\n")
            s = res.summary
            train_rms = "" if s["train_rms"] is None else repr(s["train_rms"])
            fh.write(f"{s['n_sites']},{s['lambda']!r},{s['rkhs_norm_sq']!r},{train_rms}\n")
        written.append(path)
        if res.prediction_rows is not None:
            emit("fit_predictions.csv", res.prediction_header, res.prediction_rows)
    elif cfg.experiment == "forecast":
        res = run_forecast(cfg)
        model_path = outdir / cfg.opt("data.model_out", "forecast_model.txt")
        save_forecast_model(res.fm, model_path)
        written.append(model_path)
        emit(
            "forecast_eigenvalues.csv",
            ("k", "re", "im", "modulus", "argument", "residual"),
            res.eig_rows,
            int_cols=(0,),
        )
        if res.value_rows is not None:
            emit("forecast_values.csv", res.value_header, res.value_rows, int_cols=(0,))
    return written


def write_manifest(cfg: ExperimentConfig, outdir: Path, wall_seconds: float,
                   written: list[Path]) -> Path:
    path = outdir / "manifest.txt"
    with open(path, "w", newline="") as fh:
        fh.write(f"ovkflow {__version__}\n")
        fh.write(f"wall_seconds = {wall_seconds:.3f}\n")
        for line in cfg.echo_lines():
            fh.write(line + "\n")
        for w in written:
            fh.write(f"output = {w.name}\n")
    return path


def run_cli_experiment(cfg: ExperimentConfig) -> list[Path]:
    """Experiment + manifest, timed; the entry point used by the CLI."""
    outdir = Path(cfg.output_dir)
    start = time.perf_counter()
    written = run_experiment(cfg, outdir)
    wall = time.perf_counter() - start
    write_manifest(cfg, outdir, wall, written)
    return written
