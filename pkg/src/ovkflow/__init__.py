"""ovkflow: time-dependent vector fields in operator-valued RKHS,
kernel Koopman operators, and spectral forecasting benchmarks."""

__version__ = "0.1.0"

_SUBMODULES = {
    "errors": ["OvkError", "InputError", "UnsupportedError", "NumericalError"],
    "points": [
        "Box",
        "SpatioTemporalPoint",
        "PointSet",
        "grid_points",
        "random_points",
        "fill_distance",
        "min_separation",
    ],
    "kernels": [
        "ScalarKernel",
        "TimeRegularizedKernel",
        "eval_scalar",
        "eval_dt_dt_scalar",
        "eval_ov",
    ],
    "gram": [
        "BlockGramMatrix",
        "assemble_gram",
        "assemble_cross_gram",
        "solve_ridge",
        "pinv",
    ],
    "regression": [
        "TrainingSet",
        "RepresenterModel",
        "fit",
        "predict",
        "predict_time_derivative",
        "empirical_errors",
        "save_model",
        "load_model",
    ],
    "dynamics": [
        "FlowMap",
        "TrajectoryDataset",
        "flow",
        "generate_pairs",
        "builtin_observable",
    ],
    "koopman": [
        "EmpiricalKoopman",
        "SpectralDecomposition",
        "ForecastModel",
        "build_koopman",
        "decompose",
        "project_observable",
        "make_forecast",
        "forecast",
        "forecast_error_curve",
        "operator_gap",
    ],
    "bench": [
        "ExperimentConfig",
        "RateReport",
        "load_config",
        "fit_slope",
        "run_exp1",
        "run_exp2",
        "run_exp3",
    ],
}

_ATTR_TO_MODULE = {name: mod for mod, names in _SUBMODULES.items() for name in names}

__all__ = ["__version__", *_ATTR_TO_MODULE]


def __getattr__(name):
    mod_name = _ATTR_TO_MODULE.get(name)
    if mod_name is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    import importlib

    module = importlib.import_module(f".{mod_name}", __name__)
    value = getattr(module, name)
    globals()[name] = value
    return value


def __dir__():
    return sorted(__all__)
