"""Empirical Koopman operators from trajectory pairs, spectra, forecasting.

With G_ij = K(x_i, x_j) over the sampled states and
G'_ij = K(Phi_dt(x_i), x_j) over their flowed images, the empirical
operator is K_N = pinv(G) G'. It acts on coefficient vectors of kernel
interpolants: g ~ sum_i s(., x_i) b_i with G b = g(X) advances to
coefficients K_N b. Eigenpairs are computed on the operator restricted
to the numerical range of G (via the same truncated SVD as the
pseudoinverse), which carries every nonzero eigenvalue and keeps
residuals at eigensolver level.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InputError, NumericalError
from .gram import BlockGramMatrix, assemble_cross_gram, assemble_gram
from .kernels import TimeRegularizedKernel
from .points import Box, PointSet, bounding_domain
from .dynamics import TrajectoryDataset

__all__ = [
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
]

RESIDUAL_DISCARD_TOL = 1e-6


@dataclass(frozen=True)
class EmpiricalKoopman:
    """Finite-sample Koopman approximation on kernel interpolant coefficients."""

    kernel: TimeRegularizedKernel
    centers: PointSet
    gram: BlockGramMatrix
    cross_gram: np.ndarray
    operator: np.ndarray
    gram_pinv: np.ndarray
    pinv_rtol: float
    dt: float


@dataclass(frozen=True)
class SpectralDecomposition:
    """Retained eigenpairs; column k of eigenvectors defines
    phi_k(.) = sum_i s(., x_i) w_{k,i}, scaled to unit RMS over the
    sample states with the largest-modulus coefficient made real positive."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    kernel: TimeRegularizedKernel
    centers: PointSet
    normalization: str = "unit_empirical_norm"

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.shape[0]


@dataclass(frozen=True)
class ForecastModel:
    """Spectral forecast truncated to the leading `rank` modes."""

    decomposition: SpectralDecomposition
    rank: int
    projection_coeffs: np.ndarray
    dt: float

    def __post_init__(self):
        if not 1 <= self.rank <= self.decomposition.n_modes:
            raise InputError("rank must lie in [1, number of retained modes]")
        if self.projection_coeffs.shape[0] != self.rank:
            raise InputError("one coefficient row per retained mode required")


# Looser than pinv's own default: directions kept right at the cutoff get
# amplified by 1/sigma_i and pollute the spectrum with O(1e-8) noise.
KOOPMAN_PINV_RTOL = 1e-9


def build_koopman(
    K: TimeRegularizedKernel, data: TrajectoryDataset, rtol: float = KOOPMAN_PINV_RTOL
) -> EmpiricalKoopman:
    """Assemble G, G' and the operator pinv(G) G' from trajectory pairs."""
    from .gram import pinv  # local import keeps module init cheap

    if data.x_now.coords.shape[1] != data.x_next.coords.shape[1]:
        raise InputError("state dimension mismatch between now/next sets")
    G = assemble_gram(K, data.x_now)
    Gp = assemble_cross_gram(K, data.x_next, data.x_now)
    G_pinv = pinv(G.entries, rtol)
    return EmpiricalKoopman(K, data.x_now, G, Gp, G_pinv @ Gp, G_pinv, rtol, data.dt)


def _scalar_part(op_or_dec) -> np.ndarray:
    """n x n scalar kernel matrix over the sample states."""
    c = op_or_dec.centers
    return op_or_dec.kernel.scalar_cross(c.spatial, c.times, c.spatial, c.times)


def decompose(
    op: EmpiricalKoopman, max_modes: int, residual_tol: float = RESIDUAL_DISCARD_TOL
) -> SpectralDecomposition:
    """Eigenpairs of the empirical operator, sorted and normalized.

    Sorting: descending |lambda|, ties by ascending complex argument,
    then by position. Pairs whose relative eigenvector residual against
    the full operator exceeds residual_tol are discarded; at most
    max_modes pairs are retained.
    """
    if max_modes < 1:
        raise InputError("max_modes must be positive")
    d = op.kernel.output_dim
    n_all = op.gram.size
    U, s, Vt = np.linalg.svd(op.gram.entries)
    if s[0] == 0.0:
        raise NumericalError("gram matrix is identically zero")
    keep = s >= op.pinv_rtol * s[0]
    Ur, sr, Vr = U[:, keep], s[keep], Vt[keep].T
    # operator restricted to the numerical range of G: same nonzero spectrum
    A = (Ur.T @ op.cross_gram @ Vr) / sr[:, None]
    lam, Z = np.linalg.eig(A)
    lam = lam.astype(complex)
    W = (Vr @ Z).astype(complex)
    norms = np.linalg.norm(W, axis=0)
    norms[norms == 0.0] = 1.0
    resid = np.linalg.norm(op.operator @ W - W * lam[None, :], axis=0) / norms

    ok = resid <= residual_tol
    lam, W, resid = lam[ok], W[:, ok], resid[ok]
    order = np.lexsort((np.arange(lam.size), np.angle(lam), -np.abs(lam)))
    order = order[:max_modes]
    lam, W, resid = lam[order], W[:, order], resid[order]
    if lam.size == 0:
        raise NumericalError("no eigenpair met the residual tolerance")

    # unit empirical norm over sample states, then a real-positive phase anchor
    S = _scalar_part(op)
    n = len(op.centers)
    for k in range(lam.size):
        vals = S @ W[:, k].reshape(n, d)
        rms = np.sqrt(np.mean(np.abs(vals) ** 2) * d)
        if rms > 0.0:
            W[:, k] /= rms
        j = int(np.argmax(np.abs(W[:, k])))
        piv = W[j, k]
        if np.abs(piv) > 0.0:
            W[:, k] *= np.conj(piv) / np.abs(piv)
    return SpectralDecomposition(lam, W, resid, op.kernel, op.centers)


def eigenfunction_values(dec: SpectralDecomposition, X: np.ndarray) -> np.ndarray:
    """phi_k over rows of X: complex array (n, d, n_modes)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    d = dec.kernel.output_dim
    c = dec.centers
    S = dec.kernel.scalar_cross(X, np.zeros(X.shape[0]), c.spatial, c.times)
    W = dec.eigenvectors.reshape(len(c), d, dec.n_modes)
    return np.einsum("ni,idk->ndk", S, W)


def _observable_samples(dec: SpectralDecomposition, g: Callable) -> np.ndarray:
    vals = np.asarray(g(dec.centers.spatial), dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    if vals.shape[0] != len(dec.centers):
        raise InputError("observable must return one value row per sample state")
    if not np.all(np.isfinite(vals)):
        raise InputError("observable values must be finite")
    return vals


def _component_basis(phi: np.ndarray, j: int, d: int) -> np.ndarray:
    # component j of the observable pairs with kernel block j, or the
    # shared scalar eigenfunctions when d == 1
    return phi[:, 0, :] if d == 1 else phi[:, j, :]


def _project(dec: SpectralDecomposition, samples: np.ndarray, n_modes: int) -> np.ndarray:
    d = dec.kernel.output_dim
    m = samples.shape[1]
    if d > 1 and m != d:
        raise InputError("observable components must match kernel output_dim unless it is 1")
    phi = eigenfunction_values(dec, dec.centers.spatial)[:, :, :n_modes]
    coeffs = np.zeros((n_modes, m), dtype=complex)
    for j in range(m):
        B = _component_basis(phi, j, d)
        sol, _, rank, _ = np.linalg.lstsq(B, samples[:, j].astype(complex), rcond=None)
        if rank < n_modes:
            raise NumericalError("rank-deficient eigenfunction value matrix")
        coeffs[:, j] = sol
    return coeffs


def project_observable(dec: SpectralDecomposition, op: EmpiricalKoopman, g: Callable) -> np.ndarray:
    """Least-squares modes-by-components coefficients of g at the sample states."""
    return _project(dec, _observable_samples(dec, g), dec.n_modes)


def make_forecast(
    dec: SpectralDecomposition,
    op: EmpiricalKoopman,
    g: Callable,
    rank: int,
    dt: float | None = None,
) -> ForecastModel:
    """Forecast model on the leading `rank` modes; coefficients are refit
    per rank so nested truncations can only improve the step-0 fit."""
    if not 1 <= rank <= dec.n_modes:
        raise InputError("rank must lie in [1, number of retained modes]")
    coeffs = _project(dec, _observable_samples(dec, g), rank)
    return ForecastModel(dec, rank, coeffs, op.dt if dt is None else float(dt))


def forecast_batch(fm: ForecastModel, X: np.ndarray, steps: int) -> np.ndarray:
    """Spectral forecast at every row of X after `steps` discrete steps."""
    if int(steps) != steps or steps < 0:
        raise InputError("steps must be a nonnegative integer")
    dec = fm.decomposition
    d = dec.kernel.output_dim
    lam_pow = dec.eigenvalues[: fm.rank] ** int(steps)
    phi = eigenfunction_values(dec, X)[:, :, : fm.rank]
    m = fm.projection_coeffs.shape[1]
    out = np.zeros((phi.shape[0], m))
    for j in range(m):
        B = _component_basis(phi, j, d)
        out[:, j] = np.real(B @ (fm.projection_coeffs[:, j] * lam_pow))
    return out


def forecast(fm: ForecastModel, x, steps: int) -> np.ndarray:
    """Single-state forecast: real m-vector after `steps` steps."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return forecast_batch(fm, x[None, :], steps)[0]


def forecast_error_curve(
    fm: ForecastModel, truth: Callable, eval_states: PointSet, horizon: int
) -> np.ndarray:
    """Rows (steps, time, err): discrete L2 forecast error up to `horizon`.

    truth(X, steps) must return the exact observable values after
    `steps` flow steps for every row of X.
    """
    if horizon < 0:
        raise InputError("horizon must be nonnegative")
    X = eval_states.spatial
    rows = []
    for n in range(horizon + 1):
        pred = forecast_batch(fm, X, n)
        tv = np.asarray(truth(X, n), dtype=float)
        if tv.ndim == 1:
            tv = tv[:, None]
        err = float(np.sqrt(np.mean(np.sum((pred - tv) ** 2, axis=1))))
        rows.append((n, n * fm.dt, err))
    return np.array(rows)


def _probe_grid(a: EmpiricalKoopman, b: EmpiricalKoopman) -> np.ndarray:
    lo = np.maximum(a.centers.domain.lower, b.centers.domain.lower)
    hi = np.minimum(a.centers.domain.upper, b.centers.domain.upper)
    if np.any(hi <= lo):
        raise InputError("operator domains do not overlap")
    dim = lo.shape[0]
    n_axis = 512 if dim == 1 else 24
    axes = [np.linspace(lo[i], hi[i], n_axis) for i in range(dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def _action_on_probes(op: EmpiricalKoopman, g_X: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Evaluate the operator's kernel-interpolated action on a probe grid."""
    beta = op.gram_pinv @ g_X.ravel()
    gamma = op.operator @ beta
    c = op.centers
    probes = PointSet(P, bounding_domain(P))
    cross = assemble_cross_gram(op.kernel, probes, c)
    return (cross @ gamma).reshape(P.shape[0], op.kernel.output_dim)


def operator_gap(
    a: EmpiricalKoopman, b: EmpiricalKoopman, probes: Sequence[Callable]
) -> float:
    """Self-convergence proxy: max over probe observables of the RMS
    difference of the two operators' actions on a shared probe grid,
    normalized by the probe's RMS."""
    if a.kernel != b.kernel:
        raise InputError("operators must share kernel hyperparameters")
    if len(probes) == 0:
        raise InputError("at least one probe observable required")
    P = _probe_grid(a, b)
    worst = 0.0
    for g in probes:
        gP = np.asarray(g(P), dtype=float)
        ga = np.asarray(g(a.centers.spatial), dtype=float)
        gb = np.asarray(g(b.centers.spatial), dtype=float)
        if ga.ndim == 1:
            gP, ga, gb = gP[:, None], ga[:, None], gb[:, None]
        if ga.shape[1] != a.kernel.output_dim:
            raise InputError("probe output must match kernel output_dim")
        va = _action_on_probes(a, ga, P)
        vb = _action_on_probes(b, gb, P)
        denom = float(np.sqrt(np.mean(np.sum(gP**2, axis=1))))
        if denom == 0.0:
            raise InputError("probe observable vanishes on the probe grid")
        gap = float(np.sqrt(np.mean(np.sum((va - vb) ** 2, axis=1)))) / denom
        worst = max(worst, gap)
    return worst


FORECAST_MAGIC = "ovkflow-forecast"
FORECAST_VERSION = 1


def save_forecast_model(fm: ForecastModel, path) -> None:
    """Serialize a forecast model (its `rank` leading modes) to a text archive."""
    dec = fm.decomposition
    k = dec.kernel
    c = dec.centers
    r = fm.rank
    m = fm.projection_coeffs.shape[1]
    with open(path, "w", newline="") as fh:
        fh.write(f"{FORECAST_MAGIC} {FORECAST_VERSION}\n")
        fh.write("[kernel]\n")
        fh.write(f"spatial.family = {k.spatial.family}\n")
        fh.write(f"spatial.sigma = {k.spatial.sigma!r}\n")
        if k.spatial.nu is not None:
            fh.write(f"spatial.nu = {k.spatial.nu!r}\n")
        fh.write(f"temporal.family = {k.temporal.family}\n")
        fh.write(f"temporal.sigma = {k.temporal.sigma!r}\n")
        if k.temporal.nu is not None:
            fh.write(f"temporal.nu = {k.temporal.nu!r}\n")
        fh.write(f"alpha = {k.alpha!r}\n")
        fh.write(f"output_dim = {k.output_dim}\n")
        fh.write("[meta]\n")
        fh.write(f"dt = {float(fm.dt)!r}\n")
        fh.write(f"rank = {r}\n")
        fh.write(f"components = {m}\n")
        fh.write("[domain]\n")
        fh.write("lower = " + ",".join(repr(float(v)) for v in c.domain.lower) + "\n")
        fh.write("upper = " + ",".join(repr(float(v)) for v in c.domain.upper) + "\n")
        fh.write("[centers]\n")
        fh.write(",".join(f"x_{j + 1}" for j in range(c.coords.shape[1])) + "\n")
        for row in c.coords:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
        fh.write("[eigenvalues]\n")
        fh.write("re,im\n")
        for lam in dec.eigenvalues[:r]:
            fh.write(f"{float(lam.real)!r},{float(lam.imag)!r}\n")
        fh.write("[eigenvectors]\n")
        fh.write(",".join(f"w{j + 1}_re,w{j + 1}_im" for j in range(r)) + "\n")
        for row in dec.eigenvectors[:, :r]:
            fh.write(",".join(f"{float(v.real)!r},{float(v.imag)!r}" for v in row) + "\n")
        fh.write("[projection]\n")
        fh.write(",".join(f"a{j + 1}_re,a{j + 1}_im" for j in range(m)) + "\n")
        for row in fm.projection_coeffs:
            fh.write(",".join(f"{float(v.real)!r},{float(v.imag)!r}" for v in row) + "\n")
        fh.write("[residuals]\n")
        fh.write("residual\n")
        for v in dec.residuals[:r]:
            fh.write(f"{float(v)!r}\n")


def _complex_rows(lines: list[str], path) -> np.ndarray:
    try:
        raw = np.array([[float(v) for v in r.split(",")] for r in lines])
    except ValueError as exc:
        raise InputError(f"malformed complex table in {path}: {exc}") from None
    if raw.size == 0 or raw.ndim != 2 or raw.shape[1] % 2:
        raise InputError(f"bad complex table shape in {path}")
    return raw[:, 0::2] + 1j * raw[:, 1::2]


def load_forecast_model(path) -> ForecastModel:
    """Read back an archive written by save_forecast_model."""
    from .kernels import ScalarKernel
    from .regression import _kv, _split_sections

    with open(path, newline="") as fh:
        first = fh.readline().strip().split()
        if len(first) != 2 or first[0] != FORECAST_MAGIC:
            raise InputError(f"not a forecast archive: {path}")
        if int(first[1]) != FORECAST_VERSION:
            raise InputError(f"unsupported forecast archive version {first[1]}: {path}")
        sections = _split_sections(fh.readlines(), path)
    for name in ("kernel", "meta", "domain", "centers", "eigenvalues", "eigenvectors", "projection", "residuals"):
        if name not in sections:
            raise InputError(f"forecast archive missing [{name}] section: {path}")
    kcfg = _kv(sections["kernel"], path)
    meta = _kv(sections["meta"], path)
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
        dt = float(meta["dt"])
        rank = int(meta["rank"])
        m = int(meta["components"])
        domain = Box(
            np.array([float(v) for v in dcfg["lower"].split(",")]),
            np.array([float(v) for v in dcfg["upper"].split(",")]),
        )
        coords = np.array(
            [[float(v) for v in r.split(",")] for r in sections["centers"][1:]]
        )
        lam = _complex_rows(sections["eigenvalues"][1:], path)[:, 0]
        W = _complex_rows(sections["eigenvectors"][1:], path)
        coeffs = _complex_rows(sections["projection"][1:], path)
        resid = np.array([float(r) for r in sections["residuals"][1:]])
    except (KeyError, ValueError) as exc:
        raise InputError(f"malformed forecast archive {path}: {exc}") from None
    centers = PointSet(coords, domain)
    if W.shape != (kernel.output_dim * len(centers), rank) or lam.shape[0] != rank:
        raise InputError(f"eigenvector block shape mismatch in archive: {path}")
    if coeffs.shape != (rank, m) or resid.shape[0] != rank:
        raise InputError(f"projection block shape mismatch in archive: {path}")
    dec = SpectralDecomposition(lam, W, resid, kernel, centers)
    return ForecastModel(dec, rank, coeffs, dt)


def save_decomposition_csv(dec: SpectralDecomposition, path) -> None:
    """Eigenvalue table: k, re, im, modulus, argument, residual."""
    with open(path, "w", newline="") as fh:
        fh.write("k,re,im,modulus,argument,residual\n")
        for k in range(dec.n_modes):
            lam = dec.eigenvalues[k]
            fh.write(
                f"{k + 1},{float(lam.real)!r},{float(lam.imag)!r},{float(abs(lam))!r},"
                f"{float(np.angle(lam))!r},{float(dec.residuals[k])!r}\n"
            )
