"""Dense block Gram assembly, regularized SPD solves, truncated pseudoinverse.

Blocks of the separable operator-valued kernel are scalar multiples of
I_d, so the (d n) x (d n) system is assembled as kron(S, I_d) from the
n x n scalar part S. Storage is dense throughout; the intended scale is
d*n up to a few thousand.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import InputError, NumericalError
from .kernels import TimeRegularizedKernel
from .points import PointSet

__all__ = [
    "BlockGramMatrix",
    "assemble_gram",
    "assemble_cross_gram",
    "solve_ridge",
    "pinv",
    "save_matrix_csv",
]

logger = logging.getLogger(__name__)

# escalating diagonal loading, relative to trace(G)/(dn)
_JITTER_LADDER = (0.0, 1e-12, 1e-10, 1e-8)


@dataclass(frozen=True)
class BlockGramMatrix:
    """Symmetric PSD-up-to-roundoff kernel matrix with d x d identity blocks."""

    entries: np.ndarray
    centers: PointSet
    block_dim: int

    def __post_init__(self):
        m = self.entries
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InputError("gram entries must be square")
        if m.shape[0] != self.block_dim * len(self.centers):
            raise InputError("gram size must equal block_dim * n_centers")

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def _blockify(S: np.ndarray, d: int) -> np.ndarray:
    return S if d == 1 else np.kron(S, np.eye(d))


def assemble_gram(K: TimeRegularizedKernel, centers: PointSet) -> BlockGramMatrix:
    """Full (d n) x (d n) Gram matrix of the kernel over the center sites."""
    S = K.scalar_cross(centers.spatial, centers.times, centers.spatial, centers.times)
    S = 0.5 * (S + S.T)  # symmetrize roundoff
    return BlockGramMatrix(_blockify(S, K.output_dim), centers, K.output_dim)


def assemble_cross_gram(K: TimeRegularizedKernel, left: PointSet, right: PointSet) -> np.ndarray:
    """Rectangular (d |left|) x (d |right|) kernel matrix between two site lists."""
    if left.spatial.shape[1] != right.spatial.shape[1]:
        raise InputError("point sets must share the spatial dimension")
    S = K.scalar_cross(left.spatial, left.times, right.spatial, right.times)
    return _blockify(S, K.output_dim)


def _try_spd_solve(A: np.ndarray, rhs: np.ndarray, rel_target: float):
    """Cholesky solve with a few refinement sweeps; None if not factorizable."""
    try:
        cho = sla.cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return None, np.inf
    x = sla.cho_solve(cho, rhs, check_finite=False)
    nrhs = np.linalg.norm(rhs)
    best_x, best_res = x, np.inf
    for _ in range(4):
        r = rhs - A @ x
        res = np.linalg.norm(r) / nrhs
        if res < best_res:
            best_x, best_res = x, res
        if res <= 0.01 * rel_target or res > best_res * 10:
            break
        x = x + sla.cho_solve(cho, r, check_finite=False)
    return best_x, best_res


def solve_ridge(G: BlockGramMatrix, rhs: np.ndarray, lam: float) -> np.ndarray:
    """Solve (G + lam I) c = rhs to relative residual 1e-10.

    Factorization failures escalate through a diagonal jitter ladder
    scaled by trace(G)/size; when jitter j > 0 is engaged the residual
    contract applies to the effectively regularized system
    (G + (lam + j) I), which is the system a numerically singular Gram
    at tiny lam can actually support.
    """
    if not np.isfinite(lam) or lam < 0:
        raise InputError("lam must be a nonnegative finite number")
    rhs = np.asarray(rhs, dtype=float).ravel()
    if rhs.shape[0] != G.size:
        raise InputError("rhs length must match the gram size")
    if not np.all(np.isfinite(rhs)):
        raise InputError("rhs must be finite")
    if not np.all(np.isfinite(G.entries)):
        raise InputError("gram entries must be finite")
    if np.linalg.norm(rhs) == 0.0:
        return np.zeros_like(rhs)

    n = G.size
    scale = float(np.trace(G.entries)) / n
    eye = np.eye(n)
    rel_target = 1e-10
    for j_rel in _JITTER_LADDER:
        jitter = j_rel * scale
        A = G.entries + (lam + jitter) * eye
        x, res = _try_spd_solve(A, rhs, rel_target)
        if x is None:
            continue
        if res <= rel_target:
            if jitter > 0:
                logger.debug("solve_ridge engaged jitter %.3e (residual %.3e)", jitter, res)
            return x
        logger.debug("solve_ridge residual %.3e at jitter %.3e, escalating", res, jitter)
    w = sla.eigvalsh(G.entries, check_finite=False)
    raise NumericalError(
        "ridge system not solvable to 1e-10 residual at max jitter "
        f"(lam={lam:.3e}, eigenvalue range [{w[0]:.3e}, {w[-1]:.3e}])"
    )


def pinv(M: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Moore-Penrose pseudoinverse, discarding singular values < rtol * largest."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise InputError("pinv expects a 2-d matrix")
    if not np.all(np.isfinite(M)):
        raise InputError("matrix entries must be finite")
    if not (0 <= rtol < 1):
        raise InputError("rtol must lie in [0, 1)")
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((M.shape[1], M.shape[0]))
    keep = s >= rtol * s[0]
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


def save_matrix_csv(M: np.ndarray, path) -> None:
    """Row-major CSV export with a dimension line and a header row."""
    M = np.atleast_2d(np.asarray(M))
    if np.iscomplexobj(M):
        raise InputError("matrix CSV export is for real matrices")
    rows, cols = M.shape
    with open(path, "w", newline="") as fh:
        fh.write(f"# rows={rows} cols={cols}\n")
        fh.write(",".join(f"c{j + 1}" for j in range(cols)) + "\n")
        for row in M:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
