"""Gram assembly, ridge solver, and pseudoinverse checks."""

import numpy as np
import pytest

from ovkflow.errors import InputError, NumericalError
from ovkflow.gram import (
    BlockGramMatrix,
    assemble_cross_gram,
    assemble_gram,
    pinv,
    save_matrix_csv,
    solve_ridge,
)
from ovkflow.kernels import ScalarKernel, TimeRegularizedKernel, eval_ov
from ovkflow.points import Box, PointSet, random_points


def space_time_kernel(d=1, alpha=0.3):
    return TimeRegularizedKernel(
        ScalarKernel("gaussian", 0.5), ScalarKernel("gaussian", 0.8), alpha=alpha, output_dim=d
    )


def random_sites(n, seed, dim=2, with_time=True):
    rng = np.random.default_rng(seed)
    cols = [rng.uniform(0, 1, size=(n, dim))]
    if with_time:
        cols.append(rng.uniform(0, 1, size=(n, 1)))
    coords = np.hstack(cols)
    k = coords.shape[1]
    return PointSet(coords, Box(np.zeros(k), np.ones(k)), time_axis=with_time)


def test_gram_symmetric_psd():
    K = space_time_kernel(d=2)
    sites = random_sites(25, seed=1)
    G = assemble_gram(K, sites)
    assert G.size == 50
    assert np.array_equal(G.entries, G.entries.T)
    w = np.linalg.eigvalsh(G.entries)
    assert w.min() >= -1e-8 * w.max()


def test_gram_blocks_scale_identity():
    """Every d x d block of the assembled Gram equals eval_ov of its site pair."""
    K = space_time_kernel(d=3)
    sites = random_sites(8, seed=2)
    G = assemble_gram(K, sites)
    for i in range(8):
        for j in range(8):
            blk = G.entries[3 * i:3 * i + 3, 3 * j:3 * j + 3]
            expect = eval_ov(K, sites.point(i), sites.point(j))
            assert np.allclose(blk, expect, atol=1e-15)


def test_cross_gram_matches_manual_loop():
    K = space_time_kernel(d=1)
    left = random_sites(6, seed=3)
    right = random_sites(9, seed=4)
    C = assemble_cross_gram(K, left, right)
    assert C.shape == (6, 9)
    for i in range(6):
        for j in range(9):
            expect = eval_ov(K, left.point(i), right.point(j))[0, 0]
            assert abs(C[i, j] - expect) < 1e-15


def test_cross_gram_dimension_mismatch():
    K = space_time_kernel()
    with pytest.raises(InputError):
        assemble_cross_gram(K, random_sites(4, 5, dim=2), random_sites(4, 6, dim=3))


def test_block_gram_validation():
    sites = random_sites(4, seed=7)
    with pytest.raises(InputError):
        BlockGramMatrix(np.eye(3), sites, 1)
    with pytest.raises(InputError):
        BlockGramMatrix(np.zeros((4, 5)), sites, 1)


def test_solve_ridge_identity_gram():
    # (I + I) c = y  =>  c = y / 2
    sites = random_sites(2, seed=8, dim=1, with_time=False)
    G = BlockGramMatrix(np.eye(2), sites, 1)
    c = solve_ridge(G, np.array([3.0, -4.0]), lam=1.0)
    assert np.max(np.abs(c - np.array([1.5, -2.0]))) < 1e-15


def test_solve_ridge_zero_rhs():
    sites = random_sites(3, seed=9, dim=1, with_time=False)
    G = BlockGramMatrix(np.eye(3), sites, 1)
    assert np.array_equal(solve_ridge(G, np.zeros(3), 1e-3), np.zeros(3))


def test_solve_ridge_residual_contract():
    """Relative residual at most 1e-10 across sizes up to dN = 2000."""
    print()
    for n, d, lam, seed in ((50, 1, 1e-6, 0), (200, 2, 1e-4, 1), (1000, 2, 1e-3, 2)):
        K = space_time_kernel(d=d, alpha=0.1)
        sites = random_sites(n, seed=seed)
        G = assemble_gram(K, sites)
        rng = np.random.default_rng(100 + seed)
        y = rng.standard_normal(G.size)
        c = solve_ridge(G, y, lam)
        A = G.entries + lam * np.eye(G.size)
        rel = np.linalg.norm(A @ c - y) / np.linalg.norm(y)
        print(f"  dN={G.size:>5d} lam={lam:g}: residual {rel:.3e}")
        assert rel <= 1e-10


def test_solve_ridge_scaling_equivariance():
    # doubling the targets doubles the coefficients
    K = space_time_kernel()
    sites = random_sites(40, seed=12)
    G = assemble_gram(K, sites)
    rng = np.random.default_rng(13)
    y = rng.standard_normal(G.size)
    c1 = solve_ridge(G, y, 1e-5)
    c2 = solve_ridge(G, 2.0 * y, 1e-5)
    assert np.max(np.abs(c2 - 2.0 * c1)) <= 1e-12 * max(np.max(np.abs(c1)), 1.0)


def test_solve_ridge_input_validation():
    sites = random_sites(2, seed=14, dim=1, with_time=False)
    G = BlockGramMatrix(np.eye(2), sites, 1)
    with pytest.raises(InputError):
        solve_ridge(G, np.array([1.0, 2.0]), -1.0)
    with pytest.raises(InputError):
        solve_ridge(G, np.array([1.0]), 1e-3)
    with pytest.raises(InputError):
        solve_ridge(G, np.array([np.nan, 0.0]), 1e-3)


def test_solve_ridge_indefinite_matrix_fails():
    # eigenvalues +1 and -1: no jitter rung can make this SPD
    sites = random_sites(2, seed=15, dim=1, with_time=False)
    G = BlockGramMatrix(np.array([[0.0, 1.0], [1.0, 0.0]]), sites, 1)
    with pytest.raises(NumericalError):
        solve_ridge(G, np.array([1.0, 1.0]), 0.0)


def test_pinv_penrose_identities():
    rng = np.random.default_rng(21)
    for shape in ((8, 8), (10, 6), (5, 9)):
        M = rng.standard_normal(shape)
        P = pinv(M)
        assert np.allclose(M @ P @ M, M, atol=1e-12)
        assert np.allclose(P @ M @ P, P, atol=1e-12)
        assert np.allclose((M @ P).T, M @ P, atol=1e-12)
        assert np.allclose((P @ M).T, P @ M, atol=1e-12)


def test_pinv_inverts_nonsingular():
    rng = np.random.default_rng(22)
    M = rng.standard_normal((6, 6)) + 6 * np.eye(6)
    assert np.allclose(pinv(M) @ M, np.eye(6), atol=1e-12)


def test_pinv_truncates_small_singular_values():
    # diag(1, 1e-3, 1e-13): the last direction falls below rtol=1e-10
    M = np.diag([1.0, 1e-3, 1e-13])
    P = pinv(M)
    assert abs(P[0, 0] - 1.0) < 1e-15
    assert abs(P[1, 1] - 1e3) < 1e-9
    assert P[2, 2] == 0.0
    # keeping everything restores the direction
    P_full = pinv(M, rtol=0.0)
    assert abs(P_full[2, 2] - 1e13) < 1.0


def test_pinv_zero_matrix():
    P = pinv(np.zeros((3, 5)))
    assert P.shape == (5, 3)
    assert np.all(P == 0.0)


def test_pinv_validation():
    with pytest.raises(InputError):
        pinv(np.zeros((2, 2, 2)))
    with pytest.raises(InputError):
        pinv(np.array([[np.inf, 0.0], [0.0, 1.0]]))
    with pytest.raises(InputError):
        pinv(np.eye(2), rtol=1.5)


def test_save_matrix_csv_layout(tmp_path):
    M = np.array([[1.0, 0.5], [0.25, 2.0], [0.0, -1.0]])
    path = tmp_path / "m.csv"
    save_matrix_csv(M, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# rows=3 cols=2"
    assert lines[1] == "c1,c2"
    back = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:]])
    assert np.array_equal(back, M)
