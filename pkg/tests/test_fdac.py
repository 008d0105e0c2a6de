import numpy as np
import pytest

from fracwave import (
    BlockSystemView,
    MeshSpec,
    ProblemSetup,
    VariableOrder,
    assemble_operators,
    assemble_rhs,
    fdac_solve,
    initial_frames,
    load_vector,
    lag_weights,
    run_fdac,
    run_tss,
)
from fracwave.tss import source_loads

from oracle_dense import dense_all_at_once, dense_forward_substitution


def bump(dim):
    if dim == 1:
        return lambda x: np.sin(np.pi * x)
    return lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y)


def source(dim):
    if dim == 1:
        return lambda x, t: np.cos(2 * x) * (1 + t**2)
    return lambda x, y, t: x * (1 - y) * np.exp(-t) + 0.5


def ex3_like(dim, n_cells, N, name="one-minus-cos"):
    return ProblemSetup(
        MeshSpec(dim, n_cells), VariableOrder.from_name(name), N=N, u0=bump(dim), hat_u0=bump(dim), f=source(dim)
    )


def rel_diff(a, b):
    return np.max(np.abs(a - b)) / np.max(np.abs(a))


def test_rhs_zero_problem():
    s = ProblemSetup(MeshSpec(1, 8), VariableOrder.one_minus_cos(), N=8)
    U0, U1 = initial_frames(s)
    np.testing.assert_array_equal(assemble_rhs(s, U0, U1), 0.0)


def test_rhs_zero_data_is_scaled_load():
    s = ProblemSetup(MeshSpec(1, 8), VariableOrder.one_minus_cos(), N=8, f=source(1))
    U0, U1 = initial_frames(s)
    R = assemble_rhs(s, U0, U1)
    for i, n in enumerate(range(2, 9)):
        np.testing.assert_allclose(R[i], s.tau**2 * load_vector(s.f, n * s.tau, s.mesh), rtol=1e-14)


def test_rhs_is_residual_of_dense_system_at_tss_solution():
    s = ex3_like(2, 4, 4)
    traj = run_tss(s)
    A = dense_all_at_once(s)
    U0, U1 = traj.frames[0], traj.frames[1]
    R = assemble_rhs(s, U0, U1)
    np.testing.assert_allclose(A @ traj.frames[2:].ravel(), R.ravel(), rtol=0, atol=1e-12 * np.max(np.abs(R)))


def test_rhs_formula_blocks():
    """The first three blocks spelled out term by term."""
    s = ex3_like(1, 8, 6, "t-sin-t")
    ops = assemble_operators(s.mesh)
    M, S = ops.dense()
    U0, U1 = initial_frames(s)
    beta = lag_weights(s.tau, s.N, s.vo).beta
    t2 = s.tau**2
    F = lambda n: load_vector(s.f, n * s.tau, s.mesh)
    expected = [
        t2 * F(2) + 2 * M @ U1 - M @ U0 - t2 * (beta[2] * S @ U0 + beta[1] * S @ U1),
        t2 * F(3) - M @ U1 - t2 * (beta[3] * S @ U0 + beta[2] * S @ U1),
        t2 * F(4) - t2 * (beta[4] * S @ U0 + beta[3] * S @ U1),
    ]
    np.testing.assert_allclose(assemble_rhs(s, U0, U1)[:3], expected, rtol=1e-13, atol=1e-16)


@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("N", [3, 5, 9, 12, 17])
def test_matches_dense_forward_substitution_random_rhs(dim, N, rng):
    # N-1 <= 16 blocks, M <= 9 unknowns
    s = ProblemSetup(MeshSpec(dim, 4 if dim == 2 else 10), VariableOrder.one_minus_cos(), N=N)
    A = dense_all_at_once(s)
    R = rng.standard_normal((N - 1, s.mesh.M))
    ref = dense_forward_substitution(A, R, s.mesh.M)
    for base in (1, 2, 4, 100):
        view = BlockSystemView.for_setup(s, base=base)
        W = fdac_solve(view, R)
        assert np.max(np.abs(W - ref)) <= 1e-11 * max(1.0, np.max(np.abs(ref)))


def test_fdac_solve_does_not_modify_rhs(rng):
    s = ProblemSetup(MeshSpec(1, 8), VariableOrder.one_minus_cos(), N=20)
    R = rng.standard_normal((19, 7))
    keep = R.copy()
    fdac_solve(BlockSystemView.for_setup(s, base=2), R)
    np.testing.assert_array_equal(R, keep)
    with pytest.raises(ValueError):
        fdac_solve(BlockSystemView.for_setup(s), R[:5])


def test_single_block_equals_first_tss_step():
    s = ex3_like(1, 8, 2)
    np.testing.assert_allclose(run_fdac(s).frames, run_tss(s).frames, rtol=1e-14, atol=1e-16)


@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("name", ["zero", "one-minus-cos", "t-sin-t"])
@pytest.mark.parametrize("N", [4, 8, 12, 16, 64])
def test_oracle_equivalence_with_tss(dim, name, N):
    s = ex3_like(dim, 8, N, name)
    assert rel_diff(run_tss(s).frames, run_fdac(s).frames) <= 1e-10


@pytest.mark.parametrize("N", [12, 40, 200])
def test_recursion_depth_independence(N):
    s = ex3_like(1, 8, N, "t-sin-t")
    ref = run_fdac(s, base=N).frames
    for base in (1, 3, 16):
        assert rel_diff(ref, run_fdac(s, base=base).frames) <= 1e-11


def test_uneven_split_matches_tss():
    s = ex3_like(2, 4, 12, "one-minus-cos")  # N - 1 = 11 blocks
    assert rel_diff(run_tss(s).frames, run_fdac(s, base=1).frames) <= 1e-10


def test_zero_problem():
    traj = run_fdac(ProblemSetup(MeshSpec(2, 4), VariableOrder.one_minus_cos(), N=33))
    np.testing.assert_array_equal(traj.frames, 0.0)


def test_precomputed_loads():
    s = ex3_like(1, 8, 50)
    loads = source_loads(s, range(s.N + 1))
    assert np.array_equal(run_fdac(s).frames, run_fdac(s, loads=loads).frames)
