import numpy as np
import pytest
from scipy.linalg import solve_banded

from ratchet_lab.bvp import (
    BandedLU,
    SingularSystemError,
    SLOperator,
    TridiagonalSystem,
    banded_matvec,
    green_columns,
    green_function,
    green_function_at,
    solve_sl_neumann,
    thomas_solve,
)
from ratchet_lab.model import Grid, GridFn, ModelError


def _op(phi, n=1001, varsigma=1.0):
    g = Grid(n)
    vals = phi(g.nodes) if callable(phi) else np.full(n, float(phi))
    return SLOperator(GridFn(g, vals), varsigma)


def test_thomas_matches_dense():
    rng = np.random.default_rng(0)
    n = 40
    sub, sup = rng.uniform(-1, 0, n - 1), rng.uniform(-1, 0, n - 1)
    diag = 3 + rng.uniform(0, 1, n)
    rhs = rng.normal(size=(n, 3))
    A = np.diag(diag) + np.diag(sub, -1) + np.diag(sup, 1)
    assert np.allclose(thomas_solve(sub, diag, sup, rhs), np.linalg.solve(A, rhs), atol=1e-13)


def test_thomas_reports_zero_pivot():
    with pytest.raises(SingularSystemError):
        thomas_solve([1.0], [0.0, 1.0], [1.0], [1.0, 1.0])


def test_tridiagonal_system_flags_dominance():
    s = TridiagonalSystem(np.array([2.0]), np.array([1.0, 5.0]), np.array([0.5]), np.zeros(2))
    assert list(s.dominance_violations()) == []  # row 0: |1| >= 0.5; row 1: |5| >= 2
    s = TridiagonalSystem(np.array([2.0]), np.array([0.1, 1.0]), np.array([0.5]), np.zeros(2))
    assert list(s.dominance_violations()) == [0, 1]
    with pytest.raises(ValueError):
        TridiagonalSystem(np.ones(2), np.ones(2), np.ones(1), np.ones(2))


@pytest.mark.parametrize("phi,rhs,u", [(1.0, 1.0, 1.0), (4.0, 8.0, 2.0)])
def test_constant_solutions(phi, rhs, u):
    op = _op(phi)
    sol = solve_sl_neumann(op, np.full(op.grid.n, rhs))
    # forward error is bounded by cond(A) * eps ~ 4 varsigma / (phi h^2) * 2e-16
    assert np.max(np.abs(sol.values - u)) <= 1e-10


def test_manufactured_second_order():
    errs = []
    for n in (501, 1001):
        op = _op(1.0, n)
        x = op.grid.nodes
        sol = solve_sl_neumann(op, np.cos(2 * np.pi * x) * (1 + 4 * np.pi**2))
        errs.append(np.max(np.abs(sol.values - np.cos(2 * np.pi * x))))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.15)


def test_residual_and_conservation():
    op = _op(lambda x: 1 + x + np.sin(3 * x) ** 2, 801, varsigma=0.3)
    rhs = np.exp(op.grid.nodes)
    u = solve_sl_neumann(op, rhs)
    res = op.apply(u.values) - rhs
    # normwise backward error: |r| / (|A| |u| + |f|) in the max norm
    norm_A = np.max(op.phi.values) + 4 * op.varsigma / op.grid.h**2
    rel = np.max(np.abs(res)) / (norm_A * np.max(np.abs(u.values)) + np.max(np.abs(rhs)))
    assert rel <= 1e-12
    assert (op.phi * u).integral() == pytest.approx(GridFn(op.grid, rhs).integral(), abs=1e-10)


def test_green_function_normalization_and_symmetry():
    op = _op(lambda x: 0.5 + x**2, 1001, varsigma=0.7)
    cols = green_columns(op, [100, 400, 900])
    for c in range(3):
        G = GridFn(op.grid, cols[:, c])
        assert (op.phi * G).integral() == pytest.approx(1.0, abs=1e-8)
        assert np.all(G.values > 0)
    assert cols[400, 0] == pytest.approx(cols[100, 1], abs=1e-10)
    assert cols[900, 1] == pytest.approx(cols[400, 2], abs=1e-10)


def test_green_function_reflection():
    op = _op(1.0, 1001)
    G = green_function(op, 0.5)
    assert abs(G.values[0] - G.values[-1]) <= 1e-12


def test_green_function_monotone_structure():
    op = _op(lambda x: 1 + 5 * x, 1001)
    G = green_function(op, 0.3)
    j = op.grid.index_of(0.3)
    d = np.diff(G.values)
    assert np.all(d[:j] >= 0) and np.all(d[j:] <= 0)


def test_green_function_requires_node():
    op = _op(1.0, 1001)
    with pytest.raises(ModelError):
        green_function(op, 0.12345)


def test_green_function_at_interpolates_between_nodes():
    op = _op(lambda x: 1 + x, 1001)
    h = op.grid.h
    y = 0.3 + 0.25 * h
    G = green_function_at(op, y)
    a, b = green_function(op, 0.3), green_function(op, 0.3 + h)
    assert np.allclose(G.values, 0.75 * a.values + 0.25 * b.values, atol=1e-12)
    assert np.allclose(green_function_at(op, 0.3).values, a.values, atol=1e-12)


def test_nonpositive_coefficient_rejected():
    with pytest.raises(ModelError):
        _op(lambda x: x - 0.5)
    with pytest.raises(ModelError):
        _op(1.0, varsigma=0.0)


def test_banded_lu_matches_solve_banded():
    rng = np.random.default_rng(3)
    n, kl, ku = 30, 2, 2
    ab = rng.normal(size=(kl + ku + 1, n))
    ab[ku] += 10.0
    b = rng.normal(size=n)
    assert np.allclose(BandedLU(ab, kl, ku).solve(b), solve_banded((kl, ku), ab, b), atol=1e-12)
    x = BandedLU(ab, kl, ku).solve(b)
    assert np.allclose(banded_matvec(ab, kl, ku, x), b, atol=1e-12)
