"""Finite-volume Kolmogorov solvers: discrete duality, closed-form oracles."""

import math

import numpy as np
import pytest
import scipy.integrate
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from kimura.errors import GridTooCoarse, IncompatibleData
from kimura.geometry import Point
from kimura.operator import model1d, product_operator, wright_fisher
from kimura.pde import (
    Grid1D,
    SpeedScale,
    caloric_density,
    dirichlet_kernel,
    duhamel_solve,
    generator_matrix,
    mu_inner,
    solve_backward,
    solve_backward_2d,
    solve_nonhomogeneous,
)


# ---------------------------------------------------------------------------
# speed/scale closed forms
# ---------------------------------------------------------------------------


def test_power_family_cell_mass_matches_quadrature():
    # A = x, b = 0.5: dμ-density x^{-1/2}, total mass on [0,1] is 2
    L = model1d(0.5)
    g = Grid1D.for_operator(L, M=200)
    assert g.cell_mass.sum() == pytest.approx(2.0, rel=1e-3)
    k = len(g.nodes) // 2
    lo, hi = 0.5 * (g.nodes[k - 1] + g.nodes[k]), 0.5 * (g.nodes[k] + g.nodes[k + 1])
    ref, _ = scipy.integrate.quad(lambda x: x**-0.5, lo, hi)
    assert g.cell_mass[k] == pytest.approx(ref, rel=1e-9)


def test_beta_family_cell_mass_matches_quadrature():
    """WF with mutation [0.3, 0.3]: dμ-density ∝ x^{-0.4}(1-x)^{-0.4}.

    The preset carries the conventional ½ in front of x(1−x)∂², so the face
    weight is 0.3/0.5 = 0.6 and the speed density is x^{0.6−1}(1−x)^{0.6−1}.
    The normalization of the scale slope is a convention, so compare cell
    masses through normalization-free ratios.
    """
    W = wright_fisher(1, np.array([0.3, 0.3]))
    g = Grid1D.for_operator(W, M=200)
    dens = lambda x: x**-0.4 * (1 - x) ** -0.4
    ks = [3, len(g.nodes) // 2, len(g.nodes) - 4]
    refs = []
    for k in ks:
        lo = 0.5 * (g.nodes[k - 1] + g.nodes[k])
        hi = 0.5 * (g.nodes[k] + g.nodes[k + 1])
        refs.append(scipy.integrate.quad(dens, lo, hi)[0])
    for k, ref in zip(ks[1:], refs[1:]):
        assert g.cell_mass[k] / g.cell_mass[ks[0]] == pytest.approx(
            ref / refs[0], rel=1e-7
        )


# ---------------------------------------------------------------------------
# discrete duality (the load-bearing structural identity)
# ---------------------------------------------------------------------------


def _forward_matrix(grid):
    B = generator_matrix(grid).tocsc()
    mu = grid.cell_mass
    D = sp.diags(mu)
    # Dirichlet cells carry zero mass; the adjoint march never leaves the
    # interior subspace, so their rows may be zeroed.
    Dinv = sp.diags(np.where(mu > 0, 1.0 / np.where(mu > 0, mu, 1.0), 0.0))
    return (Dinv @ B.T @ D).tocsc()


def test_discrete_duality_twenty_pairs(wf):
    grid = Grid1D.for_operator(wf, M=200)
    B = _forward_matrix(grid)  # generator of the adjoint march
    A = generator_matrix(grid).tocsc()
    dt, steps = 0.01, 20
    back = spla.splu(sp.eye(A.shape[0], format="csc") - dt * A)
    fwd = spla.splu(sp.eye(B.shape[0], format="csc") - dt * B)
    rng = np.random.default_rng(7)
    mask = ~grid.dirichlet_mask()
    worst = 0.0
    for _ in range(20):
        f = rng.normal(size=A.shape[0]) * mask
        g = rng.normal(size=A.shape[0]) * mask
        Tg, Sf = g.copy(), f.copy()
        for _k in range(steps):
            Tg = back.solve(Tg)
            Sf = fwd.solve(Sf)
        lhs = mu_inner(grid, f, Tg)
        rhs = mu_inner(grid, Sf, g)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    assert worst < 1e-10


def test_kernel_symmetry_same_grid(wf):
    grid = Grid1D.for_operator(wf, M=200)
    ka = dirichlet_kernel(wf, 0.3, 0.5, 1e-3, grid=grid)
    kb = dirichlet_kernel(wf, 0.6, 0.5, 1e-3, grid=grid)
    ia = grid.nearest_interior(0.3)
    ib = grid.nearest_interior(0.6)
    assert ka.k[-1][ib] == pytest.approx(kb.k[-1][ia], rel=1e-9)


# ---------------------------------------------------------------------------
# closed-form kernel oracles
# ---------------------------------------------------------------------------


def test_survival_matches_inverse_gaussian_oracle():
    # A = x, b = 0: absorption time from x0 has P(τ > t) = 1 − exp(−x0/t)
    L = model1d(0.0, radius=8.0)
    ks = dirichlet_kernel(L, 0.3, 2.0, 2.5e-4, M=600)
    x0 = ks.p0  # the delta sits on the nearest node; evaluate the oracle there
    for t in (0.5, 1.0, 2.0):
        oracle = 1.0 - math.exp(-x0 / t)
        assert ks.survival_at(t) == pytest.approx(oracle, abs=3e-4)


def test_hitting_density_matches_oracle():
    L = model1d(0.0, radius=8.0)
    ks = dirichlet_kernel(L, 0.3, 2.0, 5e-4, M=600)
    x0 = ks.p0
    cal = caloric_density(ks, 1)
    ts = np.array([0.25, 0.5, 1.0, 2.0])
    dens = np.interp(ts, cal.times, cal.values)
    oracle = (x0 / ts**2) * np.exp(-x0 / ts)
    assert np.max(np.abs(dens - oracle)) < 5e-3


def test_wright_fisher_masses_and_mean_absorption(wf):
    ks = dirichlet_kernel(wf, 0.3, 12.0, 1e-3, M=400, max_slices=400)
    c1 = caloric_density(ks, 1)
    c2 = caloric_density(ks, 2)
    assert c1.total == pytest.approx(0.7, abs=2e-3)
    assert c2.total == pytest.approx(0.3, abs=2e-3)
    # E[τ] = −2(p ln p + q ln q) at p0 = 0.3
    e_tau = np.trapezoid(ks.survival, ks.step_times)
    oracle = -2 * (0.3 * math.log(0.3) + 0.7 * math.log(0.7))
    assert e_tau == pytest.approx(oracle, abs=2e-3)


def test_survival_is_monotone_and_mass_balances(wf):
    ks = dirichlet_kernel(wf, 0.3, 2.0, 1e-3, M=300)
    assert np.all(np.diff(ks.survival) <= 1e-12)
    absorbed = caloric_density(ks, 1).total + caloric_density(ks, 2).total
    assert ks.survival_at(2.0) + absorbed == pytest.approx(1.0, abs=2e-3)
    assert ks.min_density >= -1e-10


def test_kernel_refinement_converges(wf):
    vals = {}
    for M in (100, 200, 400):
        vals[M] = dirichlet_kernel(wf, 0.3, 0.5, 5e-4, M=M).survival_at(0.5)
    assert abs(vals[400] - vals[200]) < abs(vals[200] - vals[100])


# ---------------------------------------------------------------------------
# backward solves
# ---------------------------------------------------------------------------


def test_constants_invariant_without_absorption():
    # no tangent face: u ≡ 1 is an exact steady state of the march
    L = model1d(0.5)
    res = solve_backward(L, lambda x: np.ones_like(x), 1.0, 1e-2, M=150)
    assert np.max(np.abs(res.final - 1.0)) < 1e-12


def test_constants_decay_with_absorption(wf):
    res = solve_backward(wf, lambda x: np.ones_like(x), 1.0, 1e-3, M=200)
    inner = ~res.grid.dirichlet_mask()
    assert np.all(res.final[inner] < 1.0)
    assert np.all(res.final >= -1e-12)


def test_backward_march_is_positivity_preserving(wf):
    f = lambda x: np.maximum(0.0, 0.25 - np.abs(x - 0.5))
    res = solve_backward(wf, f, 0.5, 1e-3, M=200)
    assert res.min_value >= -1e-12


def test_theta_below_half_warns(wf):
    with pytest.warns(RuntimeWarning):
        solve_backward(wf, lambda x: x, 0.01, 1e-3, M=50, theta=0.3)


def test_grid_too_coarse():
    with pytest.raises(GridTooCoarse):
        Grid1D.for_operator(model1d(0.0), M=4)


# ---------------------------------------------------------------------------
# nonhomogeneous boundary data
# ---------------------------------------------------------------------------


def test_duhamel_agrees_with_direct_solve():
    L = model1d(0.0, radius=8.0)
    zeta = lambda t: math.sin(1.3 * t) ** 2
    direct = solve_nonhomogeneous(L, zeta, 1.0, 1e-3, M=300)
    via = duhamel_solve(L, zeta, 1.0, 1e-3, M=300)
    assert np.max(np.abs(direct.final - via.final)) < 1e-3


def test_incompatible_boundary_data_rejected():
    L = model1d(0.0)
    with pytest.raises(IncompatibleData):
        solve_nonhomogeneous(L, lambda t: 1.0 + t, 0.5, 1e-3, M=100)


# ---------------------------------------------------------------------------
# 2D tensor solves
# ---------------------------------------------------------------------------


def test_2d_backward_matches_product_of_1d():
    Lx = model1d(0.0, radius=2.0)
    Ly = model1d(0.5, radius=2.0)
    P = product_operator(Lx, Ly)
    fx = lambda x: np.sin(np.pi * x / 2.0)
    fy = lambda y: np.cos(np.pi * y / 4.0)
    T, dt, M = 0.1, 1e-3, 64
    res2 = solve_backward_2d(P, lambda X, Y: fx(X) * fy(Y), T, dt, M=M)
    rx = solve_backward(Lx, fx, T, dt, grid=res2.grid_x)
    ry = solve_backward(Ly, fy, T, dt, grid=res2.grid_y)
    ref = np.outer(rx.final, ry.final)
    assert np.max(np.abs(res2.values[-1] - ref)) < 5e-4
