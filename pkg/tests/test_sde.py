"""Path simulation: determinism, absorption cascade, boundary policies."""

import numpy as np
import pytest

from kimura.geometry import Point
from kimura.operator import model1d, product_operator, wright_fisher
from kimura.sde import (
    SimConfig,
    counterexample_ensemble,
    simulate,
    simulate_ensemble,
    sum_process_ensemble,
)


CFG = SimConfig(dt=1e-3, T=1.0, seed=42)


# ---------------------------------------------------------------------------
# determinism
# ---------------------------------------------------------------------------


def test_ensemble_reproducible(wf, p03):
    a = simulate_ensemble(wf, p03, CFG, 500)
    b = simulate_ensemble(wf, p03, CFG, 500)
    assert np.array_equal(a.terminal_xy, b.terminal_xy)
    assert np.array_equal(a.strata_bits, b.strata_bits)
    assert np.array_equal(a.first_hit_time, b.first_hit_time, equal_nan=True)


def test_worker_count_does_not_change_results(wf, p03):
    a = simulate_ensemble(wf, p03, CFG, 300, workers=1)
    b = simulate_ensemble(wf, p03, CFG, 300, workers=3)
    assert np.array_equal(a.terminal_xy, b.terminal_xy)
    assert np.array_equal(a.first_hit_face, b.first_hit_face)


def test_single_path_matches_its_ensemble_slot(wf, p03):
    ens = simulate_ensemble(wf, p03, CFG, 8)
    rec = simulate(wf, p03, CFG, path_index=3)
    t, pt, stratum = rec.terminal
    assert t == ens.terminal_time[3]
    assert np.allclose(np.concatenate([pt.x, pt.y]), ens.terminal_xy[3])
    assert stratum == ens.strata()[3]


def test_seed_changes_paths(wf, p03):
    a = simulate_ensemble(wf, p03, CFG, 200)
    b = simulate_ensemble(wf, p03, SimConfig(dt=1e-3, T=1.0, seed=43), 200)
    assert not np.array_equal(a.terminal_xy, b.terminal_xy)


# ---------------------------------------------------------------------------
# absorption semantics
# ---------------------------------------------------------------------------


def test_tangent_absorption_is_permanent(wf, p03):
    cfg = SimConfig(dt=1e-3, T=5.0, seed=1)
    ens = simulate_ensemble(wf, p03, cfg, 2000)
    hit = ens.first_hit_face > 0
    assert hit.mean() > 0.9  # almost everything is absorbed by t=5
    # absorbed 1-simplex paths land on a vertex and stay there
    absorbed_x = ens.terminal_xy[hit, 0]
    assert np.all((absorbed_x == 0.0) | (absorbed_x == 1.0))
    assert np.all(ens.first_hit_time[hit] <= ens.terminal_time[hit] + 1e-12)


def test_first_hit_location_is_on_the_face():
    P = product_operator(model1d(0.0, radius=4.0), model1d(0.5, radius=4.0))
    cfg = SimConfig(dt=1e-3, T=2.0, seed=2, stop_at_first_tangent_hit=True)
    ens = simulate_ensemble(P, Point([0.2, 1.0]), cfg, 2000)
    hit = ens.first_hit_face == 1
    assert hit.any()
    assert np.all(ens.first_hit_xy[hit, 0] == 0.0)
    # the transverse coordinate at the hit stays inside its chart
    assert np.all(ens.first_hit_xy[hit, 1] >= 0.0)


def test_transverse_only_operator_never_absorbs():
    L = model1d(0.5)
    ens = simulate_ensemble(L, Point([0.4]), SimConfig(dt=1e-3, T=1.0, seed=3), 500)
    assert np.all(ens.first_hit_face == 0)
    assert np.allclose(ens.terminal_time, 1.0, atol=1e-9)
    assert np.all(ens.terminal_xy[:, 0] >= 0.0)


def test_martingale_mean_is_preserved(wf, p03):
    # b ≡ 0 makes X_t a bounded martingale: E[X_t] = 0.3 at every t
    ens = simulate_ensemble(wf, p03, SimConfig(dt=1e-3, T=2.0, seed=4), 20_000)
    mean = ens.terminal_xy[:, 0].mean()
    se = ens.terminal_xy[:, 0].std() / np.sqrt(ens.n_paths)
    assert abs(mean - 0.3) <= 3 * se + 2e-3


def test_nonclean_operator_requires_opt_in():
    from kimura.errors import NotClean
    from kimura.operator import remark_counterexample

    C = remark_counterexample()
    with pytest.raises(NotClean):
        simulate_ensemble(C, Point([0.05, 0.05]), SimConfig(dt=1e-3, T=0.1, seed=5), 4)
    cfg = SimConfig(dt=1e-3, T=0.1, seed=5, allow_nonclean=True)
    ens = simulate_ensemble(C, Point([0.05, 0.05]), cfg, 4)
    assert np.all(ens.terminal_xy >= 0.0)


# ---------------------------------------------------------------------------
# occupation accounting
# ---------------------------------------------------------------------------


def test_occupation_monotone_in_eps():
    L = model1d(0.5)
    cfg = SimConfig(
        dt=1e-3, T=1.0, seed=6, occupation_eps=(1e-2, 5e-2, 1e-1)
    )
    ens = simulate_ensemble(L, Point([0.3]), cfg, 300)
    occ = ens.occupation
    assert occ is not None and occ.shape == (300, 1, 3)
    assert np.all(np.diff(occ, axis=2) >= 0.0)
    assert np.all(occ <= 1.0 + 1e-9)


# ---------------------------------------------------------------------------
# cross-fed-drift system
# ---------------------------------------------------------------------------


def test_counterexample_hits_and_is_reproducible():
    cfg = SimConfig(dt=1e-3, T=10.0, seed=7)
    hit, t = counterexample_ensemble(Point([0.05, 0.05]), cfg, 400)
    hit2, t2 = counterexample_ensemble(Point([0.05, 0.05]), cfg, 400)
    assert np.array_equal(hit, hit2)
    assert np.array_equal(t, t2, equal_nan=True)
    assert 0.5 < hit.mean() <= 1.0
    assert np.all(t[hit] <= 10.0) and np.all(t[hit] > 0.0)


def test_sum_process_matches_counterexample_frequency():
    """X₁+X₂ follows the 1D square-root process dS = S dt + √(2S) dW."""
    cfg = SimConfig(dt=1e-3, T=10.0, seed=8)
    hit_2d, _ = counterexample_ensemble(Point([0.05, 0.05]), cfg, 3000)
    hit_1d, _, _ = sum_process_ensemble(0.1, cfg, 3000)
    f2, f1 = hit_2d.mean(), hit_1d.mean()
    se = np.sqrt(f1 * (1 - f1) / 3000 + f2 * (1 - f2) / 3000)
    assert abs(f2 - f1) <= 3 * se + 0.01
