"""Path statistics: decomposition, hitting histograms, occupation, doubling."""

import numpy as np
import pytest

from kimura.errors import EmptyBin
from kimura.estimators import (
    HittingHistogram,
    aligned_hitting_edges,
    corner_hit_probability,
    decompose,
    decompose_ensemble,
    doubling_ratio,
    hitting_histogram,
    stratum_key,
    transverse_occupation,
)
from kimura.geometry import Point
from kimura.operator import model1d, product_operator
from kimura.sde import SimConfig, simulate_ensemble
from kimura import pde


CFG = SimConfig(dt=1e-3, T=1.0, seed=9)


def test_stratum_key_canonical_form():
    assert stratum_key(frozenset()) == "interior"
    assert stratum_key(frozenset({3, 1})) == "1+3"


# ---------------------------------------------------------------------------
# transition decomposition
# ---------------------------------------------------------------------------


def test_masses_sum_to_one_exactly(wf, p03):
    dec = decompose(wf, p03, 1.0, 2000, cfg=CFG)
    total = sum(est for est, _ in dec.masses.values())
    assert total == pytest.approx(1.0, abs=1e-12)
    assert sum(dec.counts.values()) == 2000


def test_decompose_same_sample_identity(wf, p03):
    """Interior mass at t equals 1 − cumulative hit mass, on the same paths."""
    cfg = SimConfig(dt=1e-3, T=1.0, seed=10, stop_at_first_tangent_hit=True)
    ens = simulate_ensemble(wf, p03, cfg, 3000)
    dec = decompose_ensemble(wf, p03, 1.0, ens)
    hist1 = hitting_histogram(wf, p03, 1, 3000, ens=ens)
    hist2 = hitting_histogram(wf, p03, 2, 3000, ens=ens)
    interior, _ = dec.mass(frozenset())
    cum = hist1.cumulative_mass(1.0) + hist2.cumulative_mass(1.0)
    assert interior == pytest.approx(1.0 - cum, abs=1e-12)


def test_product_masses_factorize():
    """Joint face masses of a product equal products of 1D masses (3·se)."""
    L1, L2 = model1d(0.0, radius=4.0), model1d(0.0, radius=4.0)
    P = product_operator(L1, L2)
    p1, p2 = 0.3, 0.8
    cfg = SimConfig(dt=1e-3, T=0.5, seed=11)
    n = 8000
    dec = decompose(P, Point([p1, p2]), 0.5, n, cfg=cfg)
    d1 = decompose(L1, Point([p1]), 0.5, n, cfg=cfg)
    d2 = decompose(L2, Point([p2]), 0.5, n, cfg=SimConfig(dt=1e-3, T=0.5, seed=12))
    m12, _ = dec.mass({1, 2})
    m1, s1 = d1.mass({1})
    m2, s2 = d2.mass({1})
    prod = m1 * m2
    se = np.sqrt(prod * (1 - prod) / n) + m1 * s2 + m2 * s1
    assert abs(m12 - prod) <= 3 * se + 5e-3


def test_decompose_matches_pde_survival(wf, p03):
    dec = decompose(wf, p03, 0.5, 20_000, cfg=CFG)
    interior, se = dec.mass(frozenset())
    ks = pde.dirichlet_kernel(wf, 0.3, 0.5, 5e-4, M=400)
    assert abs(interior - ks.survival_at(0.5)) <= 3 * se + 5e-3


# ---------------------------------------------------------------------------
# hitting histograms
# ---------------------------------------------------------------------------


def test_histogram_totals_and_marginal(wf, p03):
    hist = hitting_histogram(wf, p03, 1, 4000, time_bins=20, cfg=CFG)
    assert hist.total == hist.counts.sum()
    assert hist.time_marginal().sum() == hist.total
    assert hist.cumulative_mass(1.0) == pytest.approx(hist.total / 4000)
    assert hist.cumulative_mass(0.0) == 0.0


def test_histogram_against_pde_flux(wf, p03):
    """Time-marginal of face-1 hits tracks the PDE boundary flux."""
    hist = hitting_histogram(wf, p03, 1, 20_000, time_bins=10, cfg=CFG)
    ks = pde.dirichlet_kernel(wf, 0.3, 1.0, 5e-4, M=400)
    cal = pde.caloric_density(ks, 1)
    edges = hist.time_edges
    mc = hist.time_marginal() / hist.n_paths
    ref = np.array(
        [cal.cumulative(b) - cal.cumulative(a) for a, b in zip(edges, edges[1:])]
    )
    assert np.abs(mc - ref).sum() < 0.03


# ---------------------------------------------------------------------------
# corner probability
# ---------------------------------------------------------------------------


def test_corner_probability_rule_of_three():
    P = product_operator(model1d(0.0, radius=8.0), model1d(0.0, radius=8.0))
    cfg = SimConfig(dt=1e-3, T=0.25, seed=13)
    est, (lo, hi) = corner_hit_probability(
        P, Point([0.05, 5.0]), (1, 2), 1000, cfg=cfg
    )
    assert est == 0.0
    assert lo == 0.0 and hi == pytest.approx(3 / 1000)


def test_corner_probability_eps_sweep_shares_paths():
    P = product_operator(model1d(0.0, radius=8.0), model1d(0.0, radius=8.0))
    cfg = SimConfig(dt=1e-3, T=0.25, seed=13)
    rows = corner_hit_probability(
        P, Point([0.05, 5.0]), (1, 2), 1000, cfg=cfg, eps_corner=(1e-2, 1e-3)
    )
    assert [r[0] for r in rows] == [1e-2, 1e-3]
    # bigger window can only catch more paths
    assert rows[0][1] >= rows[1][1]


# ---------------------------------------------------------------------------
# occupation curves
# ---------------------------------------------------------------------------


def test_occupation_slope_recovers_weight():
    L = model1d(0.5)
    eps = np.geomspace(1e-3, 1e-1, 6)
    occ = transverse_occupation(
        L, Point([0.5]), 1.0, 4000, eps, cfg=SimConfig(dt=2e-4, seed=14)
    )
    assert occ.faces == (1,)
    assert np.all(np.diff(occ.mean[0]) > 0)
    assert occ.loglog_slope(1) == pytest.approx(0.5, abs=0.15)


# ---------------------------------------------------------------------------
# doubling machinery
# ---------------------------------------------------------------------------


def _synthetic_histogram(n_paths=10**8):
    """Deterministic counts from a smooth density: ratio must approach 8."""
    t0, q0, r_max, levels = 0.5, 0.5, 0.1, 4
    te, le = aligned_hitting_edges(t0, q0, r_max, levels, 1.0, loc_range=(0.0, 1.0))
    tc = 0.5 * (te[:-1] + te[1:])
    lc = 0.5 * (le[:-1] + le[1:])
    dens = np.outer(1.0 + 0.2 * (tc - t0), 1.0 + 0.1 * (lc - q0))
    cell = np.diff(te)[:, None] * np.diff(le)[None, :]
    counts = dens * cell * n_paths
    return (
        HittingHistogram(
            face=1, time_edges=te, loc_edges=(le,), counts=counts, n_paths=n_paths
        ),
        t0,
        q0,
        r_max,
        levels,
    )


def test_doubling_ratio_smooth_density_approaches_eight():
    hist, t0, q0, r_max, levels = _synthetic_histogram()
    trips = doubling_ratio(hist, q0, [r_max / 2**j for j in range(levels)], t0)
    ratios = [ratio for _, ratio, _ in trips]
    # The density is bilinear around the window center, so the midpoint-rule
    # bin counts integrate it exactly: every ratio is 8 up to count rounding,
    # whose relative effect is largest in the smallest (fewest-count) window.
    assert all(abs(r - 8.0) < 0.15 for r in ratios)
    assert ratios[-1] == pytest.approx(8.0, abs=1e-3)


def test_doubling_ratio_empty_bin():
    hist, t0, q0, r_max, levels = _synthetic_histogram()
    hist.counts[:] = 0.0
    with pytest.raises(EmptyBin):
        doubling_ratio(hist, q0, [r_max], t0)


def test_doubling_ratio_requires_aligned_edges():
    hist, t0, q0, r_max, _ = _synthetic_histogram()
    with pytest.raises(ValueError):
        doubling_ratio(hist, q0, [r_max * 1.0371], t0)


def test_aligned_edges_cover_and_align():
    te, le = aligned_hitting_edges(0.5, 0.5, 0.1, 3, 1.0)
    w_t, w_x = (0.1 / 4) ** 2, 0.1 / 4
    assert te[0] <= w_t and te[-1] >= 1.0 - w_t
    assert np.allclose(np.diff(te), w_t)
    assert np.allclose(np.diff(le), w_x)
    # t and q themselves are edges
    assert np.min(np.abs(te - 0.5)) < 1e-12
    assert np.min(np.abs(le - 0.5)) < 1e-12
    with pytest.raises(ValueError):
        aligned_hitting_edges(0.02, 0.5, 0.1, 3, 1.0)
