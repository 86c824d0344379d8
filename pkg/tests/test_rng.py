"""Counter-based noise streams: determinism, independence, distribution."""

import numpy as np
from hypothesis import given, settings, strategies as st

from kimura._rng import counter_normals, counter_uniforms, step_normals


def test_uniforms_deterministic_and_in_range():
    paths = np.arange(1000, dtype=np.uint64)
    ctr = np.zeros(1000, dtype=np.uint64)
    u1 = counter_uniforms(7, paths, ctr)
    u2 = counter_uniforms(7, paths, ctr)
    assert np.array_equal(u1, u2)
    assert np.all((u1 > 0.0) & (u1 < 1.0))


def test_different_seed_changes_stream():
    paths = np.arange(100, dtype=np.uint64)
    ctr = np.zeros(100, dtype=np.uint64)
    assert not np.array_equal(
        counter_uniforms(1, paths, ctr), counter_uniforms(2, paths, ctr)
    )


def test_normals_moments():
    paths = np.arange(200_000, dtype=np.uint64)
    z = counter_normals(3, paths, np.zeros_like(paths))
    assert abs(z.mean()) < 0.01
    assert abs(z.std() - 1.0) < 0.01


def test_step_normals_slot_layout_matches_flat_counters():
    """The per-step block must be the (path, step*stride + slot) stream."""
    paths = np.array([5, 9], dtype=np.uint64)
    blk = step_normals(11, paths, 4, 3, slot_stride=8)
    assert blk.shape == (2, 3)
    for j in range(3):
        flat = counter_normals(
            11, paths, np.full(2, 4 * 8 + j, dtype=np.uint64)
        )
        assert np.array_equal(blk[:, j], flat)


@given(
    seed=st.integers(0, 2**31 - 1),
    pa=st.integers(0, 2**20),
    pb=st.integers(0, 2**20),
)
@settings(max_examples=50, deadline=None)
def test_distinct_paths_give_distinct_draws(seed, pa, pb):
    if pa == pb:
        pb += 1
    paths = np.array([pa, pb], dtype=np.uint64)
    u = counter_uniforms(seed, paths, np.zeros(2, dtype=np.uint64))
    assert u[0] != u[1]
