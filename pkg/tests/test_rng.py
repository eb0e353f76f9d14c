import math

import numpy as np
from hypothesis import given, settings, strategies as st

from metrolb.rng import DrawKind, RandomStream


def test_same_address_same_draws():
    a = RandomStream(123, 4).normals(DrawKind.NOISE, 10, 7)
    b = RandomStream(123, 4).normals(DrawKind.NOISE, 10, 7)
    assert np.array_equal(a, b)


def test_streams_differ_by_trial_kind_seed():
    base = RandomStream(1, 0).uniforms(DrawKind.NOISE, 0, 8)
    assert not np.array_equal(base, RandomStream(1, 1).uniforms(DrawKind.NOISE, 0, 8))
    assert not np.array_equal(base, RandomStream(1, 0).uniforms(DrawKind.ACCEPT, 0, 8))
    assert not np.array_equal(base, RandomStream(2, 0).uniforms(DrawKind.NOISE, 0, 8))


@settings(max_examples=50, deadline=None)
@given(step=st.integers(0, 10_000), size=st.integers(1, 13), n=st.integers(2, 6))
def test_block_draws_match_single_steps(step, size, n):
    rs = RandomStream(99, 2)
    block = rs.normals(DrawKind.NOISE, step, size, n_steps=n)
    for k in range(n):
        assert np.array_equal(block[k], rs.normals(DrawKind.NOISE, step + k, size)[0])


def test_uniforms_open_interval():
    u = RandomStream(0).uniforms(DrawKind.ACCEPT, 0, 100_000)
    assert u.min() > 0.0 and u.max() < 1.0


def test_normals_moments():
    z = RandomStream(5).normals(DrawKind.NOISE, 0, 400_000)[0]
    assert abs(z.mean()) <= 4 / math.sqrt(z.size)
    assert abs(z.var() - 1.0) <= 4 * math.sqrt(2 / z.size)


def test_seed_reduced_mod_2_64():
    a = RandomStream(2**64 + 5).uniforms(DrawKind.AUX, 3, 4)
    b = RandomStream(5).uniforms(DrawKind.AUX, 3, 4)
    assert np.array_equal(a, b)


def test_spawn_keeps_seed():
    s = RandomStream(77, 1).spawn(9)
    assert (s.master_seed, s.trial) == (77, 9)


def test_generator_reproducible():
    a = RandomStream(3, 3).generator(DrawKind.START).random(5)
    b = RandomStream(3, 3).generator(DrawKind.START).random(5)
    assert np.array_equal(a, b)
