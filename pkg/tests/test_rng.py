"""Portable PRNG: reference vectors and stream properties."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morphoprobe.rng import Xoshiro256, _splitmix64, derive_seed


def test_splitmix64_reference_vector():
    # Published first output for seed 0.
    assert _splitmix64(0)[1] == 0xE220A8397B1DCDAF


def test_xoshiro_reference_sequence():
    # Known opening of the xoshiro256** stream for raw state [1, 2, 3, 4];
    # the third value also falls out of a by-hand state-update trace.
    g = Xoshiro256(0)
    g._s = [1, 2, 3, 4]
    assert [g.next_u64() for _ in range(3)] == [11520, 0, 1509978240]


def test_stream_regression_pin():
    # Frozen draws for one seeded generator; any change here silently
    # reshuffles every sampled task, so it must be deliberate.
    g = Xoshiro256(42)
    assert [g.next_u64() for _ in range(3)] == [
        1546998764402558742, 6990951692964543102, 12544586762248559009]


def test_same_seed_same_stream():
    a, b = Xoshiro256(123), Xoshiro256(123)
    assert [a.next_u64() for _ in range(50)] == \
        [b.next_u64() for _ in range(50)]


def test_zero_seed_usable():
    g = Xoshiro256(0)
    draws = {g.next_u64() for _ in range(10)}
    assert len(draws) > 1


@given(st.integers(min_value=1, max_value=10**6),
       st.integers(min_value=0, max_value=2**64 - 1))
@settings(max_examples=200, deadline=None)
def test_randrange_bounds(n, seed):
    assert 0 <= Xoshiro256(seed).randrange(n) < n


def test_randrange_rejects_nonpositive():
    with pytest.raises(ValueError):
        Xoshiro256(0).randrange(0)


def test_random_unit_interval():
    g = Xoshiro256(7)
    xs = [g.random() for _ in range(2000)]
    assert all(0.0 <= x < 1.0 for x in xs)
    assert abs(np.mean(xs) - 0.5) < 0.03


def test_randrange_roughly_uniform():
    g = Xoshiro256(11)
    counts = np.bincount([g.randrange(8) for _ in range(8000)], minlength=8)
    assert counts.min() > 800  # expectation 1000 per bucket


@given(st.lists(st.integers(), max_size=40),
       st.integers(min_value=0, max_value=2**64 - 1))
@settings(max_examples=100, deadline=None)
def test_shuffle_is_permutation(items, seed):
    shuffled = list(items)
    Xoshiro256(seed).shuffle(shuffled)
    assert sorted(shuffled) == sorted(items)


@given(st.integers(min_value=0, max_value=30),
       st.integers(min_value=0, max_value=2**64 - 1))
@settings(max_examples=100, deadline=None)
def test_sample_without_replacement(k, seed):
    items = list(range(30))
    out = Xoshiro256(seed).sample(items, k)
    assert len(out) == k and len(set(out)) == k
    assert set(out) <= set(items)


def test_sample_overdraw_rejected():
    with pytest.raises(ValueError):
        Xoshiro256(0).sample([1, 2], 3)


def test_choice_empty_rejected():
    with pytest.raises(ValueError):
        Xoshiro256(0).choice([])


def test_derive_seed_deterministic_and_label_sensitive():
    assert derive_seed(0, "a", "b") == derive_seed(0, "a", "b")
    assert derive_seed(0, "a", "b") != derive_seed(0, "b", "a")
    assert derive_seed(0, "a") != derive_seed(1, "a")
    # Length-prefixed encoding: label boundaries cannot be forged by
    # concatenation.
    assert derive_seed(0, "ab", "c") != derive_seed(0, "a", "bc")


def test_derive_seed_no_adjacent_collisions():
    seeds = {derive_seed(0, "unit", i) for i in range(1000)}
    assert len(seeds) == 1000
