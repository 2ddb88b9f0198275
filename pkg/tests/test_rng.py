"""Seed derivation and stream isolation."""

from __future__ import annotations

from hypothesis import given
from hypothesis import strategies as st

from ddakit.rng import Stream, derive_seed


def test_derive_seed_is_stable_across_calls_and_processes():
    # Frozen values: sha256 of "{base}:{label}" is platform-independent,
    # so these constants must never change.
    assert derive_seed(0, "player") == 5115553863320243351
    assert derive_seed(0, "enemy") == 6723513003719429685
    assert derive_seed(42, "calibration/0") == 2500957252952828798


def test_derive_seed_depends_on_both_base_and_label():
    assert derive_seed(1, "a") != derive_seed(2, "a")
    assert derive_seed(1, "a") != derive_seed(1, "b")
    # The string form matters, not any numeric coincidence.
    assert derive_seed(12, "3") != derive_seed(1, "23")


@given(st.integers(min_value=0, max_value=2**64), st.text(max_size=40))
def test_derive_seed_deterministic_and_in_range(base, label):
    s1 = derive_seed(base, label)
    s2 = derive_seed(base, label)
    assert s1 == s2
    assert 0 <= s1 < 2**63


def test_stream_same_seed_same_draws():
    a = Stream(7, "drops")
    b = Stream(7, "drops")
    assert [a.random() for _ in range(20)] == [b.random() for _ in range(20)]


def test_stream_label_separates_sequences():
    a = Stream(7, "drops")
    b = Stream(7, "player")
    assert [a.random() for _ in range(5)] != [b.random() for _ in range(5)]


def test_streams_do_not_interfere():
    # Drawing extra numbers from one stream must not shift another stream
    # seeded from the same base.
    a1 = Stream(3, "a")
    b1 = Stream(3, "b")
    baseline_b = [b1.random() for _ in range(10)]

    a2 = Stream(3, "a")
    b2 = Stream(3, "b")
    for _ in range(1000):
        a2.random()
    assert [b2.random() for _ in range(10)] == baseline_b
    assert a1.random() == Stream(3, "a").random()


def test_stream_spawn_namespaces_under_parent():
    parent = Stream(9, "enemy")
    child = parent.spawn("wave3")
    assert child.label == "enemy/wave3"
    same = Stream(parent.seed_value, "enemy/wave3")
    assert [child.random() for _ in range(5)] == [same.random() for _ in range(5)]


def test_stream_remembers_seeding():
    s = Stream(11, "x")
    assert s.base == 11
    assert s.label == "x"
    assert s.seed_value == derive_seed(11, "x")
