"""Standalone inclusion-latency simulator."""

import pytest

from sparsedag.inclusion import (UNREACHED, fraction_within,
                                 inclusion_latency_sim, merge_hists)


def test_histogram_mass_equals_counted_vertices():
    n, rounds, guard = 50, 40, 10
    hist = inclusion_latency_sim(n, 8, rounds, seed=3, edge_guard=guard)
    assert sum(hist.values()) == n * (rounds - guard)


def test_anchor_vertices_have_latency_zero():
    hist = inclusion_latency_sim(60, 10, 40, seed=4)
    # one anchor per counted round, each its own earliest anchor
    assert hist.get(0, 0) == 30


def test_direct_parents_latency_one_present():
    hist = inclusion_latency_sim(200, 20, 40, seed=5)
    assert hist.get(1, 0) > 0
    assert all(lat >= 0 or lat == UNREACHED for lat in hist)


def test_full_quorum_sample_degenerates_to_two_rounds():
    """At D = n - f the sample is the whole visible quorum; every vertex
    lands within two rounds of an anchor."""
    n = 100
    f = (n - 1) // 3
    hist = inclusion_latency_sim(n, n - f, 60, seed=6)
    assert fraction_within(hist, 2) == 1.0


def test_reference_operating_point():
    hist = inclusion_latency_sim(1000, 70, 100, seed=7)
    assert fraction_within(hist, 2) >= 0.95


def test_smaller_samples_are_slower():
    fast = inclusion_latency_sim(300, 60, 60, seed=8)
    slow = inclusion_latency_sim(300, 6, 60, seed=8)
    assert fraction_within(slow, 2) < fraction_within(fast, 2)


def test_deterministic_per_seed():
    a = inclusion_latency_sim(120, 12, 40, seed=9)
    b = inclusion_latency_sim(120, 12, 40, seed=9)
    c = inclusion_latency_sim(120, 12, 40, seed=10)
    assert a == b
    assert a != c


def test_parameter_validation():
    with pytest.raises(ValueError):
        inclusion_latency_sim(10, 0, 40, seed=1)
    with pytest.raises(ValueError):
        inclusion_latency_sim(10, 11, 40, seed=1)
    with pytest.raises(ValueError):
        inclusion_latency_sim(10, 2, 5, seed=1)


def test_merge_hists():
    assert merge_hists([{0: 1, 2: 3}, {2: 2, 5: 1}]) == {0: 1, 2: 5, 5: 1}
