"""Certificate-size model, egress estimates, and the traffic ledger."""

import pytest

from sparsedag.traffic import (TrafficLedger, UnknownScheme, certificate_size,
                               sparse_proof_bytes, table_egress_bytes,
                               vertex_wire_size)

# per-user per-round egress targets the model was calibrated against
# (n = 2000, lambda = 128); tolerance is +-20%
TABLE_CELLS = {
    ("baseline", "threshold"): 171e6,
    ("sparse", "threshold"): 17e6,
    ("baseline", "multisig"): 837e6,
    ("sparse", "multisig"): 81e6,
    ("baseline", "plain"): 171e9,
    ("sparse", "plain"): 16e9,
}


def test_certificate_size_formulas():
    # threshold: 4*lambda bits; multisig: n + 4*lambda bits; plain:
    # (2f+1)*3*lambda bits
    assert certificate_size("threshold", 2000, 128) == 64
    assert certificate_size("multisig", 2000, 128) == (2000 + 512 + 7) // 8
    assert certificate_size("plain", 2000, 128) == 1333 * 48


def test_unknown_scheme_rejected():
    with pytest.raises(UnknownScheme):
        certificate_size("quantum", 100, 128)


@pytest.mark.parametrize("variant,scheme", sorted(TABLE_CELLS))
def test_egress_model_reproduces_published_cells(variant, scheme):
    target = TABLE_CELLS[(variant, scheme)]
    got = table_egress_bytes(variant, scheme, 2000, 128)
    assert abs(got - target) / target <= 0.20, (variant, scheme, got, target)


def test_certificate_size_monotone_in_n():
    for scheme in ("multisig", "plain"):
        previous = 0
        for n in range(4, 10_001, 311):
            size = certificate_size(scheme, n, 128)
            assert size >= previous
            previous = size


def test_vertex_wire_sizes():
    f = (2000 - 1) // 3
    meta, payload = vertex_wire_size(2 * f + 1, 512, "threshold", 2000, 128)
    assert meta == 16 + (2 * f + 1) * 64
    assert payload == 512
    meta_sparse, _ = vertex_wire_size(72, 512, "threshold", 2000, 128,
                                      sparse=True, sampled=70, chain_len=70,
                                      size_model="kzg")
    assert meta_sparse == 16 + 72 * 64 + sparse_proof_bytes(128, 2000, 70, 70)
    meta_merkle, _ = vertex_wire_size(72, 512, "threshold", 2000, 128,
                                      sparse=True, sampled=70, chain_len=70,
                                      size_model="merkle")
    assert meta_merkle > meta_sparse   # per-source logarithmic openings


def test_sparse_to_baseline_metadata_ratio_order_of_magnitude():
    """At n=2000, lambda=128, threshold certificates, the sparse/baseline
    metadata ratio sits around one tenth."""
    sparse = table_egress_bytes("sparse", "threshold", 2000, 128)
    baseline = table_egress_bytes("baseline", "threshold", 2000, 128)
    ratio = sparse / baseline
    assert 1 / 15 <= ratio <= 1 / 6, ratio


def test_ledger_accumulates_and_queries():
    ledger = TrafficLedger()
    ledger.record(3, 5, "payload", 10)
    ledger.record(3, 5, "payload", 10)
    assert ledger.get(3, 5, "payload") == 20
    assert ledger.get(3, 6, "payload") == 0        # unknown round
    assert ledger.get(2, 5, "vertex_metadata") == 0
    assert ledger.validator_total(3) == 20
    assert ledger.total() == 20
    assert ledger.total("payload") == 20
    assert ledger.per_round_totals()[5] == 20


def test_ledger_rejects_bad_input():
    ledger = TrafficLedger()
    with pytest.raises(ValueError):
        ledger.record(0, 0, "payload", -1)
    with pytest.raises(ValueError):
        ledger.record(0, 0, "untracked", 1)
