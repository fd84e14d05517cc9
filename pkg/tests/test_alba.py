"""Chained-sample proofs: determinism, tampering, reduced Monte Carlo.

The full-scale completeness (1e4 trials) and soundness (1e5 grinding
attempts) measurements live in the acceptance suite; these tests exercise
the same machinery at a size that keeps the unit suite fast.
"""

import pytest

from sparsedag.alba import (AlbaParams, ProofSearchExhausted, alba_prove,
                            alba_verify, params_for_chain_length,
                            select_params, survival_probability)
from sparsedag.hashing import tagged_hash

REDUCED = select_params(n_p=21, n_f=10, lambda_sound=10, lambda_complete=10)


def elements(count, tag="elem"):
    return [tagged_hash(tag, i.to_bytes(4, "big")) for i in range(count)]


def seed_of(i, tag="seed"):
    return tagged_hash(tag, i.to_bytes(4, "big"))


def test_prove_then_verify():
    proof = alba_prove(seed_of(0), elements(21), REDUCED)
    assert len(proof.chain) == REDUCED.u
    assert 0 <= proof.start < REDUCED.d
    assert alba_verify(seed_of(0), proof, REDUCED)


def test_empty_element_set_exhausts():
    with pytest.raises(ProofSearchExhausted):
        alba_prove(seed_of(1), [], REDUCED)


def test_prove_is_deterministic():
    pool = elements(25)
    a = alba_prove(seed_of(2), pool, REDUCED)
    b = alba_prove(seed_of(2), list(reversed(pool)), REDUCED)
    assert a == b


def test_chain_elements_come_from_pool():
    pool = set(elements(21))
    proof = alba_prove(seed_of(3), pool, REDUCED)
    assert set(proof.chain) <= pool


def test_verify_rejects_wrong_seed():
    proof = alba_prove(seed_of(4), elements(21), REDUCED)
    assert not alba_verify(seed_of(5), proof, REDUCED)


def test_verify_rejects_start_out_of_range():
    proof = alba_prove(seed_of(6), elements(21), REDUCED)
    forged = type(proof)(start=REDUCED.d, chain=proof.chain)
    assert not alba_verify(seed_of(6), forged, REDUCED)


def test_verify_rejects_wrong_length_and_garbage():
    proof = alba_prove(seed_of(7), elements(21), REDUCED)
    short = type(proof)(start=proof.start, chain=proof.chain[:-1])
    assert not alba_verify(seed_of(7), short, REDUCED)
    assert not alba_verify(seed_of(7), "nonsense", REDUCED)
    mixed = type(proof)(start=proof.start,
                        chain=proof.chain[:-1] + ("tiny",))
    assert not alba_verify(seed_of(7), mixed, REDUCED)


def test_tampered_chains_fail_with_high_probability():
    """Swapping two adjacent chain elements breaks a bin condition except
    when the two elements share a bin (probability about 1/n_p per link)."""
    trials, survived = 300, 0
    pool = elements(21)
    for i in range(trials):
        seed = seed_of(i, "tamper")
        try:
            proof = alba_prove(seed, pool, REDUCED)
        except ProofSearchExhausted:
            continue        # the tuned 2^-12 prover-failure rate, not at issue
        chain = list(proof.chain)
        chain[3], chain[4] = chain[4], chain[3]
        if chain == list(proof.chain):
            continue
        if alba_verify(seed, type(proof)(start=proof.start, chain=tuple(chain)),
                       REDUCED):
            survived += 1
    # two independent bin conditions must both happen to hold: rate well
    # under 2/n_p each; allow generous slack for 300 trials
    assert survived / trials < 0.05, survived


def test_reduced_completeness_monte_carlo():
    pool = elements(21)
    failures = 0
    trials = 1000
    for i in range(trials):
        try:
            alba_prove(seed_of(i, "complete"), pool, REDUCED)
        except ProofSearchExhausted:
            failures += 1
    # tuned failure rate is 2^-12 per trial; 1000 trials should basically
    # never fail more than a couple of times
    assert failures <= 2, failures


def test_reduced_soundness_monte_carlo():
    pool = elements(10)
    wins = 0
    trials = 3000
    for i in range(trials):
        try:
            alba_prove(seed_of(i, "sound"), pool, REDUCED)
            wins += 1
        except ProofSearchExhausted:
            pass
    bound = REDUCED.soundness_bound()
    assert wins / trials <= 4 * bound, (wins, bound)


def test_param_selection_meets_both_budgets():
    p = REDUCED
    assert p.soundness_bound() <= 2 ** -10
    fail = (1 - survival_probability(p.n_p, p.u)) ** p.d
    assert fail <= 2 ** -12


def test_param_selection_scales_with_lambda():
    small = select_params(21, 10, lambda_sound=8, lambda_complete=8)
    big = select_params(21, 10, lambda_sound=20, lambda_complete=8)
    assert big.u > small.u


def test_params_for_chain_length_fixes_u():
    p = params_for_chain_length(n_p=67, n_f=33, u=24, lambda_complete=10)
    assert p.u == 24
    fail = (1 - survival_probability(67, 24)) ** p.d
    assert fail <= 2 ** -12


def test_survival_probability_recurrence_against_simulation():
    """The branching-process recurrence matches a direct Monte Carlo of the
    chain-extension process."""
    import random
    rng = random.Random(99)
    n_p, depth, trials = 11, 6, 4000
    survived = 0
    for _ in range(trials):
        width = 1
        for _ in range(depth):
            width = sum(1 for _ in range(width * n_p) if rng.random() < 1 / n_p)
            if width == 0:
                break
            width = min(width, 50)     # truncation only speeds things up
        if width > 0:
            survived += 1
    sim = survived / trials
    rec = survival_probability(n_p, depth)
    assert abs(sim - rec) < 0.04, (sim, rec)


def test_invalid_params_rejected():
    with pytest.raises(ValueError):
        AlbaParams(n_p=5, n_f=5, u=3, d=2)
    with pytest.raises(ValueError):
        AlbaParams(n_p=5, n_f=2, u=0, d=2)
    with pytest.raises(ValueError):
        AlbaParams(n_p=5, n_f=2, u=3, d=2, q=0.0)


def test_proof_encoding_size():
    proof = alba_prove(seed_of(0), elements(21), REDUCED)
    assert len(proof.encode()) == proof.encoded_size()
    assert proof.encoded_size() == 4 + 2 + REDUCED.u * 32
