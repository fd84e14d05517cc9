"""Verifiable parent sampling for sparse vertices.

A creator commits to the per-source certificate array for the previous
round, derives the sampling seed from that commitment, and runs the
chained-sample prover over the committed digests.  Binding the seed to the
commitment means the sample is fixed the moment the array is chosen: a
malicious creator cannot look at the sample and then rewrite which
certificates it claims to have held.

The resulting proof carries the commitment, one opening per sampled
source, and the chain itself.  Verification is total and checks that the
claimed sample is exactly the distinct chain elements, that every sampled
digest opens at its source slot, and that the chain verifies under the
commitment-derived seed.
"""

from __future__ import annotations

from dataclasses import dataclass

from .alba import AlbaParams, AlbaProof, alba_prove, alba_verify
from .hashing import tagged_hash
from .vc import MerkleTree, Opening, vc_verify


class InsufficientQuorum(ValueError):
    """Fewer committed certificates than the required set lower bound."""


@dataclass(frozen=True)
class SamplingProof:
    commitment: bytes
    openings: tuple[Opening, ...]   # ascending source index
    alba: AlbaProof

    def encoded_size(self) -> int:
        return (len(self.commitment) + 2
                + sum(o.encoded_size() for o in self.openings)
                + self.alba.encoded_size())

    def encode(self) -> bytes:
        parts = [self.commitment, len(self.openings).to_bytes(2, "big")]
        parts.extend(o.encode() for o in self.openings)
        parts.append(self.alba.encode())
        return b"".join(parts)


def sampling_seed(commitment: bytes) -> bytes:
    return tagged_hash("sample.seed", commitment)


def verifiably_sample(prev_round: list[bytes | None],
                      params: AlbaParams) -> tuple[list[int], SamplingProof]:
    """Sample parent sources from the non-empty slots of `prev_round`.

    Returns the distinct sampled sources (ascending) plus the proof.  The
    whole procedure is a pure function of (prev_round, params).
    """
    present: dict[bytes, int] = {}
    for i in range(len(prev_round) - 1, -1, -1):
        if prev_round[i] is not None:
            present[prev_round[i]] = i   # lowest source wins a digest collision
    if sum(d is not None for d in prev_round) < params.n_p:
        raise InsufficientQuorum(
            f"need {params.n_p} certificates, have "
            f"{sum(d is not None for d in prev_round)}")

    tree = MerkleTree(prev_round)
    commitment = tree.commitment
    proof = alba_prove(sampling_seed(commitment), present.keys(), params)
    sources = sorted({present[e] for e in proof.chain})
    openings = tuple(tree.open(i) for i in sources)
    return sources, SamplingProof(commitment=commitment, openings=openings,
                                  alba=proof)


def validate_sample(sample, proof: SamplingProof, params: AlbaParams,
                    n: int) -> bool:
    """Check (source, digest) pairs against a sampling proof.  Total."""
    try:
        if not isinstance(proof, SamplingProof):
            return False
        claimed: dict[int, bytes] = {}
        for source, digest in sample:
            if source in claimed and claimed[source] != digest:
                return False
            claimed[source] = digest
        if {o.index for o in proof.openings} != set(claimed):
            return False
        for opening in proof.openings:
            if opening.value != claimed[opening.index]:
                return False
            if not vc_verify(proof.commitment, opening.index, opening.value,
                             opening, n):
                return False
        if set(proof.alba.chain) != set(claimed.values()):
            return False
        return alba_verify(sampling_seed(proof.commitment), proof.alba, params)
    except Exception:
        return False
