"""Certificate-size and egress-traffic model, plus the per-run byte ledger.

Edges on the wire are certificates: a reference to a parent vertex costs
one certificate of size C, which depends on the signature scheme.  The
constants below (bits per certificate) were calibrated once against the
target per-user per-round egress corners at n = 2000, lambda = 128 and are
frozen here; the acceptance suite checks the model reproduces those
corners within tolerance.

    threshold   C = 4*lambda                    (aggregate signature)
    multisig    C = n + 4*lambda                (bit-vector + aggregate)
    plain       C = (2f+1) * 3*lambda           (one signature per signer)

Sparse vertices additionally carry a sampling proof.  Two size regimes are
modeled: "kzg" charges a constant-size commitment/opening aggregate (the
regime the egress table assumes), while "merkle" charges the actual byte
layout of the Merkle-backed proofs this package really builds.
"""

from __future__ import annotations

from collections import defaultdict

from .vc import opening_size_bytes

SCHEMES = ("threshold", "multisig", "plain")
CATEGORIES = ("vertex_metadata", "payload", "broadcast_overhead", "pull_responses")

# calibration constants: bits of signature material per lambda
_CT = 4   # threshold aggregate
_CM = 4   # multisig aggregate (plus the n-bit signer vector)
_CP = 3   # one plain signature

VERTEX_HEADER_BYTES = 16   # round, source, counts
MSG_HEADER_BYTES = 16      # type, sender, seq


class UnknownScheme(ValueError):
    pass


def certificate_size(scheme: str, n: int, lambda_bits: int,
                     f: int | None = None) -> int:
    """Modeled size in bytes of one parent-reference certificate."""
    if n < 4 or lambda_bits < 1:
        raise ValueError("need n >= 4 and lambda >= 1")
    if f is None:
        f = (n - 1) // 3
    if scheme == "threshold":
        bits = _CT * lambda_bits
    elif scheme == "multisig":
        bits = n + _CM * lambda_bits
    elif scheme == "plain":
        bits = (2 * f + 1) * _CP * lambda_bits
    else:
        raise UnknownScheme(scheme)
    return (bits + 7) // 8


def sparse_proof_bytes(lambda_bits: int, n: int, sampled: int,
                       chain_len: int, size_model: str = "kzg") -> int:
    """Size of the sampling proof attached to a sparse vertex.

    kzg: constant-size commitment plus aggregated openings; this is the
    regime the egress estimates assume.  merkle: the actual layout built
    by this package (32-byte commitment, one logarithmic opening per
    sampled source, chain of digests).
    """
    if size_model == "kzg":
        return 48 + 4 + 2 * lambda_bits
    if size_model == "merkle":
        return (32 + 2 + sampled * opening_size_bytes(n)
                + 4 + 2 + chain_len * 32)
    raise UnknownScheme(f"size model {size_model!r}")


def vertex_wire_size(edges: int, payload_bytes: int, scheme: str, n: int,
                     lambda_bits: int, sparse: bool = False,
                     sampled: int = 0, chain_len: int = 0,
                     size_model: str = "kzg") -> tuple[int, int]:
    """(metadata_bytes, payload_bytes) for one vertex on the wire."""
    meta = VERTEX_HEADER_BYTES + edges * certificate_size(scheme, n, lambda_bits)
    if sparse:
        meta += sparse_proof_bytes(lambda_bits, n, sampled, chain_len, size_model)
    return meta, payload_bytes


def echo_message_size(lambda_bits: int) -> int:
    # digest plus one signature
    return MSG_HEADER_BYTES + 32 + (_CP * lambda_bits + 7) // 8


def cert_message_size(scheme: str, n: int, lambda_bits: int) -> int:
    return MSG_HEADER_BYTES + certificate_size(scheme, n, lambda_bits)


def pull_message_size() -> int:
    return MSG_HEADER_BYTES + 8


def table_egress_bytes(variant: str, scheme: str, n: int,
                       lambda_bits: int) -> int:
    """Modeled per-user per-round egress of vertex metadata.

    Every validator ships its vertex's metadata to all n peers.  The
    baseline vertex references a quorum of 2f+1 parents; the sparse vertex
    references a lambda-sized sample plus a constant proof overhead.
    """
    f = (n - 1) // 3
    c = certificate_size(scheme, n, lambda_bits, f)
    if variant == "baseline":
        meta = (2 * f + 1) * c
    elif variant == "sparse":
        meta = lambda_bits * c + sparse_proof_bytes(lambda_bits, n, 0, 0, "kzg")
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return n * meta


class TrafficLedger:
    """Per-validator, per-round egress counters split by category."""

    def __init__(self):
        self._counts: dict[tuple[int, int, str], int] = defaultdict(int)
        self._validator_totals: dict[int, int] = defaultdict(int)

    def record(self, validator: int, round: int, category: str, nbytes: int) -> None:
        if nbytes < 0:
            raise ValueError("negative byte count")
        if category not in CATEGORIES:
            raise ValueError(f"unknown category {category!r}")
        self._counts[(validator, round, category)] += nbytes
        self._validator_totals[validator] += nbytes

    def get(self, validator: int, round: int, category: str) -> int:
        return self._counts.get((validator, round, category), 0)

    def validator_total(self, validator: int) -> int:
        return self._validator_totals.get(validator, 0)

    def total(self, category: str | None = None) -> int:
        if category is None:
            return sum(self._validator_totals.values())
        return sum(v for (_, _, c), v in self._counts.items() if c == category)

    def per_round_totals(self, category: str | None = None) -> dict[int, int]:
        out: dict[int, int] = defaultdict(int)
        for (_, r, c), v in self._counts.items():
            if category is None or c == category:
                out[r] += v
        return dict(out)

    def rounds(self) -> list[int]:
        return sorted({r for (_, r, _) in self._counts})


def record_egress(ledger: TrafficLedger, validator: int, round: int,
                  category: str, nbytes: int) -> None:
    ledger.record(validator, round, category, nbytes)
