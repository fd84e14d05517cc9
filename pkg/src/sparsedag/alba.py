"""Approximate lower-bound arguments: succinct proofs of sampling.

`alba_prove(seed, elements, params)` produces a short certificate that its
chain of `u` elements was drawn from a set of at least `n_p` elements, in a
way that is seed-determined and unforgeable (except with probability
`d * (n_f/n_p)**u * q`) by anyone holding only `n_f < n_p` elements.

Construction: every element is pre-assigned a bin in [0, n_p) by a seeded
hash.  A candidate chain starts from one of `d` seeded start states; a
chain state demands the next element come from one specific bin, and
absorbing that element yields the next state.  Honest provers hold about
one element per bin, so extending a chain is a critical branching process:
depth-first search over the `d` starts finds a depth-u chain with
tunable-high probability, while an adversary short of elements faces a
subcritical process and almost surely cannot reach depth u.  An optional
final test keeps only a `q`-fraction of completed chains.

All hash values are salted with the caller's seed, so proofs are bound to
it and sampling outcomes cannot be predicted before the seed is fixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .hashing import DIGEST_SIZE, chain_hash, hash_to_int, tagged_hash

_U64 = 1 << 64


class ProofSearchExhausted(Exception):
    """All start states explored without completing a chain."""


@dataclass(frozen=True)
class AlbaParams:
    """Tuning knobs: set lower bound n_p, forgery bound n_f, chain length u,
    start-state count d, final-test pass rate q."""

    n_p: int
    n_f: int
    u: int
    d: int
    q: float = 1.0

    def __post_init__(self):
        if not self.n_p > self.n_f >= 1:
            raise ValueError("need n_p > n_f >= 1")
        if self.u < 1 or self.d < 1:
            raise ValueError("need u >= 1 and d >= 1")
        if not 0.0 < self.q <= 1.0:
            raise ValueError("need 0 < q <= 1")

    def soundness_bound(self) -> float:
        """Upper bound on an n_f-holder's per-attempt forgery probability."""
        return self.d * (self.n_f / self.n_p) ** self.u * self.q

    def soundness_bits(self) -> float:
        return -math.log2(self.soundness_bound())


@dataclass(frozen=True)
class AlbaProof:
    start: int
    chain: tuple[bytes, ...]

    def encoded_size(self) -> int:
        return 4 + 2 + len(self.chain) * DIGEST_SIZE

    def encode(self) -> bytes:
        parts = [self.start.to_bytes(4, "big"), len(self.chain).to_bytes(2, "big")]
        parts.extend(self.chain)
        return b"".join(parts)


def _bin_of(seed: bytes, element: bytes, n_p: int) -> int:
    return hash_to_int(tagged_hash("alba.bin", seed, element)) % n_p


def _start_state(seed: bytes, start: int) -> bytes:
    return tagged_hash("alba.root", seed, start.to_bytes(4, "big"))


def _final_ok(state: bytes, q: float) -> bool:
    if q >= 1.0:
        return True
    return hash_to_int(tagged_hash("alba.fin", state)) < int(q * _U64)


def alba_prove(seed: bytes, elements, params: AlbaParams) -> AlbaProof:
    """Deterministic search for a valid chain over `elements`.

    Raises ProofSearchExhausted when no start state yields a depth-u chain;
    with |elements| >= n_p and well-chosen (u, d, q) this happens with
    probability below the configured completeness level.
    """
    pool = sorted(set(elements))
    buckets: list[list[bytes]] = [[] for _ in range(params.n_p)]
    for e in pool:
        buckets[_bin_of(seed, e, params.n_p)].append(e)

    u, n_p, q = params.u, params.n_p, params.q
    for start in range(params.d):
        # iterative DFS; each frame is (state, chain-so-far, next-child-index)
        root = _start_state(seed, start)
        stack: list[tuple[bytes, int]] = [(root, 0)]
        chain: list[bytes] = []
        while stack:
            state, child = stack[-1]
            if len(chain) == u:
                if _final_ok(state, q):
                    return AlbaProof(start=start, chain=tuple(chain))
                # failed final test: backtrack
                stack.pop()
                if chain:
                    chain.pop()
                continue
            bucket = buckets[hash_to_int(state) % n_p]
            if child >= len(bucket):
                stack.pop()
                if chain:
                    chain.pop()
                continue
            stack[-1] = (state, child + 1)
            e = bucket[child]
            chain.append(e)
            stack.append((chain_hash(state, e), 0))
    raise ProofSearchExhausted(
        f"no chain of length {params.u} found from {params.d} starts "
        f"over {len(pool)} elements")


def alba_verify(seed: bytes, proof: AlbaProof, params: AlbaParams) -> bool:
    """Total: malformed proofs return False rather than raising."""
    try:
        if not isinstance(proof, AlbaProof):
            return False
        if not 0 <= proof.start < params.d:
            return False
        if len(proof.chain) != params.u:
            return False
        state = _start_state(seed, proof.start)
        for e in proof.chain:
            if not isinstance(e, bytes) or len(e) != DIGEST_SIZE:
                return False
            if _bin_of(seed, e, params.n_p) != hash_to_int(state) % params.n_p:
                return False
            state = chain_hash(state, e)
        return _final_ok(state, params.q)
    except Exception:
        return False


def survival_probability(n_p: int, depth: int) -> float:
    """P(a chain-extension branching process survives to `depth`).

    Offspring per node is Binomial(n_p, 1/n_p): the count of elements whose
    bin matches the state's demand.  The recurrence runs on the extinction
    complement, starting from s_0 = 1.
    """
    s = 1.0
    for _ in range(depth):
        s = 1.0 - (1.0 - s / n_p) ** n_p
    return s


def _starts_for_completeness(n_p: int, u: int, lambda_complete: int) -> int:
    # Three extra bits of margin keep empirical completeness comfortably
    # above the 1 - 2^-lambda_complete requirement (the bin assignment is
    # fixed per seed, which correlates failures slightly beyond the
    # independent-offspring recurrence).
    s = survival_probability(n_p, u)
    if s <= 0.0:
        raise ValueError("chain survival underflow; u too large for n_p")
    return max(1, math.ceil((lambda_complete + 3) * math.log(2) / -math.log1p(-s)))


def select_params(n_p: int, n_f: int, lambda_sound: int = 128,
                  lambda_complete: int = 128, q: float = 1.0) -> AlbaParams:
    """Smallest (u, d) meeting both the soundness budget
    d*(n_f/n_p)**u*q <= 2^-lambda_sound and the completeness target
    (1 - survival)**d <= 2^-(lambda_complete+2)."""
    ratio = n_f / n_p
    for u in range(1, 100_000):
        d_sound_max = (2.0 ** -lambda_sound) / (ratio ** u * q)
        if d_sound_max < 1.0:
            continue
        d = _starts_for_completeness(n_p, u, lambda_complete)
        if d <= d_sound_max:
            return AlbaParams(n_p=n_p, n_f=n_f, u=u, d=d, q=q)
    raise ValueError("no feasible parameters")


def params_for_chain_length(n_p: int, n_f: int, u: int,
                            lambda_complete: int = 32, q: float = 1.0) -> AlbaParams:
    """Fix the chain length (= sample size) and derive the start count from
    the completeness target; soundness is then whatever u buys.

    Very small pools see strongly correlated bucket occupancy (a single
    empty bin persists for the whole search), so the start count is padded
    there; with n_p this small a forger holds a constant fraction of the
    pool anyway, and security comes from the chain length alone.
    """
    d = _starts_for_completeness(n_p, u, lambda_complete)
    if n_p < 8:
        d *= 8
    return AlbaParams(n_p=n_p, n_f=n_f, u=u, d=d, q=q)
