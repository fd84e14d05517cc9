"""Domain-separated hashing used everywhere a digest is needed.

A single 256-bit hash (blake2b truncated to 32 bytes) backs vertex ids,
Merkle nodes and the chained-sample oracles.  Every use site passes a
distinct ASCII tag so that digests from different roles can never collide,
and multi-part inputs are length-prefixed so field boundaries are
unambiguous.
"""

from __future__ import annotations

import hashlib

DIGEST_SIZE = 32


def tagged_hash(tag: str, *parts: bytes) -> bytes:
    """Hash `parts` under a role tag, each part length-prefixed."""
    h = hashlib.blake2b(digest_size=DIGEST_SIZE)
    h.update(tag.encode("ascii"))
    h.update(b"\x00")
    for part in parts:
        h.update(len(part).to_bytes(4, "big"))
        h.update(part)
    return h.digest()


def chain_hash(state: bytes, element: bytes) -> bytes:
    """One link of a hash chain: absorb `element` into a 32-byte state."""
    h = hashlib.blake2b(digest_size=DIGEST_SIZE)
    h.update(state)
    h.update(element)
    return h.digest()


def hash_to_int(digest: bytes) -> int:
    """First 8 bytes of a digest as a big-endian integer."""
    return int.from_bytes(digest[:8], "big")
