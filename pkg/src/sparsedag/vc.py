"""Vector commitment over an n-slot array, Merkle-tree backed.

The committed array is the per-source certificate-digest array for one
round: slot j holds the digest certified for source j, or the reserved
empty marker when no certificate is known.  The tree pads to the next
power of two; leaves and interior nodes are domain-separated so a leaf
can never be reinterpreted as a node.

A KZG-style scheme could replace this behind the same three functions;
the traffic model carries proof size as a parameter for exactly that
reason, so only the byte layout here is Merkle-specific.
"""

from __future__ import annotations

from dataclasses import dataclass

from .hashing import DIGEST_SIZE, tagged_hash

# Leaf payloads are marker-prefixed so the empty slot can never equal a
# committed digest.
_PRESENT = b"\x01"
_EMPTY_LEAF = b"\x00" + bytes(DIGEST_SIZE)
_PAD_LEAF = b"\x02"


class WrongLength(ValueError):
    """Array length does not match the declared slot count."""


class IndexOutOfRange(IndexError):
    """Slot index outside [0, n)."""


@dataclass(frozen=True)
class Opening:
    """Proof that one slot of a committed array holds a given value."""

    index: int
    value: bytes | None          # committed digest, or None for an empty slot
    path: tuple[bytes, ...]      # sibling hashes, leaf level first

    def encoded_size(self) -> int:
        return 4 + 1 + DIGEST_SIZE + 1 + len(self.path) * DIGEST_SIZE

    def encode(self) -> bytes:
        parts = [self.index.to_bytes(4, "big"), _leaf_payload(self.value),
                 len(self.path).to_bytes(1, "big")]
        parts.extend(self.path)
        return b"".join(parts)


def _leaf_payload(value: bytes | None) -> bytes:
    if value is None:
        return _EMPTY_LEAF
    if len(value) != DIGEST_SIZE:
        raise WrongLength(f"leaf value must be {DIGEST_SIZE} bytes")
    return _PRESENT + value


def _leaf_hash(value: bytes | None) -> bytes:
    return tagged_hash("vc.leaf", _leaf_payload(value))


def _node_hash(left: bytes, right: bytes) -> bytes:
    return tagged_hash("vc.node", left, right)


def _tree_width(n: int) -> int:
    width = 1
    while width < n:
        width *= 2
    return width


def _build_levels(array: list[bytes | None]) -> list[list[bytes]]:
    width = _tree_width(len(array))
    level = [_leaf_hash(v) for v in array]
    pad = tagged_hash("vc.leaf", _PAD_LEAF)
    level.extend([pad] * (width - len(array)))
    levels = [level]
    while len(level) > 1:
        level = [_node_hash(level[i], level[i + 1]) for i in range(0, len(level), 2)]
        levels.append(level)
    return levels


def vc_commit(array: list[bytes | None], n: int | None = None) -> bytes:
    """Commit to an n-slot array; absent slots are None."""
    if n is not None and len(array) != n:
        raise WrongLength(f"expected {n} slots, got {len(array)}")
    return _build_levels(array)[-1][0]


def _open_from_levels(levels: list[list[bytes]], array: list[bytes | None],
                      index: int) -> Opening:
    path = []
    i = index
    for level in levels[:-1]:
        path.append(level[i ^ 1])
        i //= 2
    return Opening(index=index, value=array[index], path=tuple(path))


def vc_prove(array: list[bytes | None], index: int) -> Opening:
    if not 0 <= index < len(array):
        raise IndexOutOfRange(index)
    return _open_from_levels(_build_levels(array), array, index)


def vc_prove_many(array: list[bytes | None], indices) -> list[Opening]:
    """Openings for several slots from one tree build."""
    levels = _build_levels(array)
    out = []
    for index in indices:
        if not 0 <= index < len(array):
            raise IndexOutOfRange(index)
        out.append(_open_from_levels(levels, array, index))
    return out


class MerkleTree:
    """Built-once tree over one array: commitment plus any openings."""

    def __init__(self, array: list[bytes | None], n: int | None = None):
        if n is not None and len(array) != n:
            raise WrongLength(f"expected {n} slots, got {len(array)}")
        self._array = list(array)
        self._levels = _build_levels(self._array)

    @property
    def commitment(self) -> bytes:
        return self._levels[-1][0]

    def open(self, index: int) -> Opening:
        if not 0 <= index < len(self._array):
            raise IndexOutOfRange(index)
        return _open_from_levels(self._levels, self._array, index)


def vc_verify(commitment: bytes, index: int, value: bytes | None,
              opening: Opening, n: int) -> bool:
    """Total: any malformed input yields False, never an exception."""
    try:
        if not isinstance(opening, Opening) or opening.index != index:
            return False
        if not 0 <= index < n:
            return False
        if len(opening.path) != _tree_width(n).bit_length() - 1:
            return False
        node = _leaf_hash(value)
        i = index
        for sibling in opening.path:
            if not isinstance(sibling, bytes) or len(sibling) != DIGEST_SIZE:
                return False
            if i & 1:
                node = _node_hash(sibling, node)
            else:
                node = _node_hash(node, sibling)
            i //= 2
        return node == commitment
    except Exception:
        return False


def opening_size_bytes(n: int) -> int:
    """Wire size of one Merkle opening for an n-slot array."""
    depth = _tree_width(n).bit_length() - 1
    return 4 + 1 + DIGEST_SIZE + 1 + depth * DIGEST_SIZE
