"""Round-structured DAG: vertices, per-validator store, and graph queries.

A vertex occupies one (round, source) slot; its edges refer to vertices of
the previous round by (source, id).  The store enforces the two structural
invariants everything else leans on: at most one vertex per slot, and no
vertex is inserted before all of its parents (so every stored vertex's
causal past is fully present and immutable).

Round 0 holds synthetic genesis vertices, one per validator with an empty
payload and no edges, giving round-1 vertices well-defined parents.
Genesis vertices are never anchors and are excluded from ordering.
"""

from __future__ import annotations

from .hashing import tagged_hash

VertexId = bytes


class MissingParents(Exception):
    """Insertion attempted before all edge targets are present."""

    def __init__(self, vertex, missing):
        super().__init__(f"vertex r{vertex.round}/s{vertex.source} missing "
                         f"{len(missing)} parent(s)")
        self.vertex = vertex
        self.missing = missing


class DuplicateSlot(Exception):
    """A second vertex arrived for an occupied (round, source) slot."""


class Vertex:
    """Immutable DAG node; identity is the hash of its canonical encoding."""

    __slots__ = ("round", "source", "block", "edges", "proof", "vid", "edge_ids")

    def __init__(self, round: int, source: int, block: bytes,
                 edges, proof=None):
        if round < 0 or source < 0:
            raise ValueError("round and source must be non-negative")
        self.round = round
        self.source = source
        self.block = block
        # canonical edge order: ascending parent source
        self.edges = tuple(sorted(edges, key=lambda e: e[0]))
        self.proof = proof
        edge_blob = b"".join(src.to_bytes(4, "big") + vid
                             for src, vid in self.edges)
        proof_blob = proof.encode() if proof is not None else b""
        self.vid = tagged_hash("vertex", round.to_bytes(8, "big"),
                               source.to_bytes(4, "big"), block, edge_blob,
                               proof_blob)
        self.edge_ids = frozenset(vid for _, vid in self.edges)

    def __eq__(self, other):
        return isinstance(other, Vertex) and self.vid == other.vid

    def __hash__(self):
        return hash(self.vid)

    def __repr__(self):
        return f"Vertex(r={self.round}, s={self.source}, id={self.vid.hex()[:8]})"


def genesis_vertices(n: int) -> list[Vertex]:
    return [Vertex(round=0, source=k, block=b"", edges=()) for k in range(n)]


def anchor_source(r: int, n: int) -> int:
    """Round-robin leader slot for an even round."""
    return (r // 2) % n


def is_anchor_vertex(v: Vertex, n: int) -> bool:
    return v.round >= 2 and v.round % 2 == 0 and v.source == anchor_source(v.round, n)


class DagStore:
    """One validator's DAG view, indexed by (round, source) and by id."""

    def __init__(self, n: int, f: int | None = None):
        if f is None:
            f = (n - 1) // 3
        if n < 3 * f + 1:
            raise ValueError(f"n={n} cannot tolerate f={f}")
        self.n = n
        self.f = f
        self.rounds: dict[int, dict[int, Vertex]] = {0: {}}
        self.by_id: dict[VertexId, Vertex] = {}
        self._path_memo: dict[tuple[VertexId, VertexId], bool] = {}
        for g in genesis_vertices(n):
            self.rounds[0][g.source] = g
            self.by_id[g.vid] = g

    # -- insertion ---------------------------------------------------------

    def add_vertex(self, v: Vertex) -> None:
        if v.round < 1:
            raise ValueError("only genesis occupies round 0")
        if not 0 <= v.source < self.n:
            raise ValueError(f"source {v.source} out of range")
        slot = self.rounds.get(v.round)
        if slot is not None and v.source in slot:
            raise DuplicateSlot(f"slot (r{v.round}, s{v.source}) occupied")
        prev = self.rounds.get(v.round - 1)
        missing = [(src, vid) for src, vid in v.edges
                   if prev is None or src not in prev or prev[src].vid != vid]
        if missing:
            raise MissingParents(v, missing)
        if slot is None:
            slot = self.rounds.setdefault(v.round, {})
        slot[v.source] = v
        self.by_id[v.vid] = v

    # -- lookups -----------------------------------------------------------

    def get(self, r: int, source: int) -> Vertex | None:
        return self.rounds.get(r, {}).get(source)

    def get_by_id(self, vid: VertexId) -> Vertex | None:
        return self.by_id.get(vid)

    def __contains__(self, vid: VertexId) -> bool:
        return vid in self.by_id

    def round_map(self, r: int) -> dict[int, Vertex]:
        return self.rounds.get(r, {})

    def round_size(self, r: int) -> int:
        return len(self.rounds.get(r, ()))

    def max_round(self) -> int:
        return max(self.rounds)

    def get_anchor(self, r: int) -> Vertex | None:
        """Leader vertex of an even round r >= 2, or None (odd round, round
        below 2, or leader slot empty)."""
        if r < 2 or r % 2 == 1:
            return None
        return self.rounds.get(r, {}).get(anchor_source(r, self.n))

    # -- graph queries -----------------------------------------------------

    def path_exists(self, v: Vertex, u: Vertex) -> bool:
        """True iff u is reachable from v along edges (reflexively)."""
        if v.vid == u.vid:
            return True
        if u.round >= v.round:
            return False
        key = (v.vid, u.vid)
        memo = self._path_memo
        cached = memo.get(key)
        if cached is not None:
            return cached
        target = u.vid
        floor = u.round
        seen = {v.vid}
        frontier = [v]
        found = False
        while frontier and not found:
            nxt = []
            for w in frontier:
                if w.round <= floor:
                    continue
                for _, eid in w.edges:
                    if eid == target:
                        found = True
                        break
                    if eid not in seen:
                        seen.add(eid)
                        parent = self.by_id.get(eid)
                        if parent is not None and parent.round >= floor:
                            nxt.append(parent)
                if found:
                    break
            frontier = nxt
        memo[key] = found
        return found

    def causal_past(self, v: Vertex) -> list[Vertex]:
        """All vertices reachable from v, including v itself."""
        seen = {v.vid}
        out = [v]
        frontier = [v]
        while frontier:
            nxt = []
            for w in frontier:
                for _, eid in w.edges:
                    if eid not in seen:
                        seen.add(eid)
                        parent = self.by_id[eid]
                        out.append(parent)
                        nxt.append(parent)
            frontier = nxt
        return out
