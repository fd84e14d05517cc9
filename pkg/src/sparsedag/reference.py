"""Straight-line baseline implementation used as an equivalence oracle.

This replays one validator's recorded delivery schedule through a direct
transcription of the baseline protocol loops: buffer admission, quorum and
anchor advance rules, direct/indirect anchor commitment, and deterministic
history ordering.  It shares only the Vertex value type with the
event-driven module; graph search and all state handling are written from
scratch so the two can disagree if either has a bug.
"""

from __future__ import annotations

from .dag import Vertex, genesis_vertices
from .hashing import tagged_hash


class ReferenceBaseline:
    def __init__(self, idx: int, n: int, f: int, timeout_us: int,
                 run_tag: bytes):
        self.idx = idx
        self.n = n
        self.f = f
        self.timeout_us = timeout_us
        self.run_tag = run_tag
        self.dag: dict[int, dict[int, Vertex]] = {0: {}}
        self.by_id: dict[bytes, Vertex] = {}
        for g in genesis_vertices(n):
            self.dag[0][g.source] = g
            self.by_id[g.vid] = g
        self.buffer: list[Vertex] = []
        self.current_round = 0
        self.deadline_us = 0
        self.ordered: set[bytes] = set()
        self.last_ordered_round = 0
        self.log: list[tuple[int, int, bytes]] = []
        self.created: list[Vertex] = []
        self.round_cap = 1 << 30

    # -- utilities (independent transcription) -------------------------------

    def _get_anchor(self, r: int):
        if r < 2 or r % 2 == 1:
            return None
        return self.dag.get(r, {}).get((r // 2) % self.n)

    def _path_exists(self, v: Vertex, u: Vertex) -> bool:
        stack = [v]
        seen = set()
        while stack:
            w = stack.pop()
            if w.vid == u.vid:
                return True
            if w.vid in seen or w.round <= u.round:
                continue
            seen.add(w.vid)
            for _, eid in w.edges:
                parent = self.by_id.get(eid)
                if parent is not None:
                    stack.append(parent)
        return False

    def _validate(self, v: Vertex, round: int, k: int) -> bool:
        return v.source == k and v.round == round and \
            len(v.edges) >= 2 * self.f + 1

    def _may_advance(self, now_us: int) -> bool:
        r = self.current_round
        if len(self.dag.get(r, {})) < 2 * self.f + 1:
            return False
        if r <= 1:
            return True     # bootstrap rounds: no anchor exists below round 2
        if now_us >= self.deadline_us:
            return True
        if r % 2 == 0:
            return self._get_anchor(r) is not None
        prev_anchor = self._get_anchor(r - 1)
        if prev_anchor is None:
            return False
        votes = sum(1 for v in self.dag.get(r, {}).values()
                    if prev_anchor.vid in v.edge_ids)
        non_votes = len(self.dag.get(r, {})) - votes
        return votes >= 2 * self.f + 1 or non_votes >= self.f + 1

    # -- ordering -------------------------------------------------------------

    def _try_committing(self, v: Vertex) -> None:
        anchor = self._get_anchor(v.round - 1)
        if anchor is None:
            return
        votes = sum(1 for u in self.dag.get(v.round, {}).values()
                    if anchor.vid in u.edge_ids)
        if votes >= self.f + 1:      # baseline direct-commit threshold
            self._order_anchors(anchor)

    def _order_anchors(self, v: Vertex) -> None:
        if v.round <= self.last_ordered_round:
            return
        stack = [v]
        anchor = v
        r = v.round - 2
        while r > self.last_ordered_round:
            prev_anchor = self._get_anchor(r)
            if prev_anchor is not None and self._path_exists(anchor, prev_anchor):
                stack.append(prev_anchor)
                anchor = prev_anchor
            r -= 2
        self.last_ordered_round = v.round
        self._order_history(stack)

    def _order_history(self, stack: list[Vertex]) -> None:
        while stack:
            anchor = stack.pop()
            to_order = [u for r in sorted(self.dag) if r >= 1
                        for u in self.dag[r].values()
                        if u.vid not in self.ordered
                        and self._path_exists(anchor, u)]
            to_order.sort(key=lambda u: (u.round, u.source))
            for u in to_order:
                self.log.append((u.source, u.round, u.block))
                self.ordered.add(u.vid)

    # -- construction loop ------------------------------------------------------

    def _insert_eligible(self) -> None:
        moved = True
        while moved:
            moved = False
            for v in list(self.buffer):
                if all(eid in self.by_id for _, eid in v.edges):
                    self.dag.setdefault(v.round, {})[v.source] = v
                    self.by_id[v.vid] = v
                    self.buffer.remove(v)
                    self._try_committing(v)
                    moved = True

    def _create_vertex(self, round: int) -> Vertex:
        block = tagged_hash("block", self.run_tag,
                            self.idx.to_bytes(4, "big"), round.to_bytes(8, "big"))
        edges = [(p.source, p.vid) for p in self.dag[round - 1].values()]
        return Vertex(round, self.idx, block, edges)

    def _loop(self, now_us: int) -> None:
        while True:
            self._insert_eligible()
            if self.current_round >= self.round_cap or not self._may_advance(now_us):
                return
            self.current_round += 1
            v = self._create_vertex(self.current_round)
            self.created.append(v)
            # own broadcast delivers to self immediately
            self.dag.setdefault(v.round, {})[v.source] = v
            self.by_id[v.vid] = v
            self._try_committing(v)
            self.deadline_us = now_us + self.timeout_us

    # -- driver --------------------------------------------------------------------

    def run(self, schedule: list[tuple[int, int, int, Vertex]],
            round_cap: int) -> None:
        """Replay deliveries: (t_us, origin, seq, vertex), in the exact
        order the validator under test processed them.  Timer checkpoints
        are interleaved from this implementation's own deadlines, firing
        before deliveries of equal timestamp.  `round_cap` mirrors the
        harness freeze: the validator under test stopped advancing there."""
        self.round_cap = round_cap
        last_fired = -1
        self._loop(0)
        for t_us, origin, seq, vertex in schedule:
            while last_fired < self.deadline_us <= t_us:
                checkpoint = self.deadline_us
                last_fired = checkpoint
                self._loop(checkpoint)
            if self._validate(vertex, seq, origin):
                self.buffer.append(vertex)
            self._loop(t_us)
