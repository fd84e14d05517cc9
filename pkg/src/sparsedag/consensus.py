"""The DAG-consensus state machine, parameterized by protocol variant.

Each validator builds rounds of reliably-broadcast vertices and locally
orders them by committing wave anchors.  The two variants differ only in
vertex creation, vertex validity, and the direct-commit threshold:

  baseline  edges are every known previous-round vertex (at least a
            quorum); an anchor commits directly on f+1 next-round votes.
  sparse    edges are a verifiable sample (plus the creator's own previous
            vertex and, when known, the previous anchor); validity demands
            the sampling proof check out; the direct-commit threshold
            rises to 2f+1.

Ordering, vote counting and the advance rules are shared.  A round may
advance once a quorum of its vertices arrived and (even rounds) the
round's anchor is present, (odd rounds) the previous anchor has 2f+1
votes or f+1 explicit non-votes, or either way once the round timer
expires.

Safety instrumentation runs alongside: a tracker flags any validator view
that ever contains a directly-committed anchor (2f+1 recorded votes)
unreachable from some later anchor, at the step where it first appears.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .alba import AlbaParams, ProofSearchExhausted, params_for_chain_length
from .dag import DagStore, DuplicateSlot, MissingParents, Vertex, is_anchor_vertex
from .hashing import tagged_hash
from .sampling import validate_sample
from .strategies import Honest


@dataclass
class ProtocolConfig:
    n: int
    f: int
    variant: str = "baseline"            # "baseline" | "sparse"
    D: int = 0                           # sparse sample size (chain length)
    lambda_bits: int = 128
    timeout_ms: float = 1200.0
    delta_ms: float = 600.0
    gst_ms: float = 0.0
    crypto_scheme: str = "threshold"
    payload_bytes: int = 512
    alba_lambda_complete: int = 24
    size_model: str = "kzg"

    def __post_init__(self):
        if self.n < 3 * self.f + 1:
            raise ValueError(f"n={self.n} cannot tolerate f={self.f}")
        if self.variant not in ("baseline", "sparse"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == "sparse" and self.D < 1:
            raise ValueError("sparse variant needs D >= 1")
        if self.timeout_ms < 2 * self.delta_ms:
            raise ValueError("round timeout must be at least 2*delta")
        self._alba = None

    @property
    def quorum(self) -> int:
        return 2 * self.f + 1

    @property
    def alba_params(self) -> AlbaParams:
        if self._alba is None:
            self._alba = params_for_chain_length(
                n_p=self.quorum, n_f=self.f, u=self.D,
                lambda_complete=self.alba_lambda_complete)
        return self._alba


def direct_commit_threshold(variant: str, f: int) -> int:
    """Votes required to commit an anchor directly."""
    if variant == "baseline":
        return f + 1
    if variant == "sparse":
        return 2 * f + 1
    raise ValueError(f"unknown variant {variant!r}")


def validate_vertex(v: Vertex, round: int, sender: int,
                    cfg: ProtocolConfig, cache: dict | None = None) -> bool:
    """Admission check for a delivered vertex.  Total."""
    try:
        if v.source != sender or v.round != round:
            return False
        sources = [src for src, _ in v.edges]
        if len(set(sources)) != len(sources):
            return False
        if cache is not None and v.vid in cache:
            return cache[v.vid]
        ok = _validate_structure(v, cfg)
        if cache is not None:
            cache[v.vid] = ok
        return ok
    except Exception:
        return False


def _validate_structure(v: Vertex, cfg: ProtocolConfig) -> bool:
    if cfg.variant == "baseline":
        return v.round == 0 or len(v.edges) >= cfg.quorum
    if v.round == 0:
        return True
    if len(v.edges) > cfg.D + 2 or v.proof is None:
        return False
    sampled = [(o.index, o.value) for o in v.proof.openings]
    edge_set = set(v.edges)
    if any(pair not in edge_set for pair in sampled):
        return False
    # beyond the sample only the creator's own parent and the anchor ride along
    if len(v.edges) > len(sampled) + 2:
        return False
    return validate_sample(sampled, v.proof, cfg.alba_params, cfg.n)


class MenaceTracker:
    """Flags menacing views the moment they arise.

    A view is menacing when it holds an anchor with 2f+1 recorded votes
    (the direct-commit witness) and a later-round anchor with no path back
    to it.  Reachability between anchors is a property of the (shared,
    immutable) causal past of the later anchor, so it is memoized globally;
    vote counts and anchor presence are tracked per validator.
    """

    def __init__(self, n: int, f: int):
        self.n = n
        self.f = f
        self.violations: list[str] = []
        self._ancestors: dict[bytes, frozenset] = {}
        self._present: list[dict[bytes, Vertex]] = [dict() for _ in range(n)]
        self._witness: list[set[bytes]] = [set() for _ in range(n)]
        self._votes: list[dict[bytes, int]] = [dict() for _ in range(n)]
        self._witness_round: dict[bytes, int] = {}

    def anchor_ancestors(self, store: DagStore, v: Vertex) -> frozenset:
        got = self._ancestors.get(v.vid)
        if got is None:
            got = frozenset(u.vid for u in store.causal_past(v)
                            if is_anchor_vertex(u, self.n))
            self._ancestors[v.vid] = got
        return got

    def on_insert(self, validator: int, store: DagStore, v: Vertex) -> None:
        if is_anchor_vertex(v, self.n):
            present = self._present[validator]
            present[v.vid] = v
            reach = self.anchor_ancestors(store, v)
            for wid in self._witness[validator]:
                if self._witness_round[wid] < v.round and wid not in reach:
                    self._flag(validator, wid, v)
        if v.round % 2 == 1 and v.round >= 3:
            anchor = store.get_anchor(v.round - 1)
            if anchor is not None and anchor.vid in v.edge_ids:
                votes = self._votes[validator]
                votes[anchor.vid] = votes.get(anchor.vid, 0) + 1
                if votes[anchor.vid] == 2 * self.f + 1:
                    self._witness[validator].add(anchor.vid)
                    self._witness_round[anchor.vid] = anchor.round
                    for other in self._present[validator].values():
                        if other.round > anchor.round and \
                                anchor.vid not in self.anchor_ancestors(store, other):
                            self._flag(validator, anchor.vid, other)

    def _flag(self, validator: int, low_vid: bytes, high: Vertex) -> None:
        self.violations.append(
            f"validator {validator}: committed anchor {low_vid.hex()[:8]} "
            f"unreachable from round-{high.round} anchor {high.vid.hex()[:8]}")

    def votes_for(self, validator: int, anchor_vid: bytes) -> int:
        return self._votes[validator].get(anchor_vid, 0)

    @property
    def menacing(self) -> bool:
        return bool(self.violations)


def check_menacing(store: DagStore) -> bool:
    """Whole-store menace check (the incremental tracker's oracle twin)."""
    anchors = [v for r in sorted(store.rounds) if r >= 2 and r % 2 == 0
               for v in [store.get_anchor(r)] if v is not None]
    committed = []
    for v in anchors:
        votes = sum(1 for u in store.round_map(v.round + 1).values()
                    if v.vid in u.edge_ids)
        if votes >= 2 * store.f + 1:
            committed.append(v)
    for v in committed:
        for w in anchors:
            if w.round > v.round and not store.path_exists(w, v):
                return True
    return False


class SharedOrdering:
    """Global ordering memo.

    A validator's delivered log is a pure function of its committed-anchor
    chain: anchors are ordered chain-wise, and each anchor contributes the
    not-yet-ordered slice of its causal past in (round, source) order.
    Correct validators' chains are prefixes of one another, so the slices
    ("segments") are computed once and shared; a chain that contradicts the
    shared one is recorded as a divergence and fails the run's audit.
    """

    def __init__(self):
        self.chain: list[Vertex] = []
        self.segments: list[list[Vertex]] = []
        self._segment_sets: list[set[bytes]] = []
        self._ordered: set[bytes] = set()
        self.divergences: list[str] = []
        self.inclusion_hist: dict[int, int] = {}

    def segment_at(self, store: DagStore, position: int,
                   anchor: Vertex) -> list[Vertex]:
        if position < len(self.chain):
            if self.chain[position].vid == anchor.vid:
                return self.segments[position]
            self.divergences.append(
                f"chain position {position}: {anchor.vid.hex()[:8]} vs "
                f"{self.chain[position].vid.hex()[:8]}")
            before = set().union(*self._segment_sets[:position]) \
                if position else set()
            return self._collect(store, anchor, before)
        if position > len(self.chain):
            self.divergences.append(f"chain gap at position {position}")
            return []
        segment = self._collect(store, anchor, self._ordered)
        self.chain.append(anchor)
        self.segments.append(segment)
        self._segment_sets.append({u.vid for u in segment})
        self._ordered.update(u.vid for u in segment)
        for u in segment:
            lat = anchor.round - u.round
            self.inclusion_hist[lat] = self.inclusion_hist.get(lat, 0) + 1
        return segment

    @staticmethod
    def _collect(store: DagStore, anchor: Vertex, ordered: set) -> list[Vertex]:
        # ordering is causal-past-closed, so the walk prunes at any vertex
        # that an earlier anchor already ordered
        if anchor.vid in ordered:
            return []
        out = [anchor]
        seen = {anchor.vid}
        frontier = [anchor]
        while frontier:
            nxt = []
            for w in frontier:
                for _, eid in w.edges:
                    if eid in seen or eid in ordered:
                        continue
                    seen.add(eid)
                    parent = store.by_id[eid]
                    nxt.append(parent)
                    out.append(parent)
            frontier = nxt
        out = [u for u in out if u.round >= 1]   # genesis never delivers
        out.sort(key=lambda u: (u.round, u.source))
        return out


@dataclass
class OrderingState:
    chain: list[Vertex] = field(default_factory=list)
    last_ordered_round: int = 0
    ordered_count: int = 0

    @property
    def committed_vids(self) -> set[bytes]:
        return {a.vid for a in self.chain}


class Validator:
    """One simulated validator: DAG construction plus local ordering."""

    def __init__(self, idx: int, cfg: ProtocolConfig, shared, strategy=None):
        self.idx = idx
        self.cfg = cfg
        self.shared = shared
        self.strategy = strategy or Honest()
        self.dag = DagStore(cfg.n, cfg.f)
        self.buffer: dict[bytes, Vertex] = {}
        self._missing: dict[bytes, set[bytes]] = {}
        self._waiters: dict[bytes, list[bytes]] = {}
        self.current_round = 0
        self.timer_deadline_us = 0
        self._timer_epoch = 0
        self.ordering = OrderingState()
        self.votes: dict[bytes, int] = {}
        self.crashed = False
        self.skipped_proposals = 0
        self.advance_times: dict[int, int] = {}
        self.rng = shared.rng.substream(f"val/{idx}")

    # -- wiring --------------------------------------------------------------

    @property
    def net(self):
        return self.shared.net

    @property
    def rb(self):
        return self.shared.rb

    @property
    def correct(self) -> bool:
        return not self.strategy.byzantine

    # -- vertex creation ------------------------------------------------------

    def _block(self, round: int) -> bytes:
        # payload content is a digest; its wire size is modeled separately
        return tagged_hash("block", self.shared.run_tag,
                           self.idx.to_bytes(4, "big"), round.to_bytes(8, "big"))

    def cert_array(self, round: int) -> list[bytes | None]:
        prev = self.dag.round_map(round)
        return [prev[k].vid if k in prev else None for k in range(self.cfg.n)]

    def create_new_vertex(self, round: int) -> Vertex:
        prev_map = self.dag.round_map(round - 1)
        if self.cfg.variant == "baseline":
            parents = self.strategy.choose_baseline_edges(self, prev_map)
            edges = [(p.source, p.vid) for p in parents]
            return Vertex(round, self.idx, self._block(round), edges)
        sources, proof = self.strategy.choose_sparse_sample(self, round)
        chosen = {src: prev_map[src] for src in sources}
        own = prev_map.get(self.idx)
        if own is not None:
            chosen[self.idx] = own
        if self.strategy.link_anchor():
            anchor = self.dag.get_anchor(round - 1)
            if anchor is not None:
                chosen[anchor.source] = anchor
        edges = [(p.source, p.vid) for p in chosen.values()]
        return Vertex(round, self.idx, self._block(round), edges, proof)

    # -- round advancement ----------------------------------------------------

    def may_advance_round(self) -> bool:
        r = self.current_round
        if self.dag.round_size(r) < self.cfg.quorum:
            return False
        if r <= 1:
            # bootstrap: genesis is synthetic and round 0 has no anchor, so
            # neither wave rule applies before round 2
            return True
        if self.net.now_us >= self.timer_deadline_us:
            return True
        if r % 2 == 0:
            return self.dag.get_anchor(r) is not None
        prev_anchor = self.dag.get_anchor(r - 1)
        if prev_anchor is None:
            return False         # leader slot empty: wait for the timer
        yes = self.votes.get(prev_anchor.vid, 0)
        no = self.dag.round_size(r) - yes
        return yes >= self.cfg.quorum or no >= self.cfg.f + 1

    def maybe_advance(self) -> None:
        if self.crashed or self.shared.frozen:
            return
        while self.may_advance_round():
            nxt = self.current_round + 1
            if self.strategy.crash_round is not None and \
                    nxt >= self.strategy.crash_round:
                self.crashed = True
                return
            self.current_round = nxt
            self.advance_times[nxt] = self.net.now_us
            self.shared.note_advance(self, nxt)
            if self.strategy.proposes():
                try:
                    v = self.create_new_vertex(nxt)
                except ProofSearchExhausted:
                    # no valid sample exists for any committable quorum this
                    # round (astronomically rare); skip one proposal
                    self.skipped_proposals += 1
                    v = None
                if v is not None:
                    self.shared.note_bcast(v, self.net.now_us)
                    self.rb.broadcast(self.idx, nxt, v)
            self._timer_epoch += 1
            self.timer_deadline_us = self.net.now_us \
                + int(self.cfg.timeout_ms * 1000)
            self.net.schedule_timer(self.timer_deadline_us, self.idx,
                                    ("round", self._timer_epoch))
            self.rb.expect_round(self.idx, nxt)

    def on_timer(self, token) -> None:
        if self.crashed or token[1] != self._timer_epoch:
            return
        self.maybe_advance()

    # -- delivery and DAG insertion --------------------------------------------

    def on_r_deliver(self, origin: int, seq: int, vertex: Vertex) -> None:
        if self.crashed:
            return
        if not validate_vertex(vertex, seq, origin, self.cfg,
                               self.shared.validation_cache):
            return
        if vertex.vid in self.buffer or vertex.vid in self.dag.by_id:
            return
        missing = {eid for _, eid in vertex.edges if eid not in self.dag.by_id}
        if missing:
            self.buffer[vertex.vid] = vertex
            self._missing[vertex.vid] = missing
            for eid in missing:
                self._waiters.setdefault(eid, []).append(vertex.vid)
            return
        self._insert_cascade(vertex)
        self.maybe_advance()

    def _insert_cascade(self, vertex: Vertex) -> None:
        queue = [vertex]
        while queue:
            v = queue.pop()
            self._insert(v)
            for wid in self._waiters.pop(v.vid, ()):  # buffered dependents
                pending = self._missing.get(wid)
                if pending is None:
                    continue
                pending.discard(v.vid)
                if not pending:
                    del self._missing[wid]
                    queue.append(self.buffer.pop(wid))

    def _insert(self, v: Vertex) -> None:
        try:
            self.dag.add_vertex(v)
        except DuplicateSlot:
            # reliable broadcast integrity makes this unreachable for
            # protocol-generated traffic; keep the vertex out rather than die
            return
        except MissingParents:
            # an edge names a vid that exists at a different slot: such a
            # vertex can never satisfy closure, so it is discarded
            return
        if v.round % 2 == 1:
            anchor = self.dag.get_anchor(v.round - 1)
            if anchor is not None and anchor.vid in v.edge_ids:
                self.votes[anchor.vid] = self.votes.get(anchor.vid, 0) + 1
        self.shared.menace.on_insert(self.idx, self.dag, v)
        self.try_committing(v)

    # -- ordering ---------------------------------------------------------------

    def try_committing(self, v: Vertex) -> None:
        anchor = self.dag.get_anchor(v.round - 1)
        if anchor is None:
            return
        threshold = direct_commit_threshold(self.cfg.variant, self.cfg.f)
        if self.votes.get(anchor.vid, 0) >= threshold:
            self.order_anchors(anchor)

    def order_anchors(self, v: Vertex) -> None:
        if v.round <= self.ordering.last_ordered_round:
            return
        stack = [v]
        anchor = v
        r = v.round - 2
        while r > self.ordering.last_ordered_round:
            prev_anchor = self.dag.get_anchor(r)
            if prev_anchor is not None and self.dag.path_exists(anchor, prev_anchor):
                stack.append(prev_anchor)
                anchor = prev_anchor
            r -= 2
        self.ordering.last_ordered_round = v.round
        self.order_history(stack)

    def order_history(self, stack: list[Vertex]) -> None:
        while stack:
            anchor = stack.pop()
            position = len(self.ordering.chain)
            segment = self.shared.ordering.segment_at(self.dag, position, anchor)
            self.ordering.chain.append(anchor)
            self.ordering.ordered_count += len(segment)
            self.shared.note_ordered(self, anchor, segment)

    # -- audit access -------------------------------------------------------------

    def delivered_log(self) -> list[tuple[int, int, bytes]]:
        """(source, round, block) per delivered vertex, in delivery order."""
        out = []
        for position, anchor in enumerate(self.ordering.chain):
            segment = self.shared.ordering.segment_at(self.dag, position, anchor)
            out.extend((u.source, u.round, u.block) for u in segment)
        return out
