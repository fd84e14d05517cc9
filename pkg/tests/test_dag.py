"""DAG store: structural invariants and graph queries vs brute-force oracles."""

import pytest

from sparsedag.dag import (DagStore, DuplicateSlot, MissingParents, Vertex,
                           anchor_source, genesis_vertices, is_anchor_vertex)
from sparsedag.rng import Stream


def make_vertex(store, round, source, parents, block=b"x"):
    return Vertex(round, source, block, [(p.source, p.vid) for p in parents])


def build_full_run(n=4, rounds=5):
    """Honest full-quorum run: every vertex references all of the previous
    round."""
    store = DagStore(n)
    for r in range(1, rounds + 1):
        prev = list(store.round_map(r - 1).values())
        for k in range(n):
            store.add_vertex(make_vertex(store, r, k, prev))
    return store


# -- insertion ------------------------------------------------------------


def test_add_round1_vertex_on_genesis():
    store = DagStore(4)
    v = make_vertex(store, 1, 0, list(store.round_map(0).values()))
    store.add_vertex(v)
    assert store.get(1, 0) is v
    assert store.get_by_id(v.vid) is v


def test_add_vertex_missing_parent_rejected():
    store = DagStore(4)
    phantom = Vertex(1, 1, b"p", [(0, genesis_vertices(4)[0].vid)])
    orphan = Vertex(2, 0, b"x", [(1, phantom.vid)])
    with pytest.raises(MissingParents):
        store.add_vertex(orphan)


def test_duplicate_slot_rejected():
    store = DagStore(4)
    genesis = list(store.round_map(0).values())
    store.add_vertex(make_vertex(store, 1, 2, genesis, block=b"a"))
    with pytest.raises(DuplicateSlot):
        store.add_vertex(make_vertex(store, 1, 2, genesis, block=b"b"))


def test_edge_must_point_to_previous_round():
    store = build_full_run(4, 2)
    stale = store.get(1, 0)
    v = Vertex(3, 0, b"x", [(0, stale.vid)])   # round-1 parent for a round-3 vertex
    with pytest.raises(MissingParents):
        store.add_vertex(v)


def test_replay_matches_adjacency_oracle():
    """Store contents equal an independent adjacency-map replay of the same
    delivery log."""
    n, rounds = 4, 5
    store = DagStore(n)
    log = []
    for r in range(1, rounds + 1):
        prev = list(store.round_map(r - 1).values())
        for k in range(n):
            v = make_vertex(store, r, k, prev)
            store.add_vertex(v)
            log.append(v)

    # oracle: plain dict of (round, source) -> set of parent ids
    oracle: dict[tuple[int, int], frozenset] = {
        (0, k): frozenset() for k in range(n)}
    for v in log:
        assert (v.round, v.source) not in oracle
        oracle[(v.round, v.source)] = frozenset(eid for _, eid in v.edges)

    stored = {(v.round, v.source): frozenset(eid for _, eid in v.edges)
              for r in store.rounds for v in store.round_map(r).values()}
    assert stored == oracle


# -- path queries -----------------------------------------------------------


def bfs_oracle(store, v, u):
    """Reachability by breadth-first search over explicit adjacency."""
    frontier, seen = [v.vid], set()
    while frontier:
        nxt = []
        for vid in frontier:
            if vid == u.vid:
                return True
            if vid in seen:
                continue
            seen.add(vid)
            w = store.get_by_id(vid)
            nxt.extend(eid for _, eid in w.edges)
        frontier = nxt
    return False


def test_path_exists_reflexive_and_direct():
    store = build_full_run(4, 2)
    v = store.get(2, 1)
    u = store.get(1, 0)
    assert store.path_exists(v, v)
    assert store.path_exists(v, u)          # direct edge
    assert not store.path_exists(u, v)      # edges only point backwards


def test_path_exists_matches_bfs_oracle_on_random_dag():
    """Random sparse 6-round DAG, all vertex pairs."""
    n, rounds = 4, 6
    rng = Stream(42, "dagtest")
    store = DagStore(n)
    for r in range(1, rounds + 1):
        prev = list(store.round_map(r - 1).values())
        for k in range(n):
            picks = rng.sample_indices(len(prev), 3)
            parents = [prev[i] for i in picks]
            store.add_vertex(make_vertex(store, r, k, parents))
    everything = list(store.by_id.values())
    for v in everything:
        for u in everything:
            assert store.path_exists(v, u) == bfs_oracle(store, v, u), (v, u)


def test_causal_past_equals_pairwise_path_closure():
    n, rounds = 4, 4
    rng = Stream(7, "past")
    store = DagStore(n)
    for r in range(1, rounds + 1):
        prev = list(store.round_map(r - 1).values())
        for k in range(n):
            picks = rng.sample_indices(len(prev), 3)
            store.add_vertex(make_vertex(store, r, k, [prev[i] for i in picks]))
    v = store.get(rounds, 2)
    past = {u.vid for u in store.causal_past(v)}
    expected = {u.vid for u in store.by_id.values() if store.path_exists(v, u)}
    assert past == expected
    assert v.vid in past


def test_causal_past_size_lower_bound_in_full_runs():
    """An anchor of round r in a full-quorum honest run reaches at least
    (2f+1)(r-1)+1 non-genesis vertices."""
    n = 4
    f = (n - 1) // 3
    store = build_full_run(n, 6)
    for r in (2, 4, 6):
        anchor = store.get_anchor(r)
        past = [u for u in store.causal_past(anchor) if u.round >= 1]
        assert len(past) >= (2 * f + 1) * (r - 1) + 1


# -- anchors ------------------------------------------------------------------


def test_get_anchor_odd_round_is_none():
    store = build_full_run(4, 4)
    assert store.get_anchor(3) is None


def test_get_anchor_round_robin_slot():
    store = build_full_run(4, 8)
    assert store.get_anchor(4).source == (4 // 2) % 4
    assert store.get_anchor(8).source == (8 // 2) % 4
    assert anchor_source(4, 4) == 2


def test_get_anchor_absent_leader_slot():
    n = 4
    store = DagStore(n)
    genesis = list(store.round_map(0).values())
    r1 = [make_vertex(store, 1, k, genesis) for k in range(n)]
    for v in r1:
        store.add_vertex(v)
    leader = anchor_source(2, n)
    for k in range(n):
        if k != leader:
            store.add_vertex(make_vertex(store, 2, k, r1))
    assert store.get_anchor(2) is None


def test_genesis_rounds_are_not_anchors():
    store = build_full_run(4, 2)
    assert store.get_anchor(0) is None
    assert not is_anchor_vertex(store.get(0, 0), 4)
    assert is_anchor_vertex(store.get_anchor(2), 4)


# -- invariants -----------------------------------------------------------------


def test_closure_invariant_holds_after_random_insertion_order():
    """Buffered-out-of-order insertion must never break closure; here we
    verify the store refuses any insertion that would."""
    n = 4
    store = DagStore(n)
    genesis = list(store.round_map(0).values())
    r1 = [make_vertex(store, 1, k, genesis) for k in range(n)]
    r2_parents = r1
    v2 = Vertex(2, 0, b"x", [(p.source, p.vid) for p in r2_parents])
    with pytest.raises(MissingParents):
        store.add_vertex(v2)       # round-1 parents not yet inserted
    for v in r1:
        store.add_vertex(v)
    store.add_vertex(v2)
    for v in store.by_id.values():
        for _, eid in v.edges:
            assert eid in store.by_id


def test_vertex_id_is_canonical_under_edge_order():
    store = DagStore(4)
    genesis = list(store.round_map(0).values())
    a = Vertex(1, 0, b"x", [(p.source, p.vid) for p in genesis])
    b = Vertex(1, 0, b"x", [(p.source, p.vid) for p in reversed(genesis)])
    assert a.vid == b.vid


def test_vertex_ids_differ_on_any_field():
    store = DagStore(4)
    genesis = list(store.round_map(0).values())
    edges = [(p.source, p.vid) for p in genesis]
    base = Vertex(1, 0, b"x", edges)
    assert Vertex(1, 0, b"y", edges).vid != base.vid
    assert Vertex(1, 1, b"x", edges).vid != base.vid
    assert Vertex(3, 0, b"x", edges).vid != base.vid
    assert Vertex(1, 0, b"x", edges[:3]).vid != base.vid
