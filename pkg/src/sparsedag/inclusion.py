"""Standalone inclusion-latency simulator.

This is a pure graph process, no networking: every round each of n nodes
picks a uniform sample of parents from the previous round, always links
its own previous vertex, and links the previous round's designated anchor
when that anchor falls inside its visible quorum.  One vertex per round is
designated the anchor (round-robin), and a vertex's inclusion latency is
the round gap to the earliest anchor whose causal past contains it.

Parent selection models each creator seeing a fresh uniform quorum of
2f+1 previous-round vertices and sampling D of them.  Sampling D from a
uniform random quorum is distributionally identical to sampling a uniform
D-subset of all n, with the anchor additionally visible with probability
(2f+1 - D)/(n - D) when unsampled; the simulator uses that equivalent
form directly.

Latencies are computed exactly by multi-source backward search: an anchor
expands a vertex only when it strictly improves the vertex's best known
latency, so every vertex is expanded a bounded number of times and the
result equals the true minimum over all anchors.
"""

from __future__ import annotations

import numpy as np

UNREACHED = -1


def _sample_subsets(rng, n: int, k: int) -> np.ndarray:
    """n rows, each a uniform k-subset of range(n)."""
    if k >= n:
        return np.tile(np.arange(n, dtype=np.int32), (n, 1))
    if n * n <= 8_000_000:
        scores = rng.random((n, n))
        return np.argpartition(scores, k, axis=1)[:, :k].astype(np.int32)
    # large n, small k: draw with replacement and repair collisions
    draws = rng.integers(0, n, size=(n, k), dtype=np.int32)
    sorted_rows = np.sort(draws, axis=1)
    bad = np.nonzero((sorted_rows[:, 1:] == sorted_rows[:, :-1]).any(axis=1))[0]
    for row in bad:
        have = set(draws[row].tolist())
        while len(have) < k:
            have.add(int(rng.integers(0, n)))
        draws[row] = np.fromiter(sorted(have), dtype=np.int32, count=k)
    return draws


def inclusion_latency_sim(n: int, D: int, rounds: int, seed: int,
                          edge_guard: int = 10) -> dict[int, int]:
    """Latency histogram (rounds -> count) for all vertices of rounds
    1..rounds-edge_guard; vertices the horizon never covered count under
    key UNREACHED."""
    if not 1 <= D <= n:
        raise ValueError("need 1 <= D <= n")
    if rounds <= edge_guard:
        raise ValueError("too few rounds for the edge guard")
    f = (n - 1) // 3
    quorum = 2 * f + 1
    eff = min(D, quorum)
    p_link = (quorum - eff) / (n - eff) if n > eff else 0.0
    rng = np.random.Generator(np.random.PCG64(seed))

    width = eff + 2
    parents = np.full((rounds + 1, n, width), -1, dtype=np.int32)
    selves = np.arange(n, dtype=np.int32)
    for r in range(1, rounds + 1):
        sample = _sample_subsets(rng, n, eff)
        parents[r, :, :eff] = sample
        parents[r, :, eff] = selves
        if r >= 2:
            anchor_prev = (r - 1) % n
            linked = rng.random(n) < p_link
            linked &= ~(sample == anchor_prev).any(axis=1)
            parents[r, linked, eff + 1] = anchor_prev

    lat = np.full((rounds + 1, n), np.inf, dtype=np.float32)
    for t in range(1, rounds + 1):
        a = t % n
        if lat[t, a] > 0:
            lat[t, a] = 0.0
        frontier = np.array([a], dtype=np.int32)
        j = t
        k = 0
        while frontier.size and j > 1:
            k += 1
            j -= 1
            par = parents[j + 1, frontier].ravel()
            par = np.unique(par[par >= 0])
            improved = par[lat[j, par] > k]
            lat[j, improved] = k
            frontier = improved

    counted = lat[1:rounds - edge_guard + 1].ravel()
    hist: dict[int, int] = {}
    finite = counted[np.isfinite(counted)].astype(np.int64)
    values, counts = np.unique(finite, return_counts=True)
    for v, c in zip(values.tolist(), counts.tolist()):
        hist[int(v)] = int(c)
    unreached = int(counted.size - finite.size)
    if unreached:
        hist[UNREACHED] = unreached
    return hist


def fraction_within(hist: dict[int, int], bound: int) -> float:
    total = sum(hist.values())
    if total == 0:
        return 0.0
    good = sum(c for lat, c in hist.items() if 0 <= lat <= bound)
    return good / total


def merge_hists(hists) -> dict[int, int]:
    out: dict[int, int] = {}
    for h in hists:
        for k, v in h.items():
            out[k] = out.get(k, 0) + v
    return dict(sorted(out.items()))
