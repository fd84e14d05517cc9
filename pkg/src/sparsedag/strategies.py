"""Byzantine behavior hooks.

Every validator, honest or not, runs the same state machine; a strategy
only customizes what (if anything) gets created and broadcast when a round
advances.  Faulty behaviors stay inside what the validity rules admit,
since anything else is simply discarded by correct receivers.

crash(r)        goes dark when about to enter round r (step-atomic).
silent          participates in broadcast echoes but never proposes.
anchor-avoider  never volunteers the previous anchor as an edge.
grinder(k)      retries up to k certificate subsets, keeping the sample
                that references the current anchors least.
"""

from __future__ import annotations

from .alba import ProofSearchExhausted
from .sampling import verifiably_sample


class Honest:
    name = "honest"
    crash_round = None
    byzantine = False

    def proposes(self) -> bool:
        return True

    def link_anchor(self) -> bool:
        return True

    def choose_baseline_edges(self, validator, prev_map):
        return list(prev_map.values())

    def choose_sparse_sample(self, validator, round):
        array = validator.cert_array(round - 1)
        quorum = 2 * validator.cfg.f + 1
        while True:
            try:
                return verifiably_sample(array, validator.cfg.alba_params)
            except ProofSearchExhausted:
                # committing to one certificate fewer reseeds the search;
                # legal as long as a quorum stays committed
                held = [i for i, d in enumerate(array) if d is not None]
                if len(held) <= quorum:
                    raise
                drop = max(held, key=lambda i: array[i])
                array = list(array)
                array[drop] = None


class Silent(Honest):
    name = "silent"
    byzantine = True

    def proposes(self) -> bool:
        return False


class Crash(Honest):
    name = "crash"
    byzantine = True

    def __init__(self, crash_round: int):
        self.crash_round = crash_round


class AnchorAvoider(Honest):
    name = "anchor-avoider"
    byzantine = True

    def link_anchor(self) -> bool:
        return False

    def choose_baseline_edges(self, validator, prev_map):
        edges = list(prev_map.values())
        anchor = validator.dag.get_anchor(validator.current_round - 1)
        quorum = 2 * validator.cfg.f + 1
        if anchor is not None and len(edges) - 1 >= quorum:
            edges = [p for p in edges if p.vid != anchor.vid]
        return edges


class Grinder(Honest):
    """Tries many certificate subsets to bias its verifiable sample."""

    name = "grinder"
    byzantine = True

    def __init__(self, retries: int):
        self.retries = retries

    def link_anchor(self) -> bool:
        return False

    def _malice(self, validator, round, sources):
        """Count sampled parents that are, or vote for, a current anchor."""
        dag = validator.dag
        parent_anchor = dag.get_anchor(round - 1)
        wave_anchor = dag.get_anchor(round - 2)
        score = 0
        for src in sources:
            p = dag.get(round - 1, src)
            if parent_anchor is not None and p.vid == parent_anchor.vid:
                score += 1
            if wave_anchor is not None and wave_anchor.vid in p.edge_ids:
                score += 1
        return score

    def choose_sparse_sample(self, validator, round):
        cfg = validator.cfg
        prev_map = validator.dag.round_map(round - 1)
        holders = sorted(prev_map)
        quorum = 2 * cfg.f + 1
        full = validator.cert_array(round - 1)
        try:
            best = verifiably_sample(full, cfg.alba_params)
        except ProofSearchExhausted:
            return super().choose_sparse_sample(validator, round)
        if len(holders) <= quorum:
            return best
        best_score = self._malice(validator, round, best[0])
        rng = validator.rng.substream(f"grind/{round}")
        seen: set[frozenset] = set()
        for _ in range(self.retries):
            subset = frozenset(holders[i] for i in
                               rng.sample_indices(len(holders), quorum))
            if subset in seen:
                continue
            seen.add(subset)
            array = [full[i] if i in subset else None for i in range(cfg.n)]
            try:
                candidate = verifiably_sample(array, cfg.alba_params)
            except Exception:
                continue
            score = self._malice(validator, round, candidate[0])
            if score < best_score:
                best, best_score = candidate, score
                if score == 0:
                    break
        return best


def parse_strategy(spec: str):
    """Roster syntax: "silent", "anchor-avoider", "crash:5", "grinder:100"."""
    if spec == "honest":
        return Honest()
    if spec == "silent":
        return Silent()
    if spec == "anchor-avoider":
        return AnchorAvoider()
    if spec.startswith("crash:"):
        return Crash(int(spec.split(":", 1)[1]))
    if spec.startswith("grinder:"):
        return Grinder(int(spec.split(":", 1)[1]))
    raise ValueError(f"unknown strategy {spec!r}")
