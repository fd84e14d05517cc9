"""Run-end auditors and the offline event-log audit.

The in-memory auditors consume a finished (frozen and drained) run and
check the properties the protocol is supposed to guarantee, rather than
anything about how it got there: delivered logs of correct validators are
prefixes of one another, nothing is delivered twice, no validator's view
was ever menacing, reliable broadcast kept its three properties, and every
post-GST anchor by a correct creator was directly committed everywhere.

A run that fails a safety audit must fail loudly; the harness raises
rather than emitting metrics.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field

from .consensus import direct_commit_threshold


@dataclass
class AuditReport:
    prefix_ok: bool = True
    no_duplicates_ok: bool = True
    menace_ok: bool = True
    rb_ok: bool = True
    liveness_ok: bool = True
    audited_anchors: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def safety_ok(self) -> bool:
        return (self.prefix_ok and self.no_duplicates_ok and self.menace_ok
                and self.rb_ok)

    @property
    def all_ok(self) -> bool:
        return self.safety_ok and self.liveness_ok


def _is_prefix(short, long) -> bool:
    return len(short) <= len(long) and all(
        a.vid == b.vid for a, b in zip(short, long))


def audit_prefix_agreement(validators, shared, report: AuditReport) -> None:
    correct = [v for v in validators if v.correct]
    if shared.ordering.divergences:
        report.prefix_ok = False
        report.failures.extend(f"ordering divergence: {d}"
                               for d in shared.ordering.divergences)
    longest = max((v.ordering.chain for v in correct), key=len, default=[])
    for v in correct:
        if not _is_prefix(v.ordering.chain, longest):
            report.prefix_ok = False
            report.failures.append(
                f"validator {v.idx}: anchor chain is not a prefix of the "
                f"longest chain")
        rounds = [a.round for a in v.ordering.chain]
        if any(r % 2 or r < 2 for r in rounds) or \
                any(b <= a for a, b in zip(rounds, rounds[1:])):
            report.prefix_ok = False
            report.failures.append(
                f"validator {v.idx}: committed anchor rounds {rounds} are "
                f"not strictly increasing even rounds")


def audit_no_duplicates(validators, shared, report: AuditReport) -> None:
    # segments are shared; disjointness plus per-slot uniqueness inside each
    # segment is exactly per-validator no-duplicate delivery
    seen_vids: set[bytes] = set()
    seen_slots: set[tuple[int, int]] = set()
    for segment in shared.ordering.segments:
        for u in segment:
            if u.vid in seen_vids or (u.source, u.round) in seen_slots:
                report.no_duplicates_ok = False
                report.failures.append(
                    f"duplicate delivery of (source={u.source}, round={u.round})")
            seen_vids.add(u.vid)
            seen_slots.add((u.source, u.round))


def audit_menace(shared, report: AuditReport) -> None:
    if shared.menace.menacing:
        report.menace_ok = False
        report.failures.extend(f"menacing view: {v}"
                               for v in shared.menace.violations)


def audit_rb(validators, shared, report: AuditReport) -> None:
    """Validity, Agreement, Integrity over the full r_deliver history."""
    correct_ids = [v.idx for v in validators if v.correct]
    for key, count in shared.deliver_counts.items():
        if count > 1:
            report.rb_ok = False
            report.failures.append(f"duplicate r_deliver {key}")
    for (origin, seq), per_validator in shared.delivered_by.items():
        digests = {per_validator[i] for i in per_validator}
        if len(digests) > 1:
            report.rb_ok = False
            report.failures.append(
                f"conflicting deliveries for instance ({origin}, {seq})")
        delivered_correct = [i for i in correct_ids if i in per_validator]
        if delivered_correct and len(delivered_correct) != len(correct_ids):
            report.rb_ok = False
            report.failures.append(
                f"instance ({origin}, {seq}) delivered by "
                f"{len(delivered_correct)}/{len(correct_ids)} correct validators")


def audit_post_gst_liveness(validators, shared, cfg, stop_round: int,
                            report: AuditReport) -> None:
    """Every anchor of a fully post-GST round with a correct creator must be
    directly committed by every correct validator."""
    correct = [v for v in validators if v.correct]
    by_idx = {v.idx: v for v in validators}
    gst_us = int(cfg.gst_ms * 1000)
    threshold = direct_commit_threshold(cfg.variant, cfg.f)
    for r in range(2, stop_round - 1, 2):
        entry = shared.round_entry.get(r)
        if entry is None or entry < gst_us:
            continue
        leader = (r // 2) % cfg.n
        creator = by_idx[leader]
        if not creator.correct:
            continue
        anchor = creator.dag.get(r, leader)
        if anchor is None:
            continue
        report.audited_anchors += 1
        for v in correct:
            votes = v.votes.get(anchor.vid, 0)
            if votes < threshold:
                report.liveness_ok = False
                report.failures.append(
                    f"anchor r{r} has {votes} < {threshold} votes at "
                    f"validator {v.idx}")
            elif anchor.vid not in v.ordering.committed_vids:
                report.liveness_ok = False
                report.failures.append(
                    f"anchor r{r} not in validator {v.idx}'s committed chain")


def audit_run(validators, shared, cfg, stop_round: int) -> AuditReport:
    report = AuditReport()
    audit_prefix_agreement(validators, shared, report)
    audit_no_duplicates(validators, shared, report)
    audit_menace(shared, report)
    audit_rb(validators, shared, report)
    audit_post_gst_liveness(validators, shared, cfg, stop_round, report)
    return report


# -- offline event-log audit ---------------------------------------------------


def audit_eventlog(path, delta_ms: float | None = None,
                   gst_ms: float | None = None,
                   bandwidth_bytes_per_sec: int | None = None) -> dict:
    """Re-check the log-expressible properties of an exported run.

    Covers r_deliver integrity and cross-validator delivery agreement,
    per-validator event monotonicity, the post-GST delay bound, and the
    egress bandwidth cap.  Structural properties (menace-freedom, prefix
    agreement of ordering) need the in-memory auditors.
    """
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))

    problems: list[str] = []
    deliveries: dict[tuple[int, str], set[int]] = defaultdict(set)
    dup = 0
    for rec in records:
        if rec["kind"] == "r_deliver":
            key = (rec["dst"], rec["tag"])
            if rec["src"] in deliveries[key]:
                dup += 1
                problems.append(f"duplicate r_deliver {rec}")
            deliveries[key].add(rec["src"])

    last_processed: dict[int, int] = {}
    for rec in records:
        if rec["kind"] == "recv":
            processor = rec["dst"]
        elif rec["kind"] in ("r_deliver", "a_deliver"):
            processor = rec["src"]
        else:
            continue
        prev = last_processed.get(processor, 0)
        if rec["t_us"] < prev:
            problems.append(
                f"validator {processor} processed event at {rec['t_us']} "
                f"after one at {prev}")
        last_processed[processor] = rec["t_us"]

    bound_violations = 0
    if delta_ms is not None and gst_ms is not None:
        delta_us, gst_us = int(delta_ms * 1000), int(gst_ms * 1000)
        departs: dict[tuple, int] = {}
        for rec in records:
            if rec["kind"] == "send" and "|d" in rec["tag"]:
                tag, depart = rec["tag"].rsplit("|d", 1)
                departs[(rec["src"], rec["dst"], tag, rec["size"])] = int(depart)
        for rec in records:
            if rec["kind"] != "recv":
                continue
            key = (rec["src"], rec["dst"], rec["tag"].rsplit("|d", 1)[0], rec["size"])
            depart = departs.get(key)
            if depart is not None and depart >= gst_us:
                if rec["t_us"] - depart > delta_us:
                    bound_violations += 1
                    problems.append(f"post-GST delay bound violated: {rec}")

    cap_violations = 0
    if bandwidth_bytes_per_sec:
        by_src: dict[int, list[tuple[int, int]]] = defaultdict(list)
        for rec in records:
            if rec["kind"] == "send" and "|d" in rec["tag"]:
                depart = int(rec["tag"].rsplit("|d", 1)[1])
                by_src[rec["src"]].append((depart, rec["size"]))
        for src, sends in by_src.items():
            sends.sort()
            window: list[tuple[int, int]] = []
            total = 0
            for t, size in sends:
                window.append((t, size))
                total += size
                while window and window[0][0] < t - 1_000_000:
                    total -= window.pop(0)[1]
                # one message of slack: a depart marks the END of its
                # serialization interval
                if total > bandwidth_bytes_per_sec + size:
                    cap_violations += 1
                    problems.append(
                        f"validator {src}: {total} bytes departed within 1s "
                        f"at {t}")
                    break

    return {"records": len(records), "duplicates": dup,
            "delay_bound_violations": bound_violations,
            "bandwidth_violations": cap_violations,
            "problems": problems, "ok": not problems}
