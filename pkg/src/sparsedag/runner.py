"""Experiment runner: configuration, run driver, metrics, CSV output.

A run wires together one network, one reliable-broadcast engine and n
validators, drives the event loop until every correct validator reaches
the configured round, then freezes round advancement and drains in-flight
traffic so that end-of-run audits see a quiescent system.  Rate metrics
use the pre-drain clock.

Everything is deterministic in (config, seed): randomness comes from named
substreams of one root stream, the event queue breaks ties by sequence
number, and CSV emission is byte-stable.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field, fields, replace

from .auditors import AuditReport, audit_run
from .consensus import MenaceTracker, ProtocolConfig, SharedOrdering, Validator
from .dag import Vertex
from .hashing import tagged_hash
from .rb import ReliableBroadcast
from .rng import Stream
from .simnet import NetConfig, Network, Stalled
from .strategies import parse_strategy
from .traffic import TrafficLedger

CSV_COLUMNS = ("variant,n,f,D,lambda,scheme,bandwidth_bps,seed,rounds,"
               "throughput_bps,commit_latency_mean_ms,commit_latency_p50_ms,"
               "commit_latency_p95_ms,egress_metadata_bytes_per_round,"
               "egress_total_bytes_per_round,audit_ok")

INCLUSION_CSV_COLUMNS = "latency_rounds,count"


class AuditFailed(Exception):
    """A safety auditor tripped; the run produces no metrics."""


@dataclass
class ExperimentConfig:
    """Full parameterization of one simulated run (JSON-mirrored)."""

    variant: str = "baseline"
    n: int = 4
    f: int | None = None
    D: int = 0
    lambda_bits: int = 128
    crypto_scheme: str = "threshold"
    payload_bytes: int = 512
    bandwidth_bytes_per_sec: int = 0
    rounds: int = 8
    seed: int = 1
    repetitions: int = 1
    rb_mode: str = "echo"
    timeout_ms: float = 1200.0
    alba_lambda_complete: int = 24
    size_model: str = "kzg"
    log_events: bool = False
    byzantine: dict = field(default_factory=dict)   # index -> strategy spec
    net: NetConfig = field(default_factory=NetConfig)

    def __post_init__(self):
        if self.f is None:
            self.f = (self.n - 1) // 3
        if self.rounds < 4:
            raise ValueError("need at least 4 rounds (one wave plus votes)")
        if isinstance(self.net, dict):
            self.net = NetConfig(**self.net)
        self.byzantine = {int(k): v for k, v in self.byzantine.items()}
        for idx, spec in self.byzantine.items():
            if not 0 <= idx < self.n:
                raise ValueError(f"byzantine index {idx} out of range")
            parse_strategy(spec)
        if len(self.byzantine) > self.f:
            raise ValueError("more byzantine validators than f")
        if self.timeout_ms < 2 * self.net.delta_ms:
            raise ValueError("round timeout must be at least 2*delta")

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        data = json.loads(text)
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        if "lambda" in data:
            data["lambda_bits"] = data.pop("lambda")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "net" in data and isinstance(data["net"], dict):
            net_known = {f.name for f in fields(NetConfig)}
            net_unknown = set(data["net"]) - net_known
            if net_unknown:
                raise ValueError(f"unknown net config keys: {sorted(net_unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["lambda"] = data.pop("lambda_bits")
        return data

    def digest(self) -> bytes:
        return tagged_hash("config", json.dumps(self.to_dict(), sort_keys=True,
                                                default=str).encode())

    def protocol(self) -> ProtocolConfig:
        return ProtocolConfig(
            n=self.n, f=self.f, variant=self.variant, D=self.D,
            lambda_bits=self.lambda_bits, timeout_ms=self.timeout_ms,
            delta_ms=self.net.delta_ms, gst_ms=self.net.gst_ms,
            crypto_scheme=self.crypto_scheme, payload_bytes=self.payload_bytes,
            alba_lambda_complete=self.alba_lambda_complete,
            size_model=self.size_model)


@dataclass
class MetricsRecord:
    variant: str
    n: int
    f: int
    D: int
    lambda_bits: int
    scheme: str
    bandwidth_bps: int
    seed: int
    rounds: int
    throughput_bps: float
    commit_latency_mean_ms: float
    commit_latency_p50_ms: float
    commit_latency_p95_ms: float
    egress_metadata_bytes_per_round: float
    egress_total_bytes_per_round: float
    audit_ok: bool
    inclusion_hist: dict[int, int] = field(default_factory=dict)
    egress_by_category: dict[str, float] = field(default_factory=dict)
    audit: AuditReport | None = None
    config_digest: str = ""
    sim_seconds: float = 0.0
    ordered_vertices: int = 0

    def csv_row(self) -> str:
        return ",".join([
            self.variant, str(self.n), str(self.f), str(self.D),
            str(self.lambda_bits), self.scheme, str(self.bandwidth_bps),
            str(self.seed), str(self.rounds),
            f"{self.throughput_bps:.6f}",
            f"{self.commit_latency_mean_ms:.3f}",
            f"{self.commit_latency_p50_ms:.3f}",
            f"{self.commit_latency_p95_ms:.3f}",
            f"{self.egress_metadata_bytes_per_round:.1f}",
            f"{self.egress_total_bytes_per_round:.1f}",
            str(self.audit_ok),
        ])


class RunShared:
    """State one run's validators share: network handles, safety trackers,
    the global ordering memo, and metric accumulators."""

    def __init__(self, cfg: ProtocolConfig, net: Network, rng: Stream,
                 run_tag: bytes):
        self.cfg = cfg
        self.net = net
        self.rng = rng
        self.run_tag = run_tag
        self.rb: ReliableBroadcast | None = None
        self.frozen = False
        self.menace = MenaceTracker(cfg.n, cfg.f)
        self.ordering = SharedOrdering()
        self.validation_cache: dict[bytes, bool] = {}
        self.bcast_time: dict[bytes, int] = {}
        self.round_entry: dict[int, int] = {}
        self.commit_samples_us: list[int] = []
        self.deliver_counts: dict[tuple[int, int, int], int] = {}
        self.delivered_by: dict[tuple[int, int], dict[int, bytes]] = {}
        self.record_schedule = False
        self.schedules: list[list] = [[] for _ in range(cfg.n)]
        self._validators: list[Validator] = []

    def note_advance(self, validator: Validator, round: int) -> None:
        if validator.correct and round not in self.round_entry:
            self.round_entry[round] = self.net.now_us

    def note_bcast(self, v: Vertex, t_us: int) -> None:
        self.bcast_time[v.vid] = t_us

    def note_ordered(self, validator: Validator, anchor: Vertex,
                     segment: list[Vertex]) -> None:
        if validator.correct:
            now = self.net.now_us
            for u in segment:
                if u.source == validator.idx and u.vid in self.bcast_time:
                    self.commit_samples_us.append(now - self.bcast_time[u.vid])
        if self.net.log_events:
            for u in segment:
                self.net.log_event("a_deliver", validator.idx, u.source, 0,
                                   f"r{u.round}")

    def note_r_deliver(self, validator: int, origin: int, seq: int,
                       vertex: Vertex) -> None:
        key = (validator, origin, seq)
        self.deliver_counts[key] = self.deliver_counts.get(key, 0) + 1
        self.delivered_by.setdefault((origin, seq), {})[validator] = vertex.vid
        if self.record_schedule:
            self.schedules[validator].append(
                (self.net.now_us, origin, seq, vertex))


def _percentile(sorted_vals: list, p: float) -> float:
    if not sorted_vals:
        return -1.0
    k = (len(sorted_vals) - 1) * p
    lo = math.floor(k)
    hi = math.ceil(k)
    if lo == hi:
        return float(sorted_vals[lo])
    return sorted_vals[lo] + (sorted_vals[hi] - sorted_vals[lo]) * (k - lo)


def run_experiment_full(config: ExperimentConfig, raise_on_audit: bool = True,
                        record_schedule: bool = False):
    """Drive one full simulation; returns (record, validators, shared, net)
    so tests and auditors can inspect final state."""
    pcfg = config.protocol()
    net_cfg = replace(config.net,
                      bandwidth_bytes_per_sec=config.bandwidth_bytes_per_sec)
    root = Stream(tagged_hash("run", config.digest(),
                              config.seed.to_bytes(8, "big")))
    ledger = TrafficLedger()
    net = Network(config.n, net_cfg, root.substream("net"), ledger,
                  log_events=config.log_events)
    shared = RunShared(pcfg, net, root, run_tag=config.digest()[:8])
    shared.record_schedule = record_schedule

    validators = [Validator(i, pcfg, shared,
                            parse_strategy(config.byzantine.get(i, "honest")))
                  for i in range(config.n)]
    shared._validators = validators

    def deliver_cb(v: int, origin: int, seq: int, vertex: Vertex) -> None:
        shared.note_r_deliver(v, origin, seq, vertex)
        validators[v].on_r_deliver(origin, seq, vertex)

    rb = ReliableBroadcast(
        net, config.n, config.f, root.substream("rb"), deliver_cb,
        mode=config.rb_mode, scheme=config.crypto_scheme,
        lambda_bits=config.lambda_bits, size_model=config.size_model,
        payload_bytes=config.payload_bytes,
        crashed_cb=lambda i: validators[i].crashed,
        pull_grace_ms=max(4 * config.net.delta_ms, 2000.0))
    shared.rb = rb

    net.deliver_handler = lambda dst, src, body: rb.on_message(dst, src, body[1])

    def timer_handler(validator: int, token) -> None:
        if token[0] == "round":
            validators[validator].on_timer(token)
        else:
            rb.on_timer(validator, token)

    net.timer_handler = timer_handler

    correct = [v for v in validators if v.correct]
    target = config.rounds

    for v in validators:
        v.maybe_advance()

    def stop() -> bool:
        return all(v.current_round >= target for v in correct)

    max_events = 5_000_000 + 2_000 * config.n * config.n * config.rounds
    try:
        net.run(stop, max_events=max_events)
    except Stalled as exc:
        tail = "; ".join(r.to_json() for r in net.log[-5:])
        raise Stalled(f"{exc} | rounds: "
                      f"{[v.current_round for v in correct]} | log tail: "
                      f"{tail or 'disabled'}") from exc
    freeze_us = net.now_us
    shared.frozen = True
    rb.frozen = True
    net.drain(max_events=max_events)

    report = audit_run(validators, shared, pcfg, target)
    if raise_on_audit and not report.safety_ok:
        raise AuditFailed("; ".join(report.failures[:10]))

    sim_seconds = freeze_us / 1e6 if freeze_us else 0.0
    ordered_total = sum(v.ordering.ordered_count for v in correct)
    throughput = (ordered_total / sim_seconds / config.n) if sim_seconds else 0.0
    lat_ms = sorted(x / 1000.0 for x in shared.commit_samples_us)
    rounds_reached = max((v.current_round for v in correct), default=0)
    denom = config.n * max(rounds_reached, 1)
    by_cat = {cat: ledger.total(cat) / denom
              for cat in ("vertex_metadata", "payload", "broadcast_overhead",
                          "pull_responses")}

    return MetricsRecord(
        variant=config.variant, n=config.n, f=config.f, D=config.D,
        lambda_bits=config.lambda_bits, scheme=config.crypto_scheme,
        bandwidth_bps=config.bandwidth_bytes_per_sec, seed=config.seed,
        rounds=config.rounds, throughput_bps=throughput,
        commit_latency_mean_ms=(sum(lat_ms) / len(lat_ms)) if lat_ms else -1.0,
        commit_latency_p50_ms=_percentile(lat_ms, 0.50),
        commit_latency_p95_ms=_percentile(lat_ms, 0.95),
        egress_metadata_bytes_per_round=by_cat["vertex_metadata"],
        egress_total_bytes_per_round=ledger.total() / denom,
        audit_ok=report.all_ok,
        inclusion_hist=dict(sorted(shared.ordering.inclusion_hist.items())),
        egress_by_category=by_cat,
        audit=report,
        config_digest=config.digest().hex(),
        sim_seconds=sim_seconds,
        ordered_vertices=ordered_total,
    ), validators, shared, net


def run_experiment(config: ExperimentConfig, raise_on_audit: bool = True
                   ) -> MetricsRecord:
    """One full simulated run, reduced to its metrics record."""
    record, _, _, _ = run_experiment_full(config, raise_on_audit)
    return record


def sub_seed(base: ExperimentConfig, *tokens) -> int:
    blob = tagged_hash("subseed", base.digest(),
                       *[str(t).encode() for t in tokens])
    return int.from_bytes(blob[:8], "big") % (1 << 62)


def sweep(base: ExperimentConfig, samples: list, bandwidths: list[int],
          repetitions: int | None = None) -> list[MetricsRecord]:
    """Cross-product of sample sizes x bandwidth caps, each a full run.

    `samples` entries are integers (sparse sample sizes) or the string
    "baseline"; bandwidth 0 means unlimited.  Every grid point runs with a
    sub-seed derived from (base config, grid point, repetition).
    """
    if not samples or not bandwidths:
        raise ValueError("empty sweep grid")
    reps = repetitions if repetitions is not None else base.repetitions
    records = []
    for token in samples:
        for bw in bandwidths:
            for rep in range(reps):
                if token == "baseline":
                    variant, d = "baseline", 0
                else:
                    variant, d = "sparse", int(token)
                cfg = replace(base, variant=variant, D=d,
                              bandwidth_bytes_per_sec=int(bw),
                              seed=sub_seed(base, token, bw, rep))
                records.append(run_experiment(cfg))
    return records


def export_csv(records: list[MetricsRecord], path) -> None:
    if not records:
        raise ValueError("no records to export")
    _atomic_write(path, "\n".join([CSV_COLUMNS] +
                                  [r.csv_row() for r in records]) + "\n")


def export_inclusion_csv(hist: dict[int, int], path) -> None:
    lines = [INCLUSION_CSV_COLUMNS]
    lines.extend(f"{lat},{count}" for lat, count in sorted(hist.items()))
    _atomic_write(path, "\n".join(lines) + "\n")


EGRESS_CSV_COLUMNS = "variant,scheme,n,lambda,egress_bytes_per_round"


def export_egress_model_csv(n: int, lambda_bits: int, path) -> None:
    """Per-user per-round egress estimates of the traffic model, one row
    per (variant, scheme); the figure toolkit renders these as a table."""
    from .traffic import SCHEMES, table_egress_bytes
    lines = [EGRESS_CSV_COLUMNS]
    for variant in ("baseline", "sparse"):
        for scheme in SCHEMES:
            egress = table_egress_bytes(variant, scheme, n, lambda_bits)
            lines.append(f"{variant},{scheme},{n},{lambda_bits},{egress}")
    _atomic_write(path, "\n".join(lines) + "\n")


def _atomic_write(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
