"""Seeded discrete-event network: latency sampling, egress caps, GST.

Time is integer microseconds; the event queue is ordered by (time, seq)
with a monotone sequence counter breaking ties, so identical (config,
seed) pairs replay byte-identically.  Message latency is bimodal normal
(a small fraction of sends draw from a slow tail).  Before the global
stabilization time an adversary stream may add extra delay per message,
but any message still lands by gst + delta; after GST the network-latency
component of every message is clamped to delta.

Each validator has an egress serialization queue: a message occupies the
sender's uplink for size/bandwidth seconds before its network latency
starts, which is what makes oversized metadata show up as commit latency.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from heapq import heappush, heappop

from .rng import Stream
from .traffic import TrafficLedger

DELIVER = "deliver"
TIMER = "timer"


class Stalled(Exception):
    """Event queue emptied before the stop condition was met."""


@dataclass
class NetConfig:
    base_latency_mean_ms: float = 50.0
    base_latency_std_ms: float = 10.0
    tail_latency_mean_ms: float = 500.0
    tail_latency_std_ms: float = 10.0
    tail_fraction: float = 0.01
    bandwidth_bytes_per_sec: int = 0        # 0 = unlimited
    delta_ms: float = 600.0
    gst_ms: float = 0.0
    pre_gst_max_delay_ms: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.tail_fraction <= 1.0:
            raise ValueError("tail_fraction outside [0, 1]")
        if self.bandwidth_bytes_per_sec < 0:
            raise ValueError("negative bandwidth")

    @property
    def delta_us(self) -> int:
        return int(self.delta_ms * 1000)

    @property
    def gst_us(self) -> int:
        return int(self.gst_ms * 1000)


def sample_latency_ms(stream: Stream, cfg: NetConfig) -> float:
    """One raw latency draw: tail-or-base normal, clamped at zero."""
    if stream.uniform() < cfg.tail_fraction:
        lat = stream.normal(cfg.tail_latency_mean_ms, cfg.tail_latency_std_ms)
    else:
        lat = stream.normal(cfg.base_latency_mean_ms, cfg.base_latency_std_ms)
    return max(lat, 0.0)


@dataclass
class LogRecord:
    t_us: int
    kind: str
    src: int
    dst: int
    size: int
    tag: str

    def to_json(self) -> str:
        return json.dumps({"t_us": self.t_us, "kind": self.kind,
                           "src": self.src, "dst": self.dst,
                           "size": self.size, "tag": self.tag})


class Network:
    """Event loop plus the link model for n validators."""

    def __init__(self, n: int, cfg: NetConfig, rng: Stream,
                 ledger: TrafficLedger | None = None, log_events: bool = True):
        self.n = n
        self.cfg = cfg
        self.now_us = 0
        self.ledger = ledger if ledger is not None else TrafficLedger()
        self.log_events = log_events
        self.log: list[LogRecord] = []
        self._heap: list = []
        self._seq = 0
        self._free_at = [0] * n
        self._lat = [rng.substream(f"lat/{i}") for i in range(n)]
        self._adv = [rng.substream(f"adv/{i}") for i in range(n)]
        self.deliver_handler = None     # fn(dst, src, payload)
        self.timer_handler = None       # fn(validator, token)
        self.events_processed = 0

    # -- scheduling --------------------------------------------------------

    def _push(self, at_us: int, kind: str, target: int, payload) -> None:
        heappush(self._heap, (at_us, self._seq, kind, target, payload))
        self._seq += 1

    def _latency_us(self, src: int, depart_us: int) -> int:
        lat_us = int(sample_latency_ms(self._lat[src], self.cfg) * 1000)
        gst_us, delta_us = self.cfg.gst_us, self.cfg.delta_us
        if depart_us >= gst_us:
            return min(lat_us, delta_us)
        if self.cfg.pre_gst_max_delay_ms > 0:
            lat_us += int(self._adv[src].uniform()
                          * self.cfg.pre_gst_max_delay_ms * 1000)
        # partial synchrony: even adversarial delays respect gst + delta
        return min(lat_us, gst_us + delta_us - depart_us)

    def send(self, src: int, dst: int, size: int, payload, tag: str,
             round: int, categories: dict[str, int]) -> int:
        """Schedule a message; returns the arrival time in us."""
        if src == dst:
            raise ValueError("self-sends are local, not network messages")
        for category, nbytes in categories.items():
            self.ledger.record(src, round, category, nbytes)
        if self.cfg.bandwidth_bytes_per_sec > 0:
            tx_us = (size * 1_000_000 + self.cfg.bandwidth_bytes_per_sec - 1) \
                // self.cfg.bandwidth_bytes_per_sec
            depart = max(self.now_us, self._free_at[src]) + tx_us
            self._free_at[src] = depart
        else:
            depart = self.now_us
        arrival = depart + self._latency_us(src, depart)
        if self.log_events:
            # the depart time rides in the tag so offline audits can check
            # the post-GST bound net of serialization delay
            self.log.append(LogRecord(self.now_us, "send", src, dst, size,
                                      f"{tag}|d{depart}"))
        self._push(arrival, DELIVER, dst, (src, size, tag, payload))
        return arrival

    def schedule_timer(self, at_us: int, validator: int, token) -> None:
        self._push(max(at_us, self.now_us), TIMER, validator, token)

    def log_event(self, kind: str, src: int, dst: int = -1, size: int = 0,
                  tag: str = "") -> None:
        if self.log_events:
            self.log.append(LogRecord(self.now_us, kind, src, dst, size, tag))

    # -- loop --------------------------------------------------------------

    def run(self, stop=None, max_events: int | None = None) -> str:
        """Dispatch events in time order until `stop()` is true or the
        queue drains.  Returns "stopped" or "drained"; raises Stalled when
        the queue empties with an unmet stop condition."""
        while self._heap:
            if max_events is not None and self.events_processed >= max_events:
                raise Stalled(f"exceeded {max_events} events")
            at, _, kind, target, payload = heappop(self._heap)
            self.now_us = max(self.now_us, at)
            self.events_processed += 1
            if kind == DELIVER:
                src, size, tag, body = payload
                if self.log_events:
                    self.log.append(LogRecord(self.now_us, "recv", src, target,
                                              size, tag))
                self.deliver_handler(target, src, body)
            else:
                self.timer_handler(target, payload)
            if stop is not None and stop():
                return "stopped"
        if stop is None or stop():
            return "drained"
        raise Stalled("event queue drained before stop condition")

    def drain(self, max_events: int | None = None) -> None:
        """Process everything in flight until the queue empties.  Periodic
        reschedulers (round timers, pull retries) must be frozen first;
        bounded follow-ups like echoes are fine."""
        self.run(stop=None, max_events=max_events)

    def export_log(self, path) -> None:
        with open(path, "w") as fh:
            for rec in self.log:
                fh.write(rec.to_json())
                fh.write("\n")
