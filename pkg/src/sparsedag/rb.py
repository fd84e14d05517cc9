"""Reliable broadcast of vertices over the simulated network.

Two interchangeable engines sit behind one interface:

* "echo" is a signed-echo consistent broadcast with randomized pulling.
  The sender ships the vertex to everyone; receivers return a signed echo
  of its digest; 2f+1 echoes form a delivery certificate which the sender
  ships to everyone.  A validator delivers when it holds certificate and
  matching payload.  Whoever delivers forwards the certificate to a few
  random peers, anyone holding a certificate without the payload pulls it
  from random certificate signers with exponential backoff, and validators
  periodically pull instances they expect but have never heard of.  The
  pulls make delivery spread epidemically whenever at least one correct
  validator got it, while the honest path stays at ~6n messages per
  broadcast instead of n^2.

* "ideal" delivers the first payload bound to (sender, seq) directly to
  every validator, enforcing the broadcast properties by construction.
  Protocol-logic tests and large sweeps use it; byte accounting is the
  same since edge certificates ride inside the vertex encoding either way.

Signatures are modeled, never computed: certificates carry real signer
index sets (only validators that actually echoed appear), and forging is
outside the model.  Crashes are step-atomic: a validator stops between
protocol steps, so a multi-recipient step either happened for everyone or
for no one.  Byzantine senders, by contrast, may address any subset via
the low-level injection hooks.
"""

from __future__ import annotations

from .dag import Vertex
from .rng import Stream
from .simnet import Network
from .traffic import (cert_message_size, echo_message_size,
                      pull_message_size, vertex_wire_size)


class _Inst:
    """One validator's view of one broadcast instance."""

    __slots__ = ("vertex", "echoed", "signers", "cert_digest", "delivered",
                 "pulling", "pull_attempt")

    def __init__(self):
        self.vertex = None
        self.echoed = False
        self.signers = None        # frozenset once a certificate is known
        self.cert_digest = None
        self.delivered = False
        self.pulling = False
        self.pull_attempt = 0


_MISSING = _Inst()


class ReliableBroadcast:
    def __init__(self, net: Network, n: int, f: int, rng: Stream,
                 deliver_cb, mode: str = "echo", scheme: str = "threshold",
                 lambda_bits: int = 128, size_model: str = "kzg",
                 payload_bytes: int | None = None, crashed_cb=None,
                 pull_grace_ms: float = 2000.0, pull_retry_ms: float = 1000.0,
                 pull_fanout: int = 3, forward_fanout: int = 3):
        if mode not in ("echo", "ideal"):
            raise ValueError(f"unknown rb mode {mode!r}")
        self.net = net
        self.n = n
        self.f = f
        self.mode = mode
        self.scheme = scheme
        self.lambda_bits = lambda_bits
        self.size_model = size_model
        # block contents are digests; their wire size is modeled
        self.payload_bytes = payload_bytes
        self.deliver_cb = deliver_cb
        self.crashed_cb = crashed_cb or (lambda i: False)
        self.pull_grace_us = int(pull_grace_ms * 1000)
        self.pull_retry_us = int(pull_retry_ms * 1000)
        self.pull_fanout = pull_fanout
        self.forward_fanout = forward_fanout
        self.frozen = False
        self._rng = [rng.substream(f"rb/{i}") for i in range(n)]
        self._state: list[dict[tuple[int, int], _Inst]] = [dict() for _ in range(n)]
        self._echo_senders: list[dict[tuple[int, int], set]] = [dict() for _ in range(n)]
        self._bound: dict[tuple[int, int], Vertex] = {}   # ideal mode registry
        self._expect_attempt: dict[tuple[int, int], int] = {}
        self.message_counts: dict[tuple[int, int], int] = {}

    # -- helpers -----------------------------------------------------------

    def _inst(self, v: int, origin: int, seq: int) -> _Inst:
        st = self._state[v]
        key = (origin, seq)
        inst = st.get(key)
        if inst is None:
            inst = st[key] = _Inst()
        return inst

    def _count(self, origin: int, seq: int) -> None:
        key = (origin, seq)
        self.message_counts[key] = self.message_counts.get(key, 0) + 1

    def _vertex_sizes(self, vertex: Vertex) -> tuple[int, int]:
        sparse = vertex.proof is not None
        sampled = len(vertex.proof.openings) if sparse else 0
        chain = len(vertex.proof.alba.chain) if sparse else 0
        payload = self.payload_bytes if self.payload_bytes is not None \
            else len(vertex.block)
        return vertex_wire_size(len(vertex.edges), payload,
                                self.scheme, self.n, self.lambda_bits,
                                sparse=sparse, sampled=sampled,
                                chain_len=chain, size_model=self.size_model)

    def _send(self, src: int, dst: int, msg, size: int, seq: int,
              categories: dict[str, int], tag: str) -> None:
        self._count(msg[1], seq)
        self.net.send(src, dst, size, ("rb", msg), tag, seq, categories)

    def _random_peers(self, v: int, count: int, exclude=()) -> list[int]:
        rng = self._rng[v]
        peers = []
        tries = 0
        while len(peers) < count and tries < 20 * count:
            i = rng.randint(0, self.n)
            tries += 1
            if i != v and i not in exclude and i not in peers:
                peers.append(i)
        return peers

    # -- broadcast entry point ----------------------------------------------

    def broadcast(self, origin: int, seq: int, vertex: Vertex) -> None:
        """Correct-sender broadcast: ship to everyone, deliver locally."""
        meta, payload = self._vertex_sizes(vertex)
        if self.mode == "ideal":
            self._bound.setdefault((origin, seq), vertex)
            bound = self._bound[(origin, seq)]
            for dst in range(self.n):
                if dst != origin:
                    self._send(origin, dst, ("send", origin, seq, bound),
                               meta + payload, seq,
                               {"vertex_metadata": meta, "payload": payload},
                               f"send/{origin}/{seq}")
            self._deliver(origin, origin, seq, bound)
            return
        inst = self._inst(origin, origin, seq)
        inst.vertex = vertex
        inst.echoed = True   # the sender's own signature is implicit
        for dst in range(self.n):
            if dst != origin:
                self._send(origin, dst, ("send", origin, seq, vertex),
                           meta + payload, seq,
                           {"vertex_metadata": meta, "payload": payload},
                           f"send/{origin}/{seq}")
        self._deliver(origin, origin, seq, vertex)

    def expect_round(self, validator: int, round: int) -> None:
        """Register interest in every (source, round) instance; after a
        grace period, undelivered unknown instances are pulled from random
        peers.  This is the anti-entropy channel that makes delivery total
        even when certificates spread only partially."""
        if self.mode == "ideal" or self.frozen:
            return
        self.net.schedule_timer(self.net.now_us + self.pull_grace_us,
                                validator, ("rb-expect", round))

    # -- network dispatch ----------------------------------------------------

    def on_message(self, dst: int, src: int, msg) -> None:
        if self.crashed_cb(dst):
            return
        kind = msg[0]
        if kind == "send":
            self._on_send(dst, src, msg)
        elif kind == "echo":
            self._on_echo(dst, msg)
        elif kind == "cert":
            self._on_cert(dst, msg[1], msg[2], msg[3], msg[4])
        elif kind == "pull":
            self._on_pull(dst, src, msg)
        elif kind == "pullr":
            self._on_pullr(dst, msg)

    def on_timer(self, validator: int, token) -> None:
        if self.crashed_cb(validator) or self.frozen:
            return
        if token[0] == "rb-expect":
            self._on_expect_timer(validator, token[1])
        elif token[0] == "rb-pull":
            self._on_pull_timer(validator, token[1], token[2])

    # -- ideal mode ----------------------------------------------------------

    def _deliver(self, v: int, origin: int, seq: int, vertex: Vertex) -> None:
        inst = self._inst(v, origin, seq)
        if inst.delivered:
            return
        inst.delivered = True
        inst.vertex = vertex
        self.net.log_event("r_deliver", v, origin, 0, f"r{seq}")
        self.deliver_cb(v, origin, seq, vertex)
        if self.mode == "echo" and inst.signers is not None and not self.frozen:
            cert_size = cert_message_size(self.scheme, self.n, self.lambda_bits)
            for dst in self._random_peers(v, self.forward_fanout, (origin,)):
                self._send(v, dst, ("cert", origin, seq, inst.cert_digest,
                                    inst.signers), cert_size, seq,
                           {"broadcast_overhead": cert_size},
                           f"certfwd/{origin}/{seq}")

    # -- echo mode -----------------------------------------------------------

    def _on_send(self, dst: int, src: int, msg) -> None:
        _, origin, seq, vertex = msg
        if self.mode == "ideal":
            self._deliver(dst, origin, seq, vertex)
            return
        inst = self._inst(dst, origin, seq)
        if inst.vertex is None:
            inst.vertex = vertex
        if not inst.echoed and inst.vertex.vid == vertex.vid:
            inst.echoed = True
            size = echo_message_size(self.lambda_bits)
            self._send(dst, origin, ("echo", origin, seq, vertex.vid, dst),
                       size, seq, {"broadcast_overhead": size},
                       f"echo/{origin}/{seq}")
        self._try_deliver(dst, origin, seq)

    def _on_echo(self, me: int, msg) -> None:
        _, origin, seq, digest, signer = msg
        if me != origin:
            return
        inst = self._inst(me, origin, seq)
        if inst.vertex is None or inst.vertex.vid != digest:
            return
        if inst.signers is not None:
            return
        echoes = self._echo_senders[me].setdefault((origin, seq), {origin})
        echoes.add(signer)
        if len(echoes) >= 2 * self.f + 1:
            signers = frozenset(echoes)
            inst.signers = signers
            inst.cert_digest = digest
            cert_size = cert_message_size(self.scheme, self.n, self.lambda_bits)
            for dst in range(self.n):
                if dst != origin:
                    self._send(origin, dst, ("cert", origin, seq, digest, signers),
                               cert_size, seq, {"broadcast_overhead": cert_size},
                               f"cert/{origin}/{seq}")

    def _on_cert(self, dst: int, origin: int, seq: int, digest: bytes,
                 signers: frozenset) -> None:
        if len(signers) < 2 * self.f + 1:
            return
        inst = self._inst(dst, origin, seq)
        if inst.signers is None:
            inst.signers = signers
            inst.cert_digest = digest
        self._try_deliver(dst, origin, seq)

    def _try_deliver(self, v: int, origin: int, seq: int) -> None:
        inst = self._inst(v, origin, seq)
        if inst.delivered or inst.signers is None:
            return
        if inst.vertex is not None and inst.vertex.vid == inst.cert_digest:
            self._deliver(v, origin, seq, inst.vertex)
        elif not inst.pulling and not self.frozen:
            inst.pulling = True
            inst.pull_attempt = 0
            self._issue_pulls(v, origin, seq)

    def _issue_pulls(self, v: int, origin: int, seq: int) -> None:
        inst = self._inst(v, origin, seq)
        if inst.delivered:
            inst.pulling = False
            return
        targets = sorted(inst.signers - {v}) if inst.signers else []
        if targets:
            rng = self._rng[v]
            picks = [targets[rng.randint(0, len(targets))]
                     for _ in range(min(self.pull_fanout, len(targets)))]
        else:
            picks = self._random_peers(v, self.pull_fanout)
        size = pull_message_size()
        for dst in dict.fromkeys(picks):
            self._send(v, dst, ("pull", origin, seq, v), size, seq,
                       {"broadcast_overhead": size}, f"pull/{origin}/{seq}")
        inst.pull_attempt += 1
        delay = self.pull_retry_us * (1 << min(inst.pull_attempt, 8))
        self.net.schedule_timer(self.net.now_us + delay, v,
                                ("rb-pull", origin, seq))

    def _on_pull_timer(self, v: int, origin: int, seq: int) -> None:
        inst = self._inst(v, origin, seq)
        if inst.delivered:
            inst.pulling = False
            return
        self._issue_pulls(v, origin, seq)

    def _on_expect_timer(self, v: int, round: int) -> None:
        st = self._state[v]
        missing = [k for k in range(self.n)
                   if k != v and not st.get((k, round), _MISSING).delivered]
        if not missing:
            return
        size = pull_message_size()
        for origin in missing:
            inst = self._inst(v, origin, round)
            if inst.pulling:
                continue
            for dst in self._random_peers(v, 1, (origin,)):
                self._send(v, dst, ("pull", origin, round, v), size, round,
                           {"broadcast_overhead": size}, f"expect/{origin}/{round}")
        # re-check with doubled grace while the round stays incomplete
        attempt = self._expect_attempt.setdefault((v, round), 0)
        self._expect_attempt[(v, round)] = attempt + 1
        if attempt < 10:
            delay = self.pull_grace_us * (1 << min(attempt, 6))
            self.net.schedule_timer(self.net.now_us + delay, v,
                                    ("rb-expect", round))

    def _on_pull(self, me: int, requester_src: int, msg) -> None:
        _, origin, seq, requester = msg
        inst = self._state[me].get((origin, seq))
        if inst is None or not inst.delivered:
            return
        meta, payload = self._vertex_sizes(inst.vertex)
        cert_size = cert_message_size(self.scheme, self.n, self.lambda_bits)
        size = meta + payload + cert_size
        self._send(me, requester, ("pullr", origin, seq, inst.cert_digest,
                                   inst.signers, inst.vertex), size, seq,
                   {"pull_responses": size}, f"pullr/{origin}/{seq}")

    def _on_pullr(self, dst: int, msg) -> None:
        _, origin, seq, digest, signers, vertex = msg
        inst = self._inst(dst, origin, seq)
        # prefer the payload that matches the certified digest (the locally
        # held one may be an equivocator's other payload)
        if inst.vertex is None or (vertex.vid == digest and inst.vertex.vid != digest):
            inst.vertex = vertex
        self._on_cert(dst, origin, seq, digest, signers)
