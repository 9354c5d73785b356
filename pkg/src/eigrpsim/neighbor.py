"""Hello-driven adjacencies and the reliable transport under them.

Hellos are multicast to FF02::A and unsequenced.  Updates, Queries and
Replies are sequenced and acknowledged per neighbor.  Each neighbor has
one packet in flight at a time; the rest wait in its queue (the ``Q``
column of the neighbor table).
"""

from __future__ import annotations

import enum
import logging
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, Deque, Dict, List, Optional, Sequence, Tuple

from .dual import NeighborId
from .ipv6 import EIGRP_MULTICAST, Address128, Prefix
from .metric import DEFAULT_K, KValues, MetricVector, composite

__all__ = [
    "PacketKind",
    "EigrpPacket",
    "GOODBYE_K",
    "TimerConfig",
    "Neighbor",
    "NeighborTable",
    "ReliableTransport",
    "update_rtt",
    "MAX_RETRANSMITS",
    "RTO_MIN_MS",
    "RTO_MAX_MS",
]

log = logging.getLogger(__name__)

MAX_RETRANSMITS = 16
RTO_MIN_MS = 1000
RTO_MAX_MS = 5000

# A hello with every K-value at 255 tears the adjacency down at once.
GOODBYE_K = KValues(255, 255, 255, 255, 255)


class PacketKind(enum.Enum):
    HELLO = "Hello"
    UPDATE = "Update"
    QUERY = "Query"
    REPLY = "Reply"
    ACK = "Ack"

    @property
    def sequenced(self) -> bool:
        return self in (PacketKind.UPDATE, PacketKind.QUERY, PacketKind.REPLY)


@dataclass(frozen=True)
class EigrpPacket:
    kind: PacketKind
    as_number: int
    sender: Address128
    seq: int = 0
    ack: int = 0
    k_values: Optional[KValues] = None
    hold_time_s: Optional[int] = None
    routes: Tuple[Tuple[Prefix, MetricVector], ...] = ()
    destination: Address128 = EIGRP_MULTICAST
    init: bool = False

    @classmethod
    def hello(cls, as_number: int, sender: Address128, k: KValues, hold_time_s: int) -> "EigrpPacket":
        return cls(PacketKind.HELLO, as_number, sender, k_values=k, hold_time_s=hold_time_s)

    @property
    def goodbye(self) -> bool:
        return self.kind is PacketKind.HELLO and self.k_values == GOODBYE_K

    def to_text(self, k: KValues = DEFAULT_K) -> str:
        """The trace form: ``EIGRP <kind> as=<n> seq=<n> ack=<n> routes=[p@m,...]``."""
        routes = ",".join(
            f"{p}@{'inf' if v.unreachable else composite(v, k)}" for p, v in self.routes
        )
        text = f"EIGRP {self.kind.value} as={self.as_number} seq={self.seq} ack={self.ack} routes=[{routes}]"
        if self.init:
            text += " init"
        if self.goodbye:
            text += " goodbye"
        return text


@dataclass
class TimerConfig:
    hello_interval_s: int = 5
    hold_time_s: int = 15

    def __post_init__(self):
        if self.hold_time_s < self.hello_interval_s:
            log.warning(
                "hold time %ss is shorter than hello interval %ss",
                self.hold_time_s,
                self.hello_interval_s,
            )


def update_rtt(srtt_ms: int, sample_ms: int, first: bool) -> Tuple[int, int]:
    """Smoothed RTT and retransmission timeout after one RTT sample."""
    # floor(0.9 * srtt + 0.1 * sample), kept in integers
    srtt = sample_ms if first else (9 * srtt_ms + sample_ms) // 10
    rto = min(max(6 * srtt, RTO_MIN_MS), RTO_MAX_MS)
    return srtt, rto


@dataclass
class Neighbor:
    handle: int
    peer_link_local: Address128
    interface: str
    hold_time_s: int
    hold_expires_ms: int
    uptime_start_ms: int
    srtt_ms: int = 0
    rto_ms: int = RTO_MIN_MS
    last_seq_seen: int = 0
    rtt_samples: int = 0
    queue: Deque[EigrpPacket] = field(default_factory=deque)
    # head-of-queue transmission bookkeeping
    head_sent_ms: int = 0
    head_retransmits: int = 0
    generation: int = 0

    @property
    def key(self) -> NeighborId:
        return NeighborId(self.peer_link_local, self.interface)

    @property
    def queue_count(self) -> int:
        return len(self.queue)

    def hold_remaining_s(self, now_ms: int) -> float:
        return (self.hold_expires_ms - now_ms) / 1000.0


class NeighborTable:
    """Adjacencies of one EIGRP process."""

    def __init__(self, as_number: int, k: KValues = DEFAULT_K):
        self.as_number = as_number
        self.k = k
        self.entries: Dict[NeighborId, Neighbor] = {}
        self.as_mismatches = 0
        self.k_mismatches = 0
        self._generation = 0

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries.values())

    def get(self, nid: NeighborId) -> Optional[Neighbor]:
        return self.entries.get(nid)

    def on_interface(self, interface: str) -> List[Neighbor]:
        return [n for n in self.entries.values() if n.interface == interface]

    def _free_handle(self) -> int:
        used = {n.handle for n in self.entries.values()}
        h = 0
        while h in used:
            h += 1
        return h

    def on_hello(self, interface: str, pkt: EigrpPacket, now_ms: int) -> Tuple[Optional[Neighbor], bool]:
        """Process a Hello.  Returns (neighbor, created); neighbor is None if ignored."""
        if pkt.as_number != self.as_number:
            self.as_mismatches += 1
            return None, False
        if pkt.k_values != self.k:
            self.k_mismatches += 1
            return None, False
        nid = NeighborId(pkt.sender, interface)
        hold = pkt.hold_time_s if pkt.hold_time_s is not None else 15
        nbr = self.entries.get(nid)
        if nbr is not None:
            nbr.hold_time_s = hold
            nbr.hold_expires_ms = now_ms + hold * 1000
            return nbr, False
        self._generation += 1
        nbr = Neighbor(
            handle=self._free_handle(),
            peer_link_local=pkt.sender,
            interface=interface,
            hold_time_s=hold,
            hold_expires_ms=now_ms + hold * 1000,
            uptime_start_ms=now_ms,
            generation=self._generation,
        )
        self.entries[nid] = nbr
        return nbr, True

    def expire_hold(self, now_ms: int) -> List[Neighbor]:
        """Remove and return every neighbor whose hold timer has run out."""
        lost = [n for n in self.entries.values() if n.hold_expires_ms <= now_ms]
        for n in lost:
            del self.entries[n.key]
        return lost

    def remove(self, nid: NeighborId) -> Optional[Neighbor]:
        return self.entries.pop(nid, None)


class ReliableTransport:
    """Sequencing, acknowledgment and retransmission for one router.

    ``send`` puts a packet on the wire toward one neighbor, ``schedule``
    arms a virtual-time callback, and ``reset`` is told about neighbors
    that exhausted their retransmissions.
    """

    def __init__(
        self,
        send: Callable[[Neighbor, EigrpPacket], None],
        schedule: Callable[[int, Callable[[], None], str], None],
        now: Callable[[], int],
        reset: Callable[[Neighbor], None],
    ):
        self._send = send
        self._schedule = schedule
        self._now = now
        self._reset = reset
        self.seq = 0
        self.retransmissions = 0

    def next_seq(self) -> int:
        self.seq += 1
        return self.seq

    def send_reliable(self, packets: Sequence[EigrpPacket], targets: Sequence[Neighbor]) -> List[EigrpPacket]:
        """Give each packet the next sequence number and queue it to every target."""
        stamped = []
        for pkt in packets:
            pkt = replace(pkt, seq=self.next_seq())
            stamped.append(pkt)
            for nbr in targets:
                self._enqueue(nbr, replace(pkt, destination=nbr.peer_link_local))
        return stamped

    def _enqueue(self, nbr: Neighbor, pkt: EigrpPacket) -> None:
        nbr.queue.append(pkt)
        if len(nbr.queue) == 1:
            self._transmit_head(nbr)

    def _transmit_head(self, nbr: Neighbor) -> None:
        pkt = nbr.queue[0]
        nbr.head_sent_ms = self._now()
        nbr.head_retransmits = 0
        self._send(nbr, pkt)
        self._arm(nbr, pkt.seq)

    def _arm(self, nbr: Neighbor, seq: int) -> None:
        gen = nbr.generation
        self._schedule(
            nbr.rto_ms,
            lambda: self._on_timeout(nbr, seq, gen),
            f"rto {nbr.peer_link_local.upper()} seq={seq}",
        )

    def _on_timeout(self, nbr: Neighbor, seq: int, gen: int) -> None:
        if nbr.generation != gen or not nbr.queue or nbr.queue[0].seq != seq:
            return
        if nbr.head_retransmits >= MAX_RETRANSMITS:
            self._reset(nbr)
            return
        nbr.head_retransmits += 1
        self.retransmissions += 1
        self._send(nbr, nbr.queue[0])
        self._arm(nbr, seq)

    def on_ack(self, nbr: Neighbor, ack_seq: int) -> bool:
        """Clear the head packet if ``ack_seq`` acknowledges it."""
        if not nbr.queue or nbr.queue[0].seq != ack_seq:
            return False
        if nbr.head_retransmits == 0:
            sample = self._now() - nbr.head_sent_ms
            nbr.srtt_ms, nbr.rto_ms = update_rtt(nbr.srtt_ms, sample, nbr.rtt_samples == 0)
            nbr.rtt_samples += 1
        nbr.queue.popleft()
        if nbr.queue:
            self._transmit_head(nbr)
        return True

    def drop(self, nbr: Neighbor) -> None:
        """Forget everything queued for a neighbor that went away."""
        nbr.queue.clear()
        nbr.generation = -1
