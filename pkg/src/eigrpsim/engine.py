"""Deterministic discrete-event engine, links, hosts and ping.

Virtual time is integer milliseconds.  Events run in (time, ordinal)
order, where the ordinal is handed out when the event is scheduled, so
two runs of the same scenario execute identically.
"""

from __future__ import annotations

import hashlib
import heapq
import itertools
import random
import zlib
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple, Union

from .ipv6 import Address128, Prefix, parse_address, parse_prefix, prefix_contains

__all__ = [
    "Simulator",
    "Link",
    "Host",
    "PingResult",
    "ping",
    "flow_hash",
    "SERIAL_DELAY_MS",
    "LAN_DELAY_MS",
]

SERIAL_DELAY_MS = 20
LAN_DELAY_MS = 1
HOP_BUDGET = 64

Label = Union[str, Callable[[], str]]


@dataclass
class Link:
    id: str
    kind: str  # "serial" | "lan"
    attachments: List[Tuple[str, str]]
    delay_ms: int
    up: bool = True
    generation: int = 0
    carrier: bool = True  # what the attached interfaces have been told

    def __post_init__(self):
        if self.kind == "serial" and len(self.attachments) != 2:
            raise ValueError(f"serial link {self.id} needs exactly 2 attachments")
        if self.kind == "lan" and len(self.attachments) < 1:
            raise ValueError(f"lan link {self.id} needs at least one attachment")
        if self.kind not in ("serial", "lan"):
            raise ValueError(f"unknown link kind {self.kind!r}")

    def peers(self, node: str, iface: str) -> List[Tuple[str, str]]:
        return [a for a in self.attachments if a != (node, iface)]


class Host:
    """A single-interface end system (the PCs behind the switches)."""

    def __init__(self, name: str, address: Address128, prefix: Prefix, iface: str = "eth0"):
        self.name = name
        self.address = address
        self.prefix = prefix
        self.iface = iface
        self.sim: Optional["Simulator"] = None

    @classmethod
    def from_text(cls, name: str, text: str, iface: str = "eth0") -> "Host":
        prefix, _ = parse_prefix(text)
        return cls(name, parse_address(text.split("/")[0]), prefix, iface)

    def addresses(self) -> List[Address128]:
        return [self.address]

    def receive(self, iface: str, packet) -> None:
        pass

    def carrier_change(self, iface: str, up: bool) -> None:
        pass


class Simulator:
    def __init__(self, trace: bool = True, hello_jitter: float = 0.0, seed: int = 0):
        self.now = 0
        # fraction of the hello interval; 0 keeps hellos on an exact cadence
        self.hello_jitter = hello_jitter
        self.rng = random.Random(seed)
        self._queue: list = []
        self._ordinal = itertools.count()
        self.tracing = trace
        self.trace: List[str] = []
        self._digest = hashlib.sha256()
        self.event_count = 0
        self.nodes: Dict[str, object] = {}
        self.links: Dict[str, Link] = {}
        self._attach: Dict[Tuple[str, str], Link] = {}
        self.after_event: List[Callable[["Simulator"], None]] = []
        self.after_instant: List[Callable[["Simulator"], None]] = []
        self.rib_changes: List[Tuple[int, str]] = []

    # topology -----------------------------------------------------------

    def add_node(self, node) -> None:
        if node.name in self.nodes:
            raise ValueError(f"duplicate node {node.name}")
        self.nodes[node.name] = node
        node.sim = self

    def add_link(self, link: Link) -> None:
        if link.id in self.links:
            raise ValueError(f"duplicate link id {link.id}")
        for att in link.attachments:
            if att in self._attach:
                raise ValueError(f"{att[0]}:{att[1]} is already attached to {self._attach[att].id}")
        self.links[link.id] = link
        for att in link.attachments:
            self._attach[att] = link

    def link_of(self, node: str, iface: str) -> Optional[Link]:
        return self._attach.get((node, iface))

    def links_up(self, node: str, iface: str) -> bool:
        link = self._attach.get((node, iface))
        return link is not None and link.up

    def carrier(self, node: str, iface: str) -> bool:
        link = self._attach.get((node, iface))
        return True if link is None else link.carrier

    # scheduling -----------------------------------------------------------

    def schedule(self, delay_ms: int, fn: Callable[[], None], label: Label = "", node: str = "-") -> None:
        if delay_ms < 0:
            raise ValueError("cannot schedule into the past")
        heapq.heappush(self._queue, (self.now + delay_ms, next(self._ordinal), node, label, fn))

    def at(self, time_ms: int, fn: Callable[[], None], label: Label = "", node: str = "-") -> None:
        self.schedule(time_ms - self.now, fn, label, node)

    def hello_delay(self, interval_ms: int) -> int:
        if not self.hello_jitter:
            return interval_ms
        j = self.hello_jitter
        return max(1, round(interval_ms * (1 + self.rng.uniform(-j, j))))

    def pending(self) -> int:
        return len(self._queue)

    def step(self) -> None:
        t, _, node, label, fn = heapq.heappop(self._queue)
        self.now = t
        self.event_count += 1
        if self.tracing:
            text = label() if callable(label) else label
            line = f"[t={t}] {node} {text}"
            self.trace.append(line)
            self._digest.update(line.encode())
            self._digest.update(b"\n")
        fn()
        for hook in self.after_event:
            hook(self)
        if self.after_instant and (not self._queue or self._queue[0][0] != t):
            for hook in self.after_instant:
                hook(self)

    def run(self, until_ms: int) -> None:
        """Process every event with time <= ``until_ms``; the clock ends there."""
        while self._queue and self._queue[0][0] <= until_ms:
            self.step()
        self.now = max(self.now, until_ms)

    def trace_hash(self) -> str:
        return self._digest.hexdigest()

    # data plane -----------------------------------------------------------

    def transmit(self, node: str, iface: str, packet) -> None:
        """Put a packet on the link behind ``node:iface``."""
        link = self._attach.get((node, iface))
        if link is None or not link.up:
            return
        gen = link.generation
        for peer, peer_iface in link.peers(node, iface):
            target = self.nodes[peer]

            def deliver(target=target, peer_iface=peer_iface):
                if link.up and link.generation == gen:
                    target.receive(peer_iface, packet)

            self.schedule(
                link.delay_ms,
                deliver,
                lambda p=packet, i=peer_iface: f"recv {i} {p.to_text()}",
                peer,
            )

    def set_link(self, link_id: str, up: bool, silent: bool = False) -> None:
        link = self.links[link_id]
        if link.up == up:
            return
        link.up = up
        link.generation += 1
        if silent:
            return
        link.carrier = up
        for node, iface in link.attachments:
            self.nodes[node].carrier_change(iface, up)

    def note_rib_change(self, node: str) -> None:
        self.rib_changes.append((self.now, node))

    def routers(self):
        from .router import Router

        return [n for n in self.nodes.values() if isinstance(n, Router)]


def flow_hash(src: Optional[Address128], dst: Address128) -> int:
    """A stable (unsalted) hash for picking among equal-cost paths."""
    data = (src.octets if src is not None else b"") + dst.octets
    return zlib.crc32(data)


@dataclass
class PingResult:
    success: bool
    rtt_ms: int = 0
    hops: List[str] = field(default_factory=list)
    reason: str = ""

    def __str__(self) -> str:
        if self.success:
            return f"Success rtt={self.rtt_ms}ms path={'->'.join(self.hops)}"
        return f"Fail({self.reason})"


def _owner_on_link(sim: Simulator, link: Link, exclude: Tuple[str, str], predicate) -> Optional[Tuple[str, str]]:
    for node_name, iface in link.attachments:
        if (node_name, iface) == exclude:
            continue
        if predicate(sim.nodes[node_name], iface):
            return node_name, iface
    return None


def ping(sim: Simulator, src: str, dest: Address128) -> PingResult:
    """Walk the forwarding state hop by hop from ``src`` toward ``dest``."""
    from .router import Router, Unreachable

    node = sim.nodes[src]
    src_addr = node.addresses()[0] if node.addresses() else None
    hops = [src]
    one_way = 0
    for _ in range(HOP_BUDGET):
        if dest in node.addresses():
            return PingResult(True, 2 * one_way, hops)
        if isinstance(node, Router):
            try:
                fwd = node.forward_lookup(dest, src_addr)
            except Unreachable:
                return PingResult(False, hops=hops, reason=f"Unreachable at {node.name}")
            if fwd.local:
                return PingResult(True, 2 * one_way, hops)
            out_iface, next_hop = fwd.interface, fwd.next_hop
        else:
            out_iface = node.iface
            if prefix_contains(node.prefix, dest):
                next_hop = dest
            else:
                gw = _gateway(sim, node)
                if gw is None:
                    return PingResult(False, hops=hops, reason=f"no gateway at {node.name}")
                next_hop = gw
        link = sim.link_of(node.name, out_iface)
        if link is None or not link.up:
            return PingResult(False, hops=hops, reason=f"link down at {node.name}")
        found = _owner_on_link(
            sim, link, (node.name, out_iface), lambda n, i: _answers_for(n, i, next_hop)
        )
        if found is None:
            return PingResult(False, hops=hops, reason=f"next hop {next_hop.upper()} not on link at {node.name}")
        one_way += link.delay_ms
        node = sim.nodes[found[0]]
        hops.append(node.name)
    return PingResult(False, hops=hops, reason="forwarding loop")


def _answers_for(node, iface: str, addr: Address128) -> bool:
    if isinstance(node, Host):
        return node.address == addr
    intf = node.interfaces.get(iface)
    if intf is None:
        return False
    return addr == node.link_local(iface) or any(a == addr for a, _ in intf.addresses)


def _gateway(sim: Simulator, host: Host) -> Optional[Address128]:
    """The unique router on the host's LAN, addressed by its link-local."""
    from .router import Router

    link = sim.link_of(host.name, host.iface)
    if link is None:
        return None
    routers = [(n, i) for n, i in link.attachments if isinstance(sim.nodes[n], Router)]
    if len(routers) != 1:
        return None
    name, iface = routers[0]
    return sim.nodes[name].link_local(iface)
