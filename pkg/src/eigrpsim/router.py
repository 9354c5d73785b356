"""A virtual router running one EIGRP-for-IPv6 process."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .dual import (
    CONNECTED,
    INTERNAL_DISTANCE,
    DualEngine,
    DualState,
    Emission,
    NeighborId,
)
from .engine import Simulator, flow_hash
from .ipv6 import UNSPECIFIED, Address128, Prefix, longest_prefix_match, parse_address
from .metric import DEFAULT_K, InterfaceKind, KValues, connected_vector
from .neighbor import (
    GOODBYE_K,
    EigrpPacket,
    Neighbor,
    NeighborTable,
    PacketKind,
    ReliableTransport,
)

__all__ = [
    "InterfaceState",
    "EigrpProcess",
    "GateReason",
    "Gate",
    "RibEntry",
    "Forward",
    "Router",
    "Unreachable",
    "interface_kind",
    "normalize_interface_name",
    "process_gate",
    "rebuild_rib",
    "forward_lookup",
    "MULTICAST_PREFIX",
    "ACTIVE_TIMER_MS",
]

log = logging.getLogger(__name__)

MULTICAST_PREFIX = Prefix(parse_address("FF00::"), 8)
ACTIVE_TIMER_MS = 180_000
LINK_LOCAL_BASE = int(parse_address("FE80::"))


class Unreachable(LookupError):
    pass


def interface_kind(name: str) -> InterfaceKind:
    for kind in InterfaceKind:
        if name.startswith(kind.full_name):
            return kind
    raise ValueError(f"unsupported interface type: {name!r}")


def normalize_interface_name(text: str) -> str:
    """``Fastethernet0/0`` / ``fa0/0`` / ``FastEthernet 0/0`` -> ``FastEthernet0/0``."""
    s = text.strip().replace(" ", "")
    i = 0
    while i < len(s) and s[i].isalpha():
        i += 1
    word, number = s[:i].lower(), s[i:]
    if not word or not number or not all(c.isdigit() or c in "/." for c in number):
        raise ValueError(f"bad interface name {text!r}")
    matches = [k.full_name for k in InterfaceKind if k.full_name.lower().startswith(word)]
    if len(matches) != 1:
        raise ValueError(f"unknown interface type {text!r}")
    return matches[0] + number


@dataclass
class InterfaceState:
    name: str
    kind: InterfaceKind
    admin_up: bool = False
    ipv6_enabled: bool = False
    addresses: List[Tuple[Address128, int]] = field(default_factory=list)
    configured_link_local: Optional[Address128] = None
    eigrp_as: Optional[int] = None
    bandwidth_kbps: Optional[int] = None
    delay_usec: Optional[int] = None
    clock_rate: Optional[int] = None
    hello_interval_s: int = 5
    hold_time_s: int = 15
    timer_as: Optional[int] = None  # AS named in the hello/hold commands

    @property
    def bandwidth(self) -> int:
        return self.kind.bandwidth if self.bandwidth_kbps is None else self.bandwidth_kbps

    @property
    def delay(self) -> int:
        return self.kind.delay if self.delay_usec is None else self.delay_usec

    @property
    def short_name(self) -> str:
        return self.kind.short_name + self.name[len(self.kind.full_name):]

    def prefixes(self) -> List[Prefix]:
        seen = []
        for addr, plen in self.addresses:
            p = Prefix(addr, plen)
            if p not in seen:
                seen.append(p)
        return seen


@dataclass
class EigrpProcess:
    as_number: int
    router_id: Optional[str] = None
    shutdown: bool = True
    variance: int = 1
    max_paths: int = 16
    max_hopcount: int = 100
    k: KValues = DEFAULT_K


class GateReason(enum.Enum):
    NO_PROCESS = "NoProcess"
    NO_UNICAST_ROUTING = "NoUnicastRouting"
    NO_ROUTER_ID = "NoRouterId"
    SHUTDOWN = "Shutdown"


@dataclass(frozen=True)
class Gate:
    running: bool
    reason: Optional[GateReason] = None

    def __str__(self) -> str:
        return "Running" if self.running else f"Blocked({self.reason.value})"


@dataclass(frozen=True)
class RibEntry:
    code: str  # C | L | D | EX
    prefix: Prefix
    admin_distance: int
    metric: int
    next_hop: Address128
    interface: str
    paths: Tuple[Tuple[Address128, str], ...] = ()

    def sort_key(self):
        return self.prefix.sort_key()


@dataclass(frozen=True)
class Forward:
    interface: str
    next_hop: Address128
    local: bool = False


class Router:
    def __init__(self, name: str, sim: Optional[Simulator] = None, index: int = 1):
        self.name = name
        self.hostname = name
        self.index = index
        self.unicast_routing = False
        self.interfaces: Dict[str, InterfaceState] = {}
        self.process: Optional[EigrpProcess] = None
        self.sim = None
        if sim is not None:
            sim.add_node(self)
        # runtime state, present only while the process runs
        self.dual: Optional[DualEngine] = None
        self.neighbors: Optional[NeighborTable] = None
        self.transport: Optional[ReliableTransport] = None
        self._running_params = None
        self._eigrp_ifaces: Dict[str, int] = {}  # interface -> hello timer generation
        self._connected: Dict[Prefix, str] = {}
        self._timer_gen = 0
        self.rib: List[RibEntry] = []
        self.rib_changed_at: Optional[int] = None
        self.lost_log: List[Tuple[int, NeighborId, str]] = []
        self.unknown_source_drops = 0
        self._seq = 0

    # ------------------------------------------------------------------
    # configuration-facing helpers

    def interface(self, name: str, create: bool = True) -> InterfaceState:
        name = normalize_interface_name(name)
        intf = self.interfaces.get(name)
        if intf is None:
            if not create:
                raise KeyError(name)
            intf = InterfaceState(name, interface_kind(name))
            self.interfaces[name] = intf
        return intf

    def link_local(self, iface: str) -> Address128:
        intf = self.interfaces[iface]
        if intf.configured_link_local is not None:
            return intf.configured_link_local
        return Address128.from_int(LINK_LOCAL_BASE | self.index)

    def addresses(self) -> List[Address128]:
        out = []
        for intf in self.interfaces.values():
            out.extend(a for a, _ in intf.addresses)
        return out

    def oper_up(self, intf: InterfaceState) -> bool:
        carrier = True if self.sim is None else self.sim.carrier(self.name, intf.name)
        return intf.admin_up and carrier

    @property
    def now(self) -> int:
        return 0 if self.sim is None else self.sim.now

    # ------------------------------------------------------------------
    # process lifecycle

    def process_gate(self) -> Gate:
        if self.process is None:
            return Gate(False, GateReason.NO_PROCESS)
        if not self.unicast_routing:
            return Gate(False, GateReason.NO_UNICAST_ROUTING)
        if not self.process.router_id:
            return Gate(False, GateReason.NO_ROUTER_ID)
        if self.process.shutdown:
            return Gate(False, GateReason.SHUTDOWN)
        return Gate(True)

    @property
    def running(self) -> bool:
        return self.dual is not None

    def eligible(self, intf: InterfaceState) -> bool:
        return (
            self.process is not None
            and intf.eigrp_as == self.process.as_number
            and intf.ipv6_enabled
            and self.oper_up(intf)
        )

    def refresh(self) -> None:
        """Bring runtime state in line with configuration and carrier."""
        gate = self.process_gate()
        params = None
        if gate.running:
            p = self.process
            params = (p.as_number, p.k, p.max_hopcount)
        if self.dual is not None and params != self._running_params:
            self._stop()
        if gate.running and self.dual is None:
            self._start(params)
        if self.dual is not None:
            p = self.process
            if (self.dual.variance, self.dual.max_paths) != (p.variance, p.max_paths):
                self.dual.variance, self.dual.max_paths = p.variance, p.max_paths
                self._recompute_all()
            want = [n for n, i in self.interfaces.items() if self.eligible(i)]
            for name in [n for n in self._eigrp_ifaces if n not in want]:
                self._leave(name)
            for name in want:
                if name not in self._eigrp_ifaces:
                    self._join(name)
                else:
                    self._check_link_params(name)
            self._sync_connected()
        self._settle()

    @property
    def _as(self) -> int:
        return self._running_params[0]

    def _settle(self) -> None:
        self._arm_active_timers()
        self._rebuild_rib()

    def _start(self, params) -> None:
        p = self.process
        self._running_params = params
        self.dual = DualEngine(k=p.k, variance=p.variance, max_paths=p.max_paths, max_hopcount=p.max_hopcount)
        self.neighbors = NeighborTable(p.as_number, p.k)
        self.transport = ReliableTransport(
            send=self._send_to_neighbor,
            schedule=lambda d, fn, label: self.sim.schedule(d, fn, label, self.name),
            now=lambda: self.now,
            reset=self._retry_exhausted,
        )
        self.transport.seq = self._seq
        self._link_params: Dict[str, Tuple[int, int]] = {}
        log.info("%s: EIGRP %d running", self.name, p.as_number)

    def _stop(self) -> None:
        for name in list(self._eigrp_ifaces):
            self._leave(name)
        self._seq = self.transport.seq
        self.dual = self.neighbors = self.transport = None
        self._running_params = None
        self._connected = {}
        log.info("%s: EIGRP stopped", self.name)

    def _join(self, name: str) -> None:
        self._timer_gen += 1
        self._eigrp_ifaces[name] = self._timer_gen
        intf = self.interfaces[name]
        self._link_params[name] = (intf.bandwidth, intf.delay)
        self._hello(name, self._timer_gen)

    def _leave(self, name: str) -> None:
        del self._eigrp_ifaces[name]
        self._link_params.pop(name, None)
        if self.sim is not None and self.oper_up(self.interfaces[name]):
            bye = EigrpPacket.hello(self._as, self.link_local(name), GOODBYE_K, 0)
            self.sim.transmit(self.name, name, bye)
        for nbr in self.neighbors.on_interface(name):
            self._lose(nbr.key, "interface down")
        for prefix in [p for p, i in self._connected.items() if i == name]:
            del self._connected[prefix]
            self._dispatch(self.dual.connected_remove(prefix))

    def _check_link_params(self, name: str) -> None:
        intf = self.interfaces[name]
        new = (intf.bandwidth, intf.delay)
        if self._link_params.get(name) != new:
            self._link_params[name] = new
            self._dispatch(self.dual.link_change(name, *new))
            for prefix, iface in self._connected.items():
                if iface == name:
                    self._dispatch(self.dual.connected_add(prefix, name, connected_vector(*new)))

    def _sync_connected(self) -> None:
        want: Dict[Prefix, str] = {}
        for name in self._eigrp_ifaces:
            for prefix in self.interfaces[name].prefixes():
                want.setdefault(prefix, name)
        for prefix in [p for p in self._connected if want.get(p) != self._connected[p]]:
            del self._connected[prefix]
            self._dispatch(self.dual.connected_remove(prefix))
        for prefix, name in want.items():
            if prefix not in self._connected:
                self._connected[prefix] = name
                intf = self.interfaces[name]
                vec = connected_vector(intf.bandwidth, intf.delay)
                self._dispatch(self.dual.connected_add(prefix, name, vec))

    def _recompute_all(self) -> None:
        for dest, entry in list(self.dual.topology.items()):
            if entry.state is DualState.PASSIVE and dest in self.dual.topology:
                _, out = self.dual.local_compute(dest)
                self._dispatch(out)

    # ------------------------------------------------------------------
    # hellos and adjacencies

    def _hello(self, name: str, gen: int) -> None:
        # a router outside any simulator keeps its state but never talks
        if self.sim is None or self._eigrp_ifaces.get(name) != gen:
            return
        intf = self.interfaces[name]
        pkt = EigrpPacket.hello(self._as, self.link_local(name), self.dual.k, intf.hold_time_s)
        self.sim.transmit(self.name, name, pkt)
        self.sim.schedule(
            self.sim.hello_delay(intf.hello_interval_s * 1000),
            lambda: self._hello(name, gen),
            f"timer hello {name}",
            self.name,
        )

    def restart_hello(self, name: str) -> None:
        """Apply a changed hello interval from now on."""
        if name in self._eigrp_ifaces and self.sim is not None:
            self._timer_gen += 1
            self._eigrp_ifaces[name] = self._timer_gen
            intf = self.interfaces[name]
            gen = self._timer_gen
            self.sim.schedule(
                self.sim.hello_delay(intf.hello_interval_s * 1000),
                lambda: self._hello(name, gen),
                f"timer hello {name}",
                self.name,
            )

    def receive(self, iface: str, pkt: EigrpPacket) -> None:
        if self.dual is None or iface not in self._eigrp_ifaces:
            return
        if not isinstance(pkt, EigrpPacket):
            return
        if pkt.kind is not PacketKind.HELLO and pkt.destination != self.link_local(iface):
            return  # unicast for someone else on the segment
        if pkt.kind is PacketKind.HELLO:
            self._on_hello(iface, pkt)
        elif pkt.kind is PacketKind.ACK:
            nbr = self.neighbors.get(NeighborId(pkt.sender, iface))
            if nbr is not None:
                self.transport.on_ack(nbr, pkt.ack)
        else:
            self._on_sequenced(iface, pkt)
        self._settle()

    def _on_hello(self, iface: str, pkt: EigrpPacket) -> None:
        nid = NeighborId(pkt.sender, iface)
        if pkt.goodbye:
            if self.neighbors.get(nid) is not None:
                self._lose(nid, "peer goodbye")
            return
        nbr, created = self.neighbors.on_hello(iface, pkt, self.now)
        if nbr is None:
            return
        expires = nbr.hold_expires_ms
        self.sim.schedule(
            nbr.hold_time_s * 1000,
            lambda: self._hold_check(nid, expires),
            f"timer hold {nid}",
            self.name,
        )
        if created:
            log.info("%s: neighbor %s up", self.name, nid)
            self._adjacency_up(nbr)

    def _adjacency_up(self, nbr: Neighbor) -> None:
        intf = self.interfaces[nbr.interface]
        out = self.dual.add_neighbor(nbr.key, intf.bandwidth, intf.delay)
        routes = tuple((e.destination, e.vector) for e in out)
        init = EigrpPacket(PacketKind.UPDATE, self._as, self.link_local(nbr.interface),
                           routes=routes, init=True)
        self.transport.send_reliable([init], [nbr])

    def _hold_check(self, nid: NeighborId, expires: int) -> None:
        nbr = self.neighbors.get(nid) if self.neighbors is not None else None
        if nbr is None or nbr.hold_expires_ms != expires:
            return
        self._lose(nid, "hold time expired")
        self._settle()

    def _retry_exhausted(self, nbr: Neighbor) -> None:
        self._lose(nbr.key, "retry limit exceeded")
        self._settle()

    def _lose(self, nid: NeighborId, reason: str) -> None:
        nbr = self.neighbors.remove(nid)
        if nbr is None:
            return
        self.transport.drop(nbr)
        self.lost_log.append((self.now, nid, reason))
        log.info("%s: neighbor %s down (%s)", self.name, nid, reason)
        self._dispatch(self.dual.on_neighbor_lost(nid))

    def carrier_change(self, iface: str, up: bool) -> None:
        self.refresh()

    # ------------------------------------------------------------------
    # reliable packets

    def _send_to_neighbor(self, nbr: Neighbor, pkt: EigrpPacket) -> None:
        self.sim.transmit(self.name, nbr.interface, pkt)

    def _on_sequenced(self, iface: str, pkt: EigrpPacket) -> None:
        nid = NeighborId(pkt.sender, iface)
        nbr = self.neighbors.get(nid)
        if nbr is None:
            self.unknown_source_drops += 1
            return
        if pkt.init and nbr.last_seq_seen and pkt.seq > nbr.last_seq_seen:
            # the peer restarted its side of the adjacency; sequence numbers
            # survive restarts, so a replayed init is just a duplicate
            hold = nbr.hold_expires_ms
            self._lose(nid, "peer restarted")
            fake = EigrpPacket.hello(pkt.as_number, pkt.sender, self.dual.k, nbr.hold_time_s)
            nbr, _ = self.neighbors.on_hello(iface, fake, self.now)
            nbr.hold_expires_ms = hold
            self._adjacency_up(nbr)
        ack = EigrpPacket(PacketKind.ACK, self._as, self.link_local(iface),
                          ack=pkt.seq, destination=pkt.sender)
        self.sim.transmit(self.name, iface, ack)
        if pkt.seq <= nbr.last_seq_seen:
            return
        nbr.last_seq_seen = pkt.seq
        handler = {
            PacketKind.UPDATE: self.dual.on_update,
            PacketKind.QUERY: self.dual.on_query,
            PacketKind.REPLY: self.dual.on_reply,
        }[pkt.kind]
        out: List[Emission] = []
        for prefix, vec in pkt.routes:
            out.extend(handler(prefix, nid, vec))
        self._dispatch(out)

    def _dispatch(self, emissions: List[Emission]) -> None:
        """Pack emissions into one packet per (neighbor, run of same kind)."""
        if not emissions:
            return
        per_nbr: Dict[NeighborId, List[Tuple[str, Dict[Prefix, object]]]] = {}
        for e in emissions:
            runs = per_nbr.setdefault(e.neighbor, [])
            if runs and runs[-1][0] == e.kind:
                runs[-1][1].pop(e.destination, None)
                runs[-1][1][e.destination] = e.vector
            else:
                runs.append((e.kind, {e.destination: e.vector}))
        kinds = {"update": PacketKind.UPDATE, "query": PacketKind.QUERY, "reply": PacketKind.REPLY}
        for nid in sorted(per_nbr):
            nbr = self.neighbors.get(nid)
            if nbr is None:
                continue
            for kind, routes in per_nbr[nid]:
                pkt = EigrpPacket(kinds[kind], self._as, self.link_local(nid.interface),
                                  routes=tuple(routes.items()))
                self.transport.send_reliable([pkt], [nbr])

    def _arm_active_timers(self) -> None:
        if self.dual is None or not self.dual.went_active:
            return
        pending, self.dual.went_active = self.dual.went_active, []
        dual = self.dual
        for dest, active_id in pending:
            self.sim.schedule(
                ACTIVE_TIMER_MS,
                lambda dest=dest, active_id=active_id: self._active_timeout(dual, dest, active_id),
                f"timer active {dest}",
                self.name,
            )

    def _active_timeout(self, dual: DualEngine, dest: Prefix, active_id: int) -> None:
        if dual is not self.dual:
            return
        entry = dual.topology.get(dest)
        if entry is None or entry.state is not DualState.ACTIVE or entry.active_id != active_id:
            return
        for nid in sorted(entry.reply_pending):
            self._lose(nid, "stuck in active")
        self._settle()

    # ------------------------------------------------------------------
    # routing table and forwarding

    def rebuild_rib(self) -> List[RibEntry]:
        entries: Dict[Prefix, RibEntry] = {}
        for intf in self.interfaces.values():
            if not (intf.ipv6_enabled and self.oper_up(intf)):
                continue
            for addr, plen in intf.addresses:
                c = Prefix(addr, plen)
                entries.setdefault(c, RibEntry("C", c, 0, 0, UNSPECIFIED, intf.name))
                host = Prefix(addr, 128)
                entries.setdefault(host, RibEntry("L", host, 0, 0, UNSPECIFIED, intf.name))
        if self.unicast_routing:
            entries.setdefault(
                MULTICAST_PREFIX, RibEntry("L", MULTICAST_PREFIX, 0, 0, UNSPECIFIED, "Null0")
            )
        if self.dual is not None:
            for inst in self.dual.installations():
                if inst.destination in entries:
                    continue
                first = inst.paths[0]
                entries[inst.destination] = RibEntry(
                    "D",
                    inst.destination,
                    INTERNAL_DISTANCE,
                    first.metric,
                    first.next_hop,
                    first.interface,
                    tuple((p.next_hop, p.interface) for p in inst.paths),
                )
        return sorted(entries.values(), key=RibEntry.sort_key)

    def _rebuild_rib(self) -> None:
        rib = self.rebuild_rib()
        if rib != self.rib:
            self.rib = rib
            self.rib_changed_at = self.now
            if self.sim is not None:
                self.sim.note_rib_change(self.name)

    def forward_lookup(self, dest: Address128, src: Optional[Address128] = None) -> Forward:
        hit = longest_prefix_match(((e.prefix, e) for e in self.rib), dest)
        if hit is None:
            raise Unreachable(f"{self.name}: no route to {dest.upper()}")
        entry = hit[1]
        if entry.interface == "Null0":
            raise Unreachable(f"{self.name}: {dest.upper()} is discarded")
        if entry.code == "L":
            return Forward(entry.interface, dest, local=True)
        if entry.code == "C":
            return Forward(entry.interface, dest)
        paths = entry.paths or ((entry.next_hop, entry.interface),)
        nh, iface = paths[flow_hash(src, dest) % len(paths)]
        return Forward(iface, nh)

    # ------------------------------------------------------------------

    def successor_router_edge(self, dest: Prefix) -> Optional[NeighborId]:
        if self.dual is None:
            return None
        s = self.dual.primary_successor(dest)
        return None if s is None or s is CONNECTED else s

    def __repr__(self) -> str:
        return f"Router({self.name!r})"


def process_gate(node: Router) -> Gate:
    return node.process_gate()


def rebuild_rib(node: Router) -> List[RibEntry]:
    return node.rebuild_rib()


def forward_lookup(node: Router, dest: Address128, src: Optional[Address128] = None) -> Forward:
    return node.forward_lookup(dest, src)
