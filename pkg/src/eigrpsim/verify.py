"""Ground truth for the simulator: exhaustive shortest paths and loop checks."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from .config import apply, parse_config
from .dual import CONNECTED, DualState
from .engine import LAN_DELAY_MS, SERIAL_DELAY_MS, Link, Simulator
from .ipv6 import Prefix
from .metric import DEFAULT_K, KValues, MetricVector, composite, connected_vector
from .router import Router

__all__ = [
    "TopologyTooLarge",
    "RoutingLoop",
    "Adjacency",
    "TopologySnapshot",
    "snapshot",
    "oracle_distances",
    "converged_distances",
    "is_converged",
    "successor_edges",
    "find_loop",
    "LoopWatcher",
    "random_topology",
    "ORACLE_MAX_ROUTERS",
]

ORACLE_MAX_ROUTERS = 12


class TopologyTooLarge(ValueError):
    pass


class RoutingLoop(AssertionError):
    pass


@dataclass(frozen=True)
class Adjacency:
    """A usable router-to-router hop; ``bandwidth``/``delay`` are ``src``'s interface."""

    src: str
    dst: str
    bandwidth: int
    delay: int


@dataclass
class TopologySnapshot:
    routers: List[str] = field(default_factory=list)
    # router -> [(prefix, connected vector)]
    prefixes: Dict[str, List[Tuple[Prefix, MetricVector]]] = field(default_factory=dict)
    edges: List[Adjacency] = field(default_factory=list)
    k: KValues = DEFAULT_K


def snapshot(sim: Simulator) -> TopologySnapshot:
    """What EIGRP could use right now: running routers, their links and prefixes."""
    snap = TopologySnapshot()
    running: Dict[str, Router] = {}
    for r in sim.routers():
        if r.running:
            running[r.name] = r
            snap.k = r.dual.k
    snap.routers = sorted(running)
    for name, r in running.items():
        rows = []
        for iface in r._eigrp_ifaces:
            intf = r.interfaces[iface]
            for p in intf.prefixes():
                rows.append((p, connected_vector(intf.bandwidth, intf.delay)))
        snap.prefixes[name] = rows
    for link in sim.links.values():
        if not link.up:
            continue
        ends = [(n, i) for n, i in link.attachments if n in running and i in running[n]._eigrp_ifaces]
        for a_node, a_if in ends:
            for b_node, b_if in ends:
                if a_node == b_node:
                    continue
                intf = running[a_node].interfaces[a_if]
                snap.edges.append(Adjacency(a_node, b_node, intf.bandwidth, intf.delay))
    return snap


def oracle_distances(snap: TopologySnapshot) -> Dict[Tuple[str, Prefix], int]:
    """Minimum composite over every simple path, computed by brute force."""
    if len(snap.routers) > ORACLE_MAX_ROUTERS:
        raise TopologyTooLarge(f"{len(snap.routers)} routers (limit {ORACLE_MAX_ROUTERS})")
    out_edges: Dict[str, List[Adjacency]] = {r: [] for r in snap.routers}
    for e in snap.edges:
        out_edges[e.src].append(e)
    best: Dict[Tuple[str, Prefix], int] = {}

    def offer(src: str, owner: str, bw: Optional[int], delay: int) -> None:
        for prefix, vec in snap.prefixes.get(owner, []):
            if bw is None:
                total = vec
            else:
                total = MetricVector(min(bw, vec.bandwidth), delay + vec.delay)
            d = composite(total, snap.k)
            key = (src, prefix)
            if d < best.get(key, 2**64):
                best[key] = d

    for src in snap.routers:
        offer(src, src, None, 0)
        stack = [(src, None, 0, frozenset([src]))]
        while stack:
            node, bw, delay, seen = stack.pop()
            for e in out_edges[node]:
                if e.dst in seen:
                    continue
                nbw = e.bandwidth if bw is None else min(bw, e.bandwidth)
                ndelay = delay + e.delay
                offer(src, e.dst, nbw, ndelay)
                stack.append((e.dst, nbw, ndelay, seen | {e.dst}))
    return best


def converged_distances(sim: Simulator) -> Dict[Tuple[str, Prefix], int]:
    out = {}
    for r in sim.routers():
        if r.dual is None:
            continue
        for dest, entry in r.dual.topology.items():
            if entry.state is DualState.PASSIVE and entry.successors:
                out[(r.name, dest)] = entry.distance
    return out


def is_converged(sim: Simulator) -> bool:
    for r in sim.routers():
        if r.dual is None:
            continue
        if r.dual.active_destinations():
            return False
        if any(n.queue for n in r.neighbors):
            return False
    return True


def _peer_map(sim: Simulator) -> Dict[Tuple[str, str, object], str]:
    """(router, interface, neighbor link-local) -> neighbor router name."""
    peers = {}
    for link in sim.links.values():
        for a_node, a_if in link.attachments:
            for b_node, b_if in link.attachments:
                if a_node == b_node:
                    continue
                b = sim.nodes[b_node]
                if isinstance(b, Router) and b_if in b.interfaces:
                    peers[(a_node, a_if, b.link_local(b_if))] = b_node
    return peers


def successor_edges(sim: Simulator, peers=None, live_only: bool = True) -> Dict[Prefix, Dict[str, Set[str]]]:
    """Per destination, which routers each router currently forwards to.

    With ``live_only`` an edge over a link that is physically down is left
    out: a router that has not yet noticed a silent failure still lists the
    dead neighbor, but nothing it sends that way arrives anywhere.
    """
    peers = _peer_map(sim) if peers is None else peers
    graph: Dict[Prefix, Dict[str, Set[str]]] = {}
    for r in sim.routers():
        if r.dual is None:
            continue
        for dest, entry in r.dual.topology.items():
            for s in entry.successors:
                if s is CONNECTED:
                    continue
                if live_only and not sim.links_up(r.name, s.interface):
                    continue
                nxt = peers.get((r.name, s.interface, s.link_local))
                if nxt is not None:
                    graph.setdefault(dest, {}).setdefault(r.name, set()).add(nxt)
    return graph


def find_loop(graph: Dict[Prefix, Dict[str, Set[str]]]) -> Optional[Tuple[Prefix, List[str]]]:
    """A cycle in any destination's successor graph, or None."""
    for dest, adj in graph.items():
        color: Dict[str, int] = {}
        for start in sorted(adj):
            if start in color:
                continue
            path = [start]
            color[start] = 1
            stack = [iter(sorted(adj.get(start, ())))]
            while stack:
                nxt = next(stack[-1], None)
                if nxt is None:
                    stack.pop()
                    color[path.pop()] = 2
                    continue
                c = color.get(nxt)
                if c == 1:
                    return dest, path[path.index(nxt):] + [nxt]
                if c is None:
                    color[nxt] = 1
                    path.append(nxt)
                    stack.append(iter(sorted(adj.get(nxt, ()))))
    return None


class LoopWatcher:
    """Checks successor graphs for cycles after every event that changed one."""

    def __init__(self, sim: Simulator, live_only: bool = True):
        self.sim = sim
        self.live_only = live_only
        self.checks = 0
        self.loops: List[Tuple[int, Prefix, List[str]]] = []
        self._versions = None
        self._peers = _peer_map(sim)
        sim.after_event.append(self)

    def __call__(self, sim: Simulator) -> None:
        versions = tuple((id(r.dual), r.dual.version) for r in sim.routers() if r.dual is not None)
        if versions == self._versions:
            return
        self._versions = versions
        self.checks += 1
        hit = find_loop(successor_edges(sim, self._peers, self.live_only))
        if hit is not None:
            self.loops.append((sim.now, hit[0], hit[1]))


def random_topology(
    seed: int, trace: bool = False, min_routers: int = 3, max_routers: int = 8, hello_jitter: float = 0.0
) -> Simulator:
    """A connected random network of routers on default serial/FastEthernet links.

    Every router also has a stub LAN.  Default interface parameters keep
    the metric isotonic, so the converged distances must equal the oracle.
    """
    rng = random.Random(seed)
    n = rng.randint(min_routers, max_routers)
    pairs = set()
    for i in range(1, n):
        pairs.add((rng.randrange(i), i))
    for a in range(n):
        for b in range(a + 1, n):
            if (a, b) not in pairs and rng.random() < 0.25:
                pairs.add((a, b))
    sim = Simulator(trace=trace, hello_jitter=hello_jitter, seed=seed)
    routers = [Router(f"r{i}", sim, i + 1) for i in range(n)]
    cfg = {i: [] for i in range(n)}
    counters = {i: {"serial": 0, "fe": 0} for i in range(n)}
    for i in range(n):
        cfg[i] += [
            "ipv6 unicast-routing",
            "interface FastEthernet0/0",
            f" ipv6 address 2001:DB8:{i + 1:x}::1/64",
            " ipv6 eigrp 1",
            " no shutdown",
        ]
        sim.add_link(Link(f"stub{i}", "lan", [(f"r{i}", "FastEthernet0/0")], LAN_DELAY_MS))
    for j, (a, b) in enumerate(sorted(pairs)):
        kind = rng.choice(("serial", "fe"))
        ends = []
        for side, r in enumerate((a, b)):
            counters[r][kind] += 1
            k = counters[r][kind]
            iface = f"Serial0/0/{k - 1}" if kind == "serial" else f"FastEthernet0/{k}"
            ends.append((f"r{r}", iface))
            cfg[r] += [
                f"interface {iface}",
                f" ipv6 address 2001:DB8:{0x100 + j:x}::{side + 1}/64",
                " ipv6 eigrp 1",
                " no shutdown",
            ]
        if kind == "serial":
            sim.add_link(Link(f"l{j}", "serial", ends, SERIAL_DELAY_MS))
        else:
            sim.add_link(Link(f"l{j}", "lan", ends, LAN_DELAY_MS))
    for i, r in enumerate(routers):
        cfg[i] += ["ipv6 router eigrp 1", f" router-id {i + 1}.{i + 1}.{i + 1}.{i + 1}", " no shutdown"]
        apply(r, parse_config("\n".join(cfg[i])))
    return sim
