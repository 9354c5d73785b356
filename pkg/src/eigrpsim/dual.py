"""Diffusing update computations over a per-destination topology table.

Each destination is either Passive (it has a loop-free successor chosen
under the feasibility condition) or Active (it has queried every
neighbor and waits for their replies).  Only one Active state exists:
changes that arrive while a destination is Active are recorded in its
rows and folded in when the last reply completes the computation.

While Active, a destination advertises itself as unreachable and keeps
its previous successors only until those neighbors report infinity.
Together with the feasibility condition this keeps the successor graph
acyclic at every instant.

The engine is a pure state machine.  Every input returns a list of
:class:`Emission` objects (Update, Query, Reply), each addressed to one
neighbor.  The caller turns them into packets.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from .ipv6 import Address128, Prefix
from .metric import (
    DEFAULT_K,
    DEFAULT_MAX_HOPS,
    INFINITY,
    UNREACHABLE,
    KValues,
    MetricVector,
    accumulate,
    composite,
)

__all__ = [
    "CONNECTED",
    "DualState",
    "NeighborId",
    "Row",
    "TopologyEntry",
    "Emission",
    "RoutePath",
    "RouteInstallation",
    "DualEngine",
    "NotPassive",
    "INTERNAL_DISTANCE",
    "EXTERNAL_DISTANCE",
]

INTERNAL_DISTANCE = 90
EXTERNAL_DISTANCE = 170


class NotPassive(RuntimeError):
    pass


class DualState(enum.Enum):
    PASSIVE = "P"
    ACTIVE = "A"


@dataclass(frozen=True, order=True)
class NeighborId:
    """A neighbor is named by its link-local address plus our interface.

    Ordering is by address first, which is the tie-break rule everywhere.
    """

    link_local: Address128
    interface: str

    def __str__(self) -> str:
        return f"{self.link_local.upper()}%{self.interface}"


class _Connected:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "CONNECTED"

    def __reduce__(self):
        return (_Connected, ())


CONNECTED = _Connected()
Successor = Union[NeighborId, _Connected]


@dataclass
class Row:
    reported: MetricVector
    rd: int
    computed: MetricVector
    distance: int


@dataclass
class TopologyEntry:
    destination: Prefix
    rows: Dict[NeighborId, Row] = field(default_factory=dict)
    connected: Optional[Tuple[str, MetricVector]] = None
    fd: int = INFINITY
    successors: List[Successor] = field(default_factory=list)
    state: DualState = DualState.PASSIVE
    reply_pending: set = field(default_factory=set)
    deferred_replies: List[NeighborId] = field(default_factory=list)
    own: MetricVector = UNREACHABLE
    connected_distance: int = INFINITY
    serial: int = 0
    active_id: int = 0

    @property
    def distance(self) -> int:
        """Distance through the primary successor (infinity when none)."""
        if not self.successors:
            return INFINITY
        s = self.successors[0]
        if s is CONNECTED:
            return self.connected_distance
        return self.rows[s].distance

    @property
    def primary(self) -> Optional[Successor]:
        return self.successors[0] if self.successors else None

    def feasible_rows(self) -> List[Tuple[NeighborId, Row]]:
        """Rows satisfying the feasibility condition, best first."""
        rows = [(n, r) for n, r in self.rows.items() if r.rd < self.fd]
        rows.sort(key=lambda item: (item[1].distance, item[0]))
        return rows


@dataclass(frozen=True)
class Emission:
    kind: str  # "update" | "query" | "reply"
    neighbor: NeighborId
    destination: Prefix
    vector: MetricVector


@dataclass(frozen=True)
class RoutePath:
    next_hop: Address128
    interface: str
    metric: int


@dataclass(frozen=True)
class RouteInstallation:
    destination: Prefix
    paths: Tuple[RoutePath, ...]
    admin_distance: int = INTERNAL_DISTANCE

    @property
    def metric(self) -> int:
        return self.paths[0].metric


class DualEngine:
    """DUAL state for every destination known to one router."""

    def __init__(
        self,
        k: KValues = DEFAULT_K,
        variance: int = 1,
        max_paths: int = 16,
        max_hopcount: int = DEFAULT_MAX_HOPS,
    ):
        self.k = k
        self.variance = variance
        self.max_paths = max_paths
        self.max_hopcount = max_hopcount
        self.topology: Dict[Prefix, TopologyEntry] = {}
        self.neighbors: Dict[NeighborId, Tuple[int, int]] = {}
        self._sent: Dict[NeighborId, Dict[Prefix, MetricVector]] = {}
        self.unknown_neighbor_drops = 0
        self.stale_replies = 0
        self.version = 0  # bumped whenever any successor set changes
        self.went_active: List[Tuple[Prefix, int]] = []
        self._active_counter = 0

    # ------------------------------------------------------------------
    # neighbors and connected prefixes

    def add_neighbor(self, nid: NeighborId, bandwidth: int, delay: int) -> List[Emission]:
        """Register an adjacency; returns the full-table Update for it."""
        self.neighbors[nid] = (bandwidth, delay)
        self._sent[nid] = {}
        out: List[Emission] = []
        for entry in self.topology.values():
            self._sync(entry, out, only=nid)
        return out

    def on_neighbor_lost(self, nid: NeighborId) -> List[Emission]:
        if nid not in self.neighbors:
            return []
        del self.neighbors[nid]
        self._sent.pop(nid, None)
        out: List[Emission] = []
        for entry in list(self.topology.values()):
            had_row = entry.rows.pop(nid, None) is not None
            if nid in entry.deferred_replies:
                entry.deferred_replies.remove(nid)
            if entry.state is DualState.ACTIVE:
                self._drop_frozen(entry, nid)
                if nid in entry.reply_pending:
                    # an implicit unreachable reply
                    entry.reply_pending.discard(nid)
                    if not entry.reply_pending:
                        self._finish(entry, out)
            elif had_row:
                self._compute(entry, out)
        return out

    def link_change(self, interface: str, bandwidth: int, delay: int) -> List[Emission]:
        """Re-accumulate every row learned over ``interface``."""
        out: List[Emission] = []
        changed = [n for n in self.neighbors if n.interface == interface]
        for nid in changed:
            self.neighbors[nid] = (bandwidth, delay)
        for entry in list(self.topology.values()):
            touched = False
            for nid in changed:
                row = entry.rows.get(nid)
                if row is not None:
                    self._set_row(entry, nid, row.reported)
                    touched = True
            if touched and entry.state is DualState.PASSIVE:
                self._compute(entry, out)
        return out

    def connected_add(self, dest: Prefix, interface: str, vector: MetricVector) -> List[Emission]:
        entry = self._entry(dest, create=True)
        if entry.connected == (interface, vector):
            return []
        entry.connected = (interface, vector)
        entry.connected_distance = composite(vector, self.k)
        out: List[Emission] = []
        if entry.state is DualState.PASSIVE:
            self._compute(entry, out)
        return out

    def connected_remove(self, dest: Prefix) -> List[Emission]:
        entry = self.topology.get(dest)
        if entry is None or entry.connected is None:
            return []
        entry.connected = None
        entry.connected_distance = INFINITY
        out: List[Emission] = []
        if entry.state is DualState.ACTIVE:
            self._drop_frozen(entry, CONNECTED)
        else:
            self._compute(entry, out)
        return out

    # ------------------------------------------------------------------
    # packet inputs

    def on_update(self, dest: Prefix, neighbor: NeighborId, advertised: MetricVector) -> List[Emission]:
        if neighbor not in self.neighbors:
            self.unknown_neighbor_drops += 1
            return []
        advertised = _norm(advertised)
        entry = self._entry(dest, create=not advertised.unreachable)
        if entry is None:
            return []
        if not self._set_row(entry, neighbor, advertised):
            return []
        out: List[Emission] = []
        if entry.state is DualState.ACTIVE:
            if neighbor not in entry.rows:
                self._drop_frozen(entry, neighbor)
        else:
            self._compute(entry, out)
        return out

    def on_query(self, dest: Prefix, neighbor: NeighborId, advertised: MetricVector) -> List[Emission]:
        if neighbor not in self.neighbors:
            self.unknown_neighbor_drops += 1
            return []
        advertised = _norm(advertised)
        entry = self._entry(dest, create=not advertised.unreachable)
        out: List[Emission] = []
        if entry is None:
            out.append(self._emit("reply", neighbor, dest, UNREACHABLE))
            return out
        self._set_row(entry, neighbor, advertised)
        if entry.state is DualState.ACTIVE:
            if neighbor not in entry.rows:
                self._drop_frozen(entry, neighbor)
            out.append(self._emit("reply", neighbor, dest, UNREACHABLE))
            return out
        if self._compute(entry, out):
            current = self.topology.get(dest)
            vector = UNREACHABLE if current is None else self._advert_for(current, neighbor)
            out.append(self._emit("reply", neighbor, dest, vector))
        else:
            entry.deferred_replies.append(neighbor)
        return out

    def on_reply(self, dest: Prefix, neighbor: NeighborId, advertised: MetricVector) -> List[Emission]:
        entry = self.topology.get(dest)
        if (
            entry is None
            or entry.state is not DualState.ACTIVE
            or neighbor not in entry.reply_pending
        ):
            self.stale_replies += 1
            return []
        self._set_row(entry, neighbor, _norm(advertised))
        if neighbor not in entry.rows:
            self._drop_frozen(entry, neighbor)
        entry.reply_pending.discard(neighbor)
        out: List[Emission] = []
        if not entry.reply_pending:
            self._finish(entry, out)
        return out

    # ------------------------------------------------------------------
    # queries of state

    def local_compute(self, dest: Prefix) -> Tuple[bool, List[Emission]]:
        """Re-run the passive computation; returns (stayed_passive, emissions)."""
        entry = self.topology[dest]
        if entry.state is not DualState.PASSIVE:
            raise NotPassive(str(dest))
        out: List[Emission] = []
        stayed = self._compute(entry, out)
        return stayed, out

    def advertisable_routes(self, interface: str) -> List[Tuple[Prefix, MetricVector]]:
        """What this router would advertise out ``interface`` right now."""
        out = []
        for entry in self.topology.values():
            if entry.state is DualState.ACTIVE or not entry.successors:
                continue
            if self._egress(entry) == interface:
                continue
            out.append((entry.destination, entry.own))
        return out

    def install(self, dest: Prefix) -> Optional[RouteInstallation]:
        """Routing-table paths for ``dest``; None for connected prefixes."""
        entry = self.topology[dest]
        if entry.state is not DualState.PASSIVE:
            raise NotPassive(str(dest))
        return self._installation(entry)

    def installations(self) -> List[RouteInstallation]:
        """Every learned route, including Active ones still holding a successor."""
        out = []
        for entry in self.topology.values():
            inst = self._installation(entry)
            if inst is not None:
                out.append(inst)
        return out

    def primary_successor(self, dest: Prefix) -> Optional[Successor]:
        entry = self.topology.get(dest)
        return None if entry is None else entry.primary

    def active_destinations(self) -> List[Prefix]:
        return [d for d, e in self.topology.items() if e.state is DualState.ACTIVE]

    # ------------------------------------------------------------------
    # internals

    def _entry(self, dest: Prefix, create: bool) -> Optional[TopologyEntry]:
        entry = self.topology.get(dest)
        if entry is None and create:
            entry = TopologyEntry(destination=dest)
            self.topology[dest] = entry
        return entry

    def _set_row(self, entry: TopologyEntry, nid: NeighborId, reported: MetricVector) -> bool:
        """Store a neighbor's report; returns whether anything changed."""
        old = entry.rows.get(nid)
        if reported.unreachable:
            if old is None:
                return False
            del entry.rows[nid]
            entry.serial += 1
            return True
        bw, dly = self.neighbors[nid]
        computed = accumulate(reported, bw, dly, self.max_hopcount)
        if computed.unreachable:
            if old is None:
                return False
            del entry.rows[nid]
            entry.serial += 1
            return True
        if old is not None and old.reported == reported and old.computed == computed:
            return False
        entry.rows[nid] = Row(reported, composite(reported, self.k), computed, composite(computed, self.k))
        entry.serial += 1
        return True

    def _candidates(self, entry: TopologyEntry):
        """(distance, tiebreak, successor, rd) for every finite offer, best first."""
        cands = []
        if entry.connected is not None:
            cands.append((entry.connected_distance, 0, CONNECTED, 0))
        for nid, row in entry.rows.items():
            cands.append((row.distance, 1, nid, row.rd))
        cands.sort(key=lambda c: (c[0], c[1], c[2] if c[1] else 0))
        return cands

    def _select(self, entry: TopologyEntry, cands, best_ok) -> None:
        """Choose successors: the best rows plus any feasible row within variance."""
        dmin = cands[0][0]
        limit = self.variance * dmin
        if cands[0][2] is CONNECTED:
            chosen: List[Successor] = [CONNECTED]
        else:
            chosen = []
            for dist, _, succ, rd in cands:
                if succ is CONNECTED:
                    continue
                equal_best = dist == dmin and (succ in best_ok or rd < entry.fd)
                if equal_best or (dist < limit and rd < entry.fd):
                    chosen.append(succ)
                if len(chosen) >= self.max_paths:
                    break
        if chosen != entry.successors:
            entry.successors = chosen
            self.version += 1
        entry.own = self._own_vector(entry)

    def _own_vector(self, entry: TopologyEntry) -> MetricVector:
        s = entry.primary
        if s is None:
            return UNREACHABLE
        if s is CONNECTED:
            return entry.connected[1]
        return entry.rows[s].computed

    def _compute(self, entry: TopologyEntry, out: List[Emission]) -> bool:
        """Passive local computation.  Returns False if the entry went Active."""
        cands = self._candidates(entry)
        if cands:
            dmin = cands[0][0]
            best = [c for c in cands if c[0] == dmin]
            best_ok = {c[2] for c in best if c[2] is CONNECTED or c[3] < entry.fd}
            if best_ok:
                entry.fd = min(entry.fd, dmin)
                self._select(entry, cands, best_ok)
                self._sync(entry, out)
                return True
        if not self.neighbors:
            self._finish(entry, out)
            return True
        self._go_active(entry, out)
        return False

    def _go_active(self, entry: TopologyEntry, out: List[Emission]) -> None:
        entry.state = DualState.ACTIVE
        self._active_counter += 1
        entry.active_id = self._active_counter
        self.went_active.append((entry.destination, entry.active_id))
        entry.reply_pending = set(self.neighbors)
        frozen = [
            s for s in entry.successors
            if (s is CONNECTED and entry.connected is not None) or s in entry.rows
        ]
        if frozen != entry.successors:
            entry.successors = frozen
            self.version += 1
        entry.own = UNREACHABLE
        for nid in sorted(self.neighbors):
            out.append(self._emit("query", nid, entry.destination, UNREACHABLE))

    def _drop_frozen(self, entry: TopologyEntry, succ: Successor) -> None:
        if succ in entry.successors:
            entry.successors = [s for s in entry.successors if s != succ]
            self.version += 1

    def _finish(self, entry: TopologyEntry, out: List[Emission]) -> None:
        """Complete a diffusing computation (or resolve with nobody to ask)."""
        entry.state = DualState.PASSIVE
        entry.reply_pending = set()
        cands = self._candidates(entry)
        deferred, entry.deferred_replies = entry.deferred_replies, []
        if not cands:
            entry.fd = INFINITY
            if entry.successors:
                self.version += 1
            entry.successors = []
            entry.own = UNREACHABLE
            for nid in deferred:
                if nid in self.neighbors:
                    out.append(self._emit("reply", nid, entry.destination, UNREACHABLE))
            for nid in sorted(self.neighbors):
                out.append(self._emit("update", nid, entry.destination, UNREACHABLE))
            del self.topology[entry.destination]
            return
        dmin = cands[0][0]
        entry.fd = dmin
        best_ok = {c[2] for c in cands if c[0] == dmin}
        self._select(entry, cands, best_ok)
        for nid in deferred:
            if nid in self.neighbors:
                out.append(self._emit("reply", nid, entry.destination, self._advert_for(entry, nid)))
        self._sync(entry, out)

    def _egress(self, entry: TopologyEntry) -> Optional[str]:
        s = entry.primary
        if s is None:
            return None
        if s is CONNECTED:
            return entry.connected[0]
        return s.interface

    def _advert_for(self, entry: TopologyEntry, nid: NeighborId) -> MetricVector:
        if entry.state is DualState.ACTIVE or not entry.successors:
            return UNREACHABLE
        if self._egress(entry) == nid.interface:
            return UNREACHABLE  # split horizon
        return entry.own

    def _sync(self, entry: TopologyEntry, out: List[Emission], only: Optional[NeighborId] = None) -> None:
        """Send Updates to every neighbor whose view of ``entry`` is out of date.

        A neighbor never told about a route counts as holding infinity, so
        split horizon only costs a message when it withdraws something
        that was previously advertised on that interface.
        """
        targets = [only] if only is not None else sorted(self.neighbors)
        for nid in targets:
            want = self._advert_for(entry, nid)
            last = self._sent[nid].get(entry.destination, UNREACHABLE)
            if want != last:
                out.append(self._emit("update", nid, entry.destination, want))

    def _emit(self, kind: str, nid: NeighborId, dest: Prefix, vector: MetricVector) -> Emission:
        sent = self._sent.get(nid)
        if sent is not None:
            if vector.unreachable:
                sent.pop(dest, None)
            else:
                sent[dest] = vector
        return Emission(kind, nid, dest, vector)

    def _installation(self, entry: TopologyEntry) -> Optional[RouteInstallation]:
        paths = []
        for s in entry.successors:
            if s is CONNECTED:
                return None
            row = entry.rows[s]
            paths.append(RoutePath(s.link_local, s.interface, row.distance))
        if not paths:
            return None
        return RouteInstallation(entry.destination, tuple(paths))


def _norm(v: MetricVector) -> MetricVector:
    return UNREACHABLE if v.unreachable else v
