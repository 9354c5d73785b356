"""IOS-style ``show`` output for a router."""

from __future__ import annotations

import math
from typing import Callable, Dict

from .dual import CONNECTED, DualState
from .metric import INFINITY

__all__ = [
    "CommandError",
    "UnknownCommand",
    "AmbiguousCommand",
    "IncompleteCommand",
    "match_word",
    "resolve_show",
    "render_show",
    "uptime_format",
    "SHOW_COMMANDS",
]


class CommandError(ValueError):
    message = "% Invalid input detected"

    def __str__(self) -> str:
        detail = self.args[0] if self.args else ""
        return f"{self.message} {detail}".rstrip()


class UnknownCommand(CommandError):
    message = "% Invalid input detected"


class AmbiguousCommand(CommandError):
    message = "% Ambiguous command"


class IncompleteCommand(CommandError):
    message = "% Incomplete command"


def match_word(word: str, options: Dict[str, object]):
    """Resolve ``word`` as a unique, case-insensitive prefix of an option.

    Several spellings may lead to the same target (neighbors/neighbour),
    which does not count as ambiguity.
    """
    w = word.lower()
    if w in options:
        return options[w]
    hits = {id(t): t for k, t in options.items() if k.startswith(w)}
    if not hits:
        raise UnknownCommand(f"at '{word}'")
    if len(hits) > 1:
        raise AmbiguousCommand(f"'{word}'")
    return next(iter(hits.values()))


def uptime_format(start_ms: int, now_ms: int) -> str:
    s = max(0, (now_ms - start_ms) // 1000)
    return f"{s // 3600:02d}:{s % 3600 // 60:02d}:{s % 60:02d}"


ROUTE_LEGEND = [
    "Codes: C - Connected, L - Local, S - Static, R - RIP, B - BGP",
    "       U - Per-user Static route, M - MIPv6",
    "       I1 - ISIS L1, I2 - ISIS L2, IA - ISIS interarea, IS - ISIS summary",
    "       O - OSPF intra, OI - OSPF inter, OE1 - OSPF ext 1, OE2 - OSPF ext 2",
    "       ON1 - OSPF NSSA ext 1, ON2 - OSPF NSSA ext 2",
    "       D - EIGRP, EX - EIGRP external",
]


def show_route(router) -> str:
    rib = router.rib
    lines = [f"IPv6 Routing Table - {len(rib)} entries"] + ROUTE_LEGEND + [""]
    for e in rib:
        lines.append(f"{e.code:<3} {e.prefix.upper()} [{e.admin_distance}/{e.metric}]")
        paths = e.paths or ((e.next_hop, e.interface),)
        for nh, iface in paths:
            lines.append(f"     via {nh.upper()}, {iface}")
    return "\n".join(lines)


def show_protocols(router) -> str:
    lines = ['IPv6 Routing Protocol is "connected"', 'IPv6 Routing Protocol is "static"']
    p = router.process
    if p is not None:
        lines += [
            f'IPv6 Routing Protocol is "eigrp {p.as_number}"',
            f"  EIGRP metric weight {p.k}",
            f"  EIGRP maximum hopcount {p.max_hopcount}",
            f"  EIGRP maximum metric variance {p.variance}",
            "  Interfaces:",
        ]
        for intf in router.interfaces.values():
            if intf.eigrp_as == p.as_number:
                lines.append(f"    {intf.name}")
        lines += [
            f"  Redistributing: eigrp {p.as_number}",
            f"  Maximum path: {p.max_paths}",
            "  Distance: internal 90 external 170",
        ]
    return "\n".join(lines)


def _as_label(router) -> str:
    return str(router.process.as_number) if router.process is not None else "-"


def show_neighbors(router) -> str:
    lines = [
        f"IPv6-EIGRP neighbors for process {_as_label(router)}",
        "H   Address                   Interface   Hold  Uptime    SRTT  RTO   Q    Seq",
        "                                          (sec)           (ms)        Cnt  Num",
    ]
    if router.neighbors is not None:
        now = router.now
        for n in sorted(router.neighbors, key=lambda n: n.handle):
            hold = max(0, math.ceil(n.hold_remaining_s(now)))
            lines.append(
                f"{n.handle:<3} {n.peer_link_local.upper():<25} "
                f"{router.interfaces[n.interface].short_name:<11} {hold:<5} "
                f"{uptime_format(n.uptime_start_ms, now):<9} {n.srtt_ms:<5} "
                f"{n.rto_ms:<5} {n.queue_count:<4} {n.last_seq_seen}"
            )
    return "\n".join(lines)


def show_interfaces(router) -> str:
    lines = [
        f"IPv6-EIGRP interfaces for process {_as_label(router)}",
        "",
        "                   Xmit Queue   Mean   Pacing Time   Multicast    Pending",
        "Interface   Peers  Un/Reliable  SRTT   Un/Reliable   Flow Timer   Routes",
    ]
    if router.neighbors is not None:
        for name in router.interfaces:
            if name not in router._eigrp_ifaces:
                continue
            peers = router.neighbors.on_interface(name)
            queued = sum(n.queue_count for n in peers)
            srtt = sum(n.srtt_ms for n in peers) // len(peers) if peers else 0
            flow = 50 if peers else 0
            pending = sum(len(p.routes) for n in peers for p in n.queue)
            lines.append(
                f"{router.interfaces[name].short_name:<11} {len(peers):<6} 0/{queued:<10} "
                f"{srtt:<6} 0/10          {flow:<12} {pending}"
            )
    return "\n".join(lines)


def _fd_text(fd: int) -> str:
    return "Inaccessible" if fd >= INFINITY else str(fd)


def show_topology(router) -> str:
    rid = router.process.router_id if router.process is not None else None
    lines = [
        f"IPv6-EIGRP Topology Table for AS {_as_label(router)}/ID({rid or '0.0.0.0'})",
        "",
        "Codes: P - Passive, A - Active, U - Update, Q - Query, R - Reply,",
        "       r - Reply status",
        "",
    ]
    dual = router.dual
    if dual is None:
        return "\n".join(lines)
    for entry in dual.topology.values():
        code = entry.state.value
        lines.append(
            f"{code} {entry.destination.upper()}, {len(entry.successors)} successors, "
            f"FD is {_fd_text(entry.fd)}"
        )
        shown = []
        if CONNECTED in entry.successors and entry.connected is not None:
            lines.append(f"         via Connected, {entry.connected[0]}")
        shown_rows = [s for s in entry.successors if s is not CONNECTED]
        shown_rows += [n for n, _ in entry.feasible_rows() if n not in shown_rows]
        for nid in shown_rows:
            row = entry.rows.get(nid)
            if row is None:
                continue
            flag = ", r" if nid in entry.reply_pending else ""
            lines.append(
                f"         via {nid.link_local.upper()} ({row.distance}/{row.rd}), {nid.interface}{flag}"
            )
            shown.append(nid)
        if entry.state is DualState.ACTIVE:
            for nid in sorted(entry.reply_pending):
                if nid not in shown:
                    lines.append(f"         via {nid.link_local.upper()} (Infinity/Infinity), {nid.interface}, r")
    return "\n".join(lines)


def show_running_config(router) -> str:
    from .config import render_running_config

    return render_running_config(router)


_EIGRP = {
    "neighbors": show_neighbors,
    "neighbours": show_neighbors,
    "neighbour": show_neighbors,
    "neighbor": show_neighbors,
    "interfaces": show_interfaces,
    "topology": show_topology,
}
_IPV6 = {"route": show_route, "protocols": show_protocols, "eigrp": _EIGRP}
_SHOW = {"ipv6": _IPV6, "running-config": show_running_config}
SHOW_COMMANDS = {"show": _SHOW}


def resolve_show(command: str) -> Callable[[object], str]:
    """Map a (possibly abbreviated) show command to its renderer."""
    words = command.split()
    if not words:
        raise UnknownCommand("empty command")
    node = SHOW_COMMANDS
    for w in words:
        if callable(node):
            raise UnknownCommand(f"at '{w}'")
        node = match_word(w, node)
    if not callable(node):
        raise IncompleteCommand()
    return node


def render_show(router, command: str) -> str:
    """Render one show command; raises CommandError for bad input."""
    return resolve_show(command)(router)
