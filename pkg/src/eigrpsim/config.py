"""IOS-style configuration: parsing, application and rendering.

The parser accepts listings annotated with ``//...//`` remarks, which may
run over several lines and are sometimes left unterminated.  While such a
remark is open, a line that begins with a configuration keyword ends it.
"""

from __future__ import annotations

import enum
import ipaddress
import logging
from dataclasses import astuple, dataclass
from typing import List, Optional

from .ipv6 import Address128, MalformedAddress, PrefixLengthOutOfRange, parse_address
from .metric import KValues
from .router import EigrpProcess, Router, normalize_interface_name

__all__ = [
    "Op",
    "Directive",
    "ConfigSyntaxError",
    "ConfigParser",
    "parse_config",
    "apply",
    "render_running_config",
    "config_snapshot",
    "GLOBAL",
    "expand_abbreviations",
]

log = logging.getLogger(__name__)


class Op(enum.Enum):
    HOSTNAME = "Hostname"
    UNICAST_ROUTING = "UnicastRouting"
    INTERFACE_ENTER = "InterfaceEnter"
    IPV6_ADDRESS = "Ipv6Address"
    IPV6_ADDRESS_LINK_LOCAL = "Ipv6AddressLinkLocal"
    IPV6_ENABLE = "Ipv6Enable"
    IF_EIGRP = "IfEigrp"
    NO_IF_EIGRP = "NoIfEigrp"
    NO_SHUTDOWN_IF = "NoShutdownIf"
    SHUTDOWN_IF = "ShutdownIf"
    CLOCK_RATE = "ClockRate"
    BANDWIDTH = "Bandwidth"
    DELAY = "Delay"
    HELLO_INTERVAL = "HelloInterval"
    HOLD_TIME = "HoldTime"
    ROUTER_EIGRP_ENTER = "RouterEigrpEnter"
    NO_ROUTER_EIGRP = "NoRouterEigrp"
    ROUTER_ID = "RouterId"
    NO_ROUTER_ID = "NoRouterId"
    NO_SHUTDOWN_PROCESS = "NoShutdownProcess"
    SHUTDOWN_PROCESS = "ShutdownProcess"
    VARIANCE = "Variance"
    MAXIMUM_PATHS = "MaximumPaths"
    MAXIMUM_HOPS = "MaximumHops"
    METRIC_WEIGHTS = "MetricWeights"
    EXIT = "Exit"
    END = "End"


@dataclass(frozen=True)
class Directive:
    op: Op
    args: tuple = ()
    line: int = 0

    def key(self):
        return (self.op, self.args)


class ConfigSyntaxError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


GLOBAL = ("global",)

# First words that can start a configuration line.
KEYWORDS = {
    "hostname", "ipv6", "interface", "no", "shutdown", "clock", "router-id",
    "bandwidth", "delay", "variance", "maximum-paths", "metric", "exit", "end", "!",
}


# Keyword trees for expanding abbreviations typed at the console.
_GLOBAL_WORDS = {
    "hostname": None,
    "interface": None,
    "ipv6": {"unicast-routing": None, "router": {"eigrp": None}},
    "no": {"ipv6": {"unicast-routing": None, "router": {"eigrp": None}}},
    "exit": None,
    "end": None,
}
_INTERFACE_WORDS = {
    "shutdown": None,
    "no": {"shutdown": None, "ipv6": {"eigrp": None}},
    "ipv6": {
        "address": None,
        "enable": None,
        "eigrp": None,
        "hello-interval": {"eigrp": None},
        "hold-time": {"eigrp": None},
    },
    "clock": {"rate": None},
    "bandwidth": None,
    "delay": None,
}
_ROUTER_WORDS = {
    "router-id": None,
    "shutdown": None,
    "no": {"shutdown": None, "router-id": None},
    "variance": None,
    "maximum-paths": None,
    "metric": {"weights": None, "maximum-hops": None},
}


def _merge(a: dict, b: dict) -> dict:
    out = dict(a)
    for k, v in b.items():
        if isinstance(out.get(k), dict) and isinstance(v, dict):
            out[k] = _merge(out[k], v)
        else:
            out.setdefault(k, v)
    return out


_TREES = {
    "global": _GLOBAL_WORDS,
    "interface": _merge(_INTERFACE_WORDS, _GLOBAL_WORDS),
    "router": _merge(_ROUTER_WORDS, _GLOBAL_WORDS),
}


def expand_abbreviations(line: str, context=GLOBAL) -> str:
    """Spell out unambiguous keyword prefixes (``int se0/0/1`` -> ``interface se0/0/1``)."""
    words = line.split()
    tree = _TREES[context[0]]
    for i, w in enumerate(words):
        if not isinstance(tree, dict):
            break
        lw = w.lower()
        if lw in tree:
            full = lw
        else:
            hits = [k for k in tree if k.startswith(lw)]
            if len(hits) != 1:
                break
            full = hits[0]
        words[i] = full
        tree = tree[full]
    return " ".join(words)


def _int(tok: str, line: int, lo: int = 0, hi: int = 2**32 - 1) -> int:
    try:
        v = int(tok)
    except ValueError:
        raise ConfigSyntaxError(line, f"expected a number, got {tok!r}") from None
    if not lo <= v <= hi:
        raise ConfigSyntaxError(line, f"{v} out of range {lo}-{hi}")
    return v


def _router_id(tok: str, line: int) -> str:
    try:
        return str(ipaddress.IPv4Address(tok))
    except ValueError:
        raise ConfigSyntaxError(line, f"bad router-id {tok!r}") from None


class ConfigParser:
    """Incremental parser; ``context`` is GLOBAL, ("interface", name) or ("router", as)."""

    def __init__(self):
        self.context = GLOBAL
        self._in_remark = False
        self.lineno = 0

    def strip_remarks(self, raw: str) -> str:
        text = raw
        if self._in_remark:
            if "//" in text:
                text = text.split("//", 1)[1]
                self._in_remark = False
            else:
                words = text.split()
                if not words or words[0].lower() not in KEYWORDS:
                    return ""
                self._in_remark = False
        out = ""
        while "//" in text:
            head, rest = text.split("//", 1)
            out += head
            if "//" in rest:
                text = rest.split("//", 1)[1]
            else:
                self._in_remark = True
                text = ""
        return out + text

    def feed(self, raw: str) -> List[Directive]:
        self.lineno += 1
        text = self.strip_remarks(raw).strip()
        if not text or text.startswith("!"):
            return []
        return self.parse_line(text)

    def parse_line(self, text: str) -> List[Directive]:
        n = self.lineno
        words = text.split()
        low = [w.lower() for w in words]

        def d(op, *args):
            return Directive(op, tuple(args), n)

        # global-level commands, which also leave any sub-mode
        if low[0] == "hostname":
            if len(words) != 2:
                raise ConfigSyntaxError(n, "hostname takes one name")
            self.context = GLOBAL
            return [d(Op.HOSTNAME, words[1])]
        if low[:2] == ["ipv6", "unicast-routing"]:
            self.context = GLOBAL
            return [d(Op.UNICAST_ROUTING, True)]
        if low[:3] == ["no", "ipv6", "unicast-routing"]:
            self.context = GLOBAL
            return [d(Op.UNICAST_ROUTING, False)]
        if low[0] == "interface":
            if len(words) < 2:
                raise ConfigSyntaxError(n, "interface name missing")
            try:
                name = normalize_interface_name("".join(words[1:]))
            except ValueError as e:
                raise ConfigSyntaxError(n, str(e)) from None
            self.context = ("interface", name)
            return [d(Op.INTERFACE_ENTER, name)]
        if low[:3] == ["ipv6", "router", "eigrp"] and len(words) == 4:
            asn = _int(words[3], n, 1, 65535)
            self.context = ("router", asn)
            return [d(Op.ROUTER_EIGRP_ENTER, asn)]
        if low[:4] == ["no", "ipv6", "router", "eigrp"] and len(words) == 5:
            self.context = GLOBAL
            return [d(Op.NO_ROUTER_EIGRP, _int(words[4], n, 1, 65535))]
        if low == ["exit"]:
            self.context = GLOBAL
            return []
        if low == ["end"]:
            self.context = GLOBAL
            return [d(Op.END)]

        mode = self.context[0]
        if mode == "interface":
            return [self._interface_line(words, low, d)]
        if mode == "router":
            return [self._router_line(words, low, d)]
        raise ConfigSyntaxError(n, f"unknown or misplaced command {text!r}")

    def _interface_line(self, words, low, d) -> Directive:
        n = self.lineno
        if low == ["shutdown"]:
            return d(Op.SHUTDOWN_IF)
        if low == ["no", "shutdown"]:
            return d(Op.NO_SHUTDOWN_IF)
        if low == ["ipv6", "enable"]:
            return d(Op.IPV6_ENABLE)
        if low[:2] == ["ipv6", "address"] and len(words) in (3, 4):
            try:
                if len(words) == 4:
                    if low[3] != "link-local":
                        raise ConfigSyntaxError(n, f"unexpected {words[3]!r}")
                    return d(Op.IPV6_ADDRESS_LINK_LOCAL, parse_address(words[2]))
                if "/" not in words[2]:
                    raise ConfigSyntaxError(n, "address needs a prefix length")
                addr, plen = words[2].split("/", 1)
                length = _int(plen, n, 0, 128)
                return d(Op.IPV6_ADDRESS, parse_address(addr), length)
            except (MalformedAddress, PrefixLengthOutOfRange) as e:
                raise ConfigSyntaxError(n, str(e)) from None
        if low[:2] == ["ipv6", "eigrp"] and len(words) == 3:
            return d(Op.IF_EIGRP, _int(words[2], n, 1, 65535))
        if low[:3] == ["no", "ipv6", "eigrp"] and len(words) == 4:
            return d(Op.NO_IF_EIGRP, _int(words[3], n, 1, 65535))
        if low[:2] == ["clock", "rate"] and len(words) == 3:
            return d(Op.CLOCK_RATE, _int(words[2], n, 1))
        if low[0] == "bandwidth" and len(words) == 2:
            return d(Op.BANDWIDTH, _int(words[1], n, 1, 10_000_000))
        if low[0] == "delay" and len(words) == 2:
            return d(Op.DELAY, _int(words[1], n, 1, 16_777_215))
        if low[:3] == ["ipv6", "hello-interval", "eigrp"] and len(words) == 5:
            return d(Op.HELLO_INTERVAL, _int(words[3], n, 1, 65535), _int(words[4], n, 1, 65535))
        if low[:3] == ["ipv6", "hold-time", "eigrp"] and len(words) == 5:
            return d(Op.HOLD_TIME, _int(words[3], n, 1, 65535), _int(words[4], n, 1, 65535))
        raise ConfigSyntaxError(n, f"unknown interface command {' '.join(words)!r}")

    def _router_line(self, words, low, d) -> Directive:
        n = self.lineno
        if low[0] == "router-id" and len(words) == 2:
            return d(Op.ROUTER_ID, _router_id(words[1], n))
        if low == ["no", "router-id"]:
            return d(Op.NO_ROUTER_ID)
        if low == ["shutdown"]:
            return d(Op.SHUTDOWN_PROCESS)
        if low == ["no", "shutdown"]:
            return d(Op.NO_SHUTDOWN_PROCESS)
        if low[0] == "variance" and len(words) == 2:
            return d(Op.VARIANCE, _int(words[1], n, 1, 128))
        if low[0] == "maximum-paths" and len(words) == 2:
            return d(Op.MAXIMUM_PATHS, _int(words[1], n, 1, 16))
        if low[:2] == ["metric", "maximum-hops"] and len(words) == 3:
            return d(Op.MAXIMUM_HOPS, _int(words[2], n, 1, 255))
        if low[:2] == ["metric", "weights"] and len(words) == 8:
            ks = [_int(w, n, 0, 255) for w in words[3:]]
            return d(Op.METRIC_WEIGHTS, *ks)
        raise ConfigSyntaxError(n, f"unknown router command {' '.join(words)!r}")


def parse_config(text: str) -> List[Directive]:
    parser = ConfigParser()
    out: List[Directive] = []
    for raw in text.splitlines():
        out.extend(parser.feed(raw))
    return out


def config_snapshot(router: Router):
    """Everything configuration can change, as a comparable value."""
    ifaces = tuple(
        (name, astuple(intf)[2:]) for name, intf in router.interfaces.items()
    )
    proc = None if router.process is None else astuple(router.process)
    return (router.hostname, router.unicast_routing, ifaces, proc)


def _process(router: Router, asn: int) -> Optional[EigrpProcess]:
    if router.process is None or router.process.as_number != asn:
        router.process = EigrpProcess(asn)
    return router.process


def apply(router: Router, directives: List[Directive], refresh: bool = True) -> bool:
    """Apply directives in order; returns whether configuration changed."""
    before = config_snapshot(router)
    hellos = {n: i.hello_interval_s for n, i in router.interfaces.items()}
    intf = None
    proc = None
    for dv in directives:
        op, a = dv.op, dv.args
        if op is Op.HOSTNAME:
            router.hostname = a[0]
        elif op is Op.UNICAST_ROUTING:
            router.unicast_routing = a[0]
        elif op is Op.INTERFACE_ENTER:
            intf, proc = router.interface(a[0]), None
        elif op is Op.ROUTER_EIGRP_ENTER:
            proc, intf = _process(router, a[0]), None
        elif op is Op.NO_ROUTER_EIGRP:
            if router.process is not None and router.process.as_number == a[0]:
                router.process = None
            intf = proc = None
        elif op in (Op.END, Op.EXIT):
            intf = proc = None
        elif intf is not None:
            _apply_interface(router, intf, op, a)
        elif proc is not None:
            _apply_router(proc, op, a)
        else:
            raise ConfigSyntaxError(dv.line, f"{op.value} outside its block")
    changed = config_snapshot(router) != before
    if refresh and changed:
        router.refresh()
        for name, i in router.interfaces.items():
            if name in hellos and hellos[name] != i.hello_interval_s:
                router.restart_hello(name)
    return changed


def _apply_interface(router: Router, intf, op: Op, a: tuple) -> None:
    if op is Op.SHUTDOWN_IF:
        intf.admin_up = False
    elif op is Op.NO_SHUTDOWN_IF:
        intf.admin_up = True
    elif op is Op.IPV6_ENABLE:
        intf.ipv6_enabled = True
    elif op is Op.IPV6_ADDRESS:
        if (a[0], a[1]) not in intf.addresses:
            intf.addresses.append((a[0], a[1]))
        intf.ipv6_enabled = True
    elif op is Op.IPV6_ADDRESS_LINK_LOCAL:
        intf.configured_link_local = a[0]
        intf.ipv6_enabled = True
    elif op is Op.IF_EIGRP:
        intf.eigrp_as = a[0]
        if router.process is None:
            router.process = EigrpProcess(a[0])
    elif op is Op.NO_IF_EIGRP:
        if intf.eigrp_as == a[0]:
            intf.eigrp_as = None
    elif op is Op.CLOCK_RATE:
        intf.clock_rate = a[0]
    elif op is Op.BANDWIDTH:
        intf.bandwidth_kbps = a[0]
    elif op is Op.DELAY:
        intf.delay_usec = a[0] * 10
    elif op is Op.HELLO_INTERVAL:
        intf.timer_as = a[0]
        intf.hello_interval_s = a[1]
        if intf.hold_time_s < intf.hello_interval_s:
            log.warning(
                "%s: hold time %ss below hello interval %ss", intf.name, intf.hold_time_s, a[1]
            )
    elif op is Op.HOLD_TIME:
        intf.timer_as = a[0]
        intf.hold_time_s = a[1]
    else:
        raise ConfigSyntaxError(0, f"{op.value} is not an interface command")


def _apply_router(proc: EigrpProcess, op: Op, a: tuple) -> None:
    if op is Op.ROUTER_ID:
        proc.router_id = a[0]
    elif op is Op.NO_ROUTER_ID:
        proc.router_id = None
    elif op is Op.SHUTDOWN_PROCESS:
        proc.shutdown = True
    elif op is Op.NO_SHUTDOWN_PROCESS:
        proc.shutdown = False
    elif op is Op.VARIANCE:
        proc.variance = a[0]
    elif op is Op.MAXIMUM_PATHS:
        proc.max_paths = a[0]
    elif op is Op.MAXIMUM_HOPS:
        proc.max_hopcount = a[0]
    elif op is Op.METRIC_WEIGHTS:
        proc.k = KValues(*a)
    else:
        raise ConfigSyntaxError(0, f"{op.value} is not a router command")


def _addr(a: Address128) -> str:
    return a.upper()


def render_running_config(router: Router) -> str:
    lines = [f"hostname {router.hostname}", "!"]
    if router.unicast_routing:
        lines += ["ipv6 unicast-routing", "!"]
    for intf in router.interfaces.values():
        lines.append(f"interface {intf.name}")
        if intf.configured_link_local is not None:
            lines.append(f" ipv6 address {_addr(intf.configured_link_local)} link-local")
        for a, plen in intf.addresses:
            lines.append(f" ipv6 address {_addr(a)}/{plen}")
        if intf.ipv6_enabled:
            lines.append(" ipv6 enable")
        if intf.eigrp_as is not None:
            lines.append(f" ipv6 eigrp {intf.eigrp_as}")
        timer_as = intf.timer_as or intf.eigrp_as
        if intf.hello_interval_s != 5:
            lines.append(f" ipv6 hello-interval eigrp {timer_as} {intf.hello_interval_s}")
        if intf.hold_time_s != 15:
            lines.append(f" ipv6 hold-time eigrp {timer_as} {intf.hold_time_s}")
        if intf.bandwidth_kbps is not None:
            lines.append(f" bandwidth {intf.bandwidth_kbps}")
        if intf.delay_usec is not None:
            lines.append(f" delay {intf.delay_usec // 10}")
        if intf.clock_rate is not None:
            lines.append(f" clock rate {intf.clock_rate}")
        lines.append(" no shutdown" if intf.admin_up else " shutdown")
        lines.append("!")
    p = router.process
    if p is not None:
        lines.append(f"ipv6 router eigrp {p.as_number}")
        if p.router_id:
            lines.append(f" router-id {p.router_id}")
        if p.k != KValues():
            lines.append(" metric weights 0 " + " ".join(str(k) for k in p.k.as_tuple()))
        if p.variance != 1:
            lines.append(f" variance {p.variance}")
        if p.max_paths != 16:
            lines.append(f" maximum-paths {p.max_paths}")
        if p.max_hopcount != 100:
            lines.append(f" metric maximum-hops {p.max_hopcount}")
        lines.append(" shutdown" if p.shutdown else " no shutdown")
        lines.append("!")
    lines.append("end")
    return "\n".join(lines)
