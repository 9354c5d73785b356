"""Scenario files: topology, configs, timed events and expectations.

Format (one directive per line, ``#`` starts a comment)::

    node <name> type=router|host [addr=<address>/<len>]
    link <id> kind=serial|lan [delay_ms=<n>] attach=<node>:<iface>[,<node>:<iface>...]
    config <node> <<END
    ...IOS configuration...
    END
    config <node> file=<relative path>
    at <ms> link-down <id> [--silent-failure]
    at <ms> link-up <id>
    at <ms> config <node> <<END ... END
    at <ms> expect <node> "<show command>" fixture=<relative path>
    at <ms> ping <node> <address> [expect=success|fail]
    run until=<ms>
"""

from __future__ import annotations

import os
import re
import shlex
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .config import ConfigSyntaxError, Directive, apply, parse_config
from .dual import DualState
from .engine import LAN_DELAY_MS, SERIAL_DELAY_MS, Host, Link, PingResult, Simulator, ping
from .ipv6 import MalformedAddress, PrefixLengthOutOfRange, parse_address, parse_prefix
from .router import Router, normalize_interface_name
from .show import CommandError, render_show, resolve_show

__all__ = [
    "ScenarioParseError",
    "UnknownNodeReference",
    "DuplicateLinkId",
    "MissingFixture",
    "NodeSpec",
    "LinkSpec",
    "ScheduledAction",
    "Scenario",
    "ExpectResult",
    "Convergence",
    "SimReport",
    "parse_scenario",
    "load_scenario",
    "tokens_match",
    "fixture_root",
    "PLACEHOLDER",
]

PLACEHOLDER = "{*}"
DEFAULT_HORIZON_MS = 60_000


class ScenarioParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class UnknownNodeReference(ScenarioParseError):
    pass


class DuplicateLinkId(ScenarioParseError):
    pass


class MissingFixture(ScenarioParseError):
    pass


@dataclass
class NodeSpec:
    name: str
    type: str
    addr: Optional[str] = None
    index: int = 0


@dataclass
class LinkSpec:
    id: str
    kind: str
    delay_ms: int
    attach: List[Tuple[str, str]]


@dataclass
class ScheduledAction:
    time_ms: int
    kind: str  # link-down | link-up | config | expect | ping
    target: str
    silent: bool = False
    directives: List[Directive] = field(default_factory=list)
    command: str = ""
    fixture: Optional[Path] = None
    address: str = ""
    want_success: Optional[bool] = None
    line: int = 0


@dataclass
class ExpectResult:
    time_ms: int
    node: str
    command: str
    fixture: str
    passed: bool
    detail: str = ""
    output: str = ""


@dataclass
class Convergence:
    label: str
    time_ms: int
    settled_ms: int

    @property
    def duration_ms(self) -> int:
        return self.settled_ms - self.time_ms


@dataclass
class SimReport:
    event_count: int = 0
    horizon_ms: int = 0
    expectations: List[ExpectResult] = field(default_factory=list)
    pings: List[Tuple[int, str, str, PingResult, bool]] = field(default_factory=list)
    convergence: List[Convergence] = field(default_factory=list)
    horizon_exceeded: bool = False
    trace_hash: str = ""
    rib_dump: Dict[str, List[str]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.expectations) and all(p[4] for p in self.pings)


def fixture_root(base: Path) -> Path:
    env = os.environ.get("EIGRPSIM_FIXDIR")
    return Path(env) if env else base


def tokens_match(expected: str, actual: str) -> Tuple[bool, str]:
    """Whitespace-insensitive comparison; ``{*}`` in ``expected`` matches any one token."""
    exp, act = expected.split(), actual.split()
    for i, (e, a) in enumerate(zip(exp, act)):
        if e != PLACEHOLDER and e != a:
            return False, f"token {i}: expected {e!r}, got {a!r}"
    if len(exp) != len(act):
        return False, f"expected {len(exp)} tokens, got {len(act)}"
    return True, ""


_KV = re.compile(r"^([a-z_]+)=(.*)$")


def _kv(words, line) -> Dict[str, str]:
    out = {}
    for w in words:
        m = _KV.match(w)
        if not m:
            raise ScenarioParseError(line, f"expected key=value, got {w!r}")
        out[m.group(1)] = m.group(2)
    return out


def _int(text: str, line: int) -> int:
    try:
        v = int(text)
    except ValueError:
        raise ScenarioParseError(line, f"expected an integer, got {text!r}") from None
    if v < 0:
        raise ScenarioParseError(line, "negative time or delay")
    return v


class Scenario:
    def __init__(self, base_dir: Path = Path(".")):
        self.base_dir = Path(base_dir)
        self.nodes: Dict[str, NodeSpec] = {}
        self.links: Dict[str, LinkSpec] = {}
        self.configs: List[Tuple[str, List[Directive]]] = []
        self.actions: List[ScheduledAction] = []
        self.horizon_ms = DEFAULT_HORIZON_MS
        self.sim: Optional[Simulator] = None

    # building -------------------------------------------------------------

    def build(self, trace: bool = True) -> Simulator:
        sim = Simulator(trace=trace)
        for spec in self.nodes.values():
            if spec.type == "router":
                Router(spec.name, sim, spec.index)
            else:
                sim.add_node(Host.from_text(spec.name, spec.addr))
        for spec in self.links.values():
            sim.add_link(Link(spec.id, spec.kind, list(spec.attach), spec.delay_ms))
        for name, directives in self.configs:
            apply(sim.nodes[name], directives)
        for a in self.actions:
            if a.kind in ("link-down", "link-up", "config"):
                sim.at(a.time_ms, self._action_fn(sim, a), f"{a.kind} {a.target}", "scenario")
        self.sim = sim
        return sim

    @staticmethod
    def _action_fn(sim: Simulator, a: ScheduledAction):
        if a.kind == "link-down":
            return lambda: sim.set_link(a.target, False, a.silent)
        if a.kind == "link-up":
            return lambda: sim.set_link(a.target, True, a.silent)
        return lambda: apply(sim.nodes[a.target], a.directives)

    def disturbances(self) -> List[Tuple[int, str]]:
        out = [(0, "start")]
        for a in self.actions:
            if a.kind in ("link-down", "link-up", "config"):
                out.append((a.time_ms, f"{a.kind} {a.target}"))
        return sorted(out, key=lambda x: x[0])

    # running -------------------------------------------------------------

    def run(self, until_ms: Optional[int] = None, trace: bool = True) -> SimReport:
        horizon = self.horizon_ms if until_ms is None else until_ms
        sim = self.build(trace=trace)
        report = SimReport(horizon_ms=horizon)
        checks = sorted(
            (a for a in self.actions if a.kind in ("expect", "ping") and a.time_ms <= horizon),
            key=lambda a: a.time_ms,
        )
        for a in checks:
            sim.run(a.time_ms)
            if a.kind == "expect":
                report.expectations.append(self._check(sim, a))
            else:
                res = ping(sim, a.target, parse_address(a.address))
                ok = a.want_success is None or res.success == a.want_success
                report.pings.append((a.time_ms, a.target, a.address, res, ok))
        sim.run(horizon)
        report.event_count = sim.event_count
        report.trace_hash = sim.trace_hash()
        report.convergence = self._convergence(sim, horizon)
        report.horizon_exceeded = self._unstable(sim)
        for r in sim.routers():
            report.rib_dump[r.name] = [
                f"{e.code} {e.prefix.upper()} [{e.admin_distance}/{e.metric}] via {e.next_hop.upper()}, {e.interface}"
                for e in r.rib
            ]
        return report

    def _check(self, sim: Simulator, a: ScheduledAction) -> ExpectResult:
        output = render_show(sim.nodes[a.target], a.command)
        expected = a.fixture.read_text()
        ok, detail = tokens_match(expected, output)
        return ExpectResult(a.time_ms, a.target, a.command, str(a.fixture), ok, detail, output)

    def _convergence(self, sim: Simulator, horizon: int) -> List[Convergence]:
        marks = [d for d in self.disturbances() if d[0] <= horizon]
        out = []
        for i, (t, label) in enumerate(marks):
            end = marks[i + 1][0] if i + 1 < len(marks) else horizon + 1
            changes = [ct for ct, _ in sim.rib_changes if t <= ct < end]
            out.append(Convergence(label, t, max(changes) if changes else t))
        return out

    @staticmethod
    def _unstable(sim: Simulator) -> bool:
        for r in sim.routers():
            if r.dual is None:
                continue
            if any(e.state is DualState.ACTIVE for e in r.dual.topology.values()):
                return True
            if any(n.queue for n in r.neighbors):
                return True
        return False


# parsing ------------------------------------------------------------------


def load_scenario(path) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(encoding="utf-8"), path.parent)


def parse_scenario(text: str, base_dir=Path(".")) -> Scenario:
    sc = Scenario(base_dir)
    fix_base = fixture_root(sc.base_dir)
    lines = text.splitlines()
    router_count = 0
    i = 0

    def heredoc(start: int, marker: str) -> Tuple[str, int]:
        body = []
        j = start + 1
        while j < len(lines):
            if lines[j].strip() == marker:
                return "\n".join(body), j
            body.append(lines[j])
            j += 1
        raise ScenarioParseError(start + 1, f"unterminated block, expected {marker}")

    def need_node(name: str, line: int, kind: Optional[str] = None) -> NodeSpec:
        spec = sc.nodes.get(name)
        if spec is None:
            raise UnknownNodeReference(line, f"unknown node {name!r}")
        if kind is not None and spec.type != kind:
            raise ScenarioParseError(line, f"{name} is not a {kind}")
        return spec

    def config_from(words, j: int) -> Tuple[List[Directive], int]:
        """Parse the config body that follows ``config <node>``; returns (directives, last line index)."""
        if len(words) == 1 and words[0].startswith("<<"):
            body, end = heredoc(j, words[0][2:] or "END")
            offset = j + 1
        elif len(words) == 1 and words[0].startswith("file="):
            cfg_path = sc.base_dir / words[0][5:]
            if not cfg_path.exists():
                raise ScenarioParseError(j + 1, f"config file {cfg_path} not found")
            body, end, offset = cfg_path.read_text(), j, None
        else:
            raise ScenarioParseError(j + 1, "config needs <<MARKER or file=<path>")
        try:
            return parse_config(body), end
        except ConfigSyntaxError as e:
            where = e.line + offset if offset is not None else j + 1
            raise ScenarioParseError(where, f"config: {e.message}") from None

    while i < len(lines):
        n = i + 1
        raw = lines[i].strip()
        if not raw or raw.startswith("#"):
            i += 1
            continue
        try:
            words = shlex.split(raw, comments=True)
        except ValueError as e:
            raise ScenarioParseError(n, str(e)) from None
        head = words[0]
        if head == "node":
            if len(words) < 3:
                raise ScenarioParseError(n, "node needs a name and type=")
            name = words[1]
            if name in sc.nodes:
                raise ScenarioParseError(n, f"duplicate node {name!r}")
            kv = _kv(words[2:], n)
            kind = kv.get("type")
            if kind == "router":
                router_count += 1
                sc.nodes[name] = NodeSpec(name, "router", index=router_count)
            elif kind == "host":
                addr = kv.get("addr")
                if not addr or "/" not in addr:
                    raise ScenarioParseError(n, "host needs addr=<address>/<len>")
                try:
                    parse_prefix(addr)
                except (MalformedAddress, PrefixLengthOutOfRange) as e:
                    raise ScenarioParseError(n, str(e)) from None
                sc.nodes[name] = NodeSpec(name, "host", addr=addr)
            else:
                raise ScenarioParseError(n, f"unknown node type {kind!r}")
        elif head == "link":
            if len(words) < 3:
                raise ScenarioParseError(n, "link needs an id and attributes")
            lid = words[1]
            if lid in sc.links:
                raise DuplicateLinkId(n, f"duplicate link id {lid!r}")
            kv = _kv(words[2:], n)
            kind = kv.get("kind")
            if kind not in ("serial", "lan"):
                raise ScenarioParseError(n, f"link kind must be serial or lan, got {kind!r}")
            delay = _int(kv["delay_ms"], n) if "delay_ms" in kv else (
                SERIAL_DELAY_MS if kind == "serial" else LAN_DELAY_MS
            )
            attach = []
            for item in filter(None, kv.get("attach", "").split(",")):
                node, _, iface = item.partition(":")
                spec = need_node(node, n)
                if spec.type == "host":
                    iface = iface or "eth0"
                else:
                    try:
                        iface = normalize_interface_name(iface)
                    except ValueError as e:
                        raise ScenarioParseError(n, str(e)) from None
                attach.append((node, iface))
            if kind == "serial" and len(attach) != 2:
                raise ScenarioParseError(n, "serial link needs exactly 2 attachments")
            if kind == "lan" and len(attach) < 2:
                raise ScenarioParseError(n, "lan link needs at least 2 attachments")
            if len(set(attach)) != len(attach):
                raise ScenarioParseError(n, "duplicate attachment")
            for other in sc.links.values():
                for att in attach:
                    if att in other.attach:
                        raise ScenarioParseError(n, f"{att[0]}:{att[1]} already attached to {other.id}")
            sc.links[lid] = LinkSpec(lid, kind, delay, attach)
        elif head == "config":
            if len(words) < 3:
                raise ScenarioParseError(n, "config needs a node and a body")
            need_node(words[1], n, "router")
            directives, i = config_from(words[2:], i)
            sc.configs.append((words[1], directives))
        elif head == "at":
            if len(words) < 4:
                raise ScenarioParseError(n, "at needs a time, an action and a target")
            t = _int(words[1], n)
            action, target, rest = words[2], words[3], words[4:]
            if action in ("link-down", "link-up"):
                if target not in sc.links:
                    raise ScenarioParseError(n, f"unknown link {target!r}")
                extra = set(rest) - {"--silent-failure"}
                if extra:
                    raise ScenarioParseError(n, f"unexpected {' '.join(sorted(extra))}")
                sc.actions.append(ScheduledAction(t, action, target, silent="--silent-failure" in rest, line=n))
            elif action == "config":
                need_node(target, n, "router")
                directives, i = config_from(rest, i)
                sc.actions.append(ScheduledAction(t, "config", target, directives=directives, line=n))
            elif action == "expect":
                need_node(target, n, "router")
                if len(rest) != 2 or not rest[1].startswith("fixture="):
                    raise ScenarioParseError(n, 'expect needs "<command>" fixture=<path>')
                try:
                    resolve_show(rest[0])
                except CommandError as e:
                    raise ScenarioParseError(n, f"bad show command: {e}") from None
                fixture = fix_base / rest[1][len("fixture="):]
                if not fixture.exists():
                    raise MissingFixture(n, f"fixture {fixture} not found")
                sc.actions.append(ScheduledAction(t, "expect", target, command=rest[0], fixture=fixture, line=n))
            elif action == "ping":
                need_node(target, n)
                if not rest:
                    raise ScenarioParseError(n, "ping needs an address")
                try:
                    parse_address(rest[0])
                except MalformedAddress as e:
                    raise ScenarioParseError(n, str(e)) from None
                kv = _kv(rest[1:], n)
                want = kv.get("expect")
                if want not in (None, "success", "fail"):
                    raise ScenarioParseError(n, "expect= must be success or fail")
                sc.actions.append(
                    ScheduledAction(
                        t, "ping", target, address=rest[0],
                        want_success=None if want is None else want == "success", line=n,
                    )
                )
            else:
                raise ScenarioParseError(n, f"unknown action {action!r}")
        elif head == "run":
            kv = _kv(words[1:], n)
            if "until" not in kv:
                raise ScenarioParseError(n, "run needs until=<ms>")
            sc.horizon_ms = _int(kv["until"], n)
        else:
            raise ScenarioParseError(n, f"unknown directive {head!r}")
        i += 1
    return sc
