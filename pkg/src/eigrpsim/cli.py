"""Command-line entry point: ``eigrpsim run|console|render``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from .console import ConsoleSession
from .scenario import ScenarioParseError, load_scenario
from .show import CommandError, render_show

__all__ = ["main", "build_parser"]

DUMP_COMMANDS = {
    "route": "show ipv6 route",
    "protocols": "show ipv6 protocols",
    "neighbors": "show ipv6 eigrp neighbors",
    "interfaces": "show ipv6 eigrp interfaces",
    "topology": "show ipv6 eigrp topology",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eigrpsim", description="Deterministic EIGRP-for-IPv6 simulator")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario headlessly and check its expectations")
    run.add_argument("scenario")
    run.add_argument("--until", type=int, help="virtual horizon in ms (default: the scenario's)")
    run.add_argument("--trace", help="write the event trace to this file")
    run.add_argument("--dump-dir", help="write every show view of every router here")

    con = sub.add_parser("console", help="run to the horizon, then open a console")
    con.add_argument("scenario")
    con.add_argument("--node", help="router to attach to (default: the first)")
    con.add_argument("--until", type=int)

    ren = sub.add_parser("render", help="print one show command after running")
    ren.add_argument("scenario")
    ren.add_argument("--node", required=True)
    ren.add_argument("--cmd", required=True)
    ren.add_argument("--until", type=int)
    return p


def _load(path: str):
    try:
        return load_scenario(path)
    except FileNotFoundError:
        print(f"error: {path}: no such file", file=sys.stderr)
    except ScenarioParseError as e:
        print(f"error: {path}: {e}", file=sys.stderr)
    return None


def _cmd_run(args) -> int:
    sc = _load(args.scenario)
    if sc is None:
        return 2
    report = sc.run(args.until)
    for e in report.expectations:
        status = "PASS" if e.passed else "FAIL"
        line = f"{status} t={e.time_ms} {e.node} \"{e.command}\" {Path(e.fixture).name}"
        print(line if e.passed else f"{line}: {e.detail}")
    for t, node, addr, res, ok in report.pings:
        print(f"{'PASS' if ok else 'FAIL'} t={t} ping {node} -> {addr}: {res}")
    for c in report.convergence:
        print(f"converged after {c.label} at t={c.time_ms}: {c.duration_ms} ms")
    if report.horizon_exceeded:
        print("warning: work still in flight at the horizon")
    print(f"events={report.event_count} trace={report.trace_hash}")
    if args.trace:
        Path(args.trace).write_text("\n".join(sc.sim.trace) + "\n")
    if args.dump_dir:
        out = Path(args.dump_dir)
        out.mkdir(parents=True, exist_ok=True)
        for r in sc.sim.routers():
            for name, cmd in DUMP_COMMANDS.items():
                (out / f"{r.name}_{name}.txt").write_text(render_show(r, cmd) + "\n")
    return 0 if report.passed else 1


def _cmd_console(args) -> int:
    sc = _load(args.scenario)
    if sc is None:
        return 2
    sc.run(args.until)
    routers = sc.sim.routers()
    node = args.node or (routers[0].name if routers else None)
    try:
        session = ConsoleSession(sc.sim, node)
    except KeyError as e:
        print(f"error: {e.args[0]}", file=sys.stderr)
        return 2
    session.repl()
    return 0


def _cmd_render(args) -> int:
    sc = _load(args.scenario)
    if sc is None:
        return 2
    if args.node not in sc.nodes or sc.nodes[args.node].type != "router":
        print(f"error: no router named {args.node!r}", file=sys.stderr)
        return 2
    sc.run(args.until)
    try:
        print(render_show(sc.sim.nodes[args.node], args.cmd))
    except CommandError as e:
        print(str(e), file=sys.stderr)
        return 2
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "console": _cmd_console, "render": _cmd_render}[args.command]
    return handler(args)
