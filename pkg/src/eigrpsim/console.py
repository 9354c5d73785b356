"""An interactive exec/configuration session attached to one router."""

from __future__ import annotations

import sys
from typing import List, TextIO

from .config import GLOBAL, ConfigParser, ConfigSyntaxError, Directive, Op, apply, expand_abbreviations
from .engine import Simulator, ping
from .ipv6 import MalformedAddress, parse_address
from .router import Router
from .show import CommandError, UnknownCommand, match_word, render_show

__all__ = ["ConsoleSession", "EXEC", "CONFIG"]

EXEC = "exec"
CONFIG = "config"


class ConsoleSession:
    def __init__(self, sim: Simulator, node: str):
        router = sim.nodes.get(node)
        if not isinstance(router, Router):
            raise KeyError(f"no router named {node!r}")
        self.sim = sim
        self.router = router
        self.mode = EXEC
        self.parser = ConfigParser()
        self.history: List[str] = []
        self.closed = False

    @property
    def prompt(self) -> str:
        host = self.router.hostname
        if self.mode == EXEC:
            return f"{host}#"
        ctx = self.parser.context
        if ctx[0] == "interface":
            return f"{host}(config-if)#"
        if ctx[0] == "router":
            return f"{host}(config-rtr)#"
        return f"{host}(config)#"

    def exec(self, line: str) -> str:
        line = line.strip()
        if not line or line.startswith("!"):
            return ""
        self.history.append(line)
        try:
            if self.mode == CONFIG:
                return self._config_line(line)
            return self._exec_line(line)
        except CommandError as e:
            return str(e)

    # exec mode -----------------------------------------------------------

    def _exec_line(self, line: str) -> str:
        words = line.split()
        handler = match_word(
            words[0],
            {
                "show": self._show,
                "ping": self._ping,
                "configure": self._configure,
                "resume": self._resume,
                "exit": self._quit,
                "quit": self._quit,
            },
        )
        return handler(words)

    def _show(self, words) -> str:
        return render_show(self.router, " ".join(words))

    def _ping(self, words) -> str:
        if len(words) != 2:
            raise UnknownCommand("ping needs one address")
        try:
            dest = parse_address(words[1])
        except MalformedAddress:
            raise UnknownCommand(f"at '{words[1]}'") from None
        res = ping(self.sim, self.router.name, dest)
        head = [
            "Type escape sequence to abort.",
            f"Sending 5, 100-byte ICMP Echos to {dest.upper()}, timeout is 2 seconds:",
        ]
        if res.success:
            r = res.rtt_ms
            return "\n".join(
                head + ["!!!!!", f"Success rate is 100 percent (5/5), round-trip min/avg/max = {r}/{r}/{r} ms"]
            )
        return "\n".join(head + [".....", "Success rate is 0 percent (0/5)", f"% {res.reason}"])

    def _configure(self, words) -> str:
        if len(words) != 2 or match_word(words[1], {"terminal": True}) is not True:
            raise UnknownCommand("expected 'configure terminal'")
        self.mode = CONFIG
        self.parser.context = GLOBAL
        return "Enter configuration commands, one per line.  End with END."

    def _resume(self, words) -> str:
        if len(words) != 2 or not words[1].isdigit():
            raise UnknownCommand("resume needs a duration in ms")
        self.sim.run(self.sim.now + int(words[1]))
        return f"[t={self.sim.now}]"

    def _quit(self, words) -> str:
        self.closed = True
        return ""

    # configuration mode ----------------------------------------------------

    def _config_line(self, line: str) -> str:
        words = line.split()
        if words[0].lower() == "do":
            return self._exec_line(" ".join(words[1:])) if len(words) > 1 else ""
        ctx = self.parser.context
        line = expand_abbreviations(line, ctx)
        words = line.split()
        if [w.lower() for w in words] == ["exit"] and ctx == GLOBAL:
            self.mode = EXEC
            return ""
        self.parser.lineno += 1
        try:
            directives = self.parser.parse_line(line)
        except ConfigSyntaxError as e:
            return f"% Invalid input detected: {e.message}"
        if any(d.op is Op.END for d in directives):
            self.mode = EXEC
        body: List[Directive] = []
        if directives and directives[0].op not in (Op.INTERFACE_ENTER, Op.ROUTER_EIGRP_ENTER):
            if ctx[0] == "interface":
                body.append(Directive(Op.INTERFACE_ENTER, (ctx[1],)))
            elif ctx[0] == "router":
                body.append(Directive(Op.ROUTER_EIGRP_ENTER, (ctx[1],)))
        body.extend(directives)
        apply(self.router, body)
        return ""

    # driving -------------------------------------------------------------

    def repl(self, stdin: TextIO = sys.stdin, stdout: TextIO = sys.stdout) -> None:
        while not self.closed:
            stdout.write(self.prompt + " ")
            stdout.flush()
            line = stdin.readline()
            if not line:
                stdout.write("\n")
                break
            out = self.exec(line)
            if out:
                stdout.write(out + "\n")
