import io

import pytest

from conftest import two_router_sim
from eigrpsim.console import CONFIG, EXEC, ConsoleSession


@pytest.fixture
def session():
    return ConsoleSession(two_router_sim(), "router0")


def test_prompts_follow_the_mode(session):
    assert session.prompt == "Router0#"
    session.exec("conf t")
    assert session.mode == CONFIG and session.prompt == "Router0(config)#"
    session.exec("int se0/0/1")
    assert session.prompt == "Router0(config-if)#"
    session.exec("ipv6 router eigrp 10")
    assert session.prompt == "Router0(config-rtr)#"
    session.exec("exit")
    assert session.prompt == "Router0(config)#"
    session.exec("exit")
    assert session.mode == EXEC


def test_show_and_ping(session):
    assert "2012:13:13:13::/64 [90/2172416]" in session.exec("sh ipv6 route")
    out = session.exec("ping 2012:13:13:13::20")
    assert "!!!!!" in out and "= 42/42/42 ms" in out
    assert "Invalid input" in session.exec("ping 2012:::1")
    assert "Invalid input" in session.exec("blah")


def test_shutting_the_serial_link_and_back(session):
    for line in ("configure terminal", "interface Serial0/0/1", "shutdown", "end"):
        session.exec(line)
    assert session.mode == EXEC
    assert "\nD " not in session.exec("show ipv6 route")
    assert "0 percent" in session.exec("ping 2012:13:13:13::20")
    for line in ("conf t", "int se0/0/1", "no shut", "do resume 10000"):
        session.exec(line)
    assert "\nD " in session.exec("do show ipv6 route")


def test_config_errors_are_reported_not_raised(session):
    session.exec("conf t")
    assert session.exec("router-id 1.1.1.1").startswith("% Invalid input detected")
    assert session.mode == CONFIG


def test_hostname_changes_prompt(session):
    session.exec("conf t")
    session.exec("hostname Edge")
    assert session.prompt == "Edge(config)#"


def test_repl_reads_until_exit(session):
    out = io.StringIO()
    session.repl(io.StringIO("sh ipv6 eigrp nei\nresume 1000\nexit\nsh ipv6 route\n"), out)
    text = out.getvalue()
    assert "IPv6-EIGRP neighbors for process 10" in text
    assert "[t=61000]" in text
    assert "Routing Table" not in text


def test_unknown_router():
    with pytest.raises(KeyError):
        ConsoleSession(two_router_sim(), "pc0")
