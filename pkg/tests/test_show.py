import pytest
from hypothesis import given, settings, strategies as st

from conftest import two_router_sim
from eigrpsim.router import Router
from eigrpsim.show import (
    AmbiguousCommand,
    IncompleteCommand,
    UnknownCommand,
    match_word,
    render_show,
    resolve_show,
    show_neighbors,
    show_route,
    show_topology,
    uptime_format,
    SHOW_COMMANDS,
)


@pytest.mark.parametrize(
    "ms, text",
    [(0, "00:00:00"), (1_274_000, "00:21:14"), (3_661_999, "01:01:01"), (-5, "00:00:00")],
)
def test_uptime_format(ms, text):
    assert uptime_format(0, ms) == text


def test_unique_prefixes_resolve():
    assert resolve_show("sh ipv6 ro") is show_route
    assert resolve_show("SH IPV6 EIGRP TOP") is show_topology
    for spelling in ("neighbors", "neighbour", "neighb", "nei"):
        assert resolve_show(f"show ipv6 eigrp {spelling}") is show_neighbors


def test_bad_show_commands():
    with pytest.raises(UnknownCommand):
        resolve_show("sh ipv6 bogus")
    with pytest.raises(UnknownCommand):
        resolve_show("shw ip")
    with pytest.raises(IncompleteCommand):
        resolve_show("show ipv6 eigrp")
    with pytest.raises(UnknownCommand):
        resolve_show("show ipv6 route extra")
    with pytest.raises(AmbiguousCommand):
        match_word("p", {"ping": 1, "protocols": 2})
    assert str(UnknownCommand("at 'x'")) == "% Invalid input detected at 'x'"


def test_views_of_an_unconfigured_router_do_not_fail():
    r = Router("bare")
    for cmd in ("sh ipv6 route", "sh ipv6 protocols", "sh ipv6 eigrp nei", "sh ipv6 eigrp int",
                "sh ipv6 eigrp top", "show running-config"):
        assert render_show(r, cmd)
    assert "0 entries" in render_show(r, "sh ipv6 route")


def test_neighbor_view_after_convergence():
    sim = two_router_sim()
    out = render_show(sim.nodes["router0"], "sh ipv6 eigrp nei").splitlines()
    row = out[3].split()
    assert row[:3] == ["0", "FE80::2", "Se0/0/1"]
    assert 10 < int(row[3]) <= 15
    assert row[5:8] == ["40", "1000", "0"]


def test_topology_view_forgets_a_silently_dead_route():
    sim = two_router_sim()
    r0 = sim.nodes["router0"]
    # router1 disappears without a word: router0 keeps its route until hold expiry
    sim.set_link("s1", False, silent=True)
    assert "2012:13:13:13::/64" in render_show(r0, "sh ipv6 eigrp top")
    sim.run(sim.now + 16_000)
    assert "2012:13:13:13::/64" not in render_show(r0, "sh ipv6 eigrp top")
    assert "\nD " not in render_show(r0, "sh ipv6 route")


def _full_commands(tree, prefix=()):
    for word, node in tree.items():
        if callable(node):
            yield prefix + (word,), node
        else:
            yield from _full_commands(node, prefix + (word,))


FULL_COMMANDS = list(_full_commands(SHOW_COMMANDS))


def _unique_prefixes(tree, words):
    """For each word of a full command, the shortest unambiguous prefix length."""
    out = []
    node = tree
    for w in words:
        n = 1
        while len({id(v) for k, v in node.items() if k.startswith(w[:n])}) > 1:
            n += 1
        out.append(n)
        node = node[w]
    return out


@settings(max_examples=200)
@given(st.sampled_from(FULL_COMMANDS), st.data())
def test_every_unambiguous_prefix_resolves_like_the_full_command(entry, data):
    words, handler = entry
    mins = _unique_prefixes(SHOW_COMMANDS, words)
    typed = []
    for w, m in zip(words, mins):
        n = data.draw(st.integers(m, len(w)))
        cut = w[:n]
        typed.append(cut.upper() if data.draw(st.booleans()) else cut)
    assert resolve_show(" ".join(typed)) is handler
