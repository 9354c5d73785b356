import pytest
from conftest import two_router_sim
from hypothesis import given, settings, strategies as st

from eigrpsim.config import apply, parse_config
from eigrpsim.engine import Simulator
from eigrpsim.ipv6 import Address128, Prefix, longest_prefix_match, parse_address, prefix_contains
from eigrpsim.router import (
    GateReason,
    Router,
    Unreachable,
    forward_lookup,
    normalize_interface_name,
    process_gate,
    rebuild_rib,
)


def test_interface_names_normalize():
    for text in ("fa0/0", "Fastethernet0/0", "FastEthernet 0/0", "f0/0"):
        assert normalize_interface_name(text) == "FastEthernet0/0"
    assert normalize_interface_name("se0/0/1") == "Serial0/0/1"
    for bad in ("0/0", "gi0/0", "Serial", "fa0/x"):
        with pytest.raises(ValueError):
            normalize_interface_name(bad)


def test_short_interface_names():
    r = Router("r")
    assert r.interface("Serial0/0/1").short_name == "Se0/0/1"
    assert r.interface("fa0/0").short_name == "Fa0/0"


def test_automatic_link_local_uses_router_index():
    r = Router("r", index=7)
    r.interface("fa0/0")
    assert r.link_local("FastEthernet0/0") == parse_address("FE80::7")
    apply(r, parse_config("interface fa0/0\n ipv6 address FE80::99 link-local"))
    assert r.link_local("FastEthernet0/0") == parse_address("FE80::99")


FULL = """
ipv6 unicast-routing
interface FastEthernet0/0
 ipv6 address 2001:DB8:1::1/64
 ipv6 eigrp 5
 no shutdown
ipv6 router eigrp 5
 router-id 1.1.1.1
 no shutdown
"""


@pytest.mark.parametrize(
    "drop, reason",
    [
        ("ipv6 unicast-routing", GateReason.NO_UNICAST_ROUTING),
        (" router-id 1.1.1.1", GateReason.NO_ROUTER_ID),
        (" no shutdown\n", GateReason.SHUTDOWN),
    ],
)
def test_gate_reports_first_missing_prerequisite(drop, reason):
    r = Router("r")
    text = FULL.replace(drop, "", 1) if drop != " no shutdown\n" else FULL.rsplit(" no shutdown", 1)[0]
    apply(r, parse_config(text))
    gate = process_gate(r)
    assert not gate.running and gate.reason is reason
    assert str(gate) == f"Blocked({reason.value})"
    assert not r.running


def test_gate_without_process():
    r = Router("r")
    assert process_gate(r).reason is GateReason.NO_PROCESS
    apply(r, parse_config(FULL))
    assert str(process_gate(r)) == "Running" and r.running


def test_rib_entry_count_law(converged):
    for name in ("router0", "router1"):
        r = converged.nodes[name]
        rib = rebuild_rib(r)
        up = [i for i in r.interfaces.values() if i.ipv6_enabled and r.oper_up(i)]
        local = sum(len(i.prefixes()) * 2 for i in up)
        learned = len(r.dual.installations())
        assert len(rib) == local + learned + 1
        assert [e.prefix for e in rib] == sorted((e.prefix for e in rib), key=Prefix.sort_key)


def test_forward_lookup_examples(converged):
    r0 = converged.nodes["router0"]
    f = forward_lookup(r0, parse_address("2012:13:13:13::20"))
    assert (f.interface, f.next_hop) == ("Serial0/0/1", parse_address("FE80::2"))
    f = forward_lookup(r0, parse_address("2001:11:11:11::10"))
    assert f.interface == "FastEthernet0/0" and not f.local
    assert forward_lookup(r0, parse_address("2010:AB8::1")).local
    with pytest.raises(Unreachable):
        forward_lookup(r0, parse_address("3001::1"))
    with pytest.raises(Unreachable):
        forward_lookup(r0, parse_address("FF02::A"))


@pytest.fixture(scope="module")
def router0():
    return two_router_sim().nodes["router0"]


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**128 - 1), st.sampled_from(["2001:11:11:11::", "2012:13:13:13::", "2010:AB8::"]), st.integers(0, 64))
def test_forward_lookup_agrees_with_longest_prefix_match(router0, low, base, keep):
    r0 = router0
    # bias toward addresses near the routed prefixes
    b = int(parse_address(base))
    mask = (1 << (128 - keep)) - 1
    a = Address128.from_int((b & ~mask) | (low & mask))
    hit = longest_prefix_match(((e.prefix, e) for e in r0.rib), a)
    try:
        f = forward_lookup(r0, a)
    except Unreachable:
        assert hit is None or hit[1].interface == "Null0"
    else:
        assert hit is not None and prefix_contains(hit[1].prefix, a)
        assert f.interface == hit[1].interface


def test_shutting_an_interface_withdraws_its_routes():
    sim = two_router_sim()
    r1 = sim.nodes["router1"]
    apply(r1, parse_config("interface FastEthernet0/0\n shutdown"))
    sim.run(sim.now + 5000)
    r0 = sim.nodes["router0"]
    assert all(e.code != "D" for e in r0.rib)
    with pytest.raises(Unreachable):
        forward_lookup(r0, parse_address("2012:13:13:13::20"))


def test_carrier_loss_removes_connected_routes():
    sim = two_router_sim()
    sim.set_link("s1", False)
    r0 = sim.nodes["router0"]
    assert not any(e.interface == "Serial0/0/1" for e in r0.rib)
    assert not r0.neighbors.entries
    sim.set_link("s1", True)
    sim.run(sim.now + 10_000)
    assert any(e.code == "D" for e in r0.rib)


def test_equal_cost_paths_split_deterministically():
    sim = Simulator(trace=False)
    from eigrpsim.engine import Link

    names = ["a", "b", "c", "d"]
    rs = {n: Router(n, sim, i + 1) for i, n in enumerate(names)}
    # a - b - d and a - c - d, identical costs
    plan = {
        "a": [("Serial0/0/0", "2001:1::1/64"), ("Serial0/0/1", "2001:2::1/64")],
        "b": [("Serial0/0/0", "2001:1::2/64"), ("Serial0/0/1", "2001:3::1/64")],
        "c": [("Serial0/0/0", "2001:2::2/64"), ("Serial0/0/1", "2001:4::1/64")],
        "d": [("Serial0/0/0", "2001:3::2/64"), ("Serial0/0/1", "2001:4::2/64"), ("FastEthernet0/0", "2001:99::1/64")],
    }
    for n, ifs in plan.items():
        lines = ["ipv6 unicast-routing"]
        for iface, addr in ifs:
            lines += [f"interface {iface}", f" ipv6 address {addr}", " ipv6 eigrp 1", " no shutdown"]
        lines += ["ipv6 router eigrp 1", f" router-id {ord(n)}.0.0.1", " no shutdown"]
        apply(rs[n], parse_config("\n".join(lines)))
    sim.add_link(Link("ab", "serial", [("a", "Serial0/0/0"), ("b", "Serial0/0/0")], 20))
    sim.add_link(Link("ac", "serial", [("a", "Serial0/0/1"), ("c", "Serial0/0/0")], 20))
    sim.add_link(Link("bd", "serial", [("b", "Serial0/0/1"), ("d", "Serial0/0/0")], 20))
    sim.add_link(Link("cd", "serial", [("c", "Serial0/0/1"), ("d", "Serial0/0/1")], 20))
    sim.add_link(Link("stub", "lan", [("d", "FastEthernet0/0")], 1))
    for r in rs.values():
        r.refresh()
    sim.run(20_000)
    route = [e for e in rs["a"].rib if e.prefix == Prefix.parse("2001:99::/64")][0]
    assert len(route.paths) == 2
    used = set()
    for i in range(64):
        dst = Address128.from_int(int(parse_address("2001:99::")) + i)
        f1, f2 = forward_lookup(rs["a"], dst), forward_lookup(rs["a"], dst)
        assert f1 == f2
        used.add(f1.interface)
    assert used == {"Serial0/0/0", "Serial0/0/1"}


def hellos_heard(sim, node, iface):
    """Arrival times of hellos (not goodbyes) at ``node:iface``."""
    prefix = f"{node} recv {iface} EIGRP Hello "
    return [
        int(line[3:line.index("]")])
        for line in sim.trace
        if line.split("] ", 1)[1].startswith(prefix) and "goodbye" not in line
    ]


def test_hello_cadence_and_reconfiguration():
    sim = two_router_sim(until_ms=20_000, trace=True)
    # sent at 0, 5, 10 ... s and 20 ms on the wire
    assert hellos_heard(sim, "router1", "Serial0/0/0") == [20, 5020, 10020, 15020]
    apply(sim.nodes["router0"], parse_config("interface se0/0/1\n ipv6 hello-interval eigrp 10 2"))
    changed = sim.now
    sim.run(30_020)
    later = [t - 20 for t in hellos_heard(sim, "router1", "Serial0/0/0") if t - 20 > changed]
    assert later == list(range(changed + 2000, 30_001, 2000))


def test_hold_never_expires_on_healthy_links():
    sim = two_router_sim(until_ms=3_600_000)
    for r in sim.routers():
        assert not r.lost_log and len(r.neighbors) == 1
        assert all(n.queue_count == 0 for n in r.neighbors)


def test_duplicate_delivery_is_idempotent():
    sim = two_router_sim(until_ms=0)
    r0 = sim.nodes["router0"]
    seen = []
    original = r0.receive

    def spy(iface, pkt):
        seen.append((iface, pkt))
        original(iface, pkt)

    r0.receive = spy
    sim.run(30_000)
    updates = [(i, p) for i, p in seen if p.kind.sequenced]
    assert updates
    version, rib = r0.dual.version, list(r0.rib)
    for iface, pkt in updates:
        original(iface, pkt)
    sim.run(40_000)
    assert r0.dual.version == version and r0.rib == rib
    assert len(r0.neighbors) == 1 and not r0.lost_log


def test_all_interfaces_shut_leaves_only_the_multicast_discard():
    sim = two_router_sim()
    r0 = sim.nodes["router0"]
    apply(r0, parse_config("interface fa0/0\n shutdown\ninterface se0/0/1\n shutdown"))
    assert [(e.code, str(e.prefix), e.interface) for e in r0.rib] == [("L", "ff00::/8", "Null0")]


def test_blocked_process_sends_no_hellos():
    sim = two_router_sim(until_ms=30_000, trace=True)
    r0 = sim.nodes["router0"]
    apply(r0, parse_config("ipv6 router eigrp 10\n shutdown"))
    stopped = sim.now
    sim.run(60_000)
    assert not [t for t in hellos_heard(sim, "router1", "Serial0/0/0") if t - 20 > stopped]
    assert r0.neighbors is None or len(r0.neighbors) == 0
    assert not [e for r in sim.routers() for e in r.rib if e.code == "D"]


def test_one_sided_reset_is_recovered_once():
    sim = two_router_sim(until_ms=30_000)
    r0, r1 = sim.nodes["router0"], sim.nodes["router1"]
    (peer,) = [n.key for n in r1.neighbors]
    r1._lose(peer, "test reset")
    sim.run(60_000)
    assert [why for _, _, why in r0.lost_log] == ["peer restarted"]
    assert [why for _, _, why in r1.lost_log] == ["test reset"]
    for r in (r0, r1):
        assert len(r.neighbors) == 1 and any(e.code == "D" for e in r.rib)
