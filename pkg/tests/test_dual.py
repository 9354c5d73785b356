import pytest
from hypothesis import given, settings, strategies as st

from eigrpsim.dual import CONNECTED, DualEngine, DualState, NeighborId, NotPassive
from eigrpsim.ipv6 import Prefix, parse_address
from eigrpsim.metric import INFINITY, UNREACHABLE, MetricVector, composite, connected_vector

LAN = Prefix.parse("2012:13:13:13::/64")
SERIAL = (1544, 20_000)
FE = (100_000, 100)


def nid(n, iface="Serial0/0/0"):
    return NeighborId(parse_address(f"FE80::{n}"), iface)


def kinds(out):
    return [(e.kind, e.neighbor, e.destination) for e in out]


def test_connected_prefix_is_passive_with_connected_fd():
    d = DualEngine()
    assert d.connected_add(LAN, "FastEthernet0/0", connected_vector(*FE)) == []
    e = d.topology[LAN]
    assert e.state is DualState.PASSIVE
    assert e.fd == 28160 and e.successors == [CONNECTED]
    assert d.install(LAN) is None


def test_full_table_for_new_neighbor_honours_split_horizon():
    d = DualEngine()
    d.connected_add(LAN, "FastEthernet0/0", connected_vector(*FE))
    serial_net = Prefix.parse("2010:AB8::/64")
    d.connected_add(serial_net, "Serial0/0/0", connected_vector(*SERIAL))
    out = d.add_neighbor(nid(1), *SERIAL)
    # the serial subnet is connected on the neighbor's own interface: not advertised
    assert kinds(out) == [("update", nid(1), LAN)]
    assert composite(out[0].vector) == 28160


def test_learned_route_installs_with_reference_metric():
    d = DualEngine()
    d.add_neighbor(nid(1), *SERIAL)
    d.on_update(LAN, nid(1), connected_vector(*FE))
    e = d.topology[LAN]
    assert e.fd == 2172416 and e.successors == [nid(1)]
    inst = d.install(LAN)
    assert inst.metric == 2172416 and inst.paths[0].next_hop == parse_address("FE80::1")
    assert inst.admin_distance == 90


def test_update_is_propagated_to_other_neighbors_only():
    d = DualEngine()
    d.add_neighbor(nid(1), *SERIAL)
    d.add_neighbor(nid(2, "Serial0/0/1"), *SERIAL)
    out = d.on_update(LAN, nid(1), connected_vector(*FE))
    assert kinds(out) == [("update", nid(2, "Serial0/0/1"), LAN)]


def test_feasible_successor_takes_over_without_going_active():
    d = DualEngine()
    a, b = nid(1, "Serial0/0/0"), nid(2, "Serial0/0/1")
    d.add_neighbor(a, *FE)
    d.add_neighbor(b, *FE)
    d.on_update(LAN, a, MetricVector(100_000, 100))  # best
    d.on_update(LAN, b, MetricVector(100_000, 150))
    e = d.topology[LAN]
    assert e.successors == [a]
    assert e.rows[b].rd < e.fd
    out = d.on_neighbor_lost(a)
    assert e.state is DualState.PASSIVE
    assert e.successors == [b]
    assert not [x for x in out if x.kind == "query"]


def test_no_feasible_successor_runs_a_diffusing_computation():
    d = DualEngine()
    a, b = nid(1, "Serial0/0/0"), nid(2, "Serial0/0/1")
    d.add_neighbor(a, *SERIAL)
    d.add_neighbor(b, *SERIAL)
    d.on_update(LAN, a, connected_vector(*FE))
    # b offers a path whose reported distance is above our FD: not feasible
    d.on_update(LAN, b, MetricVector(1544, 40_000))
    out = d.on_update(LAN, a, UNREACHABLE)
    e = d.topology[LAN]
    assert e.state is DualState.ACTIVE
    assert e.reply_pending == {a, b}
    assert sorted(x.neighbor for x in out if x.kind == "query") == [a, b]
    with pytest.raises(NotPassive):
        d.install(LAN)
    assert d.on_reply(LAN, a, UNREACHABLE) == []
    out = d.on_reply(LAN, b, MetricVector(1544, 40_000))
    assert e.state is DualState.PASSIVE and e.reply_pending == set()
    assert e.successors == [b]
    assert e.fd == composite(MetricVector(1544, 60_000))
    # the new successor is told we cannot reach it through them
    assert ("update", a, LAN) in kinds(out)


def test_route_disappears_when_nobody_has_it():
    d = DualEngine()
    a = nid(1)
    d.add_neighbor(a, *SERIAL)
    d.on_update(LAN, a, connected_vector(*FE))
    out = d.on_update(LAN, a, UNREACHABLE)
    assert d.topology[LAN].state is DualState.ACTIVE
    assert kinds(out) == [("query", a, LAN)]
    d.on_reply(LAN, a, UNREACHABLE)
    assert LAN not in d.topology
    assert d.installations() == []


def test_query_to_active_entry_is_answered_at_once_with_infinity():
    d = DualEngine()
    a, b = nid(1, "Serial0/0/0"), nid(2, "Serial0/0/1")
    d.add_neighbor(a, *SERIAL)
    d.add_neighbor(b, *SERIAL)
    d.on_update(LAN, a, connected_vector(*FE))
    d.on_update(LAN, a, UNREACHABLE)
    out = d.on_query(LAN, b, UNREACHABLE)
    assert [(x.kind, x.neighbor) for x in out] == [("reply", b)]
    assert out[0].vector.unreachable


def test_query_that_forces_active_defers_its_reply():
    d = DualEngine()
    a, b = nid(1, "Serial0/0/0"), nid(2, "Serial0/0/1")
    d.add_neighbor(a, *SERIAL)
    d.add_neighbor(b, *SERIAL)
    d.on_update(LAN, a, connected_vector(*FE))
    out = d.on_query(LAN, a, UNREACHABLE)
    assert not [x for x in out if x.kind == "reply"]
    assert d.topology[LAN].deferred_replies == [a]
    d.on_reply(LAN, a, UNREACHABLE)
    out = d.on_reply(LAN, b, UNREACHABLE)
    assert ("reply", a, LAN) in kinds(out)


def test_query_answered_from_passive_state():
    d = DualEngine()
    a, b = nid(1, "Serial0/0/0"), nid(2, "Serial0/0/1")
    d.add_neighbor(a, *SERIAL)
    d.add_neighbor(b, *SERIAL)
    d.connected_add(LAN, "FastEthernet0/0", connected_vector(*FE))
    out = d.on_query(LAN, b, UNREACHABLE)
    reply = [x for x in out if x.kind == "reply"]
    assert len(reply) == 1 and composite(reply[0].vector) == 28160


def test_stale_reply_and_unknown_neighbor_are_counted():
    d = DualEngine()
    d.on_reply(LAN, nid(1), UNREACHABLE)
    assert d.stale_replies == 1
    d.on_update(LAN, nid(9), connected_vector(*FE))
    d.on_query(LAN, nid(9), connected_vector(*FE))
    assert d.unknown_neighbor_drops == 2
    assert LAN not in d.topology


def test_variance_admits_unequal_feasible_paths():
    a, b = nid(1, "Serial0/0/0"), nid(2, "Serial0/0/1")
    for variance, expected in [(1, [a]), (2, [a, b])]:
        d = DualEngine(variance=variance)
        d.add_neighbor(a, *FE)
        d.add_neighbor(b, *FE)
        d.on_update(LAN, a, MetricVector(100_000, 1000))
        d.on_update(LAN, b, MetricVector(100_000, 1050))  # rd below FD, costlier
        assert d.topology[LAN].successors == expected


def test_variance_never_admits_an_infeasible_path():
    a, b = nid(1, "Serial0/0/0"), nid(2, "Serial0/0/1")
    d = DualEngine(variance=4)
    d.add_neighbor(a, *FE)
    d.add_neighbor(b, *FE)
    d.on_update(LAN, a, MetricVector(100_000, 1000))
    d.on_update(LAN, b, MetricVector(100_000, 1500))
    e = d.topology[LAN]
    assert e.rows[b].rd >= e.fd
    assert e.successors == [a]


def test_equal_cost_paths_capped_by_max_paths():
    d = DualEngine(max_paths=2)
    ns = [nid(i, f"FastEthernet0/{i}") for i in range(1, 5)]
    for n in ns:
        d.add_neighbor(n, *FE)
        d.on_update(LAN, n, MetricVector(100_000, 1000))
    e = d.topology[LAN]
    assert e.successors == sorted(ns)[:2]
    assert len(d.install(LAN).paths) == 2


def test_link_change_reaccumulates_rows():
    d = DualEngine()
    a = nid(1)
    d.add_neighbor(a, *SERIAL)
    d.on_update(LAN, a, connected_vector(*FE))
    d.link_change("Serial0/0/0", 1544, 40_000)
    assert d.topology[LAN].distance == composite(MetricVector(1544, 40_100))


def test_connected_route_beats_learned_one():
    d = DualEngine()
    a = nid(1)
    d.add_neighbor(a, *SERIAL)
    d.on_update(LAN, a, connected_vector(*FE))
    d.connected_add(LAN, "FastEthernet0/0", connected_vector(*FE))
    assert d.topology[LAN].successors == [CONNECTED]
    # the learned row's rd equals the connected FD, so it is not feasible
    out = d.connected_remove(LAN)
    assert d.topology[LAN].state is DualState.ACTIVE
    assert kinds(out) == [("query", a, LAN)]
    d.on_reply(LAN, a, connected_vector(*FE))
    assert d.topology[LAN].successors == [a]


# randomized invariants --------------------------------------------------

NEIGHBORS = [nid(1, "Serial0/0/0"), nid(2, "Serial0/0/1"), nid(3, "FastEthernet0/1")]
PREFIXES = [LAN, Prefix.parse("2001:11:11:11::/64")]
vectors = st.one_of(
    st.just(UNREACHABLE),
    st.builds(MetricVector, st.sampled_from([1544, 10_000, 100_000]), st.integers(100, 80_000)),
)
events = st.lists(
    st.tuples(
        st.sampled_from(["update", "query", "reply", "lost", "back", "conn", "unconn"]),
        st.integers(0, 2),
        st.integers(0, 1),
        vectors,
    ),
    max_size=40,
)


def check_invariants(d):
    for e in d.topology.values():
        if e.state is DualState.PASSIVE:
            assert not e.reply_pending
            for s in e.successors:
                assert s is CONNECTED or e.rows[s].rd < e.fd
            if e.successors:
                assert e.fd <= e.distance < INFINITY
        else:
            assert e.reply_pending <= set(d.neighbors)
        assert len(e.successors) <= d.max_paths
        for s in e.successors:
            assert s is CONNECTED or s in e.rows


@settings(max_examples=300, deadline=None)
@given(events, st.integers(1, 3))
def test_engine_invariants_hold_under_random_inputs(script, variance):
    d = DualEngine(variance=variance)
    for n in NEIGHBORS:
        d.add_neighbor(n, 10_000, 1000)
    for kind, ni, pi, vec in script:
        n, p = NEIGHBORS[ni], PREFIXES[pi]
        if kind == "update" and n in d.neighbors:
            d.on_update(p, n, vec)
        elif kind == "query" and n in d.neighbors:
            d.on_query(p, n, vec)
        elif kind == "reply":
            d.on_reply(p, n, vec)
        elif kind == "lost":
            d.on_neighbor_lost(n)
        elif kind == "back" and n not in d.neighbors:
            d.add_neighbor(n, 10_000, 1000)
        elif kind == "conn":
            d.connected_add(p, "FastEthernet0/0", connected_vector(*FE))
        elif kind == "unconn":
            d.connected_remove(p)
        check_invariants(d)


@settings(max_examples=200, deadline=None)
@given(events)
def test_every_active_computation_finishes_once_all_reply(script):
    d = DualEngine()
    for n in NEIGHBORS:
        d.add_neighbor(n, 10_000, 1000)
    for kind, ni, pi, vec in script:
        if kind in ("update", "query"):
            getattr(d, f"on_{kind}")(PREFIXES[pi], NEIGHBORS[ni], vec)
    for p in list(d.active_destinations()):
        for n in sorted(d.topology[p].reply_pending):
            d.on_reply(p, n, UNREACHABLE)
    assert d.active_destinations() == []
    check_invariants(d)


def test_two_serial_hops_accumulate():
    # C's LAN seen by A through B: B reports its own one-hop distance
    d = DualEngine()
    b = nid(2)
    d.add_neighbor(b, *SERIAL)
    d.on_update(LAN, b, MetricVector(1544, 20_100))
    assert d.topology[LAN].distance == 256 * (6476 + 2000 + 2000 + 10) == 2684416


def test_variance_two_installs_both_reference_paths():
    b, c = nid(2, "Serial0/0/0"), nid(3, "Serial0/0/1")
    d = DualEngine(variance=2)
    d.add_neighbor(b, *SERIAL)
    d.add_neighbor(c, *SERIAL)
    d.on_update(LAN, b, connected_vector(*FE))
    d.on_update(LAN, c, MetricVector(100_000, 20_100))  # behind a slow LAN hop
    inst = d.install(LAN)
    assert [p.metric for p in inst.paths] == [2172416, 2684416]
    assert 2684416 < 2 * 2172416


def test_twenty_equal_paths_cap_at_sixteen():
    d = DualEngine()
    for i in range(20):
        n = nid(i + 1, f"FastEthernet0/{i}")
        d.add_neighbor(n, *FE)
        d.on_update(LAN, n, MetricVector(100_000, 1000))
    assert len(d.install(LAN).paths) == 16


def test_identical_update_is_silent():
    d = DualEngine()
    a, b = nid(1, "Serial0/0/0"), nid(2, "Serial0/0/1")
    d.add_neighbor(a, *SERIAL)
    d.add_neighbor(b, *SERIAL)
    assert d.on_update(LAN, a, connected_vector(*FE))
    version = d.version
    assert d.on_update(LAN, a, connected_vector(*FE)) == []
    assert d.version == version


def test_split_horizon_on_the_reference_network():
    d = DualEngine()
    a = nid(1, "Serial0/0/0")
    d.add_neighbor(a, *SERIAL)
    d.connected_add(LAN, "FastEthernet0/0", connected_vector(*FE))
    far = Prefix.parse("2001:11:11:11::/64")
    d.on_update(far, a, connected_vector(*FE))
    adv = dict(d.advertisable_routes("Serial0/0/0"))
    assert LAN in adv and far not in adv
    assert set(dict(d.advertisable_routes("FastEthernet0/0"))) == {far}
