"""
Two routers, one serial link
============================

Load the shipped two-router network, let it run for a minute of virtual
time and look at it the way an operator would.
"""

from pathlib import Path

from eigrpsim import load_scenario, ping, parse_address, render_show

HERE = Path(__file__).resolve().parent
sc = load_scenario(HERE.parent / "scenarios" / "two_router_lab.esim")

# build() wires up nodes and links and applies the startup configs;
# nothing has happened yet, so no neighbors and no learned routes
sim = sc.build()
r0 = sim.nodes["router0"]
print(render_show(r0, "sh ipv6 eigrp neighbors"))

# the first hellos cross the 20 ms serial line, the adjacency forms and
# each side sends its full table
sim.run(60_000)
print()
print(render_show(r0, "sh ipv6 route"))
print()
print(render_show(r0, "sh ipv6 eigrp topology"))
print()
print(render_show(r0, "sh ipv6 eigrp neighbors"))

# one Update crossed the link and was acked right away: SRTT 40, RTO at its floor
n = next(iter(r0.neighbors))
print(f"\nsrtt={n.srtt_ms} ms rto={n.rto_ms} ms queue={n.queue_count}")

# PC to PC across both routers: 1 + 20 + 1 ms each way
res = ping(sim, "pc0", parse_address("2012:13:13:13::20"))
print(res)

print(f"\n{sim.event_count} events, trace {sim.trace_hash()[:16]}...")
