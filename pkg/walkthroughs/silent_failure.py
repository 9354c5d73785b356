"""
Losing a neighbor without being told
====================================

A link that dies without dropping carrier can only be noticed when the
hold timer runs out.  Follow router0 through it and back.
"""

from pathlib import Path

from eigrpsim import load_scenario, ping, parse_address

HERE = Path(__file__).resolve().parent
sim = load_scenario(HERE.parent / "scenarios" / "two_router_lab.esim").build()
sim.run(40_000)

r0 = sim.nodes["router0"]
dest = parse_address("2012:13:13:13::20")


def learned(router):
    return [f"{e.prefix.upper()} [{e.admin_distance}/{e.metric}]" for e in router.rib if e.code == "D"]


n = next(iter(r0.neighbors))
print(f"t={sim.now}: hold expires at {n.hold_expires_ms}, routes {learned(r0)}")

# the serial line goes dark; interfaces stay up
sim.set_link("s1", False, silent=True)
print(f"t={sim.now}: link dead, routes still {learned(r0)}")
print(" ping:", ping(sim, "pc0", dest))

# nothing happens until the last hello we heard is 15 s old
sim.run(n.hold_expires_ms - 1)
print(f"t={sim.now}: neighbors {len(r0.neighbors)}")
sim.run(n.hold_expires_ms)
t, who, why = r0.lost_log[-1]
print(f"t={t}: lost {who.link_local.upper()} on {who.interface} ({why}), routes {learned(r0)}")
print(" ping:", ping(sim, "pc0", dest))

# bring it back; a fresh hello rebuilds the adjacency within one interval
sim.set_link("s1", True, silent=True)
sim.run(sim.now + 6_000)
print(f"t={sim.now}: routes {learned(r0)}")
print(" ping:", ping(sim, "pc0", dest))
