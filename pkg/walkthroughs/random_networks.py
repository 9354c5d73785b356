"""
Checking DUAL against brute force
=================================

Random connected networks, each compared with an exhaustive search over
every simple path, before and after one link is cut.  A watcher looks
for forwarding cycles after every event.
"""

import random
import sys

from eigrpsim.verify import (
    LoopWatcher,
    converged_distances,
    is_converged,
    oracle_distances,
    random_topology,
    snapshot,
)

count = int(sys.argv[1]) if len(sys.argv) > 1 else 25

print(f"{'seed':>4} {'routers':>7} {'links':>5} {'routes':>6}  cut   before after loops")
bad = 0
for seed in range(count):
    sim = random_topology(seed)
    watch = LoopWatcher(sim, live_only=False)
    sim.run(15_000)
    before = is_converged(sim) and converged_distances(sim) == oracle_distances(snapshot(sim))

    cut = random.Random(seed).choice(sorted(l for l in sim.links if l.startswith("l")))
    sim.set_link(cut, False)
    sim.run(30_000)
    after = is_converged(sim) and converged_distances(sim) == oracle_distances(snapshot(sim))

    routes = len(converged_distances(sim))
    links = sum(1 for l in sim.links if l.startswith("l"))
    print(f"{seed:>4} {len(sim.routers()):>7} {links:>5} {routes:>6}  {cut:<5} {str(before):>6} {str(after):>5} {len(watch.loops):>5}")
    bad += (not before) + (not after) + len(watch.loops)

print("all agree" if not bad else f"{bad} problems")
