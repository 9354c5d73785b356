from pathlib import Path

import pytest

from eigrpsim.scenario import load_scenario

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"
LAB = SCENARIOS / "two_router_lab.esim"


def two_router_sim(until_ms=60_000, trace=False):
    sc = load_scenario(LAB)
    sim = sc.build(trace=trace)
    sim.run(until_ms)
    return sim


@pytest.fixture
def converged():
    return two_router_sim()


def pytest_terminal_summary(terminalreporter):
    rows = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if getattr(rep, "when", None) != "call":
                continue
            props = dict(rep.user_properties)
            if "criterion" in props:
                rows.append((props["criterion"], outcome, props.get("detail", "")))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for (num, title), outcome, detail in sorted(rows):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {num} {title}: {status} {detail}".rstrip())
