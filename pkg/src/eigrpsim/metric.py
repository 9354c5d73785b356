"""Composite metric arithmetic.

A route carries a vector (minimum bandwidth, total delay, reliability,
load, hop count, MTU).  Each hop folds in the receiving interface; the
scalar distance is derived from the vector under the K-weights.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional, Tuple

__all__ = [
    "KValues",
    "DEFAULT_K",
    "MetricVector",
    "UNREACHABLE",
    "INFINITY",
    "MAX_METRIC",
    "DEFAULT_MAX_HOPS",
    "InterfaceKind",
    "composite",
    "accumulate",
    "default_params",
    "connected_vector",
]

INFINITY = 2**32 - 1
MAX_METRIC = 2**32 - 2
DEFAULT_MAX_HOPS = 100


@dataclass(frozen=True)
class KValues:
    k1: int = 1
    k2: int = 0
    k3: int = 1
    k4: int = 0
    k5: int = 0

    def __str__(self) -> str:
        return ", ".join(f"K{i}={v}" for i, v in enumerate(self.as_tuple(), 1))

    def as_tuple(self) -> Tuple[int, int, int, int, int]:
        return (self.k1, self.k2, self.k3, self.k4, self.k5)


DEFAULT_K = KValues()


@dataclass(frozen=True)
class MetricVector:
    bandwidth: int  # minimum along the path, kbit/s
    delay: int  # sum along the path, microseconds
    reliability: int = 255
    load: int = 1
    hop_count: int = 0
    mtu: int = 1500
    unreachable: bool = False

    def __str__(self) -> str:
        if self.unreachable:
            return "inf"
        return f"bw={self.bandwidth} dly={self.delay} hops={self.hop_count}"


# All unreachable vectors compare equal to this one value.
UNREACHABLE = MetricVector(bandwidth=1, delay=0, reliability=0, load=255, hop_count=0, mtu=0, unreachable=True)


class InterfaceKind(enum.Enum):
    FAST_ETHERNET = ("FastEthernet", "Fa", 100_000, 100)
    SERIAL = ("Serial", "Se", 1544, 20_000)

    def __init__(self, full_name, short_name, bandwidth, delay):
        self.full_name = full_name
        self.short_name = short_name
        self.bandwidth = bandwidth
        self.delay = delay


def default_params(
    kind: InterfaceKind, bandwidth: Optional[int] = None, delay: Optional[int] = None
) -> Tuple[int, int]:
    """(bandwidth kbit/s, delay usec) for an interface, honouring overrides."""
    return (
        kind.bandwidth if bandwidth is None else bandwidth,
        kind.delay if delay is None else delay,
    )


def composite(v: MetricVector, k: KValues = DEFAULT_K) -> int:
    if v.unreachable:
        return INFINITY
    bw = 10**7 // v.bandwidth
    dly = v.delay // 10
    m = k.k1 * bw + (k.k2 * bw) // (256 - v.load) + k.k3 * dly
    m *= 256
    if k.k5:
        m = m * k.k5 // (v.reliability + k.k4)
    return min(m, MAX_METRIC)


def accumulate(
    advertised: MetricVector,
    ingress_bandwidth: int,
    ingress_delay: int,
    max_hops: int = DEFAULT_MAX_HOPS,
) -> MetricVector:
    """Fold the receiving interface into a neighbor's advertised vector."""
    if advertised.unreachable or advertised.hop_count + 1 > max_hops:
        return UNREACHABLE
    return replace(
        advertised,
        bandwidth=min(advertised.bandwidth, ingress_bandwidth),
        delay=advertised.delay + ingress_delay,
        hop_count=advertised.hop_count + 1,
    )


def connected_vector(bandwidth: int, delay: int, mtu: int = 1500) -> MetricVector:
    return MetricVector(bandwidth=bandwidth, delay=delay, mtu=mtu)
