"""A deterministic discrete-event simulator of EIGRP for IPv6.

The pieces, bottom up: :mod:`ipv6` (addresses and prefixes),
:mod:`metric` (the composite metric), :mod:`dual` (per-destination
diffusing computations), :mod:`neighbor` (hellos and reliable delivery),
:mod:`router` (a virtual router), :mod:`engine` (virtual time, links,
hosts and ping), :mod:`scenario` (scenario files), :mod:`verify`
(brute-force oracle and loop checks), and the IOS-style front end in
:mod:`config`, :mod:`show`, :mod:`console` and :mod:`cli`.
"""

from .config import apply, parse_config, render_running_config
from .dual import DualEngine, NeighborId
from .engine import Host, Link, Simulator, ping
from .ipv6 import Address128, Prefix, format_address, parse_address, parse_prefix
from .metric import DEFAULT_K, INFINITY, KValues, MetricVector, composite
from .router import Router
from .scenario import load_scenario, parse_scenario
from .show import render_show

__version__ = "0.1.0"

__all__ = [
    "Address128",
    "Prefix",
    "parse_address",
    "parse_prefix",
    "format_address",
    "KValues",
    "DEFAULT_K",
    "INFINITY",
    "MetricVector",
    "composite",
    "DualEngine",
    "NeighborId",
    "Router",
    "Simulator",
    "Link",
    "Host",
    "ping",
    "parse_config",
    "apply",
    "render_running_config",
    "render_show",
    "load_scenario",
    "parse_scenario",
]
