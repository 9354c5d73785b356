"""IPv6 addresses and prefixes.

Addresses are immutable 16-octet values.  Text output follows the usual
canonical convention: lowercase hex, leading zeros dropped, and the
leftmost longest run of two or more zero groups collapsed to ``::``.
"""

from __future__ import annotations

import enum
import string
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple, TypeVar

__all__ = [
    "MalformedAddress",
    "PrefixLengthOutOfRange",
    "Address128",
    "Prefix",
    "AddressScope",
    "parse_address",
    "format_address",
    "parse_prefix",
    "prefix_contains",
    "longest_prefix_match",
    "EIGRP_MULTICAST",
    "UNSPECIFIED",
]

_HEX = frozenset(string.hexdigits)


class MalformedAddress(ValueError):
    pass


class PrefixLengthOutOfRange(ValueError):
    pass


class AddressScope(enum.Enum):
    GLOBAL_UNICAST = "GlobalUnicast"
    LINK_LOCAL = "LinkLocal"
    MULTICAST = "Multicast"
    UNSPECIFIED = "Unspecified"


@dataclass(frozen=True, order=True)
class Address128:
    octets: bytes

    def __post_init__(self):
        if not isinstance(self.octets, bytes) or len(self.octets) != 16:
            raise ValueError("an IPv6 address is exactly 16 octets")

    @classmethod
    def parse(cls, text: str) -> "Address128":
        return parse_address(text)

    @classmethod
    def from_int(cls, value: int) -> "Address128":
        return cls(value.to_bytes(16, "big"))

    def __int__(self) -> int:
        return int.from_bytes(self.octets, "big")

    def __str__(self) -> str:
        return format_address(self)

    def __repr__(self) -> str:
        return f"Address128({format_address(self)!r})"

    def upper(self) -> str:
        """Canonical text in uppercase hex, as router consoles print it."""
        return format_address(self).upper()

    @property
    def scope(self) -> AddressScope:
        o = self.octets
        if o[0] == 0xFF:
            return AddressScope.MULTICAST
        if o[0] == 0xFE and (o[1] & 0xC0) == 0x80:
            return AddressScope.LINK_LOCAL
        if not any(o):
            return AddressScope.UNSPECIFIED
        return AddressScope.GLOBAL_UNICAST


def parse_address(text: str) -> Address128:
    """Parse a full or ``::``-compressed IPv6 literal."""
    if not isinstance(text, str):
        raise TypeError("address text must be a str")
    s = text.strip()
    if not s:
        raise MalformedAddress("empty address")
    if s.count("::") > 1:
        raise MalformedAddress(f"{text!r}: '::' may appear only once")
    if ":::" in s:
        raise MalformedAddress(f"{text!r}: stray ':'")
    if "::" in s:
        head, tail = s.split("::")
        left = head.split(":") if head else []
        right = tail.split(":") if tail else []
        missing = 8 - len(left) - len(right)
        if missing < 1:
            raise MalformedAddress(f"{text!r}: too many groups")
        groups = left + ["0"] * missing + right
    else:
        groups = s.split(":")
        if len(groups) != 8:
            raise MalformedAddress(f"{text!r}: expected 8 groups, got {len(groups)}")
    out = bytearray()
    for g in groups:
        if not 1 <= len(g) <= 4 or not _HEX.issuperset(g):
            raise MalformedAddress(f"{text!r}: bad group {g!r}")
        out += int(g, 16).to_bytes(2, "big")
    return Address128(bytes(out))


def format_address(addr: Address128) -> str:
    o = addr.octets
    groups = [(o[i] << 8) | o[i + 1] for i in range(0, 16, 2)]
    best_start, best_len = -1, 0
    run_start, run_len = -1, 0
    for i, g in enumerate(groups):
        if g == 0:
            if run_len == 0:
                run_start = i
            run_len += 1
            if run_len > best_len:
                best_start, best_len = run_start, run_len
        else:
            run_len = 0
    text = [format(g, "x") for g in groups]
    if best_len < 2:
        return ":".join(text)
    left = ":".join(text[:best_start])
    right = ":".join(text[best_start + best_len:])
    return f"{left}::{right}"


def _mask(length: int) -> int:
    return ((1 << length) - 1) << (128 - length) if length else 0


@dataclass(frozen=True, order=True)
class Prefix:
    """An address block; host bits are always stored as zero."""

    address: Address128
    length: int

    def __post_init__(self):
        if not isinstance(self.length, int) or not 0 <= self.length <= 128:
            raise PrefixLengthOutOfRange(f"prefix length {self.length!r} not in 0..128")
        masked = int(self.address) & _mask(self.length)
        if masked != int(self.address):
            object.__setattr__(self, "address", Address128.from_int(masked))

    @classmethod
    def parse(cls, text: str) -> "Prefix":
        return parse_prefix(text)[0]

    def __str__(self) -> str:
        return f"{self.address}/{self.length}"

    def __repr__(self) -> str:
        return f"Prefix({str(self)!r})"

    def upper(self) -> str:
        return f"{self.address.upper()}/{self.length}"

    def sort_key(self):
        return (self.address.octets, self.length)


def parse_prefix(text: str) -> Tuple[Prefix, bool]:
    """Parse ``<address>/<length>``.

    Returns the normalized prefix and whether the literal carried
    nonzero host bits (i.e. it was really an interface address).
    """
    addr_text, sep, len_text = text.strip().partition("/")
    if not sep:
        raise MalformedAddress(f"{text!r}: missing '/<length>'")
    addr = parse_address(addr_text)
    if not len_text.isdigit():
        raise PrefixLengthOutOfRange(f"{text!r}: prefix length is not a number")
    length = int(len_text)
    if length > 128:
        raise PrefixLengthOutOfRange(f"{text!r}: prefix length {length} > 128")
    prefix = Prefix(addr, length)
    return prefix, prefix.address != addr


def prefix_contains(p: Prefix, a: Address128) -> bool:
    return (int(a) & _mask(p.length)) == int(p.address)


T = TypeVar("T")


def longest_prefix_match(
    entries: Iterable[Tuple[Prefix, T]], a: Address128
) -> Optional[Tuple[Prefix, T]]:
    best = None
    for prefix, payload in entries:
        if prefix_contains(prefix, a) and (best is None or prefix.length > best[0].length):
            best = (prefix, payload)
    return best


EIGRP_MULTICAST = parse_address("FF02::A")
UNSPECIFIED = Address128(bytes(16))
