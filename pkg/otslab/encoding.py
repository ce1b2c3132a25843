"""Canonical hex rendering for chain values.

Output is always ``0x`` followed by upper-case digits, zero padded to
``ceil(bits / 4)`` digits. Parsing is case-insensitive and tolerates a
missing ``0x`` prefix.
"""
import binascii
import re

from .exceptions import HexFormatError

_HEX_RE = re.compile(r"^(0[xX])?([0-9a-fA-F]+)$")


def hex_digits(bits: int) -> int:
    return (bits + 3) // 4


def format_hex(value: int, bits: int) -> str:
    """Render ``value`` as canonical hex for a ``bits``-wide field."""
    if value < 0 or value >= (1 << bits):
        raise HexFormatError(f"Value {value:#x} does not fit in {bits} bits")
    return "0x" + format(value, "X").zfill(hex_digits(bits))


def parse_hex(text: str, bits: int = 0) -> int:
    """Parse hex text; when ``bits`` is given the value must fit in it."""
    match = _HEX_RE.match(text.strip()) if isinstance(text, str) else None
    if match is None:
        raise HexFormatError(f"Malformed hex value: {text!r}")
    value = int(match.group(2), 16)
    if bits and value >= (1 << bits):
        raise HexFormatError(f"Hex value {text!r} exceeds {bits} bits")
    return value


def bytes_to_hex(data: bytes) -> str:
    return "0x" + binascii.hexlify(data).decode("ascii").upper()


def hex_to_bytes(text: str, length: int) -> bytes:
    """Parse hex text into exactly ``length`` bytes (big-endian, left padded)."""
    value = parse_hex(text, bits=length * 8)
    return value.to_bytes(length, "big")
