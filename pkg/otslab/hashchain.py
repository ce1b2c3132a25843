"""Winternitz one-time signatures over a single hash chain.

The private key r is one digest-length value; the public key is
``R = h^(2^w - 1)(r)``. A normalized message t in ``[0, 2^w - 1]`` is signed as
``zeta = h^t(r)`` and verified by hashing zeta another ``2^w - 1 - t`` times.
The chain is a bare iterated digest: no masks, no per-step index and no
checksum chains.
"""
import hashlib
import logging
import secrets
from dataclasses import dataclass
from typing import Callable, Dict, Optional

from .encoding import bytes_to_hex, hex_to_bytes
from .exceptions import DomainError, UnknownParameterSetError

logger = logging.getLogger(__name__)

MIN_W = 1
MAX_W = 32
DEFAULT_HASH = "sha224"

# Fixed-length digests only; chain values must keep their length.
DIGESTS: Dict[str, Callable] = {
    "sha224": hashlib.sha224,
    "sha256": hashlib.sha256,
    "sha384": hashlib.sha384,
    "sha512": hashlib.sha512,
    "sha3_224": hashlib.sha3_224,
    "sha3_256": hashlib.sha3_256,
    "sha3_384": hashlib.sha3_384,
    "sha3_512": hashlib.sha3_512,
}


def get_digest(hash_name: str) -> Callable:
    try:
        return DIGESTS[hash_name]
    except KeyError:
        raise UnknownParameterSetError(hash_name, kind="digest") from None


def digest_size(hash_name: str) -> int:
    return get_digest(hash_name)().digest_size


def check_chain_depth(w: int) -> int:
    if not MIN_W <= w <= MAX_W:
        raise DomainError(f"Chain-depth exponent w={w} outside [{MIN_W}, {MAX_W}]")
    return w


def chain_length(w: int) -> int:
    return (1 << check_chain_depth(w)) - 1


def check_position(t: int, w: int) -> int:
    """t must lie in the closed interval [0, 2^w - 1]."""
    top = chain_length(w)
    if not 0 <= t <= top:
        raise DomainError(f"Chain position t={t} outside [0, {top}] for w={w}")
    return t


@dataclass(frozen=True)
class ChainValue:
    """One digest-length value on a hash chain."""

    data: bytes
    hash_name: str = DEFAULT_HASH

    def __post_init__(self) -> None:
        expected = digest_size(self.hash_name)
        if len(self.data) != expected:
            raise DomainError(
                f"Chain value must be {expected} bytes for {self.hash_name}, got {len(self.data)}"
            )

    @classmethod
    def from_hex(cls, text: str, hash_name: str = DEFAULT_HASH) -> "ChainValue":
        return cls(hex_to_bytes(text, digest_size(hash_name)), hash_name)

    @classmethod
    def from_int(cls, value: int, hash_name: str = DEFAULT_HASH) -> "ChainValue":
        size = digest_size(hash_name)
        if not 0 <= value < (1 << (8 * size)):
            raise DomainError(f"Integer does not fit in a {size}-byte chain value")
        return cls(value.to_bytes(size, "big"), hash_name)

    @classmethod
    def random(cls, hash_name: str = DEFAULT_HASH) -> "ChainValue":
        return cls(secrets.token_bytes(digest_size(hash_name)), hash_name)

    def to_int(self) -> int:
        return int.from_bytes(self.data, "big")

    def to_hex(self) -> str:
        return bytes_to_hex(self.data)

    @property
    def bits(self) -> int:
        return 8 * len(self.data)


@dataclass(frozen=True)
class WotsParams:
    w: int
    hash_name: str = DEFAULT_HASH

    def __post_init__(self) -> None:
        check_chain_depth(self.w)
        get_digest(self.hash_name)

    @property
    def chain_length(self) -> int:
        return chain_length(self.w)


def hash_iterate(x: ChainValue, n: int, hash_name: Optional[str] = None) -> ChainValue:
    """h^n(x); n = 0 returns x unchanged."""
    if n < 0:
        raise DomainError(f"Iteration count must be non-negative, got {n}")
    hash_name = hash_name or x.hash_name
    digest = get_digest(hash_name)
    data = x.data
    for _ in range(n):
        data = digest(data).digest()
    return ChainValue(data, hash_name)


def normalize_message(message: bytes, w: int, hash_name: str = DEFAULT_HASH) -> int:
    """Map a message to t in [0, 2^w - 1]: big-endian digest mod 2^w."""
    check_chain_depth(w)
    digest = get_digest(hash_name)(message).digest()
    return int.from_bytes(digest, "big") & ((1 << w) - 1)


def wots_keygen(r: ChainValue, params: WotsParams) -> ChainValue:
    if r.hash_name != params.hash_name:
        raise DomainError(f"Private key digest {r.hash_name} does not match {params.hash_name}")
    return hash_iterate(r, params.chain_length, params.hash_name)


def wots_sign(r: ChainValue, t: int, params: WotsParams) -> ChainValue:
    check_position(t, params.w)
    if t == 0:
        logger.warning("Signing t=0 with WOTS: the signature equals the private key")
    return hash_iterate(r, t, params.hash_name)


def wots_recompute(zeta: ChainValue, t: int, params: WotsParams) -> ChainValue:
    """xi = h^(2^w - 1 - t)(zeta), the value verification compares with R."""
    check_position(t, params.w)
    return hash_iterate(zeta, params.chain_length - t, params.hash_name)


def wots_verify(public: ChainValue, zeta: ChainValue, t: int, params: WotsParams) -> bool:
    xi = wots_recompute(zeta, t, params)
    return secrets.compare_digest(xi.data, public.data)
