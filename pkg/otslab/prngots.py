"""One-time signatures whose chain is LCG iteration instead of hashing.

Key generation seeds the generator with the private value p and walks
``2^w - 1`` steps: ``P = f_(2^w - 1)(p)``. Signing a normalized message t
releases the t-th value masked with the multiplier, ``S = a XOR f_t(p)``.
Verification re-seeds with S, which unmasks to ``f_0(S) = a XOR S = f_t(p)``,
walks the remaining ``2^w - 1 - t`` steps and compares the result V with P.

Chains are evaluated with ``ChainMode.JUMP`` by default; ``ChainMode.SEQUENTIAL``
walks them one step at a time and gives identical outputs.
"""
import logging
import secrets
from dataclasses import dataclass

from . import lcg
from .exceptions import DomainError
from .hashchain import chain_length, check_chain_depth, check_position
from .lcg import ChainMode, LcgParams

logger = logging.getLogger(__name__)

DEFAULT_W = 24


@dataclass(frozen=True)
class PrngOtsKeyPair:
    p: int
    P: int
    params: LcgParams
    w: int
    used: bool = False


@dataclass(frozen=True)
class PrngOtsSignature:
    S: int
    paramset: str
    w: int


def _check_value(name: str, value: int, params: LcgParams) -> int:
    if not 0 <= value < params.modulus:
        raise DomainError(f"{name}={value:#x} outside [0, 2^{params.k}) for {params.name}")
    return value


def generate_seed(params: LcgParams) -> int:
    """k bits from the operating system's entropy source."""
    return secrets.randbits(params.k)


def chain_value(p: int, t: int, params: LcgParams, mode: ChainMode = ChainMode.JUMP) -> int:
    """f_t(p): t generator steps from seed_init(p)."""
    _check_value("p", p, params)
    if t < 0:
        raise DomainError(f"Chain position t={t} must be non-negative")
    return lcg.advance(lcg.seed_init(p, params), t, mode).value


def prng_keygen(p: int, params: LcgParams, w: int = DEFAULT_W,
                mode: ChainMode = ChainMode.JUMP) -> PrngOtsKeyPair:
    check_chain_depth(w)
    public = chain_value(p, chain_length(w), params, mode)
    return PrngOtsKeyPair(p=p, P=public, params=params, w=w)


def prng_sign(p: int, t: int, params: LcgParams, w: int = DEFAULT_W,
              mode: ChainMode = ChainMode.JUMP) -> PrngOtsSignature:
    check_position(t, w)
    if t == 0:
        logger.warning("Signing t=0 with PRNG-OTS: the signature equals the private seed")
    f_t = chain_value(p, t, params, mode)
    return PrngOtsSignature(S=(params.a ^ f_t) & params.mask, paramset=params.name, w=w)


def prng_recompute(S: int, t: int, params: LcgParams, w: int = DEFAULT_W,
                   mode: ChainMode = ChainMode.JUMP) -> int:
    """V = f_(2^w - 1 - t)(S), the value verification compares with P."""
    check_position(t, w)
    _check_value("S", S, params)
    return lcg.advance(lcg.seed_init(S, params), chain_length(w) - t, mode).value


def prng_verify(P: int, S: int, t: int, params: LcgParams, w: int = DEFAULT_W,
                mode: ChainMode = ChainMode.JUMP) -> bool:
    _check_value("P", P, params)
    return prng_recompute(S, t, params, w, mode) == P
