"""Demonstrations of the documented limitations of both one-time schemes.

``forge_forward`` shows why a key must never sign twice: anyone holding a
signature for t can continue the public chain computation and produce a
valid signature for any t' > t without the private key.

``recover_seed`` shows that the LCG chain is not one-way. With an odd
multiplier every step has a unique inverse, so a PRNG-OTS signature (which
reveals f_t(p) after unmasking) leads straight back to the private seed. The
same walk from the public key P recovers p from public data alone. This
contradicts the claim that inverting a step leaves many candidates; with
odd a there is exactly one.
"""
import logging

from . import hashchain, lcg
from .exceptions import DomainError
from .hashchain import ChainValue, WotsParams, chain_length, check_position
from .keystore import Scheme, SignatureRecord
from .lcg import ChainMode, LcgParams

logger = logging.getLogger(__name__)


def _check_forward(t: int, t_target: int, w: int) -> None:
    check_position(t, w)
    check_position(t_target, w)
    if t_target <= t:
        raise DomainError(f"Forward forgery needs t_target > t, got t={t} t_target={t_target}")


def forge_wots_forward(zeta: ChainValue, t: int, t_target: int, params: WotsParams) -> ChainValue:
    """zeta' = h^(t_target - t)(zeta)."""
    _check_forward(t, t_target, params.w)
    return hashchain.hash_iterate(zeta, t_target - t, params.hash_name)


def forge_prng_forward(S: int, t: int, t_target: int, params: LcgParams, w: int,
                       mode: ChainMode = ChainMode.JUMP) -> int:
    """Unmask S, step forward t_target - t, mask again."""
    _check_forward(t, t_target, w)
    f_t = lcg.seed_init(S, params)
    f_target = lcg.advance(f_t, t_target - t, mode)
    return (params.a ^ f_target.value) & params.mask


def forge_forward(signature: SignatureRecord, t_target: int,
                  mode: ChainMode = ChainMode.JUMP) -> SignatureRecord:
    """A signature for t_target derived from one for signature.t, no private key used."""
    if signature.scheme is Scheme.PRNG_OTS:
        params = lcg.registry_get(signature.paramset)
        value = forge_prng_forward(signature.value, signature.t, t_target, params, signature.w, mode)
    else:
        params = WotsParams(signature.w, signature.paramset)
        zeta = ChainValue.from_int(signature.value, signature.paramset)
        value = forge_wots_forward(zeta, signature.t, t_target, params).to_int()
    logger.info(f"Forged {signature.scheme} signature forward from t={signature.t} to t={t_target}")
    return SignatureRecord(scheme=signature.scheme, paramset=signature.paramset, w=signature.w,
                           t=t_target, value=value)


def recover_seed(S: int, t: int, params: LcgParams, mode: ChainMode = ChainMode.JUMP) -> int:
    """p from a signature: unmask f_t(p), invert t steps, unmask f_0(p)."""
    if t < 0:
        raise DomainError(f"Chain position t={t} must be non-negative")
    if not 0 <= S < params.modulus:
        raise DomainError(f"S={S:#x} outside [0, 2^{params.k})")
    params.inverse_multiplier()
    f_t = lcg.seed_init(S, params)
    f_0 = lcg.retreat(f_t, t, mode)
    return (params.a ^ f_0.value) & params.mask


def recover_seed_from_public(P: int, params: LcgParams, w: int, mode: ChainMode = ChainMode.JUMP) -> int:
    """p from the public key alone: invert 2^w - 1 steps from P."""
    if not 0 <= P < params.modulus:
        raise DomainError(f"P={P:#x} outside [0, 2^{params.k})")
    f_top = lcg.LcgState(P, params, chain_length(w))
    f_0 = lcg.retreat(f_top, chain_length(w), mode)
    return (params.a ^ f_0.value) & params.mask
