import logging
import secrets
from dataclasses import dataclass
from typing import Optional, Tuple

from . import hashchain, keystore, lcg, prngots
from .exceptions import DomainError
from .hashchain import ChainValue, WotsParams
from .keystore import KeyRecord, Scheme, SignatureRecord, Visibility
from .lcg import ChainMode

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VerifyOutcome:
    """Verification verdict plus the intermediates a reader can check by hand."""

    accepted: bool
    recomputed: int
    unmasked: Optional[int] = None


class SignerService:
    """签名服务，负责按方案分派密钥生成、签名和验签"""

    def __init__(self, mode: ChainMode = ChainMode.JUMP, message_hash: str = hashchain.DEFAULT_HASH) -> None:
        self.mode = ChainMode(mode)
        # digest used to normalize messages for prng-ots keys
        self.message_hash = message_hash

    # ---------- 密钥生成 ----------
    def keygen(self, scheme: Scheme, paramset: str, w: int, seed: Optional[int] = None) -> KeyRecord:
        scheme = Scheme(scheme)
        if scheme is Scheme.PRNG_OTS:
            params = lcg.registry_get(paramset)
            p = prngots.generate_seed(params) if seed is None else seed
            pair = prngots.prng_keygen(p, params, w, self.mode)
            logger.info(f"PRNG-OTS keygen: params={paramset} w={w} mode={self.mode}")
            return KeyRecord(scheme=scheme, paramset=paramset, w=w, public=pair.P, private=pair.p)

        params = WotsParams(w, paramset)
        r = ChainValue.random(paramset) if seed is None else ChainValue.from_int(seed, paramset)
        public = hashchain.wots_keygen(r, params)
        logger.info(f"WOTS keygen: {params.chain_length} iterations of {paramset}")
        return KeyRecord(scheme=scheme, paramset=paramset, w=w, public=public.to_int(), private=r.to_int())

    def save_keypair(self, record: KeyRecord, prefix: str) -> Tuple[str, str]:
        """写入私钥 <prefix>.key 与公钥 <prefix>.pub"""
        private_path, public_path = f"{prefix}.key", f"{prefix}.pub"
        keystore.save_key(record, private_path, Visibility.PRIVATE)
        keystore.release_claim(private_path)
        keystore.save_key(record, public_path, Visibility.PUBLIC)
        logger.info(f"Wrote {record.scheme} key pair to {private_path} / {public_path}")
        return private_path, public_path

    # ---------- 消息正规化 ----------
    def normalize(self, scheme: Scheme, paramset: str, w: int, message: bytes) -> int:
        if Scheme(scheme) is Scheme.PRNG_OTS:
            return hashchain.normalize_message(message, w, self.message_hash)
        return hashchain.normalize_message(message, w, paramset)

    def resolve_position(self, record, t: Optional[int], message: Optional[bytes]) -> int:
        if (t is None) == (message is None):
            raise DomainError("Exactly one of t or message must be given")
        if message is not None:
            t = self.normalize(record.scheme, record.paramset, record.w, message)
        return hashchain.check_position(t, record.w)

    # ---------- 签名 ----------
    def chain_value(self, record: KeyRecord, t: int) -> int:
        """f_t(p) or h^t(r), the unmasked chain value at position t."""
        if record.scheme is Scheme.PRNG_OTS:
            return prngots.chain_value(record.private, t, lcg.registry_get(record.paramset), self.mode)
        return hashchain.hash_iterate(ChainValue.from_int(record.private, record.paramset), t).to_int()

    def sign(self, record: KeyRecord, t: int) -> SignatureRecord:
        if not record.is_private:
            raise DomainError("A public key cannot sign")
        if record.scheme is Scheme.PRNG_OTS:
            params = lcg.registry_get(record.paramset)
            value = prngots.prng_sign(record.private, t, params, record.w, self.mode).S
        else:
            r = ChainValue.from_int(record.private, record.paramset)
            value = hashchain.wots_sign(r, t, WotsParams(record.w, record.paramset)).to_int()
        return SignatureRecord(scheme=record.scheme, paramset=record.paramset, w=record.w, t=t, value=value)

    def sign_with_store(self, path: str, t: Optional[int] = None,
                        message: Optional[bytes] = None) -> SignatureRecord:
        """Sign once through the key file; the key is claimed before signing."""
        record = keystore.load_key(path)
        t = self.resolve_position(record, t, message)
        claimed = keystore.mark_used(path)
        signature = self.sign(claimed, t)
        logger.info(f"Signed t={t} with one-time key {path}")
        return signature

    # ---------- 验签 ----------
    def verify(self, public: KeyRecord, signature: SignatureRecord) -> VerifyOutcome:
        if (public.scheme, public.paramset, public.w) != (signature.scheme, signature.paramset, signature.w):
            raise DomainError(
                f"Signature ({signature.scheme}, {signature.paramset}, w={signature.w}) does not match "
                f"key ({public.scheme}, {public.paramset}, w={public.w})"
            )
        t = signature.t
        if public.scheme is Scheme.PRNG_OTS:
            params = lcg.registry_get(public.paramset)
            unmasked = lcg.seed_init(signature.value, params).value
            v = prngots.prng_recompute(signature.value, t, params, public.w, self.mode)
            return VerifyOutcome(accepted=v == public.public, recomputed=v, unmasked=unmasked)

        params = WotsParams(public.w, public.paramset)
        zeta = ChainValue.from_int(signature.value, public.paramset)
        xi = hashchain.wots_recompute(zeta, t, params)
        expected = ChainValue.from_int(public.public, public.paramset)
        accepted = secrets.compare_digest(xi.data, expected.data)
        return VerifyOutcome(accepted=accepted, recomputed=xi.to_int())
