"""
Property-Based Tests for SignerService

Feature: signer
Scheme dispatch for keygen, sign and verify.
"""
import pytest
from hypothesis import given, strategies as st, settings

from otslab.exceptions import DomainError
from otslab.keystore import Scheme, SignatureRecord
from otslab.lcg import ChainMode
from otslab.signer import SignerService

from tests.conftest import POSIX_F_T, POSIX_P, POSIX_S, POSIX_SEED, POSIX_T

# ============================================================================
# Test Data Generators (Strategies)
# ============================================================================

scheme_case_strategy = st.one_of(
    st.tuples(st.just(Scheme.PRNG_OTS), st.sampled_from(["vb", "gcc", "posix", "mmix"])),
    st.tuples(st.just(Scheme.WOTS), st.sampled_from(["sha224", "sha256", "sha3_256"])),
)


class TestSignerService:

    @given(case=scheme_case_strategy, w=st.integers(min_value=1, max_value=7), data=st.data())
    @settings(max_examples=500, deadline=None)
    def test_sign_verify_for_both_schemes(self, case, w, data):
        scheme, paramset = case
        t = data.draw(st.integers(min_value=0, max_value=2**w - 1))
        service = SignerService()
        record = service.keygen(scheme, paramset, w)
        outcome = service.verify(record.public_only(), service.sign(record, t))
        assert outcome.accepted, f"{scheme}/{paramset} w={w} t={t} rejected"
        assert outcome.recomputed == record.public

    def test_demo_intermediates(self):
        service = SignerService()
        record = service.keygen(Scheme.PRNG_OTS, "posix", 24, POSIX_SEED)
        assert record.public == POSIX_P
        assert service.chain_value(record, POSIX_T) == POSIX_F_T
        outcome = service.verify(record, SignatureRecord(Scheme.PRNG_OTS, "posix", 24, POSIX_T, POSIX_S))
        assert outcome.unmasked == POSIX_F_T
        assert outcome.recomputed == POSIX_P

    def test_modes_produce_same_keys(self):
        seq = SignerService(mode=ChainMode.SEQUENTIAL).keygen(Scheme.PRNG_OTS, "gcc", 14, 5)
        jump = SignerService(mode=ChainMode.JUMP).keygen(Scheme.PRNG_OTS, "gcc", 14, 5)
        assert seq.public == jump.public

    def test_mismatched_signature_rejected(self):
        service = SignerService()
        record = service.keygen(Scheme.PRNG_OTS, "posix", 24, POSIX_SEED)
        foreign = SignatureRecord(Scheme.PRNG_OTS, "posix", 20, 5, POSIX_S)
        with pytest.raises(DomainError):
            service.verify(record, foreign)

    def test_public_record_cannot_sign(self):
        service = SignerService()
        record = service.keygen(Scheme.PRNG_OTS, "vb", 8, 1).public_only()
        with pytest.raises(DomainError):
            service.sign(record, 3)

    def test_position_needs_exactly_one_source(self):
        service = SignerService()
        record = service.keygen(Scheme.PRNG_OTS, "vb", 8, 1)
        with pytest.raises(DomainError):
            service.resolve_position(record, None, None)
        with pytest.raises(DomainError):
            service.resolve_position(record, 3, b"message")
        assert 0 <= service.resolve_position(record, None, b"message") <= 255
