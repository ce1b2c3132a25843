"""
Pytest configuration and fixtures for otslab tests.
"""
import os
import sys
import tempfile
import shutil
import pytest

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from otslab.keystore import KeyRecord, Scheme  # noqa: E402
from otslab.signer import SignerService  # noqa: E402

# Golden values shared by several suites
POSIX_SEED = 0x13579BDE
POSIX_T = 12345678
POSIX_P = 0xE9694A840B48
POSIX_S = 0xECE38D6DD84C
POSIX_F_T = 0xECE653813E21

WOTS_R = 0xD14A028C2A3A2BC9476102BB288234C415A2B01F828EA62AC5B3E42F


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-size chains (2^24 steps); deselect with -m 'not slow'")


@pytest.fixture(scope="function")
def temp_key_dir():
    """Create a temporary key directory for testing."""
    temp_dir = tempfile.mkdtemp(prefix="test_keys_")
    yield temp_dir
    # Cleanup after test
    if os.path.exists(temp_dir):
        shutil.rmtree(temp_dir)


@pytest.fixture(scope="function")
def signer():
    return SignerService()


@pytest.fixture(scope="function")
def posix_keypair(temp_key_dir, signer):
    """A posix key pair at w=24 written to <tmp>/demo.key and <tmp>/demo.pub."""
    record = signer.keygen(Scheme.PRNG_OTS, "posix", 24, POSIX_SEED)
    private_path, public_path = signer.save_keypair(record, os.path.join(temp_key_dir, "demo"))
    return record, private_path, public_path


@pytest.fixture(scope="function")
def small_wots_keypair(temp_key_dir, signer):
    """A sha224 key pair at w=8, small enough to walk in tests."""
    record = signer.keygen(Scheme.WOTS, "sha224", 8, WOTS_R)
    private_path, public_path = signer.save_keypair(record, os.path.join(temp_key_dir, "wots"))
    return record, private_path, public_path


@pytest.fixture(scope="function")
def isolated_env(temp_key_dir, monkeypatch):
    """Point every OTSLAB_* setting at the temporary directory."""
    for name in list(os.environ):
        if name.startswith("OTSLAB_"):
            monkeypatch.delenv(name, raising=False)
    monkeypatch.setenv("OTSLAB_KEY_DIR", temp_key_dir)
    monkeypatch.setenv("OTSLAB_BENCH_DATABASE_URL", "sqlite:///" + os.path.join(temp_key_dir, "bench.db"))
    return temp_key_dir


def make_record(**overrides) -> KeyRecord:
    values = dict(scheme=Scheme.PRNG_OTS, paramset="posix", w=24, public=POSIX_P, private=POSIX_SEED)
    values.update(overrides)
    return KeyRecord(**values)
