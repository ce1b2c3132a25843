"""Key and signature files, and durable one-time-use enforcement.

Files are UTF-8, LF line endings, one ``name=value`` field per line, ``#``
comments allowed. Key fields are written in the fixed order
``scheme, paramset, w, p|r, P|R, used, created``; public files omit the
private line. Signature files carry ``scheme, paramset, w, t, S|zeta``.

The used flag lives beside the private key. Losing that state is equivalent
to losing the key: a rolled-back file would allow a second signature.

Signing through the store first claims the key by creating
``<key>.claim`` with ``O_CREAT | O_EXCL``; exactly one concurrent claimant
wins. The key file is then rewritten with ``used=true`` via a temp file and
``os.replace`` in the same directory. A claim marker is never removed
except by regenerating the key.
"""
import logging
import os
import re
import tempfile
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from typing import Dict, List, Optional, Tuple

from . import hashchain, lcg, prngots
from .encoding import format_hex, parse_hex
from .exceptions import (
    DomainError,
    HexFormatError,
    KeyConsistencyError,
    KeyFileParseError,
    KeyReuseError,
    OtsLabError,
)
from .hashchain import ChainValue, WotsParams

logger = logging.getLogger(__name__)

CLAIM_SUFFIX = ".claim"
_DECIMAL_RE = re.compile(r"[0-9]+")


class Scheme(str, Enum):
    WOTS = "wots"
    PRNG_OTS = "prng-ots"

    def __str__(self) -> str:
        return self.value


class Visibility(str, Enum):
    PRIVATE = "private"
    PUBLIC = "public"


def _now() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


def value_bits(scheme: Scheme, paramset: str) -> int:
    """Width of every serialized value for a scheme/paramset pair."""
    if Scheme(scheme) is Scheme.PRNG_OTS:
        return lcg.registry_get(paramset).k
    return 8 * hashchain.digest_size(paramset)


def serialized_lengths(paramset: str, scheme: Scheme = Scheme.PRNG_OTS) -> Tuple[int, int, int]:
    """(private, public, signature) lengths in bits."""
    bits = value_bits(scheme, paramset)
    return bits, bits, bits


def _field_names(scheme: Scheme) -> Tuple[str, str, str]:
    if scheme is Scheme.PRNG_OTS:
        return "p", "P", "S"
    return "r", "R", "zeta"


@dataclass(frozen=True)
class KeyRecord:
    scheme: Scheme
    paramset: str
    w: int
    public: int
    private: Optional[int] = None
    used: bool = False
    created: datetime = field(default_factory=_now)

    def __post_init__(self) -> None:
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        hashchain.check_chain_depth(self.w)
        bits = self.bits
        for name, value in ((self.public_field, self.public), (self.private_field, self.private)):
            if value is not None and not 0 <= value < (1 << bits):
                raise DomainError(f"{name} does not fit in {bits} bits")

    @property
    def bits(self) -> int:
        return value_bits(self.scheme, self.paramset)

    @property
    def private_field(self) -> str:
        return _field_names(self.scheme)[0]

    @property
    def public_field(self) -> str:
        return _field_names(self.scheme)[1]

    @property
    def is_private(self) -> bool:
        return self.private is not None

    def public_only(self) -> "KeyRecord":
        return replace(self, private=None)


@dataclass(frozen=True)
class SignatureRecord:
    scheme: Scheme
    paramset: str
    w: int
    t: int
    value: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        hashchain.check_position(self.t, self.w)
        bits = self.bits
        if not 0 <= self.value < (1 << bits):
            raise DomainError(f"{self.value_field} does not fit in {bits} bits")

    @property
    def bits(self) -> int:
        return value_bits(self.scheme, self.paramset)

    @property
    def value_field(self) -> str:
        return _field_names(self.scheme)[2]


def recompute_public(record: KeyRecord) -> int:
    """Public value implied by the record's private material."""
    if record.private is None:
        raise DomainError("Record carries no private material")
    if record.scheme is Scheme.PRNG_OTS:
        params = lcg.registry_get(record.paramset)
        return prngots.prng_keygen(record.private, params, record.w).P
    r = ChainValue.from_int(record.private, record.paramset)
    return hashchain.wots_keygen(r, WotsParams(record.w, record.paramset)).to_int()


# ==================== File format ====================

def _render_key(record: KeyRecord, visibility: Visibility) -> str:
    bits = record.bits
    lines = [
        f"# otslab {visibility.value} key",
        f"scheme={record.scheme.value}",
        f"paramset={record.paramset}",
        f"w={record.w}",
    ]
    if visibility is Visibility.PRIVATE:
        lines.append(f"{record.private_field}={format_hex(record.private, bits)}")
    lines.extend([
        f"{record.public_field}={format_hex(record.public, bits)}",
        f"used={'true' if record.used else 'false'}",
        f"created={record.created.isoformat()}",
    ])
    return "\n".join(lines) + "\n"


def _render_signature(signature: SignatureRecord) -> str:
    lines = [
        "# otslab signature",
        f"scheme={signature.scheme.value}",
        f"paramset={signature.paramset}",
        f"w={signature.w}",
        f"t={signature.t}",
        f"{signature.value_field}={format_hex(signature.value, signature.bits)}",
    ]
    return "\n".join(lines) + "\n"


def _read_fields(path: str, allowed: List[str]) -> Dict[str, Tuple[int, str]]:
    """name -> (line number, raw value)."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            content = f.read()
    except UnicodeDecodeError:
        raise KeyFileParseError(f"File is not valid UTF-8: {path}") from None
    fields: Dict[str, Tuple[int, str]] = {}
    for lineno, raw in enumerate(content.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise KeyFileParseError(f"Expected name=value in {path}", line=lineno)
        name, value = (part.strip() for part in line.split("=", 1))
        if name not in allowed:
            raise KeyFileParseError(f"Unknown field in {path}", line=lineno, field=name)
        if name in fields:
            raise KeyFileParseError(f"Duplicate field in {path}", line=lineno, field=name)
        fields[name] = (lineno, value)
    return fields


def _require(fields: Dict[str, Tuple[int, str]], name: str, path: str) -> Tuple[int, str]:
    if name not in fields:
        raise KeyFileParseError(f"Missing field in {path}", field=name)
    return fields[name]


def _parse_scheme(fields: Dict[str, Tuple[int, str]], path: str) -> Scheme:
    lineno, raw = _require(fields, "scheme", path)
    try:
        return Scheme(raw)
    except ValueError:
        raise KeyFileParseError(f"Unknown scheme {raw!r} in {path}", line=lineno, field="scheme") from None


def _parse_int(fields: Dict[str, Tuple[int, str]], name: str, path: str) -> int:
    lineno, raw = _require(fields, name, path)
    if not _DECIMAL_RE.fullmatch(raw):
        raise KeyFileParseError(f"Expected a decimal integer in {path}", line=lineno, field=name)
    return int(raw, 10)


def _parse_hex_field(fields: Dict[str, Tuple[int, str]], name: str, bits: int, path: str) -> int:
    lineno, raw = _require(fields, name, path)
    try:
        return parse_hex(raw, bits)
    except HexFormatError as exc:
        raise KeyFileParseError(str(exc), line=lineno, field=name) from None


def _parse_common(fields: Dict[str, Tuple[int, str]], path: str) -> Tuple[Scheme, str, int, int]:
    scheme = _parse_scheme(fields, path)
    lineno, paramset = _require(fields, "paramset", path)
    try:
        bits = value_bits(scheme, paramset)
    except LookupError as exc:
        raise KeyFileParseError(str(exc), line=lineno, field="paramset") from None
    w = _parse_int(fields, "w", path)
    return scheme, paramset, w, bits


def _atomic_write(path: str, content: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=f".{os.path.basename(path)}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(content)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


# ==================== Key operations ====================

def save_key(record: KeyRecord, path: str, visibility: Visibility = Visibility.PRIVATE) -> None:
    visibility = Visibility(visibility)
    if visibility is Visibility.PRIVATE and not record.is_private:
        raise DomainError("Cannot save a private key file from a public-only record")
    _atomic_write(path, _render_key(record, visibility))


def load_key(path: str, check_consistency: bool = True) -> KeyRecord:
    """Load a key file; private files are checked against their public value."""
    key_fields = ["scheme", "paramset", "w", "p", "r", "P", "R", "used", "created"]
    fields = _read_fields(path, key_fields)
    scheme, paramset, w, bits = _parse_common(fields, path)
    private_name, public_name, _ = _field_names(scheme)
    for foreign in set(key_fields[3:7]) - {private_name, public_name}:
        if foreign in fields:
            raise KeyFileParseError(f"Field not valid for scheme {scheme.value} in {path}",
                                    line=fields[foreign][0], field=foreign)

    public = _parse_hex_field(fields, public_name, bits, path)
    private = _parse_hex_field(fields, private_name, bits, path) if private_name in fields else None

    lineno, used_raw = _require(fields, "used", path)
    if used_raw not in ("true", "false"):
        raise KeyFileParseError(f"Expected true or false in {path}", line=lineno, field="used")

    created = _now()
    if "created" in fields:
        lineno, created_raw = fields["created"]
        try:
            created = datetime.fromisoformat(created_raw)
        except ValueError:
            raise KeyFileParseError(f"Expected an ISO-8601 timestamp in {path}",
                                    line=lineno, field="created") from None

    try:
        record = KeyRecord(scheme=scheme, paramset=paramset, w=w, public=public, private=private,
                           used=used_raw == "true", created=created)
    except DomainError as exc:
        raise KeyFileParseError(f"{exc} in {path}") from None

    if check_consistency and record.is_private:
        expected = recompute_public(record)
        if expected != public:
            raise KeyConsistencyError(
                f"Stored {public_name}={format_hex(public, bits)} in {path} does not match "
                f"recomputed {format_hex(expected, bits)}"
            )
    return record


def claim_path(path: str) -> str:
    return path + CLAIM_SUFFIX


def mark_used(path: str) -> KeyRecord:
    """Claim a private key for its single signature and persist used=true.

    Returns the claimed record. Raises KeyReuseError if the key is already
    used or another caller holds the claim.
    """
    record = load_key(path, check_consistency=False)
    if not record.is_private:
        raise DomainError(f"{path} is a public key file; only private keys can sign")
    if record.used:
        raise KeyReuseError(f"Key {path} has already been used; one-time keys sign exactly once")

    try:
        fd = os.open(claim_path(path), os.O_CREAT | os.O_EXCL | os.O_WRONLY, 0o600)
    except FileExistsError:
        raise KeyReuseError(f"Key {path} is already claimed for signing") from None
    with os.fdopen(fd, "w", encoding="utf-8") as f:
        f.write(f"pid={os.getpid()}\nclaimed={_now().isoformat()}\n")

    # Re-read under the claim so a concurrent rewrite is observed.
    record = load_key(path, check_consistency=False)
    if record.used:
        raise KeyReuseError(f"Key {path} has already been used; one-time keys sign exactly once")
    claimed = replace(record, used=True)
    save_key(claimed, path, Visibility.PRIVATE)
    logger.info(f"Claimed one-time key {path}")
    return claimed


def release_claim(path: str) -> bool:
    """Remove a claim marker; only valid when a fresh key replaces the file."""
    try:
        os.remove(claim_path(path))
    except FileNotFoundError:
        return False
    logger.warning(f"Removed stale claim marker for {path}")
    return True


# ==================== Signature files ====================

def save_signature(signature: SignatureRecord, path: str) -> None:
    _atomic_write(path, _render_signature(signature))


def load_signature(path: str) -> SignatureRecord:
    fields = _read_fields(path, ["scheme", "paramset", "w", "t", "S", "zeta"])
    scheme, paramset, w, bits = _parse_common(fields, path)
    value_name = _field_names(scheme)[2]
    t = _parse_int(fields, "t", path)
    value = _parse_hex_field(fields, value_name, bits, path)
    try:
        return SignatureRecord(scheme=scheme, paramset=paramset, w=w, t=t, value=value)
    except OtsLabError as exc:
        raise KeyFileParseError(f"{exc} in {path}") from None
