from .audit import (
    forge_forward,
    forge_prng_forward,
    forge_wots_forward,
    recover_seed,
    recover_seed_from_public,
)
from .bench import (
    BenchArchive,
    TimingRecord,
    TimingSummary,
    run_bench,
    summarize,
)
from .encoding import format_hex, parse_hex
from .exceptions import (
    BenchConfigurationError,
    DomainError,
    HexFormatError,
    KeyConsistencyError,
    KeyFileParseError,
    KeyReuseError,
    OtsLabError,
    UnknownParameterSetError,
    UnsupportedParametersError,
)
from .hashchain import (
    ChainValue,
    WotsParams,
    hash_iterate,
    normalize_message,
    wots_keygen,
    wots_sign,
    wots_verify,
)
from .keystore import (
    KeyRecord,
    Scheme,
    SignatureRecord,
    Visibility,
    load_key,
    load_signature,
    mark_used,
    save_key,
    save_signature,
    serialized_lengths,
)
from .lcg import (
    ChainMode,
    LcgParams,
    LcgState,
    jump,
    jump_back,
    register_params,
    registry_get,
    seed_init,
    step,
    step_inverse,
)
from .prngots import (
    PrngOtsKeyPair,
    PrngOtsSignature,
    prng_keygen,
    prng_sign,
    prng_verify,
)
from .signer import SignerService, VerifyOutcome

__all__ = [
    "BenchArchive",
    "BenchConfigurationError",
    "ChainMode",
    "ChainValue",
    "DomainError",
    "HexFormatError",
    "KeyConsistencyError",
    "KeyFileParseError",
    "KeyRecord",
    "KeyReuseError",
    "LcgParams",
    "LcgState",
    "OtsLabError",
    "PrngOtsKeyPair",
    "PrngOtsSignature",
    "Scheme",
    "SignatureRecord",
    "SignerService",
    "TimingRecord",
    "TimingSummary",
    "UnknownParameterSetError",
    "UnsupportedParametersError",
    "VerifyOutcome",
    "Visibility",
    "WotsParams",
    "forge_forward",
    "forge_prng_forward",
    "forge_wots_forward",
    "format_hex",
    "hash_iterate",
    "jump",
    "jump_back",
    "load_key",
    "load_signature",
    "mark_used",
    "normalize_message",
    "parse_hex",
    "prng_keygen",
    "prng_sign",
    "prng_verify",
    "recover_seed",
    "recover_seed_from_public",
    "register_params",
    "registry_get",
    "run_bench",
    "save_key",
    "save_signature",
    "seed_init",
    "serialized_lengths",
    "step",
    "step_inverse",
    "summarize",
    "wots_keygen",
    "wots_sign",
    "wots_verify",
]
