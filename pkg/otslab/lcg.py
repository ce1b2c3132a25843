"""Linear congruential generators over power-of-two moduli.

The generator is seeded by XOR-ing the seed into the multiplier,
``f_0(s) = a XOR s mod 2^k``, and advanced by ``f_n = a * f_{n-1} + c mod 2^k``.
All arithmetic is exact Python integer arithmetic followed by a mask; the
product ``a * value`` may be up to 2k bits wide before reduction.

``jump`` and ``jump_back`` evaluate n forward or backward steps in O(log n)
multiplications by exponentiating the affine map ``x -> a*x + c``. ``step``
is the reference semantics; ``jump`` must agree with it bit for bit.

Every built-in multiplier is odd, so each step is a bijection on
``[0, 2^k)`` and has exactly one preimage. This contradicts the claim that a
backward step admits many candidate values; ``step_inverse`` computes the
unique preimage.
"""
import logging
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Tuple

from .exceptions import DomainError, UnknownParameterSetError, UnsupportedParametersError

logger = logging.getLogger(__name__)

MIN_K = 8
MAX_K = 64


class ChainMode(str, Enum):
    """How a chain of n generator steps is evaluated."""

    SEQUENTIAL = "sequential"
    JUMP = "jump"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class LcgParams:
    """One generator parameter set: multiplier a, increment c, modulus 2^k."""

    name: str
    a: int
    c: int
    k: int

    def __post_init__(self) -> None:
        if not self.name:
            raise UnsupportedParametersError("Parameter set name must not be empty")
        if not MIN_K <= self.k <= MAX_K:
            raise UnsupportedParametersError(
                f"Modulus exponent k={self.k} outside [{MIN_K}, {MAX_K}] for {self.name!r}"
            )
        if not 0 < self.a < self.modulus:
            raise UnsupportedParametersError(f"Multiplier a={self.a} outside (0, 2^{self.k}) for {self.name!r}")
        if not 0 <= self.c < self.modulus:
            raise UnsupportedParametersError(f"Increment c={self.c} outside [0, 2^{self.k}) for {self.name!r}")

    @property
    def modulus(self) -> int:
        return 1 << self.k

    @property
    def mask(self) -> int:
        return (1 << self.k) - 1

    @property
    def invertible(self) -> bool:
        return self.a & 1 == 1

    def inverse_multiplier(self) -> int:
        """a^-1 mod 2^k; only exists for odd a."""
        if not self.invertible:
            raise UnsupportedParametersError(
                f"Multiplier a={self.a} of {self.name!r} is even and has no inverse mod 2^{self.k}"
            )
        return pow(self.a, -1, self.modulus)


@dataclass(frozen=True)
class LcgState:
    """A generator value f_n(s); ``index`` is informational only."""

    value: int
    params: LcgParams
    index: int = field(default=0, compare=False)


# ==================== Parameter registry ====================

BUILTIN_PARAMS: Tuple[LcgParams, ...] = (
    LcgParams("vb", 16598013, 12820163, 24),
    LcgParams("gcc", 1664525, 1013904223, 31),
    LcgParams("posix", 25214903917, 11, 48),
    LcgParams("mmix", 6364136223846793005, 1442695040888963407, 64),
)

_registry: Dict[str, LcgParams] = {}
_registry_lock = threading.Lock()


def _load_builtin_registry() -> None:
    for params in BUILTIN_PARAMS:
        if not params.invertible:
            raise UnsupportedParametersError(f"Built-in parameter set {params.name!r} has an even multiplier")
        _registry[params.name] = params


_load_builtin_registry()


def registry_get(name: str) -> LcgParams:
    try:
        return _registry[name]
    except KeyError:
        raise UnknownParameterSetError(name) from None


def register_params(params: LcgParams) -> LcgParams:
    """Register a custom parameter set. Must happen before generators are used."""
    with _registry_lock:
        existing = _registry.get(params.name)
        if existing is not None and existing != params:
            raise UnsupportedParametersError(f"Parameter set {params.name!r} is already registered")
        _registry[params.name] = params
    logger.info(f"Registered parameter set {params.name}: a={params.a} c={params.c} k={params.k}")
    return params


def parse_custom_params(spec: str) -> LcgParams:
    """Parse ``name:a:c:k``; a and c may be decimal or 0x-prefixed hex."""
    parts = spec.strip().split(":")
    if len(parts) != 4:
        raise UnsupportedParametersError(f"Custom parameter set must be name:a:c:k, got {spec!r}")
    name, a, c, k = parts
    try:
        values = [int(part, 0) for part in (a, c, k)]
    except ValueError as exc:
        raise UnsupportedParametersError(f"Custom parameter set {spec!r} has a non-integer field") from exc
    return LcgParams(name.strip(), *values)


def list_params() -> List[LcgParams]:
    return list(_registry.values())


# ==================== Generator operations ====================

def seed_init(seed: int, params: LcgParams) -> LcgState:
    """f_0(s) = a XOR (s mod 2^k)."""
    if seed < 0:
        raise DomainError(f"Seed must be non-negative, got {seed}")
    return LcgState((params.a ^ (seed & params.mask)) & params.mask, params, 0)


def step(state: LcgState) -> LcgState:
    params = state.params
    return LcgState((params.a * state.value + params.c) & params.mask, params, state.index + 1)


def _compose_power(a: int, c: int, n: int, mask: int) -> Tuple[int, int]:
    """(A, C) such that applying x -> a*x + c n times equals x -> A*x + C."""
    acc_a, acc_c = 1, 0
    while n:
        if n & 1:
            # (a, c) after (acc_a, acc_c)
            acc_a, acc_c = (a * acc_a) & mask, (a * acc_c + c) & mask
        a, c = (a * a) & mask, (a * c + c) & mask
        n >>= 1
    return acc_a, acc_c


def jump(state: LcgState, n: int) -> LcgState:
    """Advance ``n`` steps in O(log n)."""
    if n < 0:
        raise DomainError(f"Jump distance must be non-negative, got {n}")
    params = state.params
    big_a, big_c = _compose_power(params.a, params.c, n, params.mask)
    return LcgState((big_a * state.value + big_c) & params.mask, params, state.index + n)


def walk(state: LcgState, n: int) -> LcgState:
    """Advance ``n`` steps one at a time."""
    if n < 0:
        raise DomainError(f"Walk distance must be non-negative, got {n}")
    params = state.params
    a, c, mask = params.a, params.c, params.mask
    value = state.value
    for _ in range(n):
        value = (a * value + c) & mask
    return LcgState(value, params, state.index + n)


def advance(state: LcgState, n: int, mode: ChainMode = ChainMode.JUMP) -> LcgState:
    if ChainMode(mode) is ChainMode.SEQUENTIAL:
        return walk(state, n)
    return jump(state, n)


def step_inverse(state: LcgState) -> LcgState:
    """x = a^-1 * (value - c) mod 2^k; the unique preimage of one step."""
    params = state.params
    a_inv = params.inverse_multiplier()
    return LcgState((a_inv * (state.value - params.c)) & params.mask, params, max(state.index - 1, 0))


def jump_back(state: LcgState, n: int) -> LcgState:
    """Undo ``n`` steps in O(log n) using the inverse affine map."""
    if n < 0:
        raise DomainError(f"Jump distance must be non-negative, got {n}")
    params = state.params
    a_inv = params.inverse_multiplier()
    # x -> a^-1 * x - a^-1 * c
    c_inv = (-a_inv * params.c) & params.mask
    big_a, big_c = _compose_power(a_inv, c_inv, n, params.mask)
    return LcgState((big_a * state.value + big_c) & params.mask, params, max(state.index - n, 0))


def walk_back(state: LcgState, n: int) -> LcgState:
    if n < 0:
        raise DomainError(f"Walk distance must be non-negative, got {n}")
    params = state.params
    a_inv, c, mask = params.inverse_multiplier(), params.c, params.mask
    value = state.value
    for _ in range(n):
        value = (a_inv * (value - c)) & mask
    return LcgState(value, params, max(state.index - n, 0))


def retreat(state: LcgState, n: int, mode: ChainMode = ChainMode.JUMP) -> LcgState:
    if ChainMode(mode) is ChainMode.SEQUENTIAL:
        return walk_back(state, n)
    return jump_back(state, n)


def generate_sequence(seed: int, params: LcgParams, count: int) -> List[int]:
    """f_1 .. f_count for a seed, as printed by the ``rand`` command."""
    if count < 0:
        raise DomainError(f"Count must be non-negative, got {count}")
    state = seed_init(seed, params)
    values = []
    for _ in range(count):
        state = step(state)
        values.append(state.value)
    return values

