"""
Deterministic sequence prefixes and the string enumeration λ, s₀, s₁, s₂, … they are indexed by.

λ sits before s₀ and is left out of characteristic sequences: bit i of χ_L says whether sᵢ ∈ L, with
s₀ = "0".
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Literal, Tuple, get_args

from depthlab.core import DEFAULT_CEILINGS, Ceilings
from depthlab.errors import ConfigError

logger = logging.getLogger(__name__)

SEQUENCE_KINDS = Literal["periodic", "champernowne", "prng", "charfn", "blockdeep"]
VALID_SEQUENCE_KINDS: Tuple[SEQUENCE_KINDS, ...] = get_args(SEQUENCE_KINDS)

MASK64 = (1 << 64) - 1
XORSHIFT_MULTIPLIER = 2685821657736338717


def nth_string(n: int) -> str:
    """Returns sₙ, the nth nonempty string in length-then-lexicographic order (s₀ = "0")."""
    if n < 0:
        raise ValueError(f"String indices start at 0, got {n}")
    # position of sₙ when λ is counted, plus one
    m = n + 2
    length = m.bit_length() - 1
    return format(m - (1 << length), f"0{length}b")


def string_index(s: str) -> int:
    """Inverse of nth_string; λ has index -1."""
    return int("1" + s, 2) - 2


def first_of(strings: Iterable[str]) -> str:
    strings = list(strings)
    if not strings:
        raise ValueError("First of an empty set of strings is undefined")
    return min(strings, key=lambda s: (len(s), s))


def _evens(s: str) -> bool:
    return len(s) % 2 == 0


def _palindromes(s: str) -> bool:
    return s == s[::-1]


CHARFN_RULES: Dict[str, Callable[[str], bool]] = {
    "evens": _evens,
    "palindromes": _palindromes,
}


@dataclass(frozen=True)
class SequenceSpec:
    """
    A generator of sequence prefixes

    Args:
        kind (str): periodic, champernowne, prng, charfn or blockdeep
        pattern (str): The repeated bits of a periodic sequence
        seed (int): Nonzero 64-bit seed of the prng kind
        rule (str): Membership rule of the charfn kind, one of CHARFN_RULES
    """

    kind: SEQUENCE_KINDS
    pattern: str = ""
    seed: int = 0
    rule: str = ""

    def __post_init__(self):
        if self.kind not in VALID_SEQUENCE_KINDS:
            raise ConfigError(
                f"The sequence kind must be one of {', '.join(VALID_SEQUENCE_KINDS)}, got {self.kind!r}"
            )
        if self.kind == "periodic" and (
            not self.pattern or set(self.pattern) - {"0", "1"}
        ):
            raise ConfigError(
                f"A periodic sequence needs a nonempty pattern of 0s and 1s, got {self.pattern!r}"
            )
        if self.kind == "prng" and not 0 < self.seed <= MASK64:
            raise ConfigError(f"The prng seed must be a nonzero 64-bit integer, got {self.seed}")
        if self.kind == "charfn" and self.rule not in CHARFN_RULES:
            raise ConfigError(
                f"Unknown charfn rule {self.rule!r}, expected one of {', '.join(CHARFN_RULES)}"
            )

    @classmethod
    def parse(cls, text: str) -> SequenceSpec:
        """Reads `periodic:<bits>`, `champernowne`, `prng:<seed>`, `charfn:<rule>` or `blockdeep`."""
        kind, _, parameter = text.strip().partition(":")
        if kind == "periodic":
            return cls(kind, pattern=parameter)
        if kind == "prng":
            try:
                seed = int(parameter, 0)
            except ValueError as e:
                raise ConfigError(f"Cannot read the prng seed in {text!r}") from e
            return cls(kind, seed=seed)
        if kind == "charfn":
            return cls(kind, rule=parameter)
        if parameter:
            raise ConfigError(f"The {kind} sequence takes no parameter, got {text!r}")
        return cls(kind)

    def __str__(self):
        if self.kind == "periodic":
            return f"periodic:{self.pattern}"
        if self.kind == "prng":
            return f"prng:{self.seed}"
        if self.kind == "charfn":
            return f"charfn:{self.rule}"
        return self.kind


def _periodic(pattern: str, n: int) -> str:
    return (pattern * (n // len(pattern) + 1))[:n]


def _champernowne(n: int) -> str:
    parts = []
    total = 0
    i = 0
    while total < n:
        s = nth_string(i)
        parts.append(s)
        total += len(s)
        i += 1
    return "".join(parts)[:n]


def _xorshift64star(seed: int, n: int) -> str:
    x = seed
    bits = []
    for _ in range(n):
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        out = (x * XORSHIFT_MULTIPLIER) & MASK64
        bits.append("1" if out >> 63 else "0")
    return "".join(bits)


def _charfn(rule: str, n: int) -> str:
    member = CHARFN_RULES[rule]
    return "".join("1" if member(nth_string(i)) else "0" for i in range(n))


def _blockdeep(n: int) -> str:
    # block j is (0^(2^j) 1) repeated 4^j times
    parts = []
    total = 0
    j = 0
    while total < n:
        block = ("0" * (1 << j) + "1") * (1 << (2 * j))
        parts.append(block)
        total += len(block)
        j += 1
    return "".join(parts)[:n]


def generate(spec: SequenceSpec, n: int, ceilings: Ceilings = DEFAULT_CEILINGS) -> str:
    """Returns the first n bits of the sequence, as a string of 0s and 1s."""
    if n < 0:
        raise ValueError(f"Prefix length must be nonnegative, got {n}")
    if n > ceilings.sequence_length:
        raise ConfigError(
            f"Prefix length {n} exceeds the sequence ceiling of {ceilings.sequence_length}"
        )
    if spec.kind == "periodic":
        return _periodic(spec.pattern, n)
    if spec.kind == "champernowne":
        return _champernowne(n)
    if spec.kind == "prng":
        return _xorshift64star(spec.seed, n)
    if spec.kind == "charfn":
        return _charfn(spec.rule, n)
    return _blockdeep(n)


def balance_flag(bits: str) -> bool:
    """
    Desk-scale balance check for pseudo-random prefixes

    Returns True, and logs a warning, when the count of 1s strays more than 4·√n from n/2.
    """
    n = len(bits)
    deviation = abs(bits.count("1") - n / 2)
    flagged = deviation > 4 * math.sqrt(n)
    if flagged:
        logger.warning(
            "prefix of length %d is unbalanced: %d ones (deviation %.1f)",
            n,
            bits.count("1"),
            deviation,
        )
    return flagged


def read_bits(text: str) -> str:
    """Reads a raw sequence file: ASCII 0s and 1s, newlines and surrounding whitespace ignored."""
    bits = "".join(text.split())
    if set(bits) - {"0", "1"}:
        raise ConfigError("A raw sequence file may only contain 0, 1 and whitespace")
    return bits
