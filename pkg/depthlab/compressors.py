"""
Computable compressors and a registry that stands in for a universal compressor

A registry of T codecs acts as a tiny prefix machine: a program is a fixed-width selector of
⌈log₂ t⌉ bits naming one of the first t codecs, followed by that codec's codeword. Giving the machine
a bigger budget t lets it try more codecs, so the full registry plays the part of the shortest-program
compressor and smaller budgets play weaker, time-bounded observers.
"""
from __future__ import annotations

import itertools
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, Literal, Sequence, Tuple, Union, get_args

from depthlab.core import ObserverFamily, ObserverId, PerformanceValue
from depthlab.errors import ConfigError, DecodeError

CODEC_NAMES = Literal["identity", "rle", "lz78"]
VALID_CODEC_NAMES: Tuple[CODEC_NAMES, ...] = get_args(CODEC_NAMES)


def _width(count: int) -> int:
    # bits needed to pick one of `count` alternatives, ⌈log₂ count⌉
    return (count - 1).bit_length()


@dataclass(frozen=True)
class CodecSpec:
    """
    Args:
        name (str): identity, rle or lz78
        width (int): Run-length field width w of the rle codec, in bits
    """

    name: CODEC_NAMES
    width: int = 8

    def __post_init__(self):
        if self.name not in VALID_CODEC_NAMES:
            raise ConfigError(
                f"The codec must be one of {', '.join(VALID_CODEC_NAMES)}, got {self.name!r}"
            )
        if self.width < 1:
            raise ConfigError(f"The rle field width must be positive, got {self.width}")

    @classmethod
    def parse(cls, text: str) -> CodecSpec:
        name, _, parameter = text.strip().partition(":")
        if parameter and name != "rle":
            raise ConfigError(f"Only the rle codec takes a parameter, got {text!r}")
        try:
            return cls(name, int(parameter)) if parameter else cls(name)
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"Cannot read the rle width in {text!r}") from e

    def __str__(self):
        return f"rle:{self.width}" if self.name == "rle" else self.name


@dataclass(frozen=True)
class Codeword:
    bits: str
    producer: str

    def __len__(self):
        return len(self.bits)


class Codec(ABC):
    @abstractmethod
    def encode(self, x: str) -> str:
        ...

    @abstractmethod
    def decode(self, bits: str) -> str:
        ...


class Identity(Codec):
    def encode(self, x: str) -> str:
        return x

    def decode(self, bits: str) -> str:
        return bits


class Rle(Codec):
    """Runs as (bit, w-bit length) records; runs longer than 2^w - 1 are split."""

    def __init__(self, width: int = 8):
        self.width = width
        self.limit = (1 << width) - 1

    def encode(self, x: str) -> str:
        records = []
        for bit, run in itertools.groupby(x):
            length = len(list(run))
            while length:
                chunk = min(length, self.limit)
                records.append(bit + format(chunk, f"0{self.width}b"))
                length -= chunk
        return "".join(records)

    def decode(self, bits: str) -> str:
        size = self.width + 1
        if len(bits) % size:
            raise DecodeError(f"rle codeword of {len(bits)} bits is not a whole number of records")
        out = []
        for pos in range(0, len(bits), size):
            length = int(bits[pos + 1 : pos + size], 2)
            if length == 0:
                raise DecodeError(f"rle record at bit {pos} has a zero run length")
            out.append(bits[pos] * length)
        return "".join(out)


class Lz78(Codec):
    """
    LZ78 phrase parsing over bits

    Phrase i (from 1) is the longest earlier phrase plus one bit, written as a ⌈log₂ i⌉-bit index
    followed by the bit. The codeword opens with one flag bit: 1 when every record carries its bit,
    0 when the last record is an index-only reference to an earlier phrase.
    """

    def encode(self, x: str) -> str:
        dictionary = {"": 0}
        records = []
        w = ""
        for c in x:
            wc = w + c
            if wc in dictionary:
                w = wc
            else:
                i = len(dictionary)
                width = _width(i)
                records.append((format(dictionary[w], f"0{width}b") if width else "") + c)
                dictionary[wc] = i
                w = ""
        if w:
            width = _width(len(dictionary))
            records.append(format(dictionary[w], f"0{width}b"))
        return ("0" if w else "1") + "".join(records)

    def decode(self, bits: str) -> str:
        if not bits:
            raise DecodeError("lz78 codeword is missing its flag bit")
        complete = bits[0] == "1"
        phrases = [""]
        out = []
        pos = 1
        while pos < len(bits):
            width = _width(len(phrases))
            remaining = len(bits) - pos
            index = int(bits[pos : pos + width], 2) if width and remaining >= width else 0
            if not complete and remaining == width:
                if not 1 <= index < len(phrases):
                    raise DecodeError(f"lz78 final reference {index} is out of range")
                out.append(phrases[index])
                break
            if remaining < width + 1:
                raise DecodeError(f"lz78 codeword truncated at bit {pos}")
            if index >= len(phrases):
                raise DecodeError(f"lz78 reference {index} at bit {pos} is out of range")
            phrase = phrases[index] + bits[pos + width]
            phrases.append(phrase)
            out.append(phrase)
            pos += width + 1
        else:
            if not complete:
                raise DecodeError("lz78 codeword flags a final reference but has none")
        return "".join(out)


def codec_for(spec: CodecSpec) -> Codec:
    if spec.name == "rle":
        return Rle(spec.width)
    return CODECS[spec.name]()


def encode(codec: CodecSpec, x: str) -> Codeword:
    return Codeword(codec_for(codec).encode(x), str(codec))


def decode(codec: CodecSpec, w: Union[Codeword, str]) -> str:
    bits = w.bits if isinstance(w, Codeword) else w
    return codec_for(codec).decode(bits)


def lz78_phrase_count(x: str) -> int:
    """Number of complete LZ78 phrases, plus one for a trailing incomplete phrase."""
    dictionary = {""}
    w = ""
    count = 0
    for c in x:
        w += c
        if w not in dictionary:
            dictionary.add(w)
            count += 1
            w = ""
    return count + (1 if w else 0)


@dataclass(frozen=True)
class RegistrySpec:
    entries: Tuple[CodecSpec, ...]

    def __post_init__(self):
        if not self.entries:
            raise ConfigError("A registry needs at least one codec")
        names = [str(e) for e in self.entries]
        if len(set(names)) != len(names):
            raise ConfigError(f"Registry entries must be unique, got {', '.join(names)}")

    @classmethod
    def parse(cls, text: str) -> RegistrySpec:
        """Reads a comma separated list such as `identity,lz78,rle:8`."""
        return cls(tuple(CodecSpec.parse(part) for part in text.split(",") if part.strip()))

    def __len__(self):
        return len(self.entries)

    def __str__(self):
        return ",".join(str(e) for e in self.entries)


def _budget_validator(reg: RegistrySpec, budget: int):
    if not 1 <= budget <= len(reg):
        raise ConfigError(f"The budget must lie in 1..{len(reg)}, got {budget}")


def _select(reg: RegistrySpec, payloads: Sequence[str], budget: int) -> Codeword:
    # strict < keeps the lowest entry index on ties
    best = 0
    for i in range(1, budget):
        if len(payloads[i]) < len(payloads[best]):
            best = i
    width = _width(budget)
    selector = format(best, f"0{width}b") if width else ""
    return Codeword(selector + payloads[best], f"registry[{budget}]:{reg.entries[best]}")


def registry_encode(reg: RegistrySpec, x: str, budget: int) -> Codeword:
    _budget_validator(reg, budget)
    payloads = [encode(codec, x).bits for codec in reg.entries[:budget]]
    return _select(reg, payloads, budget)


def registry_decode(reg: RegistrySpec, w: Union[Codeword, str], budget: int) -> str:
    _budget_validator(reg, budget)
    bits = w.bits if isinstance(w, Codeword) else w
    width = _width(budget)
    if len(bits) < width:
        raise DecodeError("registry codeword is shorter than its selector")
    entry = int(bits[:width], 2) if width else 0
    if entry >= budget:
        raise DecodeError(f"selector {entry} names no codec within budget {budget}")
    return decode(reg.entries[entry], bits[width:])


def compressor_perf(length_in: int, length_code: int) -> PerformanceValue:
    if length_in < 1:
        raise ValueError("Compression performance needs a nonempty input")
    return PerformanceValue.clamped(1.0 - length_code / length_in)


def bennett_gap(reg: RegistrySpec, x: str, budget: int) -> int:
    """Extra bits a budget-t observer pays over the full registry."""
    _budget_validator(reg, budget)
    payloads = [encode(codec, x).bits for codec in reg.entries]
    return len(_select(reg, payloads, budget)) - len(_select(reg, payloads, len(reg)))


class RegistryFamily(ObserverFamily):
    name = "registry"

    def __init__(self, registry: RegistrySpec):
        self.registry = registry

    @property
    def levels(self) -> Sequence[int]:
        return range(1, len(self.registry) + 1)

    def codewords(self, x: str) -> Dict[int, Codeword]:
        payloads = [encode(codec, x).bits for codec in self.registry.entries]
        return {t: _select(self.registry, payloads, t) for t in self.levels}

    def best_observers(self, x: str) -> Dict[int, Tuple[PerformanceValue, ObserverId]]:
        if not x:
            return {
                t: (PerformanceValue(0.0), ObserverId(self.name, t)) for t in self.levels
            }
        return {
            t: (
                compressor_perf(len(x), len(w)),
                ObserverId(self.name, t, (("codeword", w.producer),)),
            )
            for t, w in self.codewords(x).items()
        }


CODECS: Dict[str, type] = {"identity": Identity, "rle": Rle, "lz78": Lz78}
