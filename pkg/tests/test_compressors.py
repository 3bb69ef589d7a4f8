import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from depthlab.compressors import (
    VALID_CODEC_NAMES,
    CodecSpec,
    Codeword,
    RegistryFamily,
    RegistrySpec,
    bennett_gap,
    compressor_perf,
    decode,
    encode,
    lz78_phrase_count,
    registry_decode,
    registry_encode,
)
from depthlab.errors import ConfigError, DecodeError
from depthlab.sequences import SequenceSpec, generate

KNOWN_CODECS = [CodecSpec(name) for name in VALID_CODEC_NAMES]
LZ78 = CodecSpec("lz78")
RLE = CodecSpec("rle")
REGISTRY = RegistrySpec.parse("identity,lz78,rle")
WIDE_REGISTRY = RegistrySpec.parse("identity,lz78,rle,rle:2")

bit_strings = st.text(alphabet="01", max_size=512)


@pytest.mark.parametrize("codec", KNOWN_CODECS, ids=str)
@given(x=bit_strings)
def test_round_trip(codec, x):
    assert decode(codec, encode(codec, x)) == x


@pytest.mark.parametrize("budget", [1, 2, 3])
@given(x=bit_strings)
def test_registry_round_trip(budget, x):
    assert registry_decode(REGISTRY, registry_encode(REGISTRY, x, budget), budget) == x


def test_round_trip_seeded_strings():
    rng = np.random.default_rng(78)
    for _ in range(10_000):
        n = int(rng.integers(0, 4097))
        # runs of varying length so rle and lz78 both get something to work with
        p = rng.uniform(0.02, 0.5)
        x = "".join(np.where(rng.random(n) < p, "1", "0"))
        for codec in KNOWN_CODECS:
            assert decode(codec, encode(codec, x)) == x
        budget = int(rng.integers(1, len(REGISTRY) + 1))
        assert registry_decode(REGISTRY, registry_encode(REGISTRY, x, budget), budget) == x


@pytest.mark.parametrize("codec", KNOWN_CODECS + [CodecSpec("rle", 2)], ids=str)
def test_injective_on_short_strings(codec):
    strings = ["".join(bits) for n in range(13) for bits in itertools.product("01", repeat=n)]
    codewords = {encode(codec, x).bits for x in strings}
    assert len(codewords) == len(strings)


def test_lz78_examples():
    assert encode(LZ78, "").bits == "1"
    assert encode(LZ78, "0110").bits == "1" + "0" + "01" + "100"
    assert encode(LZ78, "00").bits == "0" + "0" + "1"
    assert decode(LZ78, "001") == "00"
    assert encode(LZ78, "0110").producer == "lz78"


def test_lz78_zeros():
    # 31 complete phrases 0, 00, ..., 0^31 and a reference to 0^16
    assert len(encode(LZ78, "0" * 512)) == 161
    assert lz78_phrase_count("0" * 512) == 32
    assert lz78_phrase_count("0" * 15) == 5


@pytest.mark.parametrize("bits", ["", "0", "101", "100110"])
def test_lz78_decode_errors(bits):
    with pytest.raises(DecodeError):
        decode(LZ78, bits)


def test_rle():
    assert encode(RLE, "0001").bits == "0" + "00000011" + "1" + "00000001"
    assert len(encode(RLE, "0" * 300)) == 18
    assert decode(RLE, encode(RLE, "0" * 300)) == "0" * 300
    with pytest.raises(DecodeError):
        decode(RLE, "0" + "00000000")
    with pytest.raises(DecodeError):
        decode(RLE, "0101")


def test_codec_spec():
    assert CodecSpec.parse("rle:4") == CodecSpec("rle", 4)
    assert str(CodecSpec("rle", 4)) == "rle:4"
    assert str(CodecSpec.parse("lz78")) == "lz78"
    for text in ["lz78:3", "rle:0", "rle:x", "huffman"]:
        with pytest.raises(ConfigError):
            CodecSpec.parse(text)


def test_registry_spec():
    assert len(REGISTRY) == 3
    assert str(RegistrySpec.parse("identity, rle:4")) == "identity,rle:4"
    with pytest.raises(ConfigError):
        RegistrySpec.parse("lz78,lz78")
    with pytest.raises(ConfigError):
        RegistrySpec.parse("")


def test_registry_selection():
    reg = RegistrySpec.parse("identity,lz78")
    assert registry_encode(reg, "0110", 1) == Codeword("0110", "registry[1]:identity")
    # identity (4 bits) beats lz78 (7 bits) behind a one bit selector
    assert registry_encode(reg, "0110", 2).bits == "0" + "0110"
    zeros = registry_encode(reg, "0" * 512, 2)
    assert zeros.bits[0] == "1"
    assert zeros.producer == "registry[2]:lz78"
    for budget in (0, 3):
        with pytest.raises(ConfigError):
            registry_encode(reg, "0110", budget)


def test_registry_ties_pick_lowest_index():
    reg = RegistrySpec.parse("identity,rle:1")
    # rle with 1-bit lengths spends 2 bits per bit, identity wins
    assert registry_encode(reg, "01", 2).producer == "registry[2]:identity"
    reg = RegistrySpec.parse("rle:1,identity")
    assert registry_encode(reg, "", 2).producer == "registry[2]:rle:1"


def test_registry_decode_errors():
    with pytest.raises(DecodeError):
        registry_decode(REGISTRY, "1", 3)
    with pytest.raises(DecodeError):
        registry_decode(REGISTRY, "11", 3)


def test_compressor_perf():
    assert compressor_perf(100, 50).value == 0.5
    assert compressor_perf(100, 150).value == 0.0
    assert compressor_perf(8, 0).value == 1.0
    with pytest.raises(ValueError):
        compressor_perf(0, 0)


@pytest.mark.parametrize("n, gap", [(512, 350), (1024, 771), (2048, 1662)])
def test_bennett_gap_on_zeros(n, gap):
    reg = RegistrySpec.parse("identity,lz78")
    assert bennett_gap(reg, "0" * n, 1) == gap
    assert gap >= 0.4 * n
    assert bennett_gap(reg, "0" * n, 2) == 0


@pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
def test_bennett_gap_on_prng(seed):
    reg = RegistrySpec.parse("identity,lz78")
    x = generate(SequenceSpec("prng", seed=seed), 4096)
    for n in (256, 512, 1024, 2048, 4096):
        assert abs(bennett_gap(reg, x[:n], 1)) <= 1


def test_registry_family():
    family = RegistryFamily(RegistrySpec.parse("identity,lz78"))
    assert list(family.levels) == [1, 2]
    perfs = family.perfs("0" * 1024)
    assert perfs[1].value == 0.0
    assert perfs[2].value >= 0.4
    assert family.perfs("")[2].value == 0.0
    _, observer = family.best_observers("0" * 1024)[2]
    assert str(observer) == "registry@2[codeword=registry[2]:lz78]"


@pytest.mark.parametrize("budget", [0, 3, -1])
def test_bennett_gap_rejects_budgets_outside_the_registry(budget):
    with pytest.raises(ConfigError):
        bennett_gap(RegistrySpec.parse("identity,lz78"), "0" * 64, budget)


@given(x=st.text(alphabet="01", min_size=1, max_size=256))
def test_registry_is_monotone_in_budget(x):
    lengths = {t: len(registry_encode(WIDE_REGISTRY, x, t)) for t in (1, 2, 3, 4)}
    # budgets 3 and 4 share a 2-bit selector
    assert lengths[4] <= lengths[3]
    for t, u in itertools.combinations(lengths, 2):
        assert lengths[u] - lengths[t] <= (u - 1).bit_length() - (t - 1).bit_length()
    perfs = RegistryFamily(WIDE_REGISTRY).perfs(x)
    assert perfs[4] >= perfs[3]
    assert perfs[2].value >= perfs[1].value - 1 / len(x) - 1e-12
