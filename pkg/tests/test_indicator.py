import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from affinv.errors import FormatError, MismatchedModulus, ZeroDilation
from affinv.indicator import IndicatorSet


def _random_set(p, rng, density=0.5):
    return IndicatorSet.from_array(rng.random(p) < density)


@st.composite
def sets(draw, primes=(5, 7, 61, 67, 127, 131, 1009)):
    p = draw(st.sampled_from(primes))
    bits = draw(st.integers(min_value=0, max_value=(1 << p) - 1))
    return IndicatorSet(p, bits)


def test_basic_membership():
    A = IndicatorSet.from_elements(7, [0, 3, 10])
    assert A.cardinality == 2 and 3 in A and 0 in A and 1 not in A
    assert list(A.elements()) == [0, 3]
    assert IndicatorSet.empty(7).cardinality == 0
    assert IndicatorSet.full(7).cardinality == 7


@given(sets(), st.integers(-50, 50))
def test_translate_matches_elementwise(A, b):
    expected = {(x + b) % A.p for x in A.elements().tolist()}
    assert set(A.translate(b).elements().tolist()) == expected


@given(sets(), st.integers(-50, 50))
def test_dilate_matches_elementwise(A, a):
    if a % A.p == 0:
        with pytest.raises(ZeroDilation):
            A.dilate(a)
        return
    expected = {(a * x) % A.p for x in A.elements().tolist()}
    got = A.dilate(a)
    assert set(got.elements().tolist()) == expected
    assert got.cardinality == A.cardinality


@given(sets())
def test_symmetry_and_negation(A):
    S = IndicatorSet(A.p, A.bits | A.negate().bits)
    assert S.is_symmetric()
    assert A.is_symmetric() == (A == A.negate())


@given(sets())
def test_symdiff_and_complement(A):
    C = A.complement()
    assert A.symdiff(C).cardinality == A.p
    assert A.intersection_size(C) == 0
    assert A.symdiff(A).cardinality == 0


def test_mismatched_modulus():
    with pytest.raises(MismatchedModulus):
        IndicatorSet.empty(5).symdiff(IndicatorSet.empty(7))


@settings(max_examples=50)
@given(sets(primes=(3, 5, 61, 63 + 4, 127, 131, 1009)), st.sampled_from(["raw64le", "rle"]))
def test_blob_roundtrip(A, enc):
    blob = A.to_blob(enc)
    assert IndicatorSet.from_blob(blob) == A
    assert A.to_blob(enc) == blob


def test_blob_roundtrip_large(tmp_path):
    rng = np.random.default_rng(3)
    A = _random_set(1000003, rng)
    for enc in ("raw64le", "rle"):
        path = tmp_path / f"a.{enc}"
        A.save(path, enc)
        assert IndicatorSet.load(path) == A


def test_blob_rejects_tampering():
    A = IndicatorSet.from_elements(61, [1, 2, 60])
    blob = bytearray(A.to_blob())
    blob[-1] ^= 1
    with pytest.raises(FormatError):
        IndicatorSet.from_blob(bytes(blob))
    with pytest.raises(FormatError):
        IndicatorSet.from_blob(b"no header")


def test_padding_bits_must_be_clear():
    A = IndicatorSet.from_elements(5, [1])
    payload = bytearray(A.to_words())
    payload[0] |= 0x80  # bit 7 lies beyond p
    with pytest.raises(FormatError):
        IndicatorSet.from_words(5, bytes(payload))
