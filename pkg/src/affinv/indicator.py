"""Dense subsets of F_p stored as one arbitrary-precision bitmask.

Bit ``x`` of the integer is membership of ``x``.  Python ints give
word-level shifts, XOR and popcount in C, which is what translation and
symmetric difference need; dilation goes through a numpy index permutation.

Blob layout: one JSON header line terminated by ``\\n`` followed by the
payload.  ``raw64le`` payloads are ``ceil(p/64)`` little-endian 64-bit words,
bit ``i`` of word ``w`` holding ``x = 64*w + i``.  ``rle`` payloads are
LEB128 run lengths alternating absent/present, starting with an absent run.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import FormatError, MismatchedModulus, ZeroDilation

BLOB_FORMAT = "affinv-indicator-set"
BLOB_VERSION = 1


def _nbytes(p: int) -> int:
    return 8 * ((p + 63) // 64)


@dataclass(frozen=True, eq=True)
class IndicatorSet:
    p: int
    bits: int

    def __post_init__(self):
        if self.bits < 0 or self.bits >> self.p:
            raise ValueError("bitmask has bits outside [0, p)")

    @property
    def cardinality(self) -> int:
        return self.bits.bit_count()

    def __len__(self) -> int:
        return self.cardinality

    def __contains__(self, x: int) -> bool:
        return bool(self.bits >> (x % self.p) & 1)

    @property
    def density(self) -> float:
        return self.cardinality / self.p

    # construction ------------------------------------------------------
    @classmethod
    def empty(cls, p: int) -> "IndicatorSet":
        return cls(p, 0)

    @classmethod
    def full(cls, p: int) -> "IndicatorSet":
        return cls(p, (1 << p) - 1)

    @classmethod
    def from_elements(cls, p: int, elements: Iterable[int]) -> "IndicatorSet":
        v = 0
        for x in elements:
            v |= 1 << (x % p)
        return cls(p, v)

    @classmethod
    def from_array(cls, mask) -> "IndicatorSet":
        mask = np.asarray(mask, dtype=bool)
        p = mask.size
        packed = np.packbits(mask, bitorder="little").tobytes()
        return cls(p, int.from_bytes(packed, "little"))

    @classmethod
    def from_words(cls, p: int, payload: bytes) -> "IndicatorSet":
        if len(payload) != _nbytes(p):
            raise FormatError(f"payload has {len(payload)} bytes, expected {_nbytes(p)}")
        v = int.from_bytes(payload, "little")
        if v >> p:
            raise FormatError("payload has bits set at positions >= p")
        return cls(p, v)

    # views -------------------------------------------------------------
    def to_words(self) -> bytes:
        return self.bits.to_bytes(_nbytes(self.p), "little")

    def to_array(self) -> np.ndarray:
        raw = np.frombuffer(self.to_words(), dtype=np.uint8)
        return np.unpackbits(raw, bitorder="little")[: self.p].astype(bool)

    def elements(self) -> np.ndarray:
        return np.flatnonzero(self.to_array())

    def hex(self) -> str:
        return format(self.bits, "x")

    # set operations ----------------------------------------------------
    def _same_field(self, other: "IndicatorSet") -> None:
        if other.p != self.p:
            raise MismatchedModulus(f"sets over F_{self.p} and F_{other.p}")

    def complement(self) -> "IndicatorSet":
        return IndicatorSet(self.p, self.bits ^ ((1 << self.p) - 1))

    def symdiff(self, other: "IndicatorSet") -> "IndicatorSet":
        self._same_field(other)
        return IndicatorSet(self.p, self.bits ^ other.bits)

    def intersection_size(self, other: "IndicatorSet") -> int:
        self._same_field(other)
        return (self.bits & other.bits).bit_count()

    def translate(self, b: int) -> "IndicatorSet":
        """``{x + b}``: a cyclic rotation of the p-bit mask."""
        p = self.p
        b %= p
        if b == 0:
            return self
        mask = (1 << p) - 1
        v = self.bits
        return IndicatorSet(p, ((v << b) & mask) | (v >> (p - b)))

    def dilate(self, a: int) -> "IndicatorSet":
        """``{a*x}``, as an index permutation."""
        p = self.p
        if a % p == 0:
            raise ZeroDilation(f"dilation by {a} is not a bijection of F_{p}")
        a %= p
        if a == 1:
            return self
        src = self.to_array()
        out = np.zeros(p, dtype=bool)
        out[(np.arange(p, dtype=np.int64) * a) % p] = src
        return IndicatorSet.from_array(out)

    def negate(self) -> "IndicatorSet":
        return self.dilate(-1)

    def is_symmetric(self) -> bool:
        """``A == -A``: bit x equals bit p-x, i.e. the mask above bit 0 is a palindrome."""
        arr = self.to_array()
        return bool(np.array_equal(arr[1:], arr[1:][::-1]))

    # serialisation -----------------------------------------------------
    def to_blob(self, encoding: str = "raw64le") -> bytes:
        if encoding == "raw64le":
            payload = self.to_words()
        elif encoding == "rle":
            payload = _rle_encode(self.to_array())
        else:
            raise FormatError(f"unknown encoding {encoding!r}")
        header = {
            "format": BLOB_FORMAT,
            "version": BLOB_VERSION,
            "p": self.p,
            "cardinality": self.cardinality,
            "encoding": encoding,
            "checksum": "sha256:" + hashlib.sha256(payload).hexdigest(),
        }
        return json.dumps(header, sort_keys=True, separators=(",", ":")).encode() + b"\n" + payload

    @classmethod
    def from_blob(cls, blob: bytes) -> "IndicatorSet":
        head, sep, payload = blob.partition(b"\n")
        if not sep:
            raise FormatError("missing header line")
        try:
            header = json.loads(head)
        except json.JSONDecodeError as exc:
            raise FormatError("header is not JSON") from exc
        if header.get("format") != BLOB_FORMAT or header.get("version") != BLOB_VERSION:
            raise FormatError(f"unsupported blob header {header}")
        digest = "sha256:" + hashlib.sha256(payload).hexdigest()
        if header.get("checksum") != digest:
            raise FormatError("checksum mismatch")
        p = int(header["p"])
        if header["encoding"] == "raw64le":
            s = cls.from_words(p, payload)
        elif header["encoding"] == "rle":
            s = cls.from_array(_rle_decode(payload, p))
        else:
            raise FormatError(f"unknown encoding {header['encoding']!r}")
        if s.cardinality != int(header["cardinality"]):
            raise FormatError("cardinality mismatch")
        return s

    def save(self, path, encoding: str = "raw64le") -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_blob(encoding))

    @classmethod
    def load(cls, path) -> "IndicatorSet":
        with open(path, "rb") as fh:
            return cls.from_blob(fh.read())


def _rle_encode(arr: np.ndarray) -> bytes:
    arr = arr.astype(np.int8)
    change = np.flatnonzero(np.diff(arr)) + 1
    bounds = np.concatenate([[0], change, [arr.size]])
    runs = np.diff(bounds).tolist()
    if arr.size and arr[0]:
        runs = [0] + runs
    out = bytearray()
    for r in runs:
        while True:
            byte = r & 0x7F
            r >>= 7
            if r:
                out.append(byte | 0x80)
            else:
                out.append(byte)
                break
    return bytes(out)


def _rle_decode(payload: bytes, p: int) -> np.ndarray:
    runs = []
    r = shift = 0
    for byte in payload:
        r |= (byte & 0x7F) << shift
        if byte & 0x80:
            shift += 7
        else:
            runs.append(r)
            r = shift = 0
    if shift:
        raise FormatError("truncated varint")
    if sum(runs) != p:
        raise FormatError(f"runs cover {sum(runs)} points, expected {p}")
    values = np.arange(len(runs)) % 2
    return np.repeat(values, runs).astype(bool)
