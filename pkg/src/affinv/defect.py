"""Affine defect ``|A symdiff (aA+b)| / p`` over the grid ``1 <= |a| <= K, |b| <= K``."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import InvalidParameters, MismatchedModulus, ZeroDilation
from .indicator import IndicatorSet


def transform_set(A: IndicatorSet, a: int, b: int) -> IndicatorSet:
    """``{a*x + b : x in A}``."""
    if a % A.p == 0:
        raise ZeroDilation(f"p={A.p} divides a={a}")
    return A.dilate(a).translate(b)


def symdiff_size(A: IndicatorSet, B: IndicatorSet) -> int:
    if A.p != B.p:
        raise MismatchedModulus(f"sets over F_{A.p} and F_{B.p}")
    return (A.bits ^ B.bits).bit_count()


@dataclass
class DefectReport:
    p: int
    K: int
    counts: dict[tuple[int, int], int]
    cardinality: int
    symmetric_reused: bool = False
    wall_time: float = field(default=0.0, compare=False)

    @property
    def density(self) -> float:
        return self.cardinality / self.p

    def defect(self, a: int, b: int) -> Fraction:
        return Fraction(self.counts[(a, b)], self.p)

    @property
    def max_count(self) -> int:
        return max(self.counts.values())

    @property
    def max_defect(self) -> float:
        return self.max_count / self.p

    @property
    def argmax(self) -> tuple[int, int]:
        return max(sorted(self.counts), key=lambda k: self.counts[k])

    def to_json(self, timing: bool = False) -> dict:
        out = {
            "p": self.p,
            "K": self.K,
            "cardinality": self.cardinality,
            "density": self.density,
            "max_count": self.max_count,
            "max_defect": self.max_defect,
            "argmax": list(self.argmax),
            "symmetric_reused": self.symmetric_reused,
            "grid": [
                {"a": a, "b": b, "count": c, "defect": c / self.p}
                for (a, b), c in sorted(self.counts.items())
            ],
        }
        if timing:
            out["wall_time"] = self.wall_time
        return out

    def csv_rows(self) -> list[tuple]:
        return [(a, b, c, c / self.p) for (a, b), c in sorted(self.counts.items())]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["a", "b", "count", "defect"])
        for a, b, c, d in self.csv_rows():
            w.writerow([a, b, c, repr(d)])
        return buf.getvalue()


def defect_profile(A: IndicatorSet, K: int) -> DefectReport:
    """Exact symmetric-difference counts over the full grid.

    Each dilate ``aA`` is built once and swept over ``b`` by rotation.  For a
    symmetric set ``(-a)A = aA``, so the negative half is copied from the
    positive one after checking the symmetry.
    """
    p = A.p
    if not 1 <= K < p:
        raise InvalidParameters(f"need 1 <= K < p, got K={K}, p={p}")
    t0 = time.perf_counter()
    symmetric = A.is_symmetric()
    counts: dict[tuple[int, int], int] = {}
    for a in range(1, K + 1):
        if a % p == 0:
            continue
        dil = A.dilate(a)
        for b in range(-K, K + 1):
            counts[(a, b)] = (A.bits ^ dil.translate(b).bits).bit_count()
        if symmetric:
            for b in range(-K, K + 1):
                counts[(-a, b)] = counts[(a, b)]
        else:
            neg = A.dilate(-a)
            for b in range(-K, K + 1):
                counts[(-a, b)] = (A.bits ^ neg.translate(b).bits).bit_count()
    return DefectReport(p, K, counts, A.cardinality, symmetric, time.perf_counter() - t0)
