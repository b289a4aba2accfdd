"""Brute-force references for tiny instances."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import SearchSpaceTooLarge, ValidationError, ZeroDilation

MAX_SEARCH_BITS = 25
_CHUNK = 1 << 15


def reference_defect(A: Iterable[int], a: int, b: int, p: int) -> int:
    """``|A symdiff (aA + b)|`` via per-element arithmetic and Python sets."""
    if a % p == 0:
        raise ZeroDilation(f"p={p} divides a={a}")
    elems = list(A)
    src = set(elems)
    if len(src) != len(elems):
        raise ValidationError("elements must be distinct")
    if any(not 0 <= x < p for x in src):
        raise ValidationError("elements must lie in [0, p-1]")
    image = {(a * x + b) % p for x in src}
    return len(src ^ image)


def default_grid(p: int, K: int) -> list[tuple[int, int]]:
    return [(a, b) for a in [*range(-K, 0), *range(1, K + 1)] for b in range(-K, K + 1) if a % p]


def enumerate_coupling(n: int, d: int) -> Fraction:
    """``P(M(U) != M(V))`` by enumerating every assignment of the ``n + d/2`` fair bits."""
    if n % 2 == 0 or d % 2:
        raise ValidationError("need n odd and d even")
    h = d // 2
    size = n + h
    U = range(n)
    V = range(h, n + h)
    bad = 0
    for bits in itertools.product((0, 1), repeat=size):
        mu = sum(bits[i] for i in U) > n / 2
        mv = sum(bits[i] for i in V) > n / 2
        bad += mu != mv
    return Fraction(bad, 2**size)


@dataclass
class OracleResult:
    p: int
    K: int
    optimum_count: int
    witnesses: list[tuple[int, ...]] = field(default_factory=list)
    n_candidates: int = 0
    symmetric: bool = True

    @property
    def optimum(self) -> Fraction:
        return Fraction(self.optimum_count, self.p)

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "K": self.K,
            "symmetric_only": self.symmetric,
            "optimum_count": self.optimum_count,
            "optimum": float(self.optimum),
            "optimum_fraction": str(self.optimum),
            "n_candidates": self.n_candidates,
            "witnesses": [format(sum(1 << x for x in w), "x") for w in self.witnesses],
        }


def _sizes(p: int, size_policy) -> Optional[set[int]]:
    if size_policy is None:
        return {p // 2, (p + 1) // 2}
    if size_policy == "any":
        return None
    if isinstance(size_policy, int):
        return {size_policy}
    return set(size_policy)


def best_symmetric_set(
    p: int,
    K: int,
    size_policy: Union[None, int, str, Sequence[int]] = None,
    symmetric: bool = True,
    grid: Optional[Sequence[tuple[int, int]]] = None,
    max_witnesses: int = 64,
) -> OracleResult:
    """Exhaustively minimise the max grid defect.

    ``symmetric=True`` searches unions of negation orbits (``2^((p+1)/2)``
    candidates); ``symmetric=False`` searches all ``2^p`` subsets.
    ``size_policy`` defaults to ``|A|`` in ``{floor(p/2), ceil(p/2)}``.
    """
    grid = default_grid(p, K) if grid is None else list(grid)
    if any(a % p == 0 for a, _ in grid):
        raise ZeroDilation("grid contains a zero dilation")
    x = np.arange(p)
    if symmetric:
        atoms = (p + 1) // 2
        member_of = np.minimum(x, p - x)  # element -> orbit bit
    else:
        atoms = p
        member_of = x
    if atoms > MAX_SEARCH_BITS:
        raise SearchSpaceTooLarge(f"2^{atoms} candidates exceeds 2^{MAX_SEARCH_BITS}")
    sizes = _sizes(p, size_policy)
    # aA+b contains y iff a^{-1}(y - b) in A
    pulls = [((pow(a, -1, p) * (x - b)) % p) for a, b in grid]
    shifts = np.arange(atoms, dtype=np.int64)
    best = None
    witnesses: list[tuple[int, ...]] = []
    n_candidates = 0
    total = 1 << atoms
    for start in range(0, total, _CHUNK):
        masks = np.arange(start, min(total, start + _CHUNK), dtype=np.int64)
        atom_bits = ((masks[:, None] >> shifts[None, :]) & 1).astype(bool)
        member = atom_bits[:, member_of]
        if sizes is not None:
            keep = np.isin(member.sum(axis=1), list(sizes))
            member = member[keep]
        if member.shape[0] == 0:
            continue
        n_candidates += member.shape[0]
        score = np.zeros(member.shape[0], dtype=np.int64)
        for pull in pulls:
            np.maximum(score, (member ^ member[:, pull]).sum(axis=1), out=score)
        low = int(score.min())
        if best is None or low < best:
            best = low
            witnesses = []
        if low == best:
            for row in member[score == best]:
                if len(witnesses) >= max_witnesses:
                    break
                witnesses.append(tuple(int(v) for v in np.flatnonzero(row)))
    if best is None:
        raise ValidationError("no candidate satisfies the size policy")
    return OracleResult(p, K, best, witnesses, n_candidates, symmetric)
