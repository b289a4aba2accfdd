from fractions import Fraction

import numpy as np
import pytest

from affinv.defect import defect_profile
from affinv.errors import SearchSpaceTooLarge, ValidationError, ZeroDilation
from affinv.indicator import IndicatorSet
from affinv.oracle import best_symmetric_set, default_grid, reference_defect


def test_reference_defect_examples():
    assert reference_defect([2, 3], 1, 1, 5) == 2
    assert reference_defect([2, 3], 1, 0, 5) == 0
    assert reference_defect([], 3, 2, 5) == 0
    with pytest.raises(ZeroDilation):
        reference_defect([1], 5, 0, 5)
    with pytest.raises(ValidationError):
        reference_defect([1, 1], 1, 0, 5)
    with pytest.raises(ValidationError):
        reference_defect([7], 1, 0, 5)


def test_exhaustive_agreement_small_primes():
    # every subset of F_p for p <= 11, every grid point with |a|, |b| <= 2
    for p in (3, 5, 7, 11):
        K = min(2, p - 1)
        for mask in range(1 << p):
            A = IndicatorSet(p, mask)
            rep = defect_profile(A, K)
            elems = A.elements().tolist()
            for (a, b), c in rep.counts.items():
                assert c == reference_defect(elems, a, b, p)


def test_toy_p5():
    res = best_symmetric_set(5, 1, 2, symmetric=False)
    assert res.optimum == Fraction(2, 5)
    assert res.n_candidates == 10
    assert (2, 3) in res.witnesses
    sym = best_symmetric_set(5, 1, 2)
    assert sym.optimum == Fraction(2, 5) and sym.witnesses == [(2, 3)]


def test_toy_p3():
    res = best_symmetric_set(3, 1, 1, symmetric=False)
    assert res.optimum == Fraction(2, 3) and res.n_candidates == 3
    assert sorted(res.witnesses) == [(0,), (1,), (2,)]


def test_trivial_grid():
    res = best_symmetric_set(7, 1, grid=[(1, 0)])
    assert res.optimum == 0


def test_witnesses_rescored():
    res = best_symmetric_set(13, 2, symmetric=False, max_witnesses=16)
    for w in res.witnesses:
        rep = defect_profile(IndicatorSet.from_elements(13, w), 2)
        assert rep.max_count == res.optimum_count
        # relabeling A -> A + c leaves the pure translation counts unchanged
        for c in range(13):
            shifted = IndicatorSet.from_elements(13, [(x + c) % 13 for x in w])
            for b in range(-2, 3):
                assert defect_profile(shifted, 2).counts[(1, b)] == rep.counts[(1, b)]


def test_symmetric_search_is_subset_of_full():
    full = best_symmetric_set(11, 2, symmetric=False)
    sym = best_symmetric_set(11, 2)
    assert full.optimum <= sym.optimum


def test_search_space_guard():
    with pytest.raises(SearchSpaceTooLarge):
        best_symmetric_set(101, 2)
    with pytest.raises(ZeroDilation):
        best_symmetric_set(7, 1, grid=[(7, 0)])


def test_default_grid():
    assert default_grid(5, 1) == [(-1, -1), (-1, 0), (-1, 1), (1, -1), (1, 0), (1, 1)]
