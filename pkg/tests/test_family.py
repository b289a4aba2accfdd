import math
from fractions import Fraction

import mpmath
import pytest

from affinv.arith import RationalAffine, reduce_affine
from affinv.errors import InvalidOverride, InvalidParameters, InvalidShift, NotPrime
from affinv.family import (
    build_family,
    build_smooth_set,
    check_family_reduction,
    check_reduction,
    derive_params,
    folner_defect,
)


def _L_reference(p, K):
    with mpmath.workprec(256):
        return mpmath.log(2 * K) * mpmath.sqrt(mpmath.log(p) / K)


def test_params_p13_K3():
    par = derive_params(13, 3)
    assert par.N == 2 and par.M0 == 2
    assert par.primes == (2, 3)


def test_params_p1000003_K2():
    par = derive_params(1000003, 2)
    L = _L_reference(1000003, 2)
    with mpmath.workprec(256):
        assert abs(mpmath.mpf(par.L_decimal) - L) < mpmath.mpf(10) ** -25
    assert abs(par.L - 3.644) < 1e-3
    assert par.L_q == ((2, 5),) and int(mpmath.floor(L / mpmath.log(2))) == 5
    assert par.Q == 32
    with mpmath.workprec(256):
        assert par.T == int(mpmath.floor(L * 2 * 32**3)) == 238783
    assert par.n == 11 * (2 * par.T + 1)
    assert not par.sufficient_condition_holds


def test_params_K1_empty_products():
    par = derive_params(101, 1)
    assert par.primes == () and par.Q == 1
    assert par.T == math.floor(par.L)
    fam, _ = build_family(par)
    assert len(fam.smooth) == 1 and fam.smooth.values == (Fraction(1),)


def test_params_validation():
    with pytest.raises(NotPrime):
        derive_params(12, 2)
    with pytest.raises(InvalidParameters):
        derive_params(5, 5)
    with pytest.raises(InvalidParameters):
        derive_params(5, 0)
    with pytest.raises(InvalidOverride):
        derive_params(101, 2, {"T": -1})
    with pytest.raises(InvalidOverride):
        derive_params(101, 2, {"L": "0"})
    with pytest.raises(InvalidOverride):
        derive_params(101, 2, {"X": 1})


def test_overrides_are_exact_and_recorded():
    par = derive_params(10007, 2, {"L": "5/2", "T": 7})
    assert par.L_q == ((2, 3),)  # floor(2.5 / log 2) = 3
    assert par.T == 7
    assert par.overrides_applied == ("L", "T")


def test_smooth_set_sizes():
    par = derive_params(1000003, 2)
    sm = build_smooth_set(par)
    assert len(sm) == 11
    assert sorted(sm.values) == [Fraction(2) ** e for e in range(-5, 6)]
    par4 = derive_params(10007, 4, {"T": 1})
    a, b = par4.L_q_map[2], par4.L_q_map[3]
    assert len(build_smooth_set(par4)) == (2 * a + 1) * (2 * b + 1)
    for m in build_smooth_set(par4).values:
        assert Fraction(1, par4.Q) <= m <= par4.Q
        assert (par4.Q**2 / m).denominator == 1


def test_family_T1_K1():
    fam, shifts = build_family(derive_params(101, 1, {"T": 1}))
    assert len(fam) == 3
    assert set(fam) == {RationalAffine(1, -1), RationalAffine(1, 0), RationalAffine(1, 1)}
    assert shifts.positive_shifts == ((1, -1), (1, 0), (1, 1))


@pytest.mark.parametrize("p,K,ov", [(101, 1, None), (1009, 2, {"T": 5}), (10007, 3, {"T": 2}), (10007, 4, {"T": 1})])
def test_family_size_odd(p, K, ov):
    fam, _ = build_family(derive_params(p, K, ov))
    assert len(fam) % 2 == 1
    assert len(fam) == fam.params.n


def test_family_addressing_roundtrip():
    fam, _ = build_family(derive_params(1009, 2, {"T": 3}))
    for pos in range(len(fam)):
        i, j = fam.position(pos)
        assert fam.index(i, j) == pos
    assert list(fam)[5] == fam.rational_map(*fam.position(5))
    alpha, beta = fam.inverse_coefficients()
    for pos in (0, 7, len(fam) - 1):
        r = reduce_affine(fam.rational_map(*fam.position(pos)), 1009).inverse()
        assert (alpha[pos], beta[pos]) == r.key


def test_folner_identity_zero():
    fam, _ = build_family(derive_params(1009, 2, {"T": 3}))
    assert folner_defect(fam, RationalAffine.identity()).defect == 0
    assert folner_defect(fam, (1, 0)).defect == 0


@pytest.mark.parametrize("T", [1, 2, 5, 40])
def test_folner_K1_closed_form(T):
    fam, _ = build_family(derive_params(101, 1, {"T": T}))
    for b in (-1, 0, 1):
        assert folner_defect(fam, (1, b)).defect == Fraction(2 * abs(b), 2 * T + 1)


def test_folner_dilation_by_two():
    # one of 11 exponents leaves the box; the symmetric difference counts both sides
    fam, _ = build_family(derive_params(1000003, 2))
    fd = folner_defect(fam, RationalAffine(2, 0))
    assert fd.one_sided == Fraction(1, 11)
    assert fd.defect == Fraction(2, 11)


def test_folner_matches_brute_force():
    fam, shifts = build_family(derive_params(1009, 2, {"T": 4}))
    members = set(fam)
    for s in shifts.maps():
        moved = {s.inverse().compose(g) for g in members}
        fd = folner_defect(fam, s)
        assert fd.defect == Fraction(len(moved ^ members), len(members))
        assert len(moved ^ members) == 2 * len(members - moved)


def test_folner_rejects_bad_shift():
    fam, _ = build_family(derive_params(1009, 2, {"T": 3}))
    with pytest.raises(InvalidShift):
        folner_defect(fam, (3, 0))
    with pytest.raises(InvalidShift):
        folner_defect(fam, RationalAffine(Fraction(1, 2), 0))


def test_check_reduction_examples():
    rep = check_reduction([RationalAffine(1, 1), RationalAffine(1, 6)], 5)
    assert not rep.injective and rep.n_collisions == 1
    rep = check_reduction([RationalAffine(1, 0), RationalAffine(-1, 0)], 5)
    assert rep.injective and rep.n_sign_collisions == 1
    rep = check_reduction([RationalAffine(3, 2)], 5)
    assert rep.injective and rep.n_sign_collisions == 0 and rep.collision_free


@pytest.mark.parametrize("p,K,ov", [(1009, 2, {"T": 3}), (17, 2, {"T": 0, "L": "3"}), (1009, 3, {"T": 2}),
                                    (10007, 2, {"T": 20})])
def test_vectorised_scan_matches_generic(p, K, ov):
    fam, shifts = build_family(derive_params(p, K, ov))
    for sh in (None, shifts.positive_shifts):
        fast = check_family_reduction(fam, sh)
        members = list(fam)
        if sh is not None:
            members += [s.inverse().compose(g) for s in shifts.maps() for g in fam]
        slow = check_reduction(members, p)
        assert fast.n_maps == slow.n_maps
        assert fast.injective == slow.injective
        assert fast.n_collisions == slow.n_collisions
        assert fast.n_sign_collisions == slow.n_sign_collisions


def test_pigeonhole_when_window_exceeds_p():
    fam, _ = build_family(derive_params(1009, 2))
    assert 2 * fam.T + 1 > 1009
    rep = check_family_reduction(fam)
    assert not rep.injective and not rep.scanned and not rep.collision_free


def test_sufficient_condition_implies_scan_clean():
    # tiny parameters on a large prime so that 2 D*^2 < p
    par = derive_params(1000003, 2, {"L": "1", "T": 1})
    assert par.sufficient_condition_holds
    fam, shifts = build_family(par)
    assert check_family_reduction(fam, shifts.positive_shifts).collision_free
