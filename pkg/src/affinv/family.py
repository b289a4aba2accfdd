"""The smooth-rational affine family and its Følner bookkeeping.

Given ``(p, K)`` the family consists of the rational maps
``g_{m,j}(x) = m*x + m*j/Q**2`` for ``m`` a ``K``-smooth rational with
exponents boxed by ``L_q`` and ``|j| <= T``.  At realistic parameters the
family has millions of members, so :class:`Family` is structural: members
are addressed by ``(slope index, j)`` and only materialised on request.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Sequence, Union

import mpmath
import numpy as np
from mpmath import iv

from .arith import (
    AffineMapZp,
    Prime,
    RationalAffine,
    primes_up_to,
    reduce_affine,
    valuation,
)
from .errors import (
    AmbiguousFloor,
    ArithmeticOverflow,
    InvalidOverride,
    InvalidParameters,
    InvalidShift,
    ValidationError,
)

IV_PREC = 192
# numpy int64 kernels need p**2 < 2**63.
FAST_P_LIMIT = 2**31
MAX_SCAN = 40_000_000


def _iv_from_exact(x: Fraction):
    return iv.mpf(x.numerator) / iv.mpf(x.denominator)


def _exact_floor(x, what: str) -> int:
    with mpmath.workprec(IV_PREC):
        lo = int(mpmath.floor(mpmath.mpf(x.a)))
        hi = int(mpmath.floor(mpmath.mpf(x.b)))
    if lo != hi:
        raise AmbiguousFloor(f"floor of {what} is ambiguous at {IV_PREC} bits: {x}")
    return lo


def _exact_ceil(x) -> int:
    with mpmath.workprec(IV_PREC):
        return int(mpmath.ceil(mpmath.mpf(x.b)))


def _decimal(x, digits: int = 30) -> str:
    with mpmath.workprec(IV_PREC):
        return mpmath.nstr(mpmath.mpf(x.mid), digits)


def _parse_L(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, float, str)):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidOverride(f"cannot parse L override {value!r}") from exc
    raise InvalidOverride(f"unsupported L override type {type(value).__name__}")


@dataclass(frozen=True)
class Params:
    p: int
    K: int
    L: float
    L_decimal: str
    primes: tuple[int, ...]
    L_q: tuple[tuple[int, int], ...]
    Q: int
    T: int
    N: int
    M0: int
    d_star: int
    overrides_applied: tuple[str, ...] = ()

    @property
    def L_q_map(self) -> dict[int, int]:
        return dict(self.L_q)

    @property
    def smooth_size(self) -> int:
        return math.prod(2 * l + 1 for _, l in self.L_q)

    @property
    def n(self) -> int:
        return self.smooth_size * (2 * self.T + 1)

    @property
    def sufficient_condition_holds(self) -> bool:
        return 2 * self.d_star**2 < self.p

    def folner_bound(self) -> float:
        """Variable part ``log(2K)/L + K*Q**3/T`` of the Følner defect bound."""
        tail = math.inf if self.T == 0 else self.K * self.Q**3 / self.T
        return math.log(2 * self.K) / self.L + tail

    def to_json(self) -> dict:
        return {
            "p": str(self.p),
            "K": str(self.K),
            "L": self.L_decimal,
            "L_q": {str(q): str(l) for q, l in self.L_q},
            "Q": str(self.Q),
            "T": str(self.T),
            "N": str(self.N),
            "M0": str(self.M0),
            "n": str(self.n),
            "smooth_size": str(self.smooth_size),
            "d_star": str(self.d_star),
            "sufficient_condition_holds": self.sufficient_condition_holds,
            "overrides_applied": list(self.overrides_applied),
        }


def derive_params(p: int, K: int, overrides: Optional[dict] = None) -> Params:
    """All construction parameters for ``(p, K)``.

    ``overrides`` may contain ``"L"`` (exact decimal string, int, float or
    Fraction) and/or ``"T"`` (non-negative int).  Floors are taken on
    intervals; a floor whose value the interval cannot pin down raises
    :class:`AmbiguousFloor`.
    """
    p = Prime(p)
    if isinstance(K, bool) or int(K) != K or K < 1:
        raise InvalidParameters(f"K must be a positive integer, got {K!r}")
    K = int(K)
    if K >= p:
        raise InvalidParameters(f"K={K} must be smaller than p={p}")
    overrides = dict(overrides or {})
    unknown = set(overrides) - {"L", "T"}
    if unknown:
        raise InvalidOverride(f"unknown overrides: {sorted(unknown)}")
    applied = []

    iv.prec = IV_PREC
    if overrides.get("L") is not None:
        L_exact = _parse_L(overrides["L"])
        if L_exact <= 0:
            raise InvalidOverride("L override must be positive")
        L_iv = _iv_from_exact(L_exact)
        applied.append("L")
    else:
        L_iv = iv.log(2 * K) * iv.sqrt(iv.log(p) / K)

    primes = tuple(primes_up_to(K))
    L_q = tuple((q, _exact_floor(L_iv / iv.log(q), f"L/log {q}")) for q in primes)
    Q = math.prod(q**l for q, l in L_q)

    if overrides.get("T") is not None:
        T = overrides["T"]
        if isinstance(T, bool) or int(T) != T or T < 0:
            raise InvalidOverride(f"T override must be a non-negative integer, got {T!r}")
        T = int(T)
        applied.append("T")
    else:
        T = _exact_floor(L_iv * K * Q**3, "L*K*Q^3")
        if T < 1:
            raise InvalidParameters(
                f"default T = floor(L*K*Q^3) = {T} at p={p}, K={K}; pass a T override"
            )

    N = (p - 1) // (2 * K)
    M0 = min(K, N)
    # Dominates every numerator/denominator of h^{-1} for h in the shifted family.
    base_d = _exact_ceil(2 * (L_iv + 1) * K * Q**4)
    d_star = max(base_d, K * Q**3 + T * Q, K * Q, Q**3)
    with mpmath.workprec(IV_PREC):
        L_float = float(mpmath.mpf(L_iv.mid))
    return Params(
        p=int(p),
        K=K,
        L=L_float,
        L_decimal=_decimal(L_iv),
        primes=primes,
        L_q=L_q,
        Q=Q,
        T=T,
        N=N,
        M0=M0,
        d_star=d_star,
        overrides_applied=tuple(applied),
    )


def _exponent_value(primes: Sequence[int], exps: Sequence[int]) -> Fraction:
    v = Fraction(1)
    for q, e in zip(primes, exps):
        v *= Fraction(q) ** e
    return v


@dataclass(frozen=True)
class SmoothSet:
    primes: tuple[int, ...]
    bounds: tuple[int, ...]
    exponent_vectors: tuple[tuple[int, ...], ...]
    values: tuple[Fraction, ...]

    def __len__(self) -> int:
        return len(self.values)

    def index_of(self, exps: Sequence[int]) -> Optional[int]:
        """Position of an exponent vector in the box, or ``None`` if outside."""
        idx = 0
        for e, l in zip(exps, self.bounds):
            if not -l <= e <= l:
                return None
            idx = idx * (2 * l + 1) + (e + l)
        return idx


def build_smooth_set(params: Params) -> SmoothSet:
    primes = tuple(q for q, _ in params.L_q)
    bounds = tuple(l for _, l in params.L_q)
    vectors = tuple(itertools.product(*(range(-l, l + 1) for l in bounds)))
    values = tuple(_exponent_value(primes, v) for v in vectors)
    Q2 = params.Q**2
    for m in values:
        if not Fraction(1, params.Q) <= m <= params.Q:
            raise ValidationError(f"smooth value {m} outside [1/Q, Q]")
        if (Q2 / m).denominator != 1:
            raise ValidationError(f"Q^2/m is not integral for m={m}")
    return SmoothSet(primes, bounds, vectors, values)


@dataclass(frozen=True)
class ShiftSet:
    K: int
    positive_shifts: tuple[tuple[int, int], ...]
    full_grid: tuple[tuple[int, int], ...]

    def maps(self) -> list[RationalAffine]:
        return [RationalAffine(a, b) for a, b in self.positive_shifts]


def build_shift_set(K: int, p: int) -> ShiftSet:
    positive = tuple((a, b) for a in range(1, K + 1) for b in range(-K, K + 1))
    full = tuple(
        (a, b)
        for a in [*range(-K, 0), *range(1, K + 1)]
        for b in range(-K, K + 1)
        if a % p != 0
    )
    return ShiftSet(K, positive, full)


@dataclass(frozen=True)
class Family:
    """``{g_{m,j}}``; position of ``(slope index i, j)`` is ``i*(2T+1) + j + T``."""

    params: Params
    smooth: SmoothSet
    _cache: dict = field(default_factory=dict, repr=False, compare=False, hash=False)

    @property
    def p(self) -> int:
        return self.params.p

    @property
    def T(self) -> int:
        return self.params.T

    @property
    def width(self) -> int:
        return 2 * self.params.T + 1

    def __len__(self) -> int:
        return len(self.smooth) * self.width

    def index(self, slope_index: int, j: int) -> int:
        if not 0 <= slope_index < len(self.smooth) or abs(j) > self.T:
            raise IndexError((slope_index, j))
        return slope_index * self.width + j + self.T

    def position(self, pos: int) -> tuple[int, int]:
        i, r = divmod(pos, self.width)
        return i, r - self.T

    def rational_map(self, slope_index: int, j: int) -> RationalAffine:
        m = self.smooth.values[slope_index]
        return RationalAffine(m, m * j / self.params.Q**2)

    def __iter__(self) -> Iterator[RationalAffine]:
        for i in range(len(self.smooth)):
            for j in range(-self.T, self.T + 1):
                yield self.rational_map(i, j)

    @property
    def rational_maps(self) -> list[RationalAffine]:
        return list(self)

    def reduced_maps(self) -> list[AffineMapZp]:
        return [reduce_affine(h, self.p) for h in self]

    def slope_residues(self) -> list[int]:
        """``m mod p`` per slope index."""
        p = self.p
        return [m.numerator * pow(m.denominator, -1, p) % p for m in self.smooth.values]

    def q2_over_m(self) -> list[int]:
        """``Q**2/m`` per slope index (integers)."""
        Q2 = self.params.Q**2
        return [int(Q2 / m) for m in self.smooth.values]

    def inverse_coefficients(self) -> tuple[np.ndarray, np.ndarray]:
        """Reduced ``(alpha, beta)`` with ``g^{-1}(x) = alpha*x + beta``, in position order."""
        if "inv" not in self._cache:
            p = self.p
            if p >= FAST_P_LIMIT:
                raise ArithmeticOverflow(f"vectorised reduction needs p < 2**31, got {p}")
            d = pow(self.params.Q**2, -1, p)
            j = np.arange(-self.T, self.T + 1, dtype=np.int64)
            beta_row = (-(j % p) * d) % p
            alpha = np.repeat(
                np.array([pow(a, -1, p) for a in self.slope_residues()], dtype=np.int64), self.width
            )
            beta = np.tile(beta_row, len(self.smooth))
            self._cache["inv"] = (alpha, beta)
        return self._cache["inv"]

    def to_json(self, include_vectors: bool = True) -> dict:
        out = {
            "params": self.params.to_json(),
            "n": str(len(self)),
            "smooth_size": str(len(self.smooth)),
            "primes": list(self.smooth.primes),
            "T": str(self.T),
        }
        if include_vectors:
            out["exponent_vectors"] = [list(v) for v in self.smooth.exponent_vectors]
        return out


def _check_involution(family: Family, samples: int = 64) -> None:
    """``g_{m,j}^{-1}(-x) == -g_{m,-j}^{-1}(x)``, exactly and after reduction."""
    rng = np.random.default_rng(0)
    n_slopes = len(family.smooth)
    p = family.p
    for _ in range(min(samples, len(family))):
        i = int(rng.integers(n_slopes))
        j = int(rng.integers(-family.T, family.T + 1))
        g = family.rational_map(i, j).inverse()
        h = family.rational_map(i, -j).inverse()
        x = Fraction(int(rng.integers(-p, p)), int(rng.integers(1, 50)))
        if g(-x) != -h(x):
            raise ValidationError(f"involution fails at slope {i}, j={j}")
        gz, hz = reduce_affine(g, p), reduce_affine(h, p)
        xz = int(rng.integers(p))
        if gz((-xz) % p) != (-hz(xz)) % p:
            raise ValidationError(f"reduced involution fails at slope {i}, j={j}")


def build_family(params: Params) -> tuple[Family, ShiftSet]:
    smooth = build_smooth_set(params)
    for q in smooth.primes:
        if q % params.p == 0:
            raise ValidationError(f"prime {q} <= K vanishes mod p")
    family = Family(params, smooth)
    if len(family) % 2 != 1:
        raise ValidationError("family size is even")
    _check_involution(family)
    return family, build_shift_set(params.K, params.p)


# -- Følner defect -----------------------------------------------------------


@dataclass(frozen=True)
class FolnerDefect:
    a: int
    b: int
    defect: Fraction       # |s^{-1}F symdiff F| / |F|
    one_sided: Fraction    # |F \ s^{-1}F| / |F|
    bound: float           # log(2K)/L + K Q^3/T, constant omitted


def _shift_coeffs(s, K: int) -> tuple[int, int]:
    if isinstance(s, RationalAffine):
        if s.slope.denominator != 1 or s.intercept.denominator != 1:
            raise InvalidShift(f"{s} is not an integer shift")
        a, b = int(s.slope), int(s.intercept)
    else:
        a, b = s
    if not 1 <= a <= K or abs(b) > K:
        raise InvalidShift(f"shift ({a}, {b}) outside 1 <= a <= {K}, |b| <= {K}")
    return a, b


def folner_defect(family: Family, s: Union[RationalAffine, tuple[int, int]]) -> FolnerDefect:
    """Exact ``|s^{-1}F symdiff F| / |F|`` for ``s = s_{a,b}`` by counting.

    ``s^{-1} g_{m,j} = g_{m/a, j - b Q^2/m}`` leaves ``F`` exactly when the
    slope leaves the exponent box or the shifted ``j`` leaves ``[-T, T]``.
    """
    params = family.params
    a, b = _shift_coeffs(s, params.K)
    smooth = family.smooth
    shift = [valuation(a, q) for q in smooth.primes]
    width = family.width
    Q2 = params.Q**2
    out = 0
    for exps, m in zip(smooth.exponent_vectors, smooth.values):
        moved = [e - t for e, t in zip(exps, shift)]
        if smooth.index_of(moved) is None:
            out += width
            continue
        u = b * Q2 / m
        assert u.denominator == 1
        out += min(abs(int(u)), width)
    n = len(family)
    return FolnerDefect(a, b, Fraction(2 * out, n), Fraction(out, n), params.folner_bound())


# -- reduction checks --------------------------------------------------------


@dataclass(frozen=True)
class CollisionReport:
    injective: bool
    sign_collisions: list
    d_star: int
    sufficient_condition_holds: bool
    collisions: list = field(default_factory=list)
    n_maps: int = 0
    n_collisions: int = 0
    n_sign_collisions: int = 0
    scanned: bool = True

    @property
    def collision_free(self) -> bool:
        return self.injective and self.n_sign_collisions == 0 and self.scanned

    def to_json(self) -> dict:
        return {
            "injective": self.injective,
            "n_maps": self.n_maps,
            "n_collisions": self.n_collisions,
            "n_sign_collisions": self.n_sign_collisions,
            "collisions": [list(map(str, c)) for c in self.collisions],
            "sign_collisions": [list(map(str, c)) for c in self.sign_collisions],
            "d_star": str(self.d_star),
            "sufficient_condition_holds": self.sufficient_condition_holds,
            "scanned": self.scanned,
        }


def _inverse_bound(h: RationalAffine) -> int:
    inv = h.inverse()
    return max(abs(inv.slope.numerator), inv.slope.denominator,
               abs(inv.intercept.numerator), inv.intercept.denominator)


def check_reduction(hset: Sequence[RationalAffine], p: int, max_examples: int = 10) -> CollisionReport:
    """Direct scan of a list of rational maps for collisions after reduction mod ``p``.

    Reports pairs of distinct maps with equal reductions and pairs with
    ``rho(h1^{-1}) == -rho(h2^{-1})``.
    """
    distinct = list(dict.fromkeys(hset))
    by_key: dict[tuple[int, int], RationalAffine] = {}
    collisions = []
    n_coll = 0
    inverse_keys: dict[tuple[int, int], RationalAffine] = {}
    for h in distinct:
        r = reduce_affine(h, p)
        if r.key in by_key:
            n_coll += 1
            if len(collisions) < max_examples:
                collisions.append((by_key[r.key], h))
        else:
            by_key[r.key] = h
        inverse_keys.setdefault(r.inverse().key, h)
    sign = []
    n_sign = 0
    for key, h1 in inverse_keys.items():
        neg = ((-key[0]) % p, (-key[1]) % p)
        if neg in inverse_keys and key < neg:  # each unordered pair once
            n_sign += 1
            if len(sign) < max_examples:
                sign.append((h1, inverse_keys[neg]))
    d_star = max((_inverse_bound(h) for h in distinct), default=0)
    return CollisionReport(
        injective=n_coll == 0,
        sign_collisions=sign,
        d_star=d_star,
        sufficient_condition_holds=2 * d_star**2 < p,
        collisions=collisions,
        n_maps=len(distinct),
        n_collisions=n_coll,
        n_sign_collisions=n_sign,
    )


def _merge(intervals: list[tuple[int, int]]) -> list[tuple[int, int]]:
    out: list[list[int]] = []
    for lo, hi in sorted(intervals):
        if out and lo <= out[-1][1] + 1:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return [tuple(x) for x in out]


def shifted_family_slices(family: Family, shifts: Optional[Sequence[tuple[int, int]]]):
    """Distinct members of ``F union U_s s^{-1}F`` as ``g_{m', j'}`` slices.

    Returns ``{exponent vector of m': merged j'-intervals}``.
    """
    smooth = family.smooth
    Q2 = family.params.Q**2
    T = family.T
    if shifts is None:
        shifts = [(1, 0)]
    slices: dict[tuple[int, ...], list[tuple[int, int]]] = {}
    for a, b in shifts:
        t = [valuation(a, q) for q in smooth.primes]
        for exps, m in zip(smooth.exponent_vectors, smooth.values):
            u = int(b * Q2 / m)
            key = tuple(e - ti for e, ti in zip(exps, t))
            slices.setdefault(key, []).append((-T - u, T - u))
    return {k: _merge(v) for k, v in slices.items()}


def check_family_reduction(
    family: Family,
    shifts: Optional[Sequence[tuple[int, int]]] = None,
    max_examples: int = 10,
) -> CollisionReport:
    """Collision scan of ``F`` (``shifts=None``) or of ``F union U_s s^{-1}F``.

    Every distinct rational member ``g_{m',j'}`` is reduced mod ``p`` and the
    reduced coefficient pairs are compared directly.
    """
    params = family.params
    p = params.p
    primes = family.smooth.primes
    slices = shifted_family_slices(family, shifts)
    total = sum(hi - lo + 1 for iv_ in slices.values() for lo, hi in iv_)
    d_star = params.d_star
    sufficient = params.sufficient_condition_holds

    # Pigeonhole within one slope: j' and j'+p reduce to the same map.
    for key, ivs in slices.items():
        span = sum(hi - lo + 1 for lo, hi in ivs)
        if span > p:
            m = _exponent_value(primes, key)
            witness = []
            for lo, hi in ivs:
                if hi - lo + 1 > p:
                    witness = [((m, lo), (m, lo + p))]
                    break
            return CollisionReport(
                injective=False, sign_collisions=[], d_star=d_star,
                sufficient_condition_holds=sufficient, collisions=witness,
                n_maps=total, n_collisions=max(1, span - p), scanned=False,
            )
    if total > MAX_SCAN:
        raise ValidationError(f"{total} maps is too many to scan directly (limit {MAX_SCAN})")
    if p >= FAST_P_LIMIT:
        hset = [RationalAffine(m, m * j / params.Q**2)
                for key in slices for m in [_exponent_value(primes, key)]
                for lo, hi in slices[key] for j in range(lo, hi + 1)]
        rep = check_reduction(hset, p, max_examples)
        return CollisionReport(rep.injective, rep.sign_collisions, d_star, sufficient,
                               rep.collisions, rep.n_maps, rep.n_collisions, rep.n_sign_collisions)

    d = pow(params.Q**2, -1, p)
    keys_list, inv_list, slope_ids, js = [], [], [], []
    slope_values = []
    for sid, (key, ivs) in enumerate(slices.items()):
        m = _exponent_value(primes, key)
        slope_values.append(m)
        A = m.numerator * pow(m.denominator, -1, p) % p
        alpha = pow(A, -1, p)
        j = np.concatenate([np.arange(lo, hi + 1, dtype=np.int64) for lo, hi in ivs])
        jm = j % p
        B = (A * ((jm * d) % p)) % p
        beta = (-(jm * d)) % p
        keys_list.append(A * p + B)
        inv_list.append(alpha * p + beta)
        slope_ids.append(np.full(j.size, sid, dtype=np.int64))
        js.append(j)
    keys = np.concatenate(keys_list)
    inv = np.concatenate(inv_list)
    sid = np.concatenate(slope_ids)
    jj = np.concatenate(js)
    del keys_list, inv_list, slope_ids, js

    def label(i):
        return (slope_values[int(sid[i])], int(jj[i]))

    order = np.argsort(keys, kind="stable")
    ks = keys[order]
    dup = np.nonzero(ks[1:] == ks[:-1])[0]
    collisions = [(label(order[i]), label(order[i + 1])) for i in dup[:max_examples]]
    del ks, order

    alpha_neg = (p - inv // p) % p
    beta_neg = (p - inv % p) % p
    neg = alpha_neg * p + beta_neg
    inv_sorted = np.sort(inv)
    pos = np.searchsorted(inv_sorted, neg)
    pos[pos == inv_sorted.size] = 0
    hit = np.nonzero((inv_sorted[pos] == neg) & (inv < neg))[0]  # unordered pairs once
    sign = []
    if hit.size:
        lookup = {int(v): i for i, v in enumerate(inv) if int(v) in set(neg[hit[:max_examples]].tolist())}
        for i in hit[:max_examples]:
            sign.append((label(i), label(lookup[int(neg[i])])))
    return CollisionReport(
        injective=dup.size == 0,
        sign_collisions=sign,
        d_star=d_star,
        sufficient_condition_holds=sufficient,
        collisions=collisions,
        n_maps=int(keys.size),
        n_collisions=int(dup.size),
        n_sign_collisions=int(hit.size),
    )
