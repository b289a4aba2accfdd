"""Majority-of-random-signs construction of symmetric almost-invariant sets."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .arith import AffineMapZp
from .errors import CollisionDetected, EvenFamily, ExhaustedRetries, InvalidParameters, ValidationError
from .family import (
    FAST_P_LIMIT,
    CollisionReport,
    Family,
    Params,
    build_family,
    check_family_reduction,
    derive_params,
)
from .indicator import IndicatorSet

log = logging.getLogger(__name__)

SEED_MASK = (1 << 64) - 1
_CHUNK = 1 << 22


def orbit_index(p: int) -> np.ndarray:
    """``min(y, p - y)`` for every ``y`` in ``F_p``."""
    y = np.arange(p, dtype=np.int64)
    return np.minimum(y, p - y)


def _philox_key(seed: int, attempt: int) -> int:
    return (seed & SEED_MASK) | (attempt << 64)


def sign_block(seed: int, start: int, stop: int, attempt: int = 0) -> np.ndarray:
    """Signs of orbits ``start..stop-1``; depends only on (seed, attempt, orbit)."""
    base = start - start % 4
    gen = np.random.Philox(key=_philox_key(seed, attempt), counter=base // 4)
    raw = gen.random_raw(stop - base)[start - base:]
    return np.where(raw >> np.uint64(63), 1, -1).astype(np.int8)


@dataclass(frozen=True)
class SignAssignment:
    p: int
    seed: int
    signs: np.ndarray = field(repr=False, compare=False)
    attempt: int = 0

    def __getitem__(self, y: int) -> int:
        y %= self.p
        return int(self.signs[min(y, self.p - y)])


def sample_signs(p: int, seed: int, attempt: int = 0) -> SignAssignment:
    """One fair sign per negation orbit ``{y, -y}``, ``(p+1)/2`` orbits in all."""
    if not 0 <= seed <= SEED_MASK:
        raise ValidationError("seed must be a 64-bit unsigned integer")
    n = (p + 1) // 2
    signs = np.concatenate([sign_block(seed, s, min(s + _CHUNK, n), attempt)
                            for s in range(0, n, _CHUNK)])
    return SignAssignment(p, seed, signs, attempt)


# -- majority evaluation -----------------------------------------------------


def _family_collision_report(family: Family) -> CollisionReport:
    if "report_F" not in family._cache:
        family._cache["report_F"] = check_family_reduction(family)
    return family._cache["report_F"]


def _check_family(family: Family, verify: bool) -> None:
    if len(family) % 2 == 0:
        raise EvenFamily(f"family has even size {len(family)}")
    if family.p >= FAST_P_LIMIT:
        raise ValidationError(f"majority evaluation needs p < 2**31, got {family.p}")
    if verify:
        rep = _family_collision_report(family)
        if not rep.collision_free:
            raise CollisionDetected(
                f"family reduction mod {family.p} is not collision-free: "
                f"{rep.n_collisions} equal reductions, {rep.n_sign_collisions} sign collisions"
                + ("" if rep.scanned else " (pigeonhole on the j-range)")
            )


def _sums_naive(family: Family, xi: SignAssignment) -> np.ndarray:
    p = family.p
    alpha, beta = family.inverse_coefficients()
    orb = orbit_index(p)
    signs = xi.signs.astype(np.int64)
    x = np.arange(p, dtype=np.int64)
    total = np.zeros(p, dtype=np.int64)
    step = max(1, _CHUNK // p)
    for s in range(0, alpha.size, step):
        y = (alpha[s:s + step, None] * x[None, :] + beta[s:s + step, None]) % p
        total += signs[orb[y]].sum(axis=0)
    return total


def _sums_windowed(family: Family, xi: SignAssignment) -> np.ndarray:
    # g_{m,j}^{-1}(x) = d*(x*Q^2/m - j) with d = Q^{-2}: a window of width 2T+1
    # centred at x*Q^2/m over eta(u) = xi[[u*d]].
    p = family.p
    T = family.T
    d = pow(family.params.Q**2, -1, p)
    u = np.arange(p, dtype=np.int64)
    eta = xi.signs.astype(np.int64)[orbit_index(p)[(u * d) % p]]
    prefix = np.zeros(2 * p + 1, dtype=np.int64)
    np.cumsum(np.concatenate([eta, eta]), out=prefix[1:])
    wraps, rest = divmod(family.width, p)
    base = wraps * int(prefix[p])
    total = np.zeros(p, dtype=np.int64)
    for mult in family.q2_over_m():
        start = ((u * (mult % p)) % p - T) % p
        total += base + prefix[start + rest] - prefix[start]
    return total


def majority_sums(family: Family, xi: SignAssignment, strategy: str = "windowed",
                  verify: bool = True) -> np.ndarray:
    """``S(x) = sum_g xi[[g^{-1} x]]`` for every ``x``."""
    if xi.p != family.p:
        raise ValidationError("sign assignment and family use different p")
    _check_family(family, verify)
    if strategy == "naive":
        return _sums_naive(family, xi)
    if strategy == "windowed":
        return _sums_windowed(family, xi)
    raise ValidationError(f"unknown strategy {strategy!r}")


def majority_set(family: Family, xi: SignAssignment, strategy: str = "windowed",
                 verify: bool = True) -> IndicatorSet:
    """``{x : S(x) > 0}``.  An odd number of +-1 terms never sums to zero."""
    sums = majority_sums(family, xi, strategy, verify)
    if not np.all(sums != 0):
        raise AssertionError("zero majority sum with an odd family")
    return IndicatorSet.from_array(sums > 0)


# -- degenerate points -------------------------------------------------------


@dataclass(frozen=True)
class DegenerateReport:
    count: int
    bound: int
    samples: list
    by_pigeonhole: bool = False


def degenerate_points(hset: Sequence[AffineMapZp], p: int, max_samples: int = 10) -> DegenerateReport:
    """Points ``x`` where ``h -> [h^{-1} x]`` is not injective on ``hset``."""
    maps = list(dict.fromkeys(hset))
    k = len(maps)
    bound = 2 * k * k
    if k > (p + 1) // 2:
        # more maps than orbits: every point is degenerate
        return DegenerateReport(p, bound, list(range(min(p, max_samples))), True)
    if k <= 1:
        return DegenerateReport(0, bound, [])
    inv = [h.inverse() for h in maps]
    alpha = np.array([h.a for h in inv], dtype=object if p >= FAST_P_LIMIT else np.int64)
    beta = np.array([h.b for h in inv], dtype=alpha.dtype)
    count = 0
    samples = []
    step = max(1, _CHUNK // k)
    for s in range(0, p, step):
        x = np.arange(s, min(p, s + step), dtype=alpha.dtype)
        y = (x[:, None] * alpha[None, :] + beta[None, :]) % p
        rep = np.minimum(y, p - y)
        rep.sort(axis=1)
        bad = np.any(rep[:, 1:] == rep[:, :-1], axis=1)
        count += int(bad.sum())
        if len(samples) < max_samples:
            samples.extend(int(v) for v in x[bad][: max_samples - len(samples)])
    return DegenerateReport(count, bound, samples)


# -- driver ------------------------------------------------------------------


@dataclass(frozen=True)
class ConstructionResult:
    set: IndicatorSet
    density: float
    attempts: int
    params: Params
    seed: int
    attempt_key: int
    is_symmetric: bool
    strategy: str = "windowed"

    def to_json(self) -> dict:
        return {
            "p": self.set.p,
            "cardinality": self.set.cardinality,
            "density": self.density,
            "attempts": self.attempts,
            "seed": self.seed,
            "accepted_attempt": self.attempt_key,
            "is_symmetric": self.is_symmetric,
            "strategy": self.strategy,
            "params": self.params.to_json(),
        }


@dataclass(frozen=True)
class Policy:
    max_attempts: int = 1000
    density_window: float = 0.05

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValidationError("max_attempts must be >= 1")
        if not 0 <= self.density_window <= 0.5:
            raise ValidationError("density_window must lie in [0, 1/2]")


def construct(p: int, K: int, seed: int, policy: Optional[Policy] = None,
              overrides: Optional[dict] = None, strategy: str = "windowed",
              family: Optional[Family] = None) -> ConstructionResult:
    """Sample signs and take the majority set until the density is within the window.

    Attempt ``k`` draws its signs from the Philox stream keyed by
    ``(seed, k)``, so attempt 0 is exactly ``sample_signs(p, seed)``.
    """
    policy = policy or Policy()
    if family is None:
        params = derive_params(p, K, overrides)
        family, _ = build_family(params)
    else:
        params = family.params
        if params.p != p or params.K != K:
            raise InvalidParameters("supplied family does not match (p, K)")
    _check_family(family, verify=True)
    for attempt in range(policy.max_attempts):
        xi = sample_signs(params.p, seed, attempt)
        A = majority_set(family, xi, strategy, verify=False)
        density = A.cardinality / params.p
        if abs(density - 0.5) <= policy.density_window:
            sym = A.is_symmetric()
            if not sym:
                raise AssertionError("majority set is not symmetric")
            return ConstructionResult(A, density, attempt + 1, params, seed, attempt, sym, strategy)
        log.debug("attempt %d: density %.4f outside window", attempt, density)
    raise ExhaustedRetries(
        f"no attempt out of {policy.max_attempts} reached density 1/2 +- {policy.density_window} "
        f"at p={params.p}, K={params.K} (n={len(family)})"
    )
