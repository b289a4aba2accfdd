"""Probability that two overlapping majority votes disagree.

For ``|U| = |V| = n`` odd and ``|U symdiff V| = d``, the votes share
``m = n - d/2`` fair bits ``Z ~ Bin(m, 1/2)`` and own ``d/2`` bits each,
``X, Y ~ Bin(d/2, 1/2)``.  Given ``Z = z`` both votes pass independently
with probability ``t_z = P(X > n/2 - z)``, so

    P(M(U) != M(V)) = sum_z P(Z = z) * 2 t_z (1 - t_z).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np

from .errors import BadParity, ValidationError

EXACT_LIMIT = 64


def _validate(n: int, d: int) -> None:
    if n < 1 or n % 2 == 0:
        raise BadParity(f"n must be odd and positive, got {n}")
    if d % 2 or not 0 <= d <= 2 * n:
        raise BadParity(f"d must be even with 0 <= d <= 2n, got {d}")


def _exact(n: int, d: int) -> Fraction:
    h = d // 2
    m = n - h
    need = (n + 1) // 2  # Z + X > n/2  <=>  Z + X >= (n+1)/2
    tails = [0] * (h + 2)  # tails[k] = #{x : x >= k}
    for k in range(h, -1, -1):
        tails[k] = tails[k + 1] + math.comb(h, k)
    den_h = 1 << h
    acc = 0
    for z in range(m + 1):
        k = need - z
        t = den_h if k <= 0 else (tails[k] if k <= h else 0)
        acc += math.comb(m, z) * t * (den_h - t)
    return Fraction(2 * acc, (1 << m) * den_h * den_h)


def _log_binom_pmf(k: np.ndarray, n: int) -> np.ndarray:
    return (math.lgamma(n + 1) - np.array([math.lgamma(x + 1) + math.lgamma(n - x + 1) for x in k])
            - n * math.log(2.0))


def _logspace(n: int, d: int) -> float:
    h = d // 2
    m = n - h
    need = (n + 1) // 2
    px = np.exp(_log_binom_pmf(np.arange(h + 1), h))
    tails = np.concatenate([np.cumsum(px[::-1])[::-1], [0.0]])
    z = np.arange(m + 1)
    k = need - z
    t = np.where(k <= 0, 1.0, tails[np.clip(k, 0, h + 1)])
    w = 2.0 * t * (1.0 - t)
    keep = w > 0
    if not keep.any():
        return 0.0
    logs = _log_binom_pmf(z[keep], m) + np.log(w[keep])
    top = logs.max()
    return float(math.exp(top) * np.exp(logs - top).sum())


def coupling_exact(n: int, d: int, exact: bool | None = None) -> Union[Fraction, float]:
    """Exact disagreement probability.

    Rational (big-integer binomial weights) for ``n <= EXACT_LIMIT``, otherwise
    a log-space float accumulation good to ~1e-15.  ``exact`` forces a path.
    """
    _validate(n, d)
    if d == 0:
        return Fraction(0)
    if exact is None:
        exact = n <= EXACT_LIMIT
    return _exact(n, d) if exact else _logspace(n, d)


@dataclass(frozen=True)
class MCEstimate:
    estimate: float
    stderr: float
    trials: int


def coupling_mc(n: int, d: int, trials: int, seed: int) -> MCEstimate:
    _validate(n, d)
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    if d == 0:
        return MCEstimate(0.0, 0.0, trials)
    rng = np.random.default_rng(seed)
    h = d // 2
    z = rng.binomial(n - h, 0.5, trials)
    x = rng.binomial(h, 0.5, trials)
    y = rng.binomial(h, 0.5, trials)
    differ = (2 * (z + x) > n) != (2 * (z + y) > n)
    est = float(differ.mean())
    return MCEstimate(est, math.sqrt(est * (1 - est) / trials), trials)


@dataclass
class SweepTable:
    rows: list[tuple[int, int, float, float]] = field(default_factory=list)
    monotonicity_violations: list[tuple[int, int]] = field(default_factory=list)

    @property
    def max_ratio(self) -> float:
        return max((r[3] for r in self.rows), default=0.0)

    @property
    def argmax(self) -> tuple[int, int]:
        best = max(self.rows, key=lambda r: r[3])
        return best[0], best[1]

    @property
    def max_probability(self) -> float:
        return max((r[2] for r in self.rows), default=0.0)

    def max_ratio_by_n(self) -> list[tuple[int, float]]:
        by: dict[int, float] = {}
        for n, _, _, ratio in self.rows:
            by[n] = max(by.get(n, 0.0), ratio)
        return sorted(by.items())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "d", "p_exact", "ratio"])
        for n, d, pr, ratio in self.rows:
            w.writerow([n, d, repr(pr), repr(ratio)])
        return buf.getvalue()

    def to_json(self, include_rows: bool = False) -> dict:
        out = {
            "n_rows": len(self.rows),
            "max_ratio": self.max_ratio,
            "argmax": list(self.argmax) if self.rows else None,
            "max_probability": self.max_probability,
            "monotonicity_violations": [list(v) for v in self.monotonicity_violations],
        }
        if include_rows:
            out["rows"] = [{"n": n, "d": d, "p_exact": pr, "ratio": r} for n, d, pr, r in self.rows]
        return out


def bound_sweep(n_max: int, exact_limit: int = EXACT_LIMIT) -> SweepTable:
    """Exact ``P`` and ``P / (d/n)^(1/3)`` for odd ``n <= n_max`` and even ``2 <= d <= n``."""
    table = SweepTable()
    for n in range(3, n_max + 1, 2):
        prev = -1.0
        for d in range(2, n + 1, 2):
            pr = float(coupling_exact(n, d, exact=n <= exact_limit))
            table.rows.append((n, d, pr, pr / (d / n) ** (1 / 3)))
            if pr < prev:
                table.monotonicity_violations.append((n, d))
            prev = pr
    return table
