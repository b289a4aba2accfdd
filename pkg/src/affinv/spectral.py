"""Fourier diagnostics of ``f = 1_A - alpha`` on ``F_p``.

Conventions: ``fhat(r) = sum_x f(x) e(-r x / p)``; the spectral measure is
``mu(r) = |fhat(r)|^2 / M`` on nonzero ``r`` with ``M = sum_{r != 0} |fhat(r)|^2``;
``lambda`` folds ``mu`` onto ``{1..N}``, ``N = floor((p-1)/(2K))``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .arith import primes_up_to
from .defect import defect_profile
from .errors import (
    AccuracyViolation,
    ChainViolation,
    DegenerateSpectrum,
    EmptyInterval,
    InvalidParameters,
    ValidationError,
)
from .indicator import IndicatorSet

PARSEVAL_RTOL = 1e-6
CHAIN_TOL = 1e-9


def chirp_dft(x: np.ndarray) -> np.ndarray:
    """Length-``n`` DFT ``X[r] = sum_k x[k] exp(-2 pi i r k / n)`` via a chirp convolution.

    Uses ``r*k = (r^2 + k^2 - (r-k)^2)/2`` and a power-of-two FFT of the
    zero-padded chirp product.  Chirp phases are reduced mod ``2n`` in exact
    integers before the exponential.
    """
    x = np.asarray(x, dtype=np.complex128)
    n = x.size
    if n == 0:
        return x.copy()
    k = np.arange(n, dtype=np.int64)
    phase = (k * k) % (2 * n)
    w = np.exp(-1j * np.pi * phase / n)
    size = 1 << (2 * n - 1).bit_length()
    a = np.zeros(size, dtype=np.complex128)
    a[:n] = x * w
    b = np.zeros(size, dtype=np.complex128)
    b[:n] = np.conj(w)
    b[size - n + 1:] = np.conj(w[1:][::-1])
    conv = np.fft.ifft(np.fft.fft(a) * np.fft.fft(b))
    return w * conv[:n]


def direct_dft(x: np.ndarray) -> np.ndarray:
    """O(n^2) reference summation with exact integer phase reduction."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.size
    k = np.arange(n, dtype=np.int64)
    out = np.empty(n, dtype=np.complex128)
    for r in range(n):
        out[r] = np.sum(x * np.exp(-2j * np.pi * ((r * k) % n) / n))
    return out


_METHODS = {
    "chirp": chirp_dft,
    "direct": direct_dft,
    "numpy": np.fft.fft,
}


@dataclass
class SpectralData:
    p: int
    alpha: float
    fhat: np.ndarray = field(repr=False)
    total_mass: float
    parseval_error: float

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.fhat) ** 2


def dft(A: IndicatorSet, method: str = "chirp") -> SpectralData:
    p = A.p
    if p < 3:
        raise ValidationError("p must be >= 3")
    if method not in _METHODS:
        raise ValidationError(f"unknown DFT method {method!r}")
    alpha = A.cardinality / p
    f = A.to_array().astype(np.float64) - alpha
    fhat = _METHODS[method](f)
    power = np.abs(fhat) ** 2
    M = float(power[1:].sum())
    expected = alpha * (1 - alpha) * p * p
    if expected > 0:
        err = abs(M - expected) / expected
    else:
        err = M / p
    if err > PARSEVAL_RTOL:
        raise AccuracyViolation(f"Parseval relative error {err:.3g} exceeds {PARSEVAL_RTOL}")
    if abs(fhat[0]) > PARSEVAL_RTOL * p:
        raise AccuracyViolation(f"|fhat(0)| = {abs(fhat[0]):.3g} is not ~0")
    return SpectralData(p, alpha, fhat, M, err)


@dataclass
class SpectralMeasure:
    p: int
    mu: np.ndarray = field(repr=False)  # length p, mu[0] = 0
    N: int

    @classmethod
    def from_weights(cls, weights: np.ndarray, N: int) -> "SpectralMeasure":
        """Normalise nonnegative weights on ``F_p^x`` (index 0 ignored)."""
        w = np.asarray(weights, dtype=np.float64).copy()
        w[0] = 0.0
        total = w.sum()
        if total <= 0:
            raise DegenerateSpectrum("zero total weight")
        return cls(w.size, w / total, N)


def spectral_measure(data: SpectralData, N: int) -> SpectralMeasure:
    if data.total_mass <= 0 or data.alpha in (0.0, 1.0):
        raise DegenerateSpectrum("f is identically zero (A empty or full)")
    mu = data.power / data.total_mass
    mu[0] = 0.0
    return SpectralMeasure(data.p, mu, N)


def _fold(mu: SpectralMeasure) -> np.ndarray:
    """``a_n = mu(n) + mu(-n)`` for ``n = 1..N``."""
    N = mu.N
    if N < 1:
        raise EmptyInterval("N < 1: the interval I is empty")
    n = np.arange(1, N + 1)
    return mu.mu[n] + mu.mu[mu.p - n]


def interval_mass(mu: SpectralMeasure) -> float:
    """``mu(I)`` with ``I = {1 <= |r| <= N}``; the tail is ``1 - interval_mass``."""
    return float(_fold(mu).sum())


def interval_mass_profile(mu: SpectralMeasure) -> np.ndarray:
    """``mu({1 <= |r| <= R})`` for ``R = 1..N``."""
    return np.cumsum(_fold(mu))


def w_kernel(t, K: int):
    """``W_K(t) = (1/K) sum_{b=1..K} |e(bt) - 1|^2``."""
    if K < 1:
        raise ValidationError("K must be >= 1")
    t = np.asarray(t, dtype=np.float64)
    b = np.arange(1, K + 1, dtype=np.float64)
    vals = 4.0 * np.sin(np.pi * np.multiply.outer(t, b)) ** 2
    out = vals.mean(axis=-1)
    return float(out) if out.ndim == 0 else out


def estimate_c0(K_max: int, grid_density: int = 10_000) -> float:
    """Grid minimum of ``W_K(t)`` over ``2 <= K <= K_max`` and ``||t|| >= 2/(5K)``."""
    if K_max < 2:
        raise ValidationError("K_max must be >= 2")
    best = math.inf
    for K in range(2, K_max + 1):
        t = np.linspace(2 / (5 * K), 0.5, grid_density)
        best = min(best, float(np.min(w_kernel(t, K))))
    return best


def translation_energy(data: SpectralData, K: int) -> float:
    """``p^-2 sum_r |fhat(r)|^2 W_K(r/p)``; equals the mean of the defects at ``(1, b)``, ``1 <= b <= K``."""
    r = np.arange(data.p, dtype=np.int64)
    # W_K(r/p) evaluated with the exact residue b*r mod p
    acc = np.zeros(data.p)
    for b in range(1, K + 1):
        acc += 4.0 * np.sin(np.pi * ((b * r) % data.p) / data.p) ** 2
    return float(np.dot(data.power, acc / K) / data.p**2)


def dilation_tv(mu: SpectralMeasure, q: int) -> float:
    """``sum_{r != 0} |mu(r) - mu(q r)|``."""
    p = mu.p
    if q % p == 0:
        raise ValidationError("q must be nonzero mod p")
    r = np.arange(1, p, dtype=np.int64)
    return float(np.abs(mu.mu[r] - mu.mu[(q * r) % p]).sum())


@dataclass
class LambdaMeasure:
    N: int
    lam: np.ndarray = field(repr=False)  # lam[n-1] = lambda(n)
    mass_in_I: float = 1.0

    @classmethod
    def from_weights(cls, weights) -> "LambdaMeasure":
        w = np.asarray(weights, dtype=np.float64)
        total = w.sum()
        if total <= 0 or np.any(w < 0):
            raise ValidationError("weights must be nonnegative with positive sum")
        return cls(w.size, w / total, 1.0)


def lambda_measure(mu: SpectralMeasure) -> LambdaMeasure:
    a = _fold(mu)
    mass = float(a.sum())
    if mass <= 0:
        raise EmptyInterval("mu(I) = 0")
    return LambdaMeasure(mu.N, a / mass, mass)


def dilate_lambda(lam: LambdaMeasure, q: int) -> np.ndarray:
    """``(T_q lambda)(n) = lambda(qn)`` if ``qn <= N`` else 0."""
    out = np.zeros(lam.N)
    k = lam.N // q
    out[:k] = lam.lam[q - 1 :: q][:k]
    return out


def lambda_dilation_tv(lam: LambdaMeasure, q: int) -> float:
    if q < 2:
        raise ValidationError("q must be >= 2")
    return float(np.abs(lam.lam - dilate_lambda(lam, q)).sum())


def expected_valuation(lam: LambdaMeasure, q: int) -> float:
    """``E_lambda v_q = sum_{t >= 1} lambda(q^t divides n)``."""
    total = 0.0
    qt = q
    while qt <= lam.N:
        total += float(lam.lam[qt - 1 :: qt].sum())
        qt *= q
    return total


def valuation_array(N: int, q: int) -> np.ndarray:
    """``v_q(n)`` for ``n = 1..N``."""
    v = np.zeros(N, dtype=np.int64)
    qt = q
    while qt <= N:
        v[qt - 1 :: qt] += 1
        qt *= q
    return v


@dataclass(frozen=True)
class Chain:
    log_N: float
    full_sum: float      # sum over primes q <= N
    partial_sum: float   # sum over primes q <= M0
    expected_log: float  # E_lambda log n, computed independently

    @property
    def holds(self) -> bool:
        return self.full_sum <= self.log_N + CHAIN_TOL and self.partial_sum <= self.full_sum + CHAIN_TOL


def chain_terms(lam: LambdaMeasure, M0: Optional[int] = None) -> Chain:
    """``log N >= sum_{q <= N} log q * E v_q >= sum_{q <= M0} log q * E v_q``."""
    N = lam.N
    M0 = N if M0 is None else M0
    full = partial = 0.0
    for q in primes_up_to(N) if N >= 2 else []:
        term = math.log(q) * expected_valuation(lam, q)
        full += term
        if q <= M0:
            partial += term
    e_log = float(np.dot(lam.lam, np.log(np.arange(1, N + 1))))
    return Chain(math.log(N), full, partial, e_log)


def valuation_lower_bound(eta: float) -> float:
    """Lower bound ``1/(8 eta)`` on ``E v_q`` valid for ``0 < eta <= 1/8``."""
    if not 0 < eta <= 0.125:
        raise ValidationError("bound needs 0 < eta <= 1/8")
    return 1.0 / (8.0 * eta)


@dataclass
class PrimeDiagnostic:
    q: int
    tv_mu: float
    tv_lambda: float
    e_valuation: float

    @property
    def valuation_bound(self) -> Optional[float]:
        if 0 < self.tv_lambda <= 0.125:
            return valuation_lower_bound(self.tv_lambda)
        return None


@dataclass
class CertificateReport:
    p: int
    K: int
    N: int
    M0: int
    alpha: float
    mass_in_I: float
    per_prime: list[PrimeDiagnostic]
    eta: float
    chain: Chain
    c0_estimate: float
    epsilon: float
    translation_energy: float
    parseval_error: float
    mass_profile: np.ndarray = field(repr=False, default=None)

    @property
    def implied_bound(self) -> Optional[float]:
        """``eta * log N / sum_{q <= M0} log q``."""
        s = sum(math.log(d.q) for d in self.per_prime)
        return self.eta * self.chain.log_N / s if s > 0 else None

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "K": self.K,
            "N": self.N,
            "M0": self.M0,
            "alpha": self.alpha,
            "mass_in_I": self.mass_in_I,
            "tail_mass": 1.0 - self.mass_in_I,
            "per_prime": [
                {"q": d.q, "tv_mu": d.tv_mu, "tv_lambda": d.tv_lambda,
                 "e_valuation": d.e_valuation, "valuation_bound": d.valuation_bound}
                for d in self.per_prime
            ],
            "eta": self.eta,
            "chain": {
                "log_N": self.chain.log_N,
                "sum_all_primes": self.chain.full_sum,
                "sum_primes_le_M0": self.chain.partial_sum,
                "expected_log_n": self.chain.expected_log,
                "holds": self.chain.holds,
            },
            "implied_bound": self.implied_bound,
            "c0_estimate": self.c0_estimate,
            "epsilon": self.epsilon,
            "translation_energy": self.translation_energy,
            "parseval_error": self.parseval_error,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["q", "tv_mu", "tv_lambda", "e_valuation"])
        for d in self.per_prime:
            w.writerow([d.q, repr(d.tv_mu), repr(d.tv_lambda), repr(d.e_valuation)])
        return buf.getvalue()


def certificate(A: IndicatorSet, K: int, method: str = "chirp", c0_grid: int = 10_000) -> CertificateReport:
    p = A.p
    if not 1 <= K < p:
        raise InvalidParameters(f"need 1 <= K < p, got K={K}")
    if A.cardinality in (0, p):
        raise DegenerateSpectrum("A is empty or full")
    N = (p - 1) // (2 * K)
    M0 = min(K, N)
    data = dft(A, method)
    mu = spectral_measure(data, N)
    lam = lambda_measure(mu)
    diags = []
    for q in primes_up_to(M0) if M0 >= 2 else []:
        diags.append(PrimeDiagnostic(q, dilation_tv(mu, q), lambda_dilation_tv(lam, q),
                                     expected_valuation(lam, q)))
    eta = max([1.0 / p] + [d.tv_lambda for d in diags])
    chain = chain_terms(lam, M0)
    if not chain.holds:
        raise ChainViolation(f"chain inequality fails: {chain}")
    return CertificateReport(
        p=p, K=K, N=N, M0=M0, alpha=data.alpha,
        mass_in_I=lam.mass_in_I,
        per_prime=diags,
        eta=eta,
        chain=chain,
        c0_estimate=estimate_c0(max(K, 2), c0_grid),
        epsilon=defect_profile(A, K).max_defect,
        translation_energy=translation_energy(data, K),
        parseval_error=data.parseval_error,
        mass_profile=interval_mass_profile(mu),
    )
