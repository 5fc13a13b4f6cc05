"""Zeta, digamma, the symmetric-square L-function and related Dirichlet series.

All evaluators accept scalars or numpy arrays of complex s.  Euler products
are truncated under a :class:`TruncationPolicy` and return a tail estimate
alongside the value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import loggamma

from .arith import factorize
from .curve import HeckeTable, power_sum_matrix
from .errors import DomainError, PoleError

# B_2, B_4, ..., B_20
_BERNOULLI = np.array(
    [1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510, 43867 / 798, -174611 / 330]
)
_EM_COEFFS = np.array([_BERNOULLI[k] / math.factorial(2 * k + 2) for k in range(10)])

# Elements per chunk when an s-array is broadcast against a prime array.
_CHUNK_ELEMENTS = 2_000_000


@dataclass(frozen=True)
class TruncationPolicy:
    prime_limit: int = 10_000
    power_limit: int = 30
    tail_estimate_mode: str = "geometric-bound"

    def __post_init__(self):
        if self.prime_limit < 2:
            raise DomainError("prime_limit must be at least 2")
        if self.power_limit < 1:
            raise DomainError("power_limit must be at least 1")
        if self.tail_estimate_mode not in ("geometric-bound", "off"):
            raise DomainError(f"unknown tail_estimate_mode {self.tail_estimate_mode!r}")


@dataclass(frozen=True)
class TruncatedValue:
    """A truncated series or product value together with a tail estimate.

    ``conditional`` marks estimates on Re(s) = 1, where the Euler product
    only converges conditionally and the tail is a heuristic
    square-root-cancellation size rather than a bound.
    """

    value: complex | np.ndarray
    tail_estimate: float | np.ndarray
    conditional: bool = False


# ----------------------------------------------------------------------------
# zeta
# ----------------------------------------------------------------------------


def _em_cutoff(s: np.ndarray) -> int:
    # successive Bernoulli corrections shrink by about (|s| / (2 pi N))^2
    return max(50, int(math.ceil(0.5 * float(np.max(np.abs(s), initial=0.0)))) + 20)


@njit(cache=True, fastmath=True)
def _power_sums(s, N):
    """sum_{2 <= n < N} n^-s and its s-derivative, in real arithmetic."""
    val = np.zeros(s.size, dtype=np.complex128)
    der = np.zeros(s.size, dtype=np.complex128)
    logs = np.log(np.arange(2, N).astype(np.float64))
    for i in range(s.size):
        sr = s[i].real
        si = s[i].imag
        vr = vi = dr = di = 0.0
        for k in range(logs.size):
            ln = logs[k]
            mag = math.exp(-sr * ln)
            tr = mag * math.cos(si * ln)
            ti = -mag * math.sin(si * ln)
            vr += tr
            vi += ti
            dr -= ln * tr
            di -= ln * ti
        val[i] = complex(vr, vi)
        der[i] = complex(dr, di)
    return val, der


def _euler_maclaurin(s: np.ndarray, derivative: bool, regular: bool):
    """Euler-Maclaurin sums for zeta (or zeta - 1/(s-1)) and optionally zeta'."""
    N = _em_cutoff(s)
    logN = math.log(N)
    val, der = _power_sums(s.ravel(), N)
    val = val.reshape(s.shape) + 1.0
    der = der.reshape(s.shape)
    NmS = np.exp(-s * logN)
    N1mS = N * NmS
    sm1 = s - 1.0
    if regular:
        u = -sm1 * logN
        safe = np.where(u == 0, 1.0, u)
        ratio = np.where(u == 0, 1.0, np.expm1(u) / safe)
        val += -logN * ratio
    else:
        val += N1mS / sm1
    val += 0.5 * NmS
    if derivative:
        der += -logN * N1mS / sm1 - N1mS / sm1**2 - 0.5 * logN * NmS
    # poch = s (s+1) ... (s+2k-2), dpoch its derivative
    poch = s.copy()
    dpoch = np.ones(s.shape, dtype=complex)
    power = NmS / N  # N^{-s-1}
    for k in range(10):
        val += _EM_COEFFS[k] * poch * power
        if derivative:
            der += _EM_COEFFS[k] * (dpoch - logN * poch) * power
        for j in (2 * k + 1, 2 * k + 2):
            dpoch = dpoch * (s + j) + poch
            poch = poch * (s + j)
        power = power / (N * N)
    return val, der


def _as_array(s):
    arr = np.asarray(s, dtype=complex)
    return arr, arr.ndim == 0


def _check_region(s: np.ndarray):
    if np.any(s.real <= 0):
        raise DomainError("Euler-Maclaurin evaluation requires Re(s) > 0")
    if np.any(s == 1):
        raise PoleError("zeta has a pole at s = 1")


def zeta(s):
    """Riemann zeta by Euler-Maclaurin summation (Re(s) > 0, s != 1)."""
    arr, scalar = _as_array(s)
    _check_region(arr)
    val, _ = _euler_maclaurin(np.atleast_1d(arr), derivative=False, regular=False)
    return complex(val[0]) if scalar else val.reshape(arr.shape)


def zeta_regular(s):
    """zeta(s) - 1/(s-1), an entire function, evaluated without cancellation near s = 1."""
    arr, scalar = _as_array(s)
    if np.any(arr.real <= 0):
        raise DomainError("Euler-Maclaurin evaluation requires Re(s) > 0")
    val, _ = _euler_maclaurin(np.atleast_1d(arr), derivative=False, regular=True)
    return complex(val[0]) if scalar else val.reshape(arr.shape)


def zeta_log_deriv(s):
    """zeta'(s) / zeta(s)."""
    arr, scalar = _as_array(s)
    _check_region(arr)
    val, der = _euler_maclaurin(np.atleast_1d(arr), derivative=True, regular=False)
    out = der / val
    return complex(out[0]) if scalar else out.reshape(arr.shape)


# ----------------------------------------------------------------------------
# digamma and Gamma ratios
# ----------------------------------------------------------------------------


def digamma(s):
    """psi(s) by upward recurrence to Re >= 10 and the asymptotic series."""
    arr, scalar = _as_array(s)
    z = np.atleast_1d(arr).copy()
    if np.any((z.imag == 0) & (z.real <= 0) & (z.real == np.round(z.real))):
        raise PoleError("digamma has poles at the nonpositive integers")
    acc = np.zeros(z.shape, dtype=complex)
    low = z.real < 10
    while np.any(low):
        acc[low] -= 1.0 / z[low]
        z[low] += 1.0
        low = z.real < 10
    inv2 = 1.0 / (z * z)
    series = np.zeros(z.shape, dtype=complex)
    term = np.ones(z.shape, dtype=complex)
    for k in range(10):
        term = term * inv2
        series += _BERNOULLI[k] / (2 * (k + 1)) * term
    out = acc + np.log(z) - 0.5 / z - series
    return complex(out[0]) if scalar else out.reshape(arr.shape)


@dataclass(frozen=True)
class GammaRatioReport:
    a: float
    b: float
    y: np.ndarray
    ratios: np.ndarray
    max_ratio: float
    argmax_y: float
    finite: bool


def gamma_ratio_bound_check(a: float, b: float, y_grid) -> GammaRatioReport:
    """Tabulate |Gamma(a + iy) / Gamma(b + iy)| over a y-grid for 0 < a <= b."""
    if not (0 < a <= b):
        raise DomainError("need 0 < a <= b")
    y = np.asarray(y_grid, dtype=float)
    ratios = np.exp((loggamma(a + 1j * y) - loggamma(b + 1j * y)).real)
    i = int(np.argmax(ratios))
    return GammaRatioReport(a, b, y, ratios, float(ratios[i]), float(y[i]), bool(np.all(np.isfinite(ratios))))


def gamma_ratio_unimodular(y):
    """Gamma(1 - iy) / Gamma(1 + iy) for real y (a unimodular number)."""
    y = np.asarray(y, dtype=float)
    return np.exp(-2j * loggamma(1 + 1j * y).imag)


# ----------------------------------------------------------------------------
# symmetric square
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class _PrimeData:
    p: np.ndarray  # good primes as float
    logp: np.ndarray
    c: np.ndarray  # alpha^2 + beta^2 = lambda^2 - 2
    alpha2: np.ndarray  # alpha^2 on the unit circle
    M: int
    has_M: bool


def prime_data(table: HeckeTable, limit: int) -> _PrimeData:
    t = table.restrict(min(limit, table.limit))
    good = t.primes != t.M
    p = t.primes[good].astype(float)
    lam = t.lam[good]
    theta = np.arccos(np.clip(lam / 2, -1.0, 1.0))
    return _PrimeData(
        p=p,
        logp=np.log(p),
        c=lam * lam - 2.0,
        alpha2=np.exp(2j * theta),
        M=t.M,
        has_M=bool(np.any(~good)),
    )


def _chunks(n_s: int, n_p: int):
    step = max(1, _CHUNK_ELEMENTS // max(n_p, 1))
    for start in range(0, n_s, step):
        yield slice(start, min(n_s, start + step))


def _check_sym2_domain(arr):
    if np.any(arr.real < 1 - 1e-12):
        raise DomainError("the symmetric-square Euler product is used only on Re(s) >= 1")


def _prime_tail_sigma(sigma: np.ndarray, P: int, weight_log: bool) -> tuple[np.ndarray, bool]:
    """Tail size of sum_{p > P} 3 (log p) p^-sigma, rigorous for sigma > 1, heuristic at 1."""
    sigma = np.asarray(sigma, dtype=float)
    logP = math.log(P)
    with np.errstate(divide="ignore", invalid="ignore"):
        d = sigma - 1.0
        geom = 1.0 / (1.0 - P ** (-sigma))
        if weight_log:
            rig = 3.0 * geom * P ** (-d) * (logP / d + 1.0 / d**2)
        else:
            rig = 3.0 * geom * P ** (-d) / d
    # on the 1-line: three standard deviations of a random-sign model for
    # sum_{p > P} lambda(p^2) (log p) p^{-1-it}
    heuristic = 3.0 * math.sqrt(logP / P) if weight_log else 3.0 / math.sqrt(P * logP)
    on_line = d <= 1e-12
    out = np.where(on_line, heuristic, rig)
    return out, bool(np.any(on_line))


def sym2_log_L(table: HeckeTable, s, policy: TruncationPolicy) -> TruncatedValue:
    """log L(sym^2, s) as the sum of per-prime logarithms over p <= P_max."""
    arr, scalar = _as_array(s)
    _check_sym2_domain(arr)
    flat = np.atleast_1d(arr).ravel()
    pd = prime_data(table, policy.prime_limit)
    out = np.zeros(flat.shape, dtype=complex)
    for sl in _chunks(flat.size, pd.p.size):
        x = np.exp(-np.outer(flat[sl], pd.logp))
        a2x = pd.alpha2 * x
        terms = -(np.log1p(-a2x) + np.log1p(-np.conj(pd.alpha2) * x) + np.log1p(-x))
        out[sl] = terms.sum(axis=1)
    if pd.has_M:
        out += -np.log1p(-np.exp(-(flat + 1) * math.log(pd.M)))
    tail, cond = _prime_tail_sigma(flat.real, policy.prime_limit, weight_log=False)
    if policy.tail_estimate_mode == "off":
        tail = np.zeros_like(tail)
    out = out.reshape(np.shape(arr)) if not scalar else complex(out[0])
    tail = tail.reshape(np.shape(arr)) if not scalar else float(tail[0])
    return TruncatedValue(out, tail, cond)


def sym2_L(table: HeckeTable, s, policy: TruncationPolicy) -> TruncatedValue:
    """Truncated Euler product for L(sym^2, s) with a tail estimate on the value."""
    lg = sym2_log_L(table, s, policy)
    val = np.exp(lg.value)
    tail = np.abs(val) * np.expm1(lg.tail_estimate)
    if np.ndim(val) == 0:
        return TruncatedValue(complex(val), float(tail), lg.conditional)
    return TruncatedValue(val, tail, lg.conditional)


def _power_tail_bound(sigma: float, K: int) -> float:
    """Bound for 3 sum_{n >= 2} log n sum_{l > K} n^{-sigma l} (independent of P_max)."""
    a = sigma * (K + 1)
    geom = 1.0 / (1.0 - 2.0 ** (-sigma))
    head = math.log(2) * 2.0 ** (-a)
    integral = 2.0 ** (1 - a) * (math.log(2) / (a - 1) + 1 / (a - 1) ** 2)
    return 3.0 * geom * (head + integral)


def sym2_log_deriv(table: HeckeTable, s, policy: TruncationPolicy) -> TruncatedValue:
    """Truncated L'/L(sym^2, s): prime sum to P_max and prime-power sum to K_max."""
    arr, scalar = _as_array(s)
    _check_sym2_domain(arr)
    flat = np.atleast_1d(arr).ravel()
    pd = prime_data(table, policy.prime_limit)
    K = policy.power_limit
    theta2 = np.angle(pd.alpha2)
    out = np.zeros(flat.shape, dtype=complex)
    for sl in _chunks(flat.size, pd.p.size):
        x = np.exp(-np.outer(flat[sl], pd.logp))
        xl = np.ones_like(x)
        acc = np.zeros_like(x)
        for ell in range(1, K + 1):
            xl = xl * x
            acc += (2.0 * np.cos(ell * theta2) + 1.0) * xl
        out[sl] = -(acc * pd.logp).sum(axis=1)
    if pd.has_M:
        lm = math.log(pd.M)
        y = np.exp(-(flat + 1) * lm)
        out += -lm * sum(y**ell for ell in range(1, K + 1))
    ptail, cond = _prime_tail_sigma(flat.real, policy.prime_limit, weight_log=True)
    ltail = np.array([_power_tail_bound(sig, K) for sig in flat.real])
    tail = ptail + ltail
    if policy.tail_estimate_mode == "off":
        tail = np.zeros_like(tail)
    if scalar:
        return TruncatedValue(complex(out[0]), float(tail[0]), cond)
    return TruncatedValue(out.reshape(arr.shape), tail.reshape(arr.shape), cond)


@njit(cache=True, fastmath=True)
def _pair_kernel(s, logp, c, weight, with_one):
    out = np.zeros(s.size, dtype=np.complex128)
    for i in range(s.size):
        sr = s[i].real
        si = s[i].imag
        acc_r = 0.0
        acc_i = 0.0
        for j in range(logp.size):
            mag = math.exp(-sr * logp[j])
            ph = si * logp[j]
            x = complex(mag * math.cos(ph), -mag * math.sin(ph))
            x2 = x * x
            # a x/(1-a x) + b x/(1-b x) = (c x - 2 x^2) / (1 - c x + x^2)
            v = (c[j] * x - 2 * x2) / (1 - c[j] * x + x2)
            if with_one:
                v += x / (1 - x)
            v *= weight[j]
            acc_r += v.real
            acc_i += v.imag
        out[i] = complex(acc_r, acc_i)
    return out


def weighted_pair_sum(s, logp: np.ndarray, c: np.ndarray, weight: np.ndarray, with_one: bool = False) -> np.ndarray:
    """sum_p weight_p sum_{l >= 1} (alpha_p^{2l} + beta_p^{2l} [+ 1]) p^{-l s} for an array of s.

    ``c`` holds alpha^2 + beta^2 = lambda(p)^2 - 2 for each prime.
    """
    flat = np.atleast_1d(np.asarray(s, dtype=complex)).ravel()
    out = _pair_kernel(
        flat,
        np.ascontiguousarray(logp, dtype=float),
        np.ascontiguousarray(c, dtype=float),
        np.ascontiguousarray(weight, dtype=float),
        bool(with_one),
    )
    return out.reshape(np.shape(s))


def sym2_log_deriv_full(pd: _PrimeData, s: np.ndarray) -> np.ndarray:
    """L'/L(sym^2, s) over the primes in ``pd`` with the prime-power sums taken to infinity.

    Each good prime contributes -log p (a x / (1 - a x) + x / (1 - x) + b x / (1 - b x))
    with a = alpha^2, b = beta^2, x = p^-s; the conductor contributes
    -log M y / (1 - y) with y = M^-(s+1).
    """
    flat = np.atleast_1d(np.asarray(s, dtype=complex)).ravel()
    out = -weighted_pair_sum(flat, pd.logp, pd.c, pd.logp, with_one=True)
    if pd.has_M:
        lm = math.log(pd.M)
        y = np.exp(-(flat + 1) * lm)
        out += -lm * y / (1 - y)
    return out.reshape(np.shape(s))


def zeta_log_deriv_euler(primes: np.ndarray, s) -> np.ndarray:
    """-sum_p log p * p^-s / (1 - p^-s): the Euler-product zeta'/zeta over the given primes."""
    flat = np.atleast_1d(np.asarray(s, dtype=complex)).ravel()
    logp = np.log(np.asarray(primes, dtype=float))
    out = np.zeros(flat.shape, dtype=complex)
    for sl in _chunks(flat.size, logp.size):
        x = np.exp(-np.outer(flat[sl], logp))
        out[sl] = -(logp * x / (1 - x)).sum(axis=1)
    return out.reshape(np.shape(s))


def m_series(s, M: int):
    """sum_{l >= 1} (M^l - 1) log M * M^{-(s+1) l} in closed geometric form."""
    s = np.asarray(s, dtype=complex)
    lm = math.log(M)
    u = np.exp(-s * lm)
    v = u / M
    out = lm * (u / (1 - u) - v / (1 - v))
    return complex(out) if out.ndim == 0 else out


def lambda_E_vonmangoldt(table: HeckeTable, n: int) -> float:
    """(alpha_p^{2l} + beta_p^{2l}) log p for n = p^l with p not dividing M, else 0."""
    n = int(n)
    if n < 1:
        raise DomainError("n must be positive")
    if n == 1:
        return 0.0
    fac = factorize(n)
    if len(fac) != 1:
        return 0.0
    (p, ell), = fac.items()
    if p == table.M:
        return 0.0
    s = power_sum_matrix(np.array([table.lambda_p(p)]), 2 * ell)[2 * ell, 0]
    return float(s * math.log(p))


@dataclass(frozen=True)
class IdentityResidual:
    lhs: complex
    rhs: complex
    residual: float
    tail_estimate: float


def dirichlet_identity_residual(table: HeckeTable, s: complex, policy: TruncationPolicy) -> IdentityResidual:
    """Compare sum_n Lambda_E(n) n^-s with zeta'/zeta - L'/L(sym^2) + m_series at one point.

    The left side sums explicit power sums alpha^{2l} + beta^{2l} over prime
    powers p^l with p <= P_max, l <= K_max.  On the right, zeta'/zeta is the
    Euler product over the same primes (prime-power sums closed), L'/L(sym^2)
    is the truncated series computed through the angle of alpha_p, and the
    conductor series is the closed geometric form.  Both sides share the
    prime truncation, so the residual measures the power truncation plus
    rounding.
    """
    s = complex(s)
    if s.real <= 1:
        raise DomainError("the identity is checked on Re(s) > 1")
    t = table.restrict(min(policy.prime_limit, table.limit))
    K = policy.power_limit
    good = t.primes != t.M
    p = t.primes[good].astype(float)
    logp = np.log(p)
    ps = power_sum_matrix(t.lam[good], 2 * K)
    x = np.exp(-s * logp)
    lhs = 0j
    xl = np.ones_like(x)
    for ell in range(1, K + 1):
        xl = xl * x
        lhs += complex(np.sum(ps[2 * ell] * logp * xl))
    zeta_part = complex(zeta_log_deriv_euler(t.primes, s))
    sym = sym2_log_deriv(table, s, TruncationPolicy(t.limit, K, policy.tail_estimate_mode))
    rhs = zeta_part - sym.value + m_series(s, t.M)
    tail = 2 * _power_tail_bound(s.real, K) + 1e-13 * (1 + abs(lhs))
    return IdentityResidual(lhs, rhs, abs(lhs - rhs), tail)
