"""The Ratios Conjecture side of the one-level density.

The Euler product A_E(alpha, gamma) is evaluated prime by prime in its
multiplied-out form: for good p the factor is

    (1 - w) Q(u) / ((1 - v) Q(v)) * V_p

with u = p^-(1+2 alpha), v = p^-(1+alpha+gamma), w = p^-(1+2 gamma),
Q(y) = 1 - lambda(p^2) y + lambda(p^2) y^2 - y^3 and V_p the averaged local
factor.  The m-sums inside V_p are taken in closed form through the generating
function sum_m lambda(p^m) t^m = 1/(1 - lambda t + t^2).  Every factor is
1 + O(p^-2), and exactly 1 on the diagonal alpha = gamma.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .arith import Family
from .curve import HeckeTable
from .density_nt import (
    DensityBreakdown,
    M_QUAD,
    QuadSettings,
    _integrate,
    merged_m_term,
    nt_density_total,
)
from .errors import DomainError, PoleError
from .special import (
    TruncatedValue,
    TruncationPolicy,
    gamma_ratio_unimodular,
    m_series,
    sym2_log_deriv,
    sym2_log_L,
    weighted_pair_sum,
    zeta,
    zeta_log_deriv,
    zeta_log_deriv_euler,
    zeta_regular,
)
from .testfn import TestFunction, integrate_real_line, sine_kernel_integral

# Height cap for the oscillatory A_E integral.
OSC_T_MAX = 200.0
OSC_TAIL_EPS = 1e-8


@dataclass(frozen=True)
class ShiftPair:
    alpha: complex
    gamma: complex

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "gamma", complex(self.gamma))
        if abs(self.alpha.real) >= 0.25 or abs(self.gamma.real) >= 0.25:
            raise DomainError("shifts must satisfy |Re(alpha)|, |Re(gamma)| < 1/4")

    @property
    def diagonal(self) -> bool:
        return self.alpha == self.gamma


# ----------------------------------------------------------------------------
# per-prime factors
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class _Primes:
    p: np.ndarray  # good primes, float
    logp: np.ndarray
    lam2: np.ndarray  # lambda(p)^2
    M: int
    has_M: bool
    limit: int


def _primes(table: HeckeTable, limit: int) -> _Primes:
    t = table.restrict(min(int(limit), table.limit))
    good = t.primes != t.M
    p = t.primes[good].astype(float)
    return _Primes(p, np.log(p), t.lam[good] ** 2, t.M, bool(np.any(~good)), int(min(limit, table.limit)))


@njit(cache=True)
def _good_factor(p, logp, lam2, a, g):
    u = np.exp(-(1 + 2 * a) * logp)
    v = np.exp(-(1 + a + g) * logp)
    w = np.exp(-(1 + 2 * g) * logp)
    l2 = lam2 - 1.0  # lambda(p^2)
    qu = 1 - l2 * u + l2 * u * u - u * u * u
    qv = 1 - l2 * v + l2 * v * v - v * v * v
    d = (1 + u) * (1 + u) - lam2 * u
    even = (1 + u) / d  # sum_m lambda(p^2m) u^m
    odd = lam2 / d  # lambda(p) sum_m lambda(p^(2m+1)) u^m
    vp = 1 + p / (p + 1) * (even - 1 - v * odd + w * even)
    return (1 - w) * qu / ((1 - v) * qv) * vp


@njit(cache=True)
def _log_product(p, logp, lam2, alphas, gammas):
    """sum_p log(factor_p) for each shift pair, summed in ascending prime order."""
    out = np.zeros(alphas.size, dtype=np.complex128)
    for i in range(alphas.size):
        acc = 0j
        comp = 0j  # Kahan compensation
        for j in range(p.size):
            term = np.log(_good_factor(p[j], logp[j], lam2[j], alphas[i], gammas[i]))
            y = term - comp
            t = acc + y
            comp = (t - acc) - y
            acc = t
        out[i] = acc
    return out


def _bad_factor(M: int, a, g):
    lm = math.log(M)

    def e(z):
        return np.exp(-z * lm)

    return (1 - e(1 + 2 * g)) * (1 - e(2 + 2 * a)) / ((1 - e(1 + a + g)) * (1 - e(2 + a + g))) * (
        (1 - e(1 + g)) / (1 - e(1 + a))
    )


def ae_prime_factors(table: HeckeTable, shift: ShiftPair, limit: int) -> tuple[np.ndarray, np.ndarray]:
    """(primes, local factors) of A_E for every tabulated prime p <= limit, M included."""
    pr = _primes(table, limit)
    a, g = shift.alpha, shift.gamma
    fac = np.array([_good_factor(p, lp, l2, a, g) for p, lp, l2 in zip(pr.p, pr.logp, pr.lam2)], dtype=complex)
    primes = pr.p.astype(np.int64)
    if pr.has_M:
        k = int(np.searchsorted(primes, pr.M))
        primes = np.insert(primes, k, pr.M)
        fac = np.insert(fac, k, complex(_bad_factor(pr.M, a, g)))
    return primes, fac


def _shift_margin(a: np.ndarray, g: np.ndarray) -> float:
    """delta with every factor deviation O(p^(-2 + 2 delta))."""
    return float(max(0.0, -np.min(a.real), -np.min(g.real), -np.min((a + g).real) / 2))


def _log_ae(pr: _Primes, alphas: np.ndarray, gammas: np.ndarray):
    alphas = np.atleast_1d(np.asarray(alphas, dtype=complex))
    gammas = np.atleast_1d(np.asarray(gammas, dtype=complex))
    out = _log_product(pr.p, pr.logp, pr.lam2, alphas, gammas)
    if pr.has_M:
        out = out + np.log(_bad_factor(pr.M, alphas, gammas))
    return out


def _ae_tail(pr: _Primes, alphas, gammas) -> float:
    """Tail from the deviations on the last dyadic block, extrapolated with the p^-2 law."""
    if pr.p.size < 4:
        return math.inf
    delta = _shift_margin(np.atleast_1d(alphas), np.atleast_1d(gammas))
    P = pr.limit
    blk = pr.p > P / 2
    if not np.any(blk):
        blk = slice(-1, None)
    expo = 2.0 - 2.0 * delta
    worst = 0.0
    for a, g in zip(np.atleast_1d(alphas)[:16], np.atleast_1d(gammas)[:16]):
        dev = np.abs(
            np.log([_good_factor(p, lp, l2, complex(a), complex(g)) for p, lp, l2 in zip(pr.p[blk], pr.logp[blk], pr.lam2[blk])])
        )
        worst = max(worst, float(np.max(dev * pr.p[blk] ** expo)))
    # sum_{p > P} p^-expo <= P^(1 - expo) / ((expo - 1) log P)
    return 2.0 * worst * P ** (1 - expo) / ((expo - 1) * math.log(P))


def a_e(table: HeckeTable, shift: ShiftPair, policy: TruncationPolicy) -> TruncatedValue:
    """Truncated Euler product A_E(alpha, gamma) over p <= P_max with a tail estimate."""
    pr = _primes(table, policy.prime_limit)
    lg = _log_ae(pr, np.array([shift.alpha]), np.array([shift.gamma]))[0]
    val = complex(np.exp(lg))
    tail = 0.0 if policy.tail_estimate_mode == "off" else _ae_tail(pr, shift.alpha, shift.gamma) * abs(val)
    return TruncatedValue(val, tail)


def y_e(table: HeckeTable, shift: ShiftPair, policy: TruncationPolicy) -> TruncatedValue:
    """Y_E = zeta(1+2g) L(sym^2, 1+2a) / (zeta(1+a+g) L(sym^2, 1+a+g)); needs Re shifts >= 0."""
    a, g = shift.alpha, shift.gamma
    if min(a.real, g.real) < 0:
        raise DomainError("Y_E is evaluated from Euler products and needs Re(alpha), Re(gamma) >= 0")
    if a + g == 0:
        raise PoleError("zeta(1 + alpha + gamma) has a pole at alpha + gamma = 0")
    num = sym2_log_L(table, 1 + 2 * a, policy)
    den = sym2_log_L(table, 1 + a + g, policy)
    val = zeta(1 + 2 * g) / zeta(1 + a + g) * np.exp(num.value - den.value)
    tail = abs(val) * math.expm1(num.tail_estimate + den.tail_estimate) if not shift.diagonal else 0.0
    return TruncatedValue(complex(val), float(tail), num.conditional or den.conditional)


# ----------------------------------------------------------------------------
# A_E^1 and the B(r, r) collapse
# ----------------------------------------------------------------------------


def _ae1_good_sum(pr: _Primes, r: np.ndarray) -> np.ndarray:
    """sum_{p not M} log p/(p+1) sum_m (alpha^{2m+2} + beta^{2m+2}) p^{-(m+1)(1+2r)}."""
    r = np.atleast_1d(np.asarray(r, dtype=complex))
    return weighted_pair_sum(1 + 2 * r, pr.logp, pr.lam2 - 2.0, pr.logp / (pr.p + 1))


def _ae1_conductor(M: int, r):
    """-log M sum_m M^{-(m+1)(1+r)}."""
    lm = math.log(M)
    y = np.exp(-(1 + np.asarray(r, dtype=complex)) * lm)
    return -lm * y / (1 - y)


def _ae1_bad(M: int, r):
    return _ae1_conductor(M, r) - m_series(1 + 2 * np.asarray(r, dtype=complex), M)


@dataclass(frozen=True)
class AE1Parts:
    conductor: complex
    good_primes: complex
    m_series: complex

    @property
    def total(self) -> complex:
        return self.conductor + self.good_primes + self.m_series


def a_e1_parts(table: HeckeTable, r: complex, policy: TruncationPolicy) -> AE1Parts:
    """The three pieces of the A_E^1(r, r) closed form at a single point."""
    r = complex(r)
    pr = _primes(table, policy.prime_limit)
    return AE1Parts(
        complex(_ae1_conductor(table.M, r)),
        complex(_ae1_good_sum(pr, np.array([r]))[0]),
        -complex(m_series(1 + 2 * r, table.M)),
    )


def a_e1_closed(table: HeckeTable, r, policy: TruncationPolicy) -> TruncatedValue:
    """A_E^1(r, r): conductor geometric series, the good-prime sum and the M-series."""
    arr = np.asarray(r, dtype=complex)
    if np.any(arr.real <= -0.25):
        raise DomainError("A_E^1 closed form needs Re(r) > -1/4")
    pr = _primes(table, policy.prime_limit)
    val = _ae1_good_sum(pr, arr.ravel()) + _ae1_bad(table.M, arr.ravel())
    a = 1 + 2 * float(np.min(arr.real))
    # sum_{p > P} 3 log p p^-(1+a) with the prime number theorem
    tail = 3.0 * pr.limit ** (-a) / a if policy.tail_estimate_mode != "off" else 0.0
    if arr.ndim == 0:
        return TruncatedValue(complex(val[0]), tail)
    return TruncatedValue(val.reshape(arr.shape), tail)


def ae_finite_difference(table: HeckeTable, r: complex, h: float, policy: TruncationPolicy) -> complex:
    """(A_E(r+h, r) - A_E(r-h, r)) / 2h for the truncated product."""
    pr = _primes(table, policy.prime_limit)
    lg = _log_ae(pr, np.array([r + h, r - h]), np.array([r, r]))
    return complex((np.exp(lg[0]) - np.exp(lg[1])) / (2 * h))


@dataclass(frozen=True)
class CollapseReport:
    r: complex
    lhs: complex
    rhs: complex
    residual: float
    tail_estimate: float
    lhs_analytic_zeta: complex
    analytic_zeta_tail: float


def b_collapse_check(table: HeckeTable, r: complex, policy: TruncationPolicy) -> CollapseReport:
    """-L'/L(sym^2, 1+2r) + zeta'/zeta(1+2r) - sum_p log p sum_m (alpha^{2m+2} + beta^{2m+2}) p^{-(m+1)(1+2r)}.

    Compared against -sum_l (M^l - 1) log M M^{-(2r+2) l}.  zeta'/zeta uses the
    Euler product over the same primes so that both sides share the prime
    truncation; the variant with the analytic zeta'/zeta is reported too.
    """
    r = complex(r)
    if r.real <= 0:
        raise DomainError("the collapse is checked where the series converge, Re(r) > 0")
    s = 1 + 2 * r
    t = table.restrict(min(policy.prime_limit, table.limit))
    K = policy.power_limit
    sym = sym2_log_deriv(table, s, TruncationPolicy(t.limit, K, policy.tail_estimate_mode))
    zeta_trunc = complex(zeta_log_deriv_euler(t.primes, s))
    good = t.primes != t.M
    logp = np.log(t.primes[good].astype(float))
    lam = t.lam[good]
    x = np.exp(-s * logp)
    # power sums alpha^{2l} + beta^{2l} by the recurrence, l <= K
    prev, cur = 2.0 * np.ones_like(lam), lam.copy()
    third = 0j
    xl = np.ones_like(x)
    for k in range(2, 2 * K + 1):
        prev, cur = cur, lam * cur - prev
        if k % 2 == 0:
            xl = xl * x
            third += complex(np.sum(cur * logp * xl))
    lhs = -sym.value + zeta_trunc - third
    rhs = -m_series(s, t.M)
    lhs_full = -sym.value + complex(zeta_log_deriv(s)) - third
    # the prime tail enters only the analytic-zeta variant
    return CollapseReport(
        r,
        lhs,
        complex(rhs),
        abs(lhs - rhs),
        float(sym.tail_estimate) - _prime_tail_only(sym, s, t.limit),
        lhs_full,
        float(sym.tail_estimate),
    )


def _prime_tail_only(sym: TruncatedValue, s: complex, P: int) -> float:
    from .special import _prime_tail_sigma

    tail, _ = _prime_tail_sigma(np.array([s.real]), P, weight_log=True)
    return float(tail[0])


# ----------------------------------------------------------------------------
# K(tau)
# ----------------------------------------------------------------------------


def k_factor(table: HeckeTable, tau: float, L: float, policy: TruncationPolicy, T_max: float = OSC_T_MAX) -> TruncatedValue:
    """K(tau) = A_E(-i pi tau/L, i pi tau/L), an absolutely convergent product."""
    if abs(tau) > T_max:
        raise DomainError(f"|tau| = {abs(tau):g} exceeds the configured height {T_max:g}")
    y = math.pi * tau / L
    return a_e(table, ShiftPair(-1j * y, 1j * y), policy)


def k_factors(table: HeckeTable, taus, L: float, policy: TruncationPolicy) -> np.ndarray:
    """Vectorized K over an array of heights (no tail estimate)."""
    pr = _primes(table, policy.prime_limit)
    y = np.pi * np.atleast_1d(np.asarray(taus, dtype=float)) / L
    return np.exp(_log_ae(pr, -1j * y, 1j * y)).reshape(np.shape(taus))


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    block_edges: np.ndarray
    block_max: np.ndarray


def k_deviation_slope(table: HeckeTable, tau: float, L: float, limit: int, p_min: int = 30) -> DecayFit:
    """Fit log max|K_p - 1| against log p over dyadic blocks of primes."""
    y = math.pi * tau / L
    primes, fac = ae_prime_factors(table, ShiftPair(-1j * y, 1j * y), limit)
    keep = (primes >= p_min) & (primes != table.M)
    primes, dev = primes[keep].astype(float), np.abs(fac[keep] - 1)
    edges = p_min * 2.0 ** np.arange(0, int(math.log2(limit / p_min)) + 1)
    mids, maxes = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = (primes >= lo) & (primes < hi)
        if np.any(m):
            mids.append(math.sqrt(lo * hi))
            maxes.append(float(np.max(dev[m])))
    slope, intercept = np.polyfit(np.log(mids), np.log(maxes), 1)
    return DecayFit(float(slope), float(intercept), np.array(mids), np.array(maxes))


# ----------------------------------------------------------------------------
# the oscillatory A_E integral
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class OscillatoryResult:
    value: float
    error: float  # |value - g(0)/2|
    main: float  # sine-kernel part, equal to g(0)/2 when sigma < 1
    remainder: float
    quad_tail: float
    T: float
    conditional: bool


def _family_phase_sum(log_cond: np.ndarray, y: np.ndarray) -> np.ndarray:
    """sum_d exp(-2 i y log(sqrt(M) d / 2 pi)) for each y."""
    out = np.zeros(y.shape, dtype=complex)
    step = max(1, 4_000_000 // max(log_cond.size, 1))
    for a in range(0, y.size, step):
        out[a : a + step] = np.exp(-2j * np.outer(y[a : a + step], log_cond)).sum(axis=1)
    return out


def ae_oscillatory_integral(
    family: Family,
    table: HeckeTable,
    f: TestFunction,
    policy: TruncationPolicy,
    *,
    T_max: float = OSC_T_MAX,
    tail_eps: float = OSC_TAIL_EPS,
    family_sum: str = "exact",
    unit_factors: bool = False,
) -> OscillatoryResult:
    """-(1/(L X*)) int g sum_d (...)^{-2 pi i t/L} Gamma ratio zeta L(sym^2) ratio A_E dt.

    zeta(1 + 2 pi i t/L) = L/(2 pi i t) + regular part.  With the family sum
    written as X* e^{-2 pi i t} + (difference), the polar part against
    X* g e^{-2 pi i t} is the sine-kernel integral; everything else is smooth
    and integrated directly.  ``family_sum="closed"`` replaces the exact
    family sum by X* e^{-2 pi i t}/(1 - 2 pi i t/L), and ``unit_factors``
    sets the Gamma ratio, the symmetric-square ratio and K to 1.
    """
    if family.cardinality == 0:
        raise DomainError("empty family")
    if family_sum not in ("exact", "closed"):
        raise DomainError(f"unknown family_sum {family_sum!r}")
    L = family.L
    Xs = family.cardinality
    log_cond = family.log_conductors
    pr = _primes(table, policy.prime_limit)
    log_l1 = complex(sym2_log_L(table, 1.0, policy).value)

    def integrand(t):
        t = np.asarray(t, dtype=float)
        y = np.pi * t / L
        if family_sum == "exact":
            D = _family_phase_sum(log_cond, y)
        else:
            D = Xs * np.exp(-2j * np.pi * t) / (1 - 2j * y)
        G = f.g(t) * D
        if not unit_factors:
            G = G * gamma_ratio_unimodular(y)
            G = G * np.exp(sym2_log_L(table, 1 - 2j * y, policy).value - log_l1)
            G = G * np.exp(_log_ae(pr, -1j * y, 1j * y))
        polar = (G - Xs * f.g(t) * np.exp(-2j * np.pi * t)) / (2j * y)
        return polar + G * zeta_regular(1 + 2j * y)

    res = integrate_real_line(integrand, tail_eps, hermitian=True, T_max=T_max, strict=False)
    main = float(sine_kernel_integral(f, 1e-10).value.real)
    remainder = -float(res.value.real) / (L * Xs)
    value = main + remainder
    return OscillatoryResult(
        value=value,
        error=abs(value - f.g0 / 2),
        main=main,
        remainder=remainder,
        quad_tail=float(res.tail_estimate) / (L * Xs),
        T=float(res.T),
        conditional=not unit_factors,
    )


# ----------------------------------------------------------------------------
# assembly and comparison
# ----------------------------------------------------------------------------

SHARED_TERMS = ("gamma_term", "s_even_1_1", "zeta_sym2_integral", "s_odd_M", "s_even_2")


def _shared_from_nt(nt: DensityBreakdown, g0: float) -> dict:
    return {
        "gamma_term": nt.gamma_term,
        "s_even_1_1": nt.s_even_1_1,
        "zeta_sym2_integral": nt.s_even_1_2 - g0 / 2,
        "s_odd_M": nt.s_odd_M,
        "s_even_2": nt.s_even_2,
    }


@dataclass(frozen=True)
class RatiosBreakdown:
    shared_terms: float
    ae1_term: float
    ae_oscillatory: float
    total: float
    g0_half: float
    oscillatory_error: float
    terms: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def ae1_integral(table: HeckeTable, f: TestFunction, L: float, policy: TruncationPolicy, q: QuadSettings = QuadSettings()) -> float:
    """(1/L) int g(t) A_E^1(i pi t/L, i pi t/L) dt."""
    pr = _primes(table, policy.prime_limit)
    M = table.M

    def integrand(t):
        r = 1j * np.pi * np.asarray(t, dtype=float) / L
        return f.g(t) * (_ae1_good_sum(pr, r) + _ae1_bad(M, r)) / L

    return _integrate(integrand, q)[0]


def m_series_integral(M: int, f: TestFunction, L: float, q: QuadSettings = M_QUAD) -> float:
    """(1/L) int g(t) sum_l (M^l - 1) log M M^{-(2 + 2 pi i t/L) l} dt."""

    def integrand(t):
        return f.g(t) * m_series(1 + 2j * np.pi * np.asarray(t, dtype=float) / L, M) / L

    return _integrate(integrand, q)[0]


def ratios_density_total(
    family: Family,
    table: HeckeTable,
    f: TestFunction,
    policy: TruncationPolicy,
    q: QuadSettings = QuadSettings(),
    *,
    nt: DensityBreakdown | None = None,
    osc_T_max: float = OSC_T_MAX,
    with_ae1_check: bool = True,
) -> RatiosBreakdown:
    """Assemble the Ratios prediction; the shared terms come from the number-theory evaluators."""
    if nt is None:
        nt = nt_density_total(family, table, f, policy, q)
    L = family.L
    g0_half = f.g0 / 2
    terms = _shared_from_nt(nt, f.g0)
    shared = math.fsum(terms.values())
    osc = ae_oscillatory_integral(family, table, f, policy, T_max=osc_T_max)
    diagnostics = {
        "oscillatory_main": osc.main,
        "oscillatory_remainder": osc.remainder,
        "oscillatory_quad_tail": osc.quad_tail,
        "oscillatory_T": osc.T,
        "sym2_on_unit_line": "conditional (truncated Euler product, heuristic tail)",
        "prime_limit": policy.prime_limit,
    }
    ae1 = math.nan
    if with_ae1_check:
        ae1 = ae1_integral(table, f, L, policy, q)
        expected = merged_m_term(table.M, f, L) + nt.s_even_2 - m_series_integral(table.M, f, L)
        diagnostics["ae1_identity_residual"] = abs(ae1 - expected)
    return RatiosBreakdown(
        shared_terms=shared,
        ae1_term=ae1,
        ae_oscillatory=osc.value,
        total=shared + osc.value,
        g0_half=g0_half,
        oscillatory_error=osc.error,
        terms=terms,
        diagnostics=diagnostics,
    )


@dataclass(frozen=True)
class ComparisonReport:
    rows: list  # (term, nt_value, ratios_value, difference)
    nt_total: float
    ratios_total: float
    discrepancy: float
    predicted: float  # ae_oscillatory - g(0)/2
    cancellation_residual: float
    envelope: float  # X^{-(1 - sigma)/2}
    envelope_ratio: float

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["term", "nt_value", "ratios_value", "difference"])
            for row in self.rows:
                w.writerow([row[0], repr(row[1]), repr(row[2]), repr(row[3])])


def nt_vs_ratios(
    family: Family,
    table: HeckeTable,
    f: TestFunction,
    policy: TruncationPolicy,
    q: QuadSettings = QuadSettings(),
    *,
    osc_T_max: float = OSC_T_MAX,
    with_ae1_check: bool = False,
) -> tuple[ComparisonReport, DensityBreakdown, RatiosBreakdown]:
    """Side-by-side comparison of the number-theory and Ratios one-level densities."""
    if f.sigma >= 1:
        raise DomainError("the comparison needs supp(g_hat) inside (-1, 1)")
    nt = nt_density_total(family, table, f, policy, q)
    rat = ratios_density_total(family, table, f, policy, q, nt=nt, osc_T_max=osc_T_max, with_ae1_check=with_ae1_check)
    nt_terms = _shared_from_nt(nt, f.g0)
    rows = [(k, nt_terms[k], rat.terms[k], rat.terms[k] - nt_terms[k]) for k in SHARED_TERMS]
    rows.append(("g0_half", rat.g0_half, 0.0, -rat.g0_half))
    rows.append(("ae_oscillatory", 0.0, rat.ae_oscillatory, rat.ae_oscillatory))
    discrepancy = rat.total - nt.total_closed
    predicted = rat.ae_oscillatory - rat.g0_half
    env = family.X ** (-(1 - f.sigma) / 2)
    report = ComparisonReport(
        rows=rows,
        nt_total=nt.total_closed,
        ratios_total=rat.total,
        discrepancy=discrepancy,
        predicted=predicted,
        cancellation_residual=abs(discrepancy - predicted),
        envelope=env,
        envelope_ratio=abs(discrepancy) / env,
    )
    return report, nt, rat
