"""One-level density from the explicit formula: direct prime sums and closed forms.

Notation: L = log(sqrt(M) X / (2 pi)), X* is the family size, and every
tau-integral is taken against the test function g.  The prime sums are
exact finite sums because g_hat vanishes outside [-sigma, sigma].
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.integrate import quad

from .arith import Family, kronecker_prime_vec
from .curve import HeckeTable, power_sum_matrix
from .errors import CoverageError, DomainError
from .special import (
    TruncationPolicy,
    digamma,
    m_series,
    prime_data,
    sym2_log_deriv_full,
    weighted_pair_sum,
    zeta_log_deriv,
)
from .testfn import TestFunction, integrate_real_line

EULER_GAMMA = 0.57721566490153286061

# Quadrature settings shared by every closed-form tau-integral.
QUAD_TAIL_EPS = 1e-9
QUAD_T_MAX = 16384.0


@dataclass(frozen=True)
class QuadSettings:
    tail_eps: float = QUAD_TAIL_EPS
    T_max: float = QUAD_T_MAX
    panel_width: float = 2.0


# The conductor-power integrands are cheap, so they are pushed to near rounding level.
M_QUAD = QuadSettings(tail_eps=1e-13, T_max=2.0**20, panel_width=4.0)


def _integrate(integrand, q: QuadSettings, tail_model: str = "inverse-square"):
    """Hermitian integral over the real line; returns (value, tail estimate)."""
    res = integrate_real_line(
        integrand,
        q.tail_eps,
        hermitian=True,
        T_max=q.T_max,
        panel_width=q.panel_width,
        strict=False,
        tail_model=tail_model,
    )
    return float(res.value.real), float(res.tail_estimate)


def coverage_bound(L: float, sigma: float) -> float:
    """Largest prime power p^k that can meet the support of g_hat(log p^k / (2L))."""
    return math.exp(2 * L * sigma)


def _require_coverage(table: HeckeTable, bound: float):
    need = int(math.floor(bound))
    if table.limit < need:
        raise CoverageError(need, table.limit)


# ----------------------------------------------------------------------------
# Gamma term
# ----------------------------------------------------------------------------


def gamma_integral_term(family: Family, f: TestFunction, q: QuadSettings = QuadSettings()) -> float:
    """(1/(2 L X*)) int g(t) sum_d [2 log(sqrt(M) d / 2 pi) + psi(1 + i pi t/L) + psi(1 - i pi t/L)] dt."""
    if family.cardinality == 0:
        raise DomainError("empty family")
    L = family.L
    mean_log = float(np.mean(family.log_conductors))

    def integrand(t):
        psi = digamma(1 + 1j * np.pi * t / L)
        return f.g(t).real * (2 * mean_log + 2 * psi.real) / (2 * L)

    # psi grows like log t, so the tail is fitted with a logarithmic envelope
    return _integrate(integrand, q, "log-inverse-square")[0]


def digamma_part_fourier(f: TestFunction, L: float) -> float:
    """int g(t) 2 Re psi(1 + i pi t / L) dt evaluated on the Fourier side.

    From psi(1+z) = -gamma + int_0^1 (1 - x^z)/(1 - x) dx the integral equals
    -2 gamma g_hat(0) + 4L int_0^inf (g_hat(0) - g_hat(u)) e^{-2Lu} / (1 - e^{-2Lu}) du.
    """
    g0 = float(f.g_hat(0.0))
    sig = f.sigma

    def kern(u):
        if u == 0:
            return 0.0
        x = 2 * L * u
        return (g0 - f.g_hat(u)) * 2 * L * math.exp(-x) / -math.expm1(-x)

    # the kernel lives on the scale u ~ 1/L
    cut = min(sig, 40.0 / L)
    inner, _ = quad(kern, 0.0, cut, epsabs=1e-14, epsrel=1e-13, limit=200)
    if cut < sig:
        inner += quad(kern, cut, sig, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    tail = -g0 * math.log(-math.expm1(-2 * L * sig))
    return -2 * EULER_GAMMA * g0 + 2 * (inner + tail)


def gamma_term_fourier(family: Family, f: TestFunction) -> float:
    """Independent evaluation of :func:`gamma_integral_term` without tau-quadrature."""
    L = family.L
    mean_log = float(np.mean(family.log_conductors))
    return (2 * mean_log * f.g_hat(0.0) + digamma_part_fourier(f, L)) / (2 * L)


# ----------------------------------------------------------------------------
# direct prime side
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class PrimeSide:
    """Per-category pieces of the explicit-formula prime sum S."""

    even_M: float  # S_even,1,1
    even_good: float  # S_even,1,2 (direct Dirichlet form)
    even_divisible: float  # S_even,2 (direct)
    odd_M: float  # S_odd conductor part (direct)
    odd_good: float  # S_odd remainder
    n_terms: int

    @property
    def total(self) -> float:
        return self.even_M + self.even_good + self.even_divisible + self.odd_M + self.odd_good


def _prime_powers(table: HeckeTable, bound: float, kmax: int | None = None):
    """Primes p <= bound with power sums alpha^k + beta^k for k <= kmax (default: p^k <= bound)."""
    t = table.restrict(int(math.floor(bound)))
    primes = t.primes
    if primes.size == 0:
        return primes, np.zeros((1, 0))
    if kmax is None:
        kmax = max(1, int(math.floor(math.log(bound) / math.log(2))))
    ps = power_sum_matrix(t.lam, kmax)
    m = primes == table.M
    if np.any(m):
        lm = t.lam[m][0]
        ps[:, m] = (lm ** np.arange(kmax + 1))[:, None]
    return primes, ps


def prime_side(family: Family, table: HeckeTable, f: TestFunction) -> PrimeSide:
    """Evaluate the explicit-formula prime sum and split it by category."""
    if family.cardinality == 0:
        raise DomainError("empty family")
    L = family.L
    bound = coverage_bound(L, f.sigma)
    _require_coverage(table, bound)
    Xs = family.cardinality
    ds = family.discriminants
    primes, ps = _prime_powers(table, bound)
    acc = dict(even_M=0.0, even_good=0.0, even_divisible=0.0, odd_M=0.0, odd_good=0.0)
    n_terms = 0
    for i, p in enumerate(primes.tolist()):
        chi = kronecker_prime_vec(ds, p)
        chi_sum = int(chi.sum(dtype=np.int64))
        n_div = int(np.count_nonzero(chi == 0))
        logp = math.log(p)
        k = 1
        while k * logp < 2 * L * f.sigma:
            weight = ps[k, i] * logp * p ** (-k / 2) * f.g_hat(k * logp / (2 * L)) / L
            n_terms += 1
            if k % 2 == 0:
                if p == table.M:
                    acc["even_M"] -= weight
                else:
                    acc["even_good"] -= weight
                    acc["even_divisible"] += weight * n_div / Xs
            else:
                key = "odd_M" if p == table.M else "odd_good"
                acc[key] -= weight * chi_sum / Xs
            k += 1
    return PrimeSide(n_terms=n_terms, **acc)


def prime_sum_direct(family: Family, table: HeckeTable, f: TestFunction) -> float:
    """S = -(1/(L X*)) sum_d sum_{p,k} (alpha^k + beta^k) chi_d(p)^k log p p^{-k/2} g_hat(k log p / 2L)."""
    return prime_side(family, table, f).total


# ----------------------------------------------------------------------------
# closed forms
# ----------------------------------------------------------------------------


def s_even_1_1(table: HeckeTable, f: TestFunction, L: float) -> float:
    """-(1/L) sum_k log M M^{-2k} g_hat(k log M / L), stopped once M^{-2k} < 1e-16."""
    M = table.M
    lm = math.log(M)
    total = 0.0
    k = 1
    while M ** (-2.0 * k) >= 1e-16:
        total -= lm * M ** (-2.0 * k) * f.g_hat(k * lm / L) / L
        k += 1
    return total


def s_even_1_1_integral(table: HeckeTable, f: TestFunction, L: float, q: QuadSettings = M_QUAD) -> float:
    """Integral form -(1/L) sum_k int g(t) log M M^{-2k(1 + pi i t/L)} dt."""
    lm = math.log(table.M)

    def integrand(t):
        y = np.exp(-2 * lm * (1 + 1j * np.pi * t / L))
        return -f.g(t) * lm * (y / (1 - y)) / L

    return _integrate(integrand, q)[0]


@dataclass(frozen=True)
class TwoForms:
    """A quantity evaluated in closed (integral) form and directly."""

    closed: float
    direct: float
    quad_tail: float
    envelope: float = math.nan

    @property
    def difference(self) -> float:
        return self.closed - self.direct


def _direct_even_good(table: HeckeTable, f: TestFunction, L: float) -> float:
    bound = math.exp(L * f.sigma)
    if bound < 2:
        return 0.0
    primes, ps = _prime_powers(table, bound, 2 * int(math.floor(math.log2(bound))))
    total = 0.0
    for i, p in enumerate(primes.tolist()):
        if p == table.M:
            continue
        logp = math.log(p)
        j = 1
        while j * logp < L * f.sigma:
            total -= ps[2 * j, i] * logp * p ** (-j) * f.g_hat(j * logp / L) / L
            j += 1
    return total


def s_even_1_2_integrand(table: HeckeTable, f: TestFunction, L: float, policy: TruncationPolicy):
    """t -> g(t) [-zeta'/zeta + L'/L(sym^2) - m_series](1 + 2 pi i t / L) / L."""
    pd = prime_data(table, policy.prime_limit)
    M = table.M

    def integrand(t):
        s = 1 + 2j * np.pi * t / L
        h = -zeta_log_deriv(s) + sym2_log_deriv_full(pd, s) - m_series(s, M)
        return f.g(t) * h / L

    return integrand


def s_even_1_2(
    table: HeckeTable, f: TestFunction, L: float, policy: TruncationPolicy, q: QuadSettings = QuadSettings()
) -> TwoForms:
    """S_even,1,2 as g(0)/2 plus a tau-integral, and as -(1/L) sum_n Lambda_E(n)/n g_hat(log n / L)."""
    need = math.exp(L * f.sigma)
    if policy.prime_limit < need or table.limit < math.floor(need):
        raise CoverageError(int(math.floor(need)), min(policy.prime_limit, table.limit))
    # zeta'/zeta and L'/L vary on unit tau-scales; order-32 panels of width 4 resolve them
    integral, tail = _integrate(s_even_1_2_integrand(table, f, L, policy), replace(q, panel_width=max(q.panel_width, 4.0)))
    closed = f.g0 / 2 + integral
    return TwoForms(closed, _direct_even_good(table, f, L), tail)


def s_even_2_integrand(table: HeckeTable, f: TestFunction, L: float, policy: TruncationPolicy):
    """t -> g(t) (1/L) sum_{p not M} log p/(p+1) sum_k alpha^{2k+2}+beta^{2k+2} p^{-(k+1)s}."""
    pd = prime_data(table, policy.prime_limit)
    w = pd.logp / (pd.p + 1)

    def integrand(t):
        s = 1 + 2j * np.pi * np.asarray(t, dtype=float) / L
        return f.g(t) * weighted_pair_sum(s, pd.logp, pd.c, w) / L

    return integrand


def s_even_2(
    family: Family, table: HeckeTable, f: TestFunction, policy: TruncationPolicy, q: QuadSettings = QuadSettings()
) -> TwoForms:
    """S_even,2: closed tau-integral versus the direct sum over d divisible by p."""
    L = family.L
    integral, tail = _integrate(s_even_2_integrand(table, f, L, policy), q)
    direct = prime_side(family, table, f).even_divisible
    X = family.X
    env = math.sqrt(X) * math.log(max(math.log(X), math.e)) / max(family.cardinality, 1)
    return TwoForms(integral, direct, tail, env)


def s_odd_M_integral(M: int, f: TestFunction, L: float, q: QuadSettings = M_QUAD) -> float:
    """-(1/L) int g(t) sum_{k>=0} log M M^{-((2k+1)/2)(2 + 2 pi i t/L)} dt."""
    lm = math.log(M)

    def integrand(t):
        y = np.exp(-lm * (1 + 1j * np.pi * t / L))
        return -f.g(t) * lm * (y / (1 - y * y)) / L

    return _integrate(integrand, q)[0]


def merged_m_term(M: int, f: TestFunction, L: float, q: QuadSettings = M_QUAD) -> float:
    """-(1/L) sum_{k>=0} int g(t) log M M^{-(k+1)(1 + pi i t/L)} dt."""
    lm = math.log(M)

    def integrand(t):
        y = np.exp(-lm * (1 + 1j * np.pi * t / L))
        return -f.g(t) * lm * (y / (1 - y)) / L

    return _integrate(integrand, q)[0]


@dataclass(frozen=True)
class OddParts:
    M_part: float
    remainder: float
    M_part_direct: float
    envelope: float


def s_odd_envelope(X: float, sigma: float) -> float:
    return X ** (-(1 - sigma) / 2) * math.log(X) ** 6


def s_odd(family: Family, table: HeckeTable, f: TestFunction, q: QuadSettings = QuadSettings()) -> OddParts:
    """(conductor part by quadrature, direct remainder over p not dividing M)."""
    side = prime_side(family, table, f)
    mpart = s_odd_M_integral(table.M, f, family.L)
    return OddParts(mpart, side.odd_good, side.odd_M, s_odd_envelope(family.X, f.sigma))


# ----------------------------------------------------------------------------
# assembly
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class DensityBreakdown:
    gamma_term: float
    s_even_1_1: float
    s_even_1_2: float
    s_even_2: float
    s_odd_M: float
    s_odd_remainder: float
    total_closed: float
    total_direct: float
    envelope: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def discrepancy(self) -> float:
        return self.total_direct - self.total_closed

    def as_dict(self) -> dict:
        return asdict(self)


def nt_density_total(
    family: Family,
    table: HeckeTable,
    f: TestFunction,
    policy: TruncationPolicy | None = None,
    q: QuadSettings = QuadSettings(),
) -> DensityBreakdown:
    """Assemble the closed-form density and compare it with gamma term + direct prime sum."""
    L = family.L
    if policy is None:
        policy = TruncationPolicy(prime_limit=max(table.limit, 2))
    side = prime_side(family, table, f)
    gamma = gamma_integral_term(family, f, q)
    e11 = s_even_1_1(table, f, L)
    e12 = s_even_1_2(table, f, L, policy, q)
    e2 = s_even_2(family, table, f, policy, q)
    odd_m = s_odd_M_integral(table.M, f, L)
    total_closed = gamma + e11 + e12.closed + e2.closed + odd_m
    total_direct = gamma + side.total
    diagnostics = {
        "L": L,
        "X_star": family.cardinality,
        "sigma": f.sigma,
        "s_even_1_2_direct": e12.direct,
        "s_even_2_direct": e2.direct,
        "s_odd_M_direct": side.odd_M,
        "prime_terms": side.n_terms,
        "quadrature_tail": e12.quad_tail + e2.quad_tail,
        "s_even_2_envelope": e2.envelope,
    }
    return DensityBreakdown(
        gamma_term=gamma,
        s_even_1_1=e11,
        s_even_1_2=e12.closed,
        s_even_2=e2.closed,
        s_odd_M=odd_m,
        s_odd_remainder=side.odd_good,
        total_closed=total_closed,
        total_direct=total_direct,
        envelope=s_odd_envelope(family.X, f.sigma),
        diagnostics=diagnostics,
    )
