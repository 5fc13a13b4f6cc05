import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import digamma as sp_digamma

from twistdensity.arith import Family, FamilySpec, enumerate_family
from twistdensity.curve import build_hecke_table
from twistdensity.density_nt import (
    QuadSettings,
    coverage_bound,
    digamma_part_fourier,
    gamma_integral_term,
    gamma_term_fourier,
    merged_m_term,
    prime_side,
    prime_sum_direct,
    s_even_1_1,
    s_even_1_1_integral,
    s_even_1_2,
    s_even_1_2_integrand,
    s_even_2,
    s_odd,
    s_odd_M_integral,
    nt_density_total,
)
from twistdensity.errors import CoverageError, DomainError
from twistdensity.special import TruncationPolicy, m_series
from twistdensity.testfn import fejer_pair

FAST = QuadSettings(tail_eps=1e-7)


def single(d, X=33, M=11):
    return Family(FamilySpec(X, M), np.array([d], dtype=np.int64))


def gamma_term_oracle(family, sigma):
    """QUADPACK on the Fejer form g = (1 - cos 2 pi sigma t) / (2 pi^2 sigma t^2).

    The non-oscillatory and the cosine-weighted parts of [1, inf) go to
    separate QUADPACK rules; [0, 1] uses g directly.
    """
    L = family.L
    mean_log = float(np.mean(family.log_conductors))
    f = fejer_pair(sigma)

    def h(t):
        return (2 * mean_log + 2 * sp_digamma(1 + 1j * math.pi * t / L).real) / (2 * L)

    head, _ = quad(lambda t: f.g(t).real * h(t), 0, 1, epsabs=1e-14)
    env = lambda t: h(t) / (2 * math.pi**2 * sigma * t * t)  # noqa: E731
    smooth, _ = quad(env, 1, np.inf, epsabs=1e-14, limit=400)
    osc, _ = quad(env, 1, np.inf, weight="cos", wvar=2 * math.pi * sigma, limlst=400)
    return 2 * (head + smooth - osc)


# --- Gamma term --------------------------------------------------------------


def test_gamma_term_quadpack_oracle(family_1e4, fejer):
    val = gamma_integral_term(family_1e4, fejer)
    assert abs(val - gamma_term_oracle(family_1e4, 0.5)) < 1e-6
    assert abs(val - gamma_term_fourier(family_1e4, fejer)) < 1e-9


def test_gamma_term_log_part_single_discriminant(fejer):
    a, b = single(5), single(29)
    L = a.L
    diff = gamma_integral_term(b, fejer) - gamma_integral_term(a, fejer)
    assert diff == pytest.approx(math.log(29 / 5) * fejer.g_hat(0.0) / L, abs=1e-10)
    log_part = (0.5 * math.log(11) + math.log(5) - math.log(2 * math.pi)) * fejer.g_hat(0.0) / L
    psi_part = digamma_part_fourier(fejer, L) / (2 * L)
    assert gamma_integral_term(a, fejer) == pytest.approx(log_part + psi_part, abs=1e-9)


def test_digamma_part_vanishes_for_large_L(fejer):
    vals = [abs(digamma_part_fourier(fejer, L) / (2 * L)) for L in (10, 100, 1000, 10_000)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    # psi(1) g_hat(0) / L is the limiting size
    assert vals[-1] == pytest.approx(0.5772156649 / 10_000, rel=0.05)


def test_gamma_term_empty_family(fejer):
    with pytest.raises(DomainError):
        gamma_integral_term(enumerate_family(FamilySpec(4, 11)), fejer)


# --- direct prime side -------------------------------------------------------


def test_prime_sum_empty_range(small_table):
    fam = single(5)
    f = fejer_pair(0.1)
    assert coverage_bound(fam.L, 0.1) < 2
    assert prime_sum_direct(fam, small_table, f) == 0


def test_prime_sum_hand_expansion(small_table):
    fam = single(5)
    f = fejer_pair(0.25)
    L = fam.L
    assert 4 < coverage_bound(L, 0.25) < 5
    chi = {2: -1, 3: -1}  # 5 = 5 mod 8, 5 = 2 mod 3
    lam = {p: small_table.lambda_p(p) for p in (2, 3)}
    power = {(2, 1): lam[2], (2, 2): lam[2] ** 2 - 2, (3, 1): lam[3]}
    expected = 0.0
    for (p, k), s in power.items():
        expected -= s * chi[p] ** k * math.log(p) * p ** (-k / 2) * f.g_hat(k * math.log(p) / (2 * L)) / L
    assert prime_sum_direct(fam, small_table, f) == pytest.approx(expected, abs=1e-15)


def test_even_terms_vanish_for_divisible_primes(small_table):
    fam = single(12)
    f = fejer_pair(0.25)
    side = prime_side(fam, small_table, f)
    # 2 and 3 both divide 12, so chi_12(p)^2 = 0 for every contributing prime
    assert side.even_good + side.even_divisible == pytest.approx(0.0, abs=1e-16)
    assert side.odd_good == 0


def test_coverage_error(curve, family_1e4, fejer):
    tiny = build_hecke_table(curve, 100)
    with pytest.raises(CoverageError) as info:
        prime_sum_direct(family_1e4, tiny, fejer)
    assert info.value.needed == int(coverage_bound(family_1e4.L, 0.5))


# --- S_even,1,1 ----------------------------------------------------------------


def test_s_even_1_1_terms(small_table, fejer):
    L, lm = 10.0, math.log(11)
    k1 = -lm / L * 11**-2 * fejer.g_hat(lm / L)
    k2 = -lm / L * 11**-4 * fejer.g_hat(2 * lm / L)
    assert fejer.g_hat(3 * lm / L) == 0
    assert s_even_1_1(small_table, fejer, L) == pytest.approx(k1 + k2, abs=1e-17)
    # g_hat(2 log 11 / 10) / g_hat(log 11 / 10) / 121 is about 6.5e-4
    assert 6e-4 < abs(k2 / k1) < 7e-4


def test_s_even_1_1_support_cutoff(small_table):
    L = 10.0
    f = fejer_pair(0.9 * math.log(11) / L)
    assert s_even_1_1(small_table, f, L) == 0


def test_s_even_1_1_integral_form(small_table, fejer):
    for L in (6.0, 10.0):
        assert abs(s_even_1_1(small_table, fejer, L) - s_even_1_1_integral(small_table, fejer, L)) < 1e-10


# --- S_even,1,2 ----------------------------------------------------------------


def test_s_even_1_2_both_forms(small_table, family_1e4):
    f = fejer_pair(0.3)
    pol = TruncationPolicy(10_000)
    res = s_even_1_2(small_table, f, family_1e4.L, pol, FAST)
    assert abs(res.difference) < 1e-6


def test_s_even_1_2_empty_support_direct_is_zero(small_table):
    L = 5.0
    f = fejer_pair(0.1)  # exp(L sigma) < 2
    res = s_even_1_2(small_table, f, L, TruncationPolicy(10_000), FAST)
    assert res.direct == 0
    assert abs(res.closed) < 1e-6


def test_s_even_1_2_needs_coverage(small_table, fejer):
    with pytest.raises(CoverageError):
        s_even_1_2(small_table, fejer, 30.0, TruncationPolicy(10_000))


def test_m_series_at_zero_height():
    direct = math.fsum((11**l - 1) * math.log(11) * 11 ** (-2 * l) for l in range(1, 80))
    assert abs(m_series(1.0, 11) - direct) < 1e-12


def test_s_even_1_2_integrand_hermitian(small_table, family_1e4, fejer):
    h = s_even_1_2_integrand(small_table, fejer, family_1e4.L, TruncationPolicy(10_000))
    t = np.array([0.3, 2.0, 17.0])
    assert np.allclose(h(-t), np.conj(h(t)), rtol=1e-12, atol=1e-15)


# --- S_even,2 ---------------------------------------------------------------------


def test_s_even_2_no_divisible_d(small_table):
    fam = single(5)
    res = s_even_2(fam, small_table, fejer_pair(0.25), TruncationPolicy(1000), FAST)
    assert res.direct == 0


def test_s_even_2_direct_small_primes(small_table, family_1e4):
    L = family_1e4.L
    sigma = 2.5 / (2 * L)  # reaches p^2 for p in {2, 3} only
    f = fejer_pair(sigma)
    ds = family_1e4.discriminants
    expected = 0.0
    for p in (2, 3):
        lam = small_table.lambda_p(p)
        count = int(np.count_nonzero(ds % p == 0))
        expected += (lam**2 - 2) * math.log(p) / p * f.g_hat(math.log(p) / L) * count / (L * family_1e4.cardinality)
    res = s_even_2(family_1e4, small_table, f, TruncationPolicy(1000), FAST)
    assert res.direct == pytest.approx(expected, abs=1e-15)


def test_s_even_2_within_envelope(small_table, family_1e4, fejer):
    res = s_even_2(family_1e4, small_table, fejer, TruncationPolicy(10_000), FAST)
    assert abs(res.difference) <= res.envelope


# --- S_odd ----------------------------------------------------------------------


def test_s_odd_conductor_part_two_forms(small_table, family_1e4, fejer):
    parts = s_odd(family_1e4, small_table, fejer)
    # chi_d(M) = 1 on the family, so the direct conductor sum is the Fourier form of the integral
    assert abs(parts.M_part - parts.M_part_direct) < 1e-12


def test_s_odd_conductor_series_decay(fejer):
    L, lm = 8.0, math.log(11)
    t0 = lm * 11**-1 * fejer.g_hat(lm / (2 * L))
    t1 = lm * 11**-3 * fejer.g_hat(3 * lm / (2 * L))
    assert 0 < t1 / t0 <= 11**-2


def test_s_odd_remainder_power_savings(table, fejer):
    rem = []
    for X in (10**3, 10**4, 10**5):
        fam = enumerate_family(FamilySpec(X, 11))
        parts = s_odd(fam, table, fejer)
        rem.append(abs(parts.remainder))
        assert abs(parts.remainder) <= X**-0.25 * math.log(X) ** 6
    assert rem[0] > rem[1] > rem[2]


def test_merged_conductor_identity(small_table, fejer):
    for L in (5.5, 8.57, 10.0):
        lhs = s_even_1_1(small_table, fejer, L) + s_odd_M_integral(11, fejer, L)
        assert abs(lhs - merged_m_term(11, fejer, L)) < 1e-10


# --- assembly ------------------------------------------------------------------------


@pytest.fixture(scope="module")
def breakdown_1e3(small_table, family_1e3, fejer):
    return nt_density_total(family_1e3, small_table, fejer, TruncationPolicy(10_000), FAST)


def test_breakdown_structure(breakdown_1e3):
    b = breakdown_1e3
    parts = b.gamma_term + b.s_even_1_1 + b.s_even_1_2 + b.s_even_2 + b.s_odd_M
    assert b.total_closed == pytest.approx(parts, abs=1e-15)
    assert b.discrepancy == b.total_direct - b.total_closed
    d = b.as_dict()
    for key in ("gamma_term", "s_even_1_1", "s_even_1_2", "s_even_2", "s_odd_M", "s_odd_remainder", "total_closed", "total_direct"):
        assert isinstance(d[key], float)


def test_breakdown_frozen_values(breakdown_1e3):
    # computed once with the full pipeline at X = 10^3, sigma = 1/2 and frozen;
    # the tolerances follow the tail budget of FAST
    assert breakdown_1e3.total_direct == pytest.approx(0.9226696195286109, abs=1e-7)
    assert breakdown_1e3.total_closed == pytest.approx(0.9104015703310634, abs=1e-6)


def test_breakdown_within_envelope(breakdown_1e3):
    assert abs(breakdown_1e3.discrepancy) <= breakdown_1e3.envelope
