import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twistdensity.arith import (
    FamilySpec,
    count_divisible,
    enumerate_family,
    factorize,
    family_count_asymptotic,
    family_weighted_sum,
    fundamental_discriminants,
    is_fundamental_discriminant,
    is_squarefree,
    kronecker_symbol,
    kronecker_vec,
    moebius,
    nonsquare_mod_indicator,
    sieve_primes,
    square_mod_indicator,
    write_family_csv,
)
from twistdensity.errors import CapacityError, DomainError


def trial_division_is_prime(n):
    if n < 2:
        return False
    return all(n % k for k in range(2, math.isqrt(n) + 1))


def squares_mod(p):
    return {(x * x) % p for x in range(1, p)}


def legendre_oracle(d, p):
    """Legendre symbol by exhaustive squaring."""
    if d % p == 0:
        return 0
    return 1 if d % p in squares_mod(p) else -1


def kronecker_oracle(d, n):
    """Kronecker symbol from the prime factorization of n and the 8-residue rule at 2."""
    out = 1
    m = n
    k = 2
    while m > 1:
        while m % k == 0:
            if k == 2:
                out *= 0 if d % 2 == 0 else (1 if d % 8 in (1, 7) else -1)
            else:
                out *= legendre_oracle(d, k)
            m //= k
        k += 1
    return out


def squarefree_oracle(n):
    return all(n % (k * k) for k in range(2, math.isqrt(n) + 1))


# --- primes -----------------------------------------------------------------


def test_sieve_small():
    assert sieve_primes(10).primes.tolist() == [2, 3, 5, 7]
    assert sieve_primes(2).primes.tolist() == [2]


def test_sieve_million_count():
    # trial-division count below 10^6 is 78498
    assert len(sieve_primes(10**6)) == 78498


def test_sieve_matches_trial_division():
    assert sieve_primes(2000).primes.tolist() == [n for n in range(2001) if trial_division_is_prime(n)]


def test_sieve_errors():
    with pytest.raises(DomainError):
        sieve_primes(1)
    with pytest.raises(CapacityError):
        sieve_primes(10**12)


# --- Kronecker symbol -------------------------------------------------------


def test_kronecker_examples():
    assert kronecker_symbol(5, 11) == 1
    assert kronecker_symbol(8, 3) == -1
    for d in (-7, 0, 1, 5, 12, 1000):
        assert kronecker_symbol(d, 1) == 1


def test_kronecker_at_two_convention():
    assert [kronecker_symbol(d, 2) for d in (1, 3, 5, 7, 8, 9, 15)] == [1, -1, -1, 1, 0, 1, 1]


@given(st.integers(-500, 500), st.integers(1, 400))
def test_kronecker_matches_factorization_oracle(d, n):
    assert kronecker_symbol(d, n) == kronecker_oracle(d, n)


@given(st.integers(-10**6, 10**6), st.integers(1, 300), st.integers(1, 300))
def test_kronecker_completely_multiplicative(d, n1, n2):
    assert kronecker_symbol(d, n1 * n2) == kronecker_symbol(d, n1) * kronecker_symbol(d, n2)


@given(st.integers(1, 600))
@settings(max_examples=50)
def test_kronecker_vec_matches_scalar(n):
    ds = fundamental_discriminants(500)
    assert kronecker_vec(ds, n).tolist() == [kronecker_symbol(int(d), n) for d in ds]


# --- Moebius and squarefree ----------------------------------------------------


def test_moebius_examples():
    assert moebius(1) == 1
    assert moebius(12) == 0
    assert moebius(30) == -1


@given(st.integers(1, 10**6))
def test_moebius_matches_factorization(n):
    fac = factorize(n)
    expected = 0 if any(e > 1 for e in fac.values()) else (-1) ** len(fac)
    assert moebius(n) == expected


@given(st.integers(1, 10**5))
def test_squarefree_matches_oracle(n):
    assert is_squarefree(n) == squarefree_oracle(n)


@given(st.integers(2, 10**9))
@settings(max_examples=200)
def test_factorize_reconstructs(n):
    fac = factorize(n)
    assert math.prod(p**e for p, e in fac.items()) == n
    assert all(trial_division_is_prime(p) for p in fac if p < 10**5)


# --- fundamental discriminants --------------------------------------------------


def test_fundamental_discriminant_examples():
    assert is_fundamental_discriminant(5)
    assert not is_fundamental_discriminant(16)
    assert [d for d in range(1, 31) if is_fundamental_discriminant(d)] == [1, 5, 8, 12, 13, 17, 21, 24, 28, 29]


def test_fundamental_discriminants_vectorized_matches_scalar():
    assert fundamental_discriminants(5000).tolist() == [d for d in range(1, 5001) if is_fundamental_discriminant(d)]


def test_square_mod_indicator_examples():
    assert square_mod_indicator(5, 11) == 1
    assert square_mod_indicator(22, 11) == 0
    assert square_mod_indicator(13, 11) == 0


@given(st.integers(-10**4, 10**4), st.sampled_from([3, 5, 7, 11, 13, 37]))
def test_indicators_partition(d, M):
    s, n = square_mod_indicator(d, M), nonsquare_mod_indicator(d, M)
    if d % M == 0:
        assert (s, n) == (0, 0)
    else:
        assert s + n == 1
        assert s == (1 if d % M in squares_mod(M) else 0)


# --- family ---------------------------------------------------------------------


def test_enumerate_family_small():
    assert enumerate_family(FamilySpec(33, 11)).discriminants.tolist() == [5, 12]
    assert enumerate_family(FamilySpec(4, 11)).discriminants.tolist() == []


def test_enumerate_family_brute_force():
    X, M = 3000, 11
    expected = [d for d in range(2, X + 1) if is_fundamental_discriminant(d) and d % M in squares_mod(M)]
    fam = enumerate_family(FamilySpec(X, M))
    assert fam.discriminants.tolist() == expected
    assert fam.cardinality == len(expected)
    assert fam.L == pytest.approx(math.log(math.sqrt(M) * X / (2 * math.pi)), rel=1e-15)


def test_family_include_d_equal_1():
    assert enumerate_family(FamilySpec(33, 11, include_d_equal_1=True)).discriminants.tolist() == [1, 5, 12]


def test_selectors_agree_for_even_sign():
    for X in (1000, 20_000):
        a = enumerate_family(FamilySpec(X, 11))
        b = enumerate_family(FamilySpec(X, 11, selector="eq-1-1-sign", omega=1))
        assert np.array_equal(a.discriminants, b.discriminants)


def test_family_million_size():
    fam = enumerate_family(FamilySpec(10**6, 11))
    assert abs(fam.cardinality - 139_317) <= 0.005 * 139_317


def test_family_spec_rejects_bad_conductor():
    for M in (9, 2, 15):
        with pytest.raises(DomainError):
            FamilySpec(100, M)
    with pytest.raises(DomainError):
        FamilySpec(0, 11)


def test_family_count_asymptotic():
    assert family_count_asymptotic(10**6, 11) == pytest.approx(139316.7, abs=0.1)
    assert family_count_asymptotic(0, 11) == 0
    for X in (10, 1234, 10**7):
        assert family_count_asymptotic(X, 37) / X == pytest.approx(3 / math.pi**2 * 37 / 76, rel=1e-14)


def test_count_divisible():
    fam = enumerate_family(FamilySpec(33, 11))
    assert count_divisible(fam, 3) == 1
    assert count_divisible(fam, 11) == 0
    big = enumerate_family(FamilySpec(10**6, 11))
    assert count_divisible(big, 11) == 0
    assert abs(count_divisible(big, 3) - big.cardinality / 4) <= 5 * math.sqrt(10**6)


def test_family_weighted_sum_at_zero(family_1e4):
    ws = family_weighted_sum(family_1e4, 0)
    assert ws.exact == pytest.approx(family_1e4.cardinality)
    assert ws.closed == pytest.approx(family_1e4.cardinality)


def test_family_weighted_sum_rejects_w():
    fam = enumerate_family(FamilySpec(1000, 11))
    with pytest.raises(DomainError):
        family_weighted_sum(fam, complex(1, 0.1))  # w < 0
    with pytest.raises(DomainError):
        family_weighted_sum(fam, complex(1, -fam.L / (2 * math.pi)))  # w = 1


def test_family_csv(tmp_path):
    fam = enumerate_family(FamilySpec(100, 11))
    path = tmp_path / "family.csv"
    write_family_csv(fam, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "d,d_mod_M,is_square_mod_M"
    assert len(lines) == fam.cardinality + 1
    assert all(line.endswith(",1") for line in lines[1:])
