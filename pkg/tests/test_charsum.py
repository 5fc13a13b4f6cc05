import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twistdensity.arith import fundamental_discriminants, kronecker_symbol
from twistdensity.charsum import (
    CharSumGrid,
    character_table,
    envelope,
    envelope_scan,
    inner_char_sum,
    jutila_sum,
    write_grid_csv,
)
from twistdensity.errors import CapacityError, DomainError


def is_fund_disc_oracle(d):
    """Positive fundamental discriminants by the textbook definition."""
    def sqfree(m):
        return all(m % (k * k) for k in range(2, math.isqrt(m) + 1))

    if d % 4 == 1:
        return sqfree(d)
    return d % 4 == 0 and (d // 4) % 4 in (2, 3) and sqfree(d // 4)


def legendre(d, p):
    if d % p == 0:
        return 0
    return 1 if any((x * x - d) % p == 0 for x in range(1, p)) else -1


def kronecker_oracle(d, n):
    out, m, k = 1, n, 2
    while m > 1:
        while m % k == 0:
            if k == 2:
                out *= 0 if d % 2 == 0 else (1 if d % 8 in (1, 7) else -1)
            else:
                out *= legendre(d, k)
            m //= k
        k += 1
    return out


def family_oracle(X, M, selector="square"):
    sign = 1 if selector == "square" else -1
    return [d for d in range(2, X + 1) if is_fund_disc_oracle(d) and kronecker_oracle(d, M) == sign]


def jutila_oracle(N, M, X):
    fam = family_oracle(X, M)
    S = S1 = S2 = 0
    for n in range(2, N + 1):
        if math.isqrt(n) ** 2 == n or math.gcd(n, M) != 1:
            continue
        chis = {d: kronecker_oracle(d, n) for d in range(2, X + 1) if is_fund_disc_oracle(d)}
        S += sum(chis[d] for d in fam) ** 2
        S1 += sum(c * kronecker_oracle(d, M * M) for d, c in chis.items()) ** 2
        S2 += sum(c * kronecker_oracle(d, M) for d, c in chis.items()) ** 2
    return S, S1, S2


def test_small_cell_by_enumeration():
    res = jutila_sum(10, 3, 20)
    assert (res.S, res.S1, res.S2) == jutila_oracle(10, 3, 20) == (5, 15, 7)
    assert res.family_size == len(family_oracle(20, 3))


@pytest.mark.parametrize("N,M,X", [(30, 11, 200), (50, 15, 120), (40, 7, 300)])
def test_cells_by_enumeration(N, M, X):
    res = jutila_sum(N, M, X)
    assert (res.S, res.S1, res.S2) == jutila_oracle(N, M, X)
    assert res.S <= res.S1 + res.S2


def test_inner_sum_examples():
    assert inner_char_sum(2, 3, 20) == -1
    assert inner_char_sum(1, 3, 20) == len(family_oracle(20, 3))
    assert inner_char_sum(1, 11, 1000, "nonsquare") == len(family_oracle(1000, 11, "nonsquare"))


@given(st.integers(1, 60), st.integers(1, 12), st.sampled_from([3, 5, 7, 11, 15]))
@settings(max_examples=40, deadline=None)
def test_square_factor_invariant(n, k, M):
    # chi_d(n k^2) = chi_d(n) unless d shares a factor with k
    X = 400
    fam = family_oracle(X, M)
    expected = sum(kronecker_symbol(d, n) for d in fam if math.gcd(d, k) == 1)
    assert inner_char_sum(n * k * k, M, X) == expected


def test_character_table_matches_scalar():
    ds = fundamental_discriminants(300)
    chi = character_table(ds, 60)
    for n in (1, 2, 4, 12, 37, 60):
        assert chi[n].tolist() == [kronecker_symbol(int(d), n) for d in ds]
    assert not chi[0].any()


def test_degenerate_ranges():
    assert jutila_sum(1, 11, 1000).S == 0
    empty = jutila_sum(100, 11, 4)
    assert (empty.S, empty.S1, empty.S2, empty.family_size) == (0, 0, 0, 0)


def test_include_n_equal_M_adds_square_of_family_size():
    base = jutila_sum(50, 11, 2000)
    extra = jutila_sum(50, 11, 2000, include_n_equal_M=True)
    assert extra.S - base.S == base.family_size**2
    assert extra.n_terms == base.n_terms + 1


def test_modulus_validation():
    assert jutila_sum(20, 15, 100).S >= 0
    for M in (9, 12, 0):
        with pytest.raises(DomainError):
            jutila_sum(20, M, 100)
    with pytest.raises(DomainError):
        jutila_sum(20, 11, 0)
    with pytest.raises(DomainError):
        inner_char_sum(0, 11, 100)
    with pytest.raises(DomainError):
        inner_char_sum(2, 11, 100, "cube")


def test_capacity_error():
    ds = fundamental_discriminants(10**5)
    with pytest.raises(CapacityError):
        character_table(ds, 10**4)


def test_nonsquare_selector():
    a = jutila_sum(60, 11, 500)
    b = jutila_sum(60, 11, 500, selector="nonsquare")
    # the restricted inner sums are (a_n +- b_n)/2, so S + S' = (S1 + S2)/2
    assert a.S + b.S == (a.S1 + a.S2) // 2
    assert b.family_size == len(family_oracle(500, 11, "nonsquare"))


def test_envelope_scan_and_csv(tmp_path):
    grid = CharSumGrid([200, 100], [11, 3], [2000, 500])
    assert list(grid.N_values) == [100, 200]
    rep = envelope_scan(grid)
    assert len(rep.records) == 8
    assert rep.inequality_holds and rep.bounded
    assert rep.C == pytest.approx(rep.records[0].S / envelope(100, 3, 500), rel=1e-12)
    for rec in rep.records:
        assert rec.envelope_ratio <= rep.C * (1 + 1e-12)
    path = tmp_path / "grid.csv"
    write_grid_csv(rep, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "N,M,X,S,S1,S2,ratio,fitted_exponent"
    assert len(lines) == 9


def test_grid_validation():
    with pytest.raises(DomainError):
        CharSumGrid([100], [9], [1000])
    with pytest.raises(DomainError):
        CharSumGrid([], [11], [1000])
    with pytest.raises(DomainError):
        CharSumGrid([100], [11], [1000], selector="cube")


def test_envelope_formula():
    assert envelope(100, 11, 1000) == pytest.approx(100 * 121 * 1000 * math.log(1100) ** 10)
    assert np.isfinite(envelope(10**4, 15, 10**4))
