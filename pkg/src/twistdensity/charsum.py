"""Mean squares of quadratic character sums over restricted fundamental discriminants.

For squarefree M the restriction to discriminants that are squares mod M is
written with the indicator (chi_d(M)^2 + chi_d(M)) / 2, so the inner sum
splits as (a_n + b_n) / 2 with a_n = sum_d chi_d(n M^2) and
b_n = sum_d chi_d(n M).  Squaring and summing over n gives S <= S1 + S2.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .arith import (
    SIEVE_BUDGET,
    fundamental_discriminants,
    is_squarefree,
    kronecker_prime_vec,
    kronecker_vec,
)
from .errors import CapacityError, DomainError

# Largest number of (n, d) character values held in memory at once.
SYMBOL_BUDGET = 200_000_000

SELECTORS = ("square", "nonsquare")


def _check_modulus(M: int) -> int:
    M = int(M)
    if M < 1 or not is_squarefree(M):
        raise DomainError(f"M = {M} must be a squarefree positive integer")
    return M


def _discriminants(X: int) -> np.ndarray:
    ds = fundamental_discriminants(int(X))
    return ds[ds != 1]


def _indicator(ds: np.ndarray, M: int, selector: str) -> np.ndarray:
    chi = kronecker_vec(ds, M).astype(np.int64)
    if selector == "square":
        return (chi * chi + chi) // 2
    if selector == "nonsquare":
        return (chi * chi - chi) // 2
    raise DomainError(f"unknown selector {selector!r}; choose from {SELECTORS}")


def character_table(ds: np.ndarray, N: int) -> np.ndarray:
    """Rows n = 0..N of chi_d(n) for every d, built from prime rows by complete multiplicativity."""
    N = int(N)
    if (N + 1) * max(ds.size, 1) > SYMBOL_BUDGET:
        raise CapacityError(f"{N} x {ds.size} character table exceeds budget {SYMBOL_BUDGET}")
    if N > SIEVE_BUDGET:
        raise CapacityError("N exceeds the sieve budget")
    spf = np.zeros(N + 1, dtype=np.int64)  # smallest prime factor
    for p in range(2, N + 1):
        if spf[p] == 0:
            spf[p::p][spf[p::p] == 0] = p
    chi = np.zeros((N + 1, ds.size), dtype=np.int8)
    if N >= 1:
        chi[1] = 1
    for n in range(2, N + 1):
        p = spf[n]
        if p == n:
            chi[n] = kronecker_prime_vec(ds, p)
        else:
            chi[n] = chi[p] * chi[n // p]
    return chi


def inner_char_sum(n: int, M: int, X: int, selector: str = "square") -> int:
    """sum over fundamental discriminants 1 < d <= X restricted by M of chi_d(n)."""
    M = _check_modulus(M)
    n = int(n)
    if n < 1:
        raise DomainError("n must be positive")
    ds = _discriminants(X)
    ind = _indicator(ds, M, selector)
    return int(np.dot(ind, kronecker_vec(ds, n).astype(np.int64)))


def _summation_range(N: int, M: int, include_n_equal_M: bool) -> np.ndarray:
    n = np.arange(2, int(N) + 1, dtype=np.int64)
    root = np.floor(np.sqrt(n.astype(float))).astype(np.int64)
    nonsquare = root * root != n
    coprime = np.gcd(n, M) == 1
    keep = nonsquare & coprime
    if include_n_equal_M and M <= N:
        keep |= n == M
    return n[keep]


@dataclass(frozen=True)
class JutilaSums:
    S: int
    S1: int
    S2: int
    n_terms: int
    family_size: int


def jutila_sum(
    N: int, M: int, X: int, selector: str = "square", include_n_equal_M: bool = False
) -> JutilaSums:
    """S = sum over nonsquare 1 < n <= N coprime to M of (restricted inner sum)^2, with S1 and S2."""
    M = _check_modulus(M)
    N, X = int(N), int(X)
    if N < 1 or X < 1:
        raise DomainError("N and X must be positive")
    ds = _discriminants(X)
    ns = _summation_range(N, M, include_n_equal_M)
    if ns.size == 0 or ds.size == 0:
        return JutilaSums(0, 0, 0, int(ns.size), int(np.count_nonzero(_indicator(ds, M, selector))))
    chi = character_table(ds, N)[ns].astype(np.int64)
    chi_M = kronecker_vec(ds, M).astype(np.int64)
    ind = _indicator(ds, M, selector)
    inner = chi @ ind
    a = chi @ (chi_M * chi_M)  # chi_d(n M^2)
    b = chi @ chi_M  # chi_d(n M)
    S, S1, S2 = int(np.dot(inner, inner)), int(np.dot(a, a)), int(np.dot(b, b))
    if S > S1 + S2:
        raise ArithmeticError(f"S = {S} exceeds S1 + S2 = {S1 + S2}")
    return JutilaSums(S, S1, S2, int(ns.size), int(np.count_nonzero(ind)))


# ----------------------------------------------------------------------------
# grid scan
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class CharSumRecord:
    N: int
    M: int
    X: int
    S: int
    S1: int
    S2: int
    envelope_ratio: float
    fitted_exponent: float = math.nan


@dataclass
class CharSumGrid:
    N_values: list
    M_values: list
    X_values: list
    selector: str = "square"
    results: list = field(default_factory=list)

    def __post_init__(self):
        self.N_values = sorted(int(v) for v in self.N_values)
        self.M_values = sorted(_check_modulus(v) for v in self.M_values)
        self.X_values = sorted(int(v) for v in self.X_values)
        if not (self.N_values and self.M_values and self.X_values):
            raise DomainError("every grid axis needs at least one value")
        if self.selector not in SELECTORS:
            raise DomainError(f"unknown selector {self.selector!r}")


def envelope(N: int, M: int, X: int) -> float:
    """N M^2 X log^10(N M)."""
    return N * M * M * X * math.log(N * M) ** 10


@dataclass(frozen=True)
class EnvelopeReport:
    records: list
    C: float  # ratio on the smallest cell
    bounded: bool
    exponents: dict  # (N, M) -> fitted exponent of S in X
    max_exponent: float
    inequality_holds: bool


def envelope_scan(grid: CharSumGrid) -> EnvelopeReport:
    """Evaluate every cell, fit C on the smallest cell, and fit the X-exponent of S."""
    raw = {}
    for N in grid.N_values:
        for M in grid.M_values:
            for X in grid.X_values:
                raw[(N, M, X)] = jutila_sum(N, M, X, grid.selector)
    exponents = {}
    for N in grid.N_values:
        for M in grid.M_values:
            xs = [X for X in grid.X_values if raw[(N, M, X)].S > 0]
            if len(xs) >= 2:
                slope = np.polyfit(np.log(xs), np.log([raw[(N, M, X)].S for X in xs]), 1)[0]
                exponents[(N, M)] = float(slope)
            else:
                exponents[(N, M)] = math.nan
    records = []
    for (N, M, X), r in raw.items():
        records.append(CharSumRecord(N, M, X, r.S, r.S1, r.S2, r.S / envelope(N, M, X), exponents[(N, M)]))
    smallest = (grid.N_values[0], grid.M_values[0], grid.X_values[0])
    C = raw[smallest].S / envelope(*smallest)
    grid.results = records
    finite = [e for e in exponents.values() if not math.isnan(e)]
    return EnvelopeReport(
        records=records,
        C=C,
        bounded=all(rec.envelope_ratio <= C * (1 + 1e-12) for rec in records),
        exponents=exponents,
        max_exponent=max(finite) if finite else math.nan,
        inequality_holds=all(rec.S <= rec.S1 + rec.S2 for rec in records),
    )


def write_grid_csv(report: EnvelopeReport, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N", "M", "X", "S", "S1", "S2", "ratio", "fitted_exponent"])
        for r in report.records:
            w.writerow([r.N, r.M, r.X, r.S, r.S1, r.S2, repr(r.envelope_ratio), repr(r.fitted_exponent)])
