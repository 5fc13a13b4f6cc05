"""Elliptic curve input, Frobenius traces and normalized Hecke eigenvalues."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from numba import njit

from .arith import is_prime, sieve_primes
from .errors import BadReductionError, DomainError


@dataclass(frozen=True)
class WeierstrassCurve:
    """Long Weierstrass model y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6.

    The conductor M and the root number omega are supplied by the user.
    """

    a1: int
    a2: int
    a3: int
    a4: int
    a6: int
    M: int
    omega: int = 1

    def __post_init__(self):
        if self.discriminant == 0:
            raise DomainError("singular Weierstrass model (zero discriminant)")
        if int(self.M) % 2 == 0 or not is_prime(self.M):
            raise DomainError(f"conductor {self.M} must be an odd prime")
        if self.omega not in (1, -1):
            raise DomainError("omega must be +1 or -1")

    @property
    def b_invariants(self) -> tuple[int, int, int, int]:
        a1, a2, a3, a4, a6 = self.a1, self.a2, self.a3, self.a4, self.a6
        b2 = a1 * a1 + 4 * a2
        b4 = 2 * a4 + a1 * a3
        b6 = a3 * a3 + 4 * a6
        b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
        return b2, b4, b6, b8

    @property
    def discriminant(self) -> int:
        b2, b4, b6, b8 = self.b_invariants
        return -b2 * b2 * b8 - 8 * b4**3 - 27 * b6 * b6 + 9 * b2 * b4 * b6

    @property
    def coefficients(self) -> tuple[int, int, int, int, int]:
        return (self.a1, self.a2, self.a3, self.a4, self.a6)


def reference_curve() -> WeierstrassCurve:
    """Conductor 11, rank 0, even functional equation."""
    return WeierstrassCurve(0, -1, 1, -10, -20, M=11, omega=1)


def _count_points_long(curve: WeierstrassCurve, p: int) -> int:
    """Projective point count by enumerating all (x, y) on the long model."""
    a1, a2, a3, a4, a6 = curve.coefficients
    n = 1
    for x in range(p):
        rhs = (x**3 + a2 * x * x + a4 * x + a6) % p
        for y in range(p):
            if (y * y + a1 * x * y + a3 * y - rhs) % p == 0:
                n += 1
    return n


@njit(cache=True)
def _character_sums(primes, b2, b4, b6):
    # For odd p: (2y + a1 x + a3)^2 = 4x^3 + b2 x^2 + 2 b4 x + b6, so
    # #E(F_p) = p + 1 + sum_x leg(rhs(x)) and a_p = -sum_x leg(rhs(x)).
    out = np.zeros(primes.size, dtype=np.int64)
    for i in range(primes.size):
        p = primes[i]
        leg = np.full(p, -1, dtype=np.int8)
        leg[0] = 0
        for y in range(1, (p - 1) // 2 + 1):
            leg[(y * y) % p] = 1
        c2 = b2 % p
        c4 = (2 * b4) % p
        c6 = b6 % p
        s = 0
        for x in range(p):
            v = (4 * x + c2) % p
            v = (v * x + c4) % p
            v = (v * x + c6) % p
            s += leg[v]
        out[i] = -s
    return out


def ap_point_count(curve: WeierstrassCurve, p: int) -> int:
    """Frobenius trace a_p = p + 1 - #E(F_p).

    At the conductor the unnormalized trace omega is returned (|a_M| = 1).
    """
    p = int(p)
    if not is_prime(p):
        raise DomainError(f"{p} is not prime")
    if p == curve.M:
        return curve.omega
    if curve.discriminant % p == 0:
        raise BadReductionError(f"bad reduction at p={p} (not the conductor)")
    if p <= 3:
        return p + 1 - _count_points_long(curve, p)
    b2, b4, b6, _ = curve.b_invariants
    return int(_character_sums(np.array([p], dtype=np.int64), b2, b4, b6)[0])


@dataclass(frozen=True)
class HeckeTable:
    """lambda(p) for all primes up to ``limit``; lambda(M) = omega / sqrt(M)."""

    curve: WeierstrassCurve
    limit: int
    primes: np.ndarray = field(repr=False)
    ap: np.ndarray = field(repr=False)
    lam: np.ndarray = field(repr=False)

    @property
    def M(self) -> int:
        return self.curve.M

    def index(self, p: int) -> int:
        i = int(np.searchsorted(self.primes, p))
        if i >= self.primes.size or self.primes[i] != p:
            raise DomainError(f"{p} is not a tabulated prime (limit {self.limit})")
        return i

    def lambda_p(self, p: int) -> float:
        return float(self.lam[self.index(p)])

    def good_mask(self) -> np.ndarray:
        return self.primes != self.M

    def restrict(self, limit: int) -> "HeckeTable":
        k = int(np.searchsorted(self.primes, limit, side="right"))
        return HeckeTable(self.curve, int(limit), self.primes[:k], self.ap[:k], self.lam[:k])


@lru_cache(maxsize=8)
def _build_table(curve: WeierstrassCurve, limit: int) -> HeckeTable:
    primes = sieve_primes(max(limit, 2)).primes
    ap = np.zeros(primes.size, dtype=np.int64)
    bad = [i for i, p in enumerate(primes.tolist()) if curve.discriminant % p == 0]
    for i in bad:
        if primes[i] != curve.M:
            raise BadReductionError(f"bad reduction at p={primes[i]} (not the conductor)")
    small = primes <= 3
    for i in np.flatnonzero(small):
        if primes[i] != curve.M:
            ap[i] = ap_point_count(curve, int(primes[i]))
    rest = np.flatnonzero(~small & (primes != curve.M))
    b2, b4, b6, _ = curve.b_invariants
    ap[rest] = _character_sums(primes[rest], b2, b4, b6)
    lam = ap / np.sqrt(primes.astype(float))
    m = primes == curve.M
    ap[m] = curve.omega
    lam[m] = curve.omega / math.sqrt(curve.M)
    for arr in (primes, ap, lam):
        arr.setflags(write=False)
    return HeckeTable(curve, int(limit), primes, ap, lam)


def build_hecke_table(curve: WeierstrassCurve, limit: int) -> HeckeTable:
    """Tabulate a_p and lambda(p) for every prime p <= limit (cached per curve)."""
    limit = int(limit)
    if limit < 2:
        raise DomainError("table limit must be at least 2")
    return _build_table(curve, limit)


def lambda_prime_power(table: HeckeTable, p: int, k: int) -> float:
    """lambda(p^k) via the Hecke recurrence; lambda(M^k) = lambda(M)^k."""
    k = int(k)
    if k < 0:
        raise DomainError("k must be nonnegative")
    lp = table.lambda_p(p)
    if p == table.M:
        return lp**k
    prev, cur = 0.0, 1.0  # lambda(p^-1), lambda(p^0)
    for _ in range(k):
        prev, cur = cur, lp * cur - prev
    return cur


def alpha_beta_power_sum(table: HeckeTable, p: int, k: int) -> float:
    """alpha_p^k + beta_p^k (alpha beta = 1 for good p; beta_M = 0)."""
    k = int(k)
    if k < 1:
        raise DomainError("k must be positive")
    lp = table.lambda_p(p)
    if p == table.M:
        return lp**k
    s_prev, s_cur = 2.0, lp
    for _ in range(k - 1):
        s_prev, s_cur = s_cur, lp * s_cur - s_prev
    return s_cur


def power_sum_matrix(lam: np.ndarray, kmax: int) -> np.ndarray:
    """Rows k = 0..kmax of alpha^k + beta^k for an array of good-prime lambdas."""
    lam = np.asarray(lam, dtype=float)
    out = np.empty((kmax + 1, lam.size))
    out[0] = 2.0
    if kmax >= 1:
        out[1] = lam
    for k in range(2, kmax + 1):
        out[k] = lam * out[k - 1] - out[k - 2]
    return out


def write_hecke_csv(table: HeckeTable, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["p", "a_p", "lambda_p"])
        for p, a, lam in zip(table.primes.tolist(), table.ap.tolist(), table.lam.tolist()):
            writer.writerow([p, a, repr(lam)])
