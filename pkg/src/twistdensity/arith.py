"""Integer arithmetic, fundamental discriminants and the twist family.

The family consists of positive fundamental discriminants d <= X that are
nonzero squares modulo the conductor M.  Everything here is exact integer
work except the two asymptotic comparisons (census and partial summation).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CapacityError, DomainError

# Largest sieve we are willing to allocate (one byte per integer).
SIEVE_BUDGET = 500_000_000

SELECTORS = ("square-mod-M", "eq-1-1-sign")


@dataclass(frozen=True)
class PrimeTable:
    limit: int
    primes: np.ndarray

    def __len__(self) -> int:
        return int(self.primes.size)

    def __iter__(self):
        return iter(self.primes.tolist())


def sieve_primes(limit: int) -> PrimeTable:
    """Sieve of Eratosthenes.

    Args:
        limit: inclusive upper bound, at least 2.

    Returns:
        PrimeTable with all primes up to ``limit`` in ascending order.
    """
    limit = int(limit)
    if limit < 2:
        raise DomainError("sieve limit must be at least 2")
    if limit > SIEVE_BUDGET:
        raise CapacityError(f"sieve limit {limit} exceeds budget {SIEVE_BUDGET}")
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    is_prime[4::2] = False
    for p in range(3, math.isqrt(limit) + 1, 2):
        if is_prime[p]:
            is_prime[p * p :: 2 * p] = False
    return PrimeTable(limit, np.flatnonzero(is_prime).astype(np.int64))


def is_prime(n: int) -> bool:
    n = int(n)
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def factorize(n: int) -> dict[int, int]:
    """Trial-division factorization of a positive integer."""
    n = int(n)
    if n < 1:
        raise DomainError("factorize expects a positive integer")
    out: dict[int, int] = {}
    for f in (2, 3):
        while n % f == 0:
            out[f] = out.get(f, 0) + 1
            n //= f
    f = 5
    step = 2
    while f * f <= n:
        while n % f == 0:
            out[f] = out.get(f, 0) + 1
            n //= f
        f += step
        step = 6 - step
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def kronecker_symbol(d: int, n: int) -> int:
    """Kronecker symbol (d|n).

    Uses the binary Jacobi algorithm after stripping factors of two from n,
    with (d|2) = 0 for even d, +1 for d = +-1 mod 8 and -1 for d = +-3 mod 8.
    """
    d, n = int(d), int(n)
    if n == 0:
        return 1 if abs(d) == 1 else 0
    result = 1
    if n < 0:
        n = -n
        if d < 0:
            result = -result
    v = (n & -n).bit_length() - 1
    if v:
        if d % 2 == 0:
            return 0
        n >>= v
        if v % 2 == 1 and d % 8 in (3, 5):
            result = -result
    # n is odd and positive: Jacobi symbol
    a = d % n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def kronecker_prime_vec(ds: np.ndarray, p: int) -> np.ndarray:
    """Vectorized (d|p) for a single prime p over an integer array of d."""
    ds = np.asarray(ds, dtype=np.int64)
    p = int(p)
    if p == 2:
        r = ds % 8
        out = np.zeros(ds.shape, dtype=np.int8)
        out[(r == 1) | (r == 7)] = 1
        out[(r == 3) | (r == 5)] = -1
        return out
    table = np.full(p, -1, dtype=np.int8)
    table[(np.arange(1, p, dtype=np.int64) ** 2) % p] = 1
    table[0] = 0
    return table[ds % p]


def kronecker_vec(ds: np.ndarray, n: int) -> np.ndarray:
    """Vectorized (d|n) for positive n via complete multiplicativity in n."""
    n = int(n)
    if n < 1:
        raise DomainError("kronecker_vec expects a positive modulus")
    out = np.ones(np.shape(ds), dtype=np.int8)
    for p, e in factorize(n).items() if n > 1 else ():
        chi = kronecker_prime_vec(ds, p)
        out = out * (chi if e % 2 else chi * chi)
    return out


def moebius(n: int) -> int:
    n = int(n)
    if n < 1:
        raise DomainError("moebius expects n >= 1")
    fac = factorize(n) if n > 1 else {}
    if any(e > 1 for e in fac.values()):
        return 0
    return -1 if len(fac) % 2 else 1


def is_squarefree(n: int) -> bool:
    """Trial division up to the cube root, then a perfect-square test on the cofactor."""
    n = abs(int(n))
    if n == 0:
        return False
    f = 2
    while f * f * f <= n:
        if n % f == 0:
            n //= f
            if n % f == 0:
                return False
        f += 1 if f == 2 else 2
    # remaining cofactor has all prime factors above the cube root
    r = math.isqrt(n)
    return n == 1 or r * r != n


def is_fundamental_discriminant(d: int) -> bool:
    """Positive fundamental discriminant test (even character, d > 0)."""
    d = int(d)
    if d <= 0:
        return False
    if d % 4 == 1:
        return is_squarefree(d)
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and is_squarefree(m)
    return False


def squarefree_mask(limit: int) -> np.ndarray:
    """Boolean array s with s[n] true iff n is squarefree, for 0 <= n <= limit."""
    limit = int(limit)
    if limit > SIEVE_BUDGET:
        raise CapacityError(f"squarefree sieve {limit} exceeds budget {SIEVE_BUDGET}")
    mask = np.ones(limit + 1, dtype=bool)
    mask[0] = False
    if limit >= 4:
        for p in sieve_primes(max(2, math.isqrt(limit))).primes.tolist():
            mask[p * p :: p * p] = False
    return mask


def fundamental_discriminants(X: int) -> np.ndarray:
    """All positive fundamental discriminants d <= X (including d = 1), ascending."""
    X = int(X)
    if X < 1:
        return np.zeros(0, dtype=np.int64)
    sf = squarefree_mask(X)
    n = np.arange(X + 1, dtype=np.int64)
    odd = (n % 4 == 1) & sf
    keep = odd.copy()
    m = n[4::4] // 4
    keep[4::4] = ((m % 4 == 2) | (m % 4 == 3)) & sf[m]
    return np.flatnonzero(keep).astype(np.int64)


def square_mod_indicator(d: int, M: int) -> int:
    """(chi_d(M)^2 + chi_d(M)) / 2: one iff d is a nonzero square mod the odd prime M."""
    c = kronecker_symbol(d, M)
    return (c * c + c) // 2


def nonsquare_mod_indicator(d: int, M: int) -> int:
    """(chi_d(M)^2 - chi_d(M)) / 2: one iff d is a nonsquare mod M coprime to M."""
    c = kronecker_symbol(d, M)
    return (c * c - c) // 2


@dataclass(frozen=True)
class FamilySpec:
    X: int
    M: int
    selector: str = "square-mod-M"
    include_d_equal_1: bool = False
    omega: int = 1  # only consulted by the eq-1-1-sign selector

    def __post_init__(self):
        if int(self.X) < 1:
            raise DomainError("X must be at least 1")
        if int(self.M) % 2 == 0 or not is_prime(self.M):
            raise DomainError(f"conductor M={self.M} must be an odd prime")
        if self.selector not in SELECTORS:
            raise DomainError(f"unknown selector {self.selector!r}; choose from {SELECTORS}")
        if self.omega not in (1, -1):
            raise DomainError("omega must be +1 or -1")


@dataclass(frozen=True)
class Family:
    spec: FamilySpec
    discriminants: np.ndarray = field(repr=False)

    @property
    def X(self) -> int:
        return int(self.spec.X)

    @property
    def M(self) -> int:
        return int(self.spec.M)

    @property
    def cardinality(self) -> int:
        return int(self.discriminants.size)

    @property
    def L(self) -> float:
        return scale_log(self.X, self.M)

    @property
    def log_conductors(self) -> np.ndarray:
        """log(sqrt(M) d / (2 pi)) for every member d."""
        return 0.5 * math.log(self.M) + np.log(self.discriminants.astype(float)) - math.log(2 * math.pi)


def scale_log(X: float, M: int) -> float:
    """The scaling L = log(sqrt(M) X / (2 pi))."""
    return math.log(math.sqrt(M) * X / (2 * math.pi))


def enumerate_family(spec: FamilySpec) -> Family:
    ds = fundamental_discriminants(spec.X)
    if not spec.include_d_equal_1:
        ds = ds[ds != 1]
    chi_M = kronecker_prime_vec(ds, spec.M)
    if spec.selector == "square-mod-M":
        keep = chi_M == 1
    else:
        # chi_d(-M) = chi_d(-1) chi_d(M) and chi_d(-1) = +1 for d > 0
        keep = chi_M.astype(np.int64) * spec.omega == 1
    return Family(spec, ds[keep])


def family_count_asymptotic(X: float, M: int) -> float:
    """Main term (3/pi^2) X M / (2(M+1)) of the family census."""
    return 3.0 / math.pi**2 * float(X) * M / (2.0 * (M + 1))


def count_divisible(family: Family, p: int) -> int:
    """Exact number of family members divisible by p."""
    return int(np.count_nonzero(family.discriminants % int(p) == 0))


@dataclass(frozen=True)
class WeightedSum:
    exact: complex
    closed: complex
    difference: complex
    w: float


def family_weighted_sum(family: Family, z: complex) -> WeightedSum:
    """Compare sum_d (sqrt(M) d / 2 pi)^(-2 pi i z / L) with X* e^(-2 pi i z) / (1 - 2 pi i z / L).

    Args:
        family: the enumerated family.
        z: complex point tau - i w L / (2 pi) with w in [0, 1/2].
    """
    z = complex(z)
    L = family.L
    w = -z.imag * 2 * math.pi / L
    if w < -1e-12 or w > 0.5 + 1e-12:
        raise DomainError(f"w = {w:.6g} outside [0, 1/2]")
    s = 2j * math.pi * z / L
    exact = complex(np.sum(np.exp(-s * family.log_conductors)))
    closed = family.cardinality * np.exp(-2j * math.pi * z) / (1 - s)
    return WeightedSum(exact, complex(closed), exact - complex(closed), w)


def write_family_csv(family: Family, path: str | Path) -> None:
    """Export the family as CSV with columns d, d_mod_M, is_square_mod_M."""
    M = family.M
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["d", "d_mod_M", "is_square_mod_M"])
        for d in family.discriminants.tolist():
            writer.writerow([d, d % M, square_mod_indicator(d, M)])
