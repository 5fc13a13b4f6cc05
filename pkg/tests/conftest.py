import time
from contextlib import contextmanager

import pytest

from twistdensity.arith import FamilySpec, enumerate_family
from twistdensity.curve import build_hecke_table, reference_curve
from twistdensity.special import TruncationPolicy
from twistdensity.testfn import fejer_pair


@pytest.fixture(scope="session")
def curve():
    return reference_curve()


@pytest.fixture(scope="session")
def table(curve):
    return build_hecke_table(curve, 100_000)


@pytest.fixture(scope="session")
def small_table(curve):
    return build_hecke_table(curve, 10_000)


@pytest.fixture(scope="session")
def policy():
    return TruncationPolicy(prime_limit=10_000, power_limit=30)


@pytest.fixture(scope="session")
def fejer():
    return fejer_pair(0.5)


@pytest.fixture(scope="session")
def family_1e3():
    return enumerate_family(FamilySpec(1000, 11))


@pytest.fixture(scope="session")
def family_1e4():
    return enumerate_family(FamilySpec(10_000, 11))


ACCEPTANCE_LINES: list[str] = []


@contextmanager
def criterion(number: int, title: str, limit: float):
    """Time a criterion body, enforce its runtime limit and record one PASS/FAIL line."""
    t0 = time.perf_counter()
    ok = False
    try:
        yield
        elapsed = time.perf_counter() - t0
        assert elapsed < limit, f"runtime {elapsed:.1f} s exceeds {limit:g} s"
        ok = True
    finally:
        elapsed = time.perf_counter() - t0
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}  [{elapsed:.1f} s of {limit:g} s]"
        ACCEPTANCE_LINES.append(line)
        print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
