"""Band-limited even test functions and quadrature over the real line.

A test function g is even with Fourier transform g_hat supported in
[-sigma, sigma], using the convention g_hat(xi) = int g(t) e^{-2 pi i t xi} dt.
Both built-in pairs have closed forms that extend to complex arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import DomainError, QuadratureError

KINDS = ("fejer", "cosine")


def complex_sinc(z):
    """sin(pi z) / (pi z) for complex z, with the removable point at 0."""
    z = np.asarray(z, dtype=complex)
    w = np.pi * z
    small = np.abs(w) < 1e-4
    safe = np.where(small, 1.0, w)
    w2 = w * w
    return np.where(small, 1 - w2 / 6 + w2 * w2 / 120, np.sin(safe) / safe)


def _cosine_profile(u):
    """sinc(u) / (1 - u^2), written to avoid the removable points u = +-1."""
    u = np.asarray(u, dtype=complex)
    out = np.empty(u.shape, dtype=complex)
    mid = np.abs(u.real) < 0.5
    right = ~mid & (u.real >= 0.5)
    left = ~mid & (u.real <= -0.5)
    out[mid] = complex_sinc(u[mid]) / (1 - u[mid] ** 2)
    out[right] = complex_sinc(u[right] - 1) / (u[right] * (u[right] + 1))
    out[left] = complex_sinc(u[left] + 1) / (u[left] * (u[left] - 1))
    return out


@dataclass(frozen=True)
class TestFunction:
    """An admissible pair (g, g_hat).

    ``scale`` implements g_scaled(x) = g(scale * x), whose transform is
    g_hat(xi / scale) / |scale| and whose support radius is sigma * |scale|.
    """

    __test__ = False  # not a pytest class

    kind: str
    base_sigma: float
    scale: float = 1.0
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown test function {self.kind!r}")
        if not self.base_sigma > 0:
            raise DomainError("sigma must be positive")
        if self.scale == 0:
            raise DomainError("scale must be nonzero")
        if not self.name:
            object.__setattr__(self, "name", f"{self.kind}(sigma={self.base_sigma:g})")

    @property
    def sigma(self) -> float:
        return self.base_sigma * abs(self.scale)

    def g(self, tau):
        z = self.scale * np.asarray(tau, dtype=complex)
        s = self.base_sigma
        if self.kind == "fejer":
            out = s * complex_sinc(s * z) ** 2
        else:
            out = s * _cosine_profile(2 * s * z)
        return complex(out) if np.ndim(out) == 0 else out

    def g_hat(self, xi):
        x = np.abs(np.asarray(xi, dtype=float) / self.scale)
        s = self.base_sigma
        if self.kind == "fejer":
            out = np.maximum(0.0, 1.0 - x / s)
        else:
            out = np.where(x < s, np.cos(np.pi * np.minimum(x, s) / (2 * s)) ** 2, 0.0)
        out = out / abs(self.scale)
        return float(out) if np.ndim(out) == 0 else out

    @property
    def g0(self) -> float:
        return float(np.real(self.g(0.0)))

    def growth_constants(self) -> tuple[float, float]:
        """(C, B) with |g(t - iy)| <= C e^{2 pi sigma |y|} (1 + |t - iy|^2)^(-B) for scale 1."""
        s = self.base_sigma
        if self.kind == "fejer":
            # |sinc(z)| <= e^{pi |Im z|} min(1, 1/(pi |z|))
            return s * (1 + 1 / (math.pi * s) ** 2), 1.0
        # two integrations by parts: |g| <= e^{...} min(sigma, 1/(2 pi sigma |z|^2))
        return s + 1 / (2 * math.pi * s), 1.0


def fejer_pair(sigma: float) -> TestFunction:
    """g = sigma (sin(pi sigma t)/(pi sigma t))^2, g_hat = max(0, 1 - |xi|/sigma)."""
    return TestFunction("fejer", float(sigma))


def cosine_pair(sigma: float) -> TestFunction:
    """g_hat = cos^2(pi xi / (2 sigma)) on [-sigma, sigma]; g = sigma sinc(u)/(1 - u^2), u = 2 sigma t."""
    return TestFunction("cosine", float(sigma))


def make_test_function(kind: str, sigma: float) -> TestFunction:
    return TestFunction(kind, float(sigma))


def rescaled(f: TestFunction, A: float) -> TestFunction:
    return replace(f, scale=f.scale * A, name="")


@dataclass(frozen=True)
class AnalyticValue:
    value: complex
    bound: float
    within_bound: bool


def eval_analytic(f: TestFunction, tau: float, w: float, L: float) -> AnalyticValue:
    """g at tau - i w L / (2 pi), with the exponential-type growth bound."""
    if w < 0:
        raise DomainError("w must be nonnegative")
    y = w * L / (2 * math.pi)
    z = complex(tau, -y)
    val = complex(f.g(z))
    C, B = f.growth_constants()
    bound = C * math.exp(2 * math.pi * f.sigma * y) * (1 + abs(z) ** 2) ** (-B)
    return AnalyticValue(val, bound, abs(val) <= bound * (1 + 1e-12))


# ----------------------------------------------------------------------------
# quadrature
# ----------------------------------------------------------------------------

GL_ORDER = 32


@lru_cache(maxsize=4)
def _gauss_legendre(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def panel_nodes(a: float, b: float, panel_width: float, order: int = GL_ORDER):
    """Gauss-Legendre nodes and weights on [a, b] split into equal panels."""
    n = max(1, int(math.ceil((b - a) / panel_width - 1e-12)))
    edges = np.linspace(a, b, n + 1)
    x, w = _gauss_legendre(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    tail_estimate: float
    T: float
    n_evals: int
    converged: bool
    history: tuple = ()


def integrate_real_line(
    f: Callable[[np.ndarray], np.ndarray],
    tail_eps: float = 1e-10,
    *,
    hermitian: bool = False,
    panel_width: float = 2.0,
    T0: float = 16.0,
    T_max: float = 65536.0,
    strict: bool = True,
    tail_model: str = "inverse-square",
) -> QuadratureResult:
    """Integrate f over the real line on symmetric windows [-T, T].

    T doubles from ``T0``; each new shell T/2 <= |t| <= T is integrated with
    order-32 Gauss-Legendre panels.  The part beyond T is modelled by the
    c/t^2 envelope: with shell integral S over [a, b] the tail is
    S a / (b - a), which is added to the running value.  The change of that
    extrapolated value between windows is the reported tail estimate.

    ``tail_model="log-inverse-square"`` fits (c1 + c2 log t)/t^2 to the last
    two shells instead, for integrands carrying a logarithmic factor.

    Nodes come in pairs +-t, so odd parts of f cancel exactly.  With
    ``hermitian`` the integrand must satisfy f(-t) = conj(f(t)) and only
    t >= 0 is evaluated (the result is then real).
    """
    if tail_eps <= 0:
        raise DomainError("tail_eps must be positive")
    if tail_model not in ("inverse-square", "log-inverse-square"):
        raise DomainError(f"unknown tail model {tail_model!r}")
    shells = []

    def tail_beyond(a, b, s):
        shells.append((a, b, s))
        if tail_model == "inverse-square" or len(shells) < 2:
            return s * a / (b - a)
        (a1, b1, s1), (a2, b2, s2) = shells[-2:]

        def moments(lo, hi):
            return 1 / lo - 1 / hi, (math.log(lo) + 1) / lo - (math.log(hi) + 1) / hi

        A = np.array([moments(a1, b1), moments(a2, b2)])
        c1, c2 = np.linalg.solve(A, np.array([s1, s2], dtype=complex))
        return c1 / b2 + c2 * (math.log(b2) + 1) / b2

    def shell(a, b):
        t, w = panel_nodes(a, b, panel_width)
        if hermitian:
            vals = np.asarray(f(t), dtype=complex)
            return 2.0 * float(np.dot(w, vals.real)), t.size
        vals = np.asarray(f(np.concatenate([t, -t])), dtype=complex)
        return complex(np.dot(w, vals[: t.size] + vals[t.size :])), 2 * t.size

    T0 = min(T0, T_max)
    total, n = shell(0.0, T0)
    a, b = 0.0, T0
    extrap_prev = None
    history = []
    tail = math.inf
    while True:
        if b >= T_max:
            break
        a, b = b, min(2 * b, T_max)
        s, m = shell(a, b)
        n += m
        total += s
        extrap = total + tail_beyond(a, b, s)
        if extrap_prev is not None:
            tail = abs(extrap - extrap_prev)
            history.append(tail)
            if tail < tail_eps:
                return QuadratureResult(extrap, tail, b, n, True, tuple(history))
        extrap_prev = extrap
    if strict:
        raise QuadratureError(f"tail estimate {tail:.3g} above {tail_eps:.3g} at T = {b:g}")
    value = extrap_prev if extrap_prev is not None else total
    return QuadratureResult(value, tail, b, n, False, tuple(history))


def fourier_transform_numeric(f: TestFunction, xi: float, tail_eps: float = 1e-10, **kw) -> complex:
    """int g(t) e^{-2 pi i t xi} dt by quadrature (g even, so a cosine transform)."""
    # the oscillating t^-2 tail needs wider windows than the default
    kw.setdefault("T_max", 2.0**18)
    res = integrate_real_line(lambda t: f.g(t) * np.cos(2 * np.pi * xi * t), tail_eps, hermitian=True, **kw)
    return res.value


def sine_kernel_integral(f: TestFunction, tail_eps: float = 1e-10, **kw) -> QuadratureResult:
    """int g(t) sin(2 pi t)/(2 pi t) dt, which equals g(0)/2 when sigma < 1."""
    return integrate_real_line(lambda t: f.g(t) * np.sinc(2 * t), tail_eps, hermitian=True, **kw)


@dataclass(frozen=True)
class RescaleReport:
    A: float
    xi: np.ndarray
    numeric: np.ndarray
    predicted: np.ndarray
    max_error: float
    support: float


def rescale_check(f: TestFunction, A: float, xi=None, tail_eps: float = 1e-10) -> RescaleReport:
    """Check that g(A x) has transform g_hat(xi / A) / |A| at sample frequencies."""
    if A == 0:
        raise DomainError("A must be nonzero")
    fs = rescaled(f, A)
    if xi is None:
        xi = np.linspace(0.0, 1.2 * fs.sigma, 7)
    xi = np.asarray(xi, dtype=float)
    numeric = np.array([fourier_transform_numeric(fs, x, tail_eps).real for x in xi])
    predicted = f.g_hat(xi / A) / abs(A)
    return RescaleReport(float(A), xi, numeric, np.asarray(predicted), float(np.max(np.abs(numeric - predicted))), fs.sigma)
