"""Special-function kernel: integer-order Bessel J, its zeros, disk
eigenmodes and Gauss-Legendre quadrature.

Everything here is self-contained (no scipy): J_m is evaluated by a power
series for small argument and by normalized downward recurrence above, the
zeros by asymptotic guesses refined with bisection plus Newton, and the
quadrature nodes by Newton iteration on the Legendre recurrence.  All
routines are pure functions; cached tables are immutable after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "BesselMode",
    "QuadratureRule",
    "bessel_j",
    "bessel_j_all",
    "bessel_j_derivative",
    "bessel_zero",
    "gauss_legendre",
    "mode_make",
    "modes_upto",
    "eigenmode_value",
    "adaptive_quad_vec",
    "RADIAL_QUAD_POINTS",
]

# Default order of the radial Gauss-Legendre rule; doubling it must not move
# any reported integral by more than ~1e-10 (convergence guard in the tests).
RADIAL_QUAD_POINTS = 128

_SERIES_CUTOFF = 2.0  # power series below, downward recurrence above
_RESCALE_LIMIT = 1e250


@dataclass(frozen=True)
class BesselMode:
    """One Dirichlet eigenmode of the unit-speed particle on a disk.

    ``m`` may be negative; the radial profile uses ``J_{|m|}`` so that
    ``(m, n)`` and ``(-m, n)`` share zero, wavenumber, energy and norm.
    """

    m: int
    n: int
    zero: float    # n-th positive zero of J_{|m|}
    k: float       # zero / r0
    energy: float  # hbar^2 k^2 / (2 mu)
    norm: float    # radial normalization A, 1/sqrt(int r J^2 dr)


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    interval: tuple[float, float]

    def integrate(self, values: np.ndarray) -> complex:
        return np.sum(self.weights * values, axis=-1)


def _series_j(m: int, x: np.ndarray) -> np.ndarray:
    """Power series for J_m, adequate for x <= ~4 at double precision."""
    half = 0.5 * x
    if m < 160:
        term = half**m / math.factorial(m)
    else:  # avoid factorial overflow; result underflows to 0 for small x
        with np.errstate(divide="ignore"):
            logt = m * np.log(np.where(half > 0, half, 1.0)) - math.lgamma(m + 1)
        term = np.where(half > 0, np.exp(logt), 1.0 if m == 0 else 0.0)
    total = term.copy()
    mx2 = -0.25 * x * x
    for k in range(1, 40):
        term = term * mx2 / (k * (m + k))
        total += term
    return total


def _miller_start_order(nmax: int, xmax: float) -> int:
    # The unnormalized minimal solution must be negligible at the start
    # order; past the turning point J_n(x) decays like Ai, so a margin of
    # ~18 (x/2)^(1/3) buys ~20 decades.
    margin = 18.0 * max(1.0, 0.5 * xmax) ** (1.0 / 3.0) + 20.0
    start = max(nmax, int(math.ceil(xmax))) + int(margin)
    return start + (start % 2)


def _miller_j(nmax: int, x: np.ndarray) -> np.ndarray:
    """All of J_0..J_nmax at x > 0 by normalized downward recurrence."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    mstart = _miller_start_order(nmax, float(x.max()))
    rows = np.zeros((nmax + 1, x.size))
    f_hi = np.zeros_like(x)          # running J_{n+1} (unnormalized)
    f_cur = np.full_like(x, 1e-30)   # running J_n, n = mstart
    ssum = 2.0 * f_cur.copy()        # mstart is even
    for n in range(mstart, 0, -1):
        f_lo = (2.0 * n / x) * f_cur - f_hi
        f_hi = f_cur
        f_cur = f_lo
        order = n - 1
        if order <= nmax:
            rows[order] = f_cur
        if order == 0:
            ssum += f_cur
        elif order % 2 == 0:
            ssum += 2.0 * f_cur
        big = np.abs(f_cur) > _RESCALE_LIMIT
        if big.any():
            scale = np.where(big, 1e-250, 1.0)
            f_cur *= scale
            f_hi *= scale
            ssum *= scale
            rows[:, big] *= 1e-250
    return rows / ssum


def bessel_j_all(nmax: int, x) -> np.ndarray:
    """J_0(x) .. J_nmax(x) for x >= 0, shape (nmax + 1, *shape(x)).

    Absolute accuracy is ~1e-14 for x in [0, 200]; this is the primitive
    every radial integral in the package is built on.
    """
    xarr = np.atleast_1d(np.asarray(x, dtype=float))
    shape = xarr.shape
    x = xarr.reshape(-1)
    if np.any(x < 0):
        raise ValueError("bessel_j_all requires x >= 0")
    out = np.zeros((nmax + 1, x.size))
    zero = x == 0.0
    small = (~zero) & (x <= _SERIES_CUTOFF)
    large = x > _SERIES_CUTOFF
    if zero.any():
        out[0, zero] = 1.0
    if small.any():
        xs = x[small]
        for m in range(nmax + 1):
            out[m, small] = _series_j(m, xs)
    if large.any():
        out[:, large] = _miller_j(nmax, x[large])
    return out.reshape((nmax + 1,) + shape)


def bessel_j(m: int, x):
    """Bessel function J_m(x) of nonnegative integer order.

    Rejects negative x; callers handle negative orders through
    J_{-m} = (-1)^m J_m.  Returns a scalar for scalar input.
    """
    if m < 0 or m != int(m):
        raise ValueError("order must be a nonnegative integer")
    scalar = np.isscalar(x) or getattr(x, "ndim", 0) == 0
    vals = bessel_j_all(int(m), x)[int(m)]
    return float(vals[0]) if scalar else vals


def bessel_j_derivative(m: int, x):
    """d/dx J_m(x) via J'_0 = -J_1 and 2 J'_m = J_{m-1} - J_{m+1}."""
    if m < 0:
        raise ValueError("order must be a nonnegative integer")
    scalar = np.isscalar(x) or getattr(x, "ndim", 0) == 0
    rows = bessel_j_all(m + 1, x)
    if m == 0:
        out = -rows[1]
    else:
        out = 0.5 * (rows[m - 1] - rows[m + 1])
    return float(out[0]) if scalar else out


def _mcmahon_guess(m: int, n: int) -> float:
    b = (n + 0.5 * m - 0.25) * math.pi
    mu = 4.0 * m * m
    return (
        b
        - (mu - 1.0) / (8.0 * b)
        - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * (8.0 * b) ** 3)
    )


@lru_cache(maxsize=None)
def bessel_zero(m: int, n: int) -> float:
    """n-th positive zero of J_m (n >= 1), accurate to ~1e-13 absolute.

    The n-th sign change of J_m is bracketed by a coarse scan (consecutive
    zeros are never closer than ~3.05), bisected, then polished by Newton.
    Raises RuntimeError if the scan cannot isolate n sign changes, which
    would signal a defective J evaluation.
    """
    if m < 0 or n < 1:
        raise ValueError("bessel_zero requires m >= 0 and n >= 1")
    step = 1.5
    x_hi_limit = _mcmahon_guess(m, n) + 10.0
    x_prev = 0.05
    f_prev = bessel_j(m, x_prev)
    crossings = 0
    lo = hi = None
    x = x_prev
    while x < x_hi_limit:
        x = x_prev + step
        f = bessel_j(m, x)
        if f == 0.0:  # exact hit, perturb
            x += 1e-9
            f = bessel_j(m, x)
        if f_prev * f < 0.0:
            crossings += 1
            if crossings == n:
                lo, hi = x_prev, x
                break
        x_prev, f_prev = x, f
    if lo is None:
        raise RuntimeError(
            f"could not isolate {n} sign changes of J_{m} below {x_hi_limit:.2f}"
        )
    f_lo = bessel_j(m, lo)
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        f_mid = bessel_j(m, mid)
        if f_lo * f_mid <= 0.0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    root = 0.5 * (lo + hi)
    for _ in range(4):
        d = bessel_j_derivative(m, root)
        if d == 0.0:
            break
        root -= bessel_j(m, root) / d
    return root


@lru_cache(maxsize=None)
def _legendre_rule_unit(npoints: int) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Nodes/weights on [-1, 1] by Newton iteration on the recurrence."""
    if npoints < 1:
        raise ValueError("need at least one quadrature point")
    n = npoints
    nodes = np.empty(n)
    weights = np.empty(n)
    for i in range((n + 1) // 2):
        x = math.cos(math.pi * (i + 0.75) / (n + 0.5))
        for _ in range(100):
            p0, p1 = 1.0, x
            for j in range(2, n + 1):
                p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
            dp = n * (x * p1 - p0) / (x * x - 1.0) if n > 1 else 1.0
            dx = p1 / dp
            x -= dx
            if abs(dx) < 1e-15:
                break
        p0, p1 = 1.0, x
        for j in range(2, n + 1):
            p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
        dp = n * (x * p1 - p0) / (x * x - 1.0) if n > 1 else 1.0
        nodes[i] = -x  # cos ordering gives descending nodes
        nodes[n - 1 - i] = x
        w = 2.0 / ((1.0 - x * x) * dp * dp)
        weights[i] = w
        weights[n - 1 - i] = w
    if n == 1:
        nodes[0], weights[0] = 0.0, 2.0
    return tuple(nodes.tolist()), tuple(weights.tolist())


def gauss_legendre(npoints: int, a: float, b: float) -> QuadratureRule:
    """Gauss-Legendre rule with `npoints` nodes on [a, b]."""
    if not a < b:
        raise ValueError("need a < b")
    xs, ws = _legendre_rule_unit(npoints)
    xs = np.asarray(xs)
    ws = np.asarray(ws)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return QuadratureRule(mid + half * xs, half * ws, (float(a), float(b)))


@lru_cache(maxsize=None)
def _radial_rule(r0: float, npoints: int) -> QuadratureRule:
    return gauss_legendre(npoints, 0.0, r0)


@lru_cache(maxsize=None)
def _mode_norm(m_abs: int, n: int, r0: float, npoints: int) -> float:
    k = bessel_zero(m_abs, n) / r0
    rule = _radial_rule(r0, npoints)
    j = bessel_j(m_abs, k * rule.nodes)
    return float(1.0 / math.sqrt(np.sum(rule.weights * rule.nodes * j * j)))


def mode_make(m: int, n: int, spec, npoints: int = RADIAL_QUAD_POINTS) -> BesselMode:
    """Build the (m, n) disk eigenmode for the given domain parameters.

    The normalization is computed by quadrature of `int r J^2 dr` with the
    same Gauss-Legendre rule used for matrix elements; the closed form in
    terms of J_{|m|+1} at the zero serves as a cross-check in the tests.
    """
    if n < 1:
        raise ValueError("radial index n must be >= 1")
    if spec.r0 <= 0:
        raise ValueError("disk radius must be positive")
    m_abs = abs(int(m))
    zero = bessel_zero(m_abs, n)
    k = zero / spec.r0
    energy = (spec.hbar * k) ** 2 / (2.0 * spec.mu)
    norm = _mode_norm(m_abs, n, float(spec.r0), npoints)
    return BesselMode(m=int(m), n=int(n), zero=zero, k=k, energy=energy, norm=norm)


def modes_upto(m_max: int, n_max: int, spec) -> list[BesselMode]:
    """All modes with |m| <= m_max and 1 <= n <= n_max, ordered by (m, n)."""
    return [
        mode_make(m, n, spec)
        for m in range(-m_max, m_max + 1)
        for n in range(1, n_max + 1)
    ]


def eigenmode_value(mode: BesselMode, r, theta):
    """chi_{mn}(r, theta) = (2 pi)^{-1/2} A J_{|m|}(k r) e^{i m theta}."""
    radial = bessel_j(abs(mode.m), mode.k * np.asarray(r, dtype=float))
    ang = np.exp(1j * mode.m * np.asarray(theta, dtype=float))
    return (2.0 * math.pi) ** -0.5 * mode.norm * radial * ang


def adaptive_quad_vec(f, a: float, b: float, abs_tol: float, phase=None,
                      max_depth: int = 48):
    """Adaptive Gauss quadrature of a vector-valued complex integrand.

    ``f(s_array)`` must return an array with the node axis last.  Panels are
    pre-split so the optional ``phase`` function varies by at most pi/4 per
    panel (oscillatory integrands), then refined by comparing embedded
    7- and 15-point Gauss rules until the local error estimate is below
    ``abs_tol`` scaled by the panel fraction.
    """
    if b < a:
        raise ValueError("need b >= a")
    if b == a:
        probe = np.asarray(f(np.asarray([a if a > 0 else a + 1.0])))
        return np.zeros(probe.shape[:-1], dtype=complex)

    # initial panels capped by phase variation
    edges = [a]
    if phase is not None:
        s = a
        while s < b:
            step = b - s
            while abs(phase(s + step) - phase(s)) > 0.25 * math.pi and step > (b - a) * 1e-12:
                step *= 0.5
            s = min(s + step, b)
            edges.append(s)
        edges[-1] = b
    else:
        edges.append(b)

    x7, w7 = (np.asarray(t) for t in _legendre_rule_unit(7))
    x15, w15 = (np.asarray(t) for t in _legendre_rule_unit(15))
    total_width = b - a

    def panel(lo, hi):
        half = 0.5 * (hi - lo)
        mid = 0.5 * (lo + hi)
        v15 = np.asarray(f(mid + half * x15), dtype=complex)
        i15 = half * (v15 @ w15)
        v7 = np.asarray(f(mid + half * x7), dtype=complex)
        i7 = half * (v7 @ w7)
        return i15, np.max(np.abs(i15 - i7))

    total = None
    stack = [(edges[i], edges[i + 1], 0) for i in range(len(edges) - 1)]
    while stack:
        lo, hi, depth = stack.pop()
        val, err = panel(lo, hi)
        if err > abs_tol * max((hi - lo) / total_width, 1e-3) and depth < max_depth:
            mid = 0.5 * (lo + hi)
            stack.append((lo, mid, depth + 1))
            stack.append((mid, hi, depth + 1))
        else:
            total = val if total is None else total + val
    return total
