"""Continued-fraction evaluation of the complex Lyapunov exponent.

For a subordinator the complex Lyapunov exponent is

    Omega(E) = c(0)/2 + K(E),   K = -E/(c(1) + -E/(c(2) + ...)),

a Stieltjes fraction in ``-E`` with positive coefficients.  Its tails are
the remainders ``z_n = E/(c(n) - z_{n+1})`` (so ``K = -z_1``), and the
minimal solution of

    u_{n+1} = c(n) u_n - E u_{n-1},   u_n = prod_{j<=n} z_j = E^n fhat(n),

gives the Mellin transform ``fhat`` of the stationary Riccati density.

The fraction is evaluated forwards (Wallis recurrences) and closed with
an asymptotic estimate of the remainder, refined by a few sweeps of the
defining relation.  Densities of states on the spectrum are obtained
either by continuing to ``E + i eta`` and extrapolating ``eta -> 0``
(:func:`dos_continued`) or directly on the real axis from the product
form of ``Im z_1`` (:func:`dos_real_axis`), which stays accurate when
``N(E)`` is exponentially small.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

import numba
import numpy as np

from .errors import BranchCutError, ConvergenceError, DomainError, InfiniteMeanError, UnsupportedError
from .levy_core import Family, LevyProcessSpec, coefficients

__all__ = [
    "CFState",
    "OmegaValue",
    "evaluate_K",
    "omega_cf",
    "dos_continued",
    "dos_real_axis",
    "remainders",
    "mellin_sequence",
    "pincherle_check",
    "stieltjes_inversion_check",
    "cf_series_at_zero",
    "tail_seed",
    "DEFAULT_ETAS",
]

DEFAULT_ETAS = (1e-2, 1e-3, 1e-4)
_TINY = 1e-300


@dataclass
class CFState:
    """Diagnostics of one continued-fraction evaluation.

    ``p_n``/``q_n`` are the last two numerators and denominators of the
    convergents (renormalised, so only their ratios are meaningful).
    """

    E: complex
    coefficients: Callable = field(repr=False)
    p_n: tuple = (0j, 0j)
    q_n: tuple = (0j, 0j)
    tail_seed: complex = 0j
    n_terms: int = 0
    converged: bool = False
    residual: float = math.inf
    trace: list = field(default_factory=list, repr=False)


@dataclass(frozen=True)
class OmegaValue:
    """Complex Lyapunov exponent at one energy.

    ``gamma`` is NaN when c(0) does not exist (infinite mean).  ``log_N``
    carries ln N when it is known more precisely than ``N`` itself (e.g.
    exponentially small densities of states).
    """

    E: complex
    omega: complex
    gamma: float
    N: float
    method: str
    err_estimate: float
    log_N: float | None = None


def _coef_fn(c):
    if isinstance(c, LevyProcessSpec):
        spec = c
        if spec.family is Family.BROWNIAN:
            raise UnsupportedError(
                "the continued fraction of a process with a Brownian part converges to the wrong "
                "solution (a ratio of I-Bessel functions); use the closed form instead")
        return lambda n: coefficients(spec, n)
    if callable(c):
        return lambda n: np.asarray(c(np.asarray(n, dtype=float)), dtype=float)
    raise TypeError("coefficients must be a LevyProcessSpec or a callable n -> c(n)")


def _c0_of(spec: LevyProcessSpec):
    try:
        return float(coefficients(spec, np.zeros(1))[0])
    except InfiniteMeanError:
        return None


# ---------------------------------------------------------------------------
# tail seed
# ---------------------------------------------------------------------------

def _minimal_root(cn, E):
    """Root of z^2 - cn z + E = 0 with the smaller modulus (Im > 0 on ties).

    The tie occurs on the spectrum (E > 0 real, cn < 2 sqrt(E)); taking
    Im z > 0 there realises the boundary value at E + i0.
    """
    cn = np.asarray(cn, dtype=complex)
    d = np.sqrt(cn * cn - 4.0 * E)
    big = cn + np.where((cn.conjugate() * d).real >= 0, d, -d)
    other = big / 2.0
    small = np.where(big == 0, np.sqrt(E + 0j), 2.0 * E / np.where(big == 0, 1.0, big))
    tie = np.abs(np.abs(small) - np.abs(other)) <= 1e-13 * np.abs(other)
    flip = tie & (small.imag < 0)
    return np.where(flip, other, small)


def tail_seed(c_values, E, order=2):
    """Asymptotic remainders for consecutive indices.

    Parameters
    ----------
    c_values : array
        ``c(n), c(n+1), ..., c(n+m)``; returns seeds for the first
        ``m + 1 - order`` indices.
    order : int
        Number of refinement sweeps.  Order 0 is the local root
        ``(c - sqrt(c^2 - 4E))/2``; each sweep replaces ``c(n)`` by
        ``c(n) - (s(n+1) - s(n))``, accounting for the variation of the
        remainder along the tail.
    """
    E = complex(E)
    cv = np.asarray(c_values, dtype=float)
    s = _minimal_root(cv, E)
    for _ in range(order):
        c_eff = cv[:-1] - (s[1:] - s[:-1])
        d = np.sqrt(c_eff * c_eff - 4.0 * E)
        r1 = (c_eff - d) / 2.0
        r2 = (c_eff + d) / 2.0
        # follow the previous seed branch
        prev = s[:-1]
        s = np.where(np.abs(r1 - prev) <= np.abs(r2 - prev), r1, r2)
        cv = cv[:-1]
    return s


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _wallis_forward(cvals, E, a_prev, a_cur, b_prev, b_cur):
    """Advance (A_{n-1}, A_n, B_{n-1}, B_n) through the coefficients in ``cvals``."""
    for i in range(cvals.shape[0]):
        cn = cvals[i]
        a_new = cn * a_cur - E * a_prev
        b_new = cn * b_cur - E * b_prev
        a_prev, a_cur = a_cur, a_new
        b_prev, b_cur = b_cur, b_new
        scale = abs(b_cur)
        if scale < 1e-300:
            scale = abs(a_cur) + 1e-300
        if scale > 1e100 or scale < 1e-100:
            a_prev /= scale
            a_cur /= scale
            b_prev /= scale
            b_cur /= scale
    return a_prev, a_cur, b_prev, b_cur


@numba.njit(cache=True, nogil=True)
def _backward_remainders(cvals, E, z_last):
    """z_n = E/(c_n - z_{n+1}) for n = len-1 .. 0, starting from z_last = z_{len}."""
    n = cvals.shape[0]
    z = np.empty(n, dtype=np.complex128)
    nxt = z_last
    for i in range(n - 1, -1, -1):
        den = cvals[i] - nxt
        if abs(den) < 1e-300:
            den = 1e-300
        nxt = E / den
        z[i] = nxt
    return z


class _CoefCache:
    """Cached c(1..n) grown on demand."""

    def __init__(self, fn):
        self.fn = fn
        self.vals = np.empty(0)

    def upto(self, n):
        m = self.vals.size
        if n > m:
            new_n = max(n, 2 * m, 256)
            extra = self.fn(np.arange(m + 1, new_n + 1, dtype=float))
            if np.any(~np.isfinite(extra)) or np.any(extra < 0):
                raise DomainError("continued-fraction coefficients must be non-negative and finite")
            self.vals = np.concatenate([self.vals, extra])
        return self.vals[:n]

    def window(self, lo, hi):
        """c(lo..hi) inclusive (1-based)."""
        return self.upto(hi)[lo - 1:hi]


# ---------------------------------------------------------------------------
# K and Omega
# ---------------------------------------------------------------------------

def evaluate_K(c, E, tol=1e-12, n_start=64, n_max=2 ** 22, seed_order=2, full_output=False):
    """Value of the Stieltjes fraction K(E) = -E/(c1 + -E/(c2 + ...)).

    Parameters
    ----------
    c : LevyProcessSpec or callable
        Coefficient source; a callable receives an array of indices.
    E : complex
        Energy off the positive real axis.
    tol : float
        Relative tolerance on both the change between successive
        truncation depths and the sensitivity to the tail seed.
    full_output : bool
        Also return the :class:`CFState`.

    Raises
    ------
    BranchCutError
        For real ``E > 0`` (use :func:`dos_continued` or
        :func:`dos_real_axis` on the spectrum).
    ConvergenceError
        If ``n_max`` terms are not enough; diagnostics hold the trace.
    """
    E = complex(E)
    if E.imag == 0.0 and E.real > 0:
        raise BranchCutError("E lies on the positive real axis, where K has a branch cut")
    fn = _coef_fn(c)
    state = CFState(E=E, coefficients=fn)
    if E == 0:
        state.converged, state.residual = True, 0.0
        return (0j, state) if full_output else 0j
    cache = _CoefCache(fn)
    a_prev, a_cur, b_prev, b_cur = 1.0 + 0j, 0j, 0j, 1.0 + 0j
    done = 0
    n = n_start
    prev_val = None
    while True:
        cv = cache.window(done + 1, n)
        a_prev, a_cur, b_prev, b_cur = _wallis_forward(cv, E, a_prev, a_cur, b_prev, b_cur)
        done = n
        window = cache.window(n + 1, n + 1 + seed_order + 1)
        tau_hi = -tail_seed(window, E, seed_order)[0]
        tau_lo = -tail_seed(window[:-1], E, seed_order - 1)[0] if seed_order > 0 else tau_hi
        den = b_cur + tau_hi * b_prev
        if abs(den) < _TINY:
            den = _TINY
        val = (a_cur + tau_hi * a_prev) / den
        den_lo = b_cur + tau_lo * b_prev
        if abs(den_lo) < _TINY:
            den_lo = _TINY
        val_lo = (a_cur + tau_lo * a_prev) / den_lo
        scale = max(abs(val), abs(E) ** 0.5 * 1e-300, _TINY)
        pert = abs(val - val_lo) / scale
        incr = abs(val - prev_val) / scale if prev_val is not None else math.inf
        state.trace.append((n, val, incr, pert))
        state.p_n, state.q_n = (a_prev, a_cur), (b_prev, b_cur)
        state.tail_seed, state.n_terms = -tau_hi, n
        state.residual = max(incr, pert) if prev_val is not None else pert
        if (incr <= tol and pert <= tol) or (prev_val is None and pert <= 0.01 * tol and _exact_seed(cv)):
            state.converged = True
            break
        if 2 * n > n_max:
            raise ConvergenceError(
                f"continued fraction did not converge within {n_max} terms (residual {state.residual:.2e})",
                {"trace": state.trace, "E": E})
        prev_val = val
        n *= 2
    return (val, state) if full_output else val


def _exact_seed(cv):
    # constant coefficients: the seed is the exact tail
    return cv.size > 1 and np.all(cv == cv[0])


def omega_cf(spec: LevyProcessSpec, E, tol=1e-12) -> OmegaValue:
    """Omega(E) = c(0)/2 + K(E) from the continued fraction.

    Raises
    ------
    InfiniteMeanError
        For infinite-mean processes (use :func:`dos_continued`, which
        needs only Im K).
    BranchCutError
        For E on the positive real axis.
    """
    c0 = _c0_of(spec)
    if c0 is None:
        raise InfiniteMeanError(
            "c(0) is infinite for this process: Omega is unavailable, but N(E) can be "
            "obtained from dos_continued/dos_real_axis (they need only Im K)")
    K, st = evaluate_K(spec, E, tol=tol, full_output=True)
    om = c0 / 2.0 + K
    E = complex(E)
    if E.imag == 0.0:
        om = complex(om.real, 0.0)
    err = st.residual * max(abs(K), 1e-300)
    return OmegaValue(E, om, om.real, -om.imag / math.pi, "cf", err)


def _neville_zero(xs, ys):
    """Value at 0 of the interpolating polynomial through (xs, ys)."""
    p = list(ys)
    n = len(xs)
    for m in range(1, n):
        for i in range(n - m):
            p[i] = (xs[i + m] * p[i] - xs[i] * p[i + 1]) / (xs[i + m] - xs[i])
    return p[0]


def dos_continued(spec: LevyProcessSpec, E: float, eta_schedule=DEFAULT_ETAS, tol=1e-13) -> OmegaValue:
    """N(E) and gamma(E) on the spectrum by continuation to E + i eta.

    Omega is evaluated at each offset of ``eta_schedule`` and the values
    are extrapolated polynomially to eta = 0; the error estimate is the
    spread between the extrapolations using all offsets and all but the
    largest.

    Raises
    ------
    ConvergenceError
        If the successive differences along the schedule do not shrink;
        ``diagnostics["eta_trace"]`` holds ``(eta, Omega)`` pairs.
    """
    E = float(E)
    if not E > 0:
        raise DomainError("dos_continued needs E > 0")
    etas = sorted((float(e) for e in eta_schedule), reverse=True)
    if len(etas) < 2 or etas[-1] <= 0:
        raise DomainError("eta schedule needs at least two positive offsets")
    c0 = _c0_of(spec)
    vals = []
    for eta in etas:
        K = evaluate_K(spec, complex(E, eta), tol=tol)
        vals.append(K)
    trace = list(zip(etas, vals))
    diffs = [abs(vals[i + 1] - vals[i]) for i in range(len(vals) - 1)]
    scale = max(abs(v) for v in vals)
    for d1, d2 in zip(diffs[:-1], diffs[1:]):
        if d2 > d1 + 1e-13 * scale:
            raise ConvergenceError("eta extrapolation is not monotone", {"eta_trace": trace})
    K0 = _neville_zero(etas, vals)
    if len(etas) > 2:
        K1 = _neville_zero(etas[1:], vals[1:])
        err = abs(K0 - K1)
    else:
        err = diffs[-1]
    N = -K0.imag / math.pi
    gamma = c0 / 2.0 + K0.real if c0 is not None else math.nan
    om = complex(gamma if c0 is not None else math.nan, -math.pi * N)
    return OmegaValue(complex(E, 0.0), om, gamma, N, "cf-eta", err)


# ---------------------------------------------------------------------------
# remainders, Mellin sequence, real-axis density of states
# ---------------------------------------------------------------------------

def _remainders_depth(cache, E, n_keep, depth, seed_order):
    cv = cache.upto(depth + seed_order + 2)
    seed = tail_seed(cv[depth:depth + seed_order + 2], E, seed_order)[0]
    z = _backward_remainders(np.ascontiguousarray(cv[:depth]), complex(E), complex(seed))
    return z[:n_keep]


def remainders(c, E, n: int, tol=1e-13, seed_order=2, n_max=2 ** 22):
    """Remainders z_1 .. z_n by backward recursion from a seeded tail.

    The depth is doubled until z_1..z_n move by less than ``tol``
    (relative).  Real ``E > 0`` is read as ``E + i0``.
    """
    fn = _coef_fn(c)
    cache = _CoefCache(fn)
    E = complex(E)
    depth = max(64, 2 * n)
    prev = _remainders_depth(cache, E, n, depth, seed_order)
    while True:
        depth *= 2
        cur = _remainders_depth(cache, E, n, depth, seed_order)
        if np.max(np.abs(cur - prev) / np.maximum(np.abs(cur), 1e-300)) <= tol:
            return cur
        if depth > n_max:
            raise ConvergenceError("remainder recursion did not settle", {"E": E, "depth": depth})
        prev = cur


def mellin_sequence(spec: LevyProcessSpec, E: float, n_max: int, tol=1e-13) -> np.ndarray:
    """fhat(0..n_max) of the stationary Riccati density at E < 0.

    ``fhat(n) = prod_{j<=n} z_j / E`` with fhat(0) = 1.

    Raises
    ------
    ConvergenceError
        If the sequence violates E fhat(n+1) - c(n) fhat(n) + fhat(n-1) = 0
        by more than 1e-9 relative.
    """
    E = float(E)
    if not E < 0:
        raise DomainError("mellin_sequence needs E < 0")
    z = remainders(spec, E, n_max, tol=tol).real
    f = np.concatenate([[1.0], np.cumprod(z / E)])
    if n_max >= 2:
        cv = coefficients(spec, np.arange(1, n_max, dtype=float))
        res = E * f[2:] - cv * f[1:-1] + f[:-2]
        size = np.maximum.reduce([np.abs(E * f[2:]), np.abs(cv * f[1:-1]), np.abs(f[:-2])])
        worst = float(np.max(np.abs(res) / size))
        if worst > 1e-9:
            raise ConvergenceError("Mellin sequence fails its difference equation",
                                   {"max_relative_residual": worst})
    return f


def pincherle_check(spec: LevyProcessSpec, E, n: int):
    """Minimal solution u_n = prod z_j and dominant q_n of u_{n+1} = c(n)u_n - E u_{n-1}.

    Returns
    -------
    u, q, residual : ndarray
        ``u[0..n]``, ``q[0..n]`` (q_0 = 1, q_{-1} = 0) and the relative
        residual of the recurrence for u at indices 1..n-1.
    """
    E = complex(E)
    z = remainders(spec, E, n)
    u = np.concatenate([[1.0 + 0j], np.cumprod(z)])
    cv = coefficients(spec, np.arange(1, n + 1, dtype=float))
    q = np.empty(n + 1, dtype=complex)
    q[0] = 1.0
    prev = 0.0
    for i in range(n):
        q_next = cv[i] * q[i] - E * prev
        prev = q[i]
        q[i + 1] = q_next
    res = u[2:] - (cv[:-1] * u[1:-1] - E * u[:-2])
    size = np.abs(u[2:]) + np.abs(cv[:-1] * u[1:-1]) + np.abs(E * u[:-2])
    return u, q, np.abs(res) / size


def dos_real_axis(spec: LevyProcessSpec, E: float, tol=1e-10, seed_order=2, n_max=2 ** 22) -> OmegaValue:
    """N(E) and gamma(E) directly on the real axis at E + i0.

    From ``z_n = E/(c(n) - z_{n+1})``,

        Im z_1 = prod_{j<n} (|z_j|^2 / E) * Im z_n,

    so with ``n`` the first index past the turning point
    (``c(n) < 2 sqrt(E)``) every factor is computed without cancellation
    and ``ln N`` is accurate even when N underflows.
    """
    E = float(E)
    if not E > 0:
        raise DomainError("dos_real_axis needs E > 0")
    fn = _coef_fn(spec)
    cache = _CoefCache(fn)
    k2 = 2.0 * math.sqrt(E)
    # first oscillatory index
    n_star = 1
    while cache.upto(n_star)[-1] >= k2:
        n_star *= 2
        if n_star > n_max:
            raise ConvergenceError("no oscillatory region reached", {"E": E})
    cv = cache.upto(n_star)
    n_star = int(np.argmax(cv < k2)) + 1
    depth = max(256, 4 * n_star)
    prev = None
    trace = []
    while True:
        z = _remainders_depth(cache, E + 0j, n_star, depth, seed_order)
        im_n = z[n_star - 1].imag
        if not im_n > 0:
            log_n = -math.inf
        else:
            log_n = (float(np.sum(np.log(np.abs(z[:n_star - 1]) ** 2 / E)))
                     + math.log(im_n) - math.log(math.pi))
        trace.append((depth, log_n))
        if prev is not None and abs(log_n - prev) <= tol:
            break
        if depth > n_max:
            raise ConvergenceError("real-axis recursion did not converge", {"trace": trace})
        prev = log_n
        depth *= 2
    c0 = _c0_of(spec)
    gamma = c0 / 2.0 - z[0].real if c0 is not None else math.nan
    N = math.exp(log_n)
    err = abs(log_n - prev) * N
    om = complex(gamma, -math.pi * N)
    return OmegaValue(complex(E, 0.0), om, gamma, N, "cf-real", err, log_N=log_n)


# ---------------------------------------------------------------------------
# moment bridge
# ---------------------------------------------------------------------------

def _gauss_legendre(n):
    return np.polynomial.legendre.leggauss(n)


def stieltjes_inversion_check(spec: LevyProcessSpec, a: float, b: float, n_arc=64, n_line=24,
                              tol=1e-12, eta_schedule=DEFAULT_ETAS):
    """kappa((a, b)) by two independent routes.

    Route 1 integrates the Stieltjes transform S(E) = -K(E)/E of the
    spectral measure along the upper half circle with diameter [a, b]:
    by Cauchy's theorem this equals the integral along [a, b] + i0, so
    kappa = (1/pi) Im int_arc S.  Route 2 integrates N(t)/t over [a, b]
    with N from :func:`dos_continued`.

    Returns
    -------
    (float, float)
        (contour value, N(t)/t quadrature).
    """
    if not 0 < a <= b:
        raise DomainError("need 0 < a <= b")
    if a == b:
        return 0.0, 0.0
    fn = _coef_fn(spec)
    m, r = 0.5 * (a + b), 0.5 * (b - a)
    x, w = _gauss_legendre(n_arc)
    phi = 0.5 * math.pi * (1.0 - x)  # (0, pi)
    total = 0j
    for ph, wt in zip(phi, w):
        zeta = m + r * cmath.exp(1j * ph)
        S = -evaluate_K(fn, zeta, tol=tol) / zeta
        # traverse from a (phi = pi) to b (phi = 0)
        total += -wt * 0.5 * math.pi * S * 1j * r * cmath.exp(1j * ph)
    route1 = total.imag / math.pi
    xl, wl = _gauss_legendre(n_line)
    # t = a (b/a)^s on s in (0, 1): dt/t = ln(b/a) ds
    s = 0.5 * (xl + 1.0)
    lr = math.log(b / a)
    route2 = 0.0
    for si, wi in zip(s, wl):
        t = a * math.exp(lr * si)
        route2 += 0.5 * wi * lr * dos_continued(spec, t, eta_schedule).N
    return route1, route2


def cf_series_at_zero(spec: LevyProcessSpec, order: int) -> np.ndarray:
    """Negative moments mu_k = int t^(-k-1) kappa(dt), k = 0..order.

    Formal power-series evaluation of F_1 = -K/E in powers of E through
    F_j = 1/(c(j) - E F_{j+1}); the coefficient of E^k depends only on
    c(1..k+1), so the truncation at depth order + 1 is exact.

    Raises
    ------
    ConvergenceError
        If a computed moment is not positive, which signals loss of
        precision; ``diagnostics["max_stable_order"]`` reports the
        largest order with positive moments.
    """
    if order < 0:
        raise DomainError("order must be >= 0")
    m = order + 1
    cv = _coef_fn(spec)(np.arange(1, m + 1, dtype=float))
    F = np.zeros(m)
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(m - 1, -1, -1):
            # denominator series c_j - E F
            D = np.zeros(m)
            D[0] = cv[j]
            D[1:] = -F[:-1]
            F = _series_reciprocal(D)
    mu = F
    bad = np.nonzero(~(mu > 0))[0]
    if bad.size:
        raise ConvergenceError("moment series lost positivity",
                               {"max_stable_order": int(bad[0]) - 1, "moments": mu})
    return mu


def _series_reciprocal(d):
    m = d.size
    r = np.zeros(m)
    r[0] = 1.0 / d[0]
    for k in range(1, m):
        terms = d[1:k + 1] * r[k - 1::-1][:k]
        try:
            if not np.all(np.isfinite(terms)):
                raise OverflowError
            r[k] = -math.fsum(terms) / d[0]
        except OverflowError:
            r[k:] = np.nan
            break
    return r
