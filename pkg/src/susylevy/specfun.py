"""Special functions used by the solvable models.

Gamma and Bessel functions are thin wrappers over :mod:`scipy.special`
that add domain checks.  The parabolic cylinder function of negative
order (at real or purely imaginary argument) and the Gauss
hypergeometric function at argument -1 are implemented here, because
the models need them for complex parameters and for arguments where
scipy offers no routine.

Every evaluator accepts ``full_output=True`` and then returns a
:class:`SpecFunResult` instead of the bare value.
"""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import BranchCutError, ConvergenceError, DomainError, UnsupportedError

__all__ = [
    "SpecFunResult",
    "gamma_fn",
    "loggamma_fn",
    "beta_fn",
    "gamma_ratio",
    "bessel_k_i",
    "hankel1",
    "pcf_d",
    "pcf_switch_radius",
    "hyp2f1_at_minus1",
]


@dataclass(frozen=True)
class SpecFunResult:
    value: complex
    est_error: float
    method_used: str  # series | recurrence | integral | asymptotic | closed-form


def _finish(value, err, method, full_output):
    if full_output:
        return SpecFunResult(value, float(err), method)
    return value


def _is_nonpositive_integer(z) -> bool:
    z = complex(z)
    return z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real)


# ---------------------------------------------------------------------------
# Gamma / Beta
# ---------------------------------------------------------------------------

def gamma_fn(z, full_output=False):
    """Euler Gamma function for complex ``z``.

    Raises
    ------
    DomainError
        At the poles z = 0, -1, -2, ...
    """
    if _is_nonpositive_integer(z):
        raise DomainError(f"Gamma has a pole at z={z}")
    if isinstance(z, complex) or np.iscomplexobj(z):
        val = complex(special.gamma(complex(z)))
    else:
        val = float(special.gamma(float(z)))
    return _finish(val, abs(val) * 4e-16, "closed-form", full_output)


def loggamma_fn(z):
    """Principal branch of log Gamma, complex-safe."""
    if _is_nonpositive_integer(z):
        raise DomainError(f"Gamma has a pole at z={z}")
    return complex(special.loggamma(complex(z)))


def beta_fn(a, b, full_output=False):
    """Euler Beta function B(a, b); complex arguments allowed."""
    if _is_nonpositive_integer(a) or _is_nonpositive_integer(b):
        raise DomainError(f"Beta undefined at a={a}, b={b}")
    if not (np.iscomplexobj(a) or np.iscomplexobj(b) or isinstance(a, complex) or isinstance(b, complex)):
        a, b = float(a), float(b)
        if a > 0 and b > 0:
            val = float(special.beta(a, b))
            return _finish(val, abs(val) * 1e-15, "closed-form", full_output)
    if _is_nonpositive_integer(complex(a) + complex(b)):
        val = 0.0
    else:
        val = cmath.exp(loggamma_fn(a) + loggamma_fn(b) - loggamma_fn(complex(a) + complex(b)))
    return _finish(val, abs(val) * 1e-14, "closed-form", full_output)


# B_{2k} / (2k (2k - 1)) for the Stirling series
_STIRLING = (1 / 12, -1 / 360, 1 / 1260, -1 / 1680, 1 / 1188, -691 / 360360, 1 / 156, -3617 / 122400)


def _log_gamma_ratio_large(x, d):
    """ln Gamma(x + d) - ln Gamma(x) for x >= 8 from the Stirling series."""
    y = x + d
    val = (x - 0.5) * np.log1p(d / x) + d * np.log(y) - d
    for k, b in enumerate(_STIRLING, start=1):
        val = val + b * (y ** (1 - 2 * k) - x ** (1 - 2 * k))
    return val


def gamma_ratio(x, d):
    """Gamma(x) / Gamma(x + d) for real x > 0 and x + d > 0, accurate for large x."""
    x = np.asarray(x, dtype=float)
    big = x >= 8.0
    with np.errstate(all="ignore"):
        small = 1.0 / special.poch(np.where(big, 1.0, x), d)
        large = np.exp(-_log_gamma_ratio_large(np.where(big, x, 8.0), d))
    out = np.where(big, large, small)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Bessel
# ---------------------------------------------------------------------------

def bessel_k_i(nu, z, full_output=False):
    """Modified Bessel functions (K_nu(z), I_nu(z)) for |arg z| < pi."""
    z = complex(z)
    if z == 0:
        raise DomainError("modified Bessel functions evaluated at z=0")
    if z.imag == 0.0 and z.real < 0:
        raise BranchCutError("z lies on the branch cut of K_nu (negative real axis)")
    k = complex(special.kv(nu, z))
    i = complex(special.iv(nu, z))
    if not (cmath.isfinite(k) and cmath.isfinite(i)):
        raise ConvergenceError("Bessel evaluation overflowed", {"nu": nu, "z": z})
    if full_output:
        return (SpecFunResult(k, abs(k) * 1e-14, "closed-form"),
                SpecFunResult(i, abs(i) * 1e-14, "closed-form"))
    return k, i


def hankel1(nu, x, full_output=False):
    """Hankel function of the first kind H^(1)_nu(x) = J_nu + i Y_nu, x > 0."""
    if not x > 0:
        raise DomainError("hankel1 requires a positive real argument")
    val = complex(special.hankel1(nu, float(x)))
    return _finish(val, abs(val) * 1e-14, "closed-form", full_output)


# ---------------------------------------------------------------------------
# Parabolic cylinder function D_nu
# ---------------------------------------------------------------------------

_QUAD_RTOL = 1e-13


def pcf_switch_radius(nu) -> float:
    """|z| beyond which the asymptotic expansion is used in ``auto`` mode."""
    return 12.0 + 1.5 * abs(nu)


def _rotation_angle(z: complex) -> float:
    # contour t -> exp(-i phi) s keeps both the Gaussian and the linear
    # term of the exponent decaying when z is purely imaginary
    if z.imag == 0.0:
        return 0.0
    return math.copysign(math.pi / 8.0, z.imag)


def _pcf_scaled_integral(q: float, z: complex):
    """exp(z^2/4) D_{-q}(z) = (1/Gamma(q)) int_0^inf t^(q-1) exp(-t^2/2 - z t) dt."""
    phi = _rotation_angle(z)
    rot = cmath.exp(-1j * phi)
    rot2 = rot * rot
    zr = z * rot
    if q < 1.0:
        # t = w^(1/q) removes the t^(q-1) singularity
        inv_q = 1.0 / q
        pref = cmath.exp(-1j * phi * q) / q

        def f(w):
            s = w ** inv_q
            return cmath.exp(-0.5 * rot2 * s * s - zr * s)

        def to_w(s):
            return s ** q
    else:
        pref = cmath.exp(-1j * phi * q)

        def f(s):
            if s == 0.0:
                return 1.0 + 0j if q == 1.0 else 0j
            return cmath.exp((q - 1.0) * math.log(s) - 0.5 * rot2 * s * s - zr * s)

        def to_w(s):
            return s

    # decay scales of |integrand| in s
    c2 = math.cos(2 * phi) / 2.0
    lin = zr.real
    s_mass = max(math.sqrt(max(q - 1.0, 0.0)), 0.0)
    if lin > 0:
        s_mass = min(s_mass, (q - 1.0) / lin) if q > 1 else 0.0
    s_gauss = math.sqrt(80.0 / c2) + s_mass
    s_end = s_gauss
    if lin > 0:
        s_end = min(s_end, s_mass + (80.0 + max(q, 1.0) * 5.0) / lin)
    if lin < 0:
        # growing linear term: shift the Gaussian window to its peak
        s_end = -lin / (2 * c2) + s_gauss
    scale = 1.0 / max(abs(z), 1.0)
    pts = sorted({p for p in (scale, 4 * scale, s_mass, s_mass + 3.0, 0.5 * s_end) if 0 < p < s_end})
    edges = [0.0] + pts + [s_end]
    total = 0j
    err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings():
            # quadpack flags roundoff once it is at machine precision
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, e = integrate.quad(f, to_w(lo), to_w(hi), complex_func=True,
                                    epsabs=0.0, epsrel=_QUAD_RTOL, limit=400)
        total += val
        err += abs(e)
    g = special.gamma(q)
    return pref * total / g, err / g


def _pcf_scaled_asymptotic(nu: float, z: complex):
    """exp(z^2/4) D_nu(z) ~ z^nu sum_k (-1)^k (-nu)_{2k} / (k! (2 z^2)^k)."""
    inv = 1.0 / (2.0 * z * z)
    term = 1.0 + 0j
    re_terms, im_terms = [1.0], [0.0]
    best = abs(term)
    for k in range(200):
        term = -term * (2 * k - nu) * (2 * k + 1 - nu) / (k + 1) * inv
        a = abs(term)
        if a > best:
            break
        best = a
        re_terms.append(term.real)
        im_terms.append(term.imag)
        if a < 1e-17:
            break
    s = complex(math.fsum(re_terms), math.fsum(im_terms))
    zn = cmath.exp(nu * cmath.log(z))
    return zn * s, abs(zn) * best


def _pcf_scaled_negative(q, z, method):
    if method == "asymptotic":
        return _pcf_scaled_asymptotic(-q, z) + ("asymptotic",)
    if method == "auto" and abs(z) >= pcf_switch_radius(-q):
        v, e = _pcf_scaled_asymptotic(-q, z)
        if e <= 1e-14 * abs(v):
            return v, e, "asymptotic"
    return _pcf_scaled_integral(q, z) + ("integral",)


def pcf_d(nu, z, *, scaled=False, method="auto", full_output=False):
    """Parabolic cylinder function D_nu(z) for real or purely imaginary ``z``.

    Parameters
    ----------
    nu : float
        Order.  Negative orders use the integral representation (or the
        large-|z| asymptotic series); non-negative orders are reached by
        the upward three-term recurrence.
    z : float or complex
        Argument; must be real or purely imaginary.
    scaled : bool
        Return ``exp(z**2/4) * D_nu(z)``, which stays O(|z|**nu) and is
        the safe quantity for ratios and for large |z|.
    method : {"auto", "integral", "asymptotic"}
        Force a branch for negative orders (used by crossover tests).

    Raises
    ------
    UnsupportedError
        For general complex ``z``.
    """
    zc = complex(z)
    if zc.real != 0.0 and zc.imag != 0.0:
        raise UnsupportedError("pcf_d supports real or purely imaginary arguments only")
    if method not in ("auto", "integral", "asymptotic"):
        raise ValueError(f"unknown method {method!r}")
    nu = float(nu)
    if nu < 0:
        val, err, how = _pcf_scaled_negative(-nu, zc, method)
    elif nu == 0.0:
        val, err, how = 1.0 + 0j, 0.0, "closed-form"
    else:
        n_up = math.floor(nu)
        frac = nu - n_up
        if frac == 0.0:
            lo, e1, _ = _pcf_scaled_negative(1.0, zc, method)
            hi, e2 = 1.0 + 0j, 0.0
            order = 0.0
        else:
            lo, e1, _ = _pcf_scaled_negative(2.0 - frac, zc, method)
            hi, e2, _ = _pcf_scaled_negative(1.0 - frac, zc, method)
            order = frac - 1.0
        # D_{m+1} = z D_m - m D_{m-1}
        while order < nu - 0.5:
            lo, hi = hi, zc * hi - order * lo
            order += 1.0
        val, err, how = hi, (e1 + e2) * (1 + abs(zc)) ** n_up, "recurrence"
    if not scaled:
        f = cmath.exp(-zc * zc / 4.0)
        val, err = val * f, err * abs(f)
    if zc.imag == 0.0 and not isinstance(z, complex):
        val = val.real
    return _finish(val, err, how, full_output)


# ---------------------------------------------------------------------------
# Gauss hypergeometric function at -1
# ---------------------------------------------------------------------------

def hyp2f1_at_minus1(a, b, c, full_output=False, max_terms=100000):
    """2F1(a, b; c; -1), complex parameters allowed.

    Pfaff's transformation maps the argument to 1/2,
    2F1(a, b; c; -1) = 2^(-a) 2F1(a, c - b; c; 1/2),
    and the resulting series converges geometrically.
    """
    if _is_nonpositive_integer(c):
        raise DomainError(f"2F1 undefined for c={c}")
    a, cb, c = complex(a), complex(c) - complex(b), complex(c)
    term = 1.0 + 0j
    re_terms, im_terms = [1.0], [0.0]
    k = 0
    while True:
        term *= (a + k) * (cb + k) / ((c + k) * (k + 1)) * 0.5
        k += 1
        re_terms.append(term.real)
        im_terms.append(term.imag)
        if term == 0 or (k > 5 and abs(term) < 1e-17 * abs(complex(math.fsum(re_terms), math.fsum(im_terms)))):
            break
        if k >= max_terms:
            raise ConvergenceError("2F1 series did not converge", {"a": a, "b": b, "c": c})
    s = complex(math.fsum(re_terms), math.fsum(im_terms)) * cmath.exp(-a * math.log(2.0))
    if s.imag == 0.0 and a.imag == 0.0 and cb.imag == 0.0 and c.imag == 0.0:
        s = s.real
    return _finish(s, abs(s) * 1e-15 * math.sqrt(k), "series", full_output)
