"""Levy process specifications, exponents and coefficients.

A :class:`LevyProcessSpec` fixes the Levy triple of the superpotential
process ``W``.  From it follow the Levy exponent ``Lambda(theta)``, with
``E exp(i theta W(x)) = exp(x Lambda(theta))``, and the coefficients

    c(s) = -Lambda(i s) / s,

which drive the continued fraction for the complex Lyapunov exponent.
For a subordinator with drift rate ``2a`` and tail ``T(y) = m(y, inf)``
one has ``c(s) = 2a + int_0^inf exp(-s y) T(y) dy``.

Conventions
-----------
``drift_a`` is the parameter ``a`` of ``W(x) = 2 a x + (jumps)``, so the
deterministic drift rate of ``W`` is ``2a``.  The Brownian family is
``W(x) = 2 mu g x + 2 sqrt(g) B(x)``.  The scale ``p`` of the Hermite and
alpha-stable families multiplies ``Lambda`` and ``c`` linearly.
"""
from __future__ import annotations

import csv
import enum
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, special

from .errors import DomainError, InfiniteMeanError, UnsupportedError
from .specfun import gamma_ratio

__all__ = [
    "Family",
    "LevyProcessSpec",
    "InterlacingSpec",
    "JumpSampler",
    "levy_exponent",
    "coefficient_c",
    "coefficients",
    "interlace",
    "measure_tail",
    "stable_density",
    "gamma_density_and_moments",
    "sample_stable",
    "sample_gamma",
    "spec_to_dict",
    "spec_from_dict",
    "spec_to_json",
    "spec_from_json",
    "read_tail_csv",
]

QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-8


class Family(str, enum.Enum):
    PURE_DRIFT = "drift"
    BROWNIAN = "brownian"
    EXP_POISSON = "expoisson"
    HERMITE = "hermite"
    ALPHA_STABLE = "alphastable"
    GAMMA = "gamma"
    CUSTOM = "custom"


_REQUIRED = {
    Family.PURE_DRIFT: (),
    Family.BROWNIAN: ("mu",),
    Family.EXP_POISSON: ("rho", "q"),
    Family.HERMITE: ("p", "q"),
    Family.ALPHA_STABLE: ("p", "alpha"),
    Family.GAMMA: ("b",),
    Family.CUSTOM: (),
}

_ALIASES = {
    "drift": Family.PURE_DRIFT, "puredrift": Family.PURE_DRIFT,
    "brownian": Family.BROWNIAN, "browniandrift": Family.BROWNIAN,
    "expoisson": Family.EXP_POISSON, "exppoisson": Family.EXP_POISSON,
    "hermite": Family.HERMITE,
    "alphastable": Family.ALPHA_STABLE, "stable": Family.ALPHA_STABLE,
    "gamma": Family.GAMMA, "gammaprocess": Family.GAMMA,
    "custom": Family.CUSTOM, "customtabulated": Family.CUSTOM,
}


def _family(value) -> Family:
    if isinstance(value, Family):
        return value
    key = str(value).lower().replace("_", "").replace("-", "")
    try:
        return _ALIASES[key]
    except KeyError:
        raise DomainError(f"unknown process family {value!r}") from None


@dataclass(frozen=True, eq=True)
class LevyProcessSpec:
    """Levy triple of the superpotential process.

    Parameters
    ----------
    family : Family or str
        One of ``drift, brownian, expoisson, hermite, alphastable, gamma,
        custom``.
    drift_a : float
        Drift parameter ``a >= 0`` (drift rate of ``W`` is ``2a``).
        Unused by the Brownian family, whose drift is ``2 mu g``.
    gaussian_g : float
        Gaussian coefficient ``g``; nonzero only for ``brownian``.
    params : dict
        Family parameters: ``mu`` (brownian), ``rho, q`` (expoisson),
        ``p, q`` (hermite), ``p, alpha`` (alphastable), ``b`` (gamma).
    tail_y, tail_m : tuple of float
        Tabulated tail ``m(y, inf)`` for the custom family.
    """

    family: Family
    drift_a: float = 0.0
    gaussian_g: float = 0.0
    params: dict = field(default_factory=dict)
    tail_y: tuple = ()
    tail_m: tuple = ()

    def __post_init__(self):
        fam = _family(self.family)
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "params", {k: float(v) for k, v in dict(self.params).items()})
        object.__setattr__(self, "drift_a", float(self.drift_a))
        object.__setattr__(self, "gaussian_g", float(self.gaussian_g))
        object.__setattr__(self, "tail_y", tuple(float(v) for v in self.tail_y))
        object.__setattr__(self, "tail_m", tuple(float(v) for v in self.tail_m))
        missing = [k for k in _REQUIRED[fam] if k not in self.params]
        if missing:
            raise DomainError(f"{fam.value}: missing parameters {missing}")
        extra = set(self.params) - set(_REQUIRED[fam])
        if extra:
            raise DomainError(f"{fam.value}: unexpected parameters {sorted(extra)}")
        if not (math.isfinite(self.drift_a) and self.drift_a >= 0):
            raise DomainError("drift_a must be finite and >= 0")
        if fam is Family.BROWNIAN:
            if not self.gaussian_g > 0:
                raise DomainError("brownian: gaussian_g must be > 0")
            if self.drift_a != 0:
                raise DomainError("brownian: the drift is set through mu, drift_a must be 0")
            if not math.isfinite(self.params["mu"]):
                raise DomainError("brownian: mu must be finite")
        elif self.gaussian_g != 0:
            raise DomainError(f"{fam.value}: gaussian_g must be 0 for a subordinator")
        for k in _REQUIRED[fam]:
            if k == "mu":
                continue
            v = self.params[k]
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{fam.value}: parameter {k} must be > 0, got {v}")
        if fam is Family.ALPHA_STABLE and not self.params["alpha"] < 1:
            raise DomainError("alphastable: alpha must lie in (0, 1)")
        if fam is Family.CUSTOM:
            self._check_table()
        elif self.tail_y or self.tail_m:
            raise DomainError("tail tables are only accepted by the custom family")

    def _check_table(self):
        y, m = np.asarray(self.tail_y), np.asarray(self.tail_m)
        if y.size < 2 or y.size != m.size:
            raise DomainError("custom: need at least two (y, tail) rows of equal length")
        if not (np.all(np.diff(y) > 0) and y[0] > 0):
            raise DomainError("custom: tail_y must be positive and strictly increasing")
        if not (np.all(m > 0) and np.all(np.diff(m) <= 0)):
            raise DomainError("custom: tail values must be positive and non-increasing")
        if not m[-1] < m[-2]:
            raise DomainError("custom: the last table segment must decay (extrapolated tail)")

    # convenience constructors -------------------------------------------
    @classmethod
    def pure_drift(cls, a):
        return cls(Family.PURE_DRIFT, drift_a=a)

    @classmethod
    def brownian(cls, mu, g):
        return cls(Family.BROWNIAN, gaussian_g=g, params={"mu": mu})

    @classmethod
    def exp_poisson(cls, rho, q, a=0.0):
        return cls(Family.EXP_POISSON, drift_a=a, params={"rho": rho, "q": q})

    @classmethod
    def hermite(cls, p, q, a=0.0):
        return cls(Family.HERMITE, drift_a=a, params={"p": p, "q": q})

    @classmethod
    def alpha_stable(cls, p, alpha, a=0.0):
        return cls(Family.ALPHA_STABLE, drift_a=a, params={"p": p, "alpha": alpha})

    @classmethod
    def gamma_process(cls, b, a=0.0):
        return cls(Family.GAMMA, drift_a=a, params={"b": b})

    @classmethod
    def custom(cls, tail_y, tail_m, a=0.0):
        return cls(Family.CUSTOM, drift_a=a, tail_y=tuple(tail_y), tail_m=tuple(tail_m))

    # derived properties -------------------------------------------------
    @property
    def is_subordinator(self) -> bool:
        return self.family is not Family.BROWNIAN

    @property
    def has_finite_mean(self) -> bool:
        return self.family is not Family.ALPHA_STABLE

    @property
    def has_finite_measure(self) -> bool:
        return self.family in (Family.PURE_DRIFT, Family.EXP_POISSON, Family.CUSTOM)

    def __hash__(self):
        return hash((self.family, self.drift_a, self.gaussian_g,
                     tuple(sorted(self.params.items())), self.tail_y, self.tail_m))


# ---------------------------------------------------------------------------
# tabulated tails: ln T piecewise linear in y, constant below y_0,
# extrapolated with the last slope beyond y_N
# ---------------------------------------------------------------------------

def _table_slopes(spec):
    y = np.asarray(spec.tail_y)
    lm = np.log(np.asarray(spec.tail_m))
    return y, lm, np.diff(lm) / np.diff(y)


def _phi(x, d):
    """(exp(x d) - 1) / x, stable as x -> 0; complex x allowed."""
    xd = x * d
    if abs(xd) < 1e-8:
        return d * (1.0 + 0.5 * xd)
    return np.expm1(xd) / x


def _table_laplace(spec, w):
    """int_0^inf exp(w y) T(y) dy for Re w < -(last slope) (w = -s or i theta)."""
    y, lm, beta = _table_slopes(spec)
    w = complex(w)
    total = np.exp(lm[0]) * _phi(w, y[0])
    for i in range(len(beta)):
        total += np.exp(lm[i] + w * y[i]) * _phi(beta[i] + w, y[i + 1] - y[i])
    rate = beta[-1] + w
    if not rate.real < 0:
        raise DomainError("tabulated tail Laplace integral diverges at this argument")
    total += np.exp(lm[-1] + w * y[-1]) / (-rate)
    return total


def _table_tail(spec, yv):
    y, lm, beta = _table_slopes(spec)
    yv = np.asarray(yv, dtype=float)
    inner = np.interp(yv, y, lm)
    out = np.where(yv <= y[0], lm[0], inner)
    out = np.where(yv > y[-1], lm[-1] + beta[-1] * (yv - y[-1]), out)
    return np.exp(out)


def _table_small_mean(spec, eps):
    """int_0^eps y m(dy) = int_0^eps T dy - eps T(eps) for the tabulated tail."""
    y, lm, beta = _table_slopes(spec)
    ys = [0.0] + [v for v in y if v < eps] + [eps]
    val = 0.0
    for lo, hi in zip(ys[:-1], ys[1:]):
        if hi <= lo:
            continue
        tl = float(_table_tail(spec, lo if lo > 0 else y[0] * 0.5))
        if hi <= y[0]:
            val += tl * (hi - lo)
        else:
            th = float(_table_tail(spec, hi))
            slope = (math.log(th) - math.log(tl)) / (hi - lo)
            val += tl * float(np.real(_phi(slope, hi - lo)))
    return val - eps * float(_table_tail(spec, eps))


# ---------------------------------------------------------------------------
# Levy exponent and coefficients
# ---------------------------------------------------------------------------

def _lgamma_ratio_half(x):
    """ln[Gamma(x)/Gamma(x + 1/2)] for complex x."""
    return special.loggamma(x) - special.loggamma(x + 0.5)


def levy_exponent(spec: LevyProcessSpec, theta) -> complex:
    """Levy exponent Lambda(theta) of ``W``.

    Raises
    ------
    DomainError
        If ``theta`` lies outside the strip where the exponent is
        analytic: ``Im theta > -q`` (expoisson, hermite), ``Im theta > -b``
        (gamma) and ``Im theta >= 0`` (alphastable, custom).
    """
    th = complex(theta)
    fam = spec.family
    pr = spec.params
    drift = 2j * spec.drift_a * th
    if fam is Family.PURE_DRIFT:
        return drift
    if fam is Family.BROWNIAN:
        g = spec.gaussian_g
        return 2j * g * pr["mu"] * th - 2.0 * g * th * th
    if fam is Family.EXP_POISSON:
        if not th.imag > -pr["q"]:
            raise DomainError("expoisson exponent requires Im theta > -q")
        return drift + pr["rho"] * 1j * th / (pr["q"] - 1j * th)
    if fam is Family.HERMITE:
        if not th.imag > -pr["q"]:
            raise DomainError("hermite exponent requires Im theta > -q")
        if th == 0:
            return drift
        x = (pr["q"] - 1j * th) / 2.0
        return drift + pr["p"] * 1j * th * np.exp(_lgamma_ratio_half(x))
    if fam is Family.ALPHA_STABLE:
        if th.imag < 0:
            raise DomainError("alphastable exponent requires Im theta >= 0")
        return drift - pr["p"] * (-1j * th) ** pr["alpha"]
    if fam is Family.GAMMA:
        if not th.imag > -pr["b"]:
            raise DomainError("gamma exponent requires Im theta > -b")
        return drift - np.log(1.0 - 1j * th / pr["b"])
    if fam is Family.CUSTOM:
        if th.imag < 0:
            raise DomainError("custom exponent requires Im theta >= 0")
        # integration by parts: int (e^{i th y} - 1) m(dy) = i th int e^{i th y} T(y) dy
        if th == 0:
            return drift
        return drift + 1j * th * _table_laplace(spec, 1j * th)
    raise UnsupportedError(f"no exponent for family {fam}")  # pragma: no cover


def coefficients(spec: LevyProcessSpec, s) -> np.ndarray:
    """Vectorised c(s) for an array of ``s >= 0``."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise DomainError("c(s) needs s >= 0")
    fam = spec.family
    pr = spec.params
    base = 2.0 * spec.drift_a
    if fam is Family.PURE_DRIFT:
        return np.full_like(s, base)
    if fam is Family.BROWNIAN:
        return 2.0 * spec.gaussian_g * (pr["mu"] - s)
    if fam is Family.EXP_POISSON:
        return base + pr["rho"] / (pr["q"] + s)
    if fam is Family.HERMITE:
        # Gamma(x)/Gamma(x+1/2) through the Pochhammer symbol, stable for large x
        return base + pr["p"] * gamma_ratio((s + pr["q"]) / 2.0, 0.5)
    if fam is Family.ALPHA_STABLE:
        if np.any(s == 0):
            raise InfiniteMeanError("alphastable has infinite mean: c(0) does not exist")
        return base + pr["p"] * s ** (pr["alpha"] - 1.0)
    if fam is Family.GAMMA:
        b = pr["b"]
        with np.errstate(invalid="ignore", divide="ignore"):
            val = np.where(s > 0, np.log1p(s / b) / np.where(s > 0, s, 1.0), 1.0 / b)
        return base + val
    if fam is Family.CUSTOM:
        flat = [base + float(np.real(_table_laplace(spec, -v))) for v in s.ravel()]
        return np.asarray(flat).reshape(s.shape)
    raise UnsupportedError(f"no coefficients for family {fam}")  # pragma: no cover


def coefficient_c(spec: LevyProcessSpec, s: float) -> float:
    """Continued-fraction coefficient c(s) = -Lambda(i s)/s, with c(0) = E W(1).

    Raises
    ------
    InfiniteMeanError
        For ``s = 0`` when ``E W(1)`` is infinite (alpha-stable).
    """
    return float(coefficients(spec, np.asarray([s], dtype=float))[0])


# ---------------------------------------------------------------------------
# Levy measure tails and interlacing
# ---------------------------------------------------------------------------

def measure_tail(spec: LevyProcessSpec, y):
    """Tail m(y, inf) of the Levy measure (scalar or array ``y > 0``)."""
    yv = np.asarray(y, dtype=float)
    fam = spec.family
    pr = spec.params
    if fam in (Family.PURE_DRIFT, Family.BROWNIAN):
        out = np.zeros_like(yv)
    elif fam is Family.EXP_POISSON:
        out = pr["rho"] * np.exp(-pr["q"] * np.maximum(yv, 0.0))
    elif fam is Family.HERMITE:
        with np.errstate(divide="ignore"):
            out = (2.0 * pr["p"] / math.sqrt(math.pi)) * np.exp(-pr["q"] * yv) / np.sqrt(-np.expm1(-2.0 * yv))
    elif fam is Family.ALPHA_STABLE:
        with np.errstate(divide="ignore"):
            out = pr["p"] * yv ** (-pr["alpha"]) / special.gamma(1.0 - pr["alpha"])
    elif fam is Family.GAMMA:
        out = special.exp1(pr["b"] * yv)
    elif fam is Family.CUSTOM:
        out = _table_tail(spec, yv)
    else:  # pragma: no cover
        raise UnsupportedError(str(fam))
    return float(out) if np.ndim(out) == 0 else out


def _small_jump_mean(spec, eps):
    """int_0^eps y m(dy)."""
    fam = spec.family
    pr = spec.params
    if fam is Family.PURE_DRIFT:
        return 0.0
    if fam is Family.EXP_POISSON:
        q = pr["q"]
        # int_0^eps y rho q e^{-q y} dy
        return pr["rho"] * (-math.expm1(-q * eps) / q - eps * math.exp(-q * eps))
    if fam is Family.ALPHA_STABLE:
        al = pr["alpha"]
        return pr["p"] * al * eps ** (1 - al) / ((1 - al) * special.gamma(1 - al))
    if fam is Family.GAMMA:
        b = pr["b"]
        return -math.expm1(-b * eps) / b
    if fam is Family.HERMITE:
        # int_0^eps T dy with y = t^2 removes the y^{-1/2} singularity
        val, _ = integrate.quad(lambda t: 2.0 * t * measure_tail(spec, t * t), 0.0, math.sqrt(eps),
                                epsabs=1e-15, epsrel=1e-13)
        return val - eps * measure_tail(spec, eps)
    if fam is Family.CUSTOM:
        return _table_small_mean(spec, eps)
    raise UnsupportedError(str(fam))  # pragma: no cover


@dataclass(frozen=True)
class JumpSampler:
    """Inverse-CDF sampler of the normalised restriction of m to (eps, inf).

    The tail ratio ``u = T(y)/T(eps)`` is uniform on (0, 1].  Families with
    an explicit inverse use it; the others interpolate ``ln y`` against
    ``ln u`` on a fine table.
    """

    spec: LevyProcessSpec
    epsilon: float
    log_u: np.ndarray = field(repr=False, default=None)
    log_y: np.ndarray = field(repr=False, default=None)

    def __call__(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.sample(rng, size)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = 1.0 - rng.random(size)  # in (0, 1]
        return self.ppf(u)

    def ppf(self, u):
        """Jump size with tail ratio ``u`` (``u=1`` gives ``epsilon``)."""
        u = np.asarray(u, dtype=float)
        fam = self.spec.family
        pr = self.spec.params
        eps = self.epsilon
        if fam is Family.EXP_POISSON:
            return eps - np.log(u) / pr["q"]
        if fam is Family.ALPHA_STABLE:
            return eps * u ** (-1.0 / pr["alpha"])
        lu = np.log(u)
        # np.interp needs increasing abscissae: log_u is stored decreasing
        out = np.interp(-lu, -self.log_u, self.log_y)
        beyond = lu < self.log_u[-1]
        if np.any(beyond):
            slope = (self.log_y[-1] - self.log_y[-2]) / (self.log_u[-1] - self.log_u[-2])
            out = np.where(beyond, self.log_y[-1] + slope * (lu - self.log_u[-1]), out)
        return np.exp(out)

    @classmethod
    def build(cls, spec, eps, n_table=4000):
        fam = spec.family
        if fam in (Family.EXP_POISSON, Family.ALPHA_STABLE):
            return cls(spec, eps)
        t_eps = measure_tail(spec, eps)
        # extend the table until the tail ratio is below 1e-18
        y_hi = max(eps * 2.0, 1.0)
        while measure_tail(spec, y_hi) / t_eps > 1e-18:
            y_hi *= 2.0
        ly = np.linspace(math.log(eps), math.log(y_hi), n_table)
        lu = np.log(np.asarray(measure_tail(spec, np.exp(ly))) / t_eps)
        lu[0] = 0.0
        # enforce strict monotonicity for interpolation
        keep = np.concatenate([[True], np.diff(lu) < 0])
        return cls(spec, eps, lu[keep], ly[keep])


@dataclass(frozen=True)
class InterlacingSpec:
    """Interlacing approximation of a subordinator at truncation ``epsilon``.

    Jumps smaller than ``epsilon`` are replaced by their mean, which is
    folded into the drift.  ``effective_drift`` is expressed in the same
    units as ``drift_a``: the deterministic drift rate of the
    approximating process is ``2 * effective_drift``.

    Attributes
    ----------
    effective_drift : float
        ``a + (1/2) int_0^eps y m(dy)``.
    jump_rate : float
        ``m(eps, inf)``; zero for a pure drift.
    jump_sampler : JumpSampler or None
        Normalised sampler of the retained jumps.
    epsilon : float
    """

    effective_drift: float
    jump_rate: float
    jump_sampler: JumpSampler | None
    epsilon: float
    spec: LevyProcessSpec = field(repr=False, default=None)

    @property
    def w_drift(self) -> float:
        """Deterministic drift rate of W between jumps."""
        return 2.0 * self.effective_drift

    def exponent(self, theta) -> complex:
        """Levy exponent of the interlacing process (for Im theta >= 0)."""
        th = complex(theta)
        if th.imag < 0:
            raise DomainError("interlacing exponent evaluated for Im theta >= 0 only")
        val = 1j * th * self.w_drift
        if self.jump_rate == 0 or th == 0:
            return val
        spec, eps = self.spec, self.epsilon
        # int_eps^inf (e^{i th y} - 1) m(dy) = (e^{i th eps} - 1) T(eps) + i th int_eps^inf e^{i th y} T dy
        damp = th.imag
        f = lambda y: measure_tail(spec, y) * math.exp(-damp * (y - eps))
        if th.real == 0:
            re, _ = integrate.quad(f, eps, np.inf, epsabs=1e-14, epsrel=1e-12, limit=400)
            im = 0.0
        else:
            w = th.real
            # oscillatory Fourier integrals on [eps, inf) via QAWF after shifting
            g = lambda t: f(t + eps)
            with warnings.catch_warnings():
                # QAWF flags cycles where the tail is already below epsabs
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                c, _ = integrate.quad(g, 0.0, np.inf, weight="cos", wvar=w, epsabs=1e-14, limlst=200)
                s, _ = integrate.quad(g, 0.0, np.inf, weight="sin", wvar=w, epsabs=1e-14, limlst=200)
            re, im = c, s
        shift = np.exp(1j * th * eps)
        lap = shift * complex(re, im)
        return val + (np.exp(1j * th * eps) - 1.0) * self.jump_rate + 1j * th * lap


def interlace(spec: LevyProcessSpec, eps: float) -> InterlacingSpec:
    """Truncate the jumps of a subordinator below ``eps``.

    Raises
    ------
    UnsupportedError
        For non-subordinators (the Brownian family).
    """
    if not spec.is_subordinator:
        raise UnsupportedError("interlacing is defined for subordinators only")
    if not eps > 0:
        raise DomainError("interlacing needs eps > 0")
    if spec.family is Family.PURE_DRIFT:
        return InterlacingSpec(spec.drift_a, 0.0, None, eps, spec)
    rate = measure_tail(spec, eps)
    if not math.isfinite(rate):
        raise DomainError("m(eps, inf) is infinite")
    a_eff = spec.drift_a + 0.5 * _small_jump_mean(spec, eps)
    return InterlacingSpec(a_eff, float(rate), JumpSampler.build(spec, eps), eps, spec)


# ---------------------------------------------------------------------------
# Stable and gamma laws
# ---------------------------------------------------------------------------

def _kanter_a(alpha, phi):
    s = math.sin(alpha * phi)
    return (s / math.sin(phi)) ** (1.0 / (1.0 - alpha)) * math.sin((1.0 - alpha) * phi) / s


def _stable_left_tail(alpha, u, epsrel=1e-12):
    """Zolotarev's positive integral form, used deep in the left tail.

    f(u) = a/(1-a)/pi u^{-1/(1-a)} int_0^pi A(phi) exp(-z A(phi)) dphi with
    z = u^{-a/(1-a)} and A the Kanter function.  The integrand is positive,
    so there is no cancellation where the contour forms lose all digits.
    """
    z = u ** (-alpha / (1.0 - alpha))
    logc = math.log(alpha / (1.0 - alpha) / math.pi) - math.log(u) / (1.0 - alpha)
    a0 = (1.0 - alpha) * alpha ** (alpha / (1.0 - alpha))

    def h(phi):
        a = _kanter_a(alpha, phi) if phi > 1e-12 else a0
        if not math.isfinite(a):
            return 0.0
        return math.exp(math.log(a) + logc - z * a)

    # the integrand concentrates near phi = 0 at width ~ 1/sqrt(z)
    w = min(math.pi / 2, 4.0 / math.sqrt(z))
    pts = [w / 4, w, min(3 * w, 3.0)]
    val, err = integrate.quad(h, 0.0, math.pi, epsabs=0.0, epsrel=epsrel, limit=400,
                              points=sorted(set(pts)))
    return val, err


def _stable_unit_density(alpha, u, epsrel=1e-12):
    """Density of S with E exp(-lam S) = exp(-lam^alpha), by contour integration.

    Folding the Bromwich contour onto the rays arg(lam) = +-beta gives

        f(u) = (1/pi) Im[ e^{i beta} int_0^inf exp(u r e^{i beta} - r^alpha e^{i alpha beta}) dr ].

    With beta = pi this is the branch-cut integral
    (1/pi) int exp(-u r - r^a cos(pi a)) sin(r^a sin(pi a)) dr, used for
    alpha <= 1/2.  For alpha > 1/2 the factor exp(-r^a cos(pi a)) grows,
    so the rays are tilted to beta in (pi/2, pi/(2 alpha)) where both
    exponential factors decay.  Where z = u^{-a/(1-a)} A(0) > 3 the
    density is exponentially small and both forms cancel badly, so the
    non-oscillatory left-tail representation takes over.
    """
    a0 = (1.0 - alpha) * alpha ** (alpha / (1.0 - alpha))
    if u ** (-alpha / (1.0 - alpha)) * a0 > 3.0:
        return _stable_left_tail(alpha, u, epsrel)
    return _stable_contour(alpha, u, epsrel)


def _stable_contour(alpha, u, epsrel=1e-12):
    if alpha <= 0.5:
        ca, sa = math.cos(math.pi * alpha), math.sin(math.pi * alpha)
        ia = 1.0 / alpha

        def f(v):
            # v = r^alpha
            t = v ** ia
            return math.exp(-u * t - v * ca) * math.sin(v * sa) * t / v if v > 0 else 0.0

        v_end = 60.0 * u ** (-alpha) + (60.0 / ca if ca > 1e-3 else 60.0)
        v_end = min(v_end, (100.0 / u) ** alpha)
        n_osc = int(min(v_end * sa / math.pi, 2000))
        edges = [0.0] + [k * math.pi / sa for k in range(1, n_osc + 1) if k * math.pi / sa < v_end] + [v_end]
        vals, errs = [], 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            val, e = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=epsrel, limit=200)
            vals.append(val / alpha)
            errs += e / alpha
        return math.fsum(vals) / math.pi, errs / math.pi

    beta = 0.5 * (math.pi / 2 + math.pi / (2 * alpha))
    eb = complex(math.cos(beta), math.sin(beta))
    eab = complex(math.cos(alpha * beta), math.sin(alpha * beta))
    decay_lin = -u * eb.real
    decay_pow = eab.real
    r_end = min(60.0 / decay_lin, (60.0 / decay_pow) ** (1.0 / alpha))

    def g(r):
        return (eb * np.exp(u * r * eb - r ** alpha * eab)).imag

    # split at roughly one oscillation period of the phase
    freq = u * eb.imag + eab.imag * max(r_end, 1.0) ** (alpha - 1.0)
    n_pieces = int(min(max(freq * r_end / math.pi, 1.0), 4000))
    edges = np.linspace(0.0, r_end, n_pieces + 1)
    vals, errs = [], 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(g, lo, hi, epsabs=0.0, epsrel=epsrel, limit=200)
        vals.append(val)
        errs += e
    return math.fsum(vals) / math.pi, errs / math.pi


def stable_density(alpha: float, u, x: float = 1.0, p: float = 1.0, full_output=False):
    """Density of W(x) for the alpha-stable subordinator, Lambda = -p(-i theta)^alpha.

    Uses the scaling ``W(x) = (p x)^(1/alpha) S`` with ``S`` the unit law.

    Returns
    -------
    float or ndarray
        The density at ``u`` (zero for ``u <= 0``); with ``full_output``
        a pair ``(density, abs_error_estimate)``.
    """
    if not 0 < alpha < 1:
        raise DomainError("stable_density needs 0 < alpha < 1")
    if not (x > 0 and p > 0):
        raise DomainError("stable_density needs x > 0 and p > 0")
    scale = (p * x) ** (1.0 / alpha)
    uu = np.atleast_1d(np.asarray(u, dtype=float))
    dens = np.zeros_like(uu)
    err = np.zeros_like(uu)
    with warnings.catch_warnings():
        # roundoff warnings on the far pieces; the error estimate is returned
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for i, ui in enumerate(uu):
            if ui > 0:
                d, e = _stable_unit_density(alpha, ui / scale)
                # cancellation can leave a tiny negative value deep in the left tail
                dens[i], err[i] = max(d, 0.0) / scale, e / scale
    if np.ndim(u) == 0:
        dens, err = float(dens[0]), float(err[0])
    return (dens, err) if full_output else dens


def gamma_density_and_moments(b: float, x: float, u: float, n: int):
    """Density at ``u`` and n-th moment of W(x) for the gamma subordinator.

    ``W(x) ~ Gamma(shape=x, rate=b)``: density ``b^x u^(x-1) e^(-b u)/Gamma(x)``
    and moments ``Gamma(n + x)/Gamma(x) b^(-n)``.
    """
    if not (b > 0 and x > 0):
        raise DomainError("gamma law needs b > 0 and x > 0")
    if u > 0:
        dens = math.exp(x * math.log(b) + (x - 1) * math.log(u) - b * u - math.lgamma(x))
    elif u == 0 and x == 1:
        dens = b
    elif u == 0 and x < 1:
        dens = math.inf
    else:
        dens = 0.0
    mom = math.exp(math.lgamma(n + x) - math.lgamma(x) - n * math.log(b))
    return dens, mom


def sample_stable(alpha: float, size, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Positive alpha-stable variates with E exp(-lam S) = exp(-(scale lam)^alpha).

    Kanter's representation:
    S = sin(a U) / sin(U)^(1/a) * (sin((1-a) U) / E)^((1-a)/a),
    with U uniform on (0, pi) and E standard exponential.
    """
    u = math.pi * rng.random(size)
    e = rng.standard_exponential(size)
    a = alpha
    s = np.sin(a * u) / np.sin(u) ** (1.0 / a) * (np.sin((1 - a) * u) / e) ** ((1 - a) / a)
    return scale * s


def sample_gamma(b: float, x: float, size, rng: np.random.Generator) -> np.ndarray:
    """Increments W(x) of the gamma subordinator (shape x, rate b)."""
    return rng.gamma(x, 1.0 / b, size)


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------

def spec_to_dict(spec: LevyProcessSpec) -> dict:
    """JSON-ready ``{"family": ..., "params": {...}}``.

    ``params`` holds the family parameters plus ``a`` (drift) for
    subordinators, ``g`` for the Brownian family and ``tail_y``/``tail_m``
    lists for the custom family.
    """
    params = dict(spec.params)
    if spec.family is Family.BROWNIAN:
        params["g"] = spec.gaussian_g
    else:
        params["a"] = spec.drift_a
    if spec.family is Family.CUSTOM:
        params["tail_y"] = list(spec.tail_y)
        params["tail_m"] = list(spec.tail_m)
    return {"family": spec.family.value, "params": params}


def read_tail_csv(path) -> tuple[tuple, tuple]:
    """Two-column CSV ``y, tail``; a non-numeric first row is treated as header."""
    ys, ms = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                y, m = float(row[0]), float(row[1])
            except ValueError:
                if ys:
                    raise DomainError(f"malformed tail row {row!r}") from None
                continue
            ys.append(y)
            ms.append(m)
    return tuple(ys), tuple(ms)


def spec_from_dict(d: dict) -> LevyProcessSpec:
    if "family" not in d:
        raise DomainError("process spec needs a 'family' key")
    fam = _family(d["family"])
    params = dict(d.get("params", {}))
    a = float(params.pop("a", 0.0))
    g = float(params.pop("g", 0.0))
    tail_y = params.pop("tail_y", ())
    tail_m = params.pop("tail_m", ())
    if "tail_csv" in params:
        tail_y, tail_m = read_tail_csv(params.pop("tail_csv"))
    return LevyProcessSpec(fam, drift_a=a, gaussian_g=g, params=params,
                           tail_y=tuple(tail_y), tail_m=tuple(tail_m))


def spec_to_json(spec: LevyProcessSpec) -> str:
    return json.dumps(spec_to_dict(spec), sort_keys=True)


def spec_from_json(text: str) -> LevyProcessSpec:
    return spec_from_dict(json.loads(text))
