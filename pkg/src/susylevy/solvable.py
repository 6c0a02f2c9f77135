"""Closed-form complex Lyapunov exponents for the solvable models.

Four models admit explicit solutions of the Mellin difference equation:

* ``Drift``      -- W(x) = 2 a x;
* ``Brownian``   -- W(x) = 2 mu g x + 2 sqrt(g) B(x) (modified Bessel / Hankel);
* ``ExpPoisson`` -- compound Poisson with rate rho and Exp(q) jumps
  (Gauss hypergeometric at -1);
* ``Hermite``    -- the subordinator with c(s) = p Gamma((s+q)/2)/Gamma((s+q+1)/2)
  (parabolic cylinder functions).

These serve as oracles for the continued-fraction and Monte Carlo routes.
Energies on the spectrum are read as ``E + i0``.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import DomainError, UnsupportedError
from .levy_core import Family, LevyProcessSpec
from .specfun import bessel_k_i, hankel1, hyp2f1_at_minus1, loggamma_fn, pcf_d

__all__ = [
    "ModelKind",
    "ClosedFormModel",
    "omega_closed",
    "dos_closed",
    "invariant_density",
    "mellin_closed",
    "gamma_infinity_hermite",
    "hermite_low_energy_log_dos",
]


class ModelKind(str, enum.Enum):
    DRIFT = "drift"
    BROWNIAN = "brownian"
    EXP_POISSON = "expoisson"
    HERMITE = "hermite"


_PARAMS = {
    ModelKind.DRIFT: ("a",),
    ModelKind.BROWNIAN: ("mu", "g"),
    ModelKind.EXP_POISSON: ("rho", "q"),
    ModelKind.HERMITE: ("p", "q"),
}


@dataclass(frozen=True)
class ClosedFormModel:
    """A solvable model and its parameters.

    ``params`` keys: ``a`` (drift), ``mu, g`` (brownian), ``rho, q``
    (expoisson), ``p, q`` (hermite).  All must be positive except ``mu``
    (any sign) and ``a`` (non-negative).
    """

    kind: ModelKind
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        kind = ModelKind(self.kind)
        object.__setattr__(self, "kind", kind)
        pr = {k: float(v) for k, v in dict(self.params).items()}
        object.__setattr__(self, "params", pr)
        if set(pr) != set(_PARAMS[kind]):
            raise DomainError(f"{kind.value} needs parameters {_PARAMS[kind]}, got {sorted(pr)}")
        for k, v in pr.items():
            if not math.isfinite(v):
                raise DomainError(f"parameter {k} must be finite")
            if k == "a" and v < 0:
                raise DomainError("drift a must be >= 0")
            if k in ("g", "rho", "q", "p") and not v > 0:
                raise DomainError(f"parameter {k} must be > 0")

    @classmethod
    def from_spec(cls, spec: LevyProcessSpec) -> "ClosedFormModel":
        fam = spec.family
        if fam is Family.PURE_DRIFT:
            return cls(ModelKind.DRIFT, {"a": spec.drift_a})
        if fam is Family.BROWNIAN:
            return cls(ModelKind.BROWNIAN, {"mu": spec.params["mu"], "g": spec.gaussian_g})
        if spec.drift_a != 0:
            raise UnsupportedError("no closed form with an additional drift")
        if fam is Family.EXP_POISSON:
            return cls(ModelKind.EXP_POISSON, dict(spec.params))
        if fam is Family.HERMITE:
            return cls(ModelKind.HERMITE, dict(spec.params))
        raise UnsupportedError(f"no closed form for family {fam.value}")

    def to_spec(self) -> LevyProcessSpec:
        pr = self.params
        if self.kind is ModelKind.DRIFT:
            return LevyProcessSpec.pure_drift(pr["a"])
        if self.kind is ModelKind.BROWNIAN:
            return LevyProcessSpec.brownian(pr["mu"], pr["g"])
        if self.kind is ModelKind.EXP_POISSON:
            return LevyProcessSpec.exp_poisson(pr["rho"], pr["q"])
        return LevyProcessSpec.hermite(pr["p"], pr["q"])


def _as_model(model) -> ClosedFormModel:
    if isinstance(model, ClosedFormModel):
        return model
    if isinstance(model, LevyProcessSpec):
        return ClosedFormModel.from_spec(model)
    raise TypeError("expected a ClosedFormModel or LevyProcessSpec")


def _sqrt_minus_E(E: complex) -> complex:
    """sqrt(-E) on the principal branch, with E > 0 read as E + i0."""
    E = complex(E)
    if E.imag == 0.0 and E.real > 0:
        return -1j * math.sqrt(E.real)
    return cmath.sqrt(-E)


# ---------------------------------------------------------------------------
# Hermite helpers
# ---------------------------------------------------------------------------

def _hermite_c0(q):
    return math.exp(math.lgamma(q / 2.0) - math.lgamma((q + 1) / 2.0))


def _hermite_arg(p, E):
    """p sqrt(-2/E): real for E < 0, i p sqrt(2/E) for E + i0."""
    E = complex(E)
    if E.imag != 0.0:
        raise UnsupportedError("the Hermite closed form is supported for real E only")
    if E.real < 0:
        return p * math.sqrt(-2.0 / E.real)
    return 1j * p * math.sqrt(2.0 / E.real)


def gamma_infinity_hermite(p: float, q: float) -> float:
    """Limit of gamma(E) as E -> +inf for the Hermite model.

    gamma_inf = p c0/2 + p 2^q/sqrt(pi) [Gamma((q+1)/2)^2 - (q/2) Gamma(q/2)^2] / Gamma(q),
    with c0 = Gamma(q/2)/Gamma((q+1)/2).  The bracket is negative for
    small q.
    """
    if not (p > 0 and q > 0):
        raise DomainError("gamma_infinity_hermite needs p, q > 0")
    g1 = math.exp(2 * math.lgamma((q + 1) / 2.0) - math.lgamma(q))
    g2 = 0.5 * q * math.exp(2 * math.lgamma(q / 2.0) - math.lgamma(q))
    return p * (0.5 * _hermite_c0(q) + 2.0 ** q / math.sqrt(math.pi) * (g1 - g2))


def _hermite_log_dos(p, q, E):
    """ln N(E) from the modulus of D_{-q}(i p sqrt(2/E))."""
    x = 1j * p * math.sqrt(2.0 / E)
    d_scaled = pcf_d(-q, x, scaled=True)
    # |D|^2 = |exp(-x^2/4)|^2 |D~|^2 with exp(-x^2/4) = exp(p^2/(2E))
    log_abs_d2 = p * p / E + 2.0 * math.log(abs(d_scaled))
    pref = math.lgamma(q / 2.0) - math.lgamma(q) - math.lgamma((q + 1) / 2.0) - math.log(2 * math.sqrt(math.pi))
    return pref + 0.5 * math.log(E) - log_abs_d2


def hermite_low_energy_log_dos(p: float, q: float, E):
    """ln of the low-energy asymptote p^(2q) E^(1/2-q) exp(-p^2/E) / Gamma((q+1)/2)^2."""
    E = np.asarray(E, dtype=float)
    return 2 * q * math.log(p) - 2 * math.lgamma((q + 1) / 2.0) + (0.5 - q) * np.log(E) - p * p / E


def _masson_ratio(rho, q, k):
    """u(1)/u(0) for the exponential-jump model, u(s) = k^-s B(beta, q+s+1) 2F1(...; -1)."""
    beta = rho / (2.0 * k)
    def u_scaled(s):
        # B(beta, q+s+1) 2F1(q+s+1, beta+1; q+s+1+beta; -1), without k^-s
        lb = loggamma_fn(beta) + loggamma_fn(q + s + 1) - loggamma_fn(beta + q + s + 1)
        return cmath.exp(lb) * hyp2f1_at_minus1(q + s + 1, beta + 1, q + s + 1 + beta)
    return u_scaled(1) / u_scaled(0) / k


# ---------------------------------------------------------------------------
# Omega, N, gamma
# ---------------------------------------------------------------------------

def omega_closed(model, E) -> complex:
    """Closed-form Omega(E) = gamma(E) - i pi N(E).

    Real ``E > 0`` is read as ``E + i0``.  The Hermite model is
    available for real E only (its parabolic cylinder arguments are then
    real or purely imaginary).
    """
    m = _as_model(model)
    pr = m.params
    E = complex(E)
    if m.kind is ModelKind.DRIFT:
        a = pr["a"]
        w = complex(a * a - E.real, -0.0 if E.imag == 0 else -E.imag)
        return cmath.sqrt(w)
    if m.kind is ModelKind.BROWNIAN:
        mu, g = pr["mu"], pr["g"]
        if E == 0:
            raise DomainError("Brownian closed form is singular at E = 0")
        if E.imag == 0.0 and E.real > 0:
            k = math.sqrt(E.real)
            return mu * g + k * hankel1(1 - mu, k / g) / hankel1(-mu, k / g)
        k = cmath.sqrt(-E)
        k1, _ = bessel_k_i(1 - mu, k / g)
        k0, _ = bessel_k_i(-mu, k / g)
        return mu * g + k * k1 / k0
    if m.kind is ModelKind.EXP_POISSON:
        rho, q = pr["rho"], pr["q"]
        if E == 0:
            return complex(rho / (2 * q))
        k = _sqrt_minus_E(E)
        om = rho / (2.0 * q) + k * k * _masson_ratio(rho, q, k)
        return om if E.imag != 0 or E.real > 0 else complex(om.real, 0.0)
    p, q = pr["p"], pr["q"]
    x = _hermite_arg(p, E)
    ratio = pcf_d(-q - 1, x, scaled=True) / pcf_d(-q, x, scaled=True)
    c0 = _hermite_c0(q)
    om = p * c0 / 2.0 + q * _sqrt_minus_E(E) / math.sqrt(2.0) * c0 * ratio
    return complex(om.real, 0.0) if E.real < 0 else complex(om)


def dos_closed(model, E: float, full_output=False):
    """Integrated density of states and Lyapunov exponent at E > 0.

    Returns
    -------
    (N, gamma) : tuple of float
        With ``full_output`` a third element ``ln N`` is appended, which
        remains accurate when N underflows (Hermite and drift models).
    """
    m = _as_model(model)
    E = float(E)
    if not E > 0:
        raise DomainError("dos_closed needs E > 0")
    pr = m.params
    log_n = None
    if m.kind is ModelKind.DRIFT:
        a2 = pr["a"] ** 2
        N = math.sqrt(E - a2) / math.pi if E > a2 else 0.0
        gamma = math.sqrt(a2 - E) if E < a2 else 0.0
        log_n = math.log(N) if N > 0 else -math.inf
    elif m.kind is ModelKind.HERMITE:
        p, q = pr["p"], pr["q"]
        log_n = _hermite_log_dos(p, q, E)
        N = math.exp(log_n)
        gamma = omega_closed(m, E).real
    else:
        om = omega_closed(m, E)
        N, gamma = -om.imag / math.pi, om.real
        log_n = math.log(N) if N > 0 else -math.inf
    if full_output:
        return N, gamma, log_n
    return N, gamma


# ---------------------------------------------------------------------------
# Mellin transforms and invariant densities
# ---------------------------------------------------------------------------

def mellin_closed(model, s: float, E: float) -> float:
    """Mellin transform fhat(s) = int z^-s f(z) dz of the stationary density, E < 0."""
    m = _as_model(model)
    E = float(E)
    if not E < 0:
        raise DomainError("mellin_closed needs E < 0")
    if s < 0:
        raise DomainError("mellin_closed needs s >= 0")
    pr = m.params
    k = math.sqrt(-E)
    if m.kind is ModelKind.DRIFT:
        a = pr["a"]
        return (a + math.sqrt(a * a - E)) ** (-s)
    if m.kind is ModelKind.BROWNIAN:
        mu, g = pr["mu"], pr["g"]
        # scaled K avoids underflow for large k/g
        num = special.kve(s - mu, k / g)
        den = special.kve(mu, k / g)
        return float(k ** (-s) * num / den)
    if m.kind is ModelKind.EXP_POISSON:
        rho, q = pr["rho"], pr["q"]
        beta = rho / (2.0 * k)

        def u(sv):
            lb = loggamma_fn(beta) + loggamma_fn(q + sv + 1) - loggamma_fn(beta + q + sv + 1)
            return cmath.exp(lb).real * hyp2f1_at_minus1(q + sv + 1, beta + 1, q + sv + 1 + beta)
        return float(k ** (-s) * u(s) / u(0.0))
    p, q = pr["p"], pr["q"]
    x = p * math.sqrt(-2.0 / E)
    lg = math.lgamma((s + q + 1) / 2.0) - math.lgamma((q + 1) / 2.0)
    ratio = pcf_d(-s - q, x, scaled=True) / pcf_d(-q, x, scaled=True)
    return float(math.sqrt(-2.0 / E) ** s * math.exp(lg) * ratio)


class _Normaliser:
    """Numerical normalisation constants, memoised per (model, E)."""

    _cache: dict = {}

    @classmethod
    def get(cls, key, fn):
        val = cls._cache.get(key)
        if val is None:
            val = fn()
            if len(cls._cache) > 256:
                cls._cache.clear()
            cls._cache[key] = val
        return val


def _hermite_t_weight(t, k1, q):
    # density in t = k/z (p = 1): t^q (1 - t^2)^(-3/2) exp(-t^2/(k^2 (1 - t^2)))
    if t <= 0 or t >= 1:
        return 0.0
    one_m = 1.0 - t * t
    return math.exp(q * math.log(t) - 1.5 * math.log(one_m) - t * t / (k1 * k1 * one_m))


def _hermite_norm(k1, q):
    # the mass sits near t ~ k1 for small k1
    pts = sorted({min(k1, 0.5), min(3 * k1, 0.9), 0.99})
    val, _ = integrate.quad(_hermite_t_weight, 0.0, 1.0, args=(k1, q), points=pts,
                            epsabs=0.0, epsrel=1e-13, limit=400)
    return val


def _exp_poisson_norm(k, rho, q):
    beta = rho / (2.0 * k)
    val, _ = integrate.quad(lambda t: (1.0 + t) ** (-beta - 1.0), 0.0, 1.0, weight="alg",
                            wvar=(q, beta - 1.0), epsabs=0.0, epsrel=1e-13, limit=400)
    return val


def _brownian_norm(k, mu, g):
    # int z^(mu-1) exp(-(z + k^2/z)/(2g)) dz in the variable u = ln z,
    # centred at the maximum of the integrand
    zs = g * (mu + math.sqrt(mu * mu + k * k / (g * g)))
    us = math.log(zs)
    lmax = mu * us - (zs + k * k / zs) / (2 * g)
    f = lambda u: math.exp(mu * u - (math.exp(u) + k * k * math.exp(-u)) / (2 * g) - lmax)
    val, _ = _quad_split(f, us)
    return val, lmax


def _quad_split(f, centre):
    parts = [(-np.inf, centre - 5.0), (centre - 5.0, centre), (centre, centre + 5.0), (centre + 5.0, np.inf)]
    tot, err = 0.0, 0.0
    for lo, hi in parts:
        v, e = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-13, limit=400)
        tot += v
        err += e
    return tot, err


def invariant_density(model, E: float, z):
    """Normalised stationary density f(z) of the Riccati variable at E < 0.

    The support is [k, inf), k = sqrt(-E), for the subordinators and
    (0, inf) for the Brownian model; the density is zero elsewhere.
    Normalisation constants are obtained by quadrature.
    """
    m = _as_model(model)
    E = float(E)
    if not E < 0:
        raise DomainError("invariant_density needs E < 0")
    k = math.sqrt(-E)
    pr = m.params
    zz = np.atleast_1d(np.asarray(z, dtype=float))
    out = np.zeros_like(zz)
    if m.kind is ModelKind.DRIFT:
        raise UnsupportedError("the drift model has a point-mass stationary law at a + sqrt(a^2 - E)")
    if m.kind is ModelKind.BROWNIAN:
        mu, g = pr["mu"], pr["g"]
        norm, lmax = _Normaliser.get(("b", mu, g, k), lambda: _brownian_norm(k, mu, g))
        pos = zz > 0
        zp = zz[pos]
        out[pos] = np.exp((mu - 1) * np.log(zp) - (zp + k * k / zp) / (2 * g) - lmax) / norm
    elif m.kind is ModelKind.EXP_POISSON:
        rho, q = pr["rho"], pr["q"]
        beta = rho / (2.0 * k)
        norm = _Normaliser.get(("x", rho, q, k), lambda: _exp_poisson_norm(k, rho, q))
        pos = zz > k
        t = k / zz[pos]
        out[pos] = t ** (q + 2) / k * (1 - t) ** (beta - 1) * (1 + t) ** (-beta - 1) / norm
    else:
        p, q = pr["p"], pr["q"]
        k1 = k / p  # scale to p = 1: f_p(z; E) = f_1(z/p; E/p^2)/p
        norm = _Normaliser.get(("h", q, k1), lambda: _hermite_norm(k1, q))
        pos = zz > k
        t = k / zz[pos]
        w = np.array([_hermite_t_weight(ti, k1, q) for ti in t])
        out[pos] = w * t * t / k / norm
    return float(out[0]) if np.ndim(z) == 0 else out
