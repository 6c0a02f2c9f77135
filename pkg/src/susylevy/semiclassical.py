"""Low-energy asymptotics of the integrated density of states.

The WKB treatment of the recurrence for the Mellin transform gives

    ln N = -(2/h) int_h^{x_k} arccosh C(t) dt - arccosh C(h) + ln k + O(1),

where ``k = sqrt(E)``, ``h`` is a small parameter and ``C(nh) ~ c(n)/(2k)``
with turning point ``C(x_k) = 1``.  The catalogue collects the leading
exponential forms for the worked families; the Tauberian map translates
them into the long-time decay exponent of a diffusion.
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate, special

from .errors import DomainError, UnsupportedError
from .levy_core import Family, LevyProcessSpec, coefficient_c

__all__ = [
    "Validity",
    "AsymptoticForm",
    "LowEnergyFit",
    "turning_point",
    "wkb_scaling",
    "wkb_log_dos",
    "exp_poisson_leading_log_dos",
    "mu_alpha",
    "alpha_wkb_integral",
    "nu_alpha",
    "asymptotic_catalog",
    "diffusion_exponent",
    "power_from_diffusion_exponent",
    "fit_low_energy",
]


class Validity(str, enum.Enum):
    FINITE_MEASURE = "finite-measure"
    HERMITE = "hermite"
    ALPHA_STABLE = "alpha-stable"
    GAMMA_MARGINAL = "gamma-marginal"
    KOTANI_LIFSHITS = "kotani-lifshits"
    KOTANI_ALPHA_STABLE = "kotani-alpha-stable"


@dataclass(frozen=True)
class AsymptoticForm:
    """ln N(E) ~ -coeff * E**power * [ln(1/E)] + algebraic_power * ln E.

    ``algebraic_power`` is None when not known; ``heuristic`` marks forms
    that rest on the small-jump heuristic rather than an exact result.
    """

    exponential_coeff: float
    exponential_power: float
    algebraic_power: float | None = None
    log_correction: bool = False
    validity: Validity = Validity.FINITE_MEASURE
    heuristic: bool = False

    def __post_init__(self):
        if not self.exponential_coeff > 0:
            raise DomainError("exponential_coeff must be positive")
        if not self.exponential_power < 0:
            raise DomainError("exponential_power must be negative")

    def exponential_part(self, E):
        E = np.asarray(E, dtype=float)
        out = -self.exponential_coeff * E ** self.exponential_power
        if self.log_correction:
            out = out * np.log(1.0 / E)
        return out

    def leading_log_dos(self, E):
        """Exponential plus algebraic part (no constant)."""
        out = self.exponential_part(E)
        if self.algebraic_power is not None:
            out = out + self.algebraic_power * np.log(np.asarray(E, dtype=float))
        return out

    def to_dict(self):
        d = asdict(self)
        d["validity"] = self.validity.value
        return d


# ---------------------------------------------------------------------------
# turning point and WKB estimate
# ---------------------------------------------------------------------------

def turning_point(spec: LevyProcessSpec, k: float) -> int:
    """Largest integer n with c(n) >= 2k (requires c decreasing to 0)."""
    if not k > 0:
        raise DomainError("k must be positive")
    if not spec.is_subordinator or spec.family is Family.PURE_DRIFT or spec.drift_a != 0:
        raise DomainError("turning points need coefficients decreasing to zero "
                          "(a driftless subordinator with jumps)")
    target = 2.0 * k
    if coefficient_c(spec, 1.0) <= target:
        raise DomainError(f"2k = {target} >= c(1): energy too high for the asymptotic regime")
    lo, hi = 1, 2
    while coefficient_c(spec, float(hi)) >= target:
        lo, hi = hi, hi * 2
        if hi > 2 ** 62:
            raise DomainError("no turning point found")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if coefficient_c(spec, float(mid)) >= target:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class _Scaling:
    h: float
    C: object
    x_k: float


def wkb_scaling(spec: LevyProcessSpec, E: float) -> _Scaling:
    """Small parameter h, scaling function C and turning point x_k."""
    if not E > 0:
        raise DomainError("the WKB estimate needs E > 0")
    if spec.drift_a != 0:
        raise UnsupportedError("no scaling map for subordinators with a drift")
    k = math.sqrt(E)
    pr = spec.params
    fam = spec.family
    if fam is Family.EXP_POISSON:
        rho, q = pr["rho"], pr["q"]
        h = k
        return _Scaling(h, lambda x: rho / (2.0 * (x + q * h)), rho / 2.0 - q * h)
    if fam is Family.HERMITE:
        p, q = pr["p"], pr["q"]
        h = 2.0 * E / p ** 2
        s = h * (q - 0.5)
        return _Scaling(h, lambda x: (x + s) ** -0.5, 1.0 - s)
    if fam is Family.ALPHA_STABLE:
        p, al = pr["p"], pr["alpha"]
        h = (2.0 * k / p) ** (1.0 / (1.0 - al))
        return _Scaling(h, lambda x: x ** (al - 1.0), 1.0)
    raise UnsupportedError(f"no WKB scaling map is known for the {fam.value} family")


def _arccosh_integral(C, a, b):
    """int_a^b arccosh C(t) dt with C decreasing and C(b) = 1."""
    m = 0.5 * b if a < 0.5 * b else 0.5 * (a + b)
    # lower part in s = ln t (handles the logarithmic growth at small t)
    f_low = lambda s: math.acosh(max(C(math.exp(s)), 1.0)) * math.exp(s)
    lo, e1 = integrate.quad(f_low, math.log(a), math.log(m), epsabs=0, epsrel=1e-12, limit=200)
    # upper part with t = b - u^2 (square-root behaviour at the turning point)
    f_up = lambda u: math.acosh(max(C(b - u * u), 1.0)) * 2.0 * u
    up, e2 = integrate.quad(f_up, 0.0, math.sqrt(b - m), epsabs=0, epsrel=1e-12, limit=200)
    return lo + up, e1 + e2


def wkb_log_dos(spec: LevyProcessSpec, E: float) -> float:
    """Semiclassical estimate of ln N(E), without the O(1) constant."""
    sc = wkb_scaling(spec, E)
    if not sc.x_k > sc.h:
        raise DomainError("energy above the asymptotic regime (turning point below h)")
    if sc.C(sc.h) <= 1.0:  # pragma: no cover - implied by x_k > h
        raise DomainError("C(h) <= 1")
    I, _ = _arccosh_integral(sc.C, sc.h, sc.x_k)
    return -2.0 / sc.h * I - math.acosh(sc.C(sc.h)) + 0.5 * math.log(E)


def exp_poisson_leading_log_dos(rho: float, q: float, E: float) -> float:
    """Leading terms of the WKB estimate for exponential jumps, in closed form.

    The integral contributes ``-pi rho/(2h) - 2(q+1) ln h`` and the boundary
    term ``-arccosh C(h)`` contributes ``ln h``; with ``h = k`` this gives
    ``-pi rho/(2 sqrt E) - q ln E`` up to a constant.
    """
    return -math.pi * rho / (2.0 * math.sqrt(E)) - q * math.log(E)


# ---------------------------------------------------------------------------
# constants
# ---------------------------------------------------------------------------

def _check_alpha(alpha):
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1); the constant diverges as alpha -> 1")


def mu_alpha(alpha: float) -> float:
    """pi / B(1/2 + 1/(2(1-alpha)), 1/2).

    Equals 2F1(1/2, beta; 1 + beta; 1) with beta = 1/(2(1-alpha)).  This is
    the constant of the catalogued alpha-stable form; the WKB integral
    itself is ``(1 - alpha) * mu_alpha`` (see :func:`alpha_wkb_integral`).
    """
    _check_alpha(alpha)
    beta = 0.5 / (1.0 - alpha)
    return math.pi * math.exp(special.gammaln(1.0 + beta) - special.gammaln(0.5) - special.gammaln(0.5 + beta))


def alpha_wkb_integral(alpha: float, method="closed") -> float:
    """int_0^1 arccosh(t**(alpha-1)) dt.

    ``method="closed"`` uses B(beta, 1/2)/2 with beta = 1/(2(1-alpha)),
    ``method="quad"`` integrates numerically.
    """
    _check_alpha(alpha)
    if method == "closed":
        beta = 0.5 / (1.0 - alpha)
        return 0.5 * special.beta(beta, 0.5)
    if method == "quad":
        return _arccosh_integral(lambda t: t ** (alpha - 1.0), 1e-300, 1.0)[0]
    raise DomainError(f"unknown method {method!r}")


def nu_alpha(alpha: float, p: float = 1.0) -> float:
    """(p alpha / Gamma(1-alpha))**(1/(1-alpha)) / B(1/(1-alpha), 1/2)."""
    _check_alpha(alpha)
    return (p * alpha / special.gamma(1.0 - alpha)) ** (1.0 / (1.0 - alpha)) / special.beta(1.0 / (1.0 - alpha), 0.5)


# ---------------------------------------------------------------------------
# catalogue
# ---------------------------------------------------------------------------

_ALIASES = {
    "finite": Validity.FINITE_MEASURE, "finite-measure": Validity.FINITE_MEASURE,
    "expoisson": Validity.FINITE_MEASURE, "exp_poisson": Validity.FINITE_MEASURE,
    "hermite": Validity.HERMITE,
    "alpha": Validity.ALPHA_STABLE, "alphastable": Validity.ALPHA_STABLE, "alpha-stable": Validity.ALPHA_STABLE,
    "gamma": Validity.GAMMA_MARGINAL, "gamma-marginal": Validity.GAMMA_MARGINAL,
    "kotani-lifshits": Validity.KOTANI_LIFSHITS, "lifshits": Validity.KOTANI_LIFSHITS,
    "kotani-alpha-stable": Validity.KOTANI_ALPHA_STABLE, "kotani-alpha": Validity.KOTANI_ALPHA_STABLE,
}


def _catalog_key(family):
    if isinstance(family, Validity):
        return family
    if isinstance(family, Family):
        family = family.value
    try:
        return _ALIASES[str(family).lower()]
    except KeyError:
        raise UnsupportedError(f"no catalogued low-energy form for {family!r}") from None


def asymptotic_catalog(family, params=None) -> AsymptoticForm:
    """Leading low-energy form of ln N for a catalogued case.

    ``family`` is a :class:`Validity` tag, an alias string, a
    :class:`Family`, or a :class:`LevyProcessSpec` (then ``params`` is
    taken from the spec).

    Parameters by case: finite measure ``rho`` (and optionally ``q`` for
    exponential jumps, which fixes the algebraic power); Hermite ``p, q``;
    alpha-stable ``p, alpha``; Kotani Lifshits ``rho``; Kotani
    alpha-stable ``p, alpha``.
    """
    if isinstance(family, LevyProcessSpec):
        params = dict(family.params)
        family = family.family
    params = dict(params or {})
    key = _catalog_key(family)
    if key is Validity.FINITE_MEASURE:
        rho = params["rho"]
        alg = -params["q"] if "q" in params else None
        return AsymptoticForm(math.pi * rho / 2.0, -0.5, alg, False, key)
    if key is Validity.HERMITE:
        p, q = params.get("p", 1.0), params["q"]
        return AsymptoticForm(p ** 2, -1.0, 0.5 - q, False, key)
    if key is Validity.ALPHA_STABLE:
        p, al = params.get("p", 1.0), params["alpha"]
        coeff = mu_alpha(al) / 2.0 ** (al / (1.0 - al)) * p ** (1.0 / (1.0 - al))
        return AsymptoticForm(coeff, -0.5 / (1.0 - al), 0.5, False, key)
    if key is Validity.GAMMA_MARGINAL:
        return AsymptoticForm(1.0, -0.5, None, True, key, heuristic=True)
    if key is Validity.KOTANI_LIFSHITS:
        return AsymptoticForm(math.pi * params["rho"], -0.5, None, False, key)
    if key is Validity.KOTANI_ALPHA_STABLE:
        p, al = params.get("p", 1.0), params["alpha"]
        return AsymptoticForm(nu_alpha(al, p), -(1.0 + al) / (2.0 * (1.0 - al)), None, False, key)
    raise UnsupportedError(f"no catalogued form for {key}")  # pragma: no cover


# ---------------------------------------------------------------------------
# Tauberian map
# ---------------------------------------------------------------------------

def diffusion_exponent(asym):
    """nu with ln P(t) ~ -t**nu from ln N ~ -E**x:  nu = x/(x-1).

    Accepts an :class:`AsymptoticForm` or the exponent ``x`` itself;
    exact inputs (int, Fraction, sympy expressions) give exact outputs.
    """
    x = asym.exponential_power if isinstance(asym, AsymptoticForm) else asym
    if isinstance(x, float):
        if not x < 0:
            raise DomainError("exponential power must be negative")
    return x / (x - 1)


def power_from_diffusion_exponent(nu):
    """Inverse map x = nu/(nu-1)."""
    return nu / (nu - 1)


# ---------------------------------------------------------------------------
# least-squares fit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LowEnergyFit:
    """Fit of ln N = -coeff E**x [ln(1/E)] + algebraic_power ln E + constant."""

    exponential_coeff: float
    algebraic_power: float
    constant: float
    exponential_power: float
    residuals: np.ndarray
    rms: float
    stderr: tuple

    def to_dict(self):
        return {"exponential_coeff": self.exponential_coeff, "algebraic_power": self.algebraic_power,
                "constant": self.constant, "exponential_power": self.exponential_power,
                "rms_residual": self.rms, "stderr": list(self.stderr)}


def fit_low_energy(table, model: AsymptoticForm, emax=None, log_N=None) -> LowEnergyFit:
    """Regress ln N against the shape of ``model`` on the table rows with E <= emax.

    ``log_N`` may supply ln N directly when N underflows.

    Raises
    ------
    DomainError
        Fewer than 6 usable points, non-positive N, or data without an
        exponentially vanishing low-energy tail.
    """
    E = np.asarray(table.E, dtype=float)
    lnN = np.log(np.asarray(table.N, dtype=float)) if log_N is None else np.asarray(log_N, dtype=float)
    sel = E > 0
    if emax is not None:
        sel &= E <= emax
    E, lnN = E[sel], lnN[sel]
    if E.size < 6:
        raise DomainError("need at least 6 points in the asymptotic window")
    if log_N is None and np.any(np.asarray(table.N)[sel] <= 0):
        raise DomainError("N must be positive in the asymptotic window")
    if not np.all(np.isfinite(lnN)):
        raise DomainError("N must be positive in the asymptotic window")
    shape = E ** model.exponential_power
    if model.log_correction:
        shape = shape * np.log(1.0 / E)
    X = np.column_stack([-shape, np.log(E), np.ones_like(E)])
    scale = np.abs(X).max(axis=0)
    beta, *_ = np.linalg.lstsq(X / scale, lnN, rcond=None)
    beta = beta / scale
    res = lnN - X @ beta
    dof = max(E.size - 3, 1)
    s2 = float(res @ res) / dof
    cov = s2 * np.linalg.pinv(X.T @ X)
    se = tuple(float(math.sqrt(max(c, 0.0))) for c in np.diag(cov))
    C = float(beta[0])
    span = float(lnN.max() - lnN.min())
    exp_span = C * float(shape.max() - shape.min())
    # the exponential factor must vary by at least e^3 across the window and
    # carry most of the variation of ln N
    if not C > 0 or exp_span < max(3.0, 0.5 * span):
        raise DomainError("insufficient dynamic range: the data show no exponential decay "
                          "of the catalogued shape")
    return LowEnergyFit(C, float(beta[1]), float(beta[2]), model.exponential_power, res,
                        float(math.sqrt(float(res @ res) / E.size)), se)
