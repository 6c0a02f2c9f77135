import math

import numpy as np
import pytest
from scipy import integrate, special

from susylevy import specfun
from susylevy.cfrac import dos_continued, dos_real_axis, omega_cf
from susylevy.errors import DomainError, UnsupportedError
from susylevy.levy_core import LevyProcessSpec, coefficients
from susylevy.solvable import (ClosedFormModel, ModelKind, dos_closed, gamma_infinity_hermite,
                               hermite_low_energy_log_dos, invariant_density, mellin_closed,
                               omega_closed)

HERM = ClosedFormModel("hermite", {"p": 1.0, "q": 1.0})
EXPP = ClosedFormModel("expoisson", {"rho": 1.0, "q": 1.0})
BROWN = ClosedFormModel("brownian", {"mu": 0.0, "g": 1.0})
DRIFT = ClosedFormModel("drift", {"a": 1.0})


def test_model_validation_and_spec_round_trip():
    with pytest.raises(DomainError):
        ClosedFormModel("hermite", {"p": 1.0})
    with pytest.raises(DomainError):
        ClosedFormModel("expoisson", {"rho": -1.0, "q": 1.0})
    ClosedFormModel("brownian", {"mu": -2.0, "g": 0.5})
    for m in (HERM, EXPP, BROWN, DRIFT):
        assert ClosedFormModel.from_spec(m.to_spec()) == m
    with pytest.raises(UnsupportedError):
        ClosedFormModel.from_spec(LevyProcessSpec.gamma_process(1.0))


def test_drift_examples():
    assert omega_closed(DRIFT, -3.0) == pytest.approx(2.0)
    assert mellin_closed(DRIFT, 2, -3.0) == pytest.approx(1 / 9)
    N, g = dos_closed(ClosedFormModel("drift", {"a": 0.0}), 9.0)
    assert N == pytest.approx(3 / math.pi) and g == 0.0


def test_brownian_example():
    ref = special.k1(1.0) / special.k0(1.0)
    assert omega_closed(BROWN, -1.0).real == pytest.approx(ref, rel=1e-13)
    assert ref == pytest.approx(1.42962, abs=1e-5)


def test_brownian_positive_energy_branch():
    for E in (0.01, 0.5, 3.0):
        N, g = dos_closed(BROWN, E)
        assert N > 0 and g > 0
    # at large E the free result N ~ sqrt(E)/pi dominates
    N, _ = dos_closed(BROWN, 1e4)
    assert N == pytest.approx(100 / math.pi, rel=1e-2)


def test_brownian_dyson():
    E = 1e-8
    N, g = dos_closed(BROWN, E)
    assert N * math.log(E) ** 2 == pytest.approx(2.0, rel=0.1)
    assert g * math.log(1 / E) == pytest.approx(2.0, rel=0.1)


def test_brownian_dyson_slope():
    # 1/gamma ~ ln(1/E)/(2g): the slope d(1/gamma)/d ln(1/E) tends to 1/(2g)
    Es = np.array([1e-14, 1e-16])
    inv = [1 / dos_closed(BROWN, E)[1] for E in Es]
    slope = (inv[1] - inv[0]) / (math.log(1 / Es[1]) - math.log(1 / Es[0]))
    assert slope == pytest.approx(0.5, rel=0.05)


def _pcf_integral(nu, x):
    # D_{-n}(x) = exp(-x^2/4)/Gamma(n) int t^(n-1) exp(-t^2/2 - x t) dt, independent of specfun
    n = -nu
    f = lambda t: t ** (n - 1) * math.exp(-t * t / 2 - x * t)
    return math.exp(-x * x / 4) / math.gamma(n) * integrate.quad(f, 0, np.inf, epsabs=0, epsrel=1e-13)[0]


def test_hermite_closed_form_example():
    om = omega_closed(HERM, -2.0).real
    c0 = math.sqrt(math.pi)
    # q sqrt(-E)/sqrt(2) = 1 at E = -2
    ref = 0.5 * c0 + c0 * _pcf_integral(-2, 1.0) / _pcf_integral(-1, 1.0)
    assert om == pytest.approx(ref, rel=1e-11)


@pytest.mark.parametrize("model", [HERM, EXPP, DRIFT,
                                   ClosedFormModel("hermite", {"p": 0.6, "q": 2.5}),
                                   ClosedFormModel("expoisson", {"rho": 2.0, "q": 0.4})],
                         ids=["hermite", "expoisson", "drift", "hermite2", "expoisson2"])
def test_closed_vs_cf_negative_axis(model):
    spec = model.to_spec()
    for E in (-10.0, -3.0, -1.0, -0.3, -0.1):
        a, b = omega_closed(model, E), omega_cf(spec, E).omega
        assert abs(a - b) < 1e-8 * (1 + abs(a))


def test_expoisson_complex_energy_vs_cf():
    spec = EXPP.to_spec()
    for E in (-1 + 1j, 0.5 + 0.3j, 2 - 1j):
        a, b = omega_closed(EXPP, E), omega_cf(spec, E).omega
        assert abs(a - b) < 1e-9 * abs(a)


@pytest.mark.parametrize("model", [HERM, EXPP, BROWN, DRIFT], ids=["hermite", "expoisson", "brownian", "drift"])
def test_mellin_difference_equation(model):
    spec = model.to_spec()
    E = -0.7
    for s in (1.0, 2.0, 3.0, 4.5):
        f = [mellin_closed(model, s + d, E) for d in (-1, 0, 1)]
        c = coefficients(spec, np.array([s]))[0]
        terms = (E * f[2], c * f[1], f[0])
        assert abs(terms[0] - terms[1] + terms[2]) < 1e-9 * max(map(abs, terms))
    assert mellin_closed(model, 0.0, E) == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize("model", [HERM, EXPP, BROWN], ids=["hermite", "expoisson", "brownian"])
def test_density_normalised_and_mellin_duality(model):
    E = -2.0 if model is HERM else -0.25
    k = math.sqrt(-E)
    lo = 0.0 if model is BROWN else k
    f = lambda z: invariant_density(model, E, z)
    for s in (0, 1, 2, 3):
        g = lambda z: z ** (-s) * f(z)
        pts = [lo + 0.5, lo + 2, lo + 10]
        val = integrate.quad(g, lo, lo + 50, points=pts, limit=400, epsabs=0, epsrel=1e-11)[0]
        val += integrate.quad(g, lo + 50, np.inf, limit=400, epsabs=1e-14)[0]
        assert val == pytest.approx(mellin_closed(model, s, E), rel=1e-7)


def test_density_support_and_edge():
    assert invariant_density(HERM, -1.0, 0.5) == 0.0
    vals = invariant_density(HERM, -1.0, [1.0 + 1e-4, 1.0 + 1e-3])
    assert np.all(vals < 1e-100)
    assert invariant_density(EXPP, -0.25, 0.3) == 0.0
    with pytest.raises(DomainError):
        invariant_density(HERM, 1.0, 2.0)


def test_brownian_density_mode():
    # unnormalised z^(mu-1) exp(-(z + k^2/z)/(2g)): stationary at z^2 + 2g(1-mu) z - k^2 = 0
    zs = -1 + math.sqrt(2)
    h = 1e-5
    d = (invariant_density(BROWN, -1.0, zs + h) - invariant_density(BROWN, -1.0, zs - h)) / (2 * h)
    assert abs(d) < 1e-7


def test_expoisson_lyapunov_from_density():
    # gamma = rho/(2q) + int (z measured against the density) at E = -k^2
    E = -0.25
    spec = EXPP.to_spec()
    c0 = coefficients(spec, np.zeros(1))[0]
    # with the Mellin sequence z_1 = E fhat(1), K = -z_1
    om_density = 0.5 * c0 - E * integrate.quad(lambda z: invariant_density(EXPP, E, z) / z, 0.5, np.inf,
                                               epsabs=0, epsrel=1e-12, limit=400)[0]
    assert om_density == pytest.approx(omega_cf(spec, E).gamma, rel=1e-8)


@pytest.mark.parametrize("E", [0.2, 1.0, 4.0, 10.0])
def test_hermite_dos_vs_cf_eta(E):
    N, g = dos_closed(HERM, E)
    r = dos_continued(HERM.to_spec(), E)
    assert r.N == pytest.approx(N, abs=1e-6)
    assert r.gamma == pytest.approx(g, abs=1e-5)


def test_hermite_low_energy_asymptote():
    _, _, ln = dos_closed(HERM, 0.05, full_output=True)
    assert abs(ln - hermite_low_energy_log_dos(1.0, 1.0, 0.05)) < 0.1 * abs(ln)
    diffs = [abs(dos_closed(HERM, E, full_output=True)[2] - hermite_low_energy_log_dos(1.0, 1.0, E))
             for E in (0.1, 0.03, 0.01, 0.003)]
    assert np.all(np.diff(diffs) < 0)


@pytest.mark.parametrize("q", [0.2, 0.5, 1.0, 2.0, 5.0])
def test_gamma_infinity(q):
    m = ClosedFormModel("hermite", {"p": 1.0, "q": q})
    g = dos_closed(m, 1e4)[1]
    assert g == pytest.approx(gamma_infinity_hermite(1.0, q), abs=1e-3)
    assert gamma_infinity_hermite(2.0, q) == pytest.approx(2 * gamma_infinity_hermite(1.0, q))


def test_gamma_infinity_q_one_value():
    # bracket Gamma(1)^2 - (1/2) Gamma(1/2)^2 = 1 - pi/2 is negative
    ref = math.sqrt(math.pi) / 2 + 2 / math.sqrt(math.pi) * (1 - math.pi / 2)
    assert gamma_infinity_hermite(1.0, 1.0) == pytest.approx(ref, rel=1e-14)


def test_hermite_matches_half_stable():
    # Hermite(p, q) and the alpha = 1/2 stable subordinator share c(s) ~ p sqrt(2/s)
    spec_h = LevyProcessSpec.hermite(1.0, 1.0)
    spec_a = LevyProcessSpec.alpha_stable(math.sqrt(2.0), 0.5)
    s = np.array([1e3, 1e5])
    ratio = coefficients(spec_h, s) / coefficients(spec_a, s)
    assert np.allclose(ratio, 1.0, atol=2e-3)


def test_expoisson_low_energy_gamma():
    # gamma -> rho/(2q) as E -> 0+
    spec = EXPP.to_spec()
    g = dos_real_axis(spec, 1e-4).gamma
    assert g == pytest.approx(0.5, rel=0.05)
    assert dos_closed(EXPP, 1e-2)[1] == pytest.approx(dos_real_axis(spec, 1e-2).gamma, rel=1e-8)


def test_expoisson_closed_vs_real_axis():
    spec = EXPP.to_spec()
    for E in (0.05, 0.3, 2.0):
        N, g = dos_closed(EXPP, E)
        r = dos_real_axis(spec, E)
        assert r.N == pytest.approx(N, rel=1e-8)
        assert r.gamma == pytest.approx(g, rel=1e-8)


@pytest.mark.parametrize("rho,q", [(1.0, 1.0), (2.0, 0.5), (1.0, 2.0)])
def test_expoisson_low_energy_prefactor(rho, q):
    # N E^q exp(pi rho/(2 sqrt E)) -> rho^(2q+1)/Gamma(q+1)^2, checked in log form
    spec = LevyProcessSpec.exp_poisson(rho, q)
    E = rho ** 2 * 1e-3
    ln = dos_real_axis(spec, E).log_N
    lr = ln + math.pi * rho / (2 * math.sqrt(E)) + q * math.log(E)
    lr -= (2 * q + 1) * math.log(rho) - 2 * math.lgamma(q + 1)
    assert math.exp(lr) == pytest.approx(1.0, rel=0.2)


@pytest.mark.parametrize("q", [0.3, 1.0, 2.5])
def test_hermite_branch_of_root_irrelevant(q):
    # only |D_{-q}(+-i y)| enters N(E); both branches give the same modulus
    for y in (0.2, 1.4, 6.0):
        a, b = specfun.pcf_d(-q, 1j * y), specfun.pcf_d(-q, -1j * y)
        assert abs(a) == pytest.approx(abs(b), rel=1e-12)
