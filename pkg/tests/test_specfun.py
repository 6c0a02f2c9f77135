import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from susylevy import specfun
from susylevy.errors import BranchCutError, DomainError, UnsupportedError

mp.mp.dps = 30

reals = st.floats(0.05, 30.0, allow_nan=False)


@given(x=st.floats(0.1, 40), y=st.floats(-20, 20))
def test_gamma_recurrence(x, y):
    z = complex(x, y)
    g0 = specfun.gamma_fn(z)
    g1 = specfun.gamma_fn(z + 1)
    assert abs(g1 - z * g0) <= 1e-9 * abs(g1)


def test_gamma_poles_raise():
    for z in (0, -1, -7.0):
        with pytest.raises(DomainError):
            specfun.gamma_fn(z)
    with pytest.raises(DomainError):
        specfun.loggamma_fn(-3)


def test_gamma_real_values():
    assert specfun.gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    r = specfun.gamma_fn(4.5, full_output=True)
    assert r.method_used == "closed-form" and r.est_error < 1e-13


@given(a=st.floats(0.1, 20), b=st.floats(0.1, 20))
def test_beta_matches_gamma_ratio(a, b):
    ref = float(mp.beta(a, b))
    assert specfun.beta_fn(a, b) == pytest.approx(ref, rel=1e-12)


def test_beta_complex_arguments():
    a, b = 1.5 + 0.7j, 0.4 - 0.2j
    assert abs(specfun.beta_fn(a, b) - complex(mp.beta(a, b))) < 1e-12 * abs(complex(mp.beta(a, b)))
    with pytest.raises(DomainError):
        specfun.beta_fn(-2, 1.0)


def test_beta_half_identity():
    # B(3/2, 1/2) = pi/2
    assert specfun.beta_fn(1.5, 0.5) == pytest.approx(math.pi / 2, rel=1e-15)


@given(x=st.floats(0.5, 1e6), d=st.floats(0.1, 3.0))
@settings(max_examples=50)
def test_gamma_ratio_large_argument(x, d):
    ref = float(mp.gamma(x) / mp.gamma(mp.mpf(x) + mp.mpf(d)))
    assert specfun.gamma_ratio(x, d) == pytest.approx(ref, rel=1e-11)


@given(nu=st.floats(-3, 3), x=st.floats(0.05, 40))
@settings(max_examples=60)
def test_bessel_k_recurrence_and_wronskian(nu, x):
    km, _ = specfun.bessel_k_i(nu - 1, x)
    k0, i0 = specfun.bessel_k_i(nu, x)
    kp, ip = specfun.bessel_k_i(nu + 1, x)
    assert abs(kp - km - 2 * nu / x * k0) <= 1e-9 * abs(kp)
    # I_nu K_{nu+1} + I_{nu+1} K_nu = 1/x
    assert abs(i0 * kp + ip * k0 - 1 / x) <= 1e-9 / x


def test_bessel_domain_errors():
    with pytest.raises(DomainError):
        specfun.bessel_k_i(0.3, 0.0)
    with pytest.raises(BranchCutError):
        specfun.bessel_k_i(0.3, -2.0)
    k, i = specfun.bessel_k_i(0.5, 2.0 + 1j)
    assert abs(k - complex(mp.besselk(0.5, 2 + 1j))) < 1e-13


@pytest.mark.parametrize("nu", [0.0, 0.3, 1.0, 2.5])
@pytest.mark.parametrize("x", [0.1, 1.0, 7.0, 50.0])
def test_hankel1_against_mpmath(nu, x):
    ref = complex(mp.hankel1(nu, x))
    assert abs(specfun.hankel1(nu, x) - ref) <= 1e-12 * abs(ref)


def test_hankel1_recurrence():
    for x in (0.3, 3.0, 30.0):
        h = [specfun.hankel1(n + 0.2, x) for n in range(3)]
        assert abs(h[2] - 2 * 1.2 / x * h[1] + h[0]) < 1e-10 * abs(h[2])
    with pytest.raises(DomainError):
        specfun.hankel1(0.0, -1.0)


def _pcfd_ref(nu, z):
    if nu >= 0 and nu == int(nu):
        # D_n(z) = 2^(-n/2) exp(-z^2/4) H_n(z/sqrt 2)
        n = int(nu)
        return mp.mpf(2) ** (-n / 2.0) * mp.exp(-mp.mpc(z) ** 2 / 4) * mp.hermite(n, mp.mpc(z) / mp.sqrt(2))
    if nu < 0 and nu == int(nu):
        # D_{-q}(z) = exp(-z^2/4)/Gamma(q) int_0^inf t^(q-1) exp(-t^2/2 - z t) dt
        q, zz = -nu, mp.mpc(z)
        f = lambda t: t ** (q - 1) * mp.exp(-t * t / 2 - zz * t)
        return mp.exp(-zz * zz / 4) / mp.gamma(q) * mp.quad(f, [0, 1, 5, mp.inf])
    return mp.pcfd(nu, z)


PCF_ORDERS = [-0.2, -0.5, -1.0, -1.7, -3.0, -6.5, 0.4, 1.0, 2.3, 4.0]


@pytest.mark.parametrize("nu", PCF_ORDERS)
@pytest.mark.parametrize("x", [0.0, 0.3, 1.0, 4.0, 9.0])
def test_pcf_real_argument(nu, x):
    ref = float(mp.re(_pcfd_ref(nu, x)))
    val = specfun.pcf_d(nu, x)
    assert isinstance(val, float)
    assert abs(val - ref) <= 1e-10 * max(abs(ref), 1e-300) + 1e-300


@pytest.mark.parametrize("nu", PCF_ORDERS)
@pytest.mark.parametrize("y", [0.2, 1.0, 3.0, 8.0])
def test_pcf_imaginary_argument(nu, y):
    z = 1j * y
    ref = complex(_pcfd_ref(nu, z))
    val = specfun.pcf_d(nu, z)
    assert abs(val - ref) <= 1e-10 * abs(ref)


@pytest.mark.parametrize("nu", [-0.5, -1.3, -2.0, 0.7, 3.2])
@pytest.mark.parametrize("z", [0.7, 2.5, 1.5j, 6j])
def test_pcf_recurrence_residual(nu, z):
    d = [specfun.pcf_d(nu + k, z, scaled=True) for k in (-1, 0, 1)]
    # D_{nu+1} - z D_nu + nu D_{nu-1} = 0 (also for the scaled functions)
    res = abs(d[2] - z * d[1] + nu * d[0])
    assert res <= 1e-9 * max(abs(d[2]), abs(z * d[1]))


def test_pcf_closed_forms():
    for x in (0.0, 0.8, 3.0):
        assert specfun.pcf_d(0.0, x) == pytest.approx(math.exp(-x * x / 4), rel=1e-14)
        ref = math.exp(x * x / 4) * math.sqrt(math.pi / 2) * math.erfc(x / math.sqrt(2))
        assert specfun.pcf_d(-1.0, x) == pytest.approx(ref, rel=1e-12)
        assert specfun.pcf_d(1.0, x) == pytest.approx(x * math.exp(-x * x / 4), rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("nu", [-0.4, -1.0, -2.7])
def test_pcf_branches_agree_at_crossover(nu):
    r = specfun.pcf_switch_radius(nu)
    for z in (complex(r), 1j * r, complex(r + 3), 1j * (r + 3)):
        a = specfun.pcf_d(nu, z, scaled=True, method="integral")
        b = specfun.pcf_d(nu, z, scaled=True, method="asymptotic")
        assert abs(a - b) <= 1e-12 * abs(a)


def test_pcf_scaled_large_argument():
    # scaled values stay finite where the plain function underflows
    val = specfun.pcf_d(-1.5, 60.0, scaled=True, full_output=True)
    assert val.method_used == "asymptotic"
    ref = complex(mp.pcfd(-1.5, 60) * mp.exp(900))
    assert abs(val.value - ref) < 1e-12 * abs(ref)


def test_pcf_general_complex_unsupported():
    with pytest.raises(UnsupportedError):
        specfun.pcf_d(-0.5, 1 + 1j)
    with pytest.raises(ValueError):
        specfun.pcf_d(-0.5, 1.0, method="bogus")


@pytest.mark.parametrize("a,b,c", [(0.5, 1.0, 1.5), (2.0, 0.3, 3.1), (1.2, 2.2, 0.7),
                                   (1 + 0.5j, 1.0, 2.0 - 0.3j), (-2.5, 1.5, 4.0)])
def test_hyp2f1_at_minus_one(a, b, c):
    ref = complex(mp.hyp2f1(a, b, c, -1))
    val = specfun.hyp2f1_at_minus1(a, b, c)
    assert abs(complex(val) - ref) <= 1e-13 * max(abs(ref), 1.0)


def test_hyp2f1_arctan():
    # 2F1(1/2, 1; 3/2; -1) = arctan(1) = pi/4
    r = specfun.hyp2f1_at_minus1(0.5, 1.0, 1.5, full_output=True)
    assert r.value == pytest.approx(math.pi / 4, rel=1e-15)
    assert r.method_used == "series"
    with pytest.raises(DomainError):
        specfun.hyp2f1_at_minus1(1.0, 1.0, -2.0)
