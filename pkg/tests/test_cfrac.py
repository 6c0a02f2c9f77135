import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from susylevy.cfrac import (cf_series_at_zero, dos_continued, dos_real_axis, evaluate_K,
                            mellin_sequence, omega_cf, pincherle_check, remainders,
                            stieltjes_inversion_check, tail_seed)
from susylevy.errors import BranchCutError, ConvergenceError, DomainError, InfiniteMeanError, UnsupportedError
from susylevy.levy_core import LevyProcessSpec, coefficients
from susylevy.solvable import dos_closed, mellin_closed, omega_closed

DRIFT1 = LevyProcessSpec.pure_drift(1.0)
DRIFT0 = LevyProcessSpec.pure_drift(0.0)
HERM = LevyProcessSpec.hermite(1.0, 1.0)
EXPP = LevyProcessSpec.exp_poisson(1.0, 1.0)
SPECS = {
    "drift": DRIFT1,
    "hermite": HERM,
    "expoisson": EXPP,
    "gamma": LevyProcessSpec.gamma_process(1.0),
    "hermite_q3": LevyProcessSpec.hermite(0.7, 3.0),
}


def test_drift_fixed_point():
    # K = -E/(2a + K) at E = -3 solves K^2 + 2K - 3 = 0
    assert evaluate_K(DRIFT1, -3.0) == pytest.approx(1.0, abs=1e-13)
    om = omega_cf(DRIFT1, -3.0)
    assert om.omega == pytest.approx(2.0, abs=1e-13)
    assert om.N == 0.0 and om.gamma == pytest.approx(2.0)


@pytest.mark.parametrize("E", [2.0, 4.0, 9.0])
def test_drift_on_spectrum(E):
    r = dos_continued(DRIFT1, E)
    assert r.N == pytest.approx(math.sqrt(E - 1) / math.pi, abs=1e-8)
    assert r.gamma == pytest.approx(0.0, abs=1e-8)
    ra = dos_real_axis(DRIFT1, E)
    assert ra.N == pytest.approx(math.sqrt(E - 1) / math.pi, rel=1e-9)


def test_drift_below_edge_and_free_case():
    assert dos_continued(DRIFT1, 0.5).N == pytest.approx(0.0, abs=1e-8)
    r = dos_continued(DRIFT0, 4.0)
    assert r.N == pytest.approx(2 / math.pi, abs=1e-8)
    assert r.gamma == pytest.approx(0.0, abs=1e-8)


def test_branch_cut_and_brownian_refusal():
    with pytest.raises(BranchCutError):
        evaluate_K(HERM, 1.0)
    with pytest.raises(UnsupportedError):
        evaluate_K(LevyProcessSpec.brownian(0.0, 1.0), -1.0)
    with pytest.raises(InfiniteMeanError):
        omega_cf(LevyProcessSpec.alpha_stable(1.0, 0.5), -1.0)
    with pytest.raises(DomainError):
        dos_continued(HERM, -1.0)


def test_non_convergence_carries_trace():
    with pytest.raises(ConvergenceError) as exc:
        evaluate_K(HERM, complex(1.0, 1e-9), tol=1e-15, n_max=256)
    assert "trace" in exc.value.diagnostics


def test_state_diagnostics():
    val, st_ = evaluate_K(HERM, -1.0 + 0.5j, full_output=True)
    assert st_.converged and st_.residual <= 1e-12
    assert st_.n_terms >= 64 and abs(st_.q_n[1]) > 0


def test_expoisson_vs_masson():
    for E in (-0.1, -1.0, -10.0):
        a = omega_cf(EXPP, E).omega
        b = omega_closed(EXPP, E)
        assert abs(a - b) <= 1e-9 * abs(b)


def test_hermite_vs_closed_form_negative_axis():
    for E in (-10.0, -2.0, -1.0, -0.3, -0.1):
        a = omega_cf(HERM, E).omega
        b = omega_closed(HERM, E)
        assert abs(a - b) <= 1e-8 * (1 + abs(b))


@pytest.mark.parametrize("name", list(SPECS))
def test_large_negative_energy(name):
    t = 1e8
    assert (evaluate_K(SPECS[name], -t) / math.sqrt(t)).real == pytest.approx(1.0, rel=2e-3)


@pytest.mark.parametrize("name", list(SPECS))
@given(x=st.floats(-5, 5), y=st.floats(0.05, 5))
@settings(max_examples=15, deadline=None)
def test_schwarz_reflection(name, x, y):
    E = complex(x, y)
    a = evaluate_K(SPECS[name], E)
    b = evaluate_K(SPECS[name], E.conjugate())
    assert abs(a - b.conjugate()) <= 1e-12 * max(abs(a), 1.0)


@pytest.mark.parametrize("name", ["hermite", "expoisson", "gamma"])
def test_cauchy_riemann(name):
    spec = SPECS[name]
    E, h = complex(-0.7, 0.9), 1e-5
    dx = (evaluate_K(spec, E + h) - evaluate_K(spec, E - h)) / (2 * h)
    dy = (evaluate_K(spec, E + 1j * h) - evaluate_K(spec, E - 1j * h)) / (2 * h)
    assert abs(dy - 1j * dx) <= 1e-6 * abs(dx)


def test_tail_seed_limit_and_branch():
    # for constant coefficients the seed is exact and the branch gives z -> -sqrt(-E) behaviour
    s = tail_seed(np.full(5, 2.0), -3.0, order=2)
    assert np.allclose(s, -1.0)
    s = tail_seed(np.full(4, 1.0), 4.0, order=0)
    assert np.all(s.imag > 0)


def test_remainders_identity():
    E = -1.3
    z = remainders(HERM, E, 30)
    c = coefficients(HERM, np.arange(1, 31, dtype=float))
    assert np.allclose(z[:-1], E / (c[:-1] - z[1:]), rtol=1e-12)
    assert evaluate_K(HERM, E) == pytest.approx(-z[0].real, rel=1e-12)


@pytest.mark.parametrize("name", ["hermite", "expoisson", "gamma", "hermite_q3"])
@pytest.mark.parametrize("E", [-1.0, -0.5 + 1j, -3.0 + 0.2j])
def test_pincherle_minimal_solution(name, E):
    u, q, res = pincherle_check(SPECS[name], E, 40)
    assert np.max(res) < 1e-9
    ratio = np.abs(u[1:] / q[1:])
    # the ratio zigzags with the sign pattern of q; each parity class decreases
    for r in (ratio[0::2], ratio[1::2]):
        assert np.all(np.diff(r) < 0)
    assert ratio[-1] < 0.1 * ratio[0]


@pytest.mark.parametrize("name", ["hermite", "expoisson"])
def test_recurrence_on_spectrum(name):
    # at E + i0 both solutions oscillate, but the remainders still solve the recurrence
    u, q, res = pincherle_check(SPECS[name], 1.5, 40)
    assert np.max(res) < 1e-9


def test_mellin_sequence_drift():
    f = mellin_sequence(DRIFT1, -3.0, 5)
    assert f[0] == 1.0
    assert f[1] == pytest.approx(1 / 3, rel=1e-13)
    assert f[2] == pytest.approx(1 / 9, rel=1e-13)


@pytest.mark.parametrize("name", ["hermite", "expoisson", "gamma"])
def test_mellin_sequence_properties(name):
    spec, E = SPECS[name], -0.8
    f = mellin_sequence(spec, E, 20)
    assert np.all(f > 0)
    # E^n fhat(n) alternates in sign
    s = np.sign(E ** np.arange(21) * f)
    assert np.all(s[1:] * s[:-1] < 0)
    c = coefficients(spec, np.arange(1, 20, dtype=float))
    res = E * f[2:] - c * f[1:-1] + f[:-2]
    size = np.maximum.reduce([np.abs(E * f[2:]), np.abs(c * f[1:-1]), np.abs(f[:-2])])
    assert np.max(np.abs(res) / size) < 1e-9


def test_mellin_sequence_hermite_vs_closed():
    f = mellin_sequence(HERM, -1.0, 4)
    for n in range(1, 5):
        assert f[n] == pytest.approx(mellin_closed(HERM, n, -1.0), rel=1e-8)


def test_gamma_monotone_on_negative_axis():
    Es = -np.geomspace(10.0, 0.01, 25)
    for spec in (HERM, EXPP):
        g = [omega_cf(spec, E).gamma for E in Es]
        assert np.all(np.diff(g) < 0)


@pytest.mark.parametrize("E", [0.2, 1.0, 3.0, 10.0])
def test_hermite_eta_route_vs_closed(E):
    r = dos_continued(HERM, E)
    N, g = dos_closed(HERM, E)
    assert r.N == pytest.approx(N, abs=1e-6, rel=1e-5)
    assert r.gamma == pytest.approx(g, abs=1e-5)
    assert r.err_estimate < 1e-4


@pytest.mark.parametrize("E", [0.02, 0.1, 0.5, 2.0])
def test_hermite_real_axis_route(E):
    r = dos_real_axis(HERM, E)
    _, g, logn = dos_closed(HERM, E, full_output=True)
    assert r.log_N == pytest.approx(logn, abs=1e-8)
    assert r.gamma == pytest.approx(g, abs=1e-8)


def test_dos_non_negative_and_monotone():
    Es = np.linspace(0.1, 5.0, 20)
    for spec in (HERM, EXPP):
        rs = [dos_continued(spec, E) for E in Es]
        N = np.array([r.N for r in rs])
        err = np.array([r.err_estimate for r in rs])
        assert np.all(N >= -err)
        assert np.all(np.diff(N) >= -(err[1:] + err[:-1]))


def test_stieltjes_drift():
    a, b = stieltjes_inversion_check(DRIFT0, 1.0, 4.0)
    assert a == pytest.approx(2 / math.pi, abs=1e-7)
    assert b == pytest.approx(2 / math.pi, abs=1e-7)
    assert stieltjes_inversion_check(HERM, 1.0, 1.0) == (0.0, 0.0)


def test_stieltjes_hermite_two_routes():
    a, b = stieltjes_inversion_check(HERM, 0.5, 2.0)
    assert abs(a - b) < 1e-5


def test_cf_series_drift():
    mu = cf_series_at_zero(DRIFT1, 4)
    # 1/(1 + sqrt(1 - E)) = 1/2 + E/8 + E^2/16 + 5E^3/128 + 7E^4/256
    assert np.allclose(mu, [0.5, 1 / 8, 1 / 16, 5 / 128, 7 / 256], rtol=1e-14)


def test_cf_series_hermite():
    mu = cf_series_at_zero(HERM, 6)
    assert np.all(mu > 0)
    # mu_0 = int N(t) t^-2 dt; N vanishes like exp(-1/t) at the edge
    f = lambda t: dos_closed(HERM, t)[0] / t ** 2
    q1, _ = integrate.quad(f, 1e-3, 1.0, limit=200)
    q2, _ = integrate.quad(f, 1.0, 50.0, limit=200)
    # tail N ~ sqrt(t)/pi beyond 50
    q3 = integrate.quad(lambda t: (dos_closed(HERM, t)[0]) / t ** 2, 50.0, 5e4, limit=400)[0]
    tail = 2 / math.pi / math.sqrt(5e4)
    assert mu[0] == pytest.approx(q1 + q2 + q3 + tail, rel=1e-4)


def test_cf_series_instability_reported():
    with pytest.raises(ConvergenceError) as exc:
        cf_series_at_zero(LevyProcessSpec.hermite(1.0, 1.0), 400)
    assert exc.value.diagnostics["max_stable_order"] >= 6
