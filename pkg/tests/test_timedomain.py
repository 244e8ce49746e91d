import math

import numpy as np
import pytest

from vacmirror.exceptions import DivergenceError, FitError, ResolutionError
from vacmirror.moments import variance_v
from vacmirror.timedomain import (
    admittance_time,
    commutator_vq,
    diffusion,
    diffusion_delta,
    find_poles,
    log_law_slopes,
    remainder_time,
    require_fit,
    second_derivative_at_zero_diverges,
    sigma_time_from_xi,
    xi_qq_time,
)


@pytest.fixture(scope="module")
def dec(params, lor, osc):
    return find_poles(osc, params, lor)


def test_poles_come_in_mirror_pairs(dec):
    p, q = dec.poles
    assert q == pytest.approx(-p.conjugate())
    assert dec.residues[1] == pytest.approx(dec.residues[0].conjugate())
    assert dec.gamma == pytest.approx(1e-6, rel=5e-6)


def test_admittance_is_causal(params, lor, osc):
    at = admittance_time(osc, params, lor, np.array([-3.0, -1e-4, 0.0]))
    assert at.y[0] == 0.0 and at.y[1] == 0.0
    assert at.y[2] == pytest.approx(1 / at.decomposition.m_inf)


def test_admittance_late_times_are_damped_cosine(params, lor, osc, dec):
    t = np.array([1.0, 5.0, 40.0])
    at = admittance_time(osc, params, lor, t)
    ref = np.cos(dec.omega_bar * t) * np.exp(-dec.gamma * t / 2) / params.m0
    assert np.allclose(at.y, ref, rtol=0, atol=5e-6)


def test_remainder_spline_and_quadrature_agree(dec):
    t = np.array([1e-3])
    a = remainder_time(dec, t)
    b = remainder_time(dec, t, method="quad", rtol=1e-7)
    assert a[0] == pytest.approx(b[0], rel=1e-5)
    # at late times both routes give a remainder indistinguishable from zero
    late = remainder_time(dec, np.array([1.0, 5.0]))
    assert np.all(np.abs(late) < 1e-10)


def test_bump_integral_is_zero_frequency_value(params, lor, osc):
    t = np.concatenate([[0.0], np.arange(1e-6, 0.05, 1e-5)])
    at = admittance_time(osc, params, lor, t)
    assert at.bump_integral() == pytest.approx(at.delta_y_zero_freq, rel=1e-3)


def test_bump_integral_needs_resolution(params, lor, osc):
    at = admittance_time(osc, params, lor, np.linspace(0, 0.05, 20))
    with pytest.raises(ResolutionError):
        at.bump_integral()


def test_commutator_plateaus(params, lor, osc):
    wc = lor.omega_c
    t = np.array([1e-3 / wc, 1e-2, 3.0])
    rep = commutator_vq(osc, params, lor, t)
    assert rep.labels[0] == "inertial plateau"
    assert rep.value[0] == pytest.approx(rep.inertial_plateau, rel=1e-3)
    assert rep.value[1] == pytest.approx(rep.quasistatic_plateau, rel=1e-3)
    assert rep.value[2] == pytest.approx(rep.damped_cosine[2], abs=1e-5)
    # even in t
    back = commutator_vq(osc, params, lor, -t)
    assert np.allclose(back.value, rep.value)


def test_xi_time_derivative_is_half_admittance(params, lor, osc):
    t0, h = 0.7, 1e-6
    xs = xi_qq_time(osc, params, lor, np.array([t0 - h, t0 + h]))
    y = admittance_time(osc, params, lor, t0).y[0]
    assert ((xs[1] - xs[0]) / (2 * h)).imag == pytest.approx(-0.5 * y, rel=1e-6)
    odd = xi_qq_time(osc, params, lor, np.array([-t0, t0]))
    assert odd[0] == -odd[1]


def test_sigma_from_xi_lorentzian_pair():
    # sigma[w] = pi e^{-|w|} has sigma(t) = 1/(1+t^2) and xi(t) = -i t/(1+t^2)
    t = np.linspace(-2000, 2000, 400001)
    out = sigma_time_from_xi(t, -1j * t / (1 + t**2), at=np.linspace(-5, 5, 11))
    err = np.max(np.abs(out.sigma - 1 / (1 + out.t**2)))
    assert err < 1e-3
    assert err <= out.truncation_error


def test_log_law_slopes_agree(params):
    a, b = log_law_slopes(params, 1.0)
    assert a == pytest.approx(b, rel=1e-12)
    assert a == pytest.approx(params.tau / math.pi)


def test_diffusion_routes_agree(params, lor, free):
    a = diffusion_delta(free, params, lor, [0.5])[0]
    b = diffusion_delta(free, params, lor, [0.5], method="quad", rtol=1e-7)[0]
    assert a == pytest.approx(b, rel=1e-5)
    assert diffusion_delta(free, params, lor, [0.0])[0] == 0.0


def test_diffusion_log_law(params, lor, free):
    t = np.logspace(-5, 1, 61)
    curve = diffusion(free, params, lor, t)
    assert require_fit(curve) == pytest.approx(curve.expected_slope, rel=0.05)
    assert np.all(np.diff(curve.delta) > 0)


def test_diffusion_fit_declines_outside_window(params, lor, free):
    curve = diffusion(free, params, lor, np.array([1e-5, 1e-4]))
    assert curve.slope is None
    with pytest.raises(FitError):
        require_fit(curve)


def test_diffusion_needs_unbound_mirror(params, lor, osc):
    with pytest.raises(ValueError):
        diffusion(osc, params, lor, [1.0])


def test_curvature_at_zero_tracks_velocity_variance(params, lor, rat, osc):
    assert second_derivative_at_zero_diverges(variance_v(osc, params, lor))
    assert not second_derivative_at_zero_diverges(variance_v(osc, params, rat))
    bad = type("V", (), {"finite": False, "classification": "unknown"})()
    with pytest.raises(DivergenceError):
        second_derivative_at_zero_diverges(bad)
