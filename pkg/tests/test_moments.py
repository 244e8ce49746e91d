import math

import numpy as np
import pytest

from vacmirror.exceptions import DivergenceError
from vacmirror.moments import (
    Budget,
    RectangularBand,
    band_noise,
    equal_time_commutator,
    heisenberg_check,
    moment_report,
    variance_q,
    variance_v,
    virial_check,
)
from vacmirror.response import Discrete, effective_mass
from vacmirror.scattering import Lorentzian
from vacmirror.spectra import input_position_spectra, spectrum

# independent route: scipy quad with its own peak ladder below w = 2 and a
# log-variable integral above, 1e-12 per panel
ORACLE_DQ2_LORENTZIAN = 0.5000023060920459
ORACLE_DQ2_RATIONAL4 = 0.500001881827607
ORACLE_DV2_RATIONAL4 = 0.6592915823947544
ORACLE_SIGMA_FQ_RATIONAL4 = -0.15928970056714745


def test_position_variance_lorentzian(params, lor, osc):
    v = variance_q(osc, params, lor)
    assert v.value == pytest.approx(ORACLE_DQ2_LORENTZIAN, rel=1e-8)
    assert v.rel_dev <= 10 * params.tau * lor.gamma0


def test_position_variance_rational4(params, rat, osc):
    assert variance_q(osc, params, rat).value == pytest.approx(ORACLE_DQ2_RATIONAL4, rel=1e-8)


def test_uncoupled_limit_is_exact(params, osc):
    null = Lorentzian(1e3, 0.0)
    assert variance_q(osc, params, null).value == 0.5
    assert variance_v(osc, params, null).value == 0.5
    assert equal_time_commutator(osc, params, null).value == -1j


def test_velocity_variance_rational4(params, rat, osc):
    vv = variance_v(osc, params, rat)
    assert vv.finite
    assert vv.value == pytest.approx(ORACLE_DV2_RATIONAL4, rel=1e-8)
    # broadband part hbar tau Omega^2 G0 / (2 pi m0) from int x/(1+x^2)^2 = 1/2
    assert vv.background == pytest.approx(params.tau * rat.omega_cut**2 / (2 * math.pi), rel=1e-10)
    # what is left is the resonant part, near the bare 1/2 up to coupling corrections
    assert vv.value - vv.background == pytest.approx(0.5, rel=1e-3)


def test_velocity_variance_lorentzian_log_divergent(params, lor, osc):
    vv = variance_v(osc, params, lor)
    assert vv.classification == "log-divergent"
    assert vv.value is None
    assert np.all(np.diff(vv.partial) > 0)
    assert vv.log_slope > 0
    # increments per decade shrink towards a constant ratio of 1
    assert all(r > 1 for r in vv.increment_ratios)
    assert vv.increment_ratios[-1] < vv.increment_ratios[0]


def test_equal_time_commutator_uses_high_frequency_mass(params, lor, rat, osc):
    for m in (lor, rat):
        c = equal_time_commutator(osc, params, m)
        em = effective_mass(params, m)
        assert c.value.imag == pytest.approx(-params.hbar / em.m_inf, rel=1e-9)
        assert abs(c.value.real) < 1e-12


def test_equal_time_commutator_free_mirror(params, lor, free):
    c = equal_time_commutator(free, params, lor)
    assert c.rel_dev < 1e-9


def test_virial_relation(params, rat, osc):
    vr = virial_check(osc, params, rat)
    assert vr.lhs == pytest.approx(ORACLE_SIGMA_FQ_RATIONAL4, rel=1e-8)
    assert vr.residual <= 1e-6


def test_virial_needs_finite_velocity_variance(params, lor, osc):
    with pytest.raises(DivergenceError):
        virial_check(osc, params, lor)


def test_heisenberg_inequality(params, rat, osc):
    rep = moment_report(osc, params, rat)
    hb = heisenberg_check(rep, effective_mass(params, rat))
    assert hb.passed and hb.margin > 0
    assert hb.bound > hb.bound_m0


def test_unbound_mirror_has_no_stationary_variance(params, lor, free):
    with pytest.raises(DivergenceError):
        variance_q(free, params, lor)
    rep = moment_report(free, params, lor)
    assert rep.dq2 is None and rep.dv2_class == "not stationary"


def test_budget_is_respected(params, rat, osc):
    loose = variance_q(osc, params, rat, Budget(rtol=1e-6, limit=50)).value
    assert loose == pytest.approx(ORACLE_DQ2_RATIONAL4, rel=1e-5)


def test_band_noise_off_resonance_is_small(params, lor, osc):
    sg = spectrum(osc, params, lor, "sigma", "qq")
    bn = band_noise(sg, RectangularBand(30.0, 1.0))
    assert 0 < bn.variance < 1e-6 * 0.5
    assert bn.two_B == pytest.approx(4 / (2 * math.pi))


def test_band_noise_sifts_lines(params, osc):
    sg = input_position_spectra(osc, params)[1]
    assert band_noise(sg, RectangularBand(1.0, 0.1)).variance == pytest.approx(0.5)
    assert band_noise(sg, RectangularBand(3.0, 0.1)).variance == 0.0


def test_band_noise_covering_the_resonance(params, lor, osc):
    sg = spectrum(osc, params, lor, "sigma", "qq")
    bn = band_noise(sg, RectangularBand(1.0, 0.5))
    assert 0.49 < bn.variance < 0.5


def test_discrete_variance_is_line_sum(params, lor):
    s = Discrete(((1.0, 0.45), (2.5, 0.014), (4.0, 0.00375)))
    v = variance_q(s, params, lor)
    assert v.reference == pytest.approx(0.46775)
    assert v.rel_dev < 1e-4
