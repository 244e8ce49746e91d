import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from vacmirror.exceptions import DivergenceError, FitError
from vacmirror.scattering import (
    Gaussian,
    Lorentzian,
    SERIES_THRESHOLD,
    MirrorParams,
    Rational4,
    cutoff_frequency,
    decay_exponent,
    kk_reconstruct,
    rational4_samples,
    stability_check,
)

# Gamma = chi_FF / (i m0 tau w^3) with chi_FF written from the lorentzian
# reflectivity, evaluated with 40 digits (Omega = 1e3); see _lorentzian_mp
FROZEN_LORENTZIAN = [
    (1e-2, 0.99999999997, 4.9999999998000001041e-6),
    (0.5, 0.99999992500000892857, 0.00024999997500000334821),
    (2.0, 0.99999880000228570895, 0.0009999984000034285629),
    (1e2, 0.99701420292258912514, 0.049801064807032117578),
    (1e3, 0.79183052206452578595, 0.36705256129514607056),
    (3.7e3, 0.30538268631823142235, 0.39720879671887734491),
    (1e5, 0.0021724968900536042016, 0.02909115332503599072),
    (1e7, 4.9262984679653173404e-7, 0.00029990581348243454806),
]


def _lorentzian_mp(w, omega_cut=1e3):
    with mp.workdps(40):
        x = mp.mpf(w) / omega_cut
        z = 1 - 1j * x
        chi = 6 * omega_cut**3 * (-1j * x - x**2 / 2 - z * mp.log(z))
        return complex(chi / (1j * mp.mpf(w) ** 3))


@pytest.mark.parametrize("w,re,im", FROZEN_LORENTZIAN)
def test_lorentzian_against_high_precision(lor, w, re, im):
    g = complex(lor.gamma(w))
    assert g.real == pytest.approx(re, rel=1e-12)
    assert g.imag == pytest.approx(im, rel=1e-10)


@given(st.floats(-8, 8))
def test_lorentzian_matches_live_oracle(logx):
    w = 10.0**logx * 1e3
    g = complex(Lorentzian(1e3).gamma(w))
    ref = _lorentzian_mp(w)
    assert abs(g - ref) <= 1e-10 * abs(ref)


def test_lorentzian_branches_agree_at_threshold(lor):
    w = SERIES_THRESHOLD * lor.omega_cut
    series = complex(lor.gamma(w * (1 - 1e-12)))
    direct = complex(lor.gamma(w * (1 + 1e-12)))
    assert abs(series - direct) < 1e-12 * abs(direct)


@given(st.floats(1e-3, 1e6))
def test_reality_condition(w):
    for m in (Lorentzian(1e3), Rational4(1e3), Gaussian(1e3)):
        assert complex(m.gamma(-w)) == pytest.approx(complex(m.gamma(w)).conjugate(), rel=1e-13, abs=1e-300)


@given(st.floats(0, 1e7))
def test_passivity(w):
    for m in (Lorentzian(1e3), Rational4(1e3), Gaussian(1e3)):
        assert m.gamma_r(w) >= 0


def test_gamma0_is_strength():
    assert Lorentzian(1e3, 0.7).gamma0 == pytest.approx(0.7)
    assert Rational4(50.0, 0.3).gamma0 == pytest.approx(0.3)


def test_lorentzian_cutoff_frequency(lor):
    rep = cutoff_frequency(lor)
    assert rep.omega_c == pytest.approx(3e3, rel=1e-12)


def test_rational4_cutoff_frequency(rat):
    assert cutoff_frequency(rat).omega_c == pytest.approx(rat.omega_cut / 2, rel=1e-12)
    assert cutoff_frequency(Rational4(10.0, 0.4)).omega_c == pytest.approx(2.0, rel=1e-12)


def test_gaussian_dispersive_part_is_dawson():
    m = Gaussian(2.0, 0.5)
    x = np.linspace(-6, 6, 41)
    assert np.allclose(m.gamma_i(2.0 * x), 0.5 * 2 / math.sqrt(math.pi) * special.dawsn(x), rtol=1e-12, atol=1e-15)
    assert cutoff_frequency(m).omega_c == pytest.approx(1.0 / math.sqrt(math.pi), rel=1e-10)


def test_asymptote_approaches_cutoff_frequency(rat):
    # rational-4: -i w Gamma = omega_C (1 + O(1/x)); at x = 1e3 the gap is ~1e-6 relative
    assert cutoff_frequency(rat).rel_discrepancy < 1e-5


def test_lorentzian_asymptote_converges_logarithmically(lor):
    # the ln(x)/x correction makes the gap shrink slowly
    gaps = [cutoff_frequency(lor, probe=p).rel_discrepancy for p in (1e2, 1e3, 1e4)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_dgamma_matches_finite_difference():
    for m in (Lorentzian(1e3), Rational4(1e3), Gaussian(1e3)):
        for w in (0.3, 700.0, 2e4):
            h = 1e-5 * w
            fd = (complex(m.gamma(w + h)) - complex(m.gamma(w - h))) / (2 * h)
            assert complex(m.dgamma(w)) == pytest.approx(fd, rel=1e-6, abs=1e-15)


def test_kk_reconstruction_lorentzian(lor):
    w = np.concatenate([[0.0], np.logspace(-4, 4, 3001) * 1e3])
    tab = kk_reconstruct(w, lor.gamma_r(w))
    x = np.logspace(-2, 1, 200) * 1e3
    err = np.abs(tab.gamma_i(x) - lor.gamma_i(x)) / np.abs(lor.gamma_i(x))
    assert err.max() <= 1e-3


def test_kk_reconstruction_rational4():
    w, g = rational4_samples(1e3)
    tab = kk_reconstruct(w, g)
    m = Rational4(1e3)
    x = np.logspace(-2, 1, 100) * 1e3
    assert np.max(np.abs(tab.gamma_i(x) / m.gamma_i(x) - 1)) < 1e-4
    assert tab.omega_c == pytest.approx(m.omega_c_exact, rel=1e-4)


def test_kk_rejects_negative_samples():
    with pytest.raises(ValueError, match="passivity"):
        kk_reconstruct([0.0, 1.0, 2.0], [1.0, -0.1, 0.0])


def test_kk_rejects_slow_tail():
    w = np.logspace(-2, 3, 200)
    with pytest.raises(DivergenceError):
        kk_reconstruct(w, 1 / (1 + w) ** 0.5)


def test_decay_exponents(lor, rat):
    assert decay_exponent(rat).exponent == pytest.approx(4.0, abs=1e-3)
    fit = decay_exponent(lor)
    assert 1 < fit.exponent <= 2.05
    assert fit.classification == "velocity-variance divergent"
    with pytest.raises(FitError):
        decay_exponent(Gaussian(1e3))


def test_stability_flags(params):
    assert stability_check(params, Lorentzian(1e3)).passed
    rep = stability_check(MirrorParams(tau=1e-4), Lorentzian(1e3))
    assert not rep.passed and "runaway regime" in rep.flags
    assert rep.omega_c_tau == pytest.approx(0.3)


def test_induced_mass_product(params, lor):
    assert lor.omega_c * params.tau == pytest.approx(3e-3, rel=1e-10)


def test_compton_length(params):
    # lambda_C^2 = hbar^2 / (m0 c)^2 with c^2 = hbar / (6 pi m0 tau)
    assert params.compton_length_sq == pytest.approx(6 * math.pi * params.tau, rel=1e-14)
