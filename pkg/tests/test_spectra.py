import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vacmirror.exceptions import ParityError
from vacmirror.response import Harmonic, chi_coupled, chi_FF_in
from vacmirror.scattering import Lorentzian, MirrorParams
from vacmirror.spectra import (
    SpectralFunction,
    c_from_xi,
    input_position_spectra,
    master_grid,
    sigma_from_xi,
    spectrum,
    theta,
    write_csv,
    xi_FF_in,
    xi_FF_ratio,
    xi_qq_coupled,
)


def test_theta_half_at_zero():
    assert list(theta(np.array([-1.0, 0.0, 2.0]))) == [0.0, 0.5, 1.0]


def test_input_force_spectrum_is_dissipative_part(params, lor):
    w = np.logspace(-2, 6, 50)
    assert np.allclose(xi_FF_in(params, lor, w), np.imag(chi_FF_in(params, lor, w)), rtol=1e-13)


def test_closed_and_product_paths_agree(params, lor, osc):
    w = np.concatenate([np.logspace(-3, 7, 300), 1 + np.linspace(-5e-6, 5e-6, 11)])
    a = xi_qq_coupled(osc, params, lor, w, path="closed")
    b = xi_qq_coupled(osc, params, lor, w, path="product")
    assert np.max(np.abs(a - b) / a) < 1e-9


@given(st.floats(1e-4, 1e7))
def test_commutator_spectrum_is_imaginary_part(w):
    p, m, s = MirrorParams(), Lorentzian(1e3), Harmonic(1.0)
    xi = float(xi_qq_coupled(s, p, m, w))
    assert xi == pytest.approx(complex(chi_coupled(s, p, m, w).qq).imag, rel=1e-9)


def test_xi_ff_ratio(params, lor, osc):
    w = np.array([0.5, 0.999, 1.0 + 1e-7, 3.0, 1e4])
    ratio = xi_FF_ratio(osc, params, lor, w)
    direct = spectrum(osc, params, lor, "xi", "FF")(w) / xi_FF_in(params, lor, w)
    assert np.allclose(ratio, direct, rtol=1e-9)
    # the coupled force noise vanishes at the bare frequency
    assert xi_FF_ratio(osc, params, lor, 1.0) == 0.0


def test_parities(params, lor, osc):
    xi = spectrum(osc, params, lor, "xi", "qq")
    sg = sigma_from_xi(xi)
    cc = c_from_xi(xi)
    w = np.logspace(-2, 4, 30)
    assert np.allclose(xi(-w), -xi(w), rtol=1e-13, atol=0)
    assert np.allclose(sg(-w), sg(w), rtol=1e-13, atol=0)
    assert np.all(cc(-w) == 0) and np.allclose(cc(w), 2 * xi(w))


def test_sigma_from_xi_rejects_even_input(params, lor, osc):
    sg = spectrum(osc, params, lor, "sigma", "qq")
    with pytest.raises(ParityError):
        sigma_from_xi(sg)
    bad = SpectralFunction(lambda w: np.ones_like(w), "odd", "real", "xi", "qq", True)
    with pytest.raises(ParityError):
        c_from_xi(bad)


def test_input_line_spectrum(params, osc):
    xi, sg, cc = input_position_spectra(osc, params)
    # variance: int dw/2pi hbar sigma = hbar / (2 m0 w0)
    assert params.hbar * sg.mean() == pytest.approx(0.5)
    assert params.hbar * xi.mean(lambda w: w) == pytest.approx(0.5)
    # <q q> = int dw/2pi C: all of the variance sits at positive frequency
    assert cc.mean() == pytest.approx(0.5)
    assert list(cc.frequencies) == [1.0]


def test_unbound_has_no_line_spectrum(params, free):
    with pytest.raises(ValueError):
        input_position_spectra(free, params)


def test_unbound_spectrum_low_frequency(params, lor, free):
    # sigma_qq ~ tau Gamma0 / (m0 w) as w -> 0
    w = 1e-6
    assert float(xi_qq_coupled(free, params, lor, w)) * w == pytest.approx(params.tau, rel=1e-6)


def test_master_grid_resolves_peak(params, lor, osc):
    g = master_grid(osc, params, lor)
    near = g[np.abs(g - 1) < 1e-5]
    assert near.size > 100
    assert np.all(np.diff(g) > 0)


def test_write_csv_roundtrip(tmp_path):
    p = tmp_path / "s.csv"
    w = np.array([0.1, 1.0 / 3.0])
    write_csv(p, w, np.array([np.pi, 1e-300]), ["kind: xi"])
    text = p.read_text().splitlines()
    assert text[0] == "# kind: xi"
    back = np.loadtxt(p, delimiter=",", comments="#", skiprows=2)
    assert back[1, 0] == 1.0 / 3.0 and back[0, 1] == np.pi
