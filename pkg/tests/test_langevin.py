import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vacmirror.exceptions import FitError, ParityError, SynthesisError
from vacmirror.langevin import (
    autocovariance,
    bin_masses,
    dump,
    ensemble_diffusion,
    load,
    periodogram,
    stationarity,
    summary,
    synthesize,
    synthesize_sigma,
    validate_diffusion,
)
from vacmirror.spectra import input_position_spectra, spectrum


def white(level):
    return lambda w: np.full_like(np.asarray(w, dtype=float), level)


@given(st.integers(2, 200), st.floats(1e-3, 10.0), st.floats(0.1, 5.0))
def test_white_bins_carry_level_over_dt(half, dt, level):
    mass, info = bin_masses(white(level), 2 * half, dt, bandlimited=True)
    assert np.all(mass >= 0)
    assert info["variance"] == pytest.approx(level / dt, rel=1e-12)


def test_white_noise_autocovariance_is_delta():
    dt, level = 0.1, 2.0
    ens = synthesize(white(level), 512, dt, 200, seed=11, bandlimited=True)
    exact = ens.expected_autocovariance(np.arange(6))
    assert exact[0] == pytest.approx(level / dt, rel=1e-12)
    assert np.allclose(exact[1:], 0, atol=1e-10)
    ac = autocovariance(ens, 5)
    assert np.all(np.abs(ac.mean - exact) <= 4 * ac.stderr)


def test_oscillator_comb_autocorrelation(params, osc):
    # put w0 = 1 exactly on bin 8
    n = 1024
    dt = 2 * math.pi * 8 / n
    comb = input_position_spectra(osc, params)[1]
    ens = synthesize(comb, n, dt, 400, seed=3)
    assert ens.info["offgrid_bins"] < 1e-12
    lags = np.arange(0, 200, 7)
    target = params.hbar / (2 * params.m0 * osc.omega0) * np.cos(osc.omega0 * lags * dt)
    assert np.allclose(ens.expected_autocovariance(lags), target, atol=1e-12)
    ac = autocovariance(ens, int(lags.max()))
    assert np.all(np.abs(ac.mean[lags] - target) <= 4 * ac.stderr[lags] + 1e-12)


def test_periodogram_matches_coupled_spectrum(params, lor, osc):
    ens = synthesize_sigma(osc, params, lor, 2048, 0.05, 128, seed=7)
    chk = periodogram(ens)
    assert chk.passed()
    assert ens.info["alias_fraction"] < 0.01


def test_trajectories_are_reproducible(params, lor, osc):
    a = synthesize_sigma(osc, params, lor, 256, 0.05, 10, seed=42)
    b = synthesize_sigma(osc, params, lor, 256, 0.05, 100, seed=42)
    assert np.array_equal(a.trajectory(3), b.trajectory(3))
    assert a.provenance == b.provenance
    c = synthesize_sigma(osc, params, lor, 256, 0.05, 10, seed=43)
    assert not np.array_equal(a.trajectory(3), c.trajectory(3))
    with pytest.raises(IndexError):
        a.trajectory(10)


def test_stationarity(params, lor, osc):
    ens = synthesize_sigma(osc, params, lor, 3000, 0.05, 100, seed=5)
    assert stationarity(ens, [0, 10, 40]).passed


def test_standard_error_scales_as_inverse_root(params, lor, osc):
    # doubling the ensemble divides the standard error by sqrt(2)
    se = [autocovariance(synthesize(white(1.0), 256, 0.1, n, seed=1, bandlimited=True), 0).stderr[0]
          for n in (400, 800, 1600)]
    assert se[0] / se[1] == pytest.approx(math.sqrt(2), rel=0.15)
    assert se[0] / se[2] == pytest.approx(2.0, rel=0.15)


def test_ensemble_diffusion_zero_lag(params, lor, osc):
    ens = synthesize_sigma(osc, params, lor, 256, 0.05, 5, seed=1)
    t, mean, se = ensemble_diffusion(ens, [0, 3])
    assert mean[0] == 0.0 and t[0] == 0.0


def test_dump_roundtrip(tmp_path, params, lor, osc):
    ens = synthesize_sigma(osc, params, lor, 128, 0.05, 4, seed=9)
    p = tmp_path / "e.bin"
    dump(ens, p)
    head, data = load(p)
    assert head == {"n_traj": 4, "n_samples": 128, "dt": 0.05, "seed": 9}
    assert np.array_equal(data[2], ens.trajectory(2))
    (tmp_path / "x.bin").write_bytes(b"junk" * 20)
    with pytest.raises(ValueError):
        load(tmp_path / "x.bin")
    assert summary(ens)["seed"] == 9


def test_negative_target_refused():
    with pytest.raises(SynthesisError):
        bin_masses(lambda w: np.cos(np.asarray(w)), 64, 0.1, bandlimited=True)


def test_aliased_target_refused():
    with pytest.raises(SynthesisError, match="Nyquist"):
        bin_masses(lambda w: 1 / (1 + np.asarray(w) ** 2), 64, 1.0)


def test_odd_spectra_refused(params, lor, osc):
    with pytest.raises(ParityError):
        bin_masses(spectrum(osc, params, lor, "xi", "qq"), 64, 0.1)
    with pytest.raises(ParityError):
        bin_masses(input_position_spectra(osc, params)[0], 64, 0.1)


def test_diffusion_validation_needs_coverage(params, lor, free, osc):
    short = synthesize_sigma(free, params, lor, 1024, 5e-5, 2, seed=1)
    with pytest.raises(FitError):
        validate_diffusion(short)
    bound = synthesize_sigma(osc, params, lor, 256, 0.05, 2, seed=1)
    with pytest.raises(ValueError):
        validate_diffusion(bound)
