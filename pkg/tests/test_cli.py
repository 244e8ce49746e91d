import json

import numpy as np
import pytest

from vacmirror import __version__, config
from vacmirror.cli import main
from vacmirror.exceptions import ConfigError
from vacmirror.response import Discrete


@pytest.mark.parametrize("name", config.BUILTIN)
def test_builtins_load(name):
    sc = config.load(name)
    assert sc.name == name
    assert len(sc.hash) == 16


def test_discrete_builtin_obeys_line_sum():
    sc = config.load("anharmonic-3level")
    assert isinstance(sc.suspension, Discrete)
    total = sum(2 * w * q for w, q in sc.suspension.lines(sc.params))
    assert total == pytest.approx(sc.params.hbar / sc.params.m0, rel=1e-12)


@pytest.mark.parametrize("raw", [
    {"name": "x", "suspension": {"kind": "harmonic", "omega0": 1.0}},
    {"name": "x", "cutoff": {"model": "cauchy", "omega_cut": 1.0}, "suspension": {"kind": "harmonic", "omega0": 1.0}},
    {"name": "x", "cutoff": {"model": "lorentzian", "omega_cut": -1.0}, "suspension": {"kind": "harmonic", "omega0": 1.0}},
    {"name": "x", "cutoff": {"model": "lorentzian", "omega_cut": 1e3, "colour": 1}, "suspension": {"kind": "harmonic", "omega0": 1.0}},
    {"name": "x", "cutoff": {"model": "lorentzian", "omega_cut": 1e3}, "suspension": {"kind": "ladder"}},
    {"name": "x", "cutoff": {"model": "lorentzian", "omega_cut": 1e3}, "suspension": {"kind": "harmonic", "omega0": 1.0},
     "limits": {"band": [1.0]}},
    {"name": "x", "extra": 1, "cutoff": {"model": "lorentzian", "omega_cut": 1e3}, "suspension": {"kind": "harmonic", "omega0": 1.0}},
])
def test_bad_schema_rejected(raw):
    with pytest.raises(ConfigError):
        config.from_dict(raw)


def test_hash_tracks_content():
    base = {"name": "x", "cutoff": {"model": "lorentzian", "omega_cut": 1e3}, "suspension": {"kind": "harmonic", "omega0": 1.0}}
    other = json.loads(json.dumps(base))
    other["cutoff"]["omega_cut"] = 2e3
    assert config.from_dict(base).hash != config.from_dict(other).hash
    assert config.from_dict(base).hash == config.from_dict(dict(reversed(list(base.items())))).hash


def test_unknown_command_exit_code(tmp_path):
    assert main(["run", "frobnicate", "desk-default", "--out", str(tmp_path)]) == 2


def test_bad_scenario_exit_code(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text('name = "bad"\n[cutoff]\nmodel = "lorentzian"\n')
    assert main(["run", "moments", str(bad), "--out", str(tmp_path)]) == 3
    assert main(["run", "moments", "no-such-scenario", "--out", str(tmp_path)]) == 3


def test_unstable_scenario(tmp_path):
    p = tmp_path / "hot.toml"
    p.write_text('name = "hot"\n[params]\ntau = 1e-3\n[cutoff]\nmodel = "lorentzian"\nomega_cut = 1e3\n'
                 '[suspension]\nkind = "harmonic"\nomega0 = 1.0\n')
    assert main(["run", "poles", str(p), "--out", str(tmp_path)]) == 3
    code = main(["run", "poles", str(p), "--out", str(tmp_path), "--allow-unstable"])
    assert code == 1
    assert (tmp_path / "hot.poles.stability.json").exists()
    assert json.loads((tmp_path / "hot.poles.error.json").read_text())["error"] == "StabilityError"


def test_unsupported_command_writes_error_report(tmp_path):
    assert main(["run", "limits", "anharmonic-3level", "--out", str(tmp_path)]) == 1
    rep = json.loads((tmp_path / "anharmonic-3level.limits.error.json").read_text())
    assert rep["scenario"] == "anharmonic-3level" and rep["message"]


def test_spectra_artifacts_are_stamped_and_stable(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "spectra", "desk-default", "--out", str(a), "--grid", "coarse"]) == 0
    assert main(["run", "spectra", "desk-default", "--out", str(b), "--grid", "coarse"]) == 0
    f = "desk-default.spectra.sigma_qq_coupled.csv"
    text = (a / f).read_text()
    assert text == (b / f).read_text()
    head = text.splitlines()[:3]
    assert head[0] == "# scenario: desk-default"
    assert head[1] == f"# scenario_hash: {config.load('desk-default').hash}"
    assert head[2] == f"# version: {__version__}"
    data = np.loadtxt(a / f, delimiter=",", comments="#", skiprows=6)
    assert np.all(data[:, 1] > 0)
    assert str(a / f) in capsys.readouterr().out


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("VACMIRROR_OUT", str(tmp_path))
    assert main(["run", "poles", "desk-default"]) == 0
    rep = json.loads((tmp_path / "desk-default.poles.report.json").read_text())
    assert rep["scenario_hash"] == config.load("desk-default").hash


def test_json_format_and_band(tmp_path):
    assert main(["run", "limits", "desk-default", "--out", str(tmp_path), "--format", "json",
                 "--band", "50,2"]) == 0
    budget = json.loads((tmp_path / "desk-default.limits.budget.json").read_text())
    assert set(budget["columns"]) >= {"omega"}
    summ = json.loads((tmp_path / "desk-default.limits.summary.json").read_text())
    assert summ["band"]["center"] == 50.0


def test_validate_command(tmp_path, capsys):
    assert main(["run", "validate", "rational-4", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out


def test_scenarios_listing(capsys):
    assert main(["scenarios"]) == 0
    assert capsys.readouterr().out.split() == list(config.BUILTIN)
