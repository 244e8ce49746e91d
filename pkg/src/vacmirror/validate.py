"""Invariant suite run by ``vacmirror run validate``.

Each check returns a :class:`Check` with the measured quantity, its limit
and the margin ``limit - value`` (positive when passing). Diagnostics are
reported with ``limit=None`` and never fail the suite.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .measurement import Band, effective_variance, noise_budget, omega_s
from .moments import (equal_time_commutator, heisenberg_check, line_mass, moment_report, variance_q, variance_v,
                      virial_check)
from .response import Discrete, Harmonic, chi_coupled, chi_FF_in, effective_mass
from .scattering import Gaussian, Lorentzian, Rational4, cutoff_frequency, kk_reconstruct, stability_check
from .spectra import c_from_xi, resonance_peaks, spectrum, xi_FF_in, xi_Fq_coupled, xi_FF_coupled, xi_qq_coupled
from .timedomain import diffusion, find_poles, log_law_slopes


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    limit: float | None
    detail: str = ""

    @property
    def passed(self):
        return self.limit is None or (np.isfinite(self.value) and self.value <= self.limit)

    @property
    def margin(self):
        return None if self.limit is None else self.limit - self.value

    def to_dict(self):
        d = asdict(self)
        d.update(passed=self.passed, margin=self.margin)
        return d


def fd_grid(s, params, model, n=1000):
    """Symmetric grid of ``n`` points: log spacing plus points across each resonance."""
    base = s.omega0 if not s.unbound else 1e-3 * model.scale
    near = []
    for c, w in resonance_peaks(s, params, model):
        near.append(c + w * np.linspace(-20, 20, 21))
    near = np.concatenate(near) if near else np.empty(0)
    m = n // 2 - near.size
    pos = np.concatenate([np.logspace(math.log10(base) - 3, math.log10(model.scale) + 4, m), near])
    pos = np.sort(pos)
    return np.concatenate([-pos[::-1], pos])


def fd_residuals(s, params, model, omega):
    """``max |2i xi - (chi[w] - chi[-w])| / max |chi|`` per pair."""
    out = {}
    cp, cm = chi_coupled(s, params, model, omega), chi_coupled(s, params, model, -omega)
    xis = {
        "qq": xi_qq_coupled(s, params, model, omega),
        "Fq": xi_Fq_coupled(s, params, model, omega),
        "FF": xi_FF_coupled(s, params, model, omega),
    }
    for pair, xi in xis.items():
        a, b = getattr(cp, pair), getattr(cm, pair)
        out[f"{pair}_coupled"] = float(np.max(np.abs(2j * xi - (a - b))) / np.max(np.abs(a)))
    a, b = chi_FF_in(params, model, omega), chi_FF_in(params, model, -omega)
    xi = xi_FF_in(params, model, omega)
    out["FF_input"] = float(np.max(np.abs(2j * xi - (a - b))) / np.max(np.abs(a)))
    return out


def kk_error(model, lo=0.01, hi=10.0):
    """Relative error of ``Gamma_I`` rebuilt from ``Gamma_R`` samples."""
    sc = model.scale
    w = np.concatenate([[0.0], np.logspace(-4, 4, 3001) * sc])
    tab = kk_reconstruct(w, model.gamma_r(w))
    x = np.logspace(math.log10(lo), math.log10(hi), 200) * sc
    ref = model.gamma_i(x)
    return float(np.max(np.abs(tab.gamma_i(x) - ref) / np.abs(ref)))


def peak_count(s, params, model):
    """Number of resonances whose sigma_qq stands above both flanks at 5 widths."""
    n = 0
    sg = spectrum(s, params, model, "sigma", "qq")
    for c, w in resonance_peaks(s, params, model):
        v = sg(np.array([c - 5 * w, c, c + 5 * w, -c]))
        if v[1] > v[0] and v[1] > v[2] and abs(v[3] - v[1]) <= 1e-12 * v[1]:
            n += 1
    return n


def run_suite(sc, tol=None):
    """All checks that apply to a scenario."""
    s, params, model, budget = sc.suspension, sc.params, sc.model, sc.budget
    checks = []
    rep = stability_check(params, model)
    checks.append(Check("stability", 0.0 if rep.passed else 1.0, 0.0, ", ".join(rep.flags)))
    w = fd_grid(s, params, model)
    for pair, r in fd_residuals(s, params, model, w).items():
        checks.append(Check(f"fd_triple_{pair}", r, tol or 1e-9))
    sig = spectrum(s, params, model, "sigma", "qq")
    xi = spectrum(s, params, model, "xi", "qq")
    cc = c_from_xi(xi)
    probe = np.abs(w[::50])
    ref = np.max(np.abs(xi(probe)))
    checks.append(Check("sigma_equals_sign_xi", float(np.max(np.abs(sig(-probe) - xi(probe))) / ref), 1e-14))
    checks.append(Check("C_equals_2hbar_theta_xi", float(np.max(np.abs(cc(probe) - 2 * params.hbar * xi(probe)))
                                                        + np.max(np.abs(cc(-probe)))) / ref, 1e-14))
    if isinstance(model, (Lorentzian, Rational4, Gaussian)):
        checks.append(Check("kramers_kronig_gamma_i", kk_error(model), 1e-3))
    cr = cutoff_frequency(model)
    checks.append(Check("cutoff_asymptote_discrepancy", cr.rel_discrepancy, None,
                        f"-i w Gamma at {cr.probe_omega:g} vs omega_C = {cr.omega_c:.12g}"))
    if hasattr(model, "omega_c_exact"):
        checks.append(Check("cutoff_frequency_closed_form", abs(cr.omega_c / model.omega_c_exact - 1), 1e-6))
    em = effective_mass(params, model)
    checks.append(Check("induced_mass_two_routes", em.rel_diff, 1e-8))
    com = equal_time_commutator(s, params, model, budget)
    checks.append(Check("equal_time_commutator", com.rel_dev, 1e-6))
    if s.unbound:
        t = np.logspace(-1, 5, 61) / model.omega_c
        curve = diffusion(s, params, model, t)
        checks.append(Check("diffusion_log_slope", abs(curve.slope / curve.expected_slope - 1), 0.05))
        direct, compton = log_law_slopes(params, model.gamma0)
        checks.append(Check("diffusion_slope_forms", abs(direct / compton - 1), 1e-12))
        return checks
    dec = find_poles(s, params, model)
    if isinstance(s, Harmonic):
        w0 = s.omega0
        target = w0**2 * params.tau * model.gamma0
        checks.append(Check("damping_rate", abs(dec.gamma / target - 1), 5 * w0 * params.tau))
        resid = dec.omega_bar**2 - w0**2 - dec.gamma**2 / 4
        checks.append(Check("shifted_frequency_residual", abs(resid), w0**3 * params.tau))
        dq = variance_q(s, params, model, budget)
        checks.append(Check("position_variance", dq.rel_dev, 10 * w0 * params.tau * model.gamma0))
        grid = np.logspace(-1, math.log10(omega_s(model)), 400) * 1.0
        nb = noise_budget(s, params, model, grid)
        checks.append(Check("uql_below_sql", float(np.max(nb.sigma_uql - nb.sigma_sql) / np.max(nb.sigma_sql)), 0.0))
        lo, hi = sc.limits.get("plateau", (30.0, 300.0))
        pl = nb.plateau(lo, hi)
        checks.append(Check("sql_plateau", pl["sql_dev"], 0.05))
        checks.append(Check("uql_plateau", pl["uql_dev"], 0.05))
        c, h = sc.limits.get("band", (30.0, 1.0))
        ev = effective_variance(nb, Band(c, h))
        checks.append(Check("band_variance_closed_form", ev.rel_diff, 0.1 if ev.in_window else None, ev.note))
        vv = variance_v(s, params, model, budget)
        checks.append(Check("velocity_variance_class", 0.0, None, vv.classification))
        if vv.finite:
            vr = virial_check(s, params, model, budget)
            checks.append(Check("virial_residual", vr.residual, 1e-6))
            hb = heisenberg_check(moment_report(s, params, model, budget), em)
            checks.append(Check("heisenberg", -hb.margin / hb.bound, 0.0))
    if isinstance(s, Discrete):
        trk = line_mass(s, params) / params.m0 - 1
        checks.append(Check("line_sum_rule", abs(trk), None, "line weights vs m0 (informational)"))
        checks.append(Check("peak_pairs_per_level", abs(peak_count(s, params, model) - len(s.levels)), 0))
        dq = variance_q(s, params, model, budget)
        checks.append(Check("position_variance_lines", dq.rel_dev, 1e-3))
    return checks
