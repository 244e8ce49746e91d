"""Standard and ultimate quantum limits of an interferometric position readout.

Only the optimized bounds are evaluated; the measurement chain itself
(phase and intensity noise, squeezing) is not simulated.

``omega_S``, the upper edge of the mid-band window, is not defined by the
model; it is taken as ``omega_C / 10`` and labeled as such in reports.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import integrate_panels
from .response import Harmonic, chi_coupled, require_stable
from .spectra import theta, xi_qq_coupled


def omega_s(model):
    """Interpreted mid-band upper edge, ``omega_C / 10``."""
    return model.omega_c / 10


def _harmonic(s):
    if not isinstance(s, Harmonic):
        raise ValueError("quantum-limit formulas are written for a harmonic suspension")


def sql_spectrum(s, params, model, omega):
    """``|chi_qq[w]|``."""
    return np.abs(chi_coupled(s, params, model, omega).qq)


def uql_spectrum(s, params, model, omega):
    """``sigma_qq[w] = |xi_qq[w]|`` (coupled)."""
    return np.abs(xi_qq_coupled(s, params, model, omega))


def noise_energy(s, params, model, omega, limit="SQL"):
    """Noise energy per unit bandwidth, in action units.

    SQL: ``hbar theta(w) m0 (w0**2 + w**2) (|xi_qq| + |chi_qq|)``;
    UQL: ``hbar theta(w) m0 (w0**2 + w**2) 2 |xi_qq|``.
    """
    _harmonic(s)
    omega = np.asarray(omega, dtype=float)
    pref = params.hbar * theta(omega) * params.m0 * (s.omega0**2 + omega**2)
    xi = np.abs(xi_qq_coupled(s, params, model, omega))
    if limit.upper() == "SQL":
        return pref * (xi + np.abs(chi_coupled(s, params, model, omega).qq))
    if limit.upper() == "UQL":
        return pref * 2 * xi
    raise ValueError(f"limit must be 'SQL' or 'UQL', got {limit!r}")


@dataclass(frozen=True)
class Band:
    """One-sided detection band ``G = 1`` on ``[center - half_width, center + half_width]``.

    ``two_B = int dw/2pi G`` is the bandwidth normalization.
    """

    center: float
    half_width: float

    def __post_init__(self):
        if not (self.half_width > 0 and self.center - self.half_width > 0):
            raise ValueError("band must lie on w > 0 with positive half-width")

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        return (np.abs(omega - self.center) <= self.half_width).astype(float)

    @property
    def edges(self):
        return self.center - self.half_width, self.center + self.half_width

    @property
    def two_B(self):
        return 2 * self.half_width / (2 * math.pi)


@dataclass(frozen=True)
class NoiseBudget:
    s: object
    params: object
    model: object
    omega: np.ndarray
    sigma_sql: np.ndarray
    sigma_uql: np.ndarray
    n_sql: np.ndarray
    n_uql: np.ndarray
    omega_s: float

    def plateau(self, lo, hi):
        """Mid-band plateau ratios over ``[lo, hi]``.

        Returns the extreme values of ``N_SQL/hbar`` and
        ``N_UQL/(2 hbar w tau Gamma0)`` on the grid points in the window.
        """
        sel = (self.omega >= lo) & (self.omega <= hi)
        if not np.any(sel):
            raise ValueError("no grid points in the plateau window")
        w = self.omega[sel]
        hb = self.params.hbar
        r_sql = self.n_sql[sel] / hb
        r_uql = self.n_uql[sel] / (2 * hb * w * self.params.tau * self.model.gamma0)
        return {
            "window": [float(lo), float(hi)],
            "sql_min": float(r_sql.min()), "sql_max": float(r_sql.max()),
            "uql_min": float(r_uql.min()), "uql_max": float(r_uql.max()),
            "sql_dev": float(np.max(np.abs(r_sql - 1))), "uql_dev": float(np.max(np.abs(r_uql - 1))),
        }

    def rows(self):
        return np.column_stack([self.omega, self.sigma_sql, self.sigma_uql, self.n_sql, self.n_uql])


def noise_budget(s, params, model, omega):
    """SQL/UQL spectra and noise energies on a grid of positive frequencies."""
    _harmonic(s)
    require_stable(params, model)
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("noise budget grid must be positive")
    return NoiseBudget(
        s, params, model, omega,
        sql_spectrum(s, params, model, omega),
        uql_spectrum(s, params, model, omega),
        noise_energy(s, params, model, omega, "SQL"),
        noise_energy(s, params, model, omega, "UQL"),
        omega_s(model),
    )


@dataclass(frozen=True)
class EffectiveVariance:
    value: float
    closed_form: float
    rel_diff: float
    two_B: float
    in_window: bool
    note: str


def effective_variance(budget, band):
    """UQL noise of the position estimate integrated over a one-sided band.

    The estimate carries the proper position noise plus the added noise,
    uncorrelated and each equal to ``2 hbar theta sigma_qq`` at the ultimate
    limit, so ``int dw/2pi G 4 hbar theta sigma_qq`` is compared with
    ``(2B / w)(2 Gamma0 / 3pi) lambda_C**2``, where ``w`` is the band center. The band is flagged when it leaves ``10 w0 <= w -+ B <= omega_S``.
    """
    s, params, model = budget.s, budget.params, budget.model
    if band is None:
        return EffectiveVariance(0.0, 0.0, 0.0, 0.0, True, "empty band")
    lo, hi = band.edges
    f = lambda w: float(band(w) * 4 * params.hbar * theta(w) * xi_qq_coupled(s, params, model, w, check=False))
    v = integrate_panels(f, lo, hi, rtol=1e-10).value / (2 * math.pi)
    two_b = band.two_B
    closed = (two_b / band.center) * (2 * model.gamma0 / (3 * math.pi)) * params.compton_length_sq
    ok = lo >= 10 * s.omega0 and hi <= budget.omega_s
    note = "" if ok else "band outside the mid-band validity window; closed form not expected to hold"
    return EffectiveVariance(v, closed, abs(v / closed - 1) if closed else math.inf, two_b, ok, note)
