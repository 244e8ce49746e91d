"""Commutator (xi), symmetric (sigma) and full (C) correlation spectra.

At zero temperature the three spectra of a pair are tied to the
dissipative part of its susceptibility:

    2i xi[w] = chi[w] - chi[-w],   sigma[w] = sign(w) xi[w],   C[w] = 2 hbar theta(w) xi[w]

with ``theta(0) = 1/2``. Input position spectra are pure line spectra and
are represented by :class:`DeltaComb` so that integrals sift them exactly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import ParityError
from .response import Harmonic, chi_coupled, chi_FF_in, require_stable, resonance_poles


def theta(omega):
    """Heaviside step with ``theta(0) = 1/2``."""
    return np.heaviside(omega, 0.5)


def eps(omega):
    return np.sign(omega)


_PARITY_PROBE = np.logspace(-3, 3, 61)


@dataclass(frozen=True)
class SpectralFunction:
    """A spectrum with its declared symmetry and provenance.

    ``peaks`` lists ``(center, width)`` of narrow resonances on ``w > 0``,
    used to place quadrature breakpoints.
    """

    evaluator: Callable
    parity: str
    reality: str
    kind: str
    pair: str
    coupled: bool
    hbar: float = 1.0
    peaks: tuple = ()
    scale: float = 1.0
    meta: dict = field(default_factory=dict)

    def __call__(self, omega):
        return self.evaluator(np.asarray(omega, dtype=float))

    @property
    def label(self):
        return f"{self.kind}_{self.pair}_{'coupled' if self.coupled else 'input'}"

    def check_parity(self, parity=None, rtol=1e-10):
        want = parity or self.parity
        w = _PARITY_PROBE * self.scale
        a, b = self(w), self(-w)
        if want == "odd":
            bad = np.abs(a + b) > rtol * np.maximum(np.abs(a), 1e-300)
        elif want == "even":
            bad = np.abs(a - b) > rtol * np.maximum(np.abs(a), 1e-300)
        else:
            return True
        return not np.any(bad & (np.abs(a) > 0))


@dataclass(frozen=True)
class DeltaComb:
    """Line spectrum ``sum_k weight_k delta(w - freq_k)``."""

    frequencies: np.ndarray
    weights: np.ndarray
    kind: str
    pair: str = "qq"
    hbar: float = 1.0

    @property
    def parity(self):
        return "odd" if self.kind == "xi" else ("none" if self.kind == "C" else "even")

    def mean(self, g=None):
        """``int dw/2pi g[w] S[w]`` by exact sifting."""
        gw = np.ones_like(self.frequencies) if g is None else np.asarray(g(self.frequencies), dtype=float)
        return float(np.sum(gw * self.weights) / (2 * np.pi))


def xi_FF_in(params, model, omega):
    """``m0 tau w**3 Gamma_R[w]``."""
    omega = np.asarray(omega, dtype=float)
    return params.m0 * params.tau * omega**3 * model.gamma_r(omega)


def _harmonic_closed_form(s, params, model, omega):
    omega = np.asarray(omega, dtype=float)
    g = model.gamma(omega)
    w3t = omega**3 * params.tau
    # omega^2 - omega0^2 factored to keep precision near resonance
    det = (omega - s.omega0) * (omega + s.omega0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return w3t * g.real / (params.m0 * ((det - w3t * g.imag) ** 2 + (w3t * g.real) ** 2))


def xi_qq_coupled(s, params, model, omega, path=None, check=True):
    """Coupled position commutator spectrum.

    ``path="closed"`` uses the explicit harmonic expression,
    ``path="product"`` evaluates ``|chi_qq|**2 xi_FF_in``. The default is the
    closed form for harmonic suspensions. For an unbound mirror the value
    diverges like ``tau Gamma0 / (m0 w)`` at 0 (integrable-marginal).
    """
    if check:
        require_stable(params, model)
    if path is None:
        path = "closed" if isinstance(s, Harmonic) else "product"
    if path == "closed":
        if not isinstance(s, Harmonic):
            raise ValueError("closed form is only available for harmonic suspensions")
        return _harmonic_closed_form(s, params, model, omega)
    qq = chi_coupled(s, params, model, omega, check=False).qq
    return np.abs(qq) ** 2 * xi_FF_in(params, model, omega)


def xi_Fq_coupled(s, params, model, omega, check=True):
    """``(1/chi_qq_in) xi_qq``; ``m0 (w0**2 - w**2) xi_qq`` for harmonic suspensions."""
    omega = np.asarray(omega, dtype=float)
    return s.inv_chi_in(params, omega) * xi_qq_coupled(s, params, model, omega, check=check)


def xi_FF_coupled(s, params, model, omega, check=True):
    omega = np.asarray(omega, dtype=float)
    inv = s.inv_chi_in(params, omega)
    return inv * inv * xi_qq_coupled(s, params, model, omega, check=check)


def xi_FF_ratio(s, params, model, omega):
    """``xi_FF / xi_FF_in`` written without the input spectrum (harmonic)."""
    omega = np.asarray(omega, dtype=float)
    g = model.gamma(omega)
    w3t = omega**3 * params.tau
    det = (omega - s.omega0) * (omega + s.omega0)
    return det**2 / ((det - w3t * g.imag) ** 2 + (w3t * g.real) ** 2)


def sigma_from_xi(xi):
    """``sigma[w] = sign(w) xi[w]``; ``xi`` must be odd."""
    if isinstance(xi, DeltaComb):
        if xi.kind != "xi":
            raise ParityError("sigma_from_xi needs a commutator spectrum")
        return DeltaComb(xi.frequencies, np.sign(xi.frequencies) * xi.weights, "sigma", xi.pair, xi.hbar)
    if xi.kind != "xi" or not xi.check_parity("odd"):
        raise ParityError(f"{xi.label} is not an odd commutator spectrum")
    f = xi.evaluator
    return SpectralFunction(lambda w: eps(w) * f(w), "even", "real", "sigma", xi.pair, xi.coupled,
                            xi.hbar, xi.peaks, xi.scale, dict(xi.meta))


def c_from_xi(xi):
    """``C[w] = 2 hbar theta(w) xi[w]``, supported on ``w >= 0``."""
    if isinstance(xi, DeltaComb):
        if xi.kind != "xi":
            raise ParityError("c_from_xi needs a commutator spectrum")
        keep = xi.frequencies >= 0
        return DeltaComb(xi.frequencies[keep], 2 * xi.hbar * theta(xi.frequencies[keep]) * xi.weights[keep],
                         "C", xi.pair, xi.hbar)
    if xi.kind != "xi" or not xi.check_parity("odd"):
        raise ParityError(f"{xi.label} is not an odd commutator spectrum")
    f, hb = xi.evaluator, xi.hbar
    return SpectralFunction(lambda w: 2 * hb * theta(w) * f(w), "none", "real", "C", xi.pair, xi.coupled,
                            xi.hbar, xi.peaks, xi.scale, dict(xi.meta))


def input_position_spectra(s, params):
    """Line spectra ``(xi, sigma, C)`` of the uncoupled position.

    Weights are ``pi w_a / hbar`` at ``+-omega_a`` for xi and sigma, and
    ``2 pi w_a`` at ``+omega_a`` for C.
    """
    lines = s.lines(params)
    if not lines:
        raise ValueError("an unbound mirror has no line spectrum")
    wa = np.array([l[0] for l in lines])
    qa = np.array([l[1] for l in lines])
    freqs = np.concatenate([-wa[::-1], wa])
    base = np.pi * qa / params.hbar
    xi = DeltaComb(freqs, np.concatenate([-base[::-1], base]), "xi", "qq", params.hbar)
    return xi, sigma_from_xi(xi), c_from_xi(xi)


def resonance_peaks(s, params, model):
    """``(center, width)`` of each resonance from the coupled poles."""
    if s.unbound or model.is_null:
        return ()
    poles, _ = resonance_poles(s, params, model)
    return tuple((abs(p.real), -2 * p.imag) for p in poles)


def spectrum(s, params, model, kind="xi", pair="qq", coupled=True):
    """Build a :class:`SpectralFunction` for one pair of one configuration.

    Input force spectra come from the motional susceptibility; input
    position spectra are line spectra, see :func:`input_position_spectra`.
    """
    if kind == "chi":
        if coupled:
            idx = {"qq": 0, "Fq": 1, "FF": 2}[pair]
            ev = lambda w: chi_coupled(s, params, model, w)[idx]
        elif pair == "FF":
            ev = lambda w: chi_FF_in(params, model, w)
        else:
            raise ValueError("input position susceptibility is real; use response.chi_qq_in")
        return SpectralFunction(ev, "none", "complex", "chi", pair, coupled, params.hbar,
                                resonance_peaks(s, params, model) if coupled else (), s.omega0 or model.scale)
    if coupled:
        require_stable(params, model)
        fn = {"qq": xi_qq_coupled, "Fq": xi_Fq_coupled, "FF": xi_FF_coupled}[pair]
        ev = lambda w: fn(s, params, model, w, check=False)
        peaks = resonance_peaks(s, params, model)
    else:
        if pair != "FF":
            xi_c, sg_c, c_c = input_position_spectra(s, params)
            return {"xi": xi_c, "sigma": sg_c, "C": c_c}[kind]
        ev = lambda w: xi_FF_in(params, model, w)
        peaks = ()
    sc = s.omega0 if not s.unbound else model.scale
    xi = SpectralFunction(ev, "odd", "real", "xi", pair, coupled, params.hbar, peaks, sc)
    if kind == "xi":
        return xi
    if kind == "sigma":
        return sigma_from_xi(xi)
    if kind == "C":
        return c_from_xi(xi)
    raise ValueError(f"unknown spectrum kind {kind!r}")


def master_grid(s, params, model, per_decade=40, peak_points=201):
    """Frequency grid for emission: log grid plus refinement around each peak.

    Spans ``[omega0 * 1e-4, 10 / tau]`` with linear windows of width
    ``20 gamma`` around the shifted resonances.
    """
    lo = (s.omega0 if not s.unbound else model.scale * 1e-3) * 1e-4
    hi = 10.0 / params.tau
    n = int(per_decade * np.log10(hi / lo)) + 1
    parts = [np.logspace(np.log10(lo), np.log10(hi), n)]
    for c, wd in resonance_peaks(s, params, model):
        parts.append(np.linspace(c - 10 * wd, c + 10 * wd, peak_points))
    g = np.unique(np.concatenate(parts))
    return g[g > 0]


def write_csv(path, omega, values, header_lines, precision="%.17g"):
    """Two-column CSV with ``#``-prefixed metadata lines."""
    values = np.asarray(values)
    with open(path, "w", newline="\n") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        if np.iscomplexobj(values):
            fh.write("omega,real,imag\n")
            for w, v in zip(omega, values):
                fh.write(f"{precision % w},{precision % v.real},{precision % v.imag}\n")
        else:
            fh.write("omega,value\n")
            for w, v in zip(omega, values):
                fh.write(f"{precision % w},{precision % v}\n")


def write_sidecar(path, sf, extra=None):
    meta = {"kind": sf.kind, "pair": sf.pair, "coupled": sf.coupled, "parity": sf.parity,
            "reality": sf.reality, "units": "reduced (hbar = m0 = 1 unless configured)"}
    meta.update(extra or {})
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
