"""Frequency integrals of the spectra: variances, commutator, band noise.

Overlines denote ``int dw/2pi``; for even integrands this is
``(1/pi) int_0^inf``. Quadrature uses the breakpoint layout of
:mod:`vacmirror.quadrature` with ladders around the shifted resonances.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import DivergenceError
from .quadrature import breakpoints, integrate_panels, panel_values
from .response import Harmonic, effective_mass, require_stable
from .scattering import decay_exponent
from .spectra import (DeltaComb, SpectralFunction, input_position_spectra, resonance_peaks,
                      xi_qq_coupled)


@dataclass(frozen=True)
class Budget:
    """Quadrature budget: per-panel relative tolerance and subdivision limit."""

    rtol: float = 1e-10
    limit: int = 200


DEFAULT_BUDGET = Budget()


def _layout(s, params, model):
    peaks = resonance_peaks(s, params, model)
    base = s.omega0 if not s.unbound else model.scale * 1e-3
    top = max(model.scale * 1e4, 10 / params.tau)
    return breakpoints(0.0, np.inf, peaks, (base * 1e-4, top))


def _coupled_mean(fn, s, params, model, budget=DEFAULT_BUDGET):
    """``(1/pi) int_0^inf fn(w) dw`` on the standard layout."""
    brk = _layout(s, params, model)
    res = integrate_panels(fn, 0.0, np.inf, rtol=budget.rtol, limit=budget.limit, breaks=brk)
    return res.value / math.pi, res.error / math.pi


def _sigma_qq(s, params, model):
    return lambda w: float(xi_qq_coupled(s, params, model, w, check=False))


@dataclass(frozen=True)
class Variance:
    value: float
    reference: float
    rel_dev: float
    error: float


def variance_q(s, params, model, budget=DEFAULT_BUDGET):
    """``hbar * overline(sigma_qq)`` compared with ``hbar / (2 m0 w0)``."""
    if s.unbound:
        raise DivergenceError("infinite position variance: an unbound mirror has no stationary spread")
    ref = params.hbar / (2 * params.m0 * s.omega0) if isinstance(s, Harmonic) else \
        float(sum(q for _, q in s.lines(params)))
    if model.is_null:
        sigma = input_position_spectra(s, params)[1]
        v = params.hbar * sigma.mean()
        return Variance(v, ref, abs(v / ref - 1), 0.0)
    require_stable(params, model)
    m, err = _coupled_mean(_sigma_qq(s, params, model), s, params, model, budget)
    v = params.hbar * m
    return Variance(v, ref, abs(v / ref - 1), params.hbar * err)


@dataclass(frozen=True)
class VelocityVariance:
    classification: str
    value: float | None
    reference: float
    background: float | None
    omega_max: tuple
    partial: tuple
    increment_ratios: tuple
    log_slope: float
    decay_exponent: float

    @property
    def finite(self):
        return self.classification == "finite"


def _classify_increments(partial):
    inc = np.diff(partial)
    if np.any(inc <= 0):
        return "finite", ()
    ratios = inc[1:] / inc[:-1]
    d = ratios - 1
    if np.all(np.abs(inc) <= 1e-9 * abs(partial[-1])) or np.max(d) < -0.5:
        return "finite", tuple(ratios)
    # polynomial growth in ln(w_max) shows ratios falling towards 1; a power law keeps them constant
    if d[-1] < 0.9 * d[0]:
        return "log-divergent", tuple(ratios)
    return "power-divergent", tuple(ratios)


def variance_v(s, params, model, budget=DEFAULT_BUDGET, decades=(3, 6)):
    """``hbar * overline(w**2 sigma_qq)`` or a divergence classification.

    The decay exponent decides whether the integral is attempted. When it
    is not, truncated integrals up to ``w_max = scale * 10**k`` for ``k`` in
    ``decades`` are returned with a least-squares slope against
    ``ln w_max``; the per-decade increments distinguish a logarithmic
    divergence (ratios falling to 1) from a power law (constant ratios).
    """
    if s.unbound:
        raise DivergenceError("velocity variance of an unbound mirror is not stationary")
    ref = params.hbar * s.omega0 / (2 * params.m0) if isinstance(s, Harmonic) else \
        float(sum(w * w * q for w, q in s.lines(params)))
    if model.is_null:
        sigma = input_position_spectra(s, params)[1]
        v = params.hbar * sigma.mean(lambda w: w * w)
        return VelocityVariance("finite", v, ref, 0.0, (), (), (), 0.0, math.inf)
    require_stable(params, model)
    try:
        fit = decay_exponent(model)
        a = fit.exponent
        cls = fit.classification
    except Exception:
        a, cls = math.inf, "super-polynomial"
    sig = _sigma_qq(s, params, model)
    f = lambda w: w * w * sig(w)
    if cls in ("finite", "super-polynomial"):
        m, _ = _coupled_mean(f, s, params, model, budget)
        v = params.hbar * m
        bg = _background(params, model)
        return VelocityVariance("finite", v, ref, bg, (), (), (), 0.0, a)
    ks = np.arange(decades[0], decades[1] + 1)
    wmax = model.scale * 10.0**ks
    brk = _layout(s, params, model)
    brk = np.unique(np.concatenate([brk[brk < wmax[-1]], wmax]))
    pv = panel_values(f, brk, budget.rtol, budget.limit)
    cum = np.concatenate([[0.0], np.cumsum(pv)])
    partial = np.array([params.hbar * cum[np.searchsorted(brk, w)] / math.pi for w in wmax])
    slope = float(np.polyfit(np.log(wmax), partial, 1)[0])
    cls2, ratios = _classify_increments(partial)
    return VelocityVariance(cls2, None, ref, None, tuple(wmax), tuple(partial), ratios, slope, a)


def _background(params, model):
    # broadband part: hbar tau/(pi m0) int w Gamma_R, the off-resonance contribution
    from scipy import integrate

    sc = model.scale
    v = integrate.quad(lambda x: x * float(model.gamma_r(sc * x)), 0, np.inf, limit=400)[0]
    return params.hbar * params.tau * sc * sc * v / (math.pi * params.m0)


def line_mass(s, params):
    """Mass seen at high frequency by the uncoupled suspension."""
    if isinstance(s, Harmonic):
        return params.m0
    return params.hbar / math.fsum(2 * w * q for w, q in s.lines(params))


@dataclass(frozen=True)
class Commutator:
    value: complex
    reference: complex
    uncoupled: complex
    rel_dev: float


def equal_time_commutator(s, params, model, budget=DEFAULT_BUDGET):
    """``-2i hbar overline(w xi_qq)``; ``-i hbar / m_inf`` when coupled.

    For a discrete suspension the mass is the one fixed by the line weights,
    ``hbar / sum_a 2 w_a |q_a|**2``, which equals ``m0`` when the sum rule holds.
    """
    m_lines = line_mass(s, params)
    unc = -1j * params.hbar / m_lines
    if model.is_null:
        if s.unbound:
            return Commutator(unc, unc, unc, 0.0)
        xi = input_position_spectra(s, params)[0]
        v = -2j * params.hbar * xi.mean(lambda w: w)
        return Commutator(v, unc, unc, abs(v / unc - 1))
    require_stable(params, model)
    em = effective_mass(params, model)
    ref = -1j * params.hbar / (m_lines - em.mu)
    xi = lambda w: float(w * xi_qq_coupled(s, params, model, w, check=False))
    if s.unbound:
        # the 1/w singularity of xi_qq is cancelled by the factor w
        brk = breakpoints(0.0, np.inf, (), (model.scale * 1e-7, model.scale * 1e4))
        r = integrate_panels(xi, 0.0, np.inf, rtol=budget.rtol, limit=budget.limit, breaks=brk)
        # the free-mass pole at w = 0 adds (pi/m0) delta(w) to w xi_qq = Y_R
        m = r.value / math.pi + 0.5 / params.m0
    else:
        m, _ = _coupled_mean(xi, s, params, model, budget)
    v = -2j * params.hbar * m
    return Commutator(v, ref, unc, abs(v / ref - 1))


@dataclass(frozen=True)
class RectangularBand:
    """Indicator of ``|w - center| <= half_width``, mirrored to negative ``w`` if two-sided."""

    center: float
    half_width: float
    two_sided: bool = True

    def __post_init__(self):
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        x = np.abs(omega) if self.two_sided else omega
        return ((x >= self.center - self.half_width) & (x <= self.center + self.half_width)).astype(float)

    def intervals(self):
        lo, hi = self.center - self.half_width, self.center + self.half_width
        if not self.two_sided:
            return [(lo, hi)]
        if lo <= 0:
            return [(-hi, hi)]
        return [(-hi, -lo), (lo, hi)]


@dataclass(frozen=True)
class BandNoise:
    variance: float
    two_B: float


def band_noise(sigma, band):
    """``hbar * int dw/2pi G sigma`` and ``2B = int dw/2pi G``.

    ``band`` must expose ``intervals()`` (support) and be callable; line
    spectra are sifted exactly.
    """
    two_b = sum(b - a for a, b in band.intervals()) / (2 * math.pi)
    if isinstance(sigma, DeltaComb):
        return BandNoise(sigma.hbar * sigma.mean(band), two_b)
    peaks = tuple(sigma.peaks) + tuple((-c, w) for c, w in sigma.peaks)
    total, vals = 0.0, []
    for a, b in band.intervals():
        f = lambda w: float(band(w) * sigma(w))
        r = integrate_panels(f, a, b, peaks=peaks, points=(0.0,) if a < 0 < b else ())
        vals.append(r.value)
    total = math.fsum(vals)
    return BandNoise(sigma.hbar * total / (2 * math.pi), two_b)


@dataclass(frozen=True)
class VirialReport:
    lhs: float
    rhs: float
    residual: float
    dq2: float
    dv2: float


def virial_check(s, params, model, budget=DEFAULT_BUDGET):
    """``hbar overline(sigma_Fq)`` against ``m0 (w0**2 dq2 - dv2)``.

    Both sides are integrated on the same breakpoints; the residual is
    relative to ``m0 dv2``.
    """
    if model.is_null:
        q = variance_q(s, params, model).value
        v = variance_v(s, params, model).value
        sig = input_position_spectra(s, params)[1]
        lhs = params.hbar * sig.mean(lambda w: s.inv_chi_in(params, w))
        rhs = params.m0 * (s.omega0**2 * q - v)
        return VirialReport(lhs, rhs, abs(lhs - rhs) / (params.m0 * v), q, v)
    vv = variance_v(s, params, model, budget)
    if not vv.finite:
        raise DivergenceError(f"virial relation needs a finite velocity variance ({vv.classification})")
    q = variance_q(s, params, model, budget).value
    sig = _sigma_qq(s, params, model)
    fq = lambda w: float(s.inv_chi_in(params, w)) * sig(w)
    m, _ = _coupled_mean(fq, s, params, model, budget)
    lhs = params.hbar * m
    rhs = params.m0 * (s.omega0**2 * q - vv.value)
    return VirialReport(lhs, rhs, abs(lhs - rhs) / (params.m0 * vv.value), q, vv.value)


@dataclass(frozen=True)
class HeisenbergReport:
    passed: bool
    product: float
    bound: float
    bound_m0: float
    margin: float


def heisenberg_check(report, masses, slack=1e-9):
    """``dq * dv >= hbar / (2 m_inf)`` for full (not band-limited) variances."""
    if report.dv2 is None:
        raise DivergenceError("Heisenberg check needs a finite velocity variance")
    prod = math.sqrt(report.dq2 * report.dv2)
    hbar = masses.params.hbar
    bound = hbar / (2 * masses.m_inf)
    margin = prod - bound
    return HeisenbergReport(bool(margin >= -slack * bound), prod, bound, hbar / (2 * masses.m0), margin)


@dataclass(frozen=True)
class MomentReport:
    dq2: float | None
    dv2: float | None
    dv2_class: str
    commutator: complex | None
    dq2_reference: float | None = None
    dv2_reference: float | None = None
    tolerances: dict = field(default_factory=dict)
    bands: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        c = d.pop("commutator")
        d["commutator"] = None if c is None else {"real": c.real, "imag": c.imag}
        return d


def moment_report(s, params, model, budget=DEFAULT_BUDGET):
    """Everything this module computes for one configuration."""
    dq = variance_q(s, params, model, budget) if not s.unbound else None
    vv = variance_v(s, params, model, budget) if not s.unbound else None
    try:
        com = equal_time_commutator(s, params, model, budget).value
    except DivergenceError:
        com = None
    details = {}
    if vv is not None and not vv.finite:
        details["dv2_partial"] = {"omega_max": list(vv.omega_max), "value": list(vv.partial),
                                  "slope_ln_omega_max": vv.log_slope}
    return MomentReport(
        dq2=None if dq is None else dq.value,
        dv2=None if vv is None else vv.value,
        dv2_class="not stationary" if vv is None else vv.classification,
        commutator=com,
        dq2_reference=None if dq is None else dq.reference,
        dv2_reference=None if vv is None else vv.reference,
        tolerances={"rtol": budget.rtol, "limit": budget.limit},
        details=details,
    )
