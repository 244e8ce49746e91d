"""Time-domain response: admittance kernel, commutators, diffusion.

The admittance ``Y[w]`` is split as

    Y[w] = sum_p rho_p / (i (w_p - w)) + D / (lam - i w) + R[w]

where the first sum holds the resonance poles (closed-form damped
exponentials in time), ``D = 1/m_inf - sum_p rho_p`` with ``lam = omega_C``
absorbs the ``1/w`` tail, and the remainder ``R[w] ~ 1/w**2`` is transformed
by exact spline-times-cosine integration. Fourier convention: ``f(t) = int dw/2pi f[w] e^{-iwt}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.interpolate import CubicSpline

from ._hilbert import hilbert_line
from .exceptions import DivergenceError, FitError, ResolutionError
from .quadrature import SplineFourier, breakpoints, integrate_panels
from .response import admittance, effective_mass, require_stable, resonance_poles
from .spectra import xi_qq_coupled


@dataclass(frozen=True)
class PoleDecomposition:
    poles: tuple
    residues: tuple
    gamma: float
    omega_bar: float
    bump_height: float
    bump_rate: float
    m_inf: float
    s: object
    params: object
    model: object

    @property
    def omega_plus(self):
        return self.poles[0]

    @property
    def omega_minus(self):
        return self.poles[1] if len(self.poles) > 1 else self.poles[0]

    @property
    def rho_plus(self):
        return self.residues[0]

    @property
    def rho_minus(self):
        return self.residues[1] if len(self.residues) > 1 else self.residues[0]

    def pole_part(self, omega):
        omega = np.asarray(omega, dtype=complex)
        return sum(r / (1j * (p - omega)) for p, r in zip(self.poles, self.residues))

    def pole_part_time(self, t):
        t = np.asarray(t, dtype=float)
        v = sum(r * np.exp(-1j * p * t) for p, r in zip(self.poles, self.residues))
        return np.where(t >= 0, np.real(v), 0.0)

    def bump_time(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0, self.bump_height * np.exp(-self.bump_rate * np.maximum(t, 0)), 0.0)

    def remainder(self, omega):
        """``R[w]``: admittance minus pole and bump parts."""
        omega = np.asarray(omega, dtype=float)
        return self.delta_y(omega) - self.bump_height / (self.bump_rate - 1j * omega)

    def delta_y(self, omega):
        """``Delta Y[w]``: admittance minus the pole parts."""
        omega = np.asarray(omega, dtype=float)
        if self.s.unbound:
            # closed form avoids subtracting the 1/w pole numerically
            g = self.model.gamma(omega)
            return self.params.tau * g / (self.params.m0 * (1 + 1j * omega * self.params.tau * g))
        return admittance(self.s, self.params, self.model, omega, check=False) - self.pole_part(omega)


def find_poles(s, params, model, max_iter=60):
    """Resonance poles and residues of the coupled admittance.

    Newton iteration on ``1/chi_qq = 0`` from ``w0 - i w0**2 tau Gamma0 / 2``;
    the mirror pole is ``-conj`` of the located one. An unbound mirror has
    a single pole at 0 with residue ``1/m0``.
    """
    require_stable(params, model)
    em = effective_mass(params, model)
    ps, rs = resonance_poles(s, params, model, max_iter)
    if s.unbound:
        poles, res = (0j,), (1.0 / params.m0 + 0j,)
        gamma, wbar = 0.0, 0.0
    else:
        poles, res = [], []
        for p, r in zip(ps, rs):
            poles += [p, -p.conjugate()]
            res += [r, r.conjugate()]
        poles, res = tuple(poles), tuple(res)
        gamma = -2 * ps[0].imag
        wbar = abs(ps[0].real)
    d = 1.0 / em.m_inf - float(np.real(sum(res)))
    lam = model.omega_c
    return PoleDecomposition(poles, res, gamma, wbar, d, lam, em.m_inf, s, params, model)


def _remainder_breaks(dec):
    s, model = dec.s, dec.model
    base = s.omega0 if not s.unbound else model.omega_c * 1e-4
    peaks = tuple((abs(p.real), -2 * p.imag) for p in dec.poles if p.real > 0)
    return breakpoints(0.0, np.inf, peaks, (base * 1e-3, model.omega_c * 1e4), per_decade=6)


def remainder_table(dec, per_decade=40):
    """Spline transform of ``R_R`` tabulated on a log grid (plus 0)."""
    cached = getattr(dec, "_table", None)
    if cached is not None and cached[0] == per_decade:
        return cached[1]
    s, model = dec.s, dec.model
    base = s.omega0 if not s.unbound else model.omega_c * 1e-4
    lo, hi = base * 1e-3, model.omega_c * 1e4
    n = int(per_decade * math.log10(hi / lo)) + 1
    nodes = np.concatenate([[0.0], np.logspace(math.log10(lo), math.log10(hi), n)])
    table = SplineFourier(nodes, np.real(dec.remainder(nodes)))
    object.__setattr__(dec, "_table", (per_decade, table))
    return table


def remainder_time(dec, t, rtol=1e-9, form="cos", method="spline"):
    """Inverse transform of ``R[w]``.

    ``form="cos"`` uses ``(2/pi) int_0^inf R_R cos(wt)`` (valid for ``t > 0``);
    ``form="full"`` adds the sine part, ``(1/pi) int_0^inf (R_R cos + R_I sin)``,
    and is valid for any sign of ``t`` (it vanishes for ``t < 0``).
    ``method="spline"`` integrates a tabulated spline exactly; ``"quad"``
    runs adaptive oscillatory quadrature panel by panel (slow, independent).
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if method == "spline" and form == "cos":
        table = remainder_table(dec)
        return np.where(t > 0, 2 * table.transform(np.abs(t)) / math.pi, 0.0)
    brk = _remainder_breaks(dec)
    out = []
    for ti in t:
        rr = lambda w: float(np.real(dec.remainder(w)))
        if form == "cos":
            if ti <= 0:
                out.append(0.0)
                continue
            v = integrate_panels(rr, 0.0, np.inf, breaks=brk, rtol=rtol, weight="cos", wvar=ti).value
            out.append(2 * v / math.pi)
        else:
            ri = lambda w: float(np.imag(dec.remainder(w)))
            if ti == 0:
                c = integrate_panels(rr, 0.0, np.inf, breaks=brk, rtol=rtol).value
                out.append(c / math.pi)
                continue
            c = integrate_panels(rr, 0.0, np.inf, breaks=brk, rtol=rtol, weight="cos", wvar=abs(ti)).value
            sn = integrate_panels(ri, 0.0, np.inf, breaks=brk, rtol=rtol, weight="sin", wvar=abs(ti)).value
            out.append((c + math.copysign(1.0, ti) * sn) / math.pi)
    return np.array(out)


def _remainder_integral(dec, t, settle=200.0, n=240):
    """``int_0^t R(s) ds`` from the spline transform.

    ``R(t)`` is sampled on ``[0, settle/omega_C]`` and integrated as a
    spline; beyond that it has decayed and the integral is held constant.
    """
    wc = dec.model.omega_c
    grid = np.concatenate([[0.0], np.logspace(-4, math.log10(settle), n) / wc])
    vals = remainder_time(dec, grid)
    vals[0] = 2 * remainder_table(dec).transform(0.0)[0] / math.pi
    anti = CubicSpline(grid, vals).antiderivative()
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return anti(np.clip(t, 0.0, grid[-1]))


@dataclass(frozen=True)
class AdmittanceTime:
    t: np.ndarray
    y: np.ndarray
    pole_part: np.ndarray
    delta_y: np.ndarray
    y0_plus: float
    bump_height: float
    delta_y_zero_freq: float
    decomposition: PoleDecomposition

    def bump_integral(self):
        """Trapezoid integral of ``Delta Y(t)`` over the supplied grid.

        The grid must start within ``0.01/omega_C`` of 0, step no more than
        ``0.1/omega_C`` below ``10/omega_C``, and reach ``30/omega_C``.
        """
        wc = self.decomposition.model.omega_c
        t = self.t[self.t >= 0]
        if t.size < 3 or t[0] > 0.01 / wc or t[-1] < 30 / wc:
            raise ResolutionError("time grid does not cover the bump (need [<=0.01, >=30] / omega_C)")
        near = t[t <= 10 / wc]
        if near.size < 2 or np.max(np.diff(near)) > 0.1 / wc:
            raise ResolutionError("time grid too coarse to resolve the 1/omega_C bump")
        dy = self.delta_y[self.t >= 0]
        # start from the exact value at 0+
        if t[0] > 0:
            t = np.concatenate([[0.0], t])
            dy = np.concatenate([[self.bump_height + 0.0], dy])
        return float(np.trapezoid(dy, t) if hasattr(np, "trapezoid") else np.trapz(dy, t))


def admittance_time(s, params, model, t, rtol=1e-9):
    """``Y(t)`` on a time grid: closed-form poles and bump plus the numerical remainder.

    ``Y(t) = 0`` for ``t < 0``; the value at ``t = 0`` is the limit ``0+``,
    ``1/m_inf``.
    """
    dec = find_poles(s, params, model)
    t = np.asarray(t, dtype=float)
    r = remainder_time(dec, t, rtol)
    tp = t > 0
    rem = np.where(tp, r, 0.0)
    dy = np.where(t >= 0, dec.bump_time(t) + rem, 0.0)
    pp = dec.pole_part_time(t)
    y = pp + dy
    y = np.where(t == 0, 1.0 / dec.m_inf, y)
    dy0 = complex(dec.delta_y(0.0))
    return AdmittanceTime(t, y, pp, dy, 1.0 / dec.m_inf, dec.bump_height, dy0.real, dec)


@dataclass(frozen=True)
class CommutatorReport:
    t: np.ndarray
    value: np.ndarray
    labels: tuple
    inertial_plateau: complex
    quasistatic_plateau: complex
    damped_cosine: np.ndarray


def _regime(t, wc, w0):
    a = abs(t)
    if a <= 0.1 / wc:
        return "inertial plateau"
    if a < 10 / wc:
        return "bump crossover"
    if w0 > 0 and a <= 0.1 / w0:
        return "quasistatic plateau; damped cosine"
    return "damped cosine" if w0 > 0 else "free-mass plateau"


def commutator_vq(s, params, model, t, rtol=1e-9):
    """``<[v(t), q(0)]> = -i hbar (Y(t) + Y(-t))`` with regime labels."""
    t = np.asarray(t, dtype=float)
    at = admittance_time(s, params, model, np.abs(t), rtol)
    val = -1j * params.hbar * at.y
    dec = at.decomposition
    wc = model.omega_c
    labels = tuple(_regime(x, wc, s.omega0) for x in t)
    cosine = -1j * params.hbar / params.m0 * np.cos(dec.omega_bar * t) * np.exp(-dec.gamma * np.abs(t) / 2)
    return CommutatorReport(t, val, labels, -1j * params.hbar / dec.m_inf, -1j * params.hbar / params.m0, cosine)


def xi_qq_time(s, params, model, t):
    """``xi_qq(t) = -(i/2) sign(t) int_0^|t| Y``, purely imaginary and odd."""
    dec = find_poles(s, params, model)
    t = np.asarray(t, dtype=float)
    a = np.abs(t)
    acc = np.zeros(a.shape, dtype=complex)
    for p, r in zip(dec.poles, dec.residues):
        if p == 0:
            acc += r * a
        else:
            acc += r * (1 - np.exp(-1j * p * a)) / (1j * p)
    acc = acc.real + dec.bump_height * (1 - np.exp(-dec.bump_rate * a)) / dec.bump_rate
    acc += _remainder_integral(dec, a)
    return -0.5j * np.sign(t) * acc


@dataclass(frozen=True)
class SigmaTime:
    t: np.ndarray
    sigma: np.ndarray
    truncation_error: float


def sigma_time_from_xi(t, xi, at=None):
    """Symmetric correlation ``sigma(t) = -i H[xi](t)`` from commutator samples.

    ``xi`` holds ``xi(t) = int dw/2pi xi[w] e^{-iwt}`` (purely imaginary for a
    real odd spectrum) on the increasing grid ``t``; the transform is the
    exact principal value of the piecewise-linear interpolant. ``at`` selects
    output times (default: the grid). The truncation estimate assumes an
    oscillating tail: edge amplitude over (pi * dominant frequency * span).
    """
    t = np.asarray(t, dtype=float)
    xi = np.asarray(xi)
    x = t if at is None else np.atleast_1d(np.asarray(at, dtype=float))
    h = hilbert_line(x, t, np.real(xi)) + 1j * hilbert_line(x, t, np.imag(xi))
    sigma = -1j * h
    n = max(3, t.size // 10)
    edge = max(np.max(np.abs(xi[:n])), np.max(np.abs(xi[-n:])))
    span = 0.5 * (t[-1] - t[0])
    im = np.imag(xi[-n:]) if np.any(np.imag(xi[-n:])) else np.real(xi[-n:])
    crossings = np.count_nonzero(np.diff(np.sign(im)) != 0)
    if crossings >= 2:
        freq = math.pi * crossings / (t[-1] - t[-n])
        trunc = 2 * edge / (math.pi * freq * span)
    else:
        trunc = 2 * edge / math.pi
    return SigmaTime(x, np.real_if_close(sigma, tol=1e6), float(trunc))


@dataclass(frozen=True)
class DiffusionCurve:
    t: np.ndarray
    delta: np.ndarray
    slope: float | None
    intercept_t0: float | None
    expected_slope: float
    compton_slope: float
    fit_window: tuple
    fit_note: str = ""

    def to_dict(self):
        return {"slope": self.slope, "intercept_t0": self.intercept_t0,
                "expected_slope": self.expected_slope, "compton_slope": self.compton_slope,
                "fit_window": list(self.fit_window), "fit_note": self.fit_note}


def log_law_slopes(params, gamma0):
    """Diffusion slope from the coupling time and from the Compton length."""
    direct = params.hbar * params.tau * gamma0 / (math.pi * params.m0)
    compton = gamma0 / (6 * math.pi**2) * params.compton_length_sq
    return direct, compton


def _sigma_table(s, params, model, per_decade=40):
    wc = model.omega_c
    lo, hi = wc * 1e-10, wc * 1e4
    n = int(per_decade * math.log10(hi / lo)) + 1
    nodes = np.logspace(math.log10(lo), math.log10(hi), n)
    return SplineFourier(nodes, xi_qq_coupled(s, params, model, nodes, check=False))


def diffusion_delta(s, params, model, t, method="spline", rtol=1e-10):
    """``Delta(t) = (hbar/pi) int_0^inf sigma_qq (1 - cos wt) dw``.

    Below ``w = 1/t`` the factor ``1 - cos`` is integrated directly; above it
    the plain and cosine integrals are taken separately. ``method="spline"``
    tabulates ``sigma_qq`` once (the ``1/w`` behaviour below the first node is
    integrated in closed form); ``method="quad"`` runs adaptive quadrature.
    """
    require_stable(params, model)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if method == "spline":
        tab = _sigma_table(s, params, model)
        x0 = tab.x[0]
        g0 = tab.y[0] * x0
        out = []
        for ti in np.abs(t):
            if ti == 0:
                out.append(0.0)
                continue
            j = int(np.searchsorted(tab.x, 1.0 / ti))
            j = min(j, tab.x.size - 2)
            # sigma ~ g0/w below x0: int (1 - cos wt)/w = Cin(x0 t)
            si, ci = special.sici(x0 * ti)
            low = g0 * (np.euler_gamma + math.log(x0 * ti) - ci)
            mid = tab.weighted(lambda w: 1 - np.cos(w * ti), j)
            above = tab.integral(j) - tab.transform(ti, "cos", start=j)[0]
            out.append(params.hbar * (low + mid + above) / math.pi)
        return np.array(out)
    xi = lambda w: float(xi_qq_coupled(s, params, model, w, check=False))
    out = []
    for ti in t:
        if ti == 0:
            out.append(0.0)
            continue
        w1 = 1.0 / abs(ti)
        low_brk = breakpoints(0.0, w1, (), (w1 * 1e-8, w1))
        low = integrate_panels(lambda w: xi(w) * (1 - math.cos(w * ti)), 0.0, w1, breaks=low_brk, rtol=rtol)
        brk = breakpoints(w1, np.inf, (), (w1, max(model.omega_c, w1) * 1e4), per_decade=6)
        plain = integrate_panels(xi, w1, np.inf, breaks=brk, rtol=rtol)
        osc = integrate_panels(xi, w1, np.inf, breaks=brk, rtol=rtol, weight="cos", wvar=abs(ti))
        out.append(params.hbar * (low.value + plain.value - osc.value) / math.pi)
    return np.array(out)


def diffusion(s, params, model, t, window=(1e2, 1e4)):
    """Quantum diffusion curve of an unbound mirror with a log-law fit.

    The fit of ``Delta`` against ``ln t`` uses grid points with
    ``omega_C t`` inside ``window``; the intercept is returned as ``t0``
    with ``Delta = slope * ln(t / t0)``.
    """
    if not s.unbound:
        raise ValueError("diffusion is defined for an unbound mirror (omega0 = 0)")
    t = np.asarray(t, dtype=float)
    delta = diffusion_delta(s, params, model, t)
    direct, compton = log_law_slopes(params, model.gamma0)
    wc = model.omega_c
    sel = (t * wc >= window[0]) & (t * wc <= window[1])
    if np.count_nonzero(sel) < 3:
        return DiffusionCurve(t, delta, None, None, direct, compton, window,
                              "fit declined: fewer than 3 samples in the asymptotic window")
    slope, icpt = np.polyfit(np.log(t[sel]), delta[sel], 1)
    t0 = math.exp(-icpt / slope) if slope > 0 else None
    return DiffusionCurve(t, delta, float(slope), t0, direct, compton, window)


def require_fit(curve):
    if curve.slope is None:
        raise FitError(curve.fit_note)
    return curve.slope


def second_derivative_at_zero_diverges(vv):
    """``Delta''(0) = Dv2``: infinite exactly when the velocity variance diverges."""
    if vv.finite:
        return False
    if vv.classification in ("log-divergent", "power-divergent"):
        return True
    raise DivergenceError(f"unexpected classification {vv.classification!r}")
