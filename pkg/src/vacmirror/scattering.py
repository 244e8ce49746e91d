"""Mirror scattering models: the cutoff function and its derived constants.

The motional susceptibility of a partially transmitting mirror is
``i m0 tau omega**3 Gamma[omega]`` where ``Gamma`` is a causal cutoff
function: analytic in the upper half plane, ``Gamma[-w] = conj(Gamma[w])``,
nonnegative real part, and ``-i w Gamma[w] -> omega_C`` at high frequency.

Built-in analytic models
------------------------
Lorentzian
    From the reflectivity ``r = -1/(1 - i w/Omega)``.  ``omega_C = 3 Omega``.
Rational4
    ``Gamma_R = G0 / (1 + x**2)**2`` with ``Gamma = G0 (1/(1-ix) + 1/(1-ix)**2) / 2``.
    ``omega_C = G0 Omega / 2`` and decay exponent 4.
Gaussian
    ``Gamma = G0 w(x)`` with ``w`` the Faddeeva function, so that
    ``Gamma_R = G0 exp(-x**2)``.  ``omega_C = G0 Omega / sqrt(pi)``.

Tabulated models are built from samples of ``Gamma_R`` by
:func:`kk_reconstruct`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate, special
from scipy.interpolate import CubicSpline, PchipInterpolator

from ._hilbert import hilbert_halfline
from .exceptions import DivergenceError, FitError, SupportError

# |w/Omega| below which the lorentzian uses its Taylor series; the closed
# form cancels to ~z**3 and loses digits below this
SERIES_THRESHOLD = 0.5
_SERIES_TERMS = 48
# 6 (-1)^(n+1) / (n (n-1)) for n = 3 .. 3 + _SERIES_TERMS - 1, coefficient of z^(n-3)
_SERIES_COEF = np.array([6.0 * (-1) ** (n + 1) / (n * (n - 1)) for n in range(3, 3 + _SERIES_TERMS)])
# |w/Omega| above which the lorentzian uses its expansion in 1/z
ASYMPTOTIC_THRESHOLD = 1e3
# fitted exponents at or below this are treated as the A <= 2 boundary case
VELOCITY_DIVERGENCE_THRESHOLD = 2.05


@dataclass(frozen=True)
class MirrorParams:
    """Mass, coupling time and quantum of action, in reduced units.

    The speed of light is derived from ``tau = hbar / (6 pi m0 c**2)`` and
    never entered independently.
    """

    m0: float = 1.0
    tau: float = 1e-6
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("m0", "tau", "hbar"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")

    @property
    def c_squared(self):
        return self.hbar / (6 * math.pi * self.m0 * self.tau)

    @property
    def c(self):
        return math.sqrt(self.c_squared)

    @property
    def compton_length(self):
        return self.hbar / (self.m0 * self.c)

    @property
    def compton_length_sq(self):
        # = 6 pi tau hbar / m0 exactly
        return 6 * math.pi * self.tau * self.hbar / self.m0


class CutoffModel:
    """Common interface of the cutoff function ``Gamma[omega]``.

    Subclasses implement :meth:`gamma` and :meth:`dgamma`; both accept real
    or complex frequencies and broadcast over arrays.
    """

    kind = "abstract"
    #: characteristic frequency used for fit windows and grids
    scale: float

    def gamma(self, omega):
        raise NotImplementedError

    def dgamma(self, omega):
        raise NotImplementedError

    def gamma_r(self, omega):
        return np.real(self.gamma(np.asarray(omega, dtype=float)))

    def gamma_i(self, omega):
        return np.imag(self.gamma(np.asarray(omega, dtype=float)))

    def __call__(self, omega):
        return self.gamma(omega)

    @property
    def gamma0(self):
        return float(np.real(self.gamma(0.0)))

    @property
    def is_null(self):
        return False

    @cached_property
    def omega_c(self):
        """``(1/pi) int Gamma_R`` over the real line, by quadrature."""
        return cutoff_frequency(self).omega_c

    def describe(self):
        return {"kind": self.kind}


def _clog1p(z):
    # numpy's complex log1p loses the real part for small imaginary z
    a, b = z.real, z.imag
    return 0.5 * np.log1p(2 * a + a * a + b * b) + 1j * np.arctan2(b, 1 + a)


def _check_finite(omega):
    if not np.all(np.isfinite(omega)):
        raise ValueError("frequency must be finite")


@dataclass(frozen=True, eq=True)
class Lorentzian(CutoffModel):
    """Cutoff function of the lorentzian reflectivity ``-1/(1 - i w/Omega)``."""

    omega_cut: float
    strength: float = 1.0

    kind = "lorentzian"

    def __post_init__(self):
        if not self.omega_cut > 0:
            raise ValueError("omega_cut must be positive")
        if self.strength < 0:
            raise ValueError("strength must be nonnegative")

    @property
    def scale(self):
        return self.omega_cut

    @property
    def is_null(self):
        return self.strength == 0

    @staticmethod
    def _series(z):
        out = np.zeros_like(z)
        for c in _SERIES_COEF[::-1]:
            out = out * z + c
        return out

    @staticmethod
    def _dseries(z):
        out = np.zeros_like(z)
        for k in range(_SERIES_TERMS - 1, 0, -1):
            out = out * z + k * _SERIES_COEF[k]
        return out

    @staticmethod
    def _bracket_direct(z):
        return z + z**2 / 2 - (1 + z) * _clog1p(z)

    @staticmethod
    def _bracket_large(z, terms=12):
        # (1+z) ln(1+z) = (1+z) ln z + 1 + sum_k (-1)^(k+1) z^-k / (k (k+1))
        s = np.zeros_like(z)
        zinv = 1 / z
        p = np.ones_like(z)
        for k in range(1, terms + 1):
            p = p * zinv
            s = s + (-1) ** (k + 1) * p / (k * (k + 1))
        return z + z**2 / 2 - (1 + z) * np.log(z) - 1 - s

    @staticmethod
    def _dbracket_large(z, terms=12):
        # z - ln(1+z) with ln(1+z) = ln z + sum_k (-1)^(k+1) z^-k / k
        s = np.zeros_like(z)
        zinv = 1 / z
        p = np.ones_like(z)
        for k in range(1, terms + 1):
            p = p * zinv
            s = s + (-1) ** (k + 1) * p / k
        return z - np.log(z) - s

    def _unit(self, omega, deriv=False):
        omega = np.asarray(omega)
        _check_finite(omega)
        z = np.asarray(-1j * omega / self.omega_cut, dtype=complex)
        az = np.abs(z)
        out = np.empty(z.shape, dtype=complex)
        small = az < SERIES_THRESHOLD
        large = az > ASYMPTOTIC_THRESHOLD
        mid = ~(small | large)
        with np.errstate(divide="ignore", invalid="ignore"):
            if deriv:
                out[small] = self._dseries(z[small])
                zm = z[mid]
                out[mid] = 6 * ((zm - _clog1p(zm)) / zm**3 - 3 * self._bracket_direct(zm) / zm**4)
                zl = z[large]
                out[large] = 6 * (self._dbracket_large(zl) / zl**3 - 3 * self._bracket_large(zl) / zl**4)
                # chain rule dz/domega
                out = out * (-1j / self.omega_cut)
            else:
                out[small] = self._series(z[small])
                zm = z[mid]
                out[mid] = 6 * self._bracket_direct(zm) / zm**3
                zl = z[large]
                out[large] = 6 * self._bracket_large(zl) / zl**3
        return out

    def gamma(self, omega):
        g = self.strength * self._unit(omega)
        return g if g.ndim else g[()]

    def dgamma(self, omega):
        g = self.strength * self._unit(omega, deriv=True)
        return g if g.ndim else g[()]

    def gamma_direct(self, omega):
        """Closed form without the small-argument branch (for cross-checks)."""
        z = np.asarray(-1j * np.asarray(omega) / self.omega_cut, dtype=complex)
        return self.strength * 6 * self._bracket_direct(z) / z**3

    @property
    def omega_c_exact(self):
        return 3.0 * self.strength * self.omega_cut

    def describe(self):
        return {"kind": self.kind, "omega_cut": self.omega_cut, "strength": self.strength}


@dataclass(frozen=True, eq=True)
class Rational4(CutoffModel):
    """``Gamma_R = G0 / (1 + (w/Omega)**2)**2``, decay exponent 4."""

    omega_cut: float
    strength: float = 1.0

    kind = "rational4"

    def __post_init__(self):
        if not self.omega_cut > 0:
            raise ValueError("omega_cut must be positive")
        if self.strength < 0:
            raise ValueError("strength must be nonnegative")

    @property
    def scale(self):
        return self.omega_cut

    @property
    def is_null(self):
        return self.strength == 0

    def gamma(self, omega):
        omega = np.asarray(omega)
        _check_finite(omega)
        u = 1 / (1 - 1j * omega / self.omega_cut)
        return self.strength * 0.5 * (u + u * u)

    def dgamma(self, omega):
        omega = np.asarray(omega)
        u = 1 / (1 - 1j * omega / self.omega_cut)
        # du/dw = i u^2 / Omega
        du = 1j * u * u / self.omega_cut
        return self.strength * 0.5 * (du + 2 * u * du)

    @property
    def omega_c_exact(self):
        return 0.5 * self.strength * self.omega_cut

    def describe(self):
        return {"kind": self.kind, "omega_cut": self.omega_cut, "strength": self.strength}


@dataclass(frozen=True, eq=True)
class Gaussian(CutoffModel):
    """``Gamma_R = G0 exp(-(w/Omega)**2)``; faster than any power law."""

    omega_cut: float
    strength: float = 1.0

    kind = "gaussian"

    def __post_init__(self):
        if not self.omega_cut > 0:
            raise ValueError("omega_cut must be positive")

    @property
    def scale(self):
        return self.omega_cut

    @property
    def is_null(self):
        return self.strength == 0

    def gamma(self, omega):
        omega = np.asarray(omega)
        _check_finite(omega)
        return self.strength * special.wofz(np.asarray(omega / self.omega_cut, dtype=complex))

    def dgamma(self, omega):
        # w'(z) = -2 z w(z) + 2i/sqrt(pi)
        x = np.asarray(np.asarray(omega) / self.omega_cut, dtype=complex)
        return self.strength * (-2 * x * special.wofz(x) + 2j / math.sqrt(math.pi)) / self.omega_cut

    @property
    def omega_c_exact(self):
        return self.strength * self.omega_cut / math.sqrt(math.pi)

    def describe(self):
        return {"kind": self.kind, "omega_cut": self.omega_cut, "strength": self.strength}


@dataclass(frozen=True, eq=False)
class TabulatedCutoff(CutoffModel):
    """Cutoff function reconstructed from samples of its dissipative part.

    ``omega`` is a strictly increasing nonnegative grid starting at 0.
    Beyond the last node ``Gamma_R`` continues as
    ``tail_amp * (w / w_max)**-tail_exponent``.  Use :func:`kk_reconstruct`
    rather than the constructor.
    """

    omega: np.ndarray
    gamma_r_samples: np.ndarray
    gamma_i_samples: np.ndarray
    tail_amp: float
    tail_exponent: float
    extrapolate: bool = False
    _gr: PchipInterpolator = field(init=False, repr=False)
    _gi: CubicSpline = field(init=False, repr=False)

    kind = "tabulated"

    def __post_init__(self):
        object.__setattr__(self, "_gr", PchipInterpolator(self.omega, self.gamma_r_samples))
        object.__setattr__(self, "_gi", CubicSpline(self.omega, self.gamma_i_samples))

    @property
    def scale(self):
        g0 = self.gamma_r_samples[0]
        if self.is_null or g0 <= 0:
            return float(self.omega[-1]) / 100
        # half-width of the equivalent rectangle
        return _gamma_r_integral(self)[0] / g0

    @property
    def top(self):
        return float(self.omega[-1])

    @property
    def is_null(self):
        return not np.any(self.gamma_r_samples)

    def _real_parts(self, w):
        a = np.abs(w)
        if not self.extrapolate and np.any(a > self.top):
            bad = w[a > self.top].flat[0]
            raise SupportError(
                f"omega = {bad!r} outside tabulated support [0, {self.top!r}]; "
                "enable extrapolation to use the power-law tail"
            )
        gr = np.empty(a.shape)
        gi = np.empty(a.shape)
        inside = a <= self.top
        gr[inside] = self._gr(a[inside])
        gi[inside] = self._gi(a[inside])
        if np.any(~inside):
            out = a[~inside]
            gr[~inside] = self.tail_amp * (out / self.top) ** (-self.tail_exponent)
            gi[~inside] = hilbert_halfline(
                out, self.omega, self.gamma_r_samples, "even", tail=(self.tail_amp, self.tail_exponent)
            )
        gi *= np.sign(w)
        return gr, gi

    def gamma(self, omega):
        omega = np.asarray(omega)
        _check_finite(omega)
        if np.iscomplexobj(omega):
            # first-order continuation off the real axis
            re = np.real(omega)
            return self.gamma(re) + self.dgamma(re) * 1j * np.imag(omega)
        w = np.asarray(omega, dtype=float)
        gr, gi = self._real_parts(np.atleast_1d(w))
        out = gr + 1j * gi
        return out.reshape(w.shape) if w.ndim else out[0]

    def dgamma(self, omega):
        w = np.atleast_1d(np.real(np.asarray(omega))).astype(float)
        a = np.abs(w)
        if np.any(a > self.top):
            # log-spaced central difference in the tail
            h = 1e-5 * np.maximum(a, 1.0)
            d = (self.gamma(w + h) - self.gamma(w - h)) / (2 * h)
        else:
            d = np.sign(w) * 0 + self._gr(a, 1) * np.sign(w) + 1j * self._gi(a, 1)
        d = np.asarray(d, dtype=complex)
        return d.reshape(np.shape(omega)) if np.ndim(omega) else d[0]

    def describe(self):
        return {
            "kind": self.kind,
            "n_samples": int(self.omega.size),
            "top": self.top,
            # reported only: nothing forces the samples to start at the nominal strength
            "gamma_at_zero": float(self.gamma_r_samples[0]),
            "tail_amp": self.tail_amp,
            "tail_exponent": self.tail_exponent,
        }


def _fit_tail_exponent(omega, gamma_r):
    """Local log-log slope over the last decade of positive samples."""
    top = omega[-1]
    sel = (omega >= top / 10) & (gamma_r > 0)
    if np.count_nonzero(sel) < 3:
        return None
    slope = np.polyfit(np.log(omega[sel]), np.log(gamma_r[sel]), 1)[0]
    return float(-slope)


def kk_reconstruct(omega, gamma_r, tail_exponent=None, extrapolate=False):
    """Build a causal cutoff function from samples of its real part.

    The imaginary part is the Hilbert transform of the even extension of
    ``gamma_r`` (piecewise-linear, integrated exactly) plus the power-law
    tail beyond the last sample.

    Parameters
    ----------
    omega : array_like
        Strictly increasing nonnegative frequencies. A node at 0 is added
        (holding the first value) when absent.
    gamma_r : array_like
        Samples of ``Gamma_R``; must be nonnegative.
    tail_exponent : float, optional
        Decay exponent of the tail; fitted from the last decade if omitted.
        Must exceed 1 so that ``omega_C`` is finite.
    extrapolate : bool
        Allow evaluation beyond the last sample using the tail.
    """
    omega = np.asarray(omega, dtype=float)
    gamma_r = np.asarray(gamma_r, dtype=float)
    if omega.ndim != 1 or omega.shape != gamma_r.shape or omega.size < 2:
        raise ValueError("omega and gamma_r must be 1-D arrays of equal length >= 2")
    if not np.all(np.isfinite(omega)) or not np.all(np.isfinite(gamma_r)):
        raise ValueError("samples must be finite")
    if omega[0] < 0 or np.any(np.diff(omega) <= 0):
        raise ValueError("omega must be strictly increasing and nonnegative")
    if np.any(gamma_r < 0):
        i = int(np.argmax(gamma_r < 0))
        raise ValueError(f"negative Gamma_R sample {gamma_r[i]!r} at omega = {omega[i]!r} (passivity)")
    if omega[0] > 0:
        omega = np.concatenate([[0.0], omega])
        gamma_r = np.concatenate([[gamma_r[0]], gamma_r])

    amp = float(gamma_r[-1])
    if amp == 0:
        exponent = float(tail_exponent) if tail_exponent is not None else np.inf
    else:
        exponent = tail_exponent if tail_exponent is not None else _fit_tail_exponent(omega, gamma_r)
        if exponent is None or not exponent > 1:
            raise DivergenceError(
                f"tail exponent {exponent!r} <= 1: the cutoff frequency integral diverges"
            )
        exponent = float(exponent)
    tail = (amp, exponent) if amp > 0 else None
    gamma_i = hilbert_halfline(omega, omega, gamma_r, "even", tail=tail)
    gamma_i[0] = 0.0
    return TabulatedCutoff(omega, gamma_r, gamma_i, amp, exponent, extrapolate)


def rational4_samples(omega_cut, strength=1.0, n=3001, decades=(-4, 4)):
    """Samples of the rational-4 dissipative part on a log grid (plus 0)."""
    w = np.concatenate([[0.0], np.logspace(*decades, n) * omega_cut])
    return w, strength / (1 + (w / omega_cut) ** 2) ** 2


@dataclass(frozen=True)
class CutoffReport:
    omega_c: float
    probe_omega: float
    asymptotic: complex
    rel_discrepancy: float
    abs_error: float


def _gamma_r_integral(model):
    """``int_0^inf Gamma_R`` for any model."""
    if isinstance(model, TabulatedCutoff):
        if model.is_null:
            return 0.0, 0.0
        body = integrate.quad(lambda w: float(model._gr(w)), 0, model.top,
                              points=model.omega[1:-1][:: max(1, model.omega.size // 40)],
                              limit=2000)[0]
        # piecewise cubic through the nodes; the trapezoid is a cross-check of the same data
        if model.tail_amp == 0:
            tail = 0.0
        else:
            if model.tail_exponent <= 1:
                raise DivergenceError("tail exponent <= 1: cutoff frequency diverges")
            tail = model.tail_amp * model.top / (model.tail_exponent - 1)
        return body + tail, 1e-12 * abs(body)
    if model.is_null:
        return 0.0, 0.0
    s = model.scale
    edges = [0.0] + [s * 10.0**k for k in range(-3, 5)]
    total, err = [], 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in zip(edges[:-1], edges[1:]):
            v, e = integrate.quad(lambda w: float(model.gamma_r(w)), a, b, limit=200, epsrel=1e-12)
            total.append(v)
            err += e
        # tail in u = 1/w, where slowly decaying tails become integrable endpoint singularities
        v, e = integrate.quad(lambda u: float(model.gamma_r(1 / u)) / u**2, 0, 1 / edges[-1],
                              limit=400, epsrel=1e-12)
    total.append(v)
    err += e
    return math.fsum(total), err


def cutoff_frequency(model, probe=1e3):
    """``omega_C = (1/pi) int Gamma_R dw`` with an asymptotic cross-check.

    The integral is computed by adaptive quadrature over the real line;
    ``-i w Gamma[w]`` is then evaluated at ``w = probe * model.scale`` and
    its relative (complex) distance from ``omega_C`` is reported.

    Raises
    ------
    DivergenceError
        If the tail decays too slowly for the integral to exist.
    """
    half, err = _gamma_r_integral(model)
    omega_c = 2.0 * half / math.pi
    err = 2.0 * err / math.pi
    if model.is_null:
        return CutoffReport(0.0, float("nan"), 0j, 0.0, 0.0)
    w = probe * model.scale
    if isinstance(model, TabulatedCutoff) and not model.extrapolate:
        w = min(w, model.top)
    asym = complex(-1j * w * model.gamma(w))
    return CutoffReport(omega_c, w, asym, abs(asym / omega_c - 1), err)


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    window: tuple
    residual: float
    local_slopes: np.ndarray
    classification: str


def classify_exponent(a):
    """Divergence class implied by a decay exponent."""
    if not np.isfinite(a):
        return "super-polynomial"
    if a <= 1:
        return "cutoff-divergent"
    if a <= VELOCITY_DIVERGENCE_THRESHOLD:
        return "velocity-variance divergent"
    return "finite"


def decay_exponent(model, window=(1e2, 1e4), n=41, growth=1.5):
    """Log-log slope of ``Gamma_R`` over ``[window] * model.scale``.

    Returns the fitted exponent ``A``, the rms residual of the linear fit,
    the local slopes, and a classification. When the local slope at the
    top of the window exceeds ``growth`` times the one at the bottom the
    decay is reported as super-polynomial (exponent ``inf``).
    """
    lo, hi = window
    w = np.logspace(math.log10(lo), math.log10(hi), n) * model.scale
    g = model.gamma_r(w)
    if not np.any(g > 0):
        raise FitError(f"Gamma_R vanishes identically on the window {window}")
    pos = g > 0
    if np.count_nonzero(pos) < 3:
        raise FitError("too few positive samples on the window")
    lw, lg = np.log(w[pos]), np.log(g[pos])
    coef, res, *_ = np.polyfit(lw, lg, 1, full=True)
    a = float(-coef[0])
    resid = float(np.sqrt(res[0] / lw.size)) if res.size else 0.0
    local = -np.gradient(lg, lw)
    cls = None
    if np.count_nonzero(pos) < n or (local[0] > 0 and local[-1] > growth * local[0]):
        cls = "super-polynomial"
        a_report = math.inf
    else:
        a_report = a
        cls = classify_exponent(a)
    return DecayFit(a_report, (lo, hi), resid, local, cls)


@dataclass(frozen=True)
class StabilityReport:
    passed: bool
    omega_c: float
    omega_c_tau: float
    threshold: float
    checks: dict
    flags: tuple

    def to_dict(self):
        return {
            "passed": self.passed,
            "omega_c": self.omega_c,
            "omega_c_tau": self.omega_c_tau,
            "threshold": self.threshold,
            "checks": dict(self.checks),
            "flags": list(self.flags),
        }


def _passivity_grid(model):
    if isinstance(model, TabulatedCutoff):
        return model.omega, model.gamma_r_samples
    w = np.concatenate([[0.0], np.logspace(-4, 6, 2001) * model.scale])
    return w, model.gamma_r(w)


def stability_check(params, model, threshold=0.1):
    """Passivity/stability report; never raises.

    Three checks must pass: ``Gamma_R >= 0`` on the model grid, finite
    ``omega_C``, and ``omega_C * tau < threshold``.
    """
    flags = []
    _, g = _passivity_grid(model)
    passive = bool(np.all(g >= 0))
    if not passive:
        flags.append("passivity violated")
    try:
        wc = model.omega_c
        finite = bool(np.isfinite(wc))
    except DivergenceError:
        wc, finite = math.inf, False
    if not finite:
        flags.append("divergent cutoff")
    prod = wc * params.tau
    slow = bool(prod < threshold)
    if not slow:
        flags.append("runaway regime")
    checks = {"passivity": passive, "finite_cutoff": finite, "weak_coupling": slow}
    return StabilityReport(all(checks.values()), wc, prod, threshold, checks, tuple(flags))
