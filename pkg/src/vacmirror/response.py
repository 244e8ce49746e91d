"""Input and coupled susceptibilities, admittance, impedance, effective mass.

All functions take a real frequency (scalar or array) unless stated. The
infinitesimal ``epsilon`` of the input susceptibility is never given a
numeric value: on-axis evaluation uses the principal-value limit and an
evaluation exactly on a line raises :class:`PoleError`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate

from .exceptions import ConvergenceError, DivergenceError, PoleError, StabilityError, VacMirrorError
from .scattering import CutoffModel, MirrorParams, stability_check


class InstabilityError(VacMirrorError):
    """A pole of the coupled response lies in the upper half plane."""


@dataclass(frozen=True)
class Harmonic:
    omega0: float

    def __post_init__(self):
        if not (np.isfinite(self.omega0) and self.omega0 >= 0):
            raise ValueError(f"omega0 must be finite and >= 0, got {self.omega0!r}")

    @property
    def unbound(self):
        return self.omega0 == 0

    def lines(self, params):
        """``(omega_a, w_a)`` pairs of the line spectrum."""
        if self.unbound:
            return ()
        return ((self.omega0, params.hbar / (2 * params.m0 * self.omega0)),)

    def inv_chi_in(self, params, omega):
        w0 = self.omega0
        return params.m0 * (w0 - omega) * (w0 + omega)

    def dinv_chi_in(self, params, omega):
        return -2 * params.m0 * omega

    def pole_frequencies(self):
        return (self.omega0,)

    def describe(self):
        return {"kind": "harmonic", "omega0": self.omega0}


@dataclass(frozen=True)
class Discrete:
    """Anharmonic suspension: transition frequencies with position weights ``|q_a|**2``."""

    levels: tuple

    def __post_init__(self):
        lv = tuple((float(w), float(q)) for w, q in self.levels)
        if not lv:
            raise ValueError("discrete suspension needs at least one level")
        for w, q in lv:
            if not (np.isfinite(w) and w > 0 and np.isfinite(q) and q > 0):
                raise ValueError(f"level ({w!r}, {q!r}) must have positive frequency and weight")
        if any(b[0] <= a[0] for a, b in zip(lv[:-1], lv[1:])):
            raise ValueError("levels must be sorted by strictly increasing frequency")
        object.__setattr__(self, "levels", lv)

    @property
    def unbound(self):
        return False

    @property
    def omega0(self):
        return self.levels[0][0]

    def lines(self, params):
        return self.levels

    def inv_chi_in(self, params, omega):
        # hbar * prod(w_a^2 - w^2) / sum_a q_a 2 w_a prod_{b != a}(w_b^2 - w^2); no division by a pole
        omega = np.asarray(omega)
        facs = [(wa - omega) * (wa + omega) for wa, _ in self.levels]
        num = params.hbar * np.prod(facs, axis=0) if len(facs) > 1 else params.hbar * facs[0]
        den = 0
        for i, (wa, qa) in enumerate(self.levels):
            term = 2 * qa * wa
            for j, f in enumerate(facs):
                if j != i:
                    term = term * f
            den = den + term
        return num / den

    def dinv_chi_in(self, params, omega):
        # d/dw of 1/chi = -(chi'/chi^2), with chi' = (1/hbar) sum q 2 w_a 2w/(w_a^2-w^2)^2
        omega = np.asarray(omega)
        inv = self.inv_chi_in(params, omega)
        dchi = sum(qa * 2 * wa * 2 * omega / ((wa - omega) * (wa + omega)) ** 2 for wa, qa in self.levels)
        return -dchi / params.hbar * inv * inv

    def pole_frequencies(self):
        return tuple(w for w, _ in self.levels)

    def describe(self):
        return {"kind": "discrete", "levels": [list(l) for l in self.levels]}


def _pole_check(s, omega):
    w = np.abs(np.real(np.atleast_1d(omega)))
    for p in s.pole_frequencies():
        hit = w == p
        if np.any(hit):
            raise PoleError(float(np.atleast_1d(omega)[hit][0]), "input susceptibility")


def chi_qq_in(s, params, omega):
    """Uncoupled position susceptibility (real on the real axis)."""
    omega = np.asarray(omega, dtype=float)
    _pole_check(s, omega)
    if isinstance(s, Harmonic):
        return 1.0 / s.inv_chi_in(params, omega)
    return sum(qa * 2 * wa / ((wa - omega) * (wa + omega)) for wa, qa in s.levels) / params.hbar


def chi_FF_in(params, model, omega):
    """Motional susceptibility ``i m0 tau omega**3 Gamma[omega]``."""
    omega = np.asarray(omega)
    return 1j * params.m0 * params.tau * omega**3 * model.gamma(omega)


def dchi_FF_in(params, model, omega):
    omega = np.asarray(omega)
    return 1j * params.m0 * params.tau * (3 * omega**2 * model.gamma(omega) + omega**3 * model.dgamma(omega))


@lru_cache(maxsize=64)
def _stability(params, model, threshold):
    return stability_check(params, model, threshold)


def require_stable(params, model, threshold=0.1):
    rep = _stability(params, model, threshold)
    if not rep.passed:
        raise StabilityError(rep)
    return rep


class Coupled(NamedTuple):
    qq: np.ndarray
    Fq: np.ndarray
    FF: np.ndarray


def chi_coupled(s, params, model, omega, check=True):
    """Coupled susceptibilities ``(chi_qq, chi_Fq, chi_FF)``.

    ``chi_qq = 1 / (1/chi_qq_in - chi_FF_in)``, ``chi_Fq = chi_qq / chi_qq_in``
    and ``chi_FF = chi_Fq * chi_FF_in``; harmonic and discrete suspensions
    share this code path.
    """
    if check:
        require_stable(params, model)
    omega = np.asarray(omega)
    inv = s.inv_chi_in(params, omega)
    ff_in = chi_FF_in(params, model, omega)
    qq = 1.0 / (inv - ff_in)
    fq = inv * qq
    return Coupled(qq, fq, fq * ff_in)


def admittance(s, params, model, omega, check=True):
    """Mechanical admittance ``Y = -i omega chi_qq``."""
    omega = np.asarray(omega)
    return -1j * omega * chi_coupled(s, params, model, omega, check).qq


def impedance(s, params, model, omega, check=True):
    """Mechanical impedance ``Z = 1/Y``; a pole at 0 for bound mirrors."""
    if check:
        require_stable(params, model)
    omega = np.asarray(omega)
    if not s.unbound and np.any(omega == 0):
        raise PoleError(0.0, "impedance")
    return (s.inv_chi_in(params, omega) - chi_FF_in(params, model, omega)) / (-1j * omega)


def impedance_r(params, model, omega):
    """Closed form of the dissipative part, ``m0 omega**2 tau Gamma_R``."""
    omega = np.asarray(omega, dtype=float)
    return params.m0 * omega**2 * params.tau * model.gamma_r(omega)


def admittance_r(s, params, model, omega, check=True):
    return np.real(admittance(s, params, model, omega, check))


@dataclass(frozen=True)
class SusceptibilitySet:
    """The five susceptibilities of one configuration as callables."""

    chi_qq_in: Callable
    chi_FF_in: Callable
    chi_qq: Callable
    chi_Fq: Callable
    chi_FF: Callable


def susceptibilities(s, params, model):
    require_stable(params, model)
    return SusceptibilitySet(
        chi_qq_in=lambda w: chi_qq_in(s, params, w),
        chi_FF_in=lambda w: chi_FF_in(params, model, w),
        chi_qq=lambda w: chi_coupled(s, params, model, w, False).qq,
        chi_Fq=lambda w: chi_coupled(s, params, model, w, False).Fq,
        chi_FF=lambda w: chi_coupled(s, params, model, w, False).FF,
    )


@dataclass(frozen=True)
class EffectiveMass:
    params: MirrorParams
    model: CutoffModel
    m0: float
    m_inf: float
    mu: float
    mu_quadrature: float
    rel_diff: float
    values: np.ndarray = None

    def m(self, omega):
        """``m[w] = m0 (1 + i w tau Gamma[w])``."""
        omega = np.asarray(omega)
        return self.m0 * (1 + 1j * omega * self.params.tau * self.model.gamma(omega))

    def dm(self, omega):
        omega = np.asarray(omega)
        g = self.model.gamma(omega)
        return self.m0 * 1j * self.params.tau * (g + omega * self.model.dgamma(omega))

    def mu_of_omega(self, omega):
        """``m0 tau (omega_C + i w Gamma[w])``; equals ``mu`` at 0 and tends to 0."""
        omega = np.asarray(omega)
        return self.m0 * self.params.tau * (self.model.omega_c + 1j * omega * self.model.gamma(omega))


def _mu_quadrature(params, model):
    # int dw/pi xi_FF_in / w^3 on the half line with w = scale * tan(theta)
    sc = model.scale

    def f(th):
        w = sc * math.tan(th)
        xi = params.m0 * params.tau * w**3 * float(model.gamma_r(w))
        return xi / w**3 * sc / math.cos(th) ** 2

    edges = [0.0, math.atan(0.1), math.atan(1.0), math.atan(10.0), math.atan(1e3), math.pi / 2]
    total = math.fsum(integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-12, limit=400)[0]
                      for a, b in zip(edges[:-1], edges[1:]))
    return 2.0 * total / math.pi


def effective_mass(params, model, omega=None):
    """Quasistatic, induced and high-frequency masses.

    ``mu = m0 omega_C tau`` is computed from the cutoff frequency and again
    from the integral of ``xi_FF_in / omega**3`` on an independent grid.
    """
    try:
        wc = model.omega_c
    except DivergenceError as e:
        raise DivergenceError("induced mass undefined: cutoff frequency diverges") from e
    mu = params.m0 * wc * params.tau
    if model.is_null:
        mu_q = 0.0
    else:
        mu_q = _mu_quadrature(params, model)
    rel = abs(mu_q / mu - 1) if mu else abs(mu_q)
    em = EffectiveMass(params, model, params.m0, params.m0 - mu, mu, mu_q, rel)
    if omega is not None:
        object.__setattr__(em, "values", em.m(omega))
    return em


def pole_function(s, params, model):
    """``f(w) = 1/chi_qq[w]`` and its derivative, for complex ``w``."""

    def f(w):
        return s.inv_chi_in(params, w) - chi_FF_in(params, model, w)

    def df(w):
        return s.dinv_chi_in(params, w) - dchi_FF_in(params, model, w)

    return f, df


def newton(f, df, seed, max_iter=60, tol=1e-15):
    w = complex(seed)
    for _ in range(max_iter):
        step = complex(f(w) / df(w))
        w -= step
        if abs(step) <= tol * abs(w):
            return w
    raise ConvergenceError(f"Newton iteration from {seed!r} did not converge in {max_iter} steps")


def resonance_poles(s, params, model, max_iter=60):
    """Positive-frequency poles of the coupled admittance, one per line.

    Returns ``(poles, residues)``; the mirror poles are ``-conj`` of these
    and carry ``conj`` residues. Residues ``rho`` are defined by
    ``Y ~ rho / (i (w_p - w))`` near the pole.
    """
    if s.unbound:
        return (0j,), (1.0 / params.m0 + 0j,)
    f, df = pole_function(s, params, model)
    g0 = model.gamma0
    poles, res = [], []
    for wa, qa in s.lines(params):
        m_line = params.hbar / (2 * qa * wa)
        seed = wa - 0.5j * wa**2 * params.tau * g0 * params.m0 / m_line
        wp = newton(f, df, seed, max_iter)
        if wp.imag > 0:
            raise InstabilityError(f"pole {wp!r} in the upper half plane")
        poles.append(wp)
        res.append(-wp / complex(df(wp)))
    return tuple(poles), tuple(res)
