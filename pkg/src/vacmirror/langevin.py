"""Monte Carlo surrogate: stationary Gaussian trajectories with a target spectrum.

The symmetric spectrum ``hbar sigma_qq`` fixes every symmetric correlation of
the stationary Gaussian state, so a classical process with that spectrum
reproduces the sigma-level observables. Commutator content has no classical
counterpart and is never checked here.

Synthesis is circulant: for ``n`` samples spaced ``dt`` the process is
periodic with ``T = n dt`` and lives on the harmonics ``w_k = 2 pi k / T``.
Each harmonic gets the spectral mass of its bin,

    P_k = int_bin dw/2pi S(w),

as the variance of a complex Gaussian amplitude, so the periodogram of a
trajectory is unbiased for ``P_k`` and the circular autocovariance has mean
``sum_k P_k cos(w_k t)``.

Trajectory ``i`` draws from ``SeedSequence(seed, spawn_key=(i,))``, the
``i``-th child of the master seed, so any subset can be regenerated alone
and every reduction runs in trajectory order.
"""
from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .exceptions import FitError, ParityError, SynthesisError
from .quadrature import integrate_panels
from .spectra import DeltaComb, SpectralFunction

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
ALIAS_LIMIT = 0.01
MAGIC = b"VMENS01\0"


def _bin_edges(n_samples, dt):
    k = n_samples // 2
    dw = 2 * math.pi / (n_samples * dt)
    centers = np.arange(k + 1) * dw
    lo = np.maximum(centers - dw / 2, 0.0)
    hi = centers + dw / 2
    hi[-1] = centers[-1]  # Nyquist bin: the half below, mirrored onto the negative side
    return centers, lo, hi, dw


def _gl_masses(f, lo, hi, chunk=32768):
    mass = np.empty(lo.size)
    worst = np.zeros(lo.size, dtype=bool)
    for a in range(0, lo.size, chunk):
        sl = slice(a, a + chunk)
        mid, half = 0.5 * (hi[sl] + lo[sl]), 0.5 * (hi[sl] - lo[sl])
        w = mid[:, None] + half[:, None] * _GL_X[None, :]
        vals = np.asarray(f(w.ravel()), dtype=float).reshape(w.shape)
        mass[sl] = half * (vals @ _GL_W)
        worst[sl] = (vals < 0).any(axis=1) | ~np.isfinite(vals).all(axis=1)
    return mass, worst


def bin_masses(spectrum, n_samples, dt, scale=None, bandlimited=False, low_cut=False):
    """Spectral mass ``P_k`` of each harmonic ``k = 0 .. n/2``.

    ``spectrum`` is an even :class:`SpectralFunction`, a :class:`DeltaComb`
    or a callable evaluated on ``w >= 0``. Narrow peaks listed on a
    SpectralFunction are integrated adaptively in the bins around them.
    ``low_cut`` drops the zero-frequency bin (for spectra singular at 0).
    Returns ``(masses, info)``.
    """
    if n_samples < 4 or n_samples % 2:
        raise ValueError("n_samples must be even and >= 4")
    if not dt > 0:
        raise ValueError("dt must be positive")
    centers, lo, hi, dw = _bin_edges(n_samples, dt)
    nyq = centers[-1]
    if isinstance(spectrum, DeltaComb):
        return _comb_masses(spectrum, centers, dw, scale)
    if isinstance(spectrum, SpectralFunction):
        if spectrum.parity != "even" or not spectrum.check_parity("even"):
            raise ParityError(f"{spectrum.label} is not an even spectrum")
        if scale is None:
            scale = spectrum.hbar
        peaks = tuple(spectrum.peaks)
    else:
        peaks = ()
    if scale is None:
        scale = 1.0
    f = lambda w: scale * np.asarray(spectrum(w), dtype=float)
    # both halves of the zero and Nyquist bins sit on w >= 0 here and are doubled below
    mass, worst = _gl_masses(f, lo, hi)
    if np.any(worst):
        bad = int(np.argmax(worst))
        raise SynthesisError(f"target spectrum negative or non-finite in bin {bad} (w ~ {centers[bad]:.6g})")
    for c, wd in peaks:
        j = int(round(c / dw))
        for i in range(max(j - 3, 0), min(j + 4, centers.size)):
            mass[i] = integrate_panels(lambda w: float(f(w)), lo[i], hi[i], peaks=[(c, wd)]).value
    mass[0] *= 2
    mass[-1] *= 2
    if low_cut:
        mass[0] = 0.0
    mass = mass / (2 * math.pi)
    beyond = 0.0
    if not bandlimited:
        beyond = 2 * integrate_panels(lambda w: float(f(w)), nyq, np.inf, log_range=(nyq, nyq * 1e8),
                                      rtol=1e-8).value / (2 * math.pi)
    inside = float(mass[0] + 2 * mass[1:-1].sum() + mass[-1])
    frac = beyond / (inside + beyond) if inside + beyond > 0 else 0.0
    if frac > ALIAS_LIMIT:
        raise SynthesisError(f"{frac:.3%} of the spectral mass lies beyond Nyquist ({nyq:.6g}); reduce dt")
    return mass, {"alias_fraction": frac, "variance": inside, "dw": dw}


def _comb_masses(comb, centers, dw, scale):
    if comb.kind == "xi":
        raise ParityError("a commutator comb is odd; synthesize its symmetric counterpart")
    if scale is None:
        scale = comb.hbar
    mass = np.zeros(centers.size)
    offgrid = 0.0
    for f, wgt in zip(comb.frequencies, comb.weights):
        if f < 0:
            continue
        if wgt < 0:
            raise SynthesisError("negative line weight")
        j = int(round(f / dw))
        if j >= centers.size:
            raise SynthesisError(f"line at {f:.6g} is beyond Nyquist")
        offgrid = max(offgrid, abs(f / dw - j))
        # a line at w > 0 stands for the pair at +-w; only the Nyquist bin holds both in one amplitude
        mass[j] += scale * wgt / (2 * math.pi) * (2 if j == centers.size - 1 and j > 0 else 1)
    inside = float(mass[0] + 2 * mass[1:-1].sum() + mass[-1])
    return mass, {"alias_fraction": 0.0, "variance": inside, "dw": dw, "offgrid_bins": offgrid}


def _hash_masses(mass, n_samples, dt, label):
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(mass, dtype="<f8").tobytes())
    h.update(struct.pack("<Qd", n_samples, dt))
    h.update(label.encode())
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class Ensemble:
    """``n_traj`` trajectories of ``n_samples`` points, generated on demand."""

    masses: np.ndarray
    n_samples: int
    dt: float
    n_traj: int
    seed: int
    provenance: str
    label: str = ""
    source: tuple | None = None
    info: dict = field(default_factory=dict)

    @property
    def duration(self):
        return self.n_samples * self.dt

    @property
    def omega(self):
        return np.arange(self.masses.size) * (2 * math.pi / self.duration)

    def amplitudes(self, i):
        rng = np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(i,)))
        g = rng.standard_normal((2, self.masses.size))
        a = np.sqrt(self.masses / 2) * (g[0] + 1j * g[1])
        a[0] = math.sqrt(self.masses[0]) * g[0, 0]
        a[-1] = math.sqrt(self.masses[-1]) * g[0, -1]
        return a

    def trajectory(self, i):
        if not 0 <= i < self.n_traj:
            raise IndexError(i)
        return np.fft.irfft(self.amplitudes(i), n=self.n_samples) * self.n_samples

    def __iter__(self):
        for i in range(self.n_traj):
            yield self.trajectory(i)

    @property
    def trajectories(self):
        return np.stack(list(self))

    def expected_autocovariance(self, lags):
        w = self.omega
        t = np.asarray(lags, dtype=float)[:, None] * self.dt
        mult = np.full(w.size, 2.0)
        mult[0] = mult[-1] = 1.0
        return np.cos(w[None, :] * t) @ (mult * self.masses)

    def expected_diffusion(self, lags):
        """Exact ensemble mean of ``<(q(t) - q(0))**2>/2`` for this surrogate."""
        return self.expected_autocovariance([0])[0] - self.expected_autocovariance(lags)


def synthesize(spectrum, n_samples, dt, n_traj, seed=None, scale=None, bandlimited=False,
               low_cut=False, source=None):
    """Circulant Gaussian ensemble with two-sided spectrum ``scale * spectrum``."""
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    if seed is None:
        seed = int(np.random.SeedSequence().entropy)
    mass, info = bin_masses(spectrum, n_samples, dt, scale, bandlimited, low_cut)
    label = getattr(spectrum, "label", None) or getattr(spectrum, "kind", "") or "callable"
    return Ensemble(mass, int(n_samples), float(dt), int(n_traj), int(seed),
                    _hash_masses(mass, n_samples, dt, label), label, source, info)


def synthesize_sigma(s, params, model, n_samples, dt, n_traj, seed=None):
    """Ensemble for the coupled ``hbar sigma_qq`` of a configuration."""
    from .spectra import spectrum

    sg = spectrum(s, params, model, "sigma", "qq", coupled=True)
    return synthesize(sg, n_samples, dt, n_traj, seed, low_cut=s.unbound, source=(s, params, model))


class _Moments:
    # running mean / variance in a fixed order (Welford)
    def __init__(self):
        self.n, self.mean, self.m2 = 0, None, None

    def add(self, x):
        self.n += 1
        if self.mean is None:
            self.mean = np.array(x, dtype=float)
            self.m2 = np.zeros_like(self.mean)
            return
        d = x - self.mean
        self.mean = self.mean + d / self.n
        self.m2 = self.m2 + d * (x - self.mean)

    @property
    def stderr(self):
        if self.n < 2:
            return np.full_like(self.mean, np.inf)
        return np.sqrt(self.m2 / (self.n - 1) / self.n)


@dataclass(frozen=True)
class PeriodogramCheck:
    omega: np.ndarray
    target: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    within: np.ndarray
    fraction: float
    n_traj: int

    def passed(self, need=0.95):
        return self.fraction >= need


def periodogram(ens, nsigma=3.0):
    """Ensemble periodogram in spectral-density units against the bin-averaged target."""
    norm = ens.duration  # 2 pi / dw
    acc = _Moments()
    for q in ens:
        a = np.fft.rfft(q) / ens.n_samples
        acc.add(np.abs(a) ** 2 * norm)
    target = ens.masses * norm
    keep = ens.masses > 0
    within = np.abs(acc.mean - target) <= nsigma * acc.stderr
    frac = float(np.count_nonzero(within & keep) / max(np.count_nonzero(keep), 1))
    return PeriodogramCheck(ens.omega, target, acc.mean, acc.stderr, within, frac, ens.n_traj)


def _circular_autocov(q, max_lag):
    spec = np.abs(np.fft.rfft(q)) ** 2
    return np.fft.irfft(spec, n=q.size)[: max_lag + 1] / q.size


@dataclass(frozen=True)
class Autocovariance:
    lags: np.ndarray
    t: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray


def autocovariance(ens, max_lag):
    """Circular (time-averaged) autocovariance, ensemble mean and standard error."""
    acc = _Moments()
    for q in ens:
        acc.add(_circular_autocov(q, max_lag))
    lags = np.arange(max_lag + 1)
    return Autocovariance(lags, lags * ens.dt, acc.mean, acc.stderr)


def ensemble_diffusion(ens, lags):
    """``Delta_ens(t) = <(q(t) - q(0))**2> / 2`` at integer lags; zero at lag 0 exactly."""
    lags = np.asarray(lags, dtype=int)
    acc = _Moments()
    for q in ens:
        c = _circular_autocov(q, int(lags.max()))
        acc.add(c[0] - c[lags])
    return lags * ens.dt, acc.mean, acc.stderr


@dataclass(frozen=True)
class StationarityCheck:
    lags: np.ndarray
    thirds: np.ndarray
    max_z: float
    passed: bool


def stationarity(ens, lags, nsigma=3.0):
    """Autocovariance from disjoint thirds of each trajectory, compared pairwise."""
    lags = np.asarray(lags, dtype=int)
    m = ens.n_samples // 3
    if lags.max() >= m:
        raise ValueError("lags exceed a third of the trajectory")
    acc = [_Moments() for _ in range(3)]
    diffs = [_Moments() for _ in range(3)]
    for q in ens:
        parts = []
        for j in range(3):
            seg = q[j * m:(j + 1) * m]
            parts.append(np.array([np.dot(seg[: m - l], seg[l:]) / (m - l) for l in lags]))
            acc[j].add(parts[j])
        for d, (a, b) in zip(diffs, ((0, 1), (1, 2), (0, 2))):
            d.add(parts[a] - parts[b])
    z = max(float(np.max(np.abs(d.mean) / d.stderr)) for d in diffs)
    return StationarityCheck(lags, np.array([a.mean for a in acc]), z, z <= nsigma)


@dataclass(frozen=True)
class DiffusionValidation:
    t: np.ndarray
    ensemble: np.ndarray
    stderr: np.ndarray
    quadrature: np.ndarray
    surrogate: np.ndarray
    max_z: float
    slope: float
    slope_stderr: float
    expected_slope: float
    slope_z: float
    window: tuple
    bias_note: str

    @property
    def passed(self):
        return self.max_z <= 3 and self.slope_z <= 3

    def to_dict(self):
        return {"max_z": self.max_z, "slope": self.slope, "slope_stderr": self.slope_stderr,
                "expected_slope": self.expected_slope, "slope_z": self.slope_z,
                "window": list(self.window), "passed": self.passed, "bias_note": self.bias_note}


def validate_diffusion(ens, window=(1e2, 1e4), n_points=13, nsigma=3.0):
    """Ensemble diffusion against the quadrature curve over ``omega_C t`` in ``window``.

    The surrogate has no modes below ``2 pi / T`` or above Nyquist; the
    first bias grows like ``(t / T)**2`` so the window is capped at ``T/10``.
    """
    from .timedomain import diffusion_delta, log_law_slopes

    if ens.source is None:
        raise ValueError("ensemble was not built from a configuration")
    s, params, model = ens.source
    if not s.unbound:
        raise ValueError("diffusion validation needs the unbound-mirror spectrum")
    wc = model.omega_c
    lo, hi = window[0] / wc, min(window[1] / wc, ens.duration / 10)
    if hi <= lo * 10 or lo < 2 * ens.dt:
        raise FitError(f"trajectory of duration {ens.duration:.4g} with dt {ens.dt:.4g} "
                       f"does not cover omega_C t in {window}")
    lags = np.unique(np.round(np.geomspace(lo, hi, n_points) / ens.dt).astype(int))
    t = lags * ens.dt
    acc, slopes = _Moments(), _Moments()
    x = np.log(t)
    for q in ens:
        c = _circular_autocov(q, int(lags.max()))
        d = c[0] - c[lags]
        acc.add(d)
        slopes.add(np.polyfit(x, d, 1)[0])
    quad = diffusion_delta(s, params, model, t)
    z = np.abs(acc.mean - quad) / acc.stderr
    expected, _ = log_law_slopes(params, model.gamma0)
    slope, slope_se = float(slopes.mean), float(slopes.stderr)
    note = f"no modes below 2pi/T = {2 * math.pi / ens.duration:.4g} or above Nyquist; t <= T/10"
    return DiffusionValidation(t, acc.mean, acc.stderr, quad, ens.expected_diffusion(lags),
                               float(np.max(z)), slope, slope_se, expected,
                               abs(slope - expected) / slope_se, (lo * wc, hi * wc), note)


def dump(ens, path):
    """Write the ensemble as ``MAGIC, N, T, dt, seed`` (little-endian) then row-major float64."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<QQdQ", ens.n_traj, ens.n_samples, ens.dt, ens.seed))
        for q in ens:
            fh.write(np.ascontiguousarray(q, dtype="<f8").tobytes())


def load(path):
    """Read a dump; returns ``(header, samples)`` with samples of shape ``(N, T)``."""
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise ValueError(f"{path} is not an ensemble dump")
        n, t, dt, seed = struct.unpack("<QQdQ", fh.read(32))
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != n * t:
        raise ValueError(f"{path}: expected {n * t} samples, found {data.size}")
    return {"n_traj": n, "n_samples": t, "dt": dt, "seed": seed}, data.reshape(n, t)


def summary(ens, check=None):
    out = {"n_traj": ens.n_traj, "n_samples": ens.n_samples, "dt": ens.dt, "seed": ens.seed,
           "duration": ens.duration, "provenance": ens.provenance, "label": ens.label,
           "variance": ens.info.get("variance"), "alias_fraction": ens.info.get("alias_fraction")}
    if check is not None:
        out["periodogram_fraction"] = check.fraction
    return out
