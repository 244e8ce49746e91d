"""Principal-value Hilbert transforms of piecewise-linear sampled functions.

Convention: ``H[f](x) = (1/pi) P int f(y) / (x - y) dy``, so that
``H[cos] = sin`` and ``H[H[f]] = -f``.

The sampled function is interpolated linearly between nodes and every
segment is integrated in closed form, so the principal value at a node is
handled exactly (the two logarithmic singularities of adjacent segments
carry the same coefficient and cancel).
"""
from __future__ import annotations

import numpy as np

_CHUNK = 256


def _safe_log_abs(x):
    ax = np.abs(x)
    return np.log(np.where(ax > 0.0, ax, 1.0))


def _segment_sums(x, y, f, sign):
    """Sum over segments of P int (a + b s) / (x - sign*s) ds for each x."""
    y0, y1 = y[:-1], y[1:]
    b = np.diff(f) / np.diff(y)
    a = f[:-1] - b * y0
    out = np.empty(x.shape, dtype=float)
    for lo in range(0, x.size, _CHUNK):
        xs = x[lo:lo + _CHUNK, None]
        if sign > 0:
            # int (a + b s)/(x - s) ds = -(a + b x) ln|x - s| - b s
            lin = a + b * xs
            val = -lin * (_safe_log_abs(xs - y1) - _safe_log_abs(xs - y0)) - b * (y1 - y0)
        else:
            # int (a + b s)/(x + s) ds = (a - b x) ln|x + s| + b s
            lin = a - b * xs
            val = lin * (_safe_log_abs(xs + y1) - _safe_log_abs(xs + y0)) + b * (y1 - y0)
        out[lo:lo + _CHUNK] = val.sum(axis=1)
    return out


def hilbert_line(x, y, f):
    """Hilbert transform of samples ``f`` on the strictly increasing grid ``y``.

    The function is taken to vanish outside ``[y[0], y[-1]]``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    return _segment_sums(x, y, f, +1) / np.pi


def _power_tail(x, top, amp, exponent, parity):
    """Contribution of ``amp * (s/top)**-exponent`` on ``s > top`` (both signs).

    Valid for ``|x| < top``; the geometric series in ``(x/top)**2`` is summed
    until it converges.
    """
    r2 = (x / top) ** 2
    total = np.zeros_like(x)
    term = np.ones_like(x)
    k = 0
    while True:
        if parity == "even":
            inc = term / (exponent + 1 + 2 * k)
        else:
            inc = term / (exponent + 2 * k)
        total += inc
        k += 1
        term = term * r2
        if np.all(np.abs(inc) <= 1e-17 * np.abs(total)) or k > 4000:
            break
    if parity == "even":
        return -2.0 * amp * x / top * total / np.pi
    return -2.0 * amp * total / np.pi


def hilbert_halfline(x, y, f, parity, tail=None):
    """Hilbert transform of an even or odd function sampled on ``y >= 0``.

    Parameters
    ----------
    x : array_like
        Evaluation points (any sign).
    y : ndarray
        Strictly increasing nonnegative nodes; ``y[0]`` should be 0.
    f : ndarray
        Samples on ``y``.
    parity : {"even", "odd"}
        Parity of the underlying function.
    tail : (amp, exponent) or None
        Power-law continuation ``amp * (s / y[-1])**-exponent`` beyond the
        last node. The series form requires ``|x| < y[-1]``; points beyond
        that are handled by quadrature of the tail.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    if parity not in ("even", "odd"):
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    s = -1 if parity == "odd" else +1
    # f(-s) = s*f(s):  int_{-inf}^{0} f(u)/(x-u) du = s * int_0^inf f(v)/(x+v) dv
    out = (_segment_sums(x, y, f, +1) + s * _segment_sums(x, y, f, -1)) / np.pi
    if tail is not None:
        amp, exponent = tail
        top = y[-1]
        inside = np.abs(x) < 0.9 * top
        if np.any(inside):
            out[inside] += _power_tail(x[inside], top, amp, exponent, parity)
        if np.any(~inside):
            out[~inside] += _power_tail_quad(x[~inside], top, amp, exponent, parity)
    return out


def _power_tail_quad(x, top, amp, exponent, parity):
    from scipy.integrate import quad

    res = np.empty_like(x)
    for i, xi in enumerate(x):
        ax = abs(xi)
        hi = 4.0 * max(ax, top)

        def g(s):
            return amp * (s / top) ** (-exponent)

        # positive-frequency singular piece: P int g(s)/(x - s) via the cauchy weight
        if abs(ax - top) <= 1e-12 * top:
            # the log singularity at the junction is dropped here exactly as
            # the segment sums drop it (ln 0 -> 0), so the two cancel
            g0 = g(top)
            near, _ = quad(lambda s: (g(s) - g0) / (top - s), top, hi, limit=200)
            near -= g0 * np.log(hi - top)
            other, _ = quad(lambda s: g(s) / (ax + s), top, hi, limit=200)
        elif ax > top:
            pv, _ = quad(g, top, hi, weight="cauchy", wvar=ax, limit=200)
            near = -pv  # int g/(|x|-s) = -int g/(s-|x|)
            other, _ = quad(lambda s: g(s) / (ax + s), top, hi, limit=200)
        else:
            near, _ = quad(lambda s: g(s) / (ax - s), top, hi, limit=200)
            other, _ = quad(lambda s: g(s) / (ax + s), top, hi, limit=200)
        sgn = -1.0 if parity == "odd" else 1.0
        val = near + sgn * other
        # remaining tail beyond hi via the convergent series
        val /= np.pi
        val += _power_tail(np.array([ax]), hi, amp * (hi / top) ** (-exponent), exponent, parity)[0]
        # odd transform of an even function is odd in x, and vice versa
        if parity == "even":
            res[i] = np.sign(xi) * val if xi != 0 else 0.0
        else:
            res[i] = val
    return res
