"""Smoothed spectral traces, oscillation analysis, and length-spectrum peaks.

The Fourier-side test function is the standard mollifier bump centered at a
period T with half-width eps, normalized to 1 at T and supported away from
the origin.  Its physical-side transform factorizes as

    rho(x) = (eps / 2 pi) * exp(i T x) * g(eps x),
    g(y) = int_{-1}^{1} exp(-1/(1-u^2)) cos(u y) du / exp(-1),

so a single real, even profile g carries all the decay information; it is
tabulated once on a spline grid and the trace sum truncates where
|rho| < tail_tol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import find_peaks

from .billiard import OrbitFamily
from .errors import EpsilonTooLarge, GridTooShort, IsolatedFamily
from .geometry import BoundaryCurve
from .spectra import Spectrum

_PSI0 = math.exp(-1.0)


def bump_profile(x):
    """exp(-1/(1-x^2)) on (-1, 1), zero outside."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    out[inside] = np.exp(-1.0 / (1.0 - xi * xi))
    return out


@dataclass
class TestFunction:
    center: float              # T
    half_width: float          # eps
    tail_tol: float
    x_tail: float
    _g_spline: CubicSpline = field(repr=False, default=None)
    _g_nodes: np.ndarray = field(repr=False, default=None)
    _g_weights: np.ndarray = field(repr=False, default=None)

    def rho_hat(self, t):
        """Fourier-side bump, equal to 1 at the center."""
        u = (np.asarray(t, dtype=float) - self.center) / self.half_width
        return bump_profile(u) / _PSI0

    def _g_direct(self, y):
        y = np.atleast_1d(np.abs(np.asarray(y, dtype=float)))
        psi = bump_profile(self._g_nodes) * self._g_weights
        return (np.cos(np.outer(y, self._g_nodes)) @ psi) / _PSI0

    def rho(self, x, direct: bool = False):
        """Physical-side test function (complex)."""
        x = np.asarray(x, dtype=float)
        y = self.half_width * np.abs(x)
        if direct:
            g = self._g_direct(y)
        else:
            g = np.where(y <= self._g_spline.x[-1], self._g_spline(y), 0.0)
        amp = self.half_width / (2 * math.pi) * g
        return amp * np.exp(1j * self.center * x)


def build_test_function(T: float, eps: float,
                        tail_tol: float = 1e-8) -> TestFunction:
    """Bump test function with support [T-eps, T+eps]; needs eps < T."""
    if not 0 < eps:
        raise ValueError("eps must be positive")
    if eps >= T:
        raise EpsilonTooLarge(
            f"eps={eps} >= T={T}: the Fourier support would contain 0")

    y_block = 50.0
    pref = eps / (2 * math.pi)
    # quadrature sized for the largest oscillation frequency we will meet
    y_probe = y_block
    nodes, weights = None, None

    def ensure_quadrature(y_max):
        nonlocal nodes, weights
        n = int(200 + 4 * y_max)
        if nodes is None or nodes.size < n:
            nodes, weights = np.polynomial.legendre.leggauss(n)

    tf = TestFunction(center=T, half_width=eps, tail_tol=tail_tol, x_tail=0.0)
    dy = 0.02
    ys, gs = [np.array([0.0])], None
    ensure_quadrature(y_block)
    tf._g_nodes, tf._g_weights = nodes, weights
    g0 = tf._g_direct(np.array([0.0]))
    gs = [g0]
    y_lo = 0.0
    last_above = 0.0
    while True:
        y_hi = y_lo + y_block
        ensure_quadrature(y_hi)
        tf._g_nodes, tf._g_weights = nodes, weights
        yy = np.arange(y_lo + dy, y_hi + dy / 2, dy)
        gg = tf._g_direct(yy)
        ys.append(yy)
        gs.append(gg)
        above = np.abs(gg) * pref > tail_tol
        if above.any():
            last_above = yy[np.nonzero(above)[0][-1]]
        if not above.any() and y_lo > 0:
            break
        y_lo = y_hi
        if y_lo > 5e4:
            break
    y_all = np.concatenate(ys)
    g_all = np.concatenate(gs)
    tf._g_spline = CubicSpline(y_all, g_all)
    tf.x_tail = (last_above + dy) / eps
    return tf


@dataclass
class TraceSeries:
    grid: np.ndarray
    values: np.ndarray          # complex S(lambda)
    test_function: TestFunction
    provenance: str
    truncation_flag: bool


def smoothed_trace(spectrum: Spectrum, tf: TestFunction,
                   grid: np.ndarray) -> TraceSeries:
    """S(lambda) = sum_j mult_j rho(lambda_j - lambda), tail-truncated."""
    grid = np.asarray(grid, dtype=float)
    flag = False
    if grid.size:
        if grid.max() + tf.x_tail > spectrum.lambda_max * (1 + 1e-12):
            flag = True
        if (spectrum.lambda_min_valid > 0
                and grid.min() - tf.x_tail < spectrum.lambda_min_valid):
            flag = True
    lams, mults = spectrum.lambdas, spectrum.multiplicities
    vals = np.zeros(grid.size, dtype=complex)
    for i, lam in enumerate(grid):
        a = np.searchsorted(lams, lam - tf.x_tail)
        b = np.searchsorted(lams, lam + tf.x_tail, side="right")
        if b > a:
            x = lams[a:b] - lam
            vals[i] = np.sum(mults[a:b] * tf.rho(x))
    return TraceSeries(grid=grid, values=vals, test_function=tf,
                       provenance=spectrum.generator, truncation_flag=flag)


@dataclass
class OscillationReport:
    frequency: float
    exponent: float
    plateau_band: Tuple[float, float]
    plateau_median: float
    envelope: List[Tuple[float, float]]


def _dominant_frequency(grid, values):
    n = grid.size
    dt = grid[1] - grid[0]
    window = np.hanning(n)
    F = np.fft.fft((values - values.mean()) * window)
    freqs = 2 * math.pi * np.fft.fftfreq(n, d=dt)
    k = int(np.argmax(np.abs(F)))
    # parabolic refinement on log magnitude
    mag = np.abs(F)
    if 0 < k < n - 1 and mag[k - 1] > 0 and mag[k + 1] > 0:
        la, lb, lc = np.log(mag[k - 1]), np.log(mag[k]), np.log(mag[k + 1])
        denom = la - 2 * lb + lc
        shift = 0.5 * (la - lc) / denom if denom != 0 else 0.0
        shift = float(np.clip(shift, -0.5, 0.5))
    else:
        shift = 0.0
    df = freqs[1] - freqs[0]
    return abs(float(freqs[k] + shift * df))


def oscillation_analysis(ts: TraceSeries, expected_d: int) -> OscillationReport:
    """Carrier frequency, envelope growth exponent, and the lambda^{d/2} plateau."""
    grid, vals = ts.grid, ts.values
    if grid.size < 200 or grid[-1] < 4 * grid[0]:
        raise GridTooShort("need >= 200 points spanning a factor of 4")
    if not np.allclose(np.diff(grid), grid[1] - grid[0], rtol=1e-9):
        raise ValueError("oscillation analysis expects a uniform grid")

    freq = _dominant_frequency(grid, vals)

    # envelope from |S| maxima over sliding windows of one carrier period
    width = 2 * math.pi / max(freq, 1e-12)
    n_per = max(int(round(width / (grid[1] - grid[0]))), 4)
    env = []
    mag = np.abs(vals)
    for start in range(0, grid.size - n_per + 1, n_per):
        seg = slice(start, start + n_per)
        j = start + int(np.argmax(mag[seg]))
        env.append((float(grid[j]), float(mag[j])))
    ex = [p for p in env if p[1] > 0]
    x = np.log([p[0] for p in ex])
    y = np.log([p[1] for p in ex])
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, _), *_ = np.linalg.lstsq(A, y, rcond=None)

    upper = grid >= grid[grid.size // 2]
    norm = mag[upper] / ts.grid[upper] ** (expected_d / 2)
    return OscillationReport(
        frequency=freq,
        exponent=float(slope),
        plateau_band=(float(norm.min()), float(norm.max())),
        plateau_median=float(np.median(norm)),
        envelope=env,
    )


def plateau_band(ts: TraceSeries, d: int, lam_lo: Optional[float] = None):
    """(min, max, median) of |S| / lambda^{d/2} over grid >= lam_lo."""
    mask = ts.grid >= (lam_lo if lam_lo is not None
                       else ts.grid[ts.grid.size // 2])
    norm = np.abs(ts.values[mask]) / ts.grid[mask] ** (d / 2)
    return float(norm.min()), float(norm.max()), float(np.median(norm))


def geometric_amplitude(curve: BoundaryCurve, family: OrbitFamily,
                        bc: str = "dirichlet") -> float:
    """Leading trace amplitude 2 * loop-integral of F(q) sqrt(1 - eta^2) ds.

    The factor 2 accounts for the time-reversed copy of the invariant
    circle; the Dirichlet and Neumann symbol computations reduce to the
    same integral, so `bc` does not change the value.
    """
    if family.d == 0 or family.loop is None:
        raise IsolatedFamily("amplitude integral needs a one-parameter family")
    loop = family.loop
    s, eta = loop[:, 0], loop[:, 1]
    L = curve.perimeter
    if eta.max() - eta.min() < 1e-10:
        # constant-momentum circle: integrate on the native spectral grid
        gamma = math.sqrt(1.0 - float(np.mean(eta)) ** 2)
        F = curve.support.h(curve.theta)
        w = curve.quadrature_weights()
        return 2.0 * gamma * float(np.sum(F * w))
    # general loop: periodic trapezoid over the recorded samples
    t = curve.theta_of_arclength(s)
    F = curve.support.h(t)
    f = F * np.sqrt(np.clip(1.0 - eta * eta, 0.0, None))
    ds = np.diff(np.concatenate([s, [s[0] + L]]))
    f_next = np.roll(f, -1)
    return 2.0 * float(np.sum(0.5 * (f + f_next) * ds))


def length_spectrum_peaks(spectrum: Spectrum, t_range: Tuple[float, float],
                          smoothing_width: float,
                          noise_factor: float = 6.0,
                          merge_radius: Optional[float] = None):
    """Peaks of |sum_j mult_j w(lambda_j) cos(lambda_j t)| over the window.

    The cosine kernel oscillates under the singularity envelope, so raw
    maxima straddle each length; maxima closer than merge_radius are merged
    into the strongest representative.
    """
    if spectrum.certificate == "unchecked":
        raise ValueError("refusing to locate peaks of an unchecked spectrum")
    if spectrum.lambdas.size == 0:
        return []
    sigma_lam = 1.0 / smoothing_width
    w = spectrum.multiplicities * np.exp(
        -0.5 * (spectrum.lambdas / sigma_lam) ** 2)
    keep = w > 1e-14 * w.max()
    lams, w = spectrum.lambdas[keep], w[keep]

    t_lo, t_hi = t_range
    dt = smoothing_width / 8.0
    t = np.arange(t_lo, t_hi + dt, dt)
    D = np.zeros(t.size)
    block = max(1, int(2e6 / max(lams.size, 1)))
    for i in range(0, t.size, block):
        tt = t[i:i + block]
        D[i:i + block] = np.cos(np.outer(tt, lams)) @ w
    mag = np.abs(D)
    floor = noise_factor * float(np.median(mag))
    idx, props = find_peaks(mag, height=floor, prominence=floor / 2)
    peaks = []
    for j, p in zip(idx, props["prominences"]):
        if 0 < j < t.size - 1:
            a, b, c = mag[j - 1], mag[j], mag[j + 1]
            denom = a - 2 * b + c
            shift = 0.5 * (a - c) / denom if denom != 0 else 0.0
            shift = float(np.clip(shift, -0.5, 0.5))
        else:
            shift = 0.0
        peaks.append((float(t[j] + shift * dt), float(p), float(mag[j])))

    radius = merge_radius if merge_radius is not None else 3 * smoothing_width
    peaks.sort()
    merged = []
    for pk in peaks:
        if merged and pk[0] - merged[-1][-1][0] <= radius:
            merged[-1].append(pk)
        else:
            merged.append([pk])
    return [(max(group, key=lambda q: q[2])[0],
             max(group, key=lambda q: q[2])[1]) for group in merged]
