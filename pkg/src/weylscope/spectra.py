"""Laplace spectra from closed-form generators, plus boundary-trace identities.

Frequencies lambda_j are square roots of Laplace eigenvalues.  Disk and ball
spectra come from Bessel zeros (Newton-polished so the residual is at the
1e-12 level), box spectra from exact lattice enumeration.  Boundary trace
data carries raw normal-derivative (or restriction) samples together with
the interior L2 norm, so the weighted boundary identity

    int_{dOmega} <q, nu> |d_nu phi / lambda|^2 dsigma = 2     (Dirichlet)

can be checked per eigenfunction; the Neumann variant replaces the weight on
the trace by |phi|^2 - lambda^{-2} |d_T phi|^2 up to a lower-order remainder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import special
from scipy.optimize import brentq

from .errors import BeyondValidity, MissingNormalization, UnsupportedKind
from .geometry import BoundaryCurve, HigherDomainSpec

DIRICHLET = "dirichlet"
NEUMANN = "neumann"

_GROUP_TOL = 1e-10   # eigenvalues closer than this are one multiplet


@dataclass
class Spectrum:
    lambdas: np.ndarray            # strictly increasing distinct frequencies
    multiplicities: np.ndarray     # positive integers, aligned with lambdas
    bc: str
    generator: str
    lambda_max: float              # validity ceiling
    certificate: str               # 'exact' | 'weyl_corridor_checked' | 'unchecked'
    lambda_min_valid: float = 0.0  # windowed generators start mid-spectrum
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lambdas = np.asarray(self.lambdas, dtype=float)
        self.multiplicities = np.asarray(self.multiplicities, dtype=np.int64)
        if self.lambdas.size and np.any(np.diff(self.lambdas) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        self._cum = np.concatenate([[0], np.cumsum(self.multiplicities)])

    def count_upto(self, lam) -> np.ndarray:
        """Multiplicity-weighted number of lambda_j <= lam."""
        idx = np.searchsorted(self.lambdas, np.asarray(lam, dtype=float),
                              side="right")
        return self._cum[idx]

    @property
    def total_count(self) -> int:
        return int(self._cum[-1])

    def check_validity(self, lam):
        if np.any(np.asarray(lam) > self.lambda_max * (1 + 1e-12)):
            raise BeyondValidity(
                f"lambda beyond validity ceiling {self.lambda_max}")


def _group(values: np.ndarray, weights: Optional[np.ndarray] = None,
           tol: float = _GROUP_TOL):
    """Sort and merge near-coincident frequencies into multiplets."""
    order = np.argsort(values)
    v = values[order]
    w = (weights[order] if weights is not None
         else np.ones(v.size, dtype=np.int64))
    if v.size == 0:
        return v, w.astype(np.int64)
    splits = np.nonzero(np.diff(v) > tol)[0] + 1
    groups = np.split(np.arange(v.size), splits)
    lam = np.array([v[g].mean() for g in groups])
    mult = np.array([int(w[g].sum()) for g in groups], dtype=np.int64)
    return lam, mult


# --- disk -------------------------------------------------------------------

def _bessel_zeros_upto(m: int, x_max: float, derivative: bool) -> np.ndarray:
    """Zeros of J_m (or J_m') below x_max, Newton-polished."""
    fetch = special.jnp_zeros if derivative else special.jn_zeros
    guess_first = m + 0.81 * m ** (1 / 3) if derivative else m + 1.86 * m ** (1 / 3)
    nt = max(4, int((x_max - guess_first) / 3.0) + 4)
    z = fetch(m, nt)
    while z[-1] <= x_max:
        nt *= 2
        z = fetch(m, nt)
    z = z[z <= x_max + 1.0]
    for _ in range(3):
        if derivative:
            z = z - special.jvp(m, z) / special.jvp(m, z, 2)
        else:
            z = z - special.jv(m, z) / special.jvp(m, z)
    return z[z <= x_max]


def disk_spectrum(radius: float, lambda_max: float, bc: str = DIRICHLET,
                  with_orders: bool = False) -> Spectrum:
    """Dirichlet/Neumann frequencies of a disk from Bessel(-derivative) zeros."""
    if radius <= 0 or lambda_max <= 0:
        raise ValueError("radius and lambda_max must be positive")
    x_max = lambda_max * radius
    vals, mults, orders = [], [], []
    m = 0
    while True:
        z = _bessel_zeros_upto(m, x_max, derivative=(bc == NEUMANN))
        if z.size == 0:
            # Neumann m=0 starts at 3.83 while m=1 starts at 1.84, so an
            # empty order 0 must not end the sweep
            if m == 0:
                m += 1
                continue
            break
        vals.append(z / radius)
        mults.append(np.full(z.size, 1 if m == 0 else 2, dtype=np.int64))
        orders.append(np.full(z.size, m, dtype=np.int64))
        m += 1
    if bc == NEUMANN:
        vals.append(np.array([0.0]))
        mults.append(np.array([1], dtype=np.int64))
        orders.append(np.array([-1], dtype=np.int64))
    v = np.concatenate(vals) if vals else np.array([])
    w = np.concatenate(mults) if mults else np.array([], dtype=np.int64)
    meta = {}
    if with_orders:
        o = np.concatenate(orders)
        srt = np.argsort(v)
        meta["orders"] = o[srt]
        meta["zeros"] = (v[srt] * radius)
    lam, mult = _group(v, w)
    return Spectrum(lam, mult, bc=bc, generator=f"disk(R={radius})",
                    lambda_max=lambda_max, certificate="exact", meta=meta)


# --- ball -------------------------------------------------------------------

def harmonic_multiplicity(n: int, l: int) -> int:
    """Dimension of degree-l spherical harmonics on S^{n-1}."""
    def comb0(a, b):
        return math.comb(a, b) if a >= b >= 0 else 0

    return comb0(l + n - 1, n - 1) - comb0(l + n - 3, n - 1)


def _scan_roots(f, x_lo: float, x_hi: float, step: float) -> List[float]:
    if x_hi <= x_lo:
        return []
    grid = np.arange(x_lo, x_hi + step, step)
    vals = f(grid)
    roots = []
    for i in np.nonzero(vals[:-1] * vals[1:] < 0)[0]:
        roots.append(brentq(f, grid[i], grid[i + 1], xtol=1e-14, rtol=8.9e-16))
    return roots


def ball_spectrum(n: int, radius: float, lambda_max: float,
                  bc: str = DIRICHLET) -> Spectrum:
    """Frequencies of the n-ball via half-integer Bessel crossings."""
    if n < 2:
        raise ValueError("dimension must be >= 2")
    x_max = lambda_max * radius
    vals, mults = [], []
    l = 0
    while True:
        nu = l + n / 2 - 1
        if bc == DIRICHLET:
            f = lambda x: special.jv(nu, x)
        else:
            # Neumann radial condition for u = r^{1-n/2} J_nu(lambda r)
            f = lambda x: x * special.jvp(nu, x) + (1 - n / 2) * special.jv(nu, x)
        roots = _scan_roots(f, max(0.05, nu * 0.5), x_max, step=1.0)
        if not roots:
            if nu > x_max:
                break
            l += 1
            continue
        mult = harmonic_multiplicity(n, l)
        vals.extend(r / radius for r in roots)
        mults.extend([mult] * len(roots))
        l += 1
    if bc == NEUMANN:
        vals.append(0.0)
        mults.append(1)
    lam, mult = _group(np.array(vals), np.array(mults, dtype=np.int64))
    return Spectrum(lam, mult, bc=bc, generator=f"ball(n={n},R={radius})",
                    lambda_max=lambda_max, certificate="exact")


# --- box --------------------------------------------------------------------

def box_spectrum(sides: Sequence[float], lambda_max: float,
                 bc: str = DIRICHLET) -> Spectrum:
    """Rectangular box frequencies by exact lattice enumeration."""
    sides = [float(s) for s in sides]
    if any(s <= 0 for s in sides):
        raise ValueError("sides must be positive")
    lam2_max = lambda_max ** 2
    coef = [(math.pi / s) ** 2 for s in sides]
    start = 1 if bc == DIRICHLET else 0

    chunks: List[np.ndarray] = []

    def recurse(dim: int, acc: float):
        c = coef[dim]
        if dim == len(sides) - 1:
            hi = math.floor(math.sqrt(max(lam2_max - acc, 0.0) / c))
            if hi >= start:
                mm = np.arange(start, hi + 1, dtype=float)
                chunks.append(acc + c * mm * mm)
            return
        m = start
        while acc + c * m * m <= lam2_max:
            recurse(dim + 1, acc + c * m * m)
            m += 1

    recurse(0, 0.0)
    lam2 = np.concatenate(chunks) if chunks else np.array([])
    lam = np.sqrt(lam2)
    lam, mult = _group(lam, tol=1e-9)
    return Spectrum(lam, mult, bc=bc,
                    generator=f"box(sides={tuple(round(s, 12) for s in sides)})",
                    lambda_max=lambda_max, certificate="exact")


# --- boundary traces and the Rellich check ----------------------------------

@dataclass
class BoundaryTrace:
    """Raw boundary data of a single eigenfunction at the curve nodes."""

    lam: float
    normal_deriv: Optional[np.ndarray]     # d_nu phi samples (Dirichlet data)
    restriction: Optional[np.ndarray]      # phi|boundary samples (Neumann data)
    tangential_deriv: Optional[np.ndarray]  # d_T phi|boundary (Neumann data)
    interior_norm: Optional[float]         # L2(Omega) norm of the raw phi


@dataclass
class EigenBoundaryData:
    bc: str
    traces: List[BoundaryTrace]

    def __iter__(self):
        return iter(self.traces)


def disk_eigen_boundary_data(curve: BoundaryCurve, bc: str,
                             count: int) -> EigenBoundaryData:
    """Exact boundary traces for the first `count` disk eigenfunctions.

    Multiplicity-2 levels contribute their cos(m phi) member; the sin member
    gives the same residual by symmetry.
    """
    if curve.spec.kind != "disk":
        raise UnsupportedKind("closed-form boundary data needs a disk")
    R = curve.spec.radius
    lam_hi = 4.0
    spec = disk_spectrum(R, lam_hi, bc=bc, with_orders=True)
    while spec.total_count < count + 2:
        lam_hi *= 1.6
        spec = disk_spectrum(R, lam_hi, bc=bc, with_orders=True)
    orders = spec.meta["orders"]
    zeros = spec.meta["zeros"]
    theta = curve.theta
    traces = []
    for i in range(min(count, orders.size)):
        m, z = int(orders[i]), float(zeros[i])
        if m < 0:   # Neumann constant mode
            norm = math.sqrt(math.pi * R * R)
            traces.append(BoundaryTrace(
                lam=0.0, normal_deriv=None,
                restriction=np.ones_like(theta),
                tangential_deriv=np.zeros_like(theta),
                interior_norm=norm))
            continue
        lam = z / R
        ang = np.cos(m * theta)
        dang = -m * np.sin(m * theta)
        sector = math.pi * (2.0 if m == 0 else 1.0)
        if bc == DIRICHLET:
            # int_0^R J_m(z r/R)^2 r dr = (R^2/2) J_{m+1}(z)^2 at a zero of J_m
            norm = math.sqrt(sector * 0.5 * R * R
                             * special.jv(m + 1, z) ** 2)
            dnu = lam * special.jvp(m, z) * ang
            traces.append(BoundaryTrace(lam=lam, normal_deriv=dnu,
                                        restriction=None,
                                        tangential_deriv=None,
                                        interior_norm=norm))
        else:
            # at a zero of J_m': int = (R^2/2)(1 - m^2/z^2) J_m(z)^2
            norm = math.sqrt(sector * 0.5 * R * R
                             * (1 - m * m / (z * z)) * special.jv(m, z) ** 2)
            traces.append(BoundaryTrace(
                lam=lam, normal_deriv=None,
                restriction=special.jv(m, z) * ang,
                tangential_deriv=special.jv(m, z) * dang / R,
                interior_norm=norm))
    return EigenBoundaryData(bc=bc, traces=traces)


def rellich_check(curve: BoundaryCurve, data: EigenBoundaryData,
                  bc: Optional[str] = None) -> np.ndarray:
    """Residual of the weighted boundary identity, one value per trace."""
    bc = bc or data.bc
    w = curve.quadrature_weights()
    F = curve.support.h(curve.theta)
    out = []
    for tr in data.traces:
        if tr.interior_norm is None or tr.interior_norm <= 0:
            raise MissingNormalization(f"trace at lambda={tr.lam}")
        if bc == DIRICHLET:
            if tr.normal_deriv is None:
                raise MissingNormalization("Dirichlet trace needs d_nu phi")
            u = tr.normal_deriv / (tr.lam * tr.interior_norm)
            out.append(abs(float(np.sum(F * np.abs(u) ** 2 * w)) - 2.0))
        else:
            if tr.restriction is None or tr.tangential_deriv is None:
                raise MissingNormalization(
                    "Neumann trace needs phi and d_T phi on the boundary")
            if tr.lam == 0.0:
                # constant mode: identity reduces to int F / area = 2
                ub = tr.restriction / tr.interior_norm
                out.append(abs(float(np.sum(F * np.abs(ub) ** 2 * w)) - 2.0))
                continue
            ub = tr.restriction / tr.interior_norm
            ut = tr.tangential_deriv / tr.interior_norm
            val = np.sum(F * (np.abs(ub) ** 2
                              - np.abs(ut) ** 2 / tr.lam ** 2) * w)
            out.append(abs(float(val) - 2.0))
    return np.array(out)
