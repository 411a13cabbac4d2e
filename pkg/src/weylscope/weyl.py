"""Two-term counting asymptotics, remainder, dyadic averages, exponent fits.

The smooth comparison term is

    N(lambda) ~ c_n vol(Omega) lambda^n  +/-  c'_n vol(dOmega) lambda^{n-1}

with the Neumann sign positive and the Dirichlet sign negative; R(lambda)
is everything left over.  Between consecutive eigenvalues R is a constant
minus that smooth polynomial-type term, so |R| integrates segment by
segment in closed form once the (at most one) sign change per monotone
piece is located.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import BeyondValidity, DegenerateFit, UnsupportedKind
from .geometry import BoundaryCurve, HigherDomainSpec
from .spectra import DIRICHLET, NEUMANN, Spectrum


@dataclass(frozen=True)
class WeylContext:
    dim: int
    volume: float
    boundary_volume: float
    bc: str
    mean_curvature_integral: Optional[float] = None
    scalar_curvature_integral: float = 0.0

    def __post_init__(self):
        if self.volume < 0 or self.boundary_volume < 0:
            raise ValueError("volumes must be non-negative")
        if self.bc not in (DIRICHLET, NEUMANN):
            raise ValueError(f"unknown bc {self.bc!r}")

    @property
    def sign(self) -> int:
        return 1 if self.bc == NEUMANN else -1

    @property
    def main_coeff(self) -> float:
        n = self.dim
        return self.volume / ((4 * math.pi) ** (n / 2)
                              * math.gamma(n / 2 + 1))

    @property
    def boundary_coeff(self) -> float:
        n = self.dim
        return self.boundary_volume / (2 ** (n + 1)
                                       * math.pi ** ((n - 1) / 2)
                                       * math.gamma((n + 1) / 2))

    def smooth_term(self, lam):
        lam = np.asarray(lam, dtype=float)
        n = self.dim
        return (self.main_coeff * lam ** n
                + self.sign * self.boundary_coeff * lam ** (n - 1))

    def smooth_term_antideriv(self, lam):
        lam = np.asarray(lam, dtype=float)
        n = self.dim
        return (self.main_coeff * lam ** (n + 1) / (n + 1)
                + self.sign * self.boundary_coeff * lam ** n / n)

    def smooth_term_deriv(self, lam):
        lam = np.asarray(lam, dtype=float)
        n = self.dim
        return (n * self.main_coeff * lam ** (n - 1)
                + self.sign * (n - 1) * self.boundary_coeff * lam ** (n - 2))

    @classmethod
    def from_curve(cls, curve: BoundaryCurve, bc: str) -> "WeylContext":
        return cls(dim=2, volume=curve.area, boundary_volume=curve.perimeter,
                   bc=bc)

    @classmethod
    def from_higher(cls, spec: HigherDomainSpec, bc: str) -> "WeylContext":
        return cls(dim=spec.dim, volume=spec.volume,
                   boundary_volume=spec.boundary_volume, bc=bc,
                   mean_curvature_integral=spec.total_mean_curvature,
                   scalar_curvature_integral=spec.scalar_curvature_integral)


@dataclass
class RemainderSeries:
    grid: np.ndarray
    values: np.ndarray
    context: WeylContext
    provenance: str


def counting_function(spectrum: Spectrum, lam) -> np.ndarray:
    """Multiplicity-weighted N(lambda); errors beyond the validity ceiling."""
    spectrum.check_validity(lam)
    return spectrum.count_upto(lam)


def weyl_remainder(spectrum: Spectrum, ctx: WeylContext, lam):
    """R(lambda) = N(lambda) - smooth two-term comparison."""
    n = counting_function(spectrum, lam)
    return np.asarray(n, dtype=float) - ctx.smooth_term(lam)


def remainder_series(spectrum: Spectrum, ctx: WeylContext,
                     grid: np.ndarray) -> RemainderSeries:
    grid = np.asarray(grid, dtype=float)
    return RemainderSeries(grid=grid, values=weyl_remainder(spectrum, ctx, grid),
                           context=ctx, provenance=spectrum.generator)


def _segment_roots(ctx: WeylContext, level: np.ndarray, a: np.ndarray,
                   b: np.ndarray) -> np.ndarray:
    """Root of level - smooth_term on [a, b] where the endpoint signs flip.

    The smooth term is monotone on each segment handed in here, so a
    bracketed, clipped Newton iteration converges for every row at once.
    """
    ra = level - ctx.smooth_term(a)
    rb = level - ctx.smooth_term(b)
    t = a + (b - a) * np.where(ra != rb, ra / np.where(ra != rb, ra - rb, 1.0),
                               0.5)
    lo, hi = a.copy(), b.copy()
    for _ in range(80):
        r = level - ctx.smooth_term(t)
        shrink_hi = (r * ra) <= 0
        hi = np.where(shrink_hi, t, hi)
        lo = np.where(shrink_hi, lo, t)
        dg = ctx.smooth_term_deriv(t)
        step = np.where(dg != 0, r / dg, 0.0)
        t_new = t + step
        bad = (t_new <= lo) | (t_new >= hi) | ~np.isfinite(t_new)
        t_new = np.where(bad, 0.5 * (lo + hi), t_new)
        if np.max(np.abs(t_new - t)) < 1e-13 * np.max(b):
            t = t_new
            break
        t = t_new
    return t


def dyadic_average(spectrum: Spectrum, ctx: WeylContext, lam: float) -> float:
    """(1/lambda) * integral of |R| over [lambda, 2*lambda], exact per segment."""
    spectrum.check_validity(2 * lam)
    lo, hi = float(lam), float(2 * lam)
    inner = spectrum.lambdas[(spectrum.lambdas > lo) & (spectrum.lambdas < hi)]
    edges = np.concatenate([[lo], inner, [hi]])
    a, b = edges[:-1], edges[1:]
    mid = 0.5 * (a + b)
    level = spectrum.count_upto(mid).astype(float)

    # split segments at the lone critical point of the smooth term, if any
    n, s = ctx.dim, ctx.sign
    if s < 0 and ctx.main_coeff > 0:
        t_crit = ((n - 1) * ctx.boundary_coeff) / (n * ctx.main_coeff)
        cut = (a < t_crit) & (t_crit < b)
        if np.any(cut):
            a = np.concatenate([a, np.full(cut.sum(), t_crit)])
            b = np.concatenate([b[~cut], np.full(cut.sum(), t_crit),
                                b[cut]])
            a = np.sort(a)
            b = np.sort(b)
            mid = 0.5 * (a + b)
            level = spectrum.count_upto(mid).astype(float)

    G = ctx.smooth_term_antideriv
    signed = level * (b - a) - (G(b) - G(a))
    ra = level - ctx.smooth_term(a)
    rb = level - ctx.smooth_term(b)
    flip = (ra * rb) < 0
    total = np.sum(np.abs(signed[~flip]))
    if np.any(flip):
        r = _segment_roots(ctx, level[flip], a[flip], b[flip])
        left = level[flip] * (r - a[flip]) - (G(r) - G(a[flip]))
        right = level[flip] * (b[flip] - r) - (G(b[flip]) - G(r))
        total += np.sum(np.abs(left) + np.abs(right))
    return float(total / lam)


def dyadic_windows(lambda_floor: float, lambda_max: float,
                   ratio: float = 1.5) -> List[float]:
    """Geometric window anchors with 2*lambda inside the spectrum."""
    top = lambda_max / 2.0
    out = []
    lam = top
    while lam >= lambda_floor:
        out.append(lam)
        lam /= ratio
    return sorted(out)


@dataclass
class ExponentFit:
    alpha: float
    intercept: float
    half_width: float
    weighted_alpha: float
    n_points: int


def exponent_fit(points: Sequence[Tuple[float, float]]) -> ExponentFit:
    """Log-log least squares slope with a standard-error half-width."""
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 5:
        raise ValueError("need at least 5 points for an exponent fit")
    if any(y <= 0 for _, y in pts) or any(x <= 0 for x, _ in pts):
        raise DegenerateFit("exponent fit needs positive averages")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), res, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ np.array([slope, intercept])
    dof = max(len(pts) - 2, 1)
    s2 = float(resid @ resid) / dof
    sxx = float(np.sum((x - x.mean()) ** 2))
    half = math.sqrt(s2 / sxx) if sxx > 0 else float("inf")
    # spacing-weighted variant: weight by the log-x gaps
    w = np.gradient(x)
    W = np.diag(w / w.sum())
    Aw = A.T @ W @ A
    bw = A.T @ W @ y
    slope_w = float(np.linalg.solve(Aw, bw)[0])
    return ExponentFit(alpha=float(slope), intercept=float(intercept),
                       half_width=float(half), weighted_alpha=slope_w,
                       n_points=len(pts))


@dataclass
class ThirdTermReport:
    scalar_curvature_integral: float
    mean_curvature_integral: Optional[float]
    predicted_order: int
    polyhedron_flag: bool
    coefficient_nonzero: bool


def third_term_coefficients(spec: HigherDomainSpec) -> ThirdTermReport:
    """Third-term ingredients and the predicted remainder growth order n-2.

    The universal multiplicative constant in front of the combination is
    not pinned down, so only the non-vanishing of scalar-curvature plus
    mean-curvature contributions is reported, never an absolute value.
    """
    n = spec.dim
    if spec.kind == "ball":
        h_int = spec.total_mean_curvature
        combo = spec.scalar_curvature_integral + 2 * n * h_int
        return ThirdTermReport(
            scalar_curvature_integral=0.0,
            mean_curvature_integral=h_int,
            predicted_order=n - 2,
            polyhedron_flag=False,
            coefficient_nonzero=combo != 0.0,
        )
    if spec.kind == "box":
        # smooth formula inapplicable; polyhedra keep the same growth order
        # with a generically non-zero coefficient
        return ThirdTermReport(
            scalar_curvature_integral=0.0,
            mean_curvature_integral=None,
            predicted_order=n - 2,
            polyhedron_flag=True,
            coefficient_nonzero=True,
        )
    raise UnsupportedKind(f"third-term data undefined for {spec.kind!r}")
