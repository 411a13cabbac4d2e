"""Helmholtz eigenvalues on smooth star-shaped domains by particular solutions.

Trial functions are Fourier-Bessel solutions J_m(lambda r) {cos, sin}(m phi)
about the origin.  For a trial frequency lambda, the matrix of basis values
at boundary plus interior samples is orthonormalized; the smallest singular
value of the boundary block of Q is the sine of the subspace angle between
functions satisfying the boundary condition and the basis span.  Eigenvalues
are the sharp local minima of that sigma(lambda), refined by golden-section
search; multiplicities are read off from how many singular values dip
together.  Completeness is certified against the two-term counting corridor.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg as la
from scipy import special

from .errors import BasisDeficiency, MissedEigenvalueSuspicion
from .geometry import BoundaryCurve
from .spectra import (DIRICHLET, NEUMANN, BoundaryTrace, EigenBoundaryData,
                      Spectrum)
from .weyl import WeylContext


@dataclass
class MpsOptions:
    basis_margin: int = 16          # angular orders beyond ceil(lambda * r_max)
    boundary_ppw: float = 12.0      # boundary samples per wavelength
    grid_step: float = 0.01         # scan step cap (also halved vs mean spacing)
    refine_tol: float = 1e-8        # eigenvalue refinement target
    accept_sigma: float = 0.02      # a refined minimum must dip below this
    mult_factor: float = 10.0       # multiplicity threshold over the sigma floor
    mult_abs: float = 1e-4          # absolute multiplicity ceiling
    pair_suspect: float = 0.035     # sigma_2 below this triggers a fine rescan
    interior_radii: Tuple[float, float] = (0.35, 0.7)
    lambda_cap: float = 80.0        # desk-scale guard, overridable
    boundary_data: bool = True
    drift_limit: float = 0.6        # Weyl-corridor drift before suspicion
    threads: int = 1
    qr_rtol: float = 1e-14          # column drop threshold in the pivoted QR


class MpsSolver:
    """Subspace-angle eigensolver bound to one curve, window, and bc."""

    def __init__(self, curve: BoundaryCurve, bc: str, lam_hi: float,
                 options: Optional[MpsOptions] = None):
        self.curve = curve
        self.bc = bc
        self.opts = options or MpsOptions()
        if lam_hi > self.opts.lambda_cap:
            raise ValueError(
                f"lambda_hi={lam_hi} beyond the desk-scale cap "
                f"{self.opts.lambda_cap}; raise MpsOptions.lambda_cap to force")
        radii = np.hypot(curve.positions[:, 0], curve.positions[:, 1])
        self.r_max = float(radii.max())
        self.r_min = float(radii.min())
        self.m_max = int(math.ceil(lam_hi * self.r_max)) + self.opts.basis_margin
        n_cols = 2 * self.m_max + 1
        n_b = max(int(math.ceil(self.opts.boundary_ppw * lam_hi
                                * curve.perimeter / (2 * math.pi))),
                  2 * n_cols)
        theta_b = np.linspace(0.0, 2 * math.pi, n_b, endpoint=False)
        q, tan, nu, _ = curve.frame(theta_b)
        self.bdry_xy = q
        self.bdry_tan = tan
        self.bdry_nu = nu
        self.n_b = n_b
        phi_i, r_i = [], []
        for frac in self.opts.interior_radii:
            n_i = n_cols // 2 + 8
            off = 2 * math.pi * 0.381966 * frac
            ph = np.linspace(0.0, 2 * math.pi, n_i, endpoint=False) + off
            phi_i.append(ph)
            r_i.append(np.full(n_i, frac * self.r_min))
        self.int_r = np.concatenate(r_i)
        self.int_phi = np.concatenate(phi_i)
        self.orders = np.arange(self.m_max + 1)

    # -- basis evaluation ---------------------------------------------------

    def _trig(self, phi):
        mp = np.outer(phi, self.orders[1:])
        return np.cos(mp), np.sin(mp)

    def _values(self, lam, r, phi):
        """Basis values at polar points; columns [J_0, J_m cos, J_m sin]."""
        J = special.jv(self.orders[None, :], lam * r[:, None])
        C, S = self._trig(phi)
        return np.hstack([J[:, :1], J[:, 1:] * C, J[:, 1:] * S])

    def _normal_derivs(self, lam, xy, normals):
        r = np.hypot(xy[:, 0], xy[:, 1])
        phi = np.arctan2(xy[:, 1], xy[:, 0])
        rn = (xy[:, 0] * normals[:, 0] + xy[:, 1] * normals[:, 1]) / r
        pn = (-xy[:, 1] * normals[:, 0] + xy[:, 0] * normals[:, 1]) / r
        J = special.jv(self.orders[None, :], lam * r[:, None])
        Jp = special.jvp(self.orders[None, :], lam * r[:, None])
        C, S = self._trig(phi)
        m = self.orders[1:][None, :]
        dr = lam * np.hstack([Jp[:, :1], Jp[:, 1:] * C, Jp[:, 1:] * S])
        dphi_r = np.hstack([np.zeros((r.size, 1)),
                            J[:, 1:] * (-m * S) / r[:, None],
                            J[:, 1:] * (m * C) / r[:, None]])
        return dr * rn[:, None] + dphi_r * pn[:, None]

    def _stack(self, lam):
        if self.bc == DIRICHLET:
            r = np.hypot(self.bdry_xy[:, 0], self.bdry_xy[:, 1])
            phi = np.arctan2(self.bdry_xy[:, 1], self.bdry_xy[:, 0])
            top = self._values(lam, r, phi)
        else:
            top = self._normal_derivs(lam, self.bdry_xy, self.bdry_nu)
        bottom = self._values(lam, self.int_r, self.int_phi)
        return np.vstack([top, bottom])

    def subspace_sines(self, lam: float) -> np.ndarray:
        """Ascending singular values of the boundary block of Q."""
        A = self._stack(lam)
        Q, R, _ = la.qr(A, mode="economic", pivoting=True)
        r = np.abs(np.diag(R))
        cutoff = int((r > r[0] * self.opts.qr_rtol).sum())
        sv = la.svd(Q[:self.n_b, :cutoff], compute_uv=False)
        return sv[::-1]

    def sigma(self, lam: float) -> float:
        return float(self.subspace_sines(lam)[0])

    def coefficients(self, lam: float, n_vec: int = 1) -> np.ndarray:
        """Basis coefficient vectors of the n_vec flattest boundary directions."""
        A = self._stack(lam)
        Q, R, piv = la.qr(A, mode="economic", pivoting=True)
        r = np.abs(np.diag(R))
        cutoff = int((r > r[0] * self.opts.qr_rtol).sum())
        _, _, Vt = la.svd(Q[:self.n_b, :cutoff])
        out = []
        for j in range(n_vec):
            v = Vt[cutoff - 1 - j]
            z = la.solve_triangular(R[:cutoff, :cutoff], v)
            c = np.zeros(A.shape[1])
            c[piv[:cutoff]] = z
            c /= np.linalg.norm(c)
            out.append(c)
        return np.array(out)

    # -- interior evaluation ------------------------------------------------

    def _interior_quadrature(self, lam):
        n_phi = max(96, 3 * self.m_max)
        n_r = max(32, int(math.ceil(0.8 * lam * self.r_max)) + 16)
        phi = np.linspace(0.0, 2 * math.pi, n_phi, endpoint=False)
        rb = self.curve.radial_profile(phi)
        x, w = np.polynomial.legendre.leggauss(n_r)
        x = 0.5 * (x + 1.0)
        w = 0.5 * w
        rr = rb[:, None] * x[None, :]
        ww = (rb ** 2)[:, None] * (w * 1.0)[None, :] * x[None, :] \
            * (2 * math.pi / n_phi)
        return rr.ravel(), np.repeat(phi, n_r), ww.ravel()

    def interior_norm(self, lam: float, coeff: np.ndarray) -> float:
        r, phi, w = self._interior_quadrature(lam)
        vals = self._values(lam, r, phi) @ coeff
        return float(math.sqrt(np.sum(np.abs(vals) ** 2 * w)))

    def boundary_trace(self, lam: float, coeff: np.ndarray) -> BoundaryTrace:
        """Raw boundary samples at the curve's quadrature nodes."""
        curve = self.curve
        xy, tan, nu, _ = curve.frame(curve.theta)
        norm = self.interior_norm(lam, coeff)
        if self.bc == DIRICHLET:
            dnu = self._normal_derivs(lam, xy, nu) @ coeff
            return BoundaryTrace(lam=lam, normal_deriv=dnu, restriction=None,
                                 tangential_deriv=None, interior_norm=norm)
        r = np.hypot(xy[:, 0], xy[:, 1])
        phi = np.arctan2(xy[:, 1], xy[:, 0])
        rest = self._values(lam, r, phi) @ coeff
        dtan = self._normal_derivs(lam, xy, tan) @ coeff
        return BoundaryTrace(lam=lam, normal_deriv=None, restriction=rest,
                             tangential_deriv=dtan, interior_norm=norm)


def _refine_vmin(f, a, b, xatol):
    """Locate the vertex of a V-shaped minimum.

    Golden-section narrows the bracket below the probe spacing, then the
    two linear branches are intersected; the intersection is exact for a
    V profile and immune to the rounded bottom at the sigma floor.
    """
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    h = max(32 * xatol, 1e-7)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > 0.8 * h:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    lam0 = 0.5 * (a + b)
    # the vertex is now within h of lam0, so these probes straddle it
    xs = np.array([lam0 - 2 * h, lam0 - h, lam0 + h, lam0 + 2 * h])
    ys = np.array([f(x) for x in xs])
    s_left = (ys[1] - ys[0]) / (xs[1] - xs[0])
    s_right = (ys[3] - ys[2]) / (xs[3] - xs[2])
    if s_left < 0 < s_right:
        y_left = ys[1] - s_left * xs[1]
        y_right = ys[2] - s_right * xs[2]
        lam_v = (y_right - y_left) / (s_left - s_right)
        if xs[0] < lam_v < xs[3]:
            lam0 = lam_v
    best = min([(f(lam0), lam0)] + list(zip(ys, xs)))
    return best[1], best[0]


def _check_corridor(found: Spectrum, ctx: WeylContext, lam_lo, lam_hi,
                    drift_limit):
    """Absolute corridor plus (for well-populated windows) a drift test.

    A missed eigenvalue shifts the count deviation down by one permanently;
    comparing means over the first and last third of the window picks that
    up while the genuine remainder oscillation averages out.
    """
    grid = np.linspace(lam_lo, lam_hi, 601)
    anchor = round(float(ctx.smooth_term(lam_lo)))
    dev = (anchor + found.count_upto(grid) - ctx.smooth_term(grid))
    slack = 3.0 + 0.6 * lam_hi ** ((ctx.dim - 1) * 2 / 3)
    n3 = grid.size // 3
    drift = float(np.mean(dev[-n3:]) - np.mean(dev[:n3]))
    populated = found.total_count >= 20
    ok = np.max(np.abs(dev)) <= slack and (not populated
                                           or abs(drift) <= drift_limit)
    return ok, drift, float(np.max(np.abs(dev)))


def mps_spectrum(curve: BoundaryCurve, lam_window: Tuple[float, float],
                 bc: str = DIRICHLET,
                 options: Optional[MpsOptions] = None):
    """Eigenvalues in the window plus boundary data; corridor-certified.

    Returns (Spectrum, EigenBoundaryData).  The spectrum's validity is the
    window itself: lambda_min_valid = window floor.
    """
    opts = options or MpsOptions()
    lam_lo, lam_hi = float(lam_window[0]), float(lam_window[1])
    if not 0 < lam_lo < lam_hi:
        raise ValueError("need 0 < lambda_lo < lambda_hi")
    solver = MpsSolver(curve, bc, lam_hi, opts)
    ctx = WeylContext.from_curve(curve, bc)

    # scan grid: never coarser than half the local mean spacing
    density_hi = max(float(ctx.smooth_term_deriv(lam_hi)), 1e-6)
    step = min(opts.grid_step, 0.5 / density_hi)
    grid = np.arange(lam_lo, lam_hi + step, step)
    if opts.threads > 1:
        with ThreadPoolExecutor(max_workers=opts.threads) as pool:
            sig = np.array(list(pool.map(solver.sigma, grid)))
    else:
        sig = np.array([solver.sigma(lam) for lam in grid])

    if sig.min() > 0.5:
        raise BasisDeficiency(
            f"sigma floor {sig.min():.3g} over the whole window")

    def locate(bracket_lo, bracket_hi):
        lam_star, _ = _refine_vmin(solver.sigma, bracket_lo, bracket_hi,
                                   0.25 * opts.refine_tol)
        sines = solver.subspace_sines(lam_star)
        if sines[0] > opts.accept_sigma:
            return None
        thr = max(opts.mult_factor * sines[0], opts.mult_abs)
        return lam_star, int(np.sum(sines < thr)), float(sines[1])

    lams, mults = [], []
    suspects = []
    for i in range(1, grid.size - 1):
        if not (sig[i] < sig[i - 1] and sig[i] <= sig[i + 1]):
            continue
        if sig[i] > 10 * opts.accept_sigma:
            continue
        hit = locate(grid[i - 1], grid[i + 1])
        if hit is None:
            continue
        lam_star, mult, sig2 = hit
        lams.append(lam_star)
        mults.append(mult)
        # a second singular value that is small without being a true
        # multiplet hints at a near-degenerate partner inside the scan step
        if mult == 1 and sig2 < opts.pair_suspect:
            suspects.append(lam_star)

    for lam_star in suspects:
        fine = np.arange(lam_star - 1.5 * step, lam_star + 1.5 * step,
                         step / 50)
        fs = np.array([solver.sigma(x) for x in fine])
        for i in range(1, fine.size - 1):
            if not (fs[i] < fs[i - 1] and fs[i] <= fs[i + 1]):
                continue
            if fs[i] > 10 * opts.accept_sigma:
                continue
            hit = locate(fine[i - 1], fine[i + 1])
            if hit is not None:
                lams.append(hit[0])
                mults.append(hit[1])

    order = np.argsort(lams)
    lams = [lams[i] for i in order]
    mults = [mults[i] for i in order]
    # drop duplicate refinements of the same minimum
    keep_l, keep_m = [], []
    for lam, mu in zip(lams, mults):
        if keep_l and lam - keep_l[-1] < 10 * opts.refine_tol:
            keep_m[-1] = max(keep_m[-1], mu)
            continue
        keep_l.append(lam)
        keep_m.append(mu)

    spec = Spectrum(np.array(keep_l), np.array(keep_m, dtype=np.int64), bc=bc,
                    generator=f"mps({curve.spec.kind})",
                    lambda_max=lam_hi, certificate="unchecked",
                    lambda_min_valid=lam_lo)
    ok, drift, max_dev = _check_corridor(spec, ctx, lam_lo, lam_hi,
                                         opts.drift_limit)
    if not ok:
        raise MissedEigenvalueSuspicion(
            f"count deviates from the two-term corridor "
            f"(drift {drift:+.2f}, max deviation {max_dev:.2f})")
    spec.certificate = "weyl_corridor_checked"
    spec.meta["corridor_drift"] = drift
    spec.meta["corridor_max_dev"] = max_dev

    data = EigenBoundaryData(bc=bc, traces=[])
    if opts.boundary_data:
        for lam, mu in zip(keep_l, keep_m):
            coeffs = solver.coefficients(lam, n_vec=mu)
            for c in coeffs:
                data.traces.append(solver.boundary_trace(lam, c))
    return spec, data
