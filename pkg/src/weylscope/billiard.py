"""Billiard ball map on the boundary phase space and periodic-orbit machinery.

Phase points are (s, eta): boundary arclength plus tangential momentum with
|eta| < 1.  The map launches a ray inward, finds the unique forward crossing
of the convex boundary, and keeps the tangential component at the impact
point.  Its differential per bounce follows from the second derivatives of
the chord-length generating function, so det(dbeta) = 1 holds exactly.

Periodic orbits are critical points of the cyclic length functional
L(s_1..s_k) = sum |q(s_{i+1}) - q(s_i)|;  one-parameter families show up as
a near-null Hessian direction and are traced around their invariant circle
by predictor-corrector continuation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.optimize import brentq
from scipy.stats import qmc

from .errors import (GlancingInput, IncompleteSweep, IntersectionFailure,
                     NoOrbitFound, SpectrumTooShort)
from .geometry import BoundaryCurve

GLANCING_GUARD = 1e-9        # refuse |eta| > 1 - guard
_GRAD_TOL = 1e-12            # |grad L| convergence scale (times max(1, L))
_DUP_TOL = 1e-7              # vertex-set coincidence tolerance (times L)
_NULL_REL = 1e-6             # relative Hessian eigenvalue for family detection


@dataclass(frozen=True)
class PhasePoint:
    s: float
    eta: float

    def __post_init__(self):
        if not abs(self.eta) < 1.0:
            raise ValueError("phase point must satisfy |eta| < 1")


@dataclass
class OrbitFamily:
    """A periodic orbit or one-parameter family of a fixed (k, m) class."""

    k: int
    m: int
    length: float
    d: int                                  # fixed-point-set dimension
    kind: str                               # 'isolated' | 'one_parameter'
    representatives: List[PhasePoint]
    vertices: np.ndarray                    # arclengths of one representative orbit
    loop: Optional[np.ndarray] = None       # (M, 2) (s, eta) samples of the circle
    primitive: bool = True

    @property
    def T(self) -> float:
        return self.length


@dataclass
class LengthEntry:
    length: float
    k: int
    m: int
    d: int
    kind: str
    primitive: bool = True


@dataclass
class LengthSpectrum:
    entries: List[LengthEntry]
    L_max: float
    complete: bool
    families: List[OrbitFamily] = field(default_factory=list)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([e.length for e in self.entries])


@dataclass
class AdmissibilityReport:
    family: OrbitFamily
    eps_isolation: float
    kernel_dims: List[int]
    glancing_margin: float
    verdict_isolation: bool
    verdict_clean: bool
    verdict_glancing: bool

    @property
    def admissible(self) -> bool:
        return (self.verdict_isolation and self.verdict_clean
                and self.verdict_glancing)


# --- elementary map -------------------------------------------------------

def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def billiard_map(curve: BoundaryCurve, p: PhasePoint):
    """One bounce: returns (PhasePoint, chord length)."""
    if abs(p.eta) > 1.0 - GLANCING_GUARD:
        raise GlancingInput(f"|eta| = {abs(p.eta)} too close to the glancing set")
    t0 = float(curve.theta_of_arclength(p.s))
    q0, tan0, nu0, _ = curve.frame(t0)
    v = p.eta * tan0 - math.sqrt(1.0 - p.eta ** 2) * nu0  # inward launch

    def side(t):
        return _cross(v, curve.point(t) - q0)

    # side < 0 just past t0 and > 0 just before t0 + 2*pi; bracket the
    # unique sign change on the forward arc
    n_scan = 96
    offs = 2 * np.pi * (np.arange(1, n_scan) / n_scan)
    vals = side(t0 + offs)
    pos = np.nonzero(vals > 0)[0]
    if pos.size == 0:
        raise IntersectionFailure("no forward crossing located")
    j = pos[0]
    if j == 0:
        lo = t0 + 1e-9
        if side(lo) >= 0:
            lo = t0 + 1e-12
            if side(lo) >= 0:
                raise IntersectionFailure("degenerate launch geometry")
    else:
        lo = t0 + offs[j - 1]
    hi = t0 + offs[j]
    t1 = brentq(side, lo, hi, xtol=1e-13, rtol=8.9e-16, maxiter=200)
    # Newton polish on the exact side function
    for _ in range(4):
        q1, tan1, _, _ = curve.frame(t1)
        f = _cross(v, q1 - q0)
        df = curve.support.radius_of_curvature(t1) * _cross(v, tan1)
        if df == 0:
            break
        t1 = t1 - f / df
    q1, tan1, _, _ = curve.frame(t1)
    chord = float(np.hypot(*(q1 - q0)))
    if chord < 1e-12:
        raise IntersectionFailure("crossing collapsed onto the launch point")
    eta1 = float(np.dot(v, tan1))
    s1 = float(np.mod(curve.arclength_of_theta(np.mod(t1, 2 * np.pi)),
                      curve.perimeter))
    return PhasePoint(s=s1, eta=eta1), chord


def _chord_blocks(curve, t_a, t_b):
    """Second derivatives of the chord length w.r.t. arclength at both ends.

    Returns (tau, h_aa, h_ab, h_bb) using the cross-product forms that stay
    valid for arbitrary chords, inward or not.
    """
    qa, ta, _, ka = curve.frame(t_a)
    qb, tb, _, kb = curve.frame(t_b)
    d = qb - qa
    tau = float(np.hypot(*d))
    u = d / tau
    ca, cb = float(_cross(u, ta)), float(_cross(u, tb))
    ua, ub = float(np.dot(u, ta)), float(np.dot(u, tb))
    h_aa = (1.0 - ua * ua) / tau + float(ka) * ca
    h_bb = (1.0 - ub * ub) / tau - float(kb) * cb
    h_ab = -ca * cb / tau
    return tau, h_aa, h_ab, h_bb


def billiard_map_differential(curve: BoundaryCurve, p: PhasePoint, k: int = 1):
    """Jacobian of beta^k at p in (s, eta) coordinates, chained per bounce."""
    M = np.eye(2)
    cur = p
    for _ in range(k):
        nxt, _ = billiard_map(curve, cur)
        t_a = float(curve.theta_of_arclength(cur.s))
        t_b = float(curve.theta_of_arclength(nxt.s))
        _, h11, h12, h22 = _chord_blocks(curve, t_a, t_b)
        step = np.array([
            [-h11 / h12, -1.0 / h12],
            [h12 - h11 * h22 / h12, -h22 / h12],
        ])
        M = step @ M
        cur = nxt
    return M


# --- periodic orbit search -------------------------------------------------

def _orbit_geometry(curve, s):
    """Vertex frames and chord data for a cyclic vertex configuration."""
    t = curve.theta_of_arclength(s)
    q, tan, nu, kappa = curve.frame(t)
    d = np.roll(q, -1, axis=0) - q
    tau = np.hypot(d[:, 0], d[:, 1])
    return t, q, tan, nu, kappa, d, tau


def _grad_length(curve, s):
    _, q, tan, _, _, d, tau = _orbit_geometry(curve, s)
    u = d / tau[:, None]
    u_prev = np.roll(u, 1, axis=0)
    return np.einsum("ij,ij->i", u_prev - u, tan)


def _hess_length(curve, s):
    k = s.size
    _, q, tan, _, kappa, d, tau = _orbit_geometry(curve, s)
    u = d / tau[:, None]
    tan_next = np.roll(tan, -1, axis=0)
    kap_next = np.roll(kappa, -1)
    ca = _cross(u, tan)                 # at chord departure
    cb = _cross(u, tan_next)            # at chord arrival
    ua = np.einsum("ij,ij->i", u, tan)
    ub = np.einsum("ij,ij->i", u, tan_next)
    h_aa = (1.0 - ua * ua) / tau + kappa * ca
    h_bb = (1.0 - ub * ub) / tau - kap_next * cb
    h_ab = -ca * cb / tau
    H = np.zeros((k, k))
    idx = np.arange(k)
    nxt = (idx + 1) % k
    np.add.at(H, (idx, idx), h_aa)
    np.add.at(H, (nxt, nxt), h_bb)
    np.add.at(H, (idx, nxt), h_ab)
    np.add.at(H, (nxt, idx), h_ab)
    return H


def _newton_orbit(curve, s0, tol, itmax=120):
    """Damped Gauss-Newton on grad L = 0; tolerates singular Hessians."""
    s = np.mod(s0.copy(), curve.perimeter)
    lam = 1e-12
    g = _grad_length(curve, s)
    gn = np.linalg.norm(g)
    for _ in range(itmax):
        if gn < tol:
            return s, True
        H = _hess_length(curve, s)
        A = H.T @ H + lam * np.eye(s.size)
        try:
            step = np.linalg.solve(A, -H.T @ g)
        except np.linalg.LinAlgError:
            lam = max(lam * 10, 1e-8)
            continue
        s_new = np.mod(s + step, curve.perimeter)
        try:
            g_new = _grad_length(curve, s_new)
        except (FloatingPointError, ValueError):
            lam = max(lam * 10, 1e-8)
            continue
        gn_new = np.linalg.norm(g_new)
        if gn_new < gn or not np.isfinite(gn):
            s, g, gn = s_new, g_new, gn_new
            lam = max(lam / 10, 1e-14)
        else:
            lam *= 10
            if lam > 1e6:
                return s, False
    return s, gn < tol


def _winding(curve, s):
    # support angle advances monotonically along a convex billiard polygon
    t_path = curve.theta_of_arclength(s)
    diffs = np.mod(np.diff(np.concatenate([t_path, t_path[:1]])), 2 * np.pi)
    return int(round(diffs.sum() / (2 * np.pi)))


def _orbit_momenta(curve, s):
    """eta at each vertex plus inwardness check of the outgoing chords."""
    _, q, tan, _, _, d, tau = _orbit_geometry(curve, s)
    u = d / tau[:, None]
    eta_out = np.einsum("ij,ij->i", u, tan)
    inward = _cross(u, tan) < 0
    return eta_out, bool(np.all(inward))


def _same_orbit(sa, sb, L, tol):
    """Whether two vertex sets coincide as subsets of the boundary circle."""
    if sa.size != sb.size:
        return False
    ca = np.sort(np.mod(sa, L))
    cb = np.sort(np.mod(sb, L))
    # sorted circular sequences match at one of k rotations (wrap handled
    # by the circular distance min(d, L - d))
    for j in range(ca.size):
        d = np.abs(np.concatenate([cb[j:], cb[:j]]) - ca)
        d = np.minimum(d, L - d)
        if np.max(d) < tol:
            return True
    return False


def _orbit_length(curve, s):
    _, _, _, _, _, _, tau = _orbit_geometry(curve, s)
    return float(tau.sum())


def _trace_family(curve, s_star, null_vec, tol, max_steps=512,
                  samples_target=64):
    """Pseudo-arclength continuation around a one-parameter family loop."""
    L = curve.perimeter
    k = s_star.size
    # a full loop moves every vertex by about L/k before relabeling
    step = (L / k) / samples_target
    configs = [s_star.copy()]
    s = s_star.copy()
    v = null_vec.copy()
    for n in range(max_steps):
        cur = s + step * v
        for _ in range(12):
            g = _grad_length(curve, cur)
            if np.linalg.norm(g) < tol:
                break
            H = _hess_length(curve, cur)
            d, *_ = np.linalg.lstsq(H, -g, rcond=1e-8)
            cur = cur + d
        cur = np.mod(cur, L)
        # keep the continuation direction coherent
        w = np.linalg.eigh(_hess_length(curve, cur))
        v_new = w.eigenvectors[:, np.argmin(np.abs(w.eigenvalues))]
        if np.dot(v_new, v) < 0:
            v_new = -v_new
        v = v_new
        s = cur
        if n >= 2 and _same_orbit(s, s_star, L, step * 0.75):
            break
        configs.append(s.copy())
    return configs


def find_periodic_orbits(curve: BoundaryCurve, k: int, m: int,
                         n_starts: int = 64, seed: int = 0,
                         samples_target: int = 64) -> List[OrbitFamily]:
    """All (k, m) periodic orbits found by multi-start critical-point search."""
    if k < 2 or m < 1 or m > k / 2:
        raise ValueError("need k >= 2 and 1 <= m <= k/2")
    L = curve.perimeter
    tol = _GRAD_TOL * max(1.0, L)
    halton = qmc.Halton(d=k + 1, scramble=True, seed=seed)
    starts = halton.random(n_starts)
    base = np.arange(k) * (m * L / k)

    len_tol = 1e-7 * max(1.0, L)
    solutions = []   # (s_fin, eta, length, null_rel, null_vec)
    for row in starts:
        s0 = np.mod(base + row[0] * L + (row[1:] - 0.5) * (L / (4 * k)), L)
        s_fin, ok = _newton_orbit(curve, s0, tol)
        if not ok:
            continue
        _, _, _, _, _, _, tau = _orbit_geometry(curve, s_fin)
        if np.min(tau) < 1e-8 * L:
            continue
        eta, inward = _orbit_momenta(curve, s_fin)
        if not inward or np.max(np.abs(eta)) >= 1.0 - GLANCING_GUARD:
            continue
        if _winding(curve, s_fin) != m:
            continue
        length = _orbit_length(curve, s_fin)
        if any(abs(length - rec[2]) < len_tol
               and _same_orbit(s_fin, rec[0], L, _DUP_TOL * L)
               for rec in solutions):
            continue
        H = _hess_length(curve, s_fin)
        w = np.linalg.eigh(H)
        ev = w.eigenvalues
        null_rel = np.min(np.abs(ev)) / max(np.max(np.abs(ev)), 1e-300)
        null_vec = w.eigenvectors[:, np.argmin(np.abs(ev))]
        solutions.append((s_fin, eta, length, null_rel, null_vec))

    if not solutions:
        raise NoOrbitFound(f"no ({k},{m}) orbit found in {n_starts} starts")

    families: List[OrbitFamily] = []
    consumed = [False] * len(solutions)
    for i, (s_fin, eta, length, null_rel, null_vec) in enumerate(solutions):
        if consumed[i]:
            continue
        consumed[i] = True
        if null_rel < _NULL_REL:
            configs = _trace_family(curve, s_fin, null_vec, tol,
                                    samples_target=samples_target)
            pts = []
            for cfg in configs:
                eta_c, _ = _orbit_momenta(curve, cfg)
                pts.extend(zip(np.mod(cfg, L), eta_c))
            # everything with the same length on a degenerate circle is a
            # point of this family; orbits of other lengths stay separate
            for j, rec in enumerate(solutions):
                if (not consumed[j] and rec[3] < _NULL_REL
                        and abs(rec[2] - length) < len_tol):
                    consumed[j] = True
            loop = np.array(sorted(pts))
            reps_idx = np.linspace(0, loop.shape[0] - 1, 16).astype(int)
            reps = [PhasePoint(s=float(loop[j, 0]),
                               eta=float(np.clip(loop[j, 1], -1 + 1e-12,
                                                 1 - 1e-12)))
                    for j in reps_idx]
            families.append(OrbitFamily(
                k=k, m=m, length=length, d=1, kind="one_parameter",
                representatives=reps, vertices=np.sort(np.mod(s_fin, L)),
                loop=loop))
        else:
            reps = [PhasePoint(s=float(np.mod(sv, L)), eta=float(ev_))
                    for sv, ev_ in zip(s_fin, eta)]
            families.append(OrbitFamily(
                k=k, m=m, length=length, d=0, kind="isolated",
                representatives=reps, vertices=np.sort(np.mod(s_fin, L))))
    families.sort(key=lambda f: f.length)
    return families


# --- length spectrum --------------------------------------------------------

_BOUNDARY_EXCLUSION = 1e-9   # orbits within this of L_max are dropped


def length_spectrum(curve: BoundaryCurve, L_max: float, k_cap: int = 24,
                    seed: int = 0) -> LengthSpectrum:
    """All periodic-orbit lengths below L_max from a pruned (k, m) sweep.

    For fixed winding m the primitive lengths increase with the bounce
    count, so the k sweep stops at the first class whose shortest orbit
    exceeds L_max; iterates of primitives are appended in closed form.
    """
    if not L_max < curve.perimeter * k_cap:
        raise ValueError("L_max beyond the sweep cap")
    L = curve.perimeter
    cut = L_max - _BOUNDARY_EXCLUSION * max(1.0, L_max)
    entries: List[LengthEntry] = []
    families: List[OrbitFamily] = []
    complete = True

    for m in range(1, k_cap // 2 + 1):
        k_start = 2 if m == 1 else 2 * m + 1
        any_kept_this_m = False
        k = k_start
        while k <= k_cap:
            if math.gcd(k, m) != 1:
                k += 1
                continue
            try:
                fams = find_periodic_orbits(curve, k, m, seed=seed)
            except NoOrbitFound:
                k += 1
                continue
            min_len = min(f.length for f in fams)
            kept = [f for f in fams if f.length <= cut]
            for f in kept:
                entries.append(LengthEntry(length=f.length, k=k, m=m, d=f.d,
                                           kind=f.kind))
                families.append(f)
            if kept:
                any_kept_this_m = True
            if min_len > cut:
                break  # lengths grow with k for fixed m
            k += 1
        else:
            if any_kept_this_m:
                complete = False
                warnings.warn("(k, m) sweep cap reached with lengths below "
                              f"L_max for m={m}", IncompleteSweep)
        if not any_kept_this_m:
            break  # shortest orbit of this winding already beyond L_max

    # iterates of primitive orbits are periodic trajectories too
    primitives = list(entries)
    for e in primitives:
        g = 2
        while g * e.length <= cut:
            entries.append(LengthEntry(length=g * e.length, k=g * e.k,
                                       m=g * e.m, d=e.d, kind=e.kind,
                                       primitive=False))
            g += 1

    entries.sort(key=lambda e: e.length)
    dedup: List[LengthEntry] = []
    for e in entries:
        if dedup and abs(e.length - dedup[-1].length) < 1e-8 * max(1.0, L_max):
            continue
        dedup.append(e)
    return LengthSpectrum(entries=dedup, L_max=L_max, complete=complete,
                          families=families)


# --- admissibility ----------------------------------------------------------

def kernel_dimension(matrix: np.ndarray, rel_tol: float = 1e-6) -> int:
    """Numerical nullity of (matrix - I) via singular values."""
    sv = np.linalg.svd(matrix - np.eye(matrix.shape[0]), compute_uv=False)
    return int(np.sum(sv < rel_tol * max(1.0, sv.max())))


def admissibility_check(curve: BoundaryCurve, family: OrbitFamily,
                        spectrum: LengthSpectrum,
                        eps_search: float) -> AdmissibilityReport:
    """Isolation, cleanliness, and glancing-margin verdicts for one family."""
    T = family.length
    if spectrum.L_max < T + eps_search:
        raise SpectrumTooShort(
            f"length spectrum reaches {spectrum.L_max}, need {T + eps_search}")

    self_tol = 1e-7 * max(1.0, T)
    gaps = [abs(e.length - T) for e in spectrum.entries
            if not (abs(e.length - T) < self_tol
                    and e.k == family.k and e.m == family.m)]
    foreign = [g for g in gaps if g <= eps_search]
    eps = min(foreign) if foreign else eps_search

    kdims = [kernel_dimension(billiard_map_differential(curve, rep, family.k))
             for rep in family.representatives]
    margin = 1.0 - max(abs(rep.eta) for rep in family.representatives)
    return AdmissibilityReport(
        family=family,
        eps_isolation=float(eps),
        kernel_dims=kdims,
        glancing_margin=float(margin),
        verdict_isolation=eps > 0,
        verdict_clean=all(kd == family.d for kd in kdims),
        verdict_glancing=margin > 0,
    )
