"""Smooth star-shaped planar boundaries and higher-dimensional model domains.

Planar domains are encoded by a support function h(theta): the boundary point
with outward normal (cos t, sin t) is q(t) = h(t)*u(t) + h'(t)*u_perp(t), the
curvature radius is h + h'', and arclength satisfies ds/dt = h + h''.  Disks
and constant-width bodies are trigonometric polynomials in this encoding, the
ellipse has the closed form h = sqrt(a^2 cos^2 + b^2 sin^2), so every derived
quantity (normals, curvature, the boundary weight <q, nu>) is available in
closed form and the only tabulated object is the arclength map s(theta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import NonConvex, NotStarShaped, QuadratureFailure, UnsupportedKind

PLANAR_KINDS = ("disk", "ellipse", "constant_width", "generic_support")

_STAR_MARGIN = 1e-8          # numeric star-shapedness margin at nodes
_CONVEXITY_GRID = 8192       # theta samples for min-R / min-h scans


@dataclass(frozen=True)
class DomainSpec:
    """Planar domain description.

    kind: one of 'disk', 'ellipse', 'constant_width', 'generic_support'.
    radius          -- disk only
    a, b            -- ellipse semi-axes, a >= b > 0
    h0, harmonics   -- support-function constant term and [(k, a_k, b_k), ...];
                       constant_width requires odd k >= 3 (width is then 2*h0)
    center          -- offset of the body relative to the origin
    """

    kind: str
    radius: float = 1.0
    a: float = 1.0
    b: float = 1.0
    h0: float = 0.5
    harmonics: tuple = ()
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.kind not in PLANAR_KINDS:
            raise UnsupportedKind(f"unknown planar kind {self.kind!r}")
        if self.kind == "disk" and not self.radius > 0:
            raise ValueError("disk radius must be positive")
        if self.kind == "ellipse" and not (self.a >= self.b > 0):
            raise ValueError("ellipse requires a >= b > 0")
        if self.kind in ("constant_width", "generic_support"):
            if not self.h0 > 0:
                raise ValueError("support constant h0 must be positive")
            for k, _, _ in self.harmonics:
                if self.kind == "constant_width" and (k % 2 == 0 or k < 3):
                    raise ValueError(
                        "constant_width harmonics must have odd index k >= 3"
                    )
                if k < 1:
                    raise ValueError("harmonic index must be >= 1")
        object.__setattr__(self, "harmonics",
                           tuple((int(k), float(ak), float(bk))
                                 for k, ak, bk in self.harmonics))
        object.__setattr__(self, "center",
                           (float(self.center[0]), float(self.center[1])))

    @classmethod
    def from_json(cls, doc: dict) -> "DomainSpec":
        kind = doc["kind"]
        kw = {"kind": kind, "center": tuple(doc.get("center", (0.0, 0.0)))}
        if kind == "disk":
            kw["radius"] = float(doc["radius"])
        elif kind == "ellipse":
            kw["a"], kw["b"] = float(doc["a"]), float(doc["b"])
        else:
            kw["h0"] = float(doc["h0"])
            kw["harmonics"] = tuple(tuple(h) for h in doc.get("harmonics", ()))
        return cls(**kw)

    def to_json(self) -> dict:
        doc = {"kind": self.kind}
        if self.kind == "disk":
            doc["radius"] = self.radius
        elif self.kind == "ellipse":
            doc["a"], doc["b"] = self.a, self.b
        else:
            doc["h0"] = self.h0
            doc["harmonics"] = [list(h) for h in self.harmonics]
        if self.center != (0.0, 0.0):
            doc["center"] = list(self.center)
        return doc

    @property
    def is_constant_width(self) -> bool:
        return self.kind == "disk" or self.kind == "constant_width"


class SupportFunction:
    """Evaluates h, h', h'' for a DomainSpec (center offset included).

    The center offset contributes the pure first harmonic cx*cos + cy*sin,
    which drops out of h + h'' (translation does not change curvature).
    """

    def __init__(self, spec: DomainSpec):
        self.spec = spec
        self._cx, self._cy = spec.center
        if spec.kind == "disk":
            self._h0, self._harm = spec.radius, ()
        elif spec.kind == "ellipse":
            self._h0, self._harm = 0.0, ()
        else:
            self._h0, self._harm = spec.h0, spec.harmonics

    def _ellipse_parts(self, t):
        a2, b2 = self.spec.a ** 2, self.spec.b ** 2
        mean, half = 0.5 * (a2 + b2), 0.5 * (a2 - b2)
        h = np.sqrt(mean + half * np.cos(2 * t))
        dh = -half * np.sin(2 * t) / h
        d2h = (-2 * half * np.cos(2 * t) - dh * dh) / h
        return h, dh, d2h

    def h(self, t):
        t = np.asarray(t, dtype=float)
        val = self._h0 + self._cx * np.cos(t) + self._cy * np.sin(t)
        for k, ak, bk in self._harm:
            val = val + ak * np.cos(k * t) + bk * np.sin(k * t)
        if self.spec.kind == "ellipse":
            val = val + self._ellipse_parts(t)[0]
        return val

    def dh(self, t):
        t = np.asarray(t, dtype=float)
        val = -self._cx * np.sin(t) + self._cy * np.cos(t)
        for k, ak, bk in self._harm:
            val = val + k * (-ak * np.sin(k * t) + bk * np.cos(k * t))
        if self.spec.kind == "ellipse":
            val = val + self._ellipse_parts(t)[1]
        return val

    def radius_of_curvature(self, t):
        """h + h''; the center harmonic cancels exactly."""
        t = np.asarray(t, dtype=float)
        val = np.full_like(t, self._h0, dtype=float)
        for k, ak, bk in self._harm:
            val = val + (1 - k * k) * (ak * np.cos(k * t) + bk * np.sin(k * t))
        if self.spec.kind == "ellipse":
            h, _, d2h = self._ellipse_parts(t)
            val = val + h + d2h
        return val


@dataclass
class BoundaryCurve:
    """Tabulated smooth convex boundary; immutable after construction."""

    spec: DomainSpec
    support: SupportFunction
    resolution: int
    theta: np.ndarray          # uniform support-angle nodes
    s_nodes: np.ndarray        # arclength at the nodes
    positions: np.ndarray      # (N, 2)
    tangents: np.ndarray       # (N, 2) unit, counterclockwise
    normals_out: np.ndarray    # (N, 2) unit outward
    curvature: np.ndarray      # (N,)
    area: float
    perimeter: float
    width: Optional[float]     # set for constant-width kinds
    # Fourier data of R(theta) = h + h'' for the exact arclength map
    _r_mean: float = field(repr=False, default=0.0)
    _r_cos: np.ndarray = field(repr=False, default=None)
    _r_sin: np.ndarray = field(repr=False, default=None)

    def arclength_of_theta(self, t):
        """s(t) = integral of h + h'' from 0 to t (exact trig antiderivative)."""
        t = np.asarray(t, dtype=float)
        k = np.arange(1, self._r_cos.size + 1)
        st = np.sin(np.multiply.outer(t, k))
        ct = np.cos(np.multiply.outer(t, k))
        series = st @ (self._r_cos / k) - (ct - 1.0) @ (self._r_sin / k)
        return self._r_mean * t + series

    def theta_of_arclength(self, s):
        """Invert s(theta) by Newton; s is taken mod the perimeter."""
        s = np.mod(np.asarray(s, dtype=float), self.perimeter)
        idx = np.searchsorted(self.s_nodes, s, side="right") - 1
        idx = np.clip(idx, 0, self.resolution - 1)
        t = self.theta[idx] + (s - self.s_nodes[idx]) / np.maximum(
            self.support.radius_of_curvature(self.theta[idx]), 1e-300)
        for _ in range(12):
            f = self.arclength_of_theta(t) - s
            t = t - f / self.support.radius_of_curvature(t)
            if np.max(np.abs(f)) < 1e-13 * max(self.perimeter, 1.0):
                break
        return t

    def point(self, t):
        """Boundary point(s) at support angle t."""
        t = np.asarray(t, dtype=float)
        h, dh = self.support.h(t), self.support.dh(t)
        u = np.stack([np.cos(t), np.sin(t)], axis=-1)
        up = np.stack([-np.sin(t), np.cos(t)], axis=-1)
        return h[..., None] * u + dh[..., None] * up

    def frame(self, t):
        """(position, tangent, outward normal, curvature) at support angle t."""
        t = np.asarray(t, dtype=float)
        q = self.point(t)
        tan = np.stack([-np.sin(t), np.cos(t)], axis=-1)
        nu = np.stack([np.cos(t), np.sin(t)], axis=-1)
        kappa = 1.0 / self.support.radius_of_curvature(t)
        return q, tan, nu, kappa

    def quadrature_weights(self):
        """ds weights for the tabulated nodes (periodic trapezoid in theta)."""
        dt = 2.0 * np.pi / self.resolution
        return self.support.radius_of_curvature(self.theta) * dt

    def radial_profile(self, phi):
        """Boundary radius r(phi) in polar angle phi (domain is star-shaped)."""
        phi = np.asarray(phi, dtype=float)
        # polar angle alpha(theta) is monotone with alpha'(theta) = R*h/r^2 > 0
        q = self.positions
        alpha = np.unwrap(np.arctan2(q[:, 1], q[:, 0]))
        alpha -= 2 * np.pi * np.floor(alpha[0] / (2 * np.pi))
        target = np.mod(phi - alpha[0], 2 * np.pi) + alpha[0]
        grid = np.concatenate([alpha, [alpha[0] + 2 * np.pi]])
        tgrid = np.concatenate([self.theta, [self.theta[0] + 2 * np.pi]])
        t = np.interp(target, grid, tgrid)
        for _ in range(40):
            qv = self.point(t)
            al = np.arctan2(qv[..., 1], qv[..., 0])
            diff = np.mod(al - target + np.pi, 2 * np.pi) - np.pi
            r2 = qv[..., 0] ** 2 + qv[..., 1] ** 2
            dal = self.support.radius_of_curvature(t) * self.support.h(t) / r2
            t = t - diff / dal
            if np.max(np.abs(diff)) < 1e-14:
                break
        qv = self.point(t)
        return np.hypot(qv[..., 0], qv[..., 1])


def _fourier_of_radius(support: SupportFunction, n_modes: int):
    """Real Fourier coefficients of R(theta) = h + h'' via FFT."""
    m = max(4 * n_modes, 2048)
    t = np.linspace(0.0, 2 * np.pi, m, endpoint=False)
    r = support.radius_of_curvature(t)
    coeff = np.fft.rfft(r) / m
    mean = coeff[0].real
    cos_c = 2.0 * coeff[1:].real
    sin_c = -2.0 * coeff[1:].imag
    # drop the (negligible) tail so arclength evaluation stays cheap
    mag = np.abs(cos_c) + np.abs(sin_c)
    keep = np.nonzero(mag > 1e-16 * max(1.0, mean))[0]
    k_max = keep[-1] + 1 if keep.size else 1
    return mean, cos_c[:k_max], sin_c[:k_max]


def build_domain(spec: DomainSpec, resolution: int = 256) -> BoundaryCurve:
    """Construct the tabulated boundary; rejects non-convex or non-star-shaped input."""
    if resolution < 64:
        raise ValueError("resolution must be >= 64")
    support = SupportFunction(spec)

    t_scan = np.linspace(0.0, 2 * np.pi, _CONVEXITY_GRID, endpoint=False)
    r_scan = support.radius_of_curvature(t_scan)
    if np.min(r_scan) <= 0.0:
        raise NonConvex(
            f"curvature radius min {np.min(r_scan):.6g} <= 0 for kind {spec.kind}"
        )
    h_scan = support.h(t_scan)
    if np.min(h_scan) <= _STAR_MARGIN:
        raise NotStarShaped(
            f"boundary weight min {np.min(h_scan):.6g} <= {_STAR_MARGIN}"
        )

    mean, cos_c, sin_c = _fourier_of_radius(support, resolution)
    theta = np.linspace(0.0, 2 * np.pi, resolution, endpoint=False)

    curve = BoundaryCurve(
        spec=spec,
        support=support,
        resolution=resolution,
        theta=theta,
        s_nodes=None,
        positions=None,
        tangents=None,
        normals_out=None,
        curvature=None,
        area=0.0,
        perimeter=2 * np.pi * mean,
        width=None,
        _r_mean=mean,
        _r_cos=cos_c,
        _r_sin=sin_c,
    )
    curve.s_nodes = curve.arclength_of_theta(theta)
    q, tan, nu, kappa = curve.frame(theta)
    curve.positions, curve.tangents, curve.normals_out = q, tan, nu
    curve.curvature = kappa
    curve.area, curve.perimeter = area_perimeter(curve)
    if spec.is_constant_width:
        curve.width = 2 * spec.radius if spec.kind == "disk" else 2 * spec.h0
    return curve


def boundary_point(curve: BoundaryCurve, s):
    """(position, tangent, outward normal, curvature) at arclength s (mod L)."""
    t = curve.theta_of_arclength(s)
    return curve.frame(t)


def rellich_weight(curve: BoundaryCurve, s):
    """F(s) = <q(s), nu_q(s)>, positive on star-shaped domains."""
    t = curve.theta_of_arclength(s)
    return curve.support.h(t)


def area_perimeter(curve: BoundaryCurve, rel_tol: float = 1e-10):
    """Area and perimeter by refining periodic trapezoid sums.

    Trapezoid on a smooth periodic integrand converges spectrally, so
    doubling the grid until two successive values agree gives an adaptive
    scheme with an honest error estimate.
    """
    sup = curve.support

    def both(n):
        t = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        h, dh = sup.h(t), sup.dh(t)
        dt = 2 * np.pi / n
        return 0.5 * np.sum(h * h - dh * dh) * dt, np.sum(h) * dt

    n = max(256, curve.resolution)
    a_prev, l_prev = both(n)
    while n <= 2 ** 20:
        n *= 2
        a, l = both(n)
        if (abs(a - a_prev) <= rel_tol * abs(a)
                and abs(l - l_prev) <= rel_tol * abs(l)):
            return a, l
        a_prev, l_prev = a, l
    raise QuadratureFailure("area/perimeter did not converge to 1e-10")


def width_profile(curve: BoundaryCurve):
    """(min, max) width over all directions; equal pair = constant width."""
    sup = curve.support

    def w(t):
        return sup.h(t) + sup.h(t + np.pi)

    t = np.linspace(0.0, np.pi, 4096, endpoint=False)
    vals = w(t)
    lo_i, hi_i = int(np.argmin(vals)), int(np.argmax(vals))
    dt = t[1] - t[0]

    def refine(i, sign):
        res = minimize_scalar(lambda x: sign * w(x),
                              bounds=(t[i] - dt, t[i] + dt), method="bounded",
                              options={"xatol": 1e-12})
        return sign * res.fun

    return refine(lo_i, 1.0), refine(hi_i, -1.0)


# --- higher-dimensional model domains -------------------------------------

@dataclass(frozen=True)
class HigherDomainSpec:
    """n-dimensional ball or box with closed-form geometric data."""

    kind: str
    dim: int
    radius: float = 1.0
    sides: tuple = ()

    def __post_init__(self):
        if self.kind not in ("ball", "box"):
            raise UnsupportedKind(f"unknown higher-dimensional kind {self.kind!r}")
        if self.dim < 2:
            raise ValueError("dimension must be >= 2")
        if self.kind == "ball" and not self.radius > 0:
            raise ValueError("ball radius must be positive")
        if self.kind == "box":
            if len(self.sides) != self.dim:
                raise ValueError("box needs one side length per dimension")
            if any(s <= 0 for s in self.sides):
                raise ValueError("box sides must be positive")
            object.__setattr__(self, "sides", tuple(float(s) for s in self.sides))

    @classmethod
    def from_json(cls, doc: dict) -> "HigherDomainSpec":
        if doc["kind"] == "ball":
            return cls(kind="ball", dim=int(doc["dim"]),
                       radius=float(doc["radius"]))
        return cls(kind="box", dim=len(doc["sides"]),
                   sides=tuple(float(s) for s in doc["sides"]))

    def to_json(self) -> dict:
        if self.kind == "ball":
            return {"kind": "ball", "dim": self.dim, "radius": self.radius}
        return {"kind": "box", "sides": list(self.sides)}

    @property
    def volume(self) -> float:
        if self.kind == "ball":
            n = self.dim
            return math.pi ** (n / 2) * self.radius ** n / math.gamma(n / 2 + 1)
        return math.prod(self.sides)

    @property
    def boundary_volume(self) -> float:
        if self.kind == "ball":
            n = self.dim
            return 2 * math.pi ** (n / 2) * self.radius ** (n - 1) / math.gamma(n / 2)
        vol = self.volume
        return 2 * sum(vol / s for s in self.sides)

    @property
    def total_mean_curvature(self) -> Optional[float]:
        """Integral of the mean curvature over the boundary (smooth kinds)."""
        if self.kind == "ball":
            return self.boundary_volume / self.radius
        return None

    @property
    def scalar_curvature_integral(self) -> float:
        return 0.0  # Euclidean domains are flat
