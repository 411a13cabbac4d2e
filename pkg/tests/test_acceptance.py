"""Acceptance suite: every headline criterion at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one line per
criterion.  The heavier fixtures (disk spectra to 600+, the constant-width
eigenvalue windows) are shared across criteria at session scope.
"""

import math
import time

import numpy as np
import pytest
from scipy import special

from weylscope.billiard import (PhasePoint, admissibility_check,
                                billiard_map, billiard_map_differential,
                                find_periodic_orbits, length_spectrum)
from weylscope.geometry import HigherDomainSpec
from weylscope.mps import MpsOptions, mps_spectrum
from weylscope.spectra import (ball_spectrum, box_spectrum,
                               disk_eigen_boundary_data, disk_spectrum,
                               rellich_check)
from weylscope.trace import (build_test_function, geometric_amplitude,
                             oscillation_analysis, plateau_band,
                             smoothed_trace)
from weylscope.weyl import (WeylContext, counting_function, dyadic_average,
                            dyadic_windows, exponent_fit, weyl_remainder)
from tests.test_billiard import fd_jacobian

DISK_WINDOWS = [40.0, 60.0, 90.0, 135.0, 200.0, 300.0]
AVERAGE_FLOOR = 0.1   # recorded empirical floor for average / sqrt(lambda)


def _report(criterion, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
    assert ok, f"criterion {criterion}: {detail}"


@pytest.fixture(scope="module")
def disk640_dirichlet():
    return disk_spectrum(1.0, 640.0, "dirichlet", with_orders=True)


@pytest.fixture(scope="module")
def disk601_neumann():
    return disk_spectrum(1.0, 601.0, "neumann", with_orders=True)


@pytest.fixture(scope="module")
def disk_ctx():
    return {
        "dirichlet": WeylContext(dim=2, volume=np.pi,
                                 boundary_volume=2 * np.pi, bc="dirichlet"),
        "neumann": WeylContext(dim=2, volume=np.pi,
                               boundary_volume=2 * np.pi, bc="neumann"),
    }


def test_criterion_1_square_exactness():
    t0 = time.perf_counter()
    spec = box_spectrum([math.pi, math.pi], 10.5, "dirichlet")
    ctx = WeylContext(dim=2, volume=math.pi ** 2, boundary_volume=4 * math.pi,
                      bc="dirichlet")
    n5 = counting_function(spec, 5.0)
    r5 = weyl_remainder(spec, ctx, 5.0)
    elapsed = time.perf_counter() - t0
    ok = (n5 == 15 and abs(r5 - 0.365046) < 1e-6 and elapsed < 1.0)
    _report(1, ok, f"N(5)={n5}, R(5)={r5:.9f}, runtime {elapsed:.3f}s")


def test_criterion_2_disk_dyadic_bounds(disk640_dirichlet, disk601_neumann,
                                        disk_ctx):
    # zero residuals of the generator
    for spec in (disk640_dirichlet, disk601_neumann):
        orders, zeros = spec.meta["orders"], spec.meta["zeros"]
        good = orders >= 0
        if spec.bc == "dirichlet":
            res = np.abs(special.jv(orders[good], zeros[good]))
        else:
            res = np.abs(special.jvp(orders[good], zeros[good]))
        assert res.max() < 1e-12

    details = []
    ok = True
    for spec in (disk640_dirichlet, disk601_neumann):
        ctx = disk_ctx[spec.bc]
        pts = [(lam, dyadic_average(spec, ctx, lam)) for lam in DISK_WINDOWS]
        fit = exponent_fit(pts)
        ratios = [avg / math.sqrt(lam) for lam, avg in pts]
        ok = ok and 0.45 <= fit.alpha <= 0.75
        ok = ok and all(r >= AVERAGE_FLOOR for r in ratios)
        details.append(f"{spec.bc}: alpha={fit.alpha:.4f}"
                       f"+-{fit.half_width:.4f},"
                       f" min avg/sqrt={min(ratios):.3f}")
    _report(2, ok, "; ".join(details))


def test_criterion_3_trace_oscillation(disk640_dirichlet):
    tf = build_test_function(4.0, 0.9, tail_tol=1e-8)
    grid = np.linspace(50.0, 400.0, 2048)
    ts = smoothed_trace(disk640_dirichlet, tf, grid)
    rep = oscillation_analysis(ts, expected_d=1)
    lo, hi = rep.plateau_band
    ok = (abs(rep.frequency - 4.0) < 0.04
          and 0.4 <= rep.exponent <= 0.6
          and lo > 0)
    _report(3, ok, f"frequency={rep.frequency:.4f}, "
                   f"exponent={rep.exponent:.4f}, plateau=({lo:.4f},{hi:.4f})")


def test_criterion_4_ball_exponent():
    spec = ball_spectrum(3, 1.0, 150.0, "dirichlet")
    ctx = WeylContext.from_higher(
        HigherDomainSpec(kind="ball", dim=3, radius=1.0), "dirichlet")
    windows = dyadic_windows(14.0, 150.0)
    pts = [(lam, dyadic_average(spec, ctx, lam)) for lam in windows]
    fit = exponent_fit(pts)
    ok = 1.35 <= fit.alpha <= 1.65
    _report(4, ok, f"ball n=3 alpha={fit.alpha:.4f}+-{fit.half_width:.4f} "
                   f"(predicted 1.5)")


def test_criterion_5_box_exponent():
    spec = box_spectrum([math.pi] * 3, 150.0, "dirichlet")
    ctx = WeylContext.from_higher(
        HigherDomainSpec(kind="box", dim=3, sides=(math.pi,) * 3), "dirichlet")
    windows = dyadic_windows(14.0, 150.0)
    pts = [(lam, dyadic_average(spec, ctx, lam)) for lam in windows]
    fit = exponent_fit(pts)
    ok = 0.85 <= fit.alpha <= 1.15
    _report(5, ok, f"box n=3 alpha={fit.alpha:.4f}+-{fit.half_width:.4f} "
                   f"(predicted 1.0)")


def test_criterion_6_rellich(unit_circle, ellipse_small):
    data = disk_eigen_boundary_data(unit_circle, "dirichlet", 10)
    disk_res = rellich_check(unit_circle, data)

    spec, edata = mps_spectrum(ellipse_small, (2.0, 11.9), "dirichlet")
    edata.traces = edata.traces[:20]
    ell_res = rellich_check(ellipse_small, edata)

    for tr in data.traces:
        tr.normal_deriv = 3.7 * tr.normal_deriv
        tr.interior_norm = 3.7 * tr.interior_norm
    scaled = rellich_check(unit_circle, data)

    ok = (disk_res.max() < 1e-10 and len(ell_res) == 20
          and ell_res.max() < 1e-3
          and np.allclose(scaled, disk_res, atol=1e-14))
    _report(6, ok, f"disk max={disk_res.max():.2e}, "
                   f"ellipse(20) max={ell_res.max():.2e}, scaling exact")


def test_criterion_7_admissibility(unit_circle, cw002, ellipse_small):
    # (a) circle bouncing-ball family
    ls = length_spectrum(unit_circle, 6.0, seed=1)
    bb = next(f for f in ls.families if f.k == 2)
    rep = admissibility_check(unit_circle, bb, ls, 1.5)
    M = billiard_map_differential(unit_circle, PhasePoint(0.0, 0.0), 2)
    ok_a = (abs(rep.eps_isolation - (3 * math.sqrt(3) - 4)) < 1e-6
            and np.max(np.abs(M - [[1, -4], [0, 1]])) < 1e-8
            and set(rep.kernel_dims) == {1})

    # (b) constant-width bouncing-ball family
    ls2 = length_spectrum(cw002, 3.0, seed=1)
    fam = next(f for f in ls2.families if f.k == 2)
    rep2 = admissibility_check(cw002, fam, ls2, 0.6)
    gap = ls2.lengths[1] - 2.0
    reps8 = rep2.kernel_dims[:8]
    fd_ok = True
    for p in fam.representatives[:8]:
        A = billiard_map_differential(cw002, p, 1)
        F = fd_jacobian(cw002, p, 1)
        fd_ok = fd_ok and np.max(np.abs(A - F)) < 1e-6
    ok_b = (len(reps8) >= 8 and all(k == 1 for k in reps8) and fd_ok
            and gap > 0 and abs(fam.length - 2.0) < 1e-9
            and rep2.eps_isolation > 0)

    # (c) ellipse l_{1,n} monotone below the perimeter
    lengths = []
    for n in range(3, 13):
        fams = find_periodic_orbits(ellipse_small, n, 1, seed=4)
        lengths.append(min(f.length for f in fams))
    increasing = all(b > a for a, b in zip(lengths, lengths[1:]))
    below = all(l < ellipse_small.perimeter for l in lengths)
    ok_c = increasing and below

    _report(7, ok_a and ok_b and ok_c,
            f"(a) eps={rep.eps_isolation:.6f} dbeta2 ok; "
            f"(b) gap={gap:.3f} kernel dims ok, fd ok; "
            f"(c) l_1n {lengths[0]:.4f}..{lengths[-1]:.4f} "
            f"< L={ellipse_small.perimeter:.4f} increasing={increasing}")


@pytest.mark.slow
def test_criterion_8_amplitude_ratio_diagnostic(cw002, cw004):
    domains = {}
    for name, curve in (("a3=0.02", cw002), ("a3=0.04", cw004)):
        ls = length_spectrum(curve, 3.0, seed=1)
        fam = next(f for f in ls.families if f.k == 2)
        gap = ls.lengths[1] - fam.length
        amp = geometric_amplitude(curve, fam)
        domains[name] = {"curve": curve, "gap": gap, "amp": amp}

    eps = min(0.5, *(0.9 * d["gap"] for d in domains.values()))
    tf = build_test_function(2.0, eps, tail_tol=1e-4)
    grid = np.linspace(28.0, 56.0, 600)
    for d in domains.values():
        spec, _ = mps_spectrum(d["curve"], (2.0, 60.0), "dirichlet",
                               MpsOptions(boundary_data=False, threads=4))
        assert spec.certificate == "weyl_corridor_checked"
        ts = smoothed_trace(spec, tf, grid)
        d["plateau"] = plateau_band(ts, d=1, lam_lo=30.0)[2]

    keys = list(domains)
    ratio_s = domains[keys[0]]["plateau"] / domains[keys[1]]["plateau"]
    ratio_amp = domains[keys[0]]["amp"] / domains[keys[1]]["amp"]
    rel = abs(ratio_s / ratio_amp - 1.0)
    verdict = "within 25%" if rel <= 0.25 else "OUTSIDE 25% (reported)"
    print(f"[DIAG] criterion 8: plateau ratio {ratio_s:.4f} vs amplitude "
          f"ratio {ratio_amp:.4f} (rel dev {rel:.1%}) - {verdict}")
    # diagnostic, not a gate: the run itself plus the comparison must exist
    assert np.isfinite(ratio_s) and np.isfinite(ratio_amp)


def test_criterion_9_property_suites(unit_circle, cw002, rng):
    # symplecticity at 10^3 random phase points
    worst = 0.0
    for _ in range(1000):
        p = PhasePoint(rng.uniform(0, cw002.perimeter),
                       rng.uniform(-0.95, 0.95))
        M = billiard_map_differential(cw002, p, 1)
        worst = max(worst, abs(np.linalg.det(M) - 1.0))
    ok_sym = worst < 1e-10

    # time-reversal involution
    ok_rev = True
    for _ in range(100):
        p = PhasePoint(rng.uniform(0, cw002.perimeter),
                       rng.uniform(-0.9, 0.9))
        q, _ = billiard_map(cw002, p)
        back, _ = billiard_map(cw002, PhasePoint(q.s, -q.eta))
        ds = abs((back.s - p.s + cw002.perimeter / 2) % cw002.perimeter
                 - cw002.perimeter / 2)
        ok_rev = ok_rev and ds < 1e-9 and abs(back.eta + p.eta) < 1e-9

    # MPS vs Bessel on the disk
    spec, _ = mps_spectrum(unit_circle, (2.0, 6.0), "dirichlet",
                           MpsOptions(boundary_data=False))
    oracle = disk_spectrum(1.0, 6.0, "dirichlet")
    ok_mps = (spec.total_count == oracle.total_count
              and np.max(np.abs(spec.lambdas - oracle.lambdas)) < 1e-8
              and spec.certificate == "weyl_corridor_checked")

    # counting-function round trip at machine precision
    sq = box_spectrum([math.pi, math.pi], 20.0, "dirichlet")
    ctx = WeylContext(dim=2, volume=math.pi ** 2, boundary_volume=4 * math.pi,
                      bc="dirichlet")
    lam = np.linspace(0.5, 19.5, 997)
    recon = weyl_remainder(sq, ctx, lam) + ctx.smooth_term(lam)
    ok_count = np.max(np.abs(recon - counting_function(sq, lam))) < 1e-10

    ok = ok_sym and ok_rev and ok_mps and ok_count
    _report(9, ok, f"det worst={worst:.2e}, reversal ok={ok_rev}, "
                   f"mps-vs-bessel ok={ok_mps}, roundtrip ok={ok_count}")
