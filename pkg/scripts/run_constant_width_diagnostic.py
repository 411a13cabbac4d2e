#!/usr/bin/env python3
"""Same-period amplitude comparison across two constant-width domains.

Both domains have width 1 and share the bouncing-ball period T = 2; the
leading trace amplitudes are proportional to the loop integral of F, i.e.
to the areas. The ratio of |S|/sqrt(lambda) plateaus is compared against
the area ratio. Unknown universal constants cancel in the ratio, but low
frequencies and tail truncation keep this a diagnostic, not a gate.
"""

import argparse
from pathlib import Path

import numpy as np

from weylscope.billiard import length_spectrum
from weylscope.cli import _write_csv, _write_json
from weylscope.geometry import DomainSpec, build_domain
from weylscope.mps import MpsOptions, mps_spectrum
from weylscope.trace import (build_test_function, geometric_amplitude,
                             plateau_band, smoothed_trace)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--lambda-max", type=float, default=60.0)
    ap.add_argument("--threads", type=int, default=4)
    ap.add_argument("--out", default="runs/constant_width")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    domains = {}
    for a3 in (0.02, 0.04):
        curve = build_domain(DomainSpec(kind="constant_width", h0=0.5,
                                        harmonics=[(3, a3, 0.0)]), 256)
        ls = length_spectrum(curve, 3.0, seed=1)
        fam = next(f for f in ls.families if f.k == 2)
        domains[a3] = {
            "curve": curve,
            "gap": float(ls.lengths[1] - fam.length),
            "amp": geometric_amplitude(curve, fam),
        }
        print(f"a3={a3}: area={curve.area:.6f}, isolation gap="
              f"{domains[a3]['gap']:.4f}, amplitude={domains[a3]['amp']:.6f}")

    eps = min(0.5, *(0.9 * d["gap"] for d in domains.values()))
    tf = build_test_function(2.0, eps, tail_tol=1e-4)
    grid = np.linspace(28.0, args.lambda_max - 4.0, 600)
    for a3, d in domains.items():
        spec, _ = mps_spectrum(d["curve"], (2.0, args.lambda_max),
                               "dirichlet",
                               MpsOptions(boundary_data=False,
                                          threads=args.threads))
        ts = smoothed_trace(spec, tf, grid)
        d["plateau"] = plateau_band(ts, d=1, lam_lo=30.0)[2]
        _write_csv(out / f"trace_a3_{a3}.csv",
                   ["lambda", "abs_s", "abs_s_over_sqrt"],
                   [grid, np.abs(ts.values),
                    np.abs(ts.values) / np.sqrt(grid)])

    r_s = domains[0.02]["plateau"] / domains[0.04]["plateau"]
    r_a = domains[0.02]["amp"] / domains[0.04]["amp"]
    rel = abs(r_s / r_a - 1.0)
    _write_json(out / "diagnostic.json", {
        "plateau_ratio": r_s, "amplitude_ratio": r_a,
        "relative_deviation": rel, "eps": eps,
        "within_25pct": rel <= 0.25})
    print(f"plateau ratio {r_s:.4f} vs amplitude ratio {r_a:.4f} "
          f"-> relative deviation {rel:.1%} "
          f"({'within' if rel <= 0.25 else 'outside'} 25%)")


if __name__ == "__main__":
    main()
