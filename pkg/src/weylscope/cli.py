"""Configuration, orchestration, persistence, and report generation.

One experiment = one JSON config + one task.  Every task writes CSV/JSON
artifacts (floats at 17 significant digits so files round-trip exactly)
plus an entry in checks.json when the config carries acceptance bands;
`report` aggregates a directory of runs into markdown and plot-ready CSV.
Spectra are cached under a content hash of the domain + generator options.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import billiard, geometry, mps, spectra, trace, weyl
from .errors import ConfigError, MissingArtifact, WeylscopeError

FMT = "%.17g"

TASKS = ("spectrum", "orbits", "weyl", "trace", "rellich", "report")


@dataclass
class ExperimentConfig:
    task: str
    domain: dict
    bc: str = "dirichlet"
    out_dir: str = "runs/out"
    seed: int = 0
    threads: int = 1
    resolution: int = 256
    params: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, doc: dict, task: Optional[str] = None):
        if not isinstance(doc, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        task = task or doc.get("task")
        if task not in TASKS:
            raise ConfigError("task", f"must be one of {TASKS}, got {task!r}")
        if task != "report" and "domain" not in doc:
            raise ConfigError("domain", "missing domain description")
        bc = doc.get("bc", "dirichlet")
        if bc not in ("dirichlet", "neumann"):
            raise ConfigError("bc", f"must be dirichlet or neumann, got {bc!r}")
        cfg = cls(task=task, domain=doc.get("domain", {}), bc=bc,
                  out_dir=doc.get("out", doc.get("out_dir", "runs/out")),
                  seed=int(doc.get("seed", 0)),
                  threads=int(doc.get("threads", 1)),
                  resolution=int(doc.get("resolution", 256)),
                  params=doc.get("params", {}))
        cfg.validate()
        return cfg

    def validate(self):
        p = self.params
        if "lambda_window" in p:
            lo, hi = p["lambda_window"]
            if not 0 < lo < hi:
                raise ConfigError("params.lambda_window",
                                  f"need 0 < lo < hi, got [{lo}, {hi}]")
        if "lambda_max" in p and not p["lambda_max"] > 0:
            raise ConfigError("params.lambda_max", "must be positive")
        if "eps" in p and "T" in p and p["eps"] >= p["T"]:
            raise ConfigError("params.eps",
                              f"eps={p['eps']} must be smaller than T={p['T']}")
        if "grid" in p:
            g = p["grid"]
            if len(g) != 3 or not g[0] < g[1] or int(g[2]) < 2:
                raise ConfigError("params.grid", "expected [lo, hi, n]")
        if "L_max" in p and not p["L_max"] > 0:
            raise ConfigError("params.L_max", "must be positive")

    def domain_is_planar(self):
        return self.domain.get("kind") in geometry.PLANAR_KINDS


# --- persistence helpers -----------------------------------------------------

def _write_csv(path: Path, header: List[str], columns: List[np.ndarray]):
    rows = len(columns[0]) if columns else 0
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(rows):
            cells = []
            for col in columns:
                v = col[i]
                if isinstance(v, (str, np.str_)):
                    cells.append(str(v))
                elif isinstance(v, (int, np.integer)):
                    cells.append(str(int(v)))
                else:
                    cells.append(FMT % float(v))
            fh.write(",".join(cells) + "\n")


def _write_json(path: Path, doc: dict):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


def _content_hash(doc: dict) -> str:
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"),
                      default=float)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def cache_dir(out_dir: Path) -> Path:
    env = os.environ.get("WEYLSCOPE_CACHE")
    d = Path(env) if env else out_dir / "cache"
    d.mkdir(parents=True, exist_ok=True)
    return d


def _spectrum_to_disk(path: Path, spec: spectra.Spectrum):
    np.savez(path, lambdas=spec.lambdas, multiplicities=spec.multiplicities,
             bc=spec.bc, generator=spec.generator,
             lambda_max=spec.lambda_max, certificate=spec.certificate,
             lambda_min_valid=spec.lambda_min_valid)


def _spectrum_from_disk(path: Path) -> spectra.Spectrum:
    z = np.load(path, allow_pickle=False)
    return spectra.Spectrum(
        z["lambdas"], z["multiplicities"], bc=str(z["bc"]),
        generator=str(z["generator"]), lambda_max=float(z["lambda_max"]),
        certificate=str(z["certificate"]),
        lambda_min_valid=float(z["lambda_min_valid"]))


# --- spectrum construction ----------------------------------------------------

def build_curve(cfg: ExperimentConfig) -> geometry.BoundaryCurve:
    spec = geometry.DomainSpec.from_json(cfg.domain)
    return geometry.build_domain(spec, cfg.resolution)


def obtain_spectrum(cfg: ExperimentConfig, out: Path):
    """Spectrum for the configured domain, cached by content hash."""
    p = cfg.params
    key = {"domain": cfg.domain, "bc": cfg.bc,
           "lambda_max": p.get("lambda_max"),
           "lambda_window": p.get("lambda_window"),
           "resolution": cfg.resolution,
           "mps": p.get("mps", {})}
    h = _content_hash(key)
    cpath = cache_dir(out) / f"spectrum_{h}.npz"
    if cpath.exists():
        return _spectrum_from_disk(cpath), None
    kind = cfg.domain.get("kind")
    data = None
    if kind == "ball":
        hd = geometry.HigherDomainSpec.from_json(cfg.domain)
        spec = spectra.ball_spectrum(hd.dim, hd.radius, p["lambda_max"], cfg.bc)
    elif kind == "box":
        hd = geometry.HigherDomainSpec.from_json(cfg.domain)
        spec = spectra.box_spectrum(hd.sides, p["lambda_max"], cfg.bc)
    elif kind == "disk" and "lambda_window" not in p:
        spec = spectra.disk_spectrum(cfg.domain["radius"], p["lambda_max"],
                                     cfg.bc)
    else:
        curve = build_curve(cfg)
        opts = mps.MpsOptions(threads=cfg.threads, **p.get("mps", {}))
        window = tuple(p.get("lambda_window", (2.0, p.get("lambda_max", 20.0))))
        spec, data = mps.mps_spectrum(curve, window, cfg.bc, opts)
    _spectrum_to_disk(cpath, spec)
    return spec, data


def make_context(cfg: ExperimentConfig):
    kind = cfg.domain.get("kind")
    if kind in ("ball", "box"):
        hd = geometry.HigherDomainSpec.from_json(cfg.domain)
        return weyl.WeylContext.from_higher(hd, cfg.bc)
    return weyl.WeylContext.from_curve(build_curve(cfg), cfg.bc)


# --- tasks ---------------------------------------------------------------------

def task_spectrum(cfg: ExperimentConfig, out: Path):
    spec, _ = obtain_spectrum(cfg, out)
    _write_csv(out / "spectrum.csv", ["lambda", "multiplicity"],
               [spec.lambdas, spec.multiplicities])
    _write_json(out / "spectrum.json", {
        "generator": spec.generator, "bc": spec.bc,
        "lambda_max": spec.lambda_max, "certificate": spec.certificate,
        "count": spec.total_count})
    return {"count": spec.total_count, "certificate": spec.certificate}


def task_orbits(cfg: ExperimentConfig, out: Path):
    curve = build_curve(cfg)
    L_max = cfg.params.get("L_max", 2.0 * curve.perimeter)
    ls = billiard.length_spectrum(curve, L_max, seed=cfg.seed)
    eps_search = cfg.params.get("eps_search", 0.5)
    rows = {k: [] for k in ("k", "m", "T", "d", "kind", "eps_isolation",
                            "kernel_dim", "glancing_margin")}
    for fam in ls.families:
        try:
            rep = billiard.admissibility_check(curve, fam, ls, min(
                eps_search, ls.L_max - fam.length))
            eps_i, kdim, marg = rep.eps_isolation, max(rep.kernel_dims), \
                rep.glancing_margin
        except WeylscopeError:
            eps_i, kdim, marg = float("nan"), -1, float("nan")
        rows["k"].append(fam.k)
        rows["m"].append(fam.m)
        rows["T"].append(fam.length)
        rows["d"].append(fam.d)
        rows["kind"].append(fam.kind)
        rows["eps_isolation"].append(eps_i)
        rows["kernel_dim"].append(kdim)
        rows["glancing_margin"].append(marg)
    _write_csv(out / "orbits.csv", list(rows.keys()),
               [np.array(v) for v in rows.values()])
    _write_csv(out / "length_spectrum.csv", ["length", "k", "m", "d", "kind"],
               [np.array([e.length for e in ls.entries]),
                np.array([e.k for e in ls.entries]),
                np.array([e.m for e in ls.entries]),
                np.array([e.d for e in ls.entries]),
                np.array([e.kind for e in ls.entries])])
    return {"n_families": len(ls.families), "complete": ls.complete}


def task_weyl(cfg: ExperimentConfig, out: Path):
    spec, _ = obtain_spectrum(cfg, out)
    ctx = make_context(cfg)
    p = cfg.params
    lam_hi = p.get("lambda_max", spec.lambda_max)
    grid = np.linspace(max(spec.lambda_min_valid, 1e-6), lam_hi,
                       int(p.get("grid_points", 512)))
    N = weyl.counting_function(spec, grid)
    main = ctx.smooth_term(grid)
    R = N - main
    _write_csv(out / "remainder.csv", ["lambda", "N", "mainterm", "R"],
               [grid, N, main, R])

    windows = p.get("windows")
    result = {}
    if windows is None:
        windows = weyl.dyadic_windows(p.get("window_floor", lam_hi / 12),
                                      lam_hi)
    averages = [weyl.dyadic_average(spec, ctx, lam) for lam in windows]
    _write_csv(out / "dyadic.csv", ["lambda_window", "dyadic_average"],
               [np.array(windows), np.array(averages)])
    if len(windows) >= 5:
        fit = weyl.exponent_fit(list(zip(windows, averages)))
        fit_doc = {"alpha": fit.alpha, "stderr": fit.half_width,
                   "intercept": fit.intercept,
                   "weighted_alpha": fit.weighted_alpha,
                   "windows": list(map(float, windows))}
        band = p.get("accept_alpha_band")
        if band:
            fit_doc["band"] = band
            fit_doc["pass"] = bool(band[0] <= fit.alpha <= band[1])
        _write_json(out / "fit.json", fit_doc)
        result.update(alpha=fit.alpha, stderr=fit.half_width)
        if band:
            result["pass"] = fit_doc["pass"]
    return result


def task_trace(cfg: ExperimentConfig, out: Path):
    spec, _ = obtain_spectrum(cfg, out)
    p = cfg.params
    tf = trace.build_test_function(p["T"], p["eps"],
                                   p.get("tail_tol", 1e-8))
    lo, hi, n = p.get("grid", (50.0, 400.0, 2048))
    grid = np.linspace(lo, hi, int(n))
    ts = trace.smoothed_trace(spec, tf, grid)
    _write_csv(out / "trace.csv", ["lambda", "re_s", "im_s", "abs_s"],
               [grid, ts.values.real, ts.values.imag, np.abs(ts.values)])
    result = {"truncation_flag": ts.truncation_flag}
    d = int(p.get("expected_d", 1))
    try:
        rep = trace.oscillation_analysis(ts, expected_d=d)
        doc = {"frequency": rep.frequency, "exponent": rep.exponent,
               "plateau": list(rep.plateau_band),
               "plateau_median": rep.plateau_median}
        band = p.get("accept_exponent_band")
        if band:
            doc["band"] = band
            doc["pass"] = bool(band[0] <= rep.exponent <= band[1]
                               and abs(rep.frequency - p["T"]) < 0.01 * p["T"])
        _write_json(out / "analysis.json", doc)
        result.update(frequency=rep.frequency, exponent=rep.exponent)
        if band:
            result["pass"] = doc["pass"]
    except WeylscopeError:
        pass
    if "t_range" in p:
        peaks = trace.length_spectrum_peaks(
            spec, tuple(p["t_range"]), p.get("smoothing_width", 0.005))
        _write_csv(out / "peaks.csv", ["t", "prominence"],
                   [np.array([t for t, _ in peaks]),
                    np.array([q for _, q in peaks])])
        result["n_peaks"] = len(peaks)
    return result


def task_rellich(cfg: ExperimentConfig, out: Path):
    curve = build_curve(cfg)
    p = cfg.params
    count = int(p.get("count", 10))
    if cfg.domain.get("kind") == "disk" and not p.get("use_mps", False):
        data = spectra.disk_eigen_boundary_data(curve, cfg.bc, count)
    else:
        opts = mps.MpsOptions(threads=cfg.threads, **p.get("mps", {}))
        window = tuple(p.get("lambda_window", (2.0, 12.0)))
        _, data = mps.mps_spectrum(curve, window, cfg.bc, opts)
        data.traces = data.traces[:count]
    res = spectra.rellich_check(curve, data)
    lams = np.array([t.lam for t in data.traces])
    _write_csv(out / "rellich.csv", ["lambda", "residual"], [lams, res])
    w = curve.quadrature_weights()
    for i, tr in enumerate(data.traces):
        u = (tr.normal_deriv / (tr.lam * tr.interior_norm)
             if data.bc == "dirichlet"
             else tr.restriction / tr.interior_norm)
        _write_csv(out / f"boundary_{i:04d}.csv", ["s", "u_b_real"],
                   [curve.s_nodes, np.real(u)])
    tol = p.get("accept_residual")
    result = {"max_residual": float(res.max()) if res.size else 0.0}
    if tol is not None:
        result["pass"] = bool(res.size and res.max() < tol)
        _write_json(out / "checks.json",
                    {"max_residual": result["max_residual"], "tol": tol,
                     "pass": result["pass"]})
    return result


def task_report(cfg: ExperimentConfig, out: Path, assert_pass: bool = False):
    root = Path(cfg.params.get("artifacts", out))
    docs = []
    for path in sorted(root.rglob("*.json")):
        try:
            with open(path) as fh:
                docs.append((path, json.load(fh)))
        except (OSError, json.JSONDecodeError):
            continue
    if not docs:
        raise MissingArtifact(f"no JSON artifacts under {root}")
    lines = ["# weylscope report", ""]
    failures = 0
    by_dir = {}
    for path, doc in docs:
        by_dir.setdefault(path.parent, []).append((path.name, doc))
    for d, items in sorted(by_dir.items()):
        lines.append(f"## {d}")
        lines.append("")
        lines.append("| artifact | key figures | pass |")
        lines.append("|---|---|---|")
        for name, doc in items:
            keys = []
            for k in ("alpha", "stderr", "frequency", "exponent",
                      "max_residual", "count", "certificate"):
                if k in doc:
                    keys.append(f"{k}={doc[k]}")
            verdict = doc.get("pass")
            if verdict is False:
                failures += 1
            cell = {True: "yes", False: "**NO**"}.get(verdict, "-")
            lines.append(f"| {name} | {'; '.join(keys)} | {cell} |")
        lines.append("")
    (out / "report.md").write_text("\n".join(lines))
    if assert_pass and failures:
        return {"failures": failures, "exit": 4}
    return {"failures": failures}


def run(cfg: ExperimentConfig, assert_pass: bool = False) -> int:
    """Execute a task pipeline; returns the process exit code."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    np.random.seed(cfg.seed)
    handlers = {
        "spectrum": task_spectrum, "orbits": task_orbits, "weyl": task_weyl,
        "trace": task_trace, "rellich": task_rellich,
    }
    try:
        if cfg.task == "report":
            res = task_report(cfg, out, assert_pass=assert_pass)
            _write_json(out / "run.json", {"task": cfg.task, "result": res})
            return res.get("exit", 0)
        res = handlers[cfg.task](cfg, out)
        _write_json(out / "run.json",
                    {"task": cfg.task, "seed": cfg.seed, "result": res,
                     "config": {"domain": cfg.domain, "bc": cfg.bc,
                                "params": cfg.params}})
        return 0
    except ConfigError:
        raise
    except WeylscopeError as exc:
        print(f"numerical failure in task {cfg.task}: {exc}", file=sys.stderr)
        return 3


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="weylscope",
        description="spectral-geometry experiments on billiard domains")
    parser.add_argument("task", choices=TASKS)
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--assert", dest="assert_pass", action="store_true",
                        help="report task: exit 4 when any check failed")
    args = parser.parse_args(argv)
    try:
        with open(args.config) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: cannot read {args.config}: {exc}",
              file=sys.stderr)
        return 2
    try:
        cfg = ExperimentConfig.from_json(doc, task=args.task)
        if args.out:
            cfg.out_dir = args.out
        if args.threads is not None:
            cfg.threads = args.threads
        if args.seed is not None:
            cfg.seed = args.seed
        return run(cfg, assert_pass=args.assert_pass)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
