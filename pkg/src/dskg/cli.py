"""``dskg`` command line: ``run``, ``sweep`` and ``oracle-suite``.

Every command writes ``report.json``, ``series.csv`` and ``run.log`` into the
output directory once, at the end, through rename-into-place.  Exit status
is 0 when every verdict passes, 1 when any fails and 2 on a config error.
The report layout is described in ``docs/report_schema.md``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import kernels
from .config import ConfigError, ExperimentConfig, load_config
from .errors import DskgError
from .estimate_harness import (
    EstimateReport,
    dispersive_decay_report,
    energy_growth_report,
    obstruction_scan,
    strichartz_ratio_homog,
    strichartz_ratio_inhomog,
)
from .geometry import AlphaChoice, ModelParams, verify_commutator
from .semilinear import smallness_experiment

__all__ = ["main", "run_config", "sweep_config", "oracle_suite_reports", "write_outputs",
           "SCHEMA_VERSION", "SWEEP_COLUMNS"]

SCHEMA_VERSION = 1
SWEEP_COLUMNS = ("p", "q", "s", "eps", "t0", "T", "constant", "spread", "pass")

log = logging.getLogger("dskg")


# ----------------------------------------------------------------- output

def _jsonable(x):
    """Plain JSON values; non-finite floats become the strings ``inf``, ``-inf``, ``nan``."""
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if x is None or isinstance(x, str):
        return x
    return str(x)


def _atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def report_document(command: str, cfg: dict | None, reports, extra: dict | None = None) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "pass": all(r.passed for r in reports),
        "config": cfg,
        "reports": [r.to_dict() for r in reports],
    }
    if extra:
        doc.update(extra)
    return _jsonable(doc)


def series_rows(reports):
    for r in reports:
        for label, x, y in r.series:
            yield r.name, label, x, y


def write_outputs(out_dir, doc: dict, reports, log_text: str, extra_csv: dict | None = None):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["report", "series", "x", "y"])
    for name, label, x, y in series_rows(reports):
        w.writerow([name, label, repr(float(x)), repr(float(y))])
    _atomic_write(out / "series.csv", buf.getvalue())
    for fname, text in (extra_csv or {}).items():
        _atomic_write(out / fname, text)
    _atomic_write(out / "report.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
    _atomic_write(out / "run.log", log_text)


# ------------------------------------------------------------ experiments

def _tol(cfg: ExperimentConfig, key: str, default):
    return cfg.tolerances.get(key, default)


def _opt(cfg: ExperimentConfig, key: str, default):
    value = cfg.options.get(key)
    return default if value is None else value


def _alpha(cfg: ExperimentConfig) -> AlphaChoice:
    return cfg.alpha or AlphaChoice.default(cfg.params.lam, cfg.params.n)


def _homog(cfg, ex):
    kw = {}
    if "per_unit" in cfg.options:
        kw["per_unit"] = cfg.options["per_unit"]
    return strichartz_ratio_homog(
        ex, cfg.params.lam, _alpha(cfg), cfg.t0_list, cfg.T, cfg.ensemble_size, cfg.params,
        seed=cfg.seed, refine_N=cfg.options.get("refine_N"),
        max_spread=_tol(cfg, "max_spread", 2.0),
        refine_tolerance=_tol(cfg, "refine_tolerance", 0.2), **kw,
    )


def run_experiment(cfg: ExperimentConfig) -> list:
    p, lam = cfg.params, cfg.params.lam
    kind = cfg.experiment
    if kind == "energy":
        kw = {"per_unit": cfg.options["per_unit"]} if "per_unit" in cfg.options else {}
        return [energy_growth_report(lam, _alpha(cfg), p, cfg.ensemble_size, cfg.T, cfg.seed,
                                     _tol(cfg, "tolerance", 0.05), **kw)]
    if kind == "dispersive":
        return [dispersive_decay_report(
            lam, p, r=cfg.options.get("r"), window=tuple(_opt(cfg, "window", (0.05, 0.8))),
            which=_opt(cfg, "which", "dtUv"), points=_opt(cfg, "points", 12),
            tolerance=_tol(cfg, "tolerance", 0.15), min_r2=_tol(cfg, "min_r2", 0.9),
        )]
    if kind == "obstruction":
        return [obstruction_scan(
            lam, p, r=cfg.options.get("r"), t_range=tuple(_opt(cfg, "t_range", (5.0, 15.0))),
            local_window=tuple(_opt(cfg, "window", (0.05, 0.8))),
            which=_opt(cfg, "which", "dtUv"), points=_opt(cfg, "points", 16),
            tail_threshold=_tol(cfg, "tail_threshold", -0.1),
        )]
    if kind == "strichartz-homog":
        return _map(lambda ex: _homog(cfg, ex), cfg.exponents)
    if kind == "strichartz-inhomog":
        kw = {"per_unit": cfg.options["per_unit"]} if "per_unit" in cfg.options else {}
        t0 = cfg.t0_list[0] if cfg.t0_list else p.t0
        return _map(lambda ex: strichartz_ratio_inhomog(
            ex, lam, _alpha(cfg), t0, cfg.T_list, cfg.ensemble_size, p, seed=cfg.seed,
            growth_factor=_tol(cfg, "growth_factor", 2.0), **kw), cfg.exponents)
    if kind == "semilinear":
        kw = {"per_unit": cfg.options["per_unit"]} if "per_unit" in cfg.options else {}
        return [smallness_experiment(
            cfg.options["epsilon_ladder"], lam, p, T_long=cfg.T or 20.0, seed=cfg.seed,
            k=cfg.options.get("k"), rate_tolerance=_tol(cfg, "rate_tolerance", 0.05), **kw)]
    if kind == "oracle-suite":
        return oracle_suite_reports(seed=cfg.seed, rtol=_tol(cfg, "oracle_rtol", 1e-8))
    raise ConfigError(f"unknown experiment {kind!r}", "kind")


def _map(fn, items):
    """Run independent cells on up to ``DSKG_THREADS`` workers, keeping input order."""
    items = list(items)
    workers = min(kernels.thread_count(), max(1, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ------------------------------------------------------------ oracle suite

def oracle_suite_reports(seed: int = 0, rtol: float = 1e-8) -> list:
    """Cross-check the numerical core against independent references."""
    from scipy.integrate import solve_ivp

    from .fields_norms import CauchyData, SpectralField, random_cauchy_data
    from .propagators import SolutionTrace, residual_check, solve_homogeneous
    from .semilinear import Nonlinearity, evolve_semilinear
    from .spectral_modes import abel_determinant, mode_oracle, mode_propagator

    reports = []
    n = 3
    # Bessel-series fundamental matrices vs the adaptive integrator
    worst = 0.0
    cases = 0
    for lam in (n * n / 4 - 1, n * n / 4, n * n / 4 + 1):
        params = ModelParams(n=n, lam=lam)
        for mu in (1.0, 5.0, 20.0):
            for dt in (0.5, 1.0, 2.0, 4.0):
                s = params.t0
                num = mode_propagator(s, s + dt, mu * mu, params).as_array()
                ref = mode_oracle(s, s + dt, mu, params).as_array()
                worst = max(worst, float(np.max(np.abs(num - ref)) / np.max(np.abs(ref))))
                cases += 1
    reports.append(EstimateReport("oracle_bessel", worst, float("nan"), 0.0, rtol, cases,
                                  worst <= rtol, {"verdict_rule": "max relative deviation <= tolerance"}))

    # Abel's identity for the Wronskian
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    worst = 0.0
    for _ in range(100):
        s = rng.uniform(0.0, 3.0)
        t = s + rng.uniform(0.1, 4.0)
        params = ModelParams(n=n, a=float(rng.uniform(0.0, 2.0)))
        det = mode_propagator(s, t, float(rng.uniform(0.0, 400.0)), params).det
        worst = max(worst, abs(det - abel_determinant(s, t, params)))
    reports.append(EstimateReport("oracle_abel", worst, float("nan"), 0.0, 1e-8, 100, worst < 1e-8,
                                  {"verdict_rule": "max |det M - Abel| < tolerance"}))

    # commutator identity
    worst = 0.0
    q_flat = 0.0
    for a in (0.0, 1.0):
        params = ModelParams(n=n, a=a)
        for xi in ((1, 0, 0), (2, 3, 1), (7, 5, 4)):
            for t in (0.5, 1.0, 2.0, 4.0):
                chk = verify_commutator(xi, t, params)
                worst = max(worst, chk.residual)
                if a == 0.0:
                    q_flat = max(q_flat, abs(chk.q_multiplier))
    ok = worst < 1e-8 and q_flat == 0.0
    reports.append(EstimateReport("oracle_commutator", worst, float("nan"), 0.0, 1e-8, 24, ok,
                                  {"max_q_flat": q_flat,
                                   "verdict_rule": "finite-difference residual < tolerance and q = 0 for a = 0"}))

    # residual of a homogeneous trace and a corrupted control
    params = ModelParams(n=n, N=16)
    d = random_cauchy_data(params, np.random.default_rng(np.random.SeedSequence([seed, 2])))
    grid = np.linspace(params.t0, params.t0 + 2.0, 201)
    trace = solve_homogeneous(d, grid, params).materialize()
    res = residual_check(trace)
    u_all, du_all = trace.arrays()
    u_bad = u_all.copy()
    u_bad[100] *= 1.5
    bad = SolutionTrace(grid, params, u_bad, du_all)
    res_bad = residual_check(bad)
    reports.append(EstimateReport("oracle_residual", res, float("nan"), 0.0, 1e-5, len(grid),
                                  res < 1e-5 and res_bad > 1e-2,
                                  {"corrupted_residual": res_bad,
                                   "verdict_rule": "residual < 1e-5 and corrupted control > 1e-2"}))

    # spatially constant data vs a scalar ODE
    params = ModelParams(n=n, N=8)
    nl = Nonlinearity(3)
    c = 0.8
    phi = np.zeros((params.N,) * n, dtype=complex)
    phi[(0,) * n] = c
    data = CauchyData(SpectralField(phi, params.t0, params), SpectralField(np.zeros_like(phi), params.t0, params))
    grid = np.linspace(params.t0, params.t0 + 5.0, 101)
    tr = evolve_semilinear(data, nl, grid)
    ref = solve_ivp(lambda t, y: [y[1], -n * y[1] - params.lam * y[0] - y[0] ** 3],
                    (grid[0], grid[-1]), [c, 0.0], method="DOP853", rtol=1e-12, atol=1e-14,
                    t_eval=grid)
    dev = max(abs(tr.u_coeffs(i)[(0,) * n].real - ref.y[0][i]) for i in range(grid.size))
    reports.append(EstimateReport("oracle_constant_semilinear", float(dev), float("nan"), 0.0, 1e-6,
                                  grid.size, dev < 1e-6,
                                  {"verdict_rule": "max deviation from scalar ODE < tolerance"}))

    # compiled and python backends
    if len(kernels.available_backends()) > 1:
        mu2 = np.array([0.0, 1.0, 37.0, 400.0])
        times = np.linspace(1.0, 3.0, 9)
        outs = [kernels.propagate_steps(mu2, times, 3, 0.5, 3.0, 1.0, 3.25, 0.0, 1e-10, backend=b)
                for b in kernels.available_backends()]
        diff = float(np.max(np.abs(outs[0] - outs[1])))
        reports.append(EstimateReport("oracle_backends", diff, float("nan"), 0.0, 1e-12, mu2.size,
                                      diff <= 1e-12,
                                      {"backends": kernels.available_backends(),
                                       "verdict_rule": "backends agree to tolerance"}))
    return reports


# -------------------------------------------------------------- commands

class _Capture:
    """Collect log records in memory so run.log is written once, at the end."""

    def __init__(self, verbose: bool):
        self.buf = io.StringIO()
        self.handlers = [logging.StreamHandler(self.buf)]
        if verbose:
            self.handlers.append(logging.StreamHandler(sys.stderr))
        fmt = logging.Formatter("%(asctime)s %(levelname)s %(message)s")
        for h in self.handlers:
            h.setFormatter(fmt)

    def __enter__(self):
        for h in self.handlers:
            log.addHandler(h)
        log.setLevel(logging.INFO)
        return self

    def __exit__(self, *exc):
        for h in self.handlers:
            log.removeHandler(h)

    def text(self):
        return self.buf.getvalue()


def _log_reports(reports):
    for r in reports:
        log.info("%s: %s (constant %.6g, rate %.6g, target %.6g, tolerance %.6g)",
                 r.name, "PASS" if r.passed else "FAIL", r.measured_constant, r.fitted_rate,
                 r.target_rate, r.tolerance)


def run_config(cfg: ExperimentConfig, out_dir=None, verbose: bool = False) -> int:
    out_dir = out_dir or cfg.output_dir
    with _Capture(verbose) as cap:
        log.info("run %s seed=%d threads=%d backend=%s", cfg.experiment, cfg.seed,
                 kernels.thread_count(), kernels.BACKEND)
        for rej in cfg.rejected:
            log.warning("skipping inadmissible (p, q) = (%g, %g): %s", rej["p"], rej["q"], rej["reason"])
        start = time.perf_counter()
        reports = run_experiment(cfg)
        _log_reports(reports)
        log.info("elapsed %.2f s", time.perf_counter() - start)
        doc = report_document("run", cfg.to_dict(), reports)
        write_outputs(out_dir, doc, reports, cap.text())
    return 0 if doc["pass"] else 1


def sweep_rows(cfg: ExperimentConfig, reports) -> list:
    rows = []
    for ex, r in zip(cfg.exponents, reports):
        consts = r.metadata.get("constants", [])
        t0s = r.metadata.get("t0_list", cfg.t0_list)
        at = int(np.argmax(consts)) if len(consts) else 0
        rows.append({
            "p": ex.p, "q": ex.q, "s": ex.s, "eps": ex.eps,
            "t0": float(t0s[at]) if len(t0s) else cfg.params.t0,
            "T": cfg.T, "constant": r.measured_constant,
            "spread": r.metadata.get("spread", float("nan")), "pass": bool(r.passed),
        })
    return rows


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def sweep_config(cfg: ExperimentConfig, out_dir=None, verbose: bool = False) -> int:
    if cfg.experiment != "strichartz-homog":
        raise ConfigError("sweep needs kind = strichartz-homog", "kind")
    out_dir = out_dir or cfg.output_dir
    with _Capture(verbose) as cap:
        log.info("sweep over %d admissible and %d rejected (p, q) pairs, threads=%d",
                 len(cfg.exponents), len(cfg.rejected), kernels.thread_count())
        for rej in cfg.rejected:
            log.info("rejected (p, q) = (%g, %g): %s", rej["p"], rej["q"], rej["reason"])
        if not cfg.exponents:
            log.warning("no admissible exponent triple in the grid; the table is empty")
        reports = _map(lambda ex: _homog(cfg, ex), cfg.exponents)
        _log_reports(reports)
        rows = sweep_rows(cfg, reports)
        doc = report_document("sweep", cfg.to_dict(), reports,
                              {"sweep": rows, "rejected": cfg.rejected})
        write_outputs(out_dir, doc, reports, cap.text(), {"sweep.csv": sweep_csv(rows)})
    return 0 if doc["pass"] else 1


def oracle_suite(out_dir, seed: int = 0, verbose: bool = False) -> int:
    with _Capture(verbose) as cap:
        log.info("oracle suite seed=%d backend=%s", seed, kernels.BACKEND)
        reports = oracle_suite_reports(seed)
        _log_reports(reports)
        doc = report_document("oracle-suite", {"experiment": "oracle-suite", "seed": seed}, reports)
        write_outputs(out_dir, doc, reports, cap.text())
    return 0 if doc["pass"] else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dskg", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep"):
        sp = sub.add_parser(name)
        sp.add_argument("config")
        sp.add_argument("-o", "--output-dir", default=None)
        sp.add_argument("-v", "--verbose", action="store_true")
    sp = sub.add_parser("oracle-suite")
    sp.add_argument("config", nargs="?", default=None)
    sp.add_argument("-o", "--output-dir", default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "oracle-suite":
            if args.config is not None:
                cfg = load_config(args.config)
                return oracle_suite(args.output_dir or cfg.output_dir, cfg.seed, args.verbose)
            return oracle_suite(args.output_dir or "dskg-out/oracle-suite", args.seed, args.verbose)
        cfg = load_config(args.config)
        if args.command == "run":
            return run_config(cfg, args.output_dir, args.verbose)
        return sweep_config(cfg, args.output_dir, args.verbose)
    except ConfigError as exc:
        print(f"dskg: config error: {exc}", file=sys.stderr)
        return 2
    except DskgError as exc:
        print(f"dskg: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
