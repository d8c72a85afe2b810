"""Reproducible command-line front door for all experiment families.

One JSON scenario file configures a run; individual fields can be
overridden on the command line with flags whose names mirror the JSON
paths with dots (for example ``--spec.n 8`` or ``--options.n_outer 500``).
Every run requires an explicit seed, executes deterministically for a
given (scenario, seed) pair independent of the worker count, and writes
its artifacts plus a manifest carrying the config echo and content
digests.

Exit codes: 0 success, 1 invariant failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import _kernels, __version__
from .fading import BlockSpec
from .frontends import (build_p, build_qe, build_qo, frontend_matrices,
                        oracle_integrate, simulate_oversampled,
                        simulate_symbol_rate, symbol_covariance_rank)
from .fading import sample_fading
from .identifiability import full_spark_check, jacobian_monte_carlo
from .info_metrics import (Frontend, MiEstimator, mi_direct_mixture,
                           mi_lower_bound_chain, prelog_fit)
from .recovery import RecoveryOptions, recover_joint_oversampled
from .util import db_to_linear, standard_complex_normal

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_CONFIG = 2

EXPERIMENTS = ("validate", "rank", "spark", "jacobian-mc", "identify",
               "mi-sweep", "prelog-report")
SWEEP_EXPERIMENTS = ("mi-sweep",)
CHUNK_SIZE = 1000

SWEEP_COLUMNS = ["rho_db", "mi_nats", "mi_bits", "stderr", "estimator",
                 "frontend", "n_outer", "n_inner", "seed"]
IDENTIFY_COLUMNS = ["block_id", "residual", "sym_err", "s_err", "n_starts",
                    "classes"]


class ConfigError(ValueError):
    pass


@dataclass
class Scenario:
    experiment: str
    seed: int
    spec: Optional[BlockSpec]
    rho_grid_db: list
    workers: int
    output: Path
    options: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


def _set_dotted(cfg: dict, dotted: str, value):
    keys = dotted.split(".")
    cur = cfg
    for k in keys[:-1]:
        cur = cur.setdefault(k, {})
        if not isinstance(cur, dict):
            raise ConfigError(f"override path '{dotted}' crosses a non-object field")
    cur[keys[-1]] = value


def _parse_overrides(tokens: list) -> dict:
    out = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        body = tok[2:]
        if "=" in body:
            key, raw = body.split("=", 1)
            i += 1
        else:
            key = body
            if i + 1 >= len(tokens):
                raise ConfigError(f"missing value for override --{key}")
            raw = tokens[i + 1]
            i += 2
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        out[key] = value
    return out


def load_scenario(experiment: str, config_path: Optional[str], overrides: dict,
                  workers_flag: Optional[int], output_flag: Optional[str]) -> Scenario:
    cfg: dict = {}
    if config_path is not None:
        try:
            cfg = json.loads(Path(config_path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"scenario file not found: {config_path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"scenario file is not valid JSON: {exc}")
        if not isinstance(cfg, dict):
            raise ConfigError("scenario file must contain a JSON object")
    for dotted, value in overrides.items():
        _set_dotted(cfg, dotted, value)

    declared = cfg.get("experiment")
    if declared is not None and declared != experiment:
        raise ConfigError(
            f"scenario field 'experiment' is {declared!r} but the "
            f"{experiment!r} subcommand was invoked")

    if "seed" not in cfg:
        raise ConfigError("scenario field 'seed' is missing (wall-clock seeding "
                          "is not supported)")
    seed = int(cfg["seed"])

    spec = None
    if experiment != "prelog-report":
        if "spec" not in cfg:
            raise ConfigError("scenario field 'spec' is missing")
        try:
            spec = BlockSpec.from_json(cfg["spec"])
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"invalid spec: {exc}")

    rho_grid = cfg.get("rho_grid_db", [])
    if not isinstance(rho_grid, list):
        raise ConfigError("scenario field 'rho_grid_db' must be a list")
    if experiment in SWEEP_EXPERIMENTS and not rho_grid:
        raise ConfigError("scenario field 'rho_grid_db' must be a nonempty list "
                          "for sweep experiments")

    if workers_flag is not None:
        workers = workers_flag
    elif "workers" in cfg:
        workers = int(cfg["workers"])
    else:
        workers = int(os.environ.get("PRELOG_LAB_WORKERS", "1"))
    if workers < 1:
        raise ConfigError("workers must be at least 1")

    output = Path(output_flag if output_flag is not None
                  else cfg.get("output", f"out/{experiment.replace('-', '_')}"))

    options = dict(cfg.get("options", {}))
    known = {"experiment", "seed", "spec", "rho_grid_db", "workers",
             "output", "options"}
    for key, value in cfg.items():
        if key not in known:
            options.setdefault(key, value)

    return Scenario(experiment=experiment, seed=seed, spec=spec,
                    rho_grid_db=[float(r) for r in rho_grid], workers=workers,
                    output=output, options=options, raw=cfg)


def _pool_map(fn, args_list: list, workers: int) -> list:
    if workers <= 1 or len(args_list) <= 1:
        return [fn(*args) for args in args_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *args) for args in args_list]
        return [f.result() for f in futures]


def _chunks(total: int, size: int = CHUNK_SIZE) -> list:
    counts = []
    left = total
    while left > 0:
        counts.append(min(size, left))
        left -= size
    return counts


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: list, rows: list):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_json(path: Path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(scenario: Scenario, artifacts: list, wall_time: float) -> Path:
    manifest = {
        "experiment": scenario.experiment,
        "seed": scenario.seed,
        "workers": scenario.workers,
        "version": __version__,
        "kernel_backend": _kernels.BACKEND,
        "config": {
            "experiment": scenario.experiment,
            "seed": scenario.seed,
            "spec": scenario.spec.to_json() if scenario.spec is not None else None,
            "rho_grid_db": scenario.rho_grid_db,
            "options": scenario.options,
        },
        "artifacts": [{"path": str(p), "sha256": _sha256(p)} for p in artifacts],
        "wall_time_s": wall_time,
    }
    path = Path(str(scenario.output) + ".manifest.json")
    _write_json(path, manifest)
    return path


# ---------------------------------------------------------------------------
# experiment implementations
# ---------------------------------------------------------------------------

def _run_validate(scenario: Scenario):
    spec = scenario.spec
    n_draws = int(scenario.options.get("n_draws", 20))
    tol = float(scenario.options.get("tol", 1e-8))
    rng = np.random.default_rng(scenario.seed)

    err_sym = err_over = err_stack = 0.0
    for _ in range(n_draws):
        coeffs = sample_fading(spec, rng)
        x = standard_complex_normal(rng, spec.n)
        obs_sym = simulate_symbol_rate(spec, coeffs, x, rho=1.0)
        obs_over = simulate_oversampled(spec, coeffs, x, rho=1.0)
        stacked = obs_over.stacked
        fm = frontend_matrices(spec, x)
        err_stack = max(err_stack, float(np.abs(fm.b @ coeffs.s_hat - stacked).max()))
        for k in range(spec.n):
            ref = oracle_integrate(spec, coeffs, x,
                                   (k * spec.t_s, (k + 1) * spec.t_s),
                                   gain=1.0 / math.sqrt(spec.t_s))
            err_sym = max(err_sym, abs(ref - obs_sym.y_sym[k]))
        interleaved = np.empty(2 * spec.n, dtype=complex)
        interleaved[0::2] = obs_over.y_odd
        interleaved[1::2] = obs_over.y_even
        for n in range(1, 2 * spec.n + 1):
            ref = oracle_integrate(spec, coeffs, x,
                                   ((n - 1) * spec.t_s / 2, n * spec.t_s / 2),
                                   gain=math.sqrt(2.0 / spec.t_s))
            err_over = max(err_over, abs(ref - interleaved[n - 1]))

    p = build_p(spec)
    m0 = spec.m  # column index of the zeroth harmonic
    checks = [
        {"name": "symbol_rate_matches_oracle", "max_err": err_sym, "tol": tol},
        {"name": "oversampled_matches_oracle", "max_err": err_over, "tol": tol},
        {"name": "stacked_equals_b_times_coeffs", "max_err": err_stack, "tol": 1e-12},
        {"name": "zero_harmonic_columns_are_ones",
         "max_err": float(max(np.abs(build_qo(spec)[:, m0] - 1).max(),
                              np.abs(build_qe(spec)[:, m0] - 1).max())),
         "tol": 1e-14},
        {"name": "p_entries_nonzero", "max_err": 0.0 if np.all(np.abs(p) > 0) else 1.0,
         "tol": 0.5},
    ]
    for c in checks:
        c["passed"] = bool(c["max_err"] <= c["tol"])
    artifact = {"spec": spec.to_json(), "n_draws": n_draws, "checks": checks}
    _write_json(Path(str(scenario.output) + ".json"), artifact)
    failed = [c["name"] for c in checks if not c["passed"]]
    for c in checks:
        print(f"  {c['name']}: {'ok' if c['passed'] else 'FAILED'} "
              f"(max err {c['max_err']:.3e}, tol {c['tol']:.1e})")
    return [Path(str(scenario.output) + ".json")], failed


def _run_rank(scenario: Scenario):
    report = symbol_covariance_rank(scenario.spec)
    path = Path(str(scenario.output) + ".json")
    _write_json(path, {"spec": scenario.spec.to_json(), **report.to_json()})
    print(f"  rank verdict: rank_is_q={report.rank_is_q} "
          f"(sigma_q/sigma_1={report.sigma_q_ratio:.3e}, "
          f"sigma_q+1/sigma_1={report.sigma_q1_ratio:.3e})")
    return [path], ([] if report.rank_is_q else ["gain_covariance_rank_equals_q"])


def _run_spark(scenario: Scenario):
    report = full_spark_check(scenario.spec,
                              rng=np.random.default_rng(scenario.seed))
    path = Path(str(scenario.output) + ".json")
    _write_json(path, {"spec": scenario.spec.to_json(), **report.to_json()})
    print(f"  full_spark={report.full_spark} over {report.n_subsets_checked} "
          f"subsets; min |det| = {report.min_abs_det:.6e} "
          f"(scaled {report.min_scaled_det:.6e})")
    return [path], ([] if report.full_spark else ["full_spark"])


def _jacobian_mc_chunk(spec_json: dict, trials: int, seed_seq) -> dict:
    spec = BlockSpec.from_json(spec_json)
    report = jacobian_monte_carlo(spec, trials, np.random.default_rng(seed_seq))
    return report.to_json()


def _run_jacobian_mc(scenario: Scenario):
    trials = int(scenario.options.get("trials", 10000))
    counts = _chunks(trials)
    seeds = np.random.SeedSequence(scenario.seed).spawn(len(counts))
    parts = _pool_map(_jacobian_mc_chunk,
                      [(scenario.spec.to_json(), c, s) for c, s in zip(counts, seeds)],
                      scenario.workers)
    total = sum(p["trials"] for p in parts)
    merged = {
        "trials": total,
        "singular_fraction": sum(p["singular_fraction"] * p["trials"] for p in parts) / total,
        "min_abs_det": min(p["min_abs_det"] for p in parts),
        "min_scaled_det": min(p["min_scaled_det"] for p in parts),
        "mean_log_abs_det": sum(p["mean_log_abs_det"] * p["trials"] for p in parts) / total,
    }
    path = Path(str(scenario.output) + ".json")
    _write_json(path, {"spec": scenario.spec.to_json(), **merged})
    print(f"  {total} trials: singular fraction {merged['singular_fraction']:.2e}, "
          f"min scaled |det| {merged['min_scaled_det']:.3e}")
    return [path], ([] if merged["singular_fraction"] == 0.0 else
                    ["jacobian_nonsingular_almost_surely"])


def _identify_chunk(spec_json: dict, rho_db: float, positions: list,
                    n_blocks: int, block_offset: int, n_starts: int,
                    noiseless: bool, seed_seq) -> list:
    spec = BlockSpec.from_json(spec_json)
    rng = np.random.default_rng(seed_seq)
    rho = float(db_to_linear(rho_db))
    opts = RecoveryOptions(n_starts=n_starts, noisy=not noiseless)
    rows = []
    for b in range(n_blocks):
        coeffs = sample_fading(spec, rng)
        x = standard_complex_normal(rng, spec.n)
        obs = simulate_oversampled(spec, coeffs, x, rho,
                                   rng=None if noiseless else rng)
        pilots = {int(i): complex(x[int(i)]) for i in positions}
        result = recover_joint_oversampled(spec, obs.stacked, pilots, rho,
                                           opts=opts, rng=rng)
        free = np.array([i for i in range(spec.n) if i not in pilots], dtype=int)
        sym_err = float(np.linalg.norm(result.x_est[free] - x[free])
                        / max(np.linalg.norm(x[free]), 1e-300))
        s_err = float(np.linalg.norm(result.s_hat_est - coeffs.s_hat)
                      / np.linalg.norm(coeffs.s_hat))
        threshold = opts.tol_abs if noiseless else None
        reps = []
        for s_est, x_free_est, rms in result.all_solutions:
            if threshold is not None and rms > threshold:
                continue
            if threshold is None and rms > result.residual * (1 + 1e-6):
                continue
            vec = np.concatenate([s_est, x_free_est])
            if not any(np.linalg.norm(vec - r) < opts.cluster_tol for r in reps):
                reps.append(vec)
        rows.append([block_offset + b, result.residual, sym_err, s_err,
                     result.n_starts_used, len(reps)])
    return rows


def _run_identify(scenario: Scenario):
    opts = scenario.options
    if "rho_db" not in opts and not scenario.rho_grid_db:
        raise ConfigError("scenario field 'rho_db' is missing for identify")
    rho_db = float(opts.get("rho_db", scenario.rho_grid_db[0] if scenario.rho_grid_db else 0.0))
    pilot_spec = opts.get("pilot_spec", {"positions": [0]})
    positions = [int(i) for i in pilot_spec.get("positions", [0])]
    if 0 not in positions:
        raise ConfigError("pilot_spec.positions must include position 0")
    n_blocks = int(opts.get("n_blocks", 50))
    n_starts = int(opts.get("n_starts", 8))
    noiseless = bool(opts.get("noiseless", False))

    counts = _chunks(n_blocks, size=max(1, min(CHUNK_SIZE, 50)))
    seeds = np.random.SeedSequence(scenario.seed).spawn(len(counts))
    offsets = np.cumsum([0] + counts[:-1]).tolist()
    parts = _pool_map(
        _identify_chunk,
        [(scenario.spec.to_json(), rho_db, positions, c, off, n_starts,
          noiseless, s) for c, off, s in zip(counts, offsets, seeds)],
        scenario.workers)
    rows = [row for part in parts for row in part]
    path = Path(str(scenario.output) + ".csv")
    _write_csv(path, IDENTIFY_COLUMNS, rows)
    med = float(np.median([r[1] for r in rows]))
    print(f"  {len(rows)} blocks at {rho_db:g} dB: median residual {med:.3e}, "
          f"median symbol err {float(np.median([r[2] for r in rows])):.3e}")
    return [path], []


def _mi_point(spec_json: dict, rho_db: float, estimator: str, frontend: str,
              n_outer: int, n_inner: int, n_samples: int, seed_seq) -> dict:
    spec = BlockSpec.from_json(spec_json)
    rng = np.random.default_rng(seed_seq)
    rho = float(db_to_linear(rho_db))
    if estimator == MiEstimator.DIRECT_MIXTURE.value:
        point = mi_direct_mixture(spec, rho, n_outer, n_inner,
                                  Frontend(frontend), rng)
        row_inner = n_inner
    else:
        point = mi_lower_bound_chain(spec, rho, n_samples, rng)
        row_inner = 0
    return {"rho_db": rho_db, "mi_nats": point.mi_nats_per_block,
            "stderr": point.stderr, "n_outer": point.n_samples,
            "n_inner": row_inner, "diagnostics": point.diagnostics}


def _run_mi_sweep(scenario: Scenario):
    opts = scenario.options
    estimator = str(opts.get("estimator", MiEstimator.DIRECT_MIXTURE.value))
    if estimator not in (e.value for e in MiEstimator):
        raise ConfigError(f"options.estimator must be one of "
                          f"{[e.value for e in MiEstimator]}, got {estimator!r}")
    frontend = str(opts.get("frontend", Frontend.OVERSAMPLED.value))
    if frontend not in (f.value for f in Frontend):
        raise ConfigError(f"options.frontend must be one of "
                          f"{[f.value for f in Frontend]}, got {frontend!r}")
    if estimator == MiEstimator.BOUND_CHAIN.value and frontend != Frontend.OVERSAMPLED.value:
        raise ConfigError("the bound-chain estimator applies to the oversampled "
                          "front-end only")
    n_outer = int(opts.get("n_outer", 500))
    n_inner = int(opts.get("n_inner", 10 ** 4))
    n_samples = int(opts.get("n_samples", 10 ** 5))

    seeds = np.random.SeedSequence(scenario.seed).spawn(len(scenario.rho_grid_db))
    results = _pool_map(
        _mi_point,
        [(scenario.spec.to_json(), rho_db, estimator, frontend, n_outer,
          n_inner, n_samples, s)
         for rho_db, s in zip(scenario.rho_grid_db, seeds)],
        scenario.workers)

    rows = []
    for r in results:
        rows.append([r["rho_db"], r["mi_nats"], r["mi_nats"] / math.log(2.0),
                     r["stderr"], estimator, frontend, r["n_outer"],
                     r["n_inner"], scenario.seed])
        print(f"  {r['rho_db']:6.1f} dB: {r['mi_nats']:9.3f} nats "
              f"+- {r['stderr']:.3f}")
    path = Path(str(scenario.output) + ".csv")
    _write_csv(path, SWEEP_COLUMNS, rows)
    return [path], []


def _read_sweep_csv(path: Path) -> list:
    if not path.exists():
        raise ConfigError(f"sweep input not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(SWEEP_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ConfigError(f"sweep input {path} lacks columns {sorted(missing)}")
        return list(reader)


def _sibling_spec(path: Path) -> Optional[dict]:
    manifest = Path(str(path.with_suffix("")) + ".manifest.json")
    if not manifest.exists():
        return None
    try:
        return json.loads(manifest.read_text())["config"]["spec"]
    except (json.JSONDecodeError, KeyError):
        return None


def _run_prelog_report(scenario: Scenario):
    from .info_metrics import MISweepPoint  # local import to avoid cycle noise

    inputs = scenario.options.get("inputs")
    if not inputs:
        raise ConfigError("options.inputs must list at least one sweep CSV")
    paths = [Path(p) for p in inputs]

    spec_json = scenario.spec.to_json() if scenario.spec is not None else None
    for path in paths:
        found = _sibling_spec(path)
        if found is None:
            continue
        if spec_json is None:
            spec_json = found
        elif found != spec_json:
            raise ConfigError(f"sweep input {path} was produced for a different "
                              "spec than the other inputs")
    if spec_json is None:
        raise ConfigError("no spec available: pass one in the scenario or keep "
                          "the sweep manifests next to the CSVs")
    spec = BlockSpec.from_json(spec_json)

    by_frontend: dict = {}
    for path in paths:
        for row in _read_sweep_csv(path):
            by_frontend.setdefault(row["frontend"], []).append(row)

    ref_sym = 1.0 - spec.q / spec.n
    ref_over = 1.0 - 1.0 / spec.n
    summary_rows = []
    long_rows = []
    fits = {}
    for frontend, rows in sorted(by_frontend.items()):
        if len(rows) < 3:
            raise ConfigError(f"frontend {frontend!r} has only {len(rows)} sweep "
                              "points; at least 3 are required for a slope fit")
        points = [MISweepPoint(rho_db=float(r["rho_db"]),
                               mi_nats_per_block=float(r["mi_nats"]),
                               estimator=MiEstimator(r["estimator"]),
                               stderr=float(r["stderr"]),
                               n_samples=int(r["n_outer"])) for r in rows]
        fit = prelog_fit(points, spec.n)
        fits[frontend] = fit
        summary_rows.append([frontend, len(points), fit.rho_range_db[0],
                             fit.rho_range_db[1], fit.slope_per_channel_use,
                             fit.slope_stderr_per_channel_use, fit.intercept,
                             fit.r_squared, ref_sym, ref_over])
        for p in points:
            fitted = fit.intercept + fit.slope_per_channel_use * spec.n \
                * p.rho_db * math.log(10.0) / 10.0
            long_rows.append([frontend, p.rho_db, p.mi_nats_per_block,
                              p.mi_nats_per_block / math.log(2.0), p.stderr,
                              fitted])

    summary_path = Path(str(scenario.output) + ".summary.csv")
    _write_csv(summary_path,
               ["frontend", "n_points", "rho_db_lo", "rho_db_hi",
                "slope_per_channel_use", "slope_stderr", "intercept_nats",
                "r_squared", "reference_symbol_rate", "reference_oversampled"],
               summary_rows)
    long_path = Path(str(scenario.output) + ".points.csv")
    _write_csv(long_path,
               ["frontend", "rho_db", "mi_nats", "mi_bits", "stderr",
                "fitted_mi_nats"], long_rows)

    print(f"  reference slopes: symbol-rate 1-Q/N = {ref_sym:.3f}, "
          f"oversampled 1-1/N = {ref_over:.3f}")
    for frontend, fit in sorted(fits.items()):
        print(f"  {frontend}: fitted slope/channel use = "
              f"{fit.slope_per_channel_use:.3f} "
              f"+- {fit.slope_stderr_per_channel_use:.3f} "
              f"(r^2 = {fit.r_squared:.4f})")
    if len(fits) == 1:
        print("  note: single front-end input; no gap computed")
    else:
        gap = (fits[Frontend.OVERSAMPLED.value].slope_per_channel_use
               - fits[Frontend.SYMBOL_RATE.value].slope_per_channel_use)
        print(f"  fitted slope gap (oversampled - symbol rate): {gap:.3f}")
    return [summary_path, long_path], []


_RUNNERS = {
    "validate": _run_validate,
    "rank": _run_rank,
    "spark": _run_spark,
    "jacobian-mc": _run_jacobian_mc,
    "identify": _run_identify,
    "mi-sweep": _run_mi_sweep,
    "prelog-report": _run_prelog_report,
}


def run(scenario: Scenario) -> int:
    """Execute one experiment: write artifacts and the run manifest."""
    start = time.time()
    print(f"{scenario.experiment}: seed={scenario.seed} "
          f"workers={scenario.workers} backend={_kernels.BACKEND}")
    artifacts, failures = _RUNNERS[scenario.experiment](scenario)
    manifest = _write_manifest(scenario, artifacts, time.time() - start)
    for p in artifacts + [manifest]:
        print(f"  wrote {p}")
    if failures:
        print(f"FAILED invariants: {', '.join(failures)}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="prelog-lab",
        description="Noncoherent block-fading laboratory: run one experiment "
                    "from a JSON scenario; unknown --dotted.path flags "
                    "override scenario fields.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="scenario JSON file")
        p.add_argument("--workers", type=int, default=None,
                       help="parallel workers (default: $PRELOG_LAB_WORKERS or 1)")
        p.add_argument("--output", default=None, help="artifact path prefix")

    args, unknown = parser.parse_known_args(argv)
    try:
        overrides = _parse_overrides(unknown)
        scenario = load_scenario(args.experiment, args.config, overrides,
                                 args.workers, args.output)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        return run(scenario)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # invariant or runtime failure, named for the user
        print(f"experiment failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
