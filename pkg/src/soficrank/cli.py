"""Command-line front end: job-file driven batch runs.

    soficrank <subcommand> --job <path> [--threads N] [--out <dir>]

Subcommands: vr | vnd | spectrum | moments | mdim | tile | demo-additivity
| verify.  Results are one JSON report (schema "1") plus CSV tables; a
fixed job file and seed produce byte-identical JSON.  Exit codes: 0 on
success, 2 on validation errors, 3 on budget or guard aborts.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .coverings import PseudometricSpec
from .jobs import JobError, JobSpec, estimator_p, parse_job
from .microstates import additivity_failure_demo, mdim_estimate
from .rank import covering_sandwich, fourier_oracle_vr, vnd_estimate, vr_estimate
from .soficrep import BudgetError, dense_budget_entries, export_triplets, represent
from .spectral import (
    counting_function,
    moment_check,
    perturbation_moment_check,
    singular_profile,
    write_counting_csv,
    write_moment_csv,
)
from .tiling import orbit_covering_estimate, quasi_tile, text_diagram, tiling_to_csv, verify_quasi_tiling

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BUDGET = 3


def _encode(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, PseudometricSpec):
        return {"kind": obj.kind, "p": "inf" if math.isinf(obj.p) else obj.p}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    if hasattr(obj, "__dict__"):
        return {k: v for k, v in vars(obj).items() if not k.startswith("_")}
    raise TypeError(f"cannot serialize {type(obj)!r}")


def write_report(out_dir: Path, prefix: str, payload: dict) -> Path:
    path = out_dir / f"{prefix}_result.json"
    text = json.dumps(payload, sort_keys=True, indent=2, default=_encode)
    path.write_text(text + "\n")
    return path


def _report_skeleton(job: JobSpec, subcommand: str, threads: int) -> dict:
    return {
        "schema": "1",
        "version": __version__,
        "subcommand": subcommand,
        "seed": job.seed,
        "threads": threads,
        "group": {"kind": job.group.kind, "generators": list(job.group.generators)},
        "levels": job.level_description,
    }


def _rank_result(est) -> dict:
    return {
        "target": est.target,
        "method": est.method,
        "schedule": {"etas": est.etas},
        "table": est.table,
        "estimate": est.estimate,
        "envelope": list(est.envelope),
        "monotone_in_levels": est.monotone_in_levels,
        "extras": est.extras,
    }


def cmd_vr(job: JobSpec, out: Path, threads: int) -> dict:
    if job.presentation is None:
        raise JobError("module: a presentation is required for vr")
    est = vr_estimate(
        job.levels,
        job.presentation,
        relator_cutoff=job.estimator.get("relator_cutoff"),
        schedule=job.eta_schedule(),
        integer_rank=bool(job.estimator.get("integer_rank")),
    )
    result = _rank_result(est)
    if job.group.kind == "free_abelian":
        stacked = job.presentation.stacked_matrix(job.estimator.get("relator_cutoff"))
        oracle = fourier_oracle_vr(stacked, int(job.estimator["grid"])) if stacked.rows else float(job.presentation.n)
        result["fourier_oracle"] = oracle
    result["sandwich"] = [
        vars(covering_sandwich(row["count"], job.estimator["eps"], row["eta"], row["level_index"], row["degree"]))
        for row in est.table
    ]
    return result


def cmd_vnd(job: JobSpec, out: Path, threads: int) -> dict:
    if job.element_matrix is None:
        raise JobError("element: an element or matrix is required for vnd")
    est = vnd_estimate(job.levels, job.element_matrix, job.eta_schedule())
    result = _rank_result(est)
    if job.group.kind == "free_abelian":
        result["fourier_oracle"] = fourier_oracle_vr(
            job.element_matrix, int(job.estimator["grid"])
        )
    return result


def cmd_spectrum(job: JobSpec, out: Path, threads: int) -> dict:
    if job.element_matrix is None:
        raise JobError("element: an element or matrix is required for spectrum")
    etas = job.eta_schedule().etas
    countings = []
    result_rows = []
    for level in job.levels:
        mat = represent(level, job.element_matrix)
        prof = singular_profile(mat)
        cf = counting_function(prof, etas)
        countings.append(cf)
        result_rows.append(
            {
                "level_index": level.index,
                "degree": level.degree,
                "max_singular_value": prof.max_value(),
                "counting": [
                    {"eta": e, "value": v} for e, v in zip(cf.etas, cf.values)
                ],
            }
        )
        if job.estimator.get("export_matrix"):
            export_triplets(mat, out / f"{job.prefix}_sigma_level{level.index}.txt")
    write_counting_csv(out / f"{job.prefix}_counting.csv", countings)
    return {"levels": result_rows, "csv": f"{job.prefix}_counting.csv"}


def cmd_moments(job: JobSpec, out: Path, threads: int) -> dict:
    if job.element_matrix is None:
        raise JobError("element: an element or matrix is required for moments")
    kmax = int(job.estimator["kmax"])
    noise = float(job.estimator["noise_scale"])
    reports = []
    for level in job.levels:
        if noise > 0:
            reports.append(
                perturbation_moment_check(level, job.element_matrix, noise, kmax, job.seed)
            )
        else:
            reports.append(moment_check(level, job.element_matrix, kmax))
    write_moment_csv(out / f"{job.prefix}_moments.csv", reports)
    return {
        "noise_scale": noise,
        "levels": [
            {"level_index": r.level_index, "degree": r.degree, "rows": r.rows, "method": r.method}
            for r in reports
        ],
        "csv": f"{job.prefix}_moments.csv",
    }


def cmd_mdim(job: JobSpec, out: Path, threads: int) -> dict:
    if job.presentation is None:
        raise JobError("module: a presentation is required for mdim")
    metric = PseudometricSpec("l2", estimator_p(job.estimator))
    report = mdim_estimate(
        job.levels,
        job.presentation,
        metric=metric,
        delta=float(job.estimator["delta"]),
        eps_list=[float(e) for e in job.estimator["eps"]],
        m=job.estimator.get("m"),
        bruteforce_eps=[float(e) for e in job.estimator.get("bruteforce_eps", [0.125])],
    )
    _write_microstate_csv(out / f"{job.prefix}_microstates.csv", job, report)
    return {
        "n": report.n,
        "metric": report.metric,
        "delta": report.delta,
        "table": report.table,
        "bruteforce": report.bruteforce,
        "interval": report.interval,
        "csv": f"{job.prefix}_microstates.csv",
    }


def _write_microstate_csv(path, job: JobSpec, report) -> None:
    import csv as _csv

    with open(path, "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["level_index", "degree", "eps", "eta", "count_fraction", "lower", "upper"])
        for row in report.table:
            w.writerow(
                [
                    row["level_index"],
                    row["degree"],
                    repr(row["eps"]),
                    repr(row["eta"]),
                    repr(row["count_fraction"]),
                    repr(row["lower"]),
                    repr(row["upper"]),
                ]
            )


def cmd_tile(job: JobSpec, out: Path, threads: int) -> dict:
    if not job.tiling:
        raise JobError("tiling: section required for tile")
    t = quasi_tile(
        ambient_sides=job.tiling.get("ambient", []),
        shapes=job.tiling.get("shapes", []),
        eta=float(job.tiling.get("eta", 0.1)),
    )
    checks = verify_quasi_tiling(t)
    tiling_to_csv(t, out / f"{job.prefix}_tiling.csv")
    result = {
        "ambient": list(t.ambient_sides),
        "eta": t.eta,
        "tiles": len(t.tiles),
        "covered": t.covered,
        "coverage": t.coverage,
        "under_coverage": t.under_coverage,
        "checks": checks,
        "invariance": t.invariance,
        "csv": f"{job.prefix}_tiling.csv",
    }
    if job.tiling.get("diagram"):
        diagram = text_diagram(t)
        (out / f"{job.prefix}_tiling.txt").write_text(diagram + "\n")
        result["diagram_file"] = f"{job.prefix}_tiling.txt"
    if job.orbit:
        result["orbit"] = _orbit_table(job)
    return result


def _orbit_table(job: JobSpec) -> list[dict]:
    orbit = job.orbit
    window = orbit.get("window", [8])
    mesh = int(orbit.get("sample_mesh", 8))
    size = int(orbit.get("sample_size", 500))
    rng = np.random.default_rng(job.seed)
    window_size = int(np.prod(window))
    n = int(orbit.get("n", 1))
    sample = rng.integers(0, mesh, size=(size, window_size, n)) / mesh
    return orbit_covering_estimate(
        sample,
        PseudometricSpec("l2", 2.0),
        window,
        orbit.get("boxes", [window]),
        p=estimator_p(job.estimator),
        eps_list=[float(e) for e in orbit.get("eps", [0.25, 0.125])],
    )


def cmd_demo_additivity(job: JobSpec, out: Path, threads: int) -> dict:
    return additivity_failure_demo(job.levels)


def cmd_verify(job: JobSpec, out: Path, threads: int) -> dict:
    """Dry-run validation and a cost prediction; no computation."""
    n = job.presentation.n if job.presentation else (
        job.element_matrix.cols if job.element_matrix else 1
    )
    max_degree = max(lv.degree for lv in job.levels)
    dense_side = n * max_degree
    budget_side = dense_budget_entries()
    warnings = []
    if dense_side > budget_side:
        warnings.append(
            f"dense side {dense_side} exceeds the budget guard {budget_side}; "
            "the dense-eigen path will abort (use the iterative path or raise "
            "SOFICRANK_BUDGET_MB)"
        )
    return {
        "ok": True,
        "predicted_dense_side": dense_side,
        "budget_side": budget_side,
        "levels": [lv.degree for lv in job.levels],
        "warnings": warnings,
    }


_COMMANDS = {
    "vr": cmd_vr,
    "vnd": cmd_vnd,
    "spectrum": cmd_spectrum,
    "moments": cmd_moments,
    "mdim": cmd_mdim,
    "tile": cmd_tile,
    "demo-additivity": cmd_demo_additivity,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="soficrank",
        description="Finite-level rank and covering-growth estimators, driven by job files.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--job", required=True, help="path to the YAML/JSON job file")
        p.add_argument("--out", default=".", help="output directory (default: cwd)")
        p.add_argument("--threads", type=int, default=1, help="cap on worker parallelism")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        job = parse_job(args.job)
    except (JobError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        result = _COMMANDS[args.subcommand](job, out, args.threads)
    except JobError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (BudgetError, MemoryError) as exc:
        print(f"budget abort: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    payload = _report_skeleton(job, args.subcommand, args.threads)
    payload["result"] = result
    prefix = job.prefix if args.subcommand != "verify" else f"{job.prefix}_verify"
    path = write_report(out, prefix, payload)
    print(path)
    if args.subcommand == "verify":
        for warning in result["warnings"]:
            print(f"warning: {warning}")
    return EXIT_OK


def main() -> None:
    sys.exit(run())
