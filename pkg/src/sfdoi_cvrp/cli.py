"""Command-line experiment harness comparing DOI modes on CVRP instances.

Example::

    sfdoi-cvrp run --bundled EP --max-customers 30 --out results/

writes ``trace.csv`` (one row per CG iteration) and ``summary.csv`` (one row
per instance plus mean and median rows) into ``results/``.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import statistics
import sys
from fractions import Fraction
from pathlib import Path

from .driver import RunConfig, RunResult, solve
from .instance import ParseError, bundled_instances, bundled_path, read_instance
from .pricing import warmup
from .rmp import normalize_mode

log = logging.getLogger("sfdoi_cvrp")

EXIT_OK = 0
EXIT_RUN_ERROR = 1
EXIT_CERT_FAILURE = 2

TRACE_FIELDS = ["instance", "mode", "restart", "iter", "phase", "time_s", "rmp_obj",
                "lower_bound", "min_rc", "n_cols", "n_active_doi"]
MODE_ORDER = ("none", "S", "F", "SF")
REL_TOL = 1e-6


def summary_fields(modes) -> list[str]:
    out = ["instance", "values_agree"]
    for m in modes:
        out += [f"time_{m}", f"iters_{m}", f"restarts_{m}", f"removed_{m}", f"value_{m}",
                f"certified_{m}"]
    for m in modes:
        if m != "none":
            out += [f"speedup_{m}", f"speedup_{m}_raw"]
    return out


def values_agree(values, rel_tol: float = REL_TOL) -> bool:
    vals = [v for v in values if v is not None]
    if any(math.isnan(v) for v in vals):
        return False
    if not vals:
        return True
    ref = vals[0]
    return all(abs(v - ref) <= rel_tol * max(1.0, abs(ref)) for v in vals)


def speedup(time_standard: float, time_mode: float) -> float:
    return time_standard / time_mode if time_mode > 0 else math.inf


def summary_row(name: str, results: dict[str, RunResult]) -> dict:
    modes = [m for m in MODE_ORDER if m in results]
    agree = values_agree([results[m].value for m in modes])
    row: dict = {"instance": name, "values_agree": int(agree)}
    for m in modes:
        r = results[m]
        row.update({
            f"time_{m}": f"{r.elapsed:.6f}",
            f"iters_{m}": r.iterations,
            f"restarts_{m}": r.restarts,
            f"removed_{m}": r.removed_doi,
            f"value_{m}": f"{r.value:.9f}",
            f"certified_{m}": int(r.certified),
        })
    base = results.get("none")
    for m in modes:
        if m == "none":
            continue
        ok = agree and base is not None and base.certified and results[m].certified
        if ok:
            s = speedup(base.elapsed, results[m].elapsed)
            row[f"speedup_{m}"] = f"{s:.1f}"
            row[f"speedup_{m}_raw"] = f"{s:.6f}"
        else:
            row[f"speedup_{m}"] = row[f"speedup_{m}_raw"] = ""
    return row


def aggregate_rows(rows: list[dict], fields: list[str]) -> list[dict]:
    """Mean and median over every numeric column (blank cells are skipped)."""
    out = []
    for label, fn in (("mean", statistics.fmean), ("median", statistics.median)):
        agg = {"instance": label}
        for f in fields[1:]:
            vals = [float(r[f]) for r in rows if r.get(f, "") != ""]
            if not vals:
                agg[f] = ""
            elif f.startswith("speedup_") and not f.endswith("_raw"):
                agg[f] = f"{fn(vals):.1f}"
            else:
                agg[f] = f"{fn(vals):.6g}"
        out.append(agg)
    return out


def trace_rows(name: str, mode: str, result: RunResult):
    for t in result.trace.rows:
        yield {
            "instance": name, "mode": mode, "restart": t.restart, "iter": t.iteration,
            "phase": t.phase, "time_s": f"{t.time_s:.6f}", "rmp_obj": f"{t.rmp_obj:.9f}",
            "lower_bound": f"{t.lower_bound:.9f}", "min_rc": f"{t.min_rc:.9f}",
            "n_cols": t.n_cols, "n_active_doi": t.n_active_doi,
        }


def _parse_modes(specs) -> list[str]:
    modes = set()
    for spec in specs or ["none,s,f,sf"]:
        for part in spec.split(","):
            if part.strip():
                modes.add(normalize_mode(part.strip()))
    return [m for m in MODE_ORDER if m in modes]


def _collect_paths(args) -> list[Path]:
    paths = [Path(p) for p in args.instance or []]
    for d in args.dir or []:
        found = sorted(Path(d).glob("*.vrp"))
        if not found:
            log.warning("no .vrp files in %s", d)
        paths += found
    if args.bundled:
        paths += [bundled_path(n) for n in bundled_instances(args.bundled, args.max_customers)]
    return paths


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sfdoi-cvrp", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="compare DOI modes and write trace/summary CSV files")
    src = run.add_argument_group("instances")
    src.add_argument("--instance", action="append", metavar="FILE", help="a .vrp file (repeatable)")
    src.add_argument("--dir", action="append", metavar="DIR", help="every .vrp file in DIR")
    src.add_argument("--bundled", metavar="SETS",
                     help="bundled CVRPLIB sets to run, e.g. EP or ABEP")
    src.add_argument("--max-customers", type=int, default=50,
                     help="size cap for --bundled (default 50)")
    run.add_argument("--doi", action="append", metavar="MODES",
                     help="modes among none,s,f,sf; comma list or repeated (default all)")
    run.add_argument("--ng-size", type=int, default=5)
    run.add_argument("--sdoi-k", type=int, default=10)
    run.add_argument("--sigma-levels", type=int, default=10)
    run.add_argument("--delta", type=float, default=0.999)
    run.add_argument("--fixed-cost", type=Fraction, default=Fraction(0))
    run.add_argument("--vehicle-bound", type=int, default=None,
                     help="override the vehicle count used in lower bounds")
    run.add_argument("--epsilon", type=float, default=1e-6)
    run.add_argument("--max-cols", type=int, default=30)
    run.add_argument("--time-limit", type=float, default=None, help="seconds per run")
    run.add_argument("--sdoi-variant", choices=("tight", "easy"), default="tight")
    run.add_argument("--fdoi-variant", choices=("tight", "easy"), default="tight")
    run.add_argument("--out", type=Path, default=Path("."), help="output directory")
    return p


def run_experiment(args) -> int:
    try:
        modes = _parse_modes(args.doi)
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_RUN_ERROR
    paths = _collect_paths(args)
    if not paths:
        log.error("no instances given")
        return EXIT_RUN_ERROR
    args.out.mkdir(parents=True, exist_ok=True)
    warmup()
    fields = summary_fields(modes)
    run_error = cert_failure = False
    summary = []
    with open(args.out / "trace.csv", "w", newline="") as fh:
        trace = csv.DictWriter(fh, TRACE_FIELDS)
        trace.writeheader()
        for path in paths:
            try:
                inst = read_instance(path, args.fixed_cost, args.vehicle_bound)
            except (OSError, ParseError) as exc:
                log.error("%s: %s", path, exc)
                run_error = True
                continue
            results = {}
            for mode in modes:
                cfg = RunConfig(
                    doi_mode=mode, ng_size=args.ng_size, sdoi_k=args.sdoi_k,
                    sigma_levels=args.sigma_levels, delta=args.delta, epsilon=args.epsilon,
                    max_cols=args.max_cols, time_limit=args.time_limit,
                    sdoi_variant=args.sdoi_variant, fdoi_variant=args.fdoi_variant,
                )
                try:
                    res = solve(inst, cfg)
                except Exception as exc:  # keep the batch going
                    log.error("%s [%s]: %s", inst.name, mode, exc)
                    run_error = True
                    continue
                results[mode] = res
                trace.writerows(trace_rows(inst.name, mode, res))
                log.info("%-12s %-4s value=%.6f iters=%d restarts=%d time=%.2fs%s",
                         inst.name, mode, res.value, res.iterations, res.restarts,
                         res.elapsed, "" if res.certified else " (not certified)")
                if not res.certified:
                    cert_failure = True
            if not results:
                continue
            row = summary_row(inst.name, results)
            if not row["values_agree"]:
                log.error("%s: final LP values differ across modes", inst.name)
                cert_failure = True
            summary.append(row)
    with open(args.out / "summary.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fields)
        w.writeheader()
        w.writerows(summary)
        if summary:
            w.writerows(aggregate_rows(summary, fields))
    if cert_failure:
        return EXIT_CERT_FAILURE
    return EXIT_RUN_ERROR if run_error else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
    )
    if args.command == "run":
        return run_experiment(args)
    return EXIT_RUN_ERROR


if __name__ == "__main__":
    sys.exit(main())
