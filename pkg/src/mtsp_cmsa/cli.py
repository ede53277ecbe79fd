"""
Command-line front end: generate, solve and bench.
"""
import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import pandas as pd

from mtsp_cmsa.config.app_config import get_app_config
from mtsp_cmsa.config.runtime_settings import configure_logging, get_runtime_settings
from mtsp_cmsa.config.solver_params import SolverParams
from mtsp_cmsa.exceptions import InvalidSalesmenCountError, InvariantViolationError, MtspError
from mtsp_cmsa.jobs.job_queue import BenchCell, BenchJobQueue
from mtsp_cmsa.schemas.run_schemas import BenchSummaryRow, RunRecord
from mtsp_cmsa.services.engine_service import EngineService, evaluate
from mtsp_cmsa.services.instance_service import InstanceService
from mtsp_cmsa.storage.local_storage import RUNS_DIR, get_storage_service

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVALID_M = 3
EXIT_INVARIANT = 4

# Error code -> process exit code; anything unlisted exits with EXIT_USAGE
EXIT_CODES = {
    "INVALID_M": EXIT_INVALID_M,
    "INFEASIBLE_SOLUTION": EXIT_INVARIANT,
    "SUBSOLVER_CONTRACT": EXIT_INVARIANT,
    "INVARIANT_VIOLATION": EXIT_INVARIANT,
}

BEST_TOLERANCE = 1e-9

SUMMARY_COLUMNS = ["instance", "m", "runs", "mean", "best", "num_best", "mean_time_to_best_s"]


def m_from_percent(n_cities: int, percent: float) -> int:
    """
    Salesmen count as a percentage of the cities, rounded half up.

    Args:
        n_cities: Number of cities
        percent: Percentage, e.g. 5 for 5%

    Returns:
        Rounded m (may be 0, which the engine rejects)
    """
    exact = n_cities * percent / 100.0
    m = int(math.floor(exact + 0.5))
    logger.warning(f"--m-percent {percent} on {n_cities} cities gives {exact:.2f}, rounded to m={m}")
    return m


def cmd_generate(args: argparse.Namespace) -> int:
    """Write `count` random instances with seeds seed, seed+1, ..."""
    storage = get_storage_service()
    service = InstanceService()
    out_dir = storage.ensure_dir(args.out)
    width = max(2, len(str(args.count - 1)))
    for index in range(args.count):
        file_seed = args.seed + index
        inst = service.generate_random(args.n, file_seed, name=f"rand_n{args.n}_{index:0{width}d}")
        path = storage.save_document(service.to_document(inst), out_dir / f"{inst.name}.json")
        digest = storage.compute_sha256(path)
        logger.info(f"Wrote {path} (seed {file_seed}, sha256 {digest})")
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    """Run the solver on one instance and write its RunRecord."""
    app_config = get_app_config()
    storage = get_storage_service()
    inst = InstanceService(app_config.round_tsplib_distances).load(args.instance)

    m = args.m if args.m is not None else m_from_percent(inst.n_cities, args.m_percent)
    params = None
    if args.params_file:
        params = SolverParams.from_json_file(args.params_file, inst.n_cities, m)

    engine = EngineService(app_config)
    best, log = engine.run(
        inst,
        m,
        params=params,
        time_limit_s=args.time_limit,
        seed=args.seed,
        max_iterations=args.max_iterations,
        trace=args.trace,
        workers=args.workers,
    )
    z, _ = evaluate(best, inst.D)
    if abs(z - log.best_value) > BEST_TOLERANCE:
        raise InvariantViolationError(f"reported z={log.best_value} but routes give {z}")

    record = RunRecord.from_run_log(log, instance=str(args.instance), trace=args.trace)
    if args.out:
        path = storage.save_document(record, args.out)
        logger.info(f"Wrote run record to {path}")
    else:
        sys.stdout.write(record.model_dump_json(indent=2) + "\n")
    return EXIT_OK


def summarize(records: Sequence[RunRecord]) -> pd.DataFrame:
    """
    Per (instance, m) statistics over bench runs.

    num_best counts runs within 1e-9 of the cell's best value.

    Args:
        records: RunRecords of the bench

    Returns:
        DataFrame with SUMMARY_COLUMNS, cells in first-seen order
    """
    if not records:
        return pd.DataFrame(columns=SUMMARY_COLUMNS)
    frame = pd.DataFrame(
        [
            {
                "instance": r.instance,
                "m": r.m,
                "best_value": r.best_value,
                "time_to_best_s": r.time_to_best_s,
            }
            for r in records
        ]
    )
    grouped = frame.groupby(["instance", "m"], sort=False)
    summary = grouped.agg(
        runs=("best_value", "size"),
        mean=("best_value", "mean"),
        best=("best_value", "min"),
        mean_time_to_best_s=("time_to_best_s", "mean"),
    ).reset_index()
    cell_best = grouped["best_value"].transform("min")
    frame["is_best"] = frame["best_value"] <= cell_best + BEST_TOLERANCE
    num_best = frame.groupby(["instance", "m"], sort=False)["is_best"].sum().reset_index(name="num_best")
    summary = summary.merge(num_best, on=["instance", "m"], how="left", sort=False)
    summary["num_best"] = summary["num_best"].astype(int)
    return summary[SUMMARY_COLUMNS]


def cmd_bench(args: argparse.Namespace) -> int:
    """Run every (instance, m, run) cell and write records plus a summary."""
    app_config = get_app_config()
    storage = get_storage_service()
    files = storage.list_files(args.instances)
    if not files:
        logger.error(f"No instance files match {args.instances}")
        return EXIT_USAGE

    service = InstanceService(app_config.round_tsplib_distances)
    for path in files:
        n_cities = service.load(path).n_cities
        for m in args.m_list:
            if not 1 <= m <= n_cities:
                raise InvalidSalesmenCountError(m, n_cities)

    queue = BenchJobQueue(app_config)
    for path in files:
        for m in args.m_list:
            for run in range(args.runs):
                queue.enqueue(
                    BenchCell(
                        instance_path=str(path),
                        m=m,
                        run_index=run,
                        seed=args.seed + run,
                        time_limit_s=args.time_limit,
                        max_iterations=args.max_iterations,
                    )
                )
    cells = queue.cells()
    records = queue.run_all(args.workers)

    out_dir = storage.ensure_dir(args.out)
    for cell, record in zip(cells, records):
        stem = Path(cell.instance_path).stem
        storage.save_document(record, out_dir / RUNS_DIR / f"{stem}_m{cell.m}_r{cell.run_index}.json")

    summary = summarize(records)
    csv_path, _ = storage.save_bench_summary(summary, out_dir)
    written = storage.load_bench_summary(out_dir)
    rows = [
        BenchSummaryRow.model_validate(row)
        for row in json.loads(written.to_json(orient="records"))
    ]
    if len(rows) != len(summary):
        raise InvariantViolationError(f"{csv_path} holds {len(rows)} rows, expected {len(summary)}")
    logger.info(f"Wrote bench summary for {len(summary)} cell(s) to {csv_path}")
    return EXIT_OK


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return number


def _m_list(value: str) -> List[int]:
    try:
        return [int(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {value}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtsp-cmsa", description="Min-max multiple TSP solver."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="Generate random instances in the unit disk")
    gen.add_argument("--n", type=_positive_int, required=True, help="Cities per instance")
    gen.add_argument("--count", type=_positive_int, default=1, help="Number of instances")
    gen.add_argument("--seed", type=int, default=0, help="Seed of the first instance")
    gen.add_argument("--out", required=True, help="Output directory")
    gen.set_defaults(handler=cmd_generate)

    solve = sub.add_parser("solve", help="Solve one instance")
    solve.add_argument("--instance", required=True, help="TSPLIB or JSON instance file")
    group = solve.add_mutually_exclusive_group(required=True)
    group.add_argument("--m", type=int, help="Number of salesmen")
    group.add_argument("--m-percent", type=float, help="Salesmen as a percentage of the cities")
    solve.add_argument("--time-limit", type=float, default=None, help="Seconds, default n")
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--params-file", default=None, help="JSON solver parameters")
    solve.add_argument("--max-iterations", type=_positive_int, default=None)
    solve.add_argument("--workers", type=_positive_int, default=None, help="Construction processes")
    solve.add_argument("--trace", action="store_true", help="Include per-iteration records")
    solve.add_argument("--out", default=None, help="RunRecord file, stdout if omitted")
    solve.set_defaults(handler=cmd_solve)

    bench = sub.add_parser("bench", help="Benchmark instances over several m values")
    bench.add_argument("--instances", required=True, help="Glob of instance files")
    bench.add_argument("--m-list", type=_m_list, required=True, help="e.g. 2,3,5,7")
    bench.add_argument("--runs", type=_positive_int, default=1)
    bench.add_argument("--time-limit", type=float, default=None, help="Seconds, default n")
    bench.add_argument("--seed", type=int, default=0, help="Seed of run 0")
    bench.add_argument("--max-iterations", type=_positive_int, default=None)
    bench.add_argument("--workers", type=_positive_int, default=None, help="Bench processes")
    bench.add_argument("--out", required=True, help="Output directory")
    bench.set_defaults(handler=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments, run a command and map errors to exit codes.

    Returns:
        0 on success, 2 for input/usage errors, 3 for an invalid m,
        4 for internal invariant violations
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(get_runtime_settings())
    try:
        return args.handler(args)
    except MtspError as e:
        logger.error(f"{e.error_code}: {e.message}")
        return EXIT_CODES.get(e.error_code, EXIT_USAGE)


def run() -> None:
    sys.exit(main())
