"""Command-line front end: ``tbhiv {simulate,analyze,optimize,compare}``.

Exit status: 0 on success, 2 for invalid scenarios or flags, 3 when an
optimal-control sweep did not converge (outputs are still written), 1 for
any other failure.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .scenario import MODES, ScenarioError, build_scenario, load_scenario, parse_config, run

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_NOT_CONVERGED = 0, 1, 2, 3

_FLAGS = ("T", "dt", "beta1", "beta2", "W1", "W2", "cost")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tbhiv", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--scenario", action="append", default=[],
                       help="scenario file (repeat for a batch)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--T", type=float)
        p.add_argument("--dt", type=float)
        p.add_argument("--beta1", type=float)
        p.add_argument("--beta2", type=float)
        p.add_argument("--W1", type=float)
        p.add_argument("--W2", type=float)
        p.add_argument("--cost", choices=("J", "J1", "J2", "J3"))
        p.add_argument("--jobs", type=int, default=1,
                       help="run a batch of scenarios in parallel")
    return ap


def _run_one(args: tuple) -> tuple[int, str]:
    scenario, out = args
    try:
        report = run(scenario, out)
    except Exception as exc:  # reported, not raised, so batches keep going
        return EXIT_FAIL, f"error: {exc}"
    code = EXIT_OK if report.converged else EXIT_NOT_CONVERGED
    return code, report.text()


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    overrides = {k: getattr(args, k) for k in _FLAGS if getattr(args, k) is not None}
    overrides["mode"] = args.mode
    out = Path(args.out)
    jobs = []
    try:
        if not args.scenario:
            entries = parse_config("")
            entries.update({k: (str(v), "<command line>") for k, v in overrides.items()})
            jobs.append((build_scenario(entries), out))
        for path in args.scenario:
            sc = load_scenario(path, overrides)
            jobs.append((sc, out if len(args.scenario) == 1 else out / Path(path).stem))
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]

    for code, text in results:
        print(text, end="" if text.endswith("\n") else "\n",
              file=sys.stderr if code == EXIT_FAIL else sys.stdout)
    codes = {code for code, _ in results}
    worst = EXIT_FAIL if EXIT_FAIL in codes else max(codes)
    return worst


if __name__ == "__main__":
    sys.exit(main())
