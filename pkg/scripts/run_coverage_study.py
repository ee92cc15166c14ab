#!/usr/bin/env python3
"""Sweep catalog scenarios and collect coverage into one CSV.

Typical cut-down run on a laptop:

    python3 scripts/run_coverage_study.py --filter C3-01,C5-07 --n-iter 100 \
        --methods pointwise,bonferroni,marginal,rank-scs --out sweep.csv

The full grid at publication settings (--full-scale) is days of compute;
filter aggressively before reaching for it.
"""

import argparse
import sys
import time

from mnpred.catalog import scenario_catalog
from mnpred.io import SIMULATION_COLUMNS, rows_to_csv, simulation_rows, write_text
from mnpred.simulation import run_simulation


def parse_args(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--filter", default="", help="comma list of scenario_id prefixes")
    ap.add_argument("--n-iter", type=int, default=200)
    ap.add_argument("--B", type=int, default=2000)
    ap.add_argument("--S", type=int, default=4000)
    ap.add_argument("--methods", default="pointwise,bonferroni,marginal,masr,rank-scs")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--full-scale", action="store_true",
                    help="publication settings: n_iter=1000, B=10000, S=10000")
    ap.add_argument("--out", required=True)
    return ap.parse_args(argv)


def main(argv=None):
    args = parse_args(argv)
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    cells = scenario_catalog(
        n_iter=args.n_iter, B=args.B, S=args.S,
        methods=methods, seed=args.seed, full_scale=args.full_scale,
    )
    prefixes = tuple(p.strip() for p in args.filter.split(",") if p.strip())
    if prefixes:
        cells = [s for s in cells if any(s.scenario_id.startswith(p) for p in prefixes)]
    if not cells:
        sys.stderr.write(f"no scenarios match {prefixes}\n")
        return 1
    sys.stderr.write(f"{len(cells)} scenarios, {args.n_iter} iterations each\n")

    reports = []
    t0 = time.perf_counter()
    for i, s in enumerate(cells, start=1):
        rep = run_simulation(s)
        reports.append(rep)
        worst = min(out.coverage for out in rep.outcomes.values())
        sys.stderr.write(
            f"[{i}/{len(cells)}] {s.scenario_id}: worst coverage {worst:.3f} "
            f"({rep.runtime_seconds:.1f}s, {time.perf_counter() - t0:.0f}s total)\n"
        )
    write_text(rows_to_csv(simulation_rows(reports), SIMULATION_COLUMNS), args.out)
    sys.stderr.write(f"wrote {args.out}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
