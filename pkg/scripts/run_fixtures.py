"""Run the verification pipeline on every shipped config and print a summary table."""

import argparse
import logging
import time
from pathlib import Path

from crnrd.errors import PipelineError
from crnrd.harness import dumps, run_verification, write_atomic, write_series
from crnrd.solver import SimConfig

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("configs", nargs="*", type=Path, default=sorted((ROOT / "configs").glob("*.json")))
    ap.add_argument("-o", "--output", type=Path, default=None, help="write reports and series under this directory")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    logging.basicConfig(level=logging.WARNING)

    print(f"{'config':<12} {'class':<20} {'target':>8} {'fitted':>8} {'ratio':>6} {'Linf(end)':>10} {'drift':>9} {'time':>6}  result")
    for path in args.configs:
        cfg = SimConfig.load(path)
        start = time.perf_counter()
        try:
            report, sim = run_verification(cfg, threads=args.threads)
        except PipelineError as exc:
            print(f"{path.stem:<12} {'-':<20} {'':>8} {'':>8} {'':>6} {'':>10} {'':>9} {'':>6}  error at {exc.stage}: {type(exc.cause).__name__}")
            continue
        dt = time.perf_counter() - start
        print(
            f"{path.stem:<12} {report.classification:<20} {report.target:8.4f} {report.fitted_rate:8.4f} "
            f"{report.ratio:6.3f} {report.linf_final:10.2e} {report.drift:9.1e} {dt:5.1f}s  {'PASS' if report.passed else 'FAIL'}"
        )
        if args.output:
            out = args.output / path.stem
            write_series(out, sim)
            write_atomic(out / "report.json", dumps(report.to_dict()))


if __name__ == "__main__":
    main()
