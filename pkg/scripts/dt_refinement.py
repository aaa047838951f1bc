"""First-order consistency check: the fitted rate error should halve with dt."""

import argparse
import dataclasses
from pathlib import Path

from crnrd.harness import run_verification
from crnrd.solver import SimConfig

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config", type=Path, nargs="?", default=ROOT / "configs" / "ab.json")
    ap.add_argument("--levels", type=int, default=4)
    ap.add_argument("--dt0", type=float, default=4e-3)
    args = ap.parse_args()

    base = SimConfig.load(args.config)
    sample = base.dt * base.stride
    prev = None
    print(f"{'dt':>10} {'fitted':>10} {'target':>8} {'error':>10} {'err ratio':>9}")
    for k in range(args.levels):
        dt = args.dt0 / 2**k
        cfg = dataclasses.replace(base, dt=dt, stride=max(1, round(sample / dt)))
        report, _ = run_verification(cfg)
        err = report.fitted_rate - report.target
        ratio = "" if prev is None else f"{prev / err:9.3f}"
        print(f"{dt:10.2e} {report.fitted_rate:10.6f} {report.target:8.4f} {err:10.3e} {ratio}")
        prev = err


if __name__ == "__main__":
    main()
