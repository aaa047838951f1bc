"""Scan the perturbation size and report where the certified rate stops being met.

Exponential decay is only guaranteed for small enough perturbations; this
script measures, per config, the largest epsilon on a geometric grid for
which the fitted rate still reaches 95% of the certificate without clamps.
"""

import argparse
import dataclasses
from pathlib import Path

import numpy as np

from crnrd.errors import CRNError
from crnrd.harness import run_verification
from crnrd.solver import SimConfig

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("configs", nargs="*", type=Path, default=[ROOT / "configs" / f"{n}.json" for n in ("ab", "quintic", "tri")])
    ap.add_argument("--eps", type=float, nargs=2, default=(1e-3, 3.0), metavar=("MIN", "MAX"))
    ap.add_argument("--points", type=int, default=12)
    ap.add_argument("--cells", type=int, default=64)
    args = ap.parse_args()

    grid = np.geomspace(args.eps[0], args.eps[1], args.points)
    for path in args.configs:
        base = SimConfig.load(path)
        base = dataclasses.replace(base, cells=(args.cells,) * len(base.lengths))
        print(f"# {path.stem}")
        print(f"{'epsilon':>10} {'fitted':>9} {'target':>8} {'ratio':>7} {'clamps':>7}")
        last_ok = None
        for eps in grid:
            cfg = dataclasses.replace(base, epsilon=float(eps))
            try:
                report, _ = run_verification(cfg)
            except CRNError as exc:
                print(f"{eps:10.3e}  {type(exc).__name__}: {exc}")
                break
            print(f"{eps:10.3e} {report.fitted_rate:9.4f} {report.target:8.4f} {report.ratio:7.3f} {report.clamps:7d}")
            if report.passed:
                last_ok = eps
        print(f"largest passing epsilon on this grid: {last_ok if last_ok is None else f'{last_ok:.3e}'}\n")


if __name__ == "__main__":
    main()
