"""Run the four figure presets, export their trajectories and print summaries.

    python scripts/reproduce_figures.py [--out results/] [--only fig3 fig5] [--format json]

Exits 1 if any summary check fails.
"""

import argparse
import sys
import time
from pathlib import Path

from so3align.export import export
from so3align.report import summarize
from so3align.scenario import PRESETS, preset
from so3align.sim import run


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--only", nargs="+", choices=sorted(PRESETS), default=sorted(PRESETS))
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    ok = True
    for name in args.only:
        config = preset(name)
        t = time.perf_counter()
        traj = run(config)
        elapsed = time.perf_counter() - t
        files = export(traj, args.format, args.out / f"{name}.{args.format}")
        report = summarize(traj, config)
        print(report.format())
        print(f"  ({elapsed:.2f}s, wrote {', '.join(str(f) for f in files)})\n")
        ok &= report.passed
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
