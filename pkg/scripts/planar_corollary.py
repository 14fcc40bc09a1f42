"""Planar heading alignment: exponential decay of the heading difference and
the relative-drift bound, over a grid of gains and drift rates.

    python scripts/planar_corollary.py
"""

import math

import numpy as np

from so3align.planar import PlanarConfig, check_planar, heading_decay_error, run_planar


def main() -> None:
    print(f"{'k_w':>6} {'omega_d':>8} {'rel.err':>10} {'drift':>8} {'bound':>8}")
    for k in (0.5, 1.0, 2.0):
        for w in (0.0, math.pi / 8, math.pi / 4):
            cfg = PlanarConfig(
                headings=(2.5, -2.9), positions=np.array([[0.0, 0.0], [1.0, 0.0]]),
                k_w=k, omega_d=w, dt=1e-3, t_end=15.0 / k,
            )
            tr = run_planar(cfg)
            (rep,) = check_planar(tr, cfg)
            print(f"{k:6.2f} {w:8.4f} {heading_decay_error(tr, cfg):10.2e} "
                  f"{rep.observed_max:8.4f} {rep.theoretical:8.4f}")


if __name__ == "__main__":
    main()
