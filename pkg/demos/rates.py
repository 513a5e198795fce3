#!/usr/bin/env python3
"""Log-log slopes of the lower bound in T, and conditional gradient against it.

Usage: python3 demos/rates.py
"""
import math

import numpy as np

from lowbound import AdversaryConfig, ExperimentConfig, NormSpec, lower_bound, lower_bound_small_p, run_experiment
from lowbound.harness import loglog_slope


def main():
    Ts = np.arange(4, 65)
    print("lower bound exponent at n = 128")
    for p in (2.0, 4.0, math.inf):
        for k in (1.5, 2.0):
            b = [lower_bound(AdversaryConfig(NormSpec(p, 128), int(T), k)) for T in Ts]
            target = -(k + (0 if math.isinf(p) else k / p) - 1)
            print(f"  p={p:<4} kappa={k}: slope {loglog_slope(Ts, b):+.4f}  (target {target:+.4f})")
    print("p = 1 through random sections, n = 20 T")
    for k in (1.5, 2.0):
        b = np.array([lower_bound_small_p(1280, int(T), 1.0, k, 1.0) for T in Ts])
        adj = b * np.log(Ts + 1.0) ** (k - 1)
        print(f"  kappa={k}: raw slope {loglog_slope(Ts, b):+.3f}, with the log factor removed "
              f"{loglog_slope(Ts, adj):+.3f}  (target {-(1.5 * k - 1):+.3f})")

    cfg = ExperimentConfig(n=[128], T=[4, 8, 16, 32], p=[math.inf], kappa=[2.0], methods=["cg"])
    rep = run_experiment(cfg)
    print("conditional gradient on l_inf, kappa = 2, n = 128")
    print(f"  {'T':>4}{'achieved':>12}{'bound':>12}{'ratio':>8}{'CG upper':>12}")
    for r in rep.rows:
        print(f"  {r.T:>4}{r.achieved_gap:>12.4e}{r.theoretical_lower_bound:>12.4e}"
              f"{r.achieved_gap / r.theoretical_lower_bound:>8.2f}{r.cg_upper_reference:>12.4e}")


if __name__ == "__main__":
    main()
