#!/usr/bin/env python3
"""Play the resisting oracle against each method and print the certified gaps.

Usage: python3 demos/resisting_oracle.py [--n 128] [--T 16] [--p inf] [--kappa 2]
"""
import argparse
import math

from lowbound import AdversaryConfig, Method, NormSpec, check_membership, replay_check, run_session
from lowbound.methods import default_step_constant


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--T", type=int, default=16)
    ap.add_argument("--p", type=lambda s: math.inf if s == "inf" else float(s), default=math.inf)
    ap.add_argument("--kappa", type=float, default=2.0)
    args = ap.parse_args()

    c = AdversaryConfig(NormSpec(args.p, args.n), args.T, args.kappa, 1.0)
    print(f"n={args.n} T={args.T} p={args.p} kappa={args.kappa}: M={c.M:.2f} "
          f"Delta={c.Delta:.4g} chi={c.chi:.4g}")
    print(f"{'method':<12}{'gap':>12}{'bound':>12}{'gap/bound':>11}{'replay':>8}{'Hölder':>9}")
    for name in ("cg", "accelerated", "subgradient"):
        L_est = (default_step_constant(c.kappa, c.L, c.R, c.T, c.space.p, c.space.n)
                 if name == "accelerated" else None)
        m = Method(name, c.T, L_est)
        hi, tr = run_session(c, m)
        gap = hi.certified_gap(tr.final_point)
        rep = check_membership(hi.f, 200, seed=0)
        print(f"{name:<12}{gap:>12.4e}{hi.bound:>12.4e}{gap / hi.bound:>11.3f}"
              f"{str(replay_check(hi, m)):>8}{rep.max_ratio:>9.3f}")


if __name__ == "__main__":
    main()
