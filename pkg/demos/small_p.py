#!/usr/bin/env python3
"""Lift the l_inf construction into l_1 and l_1.5 balls through random sections.

Usage: python3 demos/small_p.py [--n 400] [--T 20]
"""
import argparse

from lowbound.reductions import lift_membership, random_section, run_lifted_session, verify_radius


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=400)
    ap.add_argument("--T", type=int, default=20)
    args = ap.parse_args()
    for p in (1.0, 1.5):
        lm = random_section(args.n, args.T, p, seed=0)
        inst, tr, _ = run_lifted_session(args.n, args.T, p, 2.0, 1.0, "cg", lift=lm)
        rep = lift_membership(inst, 500, seed=0)
        print(f"p={p}: distortion ratio {lm.ratio:.3f}, effective radius {lm.effective_R:.3f}, "
              f"preimage radius {verify_radius(lm):.3f}")
        print(f"       certified gap {inst.certified_gap(tr.final_point):.4e} vs bound {inst.bound:.4e}, "
              f"worst Hölder ratio {rep.max_ratio:.3g}")


if __name__ == "__main__":
    main()
