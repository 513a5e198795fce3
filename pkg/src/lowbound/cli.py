"""Command line: ``lowbound gen|run|check|plot-data``."""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .exceptions import LowboundError
from .harness import Cell, ExperimentConfig, Report, emit_plot_data, load_config, run_experiment
from .methods import METHOD_NAMES, Method, default_step_constant
from .persist import load_bundle, serialize_instance
from .reductions import LiftedInstance, lift_membership, replay_lifted, run_lifted_session
from .adversary import AdversaryConfig, replay_check, run_session
from .smoothing import check_membership
from .space import Ball, NormSpec


def _config(args) -> ExperimentConfig:
    if args.config:
        d = load_config(args.config).to_dict()
    else:
        d = {"n": [64], "T": [8], "p": ["inf"]}
    for key in ("n", "T", "p", "kappa", "L", "R"):
        v = getattr(args, key, None)
        if v is not None:
            d[key] = [v]
    if getattr(args, "method", None):
        d["methods"] = [args.method]
    if args.seed is not None:
        d["seeds"] = [args.seed]
    if args.tol is not None:
        d["tol"] = args.tol
    if args.out is not None:
        d["out"] = args.out
    return ExperimentConfig.from_dict(d)


def cmd_gen(args) -> int:
    cfg = _config(args)
    cell: Cell = cfg.cells()[0]
    name = cfg.methods[0]
    if cell.p >= 2:
        config = AdversaryConfig(NormSpec(cell.p, cell.n), cell.T, cell.kappa, cell.L, R=cell.R)
        L_est = (default_step_constant(cell.kappa, cell.L, cell.R, cell.T, cell.p, cell.n)
                 if name == "accelerated" else None)
        method = Method(name, cell.T, L_est)
        inst, _ = run_session(config, method)
    else:
        inst, _, method = run_lifted_session(cell.n, cell.T, cell.p, cell.kappa, cell.L, name,
                                             cell.seed, cfg.probes)
    out = Path(cfg.out or ".") / "instance.json"
    serialize_instance(inst, out, method)
    print(json.dumps({"instance": str(out), "bound": inst.bound, "method": name}))
    return 0


def cmd_check(args) -> int:
    inst, method = load_bundle(args.instance)
    tol = args.tol if args.tol is not None else 1e-10
    seed = args.seed if args.seed is not None else 0
    res = {}
    if isinstance(inst, LiftedInstance):
        rep = lift_membership(inst, args.samples, seed, tol)
        hi = inst.base
    else:
        hi = inst
        rep = check_membership(hi.f, args.samples, seed, tol)
    res["membership_max_ratio"] = rep.max_ratio
    res["membership"] = bool(rep.passed)
    c = hi.config
    fx = hi(hi.certificate).value
    res["certificate"] = bool(fx <= -hi.f.beta * c.Delta + 10 * tol)
    if method is not None:
        if isinstance(inst, LiftedInstance):
            res["replay"] = bool(replay_lifted(inst, method, inst.queries))
            ball = Ball(inst.space, 1.0)
        else:
            res["replay"] = bool(replay_check(hi, method))
            ball = c.ball()
        tr = method.run(inst, ball)
        gap = inst.certified_gap(tr.final_point)
        res["certified_gap"] = gap
        res["headline"] = bool(gap >= inst.bound - 10 * tol)
    res["bound"] = inst.bound
    ok = all(v for k, v in res.items() if isinstance(v, bool))
    print(json.dumps(res, indent=1))
    return 0 if ok else 1


def cmd_run(args) -> int:
    cfg = _config(args)
    rep = run_experiment(cfg)
    out = Path(cfg.out or ".")
    path = rep.write_csv(out / "report.csv", include_timing=args.timing)
    bad = rep.headline_violations()
    print(f"{len(rep)} rows, {len(rep.failures())} failed, {len(bad)} headline violations -> {path}")
    return 0 if not bad and not rep.failures() else 1


def cmd_plot(args) -> int:
    if args.report:
        rep = Report.read_csv(args.report)
    else:
        rep = run_experiment(_config(args))
    files = emit_plot_data(rep, args.out or ".")
    for f in files:
        print(f)
    return 0


def _p(s: str) -> float:
    return math.inf if s.lower() in ("inf", "infinity") else float(s)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lowbound", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(sp, grid=True):
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--tol", type=float)
        if grid:
            sp.add_argument("--n", type=int)
            sp.add_argument("--T", type=int)
            sp.add_argument("--p", type=_p)
            sp.add_argument("--kappa", type=float)
            sp.add_argument("--L", type=float)
            sp.add_argument("--R", type=float)
            sp.add_argument("--method", choices=METHOD_NAMES)

    sp = sub.add_parser("gen", help="build and save a hard instance against one method")
    common(sp)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("run", help="sweep a grid and write report.csv")
    common(sp)
    sp.add_argument("--timing", action="store_true", help="add a wall_time column")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("check", help="invariant suite on a saved instance")
    common(sp, grid=False)
    sp.add_argument("instance", help="instance file written by gen")
    sp.add_argument("--samples", type=int, default=1000)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("plot-data", help="columnar data files from a report")
    common(sp)
    sp.add_argument("--report", help="existing report.csv (otherwise the config is run)")
    sp.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (LowboundError, ValueError, OSError) as exc:
        print(f"lowbound: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
