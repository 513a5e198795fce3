"""Experiment sweeps over (n, T, p, kappa, L, R) grids.

Each grid cell and method plays one adversary session (lifted through a
random section when p < 2), finalizes the hard instance and records:

* ``certified_gap_lower``: f(x_T) - f(x_*), a rigorous lower bound on the
  method's gap;
* ``achieved_gap``: f(x_T) minus a Frank-Wolfe dual lower bound on the
  optimum, i.e. an upper estimate of the true gap;
* ``theoretical_lower_bound`` and ``cg_upper_reference``.

Reports are sorted by cell key, so output does not depend on scheduling.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .adversary import AdversaryConfig, run_session
from .exceptions import InvalidConfig, LowboundError
from .methods import METHOD_NAMES, Method, default_step_constant, run_accelerated
from .reductions import random_section, run_lifted_session
from .space import Ball, NormSpec, dual_norm

__all__ = [
    "Cell",
    "ExperimentConfig",
    "ReportRow",
    "Report",
    "load_config",
    "run_cell",
    "run_experiment",
    "opt_lower_estimate",
    "cg_upper_reference",
    "emit_plot_data",
    "loglog_slope",
    "CSV_FIELDS",
]


def _parse_p(v) -> float:
    if isinstance(v, str) and v.strip().lower() in ("inf", "infinity", "∞"):
        return math.inf
    return float(v)


def _p_tag(p: float) -> str:
    return "inf" if math.isinf(p) else f"{p:g}"


@dataclass(frozen=True, order=True)
class Cell:
    p: float
    kappa: float
    n: int
    T: int
    L: float = 1.0
    R: float = 1.0
    seed: int = 0

    def validate(self):
        if self.T < 1 or self.n < 1:
            raise InvalidConfig(f"{self}: n and T must be positive")
        if self.p < 1:
            raise InvalidConfig(f"{self}: p must be >= 1")
        if self.p < 2:
            if self.T > max(1, self.n // 20):
                raise InvalidConfig(f"{self}: p < 2 needs T <= n/20")
            if self.R != 1.0:
                raise InvalidConfig(f"{self}: p < 2 cells are run on the unit ball (R = 1)")
        elif self.T > self.n:
            raise InvalidConfig(f"{self}: T exceeds n")
        if not (1.0 < self.kappa <= 2.0):
            raise InvalidConfig(f"{self}: kappa must lie in (1, 2]")
        if not (self.L > 0 and self.R > 0):
            raise InvalidConfig(f"{self}: L and R must be positive")


@dataclass
class ExperimentConfig:
    """A grid of cells times a list of methods.

    Grid axes are lists; the cells are their Cartesian product.
    """

    n: list
    T: list
    p: list
    kappa: list = field(default_factory=lambda: [2.0])
    L: list = field(default_factory=lambda: [1.0])
    R: list = field(default_factory=lambda: [1.0])
    methods: list = field(default_factory=lambda: list(METHOD_NAMES))
    seeds: list = field(default_factory=lambda: [0])
    tol: float = 1e-10
    workers: int = 1
    polish_steps: int = 400
    probes: int = 10_000
    out: str | None = None

    def __post_init__(self):
        self.p = [_parse_p(v) for v in self.p]
        for m in self.methods:
            if m not in METHOD_NAMES:
                raise InvalidConfig(f"unknown method {m!r}; choose from {METHOD_NAMES}")
        if not self.tol > 0:
            raise InvalidConfig("tol must be positive")
        for c in self.cells():
            c.validate()

    def cells(self) -> list:
        prod = itertools.product(self.p, self.kappa, self.n, self.T, self.L, self.R, self.seeds)
        return sorted(Cell(float(p), float(k), int(n), int(T), float(L), float(R), int(s))
                      for p, k, n, T, L, R, s in prod)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        grid = d.pop("grid", {})
        known = {f.name for f in fields(cls)}
        extra = set(d) - known | set(grid) - known
        if extra:
            raise InvalidConfig(f"unknown config keys: {sorted(extra)}")
        for k in ("n", "T", "p"):
            grid.setdefault(k, d.pop(k, []))
        return cls(**grid, **d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["p"] = ["inf" if math.isinf(p) else p for p in self.p]
        return d


def load_config(path) -> ExperimentConfig:
    """Read a JSON config; grid axes may sit at top level or under ``"grid"``."""
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"config is not valid JSON: {exc}") from exc
    return ExperimentConfig.from_dict(d)


CSV_FIELDS = ("p", "kappa", "n", "T", "L", "R", "seed", "method", "status",
              "achieved_gap", "certified_gap_lower", "theoretical_lower_bound",
              "cg_upper_reference", "measured_ratio", "error")


@dataclass
class ReportRow:
    p: float
    kappa: float
    n: int
    T: int
    L: float
    R: float
    seed: int
    method: str
    status: str = "ok"
    achieved_gap: float = math.nan
    certified_gap_lower: float = math.nan
    theoretical_lower_bound: float = math.nan
    cg_upper_reference: float = math.nan
    measured_ratio: float = math.nan
    error: str = ""
    wall_time: float = 0.0

    @property
    def key(self) -> tuple:
        return (self.p, self.kappa, self.n, self.T, self.L, self.R, self.seed,
                METHOD_NAMES.index(self.method) if self.method in METHOD_NAMES else 99)

    def headline_ok(self, tol: float) -> bool:
        return self.status == "ok" and (
            self.certified_gap_lower >= self.theoretical_lower_bound - 10.0 * tol
        )


def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return "inf" if math.isinf(v) else repr(v)
    return str(v)


@dataclass
class Report:
    rows: list
    tol: float = 1e-10

    def __len__(self):
        return len(self.rows)

    def failures(self) -> list:
        return [r for r in self.rows if r.status != "ok"]

    def headline_violations(self) -> list:
        return [r for r in self.rows if r.status == "ok" and not r.headline_ok(self.tol)]

    def to_csv(self, include_timing: bool = False) -> str:
        cols = CSV_FIELDS + (("wall_time",) if include_timing else ())
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.rows:
            w.writerow([_fmt(getattr(r, c)) for c in cols])
        return buf.getvalue()

    def write_csv(self, path, include_timing: bool = False) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv(include_timing))
        return path

    @classmethod
    def read_csv(cls, path, tol: float = 1e-10) -> "Report":
        rows = []
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                def fl(k):
                    s = rec.get(k, "")
                    return math.nan if s == "" else float(s)

                rows.append(ReportRow(
                    p=fl("p"), kappa=fl("kappa"), n=int(rec["n"]), T=int(rec["T"]), L=fl("L"),
                    R=fl("R"), seed=int(rec["seed"]), method=rec["method"], status=rec["status"],
                    achieved_gap=fl("achieved_gap"), certified_gap_lower=fl("certified_gap_lower"),
                    theoretical_lower_bound=fl("theoretical_lower_bound"),
                    cg_upper_reference=fl("cg_upper_reference"),
                    measured_ratio=fl("measured_ratio"), error=rec.get("error", ""),
                    wall_time=fl("wall_time") if "wall_time" in rec else 0.0))
        return cls(rows, tol)


def cg_upper_reference(L: float, R: float, kappa: float, T: int) -> float:
    """Textbook conditional-gradient rate ``2 L (2R)^kappa / (T+1)^(kappa-1)``."""
    return 2.0 * L * (2.0 * R) ** kappa / (T + 1.0) ** (kappa - 1.0)


def opt_lower_estimate(oracle, ball: Ball, steps: int, kappa: float, L: float) -> float:
    """Lower bound on ``min_ball f`` from an accelerated polish run.

    At every polish query y, convexity gives
    ``Opt >= f(y) + <g, c - y> - R ||g||_*`` (c the ball center); the best
    such value is returned, so the estimate is valid however short the run.
    """
    sp = ball.space
    L_est = default_step_constant(kappa, L, ball.radius, steps, sp.p, sp.n)
    tr = run_accelerated(oracle, ball, steps, L_est)
    best = -math.inf
    for y, a in zip(tr.queries, tr.answers):
        lb = a.value + float(a.gradient @ (ball.center - y)) - ball.radius * dual_norm(sp, a.gradient)
        best = max(best, lb)
    return best


def run_cell(cell: Cell, method_name: str, tol: float = 1e-10, polish_steps: int = 400,
             probes: int = 10_000) -> ReportRow:
    """One session; failures are captured in the row instead of raised."""
    row = ReportRow(cell.p, cell.kappa, cell.n, cell.T, cell.L, cell.R, cell.seed, method_name)
    t0 = time.perf_counter()
    try:
        cell.validate()
        if cell.p >= 2:
            config = AdversaryConfig(NormSpec(cell.p, cell.n), cell.T, cell.kappa, cell.L,
                                     R=cell.R)
            L_est = (default_step_constant(cell.kappa, cell.L, cell.R, cell.T, cell.p, cell.n)
                     if method_name == "accelerated" else None)
            hi, tr = run_session(config, Method(method_name, cell.T, L_est))
            inst, ball, bound = hi, config.ball(), hi.bound
        else:
            lift = random_section(cell.n, cell.T, cell.p, cell.seed, probes)
            inst, tr, _ = run_lifted_session(cell.n, cell.T, cell.p, cell.kappa, cell.L,
                                             method_name, cell.seed, probes, lift=lift)
            ball, bound = Ball(NormSpec(cell.p, cell.n), 1.0), inst.bound
            row.measured_ratio = lift.ratio
        if tr.final_point is None:
            raise LowboundError("the method made no feasible query")
        f_final = inst(tr.final_point).value
        f_cert = inst(inst.certificate).value
        opt_lb = min(opt_lower_estimate(inst, ball, polish_steps, cell.kappa, cell.L), f_cert)
        row.certified_gap_lower = f_final - f_cert
        row.achieved_gap = f_final - opt_lb
        row.theoretical_lower_bound = bound
        row.cg_upper_reference = cg_upper_reference(cell.L, cell.R, cell.kappa, cell.T)
    except (LowboundError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        row.status = "failed"
        row.error = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    row.wall_time = time.perf_counter() - t0
    return row


def _run_job(args):
    return run_cell(*args)


def run_experiment(config: ExperimentConfig) -> Report:
    """Run every (cell, method) pair; rows come back sorted by cell key."""
    jobs = [(c, m, config.tol, config.polish_steps, config.probes)
            for c in config.cells() for m in config.methods]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(_run_job, jobs))
    else:
        rows = [_run_job(j) for j in jobs]
    rows.sort(key=lambda r: r.key)
    return Report(rows, config.tol)


def loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def emit_plot_data(report: Report, path) -> list:
    """Write one whitespace-delimited file per (p, kappa, method) plus
    ``summary.dat``; returns the written paths."""
    ok = [r for r in report.rows if r.status == "ok"]
    if not ok:
        raise ValueError("nothing to plot: the report has no successful rows")
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    groups: dict = {}
    for r in ok:
        groups.setdefault((r.p, r.kappa, r.method), []).append(r)
    written = []
    for (p, k, m), rows in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1],
                                                                    METHOD_NAMES.index(kv[0][2]))):
        rows.sort(key=lambda r: (r.T, r.n, r.L, r.R, r.seed))
        fp = out / f"p{_p_tag(p)}_k{k:g}_{m}.dat"
        lines = [f"# p={_p_tag(p)} kappa={k:g} method={m}",
                 "# T achieved_gap lower_bound cg_reference certified_gap n"]
        lines += [f"{r.T} {r.achieved_gap!r} {r.theoretical_lower_bound!r} "
                  f"{r.cg_upper_reference!r} {r.certified_gap_lower!r} {r.n}" for r in rows]
        fp.write_text("\n".join(lines) + "\n")
        written.append(fp)
    lines = ["# gap/bound ratios per row",
             "# p kappa method n T certified_over_bound achieved_over_bound"]
    for r in ok:
        lines.append(f"{_p_tag(r.p)} {r.kappa:g} {r.method} {r.n} {r.T} "
                     f"{r.certified_gap_lower / r.theoretical_lower_bound!r} "
                     f"{r.achieved_gap / r.theoretical_lower_bound!r}")
    fp = out / "summary.dat"
    fp.write_text("\n".join(lines) + "\n")
    written.append(fp)
    return written
