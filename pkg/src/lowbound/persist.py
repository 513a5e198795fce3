"""Versioned instance files.

Instances are JSON text.  Every float is written with ``float.hex`` so a
loaded instance evaluates bitwise like the original.  A sha256 over the
canonical body guards against edits and truncation.
"""
from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .adversary import AdversaryConfig, AdversaryState, HardInstance
from .exceptions import ChecksumMismatch, InvalidConfig, MalformedFile, VersionMismatch
from .kernel import SmoothingKernel, make_kernel
from .methods import Method
from .reductions import LiftedInstance, LiftMap
from .smoothing import MaxAffine, SmoothedInstance
from .space import NormSpec

__all__ = ["FORMAT_VERSION", "serialize_instance", "load_instance", "instance_to_dict",
           "instance_from_dict", "load_bundle"]

FORMAT_VERSION = "lowbound-instance/1"

REQUIRED = ("version", "p", "n", "T", "kappa", "L", "R", "kernel", "delta", "chi", "beta",
            "terms", "sigma", "xi", "certificate", "bound", "checksum")


def _h(x: float) -> str:
    return float(x).hex()


def _hv(a) -> list:
    return [float(v).hex() for v in np.asarray(a, dtype=float).ravel()]


def _f(s) -> float:
    if not isinstance(s, str):
        raise MalformedFile(f"expected a hex-float string, got {s!r}")
    try:
        return float.fromhex(s)
    except (ValueError, OverflowError) as exc:
        raise MalformedFile(f"bad hex float {s!r}") from exc


def _fv(seq, shape=None) -> np.ndarray:
    if not isinstance(seq, list):
        raise MalformedFile("expected a list of hex floats")
    a = np.array([_f(s) for s in seq], dtype=float)
    if shape is not None:
        if a.size != int(np.prod(shape)):
            raise MalformedFile(f"expected {int(np.prod(shape))} entries, got {a.size}")
        a = a.reshape(shape)
    return a


def _checksum(body: dict) -> str:
    text = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _p_text(p: float) -> str:
    return "inf" if math.isinf(p) else _h(p)


def _p_parse(s) -> float:
    return math.inf if s == "inf" else _f(s)


def instance_to_dict(inst, method: Method | None = None) -> dict:
    """Plain-JSON form of a HardInstance or LiftedInstance, checksum included."""
    lifted = isinstance(inst, LiftedInstance)
    hi = inst.base if lifted else inst
    c = hi.config
    st = hi.trace
    k = c.kernel
    g = hi.f.g
    body = {
        "version": FORMAT_VERSION,
        "p": _p_text(c.space.p),
        "n": c.space.n,
        "T": c.T,
        "kappa": _h(c.kappa),
        "L": _h(c.L),
        "R": _h(c.R),
        "kernel": {"variant": k.variant, "r": _h(k.r), "theta": _h(k.theta),
                   "m_phi": _h(k.m_phi), "rho": _h(k.rho)},
        "Delta": _h(c.Delta),
        "delta": _h(c.delta),
        "chi": _h(hi.f.chi),
        "beta": _h(hi.f.beta),
        "terms": {"index": [int(i) for i in g.index], "coef": _hv(g.coef),
                  "offsets": _hv(g.offsets)},
        "sigma": [int(i) for i in st.sigma],
        "xi": [int(s) for s in st.xi],
        "queries": [_hv(x) for x in st.queries],
        "certificate": _hv(hi.certificate),
        "bound": _h(hi.bound),
    }
    if method is not None:
        body["method"] = {"name": method.name, "T": method.T,
                          "L_est": None if method.L_est is None else _h(method.L_est)}
    if lifted:
        lm = inst.lift
        body["lift"] = {
            "p": _h(lm.p), "n": lm.n, "m": lm.m, "T": lm.T, "seed": lm.seed,
            "attempt": lm.attempt, "scale": _h(lm.scale),
            "measured_distortion": [_h(v) for v in lm.measured_distortion],
            "effective_R": _h(lm.effective_R),
            "G": _hv(lm.G), "basis": _hv(lm.basis),
            "certificate": _hv(inst.certificate), "bound": _h(inst.bound),
            "queries": [_hv(x) for x in inst.queries],
        }
    body["checksum"] = _checksum(body)
    return body


def serialize_instance(inst, path, method: Method | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(instance_to_dict(inst, method), indent=1) + "\n")
    return path


def _same(a: float, b: float, what: str):
    if a != b:
        raise MalformedFile(f"{what} in file ({a!r}) disagrees with the recomputed value ({b!r})")


def instance_from_dict(d: dict):
    """Rebuild an instance (and the stored method, if any) from its dict form.

    Returns ``(instance, method_or_None)``.
    """
    if not isinstance(d, dict):
        raise MalformedFile("instance file must hold a JSON object")
    missing = [k for k in REQUIRED if k not in d]
    if missing:
        raise MalformedFile(f"missing fields: {missing}")
    if d["version"] != FORMAT_VERSION:
        raise VersionMismatch(f"file version {d['version']!r}, expected {FORMAT_VERSION!r}")
    body = {k: v for k, v in d.items() if k != "checksum"}
    if _checksum(body) != d["checksum"]:
        raise ChecksumMismatch("checksum does not match the file contents")
    try:
        p, n, T = _p_parse(d["p"]), int(d["n"]), int(d["T"])
        kappa, L, R = _f(d["kappa"]), _f(d["L"]), _f(d["R"])
        space = NormSpec(p, n)
        kd = d["kernel"]
        kernel = SmoothingKernel(kd["variant"], space, _f(kd["r"]), _f(kd["theta"]),
                                 _f(kd["m_phi"]), _f(kd["rho"]))
    except InvalidConfig:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedFile(f"bad header: {exc}") from exc
    if T > n:
        raise InvalidConfig(f"T={T} exceeds n={n}")
    ref = make_kernel(space)
    for name in ("r", "theta", "m_phi"):
        _same(getattr(kernel, name), getattr(ref, name), f"kernel {name}")
    config = AdversaryConfig(space, T, kappa, L, kernel, R)
    chi, beta = _f(d["chi"]), _f(d["beta"])
    _same(chi, config.chi, "chi")
    _same(beta, config.beta, "beta")
    _same(_f(d["delta"]), config.delta, "delta")
    terms = d["terms"]
    try:
        g = MaxAffine.sparse(n, terms["index"], _fv(terms["coef"]), _fv(terms["offsets"]))
    except (KeyError, TypeError) as exc:
        raise MalformedFile(f"bad terms: {exc}") from exc
    f = SmoothedInstance(g, kernel, chi, beta, kappa, L, R)
    sigma = [int(i) for i in d["sigma"]]
    xi = [float(s) for s in d["xi"]]
    if len(sigma) != T or len(xi) != T or len(g) != T:
        raise MalformedFile("sigma, xi and terms must each have T entries")
    queries = [_fv(q, (n,)) for q in d.get("queries", [])]
    state = AdversaryState(config, t=T, sigma=sigma, xi=xi, queries=queries, answers=[], g=g)
    hi = HardInstance(f=f, certificate=_fv(d["certificate"], (n,)), bound=_f(d["bound"]),
                      trace=state)
    method = None
    if "method" in d:
        md = d["method"]
        L_est = None if md.get("L_est") is None else _f(md["L_est"])
        method = Method(md["name"], int(md["T"]), L_est)
    if "lift" in d:
        ld = d["lift"]
        N, m, TT = int(ld["n"]), int(ld["m"]), int(ld["T"])
        lift = LiftMap(G=_fv(ld["G"], (m, N)), basis=_fv(ld["basis"], (N, TT)),
                       scale=_f(ld["scale"]), p=_f(ld["p"]), T=TT,
                       measured_distortion=tuple(_f(v) for v in ld["measured_distortion"]),
                       effective_R=_f(ld["effective_R"]), seed=int(ld["seed"]),
                       attempt=int(ld["attempt"]))
        inst = LiftedInstance(base=hi, lift=lift, effective_R=lift.effective_R,
                              certificate=_fv(ld["certificate"], (N,)), bound=_f(ld["bound"]),
                              queries=[_fv(q, (N,)) for q in ld.get("queries", [])])
        return inst, method
    return hi, method


def load_bundle(path):
    """Load ``(instance, method_or_None)``; raises MalformedFile and its subclasses."""
    text = Path(path).read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedFile(f"not valid JSON: {exc}") from exc
    return instance_from_dict(d)


def load_instance(path):
    return load_bundle(path)[0]
