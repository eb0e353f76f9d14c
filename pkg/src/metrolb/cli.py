"""Config-driven experiment runner.

Each subcommand reads a JSON config, fills in defaults, validates strictly
and writes a CSV plus a ``<out>.manifest.json`` holding the resolved config
and SHA-256 digests of the outputs. Passing a manifest back as ``--config``
reruns the same experiment.

Exit codes: 0 success, 1 a check or expectation failed, 2 bad config.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from . import estimators as est
from .identities import run_identity_suite
from .kernels import KernelSpec, NonFiniteStateError, RecordPolicy, run_chains
from .rng import DrawKind, RandomStream
from .targets import (
    DomainError,
    exact_sample_stationary,
    make_cosine_hard,
    make_diagonal_quadratic,
    make_hard_quadratic,
    make_hqc,
    make_isotropic_gaussian,
    make_resonant_gaussian,
    make_scale_adaptive_resonant,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------------ schema

_TARGET_KEYS = {
    "hq": {"d", "kappa"},
    "hqc": {"d", "kappa"},
    "resonant": {"d", "kappa", "eta", "K", "lambda_scale"},
    "adaptive_resonant": {"eta", "K", "j", "lambda_scale"},
    "cosine": {"d", "kappa", "h"},
    "gaussian_iso": {"d"},
}

_SET_KEYS = {"set", "coord", "half_width"}

_DEFAULTS = {
    "verify-identities": {"k_max": 64, "n_fuzz": 1000},
    "scan": {
        "target": {"kind": "hq", "d": 200, "kappa": 50.0},
        "grid": [{"kind": "mala", "h": h} for h in (1e-4, 3e-4, 1e-3, 3e-3, 1e-2)],
        "start": {"set": "gaussian_bad"},
        "trials": 1000,
        "gap_samples": 0,
    },
    "mixing": {
        "target": {"kind": "gaussian_iso", "d": 1000},
        "kernel": {"kind": "mala", "h": 0.5 * math.log(1000) / (100.0 * 1000)},
        "start": {"set": "small_ball"},
        "T": 2000,
        "trials": 100,
        "radius_factor": 0.9,
        "expect": {},
    },
    "resonance": {
        "target": {"kind": "resonant", "d": 3, "kappa": 100.0, "eta": 1.0, "K": 2},
        "start": "stationary",
        "T": 10000,
        "trials": 20,
        "tolerance": 1e-9,
    },
    "measure": {
        "target": {"kind": "gaussian_iso", "d": 2},
        "set": {"set": "small_ball"},
        "n": 100000,
        "method": "auto",
    },
    "gap": {
        "target": {"kind": "hq", "d": 20, "kappa": 100.0},
        "grid": [{"kind": "mala", "h": h} for h in (1e-4, 1e-3, 1e-2)],
        "n": 100000,
        "coord": 0,
        "check_bound": False,
    },
}

_EXPECT_KEYS = {"min_stall_fraction", "min_tv_lb"}


def _resolve(sub: str, raw: dict, seed=None, out=None) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    allowed = set(_DEFAULTS[sub]) | {"master_seed", "output_path"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys for {sub}: {sorted(unknown)}")
    cfg = copy.deepcopy(_DEFAULTS[sub])
    cfg.update(copy.deepcopy(raw))
    cfg.setdefault("master_seed", 0)
    cfg.setdefault("output_path", f"{sub}.csv")
    if seed is not None:
        cfg["master_seed"] = seed
    if out is not None:
        cfg["output_path"] = out
    s = cfg["master_seed"]
    if not isinstance(s, int) or isinstance(s, bool) or not 0 <= s < 2**64:
        raise ConfigError(f"master_seed must be an integer in [0, 2^64), got {s!r}")
    for key in ("trials", "T", "n", "k_max", "n_fuzz", "gap_samples", "coord"):
        if key in cfg:
            v = cfg[key]
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise ConfigError(f"{key} must be a nonnegative integer, got {v!r}")
    for key in ("trials", "n", "k_max", "n_fuzz"):
        if key in cfg and cfg[key] < 1:
            raise ConfigError(f"{key} must be >= 1")
    if "target" in cfg:
        _check_target(cfg["target"])
    if "grid" in cfg:
        if not isinstance(cfg["grid"], list) or not cfg["grid"]:
            raise ConfigError("grid must be a nonempty list of kernel specs")
        for k in cfg["grid"]:
            _kernel(k)
    if "kernel" in cfg:
        _kernel(cfg["kernel"])
    if "expect" in cfg:
        bad = set(cfg["expect"]) - _EXPECT_KEYS
        if bad:
            raise ConfigError(f"unknown expect keys: {sorted(bad)}")
    return cfg


def _check_target(t):
    if not isinstance(t, dict) or t.get("kind") not in _TARGET_KEYS:
        raise ConfigError(f"target.kind must be one of {sorted(_TARGET_KEYS)}")
    extra = set(t) - _TARGET_KEYS[t["kind"]] - {"kind"}
    if extra:
        raise ConfigError(f"unknown keys for target {t['kind']}: {sorted(extra)}")


def _kernel(k) -> KernelSpec:
    if not isinstance(k, dict):
        raise ConfigError(f"kernel spec must be an object, got {k!r}")
    keys = {"mala": {"kind", "h"}, "hmc": {"kind", "eta", "K"}}.get(k.get("kind"))
    if keys is None:
        raise ConfigError(f"kernel.kind must be 'mala' or 'hmc', got {k.get('kind')!r}")
    if set(k) != keys:
        raise ConfigError(f"kernel {k['kind']} needs exactly {sorted(keys)}, got {sorted(k)}")
    try:
        return KernelSpec.from_dict(k)
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e)) from e


def build_target(t: dict):
    """Target and the index of its resonant coordinate (None when not resonant)."""
    _check_target(t)
    kind = t["kind"]
    try:
        if kind == "hq":
            return make_hard_quadratic(int(t["d"]), float(t["kappa"])), None
        if kind == "hqc":
            return make_hqc(int(t["d"]), float(t["kappa"])), None
        if kind == "cosine":
            return make_cosine_hard(int(t["d"]), float(t["kappa"]), float(t["h"])), None
        if kind == "gaussian_iso":
            return make_isotropic_gaussian(int(t["d"])), None
        scale = float(t.get("lambda_scale", 1.0))
        if kind == "resonant":
            base, _ = make_resonant_gaussian(int(t["d"]), float(t["kappa"]), float(t["eta"]), int(t["K"]))
            lams = np.array([s.lam for s in base.specs])
            lams[1] *= scale
            return make_diagonal_quadratic(lams, name="resonant", curvature_bounds=(1.0, float(t["kappa"])),
                                           info={**base.info, "lambda_scale": scale}), 1
        base = make_scale_adaptive_resonant(float(t["eta"]), int(t["K"]), int(t.get("j", 1)))
        return make_diagonal_quadratic([base.specs[0].lam * scale], name="adaptive_resonant",
                                       info={**base.info, "lambda_scale": scale}), 0
    except KeyError as e:
        raise ConfigError(f"target {kind} is missing {e.args[0]!r}") from e
    except (DomainError, ValueError, TypeError) as e:
        raise ConfigError(f"target {kind}: {e}") from e


def build_witness(spec, target):
    if isinstance(spec, str):
        spec = {"set": spec}
    if not isinstance(spec, dict) or "set" not in spec:
        raise ConfigError(f"witness set spec must name a set, got {spec!r}")
    extra = set(spec) - _SET_KEYS
    if extra:
        raise ConfigError(f"unknown witness set keys: {sorted(extra)}")
    info = target.info
    kw = {k: spec[k] for k in ("coord", "half_width") if k in spec}
    try:
        return est.make_witness(spec["set"], target.d, kappa=info.get("kappa"), h=info.get("h"), **kw)
    except (KeyError, ValueError) as e:
        raise ConfigError(f"witness set {spec.get('set')}: {e}") from e


def _starts(cfg_start, target, streams):
    if cfg_start == "stationary":
        return np.stack([exact_sample_stationary(target, 1, s.generator(DrawKind.START))[0]
                         for s in streams])
    if isinstance(cfg_start, dict) and "point" in cfg_start:
        x = np.asarray(cfg_start["point"], dtype=float)
        if x.shape != (target.d,):
            raise ConfigError(f"start point must have length {target.d}")
        return np.broadcast_to(x, (len(streams), target.d)).copy()
    wset = build_witness(cfg_start, target)
    return np.stack([est.sample_restricted(target, wset, 1, s.generator(DrawKind.START))[0]
                     for s in streams])


# ------------------------------------------------------------------ output

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    if v is None:
        return ""
    return str(v)


def write_csv(path: str, columns, rows) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(sub, cfg, threads, wall, summary, outputs):
    path = cfg["output_path"] + ".manifest.json"
    doc = {
        "tool": "metrolb",
        "version": __version__,
        "subcommand": sub,
        "resolved_config": cfg,
        "threads": threads,
        "wall_time_s": wall,
        "summary": summary,
        "outputs": {os.path.basename(p): _sha256(p) for p in outputs},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


# ---------------------------------------------------------------- commands

def cmd_verify_identities(cfg, threads):
    results = run_identity_suite(k_max=cfg["k_max"], n_fuzz=cfg["n_fuzz"], seed=cfg["master_seed"])
    rows = [{"check": r.name, "max_error": r.max_error, "tolerance": r.tolerance,
             "cases": r.cases, "passed": r.passed} for r in results]
    write_csv(cfg["output_path"], ["check", "max_error", "tolerance", "cases", "passed"], rows)
    failed = [r.name for r in results if not r.passed]
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name} max_error={r.max_error:.3e} tol={r.tolerance:.0e}")
    if failed:
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
    return (EXIT_FAIL if failed else EXIT_OK), {"checks": len(results), "failed": failed}


def cmd_scan(cfg, threads):
    target, _ = build_target(cfg["target"])
    grid = [_kernel(k) for k in cfg["grid"]]
    start = cfg["start"]
    wset = None if start == "stationary" else build_witness(start, target)
    rows = est.acceptance_scan(target, grid, wset, cfg["trials"], RandomStream(cfg["master_seed"]),
                               gap_samples=cfg["gap_samples"])
    cols = ["kind", "h", "eta", "K"] + list(est.SCAN_COLUMNS)
    write_csv(cfg["output_path"], cols, rows)
    return EXIT_OK, {"rows": len(rows), "mean_log_accept": [r["mean_log_accept"] for r in rows]}


def cmd_mixing(cfg, threads):
    target, _ = build_target(cfg["target"])
    kernel = _kernel(cfg["kernel"])
    start = cfg["start"]
    if not (start == "small_ball" or (isinstance(start, dict) and start.get("set") == "small_ball")):
        raise ConfigError("mixing needs start = small_ball")
    d, T, n = target.d, cfg["T"], cfg["trials"]
    streams = [RandomStream(cfg["master_seed"], i) for i in range(n)]
    x0 = _starts(start, target, streams)
    large = est.make_witness("omega_large", d)
    traces = run_chains(kernel, target, x0, T, streams, RecordPolicy(store_states=False),
                        witnesses={"omega_large": large.contains}, threads=threads)
    stat = est.set_measure_mc(target, large, 100_000, RandomStream(cfg["master_seed"]).generator(DrawKind.AUX))
    acc = np.array([t.accepted for t in traces])
    norms = np.array([t.norms_sq for t in traces])
    hits = np.array([t.witness_series["omega_large"] for t in traces])
    rej = np.concatenate([np.zeros(1, dtype=int), np.sum(~acc, axis=0)])
    cum = np.cumsum(rej)
    rows = []
    for s in range(T + 1):
        k = int(hits[:, s].sum())
        chain = est.MeasureEstimate.from_counts(k, n)
        tv = max(0.0, stat.ci_lo - chain.ci_hi, chain.ci_lo - stat.ci_hi)
        rows.append({"step": s, "rejects": int(rej[s]), "cum_rejects": int(cum[s]),
                     "mean_norm_sq": float(norms[:, s].mean()), "max_norm_sq": float(norms[:, s].max()),
                     "omega_large_freq": k / n, "tv_lb": tv})
    write_csv(cfg["output_path"], ["step", "rejects", "cum_rejects", "mean_norm_sq", "max_norm_sq",
                                   "omega_large_freq", "tv_lb"], rows)
    rad2 = cfg["radius_factor"] ** 2 * d
    stalled = (~acc).sum(axis=1) == 0
    inside = norms.max(axis=1) <= rad2
    summary = {"stall_fraction": float(np.mean(stalled & inside)),
               "zero_reject_fraction": float(np.mean(stalled)),
               "inside_fraction": float(np.mean(inside)),
               "final_tv_lb": rows[-1]["tv_lb"], "stationary_omega_large": stat.estimate,
               "grad_evals": int(sum(t.grad_evals for t in traces))}
    exp = cfg["expect"]
    ok = True
    if "min_stall_fraction" in exp and summary["stall_fraction"] < exp["min_stall_fraction"]:
        ok = False
    if "min_tv_lb" in exp and summary["final_tv_lb"] < exp["min_tv_lb"]:
        ok = False
    if not ok:
        print(f"mixing expectations not met: {summary}", file=sys.stderr)
    return (EXIT_OK if ok else EXIT_FAIL), summary


def cmd_resonance(cfg, threads):
    tcfg = cfg["target"]
    if tcfg.get("kind") not in ("resonant", "adaptive_resonant"):
        raise ConfigError("resonance needs a resonant or adaptive_resonant target")
    target, r = build_target(tcfg)
    kernel = _kernel({"kind": "hmc", "eta": float(tcfg["eta"]), "K": int(tcfg["K"])})
    T, n = cfg["T"], cfg["trials"]
    streams = [RandomStream(cfg["master_seed"], i) for i in range(n)]
    x0 = _starts(cfg["start"], target, streams)
    probes = {
        "abs_res": lambda x, y, a, xn: np.abs(xn[:, r]),
        "proposal_drift": lambda x, y, a, xn: np.abs(np.abs(y[:, r]) - np.abs(x[:, r])),
    }
    traces = run_chains(kernel, target, x0, T, streams, RecordPolicy(store_states=False),
                        probes=probes, threads=threads)
    base = np.abs(x0[:, r])
    mags = np.array([t.probe_series["abs_res"] for t in traces])
    prop = np.array([t.probe_series["proposal_drift"] for t in traces])
    scale = np.maximum(1.0, base)[:, None]
    chain_drift = np.abs(mags - base[:, None]) / scale
    prop_drift = prop / scale
    rows = [{"step": 0, "mean_abs_x_res": float(base.mean()), "max_chain_drift": 0.0,
             "max_proposal_drift": 0.0}]
    for s in range(T):
        rows.append({"step": s + 1, "mean_abs_x_res": float(mags[:, s].mean()),
                     "max_chain_drift": float(chain_drift[:, s].max()),
                     "max_proposal_drift": float(prop_drift[:, s].max())})
    write_csv(cfg["output_path"], ["step", "mean_abs_x_res", "max_chain_drift", "max_proposal_drift"], rows)
    worst = float(max(chain_drift.max(initial=0.0), prop_drift.max(initial=0.0)))
    summary = {"max_drift": worst, "tolerance": cfg["tolerance"], "resonant_coord": r,
               "lambda": target.specs[r].lam, "j": target.info.get("j"),
               "acceptance_rate": float(np.mean([t.acceptance_rate for t in traces])) if T else None}
    if worst > cfg["tolerance"]:
        print(f"resonant magnitude drifted by {worst:.3e} > {cfg['tolerance']:.0e}", file=sys.stderr)
        return EXIT_FAIL, summary
    return EXIT_OK, summary


def cmd_measure(cfg, threads):
    target, _ = build_target(cfg["target"])
    wset = build_witness(cfg["set"], target)
    if cfg["method"] not in ("auto", "mc", "factorized"):
        raise ConfigError("method must be auto, mc or factorized")
    try:
        m = est.set_measure_mc(target, wset, cfg["n"], RandomStream(cfg["master_seed"]),
                               method=cfg["method"], log_only=True)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    row = {"set": wset.kind, "method": m.method, "hits": m.hits, "n": m.n, "estimate": m.estimate,
           "ci_lo": m.ci_lo, "ci_hi": m.ci_hi, "log_estimate": m.log_estimate}
    write_csv(cfg["output_path"], list(row), [row])
    return EXIT_OK, {k: row[k] for k in ("estimate", "log_estimate", "method")}


def gap_bound(kernel: KernelSpec) -> float:
    """Loose constant-10 version of the step-size limits on the Dirichlet ratio."""
    if kernel.kind == "mala":
        h = kernel.h
        return 10.0 * (h + h * h)
    h, K = kernel.equivalent_h, kernel.K
    return 10.0 * (h * K * K + h * h * K**4)


def cmd_gap(cfg, threads):
    target, _ = build_target(cfg["target"])
    if not 0 <= cfg["coord"] < target.d:
        raise ConfigError("coord out of range")
    root = RandomStream(cfg["master_seed"])
    rows, ok = [], True
    for i, k in enumerate(cfg["grid"]):
        kern = _kernel(k)
        g = est.dirichlet_gap_estimate(kern, target, cfg["n"], root.spawn(i), coord=cfg["coord"])
        bound = gap_bound(kern)
        within = g.ratio + 4 * g.ratio_se <= bound
        ok &= within or not cfg["check_bound"]
        rows.append({**kern.to_dict(), "n": g.n, "numerator": g.numerator, "numerator_se": g.numerator_se,
                     "variance": g.variance, "ratio": g.ratio, "ratio_se": g.ratio_se,
                     "accept_rate": g.accept_rate, "bound": bound, "within_bound": within})
    write_csv(cfg["output_path"], ["kind", "h", "eta", "K", "n", "numerator", "numerator_se", "variance",
                                   "ratio", "ratio_se", "accept_rate", "bound", "within_bound"], rows)
    return (EXIT_OK if ok else EXIT_FAIL), {"ratios": [r["ratio"] for r in rows]}


COMMANDS = {
    "verify-identities": cmd_verify_identities,
    "scan": cmd_scan,
    "mixing": cmd_mixing,
    "resonance": cmd_resonance,
    "measure": cmd_measure,
    "gap": cmd_gap,
}


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    if isinstance(doc, dict) and "resolved_config" in doc and "subcommand" in doc:
        return doc["resolved_config"], doc["subcommand"]
    return doc, None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="metrolb", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"metrolb {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config or a run manifest")
        sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        sp.add_argument("--threads", type=int, default=1, help="worker threads across trials")
        sp.add_argument("--out", help="output CSV path (overrides the config)")
        if name == "verify-identities":
            sp.add_argument("--k-max", type=int, help="largest K in the Chebyshev rows")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    sub = args.command
    try:
        raw, manifest_sub = _load_config(args.config) if args.config else ({}, None)
        if manifest_sub is not None and manifest_sub != sub:
            raise ConfigError(f"manifest is for {manifest_sub!r}, not {sub!r}")
        if sub == "verify-identities" and args.k_max is not None:
            raw = {**raw, "k_max": args.k_max}
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = _resolve(sub, raw, seed=args.seed, out=args.out)
        if sub == "verify-identities" and not 1 <= cfg["k_max"] <= 64:
            raise ConfigError("k_max must be in [1, 64]")
        t0 = time.perf_counter()
        code, summary = COMMANDS[sub](cfg, args.threads)
        wall = time.perf_counter() - t0
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonFiniteStateError, est.StartSamplerExhausted) as e:
        print(f"run aborted: {e}", file=sys.stderr)
        return EXIT_FAIL
    manifest = _write_manifest(sub, cfg, args.threads, wall, summary, [cfg["output_path"]])
    print(f"wrote {cfg['output_path']} and {manifest}")
    return code


if __name__ == "__main__":
    sys.exit(main())
