"""Config-driven command-line runner.

Usage: ``branchdual <command> CONFIG [--seed S] [--out DIR] [--replicates R]``.

Exit codes: 0 success, 1 config error, 2 precondition violation,
3 verdict fail.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .analysis import (
    fixation_probability,
    fixation_time_bound,
    fixation_time_green,
    in_closed_form_family,
    scale_function,
    stationary_closed_form,
    stationary_numeric,
    stationary_residual,
)
from .ctmc import OUTCOME_NAMES, MCEstimate, mc_generating_function, simulate_z, simulate_z_batch
from .dual import fixation_batch, require_dual, simulate_wf_efficiency, simulate_x, simulate_x_batch, wf_efficiency_step
from .harness import (
    cdi_probe,
    duality_grid,
    explosion_probe,
    grid_verdict,
    parity_probe,
    uniform_convergence_probe,
)
from .io import digest, write_csv, write_json
from .model import classify_long_term, classify_regime, derive, params_from_dict, params_to_dict
from .rng import make_rng

EXIT_CONFIG, EXIT_PRECONDITION, EXIT_VERDICT = 1, 2, 3


class ConfigError(ValueError):
    pass


REQUIRED = object()
# Block name -> {key: default}.
BLOCKS: dict[str, dict] = {
    "simulate": {"n0": REQUIRED, "horizon": 10.0, "replicates": 1000, "cap": 10**4,
                 "snapshot_times": [], "target": None},
    "gen_func": {"n0": REQUIRED, "t": REQUIRED, "x": REQUIRED, "replicates": 10**4, "cap": 10**4},
    "dual": {"x0": REQUIRED, "horizon": 10.0, "dt": 1e-3, "replicates": 1000,
             "snapshot_times": [], "eps_fix": 1e-6},
    "stationary": {"n_max": 400, "start_parity": None},
    "scale": {"x": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9], "panels": 256, "levels": 30},
    "duality": {"xs": [0.2, 0.5, 0.8], "ns": [1, 2, 5], "ts": [0.5, 1.0, 2.0],
                "replicates": 10**5, "dt": 1e-3, "cap": 10**4},
    "probes": {"cdi": {}, "explosion": {}, "parity": {}, "uniform": {}},
    "wf_efficiency": {"N": REQUIRED, "b1": REQUIRED, "x0": REQUIRED, "generations": 100, "replicates": 10**5},
}
PROBE_KEYS = {
    "cdi": {"n_list": [10, 100, 1000], "horizon": 1000.0, "replicates": 10**4, "n_max": 400},
    "explosion": {"n0": 10, "cap_list": [10**3, 10**4], "horizon": 5.0, "replicates": 2000},
    "parity": {"n0": REQUIRED, "horizon": 100.0, "replicates": 10**4, "n_max": 401},
    "uniform": {"n_pair": [5, 50], "t_list": [0.0, 1.0, 2.0, 5.0, 10.0], "replicates": 10**5, "n_max": 400},
}
TOP_KEYS = {"params", "seed", "output_dir"} | set(BLOCKS)
POSITIVE = {"horizon", "replicates", "cap", "dt", "eps_fix", "n_max", "panels", "levels", "N", "generations"}


def _fill(block: dict, schema: dict, where: str) -> dict:
    if not isinstance(block, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = set(block) - set(schema)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    out = {}
    for key, default in schema.items():
        val = block.get(key, None if default is REQUIRED else default)
        if key in POSITIVE and val is not None and (not isinstance(val, (int, float)) or val <= 0):
            raise ConfigError(f"{where}.{key} must be positive")
        out[key] = val
    return out


def load_config(path: str | Path, seed=None, out=None, replicates=None) -> dict:
    """Read, validate and fill defaults; command-line overrides applied last."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    if "params" not in raw:
        raise ConfigError("config needs a params block")
    try:
        params = params_from_dict(raw["params"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"params: {exc}") from exc
    cfg = {"params": params_to_dict(params), "seed": raw.get("seed", 0), "output_dir": raw.get("output_dir", "out")}
    for name, schema in BLOCKS.items():
        if name not in raw:
            continue
        if name == "probes":
            blk = raw[name]
            if not isinstance(blk, dict) or set(blk) - set(PROBE_KEYS):
                raise ConfigError(f"probes must be an object with keys among {sorted(PROBE_KEYS)}")
            cfg[name] = {k: _fill(v, PROBE_KEYS[k], f"probes.{k}") for k, v in blk.items()}
        else:
            cfg[name] = _fill(raw[name], schema, name)
    if seed is not None:
        cfg["seed"] = seed
    if out is not None:
        cfg["output_dir"] = str(out)
    if not isinstance(cfg["seed"], int) or not 0 <= cfg["seed"] < 2**64:
        raise ConfigError("seed must be an integer in [0, 2**64)")
    if replicates is not None:
        if replicates <= 0:
            raise ConfigError("--replicates must be positive")
        for name, blk in cfg.items():
            if name == "probes":
                for p in blk.values():
                    p["replicates"] = replicates
            elif isinstance(blk, dict) and "replicates" in blk:
                blk["replicates"] = replicates
    return cfg


def _need(cfg: dict, block: str) -> dict:
    blk = cfg.get(block)
    if blk is None:
        blk = _fill({}, BLOCKS[block], block)
    missing = [k for k, v in blk.items() if v is None and BLOCKS[block][k] is REQUIRED]
    if missing:
        raise ConfigError(f"{block} needs {missing}")
    return blk


class Run:
    """Output directory, digest and seed shared by one command."""

    def __init__(self, command: str, cfg: dict):
        self.command = command
        self.cfg = cfg
        self.params = params_from_dict(cfg["params"])
        self.seed = cfg["seed"]
        self.digest = digest({k: v for k, v in cfg.items() if k != "output_dir"})
        self.out = Path(cfg["output_dir"])
        self.files: list[str] = []

    def rng(self, *key):
        return make_rng(self.seed, self.command, *key)

    def csv(self, name, header, rows):
        write_csv(self.out / name, header, rows, self.digest)
        self.files.append(name)

    def json(self, name, obj):
        write_json(self.out / name, {"config_digest": self.digest, **obj})
        self.files.append(name)

    def manifest(self, wall: float, status: int):
        write_json(self.out / "manifest.json", {
            "command": self.command,
            "config_digest": self.digest,
            "seed": self.seed,
            "outputs": sorted(self.files),
            "exit_status": status,
            "versions": {"branchdual": __version__, "python": platform.python_version(),
                         "numpy": np.__version__, "scipy": scipy.__version__},
            "wall_time": wall,
        })


def cmd_classify(run: Run, args) -> int:
    p = run.params
    dp = derive(p)
    parity = args.start_parity
    try:
        long_term = classify_long_term(p, parity).value
    except ValueError:
        long_term = None
    out = {"regime": classify_regime(p).value, "sigma": dp.sigma_coop, "long_term": long_term}
    print(json.dumps(out, sort_keys=True))
    run.json("classify.json", {**out, "rho": dp.rho, "m": dp.m, "b": dp.b_tot})
    return 0


def cmd_simulate_z(run: Run, args) -> int:
    s = _need(run.cfg, "simulate")
    target = set(s["target"]) if s["target"] is not None else None
    res = simulate_z_batch(run.params, s["n0"], s["replicates"], horizon=s["horizon"],
                           snapshot_times=s["snapshot_times"], cap=s["cap"], target=target,
                           stop_on_hit=target is not None, rng=run.rng("batch"))
    header = ["replicate", "outcome", "final_state", "final_time"] + (["hit_time"] if target else [])
    rows = []
    for r in range(res.replicates):
        row = [r, OUTCOME_NAMES[int(res.outcome[r])], int(res.final_state[r]), float(res.final_time[r])]
        if target:
            row.append(float(res.hit_time[r]))
        rows.append(row)
    run.csv("batch.csv", header, rows)
    path = simulate_z(run.params, s["n0"], s["horizon"], s["cap"], rng=run.rng("path"))
    run.csv("path_z.csv", ["time", "value"], zip(path.times.tolist(), path.states.tolist()))
    summary = {"capped_fraction": res.capped_fraction,
               "outcomes": {v: int((res.outcome == k).sum()) for k, v in OUTCOME_NAMES.items()},
               "final_state": MCEstimate.from_samples(res.final_state).to_dict()}
    if target:
        hit = np.isfinite(res.hit_time)
        summary["hit_fraction"] = float(hit.mean())
        if hit.all():
            summary["hit_time"] = MCEstimate.from_samples(res.hit_time).to_dict()
    run.json("summary.json", summary)
    return 0


def cmd_simulate_x(run: Run, args) -> int:
    require_dual(run.params)
    s = _need(run.cfg, "dual")
    path = simulate_x(run.params, s["x0"], s["horizon"], s["dt"], rng=run.rng("path"))
    run.csv("path_x.csv", ["time", "value"], zip(path.times.tolist(), path.values.tolist()))
    summary = {"fixation": list(path.fixation) if path.fixation else None}
    if s["snapshot_times"]:
        xb = simulate_x_batch(run.params, s["x0"], s["replicates"], s["snapshot_times"], s["dt"], rng=run.rng("batch"))
        run.csv("snapshots.csv", ["replicate", "time", "value"],
                ([r, float(t), float(xb.values[i, r])] for i, t in enumerate(xb.snapshot_times)
                 for r in range(xb.values.shape[1])))
        summary["mean"] = {repr(float(t)): MCEstimate.from_samples(xb.values[i]).to_dict()
                           for i, t in enumerate(xb.snapshot_times)}
        summary["clamp_fraction"] = xb.clamp_fraction
    run.json("summary.json", summary)
    return 0


def cmd_gen_func(run: Run, args) -> int:
    g = _need(run.cfg, "gen_func")
    est = mc_generating_function(run.params, g["n0"], g["t"], g["x"], g["replicates"], g["cap"], rng=run.rng())
    run.json("gen_func.json", {"n0": g["n0"], "t": g["t"], "x": g["x"], **est.to_dict()})
    return 0


def cmd_stationary(run: Run, args) -> int:
    s = _need(run.cfg, "stationary")
    parity = s["start_parity"] or "odd"
    num = stationary_numeric(run.params, s["n_max"], start_parity=parity)
    run.csv("stationary_numeric.csv", ["k", "probability"], num.rows())
    summary = {"n_max": s["n_max"], "mean": num.mean(), "pmf_1": num.pmf(1),
               "residual": stationary_residual(num, run.params, s["n_max"])}
    if in_closed_form_family(run.params):
        dp = derive(run.params)
        cf = stationary_closed_form(dp.rho, run.params.b_dict.get(1, 0.0), run.params.c, K=s["n_max"])
        run.csv("stationary_closed_form.csv", ["k", "probability"], cf.rows())
        summary["tv_numeric_closed_form"] = num.tv(cf)
    run.json("stationary.json", summary)
    return 0


def cmd_scale(run: Run, args) -> int:
    s = _need(run.cfg, "scale")
    table = scale_function(run.params, s["panels"], s["levels"])
    run.csv("scale.csv", ["x", "S"], table.rows())
    xs = [float(x) for x in s["x"]]
    run.json("scale.json", {"fixation_probability": {repr(x): fixation_probability(run.params, x) for x in xs}})
    return 0


def cmd_fixation(run: Run, args) -> int:
    require_dual(run.params)
    s = _need(run.cfg, "dual")
    fb = fixation_batch(run.params, s["x0"], s["replicates"], s["horizon"], s["dt"], s["eps_fix"], rng=run.rng())
    run.csv("fixation.csv", ["replicate", "fixed_at", "boundary", "time"],
            ([r, int(b >= 0), int(b), float(t)] for r, (b, t) in enumerate(zip(fb.boundary, fb.time))))
    fixed = ~fb.timed_out
    summary = {"timed_out": int((~fixed).sum()), "clamp_fraction": fb.clamp_fraction,
               "p_fix_1": MCEstimate.from_samples(fb.boundary[fixed] == 1).to_dict() if fixed.any() else None,
               "time": MCEstimate.from_samples(fb.time[fixed]).to_dict() if fixed.any() else None}
    p = run.params
    if p.d == 0 and not p.pi and p.lam.is_empty:
        summary["green_time"] = fixation_time_green(p, s["x0"])
        summary["entropy_bound"] = fixation_time_bound(s["x0"], p.c, p.b_dict)
    run.json("fixation.json", summary)
    return 0


def cmd_duality(run: Run, args) -> int:
    g = _need(run.cfg, "duality")
    reps = duality_grid({"config": run.params}, g["xs"], g["ns"], g["ts"], g["replicates"], g["dt"], run.seed, g["cap"])
    run.csv("duality.csv", ["x", "n", "t", "lhs", "lhs_se", "rhs", "rhs_se", "z_score", "dt_bias", "verdict"],
            ([r.x, r.n, r.t, r.lhs.mean, r.lhs.std_err, r.rhs.mean, r.rhs.std_err, r.z_score, r.dt_bias,
              int(r.verdict)] for r in reps))
    verdict = grid_verdict(reps)
    run.json("duality.json", {"params_digest": digest(run.cfg["params"]), "seed": run.seed,
                              "cells": [r.to_dict() for r in reps], "verdict": verdict})
    print(json.dumps({"verdict": verdict, "max_z": max(r.z_score for r in reps)}))
    return 0 if verdict else EXIT_VERDICT


def cmd_probe(run: Run, args) -> int:
    name = args.probe
    blk = run.cfg.get("probes", {}).get(name) or _fill({}, PROBE_KEYS[name], f"probes.{name}")
    p, seed = run.params, run.seed
    if name == "cdi":
        rep = cdi_probe(p, blk["n_list"], blk["horizon"], blk["replicates"], seed, blk["n_max"])
    elif name == "explosion":
        rep = explosion_probe(p, blk["n0"], blk["cap_list"], blk["horizon"], blk["replicates"], seed)
    elif name == "parity":
        if blk["n0"] is None:
            raise ConfigError("probes.parity needs n0")
        rep = parity_probe(p, blk["n0"], blk["horizon"], blk["replicates"], seed, blk["n_max"])
    else:
        rep = uniform_convergence_probe(p, blk["n_pair"], blk["t_list"], blk["replicates"], seed, blk["n_max"])
    doc = rep.to_dict()
    run.json(f"probe_{name}.json", doc)
    keys = sorted({k for c in rep.cells for k in c})
    run.csv(f"probe_{name}.csv", keys, ([json.dumps(c.get(k)) if isinstance(c.get(k), list) else c.get(k)
                                           for k in keys] for c in rep.cells))
    print(json.dumps({"probe": name, "verdict": rep.verdict, "summary": rep.summary}))
    return EXIT_VERDICT if rep.verdict is False else 0


def cmd_wf(run: Run, args) -> int:
    w = _need(run.cfg, "wf_efficiency")
    path = simulate_wf_efficiency(w["N"], w["b1"], w["x0"], w["generations"], rng=run.rng("path"))
    run.csv("wf_path.csv", ["time", "value"], ((g, float(v)) for g, v in enumerate(path)))
    step = wf_efficiency_step(w["N"], w["b1"], np.full(w["replicates"], float(w["x0"])), rng=run.rng("step"))
    x = float(w["x0"])
    run.json("wf_efficiency.json", {
        "one_step_mean": MCEstimate.from_samples(step).to_dict(),
        "one_step_variance": float(step.var(ddof=1)),
        "predicted_variance": x * (1 - x) * (1 - w["b1"] * x) / w["N"],
    })
    return 0


COMMANDS = {
    "classify": cmd_classify,
    "simulate-z": cmd_simulate_z,
    "simulate-x": cmd_simulate_x,
    "gen-func": cmd_gen_func,
    "stationary": cmd_stationary,
    "scale": cmd_scale,
    "fixation": cmd_fixation,
    "duality": cmd_duality,
    "probe": cmd_probe,
    "wf-efficiency": cmd_wf,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="branchdual", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        if name == "probe":
            sp.add_argument("probe", choices=sorted(PROBE_KEYS))
        sp.add_argument("config", help="JSON config file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--replicates", type=int)
        if name == "classify":
            sp.add_argument("--start-parity", choices=["even", "odd"])
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg = load_config(args.config, args.seed, args.out, args.replicates)
        run = Run(args.command, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        status = COMMANDS[args.command](run, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        status = EXIT_PRECONDITION
    run.manifest(round(time.perf_counter() - t0, 6), status)
    return status


if __name__ == "__main__":
    sys.exit(main())
