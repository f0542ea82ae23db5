"""Command-line entry point: solve, evolve, bound, filter, sweep, validate."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import bounds, harness
from .adiabatic import ideal_evolution_and_error
from .filtering import make_plan, stopband_max, write_plan_csv, write_response_csv
from .harness import ConfigError, RunConfig
from .schedule import Schedule, write_profile_csv
from .walk import WalkSequence

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _floats(text):
    return [float(x) for x in text.split(",") if x]


def _ints(text):
    return [int(x) for x in text.split(",") if x]


def _common(p):
    p.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    p.add_argument("--N", type=int)
    p.add_argument("--kappa", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--T", help="positive even integer or 'auto'")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--variant")
    p.add_argument("--gap-model", dest="gap_model")
    p.add_argument("--c-mode", dest="c_mode")
    p.add_argument("--walk", dest="walk_kind")
    p.add_argument("--seed", type=int)
    p.add_argument("--instance", dest="instance_path")
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dasolve", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, text in [("solve", "adiabatic evolution then filtering; prints a JSON report"),
                       ("evolve", "actual vs ideal evolution; writes a per-step trace CSV"),
                       ("bound", "full and simplified error bounds for a schedule; writes a profile CSV"),
                       ("filter", "filter plan; writes weight and response CSVs")]:
        _common(sub.add_parser(name, help=text))
    sw = sub.add_parser("sweep", help="bound sweep CSV over a (kappa, p, T) grid")
    sw.add_argument("--kappas", type=_floats, required=True)
    sw.add_argument("--ps", type=_floats, default=[1.5])
    sw.add_argument("--Ts", type=_ints, required=True)
    sw.add_argument("--gap-model", dest="gap_model", default="arcsin-adjusted")
    sw.add_argument("--c-mode", dest="c_mode", default="exact")
    sw.add_argument("--variant", default="general")
    sw.add_argument("--measure", action="store_true", help="also run measured-error evolutions")
    sw.add_argument("--N", type=int, default=2)
    sw.add_argument("--seed", type=int, default=0)
    sw.add_argument("--walk", dest="walk_kind", default="reference")
    sw.add_argument("--workers", type=int, default=1)
    sw.add_argument("--out")
    va = sub.add_parser("validate", help="run property suites; exit 1 on any failure")
    va.add_argument("--suite", default="all", choices=harness.SUITES + ("all",))
    return ap


def _config(args) -> RunConfig:
    d = {}
    if getattr(args, "config", None):
        try:
            d = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(str(exc)) from exc
    for key in ("N", "kappa", "p", "T", "epsilon", "variant", "gap_model", "c_mode",
                "walk_kind", "seed", "instance_path", "out"):
        v = getattr(args, key, None)
        if v is not None:
            d[key] = v
    if isinstance(d.get("T"), str) and d["T"] != "auto":
        try:
            d["T"] = int(d["T"])
        except ValueError as exc:
            raise ConfigError(f"T must be an integer or 'auto', got {d['T']!r}") from exc
    try:
        return RunConfig.from_dict(d)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _fixed_T(cfg: RunConfig) -> int:
    return harness.select_T(cfg)[0] if cfg.T == "auto" else int(cfg.T)


def _emit(obj, out=None):
    text = json.dumps(obj, indent=1, default=float)
    if out:
        Path(out).write_text(text)
    print(text)


def cmd_solve(args) -> int:
    cfg = _config(args)
    rep = harness.solve(cfg)
    d = rep.to_dict()
    if cfg.out:
        Path(cfg.out).write_text(json.dumps(d, indent=1))
    d.pop("final_state")
    print(json.dumps(d, indent=1, default=float))
    return EXIT_OK if rep.succeeded else EXIT_FAIL


def cmd_evolve(args) -> int:
    cfg = _config(args)
    inst = cfg.instance()
    sch = Schedule(cfg.p, inst.kappa, _fixed_T(cfg), cfg.gap_model)
    run = ideal_evolution_and_error(WalkSequence(inst, sch, cfg.walk_kind), trace_path=cfg.out)
    c2 = run.c2
    b1, b2 = bounds.measured_bounds(run.c1, c2, run.p_spread, run.q_dist, sch.T)
    _emit({"T": sch.T, "error": run.error, "bound_full_measured": b1.total,
           "bound_simplified_measured": b2.total, "min_gap": float(np.min(run.q_dist - run.p_spread))})
    return EXIT_OK


def cmd_bound(args) -> int:
    cfg = _config(args)
    sch = Schedule(cfg.p, cfg.kappa, _fixed_T(cfg), cfg.gap_model)
    b1, b2 = bounds.schedule_bounds(sch, cfg.c_mode)
    if cfg.out:
        write_profile_csv(sch, cfg.out, cfg.c_mode)
    asym = bounds.asymptotic_constants(cfg.kappa, sch.T, cfg.p, cfg.variant)
    _emit({"T": sch.T, "full": asdict(b1), "simplified": asdict(b2),
           "asymptotic": {k: v for k, v in asym.items() if k != "components"}})
    return EXIT_OK


def cmd_filter(args) -> int:
    cfg = _config(args)
    plan = make_plan(cfg.kappa, cfg.epsilon)
    if cfg.out:
        write_plan_csv(plan, f"{cfg.out}_weights.csv")
        write_response_csv(plan, f"{cfg.out}_response.csv")
    _emit({"ell": plan.ell, "beta": plan.beta, "epsilon": plan.epsilon,
           "stopband_max": stopband_max(plan, cfg.kappa), "raw_scale": plan.raw_scale})
    return EXIT_OK


def cmd_sweep(args) -> int:
    scfg = harness.SweepConfig(kappas=args.kappas, ps=args.ps, Ts=args.Ts, gap_model=args.gap_model,
                               c_mode=args.c_mode, variant=args.variant, measure=args.measure,
                               N=args.N, seed=args.seed, walk_kind=args.walk_kind,
                               workers=args.workers)
    rows = harness.sweep(scfg, args.out)
    if not args.out:
        print(",".join(harness.SWEEP_RESULT_COLUMNS))
        for r in rows:
            print(",".join(str(x) for x in r))
    return EXIT_OK


def cmd_validate(args) -> int:
    res = harness.validate(args.suite)
    _emit(res)
    return EXIT_OK if all(v["passed"] for v in res.values()) else EXIT_FAIL


COMMANDS = {"solve": cmd_solve, "evolve": cmd_evolve, "bound": cmd_bound, "filter": cmd_filter,
            "sweep": cmd_sweep, "validate": cmd_validate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
