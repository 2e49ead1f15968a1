"""Command line entry point.

Exit codes: 0 ok, 2 configuration error, 3 numerical abort.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import experiments as ex
from .postproc import write_field_csv
from .report import (time_tag, write_manifest, write_probability_csv, write_rows)
from .statevector import NumericalAbort, State, dump_statevector
from .variants import underlying_function

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
METRIC_COLUMNS = ("series", "kind", "value", "t", "dtau", "N", "variant", "reference")
COMPARE_COLUMNS = ("method", "t", "success_prob", "log10_success", "l2_raw", "mse")


def _load(args) -> cfgmod.RunConfig:
    if args.config and args.preset:
        raise cfgmod.ConfigError("give either --config or --preset, not both")
    if args.preset:
        cfg = cfgmod.preset(args.preset)
    elif args.config:
        cfg = cfgmod.load(args.config)
    else:
        raise cfgmod.ConfigError("--config or --preset is required")
    if getattr(args, "reference", None):
        cfg = cfgmod.set_field(cfg, "reference.kind", args.reference)
    return cfg


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _solve_into(cfg: cfgmod.RunConfig, out: Path):
    setup = ex.build_setup(cfg)
    result = ex.run_setup(setup)
    N_f = cfg.output["N_f"]
    write_probability_csv(out / "probability.csv", result.times, result.log_success, result.scales)
    for t, fld in ex.solution_fields(setup, result, N_f).items():
        write_field_csv(out / f"solution_t{time_tag(t)}.csv", fld, setup.spec.L)
    metrics = ex.error_metrics(setup, result, N_f) if cfg.reference["kind"] != "none" else []
    write_rows(out / "metrics.csv", (m.row() for m in metrics), METRIC_COLUMNS)
    if cfg.output["dump_states"]:
        for snap in result.snapshots:
            st = State(setup.spec, n_anc=0)
            st.amps = snap.amps.copy()
            dump_statevector(st, out / f"state_t{time_tag(snap.t)}.psv")
    summary = {"success_prob": result.success_prob, "log10_success": result.log10_success,
               "steps": len(result.times) - 1, "notes": result.notes}
    write_manifest(out, "solve", cfg.to_dict(), metrics, {"summary": summary})
    return result, metrics


def cmd_solve(args) -> int:
    cfg = _load(args)
    result, _ = _solve_into(cfg, _out(args))
    print(f"success probability {result.success_prob:.6g} (log10 {result.log10_success:.4f})")
    return EXIT_OK


def _parse_sweep(text: str):
    field, sep, values = text.partition("=")
    if not sep or not values:
        raise cfgmod.ConfigError(f"--sweep must look like block.key=v1,v2,..., got {text!r}")
    parsed = []
    for v in values.split(","):
        try:
            parsed.append(json.loads(v))
        except json.JSONDecodeError:
            parsed.append(v)
    return field, parsed


def cmd_sweep(args) -> int:
    cfg = _load(args)
    field, values = _parse_sweep(args.sweep)
    configs = [cfgmod.set_field(cfg, field, v) for v in values]
    out = _out(args)

    def one(item):
        i, c = item
        sub = out / f"run_{i:03d}"
        sub.mkdir(exist_ok=True)
        return _solve_into(c, sub)

    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        results = list(pool.map(one, enumerate(configs)))
    rows = []
    for (i, v), (res, metrics) in zip(enumerate(values), results):
        base = {"run": f"run_{i:03d}", "field": field, "value": json.dumps(v),
                "success_prob": repr(res.success_prob), "log10_success": repr(res.log10_success)}
        if not metrics:
            rows.append(dict(base, kind="", t="", metric=""))
        for m in metrics:
            rows.append(dict(base, kind=m.kind, t=m.row()["t"], metric=m.row()["value"]))
    write_rows(out / "metrics.csv", rows,
               ("run", "field", "value", "success_prob", "log10_success", "kind", "t", "metric"))
    write_manifest(out, "sweep", cfg.to_dict(), extra={"sweep": {"field": field, "values": values}})
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _load(args)
    out = _out(args)
    methods = args.methods.split(",") if args.methods else ex.COMPARE_METHODS
    bad = set(methods) - set(ex.COMPARE_METHODS)
    if bad:
        raise cfgmod.ConfigError(f"unknown methods {sorted(bad)}")
    rows = ex.compare(cfg, methods)
    write_rows(out / "metrics.csv", (r.row() for r in rows), COMPARE_COLUMNS)
    write_manifest(out, "compare", cfg.to_dict(), extra={"methods": list(methods)})
    for r in rows:
        if r.t == cfg.time["T"] and r.log10_success is not None:
            print(f"{r.method:10s} P={r.success_prob:.6g} (log10 {r.log10_success:.3f})")
    return EXIT_OK


def cmd_decompose(args) -> int:
    cfg = _load(args)
    out = _out(args)
    dtaus = [float(x) for x in args.dtaus.split(",")]
    ns = [int(x) for x in args.ns.split(",")] if args.ns else None
    series = ex.error_decomposition(cfg, dtaus, ns, args.t)
    metrics = [m for s in series.values() for m in s]
    write_rows(out / "metrics.csv", (m.row() for m in metrics), METRIC_COLUMNS)
    write_manifest(out, "decompose", cfg.to_dict(), metrics)
    for m in metrics:
        if m.kind == "slope":
            print(f"{m.series}: slope {m.value:.4f}")
    return EXIT_OK


def cmd_system(args) -> int:
    cfg = _load(args)
    if cfg.system is None:
        raise cfgmod.ConfigError("system needs a 'system' block", None, cfg.source)
    out = _out(args)
    traj = ex.run_system(cfg)
    write_probability_csv(out / "probability.csv", traj.times, traj.log_success, traj.scales)
    L = cfg.system["L"]
    n = cfg.system["n"]
    for t, fields in traj.fields.items():
        for j, f in enumerate(fields, start=1):
            write_field_csv(out / f"solution_t{time_tag(t)}_u{j}.csv",
                            f.reshape(2 ** n, 2 ** n), L)
    write_rows(out / "metrics.csv", [], METRIC_COLUMNS)
    summary = {"success_prob": traj.success_prob,
               "log10_success": float(traj.log_success[-1] / np.log(10.0))}
    write_manifest(out, "system", cfg.to_dict(), extra={"summary": summary})
    print(f"{cfg.system['model']}: success probability {traj.success_prob:.4g}")
    return EXIT_OK


def cmd_funcs(args) -> int:
    if args.points < 2 or not args.ymax > 0:
        raise cfgmod.ConfigError("--points must be >= 2 and --ymax positive")
    out = _out(args)
    y = np.linspace(0.0, args.ymax, args.points)
    cols = {"y": y}
    for name in ("exa", "hhl", "aap", "aap2", "aap4"):
        cols[name] = underlying_function(name, y)
    cols[f"oap_{args.m0:g}"] = underlying_function("oap", y, args.m0)
    rows = [{k: repr(float(v[i])) for k, v in cols.items()} for i in range(args.points)]
    write_rows(out / "funcs.csv", rows, list(cols))
    write_manifest(out, "funcs", {"ymax": args.ymax, "points": args.points, "m0": args.m0})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pitepde", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, reference=True):
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--preset", choices=sorted(cfgmod.PRESETS))
        sp.add_argument("--out", default="out", help="output directory")
        if reference:
            sp.add_argument("--reference", choices=cfgmod.REFERENCE_KINDS)

    sp = sub.add_parser("solve", help="run one configuration")
    common(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("sweep", help="vary one field over a list")
    common(sp)
    sp.add_argument("--sweep", required=True, metavar="FIELD=v1,v2,...")
    sp.add_argument("--threads", type=int, default=1)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("compare", help="all methods on one equation")
    common(sp, reference=False)
    sp.add_argument("--methods", help="comma list, default all")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("decompose", help="discretization / Trotter / approximation errors")
    common(sp, reference=False)
    sp.add_argument("--dtaus", default="0.002,0.001,0.0005,0.00025,0.000125")
    sp.add_argument("--ns", help="grid exponents for the discretization series")
    sp.add_argument("--t", type=float, help="evaluation time, default T")
    sp.set_defaults(func=cmd_decompose)

    sp = sub.add_parser("system", help="coupled two-field models")
    common(sp, reference=False)
    sp.set_defaults(func=cmd_system)

    sp = sub.add_parser("funcs", help="tabulate the per-eigenvalue maps")
    sp.add_argument("--ymax", type=float, default=1.0)
    sp.add_argument("--points", type=int, default=200)
    sp.add_argument("--m0", type=float, default=0.9)
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=cmd_funcs)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except cfgmod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
