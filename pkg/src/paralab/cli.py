"""Command line entry point.

One subcommand per experiment plus `suite` and `serve`. Runs execute in
process by default; `--server URL` turns any run into a thin client of a
running service, with artifacts still written locally.

Exit codes: 0 all checks passed, 1 an invariant failed, 2 configuration
error.
"""

import argparse
import configparser
import json
import os
import sys

from .engine import (EXPERIMENTS, ConfigError, config_from_dict, run,
                     run_suite, write_artifacts)


def _read_ini(path):
    if not os.path.exists(path):
        raise ConfigError("config file %r not found" % path)
    cp = configparser.ConfigParser()
    try:
        cp.read(path)
    except configparser.Error as e:
        raise ConfigError("cannot parse %r: %s" % (path, e))
    return {s: dict(cp[s]) for s in cp.sections()}


def _apply_overrides(d, args):
    def put(section, key, val):
        if val is not None:
            d.setdefault(section, {})[key] = str(val)

    put("scene", "kind", args.kind)
    put("scene", "n", args.n)
    put("scene", "nx", args.nx)
    put("scene", "ny", args.ny)
    put("scene", "nz", args.nz)
    put("scene", "path", args.scene_path)
    put("multiplier", "order", args.order)
    put("quadrature", "nodes_per_decade", args.nodes_per_decade)
    put("quadrature", "pad_decades", args.pad_decades)
    put("experiment", "seed", args.seed)
    put("output", "dir", args.out)
    put("output", "emit", args.emit)
    for kv in args.param or []:
        if "=" not in kv:
            raise ConfigError("--param needs key=value, got %r" % kv)
        k, v = kv.split("=", 1)
        d.setdefault("params", {})[k] = v
    return d


def _add_run_flags(sp):
    sp.add_argument("--config", help="INI config file")
    sp.add_argument("--kind", help="scene kind override")
    sp.add_argument("--n", type=int)
    sp.add_argument("--nx", type=int)
    sp.add_argument("--ny", type=int)
    sp.add_argument("--nz", type=int)
    sp.add_argument("--scene-path", help="graph scene file")
    sp.add_argument("--order", type=int, help="multiplier order")
    sp.add_argument("--nodes-per-decade", type=int)
    sp.add_argument("--pad-decades", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", help="artifact directory (default out)")
    sp.add_argument("--emit", choices=("json", "csv", "both"))
    sp.add_argument("--param", action="append", metavar="KEY=VALUE",
                    help="experiment parameter, repeatable")
    sp.add_argument("--server", help="run remotely against a service URL")


def _remote_run(url, config_dict):
    import httpx
    resp = httpx.post(url.rstrip("/") + "/run", json=config_dict,
                      timeout=600.0)
    if resp.status_code == 422:
        raise ConfigError(resp.json().get("detail", "config rejected"))
    resp.raise_for_status()
    return resp.json()


def _do_run(name, args):
    d = _read_ini(args.config) if args.config else {}
    d.setdefault("experiment", {})["name"] = name
    if name == "acceptance" and getattr(args, "criterion", None) is not None:
        d["experiment"]["criterion"] = str(args.criterion)
    d = _apply_overrides(d, args)
    outdir = d.get("output", {}).get("dir", "out")
    emit = d.get("output", {}).get("emit", "both")
    if args.server:
        report = _remote_run(args.server, d)
    else:
        cfg = config_from_dict(d)
        report = run(cfg)
    paths = write_artifacts(report, outdir, emit)
    print(report["summary"])
    for c in report["checks"]:
        status = {True: "pass", False: "FAIL", None: "  - "}[c["passed"]]
        val = "" if c["value"] is None else " = %.6g" % c["value"]
        thr = "" if c["threshold"] is None else " (threshold %.3g)" % c["threshold"]
        print("  [%s] %s%s%s" % (status, c["name"], val, thr))
    for kind, p in paths.items():
        print("  wrote %s: %s" % (kind, p))
    return 0 if report["passed"] else 1


def _do_suite(args):
    if not os.path.isdir(args.config_dir):
        raise ConfigError("suite directory %r not found" % args.config_dir)
    names = [fn for fn in os.listdir(args.config_dir) if fn.endswith(".ini")]
    if not names:
        print("warning: no .ini configs in %r, nothing to do"
              % args.config_dir, file=sys.stderr)
        return 0
    summary, reports, severity = run_suite(args.config_dir)
    outdir = args.out or "out"
    os.makedirs(outdir, exist_ok=True)
    width = max(len(r["config"]) for r in summary["rows"])
    for r in summary["rows"]:
        print("%-*s  %-12s  %s" % (width, r["config"], r["status"],
                                   r["summary"]))
    with open(os.path.join(outdir, "suite_summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(outdir, "suite_summary.csv"), "w") as fh:
        fh.write("config,experiment,status\n")
        for r in summary["rows"]:
            fh.write("%s,%s,%s\n" % (r["config"], r["experiment"],
                                     r["status"]))
    for fn, rep in reports:
        write_artifacts(rep, outdir, "both", stem=os.path.splitext(fn)[0])
    print("suite: %d configs, severity %d" % (summary["configs"], severity))
    return severity


def _do_serve(args):
    import uvicorn

    from .service import app
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="paralab",
        description="numerical laboratory for semigroup paraproducts")
    sub = parser.add_subparsers(dest="command")
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, help="run the %s experiment" % name)
        _add_run_flags(sp)
    sp = sub.add_parser("acceptance", help="run one acceptance criterion")
    _add_run_flags(sp)
    sp.add_argument("--criterion", type=int, help="criterion number 1..10")
    sp = sub.add_parser("suite", help="run every config in a directory")
    sp.add_argument("config_dir")
    sp.add_argument("--out", help="artifact directory")
    sp = sub.add_parser("serve", help="start the HTTP service")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    try:
        if args.command == "suite":
            return _do_suite(args)
        if args.command == "serve":
            return _do_serve(args)
        return _do_run(args.command, args)
    except ConfigError as e:
        print("config error: %s" % e, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
