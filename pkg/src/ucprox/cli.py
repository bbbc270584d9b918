"""Batch runner: ``ucprox run|tabulate|list-checks|version``.

Configs are TOML.  Top-level keys ``output``, ``workers`` and ``seed``; a
``[defaults]`` table merged into every ``[[check]]`` entry; an optional
``[tabulate]`` table for the modulus grids.  See README for the schema.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import __version__, moduli
from .errors import ConfigError, InputError
from .spaces import NormedSpace
from .verify import CHECKS, CheckConfig, PropertyCheck, parse_young, run_check, write_margins, write_report

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

CHECK_KEYS = {
    "name", "type", "p", "dimension", "young", "objective", "center", "radius",
    "lambdas", "eps", "samples", "seed", "tol", "prox", "formulas",
}
TOP_KEYS = {"output", "workers", "seed", "defaults", "check", "tabulate"}
TABULATE_DEFAULTS = {
    "p": [2.0, 4.0],
    "youngs": ["exp", "cosh"],
    "R": [2.0, 10.0],
    "eps": [0.1, 0.5, 1.0, 2.0],
    "lambdas": [1.0, 0.5, 0.1],
}


def load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", field="<file>") from exc
    except tomllib.TOMLDecodeError as exc:
        # tomli puts "(at line N, column M)" in the message
        raise ConfigError(str(exc), field="<syntax>") from exc
    extra = set(raw) - TOP_KEYS
    if extra:
        raise ConfigError(f"unknown top-level keys {sorted(extra)}", field=sorted(extra)[0])
    workers = raw.get("workers", os.cpu_count() or 1)
    if not isinstance(workers, int) or workers < 1:
        raise ConfigError("workers must be a positive integer", field="workers")
    raw["workers"] = workers
    raw.setdefault("output", "reports")
    raw.setdefault("seed", 0)
    return raw


def build_checks(raw: dict) -> list[CheckConfig]:
    defaults = raw.get("defaults", {})
    entries = raw.get("check", [])
    if not entries:
        raise ConfigError("config lists no checks", field="check")
    out, seen = [], set()
    for i, entry in enumerate(entries):
        where = f"check[{i}]"
        merged = {"seed": raw["seed"], **defaults, **entry}
        extra = set(merged) - CHECK_KEYS
        if extra:
            raise ConfigError(f"unknown keys {sorted(extra)}", field=f"{where}.{sorted(extra)[0]}")
        if "type" not in merged:
            raise ConfigError("missing check type", field=f"{where}.type")
        name = merged.pop("name", merged["type"])
        if name in seen:
            raise ConfigError(f"duplicate check name {name!r}", field=f"{where}.name")
        seen.add(name)
        kind = merged.pop("type")
        try:
            out.append(CheckConfig(name=name, check=kind, **merged))
        except ConfigError as exc:
            raise ConfigError(exc.message, field=f"{where}.{exc.field}" if exc.field else where) from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), field=where) from exc
    return out


def _guarded(cfg: CheckConfig) -> PropertyCheck:
    try:
        return run_check(cfg)
    except Exception as exc:  # a crashing check is a failed check, not a crashed run
        return PropertyCheck(cfg.name, cfg.to_json(), "fail", float("-inf"), {}, 0,
                             notes=[f"aborted: {type(exc).__name__}: {exc}"])


def cmd_run(args) -> int:
    try:
        raw = load_config(args.config)
        checks = build_checks(raw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outdir = args.output or raw["output"]
    os.makedirs(outdir, exist_ok=True)
    workers = args.workers or raw["workers"]
    if workers > 1 and len(checks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(checks))) as pool:
            results = list(pool.map(_guarded, checks))
    else:
        results = [_guarded(c) for c in checks]
    for res in results:
        write_report(res, os.path.join(outdir, f"{res.name}.json"))
        print(f"{res.verdict.upper():4s} {res.name}  samples={res.samples} min_margin={res.min_margin:.3e}"
              + (f" solver_failures={res.solver_failures}" if res.solver_failures else ""))
    write_margins(results, os.path.join(outdir, "margins.csv"))
    return EXIT_OK if all(r.verdict == "pass" for r in results) else EXIT_FAIL


def _grid(table, key):
    vals = table.get(key, TABULATE_DEFAULTS[key])
    if not isinstance(vals, list) or not vals:
        raise ConfigError("grid must be a nonempty list", field=f"tabulate.{key}")
    return vals


def tabulate_rows(table: dict) -> list[list]:
    """Rows ``(formula, p, young, R, eps, lam, delta)``; ``lam`` is empty where it does not apply."""
    ps = [float(v) for v in _grid(table, "p")]
    youngs = [parse_young(v) for v in _grid(table, "youngs")]
    radii = [float(v) for v in _grid(table, "R")]
    eps_grid = sorted(float(v) for v in _grid(table, "eps"))
    lams = sorted((float(v) for v in _grid(table, "lambdas")), reverse=True)
    if eps_grid[0] <= 0 or any(not 0 < v <= 1 for v in lams):
        raise ConfigError("eps must be positive and lambdas in (0, 1]", field="tabulate")
    rows = []
    for p in ps:
        space = NormedSpace(2, p)
        sm = space.modulus
        A = space.power_type_constant
        pn = moduli.power_norm_modulus(A, p)
        for e in eps_grid:
            rows.append(["delta_X", p, "", "", e, "", sm(e)])
            rows.append(["power_norm_modulus", p, "", "", e, "", pn(e)])
        for F in youngs:
            for R in radii:
                ball = moduli.composed_modulus(sm, F, R)
                for e in eps_grid:
                    rows.append(["compose_modulus", p, F.label, R, e, "", ball(e)])
                    for lam in lams:
                        rows.append(["prox_uc_modulus", p, F.label, R, e, lam,
                                     moduli.prox_uc_modulus(F, sm, R, e, ball=ball)])
                    for lam in lams:
                        rows.append(["prox_uc_modulus_alt", p, F.label, R, e, lam,
                                     moduli.prox_uc_modulus_alt(F, sm, R, lam, e)])
    return rows


def write_moduli(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["formula", "p", "young", "R", "eps", "lambda", "delta"])
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def cmd_tabulate(args) -> int:
    try:
        raw = load_config(args.config)
        rows = tabulate_rows(raw.get("tabulate", {}))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InputError as exc:
        print(f"config error: tabulate: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outdir = args.output or raw["output"]
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, "moduli.csv")
    write_moduli(rows, path)
    print(f"wrote {len(rows)} rows to {path}")
    return EXIT_OK


def cmd_list(args) -> int:
    for name in sorted(CHECKS):
        doc = (CHECKS[name].__doc__ or "").strip().splitlines()
        print(f"{name:26s} {doc[0] if doc else ''}")
    return EXIT_OK


def cmd_version(args) -> int:
    print(f"ucprox {__version__}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ucprox", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute every check in a config")
    run.add_argument("config")
    run.add_argument("-o", "--output", help="override the output directory")
    run.add_argument("-j", "--workers", type=int, help="override the worker count")
    run.set_defaults(func=cmd_run)
    tab = sub.add_parser("tabulate", help="write moduli.csv over the configured grids")
    tab.add_argument("config")
    tab.add_argument("-o", "--output", help="override the output directory")
    tab.set_defaults(func=cmd_tabulate)
    sub.add_parser("list-checks", help="list available check types").set_defaults(func=cmd_list)
    sub.add_parser("version", help="print the package version").set_defaults(func=cmd_version)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
