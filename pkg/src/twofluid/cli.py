"""Command-line entry point: ``twofluid run | converge | check``."""
from __future__ import annotations

import argparse
import ast
import configparser
import dataclasses
import logging
import os
import sys

import numpy as np

from .scenarios import SCENARIOS, ScenarioConfig, scenario_config
from .scheme import DragModel, StepFailure

log = logging.getLogger("twofluid")

# config keys other than the eos.* / scheme.* passthroughs
PLAIN_KEYS = {
    "scenario": "scenario",
    "mesh.nx": "nx",
    "mesh.ny": "ny",
    "time.dt": "dt",
    "time.t_final": "t_final",
    "output.dir": "out_dir",
    "output.every": "output_every",
    "init.forcing": "forcing",
}


def _value(text: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def read_config(path) -> dict:
    """Flat ``key = value`` file with dotted section prefixes; ``#`` comments."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_string("[root]\n" + fh.read(), source=str(path))
    except OSError as exc:
        raise SystemExit(f"cannot read config {path}: {exc}")
    except configparser.Error as exc:
        raise SystemExit(f"malformed config {path}: {exc}")
    return {k: _value(v) for k, v in parser["root"].items()}


def config_from_mapping(values: dict) -> ScenarioConfig:
    values = dict(values)
    if "mesh.nx" in values and "mesh.ny" not in values:
        values["mesh.ny"] = values["mesh.nx"]
    name = values.pop("scenario", None)
    if name is None:
        raise SystemExit("no scenario given (use --scenario or 'scenario = ...' in the config)")
    base = scenario_config(name)
    kw, eos_kw, phys_kw, scheme_kw = {}, {}, {}, dict(base.scheme)
    rho0 = list(base.rho0)
    for key, val in values.items():
        if val is None:
            continue
        if key in PLAIN_KEYS:
            kw[PLAIN_KEYS[key]] = val
        elif key.startswith("eos."):
            eos_kw[key[4:]] = float(val)
        elif key == "phys.C_D":
            phys_kw["drag"] = DragModel(float(val))
        elif key.startswith("phys."):
            phys_kw[key[5:]] = float(val)
        elif key.startswith("scheme."):
            scheme_kw[key[7:]] = val
        elif key == "init.rho0_g":
            rho0[0] = float(val)
        elif key == "init.rho0_l":
            rho0[1] = float(val)
        else:
            raise SystemExit(f"unknown config key {key!r}")
    try:
        if eos_kw:
            kw["eos"] = dataclasses.replace(base.eos, **eos_kw)
        if phys_kw:
            kw["phys"] = dataclasses.replace(base.phys, **phys_kw)
        return base.with_(rho0=tuple(rho0), scheme=scheme_kw, **kw)
    except (TypeError, ValueError) as exc:
        raise SystemExit(f"invalid configuration: {exc}")


def _parse_dts(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad dt list {text!r}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="twofluid", description="Compressible two-fluid projection solver")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario")
    r.add_argument("--scenario", choices=SCENARIOS)
    r.add_argument("--nx", type=int)
    r.add_argument("--dt", type=float)
    r.add_argument("--tfinal", type=float)
    r.add_argument("--out")
    r.add_argument("--every", type=int, help="VTK cadence in steps (0: final state only)")
    r.add_argument("--config", help="key = value file; flags override it")

    c = sub.add_parser("converge", help="temporal convergence study")
    c.add_argument("--scenario", choices=SCENARIOS, required=True)
    c.add_argument("--dts", type=_parse_dts, required=True, help="comma separated list")
    c.add_argument("--ref-dt", type=float, required=True)
    c.add_argument("--nx", type=int)
    c.add_argument("--tfinal", type=float)
    c.add_argument("--out", default=".", help="directory for convergence.csv")
    c.add_argument("--config")

    k = sub.add_parser("check", help="run an acceptance suite")
    k.add_argument("--suite", required=True, choices=("invariants", "energy", "closure", "convergence", "all"))
    return ap


def _merged(args) -> ScenarioConfig:
    values = read_config(args.config) if getattr(args, "config", None) else {}
    flags = {
        "scenario": args.scenario,
        "mesh.nx": args.nx,
        "time.dt": getattr(args, "dt", None),
        "time.t_final": args.tfinal,
        "output.dir": args.out if args.command == "run" else None,
        "output.every": getattr(args, "every", None),
    }
    if flags["mesh.nx"] is not None:
        values.pop("mesh.ny", None)  # --nx gives a square mesh
    values.update({k: v for k, v in flags.items() if v is not None})
    return config_from_mapping(values)


def cmd_run(args) -> int:
    from .study import run

    cfg = _merged(args)
    log.info("running %s: %dx%d, dt=%g, T=%g", cfg.scenario, cfg.nx, cfg.ny, cfg.dt, cfg.t_final)
    s = run(cfg)
    print(f"steps {s.steps}  wall {s.wall_time:.2f} s  max defect {s.max_defect:.3e} E0  "
          f"telescoped {s.telescoped:.3e} E0  mass drift {np.max(np.abs(s.mass_drift)):.3e}  "
          f"min alpha {s.min_alpha:.3e}")
    if not s.ok:
        print(f"run failed: {s.error}", file=sys.stderr)
        return 2
    return 0


def cmd_converge(args) -> int:
    from .study import convergence_study

    cfg = _merged(args)
    try:
        cs = convergence_study(cfg, args.dts, args.ref_dt)
    except (StepFailure, ValueError) as exc:
        print(f"convergence study failed: {exc}", file=sys.stderr)
        return 2
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "convergence.csv")
    cs.write_csv(path)
    for v, order in cs.orders.items():
        errs = " ".join(f"{e:.3e}" for e in cs.errors[v])
        print(f"{v:8s} order {order:5.2f}  errors {errs}")
    print(f"wrote {path}")
    return 0


def cmd_check(args) -> int:
    from .checks import run_suite

    results = run_suite(args.suite)
    return 0 if all(r.passed for r in results) else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    return {"run": cmd_run, "converge": cmd_converge, "check": cmd_check}[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
