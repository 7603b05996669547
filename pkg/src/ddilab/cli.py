"""Command-line front end: ``ddilab <subcommand> [options]``.

Exit codes: 0 success, 1 computation error, 2 usage or configuration error.
Outputs are assembled in a scratch directory next to the target and moved into
place only on success.
"""
from __future__ import annotations

import argparse
import itertools
import os
import shutil
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict

import numpy as np

from . import __version__
from .errors import DDILabError, ParameterError, UsageError
from .io import write_csv, write_kv
from .model import PARAM_KEYS, ModelParams

SUBCOMMANDS = ("steady", "ddi", "kinetics", "pattern", "spectrum", "simulate", "sweep")

MODULE_OF = {"steady": "model_core", "ddi": "model_core", "kinetics": "kinetics",
             "pattern": "pattern", "spectrum": "spectral", "simulate": "pde_sim"}

# Namespaced module options and their defaults; the default fixes the type.
OPTIONS: dict[str, object] = {
    "kinetics.u0": 0.5,
    "kinetics.v0": 0.3,
    "kinetics.w0": 1.0,
    "kinetics.t_end": 50.0,
    "kinetics.rel_tol": 1e-10,
    "pattern.modes": 1,
    "pattern.orientation": "increasing",
    "pattern.n_grid": 1024,
    "spectrum.pattern": "minus",
    "spectrum.modes": 0,
    "spectrum.orientation": "increasing",
    "spectrum.n_min": 1,
    "spectrum.n_max": 10,
    "spectrum.N": 2048,
    "sim.n_grid": 512,
    "sim.dt": 0.0,
    "sim.t_end": 10.0,
    "sim.scheme": "imex2",
    "sim.record_every": 100,
    "sim.init": "minus",
    "sim.modes": 0,
    "sim.amplitude": 1e-3,
    "sim.probe": 2,
    "sim.noise": 0.0,
}


def _coerce(key: str, value: str, where: str):
    default = OPTIONS[key]
    try:
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
    except ValueError:
        raise UsageError(f"{where}bad value for {key}: {value!r}") from None
    return value


def parse_config_text(text: str, source="config"):
    """Split flat ``key=value`` text into model parameters and module options."""
    param_lines, opts, seen = [], {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            param_lines.append("")
            continue
        if "=" not in line:
            raise UsageError(f"{source} line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in seen:
            raise UsageError(f"{source} line {lineno}: duplicate key {key!r} (first on line {seen[key]})")
        seen[key] = lineno
        if key in PARAM_KEYS:
            param_lines.append(line)
        elif key in OPTIONS:
            opts[key] = _coerce(key, value, f"{source} line {lineno}: ")
            param_lines.append("")
        else:
            raise UsageError(f"{source} line {lineno}: unknown key {key!r}")
    try:
        p = ModelParams.from_text("\n".join(param_lines))
    except ParameterError as exc:
        raise UsageError(f"{source}: {exc}") from None
    return p, opts


def load_config(path):
    """Read a config file; without a path the reference parameter set is used."""
    if path is None:
        return ModelParams(), {}
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text, source=str(path))


def apply_overrides(p: ModelParams, opts: dict, sets):
    opts = dict(opts)
    changes = {}
    for item in sets or ():
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        if key in PARAM_KEYS:
            try:
                changes[key] = float(value)
            except ValueError:
                raise UsageError(f"--set: bad value for {key}: {value!r}") from None
        elif key in OPTIONS:
            opts[key] = _coerce(key, value, "--set: ")
        else:
            raise UsageError(f"--set: unknown key {key!r}")
    try:
        p = p.replace(**changes) if changes else p
    except ParameterError as exc:
        raise UsageError(f"--set: {exc}") from None
    full = dict(OPTIONS)
    full.update(opts)
    return p, full


# -- subcommands ---------------------------------------------------------------


def cmd_steady(p, o, out, args):
    from .model import constant_states, relative_residual

    rows = [(s.kind, s.u, s.v, s.w, relative_residual(p, s)) for s in constant_states(p)]
    write_csv(os.path.join(out, "steady.csv"), ["kind", "u", "v", "w", "residual"], rows)


def cmd_ddi(p, o, out, args):
    from .model import a12_block, a12_eigenvalues, ddi_check

    r = ddi_check(p)
    l0, lneg = a12_eigenvalues(p)
    items = {"cond1": r.cond1, "cond2": r.cond2, "cond3": r.cond3, "cond4": r.cond4,
             "ddi": r.ddi, "assumptions_met": r.assumptions_met,
             "det_a12": float(np.linalg.det(a12_block(p))), "lambda0": l0, "lambda_neg": lneg}
    for i in range(3):
        for j in range(3):
            items[f"jacobian_{i + 1}{j + 1}"] = float(r.jacobian[i, j])
    write_kv(os.path.join(out, "ddi.txt"), items)


def cmd_kinetics(p, o, out, args):
    from .kinetics import KineticState, classify_equilibria, integrate_kinetics

    init = KineticState(o["kinetics.u0"], o["kinetics.v0"], o["kinetics.w0"], 0.0)
    traj = integrate_kinetics(p, init, o["kinetics.t_end"], rel_tol=o["kinetics.rel_tol"])
    traj.to_csv(os.path.join(out, "trajectory.csv"))
    rows = []
    for rep in classify_equilibria(p):
        ev = np.asarray(rep.eigenvalues, dtype=complex)
        rows.append([rep.name, *rep.location, *ev.real, *ev.imag, rep.verdict])
    write_csv(os.path.join(out, "equilibria.csv"),
              ["name", "u", "X", "Y", "re1", "re2", "re3", "im1", "im2", "im3", "verdict"], rows)


def cmd_pattern(p, o, out, args):
    from .pattern import build_discontinuous_pattern, build_pattern, parse_plan, verify_pattern

    if args.gamma is not None:
        p = p.replace(gamma=args.gamma)
    if args.discontinuous:
        try:
            with open(args.discontinuous) as fh:
                plan = parse_plan(fh.read())
        except OSError as exc:
            raise UsageError(f"cannot read plan {args.discontinuous}: {exc.strerror}") from None
        pat = build_discontinuous_pattern(p, plan, o["pattern.n_grid"])
    else:
        k = args.modes if args.modes is not None else o["pattern.modes"]
        pat = build_pattern(p, k, o["pattern.orientation"], o["pattern.n_grid"])
    res = verify_pattern(p, pat)
    pat.to_csv(os.path.join(out, "pattern.csv"))
    write_kv(os.path.join(out, "verify.txt"), asdict(res))
    pat.write_metadata(os.path.join(out, "metadata.json"))


def cmd_spectrum(p, o, out, args):
    from .pattern import build_pattern, constant_pattern
    from .spectral import find_unstable_eigenvalues

    k = o["spectrum.modes"]
    if k == 0:
        pat = constant_pattern(p, o["spectrum.pattern"])
    else:
        pat = build_pattern(p, k, o["spectrum.orientation"])
    n_range = range(o["spectrum.n_min"], o["spectrum.n_max"] + 1)
    rep = find_unstable_eigenvalues(p, pat, n_range, N=o["spectrum.N"])
    rep.to_csv(os.path.join(out, "spectrum.csv"))


def initial_fields(p, o, seed):
    """Base state (reference for deviations) and the perturbed initial state."""
    from .pattern import build_pattern, constant_pattern
    from .pde import SimState, grid

    n = o["sim.n_grid"]
    x = grid(n)
    k = o["sim.modes"]
    pat = (constant_pattern(p, o["sim.init"]) if k == 0
           else build_pattern(p, k, "increasing"))
    U, V, W = pat.fields(x, p)
    ref = SimState(0.0, U, V, W)
    prof = o["sim.amplitude"] * np.cos(o["sim.probe"] * np.pi * x)
    rng = np.random.default_rng(seed)
    fields = []
    for f in (U, V, W):
        noise = o["sim.noise"] * rng.uniform(-1.0, 1.0, n)
        fields.append(np.maximum(f + prof + noise, 0.0))
    return ref, SimState(0.0, *fields)


def cmd_simulate(p, o, out, args):
    from .pde import SimConfig, mass_diagnostics, run

    cfg = SimConfig(n_grid=o["sim.n_grid"], dt=o["sim.dt"] or None, t_end=o["sim.t_end"],
                    scheme=o["sim.scheme"], record_every=o["sim.record_every"], seed=args.seed)
    ref, init = initial_fields(p, o, args.seed)
    _, diag = run(p, init, cfg, reference=ref, out_dir=out)
    m = mass_diagnostics(p, diag)
    write_kv(os.path.join(out, "mass_report.txt"),
             {**{k: v for k, v in asdict(m).items()}, "ok_u": m.ok_u, "ok_v": m.ok_v, "ok_w": m.ok_w})


HANDLERS = {"steady": cmd_steady, "ddi": cmd_ddi, "kinetics": cmd_kinetics, "pattern": cmd_pattern,
            "spectrum": cmd_spectrum, "simulate": cmd_simulate}


# -- plumbing ------------------------------------------------------------------


def _out_dir(args) -> str:
    if args.out:
        return args.out
    root = os.environ.get("DDILAB_OUT", "ddilab_out")
    return os.path.join(root, args.command)


def _commit(scratch: str, target: str):
    if os.path.isdir(target):
        shutil.rmtree(target)
    os.replace(scratch, target)


def execute(command: str, p: ModelParams, opts: dict, target: str, args) -> None:
    """Run one computational subcommand into ``target`` atomically."""
    parent = os.path.dirname(os.path.abspath(target)) or "."
    os.makedirs(parent, exist_ok=True)
    scratch = tempfile.mkdtemp(prefix=".ddilab-", dir=parent)
    try:
        write_kv(os.path.join(scratch, "config.txt"),
                 {**{k: getattr(p, k) for k in PARAM_KEYS}, **opts, "seed": args.seed,
                  "version": __version__})
        HANDLERS[command](p, opts, scratch, args)
    except BaseException:
        shutil.rmtree(scratch, ignore_errors=True)
        raise
    _commit(scratch, target)


def _error_line(command, exc) -> str:
    return f"ddilab {command}: {MODULE_OF.get(command, 'cli')}: {type(exc).__name__}: {exc}"


def _job(spec):
    """Worker for ``sweep``; returns (status, message)."""
    command, p_dict, opts, target, seed = spec
    ns = argparse.Namespace(seed=seed, gamma=None, modes=None, discontinuous=None)
    try:
        execute(command, ModelParams(**p_dict), opts, target, ns)
        return "ok", ""
    except (DDILabError, ValueError, ArithmeticError) as exc:
        return "error", _error_line(command, exc)


def cmd_sweep(p, opts, target, args):
    if args.sweep_command not in HANDLERS:
        raise UsageError(f"sweep: unknown command {args.sweep_command!r}")
    axes = []
    for item in args.grid or ():
        if "=" not in item:
            raise UsageError(f"--grid expects key=v1,v2,..., got {item!r}")
        key, values = (s.strip() for s in item.split("=", 1))
        if key not in PARAM_KEYS and key not in OPTIONS:
            raise UsageError(f"--grid: unknown key {key!r}")
        axes.append((key, [v.strip() for v in values.split(",") if v.strip()]))
    if not axes:
        raise UsageError("sweep needs at least one --grid key=v1,v2,...")
    keys = [k for k, _ in axes]
    combos = list(itertools.product(*[v for _, v in axes]))
    parent = os.path.dirname(os.path.abspath(target)) or "."
    os.makedirs(parent, exist_ok=True)
    scratch = tempfile.mkdtemp(prefix=".ddilab-", dir=parent)
    specs = []
    for i, combo in enumerate(combos):
        sets = [f"{k}={v}" for k, v in zip(keys, combo)]
        pj, oj = apply_overrides(p, {k: v for k, v in opts.items() if v != OPTIONS.get(k)}, sets)
        specs.append((args.sweep_command, asdict(pj), oj, os.path.join(scratch, f"job_{i:04d}"),
                      args.seed))
    jobs = args.jobs or os.cpu_count() or 1
    if jobs == 1 or len(specs) == 1:
        results = [_job(s) for s in specs]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(specs))) as pool:
            results = list(pool.map(_job, specs))
    rows = [[f"job_{i:04d}", *combo, status, msg]
            for i, (combo, (status, msg)) in enumerate(zip(combos, results))]
    write_csv(os.path.join(scratch, "index.csv"), ["job", *keys, "status", "message"], rows)
    _commit(scratch, target)
    failed = [r for r in results if r[0] != "ok"]
    for _, msg in failed:
        print(msg, file=sys.stderr)
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ddilab", description="Diffusion-driven instability laboratory.")
    ap.add_argument("--version", action="version", version=f"ddilab {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value file (seven model parameters plus options)")
    common.add_argument("--out", help="output directory (default $DDILAB_OUT/<command>)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a parameter or option; repeatable")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=0, help="worker processes for sweep (default: CPUs)")
    sub = ap.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    helps = {"steady": "constant steady states", "ddi": "DDI certificate at the minus state",
             "kinetics": "integrate the kinetic ODE and classify equilibria",
             "pattern": "build and verify a stationary pattern",
             "spectrum": "unstable eigenvalues of a pattern", "simulate": "time-dependent PDE run",
             "sweep": "grid of runs in parallel"}
    parsers = {name: sub.add_parser(name, parents=[common], help=helps[name]) for name in SUBCOMMANDS}
    pp = parsers["pattern"]
    pp.add_argument("--gamma", type=float)
    pp.add_argument("--modes", type=int)
    pp.add_argument("--discontinuous", metavar="PLAN", help="segment plan for a glued weak pattern")
    sp = parsers["sweep"]
    sp.add_argument("--grid", action="append", metavar="KEY=V1,V2,...", help="sweep axis; repeatable")
    sp.add_argument("--command", dest="sweep_command", default="simulate", choices=sorted(HANDLERS))
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name in ("gamma", "modes", "discontinuous"):
        if not hasattr(args, name):
            setattr(args, name, None)
    if args.jobs < 0:
        print("ddilab: --jobs must be >= 0", file=sys.stderr)
        return 2
    try:
        p, opts = load_config(args.config)
        p, full = apply_overrides(p, opts, args.set)
    except UsageError as exc:
        print(f"ddilab {args.command}: usage: {exc}", file=sys.stderr)
        return 2
    target = _out_dir(args)
    try:
        if args.command == "sweep":
            return cmd_sweep(p, {**full}, target, args)
        execute(args.command, p, full, target, args)
    except UsageError as exc:
        print(f"ddilab {args.command}: usage: {exc}", file=sys.stderr)
        return 2
    except (DDILabError, ValueError, ArithmeticError) as exc:
        print(_error_line(args.command, exc), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
