"""Command-line runner: ``gridnls <command> --config run.ini --out results/``.

The config is an INI file.  Every section is optional; missing keys take the
defaults in ``DEFAULTS``.  The fully resolved config is echoed into every
``summary.json``.
"""
from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import periodic as ps
from .energy import EnergyParams, GridProblem
from .fields import dump_field
from .flow import SolveConfig, minimize
from .grid import GridSpec, build_grid
from .harness import (
    default_inits,
    find_threshold,
    normalize_sign,
    phase_table,
    sweep_epsilon,
    write_csv,
)
from .planar import LimitCase, check_regime, dump_raster, planar_ground_state, rotate_field
from .properties import run_all

log = logging.getLogger("gridnls")

COMMANDS = ("solve-grid", "solve-planar", "sweep-epsilon", "find-threshold", "phase-table",
            "check-properties")

DEFAULTS = {
    "grid": {"epsilon": "1.0", "window": "16", "m": "2"},
    "vertices": {"kind": "finite", "base": "0,0", "v": "1,0", "v2": "0,1"},
    "energy": {"p": "2.5", "q": "2.5", "alpha": "1.0", "beta": "1.0", "mu": "1.0",
               "beta_mode": "explicit"},
    "solver": {"step0": "1.0", "shrink": "0.5", "grow": "1.5", "grad_tol": "1e-8",
               "max_iters": "20000", "energy_flat_tol": "1e-15", "patience": "25",
               "metric": "h1", "shift": "1.0"},
    "planar": {"case": "Plane", "R": "1.0", "theta": "0.0", "half_width": "12.0", "h": "0.125"},
    "sweep": {"case": "Plane", "R": "1.0", "eps_list": "0.5,0.25,0.125", "m": "2",
              "half_width": "12.0", "ref_h": "0.0625", "ref_half_width": "16.0"},
    "threshold": {"mu_lo": "1e-3", "mu_hi": "100", "iters": "6", "n_starts": "4"},
    "phase": {"p_list": "2.5,4.5", "q_list": "2.5,3.5", "mu_list": "1e-3,1", "small_mu": "1e-2",
              "n_starts": "4"},
    "properties": {"n_samples": "100"},
}

BETA_MODES = ("explicit", "thm15", "thm16", "thm17")


class ConfigError(Exception):
    def __init__(self, errors):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


def _points(text: str):
    pts = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if chunk:
            a, b = chunk.split(",")
            pts.append((int(a), int(b)))
    return pts


def _floats(text: str):
    return [float(t) for t in text.split(",") if t.strip()]


def load_config(path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp.read_dict(DEFAULTS)
    if path is not None:
        with open(path) as fh:
            cp.read_file(fh)
    return cp


def resolved(cp: configparser.ConfigParser) -> dict:
    return {s: dict(cp[s]) for s in cp.sections()}


class Run:
    """Parsed and validated view of a config; construction collects every error."""

    def __init__(self, cp: configparser.ConfigParser, command: str):
        self.cp = cp
        self.command = command
        errors: list[str] = []

        def get(section, key, conv):
            raw = cp[section][key]
            try:
                return conv(raw)
            except (TypeError, ValueError):
                errors.append(f"[{section}] {key}={raw!r} is not a valid {conv.__name__}")
                return None

        def build(section, ctor, *args, **kw):
            if any(a is None for a in args) or any(v is None for v in kw.values()):
                return None
            try:
                return ctor(*args, **kw)
            except ValueError as exc:
                errors.append(f"[{section}] {exc}")
                return None

        if command not in COMMANDS:
            errors.append(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")

        self.grid_spec = build("grid", GridSpec, get("grid", "epsilon", float),
                               get("grid", "window", int), get("grid", "m", int))

        vs = cp["vertices"]
        self.vspec = None
        try:
            kind = vs["kind"]
            base = _points(vs["base"])
            if kind == ps.FINITE:
                self.vspec = ps.VertexSetSpec.finite(base)
            elif kind == ps.Z_PERIODIC:
                self.vspec = ps.VertexSetSpec.z_periodic(base, _points(vs["v"])[0])
            elif kind == ps.Z2_PERIODIC:
                self.vspec = ps.VertexSetSpec.z2_periodic(base, _points(vs["v"])[0], _points(vs["v2"])[0])
            else:
                errors.append(f"[vertices] kind={kind!r} must be one of finite, z, z2")
        except (ValueError, IndexError) as exc:
            errors.append(f"[vertices] {exc}")

        mode = cp["energy"]["beta_mode"]
        if mode not in BETA_MODES:
            errors.append(f"[energy] beta_mode={mode!r} must be one of {', '.join(BETA_MODES)}")
        self.beta_mode = mode
        p = get("energy", "p", float)
        q = get("energy", "q", float)
        alpha = get("energy", "alpha", float)
        beta = get("energy", "beta", float)
        mu = get("energy", "mu", float)
        self.params = build("energy", EnergyParams, p, q, alpha, beta, mu)
        if self.params is not None and mode in ("thm15", "thm16", "thm17") and self.vspec is not None \
                and self.grid_spec is not None:
            need = ps.Z2_PERIODIC if mode == "thm15" else ps.Z_PERIODIC
            if self.vspec.kind != need:
                errors.append(f"[energy] beta_mode={mode} needs a {need}-periodic vertex set")
            else:
                thm = {"thm15": ps.Z2, "thm16": ps.ZLINE, "thm17": ps.ZSTRIP}[mode]
                a, b = ps.beta_for_theorem(thm, ps.build_cell(self.vspec), self.vspec.vectors[0],
                                           self.grid_spec.epsilon)
                self.params = EnergyParams(p, q, a, b, mu)

        s = cp["solver"]
        self.solver = build(
            "solver", SolveConfig,
            step0=get("solver", "step0", float), shrink=get("solver", "shrink", float),
            grow=get("solver", "grow", float), grad_tol=get("solver", "grad_tol", float),
            max_iters=get("solver", "max_iters", int),
            energy_flat_tol=get("solver", "energy_flat_tol", float),
            patience=get("solver", "patience", int), metric=s["metric"],
            shift=get("solver", "shift", float),
        )

        if command == "solve-planar":
            R = get("planar", "R", float)
            theta = get("planar", "theta", float)
            self.planar_case = build("planar", LimitCase, cp["planar"]["case"], theta, R)
            if self.planar_case is not None and None not in (p, q):
                try:
                    check_regime(self.planar_case, p, q)
                except ValueError as exc:
                    errors.append(f"[planar] {exc}")
            self.planar_half_width = get("planar", "half_width", float)
            self.planar_h = get("planar", "h", float)
            if self.planar_h is not None and not self.planar_h > 0:
                errors.append("[planar] h must be positive")
            if self.planar_half_width is not None and self.planar_h and \
                    not self.planar_half_width >= self.planar_h:
                errors.append("[planar] half_width must be at least h")

        if command == "sweep-epsilon":
            self.sweep_case = build("sweep", LimitCase, cp["sweep"]["case"], 0.0, get("sweep", "R", float))
            self.eps_list = get("sweep", "eps_list", _floats)
            if self.eps_list is not None and not (self.eps_list and all(e > 0 for e in self.eps_list)):
                errors.append("[sweep] eps_list must hold positive values")
            self.sweep_m = get("sweep", "m", int)
            self.sweep_half_width = get("sweep", "half_width", float)
            self.ref_h = get("sweep", "ref_h", float)
            self.ref_half_width = get("sweep", "ref_half_width", float)
            if self.sweep_case is not None and self.vspec is not None:
                need = ps.Z2_PERIODIC if self.sweep_case.kind == "Plane" else ps.Z_PERIODIC
                if self.vspec.kind != need:
                    errors.append(f"[sweep] case {self.sweep_case.kind} needs a {need}-periodic vertex set")
                else:
                    try:
                        check_regime(self.sweep_case, p, q)
                    except (ValueError, TypeError) as exc:
                        errors.append(f"[sweep] {exc}")

        if command == "find-threshold":
            self.mu_lo = get("threshold", "mu_lo", float)
            self.mu_hi = get("threshold", "mu_hi", float)
            self.iters = get("threshold", "iters", int)
            self.n_starts = get("threshold", "n_starts", int)
            if None not in (self.mu_lo, self.mu_hi) and not 0 < self.mu_lo < self.mu_hi:
                errors.append("[threshold] need 0 < mu_lo < mu_hi")
            if self.n_starts is not None and self.n_starts < 3:
                errors.append("[threshold] n_starts must be at least 3")

        if command == "phase-table":
            self.p_list = get("phase", "p_list", _floats)
            self.q_list = get("phase", "q_list", _floats)
            self.mu_list = get("phase", "mu_list", _floats)
            self.small_mu = get("phase", "small_mu", float)
            self.n_starts = get("phase", "n_starts", int)
            for p_ in self.p_list or []:
                if not 2 < p_ < 6:
                    errors.append(f"[phase] p={p_} outside the legal range (2,6)")
            for q_ in self.q_list or []:
                if not 2 < q_ < 4:
                    errors.append(f"[phase] q={q_} outside the legal range (2,4)")
            if self.n_starts is not None and self.n_starts < 3:
                errors.append("[phase] n_starts must be at least 3")

        if command == "check-properties":
            self.n_samples = get("properties", "n_samples", int)
            if self.n_samples is not None and self.n_samples < 1:
                errors.append("[properties] n_samples must be positive")

        if errors:
            raise ConfigError(errors)


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def cmd_solve_grid(run: Run, out: Path, args) -> dict:
    grid = build_grid(run.grid_spec)
    verts = ps.materialize(run.vspec, grid)
    prob = GridProblem(grid, run.params, verts)
    starts = [prob.from_field(f) for f in default_inits(grid, verts, 1)]
    res = minimize(prob, run.params.mu, starts[0], run.solver)
    res.state = normalize_sign(prob, res.state)
    dump_field(res.field, out / "state.gridfield")
    return {"result": res.record(), "params": asdict(run.params), "n_vertices_V": int(len(verts)),
            "field_dump": "state.gridfield"}


def cmd_solve_planar(run: Run, out: Path, args) -> dict:
    case = run.planar_case
    N = int(round(run.planar_half_width / run.planar_h))
    res = planar_ground_state(LimitCase(case.kind, 0.0, case.R), run.params.p, run.params.q,
                              run.params.mu, N, run.planar_h, run.solver)
    res.state = normalize_sign(res.problem, res.state)
    fld = res.field
    if case.theta != 0.0:
        fld = rotate_field(fld, case.theta)
    dump_raster(fld, out / "state.raster")
    return {"result": res.record(), "raster_dump": "state.raster", "N": N}


def cmd_sweep(run: Run, out: Path, args) -> dict:
    sw = sweep_epsilon(run.sweep_case, run.vspec, run.params.p, run.params.q, run.params.mu,
                       run.eps_list, m=run.sweep_m, half_width=run.sweep_half_width,
                       config=run.solver, ref_h=run.ref_h, ref_half_width=run.ref_half_width,
                       workers=args.workers)
    write_csv(sw.rows, out / "sweep.csv")
    dump_raster(sw.reference.field, out / "reference.raster")
    ref = sw.reference
    return {
        "reference": {"energy_extrapolated": ref.energy, "energy_coarse": ref.energy_coarse,
                      "energy_fine": ref.energy_fine, "order": ref.order, "lambda": ref.lam,
                      "theta": ref.case.theta},
        "trend": sw.trend(),
        "table": "sweep.csv",
    }


def _probe_kw(run: Run, n_starts: int) -> dict:
    gs = run.grid_spec
    return {"window": gs.window, "m": gs.m, "alpha": run.params.alpha, "beta": run.params.beta,
            "config": run.solver, "n_starts": n_starts}


def cmd_threshold(run: Run, out: Path, args) -> dict:
    rep = find_threshold(run.params.p, run.params.q, run.vspec, run.grid_spec.epsilon,
                         (run.mu_lo, run.mu_hi), run.iters, **_probe_kw(run, run.n_starts))
    write_csv(rep.probes, out / "probes.csv")
    return {"mu_lo": rep.mu_lo, "mu_hi": rep.mu_hi, "straddles": rep.straddles, "note": rep.note,
            "kind": rep.kind, "table": "probes.csv"}


def cmd_phase(run: Run, out: Path, args) -> dict:
    cells = phase_table(run.vspec, run.p_list, run.q_list, run.mu_list, run.grid_spec.epsilon,
                        run.small_mu, workers=args.workers, **_probe_kw(run, run.n_starts))
    write_csv(cells, out / "phase.csv")
    return {"n_cells": len(cells), "mismatches": sum(c.mismatch for c in cells), "table": "phase.csv"}


def cmd_properties(run: Run, out: Path, args) -> dict:
    rows = run_all(args.seed, run.n_samples)
    write_csv(rows, out / "properties.csv")
    return {"all_passed": all(r.passed for r in rows), "table": "properties.csv"}


DISPATCH = {
    "solve-grid": cmd_solve_grid,
    "solve-planar": cmd_solve_planar,
    "sweep-epsilon": cmd_sweep,
    "find-threshold": cmd_threshold,
    "phase-table": cmd_phase,
    "check-properties": cmd_properties,
}


def _fail(out: Path | None, kind: str, errors) -> int:
    record = {"status": "error", "kind": kind, "errors": list(errors)}
    print(json.dumps(record), file=sys.stderr)
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            _write_json(out / "error.json", record)
        except OSError:
            pass
    return 2 if kind == "config" else 1


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="gridnls", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="INI run config (defaults are used for anything missing)")
    ap.add_argument("--out", default="gridnls-out", help="output directory")
    ap.add_argument("--workers", type=int, default=1, help="worker processes for sweeps and tables")
    ap.add_argument("--seed", type=int, default=0, help="seed for randomised checks")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out)

    arg_errors = []
    if args.workers < 1:
        arg_errors.append(f"--workers={args.workers} must be at least 1")
    try:
        cp = load_config(args.config)
    except (OSError, configparser.Error) as exc:
        return _fail(out, "config", arg_errors + [f"cannot read config: {exc}"])
    try:
        run = Run(cp, args.command)
    except ConfigError as exc:
        return _fail(out, "config", arg_errors + exc.errors)
    if arg_errors:
        return _fail(out, "config", arg_errors)

    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        return _fail(None, "output", [f"cannot create {out}: {exc}"])

    try:
        body = DISPATCH[args.command](run, out, args)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _fail(out, "runtime", [str(exc)])

    summary = {
        "status": "ok",
        "command": args.command,
        "seed": args.seed,
        "config": resolved(cp),
        **body,
    }
    _write_json(out / "summary.json", summary)
    print(json.dumps({"status": "ok", "summary": str(out / "summary.json")}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
