"""Command-line front end.

Subcommands: classify, surface, slice, spectrum, integrate, hopf, oracle-check.
Exit status is 0 on success, 2 for invalid input and 3 when a numerical
solver fails to converge.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import bifurcation as bf
from . import quantum as qm
from . import reduction as rd
from .core import integrate
from .io import dumps_csv, dumps_json, metadata, write_text
from .params import (
    ConvergenceError,
    DomainError,
    IntegrationError,
    ModelParams,
    PhasePoint,
)

EXIT_USAGE = 2
EXIT_CONVERGENCE = 3

PARAM_KEYS = ("I1", "delta", "c1", "c2", "hbar")


class UsageError(Exception):
    pass


def parse_int_list(text) -> list[int]:
    """Parse ``"3"``, ``"-2:2"`` (inclusive) or ``"0,1,4"`` into integers."""
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    if isinstance(text, int):
        return [text]
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part[1:]:
            i = part.index(":", 1)
            lo, hi = int(part[:i]), int(part[i + 1:])
            out.extend(range(lo, hi + 1) if lo <= hi else range(lo, hi - 1, -1))
        else:
            out.append(int(part))
    if not out:
        raise UsageError(f"empty integer list {text!r}")
    return out


def parse_floats(text, n=None) -> list[float]:
    if isinstance(text, (list, tuple)):
        vals = [float(v) for v in text]
    else:
        vals = [float(v) for v in str(text).replace(",", " ").split()]
    if n is not None and len(vals) != n:
        raise UsageError(f"expected {n} numbers, got {len(vals)} in {text!r}")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("model parameters")
    g.add_argument("--I1", type=float, default=1.0, help="equatorial moment of inertia")
    g.add_argument("--delta", type=float, default=0.0, help="anisotropy I1/I3 - 1")
    g.add_argument("--c1", type=float, default=1.0, help="linear potential coefficient")
    g.add_argument("--c2", type=float, default=0.4, help="quadratic potential coefficient")
    g.add_argument("--hbar", type=float, default=0.15, help="quantum scale")
    o = common.add_argument_group("output")
    o.add_argument("--out", default=None, help="output file (stdout if omitted)")
    o.add_argument("--format", choices=("csv", "json", "svg"), default=None)
    o.add_argument("--config", default=None, help="JSON file with option values; flags override it")
    o.add_argument("--jobs", type=int, default=None, help="worker processes for sweeps")

    p = argparse.ArgumentParser(prog="harmonic-top", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("classify", parents=[common], help="topology of the bifurcation diagram")

    s = sub.add_parser("surface", parents=[common], help="triangulated rank-2 sheet")
    s.add_argument("--grid", type=int, default=40, help="samples per sheet direction")

    s = sub.add_parser("slice", parents=[common], help="slices of the bifurcation diagram")
    s.add_argument("--slice-mode", choices=("M", "K", "both"), default="both")
    s.add_argument("--slice-value", default="0", help="value(s), comma separated")
    s.add_argument("--grid", type=int, default=400, help="az resolution of the sheet curves")
    s.add_argument("--levels", type=int, default=0, help="quantum levels per (m, k); 0 disables")
    s.add_argument("--qmax", type=int, default=None, help="largest |m| + |k| in the overlay")
    s.add_argument("--xlim", default=None, help="abscissa range 'lo,hi' for the figure")
    s.add_argument("--ylim", default=None, help="energy range 'lo,hi' for the figure")
    s.add_argument("--no-plot", action="store_true", help="skip the SVG figure")

    s = sub.add_parser("spectrum", parents=[common], help="quantum eigenvalues")
    s.add_argument("--m", default="0", help="m values: int, list or lo:hi")
    s.add_argument("--k", default="0", help="k values: int, list or lo:hi")
    s.add_argument("--levels", type=int, default=5)
    s.add_argument("--tol", type=float, default=1e-10)

    s = sub.add_parser("integrate", parents=[common], help="integrate a trajectory")
    s.add_argument("--x0", default="1 0 0 0", help="initial quaternion (normalised)")
    s.add_argument("--l0", default="0.3 0.2 1.0", help="initial angular momentum")
    s.add_argument("--T", type=float, default=10.0)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--grid", type=int, default=201, help="number of output samples")
    s.add_argument("--project", action="store_true", help="renormalise x after each step")

    s = sub.add_parser("hopf", parents=[common], help="stability of sleeping tops")
    s.add_argument("--lz-min", type=float, default=0.0)
    s.add_argument("--lz-max", type=float, default=4.0)
    s.add_argument("--grid", type=int, default=41)

    s = sub.add_parser("oracle-check", parents=[common], help="matrix versus ODE eigenvalues")
    s.add_argument("--m", default="0")
    s.add_argument("--k", default="0")
    s.add_argument("--levels", type=int, default=5)
    s.add_argument("--grid", type=int, default=4000, help="ODE grid size")
    return p


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def parse(argv):
    """Parse ``argv`` with precedence defaults < config file < flags."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = load_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        bad = sorted(set(cfg) - known - {"command"})
        if bad:
            raise UsageError(f"unknown config keys: {', '.join(bad)}")
        sub.set_defaults(**{k: v for k, v in cfg.items() if k != "config"})
        args = parser.parse_args(argv)
    return args


def effective_options(args) -> dict:
    # the worker count does not affect results, so it stays out of the metadata
    return {k: v for k, v in sorted(vars(args).items()) if k not in PARAM_KEYS and k != "jobs"}


def model_params(args) -> ModelParams:
    return ModelParams(**{k: getattr(args, k) for k in PARAM_KEYS})


def _emit(args, text_by_format: dict, default="csv"):
    fmt = args.format or default
    if fmt not in text_by_format:
        raise UsageError(f"format {fmt!r} not available for {args.command}")
    write_text(text_by_format[fmt](), args.out)


# ------------------------------------------------------------------ commands

def cmd_classify(args, params):
    tc = bf.classify_topology(params)
    deg = bf.degenerate_points(params)
    edges = bf.cusp_edges(params, np.linspace(-1.0, 1.0, 2001))
    report = {
        "class": tc.tag.value,
        "ratio": tc.ratio,
        "boundary": tc.boundary,
        "thresholds": list(bf.THRESHOLDS),
        "degenerate_points": [{"az": a, "beta2": b} for a, b in deg["points"]],
        "degenerate_rejected": [{"az": a, "beta2": b} for a, b in deg["rejected"]],
        "alternative_candidates": deg["alternative_candidates"],
        "cusp_edge_curves": len(edges),
        "metadata": metadata("classify", params, effective_options(args)),
    }
    rows = [(k, report[k]) for k in ("class", "ratio", "boundary", "cusp_edge_curves")]
    rows += [(f"degenerate_{i}", f"{a!r} {b!r}") for i, (a, b) in enumerate(deg["points"])]
    _emit(args, {"json": lambda: dumps_json(report),
                 "csv": lambda: dumps_csv(["key", "value"], rows, report["metadata"])}, "json")
    return report


def cmd_surface(args, params):
    n = args.grid
    if n < 2:
        raise UsageError("--grid must be >= 2")
    mesh = bf.surface_samples(params, n_beta=n, n_az=n + 1)
    meta = metadata("surface", params, effective_options(args))
    meta["n_vertices"] = int(mesh.beta.size)
    meta["n_triangles"] = int(mesh.triangles.shape[0])
    cols = ["index", "sheet", "beta", "az", "lz", "L3", "H", "h_tt", "elliptic"]
    rows = [(i, int(mesh.sheet[i]), mesh.beta[i], mesh.az[i], *mesh.em[i], mesh.h_tt[i], bool(mesh.elliptic[i]))
            for i in range(mesh.beta.size)]

    def js():
        return dumps_json({"metadata": meta, "columns": cols, "vertices": [list(r) for r in rows],
                           "triangles": mesh.triangles.tolist()})

    fmt = args.format or "csv"
    if fmt == "csv" and args.out:
        tri = Path(args.out).with_name(Path(args.out).stem + "_triangles.csv")
        write_text(dumps_csv(["a", "b", "c"], mesh.triangles.tolist(), meta), tri)
    _emit(args, {"csv": lambda: dumps_csv(cols, rows, meta), "json": js})
    return mesh


def _overlay_levels(params, slices, n_levels, qmax, jobs):
    """Quantum levels whose conserved quantum numbers match each slice."""
    hb = params.hbar
    if qmax is None:
        qmax = int(np.ceil(4.0 / hb))
    pairs = {}
    for s in slices:
        v = s.value / hb
        if abs(v - round(v)) > 1e-9:
            continue  # slice value not on the quantum lattice
        v = int(round(v))
        for m in range(-qmax, qmax + 1):
            k = m - v if s.mode == "K" else v - m
            if abs(m) + abs(k) <= qmax:
                pairs[(m, k)] = s.mode
    if not pairs or n_levels <= 0:
        return [], []
    res = qm.spectrum_sweep(params, list(pairs), n_levels, jobs=jobs)
    levels, rows = [], []
    for r in res:
        for s in slices:
            v = s.value / hb
            if abs(v - round(v)) > 1e-9:
                continue
            on = (r.m - r.k == round(v)) if s.mode == "K" else (r.m + r.k == round(v))
            if not on:
                continue
            coord = hb * ((r.m + r.k) if s.mode == "K" else (r.m - r.k))
            for i, E in enumerate(r.energies):
                levels.append((s.mode, coord, E))
                rows.append((s.mode, s.value, r.m, r.k, i, coord, E))
    return levels, rows


def cmd_slice(args, params):
    modes = ("K", "M") if args.slice_mode == "both" else (args.slice_mode,)
    values = parse_floats(args.slice_value)
    slices = [bf.slice_curves(params, md, v, args.grid) for md in modes for v in values]
    levels, lrows = _overlay_levels(params, slices, args.levels, args.qmax, args.jobs)
    meta = metadata("slice", params, effective_options(args))
    meta["overlay_convention"] = ("quantum levels with hbar*(m-k) = K (or hbar*(m+k) = M) drawn at "
                                  "abscissa hbar*(m+k) (or hbar*(m-k)) in physical units")
    meta["isolated_points"] = [
        {"mode": s.mode, "value": s.value, "kind": p.kind, "coord": p.coord, "H": p.H}
        for s in slices for p in s.isolated_points()]
    cols = ["record", "mode", "value", "id", "kind", "vertex", "coord", "H", "az", "beta", "elliptic",
            "stability", "m", "k", "level"]
    rows = []
    for s in slices:
        for ci, c in enumerate(s.curves):
            for vi in range(len(c.coord)):
                rows.append(("curve", s.mode, s.value, ci, c.kind, vi, c.coord[vi], c.H[vi], c.az[vi],
                             c.beta[vi], bool(c.elliptic[vi]), "", "", "", ""))
        for pi, p in enumerate(s.points):
            rows.append(("point", s.mode, s.value, pi, p.kind, "", p.coord, p.H, "", "", "",
                         p.stability, "", "", ""))
    for mode, val, m, k, i, coord, E in lrows:
        rows.append(("level", mode, val, "", "quantum", "", coord, E, "", "", "", "", m, k, i))

    fmt = args.format or "csv"
    data_fmt = "csv" if fmt == "svg" else fmt
    if data_fmt == "csv":
        text = dumps_csv(cols, rows, meta)
    else:
        text = dumps_json({"metadata": meta, "columns": cols, "rows": [list(r) for r in rows]})
    if args.out is None:
        write_text(text, None)
    else:
        out = Path(args.out)
        data_path = out.with_suffix("." + data_fmt)
        write_text(text, data_path)
        if not args.no_plot:
            from .plotting import plot_slices

            xlim = parse_floats(args.xlim, 2) if args.xlim else None
            ylim = parse_floats(args.ylim, 2) if args.ylim else _default_ylim(params)
            title = f"c1={params.c1:g}, c2={params.c2:g}, hbar={params.hbar:g}"
            plot_slices(slices, levels, out.with_suffix(".svg"), xlim, ylim, title)
    return slices, levels


def _default_ylim(params):
    z = np.linspace(-1.0, 1.0, 401)
    v = params.V(z)
    span = max(v.max() - v.min(), 1.0)
    return (float(v.min() - 0.1 * span), float(v.max() + 1.5 * span))


def cmd_spectrum(args, params):
    pairs = [(m, k) for m in parse_int_list(args.m) for k in parse_int_list(args.k)]
    res = qm.spectrum_sweep(params, pairs, args.levels, args.tol, jobs=args.jobs)
    meta = metadata("spectrum", params, effective_options(args))
    cols = ["m", "k", "level", "E", "lambda", "jmax", "est_error", "converged"]
    rows = [(r.m, r.k, i, r.energies[i], r.lambdas[i], r.jmax_used, r.est_error[i], bool(r.converged[i]))
            for r in res for i in range(len(r.energies))]
    _emit(args, {"csv": lambda: dumps_csv(cols, rows, meta),
                 "json": lambda: dumps_json({"metadata": meta, "spectra": [r.as_dict() for r in res]})})
    return res


def cmd_integrate(args, params):
    x0 = np.array(parse_floats(args.x0, 4))
    if np.linalg.norm(x0) == 0:
        raise UsageError("--x0 must be nonzero")
    x0 = x0 / np.linalg.norm(x0)
    p0 = PhasePoint(x0, parse_floats(args.l0, 3))
    tr = integrate(p0, params, args.T, args.tol, n_samples=args.grid, project=args.project)
    meta = metadata("integrate", params, effective_options(args))
    meta["drift"] = tr.drift
    cols = ["t", "x0", "x1", "x2", "x3", "lx", "ly", "lz", "H", "L3", "dH", "dlz", "dL3", "xnorm_err"]
    rows = [(tr.t[i], *tr.y[i], tr.H[i], tr.L3[i], tr.H[i] - tr.H[0], tr.lz[i] - tr.lz[0],
             tr.L3[i] - tr.L3[0], tr.xnorm_err[i]) for i in range(len(tr.t))]
    _emit(args, {"csv": lambda: dumps_csv(cols, rows, meta),
                 "json": lambda: dumps_json({"metadata": meta, "columns": cols, "rows": [list(r) for r in rows]})})
    return tr


def cmd_hopf(args, params):
    lz = np.linspace(args.lz_min, args.lz_max, args.grid)
    meta = metadata("hopf", params, effective_options(args))
    meta["threshold_upright"] = rd.hopf_threshold(params, 1.0)
    meta["threshold_hanging"] = rd.hopf_threshold(params, -1.0)
    cols = ["az", "lz", "kappa", "f", "discriminant", "class", "max_real_part"]
    rows = []
    for az in (1.0, -1.0):
        for v in lz:
            st = rd.stability(params, float(v), az)
            rows.append((az, float(v), st.kappa, st.f, st.details["discriminant"], st.classification.value,
                         float(np.max(np.abs(st.eigenvalues.real)))))
    _emit(args, {"csv": lambda: dumps_csv(cols, rows, meta),
                 "json": lambda: dumps_json({"metadata": meta, "columns": cols, "rows": [list(r) for r in rows]})})
    return rows


def cmd_oracle_check(args, params):
    pairs = sorted({(m, k) for m in parse_int_list(args.m) for k in parse_int_list(args.k)})
    meta = metadata("oracle-check", params, effective_options(args))
    cols = ["m", "k", "level", "E_matrix", "E_ode", "rel_err"]
    rows = []
    for r in qm.spectrum_sweep(params, pairs, args.levels, jobs=args.jobs):
        _, E = qm.ode_oracle(params, qm.QuantumNumbers(r.m, r.k), args.levels, args.grid)
        for i in range(args.levels):
            rel = abs(E[i] - r.energies[i]) / max(abs(r.energies[i]), 1e-300)
            rows.append((r.m, r.k, i, r.energies[i], E[i], rel))
    meta["max_rel_err"] = max(r[-1] for r in rows)
    _emit(args, {"csv": lambda: dumps_csv(cols, rows, meta),
                 "json": lambda: dumps_json({"metadata": meta, "columns": cols, "rows": [list(r) for r in rows]})})
    return rows


COMMANDS = {
    "classify": cmd_classify,
    "surface": cmd_surface,
    "slice": cmd_slice,
    "spectrum": cmd_spectrum,
    "integrate": cmd_integrate,
    "hopf": cmd_hopf,
    "oracle-check": cmd_oracle_check,
}


def main(argv=None) -> int:
    try:
        args = parse(argv)
    except UsageError as exc:
        print(f"harmonic-top: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # argparse
        return int(exc.code) if exc.code is not None else 0
    if args.jobs is None:
        args.jobs = os.cpu_count() or 1
    try:
        params = model_params(args)
        COMMANDS[args.command](args, params)
    except (UsageError, DomainError, ValueError) as exc:
        print(f"harmonic-top: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, IntegrationError) as exc:
        print(f"harmonic-top: numerical failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    return 0


if __name__ == "__main__":
    sys.exit(main())
