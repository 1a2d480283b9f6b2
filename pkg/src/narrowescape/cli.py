"""Command-line front end.

    narrowescape asymptotic --geometry FILE [--eps LIST] [--delta X]
    narrowescape series     --geometry FILE [--eps LIST] [--method M]
    narrowescape simulate   --geometry FILE [--eps X] [--paths N] [--dt X] [--seed N]
    narrowescape sweep      --geometry FILE --eps LIST [...]
    narrowescape compare    --geometry FILE [--eps X] [...]

The geometry file is the JSON (or key=value) geometry object, optionally with
a "run" block holding dt, paths, seed, start, max_steps, threads, eps and D.
Command-line flags override the run block.

Exit codes: 0 success, 1 compare verdict FAIL, 2 invalid geometry or run
options, 3 series solver failure, 4 too many censored paths.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from importlib import resources

from . import asymptotics as asy
from .dualseries import ConditioningError, ConvergenceError, DualSeriesProblem, solve_collocation, solve_h1_neumann
from .geometry import (Annulus, DecapitatedSphere, Disk, GeometryError, GeometrySpec, Rectangle, TangentCircles,
                       Window, corner_window, cusp_window, geometry_from_dict, load_geometry_text,
                       window_measures)
from .montecarlo import CSV_FIELDS, CensoringError, McConfig, ResolutionError, Start, simulate, sweep

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_GEOMETRY = 2
EXIT_CONVERGENCE = 3
EXIT_CENSORED = 4

RUN_KEYS = ("dt", "paths", "n_paths", "seed", "start", "max_steps", "threads", "eps", "D",
            "adaptive_near_singularity", "far_field", "bridge", "method", "N")


def load_tolerances():
    text = resources.files("narrowescape").joinpath("data/tolerances.json").read_text()
    return json.loads(text)


# ---------------------------------------------------------------------------
# spec assembly
# ---------------------------------------------------------------------------

def _parse_eps(text):
    if text is None:
        return None
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise GeometryError(f"--eps expects a comma-separated list of numbers, got {text!r}") from None
    if not vals:
        raise GeometryError("--eps is empty")
    return vals


def _default_window(domain, eps):
    if isinstance(domain, Annulus):
        return Window("inner", math.pi, eps)
    if isinstance(domain, Disk):
        return Window("outer", math.pi, eps)
    if isinstance(domain, Rectangle):
        return corner_window(domain, eps)
    if isinstance(domain, TangentCircles):
        return cusp_window(domain, eps)
    if isinstance(domain, DecapitatedSphere):
        return Window("cap-rim", math.pi, eps)
    raise GeometryError(f"no window family for {type(domain).__name__}")


def window_for(spec, eps):
    """Window of the geometry with its half width replaced by eps."""
    if eps is None:
        if spec.window is None and not isinstance(spec.domain, DecapitatedSphere):
            # nothing would absorb; paths would only censor
            raise GeometryError("planar geometry needs a window or --eps")
        return spec.window
    if spec.window is None:
        return _default_window(spec.domain, eps)
    w = spec.window
    if isinstance(spec.domain, Rectangle) and w.convention == "arclength":
        # eps is the window length; keep the window flush with its right end
        right = w.center + w.half_width
        return Window(w.component, right - 0.5 * eps, 0.5 * eps, w.convention)
    return Window(w.component, w.center, eps, w.convention)


def build(args):
    """Validated (GeometrySpec, run options) from the file and flags."""
    if args.geometry is None:
        raise GeometryError("--geometry is required")
    try:
        with open(args.geometry) as fh:
            obj = load_geometry_text(fh.read())
    except OSError as exc:
        raise GeometryError(f"cannot read geometry file: {exc}") from None
    if not isinstance(obj, dict):
        raise GeometryError("geometry must be a JSON object")
    run = dict(obj.pop("run", {}) or {})
    unknown = set(run) - set(RUN_KEYS)
    if unknown:
        raise GeometryError(f"run block: unexpected keys {sorted(unknown)}; allowed {list(RUN_KEYS)}")
    if args.delta is not None:
        if obj.get("type") != "decapitated_sphere":
            raise GeometryError("--delta only applies to decapitated_sphere geometries")
        obj.setdefault("params", {})["delta"] = args.delta
    spec = geometry_from_dict(obj)
    if "paths" in run:
        run["n_paths"] = run.pop("paths")
    for flag, key in (("paths", "n_paths"), ("dt", "dt"), ("seed", "seed"), ("threads", "threads"),
                      ("D", "D"), ("method", "method"), ("N", "N")):
        val = getattr(args, flag, None)
        if val is not None:
            run[key] = val
    eps = _parse_eps(args.eps) if args.eps is not None else run.get("eps")
    if eps is not None and not isinstance(eps, list):
        eps = [float(eps)]
    run["eps"] = eps
    run.setdefault("seed", 0)
    return spec, run


def mc_config(run):
    keys = ("dt", "n_paths", "seed", "max_steps", "start", "adaptive_near_singularity", "far_field",
            "bridge", "threads")
    opts = {k: run[k] for k in keys if k in run}
    try:
        return McConfig(**opts)
    except (TypeError, ValueError) as exc:
        raise GeometryError(f"run options: {exc}") from None


# ---------------------------------------------------------------------------
# formulas
# ---------------------------------------------------------------------------

def formula(spec, window, D=1.0, start=None):
    """AsymptoticResult matching the geometry and window."""
    dom = spec.domain
    if isinstance(dom, DecapitatedSphere):
        if window is None:
            if start is not None and start.kind == "point":
                v = asy.sphere_cap_mfpt_point(dom.R, dom.delta, start.coords[0], D)
                return asy.AsymptoticResult(v, (("exact-point", v),), "exact", "none")
            return asy.sphere_cap_mfpt_avg(dom.R, dom.delta, D)
        eps = window_measures(window, dom).angular
        return asy.sphere_window_mfpt_avg(dom.R, dom.delta, eps, D)
    if window is None:
        raise GeometryError("this geometry needs a window (set 'window' or pass --eps)")
    m = window_measures(window, dom)
    if isinstance(dom, Annulus):
        if window.component != "inner":
            raise GeometryError("the annulus formula needs the window on the inner circle")
        return asy.mfpt_annulus_avg(dom.R1, dom.R2, m.angular, D)
    if isinstance(dom, Rectangle):
        return asy.mfpt_rectangle_avg(dom.a, dom.b, m.arclength, D)
    if isinstance(dom, TangentCircles):
        return asy.mfpt_cusp_leading(dom, m.angular, D)
    return asy.mfpt_leading_smooth(dom.area(), D, m.ratio)


def series_problem(spec, window, N):
    dom = spec.domain
    if window is None:
        raise GeometryError("the series solver needs a window")
    m = window_measures(window, dom)
    if isinstance(dom, Annulus):
        return DualSeriesProblem.annulus(dom.R1, dom.R2, m.angular, N)
    if isinstance(dom, Rectangle):
        return DualSeriesProblem.rectangle(dom.a, dom.b, m.arclength, N)
    if isinstance(dom, Disk):
        return DualSeriesProblem.disk(0.5 * dom.R ** 2, m.angular, N)
    raise GeometryError(f"no dual series problem for {type(dom).__name__}")


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def render(records, fmt, columns=None):
    """Render a list of flat dicts as an aligned table, CSV or JSON."""
    if fmt == "json":
        return json.dumps(records, indent=2) + "\n"
    if columns is None:
        columns = list(records[0]) if records else []
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in records:
            w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in columns])
        return buf.getvalue()
    rows = [[_fmt(r[c]) for c in columns] for r in records]
    widths = [max(len(c), *(len(row[i]) for row in rows)) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in rows]
    return "\n".join(lines) + "\n"


def read_csv(text):
    """Inverse of render(..., "csv") for numeric and text columns."""
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        rec = {}
        for k, v in row.items():
            if v == "":
                rec[k] = None
                continue
            try:
                rec[k] = int(v)
            except ValueError:
                try:
                    rec[k] = float(v)
                except ValueError:
                    rec[k] = v
        out.append(rec)
    return out


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _eps_list(spec, run):
    eps = run.get("eps")
    return eps if eps is not None else [None]


def cmd_asymptotic(spec, run, fmt):
    D = float(run.get("D", 1.0))
    records, notes = [], []
    for eps in _eps_list(spec, run):
        res = formula(spec, window_for(spec, eps), D, Start.parse(run.get("start")))
        notes.extend(res.warnings)
        if fmt == "json":
            records.append({"epsilon": eps, **res.to_dict()})
            continue
        for name, v in res.terms:
            records.append({"epsilon": eps, "term": name, "value": v})
        records.append({"epsilon": eps, "term": "total", "value": res.value})
    return render(records, fmt), notes, False


def cmd_series(spec, run, fmt):
    method = run.get("method", "both")
    N = int(run.get("N", 64))
    records = []
    for eps in _eps_list(spec, run):
        prob = series_problem(spec, window_for(spec, eps), N)
        solvers = {"neumann": solve_h1_neumann, "collocation": solve_collocation}
        names = list(solvers) if method == "both" else [method]
        for name in names:
            if name not in solvers:
                raise GeometryError(f"unknown method {name!r}; use neumann, collocation or both")
            sol = solvers[name](prob)
            rec = {"epsilon": prob.eps_ang if eps is None else eps, "method": name, "c0": sol.c0,
                   "compatibility_residual": float(sol.compatibility_residual)}
            if fmt == "json":
                rec["residuals"] = {k: float(v) for k, v in sol.residuals.items()}
                rec["c"] = [float(v) for v in sol.c]
            records.append(rec)
    return render(records, fmt), [], False


def _mc_record(eps, est):
    rec = {"epsilon": eps}
    rec.update(est.to_dict())
    return rec


def cmd_simulate(spec, run, fmt):
    cfg = mc_config(run)
    D = float(run.get("D", 1.0))
    records = []
    for eps in _eps_list(spec, run):
        est = simulate(spec.domain, window_for(spec, eps), cfg, D)
        records.append(_mc_record(eps, est))
    return render(records, fmt), [], False


def cmd_sweep(spec, run, fmt):
    eps = run.get("eps")
    if eps is None:
        raise GeometryError("sweep needs --eps with at least three decreasing values")
    cfg = mc_config(run)
    D = float(run.get("D", 1.0))
    table = sweep(spec.domain, lambda e: window_for(spec, e), eps, cfg, D)
    records = table.to_records()
    for rec in records:
        rec["log_inv_eps"] = math.log(1.0 / rec["epsilon"])
        rec["mean_times_eps"] = rec["mean"] * rec["epsilon"]
    cols = list(CSV_FIELDS) + ["log_inv_eps", "mean_times_eps"]
    return render(records, fmt, cols), [f"slope of mean vs log(1/eps): {table.log_slope():.6g}"], False


def tolerance_key(spec, window):
    name = GeometrySpec(spec.domain).to_dict()["type"]
    if name == "decapitated_sphere" and window is None:
        return "decapitated_sphere_rim"
    return name


def cmd_compare(spec, run, fmt):
    cfg = mc_config(run)
    D = float(run.get("D", 1.0))
    tols = load_tolerances()
    records = []
    for eps in _eps_list(spec, run):
        window = window_for(spec, eps)
        key = tolerance_key(spec, window)
        if key not in tols:
            raise GeometryError(f"no comparison tolerance for {key!r}; the formula has an unknown O(1) term")
        res = formula(spec, window, D, cfg.start)
        est = simulate(spec.domain, window, cfg, D)
        tol = tols[key]
        err = abs(est.mean - res.value)
        allowed = max(tol["rel"] * abs(est.mean), tol.get("stderr_multiple", 0.0) * est.stderr)
        records.append({
            "epsilon": eps, "formula": res.value, "mc_mean": est.mean, "mc_stderr": est.stderr,
            "rel_error": err / abs(est.mean), "tolerance": tol["rel"], "error_order": res.error_order,
            "verdict": "PASS" if err <= allowed else "FAIL",
        })
    failed = any(r["verdict"] == "FAIL" for r in records)
    return render(records, fmt), [], failed


COMMANDS = {
    "asymptotic": cmd_asymptotic,
    "series": cmd_series,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
}


def make_parser():
    ap = argparse.ArgumentParser(prog="narrowescape", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--geometry", required=True, help="geometry JSON or key=value file")
        p.add_argument("--eps", help="window half width(s), comma separated, in the window's convention")
        p.add_argument("--delta", type=float, help="cap angle of a decapitated sphere")
        p.add_argument("--paths", type=int, help="number of simulated paths")
        p.add_argument("--dt", type=float, help="time step next to the window")
        p.add_argument("--seed", type=int, help="random seed (default 0)")
        p.add_argument("--threads", type=int, help="worker threads for the simulator")
        p.add_argument("--D", type=float, help="diffusivity (default 1)")
        p.add_argument("--method", choices=("neumann", "collocation", "both"), help="series solver")
        p.add_argument("--N", type=int, help="series truncation")
        p.add_argument("--output", choices=("table", "csv", "json"), default="table")
        p.add_argument("--out", help="write the result here instead of stdout")
    return ap


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        spec, run = build(args)
        text, notes, failed = COMMANDS[args.command](spec, run, args.output)
    except (GeometryError, ResolutionError) as exc:
        print(f"error: invalid geometry or run options: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except (ConvergenceError, ConditioningError) as exc:
        print(f"error: series solver failed: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except CensoringError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CENSORED
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for note in notes:
        print(f"note: {note}", file=sys.stderr)
    if failed:
        return EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
