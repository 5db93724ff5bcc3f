"""Command-line interface.

Subcommands:

* ``sweep``      - observable rows over a coupling grid (CSV or JSON)
* ``compare``    - numeric pipeline vs the model's registered oracle
* ``montecarlo`` - sampled cycle statistics vs exact values
* ``verify``     - fluctuation/estimation bound suite over a grid

Exit codes: 0 success, 1 a comparison or bound check failed, 2 bad usage or
configuration, 3 solver failure. All commands honor ``--seed`` and produce
output that is independent of ``--threads``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import eigensolve, model, registry, thermo
from .cyclesim import outcome_chi_square, outcome_moments, outcome_probabilities, run_cycles
from .errors import ConfigError, SolverError
from .thermo import CSV_COLUMNS, QUANTITIES

_TOL_KEYS = {
    "dense_cap": int,
    "degeneracy_tol": float,
    "route_rtol": float,
    "c_tol": float,
    "bound_tol": float,
    "compare_tol": float,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON model config (spin models)")
    common.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="sweep output format")
    common.add_argument("--seed", type=int, default=0,
                        help="seed for sampling and iterative solvers")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads; results do not depend on this")
    common.add_argument("--tol-override", action="append", default=[],
                        metavar="KEY=VAL", dest="tol_override",
                        help=f"override a knob ({', '.join(sorted(_TOL_KEYS))})")

    grid_help = argparse.ArgumentParser(add_help=False)
    grid_help.add_argument("--grid", nargs=3, metavar=("START", "STOP", "COUNT"),
                           help="evenly spaced coupling grid")
    grid_help.add_argument("--points", metavar="L1,L2,...",
                           help="explicit comma-separated couplings")

    parser = argparse.ArgumentParser(
        prog="qvelab",
        description="Measurement-engine observables from the vacuum bending function.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", parents=[common, grid_help],
                       help="tabulate observables over a coupling grid")
    p.add_argument("model", nargs="?", help="builtin model name")
    p.add_argument("--quantities", metavar="Q1,Q2,...",
                   help=f"subset of: {','.join(QUANTITIES)}")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", parents=[common, grid_help],
                       help="compare a model against its registered oracle")
    p.add_argument("model", nargs="?", help="builtin model name with an oracle")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("montecarlo", parents=[common],
                       help="sample measurement cycles and compare to exact values")
    p.add_argument("model", nargs="?", help="builtin spin model name")
    p.add_argument("--lam", type=float, required=True, help="coupling strength")
    p.add_argument("--cycles", type=int, required=True, help="number of cycles")
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("verify", parents=[common, grid_help],
                       help="run the bound suite over a coupling grid")
    p.add_argument("model", nargs="?", help="builtin model name")
    p.set_defaults(func=cmd_verify)
    return parser


def _parse_overrides(pairs) -> dict:
    out = {}
    for item in pairs:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--tol-override needs KEY=VAL, got {item!r}")
        if key not in _TOL_KEYS:
            raise ConfigError(
                f"unknown override {key!r}; known: {', '.join(sorted(_TOL_KEYS))}"
            )
        try:
            out[key] = _TOL_KEYS[key](val)
        except ValueError:
            raise ConfigError(f"override {key} expects {_TOL_KEYS[key].__name__}, got {val!r}")
    return out


def _resolve_entry(args) -> registry.ModelEntry:
    if args.config and args.model:
        raise ConfigError("give a builtin model name or --config, not both")
    if args.config:
        spec = model.load_spec(args.config)
        return registry.ModelEntry(
            name=f"config:{args.config}",
            summary="model loaded from config",
            spin=spec,
        )
    if args.model:
        return registry.get(args.model)
    raise ConfigError("a model name or --config is required")


def _parse_grid(args) -> np.ndarray:
    if args.grid and args.points:
        raise ConfigError("give --grid or --points, not both")
    if args.grid:
        try:
            start, stop = float(args.grid[0]), float(args.grid[1])
            count = int(args.grid[2])
        except ValueError:
            raise ConfigError(f"--grid expects START STOP COUNT, got {args.grid}")
        if count < 1:
            raise ConfigError("--grid COUNT must be at least 1")
        if start > stop:
            raise ConfigError(f"--grid START must not exceed STOP, got {start} > {stop}")
        return np.linspace(start, stop, count)
    if args.points:
        try:
            vals = [float(tok) for tok in args.points.split(",") if tok.strip()]
        except ValueError:
            raise ConfigError(f"--points must be comma-separated numbers, got {args.points!r}")
        if not vals:
            raise ConfigError("--points is empty")
        return np.array(vals)
    raise ConfigError("a coupling grid is required (--grid or --points)")


def _eval_kwargs(args, overrides) -> dict:
    kw = {k: overrides[k] for k in ("dense_cap", "degeneracy_tol", "route_rtol", "c_tol")
          if k in overrides}
    kw["seed"] = args.seed
    return kw


def _evaluate_grid(entry, grid, threads, eval_kw):
    if entry.spin is None:
        eval_kw = {}
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda lam: entry.evaluate(float(lam), **eval_kw), grid))
    return [entry.evaluate(float(lam), **eval_kw) for lam in grid]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _point_row(pt: thermo.ThermoPoint) -> dict:
    return {
        "lambda": pt.lam,
        "delta": pt.delta,
        "d1": pt.d1,
        "d2": pt.d2,
        "work": pt.work,
        "heat": pt.heat,
        "efficiency": pt.efficiency,
        "sigma2": pt.sigma2,
        "ebar": pt.ebar,
        "e_min": pt.e_min,
        "e_max": pt.e_max,
        "qfi": pt.qfi,
        "sigma_q": pt.sigma_q,
        "valid": pt.valid,
        "notes": "; ".join(pt.notes),
    }


def render_rows(points, fmt: str) -> str:
    """Serialize observable rows; the column set is fixed by CSV_COLUMNS
    regardless of model kind, with absent quantities left empty (CSV) or
    null (JSON), never zero-filled."""
    rows = [_point_row(pt) for pt in points]
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_cell(row[col]) for col in CSV_COLUMNS])
    return buf.getvalue()


def _emit(text: str, out_path) -> None:
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_sweep(args) -> int:
    entry = _resolve_entry(args)
    grid = _parse_grid(args)
    overrides = _parse_overrides(args.tol_override)
    eval_kw = _eval_kwargs(args, overrides)
    if args.quantities:
        wanted = [q for q in args.quantities.split(",") if q]
        unknown = set(wanted) - set(QUANTITIES)
        if unknown:
            raise ConfigError(f"unknown quantities: {sorted(unknown)}")
        eval_kw["quantities"] = wanted
    points = _evaluate_grid(entry, grid, args.threads, eval_kw)
    _emit(render_rows(points, args.format), args.out)
    return 0


_COMPARE_SKIP = 1e-30


def _rel_dev(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    if scale < _COMPARE_SKIP:
        return 0.0
    return abs(a - b) / scale


def cmd_compare(args) -> int:
    entry = _resolve_entry(args)
    if entry.oracle is None:
        raise ConfigError(f"model {entry.name!r} has no registered oracle")
    oracle = registry.get(entry.oracle)
    grid = _parse_grid(args)
    overrides = _parse_overrides(args.tol_override)
    tol = overrides.get("compare_tol", entry.oracle_tol)
    eval_kw = _eval_kwargs(args, overrides)
    rows = _evaluate_grid(entry, grid, args.threads, eval_kw)
    oracle_rows = _evaluate_grid(oracle, grid, args.threads, eval_kw)

    compared = entry.oracle_quantities or QUANTITIES
    lines = [f"compare {entry.name} vs {entry.oracle} over {len(grid)} points, tol {tol:g}"]
    if entry.oracle_quantities:
        lines.append(f"  (restricted to: {', '.join(compared)})")
    worst = 0.0
    for q in compared:
        dev, at = None, None
        for lam, a, b in zip(grid, rows, oracle_rows):
            va, vb = getattr(a, q), getattr(b, q)
            if va is None or vb is None:
                continue
            if not (np.isfinite(va) and np.isfinite(vb)):
                continue
            d = _rel_dev(va, vb)
            if dev is None or d > dev:
                dev, at = d, float(lam)
        if dev is None:
            lines.append(f"  {q:12s} n/a (absent on one side)")
        else:
            worst = max(worst, dev)
            lines.append(f"  {q:12s} max_rel_dev {dev:.3e} at lambda={at:g}")
    ok = worst <= tol
    lines.append(f"result: {'OK' if ok else 'DEVIATION'} (worst {worst:.3e})")
    _emit("\n".join(lines) + "\n", args.out)
    return 0 if ok else 1


def cmd_montecarlo(args) -> int:
    entry = _resolve_entry(args)
    if entry.spin is None:
        raise ConfigError("montecarlo needs an operator model (cycles are sampled)")
    if args.cycles < 1:
        raise ConfigError("--cycles must be positive")
    overrides = _parse_overrides(args.tol_override)
    ops = entry.operators()
    ground = eigensolve.ground_state(
        ops, args.lam,
        dense_cap=overrides.get("dense_cap", eigensolve.DENSE_CAP),
        degeneracy_tol=overrides.get("degeneracy_tol"),
        seed=args.seed,
    )
    stats = run_cycles(ground, ops, args.cycles, seed=args.seed, workers=args.threads)
    exact_w, exact_var, exact_q = outcome_moments(ground, ops)
    chi2 = outcome_chi_square(stats, outcome_probabilities(ground))
    z_mean = 0.0 if stats.se_work == 0 else (stats.mean_work - exact_w) / stats.se_work
    z_var = 0.0 if stats.se_var == 0 else (stats.var_work - exact_var) / stats.se_var
    lines = [
        f"montecarlo {entry.name} lambda={args.lam!r} cycles={args.cycles} seed={args.seed}",
        f"  mean work  sampled {stats.mean_work!r} exact {exact_w!r} z={z_mean:+.3f}",
        f"  var work   sampled {stats.var_work!r} exact {exact_var!r} z={z_var:+.3f}",
        f"  mean heat  sampled {stats.mean_heat!r} exact {exact_q!r}",
        f"  outcomes   {len(stats.histogram)} distinct, chi2={chi2.statistic:.4f} "
        f"dof={chi2.dof} p={chi2.pvalue:.4f}",
    ]
    if chi2.impossible_outcomes:
        lines.append(f"  WARNING: {chi2.impossible_outcomes} impossible outcomes observed")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_verify(args) -> int:
    entry = _resolve_entry(args)
    grid = _parse_grid(args)
    overrides = _parse_overrides(args.tol_override)
    bound_tol = overrides.get("bound_tol", thermo.BOUND_TOL)
    eval_kw = _eval_kwargs(args, overrides)
    lines = [f"verify {entry.name} over {len(grid)} points, tol {bound_tol:g}"]
    failures = 0
    for lam in grid:
        lam = float(lam)
        if lam == 0:
            lines.append("  lambda=0: skipped (engine inactive, bounds vacuous)")
            continue
        pt = entry.evaluate(lam, **(eval_kw if entry.spin is not None else {}))
        if not pt.valid:
            failures += 1
            lines.append(f"  lambda={lam:g}: INVALID ({'; '.join(pt.notes)})")
            continue
        report = thermo.check_bounds(pt, tol=bound_tol)
        checked = [c for c in report.checks if c.checked]
        skipped = [c.name for c in report.checks if not c.checked]
        bad = report.failures()
        if bad:
            failures += 1
            detail = ", ".join(f"{c.name} margin {c.margin:.3e}" for c in bad)
            lines.append(f"  lambda={lam:g}: VIOLATED {detail}")
        else:
            tightest = min(checked, key=lambda c: c.margin)
            note = f"; skipped: {', '.join(skipped)}" if skipped else ""
            lines.append(
                f"  lambda={lam:g}: ok (min margin {tightest.margin:.3e} "
                f"at {tightest.name}{note})"
            )
    lines.append(f"result: {'OK' if failures == 0 else f'{failures} failures'}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0 if failures == 0 else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
