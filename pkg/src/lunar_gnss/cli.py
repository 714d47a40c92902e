"""Command-line front end: optimize, evaluate, frozen, gdop-map, rank, hv, merge."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, default_config_json, load_config, parse_config
from .coverage import gdop_map
from .decoder import DecisionBounds, DecisionVector, decode, walker_delta
from .frozen import frozen_inclination
from .moea import Borg
from .pareto import hypervolume, normalize_objectives, pareto_rank
from .problem import ARCHIVE_COLUMNS, LunarProblem, evaluate_design, frozen_deviation

log = logging.getLogger("lunar_gnss")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

CSV_COLUMNS = ARCHIVE_COLUMNS + ("penalized",)
DESIGN_COLUMNS = ("sma_km", "n_sats", "n_planes", "phasing", "ecc", "inc_deg", "argp_deg")
OBJECTIVE_COLUMNS = ("gdop_p98", "avail_pct", "cost_musd", "dv_kmps_yr")
INCLINATION_WARN_DEG = 0.5


class UsageError(ValueError):
    """Bad command-line input (exit code 2)."""


# -- CSV helpers ----------------------------------------------------------------
def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "nan" if math.isnan(v) else repr(v)


def format_rows(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def archive_rows(solutions) -> list[dict]:
    rows = []
    for k, s in enumerate(solutions, start=1):
        row = {c: s.info.get(c) for c in CSV_COLUMNS}
        # objectives come from the stored vector so the CSV matches the archive exactly
        row["gdop_p98"], row["avail_pct"], row["cost_musd"], row["dv_kmps_yr"] = s.f[0], -s.f[1], s.f[2], s.f[3]
        row["penalized"] = bool(s.penalized)
        row["id"] = k
        rows.append(row)
    return rows


def read_archive_csv(path) -> list[dict]:
    """Rows of an archive CSV with numeric fields parsed."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = tuple(reader.fieldnames or ())
        missing = [c for c in DESIGN_COLUMNS + OBJECTIVE_COLUMNS if c not in header]
        if missing:
            raise UsageError(f"{path}: not an archive file, missing columns {missing}")
        rows = []
        for raw in reader:
            row = {}
            for c in header:
                v = raw[c]
                if c in ("id", "n_sats", "n_planes", "phasing", "penalized", "rank"):
                    row[c] = int(v) if v != "" else None
                else:
                    row[c] = float(v) if v != "" else None
            rows.append(row)
    return rows


def row_objectives(rows) -> np.ndarray:
    """Minimization-sense objective matrix (availability negated)."""
    return np.array([[r["gdop_p98"], -r["avail_pct"], r["cost_musd"], r["dv_kmps_yr"]] for r in rows], dtype=float)


def rows_hypervolume(rows) -> float:
    if not rows:
        return 0.0
    O = np.array([[r[c] for c in OBJECTIVE_COLUMNS] for r in rows], dtype=float)
    return hypervolume(normalize_objectives(O), warn=False)


def ranked(rows) -> list[dict]:
    if not rows:
        return []
    ranks = pareto_rank(row_objectives(rows))
    out = []
    for r, k in zip(rows, ranks):
        d = dict(r)
        d["rank"] = int(k)
        out.append(d)
    order = sorted(range(len(out)), key=lambda i: (out[i]["rank"], i))
    return [out[i] for i in order]


def merge_rows(files) -> list[dict]:
    """Concatenate archives and drop repeated designs, keeping the first occurrence."""
    if not files:
        raise UsageError("merge needs at least one archive file")
    seen = set()
    rows = []
    for f in files:
        for r in read_archive_csv(f):
            key = tuple(r[c] for c in DESIGN_COLUMNS)
            if key in seen:
                continue
            seen.add(key)
            rows.append(r)
    for k, r in enumerate(rows, start=1):
        r["id"] = k
    return rows


# -- design input ---------------------------------------------------------------
def _add_design_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("design (either a decision vector or explicit elements)")
    g.add_argument("--vector", nargs=6, type=float, metavar="X",
                   help="sma n_sats planes_alg phasing_alg ecc argp_alg")
    g.add_argument("--sma", type=float, help="km")
    g.add_argument("--n-sats", type=int)
    g.add_argument("--n-planes", type=int)
    g.add_argument("--phasing", type=int, default=0)
    g.add_argument("--ecc", type=float, default=0.0)
    g.add_argument("--argp", type=float, default=270.0, help="deg, 90 or 270")
    g.add_argument("--inc", type=float, help="deg; frozen inclination when omitted")


def design_from_args(args, cfg: RunConfig):
    consts = cfg.physical_constants()
    b = cfg.bounds
    if args.vector is not None:
        dv = DecisionVector.from_array(args.vector)
        try:
            dv.check_bounds(DecisionBounds(**b.model_dump()))
            return decode(dv, consts, cfg.extra_j2), dv
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if args.sma is None or args.n_sats is None or args.n_planes is None:
        raise UsageError("give --vector or all of --sma, --n-sats, --n-planes")
    if not b.n_sats[0] <= args.n_sats <= b.n_sats[1]:
        raise UsageError(f"n_sats {args.n_sats} outside [{b.n_sats[0]:g}, {b.n_sats[1]:g}]")
    if args.argp not in (90.0, 270.0):
        raise UsageError("argp must be 90 or 270 deg")
    if args.sma * (1.0 - args.ecc) <= consts.r_moon_mean:
        raise UsageError("periapsis lies below the lunar surface")
    inc = args.inc
    try:
        if inc is None:
            inc = frozen_inclination(args.sma, args.ecc, args.argp, consts, extra_j2=cfg.extra_j2)
        design = walker_delta(args.sma, args.n_sats, args.n_planes, args.phasing, args.ecc, inc, args.argp)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.inc is not None:
        dev = frozen_deviation(design, cfg.problem_settings())
        if dev > INCLINATION_WARN_DEG:
            warnings.warn(f"inclination {args.inc:.3f} deg is {dev:.2f} deg away from the frozen value", UserWarning,
                          stacklevel=2)
    return design, None


def _config(args) -> RunConfig:
    cfg = load_config(getattr(args, "config", None))
    upd = {}
    if getattr(args, "seed", None) is not None:
        upd["seed"] = args.seed
    if getattr(args, "tier", None) is not None:
        upd["tier"] = args.tier
    if getattr(args, "output", None) is not None and args.command == "optimize":
        upd["output_dir"] = args.output
    if getattr(args, "workers", None) is not None:
        upd["workers"] = args.workers
    data = cfg.model_dump()
    data.update(upd)
    if getattr(args, "evaluations", None) is not None:
        data["moea"]["max_evaluations"] = args.evaluations
    return parse_config(data)


def _write(path, text: str) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text)


# -- commands -------------------------------------------------------------------
def cmd_optimize(args) -> int:
    cfg = _config(args)
    moea_cfg = cfg.moea_config()
    problem = LunarProblem(cfg.problem_settings())
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    ck = out / "checkpoint.json"
    workers = cfg.workers or os.cpu_count() or 1
    if args.resume and ck.exists():
        seed = json.loads(ck.read_text())["seed"]
        if seed != cfg.seed:
            raise UsageError(f"checkpoint was written with seed {seed}, config has {cfg.seed}")
        borg = Borg.resume(problem, ck, moea_cfg, workers=workers, checkpoint_every=cfg.checkpoint_every)
        log.info("resuming from %d evaluations", borg.state.evaluations)
    else:
        borg = Borg(problem, moea_cfg, cfg.seed, workers, ck, cfg.checkpoint_every)
    # the output location is left out so identical runs give identical files
    (out / "config.json").write_text(cfg.model_dump_json(indent=2, exclude={"output_dir"}) + "\n")
    result = borg.run()
    (out / "archive.csv").write_text(format_rows(archive_rows(result.archive.entries), CSV_COLUMNS))
    (out / "history.csv").write_text(result.history_csv())
    hv = result.history[-1][1] if result.history else 0.0
    print(f"evaluations={result.evaluations} archive={len(result.archive)} restarts={result.restarts} "
          f"hypervolume={hv:.6f} output={out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    design, dv = design_from_args(args, cfg)
    settings = cfg.problem_settings()
    ev = evaluate_design(design, settings, workers=cfg.workers or 1)
    payload = {
        "design": {"sma_km": design.sma, "n_sats": design.T, "n_planes": design.P, "phasing": design.F,
                   "ecc": design.ecc, "inc_deg": design.inc, "argp_deg": design.argp},
        "objectives": {"gdop_p98": ev.gdop_p98, "avail_pct": ev.availability_pct, "cost_musd": ev.cost_musd,
                       "dv_kmps_yr": ev.dv_kmps_yr},
        "penalized": ev.penalized,
        "reason": ev.reason,
        "cost_breakdown": ev.breakdown,
        "coverage": ev.coverage.to_dict() if ev.coverage else None,
        "maneuvers": list(ev.station_keeping.log_rows()) if ev.station_keeping else [],
        "tier": cfg.tier,
    }
    if dv is not None:
        payload["decision_vector"] = [float(v) for v in dv.as_array()]
    _write(args.output, json.dumps(payload, indent=2, default=_json_default) + "\n")
    return EXIT_OK


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def cmd_frozen(args) -> int:
    cfg = _config(args)
    try:
        i = frozen_inclination(args.sma, args.ecc, args.argp, cfg.physical_constants(), extra_j2=cfg.extra_j2)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(f"{i:.6f}")
    return EXIT_OK


def cmd_gdop_map(args) -> int:
    cfg = _config(args)
    design, _ = design_from_args(args, cfg)
    window = None if args.window_days is None else args.window_days * 86400.0
    rows = gdop_map(design, cfg.coverage_config(), cfg.tier, cfg.physical_constants(), cfg.force_model(),
                    cfg.integrator_config(), window_s=window, workers=cfg.workers or 1)
    data = [{"lat_deg": a, "lon_deg": b, "gdop_p98": c} for a, b, c in rows]
    _write(args.output, format_rows(data, ("lat_deg", "lon_deg", "gdop_p98")))
    return EXIT_OK


def cmd_rank(args) -> int:
    rows = ranked(read_archive_csv(args.archive))
    cols = tuple(c for c in CSV_COLUMNS if not rows or c in rows[0]) + ("rank",)
    _write(args.output, format_rows(rows, cols))
    n1 = sum(1 for r in rows if r["rank"] == 1)
    print(f"rows={len(rows)} rank1={n1}", file=sys.stderr)
    return EXIT_OK


def cmd_hv(args) -> int:
    rows = read_archive_csv(args.archive)
    print(f"{rows_hypervolume(rows):.10f}")
    return EXIT_OK


def cmd_merge(args) -> int:
    rows = ranked(merge_rows(args.archives))
    cols = tuple(c for c in CSV_COLUMNS if not rows or c in rows[0]) + ("rank",)
    _write(args.output, format_rows(rows, cols))
    rank1 = [r for r in rows if r["rank"] == 1]
    print(f"rows={len(rows)} rank1={len(rank1)} hypervolume={rows_hypervolume(rank1):.10f}", file=sys.stderr)
    return EXIT_OK


def cmd_config(args) -> int:
    _write(args.output, default_config_json())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lunar-gnss", description="Lunar navigation constellation design toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, tier=True):
        sp.add_argument("--config", help="JSON run configuration (defaults when omitted)")
        if tier:
            sp.add_argument("--tier", choices=("fast", "full"))
            sp.add_argument("--workers", type=int)

    o = sub.add_parser("optimize", help="run the evolutionary search")
    common(o)
    o.add_argument("--seed", type=int)
    o.add_argument("--evaluations", type=int)
    o.add_argument("--output", help="output directory")
    o.add_argument("--resume", action="store_true", help="continue from the checkpoint in the output directory")
    o.set_defaults(func=cmd_optimize)

    e = sub.add_parser("evaluate", help="evaluate one design and print JSON")
    common(e)
    _add_design_args(e)
    e.add_argument("--output", help="JSON file (stdout when omitted)")
    e.set_defaults(func=cmd_evaluate)

    f = sub.add_parser("frozen", help="frozen-orbit inclination in degrees")
    common(f, tier=False)
    f.add_argument("sma", type=float, help="km")
    f.add_argument("ecc", type=float)
    f.add_argument("argp", type=float, help="deg")
    f.set_defaults(func=cmd_frozen)

    g = sub.add_parser("gdop-map", help="per-location GDOP percentile CSV")
    common(g)
    _add_design_args(g)
    g.add_argument("--window-days", type=float, help="sampling window (one sidereal month when omitted)")
    g.add_argument("--output", help="CSV file (stdout when omitted)")
    g.set_defaults(func=cmd_gdop_map)

    r = sub.add_parser("rank", help="Pareto-rank an archive CSV")
    r.add_argument("archive")
    r.add_argument("--output")
    r.set_defaults(func=cmd_rank)

    h = sub.add_parser("hv", help="hypervolume of an archive CSV")
    h.add_argument("archive")
    h.set_defaults(func=cmd_hv)

    m = sub.add_parser("merge", help="merge, deduplicate and rank archive CSVs")
    m.add_argument("archives", nargs="*")
    m.add_argument("--output")
    m.set_defaults(func=cmd_merge)

    c = sub.add_parser("config", help="print the default configuration")
    c.add_argument("--output")
    c.set_defaults(func=cmd_config)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, UsageError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
