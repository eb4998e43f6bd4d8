"""Command-line entry point.

    trackimpute impute   --detections D.csv --receivers R.csv --fish-id ID --out DIR [--config C.json]
    trackimpute heatmap  --trajectories DIR/trajectories.csv --cell-m 250 --out DIR2
    trackimpute validate [--quick]
    trackimpute example-data --out DIR

Exit codes: 0 success, 1 runtime failure, 2 usage or input validation error.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as dt
import hashlib
import json
import logging
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .bootstrap import HeatmapSettings, dump_config, load_config, run_bootstrap
from .core import InputError
from .heatmap import (
    build_heatmap,
    export_heatmap,
    export_trajectories,
    heatmap_from_table,
    read_trajectories,
    write_grid_metadata,
)
from .ingest import parse_detections, parse_receivers, projection_for, segments_for_fish

log = logging.getLogger("trackimpute")


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _write_heatmap_outputs(grid, out: Path, projection=None, receivers=(), figures=True, title=None):
    paths = [
        export_heatmap(grid, out / "heatmap.csv", "csv"),
        export_heatmap(grid, out / "heatmap.pgm", "pgm"),
        write_grid_metadata(grid, out / "heatmap.json", projection),
    ]
    if figures:
        from .plotting import plot_heatmap

        paths.append(plot_heatmap(grid, out / "heatmap.png", receivers, title))
    return paths


def cmd_impute(args) -> int:
    t0 = time.perf_counter()
    config = load_config(args.config)
    overrides = {}
    if args.iters is not None:
        overrides["n_iter"] = args.iters
    if args.keep is not None:
        overrides["keep_frac"] = args.keep
    if args.seed is not None:
        overrides["seed"] = args.seed
    config = dataclasses.replace(config, **overrides)
    config.validate()
    seed = config.seed if config.seed is not None else int(np.random.SeedSequence().entropy)
    config = dataclasses.replace(config, seed=seed)

    for p in (args.receivers, args.detections):
        if not Path(p).is_file():
            raise InputError(f"input file not found: {p}")
    receivers = parse_receivers(args.receivers, radius_m=config.radius_m)
    if not receivers:
        raise InputError(f"{args.receivers}: no receivers")
    table = {r.id: r for r in receivers}
    detections = parse_detections(args.detections, table)
    specs = segments_for_fish(detections, table, args.fish_id)
    if not specs:
        raise InputError(f"fish {args.fish_id!r} has fewer than two detection days; nothing to impute")
    projection = projection_for(receivers)
    log.info("fish %s: %d segments, T=%s", args.fish_id, len(specs), [s.T for s in specs])

    threads = args.threads or os.cpu_count() or 1
    with warnings.catch_warnings():
        warnings.simplefilter("ignore" if not args.verbose else "default")
        result = run_bootstrap(
            specs, config.priors, config.n_iter, config.keep_frac, config.mode, seed,
            r_m=config.radius_m, floors=config.floors, workers=threads,
            enforce_endpoints=config.enforce_endpoint_radius,
            avoid=receivers if config.strict_outside_receivers else None,
        )
    log.info("retained %d of %d draws", result.n_retained, result.n_total)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    hm = config.heatmap
    grid = build_heatmap(result.retained, hm.cell_m, hm.padding_m, hm.include_endpoints, hm.max_cells)
    written = [export_trajectories(result.retained, out / "trajectories.csv", projection)]
    written += _write_heatmap_outputs(
        grid, out, projection, receivers, not args.no_figures,
        title=f"fish {args.fish_id}: {result.n_retained} of {result.n_total} draws",
    )
    if not args.no_figures:
        from .plotting import plot_trajectories

        written.append(plot_trajectories(
            result.retained, out / "trajectories.png", receivers,
            title=f"fish {args.fish_id}: {result.n_retained} most likely of {result.n_total}",
        ))
    written.append(dump_config(config, out / "config.json"))

    manifest = {
        "engine": "trackimpute",
        "engine_version": __version__,
        "created_utc": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
        "inputs": {
            "detections": {"path": str(Path(args.detections).resolve()), "sha256": _sha256(args.detections)},
            "receivers": {"path": str(Path(args.receivers).resolve()), "sha256": _sha256(args.receivers)},
        },
        "config_path": str(Path(args.config).resolve()) if args.config else None,
        "effective_config": config.to_dict(),
        "fish_id": args.fish_id,
        "seed": seed,
        "n_iter": config.n_iter,
        "keep_frac": config.keep_frac,
        "n_retained": result.n_retained,
        "threads": threads,
        "segments": [{"k": s.k, "start": s.start_receiver.id, "end": s.end_receiver.id, "T": s.T} for s in specs],
        "loglik_retained": [result.retained[-1].loglik, result.retained[0].loglik],
        "output_dir": str(out.resolve()),
        "outputs": sorted(p.name for p in written),
        "wall_clock_s": round(time.perf_counter() - t0, 3),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(written) + 1} files to {out}")
    return 0


def cmd_heatmap(args) -> int:
    if not Path(args.trajectories).is_file():
        raise InputError(f"trajectory file not found: {args.trajectories}")
    if not args.cell_m > 0:
        raise InputError(f"--cell-m must be > 0, got {args.cell_m}")
    if args.padding_m < 0:
        raise InputError(f"--padding-m must be >= 0, got {args.padding_m}")
    table = read_trajectories(args.trajectories)
    if not table.draws:
        raise InputError(f"{args.trajectories}: no trajectories")
    grid = heatmap_from_table(table, args.cell_m, args.padding_m, not args.exclude_endpoints, args.max_cells)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    receivers = parse_receivers(args.receivers) if args.receivers else ()
    projection = projection_for(receivers) if receivers else None
    written = _write_heatmap_outputs(grid, out, projection, receivers, not args.no_figures)
    print(f"binned {grid.total} points into {grid.nrows}x{grid.ncols} cells; wrote {len(written)} files to {out}")
    return 0


def cmd_validate(args) -> int:
    from .validate import run_all

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        results = run_all(quick=args.quick)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} oracles passed")
    return 1 if failed else 0


def cmd_example_data(args) -> int:
    from .synthetic import write_example_data

    for p in write_example_data(args.out):
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trackimpute", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("impute", help="impute one fish's trajectory ensemble")
    p.add_argument("--detections", required=True, help="CSV with fish_id,timestamp,receiver_id")
    p.add_argument("--receivers", required=True, help="CSV with receiver_id,lon,lat")
    p.add_argument("--config", help="run configuration JSON (default: built-in priors)")
    p.add_argument("--fish-id", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--iters", type=int, help="bootstrap iterations")
    p.add_argument("--keep", type=float, help="fraction of draws retained")
    p.add_argument("--threads", type=int, help="worker processes (default: all cores)")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    p.set_defaults(func=cmd_impute)

    p = sub.add_parser("heatmap", help="rebuild a heatmap from an exported trajectory file")
    p.add_argument("--trajectories", required=True)
    p.add_argument("--cell-m", type=float, required=True)
    p.add_argument("--padding-m", type=float, default=HeatmapSettings().padding_m)
    p.add_argument("--exclude-endpoints", action="store_true")
    p.add_argument("--max-cells", type=int, default=HeatmapSettings().max_cells,
                   help="coarsen cells by doubling until the grid fits")
    p.add_argument("--receivers", help="receiver CSV, for georeferencing and the figure")
    p.add_argument("--out", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("validate", help="run the numerical self-checks")
    p.add_argument("--quick", action="store_true", help="reduced sample sizes")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("example-data", help="write the synthetic receiver and detection files")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_example_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "verbose", False) is False:
        args.verbose = False
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.debug("failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
