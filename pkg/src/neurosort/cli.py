"""Command-line entry point.

Every command writes CSV files into ``--out`` whose bodies depend only on
the configuration and the seed; each file starts with ``#`` comment lines
naming the tool version, the config hash and the seed. Timing goes to
stdout, never into the CSVs.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time

import numpy as np

from . import __version__
from . import pipeline as pl
from .config import RunConfig, build_config, load_config_file, parse_overrides
from .crossbar import dump_matrix_market
from .errors import ConfigError, NeurosortError, NumericalError
from .snn import save_weights
from .variation import REFERENCE_CONSTANTS

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3

# Hardware timing of the reference system; recorded, not simulated.
HARDWARE_NOTES = ("channels=16", "storage_clock_Hz=8000", "kmeans_clock_Hz=500000",
                  "classifier_clock_Hz=200000")

COMMANDS = ("pipeline", "fig5", "fig6", "sweep", "adapt", "power", "dump-matrix")


def header(rc: RunConfig, command: str, extra=()) -> list:
    return [f"neurosort {__version__}", f"command={command}", f"config_hash={rc.config_hash()}",
            f"seed={rc.seed}", *extra]


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10g}"
    return str(v)


def write_csv(path, head, columns, rows):
    with open(path, "w", newline="") as fh:
        for line in head:
            fh.write(f"# {line}\n")
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(columns)
        for r in rows:
            out.writerow([fmt(v) for v in r])
    return path


def _summary_rows(d: dict):
    return [(k, v) for k, v in d.items()]


def cmd_pipeline(rc: RunConfig, out: str) -> list:
    """Detect, encode, label, train and classify with both back-ends."""
    rep = pl.run_pipeline(rc)
    head = header(rc, "pipeline", HARDWARE_NOTES)
    cols = ["index", "onset", "true_class", "kmeans_label", "digital_class", "crossbar_class"]
    files = [write_csv(os.path.join(out, "pipeline_spikes.csv"), head, cols,
                       [[r[c] for c in cols] for r in rep.rows]),
             write_csv(os.path.join(out, "pipeline_summary.csv"), head, ["metric", "value"],
                       _summary_rows(rep.summary))]
    save_weights(rep.weights, os.path.join(out, "weights.txt"))
    s = rep.summary
    print(f"digital test accuracy {s['digital_test_accuracy']:.2f}%  "
          f"crossbar agreement {s['crossbar_digital_agreement']:.2f}%")
    return files


def cmd_fig5(rc: RunConfig, out: str) -> list:
    """Train and test accuracy against the amount of training data."""
    rows = pl.run_fig5(rc)
    return [write_csv(os.path.join(out, "fig5.csv"), header(rc, "fig5"),
                      ["fraction", "n_train", "train_accuracy", "test_accuracy"], rows)]


def cmd_fig6(rc: RunConfig, out: str) -> list:
    """Per-restart accuracies for the small and large restart counts."""
    runs, summary = pl.run_fig6(rc)
    head = header(rc, "fig6")
    cols = ["repetition", "runs", "run", "train_accuracy", "test_accuracy"]
    files = []
    for n in sorted({rc.fig6.runs_small, rc.fig6.runs_large}):
        files.append(write_csv(os.path.join(out, f"fig6_runs{n}.csv"), head, cols,
                               [r for r in runs if r[1] == n]))
    files.append(write_csv(os.path.join(out, "fig6_summary.csv"), head,
                           ["repetition", "max_small", "max_large", "median_large", "difference"], summary))
    diffs = [r[4] for r in summary]
    print(f"max({rc.fig6.runs_large}) - max({rc.fig6.runs_small}): median {np.median(diffs):.2f} points")
    return files


def cmd_sweep(rc: RunConfig, out: str) -> list:
    """Crossbar accuracy under memristance variation, plus average power."""
    rows, power = pl.run_sweep(rc)
    head = header(rc, "sweep", [f"average_power_W={power:.6g}"])
    files = [write_csv(os.path.join(out, "sweep.csv"), head,
                       ["level", "mean_accuracy", "std_accuracy", "trials"], rows)]
    print(f"average power {power * 1e9:.3f} nW")
    return files


def cmd_adapt(rc: RunConfig, out: str) -> list:
    """Two-phase drift scenario with conditional K-means retraining."""
    res = pl.run_adapt(rc)
    head = header(rc, "adapt")
    cols = ["spike_index", "phase", "true_class", "cluster", "distance", "threshold", "exceeded", "triggered"]
    summary = [("phase1_triggers", res.phase1_triggers), ("phase2_triggers", res.phase2_triggers),
               ("novel_distance_before", res.novel_distance_before),
               ("novel_distance_after", res.novel_distance_after),
               ("phase2_accuracy_before", res.accuracy_before),
               ("phase2_accuracy_after", res.accuracy_after)]
    print(f"triggers: phase 1 {res.phase1_triggers}, phase 2 {res.phase2_triggers}")
    return [write_csv(os.path.join(out, "adapt_trace.csv"), head, cols, res.rows),
            write_csv(os.path.join(out, "adapt_summary.csv"), head, ["metric", "value"], summary)]


def cmd_power(rc: RunConfig, out: str) -> list:
    """Average crossbar power and the reference synthesis figures."""
    rows = pl.power_report(rc) + [(f"reference_{k}", v) for k, v in REFERENCE_CONSTANTS.items()]
    print(f"average power {dict(rows)['average_power_W'] * 1e9:.3f} nW")
    return [write_csv(os.path.join(out, "power.csv"), header(rc, "power"), ["metric", "value"], rows)]


def cmd_dump_matrix(rc: RunConfig, out: str) -> list:
    """Write one crossbar conductance system in Matrix Market form."""
    system, w, spike = pl.dump_system(rc)
    mtx = os.path.join(out, "crossbar.mtx")
    dump_matrix_market(system, mtx, comment=" ".join(header(rc, "dump-matrix")))
    nodes = [(n, i, j, side) for (i, j, side), n in sorted(system.node_index.items(), key=lambda kv: kv[1])]
    head = header(rc, "dump-matrix")
    return [mtx,
            write_csv(os.path.join(out, "crossbar_nodes.csv"), head, ["node", "row", "col", "side"], nodes),
            write_csv(os.path.join(out, "crossbar_rhs.csv"), head, ["node", "current_A"],
                      [(int(n), system.i[n]) for n in np.flatnonzero(system.i)])]


HANDLERS = {"pipeline": cmd_pipeline, "fig5": cmd_fig5, "fig6": cmd_fig6, "sweep": cmd_sweep,
            "adapt": cmd_adapt, "power": cmd_power, "dump-matrix": cmd_dump_matrix}


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key = value config file")
    common.add_argument("--seed", type=int, help="global seed (fallback: $NEUROSORT_SEED, then config)")
    common.add_argument("--out", metavar="DIR", help="output directory (default: out)")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key; repeatable")
    parser = argparse.ArgumentParser(prog="neurosort", description="spike sorting experiments")
    parser.add_argument("--version", action="version", version=f"neurosort {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HANDLERS[name].__doc__.rstrip("."))
    return parser


def resolve_config(args) -> RunConfig:
    settings = load_config_file(args.config) if args.config else {}
    settings.update(parse_overrides(args.overrides))
    seed = args.seed
    if seed is None and os.environ.get("NEUROSORT_SEED", "").strip():
        seed = os.environ["NEUROSORT_SEED"].strip()
    return build_config(settings, seed=seed, out=args.out)


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        rc = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    t0 = time.perf_counter()
    try:
        os.makedirs(rc.out, exist_ok=True)
        files = HANDLERS[args.command](rc, rc.out)
    except ConfigError as exc:
        print(f"config error{_where(exc)}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error{_where(exc)}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (NeurosortError, OSError, ValueError) as exc:
        print(f"data error{_where(exc)}: {exc}", file=sys.stderr)
        return EXIT_DATA
    for f in files:
        print(f"wrote {f}")
    print(f"runtime {time.perf_counter() - t0:.2f} s")
    return EXIT_OK


def _where(exc) -> str:
    stage = getattr(exc, "stage", None)
    return f" in stage {stage}" if stage else ""


if __name__ == "__main__":
    sys.exit(main())
