"""Command-line interface.

Subcommands::

    synth      synthetic labelled stream -> stream CSV
    window     stream CSV -> windows CSV (balanced by default)
    featurize  windows CSV -> features CSV
    train      table or stream CSV -> JSON model artifact
    select     table or stream CSV -> evaluation report (CSV or JSON)
    footprint  model artifact -> footprint table
    autonomy   storage scenario -> autonomy table
    report     bundle of selection, footprint and autonomy tables

``--config FILE`` reads defaults from a TOML file: top-level keys apply to
every subcommand, a ``[<subcommand>]`` table to that subcommand only; keys
are option names (``window-s`` or ``window_s``). Command-line flags win.

The default seed is 0, or the value of ``PREYHANDLING_SEED`` when set.

Exit status: 0 on success, 1 on a data or model error (one-line message on
stderr), 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .budget import (
    AUTONOMY_COLUMNS,
    FOOTPRINT_COLUMNS,
    StorageScenario,
    autonomy_rows,
    classification_rate,
    footprint,
    reference_footprints,
    standard_scenarios,
    write_rows,
)
from .data import SynthConfig, read_csv, synthesize, write_csv
from .evaluation import (
    FAMILIES,
    DEFAULT_SEGMENT_SECONDS,
    TabularData,
    paper_grid,
    quick_grid,
    split_average,
    stream_segments,
)
from .esn import ESNClassifier
from .exceptions import PreyHandlingError
from .features import featurize, read_features, write_features
from .idnn import IDNNClassifier
from .persistence import load_model, save_model
from .svm import SVMClassifier
from .windowing import WindowConfig, balance, read_table, read_windows, segment, write_windows

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

PROG = "preyhandling"
SEED_ENV = "PREYHANDLING_SEED"
_ESTIMATORS = {"idnn": IDNNClassifier, "svm": SVMClassifier, "esn": ESNClassifier}


class UsageError(Exception):
    pass


def _default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        seed = int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be a non-negative integer, got {raw!r}") from None
    if seed < 0:
        raise UsageError(f"{SEED_ENV} must be a non-negative integer, got {raw!r}")
    return seed


# --------------------------------------------------------------------------
# parser


def _add_seed(p, seed):
    p.add_argument("--seed", type=int, default=seed, help=f"random seed (default: ${SEED_ENV} or 0)")


def _add_window(p):
    p.add_argument("--window-s", type=float, default=1.0, help="window length in seconds (default: 1.0)")
    p.add_argument("--overlap-s", type=float, default=0.5, help="overlap in seconds (default: 0.5)")


def _add_format(p):
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="report format (default: csv)")


def build_parser(seed=0):
    parser = argparse.ArgumentParser(prog=PROG, description="Prey-handling classification pipeline.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", metavar="FILE", help="TOML file with option defaults")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("synth", help="generate a synthetic labelled stream")
    p.add_argument("-o", "--output", required=True)
    _add_seed(p, seed)
    p.add_argument("--duration", type=float, default=600.0, help="seconds (default: 600)")
    p.add_argument("--rate", type=float, default=25.0, help="sample rate in Hz (default: 25)")

    p = sub.add_parser("window", help="segment a stream into labelled windows")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)
    _add_window(p)
    p.add_argument("--no-balance", dest="balance", action="store_false", help="keep class proportions as found")
    _add_seed(p, seed)

    p = sub.add_parser("featurize", help="compute the 30 statistics of every window")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("train", help="fit one model and save its artifact")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("-i", "--input", required=True, help="windows/features table, or stream CSV for esn")
    p.add_argument("-o", "--output", required=True)
    p.add_argument(
        "--param", action="append", default=[], metavar="NAME=VALUE", help="estimator hyperparameter (repeatable)"
    )
    _add_seed(p, seed)

    p = sub.add_parser("select", help="grid search with cross-validation, averaged over random splits")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("-i", "--input", required=True, help="windows/features table, or stream CSV for esn")
    p.add_argument("-o", "--output", help="report path (default: stdout)")
    p.add_argument("--grid", choices=("quick", "paper"), default="quick", help="search space (default: quick)")
    p.add_argument("--splits", type=int, default=5, help="random 70/30 splits (default: 5)")
    p.add_argument("--folds", type=int, default=10, help="cross-validation folds (default: 10)")
    p.add_argument("--test-ratio", type=float, default=0.3)
    p.add_argument("--epochs", type=int, help="override IDNN training epochs")
    p.add_argument("--segment-s", type=float, default=DEFAULT_SEGMENT_SECONDS, help="esn stream segment length")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers (default: 1)")
    _add_seed(p, seed)
    _add_format(p)

    p = sub.add_parser("footprint", help="memory footprint of a model artifact")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", help="default: stdout")
    p.add_argument("--bytes-per-param", type=int, default=8)
    _add_format(p)

    p = sub.add_parser("autonomy", help="time until storage fills")
    p.add_argument("--capacity-mib", type=float, default=8.0)
    p.add_argument("--mode", choices=("raw", "classified"), help="omit for the standard scenario table")
    p.add_argument("--bytes-per-s", type=float, help="raw logging rate")
    p.add_argument("--bits-per-s", type=float, help="classified output rate (default: from window flags)")
    _add_window(p)
    p.add_argument("-o", "--output", help="default: stdout")
    _add_format(p)

    p = sub.add_parser("report", help="write selection, footprint and autonomy tables")
    p.add_argument("--output-dir", required=True)
    p.add_argument("-i", "--input", help="stream CSV (default: synthesize one)")
    p.add_argument("--splits", type=int, default=5)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--epochs", type=int, help="override IDNN training epochs")
    p.add_argument("--jobs", type=int, default=1)
    _add_window(p)
    _add_seed(p, seed)
    _add_format(p)
    return parser


def _subparsers(parser):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices
    return {}


def _apply_config(parser, path):
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"invalid config {path}: {exc}") from None
    subs = _subparsers(parser)
    shared = {k: v for k, v in cfg.items() if not isinstance(v, dict)}
    for name, value in cfg.items():
        if isinstance(value, dict) and name not in subs:
            raise UsageError(f"config section [{name}] is not a subcommand")
    for name, sp in subs.items():
        dests = {a.dest for a in sp._actions}
        section = {**shared, **cfg.get(name, {})}
        values = {}
        for key, value in section.items():
            dest = key.replace("-", "_")
            if dest not in dests:
                if key in cfg.get(name, {}):
                    raise UsageError(f"config key {key!r} is not an option of {name}")
                continue
            values[dest] = value
        # a config value satisfies a required option
        for a in sp._actions:
            if a.dest in values:
                a.required = False
        sp.set_defaults(**values)


# --------------------------------------------------------------------------
# helpers


def _check_paths(inputs, output):
    if output is None:
        return
    out = os.path.realpath(output)
    for src in inputs:
        if src is not None and os.path.realpath(src) == out:
            raise UsageError(f"output {output} would overwrite input {src}")


def _emit(text, output):
    if output is None:
        sys.stdout.write(text)
    else:
        with open(output, "w", newline="") as fh:
            fh.write(text)


def _parse_param(item):
    if "=" not in item:
        raise UsageError(f"--param expects NAME=VALUE, got {item!r}")
    name, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return name.strip().replace("-", "_"), value


def _load_table(path):
    with open(path, newline="") as fh:
        table, prefix = read_table(fh)
    return table, prefix == "f"


def _load_data(family, path, segment_s=DEFAULT_SEGMENT_SECONDS):
    """Returns (data, standardize-by-default)."""
    if family == "esn":
        return stream_segments(read_csv(path), segment_s), False
    table, is_features = _load_table(path)
    return TabularData(table.X, table.y), is_features


def _grid(family, kind, standardize, epochs):
    grid = (paper_grid if kind == "paper" else quick_grid)(family)
    if family != "esn":
        grid = grid.with_fixed(standardize=standardize)
    if epochs is not None and family == "idnn":
        grid = grid.with_fixed(epochs=epochs)
    return grid


def _report_text(report, fmt):
    return report.to_json() if fmt == "json" else report.to_csv()


# --------------------------------------------------------------------------
# subcommands


def cmd_synth(a):
    write_csv(synthesize(SynthConfig(seed=a.seed, duration=a.duration, rate=a.rate)), a.output)


def cmd_window(a):
    _check_paths([a.input], a.output)
    series = read_csv(a.input)
    w = segment(series, WindowConfig(a.window_s, a.overlap_s, series.rate))
    if a.balance:
        w = balance(w, a.seed)
    write_windows(w, a.output)


def cmd_featurize(a):
    _check_paths([a.input], a.output)
    write_features(featurize(read_windows(a.input)), a.output)


def cmd_train(a):
    _check_paths([a.input], a.output)
    params = dict(_parse_param(p) for p in a.param)
    cls = _ESTIMATORS[a.family]
    valid = cls().get_params()
    unknown = sorted(set(params) - set(valid))
    if unknown:
        raise UsageError(f"unknown {a.family} hyperparameter(s): {', '.join(unknown)}")
    if a.family == "esn":
        series = read_csv(a.input)
        params.setdefault("random_state", a.seed)
        est = cls(**params).fit(series.values, series.labels)
    else:
        table, is_features = _load_table(a.input)
        params.setdefault("standardize", is_features)
        if "random_state" in valid:
            params.setdefault("random_state", a.seed)
        est = cls(**params).fit(table.X, table.y)
    save_model(est, a.output)


def cmd_select(a):
    _check_paths([a.input], a.output)
    data, standardize = _load_data(a.family, a.input, a.segment_s)
    grid = _grid(a.family, a.grid, standardize, a.epochs)
    report = split_average(grid, data, a.splits, a.test_ratio, a.folds, a.seed, a.jobs)
    _emit(_report_text(report, a.format), a.output)


def cmd_footprint(a):
    _check_paths([a.input], a.output)
    est = load_model(a.input)
    rep = footprint(est, a.bytes_per_param)
    d = est.to_dict()["dims"]
    row = {
        "config": f"{a.input}: " + " ".join(f"{k}={v}" for k, v in d.items()),
        "parameter_count": rep.parameter_count,
        "footprint_kb": rep.footprint_kb,
    }
    _emit(write_rows([row], FOOTPRINT_COLUMNS[:3], fmt=a.format), a.output)


def cmd_autonomy(a):
    capacity = int(round(a.capacity_mib * 2**20))
    if a.mode is None:
        scenarios = standard_scenarios(capacity)
    elif a.mode == "raw":
        if a.bytes_per_s is None:
            raise UsageError("--mode raw needs --bytes-per-s")
        scenarios = [StorageScenario("raw_logging", a.bytes_per_s, capacity, "raw logging")]
    else:
        bits = a.bits_per_s
        if bits is None:
            bits = classification_rate(WindowConfig(a.window_s, a.overlap_s))
        scenarios = [StorageScenario("classified", bits, capacity, "classified")]
    _emit(write_rows(autonomy_rows(scenarios), AUTONOMY_COLUMNS, fmt=a.format), a.output)


def cmd_report(a):
    _check_paths([a.input], a.output_dir)
    os.makedirs(a.output_dir, exist_ok=True)
    series = read_csv(a.input) if a.input else synthesize(SynthConfig(seed=a.seed))
    wc = WindowConfig(a.window_s, a.overlap_s, series.rate)
    table = featurize(balance(segment(series, wc), a.seed))
    ext = "json" if a.format == "json" else "csv"
    fp_rows = []
    for family in FAMILIES:
        if family == "esn":
            data, std = stream_segments(series), False
        else:
            data, std = TabularData(table.X, table.y), True
        grid = _grid(family, "quick", std, a.epochs)
        report = split_average(grid, data, a.splits, 0.3, a.folds, a.seed, a.jobs)
        _emit(_report_text(report, a.format), os.path.join(a.output_dir, f"selection_{family}.{ext}"))
        fp_rows.append(
            {
                "config": f"{family} selected (mean over splits)",
                "footprint_kb": report.footprint_kb,
                "acc": report.acc_mean,
                "f1": report.f1_mean,
            }
        )
    fp_rows += reference_footprints()
    _emit(write_rows(fp_rows, FOOTPRINT_COLUMNS, fmt=a.format), os.path.join(a.output_dir, f"footprint.{ext}"))
    rows = autonomy_rows(standard_scenarios())
    _emit(write_rows(rows, AUTONOMY_COLUMNS, fmt=a.format), os.path.join(a.output_dir, f"autonomy.{ext}"))


COMMANDS = {
    "synth": cmd_synth,
    "window": cmd_window,
    "featurize": cmd_featurize,
    "train": cmd_train,
    "select": cmd_select,
    "footprint": cmd_footprint,
    "autonomy": cmd_autonomy,
    "report": cmd_report,
}


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        parser = build_parser(_default_seed())
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config")
        known, _ = pre.parse_known_args(argv)
        if known.config:
            _apply_config(parser, known.config)
        args = parser.parse_args(argv)
        COMMANDS[args.command](args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except UsageError as exc:
        print(f"{PROG}: usage error: {exc}", file=sys.stderr)
        return 2
    except (PreyHandlingError, ValueError, ArithmeticError, RuntimeError, OSError, KeyError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        if isinstance(exc, OSError) and exc.filename:
            msg = f"{exc.strerror}: {exc.filename}"
        print(f"{PROG}: error: {msg}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
