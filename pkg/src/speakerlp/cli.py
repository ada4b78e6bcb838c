"""Command-line entry point.

Subcommands::

    gen-synth         write a synthetic manifest + embedding payload
    build-households  simulate households and write the split file
    sweep             run a method x (L, U) sweep and write reports
    score             score one household and print per-utterance predictions
    dump-graph        dump one household's affinity matrices as CSV

Every option can also be supplied through ``--config FILE``, a flat
``key = value`` text file whose keys match the long flag names with
underscores (``split_file``, ``max_iterations``, ...).  Explicit flags
override file values, which override built-in defaults.  Commands that
write into an output directory echo the fully resolved configuration to
``resolved_config.cfg`` there for provenance.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import data_model, evaluation, simulation
from .errors import ConfigError, SpeakerLpError
from .graph import build_affinity
from .propagation import (
    DEFAULT_ALPHA,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_SIGMA,
    DEFAULT_TOLERANCE,
    LpConfig,
)
from .scoring import METHOD_NAMES, SCORERS


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"speakerlp: error: {exc}", file=sys.stderr)
        return 2
    except SpeakerLpError as exc:
        print(f"speakerlp: error: {exc}", file=sys.stderr)
        return 1


# ---------------------------------------------------------------------------
# Option plumbing: defaults < config file < explicit flags.


def _to_int(text):
    return int(str(text).strip())


def _to_float(text):
    return float(str(text).strip())


def _to_str(text):
    return str(text).strip()


def _to_count(text):
    return simulation.parse_count(text)


def _to_count_list(text):
    parts = [p for p in str(text).replace(" ", "").split(",") if p]
    return tuple(simulation.parse_count(p) for p in parts)


def _to_method_list(text):
    return tuple(p for p in str(text).replace(" ", "").split(",") if p)


def _to_pair(text):
    parts = str(text).replace(" ", "").split(",")
    if len(parts) != 2:
        raise ValueError("expected DEV,VAL")
    return int(parts[0]), int(parts[1])


def _resolve(args, schema: dict) -> dict:
    """Merge CLI flags, config-file values, and defaults per the schema."""
    file_values = _read_config_file(args.config) if args.config else {}
    resolved = {}
    for key, (convert, default) in schema.items():
        raw = getattr(args, key, None)
        source = "flag"
        if raw is None and key in file_values:
            raw, source = file_values[key], f"config key '{key}'"
        if raw is None:
            if default is _REQUIRED:
                flag = "--" + key.replace("_", "-")
                raise ConfigError(f"{flag} is required (flag or config key {key!r})")
            resolved[key] = default
            continue
        try:
            resolved[key] = convert(raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid {source if source != 'flag' else key} value {raw!r}: {exc}") from exc
    return resolved


_REQUIRED = object()


def _read_config_file(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip().lower().replace("-", "_")] = value.strip()
    return values


def _echo_config(out_dir: Path, command: str, resolved: dict) -> None:
    lines = [f"command = {command}"]
    for key in sorted(resolved):
        value = resolved[key]
        if isinstance(value, tuple):
            value = ",".join(simulation.count_label(v) if isinstance(v, (int, str)) else str(v)
                             for v in value)
        lines.append(f"{key} = {value}")
    (out_dir / "resolved_config.cfg").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _lp_config(resolved: dict) -> LpConfig:
    return LpConfig(
        alpha=resolved["alpha"],
        max_iterations=resolved["max_iterations"],
        tolerance=resolved["tolerance"],
        sigma=resolved["sigma"],
    )


def _load_inputs(resolved):
    matrix, catalog = data_model.load_dataset(resolved["manifest"])
    split = data_model.read_split(resolved["split_file"])
    return matrix, catalog, split


def _entry_for(split, household_id):
    for entry in split.entries:
        if entry.household_id == household_id:
            return entry
    raise ConfigError(f"household {household_id!r} not found in split file")


_LP_SCHEMA = {
    "sigma": (_to_float, DEFAULT_SIGMA),
    "alpha": (_to_float, DEFAULT_ALPHA),
    "max_iterations": (_to_int, DEFAULT_MAX_ITERATIONS),
    "tolerance": (_to_float, DEFAULT_TOLERANCE),
}


# ---------------------------------------------------------------------------
# Commands


def _cmd_gen_synth(args) -> int:
    schema = {
        "speakers": (_to_int, _REQUIRED),
        "dim": (_to_int, 16),
        "utterances": (_to_int, 30),
        "spread": (_to_float, 0.05),
        "seed": (_to_int, 0),
        "out": (_to_str, "out"),
    }
    resolved = _resolve(args, schema)
    config = simulation.SynthConfig(
        n_speakers=resolved["speakers"],
        dim=resolved["dim"],
        utterances_per_speaker=resolved["utterances"],
        intra_class_spread=resolved["spread"],
        seed=resolved["seed"],
    )
    matrix, catalog = simulation.generate_synthetic(config)
    out_dir = Path(resolved["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    data_model.write_dataset(out_dir / "manifest.jsonl", matrix, catalog)
    _echo_config(out_dir, "gen-synth", resolved)
    print(
        f"wrote {matrix.rows} utterances ({config.n_speakers} speakers x "
        f"{config.utterances_per_speaker}, dim {config.dim}) to {out_dir / 'manifest.jsonl'}"
    )
    return 0


def _cmd_build_households(args) -> int:
    schema = {
        "manifest": (_to_str, _REQUIRED),
        "households": (_to_pair, (112, 200)),
        "household_size": (_to_int, 4),
        "holdout": (_to_int, 10),
        "labeled": (_to_count, 2),
        "unlabeled": (_to_count, simulation.ALL),
        "seed": (_to_int, 0),
        "out": (_to_str, "out"),
    }
    resolved = _resolve(args, schema)
    dev, val = resolved["households"]
    config = simulation.SimulationConfig(
        household_size=resolved["household_size"],
        dev_households=dev,
        val_households=val,
        holdout_per_speaker=resolved["holdout"],
        labeled_per_speaker=resolved["labeled"],
        unlabeled_per_household=resolved["unlabeled"],
        seed=resolved["seed"],
    )
    matrix, catalog = data_model.load_dataset(resolved["manifest"])
    assignments, dropped = simulation.build_households(catalog, matrix, config)
    split = simulation.split_file_from(assignments, config, dropped)
    out_dir = Path(resolved["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    data_model.write_split(out_dir / "split.json", split)
    _echo_config(out_dir, "build-households", resolved)
    print(
        f"{len(assignments)} households ({dev} dev / {val} val), "
        f"{len(dropped)} speakers dropped -> {out_dir / 'split.json'}"
    )
    return 0


def _cmd_sweep(args) -> int:
    schema = {
        "manifest": (_to_str, _REQUIRED),
        "split_file": (_to_str, _REQUIRED),
        "split": (_to_str, "val"),
        "methods": (_to_method_list, METHOD_NAMES),
        "labeled": (_to_count_list, (2,)),
        "unlabeled": (_to_count_list, (simulation.ALL,)),
        "seed": (_to_int, 0),
        "jobs": (_to_int, 0),
        "format": (_to_str, "both"),
        "plot_axis": (_to_str, ""),
        "out": (_to_str, "out"),
        **_LP_SCHEMA,
    }
    resolved = _resolve(args, schema)
    if resolved["format"] not in ("csv", "json", "both"):
        raise ConfigError(f"format must be csv, json, or both, got {resolved['format']!r}")
    if resolved["plot_axis"] and resolved["plot_axis"].upper() not in ("U", "L"):
        raise ConfigError(f"plot-axis must be U or L, got {resolved['plot_axis']!r}")
    spec = evaluation.SweepSpec(
        methods=resolved["methods"],
        labeled_values=resolved["labeled"],
        unlabeled_values=resolved["unlabeled"],
        split=resolved["split"],
        seed=resolved["seed"],
    )
    matrix, catalog, split = _load_inputs(resolved)
    jobs = resolved["jobs"] or (os.cpu_count() or 1)
    results = evaluation.run_sweep(
        spec, catalog, matrix, split, lp_config=_lp_config(resolved), jobs=jobs
    )
    out_dir = Path(resolved["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if resolved["format"] in ("csv", "both"):
        written.append(evaluation.emit_report(results, out_dir / "report.csv", "csv"))
    if resolved["format"] in ("json", "both"):
        written.append(evaluation.emit_report(results, out_dir / "report.json", "json"))
    if resolved["plot_axis"]:
        axis = resolved["plot_axis"].upper()
        plot_path = out_dir / f"plot_{axis}.csv"
        plot_path.write_text(evaluation.render_plot_series(results, axis), encoding="utf-8")
        written.append(plot_path)
    _echo_config(out_dir, "sweep", resolved)
    for r in results:
        print(
            f"{r.method:>6}  L={simulation.count_label(r.labeled):>4} "
            f"U={simulation.count_label(r.unlabeled):>4}  "
            f"SIER {100 * r.micro_sier:6.2f}%  ({r.total_errors}/{r.total_holdouts})"
        )
    print("wrote " + ", ".join(str(p) for p in written))
    return 0


def _cmd_score(args) -> int:
    schema = {
        "manifest": (_to_str, _REQUIRED),
        "split_file": (_to_str, _REQUIRED),
        "household": (_to_str, _REQUIRED),
        "method": (_to_str, "lp"),
        "trace": (_to_str, ""),
        **_LP_SCHEMA,
    }
    resolved = _resolve(args, schema)
    method = resolved["method"]
    if method not in SCORERS:
        raise ConfigError(f"unknown method {method!r}; choose from {', '.join(METHOD_NAMES)}")
    matrix, catalog, split = _load_inputs(resolved)
    entry = _entry_for(split, resolved["household"])
    inp, truths = evaluation.scorer_input_for_cell(
        catalog, matrix, entry,
        split.labeled_per_speaker, split.unlabeled_per_household,
        split.seed, _lp_config(resolved),
    )
    prediction = SCORERS[method](inp)
    holdout_ids = entry.utterance_ids_with_role(data_model.Role.HOLDOUT)
    print(f"# household {entry.household_id} method {method} "
          f"speakers {','.join(entry.speaker_ids)}")
    errors = 0
    for i, uid in enumerate(holdout_ids):
        scores = " ".join(f"{s:.4f}" for s in prediction.scores[i])
        ok = prediction.predicted[i] == truths[i]
        errors += 0 if ok else 1
        print(f"{uid}\t{prediction.predicted[i]}\t{truths[i]}\t{'ok' if ok else 'MISS'}\t{scores}")
    print(f"# SIER {errors}/{len(truths)} = {100 * errors / len(truths):.2f}%")
    if resolved["trace"]:
        if prediction.propagation_deltas is None:
            raise ConfigError(f"method {method!r} has no propagation trace; use an lp-family method")
        trace_lines = ["iteration,delta"]
        trace_lines += [f"{i},{d:.17e}" for i, d in enumerate(prediction.propagation_deltas, start=1)]
        Path(resolved["trace"]).write_text("\n".join(trace_lines) + "\n", encoding="utf-8")
        print(f"# wrote trace to {resolved['trace']}")
    return 0


def _cmd_dump_graph(args) -> int:
    schema = {
        "manifest": (_to_str, _REQUIRED),
        "split_file": (_to_str, _REQUIRED),
        "household": (_to_str, _REQUIRED),
        "sigma": (_to_float, DEFAULT_SIGMA),
        "out": (_to_str, "out"),
    }
    resolved = _resolve(args, schema)
    matrix, catalog, split = _load_inputs(resolved)
    entry = _entry_for(split, resolved["household"])
    rows = [catalog.by_id(uid).row for uid in entry.roles]
    graph = build_affinity(matrix.take(rows), resolved["sigma"])
    out_dir = Path(resolved["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    weights_path = out_dir / f"{entry.household_id}_weights.csv"
    operator_path = out_dir / f"{entry.household_id}_operator.csv"
    np.savetxt(weights_path, graph.weights, fmt="%.17e", delimiter=",")
    np.savetxt(operator_path, graph.operator, fmt="%.17e", delimiter=",")
    _echo_config(out_dir, "dump-graph", resolved)
    print(f"wrote {weights_path} and {operator_path} ({graph.n} nodes, sigma {graph.sigma})")
    return 0


# ---------------------------------------------------------------------------
# Parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="speakerlp",
        description="Graph-based label propagation benchmark for household speaker identification.",
    )
    sub = parser.add_subparsers(dest="command")
    parser.set_defaults(command=None)

    def add(name, handler, help_text, options):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key=value config file; flags override it")
        for flag, help_str in options:
            p.add_argument(flag, help=help_str)
        p.set_defaults(handler=handler, command=name)
        return p

    lp_opts = [
        ("--sigma", f"affinity kernel width (default {DEFAULT_SIGMA})"),
        ("--alpha", f"propagation clamping factor in (0,1) (default {DEFAULT_ALPHA})"),
        ("--max-iterations", f"propagation iteration cap (default {DEFAULT_MAX_ITERATIONS})"),
        ("--tolerance", f"propagation stop tolerance (default {DEFAULT_TOLERANCE})"),
    ]

    add("gen-synth", _cmd_gen_synth, "generate a synthetic embedding dataset", [
        ("--speakers", "number of synthetic speakers"),
        ("--dim", "embedding dimensionality (default 16)"),
        ("--utterances", "utterances per speaker (default 30)"),
        ("--spread", "intra-class Gaussian spread (default 0.05)"),
        ("--seed", "RNG seed (default 0)"),
        ("--out", "output directory (default ./out)"),
    ])
    add("build-households", _cmd_build_households, "simulate households from a manifest", [
        ("--manifest", "dataset manifest path"),
        ("--households", "DEV,VAL household counts (default 112,200)"),
        ("--household-size", "speakers per household (default 4)"),
        ("--holdout", "holdout utterances per speaker (default 10)"),
        ("--labeled", "labeled utterances per speaker, integer or 'all' (default 2)"),
        ("--unlabeled", "unlabeled utterances per household, integer or 'all' (default all)"),
        ("--seed", "RNG seed (default 0)"),
        ("--out", "output directory (default ./out)"),
    ])
    add("sweep", _cmd_sweep, "run a method x (L,U) sweep and write reports", [
        ("--manifest", "dataset manifest path"),
        ("--split-file", "household split file path"),
        ("--split", "dev or val (default val)"),
        ("--methods", f"comma list of methods (default all: {','.join(METHOD_NAMES)})"),
        ("--labeled", "comma list of L values, integers or 'all' (default 2)"),
        ("--unlabeled", "comma list of U values, integers or 'all' (default all)"),
        ("--seed", "sweep sampling seed (default 0)"),
        ("--jobs", "concurrent household evaluations (default: CPU count)"),
        ("--format", "report format: csv, json, or both (default both)"),
        ("--plot-axis", "emit plot series over this axis: U or L"),
        ("--out", "output directory (default ./out)"),
        *lp_opts,
    ])
    add("score", _cmd_score, "score one household and print predictions", [
        ("--manifest", "dataset manifest path"),
        ("--split-file", "household split file path"),
        ("--household", "household id to score"),
        ("--method", f"scoring method (default lp; one of {','.join(METHOD_NAMES)})"),
        ("--trace", "write per-iteration propagation deltas to this CSV path"),
        *lp_opts,
    ])
    add("dump-graph", _cmd_dump_graph, "dump a household's W and S matrices as CSV", [
        ("--manifest", "dataset manifest path"),
        ("--split-file", "household split file path"),
        ("--household", "household id to dump"),
        ("--sigma", f"affinity kernel width (default {DEFAULT_SIGMA})"),
        ("--out", "output directory (default ./out)"),
    ])
    return parser


if __name__ == "__main__":
    sys.exit(main())
