"""SIER metric, method/configuration sweeps, and report emission.

The speaker identification error rate (SIER) is 1 minus top-1 accuracy over
holdout utterances.  Sweeps report the micro average (pooled errors over
pooled holdout count across households) as the headline number and the
macro average (mean of per-household rates) as a secondary column.
Fractions are used everywhere internally; only console summaries print
percent.

Within a sweep cell every method sees the identical ScorerInput, so method
comparisons are paired.  The holdout set comes from the split file and is
the same for every (method, L, U) cell; labeled/unlabeled draws are
re-derived per cell from the sweep seed (see the simulation module for the
sub-seeding scheme).
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data_model import Catalog, EmbeddingMatrix, Role, SplitEntry, SplitFile
from .errors import ConfigError, DatasetError
from .propagation import LpConfig
from .scoring import METHOD_NAMES, SCORERS, ScorerInput
from .simulation import ALL, count_label, count_sort_key, parse_count, sample_cell_roles


@dataclass(frozen=True)
class SierResult:
    """Micro/macro SIER for one (method, L, U) cell across households."""

    method: str
    labeled: int | str
    unlabeled: int | str
    per_household: tuple[tuple[str, int, int], ...]

    @property
    def total_errors(self) -> int:
        return sum(e for _, e, _ in self.per_household)

    @property
    def total_holdouts(self) -> int:
        return sum(c for _, _, c in self.per_household)

    @property
    def micro_sier(self) -> float:
        return self.total_errors / self.total_holdouts

    @property
    def macro_sier(self) -> float:
        return float(np.mean([e / c for _, e, c in self.per_household]))

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "L": count_label(self.labeled),
            "U": count_label(self.unlabeled),
            "per_household": [
                {"household_id": hh, "errors": e, "holdouts": c}
                for hh, e, c in self.per_household
            ],
            "micro_sier": self.micro_sier,
            "macro_sier": self.macro_sier,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SierResult":
        return cls(
            method=str(doc["method"]),
            labeled=parse_count(doc["L"]),
            unlabeled=parse_count(doc["U"]),
            per_household=tuple(
                (str(h["household_id"]), int(h["errors"]), int(h["holdouts"]))
                for h in doc["per_household"]
            ),
        )


@dataclass(frozen=True)
class SweepSpec:
    """Which methods and (L, U) cells to evaluate on which split."""

    methods: tuple[str, ...] = METHOD_NAMES
    labeled_values: tuple[int | str, ...] = (2,)
    unlabeled_values: tuple[int | str, ...] = (ALL,)
    split: str = "val"
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.methods:
            raise ConfigError("methods list must not be empty")
        unknown = [m for m in self.methods if m not in SCORERS]
        if unknown:
            raise ConfigError(
                f"unknown method {unknown[0]!r}; choose from {', '.join(METHOD_NAMES)}"
            )
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("methods list contains duplicates")
        if not self.labeled_values or not self.unlabeled_values:
            raise ConfigError("labeled_values and unlabeled_values must not be empty")
        labeled = tuple(parse_count(v) for v in self.labeled_values)
        for v in labeled:
            if v != ALL and v < 1:
                raise ConfigError(f"L must be >= 1 or 'all', got {v}")
        object.__setattr__(self, "labeled_values", labeled)
        object.__setattr__(
            self, "unlabeled_values", tuple(parse_count(v) for v in self.unlabeled_values)
        )
        if self.split not in ("dev", "val"):
            raise ConfigError(f"split must be 'dev' or 'val', got {self.split!r}")
        if self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed}")


def compute_sier(predicted, truths) -> tuple[int, int, float]:
    """(errors, count, error rate) for aligned predicted/true speaker lists."""
    predicted = list(predicted)
    truths = list(truths)
    if not truths:
        raise DatasetError("cannot compute SIER over zero holdout utterances")
    if len(predicted) != len(truths):
        raise DatasetError(
            f"prediction/truth length mismatch: {len(predicted)} vs {len(truths)}"
        )
    errors = sum(1 for p, t in zip(predicted, truths) if p != t)
    return errors, len(truths), errors / len(truths)


def scorer_input_for_cell(catalog: Catalog, matrix: EmbeddingMatrix, entry: SplitEntry,
                          labeled_per_speaker, unlabeled_per_household,
                          seed: int, lp_config: LpConfig,
                          ) -> tuple[ScorerInput, list[str]]:
    """Build one household's blinded scorer view for an (L, U) cell.

    Returns the input plus the holdout ground-truth speakers (harness-side
    only).  The holdout set and its order come from the split file; labeled
    and unlabeled rows are drawn via the seeded sub-stream scheme.
    """
    holdout_ids = entry.utterance_ids_with_role(Role.HOLDOUT)
    labeled, unlabeled = sample_cell_roles(
        catalog, entry.speaker_ids, set(holdout_ids),
        labeled_per_speaker, unlabeled_per_household, seed, entry.household_id,
    )
    holdout_utts = [catalog.by_id(uid) for uid in holdout_ids]
    inp = ScorerInput(
        labeled=matrix.take([u.row for u in labeled]),
        labeled_speakers=tuple(u.speaker_id for u in labeled),
        unlabeled=matrix.take([u.row for u in unlabeled]),
        holdout=matrix.take([u.row for u in holdout_utts]),
        speakers=entry.speaker_ids,
        lp_config=lp_config,
    )
    truths = [u.speaker_id for u in holdout_utts]
    return inp, truths


def run_sweep(spec: SweepSpec, catalog: Catalog, matrix: EmbeddingMatrix,
              split_file: SplitFile, lp_config: LpConfig | None = None,
              jobs: int | None = None) -> list[SierResult]:
    """Evaluate every (method, L, U) cell over the chosen split's households.

    Households are scored concurrently (``jobs`` threads, default: CPU
    count); aggregation order is fixed, so results do not depend on jobs.
    """
    lp_config = lp_config or LpConfig()
    entries = split_file.for_split(spec.split)
    if not entries:
        raise DatasetError(f"split file has no households in split {spec.split!r}")
    _check_feasible(spec, catalog, entries)

    cells = [(lab, unl) for lab in spec.labeled_values for unl in spec.unlabeled_values]

    def evaluate(task):
        entry, labeled_value, unlabeled_value = task
        inp, truths = scorer_input_for_cell(
            catalog, matrix, entry, labeled_value, unlabeled_value, spec.seed, lp_config
        )
        tallies = {}
        for method in spec.methods:
            prediction = SCORERS[method](inp)
            errors, count, _ = compute_sier(prediction.predicted, truths)
            tallies[method] = (errors, count)
        return tallies

    tasks = [(entry, lab, unl) for lab, unl in cells for entry in entries]
    workers = jobs if jobs and jobs > 0 else (os.cpu_count() or 1)
    if workers == 1:
        outcomes = [evaluate(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(evaluate, tasks))

    results = []
    position = 0
    for lab, unl in cells:
        cell_outcomes = outcomes[position:position + len(entries)]
        position += len(entries)
        for method in spec.methods:
            rows = tuple(
                (entry.household_id, *tallies[method])
                for entry, tallies in zip(entries, cell_outcomes)
            )
            results.append(SierResult(method, lab, unl, rows))
    results.sort(key=_row_key)
    return results


def _check_feasible(spec: SweepSpec, catalog: Catalog, entries) -> None:
    finite = [v for v in spec.labeled_values if v != ALL]
    if not finite:
        return
    largest = max(finite)
    for entry in entries:
        holdout = set(entry.utterance_ids_with_role(Role.HOLDOUT))
        for speaker in entry.speaker_ids:
            pool = [u for u in catalog.of_speaker(speaker) if u.utterance_id not in holdout]
            if len(pool) < largest:
                raise DatasetError(
                    f"household {entry.household_id!r}: speaker {speaker!r} has "
                    f"{len(pool)} non-holdout utterances, cannot supply L={largest}"
                )


def _row_key(result: SierResult):
    return (result.method, count_sort_key(result.labeled), count_sort_key(result.unlabeled))


# ---------------------------------------------------------------------------
# Report rendering


def render_csv(results) -> str:
    lines = ["method,L,U,households,holdouts,errors,micro_sier,macro_sier"]
    for r in sorted(results, key=_row_key):
        lines.append(
            f"{r.method},{count_label(r.labeled)},{count_label(r.unlabeled)},"
            f"{len(r.per_household)},{r.total_holdouts},{r.total_errors},"
            f"{r.micro_sier:.6f},{r.macro_sier:.6f}"
        )
    return "\n".join(lines) + "\n"


def render_json(results) -> str:
    doc = [r.to_dict() for r in sorted(results, key=_row_key)]
    return json.dumps(doc, indent=2) + "\n"


def parse_json_report(text: str) -> list[SierResult]:
    return [SierResult.from_dict(doc) for doc in json.loads(text)]


def render_plot_series(results, axis: str) -> str:
    """Per-method (x, micro_sier) series with x = U or L, for external plotting."""
    axis = axis.upper()
    if axis not in ("U", "L"):
        raise ConfigError(f"plot axis must be 'U' or 'L', got {axis!r}")
    lines = [f"method,{axis},micro_sier"]
    seen = set()
    for r in sorted(results, key=_row_key):
        x = r.unlabeled if axis == "U" else r.labeled
        key = (r.method, x)
        if key in seen:
            raise ConfigError(
                f"duplicate plot point for method {r.method!r} at {axis}={count_label(x)}; "
                f"fix the other axis to a single value"
            )
        seen.add(key)
        lines.append(f"{r.method},{count_label(x)},{r.micro_sier:.6f}")
    return "\n".join(lines) + "\n"


def emit_report(results, path, fmt: str) -> Path:
    """Write the sweep report as CSV or JSON; returns the written path."""
    if not results:
        raise DatasetError("refusing to write an empty report")
    if fmt == "csv":
        text = render_csv(results)
    elif fmt == "json":
        text = render_json(results)
    else:
        raise ConfigError(f"report format must be 'csv' or 'json', got {fmt!r}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")
    return path
