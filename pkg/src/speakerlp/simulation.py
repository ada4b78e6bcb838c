"""Household simulation protocol and synthetic embedding generation.

Speakers are shuffled once per seed, partitioned into consecutive groups of
``household_size`` (the remainder is dropped), and the first
``dev_households`` groups form the dev split with the next
``val_households`` forming val.  Per household, a fixed holdout set is drawn
once per speaker; labeled and unlabeled subsets are then drawn from the
remaining utterances and can be re-drawn per (L, U) configuration without
disturbing the holdout.

All randomness flows from one top-level seed through numpy's PCG64
generator.  Sub-streams are derived as ``default_rng(first 8 bytes,
big-endian, of SHA-256("seed|tag|part|..."))``, which keeps every draw
reproducible and independent of evaluation order.  The labeled draw's key
deliberately omits U, so baseline scorers that ignore unlabeled data see
identical enrollment across U configurations.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .data_model import Catalog, EmbeddingMatrix, HouseholdDataset, Role, SplitEntry, SplitFile, Utterance
from .errors import ConfigError, InsufficientDataError

ALL = "all"


def parse_count(value) -> int | str:
    """Parse an L/U setting: a non-negative integer or the string 'all'."""
    if isinstance(value, str):
        text = value.strip().lower()
        if text == ALL:
            return ALL
        try:
            value = int(text)
        except ValueError:
            raise ConfigError(f"expected an integer or 'all', got {value!r}") from None
    if value < 0:
        raise ConfigError(f"count must be >= 0 or 'all', got {value}")
    return int(value)


def count_label(value) -> str:
    """Human/report form of an L/U setting ('All' sorts and prints last)."""
    return "All" if value == ALL else str(value)


def count_sort_key(value) -> tuple[int, int]:
    return (1, 0) if value == ALL else (0, int(value))


def derive_rng(seed: int, *parts) -> np.random.Generator:
    """Deterministic PCG64 sub-stream for (seed, parts)."""
    key = "|".join([str(seed), *(str(p) for p in parts)])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "big"))


@dataclass(frozen=True)
class SimulationConfig:
    """Household simulation knobs; defaults follow the benchmark protocol."""

    household_size: int = 4
    dev_households: int = 112
    val_households: int = 200
    holdout_per_speaker: int = 10
    labeled_per_speaker: int | str = 2
    unlabeled_per_household: int | str = ALL
    seed: int = 0

    def __post_init__(self) -> None:
        if self.household_size < 2:
            raise ConfigError(f"household_size must be >= 2, got {self.household_size}")
        if self.dev_households < 1 or self.val_households < 1:
            raise ConfigError(
                f"dev_households and val_households must be >= 1, got "
                f"{self.dev_households} and {self.val_households}"
            )
        if self.holdout_per_speaker < 1:
            raise ConfigError(f"holdout_per_speaker must be >= 1, got {self.holdout_per_speaker}")
        labeled = parse_count(self.labeled_per_speaker)
        if labeled != ALL and labeled < 1:
            raise ConfigError(f"labeled_per_speaker must be >= 1 or 'all', got {labeled}")
        object.__setattr__(self, "labeled_per_speaker", labeled)
        object.__setattr__(self, "unlabeled_per_household", parse_count(self.unlabeled_per_household))
        if self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed}")


@dataclass(frozen=True)
class SynthConfig:
    """Synthetic embedding world: Gaussian clusters around unit-sphere means."""

    n_speakers: int
    dim: int
    utterances_per_speaker: int
    intra_class_spread: float
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_speakers < 1:
            raise ConfigError(f"n_speakers must be >= 1, got {self.n_speakers}")
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if self.utterances_per_speaker < 1:
            raise ConfigError(
                f"utterances_per_speaker must be >= 1, got {self.utterances_per_speaker}"
            )
        if not self.intra_class_spread > 0:
            raise ConfigError(f"intra_class_spread must be > 0, got {self.intra_class_spread}")
        if self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed}")


def generate_synthetic(config: SynthConfig, means: np.ndarray | None = None,
                       ) -> tuple[EmbeddingMatrix, Catalog]:
    """Generate a synthetic speaker catalog with clustered embeddings.

    Each speaker gets a mean direction sampled uniformly on the unit sphere
    (or taken from ``means`` when supplied); each utterance is the mean plus
    per-coordinate Gaussian noise of scale ``intra_class_spread``, then
    L2-normalized.  Deterministic given the seed.
    """
    rng = np.random.default_rng(config.seed)
    if means is None:
        means = rng.normal(size=(config.n_speakers, config.dim))
        means /= np.linalg.norm(means, axis=1, keepdims=True)
    else:
        means = np.asarray(means, dtype=np.float64)
        if means.shape != (config.n_speakers, config.dim):
            raise ConfigError(
                f"means must have shape ({config.n_speakers}, {config.dim}), got {means.shape}"
            )

    per = config.utterances_per_speaker
    rows = np.empty((config.n_speakers * per, config.dim), dtype=np.float64)
    records = []
    for spk_index in range(config.n_speakers):
        speaker_id = f"s{spk_index:04d}"
        noise = rng.normal(scale=config.intra_class_spread, size=(per, config.dim))
        block = means[spk_index] + noise
        block /= np.linalg.norm(block, axis=1, keepdims=True)
        start = spk_index * per
        rows[start:start + per] = block
        for j in range(per):
            records.append(Utterance(f"{speaker_id}_u{j:03d}", speaker_id, start + j))
    return EmbeddingMatrix(rows.astype(np.float32)), Catalog(records)


def select_holdout(catalog: Catalog, speakers, holdout_per_speaker: int, seed: int,
                   household_id: str) -> list[Utterance]:
    """Fixed per-household holdout draw: ``holdout_per_speaker`` rows per speaker.

    The sub-seed depends only on (seed, household_id), so the holdout set is
    identical across every (L, U) configuration.
    """
    rng = derive_rng(seed, "holdout", household_id)
    holdout: list[Utterance] = []
    for speaker in speakers:
        utts = catalog.of_speaker(speaker)
        if len(utts) < holdout_per_speaker:
            raise InsufficientDataError(
                f"speaker {speaker!r} in household {household_id!r} has {len(utts)} "
                f"utterances, needs >= {holdout_per_speaker} for the holdout draw"
            )
        picks = rng.choice(len(utts), size=holdout_per_speaker, replace=False)
        holdout.extend(utts[i] for i in picks)
    return holdout


def sample_cell_roles(catalog: Catalog, speakers, holdout_ids: set[str],
                      labeled_per_speaker, unlabeled_per_household,
                      seed: int, household_id: str,
                      ) -> tuple[list[Utterance], list[Utterance]]:
    """Draw labeled and unlabeled subsets for one (L, U) configuration.

    Labeled rows: L per speaker (or all non-holdout rows), sub-seeded by
    (seed, household, L).  Unlabeled rows: U drawn from the household's
    pooled remaining rows (clamped to availability, or all), sub-seeded by
    (seed, household, L, U).
    """
    labeled_per_speaker = parse_count(labeled_per_speaker)
    unlabeled_per_household = parse_count(unlabeled_per_household)
    rng_labeled = derive_rng(seed, "labeled", household_id, count_label(labeled_per_speaker))

    labeled: list[Utterance] = []
    for speaker in speakers:
        pool = [u for u in catalog.of_speaker(speaker) if u.utterance_id not in holdout_ids]
        if labeled_per_speaker == ALL:
            chosen = pool
        else:
            if len(pool) < labeled_per_speaker:
                raise InsufficientDataError(
                    f"speaker {speaker!r} in household {household_id!r} has {len(pool)} "
                    f"non-holdout utterances, needs {labeled_per_speaker} labeled"
                )
            picks = rng_labeled.choice(len(pool), size=labeled_per_speaker, replace=False)
            chosen = [pool[i] for i in picks]
        if not chosen:
            raise InsufficientDataError(
                f"speaker {speaker!r} in household {household_id!r} has no utterance "
                f"left to enroll"
            )
        labeled.extend(chosen)

    taken = holdout_ids | {u.utterance_id for u in labeled}
    remaining = [
        u
        for speaker in speakers
        for u in catalog.of_speaker(speaker)
        if u.utterance_id not in taken
    ]
    if unlabeled_per_household == ALL:
        unlabeled = list(remaining)
    else:
        rng_unlabeled = derive_rng(
            seed, "unlabeled", household_id,
            count_label(labeled_per_speaker), count_label(unlabeled_per_household),
        )
        k = min(unlabeled_per_household, len(remaining))
        picks = rng_unlabeled.choice(len(remaining), size=k, replace=False)
        unlabeled = [remaining[i] for i in picks]
    return labeled, unlabeled


def build_households(catalog: Catalog, matrix: EmbeddingMatrix, config: SimulationConfig,
                     ) -> tuple[list[tuple[HouseholdDataset, str]], tuple[str, ...]]:
    """Simulate households from a speaker catalog.

    Returns (list of (household, split-name) pairs, dropped speaker ids).
    Deterministic given ``config.seed``.
    """
    size = config.household_size
    wanted = config.dev_households + config.val_households
    speakers = list(catalog.speakers)
    if len(speakers) < size * wanted:
        raise InsufficientDataError(
            f"need {size * wanted} speakers for {config.dev_households} dev + "
            f"{config.val_households} val households of size {size}, "
            f"catalog has {len(speakers)}"
        )
    rng = derive_rng(config.seed, "households")
    shuffled = [speakers[i] for i in rng.permutation(len(speakers))]

    assignments: list[tuple[HouseholdDataset, str]] = []
    for index in range(wanted):
        members = tuple(shuffled[index * size:(index + 1) * size])
        household_id = f"hh{index:04d}"
        split = "dev" if index < config.dev_households else "val"
        holdout = select_holdout(
            catalog, members, config.holdout_per_speaker, config.seed, household_id
        )
        holdout_ids = {u.utterance_id for u in holdout}
        labeled, unlabeled = sample_cell_roles(
            catalog, members, holdout_ids,
            config.labeled_per_speaker, config.unlabeled_per_household,
            config.seed, household_id,
        )
        pairs = (
            [(u, Role.LABELED) for u in labeled]
            + [(u, Role.UNLABELED) for u in unlabeled]
            + [(u, Role.HOLDOUT) for u in holdout]
        )
        household = HouseholdDataset(
            household_id=household_id,
            speakers=members,
            utterances=tuple(pairs),
            embeddings=matrix,
        )
        assignments.append((household, split))
    dropped = tuple(shuffled[size * wanted:])
    return assignments, dropped


def split_file_from(assignments, config: SimulationConfig, dropped) -> SplitFile:
    """Pack simulated households into the on-disk split-file structure."""
    entries = []
    for household, split in assignments:
        roles = {utt.utterance_id: role for utt, role in household.utterances}
        entries.append(SplitEntry(
            household_id=household.household_id,
            split=split,
            speaker_ids=household.speakers,
            roles=roles,
        ))
    return SplitFile(
        seed=config.seed,
        household_size=config.household_size,
        holdout_per_speaker=config.holdout_per_speaker,
        labeled_per_speaker=config.labeled_per_speaker,
        unlabeled_per_household=config.unlabeled_per_household,
        dropped_speakers=tuple(dropped),
        entries=tuple(entries),
    )
