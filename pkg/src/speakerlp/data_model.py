"""Core domain types, dataset file formats, and ingestion.

On-disk layout of a dataset:

* ``manifest.jsonl`` -- JSONL; the first line is a header object with
  ``dim`` (embedding dimensionality), ``count`` (number of utterances) and
  ``embedding_file`` (path to the payload, relative to the manifest).  Each
  following line is one utterance record with ``utterance_id``,
  ``speaker_id`` and ``row`` (its row in the payload).
* payload -- ``count * dim`` little-endian IEEE-754 32-bit floats,
  row-major, no header.
* split file -- JSON describing simulated households and per-utterance
  role assignments, written by the simulation module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DatasetError, ManifestError

SPLIT_FORMAT = "speakerlp-split-v1"


class Role(Enum):
    """Role of an utterance inside a household dataset."""

    LABELED = "labeled"
    UNLABELED = "unlabeled"
    HOLDOUT = "holdout"


@dataclass(frozen=True)
class Utterance:
    """One utterance record: identity, ground-truth speaker, matrix row."""

    utterance_id: str
    speaker_id: str
    row: int


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Dense row-per-utterance matrix of float32 speaker embeddings."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise DatasetError(f"embedding matrix must be 2-D, got shape {arr.shape}")
        if arr.shape[1] < 1:
            raise DatasetError("embedding dimensionality must be positive")
        if not np.isfinite(arr).all():
            bad = int(np.argwhere(~np.isfinite(arr))[0][0])
            raise DatasetError(f"non-finite value in embedding row {bad}")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def take(self, rows) -> np.ndarray:
        """Copy of the given rows, as float32."""
        return self.data[np.asarray(rows, dtype=np.intp)]


class Catalog:
    """Ordered collection of utterance records backed by one embedding matrix.

    Speakers are listed in order of first appearance.  Utterance ids must be
    unique; duplicates are a load error.
    """

    def __init__(self, utterances) -> None:
        self.utterances: tuple[Utterance, ...] = tuple(utterances)
        self._by_id: dict[str, Utterance] = {}
        by_speaker: dict[str, list[Utterance]] = {}
        for utt in self.utterances:
            if utt.utterance_id in self._by_id:
                raise ManifestError(f"duplicate utterance_id {utt.utterance_id!r}")
            self._by_id[utt.utterance_id] = utt
            by_speaker.setdefault(utt.speaker_id, []).append(utt)
        self._by_speaker = {spk: tuple(utts) for spk, utts in by_speaker.items()}
        self.speakers: tuple[str, ...] = tuple(self._by_speaker)

    def __len__(self) -> int:
        return len(self.utterances)

    def by_id(self, utterance_id: str) -> Utterance:
        try:
            return self._by_id[utterance_id]
        except KeyError:
            raise ManifestError(f"unknown utterance_id {utterance_id!r}") from None

    def of_speaker(self, speaker_id: str) -> tuple[Utterance, ...]:
        try:
            return self._by_speaker[speaker_id]
        except KeyError:
            raise ManifestError(f"unknown speaker_id {speaker_id!r}") from None


@dataclass(frozen=True)
class HouseholdDataset:
    """One household's utterances partitioned into labeled/unlabeled/holdout.

    Ground-truth speakers are kept here for the harness; scorers only ever
    see labels for ``Role.LABELED`` rows (see the evaluation module).
    """

    household_id: str
    speakers: tuple[str, ...]
    utterances: tuple[tuple[Utterance, Role], ...]
    embeddings: EmbeddingMatrix

    def __post_init__(self) -> None:
        if len(self.speakers) < 2:
            raise DatasetError(
                f"household {self.household_id!r} needs >= 2 speakers, "
                f"got {len(self.speakers)}"
            )
        if len(set(self.speakers)) != len(self.speakers):
            raise DatasetError(f"household {self.household_id!r} has duplicate speakers")
        seen: set[str] = set()
        labeled_per_speaker = {spk: 0 for spk in self.speakers}
        for utt, role in self.utterances:
            if utt.utterance_id in seen:
                raise DatasetError(
                    f"utterance {utt.utterance_id!r} assigned more than one role"
                )
            seen.add(utt.utterance_id)
            if utt.speaker_id not in labeled_per_speaker:
                raise DatasetError(
                    f"utterance {utt.utterance_id!r} belongs to {utt.speaker_id!r}, "
                    f"not a member of household {self.household_id!r}"
                )
            if not 0 <= utt.row < self.embeddings.rows:
                raise DatasetError(
                    f"utterance {utt.utterance_id!r} row {utt.row} out of range"
                )
            if role is Role.LABELED:
                labeled_per_speaker[utt.speaker_id] += 1
        missing = [spk for spk, n in labeled_per_speaker.items() if n == 0]
        if missing:
            raise DatasetError(
                f"household {self.household_id!r} has no labeled utterance for "
                f"speaker(s) {', '.join(missing)}"
            )

    def with_role(self, role: Role) -> tuple[Utterance, ...]:
        return tuple(utt for utt, r in self.utterances if r is role)

    def rows_with_role(self, role: Role) -> list[int]:
        return [utt.row for utt, r in self.utterances if r is role]


def load_dataset(manifest_path) -> tuple[EmbeddingMatrix, Catalog]:
    """Load a manifest + binary embedding payload.

    Raises:
        ManifestError: missing files, malformed header or records, a size
            mismatch between header ``dim``/``count`` and the payload, a
            non-finite embedding value, or duplicate utterance ids.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise ManifestError(f"manifest not found: {manifest_path}")
    with manifest_path.open("r", encoding="utf-8") as fh:
        lines = [line for line in (raw.strip() for raw in fh) if line]
    if not lines:
        raise ManifestError(f"manifest is empty: {manifest_path}")

    header = _parse_json_line(lines[0], manifest_path, 1)
    try:
        dim = int(header["dim"])
        count = int(header["count"])
        embedding_file = str(header["embedding_file"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"bad manifest header in {manifest_path}: {exc}") from exc
    if dim < 1 or count < 1:
        raise ManifestError(f"manifest header requires dim >= 1 and count >= 1, got dim={dim} count={count}")

    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        obj = _parse_json_line(line, manifest_path, lineno)
        try:
            records.append(
                Utterance(
                    utterance_id=str(obj["utterance_id"]),
                    speaker_id=str(obj["speaker_id"]),
                    row=int(obj["row"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(
                f"bad manifest record at {manifest_path}:{lineno}: {exc}"
            ) from exc
    if len(records) != count:
        raise ManifestError(
            f"manifest header says count={count} but {len(records)} records follow"
        )
    rows = sorted(r.row for r in records)
    if rows != list(range(count)):
        raise ManifestError("manifest rows must cover 0..count-1 exactly once")

    payload_path = manifest_path.parent / embedding_file
    if not payload_path.is_file():
        raise ManifestError(f"embedding payload not found: {payload_path}")
    expected = count * dim * 4
    actual = payload_path.stat().st_size
    if actual != expected:
        raise ManifestError(
            f"dimension mismatch: payload {payload_path} holds {actual} bytes, "
            f"expected {expected} ({count} x {dim} float32)"
        )
    flat = np.fromfile(payload_path, dtype="<f4")
    matrix = EmbeddingMatrix(flat.reshape(count, dim))
    return matrix, Catalog(records)


def write_dataset(manifest_path, matrix: EmbeddingMatrix, catalog: Catalog,
                  embedding_file: str = "embeddings.f32") -> None:
    """Write manifest + payload; the exact inverse of :func:`load_dataset`."""
    manifest_path = Path(manifest_path)
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    header = {"dim": matrix.dim, "count": matrix.rows, "embedding_file": embedding_file}
    with manifest_path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for utt in catalog.utterances:
            fh.write(json.dumps({
                "utterance_id": utt.utterance_id,
                "speaker_id": utt.speaker_id,
                "row": utt.row,
            }) + "\n")
    matrix.data.astype("<f4").tofile(manifest_path.parent / embedding_file)


def l2_normalize(matrix: EmbeddingMatrix) -> EmbeddingMatrix:
    """Return a copy with every row scaled to unit Euclidean norm.

    Raises:
        DatasetError: if any row has zero norm.
    """
    data = matrix.data.astype(np.float64)
    norms = np.linalg.norm(data, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise DatasetError(f"cannot L2-normalize zero-norm row {int(zero[0])}")
    return EmbeddingMatrix((data / norms[:, None]).astype(np.float32))


def _parse_json_line(line: str, path: Path, lineno: int) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"invalid JSON at {path}:{lineno}: {exc}") from exc
    if not isinstance(obj, dict):
        raise ManifestError(f"expected a JSON object at {path}:{lineno}")
    return obj


# ---------------------------------------------------------------------------
# Household split file


@dataclass(frozen=True)
class SplitEntry:
    """One household's membership and role assignments."""

    household_id: str
    split: str
    speaker_ids: tuple[str, ...]
    roles: dict[str, Role] = field(compare=False)

    def utterance_ids_with_role(self, role: Role) -> list[str]:
        return [uid for uid, r in self.roles.items() if r is role]


@dataclass(frozen=True)
class SplitFile:
    """Parsed household split file: the authoritative record of a simulation."""

    seed: int
    household_size: int
    holdout_per_speaker: int
    labeled_per_speaker: int | str
    unlabeled_per_household: int | str
    dropped_speakers: tuple[str, ...]
    entries: tuple[SplitEntry, ...]

    def for_split(self, split: str) -> tuple[SplitEntry, ...]:
        return tuple(e for e in self.entries if e.split == split)


def write_split(path, split: SplitFile) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "format": SPLIT_FORMAT,
        "seed": split.seed,
        "household_size": split.household_size,
        "holdout_per_speaker": split.holdout_per_speaker,
        "labeled_per_speaker": split.labeled_per_speaker,
        "unlabeled_per_household": split.unlabeled_per_household,
        "dropped_speakers": list(split.dropped_speakers),
        "households": [
            {
                "household_id": entry.household_id,
                "split": entry.split,
                "speaker_ids": list(entry.speaker_ids),
                "utterances": [
                    {"utterance_id": uid, "role": role.value}
                    for uid, role in entry.roles.items()
                ],
            }
            for entry in split.entries
        ],
    }
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def read_split(path) -> SplitFile:
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"split file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"invalid JSON in split file {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != SPLIT_FORMAT:
        raise ManifestError(f"{path} is not a {SPLIT_FORMAT} split file")
    try:
        entries = []
        for hh in doc["households"]:
            roles = {}
            for rec in hh["utterances"]:
                roles[str(rec["utterance_id"])] = Role(rec["role"])
            entries.append(SplitEntry(
                household_id=str(hh["household_id"]),
                split=str(hh["split"]),
                speaker_ids=tuple(str(s) for s in hh["speaker_ids"]),
                roles=roles,
            ))
        return SplitFile(
            seed=int(doc["seed"]),
            household_size=int(doc["household_size"]),
            holdout_per_speaker=int(doc["holdout_per_speaker"]),
            labeled_per_speaker=_count_from_json(doc["labeled_per_speaker"]),
            unlabeled_per_household=_count_from_json(doc["unlabeled_per_household"]),
            dropped_speakers=tuple(str(s) for s in doc.get("dropped_speakers", [])),
            entries=tuple(entries),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"malformed split file {path}: {exc}") from exc


def _count_from_json(value) -> int | str:
    if isinstance(value, str):
        if value.lower() != "all":
            raise ValueError(f"count must be an integer or 'all', got {value!r}")
        return "all"
    return int(value)


def datasets_from_split(split: SplitFile, catalog: Catalog,
                        matrix: EmbeddingMatrix) -> list[tuple[HouseholdDataset, str]]:
    """Materialize households from a split file against a loaded dataset."""
    out = []
    for entry in split.entries:
        pairs = tuple(
            (catalog.by_id(uid), role) for uid, role in entry.roles.items()
        )
        household = HouseholdDataset(
            household_id=entry.household_id,
            speakers=entry.speaker_ids,
            utterances=pairs,
            embeddings=matrix,
        )
        out.append((household, entry.split))
    return out
