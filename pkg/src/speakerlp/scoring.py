"""The seven label-prediction methods behind one scorer interface.

Cosine-family methods (cs, csea and their 2-step variants) L2-normalize
embeddings on the fly and ignore graph structure; label-propagation methods
(lp, 2lp, 2lpea) build the Gaussian affinity graph over raw embeddings.
Two-step variants first pseudo-label the unlabeled rows with a hard argmax,
then treat those pseudo-labels as known in the second step.  With no
unlabeled rows every 2-step method collapses to its 1-step counterpart
(2lpea collapses to csea).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ScoringError
from .graph import build_affinity
from .propagation import LpConfig, init_label_matrix, propagate

__all__ = [
    "METHOD_NAMES",
    "Prediction",
    "SCORERS",
    "ScorerInput",
    "score_cs",
    "score_csea",
    "score_2cs",
    "score_2csea",
    "score_lp",
    "score_2lp",
    "score_2lpea",
]


@dataclass(frozen=True)
class ScorerInput:
    """A scorer's view of one household.

    Ground truth is exposed only through ``labeled_speakers``; unlabeled and
    holdout rows carry no identity.  Embedding rows are raw (not
    normalized); cosine methods normalize internally.
    """

    labeled: np.ndarray
    labeled_speakers: tuple[str, ...]
    unlabeled: np.ndarray
    holdout: np.ndarray
    speakers: tuple[str, ...]
    lp_config: LpConfig = field(default_factory=LpConfig)

    def __post_init__(self) -> None:
        labeled = np.atleast_2d(np.asarray(self.labeled, dtype=np.float64))
        dim = labeled.shape[1]
        unlabeled = _as_rows(self.unlabeled, dim, "unlabeled")
        holdout = _as_rows(self.holdout, dim, "holdout")
        object.__setattr__(self, "labeled", labeled)
        object.__setattr__(self, "unlabeled", unlabeled)
        object.__setattr__(self, "holdout", holdout)
        object.__setattr__(self, "labeled_speakers", tuple(self.labeled_speakers))
        object.__setattr__(self, "speakers", tuple(self.speakers))

        if labeled.shape[0] != len(self.labeled_speakers):
            raise ScoringError(
                f"{labeled.shape[0]} labeled rows but {len(self.labeled_speakers)} speaker labels"
            )
        if len(set(self.speakers)) != len(self.speakers) or not self.speakers:
            raise ScoringError("speaker list must be non-empty and free of duplicates")
        index = {spk: i for i, spk in enumerate(self.speakers)}
        unknown = [s for s in self.labeled_speakers if s not in index]
        if unknown:
            raise ScoringError(f"labeled speaker {unknown[0]!r} not in the speaker list")
        missing = set(self.speakers) - set(self.labeled_speakers)
        if missing:
            raise ScoringError(f"speaker {sorted(missing)[0]!r} has no labeled utterance")
        for name, block in (("labeled", labeled), ("unlabeled", unlabeled), ("holdout", holdout)):
            if not np.isfinite(block).all():
                raise ScoringError(f"non-finite value in {name} embeddings")

    @property
    def num_speakers(self) -> int:
        return len(self.speakers)

    def labeled_classes(self) -> np.ndarray:
        index = {spk: i for i, spk in enumerate(self.speakers)}
        return np.asarray([index[s] for s in self.labeled_speakers], dtype=np.intp)


@dataclass(frozen=True)
class Prediction:
    """Per-holdout predictions plus the full per-speaker score vectors.

    ``scores[i, j]`` is holdout row i's score for ``speakers[j]`` (cosine
    score or propagated soft label, depending on the method).  ``degenerate``
    lists holdout indices whose propagated row was all zero; those fall back
    to the lowest class index.
    """

    speakers: tuple[str, ...]
    scores: np.ndarray
    predicted: tuple[str, ...]
    degenerate: tuple[int, ...] = ()
    propagation_deltas: tuple[float, ...] | None = None


def score_cs(inp: ScorerInput) -> Prediction:
    """Cosine scoring: mean cosine to each speaker's labeled rows."""
    refs = _unit_rows(inp.labeled, "labeled")
    targets = _unit_rows(inp.holdout, "holdout")
    scores = _mean_cosine(targets, refs, inp.labeled_classes(), inp.num_speakers)
    return _from_scores(inp.speakers, scores)


def score_csea(inp: ScorerInput) -> Prediction:
    """Cosine scoring against per-speaker centroids of labeled rows."""
    refs = _unit_rows(inp.labeled, "labeled")
    targets = _unit_rows(inp.holdout, "holdout")
    centroids = _centroids(refs, inp.labeled_classes(), inp.speakers)
    return _from_scores(inp.speakers, targets @ centroids.T)


def score_2cs(inp: ScorerInput) -> Prediction:
    """Two-step cosine scoring: pseudo-label unlabeled rows, rescore with them."""
    if inp.unlabeled.shape[0] == 0:
        return score_cs(inp)
    refs = _unit_rows(inp.labeled, "labeled")
    classes = inp.labeled_classes()
    pseudo = np.argmax(
        _mean_cosine(_unit_rows(inp.unlabeled, "unlabeled"), refs, classes, inp.num_speakers),
        axis=1,
    )
    refs2 = np.vstack([refs, _unit_rows(inp.unlabeled, "unlabeled")])
    classes2 = np.concatenate([classes, pseudo])
    targets = _unit_rows(inp.holdout, "holdout")
    return _from_scores(inp.speakers, _mean_cosine(targets, refs2, classes2, inp.num_speakers))


def score_2csea(inp: ScorerInput) -> Prediction:
    """Two-step centroid scoring: CSEA pseudo-labels, centroids recomputed."""
    if inp.unlabeled.shape[0] == 0:
        return score_csea(inp)
    refs = _unit_rows(inp.labeled, "labeled")
    classes = inp.labeled_classes()
    unlabeled = _unit_rows(inp.unlabeled, "unlabeled")
    centroids = _centroids(refs, classes, inp.speakers)
    pseudo = np.argmax(unlabeled @ centroids.T, axis=1)
    refs2 = np.vstack([refs, unlabeled])
    classes2 = np.concatenate([classes, pseudo])
    centroids2 = _centroids(refs2, classes2, inp.speakers)
    targets = _unit_rows(inp.holdout, "holdout")
    return _from_scores(inp.speakers, targets @ centroids2.T)


def score_lp(inp: ScorerInput) -> Prediction:
    """Label propagation over one graph of labeled + unlabeled + holdout rows."""
    known = list(zip(range(inp.labeled.shape[0]), inp.labeled_classes()))
    result = _propagate_over(
        [inp.labeled, inp.unlabeled, inp.holdout], known, inp.num_speakers, inp.lp_config
    )
    start = inp.labeled.shape[0] + inp.unlabeled.shape[0]
    return _from_soft_labels(inp.speakers, result.soft_labels[start:], result.deltas)


def score_2lp(inp: ScorerInput) -> Prediction:
    """Two rounds of propagation; round two re-normalizes labels + pseudo-labels."""
    if inp.unlabeled.shape[0] == 0:
        return score_lp(inp)
    num_labeled = inp.labeled.shape[0]
    known = list(zip(range(num_labeled), inp.labeled_classes()))
    pseudo = _pseudo_label_unlabeled(inp, known)
    known2 = known + [(num_labeled + i, int(c)) for i, c in enumerate(pseudo)]
    result = _propagate_over(
        [inp.labeled, inp.unlabeled, inp.holdout], known2, inp.num_speakers, inp.lp_config
    )
    start = num_labeled + inp.unlabeled.shape[0]
    return _from_soft_labels(inp.speakers, result.soft_labels[start:], result.deltas)


def score_2lpea(inp: ScorerInput) -> Prediction:
    """Propagation pseudo-labels feeding centroid scoring."""
    if inp.unlabeled.shape[0] == 0:
        return score_csea(inp)
    known = list(zip(range(inp.labeled.shape[0]), inp.labeled_classes()))
    pseudo = _pseudo_label_unlabeled(inp, known)
    refs = np.vstack([
        _unit_rows(inp.labeled, "labeled"),
        _unit_rows(inp.unlabeled, "unlabeled"),
    ])
    classes = np.concatenate([inp.labeled_classes(), pseudo])
    centroids = _centroids(refs, classes, inp.speakers)
    targets = _unit_rows(inp.holdout, "holdout")
    return _from_scores(inp.speakers, targets @ centroids.T)


SCORERS = {
    "cs": score_cs,
    "csea": score_csea,
    "2cs": score_2cs,
    "2csea": score_2csea,
    "lp": score_lp,
    "2lp": score_2lp,
    "2lpea": score_2lpea,
}

METHOD_NAMES = tuple(SCORERS)


def _pseudo_label_unlabeled(inp: ScorerInput, known) -> np.ndarray:
    # Step-1 graph spans labeled + unlabeled rows only; holdout rows join in
    # step 2.
    result = _propagate_over(
        [inp.labeled, inp.unlabeled], known, inp.num_speakers, inp.lp_config
    )
    return result.hard_labels[inp.labeled.shape[0]:]


def _propagate_over(blocks, known, num_classes, config: LpConfig):
    stacked = np.vstack(blocks)
    graph = build_affinity(stacked, config.sigma)
    y0 = init_label_matrix(stacked.shape[0], num_classes, known)
    return propagate(graph.operator, y0, config)


def _from_scores(speakers, scores) -> Prediction:
    scores = np.asarray(scores, dtype=np.float64)
    picks = np.argmax(scores, axis=1) if scores.shape[0] else np.empty(0, dtype=np.intp)
    return Prediction(
        speakers=tuple(speakers),
        scores=scores,
        predicted=tuple(speakers[i] for i in picks),
    )


def _from_soft_labels(speakers, soft, deltas) -> Prediction:
    soft = np.asarray(soft, dtype=np.float64)
    picks = np.argmax(soft, axis=1) if soft.shape[0] else np.empty(0, dtype=np.intp)
    degenerate = tuple(int(i) for i in np.flatnonzero(~(soft.max(axis=1) > 0.0))) if soft.shape[0] else ()
    return Prediction(
        speakers=tuple(speakers),
        scores=soft,
        predicted=tuple(speakers[i] for i in picks),
        degenerate=degenerate,
        propagation_deltas=tuple(deltas),
    )


def _unit_rows(block: np.ndarray, name: str) -> np.ndarray:
    norms = np.linalg.norm(block, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ScoringError(f"zero-norm embedding at {name} row {int(zero[0])}")
    return block / norms[:, None]


def _mean_cosine(targets: np.ndarray, refs: np.ndarray, ref_classes: np.ndarray,
                 num_classes: int) -> np.ndarray:
    sims = targets @ refs.T
    pooling = np.zeros((refs.shape[0], num_classes))
    pooling[np.arange(refs.shape[0]), ref_classes] = 1.0
    # counts are never zero: reference sets always include the labeled rows,
    # which cover every class.
    counts = pooling.sum(axis=0)
    return sims @ (pooling / counts)


def _centroids(refs: np.ndarray, ref_classes: np.ndarray, speakers) -> np.ndarray:
    num_classes = len(speakers)
    pooling = np.zeros((refs.shape[0], num_classes))
    pooling[np.arange(refs.shape[0]), ref_classes] = 1.0
    counts = pooling.sum(axis=0)
    centroids = (pooling / counts).T @ refs
    norms = np.linalg.norm(centroids, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ScoringError(
            f"speaker {speakers[int(zero[0])]!r} has a zero-norm centroid "
            f"(embeddings cancel out)"
        )
    return centroids / norms[:, None]


def _as_rows(block, dim: int, name: str) -> np.ndarray:
    arr = np.asarray(block, dtype=np.float64)
    if arr.size == 0:
        return arr.reshape(0, dim)
    arr = np.atleast_2d(arr)
    if arr.shape[1] != dim:
        raise ScoringError(f"{name} rows have dim {arr.shape[1]}, labeled rows have {dim}")
    return arr
