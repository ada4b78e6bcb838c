"""Per-household affinity graph and its normalized propagation operator.

Edge weights use a Gaussian kernel on squared Euclidean distance,
``w_ij = exp(-||x_i - x_j||^2 / sigma^2)`` with a zeroed diagonal.  Note the
kernel divides by ``sigma^2``, not ``2 sigma^2``; the default width 0.22 was
chosen for this form.  All graph arithmetic runs in float64 regardless of
the float32 embedding storage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_model import EmbeddingMatrix
from .errors import ConfigError, IsolatedNodeError


@dataclass(frozen=True)
class AffinityGraph:
    """Dense fully connected similarity graph over a household's utterances.

    ``weights`` is the symmetric edge-weight matrix with zero diagonal,
    ``degrees`` its row sums, and ``operator`` the symmetrically normalized
    matrix ``D^{-1/2} W D^{-1/2}`` used by label propagation.
    """

    weights: np.ndarray
    degrees: np.ndarray
    operator: np.ndarray
    sigma: float

    @property
    def n(self) -> int:
        return self.weights.shape[0]


def build_affinity(embeddings, sigma: float) -> AffinityGraph:
    """Build the fully connected affinity graph for a set of embeddings.

    Args:
        embeddings: (n, d) array or :class:`EmbeddingMatrix`, n >= 2.
        sigma: kernel width, > 0.

    Raises:
        ConfigError: non-positive sigma or fewer than two nodes.
        IsolatedNodeError: a node whose off-diagonal weights all underflowed
            to zero; the message names the node and suggests a larger sigma.
    """
    if isinstance(embeddings, EmbeddingMatrix):
        embeddings = embeddings.data
    x = np.asarray(embeddings, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ConfigError(f"affinity graph needs a 2-D array with >= 2 rows, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ConfigError("embeddings contain non-finite values")
    if not sigma > 0:
        raise ConfigError(f"sigma must be > 0, got {sigma}")

    weights = np.exp(-_squared_distances(x) / (sigma * sigma))
    np.fill_diagonal(weights, 0.0)
    degrees = weights.sum(axis=1)
    dead = np.flatnonzero(degrees <= 0.0)
    if dead.size:
        raise IsolatedNodeError(
            f"node {int(dead[0])} has zero degree: every pairwise weight "
            f"underflowed at sigma={sigma}; try a larger sigma"
        )
    inv_sqrt = 1.0 / np.sqrt(degrees)
    operator = weights * inv_sqrt[:, None] * inv_sqrt[None, :]
    return AffinityGraph(weights=weights, degrees=degrees, operator=operator, sigma=float(sigma))


def normalized_operator(graph: AffinityGraph) -> np.ndarray:
    """The propagation operator S with S[i,j] = W[i,j] / sqrt(deg_i * deg_j)."""
    return graph.operator


def symmetric_laplacian(graph: AffinityGraph) -> np.ndarray:
    """Symmetric normalized Laplacian, I - S (positive semi-definite)."""
    return np.eye(graph.n) - graph.operator


def _squared_distances(x: np.ndarray) -> np.ndarray:
    # Gram-matrix expansion; exactly symmetric because IEEE addition and
    # multiplication commute entry-wise.  Rounding can push tiny values
    # below zero, hence the clip.
    gram = x @ x.T
    sq_norms = np.einsum("ij,ij->i", x, x)
    d2 = sq_norms[:, None] + sq_norms[None, :] - 2.0 * gram
    np.clip(d2, 0.0, None, out=d2)
    return d2
