"""Iterative label propagation with class normalization, plus its closed form.

The iteration ``Y(t+1) = alpha * S @ Y(t) + (1 - alpha) * Y(0)`` is the
local-and-global-consistency scheme of Zhou et al.; for ``alpha`` in (0, 1)
and spectral radius of S at most 1 it converges to the closed-form solution
``(1 - alpha) * (I - alpha S)^{-1} Y(0)``, which :func:`solve_closed_form`
computes by a dense linear solve and which doubles as an oracle for the
iterative path.  ``alpha`` plays the role of the usual graph-regularization
weight via ``alpha = 1 / (1 + lam)``; configuration exposes alpha only.

Class normalization divides every column of the initial label matrix by its
column sum, so enrollment (or pseudo-label) imbalance between classes does
not bias the propagated mass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, PropagationError

DEFAULT_SIGMA = 0.22
DEFAULT_ALPHA = 0.99
DEFAULT_TOLERANCE = 1e-9
DEFAULT_MAX_ITERATIONS = 1000


@dataclass(frozen=True)
class LpConfig:
    """Knobs for graph construction and the propagation loop.

    The iteration stops when the max-abs entry change drops below
    ``tolerance`` or after ``max_iterations`` updates, whichever fires
    first; :class:`PropagationResult.converged` records which one did.
    """

    alpha: float = DEFAULT_ALPHA
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    tolerance: float = DEFAULT_TOLERANCE
    sigma: float = DEFAULT_SIGMA

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must be in the open interval (0, 1), got {self.alpha}")
        if self.max_iterations < 1:
            raise ConfigError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not self.tolerance > 0:
            raise ConfigError(f"tolerance must be > 0, got {self.tolerance}")
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be > 0, got {self.sigma}")


@dataclass(frozen=True)
class PropagationResult:
    """Final soft labels plus hard argmax labels and convergence telemetry.

    ``deltas[t]`` is the max-abs entry change produced by update ``t + 1``;
    it doubles as the per-iteration trace for debugging.
    """

    soft_labels: np.ndarray
    hard_labels: np.ndarray
    iterations_used: int
    converged: bool
    final_delta: float
    deltas: tuple[float, ...]


def init_label_matrix(n: int, num_classes: int, known) -> np.ndarray:
    """Initial (n, C) label matrix: one-hot rows for known nodes, then
    each nonzero column scaled to sum 1.

    ``known`` is an iterable of (node index, class index) pairs, at most one
    per node.  A class with no known labels keeps an all-zero column.
    """
    if n < 1 or num_classes < 1:
        raise ConfigError(f"label matrix needs n >= 1 and C >= 1, got n={n} C={num_classes}")
    y0 = np.zeros((n, num_classes))
    seen: set[int] = set()
    for node, cls in known:
        if not 0 <= node < n:
            raise ConfigError(f"label node index {node} out of range [0, {n})")
        if not 0 <= cls < num_classes:
            raise ConfigError(f"label class index {cls} out of range [0, {num_classes})")
        if node in seen:
            raise ConfigError(f"node {node} labeled more than once")
        seen.add(node)
        y0[node, cls] = 1.0
    sums = y0.sum(axis=0)
    nonzero = sums > 0
    y0[:, nonzero] /= sums[nonzero]
    return y0


def propagate(operator: np.ndarray, y0: np.ndarray, config: LpConfig) -> PropagationResult:
    """Run the fixed-point iteration from Y(0) = ``y0``.

    Raises:
        PropagationError: dimension mismatch, or a non-finite value showing
            up mid-iteration (the message names the iteration).
    """
    s = np.asarray(operator, dtype=np.float64)
    y0 = np.asarray(y0, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise PropagationError(f"operator must be square, got shape {s.shape}")
    if y0.ndim != 2 or y0.shape[0] != s.shape[0]:
        raise PropagationError(
            f"label matrix rows ({y0.shape}) do not match operator size ({s.shape[0]})"
        )

    alpha = config.alpha
    base = (1.0 - alpha) * y0
    y = y0.copy()
    deltas: list[float] = []
    converged = False
    iterations = 0
    for iteration in range(1, config.max_iterations + 1):
        y_next = alpha * (s @ y) + base
        if not np.isfinite(y_next).all():
            raise PropagationError(f"non-finite value at iteration {iteration}")
        delta = float(np.max(np.abs(y_next - y))) if y.size else 0.0
        deltas.append(delta)
        y = y_next
        iterations = iteration
        if delta < config.tolerance:
            converged = True
            break
    return PropagationResult(
        soft_labels=y,
        hard_labels=np.argmax(y, axis=1),
        iterations_used=iterations,
        converged=converged,
        final_delta=deltas[-1],
        deltas=tuple(deltas),
    )


def solve_closed_form(operator: np.ndarray, y0: np.ndarray, alpha: float) -> np.ndarray:
    """Exact fixed point ``(1 - alpha) * (I - alpha S)^{-1} Y0``.

    Raises:
        PropagationError: if the dense solve leaves a residual above 1e-8
            (cannot happen for alpha < 1 and spectral radius <= 1).
    """
    s = np.asarray(operator, dtype=np.float64)
    y0 = np.asarray(y0, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1] or y0.shape[0] != s.shape[0]:
        raise PropagationError(
            f"shape mismatch between operator {s.shape} and labels {y0.shape}"
        )
    system = np.eye(s.shape[0]) - alpha * s
    rhs = (1.0 - alpha) * y0
    try:
        solution = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise PropagationError(f"closed-form solve failed: {exc}") from exc
    residual = float(np.max(np.abs(system @ solution - rhs)))
    if residual > 1e-8:
        raise PropagationError(f"closed-form solve residual {residual:.3e} exceeds 1e-8")
    return solution
