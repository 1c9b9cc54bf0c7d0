"""Exact (non-approximate) t-SNE for projecting probability vectors to 2-d.

Per-point bandwidths are found by binary search so each conditional
distribution's perplexity matches the target within 1e-5. Early exaggeration
runs for the first 100 iterations; momentum switches from 0.5 to 0.8 after
iteration 250. Deterministic given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PERPLEXITY_TOLERANCE = 1e-5
EXAGGERATION_FACTOR = 12.0
EXAGGERATION_ITERATIONS = 100
MOMENTUM_SWITCH_ITERATION = 250
EARLY_MOMENTUM = 0.5
LATE_MOMENTUM = 0.8
DEFAULT_PERPLEXITY = 20.0
DEFAULT_ITERATIONS = 1000
DEFAULT_LEARNING_RATE = 200.0


@dataclass(frozen=True)
class ProjectionPoint:
    table_id: str
    x: float
    y: float
    label_id: int


@dataclass(frozen=True)
class TsneResult:
    coords: np.ndarray
    kl_per_iteration: tuple[float, ...]


def _conditional_probs(sq_dists_row: np.ndarray, beta: float) -> tuple[np.ndarray, float]:
    """p_{j|i} for one point at precision beta, plus the Shannon entropy (nats)."""
    p = np.exp(-sq_dists_row * beta)
    total = float(np.sum(p))
    if total <= 0.0:
        return np.zeros_like(p), 0.0
    p = p / total
    nz = p[p > 0.0]
    entropy = float(-np.sum(nz * np.log(nz)))
    return p, entropy


def _search_beta(sq_dists_row: np.ndarray, perplexity: float, max_steps: int = 200) -> np.ndarray:
    target = float(np.log(perplexity))
    beta, lo, hi = 1.0, 0.0, np.inf
    p, entropy = _conditional_probs(sq_dists_row, beta)
    steps = 0
    while abs(entropy - target) > PERPLEXITY_TOLERANCE and steps < max_steps:
        if entropy > target:
            lo = beta
            beta = beta * 2.0 if hi == np.inf else (beta + hi) / 2.0
        else:
            hi = beta
            beta = beta / 2.0 if lo == 0.0 else (beta + lo) / 2.0
        p, entropy = _conditional_probs(sq_dists_row, beta)
        steps += 1
    return p


def joint_affinities(vectors: np.ndarray, perplexity: float) -> np.ndarray:
    """Symmetrized affinity matrix P with zero diagonal, summing to 1."""
    n = len(vectors)
    sq = np.sum(vectors**2, axis=1)
    sq_dists = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (vectors @ vectors.T), 0.0)
    cond = np.zeros((n, n))
    for i in range(n):
        row = np.delete(sq_dists[i], i)
        p = _search_beta(row, perplexity)
        cond[i, np.arange(n) != i] = p
    joint = (cond + cond.T) / (2.0 * n)
    return np.maximum(joint, 1e-12)


def _low_dim_q(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    sq = np.sum(y**2, axis=1)
    num = 1.0 / (1.0 + np.maximum(sq[:, None] + sq[None, :] - 2.0 * (y @ y.T), 0.0))
    np.fill_diagonal(num, 0.0)
    q = np.maximum(num / np.sum(num), 1e-12)
    return q, num


def _gradient(p: np.ndarray, y: np.ndarray) -> np.ndarray:
    q, num = _low_dim_q(y)
    weights = (p - q) * num
    return 4.0 * ((np.diag(np.sum(weights, axis=1)) - weights) @ y)


def _kl_divergence(p: np.ndarray, y: np.ndarray) -> float:
    q, _ = _low_dim_q(y)
    return float(np.sum(p * np.log(p / q)))


def tsne(
    vectors: np.ndarray,
    perplexity: float = DEFAULT_PERPLEXITY,
    iterations: int = DEFAULT_ITERATIONS,
    seed: int = 42,
    learning_rate: float = DEFAULT_LEARNING_RATE,
) -> TsneResult:
    """Project rows of `vectors` to 2-d; KL divergence is tracked per iteration."""
    vectors = np.asarray(vectors, dtype=np.float64)
    n = len(vectors)
    if n < 4:
        raise ValueError(f"need at least 4 points, got {n}")
    if not (3 <= perplexity < (n - 1) / 3):
        raise ValueError(f"perplexity {perplexity} out of range [3, {(n - 1) / 3})")

    p = joint_affinities(vectors, perplexity)
    rng = np.random.default_rng(seed)
    y = rng.standard_normal((n, 2)) * 1e-4
    velocity = np.zeros_like(y)
    kl_track: list[float] = []

    for it in range(iterations):
        # exaggeration scales P without renormalizing; attraction dominates
        p_eff = p * EXAGGERATION_FACTOR if it < EXAGGERATION_ITERATIONS else p
        grad = _gradient(p_eff, y)
        momentum = EARLY_MOMENTUM if it < MOMENTUM_SWITCH_ITERATION else LATE_MOMENTUM
        velocity = momentum * velocity - learning_rate * grad
        y = y + velocity
        y = y - np.mean(y, axis=0)
        # the trace always records the plain objective so phases are comparable
        kl_track.append(_kl_divergence(p, y))
    return TsneResult(coords=y, kl_per_iteration=tuple(kl_track))


def project(
    entries: list[tuple[str, np.ndarray, int]],
    perplexity: float = DEFAULT_PERPLEXITY,
    iterations: int = DEFAULT_ITERATIONS,
    seed: int = 42,
) -> list[ProjectionPoint]:
    """t-SNE over (table_id, vector, label_id) entries, in the given order."""
    result = tsne(np.stack([v for _, v, _ in entries]), perplexity, iterations, seed)
    return [
        ProjectionPoint(table_id=tid, x=float(xy[0]), y=float(xy[1]), label_id=label)
        for (tid, _, label), xy in zip(entries, result.coords)
    ]


def serialize_projection(points: list[ProjectionPoint]) -> str:
    """UTF-8 rows `table_id,x,y,label_id`."""
    lines = [f"{p.table_id},{p.x!r},{p.y!r},{p.label_id}" for p in points]
    return "\n".join(lines) + "\n"
