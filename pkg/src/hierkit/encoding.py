"""Video-level representations from per-frame feature vectors.

Two encoders are provided: average pooling with l1 normalization, and VLAD
over a seeded k-means codebook. Both treat the frame set as a multiset:
rows are canonicalized (lexicographically sorted) before any floating-point
reduction, so results are bitwise invariant under frame permutation and
independent of the degree of parallelism upstream.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation

KMEANS_MAX_ITER = 100
KMEANS_TOL = 1e-6


@dataclass
class Codebook:
    centroids: np.ndarray  # (k, d)
    seed: int

    @property
    def k(self) -> int:
        return int(self.centroids.shape[0])

    @property
    def dim(self) -> int:
        return int(self.centroids.shape[1])


def as_frame_matrix(frames) -> np.ndarray:
    """Validate and convert a frame stack to a float64 (n, d) array."""
    arr = np.asarray(frames, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ContractViolation(
            f"frame matrix must be non-empty 2-D, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise ContractViolation("frame matrix contains non-finite values")
    return arr


def _canonical_rows(arr: np.ndarray) -> np.ndarray:
    """Sort rows lexicographically so reductions ignore frame order."""
    order = np.lexsort(arr.T[::-1])
    return arr[order]


def l1_normalize(vector) -> np.ndarray:
    """Scale so absolute components sum to one; zero vectors pass through."""
    v = np.asarray(vector, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ContractViolation("vector contains non-finite values")
    norm = np.sum(np.abs(v))
    if norm == 0.0:
        warnings.warn("l1_normalize: zero vector left unchanged", RuntimeWarning)
        return v.copy()
    return v / norm


def average_pool(frames) -> np.ndarray:
    """Componentwise mean over frames followed by l1 normalization."""
    arr = _canonical_rows(as_frame_matrix(frames))
    return l1_normalize(arr.mean(axis=0))


def kmeans_fit(vectors, k: int, seed: int) -> Codebook:
    """Lloyd's algorithm from a seeded, distance-weighted initialization.

    Iterations stop when no centroid moves more than 1e-6 or after 100
    rounds. A cluster that empties is repaired by seizing the point
    currently farthest from its own centroid. Deterministic in
    (vectors, k, seed).
    """
    data = as_frame_matrix(vectors)
    n = data.shape[0]
    if k < 1:
        raise ContractViolation(f"k must be >= 1, got {k}")
    if n < k:
        raise ContractViolation(f"need at least k={k} vectors, got {n}")

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    centroids = _plus_plus_init(data, k, rng)

    prev_objective = np.inf
    for _ in range(KMEANS_MAX_ITER):
        dist = _pairwise_sq_dists(data, centroids)
        assign = np.argmin(dist, axis=1)
        point_cost = dist[np.arange(n), assign]

        for cluster in range(k):
            if np.any(assign == cluster):
                continue
            victim = int(np.argmax(point_cost))
            assign[victim] = cluster
            point_cost[victim] = 0.0

        objective = float(point_cost.sum())
        assert objective <= prev_objective + 1e-9, "k-means objective rose"
        prev_objective = objective

        new_centroids = np.empty_like(centroids)
        for cluster in range(k):
            new_centroids[cluster] = data[assign == cluster].mean(axis=0)
        movement = float(np.max(np.abs(new_centroids - centroids)))
        centroids = new_centroids
        if movement < KMEANS_TOL:
            break
    return Codebook(centroids=centroids, seed=seed)


def _plus_plus_init(
    data: np.ndarray, k: int, rng: np.random.Generator
) -> np.ndarray:
    n = data.shape[0]
    chosen = [int(rng.integers(n))]
    closest = _pairwise_sq_dists(data, data[chosen[-1]][None, :])[:, 0]
    while len(chosen) < k:
        total = float(closest.sum())
        if total > 0.0:
            probs = closest / total
            pick = int(rng.choice(n, p=probs))
        else:
            # all remaining points coincide with a centroid
            pick = next(i for i in range(n) if i not in set(chosen))
        chosen.append(pick)
        closest = np.minimum(
            closest, _pairwise_sq_dists(data, data[pick][None, :])[:, 0]
        )
    return data[chosen].copy()


def _pairwise_sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, (len(a), len(b))."""
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def vlad_encode(frames, codebook: Codebook) -> np.ndarray:
    """Aggregate per-centroid residuals into one k*d vector.

    Each frame contributes (frame - centroid) to its nearest centroid's
    block (ties go to the lowest centroid index). Blocks are concatenated,
    passed through a signed square root, and l2-normalized globally. An
    all-zero aggregate (every frame sitting exactly on a centroid) comes
    back as zeros with a warning.
    """
    arr = _canonical_rows(as_frame_matrix(frames))
    if arr.shape[1] != codebook.dim:
        raise ContractViolation(
            f"frame dimension {arr.shape[1]} != codebook dimension "
            f"{codebook.dim}"
        )
    k, d = codebook.k, codebook.dim
    assign = np.argmin(_pairwise_sq_dists(arr, codebook.centroids), axis=1)
    blocks = np.zeros((k, d), dtype=np.float64)
    for cluster in range(k):
        mask = assign == cluster
        if np.any(mask):
            blocks[cluster] = (
                arr[mask] - codebook.centroids[cluster]
            ).sum(axis=0)
    flat = blocks.reshape(k * d)
    flat = np.sign(flat) * np.sqrt(np.abs(flat))
    norm = float(np.sqrt(np.dot(flat, flat)))
    if norm == 0.0:
        warnings.warn("vlad_encode: zero aggregate", RuntimeWarning)
        return flat
    return flat / norm
