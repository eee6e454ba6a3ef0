"""Refocusing through partial occluders: cluster the per-ray depth
histogram, drop foreground-labeled rays, then refocus what remains.

Clustering runs directly on the TOF depths of all valid rays (no epipolar
analysis needed).  Wrapped fields are rejected by default since modulo
depths would fold distinct layers together; pass allow_wrapped=True when
the scene is known to fit inside the unambiguous range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import phase_to_depth
from .lightfield import refocus


def ray_depths(field, allow_wrapped=False):
    """Depths of all rays (invalid rays -> nan)."""
    if field.wrapped and not allow_wrapped:
        raise ValueError("field is wrapped; unwrap first (or pass "
                         "allow_wrapped=True for scenes inside the range)")
    d = phase_to_depth(field.phase, field.config)
    return np.where(field.valid, d, np.nan)


def depth_histogram(field, bins=100, depth_range=None, allow_wrapped=True):
    """Histogram of valid ray depths over uniform bins.

    Defaults to [0, unambiguous_range].  Returns (counts, bin_edges).
    """
    d = ray_depths(field, allow_wrapped=allow_wrapped)
    d = d[np.isfinite(d)]
    if d.size == 0:
        raise ValueError("no valid rays to histogram")
    if depth_range is None:
        depth_range = (0.0, field.config.unambiguous_range())
    return np.histogram(d, bins=bins, range=depth_range)


def write_histogram_csv(counts, edges, path):
    rows = np.column_stack([edges[:-1], edges[1:], counts])
    np.savetxt(path, rows, fmt="%.9g", delimiter=",",
               header="bin_lo_m,bin_hi_m,count", comments="")


@dataclass(frozen=True)
class DepthClusters:
    labels: np.ndarray  # (nu, nv, nx, ny) int, -1 for invalid rays
    centroids: np.ndarray  # (k,) meters, ascending
    inertia: float
    n_iter: int
    inertia_history: tuple = ()  # objective after each Lloyd iteration


def _kmeans_1d(values, k, rng, max_iter=100, tol=1e-6):
    """Plain Lloyd iterations with k-means++ seeding on a 1D sample."""
    # k-means++ init
    centroids = np.empty(k)
    centroids[0] = values[rng.integers(values.size)]
    d2 = (values - centroids[0]) ** 2
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            # remaining mass is all at chosen points; pick any distinct value
            leftover = np.setdiff1d(values, centroids[:j])
            centroids[j] = leftover[0]
            d2 = np.minimum(d2, (values - centroids[j]) ** 2)
            continue
        target = rng.random() * total
        idx = int(np.searchsorted(np.cumsum(d2), target))
        centroids[j] = values[min(idx, values.size - 1)]
        d2 = np.minimum(d2, (values - centroids[j]) ** 2)

    labels = np.zeros(values.size, dtype=np.int64)
    history = []
    for it in range(1, max_iter + 1):
        dist = np.abs(values[:, None] - centroids[None, :])
        labels = np.argmin(dist, axis=1)
        moved = 0.0
        for j in range(k):
            sel = labels == j
            if not sel.any():
                # deterministic fix for an empty cluster: grab the point
                # farthest from its centroid
                far = int(np.argmax(np.take_along_axis(
                    dist, labels[:, None], axis=1).ravel()))
                labels[far] = j
                sel = labels == j
            new = values[sel].mean()
            moved = max(moved, abs(new - centroids[j]))
            centroids[j] = new
        history.append(float(((values - centroids[labels]) ** 2).sum()))
        if moved < tol:
            break
    return labels, centroids, history[-1], it, tuple(history)


def cluster_depths(field, k=2, seed=0, allow_wrapped=False, max_iter=100,
                   tol=1e-6):
    """1D k-means over all valid ray depths.

    Centroids come back sorted ascending with labels renumbered to match,
    so label 0 is always the nearest cluster.  Requires at least k
    distinct depths.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    d = ray_depths(field, allow_wrapped=allow_wrapped)
    flat = d[np.isfinite(d)]
    if np.unique(flat).size < k:
        raise ValueError(f"fewer than k={k} distinct valid depths")
    rng = np.random.Generator(np.random.Philox(seed))
    labels_flat, centroids, inertia, n_iter, history = _kmeans_1d(
        flat, k, rng, max_iter=max_iter, tol=tol)

    order = np.argsort(centroids)
    remap = np.empty(k, dtype=np.int64)
    remap[order] = np.arange(k)
    labels_flat = remap[labels_flat]
    centroids = centroids[order]

    labels = np.full(field.shape, -1, dtype=np.int64)
    labels[field.valid] = labels_flat
    return DepthClusters(labels=labels, centroids=centroids,
                         inertia=inertia, n_iter=n_iter,
                         inertia_history=history)


def refocus_without_foreground(field, clusters, shear, mode="phasor",
                               foreground=None):
    """Refocus with foreground-labeled rays masked out.

    `foreground` defaults to cluster 0, the smallest centroid.  Returns
    the RefocusResult, which reports per-pixel contributing-ray counts and
    how many pixels were fully occluded.
    """
    if foreground is None:
        foreground = 0
    k = clusters.centroids.size
    if not (0 <= foreground < k):
        raise ValueError(f"foreground cluster {foreground} not in [0, {k})")
    mask = clusters.labels == foreground
    return refocus(field, shear, mode=mode, mask=mask)
