"""Population statistics: Gaussian kernel density estimates and quantile summaries."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class KdeEstimate:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    median: float
    q25: float
    q75: float
    min: float
    max: float


def silverman_bandwidth(samples) -> float:
    """1.06 * sigma * n^(-1/5); falls back to 1.0 for a single or constant sample."""
    x = np.asarray(samples, dtype=float)
    sigma = x.std(ddof=1) if x.size > 1 else 0.0
    if sigma == 0:
        return 1.0
    return 1.06 * sigma * x.size ** (-0.2)


def kde(samples, bandwidth="auto", grid=None) -> KdeEstimate:
    """f(x) = 1/(n h) sum_i K((x - x_i)/h) with a standard normal kernel.

    ``grid`` defaults to 512 points spanning the data +- 5 bandwidths.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("kde needs at least one sample")
    h = silverman_bandwidth(x) if bandwidth in (None, "auto") else float(bandwidth)
    if not h > 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    if grid is None:
        grid = np.linspace(x.min() - 5 * h, x.max() + 5 * h, 512)
    g = np.asarray(grid, dtype=float)
    # sort samples so the sum is permutation invariant bit for bit
    xs = np.sort(x)
    u = (g[:, None] - xs[None, :]) / h
    dens = np.exp(-0.5 * u * u).sum(axis=1) * _INV_SQRT_2PI / (x.size * h)
    return KdeEstimate(g, dens, h)


def generation_stats(values) -> SummaryStats:
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("generation_stats needs at least one value")
    q25, med, q75 = np.percentile(v, [25, 50, 75])
    return SummaryStats(float(v.mean()), float(med), float(q25), float(q75),
                        float(v.min()), float(v.max()))
