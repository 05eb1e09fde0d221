"""Brute-force reference computations used by the tests and the acceptance harness."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class McEstimate:
    mean: np.ndarray | float
    stderr: np.ndarray | float
    n: int

    def within(self, target, k: float = 3.0) -> bool:
        """True when |mean - target| <= k * stderr in every coordinate."""
        return bool(np.all(np.abs(np.asarray(self.mean) - target) <= k * np.asarray(self.stderr)))


def entropic_objective(p, cumloss, eta: float) -> float:
    p = np.asarray(p, dtype=float)
    nz = p > 0
    return float(p @ cumloss + np.sum(p[nz] * np.log(p[nz])) / eta)


def _simplex_grid(K: int, m: int):
    for head in itertools.product(range(m + 1), repeat=K - 1):
        s = sum(head)
        if s <= m:
            yield (*head, m - s)


def grid_argmin_ftrl(cumloss, eta: float, step: float = 0.005) -> np.ndarray:
    """Minimise <p, G> + (1/eta) sum p log p over a regular simplex grid (0 log 0 = 0)."""
    G = np.asarray(cumloss, dtype=float)
    K = len(G)
    if K > 4:
        raise ValueError("grid search is limited to K <= 4")
    if step > 0.01:
        raise ValueError("step must be <= 0.01")
    m = int(round(1.0 / step))
    pts = np.array(list(_simplex_grid(K, m)), dtype=float) / m
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = np.where(pts > 0, pts * np.log(pts), 0.0).sum(axis=1)
    obj = pts @ G + ent / eta
    return pts[int(np.argmin(obj))]


def mc_expectation(sampler, rng: np.random.Generator, n: int, batch: int | None = None) -> McEstimate:
    """Sample mean and standard error over `n` independent draws.

    `sampler(rng)` returns one draw; with `batch` set, `sampler(rng, size)`
    returns `size` draws stacked along the first axis.
    """
    if n < 1000:
        raise ValueError("need at least 1000 samples")
    if batch is None:
        xs = np.array([sampler(rng) for _ in range(n)], dtype=float)
    else:
        parts, left = [], n
        while left:
            m = min(batch, left)
            parts.append(np.asarray(sampler(rng, m), dtype=float))
            left -= m
        xs = np.concatenate(parts, axis=0)
    mean = xs.mean(axis=0)
    stderr = xs.std(axis=0, ddof=1) / np.sqrt(n)
    return McEstimate(mean=mean, stderr=stderr, n=n)
