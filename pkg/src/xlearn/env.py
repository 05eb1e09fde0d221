"""Oblivious-adversary environments: shifting best arms, first-price auctions, sleeping arms."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .core import LossOracle, categorical_from_uniform, validate_simplex

KINDS = ("shifting", "auction", "sleeping")

CHUNK = 4096

# competing-bid regimes for the auction adversary: (low, high) of a uniform draw
AUCTION_REGIMES = ((0.1, 0.5), (0.4, 0.9))


@dataclass
class EnvSpec:
    kind: str = "shifting"
    K: int = 5
    C: int = 5
    T: int = 4096
    env_seed: int = 0
    segments: int = 4
    jitter: float = 0.1
    nu: list | None = None
    values: list | None = None  # auction: private value per context
    bids: list | None = None  # auction: bid per arm
    switches: int = 8  # auction: expected number of regime switches
    availability: list | None = None  # sleeping: available arms per context

    def __post_init__(self):
        if self.kind == "auction":
            if self.values is not None:
                self.C = len(self.values)
            if self.bids is not None:
                self.K = len(self.bids)

    def validate(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown environment kind {self.kind!r}")
        if self.kind == "auction" and (
            (self.values is not None and len(self.values) == 0)
            or (self.bids is not None and len(self.bids) == 0)
        ):
            raise ValueError("auction grids must be non-empty")
        if self.K < 2 or self.C < 1 or self.T < 2:
            raise ValueError("need K >= 2, C >= 1, T >= 2")
        if self.segments < 1:
            raise ValueError("segments must be >= 1")
        for name in ("values", "bids"):
            grid = getattr(self, name)
            if grid is not None:
                g = np.asarray(grid, dtype=float)
                if np.any(np.diff(g) < 0) or g.min() < 0 or g.max() > 1:
                    raise ValueError(f"{name} grid must be sorted ascending in [0, 1]")
        if self.nu is not None:
            if len(self.nu) != self.C:
                raise ValueError("nu must have one entry per context")
            validate_simplex(self.nu, "nu")
        if self.availability is not None:
            if len(self.availability) != self.C:
                raise ValueError("availability needs one set per context")
            for s in self.availability:
                if not s or any(not 0 <= a < self.K for a in s):
                    raise ValueError("availability sets must be non-empty subsets of the arms")

    def to_dict(self) -> dict:
        return asdict(self)


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def _context_distribution(spec: EnvSpec) -> np.ndarray:
    if spec.nu is None:
        return np.full(spec.C, 1.0 / spec.C)
    nu = np.asarray(spec.nu, dtype=float)
    return nu / nu.sum()


def _shifting(spec: EnvSpec) -> LossOracle:
    T, C, K = spec.T, spec.C, spec.K
    best = _rng(spec.env_seed, 0).integers(0, K, size=(spec.segments, C))
    bounds = np.linspace(0, T, spec.segments + 1).round().astype(int)
    seg_of = np.searchsorted(bounds, np.arange(T), side="right") - 1

    def chunk(t0, t1):
        n = t1 - t0
        means = np.full((n, C, K), 0.8)
        b = best[seg_of[t0:t1]]  # (n, C)
        np.put_along_axis(means, b[:, :, None], 0.2, axis=2)
        if spec.jitter > 0:
            noise = _rng(spec.env_seed, 1, t0 // CHUNK).uniform(-spec.jitter, spec.jitter, (n, C, K))
            means = np.clip(means + noise, 0.0, 1.0)
        return means

    meta = {"best_arm_per_segment": best.tolist(), "segment_bounds": bounds.tolist()}
    return LossOracle(T, C, K, chunk, CHUNK, meta)


def competing_bids(spec: EnvSpec) -> tuple[np.ndarray, np.ndarray]:
    """Two-regime competing-bid sequence and the regime index of each round."""
    rng = _rng(spec.env_seed, 2)
    T = spec.T
    p_switch = min(1.0, spec.switches / T)
    flips = rng.random(T) < p_switch
    flips[0] = False
    regime = np.cumsum(flips) % 2
    if rng.random() < 0.5:
        regime = 1 - regime
    lo = np.array([r[0] for r in AUCTION_REGIMES])[regime]
    hi = np.array([r[1] for r in AUCTION_REGIMES])[regime]
    m = lo + (hi - lo) * rng.random(T)
    return m, regime


def auction_loss(value, bid, competing):
    """(1 - u) / 2 with utility u = (value - bid) * [bid >= competing]."""
    u = (value - bid) * (bid >= competing)
    return (1.0 - u) / 2.0


def _auction(spec: EnvSpec) -> LossOracle:
    values = np.asarray(spec.values if spec.values is not None else np.linspace(0.1, 1.0, spec.C), float)
    bids = np.asarray(spec.bids if spec.bids is not None else np.linspace(0.0, 0.9, spec.K), float)
    m, regime = competing_bids(spec)

    def chunk(t0, t1):
        # the win indicator depends on (t, a) only, so one play reveals every context's loss
        win = bids[None, :] >= m[t0:t1, None]
        u = (values[None, :, None] - bids[None, None, :]) * win[:, None, :]
        return (1.0 - u) / 2.0

    meta = {
        "values": values.tolist(),
        "bids": bids.tolist(),
        "competing_bids": m,
        "regimes": [list(r) for r in AUCTION_REGIMES],
        "regime": regime,
    }
    return LossOracle(spec.T, len(values), len(bids), chunk, CHUNK, meta)


def _availability(spec: EnvSpec) -> list[list[int]]:
    if spec.availability is not None:
        return [sorted(set(int(a) for a in s)) for s in spec.availability]
    rng = _rng(spec.env_seed, 3)
    sets = []
    for _ in range(spec.C):
        mask = rng.random(spec.K) < 0.6
        if mask.sum() < 2:
            mask[rng.choice(spec.K, size=2, replace=False)] = True
        sets.append(np.flatnonzero(mask).tolist())
    return sets


def _sleeping(spec: EnvSpec) -> LossOracle:
    T, C, K = spec.T, spec.C, spec.K
    sets = _availability(spec)
    avail = np.zeros((C, K), dtype=bool)
    for c, s in enumerate(sets):
        avail[c, s] = True
    rng = _rng(spec.env_seed, 4)
    phase = rng.uniform(0, 2 * np.pi, K)
    cycles = rng.integers(1, 4, K)
    level = rng.uniform(0.3, 0.7, K)

    def chunk(t0, t1):
        t = np.arange(t0, t1)[:, None]
        drift = level + 0.25 * np.sin(2 * np.pi * cycles * t / T + phase)  # (n, K)
        noise = _rng(spec.env_seed, 5, t0 // CHUNK).uniform(-spec.jitter, spec.jitter, (t1 - t0, C, K))
        losses = np.clip(drift[:, None, :] + noise, 0.0, 1.0)
        return np.where(avail[None], losses, 1.0)

    return LossOracle(T, C, K, chunk, CHUNK, {"availability": sets})


def build_oracle(spec: EnvSpec) -> tuple[LossOracle, np.ndarray]:
    """Loss oracle and context distribution for `spec`; deterministic in env_seed."""
    spec.validate()
    builder = {"shifting": _shifting, "auction": _auction, "sleeping": _sleeping}[spec.kind]
    oracle = builder(spec)
    return oracle, _context_distribution(spec)


def sample_context(nu, rng: np.random.Generator) -> int:
    return categorical_from_uniform(nu, rng.random())


def sample_contexts(nu, rng: np.random.Generator, n: int) -> np.ndarray:
    """`n` i.i.d. context draws; identical to `n` calls of `sample_context`."""
    cdf = np.cumsum(nu)
    u = rng.random(n)
    c = np.searchsorted(cdf, u * cdf[-1], side="right")
    over = c >= len(cdf)
    if over.any():
        c[over] = np.flatnonzero(np.asarray(nu) > 0)[-1]
    return c
