"""Shared domain types, simplex arithmetic, RNG streams and regret accounting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SIMPLEX_ATOL = 1e-12

# Named substreams; the index is the spawn key under the master seed.
STREAM_NAMES = ("context", "action", "keep", "pairing", "environment")
RNG_ALGORITHM = "numpy.random.PCG64 via SeedSequence(master_seed, spawn_key=(stream_index,))"

ROLE_FREQ = 0
ROLE_LOSS = 1
ROLE_NONE = 2  # trailing unpaired round, or a baseline round
ROLE_NAMES = {ROLE_FREQ: "freq", ROLE_LOSS: "loss", ROLE_NONE: "none"}


def validate_simplex(p, name: str = "p") -> np.ndarray:
    """Return `p` as a float array, raising ValueError unless it is a distribution."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-d vector")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"{name} has non-finite entries")
    if np.any(p < 0):
        raise ValueError(f"{name} has negative entries")
    if abs(p.sum() - 1.0) > SIMPLEX_ATOL * max(1, p.size):
        raise ValueError(f"{name} sums to {p.sum()!r}, not 1")
    return p


def uniform(k: int) -> np.ndarray:
    return np.full(k, 1.0 / k)


def softmax_weights(cumloss, eta: float, base=None) -> np.ndarray:
    """Exponential-weights distribution p ∝ base * exp(-eta * cumloss).

    Works row-wise on a (C, K) array as well as on a single K-vector. The
    entropic FTRL minimiser over the simplex has exactly this closed form.
    """
    cumloss = np.asarray(cumloss, dtype=float)
    if not eta > 0 or not np.isfinite(eta):
        raise ValueError("eta must be a positive finite number")
    if not np.all(np.isfinite(cumloss)):
        raise ValueError("cumloss has non-finite entries")
    logits = -eta * cumloss
    if base is not None:
        base = np.asarray(base, dtype=float)
        if not np.all(np.isfinite(base)) or np.any(base <= 0):
            raise ValueError("base must be strictly positive")
        logits = logits + np.log(base)
    logits = logits - logits.max(axis=-1, keepdims=True)
    w = np.exp(logits)
    return w / w.sum(axis=-1, keepdims=True)


def sample_categorical(p, rng: np.random.Generator) -> int:
    """Draw an index with probability p[a]; consumes one uniform from `rng`."""
    return categorical_from_uniform(p, rng.random())


def categorical_from_uniform(p, u: float) -> int:
    # inverse CDF; side="right" never selects a zero-probability arm
    cdf = np.cumsum(p)
    a = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    if a >= len(cdf):  # u * total rounded up to total
        a = int(np.flatnonzero(np.asarray(p) > 0)[-1])
    return a


class RngStreams:
    """Independent named generators derived from a single master seed."""

    def __init__(self, master_seed: int):
        self.master_seed = int(master_seed)
        self._gens = {}
        for i, name in enumerate(STREAM_NAMES):
            ss = np.random.SeedSequence(self.master_seed, spawn_key=(i,))
            self._gens[name] = np.random.Generator(np.random.PCG64(ss))

    def __getattr__(self, name):
        try:
            return self.__dict__["_gens"][name]
        except KeyError:
            raise AttributeError(name) from None

    def metadata(self) -> dict:
        return {
            "algorithm": RNG_ALGORITHM,
            "master_seed": self.master_seed,
            "streams": {name: [self.master_seed, i] for i, name in enumerate(STREAM_NAMES)},
        }


class LossOracle:
    """Oblivious loss tensor l[t, c, a] in [0, 1], generated in seeded chunks.

    `chunk_fn(t0, t1)` must return the (t1 - t0, C, K) block for rounds
    [t0, t1) and be a pure function of its arguments, so any value is
    reproducible regardless of access order.
    """

    def __init__(self, T: int, C: int, K: int, chunk_fn, chunk_size: int = 4096, meta=None):
        self.T, self.C, self.K = int(T), int(C), int(K)
        self.chunk_size = int(chunk_size)
        self._chunk_fn = chunk_fn
        self._cache_idx = -1
        self._cache = None
        self.meta = dict(meta or {})

    @property
    def shape(self):
        return (self.T, self.C, self.K)

    def _chunk(self, idx: int) -> np.ndarray:
        if idx != self._cache_idx:
            t0 = idx * self.chunk_size
            t1 = min(self.T, t0 + self.chunk_size)
            block = np.asarray(self._chunk_fn(t0, t1), dtype=float)
            if block.shape != (t1 - t0, self.C, self.K):
                raise ValueError(f"chunk has shape {block.shape}")
            self._cache, self._cache_idx = block, idx
        return self._cache

    def _check_t(self, t: int):
        if not 0 <= t < self.T:
            raise IndexError(f"round {t} outside [0, {self.T})")

    def loss(self, t: int, c: int, a: int) -> float:
        self._check_t(t)
        return float(self._chunk(t // self.chunk_size)[t % self.chunk_size, c, a])

    def loss_row(self, t: int, a: int) -> np.ndarray:
        """Losses of arm `a` at round `t` across every context."""
        self._check_t(t)
        return self._chunk(t // self.chunk_size)[t % self.chunk_size, :, a].copy()

    def round_matrix(self, t: int) -> np.ndarray:
        self._check_t(t)
        return self._chunk(t // self.chunk_size)[t % self.chunk_size]

    def block(self, t0: int, t1: int) -> np.ndarray:
        if not 0 <= t0 <= t1 <= self.T:
            raise IndexError("block out of range")
        out = np.empty((t1 - t0, self.C, self.K))
        t = t0
        while t < t1:
            idx = t // self.chunk_size
            start = t - idx * self.chunk_size
            stop = min(t1 - idx * self.chunk_size, self.chunk_size)
            chunk = self._chunk(idx)
            stop = min(stop, chunk.shape[0])
            out[t - t0 : t - t0 + stop - start] = chunk[start:stop]
            t += stop - start
        return out

    def tensor(self) -> np.ndarray:
        return self.block(0, self.T)

    def played_losses(self, contexts, actions) -> np.ndarray:
        """l[t, contexts[t], actions[t]] for every round."""
        return self._gather(contexts, actions)

    def _gather(self, contexts, arms) -> np.ndarray:
        contexts = np.asarray(contexts)
        arms = np.asarray(arms)
        out = np.empty(len(contexts))
        for t0 in range(0, len(contexts), self.chunk_size):
            t1 = min(len(contexts), t0 + self.chunk_size)
            blk = self.block(t0, t1)
            r = np.arange(t1 - t0)
            out[t0:t1] = blk[r, contexts[t0:t1], arms[t0:t1]]
        return out


@dataclass
class EpochRecord:
    e: int
    s_e: np.ndarray  # (C, K) snapshot used for rejection in epoch e
    s_next: np.ndarray  # (C, K) snapshot s_{e+1}, base for frequency accumulation
    fhat: np.ndarray | None  # (K,) importance estimate used in epoch e (None in epoch 1)
    f: np.ndarray  # (K,) true importance E_c[s_e,c / 2]
    start: int
    stop: int  # exclusive
    complete: bool


@dataclass
class Trace:
    """Per-round and per-epoch record of one episode (rounds are 0-indexed)."""

    T: int
    C: int
    K: int
    contexts: np.ndarray
    actions: np.ndarray
    fallback: np.ndarray  # bool
    keep: np.ndarray  # int8: 1 kept, 0 dropped, -1 absent
    role: np.ndarray  # int8 ROLE_*
    epoch: np.ndarray  # int32, 1-based; 0 for learners without epochs
    p_played: np.ndarray  # (T, K) p_{t, c_t}
    q_played: np.ndarray  # (T, K) q_{t, c_t}
    pair_p: np.ndarray | None = None  # (T // 2, C, K) shared play distribution of each pair
    epochs: list = field(default_factory=list)
    algo: str = "crosslearn"
    schedule: object = None
    meta: dict = field(default_factory=dict)

    @property
    def loss_rounds(self) -> np.ndarray:
        return np.flatnonzero(self.role == ROLE_LOSS)

    @property
    def freq_rounds(self) -> np.ndarray:
        return np.flatnonzero(self.role == ROLE_FREQ)

    def role_name(self, t: int) -> str:
        if self.epoch[t] == 1 and self.role[t] != ROLE_NONE:
            return "epoch1"
        return ROLE_NAMES[int(self.role[t])]


def _check_dims(trace: Trace, oracle: LossOracle):
    if (trace.T, trace.C, trace.K) != oracle.shape:
        raise ValueError(f"trace dims {(trace.T, trace.C, trace.K)} != oracle dims {oracle.shape}")


def per_round_regret(trace: Trace, oracle: LossOracle, pi) -> np.ndarray:
    _check_dims(trace, oracle)
    pi = np.asarray(pi)
    return oracle.played_losses(trace.contexts, trace.actions) - oracle._gather(
        trace.contexts, pi[trace.contexts]
    )


def realized_regret(trace: Trace, oracle: LossOracle, pi) -> float:
    """Sum over rounds of l[t, c_t, a_t] - l[t, c_t, pi[c_t]]."""
    return float(np.sum(per_round_regret(trace, oracle, pi)))


def context_arm_totals(oracle: LossOracle, contexts) -> np.ndarray:
    """(C, K) matrix of summed losses over the rounds where each context occurred."""
    contexts = np.asarray(contexts)
    if len(contexts) != oracle.T:
        raise ValueError("contexts must cover every round")
    totals = np.zeros((oracle.C, oracle.K))
    for t0 in range(0, oracle.T, oracle.chunk_size):
        t1 = min(oracle.T, t0 + oracle.chunk_size)
        blk = oracle.block(t0, t1)
        np.add.at(totals, contexts[t0:t1], blk[np.arange(t1 - t0), contexts[t0:t1]])
    return totals


def best_fixed_policy(oracle: LossOracle, realized_contexts) -> np.ndarray:
    """Hindsight-optimal context-to-arm map; ties go to the lowest arm index."""
    contexts = np.asarray(realized_contexts)
    if contexts.size and (contexts.min() < 0 or contexts.max() >= oracle.C):
        raise ValueError("context out of range")
    return np.argmin(context_arm_totals(oracle, contexts), axis=1)
