"""Epoch-based cross-learning EXP3 learner with snapshots and paired estimation rounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .core import (
    ROLE_FREQ,
    ROLE_LOSS,
    ROLE_NONE,
    EpochRecord,
    LossOracle,
    RngStreams,
    Trace,
    categorical_from_uniform,
    softmax_weights,
)
from .env import sample_contexts


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class ParamSchedule:
    iota: float
    L: int
    gamma: float
    eta: float
    delta: float
    L_raw: float = float("nan")

    def __post_init__(self):
        if self.L < 2 or self.L % 2:
            raise ScheduleError(f"epoch length must be even and >= 2, got {self.L}")
        if not (self.gamma > 0 and self.eta > 0):
            raise ScheduleError("gamma and eta must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


def derive_schedule(K: int, T: int, delta: float) -> ParamSchedule:
    """Theoretical parameter choice for horizon T, K arms and failure probability delta.

    The epoch length is rounded to the nearest even integer (at least 2) and
    gamma, eta are recomputed from the rounded length.
    """
    if K < 2 or T < 4 or not 0 < delta < 1:
        raise ScheduleError("need K >= 2, T >= 4 and 0 < delta < 1")
    iota = 2.0 * math.log(8.0 * K * T / delta)
    L_raw = math.sqrt(iota * K * T / math.log(K))
    L = max(2, 2 * int(round(L_raw / 2.0)))
    if L >= T:
        raise ScheduleError(f"horizon too small for schedule: L={L} >= T={T}")
    gamma = 16.0 * iota / L
    eta = gamma / (2.0 * (2.0 * L * gamma + iota))
    return ParamSchedule(iota=iota, L=L, gamma=gamma, eta=eta, delta=delta, L_raw=L_raw)


@dataclass
class AlgoState:
    K: int
    C: int
    schedule: ParamSchedule
    e: int
    s_cur: np.ndarray  # (C, K) snapshot s_e
    s_next: np.ndarray  # (C, K) snapshot s_{e+1}
    s_next2: np.ndarray | None  # (C, K) snapshot s_{e+2}, set when epoch e finalizes
    fhat: np.ndarray | None  # importance estimate used in epoch e; None in epoch 1
    fhat_next_accum: np.ndarray
    cumloss: np.ndarray  # (C, K) sum of loss estimates per context
    rounds_in_epoch: int = 0


def init_state(K: int, C: int, schedule: ParamSchedule) -> AlgoState:
    u = np.full((C, K), 1.0 / K)
    return AlgoState(
        K=K,
        C=C,
        schedule=schedule,
        e=1,
        s_cur=u,
        s_next=u.copy(),
        s_next2=None,
        fhat=None,
        fhat_next_accum=np.zeros(K),
        cumloss=np.zeros((C, K)),
    )


def compute_p(state: AlgoState, c: int) -> np.ndarray:
    """FTRL distribution of context c given the loss estimates so far."""
    return softmax_weights(state.cumloss[c], state.schedule.eta)


def compute_p_all(state: AlgoState) -> np.ndarray:
    return softmax_weights(state.cumloss, state.schedule.eta)


def reject_or_fallback(p, s_e_c) -> tuple[np.ndarray, bool]:
    """Play p unless some arm falls below half its snapshot probability."""
    if np.all(p >= s_e_c / 2):
        return p, False
    return s_e_c, True


def keep_probability(s_e_c, q, A: int) -> float:
    if q[A] <= 0:
        raise ValueError("played arm has zero probability")
    return s_e_c[A] / (2.0 * q[A])


def assign_pair_roles(rng: np.random.Generator) -> tuple[int, int]:
    """(freq offset, loss offset) within a pair; bit 0 puts the frequency round first."""
    return _roles_from_uniform(rng.random())


def _roles_from_uniform(u: float) -> tuple[int, int]:
    return (1, 0) if u >= 0.5 else (0, 1)


def accumulate_freq(state: AlgoState, c: int):
    """Add one frequency sample s_{e+1, c} to the running estimate of the next importance."""
    L = state.schedule.L
    divisor = 2.0 * L if state.e == 1 else 2.0 * (L // 2)
    state.fhat_next_accum += state.s_next[c] / divisor


def make_loss_estimate(state: AlgoState, loss_row, A: int, S: bool) -> np.ndarray:
    """Apply the importance-weighted estimate for arm A to every context; returns the increments."""
    loss_row = np.asarray(loss_row, dtype=float)
    if not S:
        return np.zeros_like(loss_row)
    inc = 2.0 * loss_row / (state.fhat[A] + 1.5 * state.schedule.gamma)
    state.cumloss[:, A] += inc
    return inc


def finalize_epoch(state: AlgoState, p_at_end=None):
    """Close epoch e: store s_{e+2}, promote the importance estimate, shift the snapshot window."""
    if state.rounds_in_epoch != state.schedule.L:
        raise RuntimeError(
            f"epoch {state.e} has processed {state.rounds_in_epoch} of {state.schedule.L} rounds"
        )
    if p_at_end is None:
        p_at_end = compute_p_all(state)
    state.s_next2 = np.array(p_at_end, dtype=float, copy=True)
    state.fhat = state.fhat_next_accum
    state.fhat_next_accum = np.zeros(state.K)
    state.e += 1
    state.s_cur, state.s_next = state.s_next, state.s_next2
    state.rounds_in_epoch = 0
    # shift invariance of the softmax makes re-centering exact
    state.cumloss -= state.cumloss.min(axis=1, keepdims=True)


def run_episode(oracle: LossOracle, nu, schedule: ParamSchedule, rngs: RngStreams) -> Trace:
    """Play all T rounds of the epoch-based learner and return the full trace."""
    T, C, K = oracle.shape
    L = schedule.L
    if T < L:
        raise ScheduleError("horizon shorter than one epoch")
    nu = np.asarray(nu, dtype=float)
    gamma = schedule.gamma

    contexts = sample_contexts(nu, rngs.context, T)
    u_act = rngs.action.random(T)
    u_keep = rngs.keep.random(T)
    u_pair = rngs.pairing.random(T // 2)

    actions = np.empty(T, dtype=np.int64)
    fallback = np.zeros(T, dtype=bool)
    keep = np.full(T, -1, dtype=np.int8)
    role = np.full(T, ROLE_NONE, dtype=np.int8)
    epoch = np.empty(T, dtype=np.int32)
    p_played = np.empty((T, K))
    q_played = np.empty((T, K))
    pair_p = np.empty((T // 2, C, K))

    for j in range(T // 2):
        f_off, l_off = _roles_from_uniform(u_pair[j])
        role[2 * j + f_off] = ROLE_FREQ
        role[2 * j + l_off] = ROLE_LOSS

    state = init_state(K, C, schedule)
    epochs = []

    # epoch 1: play the uniform snapshot and collect the first importance estimate
    for t in range(L):
        c = contexts[t]
        s = state.s_cur[c]
        actions[t] = categorical_from_uniform(s, u_act[t])
        p_played[t] = s
        q_played[t] = s
        accumulate_freq(state, c)
        state.rounds_in_epoch += 1
    pair_p[: L // 2] = state.s_cur[None]
    epoch[:L] = 1
    epochs.append(_epoch_record(state, nu, 0, L, True))
    finalize_epoch(state, compute_p_all(state))

    start = L
    while start < T:
        stop = min(T, start + L)
        complete = stop - start == L
        epochs.append(_epoch_record(state, nu, start, stop, complete))
        epoch[start:stop] = state.e
        s_cur = state.s_cur
        s_half = s_cur / 2.0
        denom = state.fhat + 1.5 * gamma
        eta = schedule.eta
        cumloss = state.cumloss
        for t in range(start, stop, 2):
            logits = cumloss * -eta
            logits -= logits.max(axis=1, keepdims=True)
            P = np.exp(logits)
            P /= P.sum(axis=1, keepdims=True)
            n_play = 2 if t + 1 < stop else 1
            if n_play == 2:
                pair_p[t // 2] = P
            for tp in range(t, t + n_play):
                c = contexts[tp]
                p = P[c]
                if (p >= s_half[c]).all():
                    q = p
                else:
                    q = s_cur[c]
                    fallback[tp] = True
                actions[tp] = categorical_from_uniform(q, u_act[tp])
                p_played[tp] = p
                q_played[tp] = q
            if n_play == 1:
                continue
            f_off, l_off = _roles_from_uniform(u_pair[t // 2])
            accumulate_freq(state, contexts[t + f_off])
            tl = t + l_off
            A = actions[tl]
            cl = contexts[tl]
            S = u_keep[tl] < s_cur[cl, A] / (2.0 * q_played[tl, A])
            keep[tl] = S
            if S:
                cumloss[:, A] += 2.0 * oracle.loss_row(tl, A) / denom[A]
        state.rounds_in_epoch += stop - start
        if complete:
            finalize_epoch(state)
            cumloss = state.cumloss
        start = stop

    return Trace(
        T=T,
        C=C,
        K=K,
        contexts=contexts,
        actions=actions,
        fallback=fallback,
        keep=keep,
        role=role,
        epoch=epoch,
        p_played=p_played,
        q_played=q_played,
        pair_p=pair_p,
        epochs=epochs,
        algo="crosslearn",
        schedule=schedule,
        meta={"rng": rngs.metadata()},
    )


def _epoch_record(state: AlgoState, nu, start: int, stop: int, complete: bool) -> EpochRecord:
    return EpochRecord(
        e=state.e,
        s_e=state.s_cur.copy(),
        s_next=state.s_next.copy(),
        fhat=None if state.fhat is None else state.fhat.copy(),
        f=0.5 * (nu @ state.s_cur),
        start=start,
        stop=stop,
        complete=complete,
    )
