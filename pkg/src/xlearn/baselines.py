"""Comparison learners: uniform play, per-context EXP3-IX, and cross-learning with known context law."""

from __future__ import annotations

import math

import numpy as np

from .core import ROLE_NONE, LossOracle, RngStreams, Trace, categorical_from_uniform
from .env import sample_contexts

BASELINE_KINDS = ("per_context_exp3ix", "known_nu_cross", "uniform")


def exp3ix_rates(K: int, rounds: float) -> tuple[float, float]:
    """Standard EXP3-IX tuning: eta = sqrt(2 ln K / (K n)), implicit exploration eta / 2."""
    eta = math.sqrt(2.0 * math.log(K) / (K * max(rounds, 1.0)))
    return eta, eta / 2.0


def _softmax_rows(cumloss, eta):
    logits = cumloss * -eta
    logits -= logits.max(axis=-1, keepdims=True)
    w = np.exp(logits)
    return w / w.sum(axis=-1, keepdims=True)


def run_baseline(kind: str, oracle: LossOracle, nu, T: int | None = None, rngs: RngStreams | None = None) -> Trace:
    if kind not in BASELINE_KINDS:
        raise ValueError(f"unknown baseline {kind!r}")
    if rngs is None:
        raise ValueError("rngs required")
    T = oracle.T if T is None else T
    if T != oracle.T:
        raise ValueError("T must match the oracle horizon")
    _, C, K = oracle.shape
    nu = np.asarray(nu, dtype=float)
    contexts = sample_contexts(nu, rngs.context, T)
    u_act = rngs.action.random(T)
    actions = np.empty(T, dtype=np.int64)
    p_played = np.empty((T, K))
    meta = {"rng": rngs.metadata()}

    if kind == "uniform":
        p = np.full(K, 1.0 / K)
        for t in range(T):
            actions[t] = categorical_from_uniform(p, u_act[t])
        p_played[:] = p

    elif kind == "per_context_exp3ix":
        # each context's learner expects roughly T * nu(c) rounds; the tuning uses T / C
        eta, gamma_ix = exp3ix_rates(K, T / C)
        cumloss = np.zeros((C, K))
        for t in range(T):
            c = contexts[t]
            p = _softmax_rows(cumloss[c], eta)
            a = categorical_from_uniform(p, u_act[t])
            actions[t] = a
            p_played[t] = p
            cumloss[c, a] += oracle.loss(t, c, a) / (p[a] + gamma_ix)
        meta.update(eta=eta, gamma_ix=gamma_ix)

    else:  # known_nu_cross
        eta, gamma_ix = exp3ix_rates(K, T)
        cumloss = np.zeros((C, K))
        for t in range(T):
            P = _softmax_rows(cumloss, eta)
            c = contexts[t]
            p = P[c]
            a = categorical_from_uniform(p, u_act[t])
            actions[t] = a
            p_played[t] = p
            importance = nu @ P[:, a]
            cumloss[:, a] += oracle.loss_row(t, a) / (importance + gamma_ix)
        meta.update(eta=eta, gamma_ix=gamma_ix)

    return Trace(
        T=T,
        C=C,
        K=K,
        contexts=contexts,
        actions=actions,
        fallback=np.zeros(T, dtype=bool),
        keep=np.full(T, -1, dtype=np.int8),
        role=np.full(T, ROLE_NONE, dtype=np.int8),
        epoch=np.zeros(T, dtype=np.int32),
        p_played=p_played,
        q_played=p_played,
        algo=kind,
        meta=meta,
    )
