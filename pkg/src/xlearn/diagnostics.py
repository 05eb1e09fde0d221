"""Proof-side quantities recomputed from a trace and simulator ground truth.

Nothing here is visible to the learner: the true context law, the true
importance f_e, the surrogate estimates with f_e in the denominator and the
auxiliary distributions built from them are only ever read back from a
finished trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .algo import AlgoState, ParamSchedule, compute_p_all, keep_probability, reject_or_fallback
from .core import ROLE_LOSS, LossOracle, Trace, per_round_regret, softmax_weights

TERMS = ("bias1", "bias2", "ftrl", "bias3", "bias4", "bias5")


def true_importance(s_e, nu) -> np.ndarray:
    """f_e(a) = sum_c nu(c) s_e[c, a] / 2."""
    return 0.5 * (np.asarray(nu, dtype=float) @ np.asarray(s_e, dtype=float))


def tilde_estimate(loss_row, A: int, S: bool, is_loss_round: bool, f_e, gamma: float, K: int | None = None) -> np.ndarray:
    """(C, K) surrogate estimate: 2 l / (f_e(A) + gamma) on arm A, zero elsewhere."""
    loss_row = np.asarray(loss_row, dtype=float)
    K = len(f_e) if K is None else K
    out = np.zeros((len(loss_row), K))
    if S and is_loss_round:
        out[:, A] = 2.0 * loss_row / (f_e[A] + gamma)
    return out


def tilde_p(base, tilde_history, eta: float) -> np.ndarray:
    """Snapshot base reweighted by the within-epoch surrogate estimates."""
    return softmax_weights(tilde_history, eta, base)


def ratio_check(f_e, fhat_e, gamma: float) -> bool:
    r = (np.asarray(f_e) + gamma) / (np.asarray(fhat_e) + 1.5 * gamma)
    return bool(np.all((r >= 0.5) & (r <= 2.0)))


def f_event(f_e, fhat_e, iota: float, L: int) -> bool:
    f_e = np.asarray(f_e)
    radius = 2.0 * np.maximum(np.sqrt(f_e * iota / L), iota / L)
    return bool(np.all(np.abs(np.asarray(fhat_e) - f_e) <= radius))


def l_event(max_tilde_sum: float, iota: float, L: int, gamma: float) -> bool:
    return bool(max_tilde_sum <= L + iota / gamma)


@dataclass
class EpochEvents:
    e: int
    F: bool
    L: bool
    fallbacks: int
    ratio_ok: bool
    max_ratio: float
    min_ratio: float
    max_tilde_sum: float
    J_violations: int
    L_violations: int
    p_bound_violations: int
    tilde_p_bound_violations: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EventSummary:
    epochs: list
    G: bool

    @property
    def F_failures(self) -> int:
        return sum(not ev.F for ev in self.epochs)

    @property
    def L_failures(self) -> int:
        return sum(not ev.L for ev in self.epochs)

    @property
    def fallbacks(self) -> int:
        return sum(ev.fallbacks for ev in self.epochs)

    def to_dict(self) -> dict:
        return {
            "G": self.G,
            "F_failures": self.F_failures,
            "L_failures": self.L_failures,
            "fallbacks_epochs_ge2": self.fallbacks,
            "epochs": [ev.to_dict() for ev in self.epochs],
        }


def _require_crosslearn(trace: Trace):
    if trace.pair_p is None or trace.schedule is None:
        raise ValueError("diagnostics need a trace produced by the epoch-based learner")


def _estimates(trace: Trace, oracle: LossOracle, rounds, hat: bool):
    """Column-A increments (n, C) of the learner's or the surrogate estimates at `rounds`."""
    sch = trace.schedule
    by_epoch = {rec.e: rec for rec in trace.epochs}
    out = np.zeros((len(rounds), trace.C))
    for i, t in enumerate(rounds):
        e = trace.epoch[t]
        if e < 2 or trace.keep[t] != 1:
            continue
        rec = by_epoch[e]
        A = trace.actions[t]
        denom = rec.fhat[A] + 1.5 * sch.gamma if hat else rec.f[A] + sch.gamma
        out[i] = 2.0 * oracle.loss_row(t, A) / denom
    return out


def indicator_events(trace: Trace, oracle: LossOracle, nu) -> EventSummary:
    """Concentration events and stability counts for every completed epoch e >= 2."""
    _require_crosslearn(trace)
    sch = trace.schedule
    nu = np.asarray(nu, dtype=float)
    L, iota, gamma, eta = sch.L, sch.iota, sch.gamma, sch.eta
    events = []
    for rec in trace.epochs:
        if rec.e < 2 or not rec.complete:
            continue
        rounds = np.arange(rec.start, rec.stop)
        tilde = np.zeros((len(rounds), trace.C, trace.K))
        loss_idx = np.flatnonzero(trace.role[rounds] == ROLE_LOSS)
        cols = _estimates(trace, oracle, rounds[loss_idx], hat=False)
        tilde[loss_idx, :, trace.actions[rounds[loss_idx]]] = cols
        totals = tilde.sum(axis=0)
        # exclusive prefix sums: p-tilde at t only sees rounds t' < t of the epoch
        prefix = np.cumsum(tilde, axis=0) - tilde
        pt = softmax_weights(prefix, eta, rec.s_next[None])
        s = rec.s_e
        lo, hi = s / 2.0, 2.0 * s
        tilde_bad = int(np.sum((pt < lo) | (pt > hi)))
        P = trace.pair_p[rounds // 2]
        p_bad = int(np.sum((P < lo) | (P > hi)))
        f = rec.f
        pt_marg = np.einsum("c,tck->tk", nu, pt[loss_idx])
        p_marg = np.einsum("c,tck->tk", nu, P[loss_idx])
        J_bad = int(np.sum(~np.all(pt_marg <= 4 * f, axis=1)))
        L_bad = int(np.sum(~np.all(p_marg <= 4 * f, axis=1)))
        ratio = (f + gamma) / (rec.fhat + 1.5 * gamma)
        max_tilde = float(totals.max())
        events.append(
            EpochEvents(
                e=rec.e,
                F=f_event(f, rec.fhat, iota, L),
                L=l_event(max_tilde, iota, L, gamma),
                fallbacks=int(trace.fallback[rounds].sum()),
                ratio_ok=ratio_check(f, rec.fhat, gamma),
                max_ratio=float(ratio.max()),
                min_ratio=float(ratio.min()),
                max_tilde_sum=max_tilde,
                J_violations=J_bad,
                L_violations=L_bad,
                p_bound_violations=p_bad,
                tilde_p_bound_violations=tilde_bad,
            )
        )
    G = all(ev.F and ev.L for ev in events)
    return EventSummary(events, G)


@dataclass
class DecompositionLedger:
    bias1: float
    bias2: float
    ftrl: float
    bias3: float
    bias4: float
    bias5: float
    total: float
    regret: float
    linearized: float  # 2 * sum over loss rounds of E_c <p - pi, l>

    @property
    def residual(self) -> float:
        return self.total - self.regret

    def to_dict(self) -> dict:
        d = asdict(self)
        d["residual"] = self.residual
        return d


def decomposition(trace: Trace, oracle: LossOracle, nu, pi) -> DecompositionLedger:
    """Split the realized regret against `pi` into the six-term identity."""
    _require_crosslearn(trace)
    if (trace.T, trace.C, trace.K) != oracle.shape:
        raise ValueError("trace and oracle dimensions differ")
    nu = np.asarray(nu, dtype=float)
    pi = np.asarray(pi)
    C = trace.C
    reg = per_round_regret(trace, oracle, pi)
    lr = trace.loss_rounds
    n = len(lr)
    A = trace.actions[lr]
    P = trace.pair_p[lr // 2]  # (n, C, K)
    ell = np.empty((n, C, trace.K))
    for i, t in enumerate(lr):
        ell[i] = oracle.round_matrix(t)
    cidx = np.arange(C)
    ell_pi = ell[:, cidx, pi]  # (n, C)
    p_dot_l = np.einsum("tck,tck->tc", P, ell)
    P_A = P[np.arange(n), :, A]  # (n, C): p_{t,c}(A_t)
    pi_is_A = pi[None, :] == A[:, None]
    hat = _estimates(trace, oracle, lr, hat=True)
    tilde = _estimates(trace, oracle, lr, hat=False)

    lin = (p_dot_l - ell_pi) @ nu
    terms = {
        "bias1": math.fsum(reg) - 2.0 * math.fsum(reg[lr]),
        "bias2": 2.0 * math.fsum(reg[lr] - lin),
        "ftrl": 2.0 * math.fsum((P_A * hat - hat * pi_is_A) @ nu),
        "bias3": 2.0 * math.fsum((p_dot_l - P_A * tilde) @ nu),
        "bias4": 2.0 * math.fsum((P_A * (tilde - hat)) @ nu),
        "bias5": 2.0 * math.fsum((hat * pi_is_A - ell_pi) @ nu),
    }
    return DecompositionLedger(
        **terms,
        total=math.fsum(terms.values()),
        regret=math.fsum(reg),
        linearized=2.0 * math.fsum(lin),
    )


def pairing_gap(trace: Trace, oracle: LossOracle, pi) -> float:
    """Full-horizon regret minus twice the regret on the loss-role rounds."""
    reg = per_round_regret(trace, oracle, pi)
    return math.fsum(reg) - 2.0 * math.fsum(reg[trace.role == ROLE_LOSS])


def pairing_gap_bound(T: int, delta: float) -> float:
    return 2.0 * math.sqrt(T * math.log(1.0 / delta))


# --- frozen-state samplers for Monte Carlo checks -------------------------------------------


def fhat_sampler(s, nu, L: int):
    """Batch sampler of the importance estimate built from L/2 fresh frequency rounds."""
    s = np.asarray(s, dtype=float)
    nu = np.asarray(nu, dtype=float)
    m = L // 2

    def draw(rng, size):
        counts = rng.multinomial(m, nu, size=size)
        return (counts / m) @ s / 2.0

    return draw


def fhat_ratio_sampler(s, nu, schedule: ParamSchedule):
    """Batch sampler of ((f - fhat - gamma/2) / (fhat + 3 gamma / 2)) * F_e for every arm."""
    f = true_importance(s, nu)
    gamma, iota, L = schedule.gamma, schedule.iota, schedule.L
    base = fhat_sampler(s, nu, L)
    radius = 2.0 * np.maximum(np.sqrt(f * iota / L), iota / L)

    def draw(rng, size):
        fhat = base(rng, size)
        F = np.all(np.abs(fhat - f) <= radius, axis=1, keepdims=True)
        return (f - fhat - gamma / 2.0) / (fhat + 1.5 * gamma) * F

    return draw


def used_arm_sampler(state: AlgoState, nu):
    """Batch sampler of the indicator vector e_A * S_t at a loss-role round with frozen state."""
    nu = np.asarray(nu, dtype=float)
    P = compute_p_all(state)
    C, K = P.shape
    Q = np.empty_like(P)
    for c in range(C):
        Q[c], _ = reject_or_fallback(P[c], state.s_cur[c])
    keep = np.array([[keep_probability(state.s_cur[c], Q[c], a) if Q[c, a] > 0 else 0.0 for a in range(K)] for c in range(C)])
    cdf = np.cumsum(Q, axis=1)
    nu_cdf = np.cumsum(nu)

    def draw(rng, size):
        c = np.minimum(np.searchsorted(nu_cdf, rng.random(size) * nu_cdf[-1], side="right"), C - 1)
        u = rng.random(size)[:, None]
        A = np.minimum((cdf[c] <= u * cdf[c, -1:]).sum(axis=1), K - 1)
        S = rng.random(size) < keep[c, A]
        out = np.zeros((size, K))
        out[np.arange(size), A] = S
        return out

    return draw
