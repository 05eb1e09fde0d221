"""
Regret decomposition
====================

Regret against any fixed policy splits into six terms whose sum is exact,
not a bound.  The ledger makes each term visible.
"""

from xlearn import RngStreams, best_fixed_policy, derive_schedule, run_episode
from xlearn.diagnostics import TERMS, decomposition, pairing_gap, pairing_gap_bound
from xlearn.env import EnvSpec, build_oracle

T = 4096
oracle, nu = build_oracle(EnvSpec(kind="shifting", K=3, C=3, T=T, env_seed=5))
trace = run_episode(oracle, nu, derive_schedule(3, T, 0.1), RngStreams(4))
pi = best_fixed_policy(oracle, trace.contexts)

ledger = decomposition(trace, oracle, nu, pi)
for name in TERMS:
    print(f"{name:>6}: {getattr(ledger, name):10.3f}")
print(f" total: {ledger.total:10.3f}")
print(f"regret: {ledger.regret:10.3f}   residual {ledger.residual:.1e}")

# The first term is the gap between loss rounds and their partner rounds.
# It is a martingale and concentrates at the sqrt(T) scale.
print("\npairing gap %.2f, bound %.2f" % (pairing_gap(trace, oracle, pi), pairing_gap_bound(T, 0.1)))
