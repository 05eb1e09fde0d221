"""
Good events and importance estimates
====================================

Check the per-epoch concentration events on a real run, then verify two
estimator identities by frozen-state Monte Carlo.
"""

import numpy as np

from xlearn import RngStreams, derive_schedule, run_episode
from xlearn.algo import init_state
from xlearn.diagnostics import fhat_ratio_sampler, fhat_sampler, indicator_events, true_importance, used_arm_sampler
from xlearn.env import EnvSpec, build_oracle
from xlearn.oracle import mc_expectation

T = 2**14
oracle, nu = build_oracle(EnvSpec(kind="sleeping", K=4, C=3, T=T, env_seed=8))
trace = run_episode(oracle, nu, derive_schedule(4, T, 0.1), RngStreams(1))
events = indicator_events(trace, oracle, nu)
print("G holds:", events.G, "| F failures", events.F_failures, "| L failures", events.L_failures)
for ev in events.epochs[:3]:
    print(f"  epoch {ev.e}: ratio range [{ev.min_ratio:.6f}, {ev.max_ratio:.6f}], fallbacks {ev.fallbacks}")

rng = np.random.default_rng(0)
s = rng.dirichlet(np.ones(4), size=3)
f = true_importance(s, nu)

# The frequency estimate is unbiased for f.
est = mc_expectation(fhat_sampler(s, nu, 400), rng, 10**5, batch=25_000)
print("\nf       ", np.round(f, 4))
print("E[fhat] ", np.round(est.mean, 4), "+/-", np.round(est.stderr, 5))

# The chance that a loss round uses arm a's loss is exactly f(a), whatever
# the current FTRL distribution is, thanks to rejection sampling.
sch = derive_schedule(4, T, 0.1)
st = init_state(4, 3, sch)
st.s_cur = s
st.cumloss = rng.uniform(0, 50, size=(3, 4))
est = mc_expectation(used_arm_sampler(st, nu), rng, 2 * 10**5, batch=50_000)
print("P(used)  ", np.round(est.mean, 4))

# The estimate ratio is negative on average and no smaller than -gamma/f.
sch = derive_schedule(3, 2**20, 0.1)
s3 = rng.dirichlet(np.full(3, 2.0), size=3)
est = mc_expectation(fhat_ratio_sampler(s3, nu, sch), rng, 10**5, batch=25_000)
print("\nratio means", np.round(est.mean, 4), "floor", np.round(-sch.gamma / true_importance(s3, nu), 4))
