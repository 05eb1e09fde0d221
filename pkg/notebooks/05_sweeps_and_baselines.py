"""
Seed sweeps and baselines
=========================

The harness behind the command line, driven from Python: sweep a few
horizons for two algorithms and summarize.
"""

import json
import tempfile
from pathlib import Path

from xlearn.cli import RunConfig, run_sweep, summarize
from xlearn.env import EnvSpec

out = Path(tempfile.mkdtemp())
env = EnvSpec(kind="shifting", K=3, C=4)
for algo in ("crosslearn", "per_context_exp3ix", "uniform"):
    run_sweep(RunConfig(env=env, algo=algo, T=[1024, 2048, 4096], n_seeds=20, thin=256,
                        out_dir=str(out / algo)))

report = summarize([out / a for a in ("crosslearn", "per_context_exp3ix", "uniform")])
for algo, r in report["algorithms"].items():
    print(f"{algo:>20}: slope {r['slope']:.2f}, medians {[round(m, 1) for m in r['median']]}")
print(json.dumps(report["comparison"], indent=1))
print("sign tests:", json.dumps(report.get("sign_tests", {}), indent=1))
print("artifacts under", out)
