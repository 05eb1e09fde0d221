"""Seed-sweep harness: runs learners over environments and writes CSV/JSON artifacts.

Usage::

    xlearn --env shifting --algo crosslearn --K 5 --C 5 --T 4096 --T 8192 \\
           --seeds 20 --out runs/demo
    xlearn summarize runs/crosslearn runs/per_context_exp3ix
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy.stats import binomtest

from .algo import ScheduleError, derive_schedule, run_episode
from .baselines import BASELINE_KINDS, run_baseline
from .core import RNG_ALGORITHM, RngStreams, best_fixed_policy, per_round_regret
from .diagnostics import decomposition, indicator_events, pairing_gap
from .env import EnvSpec, build_oracle

log = logging.getLogger("xlearn")

ALGOS = ("crosslearn",) + BASELINE_KINDS
PERCENTILES = (5, 25, 50, 75, 95)
EXIT_CONFIG = 2
EXIT_IO = 3


class ConfigError(ValueError):
    pass


class InsufficientData(ValueError):
    pass


@dataclass
class RunConfig:
    env: EnvSpec = field(default_factory=EnvSpec)
    algo: str = "crosslearn"
    T: list = field(default_factory=lambda: [4096])
    delta: float = 0.1
    seed_base: int = 0
    n_seeds: int = 1
    thin: int = 1
    emit_decomposition: bool = False
    out_dir: str = "runs"
    env_seed: int | None = None  # fixed adversary for every seed; None draws one per seed
    jobs: int = 1

    def validate(self):
        if self.algo not in ALGOS:
            raise ConfigError(f"unknown algorithm {self.algo!r}; choose from {', '.join(ALGOS)}")
        if self.n_seeds < 1 or self.thin < 1 or self.jobs < 1:
            raise ConfigError("seeds, thin and jobs must be >= 1")
        if not self.T or any(int(t) < 4 for t in self.T):
            raise ConfigError("every horizon T must be >= 4")
        if not 0 < self.delta < 1:
            raise ConfigError("delta must lie in (0, 1)")
        try:
            self.env_for(int(self.T[0]), 0).validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.algo == "crosslearn":
            for T in self.T:
                try:
                    derive_schedule(self.env.K, int(T), self.delta)
                except ScheduleError as exc:
                    raise ConfigError(str(exc)) from exc

    def env_for(self, T: int, env_seed: int) -> EnvSpec:
        d = asdict(self.env)
        d.update(T=int(T), env_seed=int(env_seed))
        return EnvSpec(**d)

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("jobs")
        d.pop("out_dir")
        return d


# --- formatting -------------------------------------------------------------------------------


def fmt(x) -> str:
    """Shortest round-trip text for a float (ints pass through)."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def dump_json(obj, path: Path):
    text = json.dumps(_jsonable(obj), sort_keys=True, indent=2, ensure_ascii=False)
    path.write_text(text + "\n", encoding="utf-8", newline="\n")


# --- one run --------------------------------------------------------------------------------


def run_one(config: RunConfig, T: int, seed: int) -> dict:
    """Play one (T, seed) cell; returns the trajectory rows and the JSON report."""
    rngs = RngStreams(seed)
    env_seed = config.env_seed
    if env_seed is None:
        env_seed = int(rngs.environment.integers(0, 2**63 - 1))
    spec = config.env_for(T, env_seed)
    oracle, nu = build_oracle(spec)
    report = {
        "T": T,
        "seed": seed,
        "algo": config.algo,
        "env": spec.to_dict(),
        "rng": rngs.metadata(),
    }
    if config.algo == "crosslearn":
        schedule = derive_schedule(spec.K, T, config.delta)
        trace = run_episode(oracle, nu, schedule, rngs)
        report["schedule"] = schedule.to_dict()
    else:
        trace = run_baseline(config.algo, oracle, nu, T, rngs)
        report["baseline_params"] = {k: v for k, v in trace.meta.items() if k != "rng"}
    pi = best_fixed_policy(oracle, trace.contexts)
    inst = per_round_regret(trace, oracle, pi)
    cum = np.cumsum(inst)
    final = float(math.fsum(inst))
    cum[-1] = final  # keep the CSV's last row equal to the report's final_regret
    report["policy"] = pi.tolist()
    report["final_regret"] = final
    if config.algo == "crosslearn":
        ev = indicator_events(trace, oracle, nu)
        report["events"] = ev.to_dict()
        report["pairing_gap"] = pairing_gap(trace, oracle, pi)
        report["fallbacks"] = int(trace.fallback.sum())
        if config.emit_decomposition:
            report["decomposition"] = decomposition(trace, oracle, nu, pi).to_dict()
    idx = list(range(config.thin - 1, T, config.thin))
    if not idx or idx[-1] != T - 1:
        idx.append(T - 1)
    rows = [(t + 1, float(cum[t])) for t in idx]
    return {"T": T, "seed": seed, "rows": rows, "report": report}


def _run_cell(args):
    config, T, seed = args
    return run_one(config, T, seed)


def write_traj(path: Path, rows):
    lines = ["t,cum_regret"] + [f"{t},{fmt(r)}" for t, r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def run_sweep(config: RunConfig) -> dict:
    """Run every (T, seed) cell and write trajectories, per-run reports and summary.json."""
    config.validate()
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    Ts = [int(t) for t in config.T]
    seeds = [config.seed_base + i for i in range(config.n_seeds)]
    cells = [(config, T, s) for T in Ts for s in seeds]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_run_cell, cells))
    else:
        results = [_run_cell(c) for c in cells]

    regrets = {T: [] for T in Ts}
    for res in sorted(results, key=lambda r: (r["T"], r["seed"])):
        T, seed = res["T"], res["seed"]
        write_traj(out / f"traj_T{T}_s{seed}.csv", res["rows"])
        dump_json(res["report"], out / f"run_T{T}_s{seed}.json")
        regrets[T].append(res["report"]["final_regret"])

    summary = {
        "algo": config.algo,
        "config": config.echo(),
        "rng_algorithm": RNG_ALGORITHM,
        "seeds": seeds,
        "per_T": {
            str(T): {
                "percentiles": {str(q): float(np.percentile(regrets[T], q)) for q in PERCENTILES},
                "final_regrets": regrets[T],
            }
            for T in Ts
        },
    }
    dump_json(summary, out / "summary.json")
    return summary


# --- summaries --------------------------------------------------------------------------------


def scaling_slope(Ts, values) -> float:
    """Least-squares slope of log(values) against log(T)."""
    x = np.log(np.asarray(Ts, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def sign_test(a, b, alternative: str = "greater") -> dict:
    """Paired sign test that a beats (is below) b; ties are dropped.

    "greater" asks whether wins of a exceed one half, which is the one-sided
    question a comparison table cares about.
    """
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    wins, losses = int(np.sum(d < 0)), int(np.sum(d > 0))
    n = wins + losses
    pval = float(binomtest(wins, n, 0.5, alternative=alternative).pvalue) if n else 1.0
    return {"wins": wins, "losses": losses, "p_value": pval}


def load_sweep(path) -> tuple[str, dict]:
    summary = json.loads((Path(path) / "summary.json").read_text(encoding="utf-8"))
    return summary["algo"], {int(T): v["final_regrets"] for T, v in summary["per_T"].items()}


def summarize(sweeps, min_T: int = 3, min_seeds: int = 20) -> dict:
    """Scaling slope, tail ratio and cross-algorithm medians.

    `sweeps` maps algorithm name to {T: final regrets}, or is a list of sweep
    directories written by `run_sweep`.
    """
    if not isinstance(sweeps, dict):
        sweeps = dict(load_sweep(p) for p in sweeps)
    report = {"algorithms": {}, "comparison": {}}
    for algo, per_T in sweeps.items():
        Ts = sorted(int(T) for T in per_T)
        if len(Ts) < min_T:
            raise InsufficientData(f"{algo}: need >= {min_T} distinct T values, got {len(Ts)}")
        for T in Ts:
            if len(per_T[T]) < min_seeds:
                raise InsufficientData(f"{algo}: T={T} has {len(per_T[T])} seeds, need >= {min_seeds}")
        med = [float(np.median(per_T[T])) for T in Ts]
        p95 = [float(np.percentile(per_T[T], 95)) for T in Ts]
        report["algorithms"][algo] = {
            "T": Ts,
            "median": med,
            "p95": p95,
            "p95_over_median": [a / b if b > 0 else float("inf") for a, b in zip(p95, med)],
            "slope": scaling_slope(Ts, med) if min(med) > 0 else float("nan"),
        }
    common = set.intersection(*(set(int(T) for T in v) for v in sweeps.values())) if sweeps else set()
    for T in sorted(common):
        report["comparison"][str(T)] = {algo: float(np.median(v[T])) for algo, v in sweeps.items()}
    # paired by seed position; only meaningful when sweeps share their seed lists
    if "crosslearn" in sweeps:
        mine = sweeps["crosslearn"]
        for algo, v in sweeps.items():
            if algo == "crosslearn":
                continue
            for T in sorted(common):
                if len(v[T]) == len(mine[T]):
                    report.setdefault("sign_tests", {}).setdefault(algo, {})[str(T)] = sign_test(mine[T], v[T])
    return report


# --- command line -----------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="xlearn", description="Cross-learning contextual bandit seed sweeps.")
    ap.add_argument("--config", help="JSON config file; flags override its values")
    ap.add_argument("--env", choices=("shifting", "auction", "sleeping"))
    ap.add_argument("--algo", choices=ALGOS)
    ap.add_argument("--K", type=int)
    ap.add_argument("--C", type=int)
    ap.add_argument("--T", type=int, action="append", help="horizon; repeat for a sweep")
    ap.add_argument("--delta", type=float)
    ap.add_argument("--seeds", type=int, dest="n_seeds")
    ap.add_argument("--seed-base", type=int, dest="seed_base")
    ap.add_argument("--thin", type=int)
    ap.add_argument("--emit-decomposition", action="store_true", default=None, dest="emit_decomposition")
    ap.add_argument("--out", dest="out_dir")
    ap.add_argument("--jobs", type=int)
    return ap


def config_from_mapping(d: dict) -> RunConfig:
    d = dict(d)
    env = d.pop("env", {}) or {}
    if isinstance(env, str):
        env = {"kind": env}
    names = {f.name for f in fields(RunConfig)}
    unknown = set(d) - names
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    env_names = {f.name for f in fields(EnvSpec)}
    if set(env) - env_names:
        raise ConfigError(f"unknown env keys: {sorted(set(env) - env_names)}")
    if "T" in d and not isinstance(d["T"], list):
        d["T"] = [d["T"]]
    return RunConfig(env=EnvSpec(**env), **d)


def build_config(argv=None) -> RunConfig:
    args = _parser().parse_args(argv)
    base: dict = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad config file: {exc}") from exc
    env = dict(base.pop("env", {}) or {})
    if args.env:
        env["kind"] = args.env
    if args.K is not None:
        env["K"] = args.K
    if args.C is not None:
        env["C"] = args.C
    for key in ("algo", "T", "delta", "n_seeds", "seed_base", "thin", "emit_decomposition", "out_dir", "jobs"):
        val = getattr(args, key)
        if val is not None:
            base[key] = val
    base.setdefault("out_dir", os.environ.get("XLEARN_OUT_DIR", "runs"))
    base["env"] = env
    return config_from_mapping(base)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    if argv and argv[0] == "summarize":
        try:
            report = summarize(argv[1:])
        except InsufficientData as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
        print(json.dumps(_jsonable(report), sort_keys=True, indent=2))
        return 0
    try:
        config = build_config(argv)
        config.validate()
    except (ConfigError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        summary = run_sweep(config)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    for T, v in summary["per_T"].items():
        log.info("T=%s median regret %.2f", T, v["percentiles"]["50"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
