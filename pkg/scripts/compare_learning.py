"""Train baseline and quantized agents on the same seeds and compare final returns.

    python scripts/compare_learning.py --algo sac --env pendulum --steps 30000 --seeds 0..4
    python scripts/compare_learning.py --algo ppo --env reacher --steps 150000 --out runs/ppo_reacher

Writes the per-seed CSVs and summaries through the CLI's train command and
prints final mean returns with the pooled across-seed standard deviation.
"""

import argparse
import json
import math
from pathlib import Path

import numpy as np

from obsquant.cli import ExperimentConfig, cmd_train, parse_seeds


def final_returns(summary):
    return np.array([v["final_return"] for v in summary["seeds"].values()])


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--algo", choices=("ppo", "sac"), default="sac")
    p.add_argument("--env", default="pendulum")
    p.add_argument("--steps", type=int, default=30_000)
    p.add_argument("--seeds", default="0..4")
    p.add_argument("--m", type=int, default=None, help="decimals for the quantized run")
    p.add_argument("--log-every", type=int, default=1000)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="runs/compare")
    args = p.parse_args()

    finals = {}
    for quantize in (False, True):
        cfg = ExperimentConfig(algo=args.algo, env=args.env, steps=args.steps, seeds=parse_seeds(args.seeds),
                               quantize=quantize, decimals=args.m, out=args.out, log_every=args.log_every,
                               jobs=args.jobs)
        finals["quantized" if quantize else "baseline"] = final_returns(cmd_train(cfg))

    b, q = finals["baseline"], finals["quantized"]
    s_b, s_q = np.std(b, ddof=1), np.std(q, ddof=1)
    pooled = math.sqrt((s_b**2 + s_q**2) / 2)
    result = {
        "algo": args.algo,
        "env": args.env,
        "steps": args.steps,
        "baseline": {"final_returns": b.tolist(), "mean": float(b.mean()), "std": float(s_b)},
        "quantized": {"final_returns": q.tolist(), "mean": float(q.mean()), "std": float(s_q)},
        "pooled_std": pooled,
        "gap": float(abs(q.mean() - b.mean())),
        "within_one_pooled_std": bool(abs(q.mean() - b.mean()) <= pooled),
    }
    Path(args.out, f"{args.algo}_{args.env}_comparison.json").write_text(json.dumps(result, indent=2))
    print(json.dumps(result, indent=2))


if __name__ == "__main__":
    main()
