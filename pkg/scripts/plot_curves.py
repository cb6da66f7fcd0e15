"""Plot baseline vs quantized learning curves from the train command's CSVs.

    python scripts/plot_curves.py runs/acceptance --algo sac --env pendulum -o sac_pendulum.png
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from obsquant.algo.train import read_csv  # noqa: E402


def load(run_dir: Path, algo: str, env: str, variant: str):
    curves = [read_csv(p) for p in sorted(run_dir.glob(f"{algo}_{env}_{variant}_seed*.csv"))]
    if not curves:
        return None
    steps = np.array([r.step for r in curves[0]])
    returns = np.array([[r.return_mean for r in c] for c in curves])
    return steps, returns


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("run_dir", type=Path)
    p.add_argument("--algo", default="sac")
    p.add_argument("--env", default="pendulum")
    p.add_argument("-o", "--output", default=None)
    args = p.parse_args()

    fig, ax = plt.subplots(figsize=(6, 4))
    for variant, label, style in (("b", "baseline (B)", "--"), ("q", "quantized (Q)", "-")):
        data = load(args.run_dir, args.algo, args.env, variant)
        if data is None:
            continue
        steps, returns = data
        mean, std = np.nanmean(returns, axis=0), np.nanstd(returns, axis=0)
        ax.plot(steps, mean, style, label=f"{label}, {returns.shape[0]} seeds")
        ax.fill_between(steps, mean - std, mean + std, alpha=0.2)
    ax.set_xlabel("environment steps")
    ax.set_ylabel("mean return (last 10 episodes)")
    ax.set_title(f"{args.algo.upper()} on {args.env}")
    ax.legend()
    fig.tight_layout()
    out = args.output or args.run_dir / f"{args.algo}_{args.env}.png"
    fig.savefig(out, dpi=120)
    print(out)


if __name__ == "__main__":
    main()
