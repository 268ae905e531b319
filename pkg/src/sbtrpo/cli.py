"""Command-line front end.

Exit codes: 0 success, 1 runtime failure, 2 infeasible / diagnostic
outcome, 3 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import TrainConfig, format_value, parse_config, write_config
from .envs import TabularEnv, constrained_optimum_oracle, exact_policy_eval, optimal_policy
from .errors import ConfigError, InfeasibleError, SBTRPOError
from .trainer import exact_returns, make_env, read_log, train

EXIT_OK, EXIT_RUNTIME, EXIT_INFEASIBLE, EXIT_CONFIG = 0, 1, 2, 3
ANGLE_EDGES = np.arange(0.0, 181.0, 5.0)


def angle_histogram(angles, edges=ANGLE_EDGES) -> np.ndarray:
    """Counts per [lo, hi) bin; the last bin also holds 180. Blank/NaN entries are skipped."""
    a = np.array([float(x) for x in angles if x not in ("", None)], dtype=float)
    a = a[np.isfinite(a)]
    counts, _ = np.histogram(a, bins=edges)
    return counts


def _summary(cfg: TrainConfig, run) -> dict:
    last = run.reports[-1] if run.reports else None
    out = {
        "beta": cfg.beta,
        "seed": cfg.seed,
        "epochs": cfg.epochs,
        "safety_prob": last.safety_probability if last else float("nan"),
        "safe_reward": last.safe_reward if last else float("nan"),
        "mean_reward": last.mean_reward if last else float("nan"),
        "mean_cost": last.mean_cost if last else float("nan"),
        "accepted_epochs": sum(r.accepted for r in run.reports),
    }
    env = make_env(cfg)
    if isinstance(env, TabularEnv):
        out["exact_J_r"], out["exact_J_c"] = exact_returns(run.params, run.spec, env)
    return out


def _write_summary(summary: dict, path: Path):
    path.write_text("".join(f"{k} = {format_value(v)}\n" for k, v in summary.items()))


def read_summary(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def execute_run(cfg: TrainConfig, out_dir, plots: bool = True) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_config(cfg, out_dir / "config.txt")
    run = train(cfg, log_path=out_dir / "log.csv")
    summary = _summary(cfg, run)
    _write_summary(summary, out_dir / "summary.txt")
    np.save(out_dir / "params.npy", run.params)
    if plots and run.reports:
        from . import plotting

        plotting.training_curves(read_log(out_dir / "log.csv"), out_dir / "training_curves.png")
    return summary


def _parse_seeds(text: str) -> list[int]:
    seeds = []
    try:
        for part in text.split(","):
            part = part.strip()
            if ".." in part:
                lo, hi = part.split("..", 1)
                seeds.extend(range(int(lo), int(hi) + 1))
            elif part:
                seeds.append(int(part))
    except ValueError:
        raise ConfigError(f"invalid seed list: {text!r}") from None
    if not seeds:
        raise ConfigError("empty seed list")
    return seeds


def _parse_betas(text: str) -> list[float]:
    try:
        betas = [float(b) for b in text.split(",") if b.strip()]
    except ValueError:
        raise ConfigError(f"invalid beta list: {text!r}") from None
    if not betas:
        raise ConfigError("empty beta list")
    return betas


def _sweep_job(args):
    cfg, out_dir = args
    return execute_run(cfg, out_dir, plots=False)


def cmd_run(args) -> int:
    cfg = parse_config(args.config, args.set)
    summary = execute_run(cfg, args.out, plots=not args.no_plots)
    print("".join(f"{k} = {format_value(v)}\n" for k, v in summary.items()), end="")
    return EXIT_OK


def cmd_sweep(args) -> int:
    base = parse_config(args.config, args.set)
    betas = _parse_betas(args.beta)
    seeds = _parse_seeds(args.seeds)
    out = Path(args.out)
    jobs = []
    for b in betas:
        for s in seeds:
            cfg = base.replace(beta=b, seed=s)
            jobs.append((cfg, out / f"beta={b:g}_seed={s}"))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            summaries = list(pool.map(_sweep_job, jobs))
    else:
        summaries = [_sweep_job(j) for j in jobs]
    keys = ["beta", "seed", "safety_prob", "safe_reward", "mean_reward", "mean_cost"]
    if "exact_J_r" in summaries[0]:
        keys += ["exact_J_r", "exact_J_c"]
    rows = sorted(summaries, key=lambda s: (s["beta"], s["seed"]))
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(keys)
        for s in rows:
            writer.writerow([format_value(s[k]) for k in keys])
    if not args.no_plots:
        from . import plotting

        with open(out / "sweep.csv", newline="") as fh:
            plotting.pareto_scatter(list(csv.DictReader(fh)), out / "pareto.png")
    print(f"wrote {len(rows)} runs to {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    try:
        rows = read_log(args.log)
    except OSError as exc:
        print(f"error: cannot read log {args.log}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    counts_r = angle_histogram(r.get("angle_gr_deg", "") for r in rows)
    counts_c = angle_histogram(r.get("angle_gc_deg", "") for r in rows)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "angle_histogram.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin_lo_deg", "bin_hi_deg", "count_r", "count_c"])
        for lo, hi, cr, cc in zip(ANGLE_EDGES[:-1], ANGLE_EDGES[1:], counts_r, counts_c):
            writer.writerow([f"{lo:g}", f"{hi:g}", int(cr), int(cc)])
    if not args.no_plots:
        from . import plotting

        plotting.angle_histograms(ANGLE_EDGES, counts_r, counts_c, out / "angle_histograms.png")
    print(f"wrote {out / 'angle_histogram.csv'}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    cfg = parse_config(args.config, args.set)
    env = make_env(cfg)
    if not isinstance(env, TabularEnv):
        raise ConfigError(f"oracle needs a tabular env, got {cfg.env}")
    try:
        j_safe, table = constrained_optimum_oracle(env.cmdp)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}")
        return EXIT_INFEASIBLE
    _, jc_safe = exact_policy_eval(env.cmdp, table)
    # start from the safe policy so reward ties are broken towards zero cost
    j_opt, table_opt = optimal_policy(env.cmdp, init=table)
    _, jc_opt = exact_policy_eval(env.cmdp, table_opt)
    print(f"safe_J_r = {j_safe:.17g}")
    print(f"safe_J_c = {jc_safe:.17g}")
    print(f"unconstrained_J_r = {j_opt:.17g}")
    print(f"unconstrained_J_c = {jc_opt:.17g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sbtrpo", description="Safety-biased trust region policy optimisation")
    parser.add_argument("-v", "--verbose", action="store_true", help="log every epoch")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", help="key = value config file (defaults if omitted)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
        if out:
            p.add_argument("--out", required=True, help="output directory")
            p.add_argument("--no-plots", action="store_true", help="skip figure rendering")

    p = sub.add_parser("run", help="train one policy")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="train over a grid of (beta, seed)")
    common(p)
    p.add_argument("--beta", default="0.6,0.75,0.9", help="comma-separated safety biases")
    p.add_argument("--seeds", default="0..4", help="seed list, e.g. 0..4 or 0,3,7")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("diagnose", help="angle histograms from a run log")
    p.add_argument("--log", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("oracle", help="exact optima of a tabular environment")
    common(p, out=False)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (SBTRPOError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
