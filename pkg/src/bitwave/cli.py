"""Command line interface.

Subcommands:

  rates     sweep (n, bits), fit rate exponents, write CSVs + figure
  estimate  one run: dump the coefficient tree and reconstruction
  family    emit fixture densities as CSV + figure
  simcheck  diagnostics for the sample-reconstitution layer

A JSON config file (``--config``) provides defaults for ``rates``;
explicit flags override file values.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import report as rpt
from .densities import (TEST_DENSITY_KINDS, export_csv, make_test_density,
                        parse_density, sample)
from .errors import BitwaveError
from .estimators import (centralized_linear, centralized_threshold,
                         default_kappa, plan_multi, plan_single, run_multi,
                         run_single)
from .harness import ExperimentConfig, fit_rate, run_trials
from .simulate import assign_parts, build_transcript, expected_yield, referee_simulate
from .wavelets import make_table, reconstruct


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--wavelet", default=None, help="haar or dbK (default db2)")
    p.add_argument("--density", default=None,
                   help=f"one of {', '.join(TEST_DENSITY_KINDS)} or p1:j=5:seed=7")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="out", help="output directory")


def _parse_int_list(text: str) -> tuple:
    return tuple(int(tok) for tok in text.replace(",", " ").split())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bitwave",
        description="Density estimation from bit-constrained messages")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rates", help="risk sweep and rate-exponent fit")
    _add_common(p)
    p.add_argument("--config", default=None, help="JSON ExperimentConfig file")
    p.add_argument("--estimator", default=None,
                   choices=["single", "multi", "central-linear", "central-thresh"])
    p.add_argument("--n", default=None, help="player counts, e.g. '1024 4096 16384'")
    p.add_argument("--bits", default=None, help="bit budgets, e.g. '3' or '1 3 8'")
    p.add_argument("--r", type=float, default=None, help="loss exponent")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--smoothness", type=float, default=None)
    p.add_argument("--regularity-bound", type=int, default=None)
    p.add_argument("--sim-mode", default=None, choices=["exact", "ideal"])

    p = sub.add_parser("estimate", help="single estimation run")
    _add_common(p)
    p.add_argument("--estimator", default="single",
                   choices=["single", "multi", "central-linear", "central-thresh"])
    p.add_argument("--n", type=int, default=4096)
    p.add_argument("--bits", type=int, default=3)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--smoothness", type=float, default=1.5)
    p.add_argument("--regularity-bound", type=int, default=3)
    p.add_argument("--sim-mode", default="exact", choices=["exact", "ideal"])
    p.add_argument("--level", type=int, default=None,
                   help="override the planned level (single/central-linear)")

    p = sub.add_parser("family", help="emit fixture densities")
    _add_common(p)

    p = sub.add_parser("simcheck", help="reconstitution diagnostics")
    _add_common(p)
    p.add_argument("--alphabet", type=int, default=64)
    p.add_argument("--bits", type=int, default=3)
    p.add_argument("--n", type=int, default=10**6)
    p.add_argument("--dist", default="uniform",
                   choices=["uniform", "geometric", "point_mass_mixture"])
    return parser


def _cmd_rates(args) -> int:
    cfg = ExperimentConfig()
    if args.config:
        with open(args.config) as fh:
            cfg = ExperimentConfig.from_json(fh.read())
    overrides = {
        "density": args.density, "wavelet": args.wavelet,
        "estimator": args.estimator, "r": args.r, "trials": args.trials,
        "seed": args.seed, "kappa": args.kappa, "smoothness": args.smoothness,
        "regularity_bound": args.regularity_bound, "sim_mode": args.sim_mode,
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    if args.n:
        cfg.n_values = _parse_int_list(args.n)
    if args.bits:
        cfg.b_values = _parse_int_list(args.bits)

    report = run_trials(cfg)
    fits = {}
    for bits in sorted({pt.bits for pt in report.points}):
        pts = [(pt.n, pt.mean_risk) for pt in report.points
               if pt.bits == bits and pt.losses and pt.mean_risk > 0]
        try:
            slope, intercept, resid = fit_rate(pts)
            fits[bits] = {"slope": slope, "intercept": intercept,
                          "residual": resid}
        except ValueError as exc:
            fits[bits] = {"error": str(exc)}

    out = args.out
    os.makedirs(out, exist_ok=True)
    rpt.write_trials_csv(report, os.path.join(out, "trials.csv"))
    rpt.write_summary_csv(report, os.path.join(out, "summary.csv"))
    rpt.write_summary_json(report, os.path.join(out, "summary.json"), fits)
    rpt.plot_rates(report, fits, os.path.join(out, "rates.png"))
    for row in report.summary_rows():
        print(f"n={row['n']:>8} b={row['bits']:>2} risk={row['mean_risk']:.5g} "
              f"se={row['se']:.3g} ok={row['trials_ok']} fail={row['trials_failed']}")
    for bits, fit in fits.items():
        if "slope" in fit:
            print(f"b={bits}: slope {fit['slope']:.3f} "
                  f"intercept {fit['intercept']:.3f} residual {fit['residual']:.3f}")
        else:
            print(f"b={bits}: fit failed ({fit['error']})")
    print(f"wrote {out}/trials.csv, summary.csv, summary.json, rates.png")
    return 0


def _cmd_estimate(args) -> int:
    wavelet = args.wavelet or "db2"
    density = args.density or "tent_mix"
    seed = args.seed if args.seed is not None else 0
    table = make_table(wavelet)
    truth = parse_density(density, table)
    rng = np.random.default_rng([seed, args.n, args.bits, 0])
    xs = sample(truth, args.n, rng)

    if args.estimator in ("single", "central-linear"):
        level = (args.level if args.level is not None
                 else plan_single(args.n, args.bits, args.smoothness, table))
        if args.estimator == "single":
            tree = run_single(xs, args.bits, table, level, rng,
                              sim_mode=args.sim_mode)
        else:
            tree = centralized_linear(xs, table, level)
        plan_desc = {"H": level}
    else:
        mode = "ideal" if args.estimator == "central-thresh" else args.sim_mode
        plan = plan_multi(args.n, args.bits, args.regularity_bound, table,
                          kappa=args.kappa, sim_mode=mode)
        if args.estimator == "multi":
            tree = run_multi(xs, args.bits, table, plan, rng,
                             sim_mode=args.sim_mode)
        else:
            kappa = (args.kappa if args.kappa is not None
                     else default_kappa(table, 2.0, args.regularity_bound))
            tree = centralized_threshold(xs, table, plan.base_level,
                                         plan.top_level, kappa)
        plan_desc = {"L": plan.base_level, "H": plan.top_level,
                     "m": plan.yields, "kappa": plan.kappa}

    out = args.out
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "tree.json"), "w") as fh:
        fh.write(tree.to_json())
    grid = reconstruct(tree, table, truth.resolution)
    with open(os.path.join(out, "reconstruction.csv"), "w") as fh:
        fh.write("x,estimate,truth\n")
        for x, e, t in zip(grid.xs, grid.values, truth.values):
            fh.write(f"{x:.8g},{e:.8g},{t:.8g}\n")
    rpt.plot_density_fit(truth, grid, os.path.join(out, "reconstruction.png"),
                         label=f"{args.estimator}, n={args.n}, b={args.bits}")
    loss = float(np.trapezoid((grid.values - truth.values) ** 2,
                              dx=truth.step))
    print(f"plan: {plan_desc}")
    print(f"L2^2 loss: {loss:.6g}")
    print(f"wrote {out}/tree.json, reconstruction.csv, reconstruction.png")
    return 0


def _cmd_family(args) -> int:
    wavelet = args.wavelet or "db2"
    table = make_table(wavelet)
    out = args.out
    os.makedirs(out, exist_ok=True)
    models = []
    if args.density:
        models.append(parse_density(args.density, table))
    else:
        models = [make_test_density(kind) for kind in TEST_DENSITY_KINDS]
        models.append(parse_density("p1:j=5:seed=7", make_table("haar")))
    for model in models:
        stem = model.label.replace(":", "_").replace("=", "")
        export_csv(model, os.path.join(out, f"{stem}.csv"))
    rpt.plot_densities(models, os.path.join(out, "densities.png"))
    print(f"wrote {len(models)} fixture CSVs and densities.png under {out}/")
    return 0


def _cmd_simcheck(args) -> int:
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    d = args.alphabet
    if args.dist == "uniform":
        probs = np.ones(d) / d
    elif args.dist == "geometric":
        probs = 0.95 ** np.arange(d)
        probs /= probs.sum()
    else:
        probs = 0.5 * np.ones(d) / d
        probs[d // 4] += 0.5
    symbols = rng.choice(d, size=args.n, p=probs)
    assignment = assign_parts(d, args.bits)
    transcript = build_transcript(symbols, assignment)
    rep = referee_simulate(transcript, assignment, rng)
    counts = np.bincount(rep.symbols, minlength=d)
    m = rep.yield_count
    expect = expected_yield(args.n, d, args.bits)
    tv = 0.5 * float(np.abs(counts / max(m, 1) - probs).sum())
    from scipy import stats
    chi2, pval = stats.chisquare(counts, m * probs)
    out = args.out
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "simcheck.csv"), "w") as fh:
        fh.write("symbol,target_p,count\n")
        for a in range(d):
            fh.write(f"{a},{probs[a]:.8g},{counts[a]}\n")
    rpt.plot_simcheck(probs, counts, os.path.join(out, "simcheck.png"),
                      title=f"D={d} b={args.bits} mode={rep.mode} m={m}")
    print(f"mode={rep.mode} group={assignment.group_size} yield={m} "
          f"(expected {expect})")
    print(f"TV distance: {tv:.4f}  chi-square p: {pval:.4f}")
    print(f"wrote {out}/simcheck.csv, simcheck.png")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "rates":
            return _cmd_rates(args)
        if args.command == "estimate":
            return _cmd_estimate(args)
        if args.command == "family":
            return _cmd_family(args)
        if args.command == "simcheck":
            return _cmd_simcheck(args)
    except BitwaveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
