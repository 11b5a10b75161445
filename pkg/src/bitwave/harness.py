"""Risk measurement: Lr loss, (n, bits) sweeps, and rate-exponent fits.

Each trial draws fresh samples, runs the configured estimator through the
full pipeline, reconstructs the estimate on a fixed grid and integrates the
r-th power error against the truth.  Per-trial randomness is keyed by
(master seed, n, bits, trial index) so results never depend on execution
order, and a sweep is reproducible from its config alone.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .densities import DensityModel, parse_density, sample
from .errors import BitwaveError
from .estimators import (CoefficientTree, centralized_linear,
                         centralized_threshold, default_kappa, plan_multi,
                         plan_single, run_multi, run_single)
from .wavelets import DensityGrid, WaveletTable, make_table, reconstruct

ESTIMATORS = ("single", "multi", "central-linear", "central-thresh")


@dataclass
class ExperimentConfig:
    """Everything a sweep needs; JSON-serializable, CLI-overridable."""

    density: str = "tent_mix"
    wavelet: str = "db2"
    estimator: str = "single"
    n_values: tuple = (1024, 4096, 16384)
    b_values: tuple = (3,)
    r: float = 2.0
    trials: int = 32
    seed: int = 0
    grid_resolution: int = 14
    smoothness: float = 1.5
    regularity_bound: int = 3
    kappa: float | None = None
    c_base: float = 1.0
    c_top: float = 0.25
    sim_mode: str = "exact"
    level_override: int | None = None

    @staticmethod
    def from_json(text: str) -> "ExperimentConfig":
        raw = json.loads(text)
        cfg = ExperimentConfig()
        for key, value in raw.items():
            if not hasattr(cfg, key):
                raise ValueError(f"unknown config field {key!r}")
            if key in ("n_values", "b_values"):
                value = tuple(int(v) for v in value)
            setattr(cfg, key, value)
        return cfg

    def to_json(self) -> str:
        raw = asdict(self)
        raw["n_values"] = list(self.n_values)
        raw["b_values"] = list(self.b_values)
        return json.dumps(raw, indent=2)


@dataclass
class SweepPoint:
    """Risk summary at one (n, bits) cell."""

    n: int
    bits: int
    losses: list
    errors: list
    plan: dict
    yields: list

    @property
    def mean_risk(self) -> float:
        return float(np.mean(self.losses)) if self.losses else float("nan")

    @property
    def std_err(self) -> float:
        if len(self.losses) < 2:
            return float("nan")
        return float(np.std(self.losses, ddof=1) / math.sqrt(len(self.losses)))


@dataclass
class RiskReport:
    config: ExperimentConfig
    points: list

    def summary_rows(self) -> list:
        rows = []
        for pt in self.points:
            rows.append({
                "n": pt.n, "bits": pt.bits,
                "log2_n": math.log2(pt.n),
                "mean_risk": pt.mean_risk,
                "log2_risk": (math.log2(pt.mean_risk)
                              if pt.mean_risk > 0 else float("nan")),
                "se": pt.std_err,
                "trials_ok": len(pt.losses),
                "trials_failed": len(pt.errors),
                "mean_yield": (float(np.mean(pt.yields)) if pt.yields
                               else float("nan")),
            })
        return rows


def lr_loss(estimate: CoefficientTree, truth: DensityGrid, table: WaveletTable,
            r: float, grid_resolution: int) -> float:
    """Integral over [0, 1] of |reconstruction - truth|**r by trapezoid."""
    if r < 1:
        raise ValueError("loss exponent must be >= 1")
    est = reconstruct(estimate, table, grid_resolution)
    n = 1 << grid_resolution
    if truth.resolution == grid_resolution:
        tv = np.asarray(truth.values, dtype=float)
    else:
        xs = np.arange(n + 1) / n
        tv = np.interp(xs, truth.xs, truth.values)
    return float(np.trapezoid(np.abs(est.values - tv) ** r,
                              dx=2.0 ** (-grid_resolution)))


def trial_rng(seed: int, n: int, bits: int, trial: int) -> np.random.Generator:
    """Trial randomness keyed by content, not execution order."""
    return np.random.default_rng([seed, n, bits, trial])


def _plan_info(config: ExperimentConfig, n: int, bits: int,
               table: WaveletTable):
    if config.estimator in ("single", "central-linear"):
        level = (config.level_override if config.level_override is not None
                 else plan_single(n, bits, config.smoothness, table))
        return level, {"H": level}
    # the centralized baseline has no channel, so its level schedule is not
    # constrained by reconstitution yields
    mode = "ideal" if config.estimator == "central-thresh" else config.sim_mode
    plan = plan_multi(n, bits, config.regularity_bound, table,
                      c_base=config.c_base, c_top=config.c_top,
                      kappa=config.kappa, sim_mode=mode)
    return plan, {"L": plan.base_level, "H": plan.top_level,
                  "m": dict(plan.yields),
                  "t": {k: round(v, 6) for k, v in plan.thresholds.items()},
                  "kappa": plan.kappa}


def run_one_trial(config: ExperimentConfig, truth: DensityModel,
                  table: WaveletTable, plan, n: int, bits: int,
                  trial: int) -> tuple[float, int]:
    """One replication: sample, estimate, loss.  Returns (loss, yield)."""
    rng = trial_rng(config.seed, n, bits, trial)
    xs = sample(truth, n, rng)
    if config.estimator == "central-linear":
        tree = centralized_linear(xs, table, plan)
    elif config.estimator == "central-thresh":
        kappa = (config.kappa if config.kappa is not None
                 else default_kappa(table, config.r, config.regularity_bound))
        tree = centralized_threshold(xs, table, plan.base_level,
                                     plan.top_level, kappa)
    elif config.estimator == "single":
        tree = run_single(xs, bits, table, plan, rng,
                          sim_mode=config.sim_mode)
    elif config.estimator == "multi":
        tree = run_multi(xs, bits, table, plan, rng, sim_mode=config.sim_mode)
    else:
        raise ValueError(f"unknown estimator {config.estimator!r}")
    loss = lr_loss(tree, truth, table, config.r, config.grid_resolution)
    m = sum(tree.sample_counts.values()) if tree.sample_counts else n
    return loss, m


def run_trials(config: ExperimentConfig) -> RiskReport:
    """Full sweep over (n, bits); estimator failures are recorded per trial
    rather than aborting the sweep."""
    table = make_table(config.wavelet)
    truth = parse_density(config.density, table, config.grid_resolution)
    points = []
    for n in config.n_values:
        for bits in config.b_values:
            try:
                plan, info = _plan_info(config, n, bits, table)
            except BitwaveError as exc:
                points.append(SweepPoint(n=n, bits=bits, losses=[],
                                         errors=[f"planning: {exc}"],
                                         plan={}, yields=[]))
                continue
            losses, errors, yields = [], [], []
            for trial in range(config.trials):
                try:
                    loss, m = run_one_trial(config, truth, table, plan, n,
                                            bits, trial)
                    losses.append(loss)
                    yields.append(m)
                except BitwaveError as exc:
                    errors.append(f"trial {trial}: {exc}")
            points.append(SweepPoint(n=n, bits=bits, losses=losses,
                                     errors=errors, plan=info, yields=yields))
    return RiskReport(config=config, points=points)


def fit_rate(points) -> tuple[float, float, float]:
    """Least-squares fit of log2(risk) against log2(n).

    Needs at least 4 points spanning 3 octaves; returns
    (slope, intercept, rms residual).
    """
    pts = [(n, risk) for n, risk in points]
    if len(pts) < 4:
        raise ValueError("need at least 4 points to fit a rate")
    ns = np.array([p[0] for p in pts], dtype=float)
    risks = np.array([p[1] for p in pts], dtype=float)
    if np.any(risks <= 0):
        raise ValueError("rate fit needs positive risks")
    x = np.log2(ns)
    if x.max() - x.min() < 3.0:
        raise ValueError("rate fit needs at least 3 octaves of n")
    y = np.log2(risks)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(slope), float(intercept), resid
