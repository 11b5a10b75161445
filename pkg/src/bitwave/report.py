"""Report rendering: delimited outputs plus matplotlib figures.

Every CLI subcommand that produces tabular output also renders a figure
next to it (same stem, .png).  The library entry points below take data
already computed by the harness; nothing here feeds back into estimation.
"""

from __future__ import annotations

import csv
import json
import math
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _ensure_dir(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def write_trials_csv(report, path: str) -> None:
    """One row per (n, bits, trial)."""
    _ensure_dir(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "bits", "trial", "loss", "yield"])
        for pt in report.points:
            for i, loss in enumerate(pt.losses):
                y = pt.yields[i] if i < len(pt.yields) else ""
                w.writerow([pt.n, pt.bits, i, f"{loss:.10g}", y])


def write_summary_csv(report, path: str) -> None:
    """One row per (n, bits): log2 columns ready for rate plots."""
    _ensure_dir(path)
    rows = report.summary_rows()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "bits", "log2_n", "mean_risk", "log2_risk", "se",
                    "trials_ok", "trials_failed", "mean_yield"])
        for row in rows:
            w.writerow([row["n"], row["bits"], f"{row['log2_n']:.6g}",
                        f"{row['mean_risk']:.10g}", f"{row['log2_risk']:.6g}",
                        f"{row['se']:.6g}", row["trials_ok"],
                        row["trials_failed"], f"{row['mean_yield']:.6g}"])


def write_summary_json(report, path: str, fits: dict | None = None) -> None:
    _ensure_dir(path)
    payload = {
        "config": json.loads(report.config.to_json()),
        "points": [{
            "n": pt.n, "bits": pt.bits, "mean_risk": pt.mean_risk,
            "se": pt.std_err, "losses": pt.losses, "errors": pt.errors,
            "plan": pt.plan,
            "yields": pt.yields,
        } for pt in report.points],
    }
    if fits:
        payload["fits"] = fits
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)


def plot_rates(report, fits: dict, path: str) -> None:
    """log2(risk) against log2(n), one line per bit budget, with fits."""
    _ensure_dir(path)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    bits_values = sorted({pt.bits for pt in report.points})
    for bits in bits_values:
        pts = [pt for pt in report.points if pt.bits == bits and pt.losses]
        xs = np.array([math.log2(pt.n) for pt in pts])
        ys = np.array([pt.mean_risk for pt in pts])
        ses = np.array([pt.std_err for pt in pts])
        ok = ys > 0
        ax.errorbar(xs[ok], np.log2(ys[ok]),
                    yerr=(ses[ok] / (ys[ok] * math.log(2))),
                    marker="o", capsize=2, label=f"b={bits}")
        fit = fits.get(bits)
        if fit and "slope" in fit:
            slope, intercept = fit["slope"], fit["intercept"]
            ax.plot(xs, slope * xs + intercept, "--", alpha=0.6,
                    label=f"b={bits}: slope {slope:.2f}")
    ax.set_xlabel("log2 n")
    ax.set_ylabel(f"log2 L{report.config.r:g} risk")
    ax.set_title(f"{report.config.estimator} on {report.config.density} "
                 f"({report.config.wavelet})")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_density_fit(truth, estimate_grid, path: str, label: str = "") -> None:
    _ensure_dir(path)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(truth.xs, truth.values, label="truth", lw=1.2)
    ax.plot(estimate_grid.xs, estimate_grid.values, label="estimate",
            lw=1.0, alpha=0.85)
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    if label:
        ax.set_title(label)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_densities(models, path: str) -> None:
    _ensure_dir(path)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for model in models:
        ax.plot(model.xs, model.values, lw=1.0, label=model.label or None)
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    if any(m.label for m in models):
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_simcheck(probs, counts, path: str, title: str = "") -> None:
    """Empirical reconstituted frequencies against the true distribution."""
    _ensure_dir(path)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    symbols = np.arange(len(probs))
    total = counts.sum()
    ax.bar(symbols, counts / max(total, 1), width=0.9, alpha=0.6,
           label="reconstituted")
    ax.step(symbols, probs, where="mid", color="k", lw=1.2, label="target")
    ax.set_xlabel("symbol")
    ax.set_ylabel("probability")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
