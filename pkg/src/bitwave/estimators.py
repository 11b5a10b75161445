"""Density estimators: centralized baselines and the bit-constrained pair.

The bit-constrained estimators run the full player/referee pipeline: each
player reduces its sample to a finite-alphabet symbol (bin + unbiased vertex
code), the messaging layer reconstitutes a subset of i.i.d. symbols for the
referee, and the referee averages rescaled decoded vertices into wavelet
coefficient estimates.  The single-level estimator needs the smoothness to
pick its level; the multi-level estimator splits players across levels and
thresholds detail estimates, so it only needs a regularity cap.

Debug switches (`sim_mode="ideal"`, `quantizer=False`) bypass the channel
and the vertex code; with both bypassed the referee sees exactly the
per-sample wavelet values, which must reproduce the centralized estimator
bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, EstimationError, PlanningError
from .quantize import (alphabet_size, player_vectors, quantizer_bound,
                       slot_count, vertex_codes)
from .simulate import assign_parts, build_transcript, expected_yield, referee_simulate
from .wavelets import WaveletTable, translation_range


@dataclass
class CoefficientTree:
    """Estimated wavelet coefficients: alpha at the base level, beta above."""

    base_level: int
    alpha: dict
    beta: dict = field(default_factory=dict)
    thresholded: bool = False
    kappa: float | None = None
    top_level: int | None = None
    # realized reconstituted-sample count per level (pipeline estimators)
    sample_counts: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({
            "L": self.base_level,
            "H": self.top_level,
            "alpha": [[int(k), float(v)] for k, v in sorted(self.alpha.items())],
            "beta": [[int(j), int(k), float(v)]
                     for (j, k), v in sorted(self.beta.items())],
            "kappa": self.kappa,
        })

    @staticmethod
    def from_json(text: str) -> "CoefficientTree":
        raw = json.loads(text)
        return CoefficientTree(
            base_level=raw["L"],
            alpha={int(k): float(v) for k, v in raw["alpha"]},
            beta={(int(j), int(k)): float(v) for j, k, v in raw["beta"]},
            thresholded=bool(raw["beta"]),
            kappa=raw.get("kappa"),
            top_level=raw.get("H"),
        )


@dataclass(frozen=True)
class LevelPlan:
    """Level schedule for the multi-level estimator.

    ``yields`` maps level J to the planned number of reconstituted samples
    m_J; ``thresholds`` maps J to t_J = kappa * sqrt(J / m_J).
    """

    base_level: int
    top_level: int
    group_size: int
    yields: dict
    thresholds: dict
    kappa: float

    def __post_init__(self):
        if self.base_level > self.top_level:
            raise ValueError("base level above top level")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def default_kappa(table: WaveletTable, r: float = 2.0,
                  regularity_bound: int = 1, sup_density: float = 2.0) -> float:
    """Threshold multiplier: large enough for the detail concentration bound."""
    a = table.spec.support_radius
    return max(2 * r + 1, r * (regularity_bound + 1), 6 * a * sup_density)


def _alpha_window(table: WaveletTable, level: int) -> tuple[int, np.ndarray]:
    k_lo, k_hi = translation_range(table, level)
    return k_lo, np.zeros(k_hi - k_lo + 1)


def _accumulate(acc: np.ndarray, k_lo: int, ks: np.ndarray,
                vals: np.ndarray) -> None:
    np.add.at(acc, ks.ravel() - k_lo, vals.ravel())


def centralized_linear(samples: np.ndarray, table: WaveletTable,
                       level: int) -> CoefficientTree:
    """Sample average of the father values at one level (no messaging)."""
    xs = np.asarray(samples, dtype=float)
    if len(xs) == 0:
        raise EstimationError("no samples")
    bins, vecs = player_vectors(table, "single", level, xs)
    length = table.support_length
    scale = 2.0 ** (level / 2.0)
    ks = bins[:, None] - length + 1 + np.arange(length)[None, :]
    vals = scale * vecs[:, :length]
    k_lo, acc = _alpha_window(table, level)
    _accumulate(acc, k_lo, ks, vals)
    acc /= len(xs)
    return CoefficientTree(base_level=level,
                           alpha={k_lo + i: float(v) for i, v in enumerate(acc)},
                           top_level=level)


def centralized_threshold(samples: np.ndarray, table: WaveletTable,
                          base_level: int, top_level: int,
                          kappa: float) -> CoefficientTree:
    """Classical thresholded estimator: keep detail estimates above
    kappa * sqrt(j / n)."""
    if base_level > top_level:
        raise ValueError("base level above top level")
    xs = np.asarray(samples, dtype=float)
    n = len(xs)
    tree = centralized_linear(xs, table, base_level)
    beta = {}
    length = table.support_length
    for j in range(base_level, top_level + 1):
        bins, vecs = player_vectors(table, "detail", j, xs)
        ks = bins[:, None] - length + 1 + np.arange(length)[None, :]
        vals = (2.0 ** (j / 2.0)) * vecs[:, :length]
        k_lo, acc = _alpha_window(table, j)
        _accumulate(acc, k_lo, ks, vals)
        acc /= n
        t_j = kappa * math.sqrt(j / n)
        for i, v in enumerate(acc):
            if abs(v) >= t_j and v != 0.0:
                beta[(j, k_lo + i)] = float(v)
    tree.beta = beta
    tree.thresholded = True
    tree.kappa = kappa
    tree.top_level = top_level
    return tree


def plan_single(n: int, bits: int, smoothness: float,
                table: WaveletTable) -> int:
    """Level for the single-level estimator.

    2**H tracks min((n 2**b)**(1/(2s+2)), n**(1/(2s+1))), rounded to the
    nearest integer exponent and clamped to [0, log2 n].
    """
    if n < 2 or bits < 1 or smoothness <= 0:
        raise PlanningError("need n >= 2, bits >= 1, smoothness > 0")
    if smoothness > table.spec.regularity + 1:
        raise PlanningError(
            f"wavelet regularity {table.spec.regularity} too low for "
            f"smoothness {smoothness}")
    log_n = math.log2(n)
    target = min((log_n + bits) / (2 * smoothness + 2),
                 log_n / (2 * smoothness + 1))
    return max(0, min(_round_half_up(target), int(log_n)))


def _decode_accumulate(symbols: np.ndarray, table: WaveletTable, kind: str,
                       level: int, accs: dict) -> None:
    """Referee side: rescale decoded vertices into coefficient sums.

    ``accs`` maps 'father'/'mother' to (k_lo, array); padding slots are
    dropped.  The decoded entry has magnitude bound*d at one slot; the
    2**(J/2) rescale undoes the native-scale normalization the players
    applied.
    """
    d = slot_count(table, kind)
    length = table.support_length
    width = 2 * d
    bins = symbols // width
    codes = symbols % width
    slots = codes // 2
    signs = np.where(codes % 2 == 0, 1.0, -1.0)
    magnitude = quantizer_bound(table) * d * 2.0 ** (level / 2.0)
    vals = signs * magnitude

    if kind == "detail":
        segments = [("mother", slots)]
    elif kind == "single":
        segments = [("father", slots)]
    else:
        segments = [("father", slots), ("mother", slots - d // 2)]
    for name, local in segments:
        keep = (local >= 0) & (local < length)
        if not np.any(keep):
            continue
        k_lo, acc = accs[name]
        ks = bins[keep] - length + 1 + local[keep]
        _accumulate(acc, k_lo, ks, vals[keep])


def _bypass_accumulate(bins: np.ndarray, vecs: np.ndarray, table: WaveletTable,
                       kind: str, level: int, accs: dict) -> None:
    """Referee side with the vertex code bypassed: exact player values."""
    length = table.support_length
    scale = 2.0 ** (level / 2.0)
    ks = bins[:, None] - length + 1 + np.arange(length)[None, :]
    if kind in ("single", "base"):
        k_lo, acc = accs["father"]
        _accumulate(acc, k_lo, ks, scale * vecs[:, :length])
    if kind == "detail":
        k_lo, acc = accs["mother"]
        _accumulate(acc, k_lo, ks, scale * vecs[:, :length])
    if kind == "base":
        d = vecs.shape[1]
        k_lo, acc = accs["mother"]
        _accumulate(acc, k_lo, ks, scale * vecs[:, d // 2: d // 2 + length])


def _run_group(xs: np.ndarray, kind: str, level: int, bits: int,
               table: WaveletTable, rng: np.random.Generator, sim_mode: str,
               quantizer: bool) -> tuple[dict, int]:
    """One player group end to end; returns per-kind coefficient sums and
    the realized number of reconstituted samples."""
    if sim_mode not in ("exact", "ideal"):
        raise ConfigurationError(f"unknown sim mode {sim_mode!r}")
    accs = {
        "father": _alpha_window(table, level),
        "mother": _alpha_window(table, level),
    }
    if len(xs) == 0:
        raise EstimationError("no samples in group")
    if not quantizer:
        if sim_mode != "ideal":
            raise ConfigurationError(
                "bypassing the quantizer requires the ideal channel")
        bins, vecs = player_vectors(table, kind, level, xs)
        _bypass_accumulate(bins, vecs, table, kind, level, accs)
        return accs, len(xs)

    bins, vecs = player_vectors(table, kind, level, xs)
    codes = vertex_codes(vecs, quantizer_bound(table), rng)
    symbols = bins * (2 * vecs.shape[1]) + codes
    if sim_mode == "ideal":
        sim_symbols = symbols
    else:
        assignment = assign_parts(alphabet_size(table, level, kind), bits)
        transcript = build_transcript(symbols, assignment)
        report = referee_simulate(transcript, assignment, rng)
        sim_symbols = report.symbols
    if len(sim_symbols) == 0:
        raise EstimationError(
            f"no reconstituted samples for level {level} ({kind}); "
            "increase players or bits")
    _decode_accumulate(sim_symbols, table, kind, level, accs)
    return accs, len(sim_symbols)


def run_single(samples: np.ndarray, bits: int, table: WaveletTable, level: int,
               rng: np.random.Generator, sim_mode: str = "exact",
               quantizer: bool = True) -> CoefficientTree:
    """Single-level pipeline: every player encodes the father window at one
    level; the referee averages rescaled decoded values."""
    xs = np.asarray(samples, dtype=float)
    accs, m = _run_group(xs, "single", level, bits, table, rng, sim_mode,
                         quantizer)
    k_lo, acc = accs["father"]
    acc = acc / m
    return CoefficientTree(base_level=level,
                           alpha={k_lo + i: float(v) for i, v in enumerate(acc)},
                           top_level=level, sample_counts={level: m})


def plan_multi(n: int, bits: int, regularity_bound: int, table: WaveletTable,
               c_base: float = 1.0, c_top: float = 0.25,
               kappa: float | None = None,
               sim_mode: str = "exact") -> LevelPlan:
    """Level schedule from (n, bits, regularity bound) alone.

    The base level tracks min((n 2**b)**(1/(2(N+1)+2)), n**(1/(2(N+1)+1)));
    the top level tracks min(sqrt(n 2**b)/log(n 2**b), n/log(n)**2), all
    logs base 2.  Planned yields come from the messaging layer's formula;
    the top level is lowered until every level satisfies m_J >= J 2**J.
    """
    if n < 2 or bits < 1 or regularity_bound < 1:
        raise PlanningError("need n >= 2, bits >= 1, regularity bound >= 1")
    if kappa is None:
        kappa = default_kappa(table, 2.0, regularity_bound)
    log_n = math.log2(n)
    nn = regularity_bound + 1
    base_target = math.log2(c_base) + min((log_n + bits) / (2 * nn + 2),
                                          log_n / (2 * nn + 1))
    base = max(0, _round_half_up(base_target))
    log_nb = log_n + bits
    top_target = math.log2(c_top) + min(
        0.5 * log_nb - math.log2(log_nb),
        log_n - 2.0 * math.log2(max(log_n, 2.0)),
    )
    top = _round_half_up(top_target)
    if top < base:
        base = max(0, top)
        top = max(0, top)

    while True:
        groups = top - base + 1
        group_size = n // groups
        if group_size < 1:
            raise PlanningError(f"{n} players cannot fill {groups} groups")
        yields = {}
        ok = True
        for level in range(base, top + 1):
            kind = "base" if level == base else "detail"
            m = expected_yield(group_size, alphabet_size(table, level, kind),
                               bits, sim_mode)
            yields[level] = m
            if m < level * (1 << level) or m < 1:
                ok = False
        if ok:
            break
        if top == base:
            raise PlanningError(
                f"no feasible plan for n={n}, bits={bits}: yield too small "
                f"even at level {base}")
        top -= 1
        base = min(base, top)
    thresholds = {level: (kappa * math.sqrt(level / yields[level])
                          if level > 0 else 0.0)
                  for level in range(base, top + 1)}
    return LevelPlan(base_level=base, top_level=top, group_size=group_size,
                     yields=yields, thresholds=thresholds, kappa=kappa)


def run_multi(samples: np.ndarray, bits: int, table: WaveletTable,
              plan: LevelPlan, rng: np.random.Generator,
              sim_mode: str = "exact",
              quantizer: bool = True) -> CoefficientTree:
    """Multi-level pipeline: groups of players cover the levels; detail
    estimates below their threshold are zeroed.

    Remainder players (n modulo the group count) join the base-level group,
    which benefits most from extra samples.
    """
    xs = np.asarray(samples, dtype=float)
    groups = plan.top_level - plan.base_level + 1
    if len(xs) < groups:
        raise EstimationError(f"need at least {groups} samples, got {len(xs)}")
    per = len(xs) // groups
    extra = len(xs) - per * groups

    alpha = {}
    beta = {}
    counts = {}
    start = 0
    for level in range(plan.base_level, plan.top_level + 1):
        take = per + (extra if level == plan.base_level else 0)
        group_xs = xs[start:start + take]
        start += take
        kind = "base" if level == plan.base_level else "detail"
        try:
            accs, m = _run_group(group_xs, kind, level, bits, table, rng,
                                 sim_mode, quantizer)
        except EstimationError as exc:
            raise EstimationError(f"group at level {level}: {exc}") from None
        counts[level] = m
        t_level = plan.thresholds.get(level, 0.0)
        if kind == "base":
            k_lo, acc = accs["father"]
            alpha = {k_lo + i: float(v / m) for i, v in enumerate(acc)}
        k_lo, acc = accs["mother"]
        for i, v in enumerate(acc):
            est = v / m
            if abs(est) >= t_level and est != 0.0:
                beta[(level, k_lo + i)] = float(est)
    return CoefficientTree(base_level=plan.base_level, alpha=alpha, beta=beta,
                           thresholded=True, kappa=plan.kappa,
                           top_level=plan.top_level, sample_counts=counts)
