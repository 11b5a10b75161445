"""Density estimation on [0, 1] when each observation is reduced to a few bits.

The pipeline: compactly supported wavelets (``wavelets``), test densities and
smoothness-ball fixtures (``densities``), per-player quantization to a finite
alphabet (``quantize``), the bit-limited messaging and sample-reconstitution
layer (``simulate``), the estimators themselves (``estimators``), and a risk
measurement harness with a CLI (``harness``, ``cli``).
"""

__version__ = "0.1.0"

from . import densities, estimators, harness, quantize, simulate, wavelets  # noqa: F401
from .densities import (BesovParams, BumpFamily, DensityModel, besov_norm,
                        make_bump_family, make_test_density, sample)
from .estimators import (CoefficientTree, LevelPlan, centralized_linear,
                         centralized_threshold, plan_multi, plan_single,
                         run_multi, run_single)
from .harness import ExperimentConfig, RiskReport, fit_rate, lr_loss, run_trials
from .quantize import (alphabet_size, bin_of, decode, encode_sample,
                       index_sets, vertex_quantize)
from .simulate import (assign_parts, expected_yield, player_message,
                       referee_simulate)
from .wavelets import DensityGrid, WaveletSpec, WaveletTable, analyze, \
    build_table, make_table, reconstruct
