"""Per-player reduction of a sample to a finite-alphabet symbol.

A player holding x in [0, 1] produces (bin, vertex code): the dyadic bin at
the working level, plus an unbiased random vertex of the scaled l1 ball that
encodes the vector of wavelet values which can be nonzero at x.  Because each
bin meets the support of only a bounded number of translates, that vector has
fixed small dimension and the whole symbol alphabet has size O(2**level).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .wavelets import WaveletTable

GROUP_KINDS = ("single", "detail", "base")


def bin_of(x: float, level: int) -> int:
    """Index t of the dyadic bin [t 2**-J, (t+1) 2**-J) containing x.

    The last bin is closed, so x = 1 maps to 2**J - 1.
    """
    if x < 0.0 or x > 1.0:
        raise ValueError(f"sample {x} outside [0, 1]")
    t = int(x * (1 << level))
    return min(t, (1 << level) - 1)


def bins_of(xs: np.ndarray, level: int) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    if np.any(xs < 0.0) or np.any(xs > 1.0):
        raise ValueError("samples outside [0, 1]")
    return np.minimum((xs * (1 << level)).astype(np.int64), (1 << level) - 1)


@dataclass(frozen=True)
class IndexSets:
    """Translations whose father/mother support meets one dyadic bin."""

    level: int
    bin: int
    father_indices: tuple
    mother_indices: tuple


def index_sets(table: WaveletTable, level: int, t: int) -> IndexSets:
    """Exactly the k (ascending) with support overlapping bin t at this level.

    Both phi and psi live on [0, L] natively, so the window is
    [t - L + 1, t]; its size L never exceeds the 2 (A + 2) sparsity bound.
    """
    if not (0 <= t < (1 << level)):
        raise ValueError(f"bin {t} out of range at level {level}")
    length = table.support_length
    ks = tuple(range(t - length + 1, t + 1))
    return IndexSets(level=level, bin=t, father_indices=ks, mother_indices=ks)


def slot_count(table: WaveletTable, kind: str) -> int:
    """Fixed quantizer dimension d for a group kind (zero-padded)."""
    a = table.spec.support_radius
    if kind in ("single", "detail"):
        return 2 * (a + 2)
    if kind == "base":
        return 4 * (a + 2)
    raise ConfigurationError(f"unknown group kind {kind!r}")


def alphabet_size(table: WaveletTable, level: int, kind: str) -> int:
    """Symbol alphabet size 2**J * 2d, enumerated bin-major, vertex-minor."""
    return (1 << level) * 2 * slot_count(table, kind)


@dataclass(frozen=True)
class VertexCode:
    """Index of a vertex +-(B d) e_i of the l1 ball of radius B d.

    Labeling: code 2i is +Bd e_(i+1), code 2i+1 is -Bd e_(i+1).
    """

    index: int
    dimension: int

    def __post_init__(self):
        if not (0 <= self.index < 2 * self.dimension):
            raise ValueError(
                f"vertex code {self.index} out of range for dimension {self.dimension}"
            )


def decode(code: VertexCode, bound: float, dimension: int) -> np.ndarray:
    """Vertex vector for a code: one entry of magnitude bound * dimension."""
    if code.index >= 2 * dimension:
        raise ValueError("code index out of range")
    out = np.zeros(dimension)
    out[code.index // 2] = (bound * dimension) * (1 if code.index % 2 == 0 else -1)
    return out


def _vertex_probabilities(vectors: np.ndarray, bound: float) -> np.ndarray:
    """Row-wise convex weights over the 2d vertices for each input vector.

    Coordinate mass |x_i| / (Bd) goes to sign(x_i) Bd e_i; the remaining
    mass 1 - |x|_1 / (Bd) is split equally between +Bd e_1 and -Bd e_1,
    a canceling pair, so the mean is exactly x.
    """
    n, d = vectors.shape
    scale = bound * d
    if np.any(np.abs(vectors) > bound * (1 + 1e-12)):
        raise ValueError("quantizer contract violated: |x|_inf exceeds the bound")
    probs = np.zeros((n, 2 * d))
    probs[:, 0::2] = np.maximum(vectors, 0.0) / scale
    probs[:, 1::2] = np.maximum(-vectors, 0.0) / scale
    remainder = 1.0 - np.abs(vectors).sum(axis=1) / scale
    probs[:, 0] += remainder / 2.0
    probs[:, 1] += remainder / 2.0
    return probs


def vertex_codes(vectors: np.ndarray, bound: float,
                 rng: np.random.Generator) -> np.ndarray:
    """Unbiased vertex quantization of each row; returns integer codes."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    probs = _vertex_probabilities(vectors, bound)
    cum = np.cumsum(probs, axis=1)
    u = rng.random(len(vectors))
    codes = (u[:, None] < cum).argmax(axis=1)
    # guard against cum[-1] being a hair below 1
    codes = np.where(u >= cum[:, -1], probs.shape[1] - 1, codes)
    return codes.astype(np.int64)


def vertex_quantize(x, bound: float, rng: np.random.Generator) -> VertexCode:
    """Quantize one vector with |x|_inf <= bound to a random vertex.

    The decoded vertex is an unbiased estimate of x.
    """
    x = np.asarray(x, dtype=float)
    code = int(vertex_codes(x[None, :], bound, rng)[0])
    return VertexCode(index=code, dimension=len(x))


@dataclass(frozen=True)
class QuantizedSample:
    """The pair (bin, vertex code) a player emits, at a fixed group kind."""

    level: int
    bin: int
    vertex: VertexCode
    kind: str

    @property
    def symbol(self) -> int:
        """Alphabet index, bin-major then vertex-minor."""
        return self.bin * 2 * self.vertex.dimension + self.vertex.index


def split_symbol(symbol: int, table: WaveletTable, kind: str) -> tuple[int, int]:
    """Invert the bin-major, vertex-minor enumeration."""
    width = 2 * slot_count(table, kind)
    return int(symbol) // width, int(symbol) % width


def quantizer_bound(table: WaveletTable) -> float:
    """Uniform bound on the entries of every player vector.

    Scaling wavelet values back to native scale keeps them within the
    table sup-norms, so this bound makes the quantizer contract automatic.
    """
    return max(table.sup_phi, table.sup_psi)


def player_vectors(table: WaveletTable, kind: str, level: int,
                   xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Bins and zero-padded value vectors for a batch of samples.

    Vector layout per sample: entries s = 0 .. L-1 hold the native-scale
    father (kinds 'single'/'base') or mother (kind 'detail') value for
    translation k = bin - L + 1 + s.  For kind 'base' the mother values
    follow at offset d/2 with the same translation layout.  Remaining
    entries are zero padding and are discarded on decode.
    """
    xs = np.asarray(xs, dtype=float)
    bins = bins_of(xs, level)
    length = table.support_length
    d = slot_count(table, kind)
    u = xs * (1 << level)
    vectors = np.zeros((len(xs), d))
    for s in range(length):
        k = bins - length + 1 + s
        if kind == "detail":
            vectors[:, s] = table.eval_base("mother", u - k)
        else:
            vectors[:, s] = table.eval_base("father", u - k)
            if kind == "base":
                vectors[:, d // 2 + s] = table.eval_base("mother", u - k)
    return bins, vectors


def slot_translation(table: WaveletTable, kind: str, bin: int,
                     slot: int) -> tuple[str, int] | None:
    """Map a vector slot back to ('father'|'mother', k), or None for padding."""
    length = table.support_length
    d = slot_count(table, kind)
    if kind in ("single", "base") and slot < length:
        return "father", bin - length + 1 + slot
    if kind == "detail" and slot < length:
        return "mother", bin - length + 1 + slot
    if kind == "base" and d // 2 <= slot < d // 2 + length:
        return "mother", bin - length + 1 + (slot - d // 2)
    return None


def encode_sample(x: float, kind: str, level: int, table: WaveletTable,
                  rng: np.random.Generator) -> QuantizedSample:
    """Quantize one sample into its finite-alphabet symbol."""
    bins, vectors = player_vectors(table, kind, level, np.array([x]))
    code = int(vertex_codes(vectors, quantizer_bound(table), rng)[0])
    return QuantizedSample(
        level=level,
        bin=int(bins[0]),
        vertex=VertexCode(index=code, dimension=vectors.shape[1]),
        kind=kind,
    )


def encode_batch(xs: np.ndarray, kind: str, level: int, table: WaveletTable,
                 rng: np.random.Generator) -> np.ndarray:
    """Vectorized encoding; returns one alphabet symbol per sample."""
    bins, vectors = player_vectors(table, kind, level, xs)
    codes = vertex_codes(vectors, quantizer_bound(table), rng)
    return bins * (2 * vectors.shape[1]) + codes
