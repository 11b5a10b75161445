"""Compactly supported wavelet bases on a dyadic grid.

Builds evaluable father/mother wavelet tables for the Haar and Daubechies
families, and provides coefficient analysis (quadrature against a gridded
density) and synthesis (reconstruction of a coefficient tree) on [0, 1].

Daubechies scaling functions have no closed form; tables are produced by the
standard cascade construction: solve the refinement equation at integer
abscissas via the eigenvector of the refinement matrix (normalized to sum 1),
then refine dyadically down to step ``2**-resolution``.  Point evaluation
interpolates linearly between grid values, so the "wavelet" this module
computes with is, everywhere, the piecewise-linear interpolant of the table.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NumericError, ResolutionError

SUPPORTED_DB_ORDERS = range(2, 11)


def daubechies_filter(order: int) -> np.ndarray:
    """Lowpass refinement filter for the Daubechies family, sum sqrt(2).

    ``order`` is the number of vanishing moments; the filter has
    ``2 * order`` taps.  ``order=1`` gives the Haar filter.  Computed by
    spectral factorization of the binomial half-band polynomial, keeping
    the roots inside the unit circle (minimum-phase choice).
    """
    if order < 1:
        raise ConfigurationError("filter order must be >= 1")
    if order == 1:
        c = 1.0 / np.sqrt(2.0)
        return np.array([c, c])
    from scipy.special import comb

    poly = [comb(order - 1 + k, k, exact=True) for k in range(order)][::-1]
    roots_y = np.roots(poly)
    part = np.poly1d([1, 1]) ** order
    q = np.poly1d([1.0])
    for y in roots_y:
        w = 2.0 * np.sqrt(y * (y - 1.0))
        z = 1.0 - 2.0 * y
        z1 = z + w
        if abs(z1) < 1.0:
            z1 = z - w
        q = q * np.poly1d([1.0, -z1])
    h = (part * np.real(q)).c
    h = h / np.sum(h) * np.sqrt(2.0)
    return h[::-1]


@dataclass(frozen=True)
class WaveletSpec:
    """Family identity plus the regularity/support metadata used downstream.

    ``support_radius`` is an integer A with supp(phi), supp(psi) contained in
    [-A, A]; tables store the natural support [0, 2k-1] for Daubechies-k
    (and [0, 1] for Haar), which sits inside [-A, A] with A = 2k-1 (A = 1
    for Haar).
    """

    family: str
    regularity: int
    support_radius: int

    @staticmethod
    def parse(name: str) -> "WaveletSpec":
        name = name.strip().lower()
        if name == "haar" or name == "db1":
            return WaveletSpec(family="haar", regularity=0, support_radius=1)
        if name.startswith("db"):
            try:
                k = int(name[2:])
            except ValueError:
                raise ConfigurationError(f"cannot parse wavelet name {name!r}")
            if k not in SUPPORTED_DB_ORDERS:
                raise ConfigurationError(
                    f"unsupported Daubechies order {k}; supported: 2..10"
                )
            return WaveletSpec(family=name, regularity=k - 1, support_radius=2 * k - 1)
        raise ConfigurationError(f"unsupported wavelet family {name!r}")

    @property
    def order(self) -> int:
        return 1 if self.family == "haar" else int(self.family[2:])

    @property
    def support_length(self) -> int:
        """Length of the natural support [0, L] of both phi and psi."""
        return 2 * self.order - 1


@dataclass(frozen=True)
class DensityGrid:
    """A function on [0, 1] sampled at x = i * 2**-resolution.

    ``values`` has 2**resolution + 1 entries; between grid points the
    function is the linear interpolant.
    """

    values: np.ndarray
    resolution: int

    def __post_init__(self):
        expected = (1 << self.resolution) + 1
        if len(self.values) != expected:
            raise ValueError(
                f"grid with resolution {self.resolution} needs {expected} values, "
                f"got {len(self.values)}"
            )

    @property
    def step(self) -> float:
        return 2.0 ** (-self.resolution)

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, (1 << self.resolution) + 1)

    def integral(self) -> float:
        return float(np.trapezoid(self.values, dx=self.step))


@dataclass(frozen=True)
class WaveletTable:
    """Father/mother wavelet values on the dyadic grid over [0, L].

    phi_values and psi_values hold L * 2**resolution + 1 samples each.
    All evaluation goes through linear interpolation of these tables;
    outside [0, L] both functions are exactly zero.
    """

    spec: WaveletSpec
    resolution: int
    phi_values: np.ndarray
    psi_values: np.ndarray
    sup_phi: float
    sup_psi: float
    integral_phi: float

    @property
    def support_length(self) -> int:
        return self.spec.support_length

    @property
    def grid_step(self) -> float:
        return 2.0 ** (-self.resolution)

    def _values(self, kind: str) -> np.ndarray:
        if kind == "father":
            return self.phi_values
        if kind == "mother":
            return self.psi_values
        raise ValueError(f"kind must be 'father' or 'mother', got {kind!r}")

    def eval_base(self, kind: str, u) -> np.ndarray:
        """Evaluate phi or psi at native scale, zero outside [0, L]."""
        vals = self._values(kind)
        u = np.asarray(u, dtype=float)
        out = np.interp(u * (1 << self.resolution), np.arange(len(vals)), vals,
                        left=0.0, right=0.0)
        return out

    def eval(self, kind: str, j: int, k: int, x):
        """Evaluate 2**(j/2) * g(2**j x - k), g = phi or psi.

        Total function: returns exactly 0 wherever the argument falls
        outside the support.
        """
        u = np.asarray(x, dtype=float) * (1 << j) - k
        out = (2.0 ** (j / 2.0)) * self.eval_base(kind, u)
        if out.ndim == 0:
            return float(out)
        return out


def _haar_table(resolution: int) -> WaveletTable:
    # Jump nodes store the midpoint value: adjacent translates then sum to
    # exactly one at shared grid nodes (so synthesis never double-counts)
    # and the interpolated psi integrates to exactly zero.
    n = 1 << resolution
    phi = np.ones(n + 1)
    phi[0] = phi[-1] = 0.5
    psi = np.concatenate([np.ones(n // 2), [0.0], -np.ones(n // 2)])
    psi[0], psi[-1] = 0.5, -0.5
    spec = WaveletSpec(family="haar", regularity=0, support_radius=1)
    step = 2.0 ** (-resolution)
    return WaveletTable(
        spec=spec,
        resolution=resolution,
        phi_values=phi,
        psi_values=psi,
        sup_phi=1.0,
        sup_psi=1.0,
        integral_phi=float(np.trapezoid(phi, dx=step)),
    )


def _integer_point_values(h: np.ndarray) -> np.ndarray:
    """Solve phi at integer abscissas 1..L-1 from the refinement matrix."""
    length = len(h) - 1
    m = np.zeros((length - 1, length - 1))
    for i in range(1, length):
        for j in range(1, length):
            tap = 2 * i - j
            if 0 <= tap <= length:
                m[i - 1, j - 1] = np.sqrt(2.0) * h[tap]
    lam, vecs = np.linalg.eig(m)
    which = int(np.argmin(np.abs(lam - 1.0)))
    if abs(lam[which] - 1.0) > 1e-8:
        raise NumericError(
            f"refinement matrix has no eigenvalue 1 (closest: {lam[which]:.6g})"
        )
    v = np.real(vecs[:, which])
    total = v.sum()
    if abs(total) < 1e-12:
        raise NumericError("degenerate refinement eigenvector (zero sum)")
    return v / total


def build_table(spec: WaveletSpec, resolution: int) -> WaveletTable:
    """Construct the wavelet table by cascade refinement.

    Integer-point values of phi solve the refinement eigen-system; dyadic
    subdivision is then applied down to step 2**-resolution, and psi is
    synthesized from phi through the highpass (QMF) filter.
    """
    if not (6 <= resolution <= 20):
        raise ConfigurationError(f"resolution must be in [6, 20], got {resolution}")
    if spec.family == "haar":
        return _haar_table(resolution)
    if spec.family not in {f"db{k}" for k in SUPPORTED_DB_ORDERS}:
        raise ConfigurationError(f"unsupported family {spec.family!r}")

    h = daubechies_filter(spec.order)
    length = len(h) - 1  # support [0, L]
    vals = np.zeros(length + 1)
    vals[1:length] = _integer_point_values(h)

    # phi(x) = sqrt(2) * sum_k h[k] phi(2x - k); new points at each level
    # are odd multiples of the new step, their doubled argument lies on
    # the previous level's grid.
    for level in range(1, resolution + 1):
        n_prev = length * (1 << (level - 1))
        new = np.zeros(2 * n_prev + 1)
        new[::2] = vals
        odd = np.arange(1, 2 * n_prev + 1, 2)
        acc = np.zeros(len(odd))
        for k_tap, hk in enumerate(h):
            src = odd - k_tap * (1 << (level - 1))
            ok = (src >= 0) & (src <= n_prev)
            acc[ok] += np.sqrt(2.0) * hk * vals[src[ok]]
        new[1::2] = acc
        vals = new

    phi = vals
    # psi(x) = sqrt(2) * sum_k g[k] phi(2x - k), g the QMF highpass.
    g = h[::-1] * np.array([1 if i % 2 == 0 else -1 for i in range(len(h))])
    n = length * (1 << resolution)
    psi = np.zeros(n + 1)
    idx = np.arange(n + 1)
    for k_tap, gk in enumerate(g):
        src = 2 * idx - k_tap * (1 << resolution)
        ok = (src >= 0) & (src <= n)
        psi[ok] += np.sqrt(2.0) * gk * phi[src[ok]]

    step = 2.0 ** (-resolution)
    return WaveletTable(
        spec=spec,
        resolution=resolution,
        phi_values=phi,
        psi_values=psi,
        sup_phi=float(np.max(np.abs(phi))),
        sup_psi=float(np.max(np.abs(psi))),
        integral_phi=float(np.trapezoid(phi, dx=step)),
    )


def make_table(name: str, resolution: int = 12) -> WaveletTable:
    """Convenience constructor from a family name like 'haar' or 'db4'."""
    return build_table(WaveletSpec.parse(name), resolution)


def translation_range(table: WaveletTable, j: int) -> tuple[int, int]:
    """Inclusive k-range at level j whose support meets (0, 1).

    Any superset (such as [-A, 2**j + A]) is equally legal; coefficients
    outside the returned window are identically zero for functions
    supported on [0, 1].
    """
    length = table.support_length
    return (-length + 1, (1 << j) - 1)


def _hat_kernel(g: np.ndarray, fine_exp: int, coarse_exp: int) -> np.ndarray:
    """Integrals of a piecewise-linear g (step 2**-fine_exp) against the hat
    basis at step 2**-coarse_exp.

    The product of two piecewise-linear functions is integrated exactly per
    fine cell, so pairing the result with samples of a function that is
    linear between the coarse nodes reproduces the true integral of the two
    interpolants, with no quadrature error.
    """
    s = 1 << (fine_exp - coarse_exp)
    h = 2.0 ** (-fine_exp)
    p0, p1 = g[:-1], g[1:]
    n_cells = len(g) - 1
    lam0 = (np.arange(n_cells) % s) / s
    lam1 = lam0 + 1.0 / s
    mu0, mu1 = 1.0 - lam0, 1.0 - lam1
    rise = h * (2 * lam0 * p0 + lam0 * p1 + lam1 * p0 + 2 * lam1 * p1) / 6.0
    fall = h * (2 * mu0 * p0 + mu0 * p1 + mu1 * p0 + 2 * mu1 * p1) / 6.0
    n_coarse = n_cells // s
    w = np.zeros(n_coarse + 1)
    w[:-1] += fall.reshape(n_coarse, s).sum(axis=1)
    w[1:] += rise.reshape(n_coarse, s).sum(axis=1)
    return w


def _level_kernel(table: WaveletTable, kind: str, coarse_exp: int) -> np.ndarray:
    g = table._values(kind)
    if coarse_exp <= table.resolution:
        return _hat_kernel(g, table.resolution, coarse_exp)
    n = table.support_length << coarse_exp
    u = np.arange(n + 1) / (1 << coarse_exp)
    return _hat_kernel(table.eval_base(kind, u), coarse_exp, coarse_exp)


def _resampled(f: DensityGrid, step_exp: int) -> np.ndarray:
    if step_exp == f.resolution:
        return np.asarray(f.values, dtype=float)
    n_fine = 1 << step_exp
    xs = np.arange(n_fine + 1) / n_fine
    return np.interp(xs, f.xs, f.values)


def analyze(table: WaveletTable, f: DensityGrid, j: int, k: int,
            kind: str = "father") -> float:
    """Coefficient integral of f against g_{j,k} on the union grid.

    The density grid and the wavelet table are both piecewise linear; the
    integral of their product over the support is computed exactly, so the
    only discrepancy from the ideal coefficient is the interpolation error
    of the two grids themselves.  Requires the density grid to resolve
    level j (resolution >= j + 2).
    """
    if f.resolution < j + 2:
        raise ResolutionError(
            f"density grid at resolution {f.resolution} cannot resolve level {j}"
        )
    if np.any(np.asarray(f.values) < -1e-12):
        raise ValueError("density values must be nonnegative")
    k_lo, coeffs = analyze_level(table, f, j, kind)
    k_hi = k_lo + len(coeffs) - 1
    if k < k_lo or k > k_hi:
        return 0.0
    return float(coeffs[k - k_lo])


def analyze_level(table: WaveletTable, f: DensityGrid, j: int,
                  kind: str = "father") -> tuple[int, np.ndarray]:
    """All level-j coefficients at once.

    Returns ``(k_lo, coeffs)`` where ``coeffs[i]`` is the coefficient for
    translation ``k_lo + i``, over the full window whose support meets
    (0, 1).  The density is sampled at the union of its own grid and a
    floor of 16 nodes per unit of the native argument; the wavelet side is
    folded into an exact hat-basis kernel, so the pairing integrates the
    two interpolants without quadrature error.
    """
    if f.resolution < j + 2:
        raise ResolutionError(
            f"density grid at resolution {f.resolution} cannot resolve level {j}"
        )
    length = table.support_length
    k_lo, k_hi = translation_range(table, j)
    n_k = k_hi - k_lo + 1

    m = max(f.resolution - j, 4)
    fx = _resampled(f, j + m)
    # pad so every window k*2**m + [0, L*2**m] indexes into the array
    pad_lo = -k_lo << m
    pad_hi = ((k_hi + length) << m) - (len(fx) - 1)
    fpad = np.concatenate([np.zeros(pad_lo), fx, np.zeros(max(pad_hi, 0))])

    kernel = _level_kernel(table, kind, m)
    windows = np.lib.stride_tricks.sliding_window_view(fpad, len(kernel))
    coeffs = windows[:: 1 << m][:n_k] @ kernel
    return k_lo, (2.0 ** (-j / 2.0)) * coeffs


def reconstruct(tree, table: WaveletTable, grid_resolution: int) -> DensityGrid:
    """Pointwise synthesis of a finite coefficient expansion on [0, 1].

    ``tree`` is any object with ``base_level``, ``alpha`` (map k -> value)
    and ``beta`` (map (j, k) -> value) attributes; see
    :class:`bitwave.estimators.CoefficientTree`.
    """
    n = 1 << grid_resolution
    out = np.zeros(n + 1)
    terms = [("father", tree.base_level, k, v) for k, v in tree.alpha.items()]
    terms += [("mother", j, k, v) for (j, k), v in tree.beta.items()]
    for kind, j, k, v in terms:
        if v == 0.0:
            continue
        length = table.support_length
        lo = max(0, int(np.ceil((k / (1 << j)) * n)))
        hi = min(n, int(np.floor(((k + length) / (1 << j)) * n)))
        if lo > hi:
            continue
        x = np.arange(lo, hi + 1) / n
        out[lo:hi + 1] += v * table.eval(kind, j, k, x)
    return DensityGrid(values=out, resolution=grid_resolution)


def save_table(table: WaveletTable, path) -> None:
    """Export the table as a JSON record for reproducibility."""
    record = {
        "family": table.spec.family,
        "regularity": table.spec.regularity,
        "support_radius": table.spec.support_radius,
        "resolution": table.resolution,
        "phi_values": table.phi_values.tolist(),
        "psi_values": table.psi_values.tolist(),
        "sup_phi": table.sup_phi,
        "sup_psi": table.sup_psi,
        "integral_phi": table.integral_phi,
    }
    with open(path, "w") as fh:
        json.dump(record, fh)


def load_table(path) -> WaveletTable:
    with open(path) as fh:
        record = json.load(fh)
    spec = WaveletSpec(
        family=record["family"],
        regularity=record["regularity"],
        support_radius=record["support_radius"],
    )
    return WaveletTable(
        spec=spec,
        resolution=record["resolution"],
        phi_values=np.asarray(record["phi_values"], dtype=float),
        psi_values=np.asarray(record["psi_values"], dtype=float),
        sup_phi=record["sup_phi"],
        sup_psi=record["sup_psi"],
        integral_phi=record["integral_phi"],
    )
