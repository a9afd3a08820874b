"""Grid model of a shift composed with Gamma-kernel smoothing on L^1.

The time-t operator convolves with the Gamma(t, 1) density and then
shifts left by t, discretized on a uniform cell grid over [x_min,
x_min + count*h).  Cell weights are differences of the regularized lower
incomplete gamma function P(a, x), evaluated by the classical dual-regime
pair (series for x < a+1, Lentz continued fraction otherwise) to 1e-13
absolute.  Mass leaving the right edge is dropped; the kernel deficit
beyond the window is reported.

Support bookkeeping is exact: every grid function carries an integer
`support_lo` below which all samples are bitwise zero, maintained through
convolution (+0 cells) and shifting (-q cells), never inferred from
floating-point magnitudes.  This is what turns "the support front moves
left at unit speed" into a checkable integer statement.  Time arguments
must be whole multiples of the cell width, because a fractional-cell
shift would destroy that bookkeeping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PremiseViolation, ShiftNotOnGrid
from .semigroup import SemigroupProvider

__all__ = [
    "regularized_gamma_p",
    "Grid1D",
    "GridFunction",
    "gamma_kernel_weights",
    "gamma_shift_apply",
    "GammaShiftProvider",
]

_GAMMA_EPS = 1e-15
_GAMMA_MAX_ITER = 600


def _gamma_p_series(a: float, x: float) -> float:
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(_GAMMA_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _GAMMA_EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_contfrac(a: float, x: float) -> float:
    # Lentz's algorithm for the continued-fraction form of Q(a, x).
    fpmin = 1e-300
    b = x + 1.0 - a
    c = 1.0 / fpmin
    d = 1.0 / b
    frac = d
    for i in range(1, _GAMMA_MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < fpmin:
            d = fpmin
        c = b + an / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        frac *= delta
        if abs(delta - 1.0) < _GAMMA_EPS:
            break
    return frac * math.exp(-x + a * math.log(x) - math.lgamma(a))


def regularized_gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x), absolute error ~1e-13."""
    if a <= 0.0:
        raise ValueError("shape parameter must be positive")
    if x < 0.0:
        raise ValueError("argument must be nonnegative")
    if x == 0.0:
        return 0.0
    if x < a + 1.0:
        return _gamma_p_series(a, x)
    return 1.0 - _gamma_q_contfrac(a, x)


@dataclass(frozen=True)
class Grid1D:
    """Uniform cell grid: cell m covers [x_min + m*h, x_min + (m+1)*h)."""

    x_min: float
    h: float
    count: int

    def __post_init__(self):
        if self.h <= 0 or self.count < 1:
            raise ValueError("need h > 0 and count >= 1")

    @property
    def x_max(self) -> float:
        return self.x_min + self.h * self.count

    def left_edge(self, m: int) -> float:
        return self.x_min + m * self.h

    def cell_of(self, x: float) -> int:
        """Index of the cell containing x (boundary points open a new cell)."""
        m = math.floor((x - self.x_min) / self.h + 1e-9)
        if not (0 <= m < self.count):
            raise ValueError(f"{x} lies outside the grid window")
        return int(m)

    def steps_of(self, t: float) -> int:
        """t as a whole number of cells; raises ShiftNotOnGrid otherwise."""
        q = round(t / self.h)
        if abs(t - q * self.h) > 1e-9 * self.h or q < 0:
            raise ShiftNotOnGrid(f"time {t} is not a nonnegative multiple of h = {self.h}")
        return int(q)


class GridFunction:
    """Dense cell values plus an exact integer support floor.

    All samples with index < support_lo are bitwise zero.  The floor is
    maintained arithmetically through every operation; a support_lo equal
    to `count` marks the zero function.
    """

    __slots__ = ("grid", "samples", "support_lo")

    def __init__(self, grid: Grid1D, samples, support_lo: int | None = None):
        samples = np.asarray(samples, dtype=float)
        if samples.shape != (grid.count,):
            raise ValueError("sample array does not match the grid")
        if support_lo is None:
            nz = np.flatnonzero(samples)
            support_lo = int(nz[0]) if nz.size else grid.count
        if not (0 <= support_lo <= grid.count):
            raise ValueError("support_lo out of range")
        if samples[:support_lo].any():
            raise ValueError("nonzero sample below the declared support floor")
        self.grid = grid
        self.samples = samples
        self.support_lo = int(support_lo)

    # -- constructors ---------------------------------------------------
    @classmethod
    def zero(cls, grid: Grid1D) -> "GridFunction":
        return cls(grid, np.zeros(grid.count), grid.count)

    @classmethod
    def indicator(cls, grid: Grid1D, a: float, b: float) -> "GridFunction":
        """Indicator of [a, b): value 1 on every cell contained in it."""
        if not (grid.x_min <= a < b <= grid.x_max):
            raise ValueError("interval outside the grid window")
        lo = grid.cell_of(a)
        hi = lo
        samples = np.zeros(grid.count)
        for m in range(lo, grid.count):
            if grid.left_edge(m + 1) <= b + 1e-9 * grid.h:
                samples[m] = 1.0
                hi = m
            else:
                break
        if not samples.any():
            return cls.zero(grid)
        return cls(grid, samples, lo)

    # -- queries ----------------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return self.support_lo >= self.grid.count or not self.samples.any()

    def norm_l1(self) -> float:
        return float(self.grid.h * np.sum(np.abs(self.samples)))

    def mass(self) -> float:
        return float(self.grid.h * np.sum(self.samples))

    def min_value(self) -> float:
        return float(np.min(self.samples))

    def support_front(self) -> float:
        """Left edge of the lowest possibly-nonzero cell (x_max if zero)."""
        return self.grid.left_edge(self.support_lo)

    def assert_support_sound(self):
        assert not self.samples[: self.support_lo].any(), "support floor violated"

    # -- arithmetic -------------------------------------------------------
    def _like(self, other):
        if self.grid != other.grid:
            raise ValueError("grid mismatch")

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._like(other)
        return GridFunction(
            self.grid,
            self.samples + other.samples,
            min(self.support_lo, other.support_lo),
        )

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self._like(other)
        return GridFunction(
            self.grid,
            self.samples - other.samples,
            min(self.support_lo, other.support_lo),
        )

    def scale(self, c: float) -> "GridFunction":
        if c == 0.0:
            return GridFunction.zero(self.grid)
        return GridFunction(self.grid, self.samples * float(c), self.support_lo)

    def __mul__(self, c):
        return self.scale(c)

    __rmul__ = __mul__

    def copy(self) -> "GridFunction":
        return GridFunction(self.grid, self.samples.copy(), self.support_lo)


def gamma_kernel_weights(t: float, grid: Grid1D, n_cells: int | None = None):
    """(cell weights of the Gamma(t,1) density over [0, n_cells*h), deficit).

    weights[m] = P(t, (m+1)h) - P(t, m*h); tiny negative differences from
    the 1e-13 evaluation error are clipped to zero so positivity of the
    discrete operator is exact.  The deficit 1 - P(t, n_cells*h) is the
    kernel mass beyond the covered offsets.  n_cells defaults to the grid
    cell count (offsets spanning one window length).
    """
    if t <= 0:
        raise ValueError("kernel shape (= time) must be positive")
    if n_cells is None:
        n_cells = grid.count
    edges = np.array([regularized_gamma_p(t, m * grid.h) for m in range(n_cells + 1)])
    weights = np.maximum(np.diff(edges), 0.0)
    deficit = float(1.0 - edges[-1])
    return weights, deficit


def gamma_shift_apply(f: GridFunction, t: float, weights: np.ndarray | None = None) -> GridFunction:
    """Apply the time-t operator: Gamma(t,1) convolution, then left shift by t.

    t must be a whole number q of cells.  The window acts as a viewport on
    the line dynamics: output cell i reads the convolution at offset i + q,
    so kernel mass that crosses the window top and is pulled back by the
    shift re-enters, and only mass whose *final* position lies outside the
    window is dropped.  The kernel therefore spans count + q offset cells.
    Output support floor is exactly input floor minus the shift (clamped
    at 0); nonnegative inputs give nonnegative outputs since every kernel
    weight is >= 0.
    """
    grid = f.grid
    q = grid.steps_of(t)
    if q == 0:
        return f.copy()
    if f.is_zero:
        return GridFunction.zero(grid)
    if weights is None:
        weights, _ = gamma_kernel_weights(t, grid, grid.count + q)
    conv = np.convolve(f.samples, weights)
    shifted = conv[q : q + grid.count].copy()
    support_lo = min(max(f.support_lo - q, 0), grid.count)
    out = GridFunction(grid, shifted, support_lo)
    if __debug__:
        out.assert_support_sound()
    return out


class GammaShiftProvider(SemigroupProvider):
    """Semigroup provider for the discretized shift/Gamma-smoothing family.

    The window is a viewport on the line dynamics: each operator reads the
    full causal convolution at post-shift positions, so only mass whose
    final position leaves the window is dropped.  L^1 contraction
    (M, omega) = (1, 0): weights are nonnegative with total at most 1.
    Positivity of every operator in the family is a construction-level
    certificate, not a sample.
    """

    envelope = (1.0, 0.0)
    nilpotent_time = None
    is_positive_family = True

    def __init__(self, grid: Grid1D):
        self.grid = grid
        self._weight_cache = {}

    @property
    def carrier_dim(self):
        return self.grid.count

    def weights(self, t: float):
        q = self.grid.steps_of(t)
        hit = self._weight_cache.get(q)
        if hit is None:
            hit = gamma_kernel_weights(q * self.grid.h, self.grid, self.grid.count + q)
            self._weight_cache[q] = hit
        return hit

    def apply(self, t, f: GridFunction) -> GridFunction:
        q = self.grid.steps_of(t)
        if q == 0:
            return f.copy()
        weights, _ = self.weights(t)
        return gamma_shift_apply(f, t, weights)

    def apply_adjoint(self, t, phi: GridFunction) -> GridFunction:
        """Transpose of the cell-basis matrix M[i, j] = w[i + q - j]."""
        q = self.grid.steps_of(t)
        if q == 0:
            return phi.copy()
        weights, _ = self.weights(t)
        count = self.grid.count
        c = np.convolve(phi.samples[::-1], weights)
        vals = c[count - 1 + q - np.arange(count)]
        return GridFunction(self.grid, vals)

    def to_dense(self, t) -> np.ndarray:
        q = self.grid.steps_of(t)
        count = self.grid.count
        if q == 0:
            return np.eye(count)
        weights, _ = self.weights(t)
        idx = np.arange(count)[:, None] + q - np.arange(count)[None, :]
        return np.where(idx >= 0, weights[np.clip(idx, 0, weights.size - 1)], 0.0)

    def zero_vector(self):
        return GridFunction.zero(self.grid)

    def vec_norm(self, f: GridFunction) -> float:
        return f.norm_l1()

    def pair(self, phi: GridFunction, f: GridFunction) -> float:
        return float(self.grid.h * np.dot(phi.samples, f.samples))

    def default_test_vectors(self):
        mid = self.grid.x_min + 0.5 * (self.grid.x_max - self.grid.x_min)
        return [
            GridFunction.indicator(self.grid, 1.0, 2.0)
            if self.grid.x_min <= 1.0 < self.grid.x_max
            else GridFunction.indicator(self.grid, self.grid.x_min, mid),
            GridFunction.indicator(self.grid, self.grid.x_min, self.grid.x_max - self.grid.h),
        ]

    def cell_indicator(self, i: int) -> GridFunction:
        if not (0 <= i < self.grid.count):
            raise ValueError("cell index out of range")
        samples = np.zeros(self.grid.count)
        samples[i] = 1.0
        return GridFunction(self.grid, samples, i)

    def condition_basis(self, count: int = 4):
        """Single-cell indicators spread across the window."""
        n = self.grid.count
        cells = sorted({(n * (k + 1)) // (count + 1) for k in range(count)})
        return [self.cell_indicator(i) for i in cells]

    def admissible_times(self, candidates):
        """Snap each candidate to the nearest whole-cell time q*h."""
        out = set()
        for t in candidates:
            q = int(round(float(t) / self.grid.h))
            if q >= 0:
                out.add(q * self.grid.h)
        return sorted(out)

    def check_positive(self, f, label: str = "vector"):
        if not isinstance(f, GridFunction):
            raise PremiseViolation(f"{label} must be a grid function")
        if f.is_zero or f.min_value() < 0.0:
            raise PremiseViolation(f"{label} must be positive and nonzero")

    def positivity_probe(self, t):
        q = self.grid.steps_of(t)
        if q == 0:
            # identity operator: off-diagonal entries are exact zeros
            return 0.0, ("identity-offdiag", 0, 1), True
        weights, _ = self.weights(t)
        m = int(np.argmin(weights))
        wmin = float(weights[m])
        if q + 1 < self.grid.count and wmin > 0.0:
            # below-band entries M[i, j] with j > i + q are structural zeros
            return 0.0, ("below-band", 0, q + 1), True
        return wmin, ("kernel-cell", m), True

    def mass_report(self, t) -> dict:
        if self.grid.steps_of(t) == 0:
            return {"t": float(t), "weight_sum": 1.0, "window_deficit": 0.0}
        weights, deficit = self.weights(t)
        return {
            "t": float(t),
            "weight_sum": float(np.sum(weights)),
            "window_deficit": deficit,
        }

    def describe(self) -> dict:
        return {
            "kind": "GammaShiftProvider",
            "envelope": {"M": 1.0, "omega": 0.0},
            "grid": {"x_min": self.grid.x_min, "h": self.grid.h, "count": self.grid.count},
        }
