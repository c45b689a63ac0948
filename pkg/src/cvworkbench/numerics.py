"""Shared numerical substrate: grids, quadrature, spectral derivatives,
harmonic-oscillator eigenfunctions, and truncated-Fock-space evolution.

All position-space work uses hbar = 1 with q = (a + a^dag)/sqrt(2), so the
vacuum has Var(q) = Var(p) = 1/2 and the n-th oscillator eigenfunction is
psi_n(q) = pi^(-1/4) (2^n n!)^(-1/2) H_n(q) exp(-q^2/2).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

DEFAULT_POINT_COUNT = 8192
DEFAULT_FOCK_CUTOFF = 120
DEFAULT_GUARD_FRACTION = 5  # guard band = cutoff // 5
DEFAULT_HERMITE_MAX = 64

TAIL_TOLERANCE = 1e-8
LEAKAGE_TOLERANCE = 1e-8
NORM_TOLERANCE = 1e-8


class GridTooSmallError(ValueError):
    """Raised when a wave does not decay at the grid boundary."""


class CutoffTooSmallError(ValueError):
    """Raised when Fock-space population leaks into the guard band."""


class ConfigurationError(ValueError):
    """Raised when an argument exceeds a configured limit."""


class AccuracyError(ValueError):
    """Raised when a computed quantity violates its accuracy contract."""


@dataclass(frozen=True)
class QGrid:
    """Uniform symmetric position grid on [-L, L].

    Points are built from integer offsets so that q[k] == -q[M-1-k] holds
    exactly in floating point.
    """

    half_extent: float
    point_count: int = DEFAULT_POINT_COUNT

    def __post_init__(self):
        if self.point_count < 2 or self.point_count % 2 != 0:
            raise ConfigurationError(
                f"point_count must be an even integer >= 2, got {self.point_count}"
            )
        if not self.half_extent > 0:
            raise ConfigurationError(f"half_extent must be positive, got {self.half_extent}")

    @property
    def step(self) -> float:
        return 2.0 * self.half_extent / (self.point_count - 1)

    @functools.cached_property
    def points(self) -> np.ndarray:
        m = self.point_count
        # q_k = (2k - M + 1) * L/(M-1): exact reflection symmetry
        q = (2 * np.arange(m) - (m - 1)) * (self.half_extent / (m - 1))
        q.flags.writeable = False
        return q

    @functools.cached_property
    def wavenumbers(self) -> np.ndarray:
        k = 2.0 * np.pi * np.fft.fftfreq(self.point_count, d=self.step)
        k.flags.writeable = False
        return k

    @functools.cached_property
    def quadrature_weights(self) -> np.ndarray:
        """Composite Simpson weights; the final interval (even point count
        leaves one over) is closed with a trapezoid, negligible for waves
        that satisfy the boundary-decay condition."""
        m, h = self.point_count, self.step
        w = np.zeros(m)
        w[0] = 1.0
        w[1 : m - 2 : 2] = 4.0
        w[2 : m - 2 : 2] = 2.0
        w[m - 2] = 1.0
        w *= h / 3.0
        w[m - 2] += h / 2.0
        w[m - 1] += h / 2.0
        w.flags.writeable = False
        return w

    def doubled(self) -> "QGrid":
        return QGrid(2.0 * self.half_extent, 2 * self.point_count)


def default_grid(r_max: float = 0.0, n_fock: int | None = None,
                 point_count: int = DEFAULT_POINT_COUNT) -> QGrid:
    """Grid sized for squeezing up to |r_max| and, optionally, Fock support
    up to n_fock (classical turning point sqrt(2 n) plus padding)."""
    half = 8.0 * max(1.0, np.exp(abs(r_max))) + 4.0
    if n_fock is not None:
        half = max(half, np.sqrt(2.0 * n_fock) + 6.0)
    return QGrid(float(half), point_count)


@dataclass(frozen=True)
class PositionWave:
    """Complex wavefunction samples on a QGrid."""

    grid: QGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.point_count,):
            raise ValueError(
                f"values shape {vals.shape} does not match grid size {self.grid.point_count}"
            )
        object.__setattr__(self, "values", vals)

    def norm_squared(self) -> float:
        return float(np.real(integrate(np.abs(self.values) ** 2, self.grid)))

    def norm(self) -> float:
        return float(np.sqrt(self.norm_squared()))

    def normalized(self) -> "PositionWave":
        n = self.norm()
        if not np.isfinite(n) or n == 0.0:
            raise ValueError("cannot normalize a zero or non-finite wave")
        return PositionWave(self.grid, self.values / n)

    def tail_ratio(self) -> float:
        peak = float(np.max(np.abs(self.values)))
        if peak == 0.0:
            return 0.0
        edge = max(abs(self.values[0]), abs(self.values[-1]))
        return float(edge / peak)

    def require_tails(self, tol: float = TAIL_TOLERANCE) -> None:
        ratio = self.tail_ratio()
        if ratio > tol:
            raise GridTooSmallError(
                f"boundary amplitude is {ratio:.2e} of the peak (limit {tol:.0e}); "
                f"grid half-extent {self.grid.half_extent:g} is too small, "
                f"extend to at least {2 * self.grid.half_extent:g}"
            )


@dataclass(frozen=True)
class FockVector:
    """Photon-number-basis coefficients c_0..c_N."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coefficients, dtype=complex))
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a non-empty 1-D array")
        object.__setattr__(self, "coefficients", c)

    @property
    def cutoff(self) -> int:
        return self.coefficients.size - 1

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.coefficients) ** 2))

    def normalized(self) -> "FockVector":
        n = np.sqrt(self.norm_squared())
        if not np.isfinite(n) or n == 0.0:
            raise ValueError("cannot normalize a zero or non-finite vector")
        return FockVector(self.coefficients / n)

    def tail_mass(self, guard: int | None = None) -> float:
        """Population above cutoff - guard, relative to the total."""
        if guard is None:
            guard = self.cutoff // DEFAULT_GUARD_FRACTION
        keep = self.cutoff + 1 - guard
        total = self.norm_squared()
        if total == 0.0:
            return 0.0
        return float(np.sum(np.abs(self.coefficients[keep:]) ** 2) / total)

    def require_confined(self, guard: int | None = None,
                         tol: float = LEAKAGE_TOLERANCE) -> None:
        mass = self.tail_mass(guard)
        if mass > tol:
            raise CutoffTooSmallError(
                f"guard-band population {mass:.2e} exceeds {tol:.0e}; "
                f"cutoff {self.cutoff} is too small"
            )


def integrate(values: np.ndarray, grid: QGrid) -> complex:
    """Composite-Simpson estimate of the integral of sampled values."""
    values = np.asarray(values)
    if values.shape != (grid.point_count,):
        raise ValueError(
            f"values length {values.shape} does not match grid size {grid.point_count}"
        )
    return complex(np.sum(grid.quadrature_weights * values))


def spectral_derivative(wave: PositionWave, order: int = 1) -> PositionWave:
    """d/dq or d^2/dq^2 via Fourier multipliers.

    Periodic wraparound is admissible because the boundary-decay condition
    is enforced first.
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    wave.require_tails()
    k = wave.grid.wavenumbers
    mult = (1j * k) if order == 1 else -(k * k)
    deriv = np.fft.ifft(mult * np.fft.fft(wave.values))
    return PositionWave(wave.grid, deriv)


def hermite_poly(n: int, q: np.ndarray, max_degree: int = DEFAULT_HERMITE_MAX) -> np.ndarray:
    """Physicists' Hermite polynomial H_n by the three-term recurrence
    H_{n+1} = 2q H_n - 2n H_{n-1}."""
    if n < 0:
        raise ValueError(f"degree must be non-negative, got {n}")
    if n > max_degree:
        raise ConfigurationError(f"degree {n} exceeds configured maximum {max_degree}")
    q = np.asarray(q, dtype=float)
    h_prev = np.ones_like(q)
    if n == 0:
        return h_prev
    h_cur = 2.0 * q
    for m in range(1, n):
        h_prev, h_cur = h_cur, 2.0 * q * h_cur - 2.0 * m * h_prev
    return h_cur


def hermite_functions(n_max: int, q: np.ndarray) -> np.ndarray:
    """Oscillator eigenfunctions psi_0..psi_n_max evaluated at q.

    Uses the normalized recurrence
        psi_n = sqrt(2/n) q psi_{n-1} - sqrt((n-1)/n) psi_{n-2},
    which stays bounded where H_n times the Gaussian would overflow.
    Returns an array of shape (n_max + 1, len(q)).
    """
    q = np.asarray(q, dtype=float)
    table = np.zeros((n_max + 1, q.size))
    table[0] = np.pi ** -0.25 * np.exp(-0.5 * q * q)
    if n_max >= 1:
        table[1] = np.sqrt(2.0) * q * table[0]
    for n in range(2, n_max + 1):
        table[n] = np.sqrt(2.0 / n) * q * table[n - 1] - np.sqrt((n - 1) / n) * table[n - 2]
    return table


@functools.lru_cache(maxsize=8)
def _hermite_table(grid: QGrid, n_max: int) -> np.ndarray:
    table = hermite_functions(n_max, grid.points)
    table.flags.writeable = False
    return table


def _required_extent(n_top: int) -> float:
    return np.sqrt(2.0 * max(n_top, 1)) + 6.0


def _support_top(coefficients: np.ndarray) -> int:
    """Highest index whose amplitude is non-negligible relative to the peak."""
    mags = np.abs(coefficients)
    peak = mags.max()
    if peak == 0.0:
        return 0
    occupied = np.nonzero(mags > 1e-12 * peak)[0]
    return int(occupied[-1]) if occupied.size else 0


def fock_to_position(fock: FockVector, grid: QGrid) -> PositionWave:
    """Synthesize sum_n c_n psi_n(q) on the grid."""
    n_top = _support_top(fock.coefficients)
    need = _required_extent(n_top)
    if grid.half_extent < need:
        raise GridTooSmallError(
            f"grid half-extent {grid.half_extent:g} cannot hold Fock support up to "
            f"n={n_top}; need at least {need:g}"
        )
    table = _hermite_table(grid, fock.cutoff)
    return PositionWave(grid, fock.coefficients @ table)


def position_to_fock(wave: PositionWave, n_max: int) -> FockVector:
    """Overlap coefficients c_n = <psi_n|wave> for n = 0..n_max."""
    need = _required_extent(n_max)
    if wave.grid.half_extent < need:
        raise GridTooSmallError(
            f"grid half-extent {wave.grid.half_extent:g} too small to project onto "
            f"n<={n_max}; need at least {need:g}"
        )
    wave.require_tails()
    table = _hermite_table(wave.grid, n_max)
    weighted = wave.grid.quadrature_weights * wave.values
    return FockVector(table @ weighted)


def fock_unitary_exp(generator: np.ndarray, fock: FockVector,
                     guard: int | None = None) -> FockVector:
    """exp(generator) applied to a Fock vector.

    The generator must be anti-Hermitian; the exponential is evaluated by
    scipy's scaling-and-squaring expm. Norm drift and guard-band leakage
    are both checked so truncation artifacts surface as errors instead of
    silently corrupting downstream metrics.
    """
    gen = np.asarray(generator, dtype=complex)
    dim = fock.coefficients.size
    if gen.shape != (dim, dim):
        raise ValueError(f"generator shape {gen.shape} does not match vector length {dim}")
    defect = np.max(np.abs(gen + gen.conj().T))
    if defect > 1e-12:
        raise ValueError(f"generator is not anti-Hermitian (max |G + G^dag| = {defect:.2e})")
    out = FockVector(expm(gen) @ fock.coefficients)
    out.require_confined(guard)
    drift = abs(np.sqrt(out.norm_squared()) - np.sqrt(fock.norm_squared()))
    if drift > NORM_TOLERANCE:
        raise CutoffTooSmallError(
            f"evolution changed the norm by {drift:.2e} (limit {NORM_TOLERANCE:.0e}); "
            "increase the Fock cutoff"
        )
    return out


def annihilation_matrix(cutoff: int) -> np.ndarray:
    """Annihilation operator on the truncated space n = 0..cutoff."""
    return np.diag(np.sqrt(np.arange(1.0, cutoff + 1)), 1)


def number_matrix(cutoff: int) -> np.ndarray:
    return np.diag(np.arange(cutoff + 1.0))
