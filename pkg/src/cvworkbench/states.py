"""Construction of the resource-state families and Gaussian post-operations.

Wavefunction conventions (fixed by the squeezed-vacuum form used throughout):

    S(rho)|0>  ->  exp(-q^2 e^{2 rho} / 2),   Var(q) = e^{-2 rho} / 2
    phi_G(r) = S(-r)|0>  ->  (e^r sqrt(pi))^{-1/2} exp(-q^2 e^{-2r} / 2)

A Gaussian post-operation acts as

    phi'(q) = e^{t/2} e^{i s q} phi(e^t (q - d)),

i.e. squeeze by t, shift position by d, then displace momentum by s.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import next_fast_len
from scipy.optimize import minimize

from .numerics import (
    DEFAULT_FOCK_CUTOFF,
    AccuracyError,
    FockVector,
    GridTooSmallError,
    PositionWave,
    QGrid,
    annihilation_matrix,
    default_grid,
    fock_to_position,
    fock_unitary_exp,
    hermite_functions,
    position_to_fock,
)

SQRT2 = np.sqrt(2.0)

FAMILIES = (
    "gaussian_squeezed",
    "cubic_phase",
    "fock_truncation",
    "operator_truncation",
    "trisqueezed",
    "bloch",
)

# Which StateSpec fields each family carries.
_FAMILY_FIELDS = {
    "gaussian_squeezed": ("r",),
    "cubic_phase": ("a", "r"),
    "fock_truncation": ("a", "r"),
    "operator_truncation": ("a", "r"),
    "trisqueezed": ("f", "s", "t"),
    "bloch": ("n_photons", "thetas", "phis", "r_b", "d"),
}

MAX_BLOCH_PHOTONS = 16
MAX_TRISQUEEZE_AMPLITUDE = 0.15


@dataclass(frozen=True)
class GaussianOp:
    """Optimizable Gaussian post-operation: momentum displacement s,
    squeeze t, optional position displacement d."""

    s: float = 0.0
    t: float = 0.0
    d: float = 0.0

    def __post_init__(self):
        for name in ("s", "t", "d"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"GaussianOp.{name} must be finite")

    def is_identity(self) -> bool:
        return self.s == 0.0 and self.t == 0.0 and self.d == 0.0

    def inverse(self) -> "GaussianOp":
        """Exact group inverse (composition is the identity up to a global
        phase e^{i s d} when both s and d are nonzero)."""
        return GaussianOp(
            s=-self.s * np.exp(-self.t),
            t=-self.t,
            d=-self.d * np.exp(self.t),
        )


@dataclass(frozen=True)
class StateSpec:
    """Tagged description of a state family and its physical parameters."""

    family: str
    a: float | None = None
    r: float | None = None
    f: complex | None = None
    s: float | None = None
    t: float | None = None
    n_photons: int | None = None
    thetas: tuple = field(default=())
    phis: tuple = field(default=())
    r_b: float | None = None
    d: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        object.__setattr__(self, "thetas", tuple(float(x) for x in self.thetas))
        object.__setattr__(self, "phis", tuple(float(x) for x in self.phis))
        required = _FAMILY_FIELDS[self.family]
        for name in ("a", "r", "f", "s", "t", "n_photons", "r_b", "d"):
            val = getattr(self, name)
            if name in required:
                if val is None:
                    raise ValueError(f"family {self.family!r} requires field {name!r}")
            elif val is not None:
                raise ValueError(f"family {self.family!r} does not accept field {name!r}")
        if self.family == "bloch":
            n = self.n_photons
            if not 0 <= n <= MAX_BLOCH_PHOTONS:
                raise ValueError(f"n_photons must be in 0..{MAX_BLOCH_PHOTONS}, got {n}")
            if len(self.thetas) != n or len(self.phis) != n:
                raise ValueError(
                    f"bloch family with n_photons={n} needs {n} thetas and {n} phis, "
                    f"got {len(self.thetas)} and {len(self.phis)}"
                )
        else:
            if self.thetas or self.phis:
                raise ValueError(f"family {self.family!r} does not accept angle lists")
        if self.a is not None and self.a < 0:
            raise ValueError(f"cubic strength a must be non-negative, got {self.a}")

    def squeeze_magnitude(self) -> float:
        """Largest squeeze entering this state's construction (grid sizing)."""
        mags = [abs(x) for x in (self.r, self.t, self.r_b) if x is not None]
        return max(mags, default=0.0)

    def fock_demand(self) -> int | None:
        if self.family == "trisqueezed":
            return DEFAULT_FOCK_CUTOFF
        if self.family == "bloch":
            return self.n_photons
        if self.family == "fock_truncation":
            return 3
        return None

    def to_mapping(self) -> dict:
        """Canonical flat key-value form (used by CLI config files)."""
        out = {"family": self.family}
        for name in ("a", "r", "s", "t", "r_b", "d"):
            val = getattr(self, name)
            if val is not None:
                out[name] = repr(float(val))
        if self.f is not None:
            out["f"] = repr(complex(self.f))
        if self.n_photons is not None:
            out["N"] = str(self.n_photons)
            for i, th in enumerate(self.thetas, start=1):
                out[f"theta_{i}"] = repr(th)
            for i, ph in enumerate(self.phis, start=1):
                out[f"phi_{i}"] = repr(ph)
        return out

    @classmethod
    def from_mapping(cls, mapping: dict) -> "StateSpec":
        m = dict(mapping)
        family = m.pop("family")
        kwargs = {}
        for name in ("a", "r", "s", "t", "r_b", "d"):
            if name in m:
                kwargs[name] = float(m.pop(name))
        if "f" in m:
            kwargs["f"] = complex(m.pop("f"))
        if "N" in m:
            n = int(m.pop("N"))
            kwargs["n_photons"] = n
            kwargs["thetas"] = tuple(float(m.pop(f"theta_{i}")) for i in range(1, n + 1))
            kwargs["phis"] = tuple(float(m.pop(f"phi_{i}")) for i in range(1, n + 1))
        if m:
            raise ValueError(f"unrecognized StateSpec keys: {sorted(m)}")
        return cls(family=family, **kwargs)


# ---------------------------------------------------------------------------
# Band-limited resampling (the workhorse behind apply_gaussian)
# ---------------------------------------------------------------------------

def _fourier_resample(values: np.ndarray, grid: QGrid, scale: float,
                      shift: float) -> np.ndarray:
    """Evaluate the periodic band-limited interpolant of the samples at the
    points y_j = scale * (q_j - shift).

    The targets are uniformly spaced, so the Fourier-series evaluation is a
    chirp-z transform, done here with Bluestein's algorithm (three FFTs).
    """
    m = grid.point_count
    spec = np.fft.fftshift(np.fft.fft(values))
    # fractional sample coordinates of the targets
    targets = scale * (grid.points - shift)
    u = (targets - grid.points[0]) / grid.step
    u0, rho = u[0], scale
    n = np.arange(m)
    chirp = np.exp(1j * np.pi * rho * (n * n) / m)
    a_seq = spec * np.exp(2j * np.pi * u0 * n / m) * chirp
    k = np.arange(-(m - 1), m)
    b_seq = np.exp(-1j * np.pi * rho * (k * k) / m)
    nfft = next_fast_len(2 * m - 1)
    conv = np.fft.ifft(np.fft.fft(a_seq, nfft) * np.fft.fft(b_seq, nfft))
    s = chirp * conv[m - 1 : 2 * m - 1]
    out = np.exp(-1j * np.pi * u) * s / m
    # Outside the sampled domain the periodic interpolant wraps onto the
    # bulk of the state; the true wave is below the tail tolerance there.
    out[np.abs(targets) > grid.half_extent] = 0.0
    return out


def _check_bandwidth(values: np.ndarray, grid: QGrid, t: float) -> None:
    """A squeeze with t > 0 dilates the spectrum by e^t; demand that the
    current spectral support leaves that much headroom."""
    if t <= 0:
        return
    spec = np.abs(np.fft.fftshift(np.fft.fft(values))) ** 2
    m = grid.point_count
    keep = int(np.floor((m // 2) * np.exp(-t)))
    centre = slice(m // 2 - keep, m // 2 + keep)
    total = spec.sum()
    outside = total - spec[centre].sum()
    if outside > 1e-9 * total:
        raise GridTooSmallError(
            f"squeeze t={t:g} needs bandwidth headroom e^t={np.exp(t):.3g}, but "
            f"{outside / total:.2e} of the spectral mass lies outside the "
            "admissible band; refine the grid step"
        )


def apply_gaussian(wave: PositionWave, op: GaussianOp) -> PositionWave:
    """Apply phi'(q) = e^{t/2} e^{i s q} phi(e^t (q - d)).

    Resampling of phi(e^t q) uses band-limited (Fourier) interpolation;
    wraparound of the periodic interpolant is harmless because the enforced
    boundary decay puts nothing near the edges.
    """
    if op.t == 0.0 and op.d == 0.0:
        resampled = wave.values
    else:
        wave.require_tails()
        _check_bandwidth(wave.values, wave.grid, op.t)
        resampled = _fourier_resample(wave.values, wave.grid, np.exp(op.t), op.d)
    out_values = np.exp(op.t / 2.0) * resampled
    if op.s != 0.0:
        out_values = np.exp(1j * op.s * wave.grid.points) * out_values
    out = PositionWave(wave.grid, out_values)
    out.require_tails()
    drift = abs(out.norm() - wave.norm())
    if drift > 1e-8:
        raise AccuracyError(
            f"Gaussian operation changed the norm by {drift:.2e}; "
            "the grid does not support this squeeze/displacement"
        )
    return out


# ---------------------------------------------------------------------------
# State constructors
# ---------------------------------------------------------------------------

def make_gaussian_squeezed(r: float, grid: QGrid) -> PositionWave:
    """phi_G(r) = S(-r)|0>: Var(q) = e^{2r}/2, Var(p) = e^{-2r}/2."""
    q = grid.points
    values = np.exp(r) ** -0.5 * np.pi ** -0.25 * np.exp(-q * q * np.exp(-2.0 * r) / 2.0)
    wave = PositionWave(grid, values).normalized()
    wave.require_tails()
    return wave


def make_cubic_phase(a: float, r: float, grid: QGrid) -> PositionWave:
    """Finite-squeezing cubic phase state e^{i a q^3} S(-r)|0>."""
    base = make_gaussian_squeezed(r, grid)
    q = grid.points
    return PositionWave(grid, np.exp(1j * a * q ** 3) * base.values)


def make_fock_truncation(a: float, r: float, grid: QGrid) -> PositionWave:
    """Photon-number truncation of the cubic phase state at n = 3."""
    coeffs = position_to_fock(make_cubic_phase(a, r, grid), 3)
    return fock_to_position(coeffs.normalized(), grid)


def make_operator_truncation(a: float, r: float, grid: QGrid) -> PositionWave:
    """First-order gate truncation (1 + i a q^3) S(-r)|0>, normalized.

    The squared norm of the unnormalized form is e^r sqrt(pi) (1 + 15/8 a^2 e^{6r}).
    """
    q = grid.points
    values = (1.0 + 1j * a * q ** 3) * np.exp(-q * q * np.exp(-2.0 * r) / 2.0)
    wave = PositionWave(grid, values).normalized()
    wave.require_tails()
    return wave


def trisqueeze_generator(f: complex, cutoff: int) -> np.ndarray:
    """i f a^3 + i f* (a^dag)^3 on the truncated Fock space."""
    am = annihilation_matrix(cutoff)
    a3 = am @ am @ am
    return 1j * f * a3 + 1j * np.conj(f) * a3.conj().T


def trisqueezed_vacuum(f: complex, cutoff: int = DEFAULT_FOCK_CUTOFF,
                       guard: int | None = None) -> FockVector:
    """exp(i f a^3 + i f* a^dag^3)|0> in the truncated Fock space."""
    if abs(f) > MAX_TRISQUEEZE_AMPLITUDE:
        raise ValueError(
            f"|f| = {abs(f):.3g} exceeds the leakage-safe limit {MAX_TRISQUEEZE_AMPLITUDE}"
        )
    vacuum = FockVector(np.eye(cutoff + 1, dtype=complex)[0])
    return fock_unitary_exp(trisqueeze_generator(f, cutoff), vacuum, guard=guard)


def make_trisqueezed(f: complex, s: float, t: float, grid: QGrid,
                     cutoff: int = DEFAULT_FOCK_CUTOFF) -> PositionWave:
    """D_p(s) S(t) exp(i f a^3 + i f* a^dag^3)|0>."""
    wave = fock_to_position(trisqueezed_vacuum(f, cutoff), grid)
    return apply_gaussian(wave, GaussianOp(s=s, t=t))


def bloch_coefficients(thetas, phis) -> np.ndarray:
    """Hypersphere parameterization of a unit vector c_0..c_N.

    c_0 = cos(theta_1); interior entries pick up prod(sin) * cos(next) and
    the phase e^{i phi_j}; the last entry is the full sine product with
    e^{i phi_N}. Unit norm holds by construction (telescoping).
    """
    thetas = np.asarray(thetas, dtype=float)
    phis = np.asarray(phis, dtype=float)
    if thetas.shape != phis.shape:
        raise ValueError("thetas and phis must have equal length")
    n = thetas.size
    if n == 0:
        return np.array([1.0 + 0j])
    c = np.zeros(n + 1, dtype=complex)
    sines = np.sin(thetas)
    c[0] = np.cos(thetas[0])
    for j in range(1, n):
        c[j] = np.prod(sines[:j]) * np.cos(thetas[j]) * np.exp(1j * phis[j - 1])
    c[n] = np.prod(sines) * np.exp(1j * phis[n - 1])
    total = float(np.sum(np.abs(c) ** 2))
    if abs(total - 1.0) > 1e-12:
        raise AccuracyError(f"hypersphere coefficients drifted off unit norm: {total!r}")
    return c


def make_bloch_superposition(n_photons: int, thetas, phis, r_b: float, d: float,
                             grid: QGrid) -> PositionWave:
    """Squeezed, displaced photon-number superposition.

    The displacement gate acts along the momentum quadrature with amplitude
    sqrt(2) * d, i.e. the wave is multiplied by e^{i sqrt(2) d q} after the
    squeeze. This is the convention under which the published optimized
    parameter sets evaluate to their quoted figures of merit; a position-space
    shift does not reproduce them (see the workbench README).
    """
    thetas, phis = tuple(thetas), tuple(phis)
    if len(thetas) != n_photons or len(phis) != n_photons:
        raise ValueError(
            f"need exactly {n_photons} thetas and phis, got {len(thetas)}/{len(phis)}"
        )
    coeffs = FockVector(bloch_coefficients(thetas, phis))
    wave = fock_to_position(coeffs, grid)
    return apply_gaussian(wave, GaussianOp(s=SQRT2 * d, t=r_b))


_CONSTRUCTORS = {
    "gaussian_squeezed": lambda spec, grid: make_gaussian_squeezed(spec.r, grid),
    "cubic_phase": lambda spec, grid: make_cubic_phase(spec.a, spec.r, grid),
    "fock_truncation": lambda spec, grid: make_fock_truncation(spec.a, spec.r, grid),
    "operator_truncation": lambda spec, grid: make_operator_truncation(spec.a, spec.r, grid),
    "trisqueezed": lambda spec, grid: make_trisqueezed(spec.f, spec.s, spec.t, grid),
    "bloch": lambda spec, grid: make_bloch_superposition(
        spec.n_photons, spec.thetas, spec.phis, spec.r_b, spec.d, grid
    ),
}


def build_state(spec: StateSpec, grid: QGrid | None = None,
                max_doublings: int = 2) -> PositionWave:
    """Construct the state described by a StateSpec.

    Without an explicit grid, a default one is sized from the spec's squeeze
    magnitude and Fock demand, and doubled (up to max_doublings) whenever the
    boundary-decay check fails.
    """
    if grid is not None:
        return _CONSTRUCTORS[spec.family](spec, grid)
    grid = default_grid(spec.squeeze_magnitude(), n_fock=spec.fock_demand())
    for _ in range(max_doublings):
        try:
            return _CONSTRUCTORS[spec.family](spec, grid)
        except GridTooSmallError:
            grid = grid.doubled()
    return _CONSTRUCTORS[spec.family](spec, grid)


# ---------------------------------------------------------------------------
# Trisqueezed parameter fit
# ---------------------------------------------------------------------------

@functools.lru_cache(maxsize=4)
def _trisqueeze_eigensystem(cutoff: int):
    """Eigendecomposition of the Hermitian a^3 + a^dag^3 (real f fast path)."""
    am = annihilation_matrix(cutoff)
    a3 = am @ am @ am
    evals, evecs = np.linalg.eigh(a3 + a3.T)
    return evals, evecs


def _trisqueezed_vacuum_fast(f: float, cutoff: int) -> np.ndarray:
    """exp(i f (a^3 + a^dag^3))|0> via the cached eigensystem; real f only.
    Agrees with the expm route to machine precision."""
    evals, evecs = _trisqueeze_eigensystem(cutoff)
    return (evecs * np.exp(1j * f * evals)) @ evecs[0].conj()


def fit_trisqueezed(a: float, r: float, grid: QGrid, fit_cutoff: int = 60,
                    f_limit: float = 0.075) -> tuple[float, float, float]:
    """Find real (f, s, t) maximizing fidelity with the cubic phase state
    phi_c(a, r).

    Deterministic multi-start simplex search; the trisqueezed scheme leaves
    (f, s, t) free, so each sweep point re-derives them from this fidelity
    fit. The search runs at a reduced cutoff for speed; callers rebuild the
    returned parameters at the full cutoff. The default f_limit is the
    largest amplitude whose guard-band leakage stays within tolerance at the
    default cutoff (measured boundary: 0.077).
    """
    target = make_cubic_phase(a, r, grid)
    weights = grid.quadrature_weights
    points = grid.points

    def loss(x):
        f, s, t = x
        if abs(f) > f_limit or abs(t) > 1.5 or abs(s) > 5.0:
            return 0.0
        vec = _trisqueezed_vacuum_fast(f, fit_cutoff)
        tab = hermite_functions(fit_cutoff, np.exp(t) * points)
        wave = np.exp(t / 2.0) * (vec @ tab) * np.exp(1j * s * points)
        nrm2 = np.sum(weights * np.abs(wave) ** 2).real
        overlap = np.sum(weights * np.conj(wave) * target.values)
        return -abs(overlap) ** 2 / nrm2

    starts = [(0.01, 0.0, 0.0), (0.03, 0.0, -r), (0.06, 0.3, -r), (0.09, 0.5, -r)]
    best = None
    for x0 in starts:
        res = minimize(loss, x0, method="Nelder-Mead",
                       options=dict(xatol=1e-7, fatol=1e-11, maxiter=1200))
        if best is None or res.fun < best.fun:
            best = res
    f, s, t = best.x
    return float(f), float(s), float(t)
