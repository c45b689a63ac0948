import math

import numpy as np
import pytest

from cvworkbench.numerics import (
    ConfigurationError,
    CutoffTooSmallError,
    FockVector,
    GridTooSmallError,
    PositionWave,
    QGrid,
    annihilation_matrix,
    default_grid,
    fock_to_position,
    fock_unitary_exp,
    hermite_functions,
    hermite_poly,
    integrate,
    number_matrix,
    position_to_fock,
    spectral_derivative,
)
from cvworkbench.states import trisqueeze_generator


def vacuum_wave(grid):
    q = grid.points
    return PositionWave(grid, np.pi ** -0.25 * np.exp(-q * q / 2)).normalized()


class TestQGrid:
    def test_points_symmetric_exactly(self):
        g = QGrid(12.0, 4096)
        assert np.all(g.points == -g.points[::-1])
        assert g.points[0] == -12.0 and g.points[-1] == 12.0

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            QGrid(12.0, 3)  # odd
        with pytest.raises(ConfigurationError):
            QGrid(-1.0, 64)

    def test_default_grid_scaling(self):
        assert default_grid(0.0).half_extent == pytest.approx(12.0)
        assert default_grid(1.0).half_extent == pytest.approx(8 * np.e + 4)
        # fock demand can dominate
        assert default_grid(0.0, n_fock=120).half_extent == pytest.approx(
            np.sqrt(240) + 6
        )


class TestIntegrate:
    def test_gaussian(self):
        g = QGrid(12.0, 4096)
        val = integrate(np.exp(-g.points ** 2), g)
        assert abs(val - np.sqrt(np.pi)) < 1e-10

    def test_odd_function(self):
        g = QGrid(12.0, 4096)
        val = integrate(g.points * np.exp(-g.points ** 2), g)
        assert abs(val) < 1e-12

    def test_oscillatory_cubic_phase(self):
        # adaptive-quadrature oracle (scipy.integrate.quad, tol 1e-13):
        # int exp(i 0.173 q^3 - q^2/2) dq over [-14, 14]
        oracle = 2.2364200072995626 + 0.0j
        g = QGrid(14.0, 8192)
        val = integrate(np.exp(1j * 0.173 * g.points ** 3 - g.points ** 2 / 2), g)
        assert abs(val - oracle) < 1e-8

    def test_length_mismatch(self):
        g = QGrid(12.0, 4096)
        with pytest.raises(ValueError):
            integrate(np.ones(7), g)


class TestSpectralDerivative:
    def test_gaussian_first_derivative(self):
        g = QGrid(12.0, 4096)
        q = g.points
        wave = vacuum_wave(g)
        deriv = spectral_derivative(wave, order=1)
        expected = -q * wave.values
        inner = np.abs(q) <= 6.0
        assert np.max(np.abs(deriv.values - expected)[inner]) < 1e-8

    def test_gaussian_second_derivative(self):
        g = QGrid(12.0, 4096)
        q = g.points
        wave = vacuum_wave(g)
        deriv = spectral_derivative(wave, order=2)
        expected = (q * q - 1.0) * wave.values
        inner = np.abs(q) <= 6.0
        assert np.max(np.abs(deriv.values - expected)[inner]) < 1e-8

    def test_against_finite_differences(self):
        # 8th-order central differences as an independent oracle
        g = default_grid(0.8)
        q = g.points
        r = 0.8
        wave = PositionWave(g, np.exp(-q * q * np.exp(-2 * r) / 2)).normalized()
        deriv = spectral_derivative(wave, order=1).values
        stencil = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0,
                            4 / 5, -1 / 5, 4 / 105, -1 / 280]) / g.step
        fd = np.zeros_like(wave.values)
        for k, c in zip(range(-4, 5), stencil):
            fd += c * np.roll(wave.values, -k)
        inner = slice(8, g.point_count - 8)
        scale = np.max(np.abs(fd[inner]))
        assert np.max(np.abs(deriv[inner] - fd[inner])) / scale < 1e-6

    def test_twice_first_matches_second(self):
        g = default_grid(0.5)
        q = g.points
        wave = PositionWave(g, (1 + 0.3j * q ** 3) * np.exp(-q * q / 2)).normalized()
        twice = spectral_derivative(spectral_derivative(wave, 1), 1).values
        second = spectral_derivative(wave, 2).values
        inner = np.abs(q) <= g.half_extent / 2
        assert np.max(np.abs(twice - second)[inner]) < 1e-6

    def test_tail_violation_reports_extent(self):
        g = QGrid(3.0, 256)
        wave = PositionWave(g, np.exp(-g.points ** 2 / 8))
        with pytest.raises(GridTooSmallError, match="extend to at least"):
            spectral_derivative(wave, 1)

    def test_invalid_order(self):
        g = QGrid(12.0, 512)
        with pytest.raises(ValueError):
            spectral_derivative(vacuum_wave(g), order=3)


class TestHermite:
    def test_h0_is_one(self):
        q = np.linspace(-3, 3, 17)
        assert np.all(hermite_poly(0, q) == 1.0)

    def test_h3_closed_form(self):
        assert hermite_poly(3, np.array([2.0]))[0] == pytest.approx(40.0)

    def test_orthogonality(self):
        g = QGrid(12.0, 4096)
        q = g.points
        weight = np.exp(-q * q)
        diag = [np.sqrt(np.pi) * 2.0 ** n * math.factorial(n) for n in range(11)]
        for m in range(11):
            hm = hermite_poly(m, q)
            for n in range(m, 11):
                val = integrate(hm * hermite_poly(n, q) * weight, g).real
                expected = diag[n] if m == n else 0.0
                scale = max(1.0, np.sqrt(diag[m] * diag[n]))
                assert abs(val - expected) <= 1e-8 * scale

    def test_degree_cap(self):
        with pytest.raises(ConfigurationError):
            hermite_poly(65, np.array([0.0]))

    def test_hermite_functions_match_polynomials(self):
        q = np.linspace(-5, 5, 101)
        table = hermite_functions(12, q)
        for n in (0, 1, 5, 12):
            direct = (
                np.pi ** -0.25
                / np.sqrt(2.0 ** n * math.factorial(n))
                * hermite_poly(n, q)
                * np.exp(-q * q / 2)
            )
            assert np.max(np.abs(table[n] - direct)) < 1e-10

    def test_stable_at_high_degree(self):
        # H_n * gaussian overflows around n ~ 30; the normalized recurrence must not
        table = hermite_functions(120, np.linspace(-20, 20, 64))
        assert np.all(np.isfinite(table))


class TestFockTransforms:
    def test_vacuum_synthesis(self):
        g = QGrid(12.0, 4096)
        wave = fock_to_position(FockVector([1.0]), g)
        assert np.max(np.abs(wave.values - vacuum_wave(g).values)) < 1e-10

    def test_single_photon_synthesis(self):
        g = QGrid(12.0, 4096)
        wave = fock_to_position(FockVector([0.0, 1.0]), g)
        expected = np.pi ** -0.25 * np.sqrt(2.0) * g.points * np.exp(-g.points ** 2 / 2)
        assert np.max(np.abs(wave.values - expected)) < 1e-10

    def test_round_trip_random_vector(self, rng):
        g = QGrid(14.0, 4096)
        c = rng.standard_normal(11) + 1j * rng.standard_normal(11)
        fock = FockVector(c).normalized()
        back = position_to_fock(fock_to_position(fock, g), 10)
        assert np.max(np.abs(back.coefficients - fock.coefficients)) < 1e-8

    def test_projection_of_vacuum(self):
        g = QGrid(12.0, 4096)
        coeffs = position_to_fock(vacuum_wave(g), 8).coefficients
        assert abs(coeffs[0] - 1.0) < 1e-8
        assert np.max(np.abs(coeffs[1:])) < 1e-10

    def test_squeezed_vacuum_parity(self):
        g = default_grid(0.5)
        q = g.points
        wave = PositionWave(g, np.exp(-q * q * np.exp(-1.0) / 2)).normalized()
        coeffs = position_to_fock(wave, 9).coefficients
        assert np.max(np.abs(coeffs[1::2])) < 1e-10

    def test_cubic_phase_coefficients_against_quadrature_oracle(self, cubic_grid):
        # scipy.integrate.quad oracle (tol 1e-13) for <n|phi_c> at a=0.173, r=0.3
        oracle = np.array([
            0.9348819856507131 + 0.0j,
            0.22496914420057595j,
            0.010296659011546494 + 0.0j,
            0.168612276264086j,
        ])
        q = cubic_grid.points
        r = 0.3
        vals = (np.exp(r) * np.sqrt(np.pi)) ** -0.5 * np.exp(
            1j * 0.173 * q ** 3 - q * q * np.exp(-2 * r) / 2
        )
        wave = PositionWave(cubic_grid, vals).normalized()
        coeffs = position_to_fock(wave, 3).coefficients
        assert np.max(np.abs(coeffs - oracle)) < 1e-8

    def test_extent_precondition(self):
        g = QGrid(6.0, 512)
        with pytest.raises(GridTooSmallError):
            fock_to_position(FockVector(np.ones(40) / np.sqrt(40)), g)


class TestFockUnitaryExp:
    def test_zero_generator_is_identity(self):
        vec = FockVector(np.array([0.6, 0.8j, 0.0, 0.0, 0.0]))
        out = fock_unitary_exp(np.zeros((5, 5)), vec)
        assert np.max(np.abs(out.coefficients - vec.coefficients)) < 1e-14

    def test_number_operator_phase(self):
        dim = 12
        gen = 1j * 0.7 * number_matrix(dim - 1)
        vec = np.zeros(dim, dtype=complex)
        vec[1] = 1.0
        out = fock_unitary_exp(gen, FockVector(vec))
        assert abs(out.coefficients[1] - np.exp(1j * 0.7)) < 1e-12

    def test_rejects_non_anti_hermitian(self):
        gen = np.eye(4)
        with pytest.raises(ValueError, match="anti-Hermitian"):
            fock_unitary_exp(gen, FockVector(np.array([1.0, 0, 0, 0])))

    def test_trisqueeze_cutoff_doubling_oracle(self):
        vac120 = np.zeros(121, dtype=complex)
        vac120[0] = 1.0
        out120 = fock_unitary_exp(trisqueeze_generator(0.05, 120), FockVector(vac120))
        vac240 = np.zeros(241, dtype=complex)
        vac240[0] = 1.0
        out240 = fock_unitary_exp(trisqueeze_generator(0.05, 240), FockVector(vac240))
        overlap = abs(np.vdot(out120.coefficients, out240.coefficients[:121]))
        assert abs(overlap - 1.0) < 1e-8

    def test_leakage_raises_cutoff_error(self):
        vac = np.zeros(41, dtype=complex)
        vac[0] = 1.0
        with pytest.raises(CutoffTooSmallError):
            fock_unitary_exp(trisqueeze_generator(0.1, 40), FockVector(vac))

    def test_norm_preserved(self):
        gen = trisqueeze_generator(0.05, 120)
        vac = np.zeros(121, dtype=complex)
        vac[0] = 1.0
        out = fock_unitary_exp(gen, FockVector(vac))
        assert abs(np.sqrt(out.norm_squared()) - 1.0) < 1e-8


class TestDeterminism:
    def test_bitwise_identical_repeats(self, cubic_grid):
        q = cubic_grid.points
        wave = PositionWave(cubic_grid, np.exp(1j * 0.1 * q ** 3 - q * q / 2)).normalized()
        a = spectral_derivative(wave, 1).values
        b = spectral_derivative(wave, 1).values
        assert np.array_equal(a, b)
        assert integrate(np.abs(wave.values) ** 2, cubic_grid) == integrate(
            np.abs(wave.values) ** 2, cubic_grid
        )


def test_annihilation_matrix_commutator():
    am = annihilation_matrix(30)
    comm = am @ am.conj().T - am.conj().T @ am
    # canonical commutation holds away from the truncation corner
    assert np.max(np.abs(np.diag(comm)[:30] - 1.0)) < 1e-12
