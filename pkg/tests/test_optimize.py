import numpy as np
import pytest

from cvworkbench.metrics import nl_variance
from cvworkbench.numerics import QGrid, default_grid
from cvworkbench.optimize import (
    GATE_FIDELITY_ROWS,
    NL_VARIANCE_ROWS,
    GaBounds,
    GaConfig,
    Objective,
    bloch_spec_from_vector,
    evaluate_table_row,
    optimize_bloch_ga,
    optimize_gaussian,
    _reflect,
    _start_lattice,
)
from cvworkbench.states import GaussianOp, StateSpec, apply_gaussian, build_state

QUICK_GA = GaConfig(population=60, generations=60, stall_generations=20)


@pytest.fixture(scope="module")
def grid():
    fine = default_grid(1.5, n_fock=16)
    return QGrid(fine.half_extent, 2048)


class TestObjective:
    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            Objective("energy_min", a=0.1)

    def test_state_fidelity_needs_target(self):
        with pytest.raises(ValueError):
            Objective("state_fidelity_max", a=0.1)

    def test_loss_sign(self):
        gate = Objective("gate_fidelity_max", a=0.1)
        var = Objective("nl_variance_min", a=0.1)
        assert gate.to_loss(0.9) == -0.9
        assert var.to_loss(0.9) == 0.9
        assert gate.better(0.9, 0.8) and var.better(0.8, 0.9)


class TestStartLattice:
    @pytest.mark.parametrize("dim", [1, 2, 3])
    def test_nine_starts_with_origin(self, dim):
        bounds = [(-2.0, 2.0)] * dim
        starts = _start_lattice(bounds)
        assert len(starts) == 9
        assert any(np.allclose(s, 0.0) for s in starts)
        for s in starts:
            assert np.all(s >= -2.0) and np.all(s <= 2.0)


class TestReflect:
    def test_samples_end_inside(self, rng):
        bounds = [(0.0, np.pi), (-1.5, 1.5)]
        for _ in range(200):
            x = rng.normal(0, 4, size=2)
            y = _reflect(x, bounds)
            assert 0.0 <= y[0] <= np.pi and -1.5 <= y[1] <= 1.5


class TestOptimizeGaussian:
    def test_never_worse_than_baseline(self, grid):
        base = StateSpec(family="operator_truncation", a=0.173, r=0.3)
        objective = Objective("nl_variance_min", a=0.173)
        record = optimize_gaussian(base, objective, dof=("s", "t"), grid=grid)
        raw = nl_variance(build_state(base, grid), 0.173)
        assert record.value <= raw + 1e-12

    def test_record_reevaluates(self, grid):
        base = StateSpec(family="operator_truncation", a=0.173, r=0.3)
        objective = Objective("nl_variance_min", a=0.173)
        record = optimize_gaussian(base, objective, dof=("s", "t"), grid=grid)
        op = GaussianOp(**record.parameters)
        again = nl_variance(apply_gaussian(build_state(base, grid), op), 0.173)
        assert abs(again - record.value) < 1e-9

    def test_deterministic(self, grid):
        base = StateSpec(family="gaussian_squeezed", r=0.2)
        objective = Objective("gate_fidelity_max", a=0.173)
        one = optimize_gaussian(base, objective, grid=grid)
        two = optimize_gaussian(base, objective, grid=grid)
        assert one.value == two.value and one.parameters == two.parameters

    def test_trace_monotone(self, grid):
        base = StateSpec(family="gaussian_squeezed", r=0.2)
        objective = Objective("gate_fidelity_max", a=0.173)
        record = optimize_gaussian(base, objective, grid=grid)
        trace = np.array(record.trace)
        assert np.all(np.diff(trace) <= 0)  # stored as loss, non-increasing

    def test_rejects_empty_dof(self, grid):
        base = StateSpec(family="gaussian_squeezed", r=0.2)
        with pytest.raises(ValueError):
            optimize_gaussian(base, Objective("nl_variance_min", a=0.1), dof=())


class TestBlochGa:
    def test_matches_gaussian_optimizer_at_zero_photons(self, grid):
        # N=0 bloch family == vacuum + squeeze + momentum kick: same search
        # space optimize_gaussian explores through (s, t)
        objective = Objective("gate_fidelity_max", a=0.173)
        ga = optimize_bloch_ga(0, objective, seed=3, config=QUICK_GA, grid=grid)
        direct = optimize_gaussian(
            StateSpec(family="gaussian_squeezed", r=0.0), objective,
            dof=("s", "t"), grid=grid,
        )
        assert abs(ga.value - direct.value) < 1e-3

    def test_deterministic_given_seed(self, grid):
        objective = Objective("nl_variance_min", a=0.173)
        one = optimize_bloch_ga(1, objective, seed=5, config=QUICK_GA, grid=grid)
        two = optimize_bloch_ga(1, objective, seed=5, config=QUICK_GA, grid=grid)
        assert one.value == two.value and one.parameters == two.parameters

    def test_parameters_inside_bounds(self, grid):
        objective = Objective("nl_variance_min", a=0.173)
        record = optimize_bloch_ga(1, objective, seed=5, config=QUICK_GA, grid=grid)
        bounds = GaBounds()
        assert 0.0 <= record.parameters["theta_1"] <= np.pi
        assert 0.0 <= record.parameters["phi_1"] <= 2 * np.pi
        assert bounds.r_b[0] <= record.parameters["r_b"] <= bounds.r_b[1]
        assert bounds.d[0] <= record.parameters["d"] <= bounds.d[1]

    def test_record_reevaluates(self, grid):
        objective = Objective("nl_variance_min", a=0.173)
        record = optimize_bloch_ga(1, objective, seed=5, config=QUICK_GA, grid=grid)
        n = 1
        x = np.array(
            [record.parameters["theta_1"], record.parameters["phi_1"],
             record.parameters["r_b"], record.parameters["d"]]
        )
        wave = build_state(bloch_spec_from_vector(x, n), grid)
        assert abs(nl_variance(wave, 0.173) - record.value) < 1e-9

    def test_single_photon_reaches_published_value(self, grid):
        objective = Objective("nl_variance_min", a=0.173)
        record = optimize_bloch_ga(1, objective, seed=5, config=QUICK_GA, grid=grid)
        assert record.value <= 0.438 + 0.01


class TestTableRows:
    def test_variance_row_zero(self, grid):
        objective = Objective("nl_variance_min", a=0.173)
        value = evaluate_table_row(NL_VARIANCE_ROWS[0], objective, grid=grid)
        assert abs(value - 0.611) <= 0.005

    def test_gate_row_zero(self, grid):
        objective = Objective("gate_fidelity_max", a=0.173)
        value = evaluate_table_row(GATE_FIDELITY_ROWS[0], objective, grid=grid)
        assert abs(value - 0.871) <= 0.01


def test_ga_config_from_mapping():
    cfg = GaConfig.from_mapping({"population": "80", "mutation_sigma": "0.1"})
    assert cfg.population == 80 and cfg.mutation_sigma == 0.1
    assert cfg.generations == GaConfig().generations
