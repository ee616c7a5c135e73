import numpy as np
import pytest

from rankope import (
    ConfigurationError,
    EstimatorConfig,
    ExperimentGrid,
    Family,
    PositionBiasCurve,
    Ranking,
    Sampler,
    Scenario,
    SwapPolicy,
    UserModel,
    estimate,
    exhaustive_oracle,
    power_curve,
    propensity_matrix,
    run_cell,
    run_grid,
    simulate_batch,
    toy_scenario,
    true_value,
)
from rankope import experiments
from rankope.core import weight_matrix


def mini_scenario(q=0.8, sampler=Sampler.CYCLIC_SHIFT, relevance=(1.0, 0.0, 0.0), base=(0, 1, 2), target=(0, 1, 2)):
    return Scenario(
        user=UserModel(relevance, PositionBiasCurve((1.0, 0.6, 0.3))),
        logging=SwapPolicy(Ranking(base), q, sampler),
        target=Ranking(target),
    )


class TestOracle:
    def test_hand_enumeration_misspecified_curve(self):
        # item 0 at target rank 0, T=2 covers every rank so the window probability is 1.
        # shift 0 (p=0.8): weight 1, E[click] 1.0
        # shift 1 (p=0.1): weight 1/0.36, E[click] 0.6
        # shift 2 (p=0.1): weight 1/0.09, E[click] 0.3
        hand = 0.8 * 1.0 + 0.1 * 0.6 / 0.36 + 0.1 * 0.3 / 0.09
        assert hand == pytest.approx(1.3, abs=1e-12)
        scenario = mini_scenario()
        squared = power_curve(scenario.user.true_curve, 2.0)
        assert exhaustive_oracle(scenario, 2, squared) == pytest.approx(hand, abs=1e-12)

    @pytest.mark.parametrize("sampler", list(Sampler))
    @pytest.mark.parametrize("q", [0.5, 0.8, 0.95, 1.0])
    @pytest.mark.parametrize("window", [0, 1, 2])
    def test_true_curve_is_unbiased(self, sampler, q, window):
        # deterministic logging only has support for its own ranking
        target = (2, 0, 1) if q == 1.0 else (1, 2, 0)
        scenario = mini_scenario(q, sampler, relevance=(1.0, 0.3, 0.7), base=(2, 0, 1), target=target)
        truth = true_value(scenario.target, scenario.user)
        assert exhaustive_oracle(scenario, window) == pytest.approx(truth, abs=1e-12)

    @pytest.mark.parametrize("window", [0, 1, 2])
    def test_deterministic_logging_on_target(self, window):
        scenario = mini_scenario(1.0, Sampler.IDENTITY_OR_UNIFORM, relevance=(1.0, 0.5, 0.2))
        bad_curve = PositionBiasCurve((1.0, 0.2, 0.05))
        truth = true_value(scenario.target, scenario.user)
        assert exhaustive_oracle(scenario, window, bad_curve) == pytest.approx(truth, abs=1e-12)

    def test_toy_cyclic_true_curve(self):
        scenario = toy_scenario(0.95, Sampler.CYCLIC_SHIFT)
        for window in range(11):
            assert exhaustive_oracle(scenario, window) == pytest.approx(2.0, abs=1e-12)

    def test_too_many_outcomes(self):
        with pytest.raises(ConfigurationError):
            exhaustive_oracle(toy_scenario(0.95, Sampler.IDENTITY_OR_UNIFORM), 1)


class TestBatchScoring:
    def test_weight_matrix_matches_record_estimate(self, scenario):
        batch = simulate_batch(scenario, 2000, 5)
        records = batch.to_records()
        curve = power_curve(scenario.user.true_curve, 1.4)
        props = propensity_matrix(scenario.logging)
        for family, window in [(Family.PBM, 0), (Family.IPM, 0), (Family.INTERPOL, 0), (Family.INTERPOL, 3)]:
            config = EstimatorConfig(family, window, curve)
            report = estimate(records, scenario.target, config, keep_per_query=True)
            sums = batch.per_query_sums(weight_matrix(scenario.target, config, props))
            np.testing.assert_allclose(sums, report.per_query_sums, rtol=0, atol=1e-12)
            dot = float((weight_matrix(scenario.target, config, props) * batch.click_counts()).sum()) / batch.n
            assert dot == pytest.approx(report.point_estimate, abs=1e-12)


class TestRunCell:
    def test_unbiased_with_true_curve(self, scenario):
        cell = run_cell(scenario, 1.0, 0.8, 3, n=2000, replications=300, base_seed=17)
        assert cell.true_value == 2.0
        assert abs(cell.bias) <= 3 * np.sqrt(cell.variance / cell.replications)

    def test_identical_replications(self, scenario, monkeypatch):
        original = experiments.simulate_batch
        monkeypatch.setattr(experiments, "simulate_batch", lambda sc, n, seed: original(sc, n, 123))
        cell = run_cell(scenario, 1.8, 0.95, 2, n=500, replications=2)
        assert cell.variance == 0.0
        assert cell.mse == pytest.approx(cell.bias**2, abs=1e-15)

    def test_decomposition_identity(self, scenario):
        cells = run_grid(scenario, ExperimentGrid((0.6, 1.8), (0.5, 0.99), (0, 4, 10), n=500, replications=20))
        for c in cells:
            assert c.mse == pytest.approx(c.bias**2 + c.variance, abs=1e-10, rel=0)

    def test_needs_two_replications(self, scenario):
        with pytest.raises(ConfigurationError):
            run_cell(scenario, 1.0, 0.9, 0, n=10, replications=1)


class TestRunGrid:
    def test_single_cell_grid_is_run_cell(self, scenario):
        grid = ExperimentGrid((1.2,), (0.7,), (2,), n=300, replications=10, base_seed=4)
        assert run_grid(scenario, grid) == [run_cell(scenario, 1.2, 0.7, 2, 300, 10, 4)]

    def test_default_grid_size(self):
        assert len(ExperimentGrid()) == 792

    def test_cells_independent_of_grid_shape(self, scenario):
        small = run_grid(scenario, ExperimentGrid((1.8,), (0.9,), (1, 5), n=300, replications=5, base_seed=2))
        big = run_grid(scenario, ExperimentGrid((0.2, 1.8), (0.5, 0.9), (0, 1, 5), n=300, replications=5, base_seed=2))
        lookup = {(c.exponent, c.stay_prob, c.window): c for c in big}
        for c in small:
            assert lookup[(c.exponent, c.stay_prob, c.window)] == c

    def test_sorted_output(self, scenario):
        cells = run_grid(scenario, ExperimentGrid((1.8, 0.2), (0.9, 0.5), (3, 0), n=50, replications=3))
        keys = [(c.exponent, c.stay_prob, c.window) for c in cells]
        assert keys == sorted(keys)
        assert len(cells) == 8

    def test_worker_count_invariance(self, scenario):
        grid = ExperimentGrid((1.0, 1.8), (0.6,), (0, 2, 10), n=400, replications=7, base_seed=3)
        assert run_grid(scenario, grid, workers=1) == run_grid(scenario, grid, workers=3)

    def test_correct_curve_reduces_variance(self, scenario):
        cells = run_grid(scenario, ExperimentGrid((1.0,), (0.95,), (0, 10), n=5000, replications=500))
        by_window = {c.window: c for c in cells}
        assert by_window[10].variance <= by_window[0].variance
