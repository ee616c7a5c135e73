"""Exit criteria for the package, each at its stated tolerance.

A PASS/FAIL line per criterion is printed in the terminal summary.
Runtime is about a minute on a laptop (the full default grid is run twice).
"""
import numpy as np
import pytest

from conftest import record_criterion
from rankope import (
    ExperimentGrid,
    PositionBiasCurve,
    Ranking,
    RankPropensities,
    Sampler,
    Scenario,
    SwapPolicy,
    UserModel,
    exhaustive_oracle,
    interpol_weight,
    ip_weight,
    pbm_weight,
    power_curve,
    run_cell,
    run_grid,
    toy_scenario,
    true_value,
)
from rankope.io import write_results

N = 5000
R = 500
WINDOWS = tuple(range(11))


def check(number, name, ok, detail=""):
    record_criterion(number, name, bool(ok), detail)
    assert ok, f"criterion {number} ({name}) failed: {detail}"


@pytest.fixture(scope="module")
def toy_cells():
    grid = ExperimentGrid((1.0, 1.8), (0.5, 0.8, 0.95), WINDOWS, n=N, replications=R, base_seed=0)
    cells = run_grid(toy_scenario(), grid)
    return {(c.exponent, c.stay_prob, c.window): c for c in cells}


def series(cells, exponent, stay_prob, attr):
    return np.array([getattr(cells[(exponent, stay_prob, t)], attr) for t in WINDOWS])


def test_1_ground_truth():
    scenario = toy_scenario()
    value = true_value(scenario.target, scenario.user)
    check(1, "ground truth", value == 2.0, f"true_value={value!r}")


def test_2_unbiased_with_true_curve(toy_cells):
    worst = 0.0
    failures = []
    for q in (0.5, 0.8, 0.95):
        for t in WINDOWS:
            c = toy_cells[(1.0, q, t)]
            z = abs(c.mean_estimate - 2.0) / c.std_error
            worst = max(worst, z)
            if z > 3.0:
                failures.append((q, t, round(z, 2)))
    check(2, "unbiasedness", not failures, f"max |z|={worst:.2f} over 33 cells; failures={failures}")


def _k3(q, sampler, target):
    return Scenario(
        user=UserModel((1.0, 0.3, 0.7), PositionBiasCurve((1.0, 0.6, 0.3))),
        logging=SwapPolicy(Ranking((2, 0, 1)), q, sampler),
        target=Ranking(target),
    )


def test_3_exactness_oracle():
    worst = 0.0
    for sampler in Sampler:
        for q in (0.5, 0.8, 0.95, 1.0):
            # deterministic logging only supports its own ranking
            targets = [(2, 0, 1)] if q == 1.0 else [(2, 0, 1), (1, 2, 0)]
            for target in targets:
                scenario = _k3(q, sampler, target)
                truth = true_value(scenario.target, scenario.user)
                for t in (0, 1, 2):
                    worst = max(worst, abs(exhaustive_oracle(scenario, t) - truth))

    z_max = 0.0
    checks = [(_k3(0.8, s, (1, 2, 0)), 2.0, t) for s in Sampler for t in (0, 1, 2)]
    checks += [(toy_scenario(0.95, Sampler.CYCLIC_SHIFT), 1.8, t) for t in (1, 3, 10)]
    for scenario, exponent, t in checks:
        exact = exhaustive_oracle(scenario, t, power_curve(scenario.user.true_curve, exponent))
        cell = run_cell(scenario, exponent, scenario.stay_prob, t, n=N, replications=R, base_seed=100)
        z_max = max(z_max, abs(cell.mean_estimate - exact) / cell.std_error)
    check(
        3,
        "exactness oracle",
        worst <= 1e-12 and z_max <= 4.0,
        f"max |oracle - truth|={worst:.2e}; misspecified MC vs oracle max |z|={z_max:.2f}",
    )


def test_4_u_shape(toy_cells):
    mse = series(toy_cells, 1.8, 0.95, "mse")
    best = int(np.argmin(mse))
    ok = 1 <= best <= 6 and mse[best] < mse[0] and mse[best] < mse[10]
    check(4, "U-shape (exponent 1.8, q=0.95)", ok,
          f"argmin T={best}; MSE(0)={mse[0]:.4f} MSE(1)={mse[1]:.4f} MSE(2)={mse[2]:.4f} "
          f"MSE(10)={mse[10]:.4f}")


def test_5_bias_variance(toy_cells):
    identity_gap = max(abs(c.mse - (c.bias**2 + c.variance)) for c in toy_cells.values())
    bias2 = series(toy_cells, 1.8, 0.95, "bias") ** 2
    var = series(toy_cells, 1.8, 0.95, "variance")
    # smallest T* with bias^2 non-decreasing on [T*, 10]
    t_star = 10
    while t_star > 0 and bias2[t_star - 1] <= bias2[t_star]:
        t_star -= 1
    dominated = all(bias2[t] > var[t] for t in range(3, 11))
    ok = identity_gap <= 1e-10 and t_star <= 6 and dominated
    check(5, "bias-variance decomposition", ok,
          f"identity gap={identity_gap:.1e}; T*={t_star}; bias^2>variance for T>=3: {dominated}")


def test_6a_strong_randomization_favours_ipm(toy_cells):
    mse = series(toy_cells, 1.8, 0.5, "mse")
    ok = all(mse[0] <= mse[t] for t in range(2, 11))
    check("6a", "q=0.5: IPM beats every T>=2", ok, f"MSE(0)={mse[0]:.4f} min MSE(T>=2)={mse[2:].min():.4f}")


def test_6b_weak_randomization_favours_interpolation(toy_cells):
    mse = series(toy_cells, 1.8, 0.95, "mse")
    ok = any(mse[t] < mse[0] for t in range(2, 7))
    check("6b", "q=0.95: some T in 2..6 beats IPM", ok,
          f"MSE(0)={mse[0]:.4f} MSE(2..6)={np.round(mse[2:7], 4).tolist()}")


def test_7_limit_equivalences():
    rng = np.random.default_rng(2024)
    n_inputs = 10_000
    zero_gap = full_gap = 0.0
    for _ in range(n_inputs):
        K = int(rng.integers(2, 11))
        m = np.zeros((K, K))
        for w in rng.dirichlet(np.ones(4)):
            m[np.arange(K), rng.permutation(K)] += w
        m = 0.9 * m + 0.1 / K
        props = RankPropensities(m)
        curve = PositionBiasCurve(tuple(rng.uniform(0.01, 1.0, size=K)))
        item, target, logged = (int(v) for v in rng.integers(0, K, size=3))
        zero_gap = max(zero_gap, abs(interpol_weight(item, target, logged, 0, curve, props)
                                     - ip_weight(item, target, logged, props)))
        full_gap = max(full_gap, abs(interpol_weight(item, target, logged, K - 1, curve, props)
                                     - pbm_weight(target, logged, curve)))
    check(7, "limit equivalences", zero_gap <= 1e-15 and full_gap <= 1e-15,
          f"{n_inputs} inputs; max gap T=0 vs IPM {zero_gap:.1e}, T=K-1 vs PBM {full_gap:.1e}")


def test_8_determinism(tmp_path):
    grid = ExperimentGrid(base_seed=7)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_results(run_grid(toy_scenario(), grid, workers=1), a)
    write_results(run_grid(toy_scenario(), grid, workers=2), b)
    lines = len(a.read_text().splitlines())
    check(8, "determinism", a.read_bytes() == b.read_bytes() and lines == 793,
          f"{lines - 1} cells, workers 1 vs 2 byte-identical: {a.read_bytes() == b.read_bytes()}")
