import math

import numpy as np
import pytest

from gofperm import TestSpec, fit_ols
from gofperm.exceptions import InvalidParams
from gofperm.simlab import FAMILIES, ScenarioSpec, generate, rep_seeds, run_study

from . import studies


def true_mean(data, p, family):
    x = data.X[:, 1:]
    if x.shape[1] == 2:
        return p["beta0"] + p["beta1"] * x[:, 0] + p["beta2"] * x[:, 1]
    return p["beta0"] + x @ [p[f"beta{j}"] for j in range(1, 6)]


def test_noiseless_null_is_exact_fit():
    data = generate(ScenarioSpec("NullNormal", 50, {"beta1": 0.5, "beta2": 0.25, "sigma2": 0.0}, seed=1))
    fit = fit_ols(data)
    np.testing.assert_allclose(fit.residuals, 0.0, atol=1e-13)
    assert fit.is_degenerate()


def test_gamma_error_moments():
    sc = ScenarioSpec("NullGamma", 10**6, {"beta1": 0.25, "beta2": 0.25, "shape": 1.0, "scale": 1.0}, seed=2)
    data = generate(sc)
    eps = data.y - true_mean(data, sc.params, sc.family)
    assert abs(eps.mean()) < 0.005
    assert eps.var() == pytest.approx(1.0, rel=0.02)


def test_quadratic_with_zero_effect_is_null_normal():
    a = generate(ScenarioSpec("QuadraticOmission", 80, {"beta1": 0.5, "beta3": 0.0, "sigma2": 0.1}, seed=3))
    b = generate(ScenarioSpec("NullNormal", 80, {"beta1": 0.5, "beta2": 0.25, "sigma2": 0.1}, seed=3))
    np.testing.assert_array_equal(a.y, b.y)
    np.testing.assert_array_equal(a.X, b.X)


def test_interaction_with_zero_effect_is_null_normal():
    a = generate(ScenarioSpec("InteractionOmission", 80, {"beta1": 0.5, "beta3": 0.0, "sigma2": 0.1}, seed=3))
    b = generate(ScenarioSpec("NullNormal", 80, {"beta1": 0.5, "beta2": 0.25, "sigma2": 0.1}, seed=3))
    np.testing.assert_array_equal(a.y, b.y)


def test_heteroscedastic_errors_scale_with_x1():
    sc = ScenarioSpec("NullHetero", 200_000, {"beta1": 0.25, "beta2": 0.25, "theta": 0.5}, seed=4)
    data = generate(sc)
    eps = data.y - true_mean(data, sc.params, sc.family)
    x1 = data.X[:, 1]
    lo, hi = eps[x1 < 0.1], eps[x1 > 0.9]
    # sd is 1 + 0.5 x1: about 1.025 near 0, 1.475 near 1
    assert lo.std() == pytest.approx(1.025, rel=0.03)
    assert hi.std() == pytest.approx(1.475, rel=0.03)


def test_designs_and_covariates():
    for fam, (k, required, _) in FAMILIES.items():
        params = {r: 0.5 for r in required}
        data = generate(ScenarioSpec(fam, 30, params, seed=5))
        assert data.X.shape == (30, k + 1)
        assert np.all((data.X[:, 1:] >= 0) & (data.X[:, 1:] <= 1))
        assert data.column_names[1:] == tuple(f"x{j}" for j in range(1, k + 1))


def test_partial_designs_omit_the_extra_term():
    sc = ScenarioSpec("PartialQuadratic5", 40, {"beta6": 1.0, "sigma2": 0.0}, seed=6)
    data = generate(sc)
    x = data.X[:, 1:]
    np.testing.assert_allclose(data.y, -0.1 + 0.25 * x.sum(axis=1) + x[:, 0] ** 2, atol=1e-14)
    sc = ScenarioSpec("PartialInteraction5", 40, {"beta6": 1.0, "sigma2": 0.0}, seed=6)
    data = generate(sc)
    x = data.X[:, 1:]
    np.testing.assert_allclose(data.y, -0.1 + 0.25 * x.sum(axis=1) + x[:, 0] * x[:, 1], atol=1e-14)


def test_invalid_scenarios():
    with pytest.raises(InvalidParams) as err:
        ScenarioSpec("Nope", 50, {})
    assert err.value.field == "family"
    with pytest.raises(InvalidParams) as err:
        ScenarioSpec("NullNormal", 50, {"beta1": 0.1, "beta2": 0.1})
    assert err.value.field == "params.sigma2"
    with pytest.raises(InvalidParams):
        ScenarioSpec("NullNormal", 3, {"beta1": 0.1, "beta2": 0.1, "sigma2": 1})
    with pytest.raises(InvalidParams):
        ScenarioSpec("NullGamma", 30, {"beta1": 0.1, "beta2": 0.1, "shape": 0.0})
    with pytest.raises(InvalidParams):
        ScenarioSpec("NullNormal", 30, {"beta1": 0.1, "beta2": 0.1, "sigma2": 1, "beta7": 2})


def test_rep_seeds_are_stable_and_distinct():
    assert rep_seeds(1, 0) == rep_seeds(1, 0)
    assert len({rep_seeds(1, r) for r in range(100)}) == 100


def test_single_rep_rates_are_binary():
    sc = ScenarioSpec("NullNormal", 40, {"beta1": 0.25, "beta2": 0.25, "sigma2": 0.25}, seed=7)
    res = run_study(sc, TestSpec(n_perms=50), 1)
    assert set(np.unique(res.rejection_rates)) <= {0.0, 1.0}


def test_study_is_deterministic_and_worker_independent():
    sc = ScenarioSpec("NullGamma", 30, {"beta1": 0.25, "beta2": 0.25, "shape": 2.0}, seed=8)
    a = run_study(sc, TestSpec(n_perms=50), 20, workers=1)
    b = run_study(sc, TestSpec(n_perms=50), 20, workers=4)
    np.testing.assert_array_equal(a.p_values, b.p_values)
    np.testing.assert_allclose(a.mc_stderr, np.sqrt(a.rejection_rates * (1 - a.rejection_rates) / 20))


def test_mcresult_outputs(tmp_path):
    sc = ScenarioSpec("NullNormal", 40, {"beta1": 0.25, "beta2": 0.25, "sigma2": 0.25}, seed=9)
    res = run_study(sc, TestSpec(n_perms=30), 10, (0.05, 0.1))
    frame = res.to_frame()
    assert list(frame.columns) == ["scenario", "statistic", "alpha", "rate", "stderr", "n_reps"]
    assert len(frame) == 4
    res.to_csv(tmp_path / "r.csv")
    res.to_json(tmp_path / "r.json")
    import json

    summary = json.loads((tmp_path / "r.json").read_text())
    assert summary["scenario"]["family"] == "NullNormal"
    assert summary["rates"]["cvm"] == [float(r) for r in res.rejection_rates[1]]


def test_heteroscedastic_study_records_rates():
    sc = ScenarioSpec("NullHetero", 100, {"beta1": 0.25, "beta2": 0.25, "theta": 0.5}, seed=10)
    res = run_study(sc, TestSpec(n_perms=100), 50)
    assert np.all((res.rejection_rates >= 0) & (res.rejection_rates <= 1))


# ------------------------------------------------------------------ #
# Scaled-down Monte-Carlo properties (1,000 reps x 200 permutations)
# ------------------------------------------------------------------ #


def null_se(alpha, reps=studies.REPS):
    return math.sqrt(alpha * (1 - alpha) / reps)


@pytest.mark.slow
def test_null_normal_size_example():
    res = studies.size_study("NullNormal", beta1=0.25, beta2=0.25, sigma2=0.25)
    for s in res.statistics:
        assert 0.035 <= res.rate(s, 0.05) <= 0.065


@pytest.mark.slow
@pytest.mark.parametrize("shape", [1.0, 10.0])
def test_gamma_error_size(shape):
    res = studies.size_study("NullGamma", beta1=0.25, beta2=0.25, shape=shape)
    for s in res.statistics:
        assert 0.035 <= res.rate(s, 0.05) <= 0.065, (s, res.rate(s, 0.05))


@pytest.mark.slow
def test_quadratic_power_exceeds_null():
    alt = studies.power_study("QuadraticOmission", 1.0, 500)
    null = studies.power_study("QuadraticOmission", 0.0, 500)
    for s in alt.statistics:
        assert alt.rate(s, 0.05) - null.rate(s, 0.05) >= 0.3


@pytest.mark.slow
@pytest.mark.parametrize("family", ["QuadraticOmission", "InteractionOmission"])
def test_power_monotone_in_effect_and_n(family):
    grid = {(b, n): studies.power_study(family, b, n) for b in (0.0, 0.5, 1.0) for n in (100, 500)}
    for s in ("ks", "cvm"):
        for a in studies.ALPHAS:
            for n in (100, 500):
                for lo, hi in ((0.0, 0.5), (0.5, 1.0)):
                    r_lo, r_hi = grid[lo, n], grid[hi, n]
                    slack = 2 * max(r_lo.stderr(s, a), r_hi.stderr(s, a))
                    assert r_hi.rate(s, a) >= r_lo.rate(s, a) - slack
            for b in (0.5, 1.0):
                r_lo, r_hi = grid[b, 100], grid[b, 500]
                slack = 2 * max(r_lo.stderr(s, a), r_hi.stderr(s, a))
                assert r_hi.rate(s, a) >= r_lo.rate(s, a) - slack


@pytest.mark.slow
def test_partial_check_example_one():
    full = studies.partial_study("PartialQuadratic5", 0.5, "full")
    x1 = studies.partial_study("PartialQuadratic5", 0.5, 1)
    x2 = studies.partial_study("PartialQuadratic5", 0.5, 2)
    for a in studies.ALPHAS:
        assert x1.rate("cvm", a) > full.rate("cvm", a)
        assert abs(x2.rate("cvm", a) - a) <= 3 * null_se(a)


@pytest.mark.slow
def test_partial_check_example_two():
    for j in (1, 2, 3):
        single = studies.partial_study("PartialInteraction5", 1.0, j)
        for a in studies.ALPHAS:
            assert abs(single.rate("cvm", a) - a) <= 3 * null_se(a), (j, a)
    right = studies.partial_study("PartialInteraction5", 1.0, (1, 2))
    wrong = studies.partial_study("PartialInteraction5", 1.0, (3, 4))
    for a in studies.ALPHAS:
        assert right.rate("cvm", a) > a + 3 * null_se(a)
        assert abs(wrong.rate("cvm", a) - a) <= 3 * null_se(a)
