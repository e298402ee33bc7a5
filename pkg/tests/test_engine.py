import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gofperm import (
    Covariate,
    Dataset,
    DegenerateVariance,
    FullModel,
    NoTraces,
    SWSimulation,
    Subset,
    TestSpec,
    TooLarge,
    WildBootstrap,
    envelope,
    exhaustive_test,
    fit_ols,
    permutation_pvalue,
    run_test,
    run_tests,
)
from gofperm.exceptions import InvalidParams
from gofperm.nullgen import ResidualBootstrap, PermuteRawData

from .conftest import random_dataset


def test_quadratic_lack_of_fit_detected():
    x = np.linspace(0, 1, 100)
    data = Dataset.from_covariates(x**2, x)
    for seed in range(10):
        for stat in ("ks", "cvm"):
            res = run_test(data, TestSpec(statistic=stat, n_perms=1000, master_seed=seed))
            assert res.p_value <= 0.01


def test_noiseless_linear_data_rejected():
    x = np.linspace(0, 1, 20)
    with pytest.raises(DegenerateVariance):
        run_test(Dataset.from_covariates(2 + 3 * x, x), TestSpec(n_perms=10))


def test_pvalue_formula_k1():
    assert permutation_pvalue(1.0, [0.5]) == 0.5
    assert permutation_pvalue(1.0, [1.0]) == 1.0
    assert permutation_pvalue(1.0, [2.0]) == 1.0


@settings(max_examples=100, deadline=None)
@given(
    st.floats(0, 10, allow_nan=False),
    st.lists(st.floats(0, 10, allow_nan=False), min_size=1, max_size=200),
)
def test_pvalue_formula_and_monotonicity(t, reps):
    p = permutation_pvalue(t, reps)
    K = len(reps)
    assert p == (1 + sum(r >= t for r in reps)) / (K + 1)
    assert 1 / (K + 1) <= p <= 1
    assert permutation_pvalue(t + 0.5, reps) <= p


def test_result_invariants():
    rng = np.random.default_rng(41)
    data = random_dataset(rng, 40)
    res = run_tests(data, TestSpec(n_perms=300, master_seed=9, collect_traces=5))
    for name, r in res.items():
        assert r.statistic == name == r.spec.statistic
        assert r.t_replicates.shape == (300,)
        assert r.p_value == (1 + np.count_nonzero(r.t_replicates >= r.t_observed)) / 301
        assert len(r.replicate_traces) == 5
    # the two statistics share replicates
    assert res["ks"].replicate_traces is res["cvm"].replicate_traces
    single = run_test(data, TestSpec(statistic="ks", n_perms=300, master_seed=9))
    np.testing.assert_array_equal(single.t_replicates, res["ks"].t_replicates)


def test_traces_match_replicate_statistics():
    rng = np.random.default_rng(42)
    data = random_dataset(rng, 25)
    from gofperm import cvm_statistic, ks_statistic

    res = run_tests(data, TestSpec(n_perms=50, master_seed=3, collect_traces=50))
    for k, proc in enumerate(res["ks"].replicate_traces):
        assert ks_statistic(proc) == pytest.approx(res["ks"].t_replicates[k], rel=1e-12)
        assert cvm_statistic(proc) == pytest.approx(res["cvm"].t_replicates[k], rel=1e-12)


def test_deterministic_and_worker_independent():
    rng = np.random.default_rng(43)
    data = random_dataset(rng, 500)
    spec = TestSpec(ordering=Subset([1]), n_perms=2000, master_seed=77)
    base = run_tests(data, spec, workers=1)
    for workers in (2, 4, 8):
        other = run_tests(data, spec, workers=workers)
        for s in base:
            np.testing.assert_array_equal(other[s].t_replicates, base[s].t_replicates)
            assert other[s].p_value == base[s].p_value


def test_identity_permutation_reproduces_observed():
    rng = np.random.default_rng(44)
    data = random_dataset(rng, 7)
    for ordering in (FullModel(), Covariate(1), Subset([1, 2])):
        res = exhaustive_test(data, ordering=ordering, statistic="ks")
        assert res.t_replicates[0] == res.t_observed  # lexicographic order: identity first


def test_affine_invariance():
    rng = np.random.default_rng(45)
    data = random_dataset(rng, 60)
    spec = TestSpec(n_perms=500, master_seed=5)
    base = run_tests(data, spec)
    moved = run_tests(data.with_response(3.0 + 2.5 * data.y), spec)
    for s in base:
        assert moved[s].p_value == base[s].p_value
        assert moved[s].t_observed == pytest.approx(base[s].t_observed, rel=1e-10)
        np.testing.assert_allclose(moved[s].t_replicates, base[s].t_replicates, rtol=1e-10)


def test_exhaustive_n3_counts():
    data = Dataset.from_covariates([0.3, 1.9, 1.2], [0.0, 1.0, 2.5])
    res = exhaustive_test(data)
    assert res.n_replicates == 6
    assert res.exhaustive
    assert res.p_value >= 1 / 6


def test_exhaustive_total_ties():
    # residual space is one-dimensional; every permutation gives +-v, so |W| is invariant
    x = np.array([0.0, 1.0, 2.0])
    y = np.array([1.0, -2.0, 1.0])  # already orthogonal to 1 and x
    data = Dataset.from_covariates(y, x)
    for stat in ("ks", "cvm"):
        res = exhaustive_test(data, ordering=Covariate(1), statistic=stat)
        assert res.p_value == 1.0


def test_exhaustive_too_large():
    rng = np.random.default_rng(46)
    with pytest.raises(TooLarge):
        exhaustive_test(random_dataset(rng, 9))


def test_exhaustive_vs_random_n6():
    rng = np.random.default_rng(47)
    data = random_dataset(rng, 6, k=1)
    K = 5000
    for stat in ("ks", "cvm"):
        exact = exhaustive_test(data, statistic=stat).p_value
        approx = run_test(data, TestSpec(statistic=stat, n_perms=K, master_seed=8)).p_value
        assert abs(approx - exact) <= 3 * math.sqrt(exact * (1 - exact) / K) + 1e-12


def test_envelope():
    rng = np.random.default_rng(48)
    data = random_dataset(rng, 30)
    res = run_test(data, TestSpec(n_perms=20, master_seed=1, collect_traces=4))
    table = envelope(res)
    assert list(table.columns) == ["replicate_id", "key", "cum"]
    assert len(table) == res.observed_process.m + sum(p.m for p in res.replicate_traces)
    obs = table[table.replicate_id == 0]
    np.testing.assert_array_equal(obs.key.to_numpy(), res.observed_process.keys)
    np.testing.assert_array_equal(obs.cum.to_numpy(), res.observed_process.cum)
    assert sorted(table.replicate_id.unique()) == [0, 1, 2, 3, 4]
    with pytest.raises(NoTraces):
        envelope(run_test(data, TestSpec(n_perms=20)))


def test_spec_validation():
    with pytest.raises(InvalidParams):
        TestSpec(n_perms=0)
    with pytest.raises(InvalidParams):
        TestSpec(n_perms=5, collect_traces=6)
    with pytest.raises(InvalidParams):
        TestSpec(statistic="ad")


@pytest.mark.parametrize(
    "method", [PermuteRawData(), SWSimulation(), WildBootstrap(), WildBootstrap("mammen"), ResidualBootstrap()]
)
def test_other_null_methods_run(method):
    rng = np.random.default_rng(49)
    data = random_dataset(rng, 40)
    res = run_tests(data, TestSpec(method=method, n_perms=200, master_seed=2))
    for r in res.values():
        assert 1 / 201 <= r.p_value <= 1
        assert np.all(np.isfinite(r.t_replicates))


def test_degenerate_replicate_contributes_zero():
    # y takes two values; raw permutations can land on an exact fit
    x = np.array([0.0, 0.0, 1.0, 1.0, 2.0])
    y = np.array([0.0, 1.0, 0.0, 1.0, 0.0])
    data = Dataset.from_covariates(y, np.column_stack([x, x**2]))
    res = run_test(data, TestSpec(method=PermuteRawData(), n_perms=200, master_seed=1, statistic="ks"))
    assert np.all(np.isfinite(res.t_replicates))
    assert np.all(res.t_replicates >= 0)


def test_reorder_by_original_option():
    rng = np.random.default_rng(50)
    data = random_dataset(rng, 80)
    a = run_test(data, TestSpec(n_perms=300, master_seed=4))
    b = run_test(data, TestSpec(n_perms=300, master_seed=4, reorder_by_original=True))
    assert a.t_observed == b.t_observed
    assert not np.array_equal(a.t_replicates, b.t_replicates)
    # covariate ordering does not depend on the fit, so the flag is a no-op there
    c = run_test(data, TestSpec(ordering=Covariate(1), n_perms=300, master_seed=4))
    d = run_test(data, TestSpec(ordering=Covariate(1), n_perms=300, master_seed=4, reorder_by_original=True))
    np.testing.assert_array_equal(c.t_replicates, d.t_replicates)


@pytest.mark.slow
def test_null_pvalues_are_super_uniform():
    from gofperm.simlab import ScenarioSpec, run_study

    sc = ScenarioSpec("NullNormal", 50, {"beta1": 0.25, "beta2": 0.25, "sigma2": 0.25}, seed=606)
    res = run_study(sc, TestSpec(n_perms=200), 1000, (0.01, 0.05, 0.1))
    for s in res.statistics:
        for a in (0.01, 0.05, 0.1):
            se = math.sqrt(a * (1 - a) / 1000)
            assert abs(res.rate(s, a) - a) <= 3 * se, (s, a, res.rate(s, a))


def _growth(n, draws=50):
    from gofperm.simlab import ScenarioSpec, generate
    from gofperm import build_process, ks_statistic, cvm_statistic

    ks, cvm = [], []
    for r in range(draws):
        sc = ScenarioSpec("QuadraticOmission", n, {"beta1": 0.25, "beta3": 1.0, "sigma2": 0.1}, seed=1000 * n + r)
        data = generate(sc)
        fit = fit_ols(data)
        proc = build_process(fit.residuals, fit.fitted, fit.sigma_hat)
        ks.append(ks_statistic(proc))
        cvm.append(cvm_statistic(proc))
    return np.mean(ks), np.mean(cvm)


def test_growth_under_alternative():
    ks1, cvm1 = _growth(1000)
    ks2, cvm2 = _growth(2000)
    assert abs((ks2 / math.sqrt(2000)) / (ks1 / math.sqrt(1000)) - 1) <= 0.15
    # the CvM functional is quadratic in W, so it stabilises after dividing by n
    assert abs((cvm2 / 2000) / (cvm1 / 1000) - 1) <= 0.15
