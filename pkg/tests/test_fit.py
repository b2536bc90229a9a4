import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_model, tree_walk_log_density
from rvine.bicop import Family, PairCopula, fit_pair_mle
from rvine.evaluate import RVineModel, make_rng
from rvine.fit import (Correction, Favored, ParameterMap, _IncrementalLoglik, fit_mle,
                       information_criteria, vuong, vuong_from_terms)
from rvine.select import SelectionOptions, fixed_structure_fit, sequential_select
from rvine.study import example_model, true_model


def test_independence_model_has_nothing_to_fit():
    truth = true_model("all-gauss", "const")
    ind = RVineModel.independence(truth.structure)
    report = fit_mle(ind, truth.simulate(100, seed=1))
    assert report.loglik_mle == 0.0 and report.n_params == 0 and report.iterations == 0


def test_bivariate_joint_fit_is_the_pair_fit():
    x = PairCopula(Family.FRANK, 4.0).simulate(500, make_rng(2))
    start = RVineModel.from_matrices([[2], [1, 1]], [[0, 0], [5, 0]], [[0, 0], [2.0, 0]])
    report = fit_mle(start, x)
    cop, ll = fit_pair_mle(Family.FRANK, x[:, 1], x[:, 0], demote=False)
    assert report.model.copulas[1][0] == cop
    assert report.loglik_mle == ll


def mixed_fit(seed, size=600):
    truth = true_model("mixed", "mixed")
    x = truth.simulate(size, seed=seed)
    seq = sequential_select(x, SelectionOptions())
    return x, seq


def test_joint_fit_improves_and_reports_criteria():
    x, seq = mixed_fit(3)
    report = fit_mle(seq.model, x)
    assert report.loglik_seq == pytest.approx(seq.loglik, abs=1e-6)
    assert report.loglik_mle >= report.loglik_seq
    assert report.loglik_mle == pytest.approx(report.model.loglik(x), abs=1e-9)
    assert np.array_equal(report.model.families, seq.model.families)
    aic, bic = information_criteria(report.loglik_mle, report.n_params, report.n_obs)
    assert report.aic == aic and report.bic == bic
    assert aic == -2 * report.loglik_mle + 2 * report.n_params
    assert bic == -2 * report.loglik_mle + report.n_params * np.log(x.shape[0])
    assert report.n_params == seq.model.n_params


def test_gradient_vanishes_at_joint_optimum():
    x, seq = mixed_fit(4)
    report = fit_mle(seq.model, x)
    assert report.converged
    pmap = ParameterMap(report.model)
    size = x.shape[0]
    step = 1e-5
    for i, k, fam, off, width in pmap.slots:
        for j in range(width):
            lo, hi = pmap.bounds[off + j]
            theta = pmap.start.copy()
            if theta[off + j] - step < lo or theta[off + j] + step > hi:
                continue  # active bound: the gradient need not vanish
            up, dn = theta.copy(), theta.copy()
            up[off + j] += step
            dn[off + j] -= step
            grad = (pmap.build(up).loglik(x) - pmap.build(dn).loglik(x)) / (2 * step) / size
            assert abs(grad) * max(1.0, abs(theta[off + j])) <= 1e-3, (i, k, j, grad)


def test_incremental_loglik_matches_full_evaluation():
    rng = np.random.default_rng(8)
    model = random_model(6, rng)
    x = model.simulate(200, seed=9)
    work = _IncrementalLoglik(model, x)
    assert work.reset(model) == pytest.approx(model.loglik(x), abs=1e-9)
    other = random_model(6, np.random.default_rng(8))  # same structure and edges
    for i, k in model.positions():
        cop = PairCopula(Family.GAUSSIAN, 0.3)
        changed = model.with_copulas({(i, k): cop})
        assert work.perturbed(i, k, cop) == pytest.approx(changed.loglik(x), abs=1e-8)
    assert other.structure == model.structure


def test_vuong_antisymmetry_exact():
    x, seq = mixed_fit(5, 400)
    gauss = sequential_select(x, SelectionOptions(families=(Family.GAUSSIAN,))).model
    for corr in Correction:
        ab = vuong(seq.model, gauss, x, corr)
        ba = vuong(gauss, seq.model, x, corr)
        assert ab.statistic == -ba.statistic
        assert ab.p_value == ba.p_value


@settings(max_examples=100, deadline=None)
@given(st.integers(8, 5000), st.integers(1, 30), st.integers(0, 29), st.integers(0, 2**32 - 1))
def test_correction_ordering(size, p_a, p_b, seed):
    p_b = min(p_b, p_a - 1)
    terms = np.random.default_rng(seed).normal(0.01, 1.0, size)
    none = vuong_from_terms(terms, p_a, p_b, "none").statistic
    akaike = vuong_from_terms(terms, p_a, p_b, "akaike").statistic
    schwarz = vuong_from_terms(terms, p_a, p_b, "schwarz").statistic
    assert none > akaike > schwarz


@settings(max_examples=100, deadline=None)
@given(st.integers(3, 500), st.integers(0, 2**32 - 1))
def test_inconclusive_region(size, seed):
    terms = np.random.default_rng(seed).normal(0.05, 1.0, size)
    r = vuong_from_terms(terms, 3, 2, "none")
    assert (r.favored == Favored.INCONCLUSIVE) == (abs(r.statistic) <= 1.959963984540054)
    if r.favored == Favored.A:
        assert r.statistic > 0


def test_vuong_formula_by_hand():
    terms = np.array([0.5, -0.2, 0.9, 0.1, 0.3, -0.4, 0.7, 0.2])
    r = vuong_from_terms(terms, 5, 3, "schwarz")
    n = terms.size
    expected = (terms.sum() - 2 * np.log(n) / 2) / (np.sqrt(n) * terms.std(ddof=1))
    assert r.statistic == pytest.approx(expected, abs=1e-14)


def test_vuong_zero_variance_rejected():
    truth = true_model("all-gauss", "const")
    x = truth.simulate(50, seed=1)
    with pytest.raises(ValueError):
        vuong(truth, truth, x)


def test_vuong_against_tree_walk_oracle():
    rng = np.random.default_rng(13)
    a = random_model(5, rng)
    b = random_model(5, rng)
    x = a.simulate(150, seed=3)
    terms = [tree_walk_log_density(a, row) - tree_walk_log_density(b, row) for row in x]
    slow = vuong_from_terms(terms, a.n_params, b.n_params, "akaike")
    fast = vuong(a, b, x, "akaike")
    assert abs(slow.statistic - fast.statistic) < 1e-8


def test_vuong_power_against_independence():
    truth = true_model("mixed", "const")
    ind = RVineModel.independence(truth.structure)
    hits = sum(vuong(truth, ind, truth.simulate(2000, seed=s)).statistic > 1.96 for s in range(50))
    assert hits >= 48


@pytest.mark.slow
def test_joint_estimates_at_least_as_accurate():
    truth = example_model()
    better = 0
    for seed in range(50):
        x = truth.simulate(2000, seed=1000 + seed)
        seq = fixed_structure_fit(x, truth.structure, truth.families)
        report = fit_mle(seq, x)
        assert report.loglik_mle - report.loglik_seq >= 0
        rmse_seq = np.sqrt(np.mean((seq.par - truth.par)[np.tril_indices(7, -1)] ** 2))
        rmse_mle = np.sqrt(np.mean((report.model.par - truth.par)[np.tril_indices(7, -1)] ** 2))
        better += rmse_mle <= rmse_seq
    assert better >= 35
