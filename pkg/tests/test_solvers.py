import numpy as np
import pytest

from caspar import (
    CasparParams,
    Dataset,
    KernelSpec,
    NoConvergence,
    PredictorStructure,
    StepwiseParams,
    caspar_fit,
    lambda_path,
    lasso_fit,
    lasso_path_fit,
    standardize,
    stepwise_fit,
)
from caspar.solvers import STOP_EPSILON, STOP_EXHAUSTED, STOP_MAX_STEPS
from oracles import ista_lasso, lasso_objective, naive_caspar, naive_stepwise


def signal_dataset(seed, n=30, p=10, support=(2, 3, 4), values=(3.0, 6.0, -3.0), noise=1.0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[list(support)] = values
    y = X @ beta + noise * rng.standard_normal(n)
    return Dataset(X, y)


def line_structure(p):
    return PredictorStructure.from_positions(np.arange(p))


class TestStepwise:
    def test_large_epsilon_gives_empty_model(self):
        ds = standardize(signal_dataset(0))
        epsilon = float(np.abs(ds.X.T @ ds.y).max()) * 1.01
        path = stepwise_fit(ds, StepwiseParams(epsilon))
        assert path.selected == ()
        assert path.stop_reason == STOP_EPSILON
        assert np.all(path.final.values == 0.0)

    def test_orthonormal_design_selects_by_correlation_order(self):
        rng = np.random.default_rng(1)
        n = 16
        q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        X = q[:, :6] * np.sqrt(n)  # orthogonal columns with (1/n)||x||^2 = 1
        y = rng.standard_normal(n)
        ds = Dataset(X, y)
        path = stepwise_fit(ds, StepwiseParams(0.0, max_steps=6), standardize=False)
        expected = np.argsort(-np.abs(X.T @ y), kind="stable")
        assert list(path.selected) == expected.tolist()

    def test_matches_naive_reimplementation(self):
        for seed in range(12):
            ds = signal_dataset(seed, n=8, p=4, support=(1, 3), values=(2.0, -1.5))
            std = standardize(ds)
            path = stepwise_fit(std, StepwiseParams(0.5, max_steps=3), standardize=False)
            naive_sel, naive_beta = naive_stepwise(std.X, std.y, 0.5, max_steps=3)
            assert list(path.selected) == naive_sel
            assert np.allclose(path.final.values, naive_beta, atol=1e-8)

    def test_rss_strictly_decreases(self):
        ds = standardize(signal_dataset(2, n=40, p=12))
        path = stepwise_fit(ds, StepwiseParams(1.0))
        rss = [float(ds.y @ ds.y)]
        for beta in path.coefficients_per_step:
            r = ds.y - ds.X @ beta.values
            rss.append(float(r @ r))
        assert all(b < a for a, b in zip(rss, rss[1:]))

    def test_deterministic_bit_identical(self):
        ds = signal_dataset(3)
        a = stepwise_fit(ds, StepwiseParams(2.0))
        b = stepwise_fit(ds, StepwiseParams(2.0))
        assert a.selected == b.selected
        assert a.stop_reason == b.stop_reason
        assert np.array_equal(a.final.values, b.final.values)
        assert a.chosen_correlations == b.chosen_correlations

    def test_max_steps_cap(self):
        ds = standardize(signal_dataset(4, n=25, p=8, noise=4.0))
        path = stepwise_fit(ds, StepwiseParams(0.0, max_steps=2))
        assert path.n_steps == 2
        assert path.stop_reason == STOP_MAX_STEPS

    def test_cap_never_exceeds_rows_minus_one(self):
        ds = standardize(signal_dataset(5, n=5, p=10, noise=3.0))
        path = stepwise_fit(ds, StepwiseParams(0.0))
        assert path.n_steps <= 4

    def test_singular_candidates_skipped_and_recorded(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal(20)
        z = rng.standard_normal(20)
        X = np.column_stack([x, x.copy(), z])
        y = 3.0 * x + 0.5 * z + 0.01 * rng.standard_normal(20)
        path = stepwise_fit(Dataset(X, y), StepwiseParams(0.0), standardize=False)
        assert len(path.selected) == len(set(path.selected))
        assert path.skipped, "the duplicate column should be skipped at some step"
        step, column, corr = path.skipped[0]
        assert column in (0, 1)
        assert corr >= 0.0

    def test_fit_path_invariants(self):
        ds = signal_dataset(7)
        path = stepwise_fit(ds, StepwiseParams(1.0))
        assert len(path.selected) == path.n_steps == len(path.coefficients_per_step)
        for k, beta in enumerate(path.coefficients_per_step):
            assert set(beta.support.tolist()) <= set(path.selected[: k + 1])

    def test_params_validation(self):
        with pytest.raises(ValueError):
            StepwiseParams(-1.0)
        with pytest.raises(ValueError):
            StepwiseParams(1.0, max_steps=0)


class TestCaspar:
    def test_alpha_one_reduces_to_stepwise(self):
        for seed in range(10):
            ds = signal_dataset(seed, n=25, p=9)
            params = CasparParams(1.0, KernelSpec("boxcar", 2.0, 1.0), line_structure(9))
            a = caspar_fit(ds, params)
            b = stepwise_fit(ds, StepwiseParams(1.0))
            assert a.selected == b.selected
            assert np.max(np.abs(a.final.values - b.final.values)) <= 1e-10

    def test_equal_correlation_breaks_toward_cluster(self):
        # two candidates with exactly equal correlation; only one is adjacent
        # to the active predictor, so the kernel weight decides
        rng = np.random.default_rng(8)
        n = 40
        anchor = rng.standard_normal(n)
        other = rng.standard_normal(n)
        X = np.column_stack([anchor, other, -other])  # columns 1, 2 tie in |C|
        y = 2.0 * anchor + 0.5 * rng.standard_normal(n)
        ds = Dataset(X, y)
        structure = PredictorStructure.from_positions([0, 1, 9])
        params = CasparParams(1e-8, KernelSpec("boxcar", 2.0, 0.5), structure, max_steps=2)
        path = caspar_fit(ds, params, standardize=False)
        assert path.selected[0] == 0
        assert path.selected[1] == 1  # adjacent beats the distant twin

    def test_first_step_uses_unit_weights(self):
        ds = signal_dataset(9)
        params = CasparParams(1.0, KernelSpec("boxcar", 2.0, 0.0), line_structure(10))
        path = caspar_fit(ds, params)
        assert path.chosen_weights[0] == 1.0

    def test_matches_naive_reimplementation(self):
        positions = np.array([0, 1, 2, 5, 6, 7, 20, 21])
        for seed in range(8):
            rng = np.random.default_rng(seed)
            X = rng.standard_normal((30, 8))
            beta = np.zeros(8)
            beta[[1, 2]] = [4.0, 3.0]
            y = X @ beta + rng.standard_normal(30)
            std = standardize(Dataset(X, y))
            for family in ("boxcar", "gaussian"):
                params = CasparParams(
                    3.0,
                    KernelSpec(family, 3.0, 0.3),
                    PredictorStructure.from_positions(positions),
                    max_steps=5,
                )
                path = caspar_fit(std, params, standardize=False)
                naive_sel, naive_beta = naive_caspar(
                    std.X, std.y, positions, 3.0, 3.0, 0.3, family=family, max_steps=5
                )
                assert list(path.selected) == naive_sel
                assert np.allclose(path.final.values, naive_beta, atol=1e-8)

    def test_selected_maximizes_weighted_score(self):
        from caspar import candidate_weights, correlation_scores, restricted_ols

        ds = standardize(signal_dataset(10, n=35, p=12))
        structure = line_structure(12)
        kernel = KernelSpec("epanechnikov", 3.0, 0.2)
        path = caspar_fit(ds, CasparParams(1.0, kernel, structure), standardize=False)
        active = []
        for step, chosen in enumerate(path.selected):
            beta = restricted_ols(ds, active) if active else np.zeros(12)
            scores = correlation_scores(ds, beta)
            weights = candidate_weights(active, kernel, structure)
            weighted = weights * scores
            weighted[active] = -np.inf
            assert chosen == int(np.argmax(weighted))
            assert scores[chosen] == pytest.approx(path.chosen_correlations[step], rel=1e-12)
            assert weights[chosen] == pytest.approx(path.chosen_weights[step], rel=1e-12)
            active.append(chosen)

    def test_structure_size_must_match(self):
        ds = signal_dataset(11)
        params = CasparParams(1.0, KernelSpec("boxcar", 2.0, 0.5), line_structure(4))
        with pytest.raises(ValueError):
            caspar_fit(ds, params)


class TestLasso:
    def test_zero_solution_at_lambda_max(self):
        ds = standardize(signal_dataset(12))
        lam_max = 2.0 * float(np.abs(ds.X.T @ ds.y).max())
        assert lasso_fit(ds, lam_max).support.size == 0
        assert lasso_fit(ds, lam_max * 1.5).support.size == 0

    def test_single_predictor_matches_soft_threshold(self):
        rng = np.random.default_rng(13)
        X = rng.standard_normal((30, 1))
        y = 2.5 * X[:, 0] + rng.standard_normal(30)
        std = standardize(Dataset(X, y))
        lam = 20.0
        beta = lasso_fit(std, lam, tol=1e-14, max_iters=10_000, standardize=False)
        z = std.X[:, 0] @ std.y
        expected = np.sign(z) * max(abs(z) - lam / 2.0, 0.0) / (std.X[:, 0] @ std.X[:, 0])
        assert beta.values[0] == pytest.approx(expected, abs=1e-12)

    def test_objective_matches_independent_optimizer(self):
        rng = np.random.default_rng(14)
        X = rng.standard_normal((10, 5))
        y = rng.standard_normal(10)
        std = standardize(Dataset(X, y))
        lam = 1.0
        ours = lasso_fit(std, lam, tol=1e-12, max_iters=20_000, standardize=False)
        reference = ista_lasso(std.X, std.y, lam, iters=100_000)
        ours_obj = lasso_objective(std.X, std.y, ours.values, lam)
        ref_obj = lasso_objective(std.X, std.y, reference, lam)
        assert ours_obj <= ref_obj + 1e-6

    def test_kkt_conditions(self):
        for seed in range(6):
            ds = standardize(signal_dataset(seed, n=25, p=8))
            lam = 8.0
            beta = lasso_fit(ds, lam, tol=1e-12, max_iters=20_000, standardize=False)
            grad = 2.0 * ds.X.T @ (ds.y - ds.X @ beta.values)
            on = beta.support
            off = np.setdiff1d(np.arange(ds.p), on)
            assert np.all(np.abs(grad[off]) <= lam + 1e-6)
            assert np.allclose(grad[on], lam * np.sign(beta.values[on]), atol=1e-6)

    def test_no_convergence_raises(self):
        ds = standardize(signal_dataset(15, n=20, p=10))
        with pytest.raises(NoConvergence):
            lasso_fit(ds, 0.001, tol=1e-14, max_iters=1, standardize=False)

    def test_warm_path_agrees_with_cold_fit(self):
        ds = standardize(signal_dataset(16, n=30, p=8))
        lams = lambda_path(ds, 8, 0.05, standardize=False)
        warm = lasso_path_fit(ds, lams, tol=1e-12, max_iters=20_000, standardize=False)
        cold = lasso_fit(ds, float(lams[-1]), tol=1e-12, max_iters=20_000, standardize=False)
        assert np.allclose(warm.values, cold.values, atol=1e-8)

    def test_invalid_params(self):
        ds = signal_dataset(17)
        with pytest.raises(ValueError):
            lasso_fit(ds, -1.0)
        with pytest.raises(ValueError):
            lasso_fit(ds, 1.0, tol=0.0)


class TestLambdaPath:
    def test_endpoints(self):
        ds = standardize(signal_dataset(18))
        lam_max = 2.0 * float(np.abs(ds.X.T @ ds.y).max())
        path = lambda_path(ds, 2, 0.01)
        assert path[0] == pytest.approx(lam_max)
        assert path[-1] == pytest.approx(0.01 * lam_max)

    def test_model_empty_at_top(self):
        ds = standardize(signal_dataset(19))
        path = lambda_path(ds, 5, 0.1)
        assert lasso_fit(ds, float(path[0]), standardize=False).support.size == 0

    def test_geometric_spacing(self):
        ds = standardize(signal_dataset(20))
        path = lambda_path(ds, 7, 0.02)
        ratios = path[1:] / path[:-1]
        assert np.allclose(ratios, ratios[0])
        assert np.all(np.diff(path) < 0)

    def test_validation(self):
        ds = signal_dataset(21)
        with pytest.raises(ValueError):
            lambda_path(ds, 1, 0.1)
        with pytest.raises(ValueError):
            lambda_path(ds, 5, 1.5)


class TestStandardizeDefault:
    def test_solvers_standardize_by_default(self):
        ds = signal_dataset(22)  # raw, not standardized
        path = stepwise_fit(ds, StepwiseParams(1.0))
        std = standardize(ds)
        assert np.allclose(path.column_means, std.column_means)
        assert np.allclose(path.column_scales, std.column_scales)

    def test_opt_out_keeps_raw_scale(self):
        ds = signal_dataset(23)
        path = stepwise_fit(ds, StepwiseParams(1.0), standardize=False)
        assert np.all(path.column_means == 0.0)
        assert np.all(path.column_scales == 1.0)

    def test_exhausted_when_candidates_run_out(self):
        rng = np.random.default_rng(24)
        x = rng.standard_normal(12)
        X = np.column_stack([x, 2.0 * x])
        y = x + 0.1 * rng.standard_normal(12)
        path = stepwise_fit(Dataset(X, y), StepwiseParams(0.0), standardize=False)
        assert path.stop_reason == STOP_EXHAUSTED
        assert path.n_steps == 1
