import numpy as np
import pytest

from sumeval.ordlogit import ConvergenceError, ordered_logit_fit
from sumeval.stats import AnalysisError, DataMatrix


def simulate(rng, n, eta, cutpoints):
    """Draw from the proportional-odds model via its latent-variable form."""
    eta = np.asarray(eta, dtype=float)
    x = rng.normal(size=(n, eta.size))
    latent = x @ eta + rng.logistic(size=n)
    y = np.searchsorted(np.asarray(cutpoints, dtype=float), latent)
    return x, y.astype(float)


class TestRecovery:
    def test_synthetic_three_covariates(self):
        rng = np.random.default_rng(2023)
        true_eta = np.array([0.8, -0.5, 1.2])
        cutpoints = [-1.0, 0.5, 2.0]
        x, y = simulate(rng, 20_000, true_eta, cutpoints)
        fit = ordered_logit_fit(x, y)
        assert np.max(np.abs(fit.coefficients - true_eta)) <= 0.05
        assert np.max(np.abs(fit.intercepts - np.array(cutpoints))) <= 0.1

    def test_sign_convention_positive_pushes_higher(self):
        rng = np.random.default_rng(8)
        x, y = simulate(rng, 5_000, [1.5], [0.0])
        fit = ordered_logit_fit(x, y)
        assert fit.coefficients[0] > 1.0  # recovered positive effect


class TestClosedForm2x2:
    def test_binary_contingency_table(self):
        # counts: x=0 -> (30 low, 10 high); x=1 -> (12 low, 48 high)
        x = np.array([[0.0]] * 40 + [[1.0]] * 60)
        y = np.array([0.0] * 30 + [1.0] * 10 + [0.0] * 12 + [1.0] * 48)
        fit = ordered_logit_fit(x, y)
        # Eq-1 convention: xi = ln(c0/d0), eta = ln(c0*d1 / (d0*c1))
        xi_expected = np.log(30 / 10)
        eta_expected = np.log((30 * 48) / (10 * 12))
        assert fit.intercepts[0] == pytest.approx(xi_expected, abs=1e-6)
        assert fit.coefficients[0] == pytest.approx(eta_expected, abs=1e-6)


@pytest.fixture(scope="module")
def fit():
    rng = np.random.default_rng(31)
    x, y = simulate(rng, 3_000, [0.7, -0.3], [-0.8, 0.4, 1.5])
    return ordered_logit_fit(x, y, variable_names=("u", "v"))


class TestFitInvariants:
    def test_cutpoints_strictly_increasing(self, fit):
        assert np.all(np.diff(fit.intercepts) > 0)

    def test_odds_ratio_identity(self, fit):
        assert np.allclose(fit.odds_ratios, np.exp(fit.coefficients), atol=1e-12, rtol=0)

    def test_aic_identity(self, fit):
        k = len(fit.coefficients) + len(fit.intercepts)
        assert fit.aic == pytest.approx(2 * k - 2 * fit.log_likelihood, abs=1e-12)

    def test_t_and_p_values_consistent(self, fit):
        from scipy.stats import norm

        assert np.allclose(fit.t_values, fit.coefficients / fit.std_errors)
        assert np.allclose(fit.p_values_raw, 2 * norm.sf(np.abs(fit.t_values)))

    def test_bh_dominates_raw(self, fit):
        assert np.all(fit.p_values_bh >= fit.p_values_raw - 1e-15)

    def test_variable_names_carried(self, fit):
        assert fit.variable_names == ("u", "v")

    def test_levels_observed(self, fit):
        assert fit.levels == (0.0, 1.0, 2.0, 3.0)


class TestAgainstStatsmodels:
    """statsmodels' OrderedModel shares the xi - eta.x convention; use it as a
    second, independently implemented solver on a moderate problem."""

    def test_coefficients_match(self):
        sm = pytest.importorskip("statsmodels.miscmodels.ordinal_model")
        rng = np.random.default_rng(44)
        x, y = simulate(rng, 2_000, [0.6, -1.1], [-0.5, 1.0])
        fit = ordered_logit_fit(x, y)
        model = sm.OrderedModel(y, x, distr="logit")
        res = model.fit(method="bfgs", disp=False)
        assert np.allclose(fit.coefficients, res.params[:2], atol=5e-4)
        assert fit.log_likelihood == pytest.approx(res.llf, abs=1e-4)
        sm_se = np.asarray(res.bse[:2])
        assert np.allclose(fit.std_errors, sm_se, atol=5e-4)


class TestOptimality:
    """White-box checks that the Newton loop really maximized the likelihood."""

    def test_loglik_improved_and_gradient_vanishes(self):
        from sumeval.ordlogit import (
            _grad_hess_natural,
            _loglik,
            _to_theta_space,
            _unpack,
        )

        rng = np.random.default_rng(123)
        x, y = simulate(rng, 2_000, [0.5, -0.8], [-0.5, 0.7])
        fit = ordered_logit_fit(x, y)

        levels = np.unique(y)
        y_idx = np.searchsorted(levels, y)
        p = x.shape[1]
        n_cuts = levels.size - 1
        theta_hat = np.concatenate(
            [fit.coefficients, [fit.intercepts[0]], np.log(np.diff(fit.intercepts))]
        )
        ll_hat = _loglik(theta_hat, x, y_idx, p, n_cuts)
        assert ll_hat == pytest.approx(fit.log_likelihood, abs=1e-9)

        start = np.zeros(p + n_cuts)
        counts = np.bincount(y_idx, minlength=levels.size)
        cum = np.clip(np.cumsum(counts)[:-1] / len(y), 1e-6, 1 - 1e-6)
        xi0 = np.log(cum / (1 - cum))
        start[p] = xi0[0]
        start[p + 1 :] = np.log(np.diff(xi0))
        assert ll_hat >= _loglik(start, x, y_idx, p, n_cuts)

        eta, xi = _unpack(theta_hat, p, n_cuts)
        grad_nat, hess_nat = _grad_hess_natural(eta, xi, x, y_idx)
        grad, _ = _to_theta_space(grad_nat, hess_nat, theta_hat, p, n_cuts)
        assert np.max(np.abs(grad)) < 1e-8

        for _ in range(10):  # local maximum against random perturbations
            perturbed = theta_hat + rng.normal(0, 0.05, size=theta_hat.size)
            assert _loglik(perturbed, x, y_idx, p, n_cuts) <= ll_hat + 1e-9


class TestErrors:
    def test_single_level_rejected(self):
        with pytest.raises(AnalysisError, match="distinct"):
            ordered_logit_fit(np.zeros((10, 1)), np.ones(10))

    def test_length_mismatch(self):
        with pytest.raises(AnalysisError, match="length"):
            ordered_logit_fit(np.zeros((10, 1)), np.arange(9, dtype=float))

    def test_perfect_separation_detected(self):
        x = np.array([[float(i >= 50)] for i in range(100)])
        y = np.array([0.0] * 50 + [1.0] * 50)
        with pytest.raises(ConvergenceError, match="separation"):
            ordered_logit_fit(x, y)

    def test_non_finite_rejected(self):
        x = np.array([[np.nan], [1.0], [2.0]])
        with pytest.raises(AnalysisError, match="finite"):
            ordered_logit_fit(x, np.array([0.0, 1.0, 0.0]))


class TestDataMatrixInput:
    def test_accepts_data_matrix(self):
        rng = np.random.default_rng(5)
        x, y = simulate(rng, 1_000, [0.9], [0.0])
        data = DataMatrix(("score",), x)
        fit = ordered_logit_fit(data, y)
        assert fit.variable_names == ("score",)
        assert abs(fit.coefficients[0] - 0.9) < 0.2
