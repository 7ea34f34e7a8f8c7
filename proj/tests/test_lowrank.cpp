#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "slr/errors.hpp"
#include "slr/lowrank.hpp"
#include "slr/rng.hpp"
#include "test_support.hpp"

using namespace slr;

namespace {

// Data from a rank-1 truth eta = u alpha alpha^T plus N(0, sigma^2) noise.
Eigen::VectorXd rank1_response(const GenotypeData& g, const LowRankTheta& truth,
                               double sigma, std::mt19937_64& r) {
    return linear_predictor(g, truth) + testsup::random_vector(g.n(), r, sigma);
}

// Gradient of the sign-u minimization objective, assembled from public API.
Eigen::VectorXd rank1_gradient(const Eigen::VectorXd& y, const GenotypeData& g,
                               const LowRankTheta& theta, double lambda) {
    const Eigen::MatrixXd w = jacobian_design_product(g, theta);
    const Eigen::VectorXd r = y - linear_predictor(g, theta);
    return -(w.transpose() * r) + lambda * testsup::pack_theta(theta);
}

}  // namespace

TEST_CASE("penalized log-likelihood at theta = 0 is -|Y|^2/2") {
    auto r = testsup::rng(41);
    const GenotypeData g = testsup::random_genotypes(30, 4, r);
    const Eigen::VectorXd y = testsup::random_vector(30, r);
    const LowRankTheta zero =
        LowRankTheta::make_rank1(0.0, Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4), 1);
    CHECK(penalized_loglik(zero, y, g, 3.7) == doctest::Approx(-0.5 * y.squaredNorm()));
}

TEST_CASE("penalized log-likelihood at lambda = 0 equals -RSS/2") {
    auto r = testsup::rng(43);
    const GenotypeData g = testsup::random_genotypes(25, 5, r);
    const Eigen::VectorXd y = testsup::random_vector(25, r);
    const LowRankTheta theta = testsup::random_rank1_theta(5, r, -1);
    const DesignMatrix d = build_design(g);
    const double rss = (y - d.X * beta_from_theta(theta)).squaredNorm();
    CHECK(penalized_loglik(theta, y, g, 0.0) == doctest::Approx(-0.5 * rss).epsilon(1e-12));
}

TEST_CASE("penalty is linear in lambda") {
    auto r = testsup::rng(47);
    const GenotypeData g = testsup::random_genotypes(20, 4, r);
    const Eigen::VectorXd y = testsup::random_vector(20, r);
    const LowRankTheta theta = testsup::random_rank2k_theta(4, 1, r);
    const double diff = penalized_loglik(theta, y, g, 10.0) - penalized_loglik(theta, y, g, 0.0);
    CHECK(diff == doctest::Approx(-5.0 * theta.squared_norm()).epsilon(1e-12));
}

TEST_CASE("analytic gradient matches finite differences of the objective") {
    auto r = testsup::rng(53);
    const int n = 50, p = 10;
    for (int rep = 0; rep < 20; ++rep) {
        const GenotypeData g = testsup::random_genotypes(n, p, r);
        const Eigen::VectorXd y = testsup::random_vector(n, r, 2.0);
        const int u = rep % 2 == 0 ? 1 : -1;
        const LowRankTheta theta = testsup::random_rank1_theta(p, r, u);
        const double lambda = 0.5 + rep * 0.1;

        const Eigen::VectorXd grad = rank1_gradient(y, g, theta, lambda);
        const Eigen::VectorXd at = testsup::pack_theta(theta);
        for (Eigen::Index j = 0; j < at.size(); j += 3) {
            auto obj_of = [&](double v) {
                Eigen::VectorXd t = at;
                t[j] = v;
                return -penalized_loglik(testsup::unpack_rank1(t, p, u), y, g, lambda);
            };
            const double fd = testsup::central_difference_scalar(obj_of, at[j], 1e-5);
            CHECK(std::abs(grad[j] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST_CASE("fit_rank1 recovers an intercept-only truth") {
    auto r = testsup::rng(59);
    const int n = 500, p = 5;
    const GenotypeData g = testsup::random_genotypes(n, p, r);
    const Eigen::VectorXd y =
        Eigen::VectorXd::Constant(n, 2.0) + testsup::random_vector(n, r);
    FitOptions opts;
    opts.seed = 1;
    const FitResult fit = fit_rank1(y, g, 0.01, opts);
    CHECK(std::abs(fit.theta.gamma - 2.0) <= 3.0 * fit.se_beta[0]);
    CHECK(fit.theta.xi.cwiseAbs().maxCoeff() <= 0.2);
    CHECK(vecp(fit.theta.eta()).cwiseAbs().maxCoeff() <= 0.2);
}

TEST_CASE("negative-definite truth selects u = -1") {
    // Three active components: the sign of the off-diagonal product then
    // identifies u (a single active pair would fit both signs exactly, since
    // vecp drops the diagonal).
    auto base = testsup::rng(61);
    const int n = 500, p = 5;
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(p);
    alpha[0] = alpha[1] = alpha[2] = 1.0;
    const LowRankTheta truth =
        LowRankTheta::make_rank1(0.3, Eigen::VectorXd::Zero(p), alpha, -1);
    int hits = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const GenotypeData g = testsup::random_genotypes(n, p, base);
        const Eigen::VectorXd y = rank1_response(g, truth, 1.0, base);
        FitOptions opts;
        opts.seed = 1000 + rep;
        const FitResult fit = fit_rank1(y, g, 1.0, opts);
        if (fit.theta.rank1.u == -1) ++hits;
    }
    CHECK(hits >= 95);
}

TEST_CASE("a dominant penalty shrinks every raw parameter below 1e-3") {
    auto r = testsup::rng(67);
    const int n = 120, p = 6;
    const GenotypeData g = testsup::random_genotypes(n, p, r);
    const Eigen::VectorXd y = testsup::random_vector(n, r, 2.0).array() + 1.5;
    const FitResult fit = fit_rank1(y, g, 1e8, FitOptions{});
    CHECK(std::abs(fit.theta.gamma) <= 1e-3);
    CHECK(fit.theta.xi.cwiseAbs().maxCoeff() <= 1e-3);
    CHECK(fit.theta.rank1.alpha.cwiseAbs().maxCoeff() <= 1e-3);
}

TEST_CASE("Newton converges to a gradient fixed point") {
    auto r = testsup::rng(71);
    const int n = 200, p = 6;
    const GenotypeData g = testsup::random_genotypes(n, p, r);
    const LowRankTheta truth = testsup::random_rank1_theta(p, r, 1);
    const Eigen::VectorXd y = rank1_response(g, truth, 1.0, r);
    FitOptions opts;
    opts.seed = 5;
    const FitResult fit = fit_rank1(y, g, 2.0, opts);
    REQUIRE(fit.converged);
    const Eigen::VectorXd grad = rank1_gradient(y, g, fit.theta, 2.0);
    CHECK(grad.cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("objective trace is non-increasing in minimization form for rank-1") {
    auto r = testsup::rng(73);
    const int n = 80, p = 5;
    const GenotypeData g = testsup::random_genotypes(n, p, r);
    const Eigen::VectorXd y = testsup::random_vector(n, r, 1.5);
    const FitResult fit = fit_rank1(y, g, 0.5, FitOptions{});
    for (std::size_t i = 1; i < fit.objective_trace.size(); ++i)
        CHECK(fit.objective_trace[i] >= fit.objective_trace[i - 1] - 1e-10);
}

TEST_CASE("with p = 1 the fit reduces to ridge regression on [1, g]") {
    auto r = testsup::rng(79);
    const int n = 60;
    const GenotypeData g = testsup::random_genotypes(n, 1, r);
    const Eigen::VectorXd y = (0.7 * g.values.col(0).array() +
                               testsup::random_vector(n, r, 0.5).array() + 1.2)
                                  .matrix();
    const double lambda = 0.7;
    const FitResult fit = fit_rank1(y, g, lambda, FitOptions{});

    Eigen::MatrixXd x(n, 2);
    x.col(0).setOnes();
    x.col(1) = g.values.col(0);
    const Eigen::VectorXd oracle = testsup::ridge_oracle_qr(x, y, lambda);
    CHECK(std::abs(fit.theta.gamma - oracle[0]) <= 1e-8);
    CHECK(std::abs(fit.theta.xi[0] - oracle[1]) <= 1e-8);
    CHECK(std::abs(fit.theta.rank1.alpha[0]) <= 1e-8);
}

TEST_CASE("insufficient sample raises the guardrail error") {
    auto r = testsup::rng(83);
    const GenotypeData g = testsup::random_genotypes(11, 5, r);  // d_1 = 11
    const Eigen::VectorXd y = testsup::random_vector(11, r);
    CHECK_THROWS_AS(fit_rank1(y, g, 1.0, FitOptions{}), InfeasibleError);
    const GenotypeData g2 = testsup::random_genotypes(30, 10, r);  // d_2 = 30
    const Eigen::VectorXd y2 = testsup::random_vector(30, r);
    CHECK_THROWS_AS(fit_rank2k(y2, g2, 1.0, 1, FitOptions{}), InfeasibleError);
}

TEST_CASE("collinear design at lambda = 0 raises a singularity error naming the fix") {
    auto r = testsup::rng(89);
    const int n = 50;
    Eigen::MatrixXd values(n, 2);
    values.col(0) = testsup::random_genotypes(n, 1, r).values;
    values.col(1) = values.col(0);  // duplicated locus
    const GenotypeData g(values, default_snp_ids(2));
    const Eigen::VectorXd y = testsup::random_vector(n, r);
    try {
        fit_rank1(y, g, 0.0, FitOptions{});
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("lambda_ell") != std::string::npos);
    }
}

TEST_CASE("objective is invariant under alpha -> -alpha") {
    auto r = testsup::rng(97);
    const GenotypeData g = testsup::random_genotypes(40, 6, r);
    const Eigen::VectorXd y = testsup::random_vector(40, r);
    const LowRankTheta theta = testsup::random_rank1_theta(6, r, -1);
    const LowRankTheta flipped = LowRankTheta::make_rank1(
        theta.gamma, theta.xi, (-theta.rank1.alpha).eval(), theta.rank1.u);
    CHECK(penalized_loglik(theta, y, g, 1.3) ==
          doctest::Approx(penalized_loglik(flipped, y, g, 1.3)).epsilon(1e-14));
}

TEST_CASE("ALS penalized log-likelihood never decreases across sweeps") {
    auto r = testsup::rng(101);
    for (int rep = 0; rep < 100; ++rep) {
        const int n = 60, p = 15;
        const GenotypeData g = testsup::random_genotypes(n, p, r);
        const LowRankTheta truth = testsup::random_rank2k_theta(p, 1, r);
        const Eigen::VectorXd y =
            linear_predictor(g, truth) + testsup::random_vector(n, r);
        FitOptions opts;
        opts.seed = 300 + rep;
        std::uniform_real_distribution<double> lam(0.1, 10.0);
        const FitResult fit = fit_rank2k(y, g, lam(r), 1, opts);
        REQUIRE(fit.objective_trace.size() >= 2);
        for (std::size_t i = 1; i < fit.objective_trace.size(); ++i)
            CHECK(fit.objective_trace[i] >= fit.objective_trace[i - 1] - 1e-10);
    }
}

TEST_CASE("one fixed-B ridge step equals the dense penalized LS oracle") {
    auto r = testsup::rng(103);
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 40, p = 8, k = 1 + rep % 2;
        const GenotypeData g = testsup::random_genotypes(n, p, r);
        const Eigen::VectorXd y = testsup::random_vector(n, r, 2.0);
        const Eigen::MatrixXd B = testsup::random_matrix(p, k, r);
        std::uniform_real_distribution<double> lam(0.01, 10.0);
        const double lambda = lam(r);
        const Eigen::VectorXd step = als_fix_b_step(y, g, B, lambda);
        const Eigen::VectorXd oracle =
            testsup::ridge_oracle_qr(als_design_fixed_b(g, B), y, lambda);
        CHECK((step - oracle).cwiseAbs().maxCoeff() <=
              1e-8 * std::max(1.0, oracle.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("rank-2 truth is recovered within 20 percent Frobenius error (median)") {
    auto r = testsup::rng(107);
    const int n = 800, p = 10;
    Eigen::VectorXd a(p), b(p);
    a << 1.0, 0.8, -0.6, 0.5, 0.0, 0.0, 0.3, 0.0, -0.4, 0.2;
    b << 0.5, -0.7, 0.9, 0.0, 0.6, 0.0, 0.0, 0.4, 0.3, -0.2;
    const Eigen::MatrixXd eta = a * b.transpose() + b * a.transpose();
    const LowRankTheta truth = LowRankTheta::make_rank2k(
        0.5, Eigen::VectorXd::Zero(p), a, b);
    std::vector<double> errors;
    for (int rep = 0; rep < 50; ++rep) {
        const GenotypeData g = testsup::random_genotypes(n, p, r);
        const Eigen::VectorXd y = linear_predictor(g, truth) + testsup::random_vector(n, r);
        FitOptions opts;
        opts.seed = 700 + rep;
        const FitResult fit = fit_rank2k(y, g, 1.0, 1, opts);
        errors.push_back((fit.theta.eta() - eta).norm() / eta.norm());
    }
    std::sort(errors.begin(), errors.end());
    CHECK(errors[errors.size() / 2] <= 0.2);
}

TEST_CASE("rank-2k with lambda = 0 and a fat per-step design is rejected") {
    auto r = testsup::rng(109);
    const GenotypeData g = testsup::random_genotypes(12, 5, r);
    const Eigen::VectorXd y = testsup::random_vector(12, r);
    FitOptions opts;
    opts.compute_inference = false;
    CHECK_THROWS_AS(fit_rank2k(y, g, 0.0, 3, opts), NumericalError);
}

TEST_CASE("cv_lambda_ell: singleton grid, noise preference, determinism") {
    auto r = testsup::rng(113);
    const int n = 80, p = 5;
    const GenotypeData g = testsup::random_genotypes(n, p, r);
    const Eigen::VectorXd y = testsup::random_vector(n, r);

    CHECK(cv_lambda_ell(y, g, RankSpec{1}, {0.37}, 5, 9) == 0.37);

    int big = 0;
    for (int rep = 0; rep < 50; ++rep) {
        const GenotypeData gg = testsup::random_genotypes(n, p, r);
        const Eigen::VectorXd yy = testsup::random_vector(n, r);
        if (cv_lambda_ell(yy, gg, RankSpec{1}, {0.01, 100.0}, 10, 50 + rep) == 100.0) ++big;
    }
    CHECK(big >= 45);

    const double l1 = cv_lambda_ell(y, g, RankSpec{1}, {0.1, 1.0, 10.0}, 5, 77);
    const double l2 = cv_lambda_ell(y, g, RankSpec{1}, {0.1, 1.0, 10.0}, 5, 77);
    CHECK(l1 == l2);

    CHECK_THROWS_AS(cv_lambda_ell(y, g, RankSpec{1}, {}, 5, 1), UsageError);
}

TEST_CASE("sigma2: perfect fit gives zero, divisor is n - d_r") {
    auto r = testsup::rng(127);
    const int n = 100, p = 10;
    const GenotypeData g = testsup::random_genotypes(n, p, r);
    const LowRankTheta theta = testsup::random_rank1_theta(p, r, 1);

    FitResult exact;
    exact.theta = theta;
    const Eigen::VectorXd y0 = linear_predictor(g, theta);
    CHECK(estimate_sigma2(exact, y0, g) == 0.0);

    const Eigen::VectorXd resid = testsup::random_vector(n, r, 0.8);
    const Eigen::VectorXd y = y0 + resid;
    // d_1 = 1 + 10 + 10 = 21
    CHECK(estimate_sigma2(exact, y, g) ==
          doctest::Approx(resid.squaredNorm() / (n - 21)).epsilon(1e-12));

    const GenotypeData small = testsup::random_genotypes(21, 10, r);
    FitResult f2;
    f2.theta = testsup::random_rank1_theta(10, r, 1);
    CHECK_THROWS_AS(estimate_sigma2(f2, Eigen::VectorXd::Zero(21), small), InfeasibleError);
}

TEST_CASE("sigma2 Monte Carlo lands in [0.9, 1.1] at least 90 percent of the time") {
    auto r = testsup::rng(131);
    const int n = 2000, p = 10;
    Eigen::VectorXd alpha(p);
    alpha << 0.9, -0.7, 0.55, 0.5, -0.45, 0.6, 0.4, -0.5, 0.65, 0.35;
    const LowRankTheta truth =
        LowRankTheta::make_rank1(0.5, testsup::random_vector(p, r, 0.3), alpha, 1);
    int hits = 0;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep) {
        const GenotypeData g = testsup::random_genotypes(n, p, r);
        const Eigen::VectorXd y = rank1_response(g, truth, 1.0, r);
        FitOptions opts;
        opts.seed = 9000 + rep;
        const FitResult fit = fit_rank1(y, g, 1.0, opts);
        if (fit.sigma2 >= 0.9 && fit.sigma2 <= 1.1) ++hits;
    }
    CHECK(hits >= reps * 9 / 10);
}

TEST_CASE("zero sigma2 gives zero standard errors") {
    auto r = testsup::rng(137);
    const int n = 80, p = 4;
    const GenotypeData g = testsup::random_genotypes(n, p, r);
    const LowRankTheta theta = testsup::random_rank1_theta(p, r, 1);
    FitResult fit;
    fit.theta = theta;
    fit.sigma2 = 0.0;
    const Eigen::VectorXd se = estimate_cov(fit, g, 0.5, n);
    CHECK(se.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("standard errors of (gamma, xi) track classical LSE on a main-effects truth") {
    // The penalty must exceed the n-scale residual-interaction correlation so
    // alpha = 0 is an attracting basin; only then does the truncated plug-in
    // covariance reduce to the main-effects block.
    auto r = testsup::rng(139);
    const int n = 10000, p = 2;
    const GenotypeData g = testsup::random_genotypes(n, p, r);
    const Eigen::VectorXd y = (0.3 + 0.5 * g.values.col(0).array() -
                               0.4 * g.values.col(1).array() +
                               testsup::random_vector(n, r).array())
                                  .matrix();
    FitOptions opts;
    opts.seed = 3;
    const FitResult fit = fit_rank1(y, g, 300.0, opts);
    CHECK(fit.theta.rank1.alpha.cwiseAbs().maxCoeff() <= 1e-4);  // alpha-hat ~ 0

    Eigen::MatrixXd x(n, 3);
    x.col(0).setOnes();
    x.middleCols(1, 2) = g.values;
    const Eigen::VectorXd lse = x.colPivHouseholderQr().solve(y);
    const double s2 = (y - x * lse).squaredNorm() / (n - 3);
    const Eigen::MatrixXd cov = s2 * (x.transpose() * x).inverse();
    for (int j = 0; j < 3; ++j) {
        const double se_lse = std::sqrt(cov(j, j));
        CHECK(std::abs(fit.se_beta[j] - se_lse) <= 0.10 * se_lse);
    }
}

TEST_CASE("estimated covariance is positive semidefinite") {
    auto r = testsup::rng(149);
    const int n = 150, p = 6;
    for (int rep = 0; rep < 5; ++rep) {
        const GenotypeData g = testsup::random_genotypes(n, p, r);
        const LowRankTheta truth = testsup::random_rank1_theta(p, r, 1);
        const Eigen::VectorXd y = rank1_response(g, truth, 1.0, r);
        FitOptions opts;
        opts.seed = 40 + rep;
        const FitResult fit = rep % 2 == 0 ? fit_rank1(y, g, 1.0, opts)
                                           : fit_rank2k(y, g, 1.0, 1, opts);
        const Eigen::MatrixXd cov = wald_covariance(fit.theta, g, fit.sigma2, 1.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        const double lo = es.eigenvalues().minCoeff();
        const double hi = es.eigenvalues().maxCoeff();
        CHECK(lo >= -1e-8 * std::max(hi, 1.0));
    }
}

TEST_CASE("effective dimension formula") {
    CHECK(effective_dim(10, 1) == 21);
    CHECK(effective_dim(10, 2) == 30);
    CHECK(effective_dim(15, 2) == 45);
    CHECK(effective_dim(100, 1) == 201);
}
