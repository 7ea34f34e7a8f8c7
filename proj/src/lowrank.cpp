#include "slr/lowrank.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "slr/errors.hpp"
#include "slr/rng.hpp"

namespace slr {

namespace {

void check_dims(const Eigen::VectorXd& y, const GenotypeData& g) {
    if (y.size() != g.n())
        throw std::invalid_argument("phenotype length does not match genotype rows");
    if (!y.allFinite())
        throw IngestionError("phenotype contains missing or non-finite values");
}

// Solves (M'M + lambda I) x = M'y. At lambda = 0 a rank-deficient normal
// matrix raises NumericalError advising a positive penalty.
Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& m, const Eigen::VectorXd& y,
                            double lambda) {
    Eigen::MatrixXd h = m.transpose() * m;
    h.diagonal().array() += lambda;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    if (lambda <= 0.0) {
        bool singular = ldlt.info() != Eigen::Success;
        if (!singular) {
            const Eigen::VectorXd d = ldlt.vectorD();
            const double dmax = d.cwiseAbs().maxCoeff();
            singular = dmax <= 0.0 || d.minCoeff() <= 1e-13 * dmax;
        }
        if (singular)
            throw NumericalError(
                "singular system at lambda_ell = 0 (collinear design); set lambda_ell > 0");
    } else if (ldlt.info() != Eigen::Success) {
        throw NumericalError("ridge normal-equation factorization failed");
    }
    return ldlt.solve(m.transpose() * y);
}

struct Rank1State {
    double gamma;
    Eigen::VectorXd xi;
    Eigen::VectorXd alpha;

    [[nodiscard]] double squared_norm() const {
        return gamma * gamma + xi.squaredNorm() + alpha.squaredNorm();
    }
    [[nodiscard]] Eigen::VectorXd pack() const {
        Eigen::VectorXd t(1 + 2 * xi.size());
        t[0] = gamma;
        t.segment(1, xi.size()) = xi;
        t.tail(alpha.size()) = alpha;
        return t;
    }
    static Rank1State unpack(const Eigen::VectorXd& t, int p) {
        return Rank1State{t[0], t.segment(1, p), t.tail(p)};
    }
};

Eigen::VectorXd rank1_mean(const Eigen::MatrixXd& G, const Eigen::ArrayXXd& G2,
                           const Rank1State& s, int u) {
    const Eigen::VectorXd ga = G * s.alpha;
    const Eigen::VectorXd diag = G2.matrix() * s.alpha.cwiseAbs2();
    Eigen::VectorXd mu = Eigen::VectorXd::Constant(G.rows(), s.gamma);
    mu.noalias() += G * s.xi;
    mu.array() += 0.5 * u * (ga.array().square() - diag.array());
    return mu;
}

// Minimization objective of the sign-u branch.
double rank1_objective(const Eigen::VectorXd& y, const Eigen::MatrixXd& G,
                       const Eigen::ArrayXXd& G2, const Rank1State& s, int u,
                       double lambda) {
    const Eigen::VectorXd mu = rank1_mean(G, G2, s, u);
    return 0.5 * (y - mu).squaredNorm() + 0.5 * lambda * s.squared_norm();
}

struct Rank1Branch {
    Rank1State state;
    double objective = 0.0;  // minimization form
    int iterations = 0;
    bool converged = false;
    std::vector<double> trace;  // penalized log-likelihood per accepted step
};

Rank1Branch newton_rank1(const Eigen::VectorXd& y, const GenotypeData& g, int u,
                         double lambda, const Rank1State& init, const FitOptions& opts) {
    const Eigen::MatrixXd& G = g.values;
    const int n = g.n(), p = g.p();
    const Eigen::ArrayXXd G2 = G.array().square();
    const long d = 1 + 2L * p;

    Rank1Branch br;
    br.state = init;
    double f_cur = rank1_objective(y, G, G2, br.state, u, lambda);

    Eigen::MatrixXd w(n, d);
    w.col(0).setOnes();
    w.middleCols(1, p) = G;

    for (int it = 0; it < opts.max_iter; ++it) {
        const Eigen::VectorXd ga = G * br.state.alpha;
        w.middleCols(1 + p, p) =
            u * (G.array().colwise() * ga.array() -
                 G2.rowwise() * br.state.alpha.transpose().array());

        const Eigen::VectorXd r = y - rank1_mean(G, G2, br.state, u);
        const Eigen::VectorXd t = br.state.pack();
        Eigen::VectorXd grad = -(w.transpose() * r) + lambda * t;
        if (grad.cwiseAbs().maxCoeff() <= opts.gradient_tol) {
            br.converged = true;
            break;
        }

        Eigen::MatrixXd h = w.transpose() * w;
        h.diagonal().array() += lambda;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
        if (lambda <= 0.0) {
            bool singular = ldlt.info() != Eigen::Success;
            if (!singular) {
                const Eigen::VectorXd dv = ldlt.vectorD();
                const double dmax = dv.cwiseAbs().maxCoeff();
                singular = dmax <= 0.0 || dv.minCoeff() <= 1e-13 * dmax;
            }
            if (singular)
                throw NumericalError(
                    "singular Hessian at lambda_ell = 0 (collinear design); set lambda_ell > 0");
        } else if (ldlt.info() != Eigen::Success) {
            throw NumericalError("Newton Hessian factorization failed");
        }
        const Eigen::VectorXd step = ldlt.solve(grad);

        // Step halving: the bare iteration can overshoot on the quadratic
        // parameterization.
        double scale = 1.0;
        bool accepted = false;
        for (int h_it = 0; h_it <= opts.max_halvings; ++h_it) {
            Rank1State cand = Rank1State::unpack(t - scale * step, p);
            const double f_new = rank1_objective(y, G, G2, cand, u, lambda);
            if (f_new <= f_cur) {
                br.state = cand;
                f_cur = f_new;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        ++br.iterations;
        br.trace.push_back(-f_cur);
        if (!accepted) break;  // stalled; gradient check above decides convergence
    }

    if (!br.converged) {
        // Final gradient check (max_iter may land exactly on the optimum).
        const Eigen::VectorXd ga = G * br.state.alpha;
        w.middleCols(1 + p, p) =
            u * (G.array().colwise() * ga.array() -
                 G2.rowwise() * br.state.alpha.transpose().array());
        const Eigen::VectorXd r = y - rank1_mean(G, G2, br.state, u);
        const Eigen::VectorXd grad = -(w.transpose() * r) + lambda * br.state.pack();
        br.converged = grad.cwiseAbs().maxCoeff() <= opts.gradient_tol;
    }
    br.objective = f_cur;
    if (!std::isfinite(br.objective))
        throw NumericalError("non-finite objective in rank-1 fit");
    return br;
}

double sigma2_from_theta(const LowRankTheta& theta, const Eigen::VectorXd& y,
                         const GenotypeData& g) {
    const int n = g.n();
    const long d_r = effective_dim(g.p(), theta.declared_rank());
    if (n <= d_r)
        throw InfeasibleError("insufficient sample for error variance: n = " +
                              std::to_string(n) + " <= d_r = " + std::to_string(d_r));
    const double rss = (y - linear_predictor(g, theta)).squaredNorm();
    return rss / static_cast<double>(n - d_r);
}

// Shared eigen-path of the covariance estimator. Returns Delta * U_kept and
// the kept eigenvalues.
struct CovFactor {
    Eigen::MatrixXd t;         // m x q
    Eigen::VectorXd eigvals;   // q
};

CovFactor cov_factor(const LowRankTheta& theta, const GenotypeData& g) {
    const int n = g.n(), p = g.p();
    const Eigen::MatrixXd w = jacobian_design_product(g, theta);
    const Eigen::MatrixXd s = (w.transpose() * w) / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    if (es.info() != Eigen::Success || !es.eigenvalues().allFinite())
        throw NumericalError("eigendecomposition failed in covariance estimation");

    const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
    const long d = ev.size();
    const long d_r = effective_dim(p, theta.declared_rank());
    const double ev_max = ev[d - 1];
    const double cutoff = 1e-10 * std::max(ev_max, 0.0);

    long q = 0;
    for (long i = d - 1; i >= 0 && q < d_r; --i) {
        if (ev[i] <= cutoff) break;
        ++q;
    }
    CovFactor f;
    f.eigvals.resize(q);
    Eigen::MatrixXd u_kept(d, q);
    for (long j = 0; j < q; ++j) {
        f.eigvals[j] = ev[d - 1 - j];
        u_kept.col(j) = es.eigenvectors().col(d - 1 - j);
    }
    f.t = jacobian_delta(theta, p) * u_kept;
    return f;
}

Eigen::VectorXd wald_se_from_theta(const LowRankTheta& theta, const GenotypeData& g,
                                   double sigma2, double lambda, int n) {
    const CovFactor f = cov_factor(theta, g);
    const Eigen::ArrayXd inv = 1.0 / (f.eigvals.array() + lambda / n);
    Eigen::VectorXd diag =
        (f.t.array().square().rowwise() * inv.transpose()).rowwise().sum() * sigma2;
    Eigen::VectorXd se = (diag / static_cast<double>(n)).cwiseMax(0.0).cwiseSqrt();
    if (!se.allFinite()) throw NumericalError("non-finite standard errors");
    return se;
}

void finish_fit(FitResult& fit, const Eigen::VectorXd& y, const GenotypeData& g,
                const FitOptions& opts) {
    fit.beta = beta_from_theta(fit.theta);
    fit.d_r = effective_dim(g.p(), fit.theta.declared_rank());
    if (opts.compute_inference) {
        fit.sigma2 = sigma2_from_theta(fit.theta, y, g);
        fit.se_beta = wald_se_from_theta(fit.theta, g, fit.sigma2, fit.lambda_ell, g.n());
    } else {
        fit.sigma2 = std::numeric_limits<double>::quiet_NaN();
        fit.se_beta.resize(0);
    }
}

}  // namespace

void RankSpec::validate() const {
    if (rank != 1 && (rank < 2 || rank % 2 != 0))
        throw UsageError("model rank must be 1 or an even integer >= 2");
}

long effective_dim(int p, int rank) {
    return 1 + p + static_cast<long>(p) * rank - static_cast<long>(rank) * (rank - 1) / 2;
}

double penalized_loglik(const LowRankTheta& theta, const Eigen::VectorXd& y,
                        const GenotypeData& g, double lambda_ell) {
    check_dims(y, g);
    if (theta.p() != g.p())
        throw std::invalid_argument("theta dimension does not match data");
    const double rss = (y - linear_predictor(g, theta)).squaredNorm();
    return -0.5 * rss - 0.5 * lambda_ell * theta.squared_norm();
}

FitResult fit_rank1(const Eigen::VectorXd& y, const GenotypeData& g,
                    double lambda_ell, const FitOptions& opts) {
    check_dims(y, g);
    if (lambda_ell < 0.0) throw UsageError("lambda_ell must be >= 0");
    const int n = g.n(), p = g.p();
    if (opts.compute_inference && n <= effective_dim(p, 1))
        throw InfeasibleError("insufficient sample for rank-1 fit: n = " +
                              std::to_string(n) + " <= d_r = " +
                              std::to_string(effective_dim(p, 1)));

    auto rng = make_rng(opts.seed, "rank1-init");
    std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(p)));
    Rank1State init;
    init.gamma = y.mean();
    init.xi = Eigen::VectorXd::Zero(p);
    init.alpha.resize(p);
    for (int j = 0; j < p; ++j) init.alpha[j] = gauss(rng);

    const Rank1Branch plus = newton_rank1(y, g, +1, lambda_ell, init, opts);
    const Rank1Branch minus = newton_rank1(y, g, -1, lambda_ell, init, opts);
    const bool take_plus = plus.objective <= minus.objective;
    const Rank1Branch& best = take_plus ? plus : minus;

    FitResult fit;
    fit.theta = LowRankTheta::make_rank1(best.state.gamma, best.state.xi,
                                         best.state.alpha, take_plus ? 1 : -1);
    fit.lambda_ell = lambda_ell;
    fit.iterations = best.iterations;
    fit.converged = best.converged;
    fit.final_penalized_loglik = -best.objective;
    fit.objective_trace = best.trace;
    finish_fit(fit, y, g, opts);
    return fit;
}

Eigen::MatrixXd als_design_fixed_b(const GenotypeData& g, const Eigen::MatrixXd& B) {
    const Eigen::MatrixXd& G = g.values;
    const int n = g.n(), p = g.p();
    if (B.rows() != p) throw std::invalid_argument("factor rows must equal locus count");
    const int k = static_cast<int>(B.cols());
    const Eigen::ArrayXXd G2 = G.array().square();
    Eigen::MatrixXd x(n, 1 + p + static_cast<long>(p) * k);
    x.col(0).setOnes();
    x.middleCols(1, p) = G;
    for (int c = 0; c < k; ++c) {
        const Eigen::VectorXd gb = G * B.col(c);
        x.middleCols(1 + p + c * p, p) =
            G.array().colwise() * gb.array() - G2.rowwise() * B.col(c).transpose().array();
    }
    return x;
}

Eigen::VectorXd als_fix_b_step(const Eigen::VectorXd& y, const GenotypeData& g,
                               const Eigen::MatrixXd& B, double lambda_ell) {
    return ridge_solve(als_design_fixed_b(g, B), y, lambda_ell);
}

FitResult fit_rank2k(const Eigen::VectorXd& y, const GenotypeData& g,
                     double lambda_ell, int k, const FitOptions& opts) {
    check_dims(y, g);
    if (k < 1) throw UsageError("factor count k must be >= 1");
    if (lambda_ell < 0.0) throw UsageError("lambda_ell must be >= 0");
    const int n = g.n(), p = g.p();
    const long step_cols = 1 + p + static_cast<long>(p) * k;
    if (opts.compute_inference && n <= effective_dim(p, 2 * k))
        throw InfeasibleError("insufficient sample for rank-" + std::to_string(2 * k) +
                              " fit: n = " + std::to_string(n) + " <= d_r = " +
                              std::to_string(effective_dim(p, 2 * k)));
    if (lambda_ell == 0.0 && step_cols > n)
        throw NumericalError("per-step design has " + std::to_string(step_cols) +
                             " columns > n = " + std::to_string(n) +
                             "; lambda_ell > 0 required");

    struct Run {
        LowRankTheta theta;
        double loglik = -std::numeric_limits<double>::infinity();
        int sweeps = 0;
        bool converged = false;
        std::vector<double> trace;
    };

    Run best;
    for (int start = 0; start < std::max(1, opts.als_starts); ++start) {
        auto rng = make_rng(opts.seed, "als-init-" + std::to_string(start));
        std::normal_distribution<double> gauss(0.0, 1.0);
        const double scale = 1.0 / std::sqrt(static_cast<double>(p));
        Eigen::MatrixXd B(p, k);
        for (int c = 0; c < k; ++c)
            for (int j = 0; j < p; ++j) B(j, c) = scale * gauss(rng);
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, k);
        double gamma = 0.0;
        Eigen::VectorXd xi = Eigen::VectorXd::Zero(p);

        auto unpack = [&](const Eigen::VectorXd& t, Eigen::MatrixXd& factor) {
            gamma = t[0];
            xi = t.segment(1, p);
            factor = Eigen::Map<const Eigen::MatrixXd>(t.data() + 1 + p, p, k);
        };

        Run run;
        double prev = -std::numeric_limits<double>::infinity();
        for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
            unpack(als_fix_b_step(y, g, B, lambda_ell), A);   // solve for A
            unpack(als_fix_b_step(y, g, A, lambda_ell), B);   // roles swapped
            ++run.sweeps;

            const LowRankTheta theta = LowRankTheta::make_rank2k(gamma, xi, A, B);
            const double ll = penalized_loglik(theta, y, g, lambda_ell);
            if (!std::isfinite(ll))
                throw NumericalError("non-finite objective in ALS fit");
            run.trace.push_back(ll);
            if (sweep > 0 && ll - prev < opts.objective_tol) {
                run.converged = true;
                prev = ll;
                break;
            }
            prev = ll;
        }
        run.theta = LowRankTheta::make_rank2k(gamma, xi, A, B);
        run.loglik = prev;
        if (run.loglik > best.loglik) best = run;
    }

    FitResult fit;
    fit.theta = best.theta;
    fit.lambda_ell = lambda_ell;
    fit.iterations = best.sweeps;
    fit.converged = best.converged;
    fit.final_penalized_loglik = best.loglik;
    fit.objective_trace = best.trace;
    finish_fit(fit, y, g, opts);
    return fit;
}

double cv_lambda_ell(const Eigen::VectorXd& y, const GenotypeData& g, RankSpec rank,
                     const std::vector<double>& grid, int folds, std::uint64_t seed,
                     const FitOptions& opts) {
    rank.validate();
    check_dims(y, g);
    if (grid.empty()) throw UsageError("lambda_ell grid must be nonempty");
    for (double l : grid)
        if (l < 0.0) throw UsageError("lambda_ell grid values must be >= 0");
    const int n = g.n();
    if (folds < 2) throw UsageError("cross-validation needs at least 2 folds");
    if (n < folds)
        throw InfeasibleError("cross-validation needs n >= K, got n = " +
                              std::to_string(n) + ", K = " + std::to_string(folds));

    std::vector<double> sorted(grid);
    std::sort(sorted.begin(), sorted.end());

    auto rng = make_rng(seed, "cv-lambda-ell");
    const std::vector<int> perm = random_permutation(n, rng);

    std::vector<double> sse(sorted.size(), 0.0);
    int offset = 0;
    for (int f = 0; f < folds; ++f) {
        const int size = n / folds + (f < n % folds ? 1 : 0);
        std::vector<int> test(perm.begin() + offset, perm.begin() + offset + size);
        std::vector<int> train;
        train.reserve(n - size);
        train.insert(train.end(), perm.begin(), perm.begin() + offset);
        train.insert(train.end(), perm.begin() + offset + size, perm.end());
        offset += size;

        const GenotypeData g_train = g.subset_rows(train);
        const GenotypeData g_test = g.subset_rows(test);
        Eigen::VectorXd y_train(train.size()), y_test(test.size());
        for (std::size_t i = 0; i < train.size(); ++i) y_train[i] = y[train[i]];
        for (std::size_t i = 0; i < test.size(); ++i) y_test[i] = y[test[i]];

        FitOptions fold_opts = opts;
        fold_opts.compute_inference = false;
        fold_opts.seed = derive_seed(seed, "cv-fold-" + std::to_string(f));

        for (std::size_t j = 0; j < sorted.size(); ++j) {
            const FitResult fit =
                rank.is_rank1() ? fit_rank1(y_train, g_train, sorted[j], fold_opts)
                                : fit_rank2k(y_train, g_train, sorted[j], rank.k(), fold_opts);
            sse[j] += (y_test - linear_predictor(g_test, fit.theta)).squaredNorm();
        }
    }

    // Ascending scan with <= keeps the larger lambda on ties.
    std::size_t pick = 0;
    for (std::size_t j = 1; j < sorted.size(); ++j)
        if (sse[j] <= sse[pick]) pick = j;
    return sorted[pick];
}

std::vector<double> default_lambda_ell_grid(int n, long m) {
    const double center = static_cast<double>(n) / static_cast<double>(m);
    std::vector<double> grid(10);
    for (int i = 0; i < 10; ++i) {
        const double e = -3.0 + 6.0 * i / 9.0;
        grid[i] = center * std::pow(10.0, e);
    }
    return grid;
}

double estimate_sigma2(const FitResult& fit, const Eigen::VectorXd& y,
                       const GenotypeData& g) {
    check_dims(y, g);
    return sigma2_from_theta(fit.theta, y, g);
}

Eigen::VectorXd estimate_cov(const FitResult& fit, const GenotypeData& g,
                             double lambda_ell, int n) {
    return wald_se_from_theta(fit.theta, g, fit.sigma2, lambda_ell, n);
}

Eigen::MatrixXd wald_covariance(const LowRankTheta& theta, const GenotypeData& g,
                                double sigma2, double lambda_ell) {
    const CovFactor f = cov_factor(theta, g);
    const Eigen::ArrayXd inv = 1.0 / (f.eigvals.array() + lambda_ell / g.n());
    return sigma2 * (f.t * inv.matrix().asDiagonal() * f.t.transpose());
}

}  // namespace slr
