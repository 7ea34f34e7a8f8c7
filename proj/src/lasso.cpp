#include "slr/lasso.hpp"

#include <algorithm>
#include <cmath>

#include "slr/errors.hpp"
#include "slr/rng.hpp"

namespace slr {

namespace {

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

bool has_intercept(const DesignMatrix& x) {
    for (const auto& t : x.terms)
        if (t.kind == TermKind::Intercept) return true;
    return false;
}

// Core solver on raw matrices; `penalized[j]` marks columns under the
// 1-norm penalty. Starts from `beta` (warm start), original scale.
LassoResult cd_solve(const Eigen::MatrixXd& x, const std::vector<bool>& penalized,
                     const Eigen::VectorXd& y, double lambda,
                     const LassoOptions& opts, Eigen::VectorXd beta) {
    const int m = static_cast<int>(x.cols());
    Eigen::VectorXd norms(m);
    for (int j = 0; j < m; ++j) norms[j] = x.col(j).norm();

    Eigen::VectorXd r = y - x * beta;
    LassoResult res;
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (int j = 0; j < m; ++j) {
            if (norms[j] == 0.0) continue;  // constant-zero column stays out
            const double old = beta[j];
            // rho = z_j'(r + z_j beta_j~) with z_j = x_j / |x_j|.
            const double rho = x.col(j).dot(r) / norms[j] + norms[j] * old;
            double scaled = rho;
            if (penalized[j]) {
                const double t = lambda / norms[j];
                scaled = soft_threshold(rho, t);
                // Boundary decisions within machine precision collapse to an
                // exact zero so the reported support is stable.
                if (std::abs(scaled) <= t * 1e-12) scaled = 0.0;
            }
            const double next = scaled / norms[j];
            if (next != old) {
                r.noalias() -= x.col(j) * (next - old);
                beta[j] = next;
                max_change = std::max(max_change, std::abs(next - old));
            }
        }
        ++res.sweeps;
        if (max_change <= opts.tol) {
            res.converged = true;
            break;
        }
    }
    res.beta = std::move(beta);
    return res;
}

std::vector<bool> penalized_mask(const DesignMatrix& x) {
    std::vector<bool> mask(x.terms.size());
    for (std::size_t j = 0; j < x.terms.size(); ++j)
        mask[j] = x.terms[j].kind != TermKind::Intercept;
    return mask;
}

}  // namespace

LassoResult lasso_fit(const DesignMatrix& x, const Eigen::VectorXd& y,
                      double lambda_s, const LassoOptions& opts) {
    if (x.m() < 1) throw std::invalid_argument("lasso design needs at least one column");
    if (y.size() != x.n())
        throw std::invalid_argument("phenotype length does not match design rows");
    if (!y.allFinite() || !x.X.allFinite())
        throw NumericalError("non-finite inputs to lasso_fit");
    if (lambda_s < 0.0) throw UsageError("lambda_s must be >= 0");
    return cd_solve(x.X, penalized_mask(x), y, lambda_s, opts,
                    Eigen::VectorXd::Zero(x.m()));
}

double lasso_lambda_max(const DesignMatrix& x, const Eigen::VectorXd& y) {
    const Eigen::VectorXd centered =
        has_intercept(x) ? Eigen::VectorXd(y.array() - y.mean()) : y;
    double lmax = 0.0;
    for (int j = 0; j < x.m(); ++j) {
        if (x.terms[j].kind == TermKind::Intercept) continue;
        lmax = std::max(lmax, std::abs(x.X.col(j).dot(centered)));
    }
    return lmax;
}

std::vector<double> default_lambda_s_grid(double lambda_max, int points) {
    if (lambda_max <= 0.0) return {0.0};
    std::vector<double> grid(points);
    for (int i = 0; i < points; ++i) {
        const double e = -3.0 * i / (points - 1);
        grid[i] = lambda_max * std::pow(10.0, e);
    }
    return grid;
}

double cv_lambda_s(const DesignMatrix& x, const Eigen::VectorXd& y,
                   const std::vector<double>& grid, int folds, std::uint64_t seed,
                   const LassoOptions& opts) {
    if (grid.empty()) throw UsageError("lambda_s grid must be nonempty");
    const int n = x.n();
    if (folds < 2) throw UsageError("cross-validation needs at least 2 folds");
    if (n < folds)
        throw InfeasibleError("cross-validation needs n >= K, got n = " +
                              std::to_string(n) + ", K = " + std::to_string(folds));

    std::vector<double> path(grid);
    std::sort(path.begin(), path.end(), std::greater<>());  // warm-start order

    auto rng = make_rng(seed, "cv-lambda-s");
    const std::vector<int> perm = random_permutation(n, rng);
    const std::vector<bool> mask = penalized_mask(x);

    std::vector<double> sse(path.size(), 0.0);
    int offset = 0;
    for (int f = 0; f < folds; ++f) {
        const int size = n / folds + (f < n % folds ? 1 : 0);
        Eigen::MatrixXd x_train(n - size, x.m()), x_test(size, x.m());
        Eigen::VectorXd y_train(n - size), y_test(size);
        int tr = 0, te = 0;
        for (int i = 0; i < n; ++i) {
            const int row = perm[i];
            if (i >= offset && i < offset + size) {
                x_test.row(te) = x.X.row(row);
                y_test[te++] = y[row];
            } else {
                x_train.row(tr) = x.X.row(row);
                y_train[tr++] = y[row];
            }
        }
        offset += size;

        Eigen::VectorXd warm = Eigen::VectorXd::Zero(x.m());
        for (std::size_t j = 0; j < path.size(); ++j) {
            LassoResult fit = cd_solve(x_train, mask, y_train, path[j], opts, warm);
            warm = fit.beta;
            sse[j] += (y_test - x_test * fit.beta).squaredNorm();
        }
    }

    // Descending path; strict < keeps the larger lambda on ties.
    std::size_t pick = 0;
    for (std::size_t j = 1; j < path.size(); ++j)
        if (sse[j] < sse[pick]) pick = j;
    return path[pick];
}

}  // namespace slr
