#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "slr/design.hpp"

namespace slr {

struct LassoOptions {
    double tol = 1e-7;  // max coefficient change per sweep, original scale
    int max_sweeps = 100000;
};

struct LassoResult {
    Eigen::VectorXd beta;  // original scale, aligned with design columns
    int sweeps = 0;
    bool converged = false;
};

// Minimizes 1/2 |Y - X beta|^2 + lambda_s |beta|_1 by cyclic coordinate
// descent with soft-thresholding. Columns are scaled to unit l2 norm
// internally and coefficients reported on the original scale; intercept
// columns are unpenalized. At convergence the KKT conditions hold:
// |x_j'(Y - X beta)| <= lambda_s for beta_j = 0 and = lambda_s sign(beta_j)
// otherwise.
LassoResult lasso_fit(const DesignMatrix& x, const Eigen::VectorXd& y,
                      double lambda_s, const LassoOptions& opts = {});

// Smallest lambda_s with empty penalized support:
// max_j |x_j'(Y - ybar 1)| over penalized columns (centering only when an
// intercept column is present).
double lasso_lambda_max(const DesignMatrix& x, const Eigen::VectorXd& y);

// `points` values log-spaced from lambda_max down to 1e-3 * lambda_max.
std::vector<double> default_lambda_s_grid(double lambda_max, int points = 50);

// K-fold CV over the grid; same fold mechanics and tie-breaking as
// cv_lambda_ell (ties toward larger lambda). Warm starts down the path.
double cv_lambda_s(const DesignMatrix& x, const Eigen::VectorXd& y,
                   const std::vector<double>& grid, int folds, std::uint64_t seed,
                   const LassoOptions& opts = {});

}  // namespace slr
