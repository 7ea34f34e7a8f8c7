#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "slr/design.hpp"
#include "slr/genotype.hpp"

namespace slr {

// Declared model rank: 1 (sign-symmetric rank-1 form) or an even rank 2k
// (factor form A B^T + B A^T).
struct RankSpec {
    int rank = 1;

    [[nodiscard]] bool is_rank1() const { return rank == 1; }
    [[nodiscard]] int k() const { return rank / 2; }
    void validate() const;
};

// Effective parameter count d_r = 1 + p + (p r - r(r-1)/2) of the rank-r
// model; used as the error-variance divisor, not the raw parameter count.
[[nodiscard]] long effective_dim(int p, int rank);

struct FitOptions {
    double gradient_tol = 1e-8;   // Newton stop: max-norm of the gradient
    int max_iter = 200;           // Newton iterations per sign branch
    int max_halvings = 30;        // step-halving line search
    double objective_tol = 1e-8;  // ALS stop: penalized log-likelihood gain
    int max_sweeps = 500;         // ALS sweeps
    int als_starts = 1;           // random restarts, best objective wins
    std::uint64_t seed = 0;
    // CV disables the sigma^2 / standard-error stage (and its n > d_r
    // requirement) for held-out fits.
    bool compute_inference = true;
};

struct FitResult {
    LowRankTheta theta;
    Eigen::VectorXd beta;     // beta(theta) over the full design of p loci
    double sigma2 = 0.0;
    Eigen::VectorXd se_beta;  // sqrt(diag(Sigma0_hat)/n), aligned with beta
    double lambda_ell = 0.0;
    long d_r = 0;
    int iterations = 0;
    double final_penalized_loglik = 0.0;
    bool converged = false;
    // Penalized log-likelihood after each Newton step / ALS sweep.
    std::vector<double> objective_trace;
};

// l_lambda(theta) = -1/2 |Y - X beta(theta)|^2 - lambda/2 |theta|^2, where
// |theta|^2 sums squares of all raw parameters including the intercept.
double penalized_loglik(const LowRankTheta& theta, const Eigen::VectorXd& y,
                        const GenotypeData& g, double lambda_ell);

// Damped Newton (Gauss-Newton Hessian) run separately under u = +1 and
// u = -1; the sign with the larger penalized log-likelihood wins.
FitResult fit_rank1(const Eigen::VectorXd& y, const GenotypeData& g,
                    double lambda_ell, const FitOptions& opts = {});

// Alternating least squares on the factor form; each half-step is an exact
// ridge solve, so the penalized log-likelihood never decreases.
FitResult fit_rank2k(const Eigen::VectorXd& y, const GenotypeData& g,
                     double lambda_ell, int k, const FitOptions& opts = {});

// Explicit per-step ALS design [1, G, M(B)] with
// M(B)[i, (c,l)] = g_il (g_i' B_c - g_il B_lc); column block order follows
// vec(A). Exposed so the ridge sub-solve can be checked against a dense
// penalized least-squares oracle.
Eigen::MatrixXd als_design_fixed_b(const GenotypeData& g, const Eigen::MatrixXd& B);

// One fixed-B ridge solve: (X_B' X_B + lambda I)^{-1} X_B' Y, returning
// theta_B = (gamma, xi, vec A).
Eigen::VectorXd als_fix_b_step(const Eigen::VectorXd& y, const GenotypeData& g,
                               const Eigen::MatrixXd& B, double lambda_ell);

// K-fold cross-validation for the ridge penalty. Contiguous folds over a
// seeded shuffle; minimizes held-out squared prediction error; ties break
// toward the larger lambda. Deterministic given the seed.
double cv_lambda_ell(const Eigen::VectorXd& y, const GenotypeData& g, RankSpec rank,
                     const std::vector<double>& grid, int folds, std::uint64_t seed,
                     const FitOptions& opts = {});

// 10 points log-spaced over [1e-3, 1e3] * (n/m).
std::vector<double> default_lambda_ell_grid(int n, long m);

// |Y - X beta_hat|^2 / (n - d_r).
double estimate_sigma2(const FitResult& fit, const Eigen::VectorXd& y,
                       const GenotypeData& g);

// Plug-in standard errors for beta_hat: with Delta0 = Delta(theta_hat),
// V_n = X'X/n, and U L U' the eigendecomposition of Delta0' V_n Delta0
// truncated to its d_r leading eigenvalues above 1e-10 of the largest,
// Sigma0_hat = sigma2 * Delta0 {U (L + lambda/n I) U'}^- Delta0', and the
// returned vector is sqrt(diag(Sigma0_hat)/n).
Eigen::VectorXd estimate_cov(const FitResult& fit, const GenotypeData& g,
                             double lambda_ell, int n);

// Full Sigma0_hat for small instances (diagnostics and tests).
Eigen::MatrixXd wald_covariance(const LowRankTheta& theta, const GenotypeData& g,
                                double sigma2, double lambda_ell);

}  // namespace slr
