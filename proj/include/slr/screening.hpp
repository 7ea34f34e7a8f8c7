#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "slr/design.hpp"
#include "slr/genotype.hpp"
#include "slr/lasso.hpp"
#include "slr/lowrank.hpp"

namespace slr {

enum class Provenance { LowRank, SLR, Lasso, Cleaned };

// Ordered set of selected terms with estimates and, when a stage computes
// them, t-statistics and p-values. Terms are unique and in canonical design
// order.
struct SelectionModel {
    std::vector<TermIndex> terms;
    Eigen::VectorXd estimates;
    Eigen::VectorXd tstats;   // empty when the stage has none
    Eigen::VectorXd pvalues;  // empty when the stage has none
    Provenance provenance = Provenance::LowRank;
    bool warning = false;     // screening degenerated to intercept-only

    [[nodiscard]] bool contains(const TermIndex& t) const;
    [[nodiscard]] int size_excluding_intercept() const;
};

struct ScreenConfig {
    double alpha_ell = 1.96;  // two-sided 5% normal quantile
    RankSpec rank{1};
    std::vector<double> lambda_ell_grid;  // empty -> default_lambda_ell_grid
    std::vector<double> lambda_s_grid;    // empty -> grid from the null-path point
    int cv_folds = 10;
    std::uint64_t seed = 0;
    int top_k = 0;  // > 0: retain the K largest statistics instead of thresholding
    FitOptions fit;

    void validate() const;
};

// Stage 1 of SLR-screening: I_LR = {j : |beta_j| / se_j > alpha_ell}. The
// intercept is always retained; terms with se = 0 are dropped when the
// estimate is also 0 and retained otherwise.
SelectionModel lr_screen(const FitResult& fit, double alpha_ell, int top_k = 0);

struct SlrScreenResult {
    SelectionModel lr;   // stage-1 survivors with Wald statistics
    SelectionModel slr;  // stage-2 nonzero-coefficient terms (the screen output)
    double lambda_ell = 0.0;
    double lambda_s = 0.0;
};

// Two-stage SLR-screening: CV-tuned rank-r fit + Wald thresholding, then a
// CV-tuned Lasso restricted to the stage-1 survivors. I_SLR is a subset of
// I_LR by construction.
SlrScreenResult slr_screen(const Eigen::VectorXd& y, const GenotypeData& g,
                           const ScreenConfig& config);

}  // namespace slr
