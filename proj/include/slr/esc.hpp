#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "slr/genotype.hpp"
#include "slr/screening.hpp"

namespace slr {

enum class EscMethod { ESC, SC };

struct EscConfig {
    double split_fraction = 0.5;
    std::uint64_t seed = 0;
    std::vector<double> lambda_m_grid;  // empty -> grid from the step-1 null-path point
    ScreenConfig screen;
    double alpha = 0.05;  // cleaning significance level
    EscMethod method = EscMethod::ESC;
    int cv_folds = 10;    // step-1 lasso CV

    void validate() const;  // fails before any computation, naming the field
};

struct StageTrace {
    int n = 0, p = 0;
    int n1 = 0, n2 = 0;        // screening / cleaning half sizes
    int g_size = 0;            // |G| loci surviving step 1
    long expanded_size = 0;    // |E(G)| terms, intercept included
    int screened_size = 0;     // |S| terms, intercept included
    int selected_size = 0;     // |M| terms, intercept included
    bool empty_main_screen = false;
    bool dropped_aliased = false;
};

struct EscResult {
    SelectionModel selected;   // M with LSE estimates, t-statistics, p-values
    SelectionModel screened;   // S in original locus labels
    std::vector<int> g_loci;   // G, 1-based ascending
    StageTrace trace;
    EscConfig config;
};

// Seeded uniform random partition of {0,...,n-1} into parts of size
// floor(f n) and n - floor(f n); disjoint, exhaustive, deterministic.
std::pair<std::vector<int>, std::vector<int>> split_data(int n, double fraction,
                                                         std::uint64_t seed);

struct Step1Result {
    std::vector<int> g_loci;             // 1-based, ascending
    std::vector<TermIndex> expanded;     // E(G): intercept, mains, pairwise interactions
    double lambda_m = 0.0;
    bool empty = false;
};

// Main-effects-only Lasso on all p loci with CV-chosen lambda_m; expands the
// nonzero loci with all their pairwise interactions.
Step1Result step1_main_lasso(const Eigen::VectorXd& y1, const GenotypeData& g1,
                             const std::vector<double>& lambda_m_grid, int cv_folds,
                             std::uint64_t seed);

// ESC: SLR-screening with the low-rank model fit over the loci of G only.
// SC: a single CV-tuned Lasso over the expanded design. Terms come back in
// original locus labels.
SelectionModel step2_screen(const Eigen::VectorXd& y1, const GenotypeData& g1,
                            const Step1Result& step1, EscMethod method,
                            const ScreenConfig& config);

// Upper alpha/(2|S|) Student-t quantile at n2 - 1 - |S| degrees of freedom.
double cleaning_threshold(int n2, int s_size, double alpha);

// LSE on the cleaning half restricted to S, Bonferroni t-tests at level
// alpha / (2|S|) with n2 - 1 - |S| degrees of freedom (|S| counted without
// the intercept). Aliased columns are dropped, later-ordered first.
SelectionModel step3_clean(const Eigen::VectorXd& y2, const GenotypeData& g2,
                           const SelectionModel& s, double alpha,
                           bool* dropped_aliased = nullptr);

EscResult run_esc(const Eigen::VectorXd& y, const GenotypeData& g,
                  const EscConfig& config);

}  // namespace slr
