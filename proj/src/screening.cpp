#include "slr/screening.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "slr/errors.hpp"
#include "slr/rng.hpp"

namespace slr {

bool SelectionModel::contains(const TermIndex& t) const {
    return std::find(terms.begin(), terms.end(), t) != terms.end();
}

int SelectionModel::size_excluding_intercept() const {
    int count = 0;
    for (const auto& t : terms)
        if (t.kind != TermKind::Intercept) ++count;
    return count;
}

void ScreenConfig::validate() const {
    if (alpha_ell <= 0.0) throw UsageError("alpha_ell must be > 0");
    if (cv_folds < 2) throw UsageError("cv_folds must be >= 2");
    if (top_k < 0) throw UsageError("top_k must be >= 0");
    rank.validate();
    for (double l : lambda_ell_grid)
        if (l < 0.0) throw UsageError("lambda_ell_grid values must be >= 0");
    for (double l : lambda_s_grid)
        if (l < 0.0) throw UsageError("lambda_s_grid values must be >= 0");
}

SelectionModel lr_screen(const FitResult& fit, double alpha_ell, int top_k) {
    const int p = fit.theta.p();
    const std::vector<TermIndex> terms = full_terms(p);
    const long m = fit.beta.size();
    if (static_cast<long>(terms.size()) != m || fit.se_beta.size() != m)
        throw std::invalid_argument("fit does not carry aligned beta and se_beta");

    Eigen::VectorXd stat(m);
    for (long j = 0; j < m; ++j) {
        const double b = fit.beta[j], se = fit.se_beta[j];
        if (se > 0.0)
            stat[j] = b / se;
        else
            stat[j] = b == 0.0 ? 0.0
                               : std::copysign(std::numeric_limits<double>::infinity(), b);
    }

    std::vector<bool> keep(m, false);
    keep[0] = true;  // intercept is included in the model all the time
    if (top_k > 0) {
        std::vector<long> order;
        order.reserve(m - 1);
        for (long j = 1; j < m; ++j)
            if (!(fit.se_beta[j] == 0.0 && fit.beta[j] == 0.0)) order.push_back(j);
        std::stable_sort(order.begin(), order.end(), [&](long a, long b) {
            return std::abs(stat[a]) > std::abs(stat[b]);
        });
        for (std::size_t i = 0; i < order.size() && i < static_cast<std::size_t>(top_k); ++i)
            keep[order[i]] = true;
    } else {
        for (long j = 1; j < m; ++j) {
            if (fit.se_beta[j] == 0.0)
                keep[j] = fit.beta[j] != 0.0;
            else
                keep[j] = std::abs(stat[j]) > alpha_ell;
        }
    }

    SelectionModel out;
    out.provenance = Provenance::LowRank;
    for (long j = 0; j < m; ++j)
        if (keep[j]) out.terms.push_back(terms[j]);
    out.estimates.resize(out.terms.size());
    out.tstats.resize(out.terms.size());
    long i = 0;
    for (long j = 0; j < m; ++j) {
        if (!keep[j]) continue;
        out.estimates[i] = fit.beta[j];
        out.tstats[i] = stat[j];
        ++i;
    }
    return out;
}

SlrScreenResult slr_screen(const Eigen::VectorXd& y, const GenotypeData& g,
                           const ScreenConfig& config) {
    config.validate();
    const int n = g.n(), p = g.p();

    // Stage 1: low-rank fit with CV-chosen ridge penalty, Wald screening.
    const std::vector<double> ell_grid =
        config.lambda_ell_grid.empty()
            ? default_lambda_ell_grid(n, full_design_size(p))
            : config.lambda_ell_grid;

    FitOptions fit_opts = config.fit;
    fit_opts.seed = derive_seed(config.seed, "slr-fit");
    fit_opts.compute_inference = true;

    SlrScreenResult res;
    res.lambda_ell = cv_lambda_ell(y, g, config.rank, ell_grid, config.cv_folds,
                                   derive_seed(config.seed, "slr-stage1"), config.fit);
    const FitResult fit =
        config.rank.is_rank1()
            ? fit_rank1(y, g, res.lambda_ell, fit_opts)
            : fit_rank2k(y, g, res.lambda_ell, config.rank.k(), fit_opts);
    res.lr = lr_screen(fit, config.alpha_ell, config.top_k);

    // Stage 2: sparsity by Lasso on the survivors.
    res.slr.provenance = Provenance::SLR;
    if (res.lr.size_excluding_intercept() == 0) {
        res.slr.terms = {intercept_term()};
        res.slr.estimates = Eigen::VectorXd::Constant(1, y.mean());
        res.slr.warning = true;
        res.lambda_s = std::numeric_limits<double>::quiet_NaN();
        return res;
    }

    const DesignMatrix reduced = build_design(g, res.lr.terms);
    const std::vector<double> s_grid =
        config.lambda_s_grid.empty()
            ? default_lambda_s_grid(lasso_lambda_max(reduced, y))
            : config.lambda_s_grid;
    res.lambda_s = cv_lambda_s(reduced, y, s_grid, config.cv_folds,
                               derive_seed(config.seed, "slr-stage2"));
    const LassoResult lasso = lasso_fit(reduced, y, res.lambda_s);

    for (int j = 0; j < reduced.m(); ++j) {
        const bool is_intercept = reduced.terms[j].kind == TermKind::Intercept;
        if (is_intercept || lasso.beta[j] != 0.0) {
            res.slr.terms.push_back(reduced.terms[j]);
            res.slr.estimates.conservativeResize(res.slr.terms.size());
            res.slr.estimates[res.slr.terms.size() - 1] = lasso.beta[j];
        }
    }
    return res;
}

}  // namespace slr
