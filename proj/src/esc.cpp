#include "slr/esc.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <string>

#include "slr/errors.hpp"
#include "slr/lasso.hpp"
#include "slr/rng.hpp"

namespace slr {

namespace {

// Re-throws stage failures with the stage name attached, preserving the
// error class so exit codes stay correct.
template <typename Fn>
auto with_stage(const char* stage, Fn&& fn) {
    try {
        return fn();
    } catch (const IngestionError& e) {
        throw IngestionError(std::string("[") + stage + "] " + e.what());
    } catch (const InfeasibleError& e) {
        throw InfeasibleError(std::string("[") + stage + "] " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(std::string("[") + stage + "] " + e.what());
    } catch (const UsageError& e) {
        throw UsageError(std::string("[") + stage + "] " + e.what());
    }
}

Eigen::VectorXd subset(const Eigen::VectorXd& y, const std::vector<int>& idx) {
    Eigen::VectorXd out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = y[idx[i]];
    return out;
}

TermIndex remap_term(const TermIndex& t, const std::vector<int>& loci, int orig_p) {
    switch (t.kind) {
        case TermKind::Intercept: return intercept_term();
        case TermKind::Main: return main_term(loci[t.a - 1], orig_p);
        case TermKind::Interaction:
            return interaction_term(loci[t.a - 1], loci[t.b - 1], orig_p);
    }
    return intercept_term();
}

}  // namespace

void EscConfig::validate() const {
    if (!(split_fraction > 0.0 && split_fraction < 1.0))
        throw UsageError("split_fraction must lie in (0,1), got " +
                         std::to_string(split_fraction));
    if (!(alpha > 0.0 && alpha < 1.0))
        throw UsageError("alpha must lie in (0,1), got " + std::to_string(alpha));
    if (cv_folds < 2) throw UsageError("cv_folds must be >= 2");
    for (double l : lambda_m_grid)
        if (l < 0.0) throw UsageError("lambda_m_grid values must be >= 0");
    screen.validate();
}

std::pair<std::vector<int>, std::vector<int>> split_data(int n, double fraction,
                                                         std::uint64_t seed) {
    if (n < 4) throw InfeasibleError("data split needs n >= 4, got n = " + std::to_string(n));
    if (!(fraction > 0.0 && fraction < 1.0))
        throw UsageError("split_fraction must lie in (0,1), got " + std::to_string(fraction));
    const int n1 = static_cast<int>(std::floor(fraction * n));
    if (n1 < 1 || n - n1 < 1)
        throw InfeasibleError("degenerate split sizes (" + std::to_string(n1) + ", " +
                              std::to_string(n - n1) + ")");
    auto rng = make_rng(seed, "esc-split");
    const std::vector<int> perm = random_permutation(n, rng);
    std::vector<int> d1(perm.begin(), perm.begin() + n1);
    std::vector<int> d2(perm.begin() + n1, perm.end());
    std::sort(d1.begin(), d1.end());
    std::sort(d2.begin(), d2.end());
    return {std::move(d1), std::move(d2)};
}

Step1Result step1_main_lasso(const Eigen::VectorXd& y1, const GenotypeData& g1,
                             const std::vector<double>& lambda_m_grid, int cv_folds,
                             std::uint64_t seed) {
    const int p = g1.p();
    std::vector<TermIndex> main_terms;
    main_terms.reserve(1 + p);
    main_terms.push_back(intercept_term());
    for (int j = 1; j <= p; ++j) main_terms.push_back(main_term(j, p));
    const DesignMatrix x = build_design(g1, main_terms);

    const std::vector<double> grid =
        lambda_m_grid.empty() ? default_lambda_s_grid(lasso_lambda_max(x, y1))
                              : lambda_m_grid;

    Step1Result res;
    res.lambda_m = cv_lambda_s(x, y1, grid, cv_folds, derive_seed(seed, "esc-step1"));
    const LassoResult fit = lasso_fit(x, y1, res.lambda_m);
    for (int j = 0; j < x.m(); ++j)
        if (x.terms[j].kind == TermKind::Main && fit.beta[j] != 0.0)
            res.g_loci.push_back(x.terms[j].a);

    res.expanded.push_back(intercept_term());
    for (int locus : res.g_loci) res.expanded.push_back(main_term(locus, p));
    for (std::size_t a = 0; a < res.g_loci.size(); ++a)
        for (std::size_t b = a + 1; b < res.g_loci.size(); ++b)
            res.expanded.push_back(interaction_term(res.g_loci[a], res.g_loci[b], p));
    std::sort(res.expanded.begin(), res.expanded.end());
    res.empty = res.g_loci.empty();
    return res;
}

SelectionModel step2_screen(const Eigen::VectorXd& y1, const GenotypeData& g1,
                            const Step1Result& step1, EscMethod method,
                            const ScreenConfig& config) {
    if (step1.empty) {
        SelectionModel s;
        s.provenance = method == EscMethod::ESC ? Provenance::SLR : Provenance::Lasso;
        s.terms = {intercept_term()};
        s.estimates = Eigen::VectorXd::Constant(1, y1.mean());
        s.warning = true;
        return s;
    }

    if (method == EscMethod::ESC) {
        const GenotypeData sub = g1.subset_loci(step1.g_loci);
        const SlrScreenResult screen = slr_screen(y1, sub, config);
        SelectionModel s = screen.slr;
        for (auto& t : s.terms) t = remap_term(t, step1.g_loci, g1.p());
        return s;
    }

    // SC baseline: one Lasso over the expanded design.
    const DesignMatrix x = build_design(g1, step1.expanded);
    const std::vector<double> grid =
        config.lambda_s_grid.empty()
            ? default_lambda_s_grid(lasso_lambda_max(x, y1))
            : config.lambda_s_grid;
    const double lambda = cv_lambda_s(x, y1, grid, config.cv_folds,
                                      derive_seed(config.seed, "sc-screen"));
    const LassoResult fit = lasso_fit(x, y1, lambda);

    SelectionModel s;
    s.provenance = Provenance::Lasso;
    for (int j = 0; j < x.m(); ++j) {
        if (x.terms[j].kind == TermKind::Intercept || fit.beta[j] != 0.0) {
            s.terms.push_back(x.terms[j]);
            s.estimates.conservativeResize(s.terms.size());
            s.estimates[s.terms.size() - 1] = fit.beta[j];
        }
    }
    return s;
}

double cleaning_threshold(int n2, int s_size, double alpha) {
    const int df = n2 - 1 - s_size;
    if (df < 1)
        throw InfeasibleError("cleaning infeasible: n2 = " + std::to_string(n2) +
                              " <= 1 + |S| with |S| = " + std::to_string(s_size));
    return boost::math::quantile(boost::math::students_t(df),
                                 1.0 - alpha / (2.0 * s_size));
}

SelectionModel step3_clean(const Eigen::VectorXd& y2, const GenotypeData& g2,
                           const SelectionModel& s, double alpha,
                           bool* dropped_aliased) {
    const int n2 = g2.n();
    if (dropped_aliased) *dropped_aliased = false;

    // Feasibility is stated on the incoming S, before any alias dropping.
    const int s_input = s.size_excluding_intercept();
    if (s_input > 0 && n2 <= 1 + s_input)
        throw InfeasibleError("cleaning infeasible: n2 = " + std::to_string(n2) +
                              " <= 1 + |S| with |S| = " + std::to_string(s_input));

    // Cleaning design over S, intercept guaranteed first.
    std::vector<TermIndex> terms = s.terms;
    if (terms.empty() || terms.front().kind != TermKind::Intercept)
        terms.insert(terms.begin(), intercept_term());
    DesignMatrix x = build_design(g2, terms);

    // Drop aliased columns, later-ordered first: modified Gram-Schmidt with a
    // relative residual threshold.
    std::vector<int> kept;
    Eigen::MatrixXd q(n2, 0);
    for (int j = 0; j < x.m(); ++j) {
        Eigen::VectorXd col = x.X.col(j);
        const double norm0 = col.norm();
        if (q.cols() > 0) col -= q * (q.transpose() * col);
        if (col.norm() > 1e-8 * std::max(1.0, norm0)) {
            kept.push_back(j);
            q.conservativeResize(Eigen::NoChange, q.cols() + 1);
            q.col(q.cols() - 1) = col / col.norm();
        } else if (dropped_aliased) {
            *dropped_aliased = true;
        }
    }

    std::vector<TermIndex> kept_terms;
    Eigen::MatrixXd xk(n2, kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
        kept_terms.push_back(x.terms[kept[i]]);
        xk.col(i) = x.X.col(kept[i]);
    }

    int s_size = 0;  // |S| excluding the intercept, after alias drops
    for (const auto& t : kept_terms)
        if (t.kind != TermKind::Intercept) ++s_size;

    SelectionModel m;
    m.provenance = Provenance::Cleaned;

    if (s_size == 0) {
        m.terms = {intercept_term()};
        m.estimates = Eigen::VectorXd::Constant(1, y2.mean());
        return m;
    }

    if (n2 <= 1 + s_size)
        throw InfeasibleError("cleaning infeasible: n2 = " + std::to_string(n2) +
                              " <= 1 + |S| with |S| = " + std::to_string(s_size));

    const int df = n2 - 1 - s_size;
    const Eigen::MatrixXd xtx = xk.transpose() * xk;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
    const Eigen::VectorXd est = ldlt.solve(xk.transpose() * y2);
    const double rss = (y2 - xk * est).squaredNorm();
    const double sigma2 = rss / df;
    const Eigen::MatrixXd xtx_inv =
        ldlt.solve(Eigen::MatrixXd::Identity(xk.cols(), xk.cols()));

    const boost::math::students_t tdist(df);
    const double threshold = cleaning_threshold(n2, s_size, alpha);

    std::vector<int> selected;
    Eigen::VectorXd tstat(kept.size()), pval(kept.size());
    for (std::size_t j = 0; j < kept.size(); ++j) {
        const double se = std::sqrt(std::max(0.0, sigma2 * xtx_inv(j, j)));
        const double t = se > 0.0 ? est[j] / se : 0.0;
        tstat[j] = t;
        pval[j] = 2.0 * boost::math::cdf(tdist, -std::abs(t));
        const bool is_intercept = kept_terms[j].kind == TermKind::Intercept;
        if (is_intercept || std::abs(t) > threshold) selected.push_back(static_cast<int>(j));
    }

    m.terms.reserve(selected.size());
    m.estimates.resize(selected.size());
    m.tstats.resize(selected.size());
    m.pvalues.resize(selected.size());
    for (std::size_t i = 0; i < selected.size(); ++i) {
        const int j = selected[i];
        m.terms.push_back(kept_terms[j]);
        m.estimates[i] = est[j];
        m.tstats[i] = tstat[j];
        m.pvalues[i] = pval[j];
    }
    return m;
}

EscResult run_esc(const Eigen::VectorXd& y, const GenotypeData& g,
                  const EscConfig& config) {
    config.validate();
    if (y.size() != g.n())
        throw IngestionError("phenotype length does not match genotype rows");

    const auto [d1, d2] = with_stage("split", [&] {
        return split_data(g.n(), config.split_fraction, config.seed);
    });
    const GenotypeData g1 = g.subset_rows(d1);
    const GenotypeData g2 = g.subset_rows(d2);
    const Eigen::VectorXd y1 = subset(y, d1);
    const Eigen::VectorXd y2 = subset(y, d2);

    const Step1Result step1 = with_stage("step1", [&] {
        return step1_main_lasso(y1, g1, config.lambda_m_grid, config.cv_folds,
                                config.seed);
    });

    ScreenConfig screen_cfg = config.screen;
    screen_cfg.seed = derive_seed(config.seed, "esc-step2");
    const SelectionModel s = with_stage("step2", [&] {
        return step2_screen(y1, g1, step1, config.method, screen_cfg);
    });

    bool dropped = false;
    const SelectionModel m = with_stage("step3", [&] {
        return step3_clean(y2, g2, s, config.alpha, &dropped);
    });

    EscResult res;
    res.selected = m;
    res.screened = s;
    res.g_loci = step1.g_loci;
    res.config = config;
    res.trace.n = g.n();
    res.trace.p = g.p();
    res.trace.n1 = static_cast<int>(d1.size());
    res.trace.n2 = static_cast<int>(d2.size());
    res.trace.g_size = static_cast<int>(step1.g_loci.size());
    res.trace.expanded_size = static_cast<long>(step1.expanded.size());
    res.trace.screened_size = static_cast<int>(s.terms.size());
    res.trace.selected_size = static_cast<int>(m.terms.size());
    res.trace.empty_main_screen = step1.empty;
    res.trace.dropped_aliased = dropped;
    return res;
}

}  // namespace slr
