#include "slr/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace slr {

namespace {

std::vector<TermIndex> non_intercept_terms(const std::vector<TermIndex>& terms) {
    std::vector<TermIndex> out;
    for (const auto& t : terms)
        if (t.kind != TermKind::Intercept) out.push_back(t);
    return out;
}

bool contains_term(const std::vector<TermIndex>& set, const TermIndex& t) {
    return std::find(set.begin(), set.end(), t) != set.end();
}

}  // namespace

MetricReport compute_metrics(const std::vector<SelectionModel>& selected,
                             const std::vector<TruthSet>& truths) {
    if (selected.size() != truths.size())
        throw std::invalid_argument("compute_metrics: sequence lengths differ");

    MetricReport rep;
    rep.replicates = static_cast<int>(selected.size());
    double power_sum = 0.0;
    int power_count = 0;
    int exact_count = 0, type1_count = 0;
    double fdr_sum = 0.0;

    for (std::size_t r = 0; r < selected.size(); ++r) {
        const std::vector<TermIndex> m = non_intercept_terms(selected[r].terms);
        const std::vector<TermIndex> m0 = non_intercept_terms(truths[r].m0);

        ReplicateMetrics rm;
        rm.m_size = static_cast<int>(m.size());
        rm.m0_size = static_cast<int>(m0.size());
        int false_positives = 0;
        for (const auto& t : m) {
            if (contains_term(m0, t))
                ++rm.true_positives;
            else
                ++false_positives;
        }
        rm.exact = rm.true_positives == rm.m0_size && false_positives == 0;
        rm.fdr = m.empty() ? 0.0 : static_cast<double>(false_positives) / m.size();
        rm.type1 = false_positives > 0;

        if (!m0.empty()) {
            power_sum += static_cast<double>(rm.true_positives) / m0.size();
            ++power_count;
        }
        if (rm.exact) ++exact_count;
        if (rm.type1) ++type1_count;
        fdr_sum += rm.fdr;
        rep.per_replicate.push_back(rm);
    }

    const int n = rep.replicates;
    rep.power_defined = power_count > 0;
    rep.power = power_count > 0 ? power_sum / power_count : 0.0;
    rep.exact_discovery = n > 0 ? static_cast<double>(exact_count) / n : 0.0;
    rep.fdr = n > 0 ? fdr_sum / n : 0.0;
    rep.type1 = n > 0 ? static_cast<double>(type1_count) / n : 0.0;
    return rep;
}

}  // namespace slr
