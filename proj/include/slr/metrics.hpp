#pragma once

#include <vector>

#include "slr/screening.hpp"
#include "slr/simulate.hpp"

namespace slr {

struct ReplicateMetrics {
    int m_size = 0;        // selected terms, intercept excluded
    int m0_size = 0;       // true terms
    int true_positives = 0;
    bool exact = false;
    double fdr = 0.0;
    bool type1 = false;
};

struct MetricReport {
    double power = 0.0;
    double exact_discovery = 0.0;
    double fdr = 0.0;
    double type1 = 0.0;
    int replicates = 0;
    bool power_defined = true;  // false when every replicate had an empty truth
    std::vector<ReplicateMetrics> per_replicate;
};

// Selection-quality metrics over paired replicates. The intercept is
// excluded from both the selected model and the truth before comparison;
// power averages |M cap M0| / |M0| over replicates with nonempty truth;
// FDR uses the 0/0 = 0 convention; type-I is the fraction of replicates
// selecting any false term.
MetricReport compute_metrics(const std::vector<SelectionModel>& selected,
                             const std::vector<TruthSet>& truths);

}  // namespace slr
