#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "slr/esc.hpp"
#include "slr/metrics.hpp"
#include "slr/simulate.hpp"

namespace slr {

enum class BenchMethod { SC, ESC1, ESC2 };

const char* bench_method_name(BenchMethod m);
BenchMethod bench_method_from_name(const std::string& name);

struct BenchSpec {
    std::vector<SimModel> models{SimModel::M1};
    std::vector<double> betas{1.0};
    std::vector<BenchMethod> methods{BenchMethod::SC, BenchMethod::ESC1, BenchMethod::ESC2};
    int n = 400;
    int p = 100;             // desk-scale default; 1000 reproduces the full design
    int block_size = 5;
    double within_block_corr = 0.3;
    double sigma_eps = 1.0;
    int replicates = 50;
    std::uint64_t base_seed = 0;
    int threads = 1;
    EscConfig esc;           // template; method and rank set per column

    void validate() const;
};

struct BenchCellResult {
    SimModel model;
    double beta;
    BenchMethod method;
    MetricReport report;
    int failed = 0;  // replicates excluded from aggregation
};

// For each (model, beta) cell, generates paired replicate datasets with
// seed = base_seed + replicate index and runs every method on identical
// data. A failed replicate is recorded and excluded, not fatal.
std::vector<BenchCellResult> run_benchmark(const BenchSpec& spec);

// Tidy CSV: model,beta,method,metric,value,replicates. Power on an empty
// truth is written as NA.
void write_benchmark_csv(std::ostream& os, const std::vector<BenchCellResult>& results);

}  // namespace slr
