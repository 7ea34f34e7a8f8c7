#include "slr/benchmark.hpp"

#include <cstdio>
#include <optional>
#include <ostream>

#include "slr/errors.hpp"
#include "slr/parallel.hpp"

namespace slr {

namespace {

std::string fmt_value(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace

const char* bench_method_name(BenchMethod m) {
    switch (m) {
        case BenchMethod::SC: return "SC";
        case BenchMethod::ESC1: return "ESC(1)";
        case BenchMethod::ESC2: return "ESC(2)";
    }
    return "?";
}

BenchMethod bench_method_from_name(const std::string& name) {
    if (name == "SC") return BenchMethod::SC;
    if (name == "ESC1" || name == "ESC(1)") return BenchMethod::ESC1;
    if (name == "ESC2" || name == "ESC(2)") return BenchMethod::ESC2;
    throw UsageError("unknown method name: " + name + " (expected SC, ESC1, ESC2)");
}

void BenchSpec::validate() const {
    if (models.empty() || betas.empty() || methods.empty())
        throw UsageError("benchmark grid needs at least one model, beta, and method");
    if (replicates < 1) throw UsageError("replicates must be >= 1");
    if (threads < 1) throw UsageError("threads must be >= 1");
    SimSpec probe;
    probe.n = n;
    probe.p = p;
    probe.block_size = block_size;
    probe.within_block_corr = within_block_corr;
    probe.sigma_eps = sigma_eps;
    for (SimModel m : models) {
        probe.model = m;
        probe.validate();
    }
    esc.validate();
}

std::vector<BenchCellResult> run_benchmark(const BenchSpec& spec) {
    spec.validate();

    struct Cell {
        SimModel model;
        double beta;
    };
    std::vector<Cell> cells;
    for (SimModel m : spec.models)
        for (double b : spec.betas) cells.push_back({m, b});
    const int n_methods = static_cast<int>(spec.methods.size());
    const int reps = spec.replicates;

    // One slot per (cell, replicate, method); identical data per method.
    struct Slot {
        std::optional<SelectionModel> selected;
        TruthSet truth;
    };
    std::vector<Slot> slots(cells.size() * reps * n_methods);

    const int jobs = static_cast<int>(cells.size()) * reps;
    parallel_for(jobs, spec.threads, [&](int job) {
        const int cell_idx = job / reps;
        const int rep = job % reps;
        const Cell& cell = cells[cell_idx];

        SimSpec sim;
        sim.n = spec.n;
        sim.p = spec.p;
        sim.block_size = spec.block_size;
        sim.within_block_corr = spec.within_block_corr;
        sim.sigma_eps = spec.sigma_eps;
        sim.model = cell.model;
        sim.beta = cell.beta;
        sim.seed = spec.base_seed + static_cast<std::uint64_t>(rep);

        const GenotypeData g = gen_genotypes(sim);
        auto [y, truth] = gen_trait(g, sim);

        for (int mi = 0; mi < n_methods; ++mi) {
            Slot& slot = slots[(static_cast<std::size_t>(cell_idx) * reps + rep) * n_methods + mi];
            slot.truth = truth;
            EscConfig cfg = spec.esc;
            cfg.seed = sim.seed;  // same split and step 1 across methods
            switch (spec.methods[mi]) {
                case BenchMethod::SC:
                    cfg.method = EscMethod::SC;
                    break;
                case BenchMethod::ESC1:
                    cfg.method = EscMethod::ESC;
                    cfg.screen.rank = RankSpec{1};
                    break;
                case BenchMethod::ESC2:
                    cfg.method = EscMethod::ESC;
                    cfg.screen.rank = RankSpec{2};
                    break;
            }
            try {
                slot.selected = run_esc(y, g, cfg).selected;
            } catch (const std::exception&) {
                slot.selected.reset();  // recorded below, not fatal
            }
        }
    });

    std::vector<BenchCellResult> results;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        for (int mi = 0; mi < n_methods; ++mi) {
            BenchCellResult cell_res;
            cell_res.model = cells[c].model;
            cell_res.beta = cells[c].beta;
            cell_res.method = spec.methods[mi];
            std::vector<SelectionModel> models;
            std::vector<TruthSet> truths;
            for (int rep = 0; rep < reps; ++rep) {
                const Slot& slot = slots[(c * reps + rep) * n_methods + mi];
                if (slot.selected) {
                    models.push_back(*slot.selected);
                    truths.push_back(slot.truth);
                } else {
                    ++cell_res.failed;
                }
            }
            cell_res.report = compute_metrics(models, truths);
            results.push_back(std::move(cell_res));
        }
    }
    return results;
}

void write_benchmark_csv(std::ostream& os, const std::vector<BenchCellResult>& results) {
    os << "model,beta,method,metric,value,replicates\n";
    for (const auto& r : results) {
        const auto row = [&](const char* metric, const std::string& value) {
            os << sim_model_name(r.model) << ',' << fmt_value(r.beta) << ','
               << bench_method_name(r.method) << ',' << metric << ',' << value << ','
               << r.report.replicates << '\n';
        };
        row("power", r.report.power_defined ? fmt_value(r.report.power) : "NA");
        row("exact_discovery", fmt_value(r.report.exact_discovery));
        row("fdr", fmt_value(r.report.fdr));
        row("type1", fmt_value(r.report.type1));
    }
}

}  // namespace slr
