// slrscan: batch CLI for low-rank interaction-model fitting, SLR-screening,
// the Extended Screen-and-Clean pipeline, and the simulation benchmark.
//
// Exit codes: 0 ok, 2 usage/config, 3 ingestion, 4 infeasible, 5 numerical.

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "slr/benchmark.hpp"
#include "slr/errors.hpp"
#include "slr/esc.hpp"
#include "slr/io.hpp"
#include "slr/lowrank.hpp"
#include "slr/parallel.hpp"
#include "slr/screening.hpp"
#include "slr/simulate.hpp"

namespace {

using nlohmann::json;

int g_verbosity = 1;

void log_line(const std::string& msg) {
    if (g_verbosity > 0) std::cerr << "[slrscan] " << msg << std::endl;
}

class StageTimer {
  public:
    explicit StageTimer(std::string name)
        : name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
    ~StageTimer() {
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - start_)
                            .count();
        log_line(name_ + " finished in " + std::to_string(ms) + " ms");
    }

  private:
    std::string name_;
    std::chrono::steady_clock::time_point start_;
};

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw slr::IngestionError("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw slr::IngestionError("config file " + path + " is not valid JSON: " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw slr::IngestionError("cannot write file: " + path);
    out << content;
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<double> parse_double_list(const std::string& csv, const char* field) {
    std::vector<double> out;
    for (const auto& s : split_list(csv)) {
        try {
            out.push_back(std::stod(s));
        } catch (const std::exception&) {
            throw slr::UsageError(std::string(field) + ": cannot parse '" + s + "'");
        }
    }
    return out;
}

void print_selection_table(const slr::SelectionModel& m) {
    std::cout << std::left << std::setw(16) << "term" << std::right << std::setw(14)
              << "estimate";
    const bool has_t = m.tstats.size() == static_cast<Eigen::Index>(m.terms.size());
    const bool has_p = m.pvalues.size() == static_cast<Eigen::Index>(m.terms.size());
    if (has_t) std::cout << std::setw(12) << "t";
    if (has_p) std::cout << std::setw(12) << "p";
    std::cout << '\n';
    for (std::size_t i = 0; i < m.terms.size(); ++i) {
        std::cout << std::left << std::setw(16) << m.terms[i].label() << std::right
                  << std::setw(14) << std::setprecision(5) << std::fixed
                  << m.estimates[static_cast<Eigen::Index>(i)];
        if (has_t)
            std::cout << std::setw(12) << std::setprecision(3)
                      << m.tstats[static_cast<Eigen::Index>(i)];
        if (has_p)
            std::cout << std::setw(12) << std::setprecision(4)
                      << m.pvalues[static_cast<Eigen::Index>(i)];
        std::cout << '\n';
        std::cout.unsetf(std::ios::fixed);
    }
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------
struct SimulateArgs {
    std::string model = "M1";
    double beta = 1.0;
    int n = 400;
    int p = 100;
    int block_size = 5;
    double corr = 0.3;
    double sigma_eps = 1.0;
    std::uint64_t seed = 0;
    std::string out_prefix = "sim";
};

int run_simulate(const SimulateArgs& a) {
    slr::SimSpec spec;
    spec.model = slr::sim_model_from_name(a.model);
    spec.beta = a.beta;
    spec.n = a.n;
    spec.p = a.p;
    spec.block_size = a.block_size;
    spec.within_block_corr = a.corr;
    spec.sigma_eps = a.sigma_eps;
    spec.seed = a.seed;
    spec.validate();

    StageTimer timer("simulate");
    const slr::GenotypeData g = slr::gen_genotypes(spec);
    const auto [y, truth] = slr::gen_trait(g, spec);
    slr::write_genotype_csv(a.out_prefix + "_genotypes.csv", g);
    slr::write_phenotype_csv(a.out_prefix + "_phenotype.csv", y);
    write_text_file(a.out_prefix + "_truth.json", slr::truth_to_json(truth).dump(2) + "\n");
    log_line("wrote " + a.out_prefix + "_{genotypes,phenotype}.csv and _truth.json (n=" +
             std::to_string(spec.n) + ", p=" + std::to_string(spec.p) + ")");
    return 0;
}

// ---------------------------------------------------------------------------
// fit-lowrank
// ---------------------------------------------------------------------------
struct FitArgs {
    std::string genotypes, phenotype;
    int rank = 1;
    double lambda = -1.0;  // < 0 means CV
    std::string lambda_grid;
    int folds = 10;
    std::uint64_t seed = 0;
    std::string out = "fit.json";
};

int run_fit(const FitArgs& a) {
    const slr::GenotypeData g = slr::read_genotype_csv(a.genotypes);
    const Eigen::VectorXd y = slr::read_phenotype_csv(a.phenotype);
    slr::RankSpec rank{a.rank};
    rank.validate();

    slr::FitOptions opts;
    opts.seed = a.seed;
    double lambda = a.lambda;
    if (lambda < 0.0) {
        StageTimer timer("cv-lambda-ell");
        const std::vector<double> grid =
            a.lambda_grid.empty()
                ? slr::default_lambda_ell_grid(g.n(), slr::full_design_size(g.p()))
                : parse_double_list(a.lambda_grid, "--lambda-grid");
        lambda = slr::cv_lambda_ell(y, g, rank, grid, a.folds, a.seed, opts);
        log_line("cross-validated lambda_ell = " + std::to_string(lambda));
    }

    StageTimer timer("fit-lowrank");
    const slr::FitResult fit =
        rank.is_rank1() ? slr::fit_rank1(y, g, lambda, opts)
                        : slr::fit_rank2k(y, g, lambda, rank.k(), opts);
    write_text_file(a.out, slr::fit_result_to_json(fit).dump(2) + "\n");
    log_line("n=" + std::to_string(g.n()) + " p=" + std::to_string(g.p()) + " d_r=" +
             std::to_string(fit.d_r) + " iterations=" + std::to_string(fit.iterations) +
             " converged=" + (fit.converged ? "yes" : "no"));
    return 0;
}

// ---------------------------------------------------------------------------
// screen
// ---------------------------------------------------------------------------
struct ScreenArgs {
    std::string genotypes, phenotype;
    int rank = 1;
    double alpha_ell = 1.96;
    int top_k = 0;
    int folds = 10;
    std::uint64_t seed = 0;
    std::string lambda_ell_grid, lambda_s_grid;
    std::string out_prefix = "screen";
};

int run_screen(const ScreenArgs& a) {
    const slr::GenotypeData g = slr::read_genotype_csv(a.genotypes);
    const Eigen::VectorXd y = slr::read_phenotype_csv(a.phenotype);

    slr::ScreenConfig cfg;
    cfg.rank = slr::RankSpec{a.rank};
    cfg.alpha_ell = a.alpha_ell;
    cfg.top_k = a.top_k;
    cfg.cv_folds = a.folds;
    cfg.seed = a.seed;
    if (!a.lambda_ell_grid.empty())
        cfg.lambda_ell_grid = parse_double_list(a.lambda_ell_grid, "--lambda-ell-grid");
    if (!a.lambda_s_grid.empty())
        cfg.lambda_s_grid = parse_double_list(a.lambda_s_grid, "--lambda-s-grid");
    cfg.validate();

    StageTimer timer("screen");
    const slr::SlrScreenResult res = slr::slr_screen(y, g, cfg);
    log_line("|I_LR| = " + std::to_string(res.lr.terms.size()) + ", |I_SLR| = " +
             std::to_string(res.slr.terms.size()) + " (lambda_ell=" +
             std::to_string(res.lambda_ell) + ", lambda_s=" + std::to_string(res.lambda_s) +
             ")");

    json j;
    j["i_lr"] = slr::selection_to_json(res.lr);
    j["i_slr"] = slr::selection_to_json(res.slr);
    j["lambda_ell"] = res.lambda_ell;
    j["lambda_s"] = res.lambda_s;
    write_text_file(a.out_prefix + ".json", j.dump(2) + "\n");
    std::ostringstream csv;
    slr::write_selection_csv(csv, res.slr);
    write_text_file(a.out_prefix + "_selected.csv", csv.str());
    print_selection_table(res.slr);
    return 0;
}

// ---------------------------------------------------------------------------
// esc
// ---------------------------------------------------------------------------
struct EscArgs {
    std::string genotypes, phenotype;
    std::string config_path;
    std::string method;
    int rank = 0;  // 0: not set on the command line
    double split_fraction = -1.0;
    double alpha = -1.0;
    double alpha_ell = -1.0;
    int folds = 0;
    bool seed_set = false;
    std::uint64_t seed = 0;
    std::string out = "esc.json";
};

int run_pipeline_esc(const EscArgs& a) {
    slr::EscConfig cfg;
    if (!a.config_path.empty()) cfg = slr::esc_config_from_json(load_json_file(a.config_path));
    // Command-line flags override the config file.
    if (!a.method.empty()) {
        if (a.method == "ESC")
            cfg.method = slr::EscMethod::ESC;
        else if (a.method == "SC")
            cfg.method = slr::EscMethod::SC;
        else
            throw slr::UsageError("--method must be ESC or SC");
    }
    if (a.rank > 0) cfg.screen.rank = slr::RankSpec{a.rank};
    if (a.split_fraction >= 0.0) cfg.split_fraction = a.split_fraction;
    if (a.alpha >= 0.0) cfg.alpha = a.alpha;
    if (a.alpha_ell >= 0.0) cfg.screen.alpha_ell = a.alpha_ell;
    if (a.folds > 0) {
        cfg.cv_folds = a.folds;
        cfg.screen.cv_folds = a.folds;
    }
    if (a.seed_set) cfg.seed = a.seed;
    cfg.validate();

    const slr::GenotypeData g = slr::read_genotype_csv(a.genotypes);
    const Eigen::VectorXd y = slr::read_phenotype_csv(a.phenotype);

    StageTimer timer("esc");
    const slr::EscResult res = slr::run_esc(y, g, cfg);
    log_line("n1=" + std::to_string(res.trace.n1) + " n2=" + std::to_string(res.trace.n2) +
             " |G|=" + std::to_string(res.trace.g_size) + " |E(G)|=" +
             std::to_string(res.trace.expanded_size) + " |S|=" +
             std::to_string(res.trace.screened_size) + " |M|=" +
             std::to_string(res.trace.selected_size));
    write_text_file(a.out, slr::esc_result_to_json(res).dump(2) + "\n");
    print_selection_table(res.selected);
    return 0;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------
struct BenchArgs {
    std::string models = "M1";
    std::string betas = "1.0";
    std::string methods = "SC,ESC1,ESC2";
    int n = 400;
    int p = 100;
    int replicates = 50;
    std::uint64_t seed = 0;
    int threads = 0;
    bool paper_scale = false;
    std::string config_path;
    std::string out = "bench.csv";
};

int run_bench(const BenchArgs& a) {
    slr::BenchSpec spec;
    if (!a.config_path.empty())
        spec.esc = slr::esc_config_from_json(load_json_file(a.config_path));
    spec.models.clear();
    for (const auto& name : split_list(a.models))
        spec.models.push_back(slr::sim_model_from_name(name));
    spec.betas = parse_double_list(a.betas, "--betas");
    spec.methods.clear();
    for (const auto& name : split_list(a.methods))
        spec.methods.push_back(slr::bench_method_from_name(name));
    spec.n = a.n;
    spec.p = a.p;
    spec.replicates = a.replicates;
    if (a.paper_scale) {
        spec.p = 1000;
        spec.replicates = 100;
    }
    spec.base_seed = a.seed;
    spec.threads = a.threads > 0 ? a.threads : slr::default_thread_budget();
    spec.validate();

    StageTimer timer("bench");
    log_line("grid: " + std::to_string(spec.models.size()) + " models x " +
             std::to_string(spec.betas.size()) + " betas x " +
             std::to_string(spec.methods.size()) + " methods, " +
             std::to_string(spec.replicates) + " replicates, threads=" +
             std::to_string(spec.threads));
    const std::vector<slr::BenchCellResult> results = slr::run_benchmark(spec);
    std::ostringstream csv;
    slr::write_benchmark_csv(csv, results);
    write_text_file(a.out, csv.str());
    log_line("wrote " + a.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse and low-rank interaction screening toolkit"};
    app.require_subcommand(1);
    app.add_flag_function(
        "-q,--quiet", [](std::int64_t) { g_verbosity = 0; }, "suppress progress logging");

    SimulateArgs sim;
    CLI::App* c_sim = app.add_subcommand("simulate", "generate one benchmark dataset");
    c_sim->fallthrough();
    c_sim->add_option("--model", sim.model, "trait model: M1..M4");
    c_sim->add_option("--beta", sim.beta, "effect size");
    c_sim->add_option("--n", sim.n, "individuals");
    c_sim->add_option("--p", sim.p, "SNP count");
    c_sim->add_option("--block-size", sim.block_size, "SNPs per correlated block");
    c_sim->add_option("--corr", sim.corr, "latent within-block correlation");
    c_sim->add_option("--sigma-eps", sim.sigma_eps, "noise standard deviation");
    c_sim->add_option("--seed", sim.seed, "root seed");
    c_sim->add_option("--out-prefix", sim.out_prefix, "output path prefix");

    FitArgs fit;
    CLI::App* c_fit = app.add_subcommand("fit-lowrank", "fit the rank-r interaction model");
    c_fit->fallthrough();
    c_fit->add_option("--genotypes", fit.genotypes, "genotype CSV")->required();
    c_fit->add_option("--phenotype", fit.phenotype, "phenotype CSV")->required();
    c_fit->add_option("--rank", fit.rank, "1 or an even rank 2k");
    c_fit->add_option("--lambda", fit.lambda, "fixed ridge penalty (omit to cross-validate)");
    c_fit->add_option("--lambda-grid", fit.lambda_grid, "comma-separated CV grid");
    c_fit->add_option("--folds", fit.folds, "CV folds");
    c_fit->add_option("--seed", fit.seed, "root seed");
    c_fit->add_option("--out", fit.out, "output JSON path");

    ScreenArgs scr;
    CLI::App* c_scr = app.add_subcommand("screen", "run SLR-screening");
    c_scr->fallthrough();
    c_scr->add_option("--genotypes", scr.genotypes, "genotype CSV")->required();
    c_scr->add_option("--phenotype", scr.phenotype, "phenotype CSV")->required();
    c_scr->add_option("--rank", scr.rank, "low-rank model rank");
    c_scr->add_option("--alpha-ell", scr.alpha_ell, "Wald screening threshold");
    c_scr->add_option("--top-k", scr.top_k, "retain the K largest statistics instead");
    c_scr->add_option("--folds", scr.folds, "CV folds");
    c_scr->add_option("--seed", scr.seed, "root seed");
    c_scr->add_option("--lambda-ell-grid", scr.lambda_ell_grid, "comma-separated grid");
    c_scr->add_option("--lambda-s-grid", scr.lambda_s_grid, "comma-separated grid");
    c_scr->add_option("--out-prefix", scr.out_prefix, "output path prefix");

    EscArgs esc;
    CLI::App* c_esc = app.add_subcommand("esc", "run the full screen-and-clean pipeline");
    c_esc->fallthrough();
    c_esc->add_option("--genotypes", esc.genotypes, "genotype CSV")->required();
    c_esc->add_option("--phenotype", esc.phenotype, "phenotype CSV")->required();
    c_esc->add_option("--config", esc.config_path, "JSON config (flags override)");
    c_esc->add_option("--method", esc.method, "ESC or SC");
    c_esc->add_option("--rank", esc.rank, "low-rank model rank for ESC");
    c_esc->add_option("--split-fraction", esc.split_fraction, "screening-half fraction");
    c_esc->add_option("--alpha", esc.alpha, "cleaning significance level");
    c_esc->add_option("--alpha-ell", esc.alpha_ell, "Wald screening threshold");
    c_esc->add_option("--folds", esc.folds, "CV folds");
    c_esc->add_option("--seed", esc.seed, "root seed")->each([&](const std::string&) {
        esc.seed_set = true;
    });
    c_esc->add_option("--out", esc.out, "output JSON path");

    BenchArgs bench;
    CLI::App* c_bench = app.add_subcommand("bench", "replicated method comparison");
    c_bench->fallthrough();
    c_bench->add_option("--models", bench.models, "comma-separated: M1,M2,M3,M4");
    c_bench->add_option("--betas", bench.betas, "comma-separated effect sizes");
    c_bench->add_option("--methods", bench.methods, "comma-separated: SC,ESC1,ESC2");
    c_bench->add_option("--n", bench.n, "individuals per replicate");
    c_bench->add_option("--p", bench.p, "SNP count");
    c_bench->add_option("--replicates", bench.replicates, "replicates per cell");
    c_bench->add_option("--seed", bench.seed, "base seed");
    c_bench->add_option("--threads", bench.threads, "worker threads (0 = hardware)");
    c_bench->add_flag("--paper-scale", bench.paper_scale,
                      "full-scale settings: p=1000, 100 replicates");
    c_bench->add_option("--config", bench.config_path, "pipeline JSON config");
    c_bench->add_option("--out", bench.out, "output CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (c_sim->parsed()) return run_simulate(sim);
        if (c_fit->parsed()) return run_fit(fit);
        if (c_scr->parsed()) return run_screen(scr);
        if (c_esc->parsed()) return run_pipeline_esc(esc);
        if (c_bench->parsed()) return run_bench(bench);
    } catch (const slr::UsageError& e) {
        std::cerr << "error (usage): " << e.what() << std::endl;
        return 2;
    } catch (const slr::IngestionError& e) {
        std::cerr << "error (ingestion): " << e.what() << std::endl;
        return 3;
    } catch (const slr::InfeasibleError& e) {
        std::cerr << "error (infeasible): " << e.what() << std::endl;
        return 4;
    } catch (const slr::NumericalError& e) {
        std::cerr << "error (numerical): " << e.what() << std::endl;
        return 5;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error (usage): " << e.what() << std::endl;
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 5;
    }
    return 0;
}
