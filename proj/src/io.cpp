#include "slr/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "slr/errors.hpp"

namespace slr {

namespace {

using nlohmann::json;

std::string fmt_g17(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim surrounding whitespace
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

json theta_to_json(const LowRankTheta& theta) {
    json j;
    j["gamma"] = theta.gamma;
    j["xi"] = std::vector<double>(theta.xi.begin(), theta.xi.end());
    if (theta.is_rank1) {
        j["form"] = "rank1";
        j["alpha"] = std::vector<double>(theta.rank1.alpha.begin(), theta.rank1.alpha.end());
        j["u"] = theta.rank1.u;
    } else {
        j["form"] = "rank2k";
        j["k"] = theta.k();
        auto mat = [](const Eigen::MatrixXd& m) {
            std::vector<std::vector<double>> rows;
            for (Eigen::Index i = 0; i < m.rows(); ++i) {
                rows.emplace_back(m.row(i).begin(), m.row(i).end());
            }
            return rows;
        };
        j["A"] = mat(theta.rank2k.A);
        j["B"] = mat(theta.rank2k.B);
    }
    return j;
}

}  // namespace

GenotypeData read_genotype_csv(const std::string& path) {
    const std::vector<std::string> lines = read_lines(path);
    if (lines.size() < 2)
        throw IngestionError("genotype CSV needs a header row and at least one data row: " +
                             path);
    const std::vector<std::string> ids = split_csv_line(lines[0]);
    const std::size_t p = ids.size();

    Eigen::MatrixXd values(lines.size() - 1, p);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const std::vector<std::string> fields = split_csv_line(lines[r]);
        if (fields.size() != p)
            throw IngestionError("genotype CSV row " + std::to_string(r + 1) + " has " +
                                 std::to_string(fields.size()) + " fields, expected " +
                                 std::to_string(p));
        for (std::size_t c = 0; c < p; ++c) {
            double v;
            if (!parse_double(fields[c], v))
                throw IngestionError("genotype CSV row " + std::to_string(r + 1) +
                                     ", column " + std::to_string(c + 1) +
                                     ": missing or non-numeric field '" + fields[c] + "'");
            values(r - 1, c) = v;
        }
    }
    return GenotypeData(std::move(values), ids);
}

void write_genotype_csv(const std::string& path, const GenotypeData& g) {
    std::ofstream out(path);
    if (!out) throw IngestionError("cannot write file: " + path);
    for (int j = 0; j < g.p(); ++j) out << (j ? "," : "") << g.snp_ids[j];
    out << '\n';
    for (int i = 0; i < g.n(); ++i) {
        for (int j = 0; j < g.p(); ++j)
            out << (j ? "," : "") << fmt_g17(g.values(i, j));
        out << '\n';
    }
}

Eigen::VectorXd read_phenotype_csv(const std::string& path) {
    const std::vector<std::string> lines = read_lines(path);
    if (lines.empty()) throw IngestionError("phenotype CSV is empty: " + path);
    std::size_t start = 0;
    double probe;
    if (!parse_double(lines[0], probe)) start = 1;  // header line
    if (lines.size() == start)
        throw IngestionError("phenotype CSV has no data rows: " + path);

    Eigen::VectorXd y(lines.size() - start);
    for (std::size_t r = start; r < lines.size(); ++r) {
        const std::vector<std::string> fields = split_csv_line(lines[r]);
        if (fields.size() != 1)
            throw IngestionError("phenotype CSV row " + std::to_string(r + 1) +
                                 " must have exactly one column");
        double v;
        if (!parse_double(fields[0], v))
            throw IngestionError("phenotype CSV row " + std::to_string(r + 1) +
                                 ": missing or non-numeric field '" + fields[0] + "'");
        y[r - start] = v;
    }
    return y;
}

void write_phenotype_csv(const std::string& path, const Eigen::VectorXd& y,
                         const std::string& header) {
    std::ofstream out(path);
    if (!out) throw IngestionError("cannot write file: " + path);
    out << header << '\n';
    for (Eigen::Index i = 0; i < y.size(); ++i) out << fmt_g17(y[i]) << '\n';
}

nlohmann::json fit_result_to_json(const FitResult& fit) {
    const std::vector<TermIndex> terms = full_terms(fit.theta.p());
    json j;
    j["theta"] = theta_to_json(fit.theta);
    json beta = json::array();
    for (std::size_t i = 0; i < terms.size(); ++i) {
        json entry;
        entry["term"] = terms[i].label();
        entry["estimate"] = fit.beta[static_cast<Eigen::Index>(i)];
        if (fit.se_beta.size() == fit.beta.size())
            entry["se"] = fit.se_beta[static_cast<Eigen::Index>(i)];
        beta.push_back(entry);
    }
    j["beta"] = beta;
    j["sigma2"] = fit.sigma2;
    j["lambda_ell"] = fit.lambda_ell;
    j["d_r"] = fit.d_r;
    j["iterations"] = fit.iterations;
    j["converged"] = fit.converged;
    j["penalized_loglik"] = fit.final_penalized_loglik;
    return j;
}

nlohmann::json selection_to_json(const SelectionModel& model) {
    json terms = json::array();
    for (std::size_t i = 0; i < model.terms.size(); ++i) {
        json t;
        t["term"] = model.terms[i].label();
        t["estimate"] = model.estimates[static_cast<Eigen::Index>(i)];
        if (model.tstats.size() == static_cast<Eigen::Index>(model.terms.size())) {
            const double stat = model.tstats[static_cast<Eigen::Index>(i)];
            if (std::isfinite(stat))
                t["t"] = stat;
            else
                t["t"] = nullptr;
        }
        if (model.pvalues.size() == static_cast<Eigen::Index>(model.terms.size()))
            t["p"] = model.pvalues[static_cast<Eigen::Index>(i)];
        terms.push_back(t);
    }
    json j;
    j["provenance"] = provenance_name(model.provenance);
    j["warning"] = model.warning;
    j["terms"] = terms;
    return j;
}

nlohmann::json truth_to_json(const TruthSet& truth) {
    json terms = json::array();
    for (std::size_t i = 0; i < truth.m0.size(); ++i) {
        json t;
        t["term"] = truth.m0[i].label();
        t["coefficient"] = truth.coefficients[i];
        terms.push_back(t);
    }
    json j;
    j["m0"] = terms;
    return j;
}

nlohmann::json esc_result_to_json(const EscResult& result) {
    json j;
    j["selected"] = selection_to_json(result.selected);
    j["screened"] = selection_to_json(result.screened);
    j["g_loci"] = result.g_loci;
    json trace;
    trace["n"] = result.trace.n;
    trace["p"] = result.trace.p;
    trace["n1"] = result.trace.n1;
    trace["n2"] = result.trace.n2;
    trace["g_size"] = result.trace.g_size;
    trace["expanded_size"] = result.trace.expanded_size;
    trace["screened_size"] = result.trace.screened_size;
    trace["selected_size"] = result.trace.selected_size;
    trace["empty_main_screen"] = result.trace.empty_main_screen;
    trace["dropped_aliased"] = result.trace.dropped_aliased;
    j["stage_trace"] = trace;
    json cfg;
    cfg["split_fraction"] = result.config.split_fraction;
    cfg["alpha"] = result.config.alpha;
    cfg["method"] = result.config.method == EscMethod::ESC ? "ESC" : "SC";
    cfg["rank"] = result.config.screen.rank.rank;
    cfg["alpha_ell"] = result.config.screen.alpha_ell;
    cfg["cv_folds"] = result.config.cv_folds;
    cfg["seed"] = result.config.seed;
    j["config"] = cfg;
    j["seed"] = result.config.seed;
    return j;
}

void write_selection_csv(std::ostream& os, const SelectionModel& model) {
    os << "term,estimate\n";
    for (std::size_t i = 0; i < model.terms.size(); ++i)
        os << model.terms[i].label() << ','
           << fmt_g17(model.estimates[static_cast<Eigen::Index>(i)]) << '\n';
}

EscConfig esc_config_from_json(const nlohmann::json& j) {
    static const std::vector<std::string> known = {
        "seed",           "split_fraction", "alpha",         "method",
        "rank",           "cv_folds",       "alpha_ell",     "top_k",
        "lambda_m_grid",  "lambda_ell_grid", "lambda_s_grid"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw UsageError("unknown config key: " + it.key());
    }

    EscConfig cfg;
    auto grab = [&](const char* key, auto& target) {
        if (!j.contains(key)) return;
        try {
            target = j.at(key).get<std::decay_t<decltype(target)>>();
        } catch (const json::exception&) {
            throw UsageError(std::string("config field '") + key + "' has the wrong type");
        }
    };
    grab("seed", cfg.seed);
    grab("split_fraction", cfg.split_fraction);
    grab("alpha", cfg.alpha);
    grab("cv_folds", cfg.cv_folds);
    grab("alpha_ell", cfg.screen.alpha_ell);
    grab("top_k", cfg.screen.top_k);
    grab("lambda_m_grid", cfg.lambda_m_grid);
    grab("lambda_ell_grid", cfg.screen.lambda_ell_grid);
    grab("lambda_s_grid", cfg.screen.lambda_s_grid);
    if (j.contains("rank")) {
        int rank = 1;
        grab("rank", rank);
        cfg.screen.rank = RankSpec{rank};
    }
    if (j.contains("method")) {
        std::string method;
        grab("method", method);
        if (method == "ESC")
            cfg.method = EscMethod::ESC;
        else if (method == "SC")
            cfg.method = EscMethod::SC;
        else
            throw UsageError("config field 'method' must be \"ESC\" or \"SC\"");
    }
    cfg.screen.cv_folds = cfg.cv_folds;
    cfg.validate();
    return cfg;
}

const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::LowRank: return "LR";
        case Provenance::SLR: return "SLR";
        case Provenance::Lasso: return "Lasso";
        case Provenance::Cleaned: return "Cleaned";
    }
    return "?";
}

}  // namespace slr
