#include "slr/simulate.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <string>

#include "slr/errors.hpp"
#include "slr/rng.hpp"

namespace slr {

namespace {

int min_loci(SimModel m) {
    switch (m) {
        case SimModel::M1: return 26;
        case SimModel::M2: return 21;
        case SimModel::M3: return 6;
        case SimModel::M4: return 8;
    }
    return 0;
}

double ipow(double base, int e) {
    double v = 1.0;
    for (int i = 0; i < e; ++i) v *= base;
    return v;
}

}  // namespace

void SimSpec::validate_genotypes() const {
    if (n < 1) throw UsageError("n must be >= 1");
    if (p < 1) throw UsageError("p must be >= 1");
    if (block_size < 1 || p % block_size != 0)
        throw UsageError("p must be divisible by block_size");
    if (!(within_block_corr >= 0.0 && within_block_corr < 1.0))
        throw UsageError("within_block_corr must lie in [0,1)");
    if (beta < 0.0) throw UsageError("beta must be >= 0");
    if (sigma_eps < 0.0) throw UsageError("sigma_eps must be >= 0");
}

void SimSpec::validate() const {
    validate_genotypes();
    if (p < min_loci(model))
        throw UsageError(std::string("model ") + sim_model_name(model) + " needs p >= " +
                         std::to_string(min_loci(model)));
}

double TruthSet::eta(int j, int k) const {
    const int lo = std::min(j, k), hi = std::max(j, k);
    for (std::size_t i = 0; i < m0.size(); ++i)
        if (m0[i].kind == TermKind::Interaction && m0[i].a == lo && m0[i].b == hi)
            return coefficients[i];
    return 0.0;
}

GenotypeData gen_genotypes(const SimSpec& spec) {
    spec.validate_genotypes();
    const double cut = boost::math::quantile(boost::math::normal(), 0.25);
    const double rho = spec.within_block_corr;
    const double w_shared = std::sqrt(rho);
    const double w_own = std::sqrt(1.0 - rho);

    auto rng = make_rng(spec.seed, "genotypes");
    std::normal_distribution<double> gauss(0.0, 1.0);

    Eigen::MatrixXd g(spec.n, spec.p);
    const int blocks = spec.p / spec.block_size;
    for (int i = 0; i < spec.n; ++i) {
        for (int b = 0; b < blocks; ++b) {
            const double shared = gauss(rng);
            for (int j = 0; j < spec.block_size; ++j) {
                const double z = w_shared * shared + w_own * gauss(rng);
                const int col = b * spec.block_size + j;
                g(i, col) = z < cut ? 0.0 : (z > -cut ? 2.0 : 1.0);
            }
        }
    }
    return GenotypeData(std::move(g), default_snp_ids(spec.p));
}

std::pair<Eigen::VectorXd, TruthSet> gen_trait(const GenotypeData& g, const SimSpec& spec) {
    spec.validate();
    if (g.p() < min_loci(spec.model))
        throw UsageError(std::string("model ") + sim_model_name(spec.model) +
                         " needs p >= " + std::to_string(min_loci(spec.model)));
    const int p = g.p();

    std::vector<TermIndex> terms;
    std::vector<double> coef;
    auto add_pair = [&](int j, int k, double c) {
        terms.push_back(interaction_term(j, k, p));
        coef.push_back(c);
    };
    auto add_main = [&](int j, double c) {
        terms.push_back(main_term(j, p));
        coef.push_back(c);
    };

    switch (spec.model) {
        case SimModel::M1:
            add_pair(5, 6, spec.beta);
            add_pair(10, 11, 0.8 * spec.beta);
            add_pair(15, 16, 0.6 * spec.beta);
            add_pair(20, 21, 0.4 * spec.beta);
            add_pair(25, 26, 0.2 * spec.beta);
            break;
        case SimModel::M2:
            add_pair(5, 6, spec.beta);
            add_pair(10, 11, 0.8 * spec.beta);
            add_pair(15, 16, 0.6 * spec.beta);
            add_main(20, 2.0 * spec.beta);
            add_main(21, 2.0 * spec.beta);
            break;
        case SimModel::M3:
            for (int k = 1; k < 6; ++k)
                for (int j = k + 1; j <= 6; ++j) add_pair(k, j, spec.beta * ipow(0.9, j - k));
            break;
        case SimModel::M4: {
            auto rng = make_rng(spec.seed, "trait-eta");
            std::uniform_real_distribution<double> u1(-0.1, 0.9);
            std::uniform_real_distribution<double> u2(0.5, 1.0);
            for (int k = 1; k < 8; ++k)
                for (int j = k + 1; j <= 8; ++j) {
                    const double sign = u1(rng) >= 0.0 ? 1.0 : -1.0;
                    add_pair(k, j, spec.beta * sign * u2(rng));
                }
            break;
        }
    }

    Eigen::VectorXd signal = Eigen::VectorXd::Zero(g.n());
    for (std::size_t t = 0; t < terms.size(); ++t) {
        if (terms[t].kind == TermKind::Main)
            signal += coef[t] * g.values.col(terms[t].a - 1);
        else
            signal += coef[t] * g.values.col(terms[t].a - 1)
                                    .cwiseProduct(g.values.col(terms[t].b - 1));
    }

    auto rng = make_rng(spec.seed, "trait-noise");
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd y(g.n());
    for (int i = 0; i < g.n(); ++i) y[i] = signal[i] + spec.sigma_eps * gauss(rng);

    TruthSet truth;
    for (std::size_t t = 0; t < terms.size(); ++t) {
        if (coef[t] != 0.0) {
            truth.m0.push_back(terms[t]);
            truth.coefficients.push_back(coef[t]);
        }
    }
    return {std::move(y), std::move(truth)};
}

const char* sim_model_name(SimModel m) {
    switch (m) {
        case SimModel::M1: return "M1";
        case SimModel::M2: return "M2";
        case SimModel::M3: return "M3";
        case SimModel::M4: return "M4";
    }
    return "?";
}

SimModel sim_model_from_name(const std::string& name) {
    if (name == "M1") return SimModel::M1;
    if (name == "M2") return SimModel::M2;
    if (name == "M3") return SimModel::M3;
    if (name == "M4") return SimModel::M4;
    throw UsageError("unknown model name: " + name + " (expected M1..M4)");
}

}  // namespace slr
