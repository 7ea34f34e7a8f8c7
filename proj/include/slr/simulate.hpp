#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "slr/design.hpp"
#include "slr/genotype.hpp"

namespace slr {

enum class SimModel { M1, M2, M3, M4 };

struct SimSpec {
    int n = 400;
    int p = 100;
    int block_size = 5;
    double within_block_corr = 0.3;
    SimModel model = SimModel::M1;
    double beta = 1.0;
    double sigma_eps = 1.0;
    std::uint64_t seed = 0;

    void validate() const;           // genotype fields plus the model's p minimum
    void validate_genotypes() const; // genotype fields only
};

// The nonzero-coefficient terms of the generating model, with their values.
struct TruthSet {
    std::vector<TermIndex> m0;
    std::vector<double> coefficients;  // aligned with m0

    [[nodiscard]] double eta(int j, int k) const;  // 0 when (j,k) not in m0
};

// Block-correlated genotypes: latent equicorrelated normals per block,
// discretized at the 0.25/0.75 standard-normal quantiles into {0,1,2}.
// Blocks are independent of each other. Deterministic given the seed.
GenotypeData gen_genotypes(const SimSpec& spec);

// Trait models:
//   M1: beta (g5 g6 + 0.8 g10 g11 + 0.6 g15 g16 + 0.4 g20 g21 + 0.2 g25 g26)
//   M2: beta (g5 g6 + 0.8 g10 g11 + 0.6 g15 g16 + 2 g20 + 2 g21)
//   M3: eta_jk = 0.9^|j-k| on loci 1..6
//   M4: eta_jk = sign(u1) u2, u1 ~ U(-0.1,0.9), u2 ~ U(0.5,1), redrawn per
//       call for loci 1..8 (lower triangle drawn, mirrored)
// plus sigma_eps * N(0,1) noise.
std::pair<Eigen::VectorXd, TruthSet> gen_trait(const GenotypeData& g, const SimSpec& spec);

const char* sim_model_name(SimModel m);
SimModel sim_model_from_name(const std::string& name);

}  // namespace slr
