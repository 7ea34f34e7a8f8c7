#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "slr/genotype.hpp"

namespace slr {

// ---------------------------------------------------------------------------
// Term indexing
//
// The full interaction design over p loci has m_p = 1 + p + p(p-1)/2 columns:
// intercept, main effects g_1..g_p, then the pairwise products in vecp order.
// vecp stacks the strict lower triangle of a symmetric matrix column-major:
// (2,1),(3,1),...,(p,1),(3,2),...,(p,p-1). This ordering is frozen; term
// columns cross module boundaries.
// ---------------------------------------------------------------------------

enum class TermKind { Intercept, Main, Interaction };

struct TermIndex {
    TermKind kind = TermKind::Intercept;
    int a = 0;       // Main: locus (1-based). Interaction: smaller locus.
    int b = 0;       // Interaction: larger locus.
    long column = 0; // 0-based position in the full design over source_p loci.

    [[nodiscard]] std::string label() const;  // "(Intercept)", "g5", "g5:g6"

    // Identity is by kind and loci; `column` is derived bookkeeping.
    friend bool operator==(const TermIndex& x, const TermIndex& y) {
        return x.kind == y.kind && x.a == y.a && x.b == y.b;
    }
    friend bool operator<(const TermIndex& x, const TermIndex& y) {
        return x.column < y.column;
    }
};

[[nodiscard]] long pair_count(int p);        // p(p-1)/2
[[nodiscard]] long full_design_size(int p);  // m_p = 1 + p + p(p-1)/2

// Position of pair (j,k), 1 <= k < j <= p, within vecp order. Errors on
// j <= k or out-of-range indices.
[[nodiscard]] long pair_to_column(int j, int k, int p);
// Inverse of pair_to_column; returns (j,k) with j > k.
[[nodiscard]] std::pair<int, int> column_to_pair(long c, int p);

TermIndex intercept_term();
TermIndex main_term(int j, int p);
// Accepts the pair in either order; stores (a,b) = (min,max).
TermIndex interaction_term(int j, int k, int p);

// All m_p terms of the full design over p loci, in canonical column order.
std::vector<TermIndex> full_terms(int p);

// ---------------------------------------------------------------------------
// vecp and the expanded design
// ---------------------------------------------------------------------------

// Stacks the strict lower triangle of a symmetric matrix (diagonal excluded)
// column-major. Asymmetry beyond 1e-10 or a non-square input is an error.
Eigen::VectorXd vecp(const Eigen::MatrixXd& m);

struct DesignMatrix {
    Eigen::MatrixXd X;             // n x m
    std::vector<TermIndex> terms;  // length m, canonical order
    int source_p = 0;

    [[nodiscard]] int n() const { return static_cast<int>(X.rows()); }
    [[nodiscard]] int m() const { return static_cast<int>(X.cols()); }
};

// Full design when no subset is given; otherwise exactly the requested
// columns in canonical order. Interaction columns are products of the
// corresponding genotype columns.
DesignMatrix build_design(const GenotypeData& g,
                          const std::optional<std::vector<TermIndex>>& terms = std::nullopt);

// ---------------------------------------------------------------------------
// Low-rank parameterization: beta(theta) and its Jacobian
// ---------------------------------------------------------------------------

// eta = u * alpha alpha^T, u in {+1,-1}.
struct Rank1Form {
    Eigen::VectorXd alpha;
    int u = 1;
};

// eta = A B^T + B A^T, A,B p x k; attainable rank 2k.
struct Rank2kForm {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
};

struct LowRankTheta {
    double gamma = 0.0;
    Eigen::VectorXd xi;
    bool is_rank1 = true;
    Rank1Form rank1;
    Rank2kForm rank2k;

    [[nodiscard]] int p() const { return static_cast<int>(xi.size()); }
    [[nodiscard]] int k() const { return is_rank1 ? 0 : static_cast<int>(rank2k.A.cols()); }
    [[nodiscard]] int declared_rank() const { return is_rank1 ? 1 : 2 * k(); }
    // Raw parameter count: 1+2p (rank-1), 1+p+2pk (rank-2k).
    [[nodiscard]] long raw_dim() const;
    [[nodiscard]] double squared_norm() const;  // gamma^2 + |xi|^2 + |phi|^2
    [[nodiscard]] Eigen::MatrixXd eta() const;  // p x p symmetric

    static LowRankTheta make_rank1(double gamma, Eigen::VectorXd xi,
                                   Eigen::VectorXd alpha, int u);
    static LowRankTheta make_rank2k(double gamma, Eigen::VectorXd xi,
                                    Eigen::MatrixXd A, Eigen::MatrixXd B);
};

// beta(theta) = [gamma, xi, vecp(eta)] of length m_p.
Eigen::VectorXd beta_from_theta(const LowRankTheta& theta);

// Delta(theta) = d beta / d theta, an m_p x raw_dim matrix. Theta layout is
// (gamma, xi, alpha) for rank-1 and (gamma, xi, vec A, vec B) for rank-2k.
// The vecp-projection and commutation matrices are realized as index maps:
// row (j,k), j>k, of the rank-1 interaction block is
//   d eta_jk / d alpha_l = u (alpha_k 1[l=j] + alpha_j 1[l=k]),
// and for rank-2k
//   d eta_jk / d A_{l,c} = B_{k,c} 1[l=j] + B_{j,c} 1[l=k]
// (symmetrically in B).
Eigen::MatrixXd jacobian_delta(const LowRankTheta& theta, int p);

// Fitted mean X beta(theta) evaluated directly from G in O(np) per rank unit,
// without materializing the expanded design.
Eigen::VectorXd linear_predictor(const GenotypeData& g, const LowRankTheta& theta);

// W = X * Delta(theta), n x raw_dim, also computed without materializing
// X or Delta.
Eigen::MatrixXd jacobian_design_product(const GenotypeData& g, const LowRankTheta& theta);

}  // namespace slr
