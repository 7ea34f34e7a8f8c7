#include "slr/design.hpp"

#include <cmath>
#include <stdexcept>

#include "slr/errors.hpp"

namespace slr {

std::string TermIndex::label() const {
    switch (kind) {
        case TermKind::Intercept: return "(Intercept)";
        case TermKind::Main: return "g" + std::to_string(a);
        case TermKind::Interaction:
            return "g" + std::to_string(a) + ":g" + std::to_string(b);
    }
    return {};
}

long pair_count(int p) { return static_cast<long>(p) * (p - 1) / 2; }

long full_design_size(int p) { return 1 + p + pair_count(p); }

long pair_to_column(int j, int k, int p) {
    if (k < 1 || j <= k || j > p)
        throw std::out_of_range("pair_to_column requires 1 <= k < j <= p, got (" +
                                std::to_string(j) + "," + std::to_string(k) + ") with p=" +
                                std::to_string(p));
    // Column-major strict lower triangle: columns 1..k-1 contribute p-c pairs each.
    long before = static_cast<long>(k - 1) * p - static_cast<long>(k) * (k - 1) / 2;
    return before + (j - k - 1);
}

std::pair<int, int> column_to_pair(long c, int p) {
    if (c < 0 || c >= pair_count(p))
        throw std::out_of_range("vecp column out of range: " + std::to_string(c));
    int k = 1;
    long remaining = c;
    while (remaining >= p - k) {
        remaining -= p - k;
        ++k;
    }
    return {static_cast<int>(k + 1 + remaining), k};
}

TermIndex intercept_term() { return TermIndex{TermKind::Intercept, 0, 0, 0}; }

TermIndex main_term(int j, int p) {
    if (j < 1 || j > p) throw std::out_of_range("main-effect locus out of range");
    return TermIndex{TermKind::Main, j, 0, j};
}

TermIndex interaction_term(int j, int k, int p) {
    if (j == k) throw std::out_of_range("interaction requires two distinct loci");
    int lo = std::min(j, k), hi = std::max(j, k);
    long col = 1 + p + pair_to_column(hi, lo, p);
    return TermIndex{TermKind::Interaction, lo, hi, col};
}

std::vector<TermIndex> full_terms(int p) {
    std::vector<TermIndex> terms;
    terms.reserve(full_design_size(p));
    terms.push_back(intercept_term());
    for (int j = 1; j <= p; ++j) terms.push_back(main_term(j, p));
    for (int k = 1; k < p; ++k)
        for (int j = k + 1; j <= p; ++j) terms.push_back(interaction_term(j, k, p));
    return terms;
}

Eigen::VectorXd vecp(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols())
        throw std::invalid_argument("vecp requires a square matrix");
    const int p = static_cast<int>(m.rows());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("vecp requires a symmetric matrix (tolerance 1e-10)");
    Eigen::VectorXd out(pair_count(p));
    long idx = 0;
    for (int k = 0; k < p; ++k)
        for (int j = k + 1; j < p; ++j) out[idx++] = m(j, k);
    return out;
}

DesignMatrix build_design(const GenotypeData& g,
                          const std::optional<std::vector<TermIndex>>& terms) {
    const int n = g.n(), p = g.p();
    DesignMatrix d;
    d.source_p = p;
    d.terms = terms ? *terms : full_terms(p);
    d.X.resize(n, d.terms.size());
    for (std::size_t c = 0; c < d.terms.size(); ++c) {
        const TermIndex& t = d.terms[c];
        switch (t.kind) {
            case TermKind::Intercept:
                d.X.col(c).setOnes();
                break;
            case TermKind::Main:
                if (t.a < 1 || t.a > p)
                    throw std::out_of_range("design term references locus " +
                                            std::to_string(t.a) + " beyond p=" +
                                            std::to_string(p));
                d.X.col(c) = g.values.col(t.a - 1);
                break;
            case TermKind::Interaction:
                if (t.a < 1 || t.b < 1 || t.a > p || t.b > p)
                    throw std::out_of_range("design term references locus beyond p=" +
                                            std::to_string(p));
                d.X.col(c) = g.values.col(t.a - 1).cwiseProduct(g.values.col(t.b - 1));
                break;
        }
    }
    return d;
}

long LowRankTheta::raw_dim() const {
    const int pp = p();
    return is_rank1 ? 1 + 2L * pp : 1 + pp + 2L * pp * k();
}

double LowRankTheta::squared_norm() const {
    double s = gamma * gamma + xi.squaredNorm();
    if (is_rank1)
        s += rank1.alpha.squaredNorm();
    else
        s += rank2k.A.squaredNorm() + rank2k.B.squaredNorm();
    return s;
}

Eigen::MatrixXd LowRankTheta::eta() const {
    if (is_rank1)
        return rank1.u * (rank1.alpha * rank1.alpha.transpose());
    return rank2k.A * rank2k.B.transpose() + rank2k.B * rank2k.A.transpose();
}

LowRankTheta LowRankTheta::make_rank1(double gamma, Eigen::VectorXd xi,
                                      Eigen::VectorXd alpha, int u) {
    if (u != 1 && u != -1) throw std::invalid_argument("rank-1 sign u must be +1 or -1");
    if (xi.size() != alpha.size())
        throw std::invalid_argument("xi and alpha must have equal length");
    LowRankTheta t;
    t.gamma = gamma;
    t.xi = std::move(xi);
    t.is_rank1 = true;
    t.rank1 = Rank1Form{std::move(alpha), u};
    return t;
}

LowRankTheta LowRankTheta::make_rank2k(double gamma, Eigen::VectorXd xi,
                                       Eigen::MatrixXd A, Eigen::MatrixXd B) {
    if (A.rows() != xi.size() || B.rows() != xi.size() || A.cols() != B.cols())
        throw std::invalid_argument("A and B must be p x k with p = xi length");
    LowRankTheta t;
    t.gamma = gamma;
    t.xi = std::move(xi);
    t.is_rank1 = false;
    t.rank2k = Rank2kForm{std::move(A), std::move(B)};
    return t;
}

Eigen::VectorXd beta_from_theta(const LowRankTheta& theta) {
    const int p = theta.p();
    Eigen::VectorXd beta(full_design_size(p));
    beta[0] = theta.gamma;
    beta.segment(1, p) = theta.xi;
    beta.segment(1 + p, pair_count(p)) = vecp(theta.eta());
    return beta;
}

Eigen::MatrixXd jacobian_delta(const LowRankTheta& theta, int p) {
    if (theta.p() != p) throw std::invalid_argument("theta dimension does not match p");
    const long m = full_design_size(p);
    const long d = theta.raw_dim();
    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(m, d);
    delta.topLeftCorner(1 + p, 1 + p).setIdentity();
    if (theta.is_rank1) {
        const Eigen::VectorXd& alpha = theta.rank1.alpha;
        const double u = theta.rank1.u;
        for (int k = 1; k <= p; ++k) {
            for (int j = k + 1; j <= p; ++j) {
                long row = 1 + p + pair_to_column(j, k, p);
                delta(row, 1 + p + (j - 1)) += u * alpha[k - 1];
                delta(row, 1 + p + (k - 1)) += u * alpha[j - 1];
            }
        }
    } else {
        const Eigen::MatrixXd& A = theta.rank2k.A;
        const Eigen::MatrixXd& B = theta.rank2k.B;
        const int kk = theta.k();
        const long a_off = 1 + p, b_off = 1 + p + static_cast<long>(p) * kk;
        for (int k = 1; k <= p; ++k) {
            for (int j = k + 1; j <= p; ++j) {
                long row = 1 + p + pair_to_column(j, k, p);
                for (int c = 0; c < kk; ++c) {
                    delta(row, a_off + c * p + (j - 1)) += B(k - 1, c);
                    delta(row, a_off + c * p + (k - 1)) += B(j - 1, c);
                    delta(row, b_off + c * p + (j - 1)) += A(k - 1, c);
                    delta(row, b_off + c * p + (k - 1)) += A(j - 1, c);
                }
            }
        }
    }
    return delta;
}

Eigen::VectorXd linear_predictor(const GenotypeData& g, const LowRankTheta& theta) {
    if (theta.p() != g.p()) throw std::invalid_argument("theta dimension does not match data");
    const Eigen::MatrixXd& G = g.values;
    Eigen::VectorXd mu = Eigen::VectorXd::Constant(g.n(), theta.gamma);
    mu.noalias() += G * theta.xi;
    // vecp(eta)' vecp(J_i) = (g' eta g - sum_j eta_jj g_j^2) / 2, evaluated
    // through the factor form of eta.
    const Eigen::ArrayXXd G2 = G.array().square();
    if (theta.is_rank1) {
        const Eigen::VectorXd ga = G * theta.rank1.alpha;
        const Eigen::VectorXd diag = G2.matrix() * theta.rank1.alpha.cwiseAbs2();
        mu.array() += 0.5 * theta.rank1.u * (ga.array().square() - diag.array());
    } else {
        const Eigen::MatrixXd GA = G * theta.rank2k.A;
        const Eigen::MatrixXd GB = G * theta.rank2k.B;
        const Eigen::VectorXd diag =
            G2.matrix() * (theta.rank2k.A.array() * theta.rank2k.B.array()).rowwise().sum().matrix();
        mu.array() += (GA.array() * GB.array()).rowwise().sum() - diag.array();
    }
    return mu;
}

Eigen::MatrixXd jacobian_design_product(const GenotypeData& g, const LowRankTheta& theta) {
    if (theta.p() != g.p()) throw std::invalid_argument("theta dimension does not match data");
    const Eigen::MatrixXd& G = g.values;
    const int n = g.n(), p = g.p();
    Eigen::MatrixXd W(n, theta.raw_dim());
    W.col(0).setOnes();
    W.middleCols(1, p) = G;
    const Eigen::ArrayXXd G2 = G.array().square();
    if (theta.is_rank1) {
        // Column l: u * g_l (g'alpha - g_l alpha_l).
        const Eigen::VectorXd ga = G * theta.rank1.alpha;
        const double u = theta.rank1.u;
        W.middleCols(1 + p, p) =
            u * (G.array().colwise() * ga.array() -
                 G2.rowwise() * theta.rank1.alpha.transpose().array());
    } else {
        const Eigen::MatrixXd& A = theta.rank2k.A;
        const Eigen::MatrixXd& B = theta.rank2k.B;
        const int kk = theta.k();
        const long a_off = 1 + p, b_off = a_off + static_cast<long>(p) * kk;
        for (int c = 0; c < kk; ++c) {
            const Eigen::VectorXd gb = G * B.col(c);
            const Eigen::VectorXd gacol = G * A.col(c);
            W.middleCols(a_off + c * p, p) =
                G.array().colwise() * gb.array() - G2.rowwise() * B.col(c).transpose().array();
            W.middleCols(b_off + c * p, p) =
                G.array().colwise() * gacol.array() - G2.rowwise() * A.col(c).transpose().array();
        }
    }
    return W;
}

}  // namespace slr
