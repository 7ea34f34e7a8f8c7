#pragma once

// Shared generators and the independent oracles used to freeze expected
// values: finite differences, dense QR ridge solves, the soft-threshold
// closed form, and a direct double-loop predictor. These stay separate from
// the implementation paths they check.

#include <Eigen/Dense>
#include <Eigen/QR>
#include <functional>
#include <random>

#include "slr/design.hpp"
#include "slr/genotype.hpp"

namespace testsup {

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

// Genotypes drawn from the 0.25/0.5/0.25 law, independent loci.
inline slr::GenotypeData random_genotypes(int n, int p, std::mt19937_64& r) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd g(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) {
            const double v = u(r);
            g(i, j) = v < 0.25 ? 0.0 : (v < 0.75 ? 1.0 : 2.0);
        }
    return slr::GenotypeData(std::move(g), slr::default_snp_ids(p));
}

inline Eigen::VectorXd random_vector(int n, std::mt19937_64& r, double sd = 1.0) {
    std::normal_distribution<double> gauss(0.0, sd);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = gauss(r);
    return v;
}

inline Eigen::MatrixXd random_matrix(int n, int m, std::mt19937_64& r, double sd = 1.0) {
    std::normal_distribution<double> gauss(0.0, sd);
    Eigen::MatrixXd x(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) x(i, j) = gauss(r);
    return x;
}

inline slr::LowRankTheta random_rank1_theta(int p, std::mt19937_64& r, int u) {
    return slr::LowRankTheta::make_rank1(random_vector(1, r)[0], random_vector(p, r, 0.5),
                                         random_vector(p, r, 0.7), u);
}

inline slr::LowRankTheta random_rank2k_theta(int p, int k, std::mt19937_64& r) {
    return slr::LowRankTheta::make_rank2k(random_vector(1, r)[0], random_vector(p, r, 0.5),
                                          random_matrix(p, k, r, 0.6),
                                          random_matrix(p, k, r, 0.6));
}

// Central finite differences of a vector-valued function.
inline Eigen::MatrixXd central_differences(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& at, double h) {
    const Eigen::VectorXd f0 = f(at);
    Eigen::MatrixXd jac(f0.size(), at.size());
    for (Eigen::Index j = 0; j < at.size(); ++j) {
        Eigen::VectorXd hi = at, lo = at;
        hi[j] += h;
        lo[j] -= h;
        jac.col(j) = (f(hi) - f(lo)) / (2.0 * h);
    }
    return jac;
}

inline double central_difference_scalar(const std::function<double(double)>& f, double at,
                                        double h) {
    return (f(at + h) - f(at - h)) / (2.0 * h);
}

// Ridge oracle on an explicit design via the augmented QR route
// [X; sqrt(lambda) I] b = [y; 0], independent of the normal-equation solver.
inline Eigen::VectorXd ridge_oracle_qr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                       double lambda) {
    const Eigen::Index n = x.rows(), m = x.cols();
    Eigen::MatrixXd aug(n + m, m);
    aug.topRows(n) = x;
    aug.bottomRows(m) = std::sqrt(lambda) * Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
    rhs.head(n) = y;
    return aug.colPivHouseholderQr().solve(rhs);
}

inline double soft_threshold_oracle(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

// gamma + xi'g + sum_{j<k} eta_jk g_j g_k by explicit double loop.
inline double double_loop_predictor(const Eigen::VectorXd& g_row,
                                    const slr::LowRankTheta& theta) {
    const Eigen::MatrixXd eta = theta.eta();
    double v = theta.gamma;
    for (int j = 0; j < g_row.size(); ++j) v += theta.xi[j] * g_row[j];
    for (int k = 0; k < g_row.size(); ++k)
        for (int j = k + 1; j < g_row.size(); ++j)
            v += eta(j, k) * g_row[j] * g_row[k];
    return v;
}

// Packs theta in the fitter layout (gamma, xi, alpha) / (gamma, xi, vecA, vecB).
inline Eigen::VectorXd pack_theta(const slr::LowRankTheta& theta) {
    Eigen::VectorXd t(theta.raw_dim());
    t[0] = theta.gamma;
    t.segment(1, theta.p()) = theta.xi;
    if (theta.is_rank1) {
        t.tail(theta.p()) = theta.rank1.alpha;
    } else {
        const int p = theta.p(), k = theta.k();
        t.segment(1 + p, p * k) =
            Eigen::Map<const Eigen::VectorXd>(theta.rank2k.A.data(), p * k);
        t.tail(p * k) = Eigen::Map<const Eigen::VectorXd>(theta.rank2k.B.data(), p * k);
    }
    return t;
}

inline slr::LowRankTheta unpack_rank1(const Eigen::VectorXd& t, int p, int u) {
    return slr::LowRankTheta::make_rank1(t[0], t.segment(1, p), t.tail(p), u);
}

inline slr::LowRankTheta unpack_rank2k(const Eigen::VectorXd& t, int p, int k) {
    return slr::LowRankTheta::make_rank2k(
        t[0], t.segment(1, p),
        Eigen::Map<const Eigen::MatrixXd>(t.data() + 1 + p, p, k),
        Eigen::Map<const Eigen::MatrixXd>(t.data() + 1 + p + p * k, p, k));
}

}  // namespace testsup
