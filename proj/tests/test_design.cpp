#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/SVD>

#include "slr/design.hpp"
#include "slr/errors.hpp"
#include "test_support.hpp"

using namespace slr;

TEST_CASE("vecp stacks the strict lower triangle column-major") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
    m(1, 0) = m(0, 1) = 1.5;
    m(2, 0) = m(0, 2) = -2.0;
    m(2, 1) = m(1, 2) = 0.25;
    const Eigen::VectorXd v = vecp(m);
    REQUIRE(v.size() == 3);
    CHECK(v[0] == 1.5);
    CHECK(v[1] == -2.0);
    CHECK(v[2] == 0.25);
}

TEST_CASE("vecp of a zero matrix is the zero vector") {
    const Eigen::VectorXd v = vecp(Eigen::MatrixXd::Zero(7, 7));
    REQUIRE(v.size() == 21);
    CHECK(v.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("three interacting pairs in a 10x10 corner give rank 3 and three vecp nonzeros") {
    Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(10, 10);
    eta(1, 0) = eta(0, 1) = 2.0;  // pair (2,1)
    eta(2, 0) = eta(0, 2) = 3.0;  // pair (3,1)
    eta(2, 1) = eta(1, 2) = 5.0;  // pair (3,2)
    const Eigen::VectorXd v = vecp(eta);
    REQUIRE(v.size() == 45);
    CHECK(v[pair_to_column(2, 1, 10)] == 2.0);
    CHECK(v[pair_to_column(3, 1, 10)] == 3.0);
    CHECK(v[pair_to_column(3, 2, 10)] == 5.0);
    int nonzeros = 0;
    for (int i = 0; i < v.size(); ++i)
        if (v[i] != 0.0) ++nonzeros;
    CHECK(nonzeros == 3);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(eta);
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()[i] > 1e-10) ++rank;
    CHECK(rank == 3);
}

TEST_CASE("vecp rejects bad shapes") {
    CHECK_THROWS_AS(vecp(Eigen::MatrixXd::Zero(2, 3)), std::invalid_argument);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
    m(0, 1) = 1.0;  // not mirrored
    CHECK_THROWS_AS(vecp(m), std::invalid_argument);
}

TEST_CASE("pair_to_column endpoints and exhaustive round trip at p=10") {
    CHECK(pair_to_column(2, 1, 10) == 0);
    CHECK(pair_to_column(10, 9, 10) == 44);
    long c = 0;
    for (int k = 1; k < 10; ++k)
        for (int j = k + 1; j <= 10; ++j) {
            CHECK(pair_to_column(j, k, 10) == c);
            const auto [jj, kk] = column_to_pair(c, 10);
            CHECK(jj == j);
            CHECK(kk == k);
            ++c;
        }
    CHECK(c == 45);
}

TEST_CASE("pair_to_column rejects invalid pairs") {
    CHECK_THROWS_AS(pair_to_column(3, 3, 10), std::out_of_range);
    CHECK_THROWS_AS(pair_to_column(2, 3, 10), std::out_of_range);
    CHECK_THROWS_AS(pair_to_column(11, 1, 10), std::out_of_range);
    CHECK_THROWS_AS(pair_to_column(2, 0, 10), std::out_of_range);
    CHECK_THROWS_AS(column_to_pair(45, 10), std::out_of_range);
    CHECK_THROWS_AS(column_to_pair(-1, 10), std::out_of_range);
}

TEST_CASE("full design size at p=1000 is 500501") {
    CHECK(full_design_size(1000) == 500501);
    auto r = testsup::rng(7);
    const GenotypeData g = testsup::random_genotypes(1, 1000, r);
    const DesignMatrix d = build_design(g);
    CHECK(d.m() == 500501);
    CHECK(static_cast<long>(d.terms.size()) == 500501);
}

TEST_CASE("design row for genotypes (1,2,0) at p=3") {
    Eigen::MatrixXd values(1, 3);
    values << 1.0, 2.0, 0.0;
    const GenotypeData g(values, default_snp_ids(3));
    const DesignMatrix d = build_design(g);
    Eigen::VectorXd expected(7);
    expected << 1, 1, 2, 0, 2, 0, 0;
    CHECK((d.X.row(0).transpose() - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("subset build equals column slicing of the full design") {
    auto r = testsup::rng(11);
    const GenotypeData g = testsup::random_genotypes(20, 8, r);
    const DesignMatrix full = build_design(g);
    const std::vector<TermIndex> subset = {intercept_term(), main_term(5, 8),
                                           interaction_term(6, 5, 8)};
    const DesignMatrix part = build_design(g, subset);
    REQUIRE(part.m() == 3);
    for (int c = 0; c < part.m(); ++c) {
        const long full_col = part.terms[c].column;
        CHECK((part.X.col(c) - full.X.col(full_col)).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("interaction columns are products of main columns") {
    auto r = testsup::rng(13);
    const GenotypeData g = testsup::random_genotypes(15, 6, r);
    const DesignMatrix d = build_design(g);
    for (const auto& t : d.terms) {
        if (t.kind != TermKind::Interaction) continue;
        const Eigen::VectorXd prod =
            d.X.col(main_term(t.a, 6).column).cwiseProduct(d.X.col(main_term(t.b, 6).column));
        CHECK((d.X.col(t.column) - prod).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("design subset referencing a missing locus fails") {
    auto r = testsup::rng(17);
    const GenotypeData g = testsup::random_genotypes(5, 4, r);
    std::vector<TermIndex> bad = {intercept_term(), main_term(5, 5)};
    CHECK_THROWS_AS(build_design(g, bad), std::out_of_range);
}

TEST_CASE("term labels") {
    CHECK(intercept_term().label() == "(Intercept)");
    CHECK(main_term(5, 10).label() == "g5");
    CHECK(interaction_term(6, 5, 10).label() == "g5:g6");
    CHECK(interaction_term(5, 6, 10).label() == "g5:g6");
}

TEST_CASE("rank-1 jacobian at alpha = 0 has a zero interaction block") {
    const LowRankTheta theta = LowRankTheta::make_rank1(
        0.5, Eigen::VectorXd::Ones(4), Eigen::VectorXd::Zero(4), 1);
    const Eigen::MatrixXd delta = jacobian_delta(theta, 4);
    CHECK(delta.bottomRightCorner(pair_count(4), 4).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rank-1 jacobian row for pair (2,1) with alpha=(1,2,3)") {
    Eigen::VectorXd alpha(3);
    alpha << 1.0, 2.0, 3.0;
    const LowRankTheta theta =
        LowRankTheta::make_rank1(0.0, Eigen::VectorXd::Zero(3), alpha, 1);
    const Eigen::MatrixXd delta = jacobian_delta(theta, 3);
    const long row = 1 + 3 + pair_to_column(2, 1, 3);
    // d eta_21 / d alpha = (alpha_2, alpha_1, 0) = (2, 1, 0)
    CHECK(delta(row, 4) == 2.0);
    CHECK(delta(row, 5) == 1.0);
    CHECK(delta(row, 6) == 0.0);
}

TEST_CASE("jacobian matches central differences of beta(theta)") {
    auto r = testsup::rng(23);
    const int p = 6;
    for (int rep = 0; rep < 20; ++rep) {
        const bool rank1 = rep % 2 == 0;
        const LowRankTheta theta = rank1 ? testsup::random_rank1_theta(p, r, rep % 4 < 2 ? 1 : -1)
                                         : testsup::random_rank2k_theta(p, 2, r);
        const Eigen::MatrixXd delta = jacobian_delta(theta, p);
        auto beta_of = [&](const Eigen::VectorXd& t) {
            return beta_from_theta(rank1 ? testsup::unpack_rank1(t, p, theta.rank1.u)
                                         : testsup::unpack_rank2k(t, p, 2));
        };
        const Eigen::MatrixXd fd =
            testsup::central_differences(beta_of, testsup::pack_theta(theta), 1e-4);
        for (Eigen::Index c = 0; c < delta.cols(); ++c) {
            const double scale = std::max(1.0, delta.col(c).norm());
            CHECK((delta.col(c) - fd.col(c)).norm() / scale <= 1e-6);
        }
    }
}

TEST_CASE("inner products X_i beta(theta) match the double-loop oracle") {
    auto r = testsup::rng(29);
    const int n = 15, p = 7;
    const GenotypeData g = testsup::random_genotypes(n, p, r);
    const DesignMatrix d = build_design(g);
    for (int rep = 0; rep < 6; ++rep) {
        const LowRankTheta theta = rep % 2 == 0 ? testsup::random_rank1_theta(p, r, rep < 3 ? 1 : -1)
                                                : testsup::random_rank2k_theta(p, 2, r);
        const Eigen::VectorXd beta = beta_from_theta(theta);
        const Eigen::VectorXd via_design = d.X * beta;
        const Eigen::VectorXd via_predictor = linear_predictor(g, theta);
        for (int i = 0; i < n; ++i) {
            const double direct = testsup::double_loop_predictor(g.values.row(i), theta);
            CHECK(std::abs(via_design[i] - direct) <= 1e-10 * std::max(1.0, std::abs(direct)));
            CHECK(std::abs(via_predictor[i] - direct) <= 1e-10 * std::max(1.0, std::abs(direct)));
        }
    }
}

TEST_CASE("rank-1 eta reconstruction and diagonal exclusion") {
    auto r = testsup::rng(31);
    const int p = 5;
    const LowRankTheta theta = testsup::random_rank1_theta(p, r, -1);
    const Eigen::MatrixXd expected =
        theta.rank1.u * (theta.rank1.alpha * theta.rank1.alpha.transpose());
    CHECK((theta.eta() - expected).cwiseAbs().maxCoeff() <= 1e-14);
    // beta carries only off-diagonal entries
    const Eigen::VectorXd beta = beta_from_theta(theta);
    CHECK(beta.size() == 1 + p + pair_count(p));
    for (int k = 1; k <= p; ++k)
        for (int j = k + 1; j <= p; ++j)
            CHECK(beta[1 + p + pair_to_column(j, k, p)] ==
                  doctest::Approx(expected(j - 1, k - 1)).epsilon(1e-12));
}

TEST_CASE("jacobian_design_product equals X times jacobian_delta") {
    auto r = testsup::rng(37);
    const int n = 12, p = 6;
    const GenotypeData g = testsup::random_genotypes(n, p, r);
    const DesignMatrix d = build_design(g);
    for (int rep = 0; rep < 4; ++rep) {
        const LowRankTheta theta = rep % 2 == 0 ? testsup::random_rank1_theta(p, r, 1)
                                                : testsup::random_rank2k_theta(p, 2, r);
        const Eigen::MatrixXd w = jacobian_design_product(g, theta);
        const Eigen::MatrixXd expected = d.X * jacobian_delta(theta, p);
        CHECK((w - expected).cwiseAbs().maxCoeff() <=
              1e-8 * std::max(1.0, expected.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("genotype validation") {
    CHECK_THROWS_AS(GenotypeData(Eigen::MatrixXd::Zero(0, 2), {"a", "b"}), IngestionError);
    CHECK_THROWS_AS(GenotypeData(Eigen::MatrixXd::Zero(2, 2), {"a", "a"}), IngestionError);
    Eigen::MatrixXd nanv = Eigen::MatrixXd::Zero(2, 2);
    nanv(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(GenotypeData(nanv, {"a", "b"}), IngestionError);
}
