#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "nsgms/errors.hpp"
#include "nsgms/graph_model.hpp"
#include "nsgms/rng.hpp"

using namespace nsgms;

namespace {

// Eigenvalues of a symmetric 3x3 matrix from the roots of its characteristic
// polynomial (trigonometric form of the cubic), ascending.
std::array<double, 3> symmetric3_eigenvalues(const Eigen::Matrix3d& m) {
    const double q = m.trace() / 3.0;
    const double p1 = m(0, 1) * m(0, 1) + m(0, 2) * m(0, 2) + m(1, 2) * m(1, 2);
    const double p2 = (m(0, 0) - q) * (m(0, 0) - q) + (m(1, 1) - q) * (m(1, 1) - q) +
                      (m(2, 2) - q) * (m(2, 2) - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    const Eigen::Matrix3d bm = (m - q * Eigen::Matrix3d::Identity()) / p;
    const double r = std::clamp(bm.determinant() / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double e1 = q + 2.0 * p * std::cos(phi);
    const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    const double e2 = 3.0 * q - e1 - e3;
    std::array<double, 3> out{e3, e2, e1};
    std::sort(out.begin(), out.end());
    return out;
}

std::array<double, 2> symmetric2_eigenvalues(const Eigen::Matrix2d& m) {
    const double mid = 0.5 * (m(0, 0) + m(1, 1));
    const double rad = std::sqrt(0.25 * (m(0, 0) - m(1, 1)) * (m(0, 0) - m(1, 1)) + m(0, 1) * m(0, 1));
    return {mid - rad, mid + rad};
}

}  // namespace

TEST_CASE("random_cig on two nodes is the single edge") {
    for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
        const auto g = random_cig(2, 1, seed);
        CHECK(g.edge_count() == 1);
        CHECK(g.has_edge(0, 1));
    }
}

TEST_CASE("random_cig with s_max = 1 on five nodes is a maximal matching") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto g = random_cig(5, 1, seed);
        int deg1 = 0, deg0 = 0;
        for (int i = 0; i < 5; ++i) {
            if (g.degree(i) == 1) ++deg1;
            else if (g.degree(i) == 0) ++deg0;
        }
        CHECK(g.max_degree() == 1);
        CHECK(deg1 == 4);
        CHECK(deg0 == 1);
        CHECK(g.edge_count() == 2);
    }
}

TEST_CASE("random_cig respects the degree bound and leaves no node isolated") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto g = random_cig(8, 3, seed);
        for (int i = 0; i < 8; ++i) {
            CHECK(g.degree(i) <= 3);
            CHECK(g.degree(i) >= 1);
            CHECK_FALSE(g.has_edge(i, i));
        }
        std::size_t sum = 0;
        for (int i = 0; i < 8; ++i) sum += g.degree(i);
        CHECK(sum == 2 * g.edge_count());
    }
}

TEST_CASE("random_cig rejects invalid parameters and is deterministic") {
    CHECK_THROWS_AS(random_cig(1, 1, 0), InvalidParameter);
    CHECK_THROWS_AS(random_cig(5, 0, 0), InvalidParameter);
    CHECK_THROWS_AS(random_cig(5, 5, 0), InvalidParameter);
    CHECK(random_cig(12, 3, 42) == random_cig(12, 3, 42));
    CHECK_FALSE(random_cig(12, 3, 42) == random_cig(12, 3, 43));
}

TEST_CASE("Cig rejects self-loops and out-of-range nodes") {
    Cig g(3);
    CHECK_THROWS_AS(g.add_edge(1, 1), InvalidParameter);
    CHECK_THROWS_AS(g.add_edge(0, 3), IndexOutOfRange);
    CHECK(g.add_edge(2, 0));
    CHECK_FALSE(g.add_edge(0, 2));
    CHECK(g.edges() == std::vector<std::pair<int, int>>{{0, 2}});
}

TEST_CASE("empty graph gives diagonal precisions") {
    const Cig g(5);
    const auto m = build_block_model(g, 1, 10, 2.0, 0.3, 7);
    REQUIRE(m.precisions.size() == 1);
    const auto& k = m.precisions[0];
    CHECK((k - Eigen::MatrixXd(k.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0);
    const auto rep = verify_assumptions(m, g, 0.1, 1);
    CHECK(rep.eigenvalue_bounds_ok);
    CHECK(std::isinf(rep.rho_min_achieved));
}

TEST_CASE("single edge on two nodes has positive partial correlation") {
    Cig g(2);
    g.add_edge(0, 1);
    const auto m = build_block_model(g, 1, 10, 2.0, 0.5, 3);
    CHECK(m.precisions[0](0, 1) != 0.0);
    CHECK(partial_correlation(m, 0, 1) > 0.0);
    // both eigenvalues of C are pinned to the ends of [1, beta]
    const Eigen::Matrix2d c = m.covariances[0];
    const auto ev = symmetric2_eigenvalues(c);
    CHECK(ev[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ev[1] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("block model satisfies the eigenvalue bounds and zero pattern") {
    const auto g = random_cig(8, 2, 11);
    const auto m = build_block_model(g, 4, 16, 2.0, 0.4, 11);
    const auto rep = verify_assumptions(m, g, 0.0, 2);
    CHECK(rep.eigenvalue_bounds_ok);
    CHECK(rep.eig_min >= 1.0 - 1e-9);
    CHECK(rep.eig_max <= 2.0 + 1e-9);
    for (int b = 0; b < 4; ++b) {
        const auto& k = m.precisions[b];
        const auto& c = m.covariances[b];
        CHECK((c * k - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().rowwise().sum().maxCoeff() <= 8e-8);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j)
                if (i != j) CHECK((k(i, j) != 0.0) == g.has_edge(i, j));
    }
    // precisions vary across blocks
    CHECK((m.precisions[0] - m.precisions[1]).cwiseAbs().maxCoeff() > 0.0);
    CHECK(cig_from_model(m) == g);
}

TEST_CASE("eigen solver agrees with characteristic-polynomial roots for p = 3") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto g = random_cig(3, 2, seed);
        const auto m = build_block_model(g, 2, 8, 3.0, 0.6, seed);
        for (const auto& c : m.covariances) {
            const auto roots = symmetric3_eigenvalues(Eigen::Matrix3d(c));
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
            for (int k = 0; k < 3; ++k) CHECK(es.eigenvalues()(k) == doctest::Approx(roots[k]).epsilon(1e-10));
            CHECK(roots[0] >= 1.0 - 1e-9);
            CHECK(roots[2] <= 3.0 + 1e-9);
        }
    }
}

TEST_CASE("partial_correlation examples") {
    Eigen::MatrixXd k(2, 2);
    k << 2, 1, 1, 2;
    const auto one = BlockModel::from_precisions(4, 5.0, {k});
    CHECK(partial_correlation(one, 0, 1) == doctest::Approx(0.25).epsilon(1e-15));

    Eigen::MatrixXd k1(2, 2), k2(2, 2);
    k1 << 1, 0.3, 0.3, 1;
    k2 << 1, 0.4, 0.4, 1;
    const auto two = BlockModel::from_precisions(4, 5.0, {k1, k2});
    CHECK(partial_correlation(two, 0, 1) == doctest::Approx(0.125).epsilon(1e-15));

    CHECK_THROWS_AS(partial_correlation(two, 0, 2), IndexOutOfRange);
    CHECK_THROWS_AS(partial_correlation(two, 1, 1), InvalidParameter);
}

TEST_CASE("partial correlation is zero exactly off the graph and scale invariant") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto g = random_cig(7, 2, seed);
        const auto m = build_block_model(g, 3, 8, 2.5, 0.5, seed + 100);
        KeyedRng rng(seed);
        std::vector<Eigen::MatrixXd> scaled;
        for (const auto& k : m.precisions) scaled.push_back(rng.uniform(0.1, 10.0) * k);
        const auto ms = BlockModel::from_precisions(m.L, 1e6, scaled);
        for (int i = 0; i < 7; ++i) {
            for (int j = 0; j < 7; ++j) {
                if (i == j) continue;
                const double rho = partial_correlation(m, i, j);
                CHECK((rho > 0.0) == g.has_edge(i, j));
                CHECK(partial_correlation(ms, i, j) == doctest::Approx(rho).epsilon(1e-14));
            }
        }
    }
}

TEST_CASE("verify_assumptions evaluates each condition literally") {
    const auto g = random_cig(9, 2, 5);
    const auto m = build_block_model(g, 2, 30, 2.0, 0.5, 5);
    const auto ok = verify_assumptions(m, g, 0.0, 2);
    CHECK(ok.all_ok());

    CHECK_FALSE(verify_assumptions(m, g, 0.0, 9).sparsity_ok);  // s < p/3 fails
    CHECK_FALSE(verify_assumptions(m, g, ok.rho_min_achieved * 1.01, 2).min_partial_correlation_ok);
    CHECK(verify_assumptions(m, g, ok.rho_min_achieved, 2).min_partial_correlation_ok);

    const auto short_blocks = build_block_model(g, 2, 6, 2.0, 0.5, 5);
    CHECK_FALSE(verify_assumptions(short_blocks, g, 0.0, 2).sparsity_ok);  // s < L/3 fails
    CHECK_THROWS_AS(verify_assumptions(m, Cig(4), 0.0, 2), DimensionMismatch);
}

TEST_CASE("build_block_model validates its inputs") {
    const auto g = random_cig(4, 1, 0);
    CHECK_THROWS_AS(build_block_model(g, 0, 4, 2.0, 0.5, 0), InvalidParameter);
    CHECK_THROWS_AS(build_block_model(g, 1, 0, 2.0, 0.5, 0), InvalidParameter);
    CHECK_THROWS_AS(build_block_model(g, 1, 4, 1.0, 0.5, 0), InvalidParameter);
    CHECK_THROWS_AS(build_block_model(g, 1, 4, 2.0, 1.0, 0), InvalidParameter);
    CHECK_THROWS_AS(build_block_model(g, 1, 4, 2.0, 0.0, 0), InvalidParameter);
}

TEST_CASE("models are deterministic and round-trip through text") {
    const auto g = random_cig(6, 2, 8);
    const auto a = build_block_model(g, 3, 12, 2.0, 0.5, 8);
    const auto b = build_block_model(g, 3, 12, 2.0, 0.5, 8);
    for (int k = 0; k < 3; ++k) CHECK(a.precisions[k] == b.precisions[k]);

    std::stringstream ss;
    write_model(ss, a);
    const std::string first = ss.str();
    CHECK(first.rfind("nsgms-model v1 p=6 B=3 L=12 beta=2\n", 0) == 0);
    const auto back = read_model(ss);
    CHECK(back.p == 6);
    CHECK(back.B == 3);
    CHECK(back.L == 12);
    CHECK(back.beta == 2.0);
    for (int k = 0; k < 3; ++k) {
        CHECK(back.precisions[k] == a.precisions[k]);
        CHECK((back.covariances[k] - a.covariances[k]).cwiseAbs().maxCoeff() < 1e-12);
    }
    std::stringstream again;
    write_model(again, back);
    CHECK(again.str() == first);
}

TEST_CASE("read_model rejects malformed input") {
    std::stringstream bad_header("nsgms-model v2 p=2 B=1 L=1 beta=2\n");
    CHECK_THROWS_AS(read_model(bad_header), IoError);
    std::stringstream truncated("nsgms-model v1 p=2 B=1 L=1 beta=2\nblock 1\n1 0\n");
    CHECK_THROWS_AS(read_model(truncated), IoError);
    std::stringstream not_pd("nsgms-model v1 p=2 B=1 L=1 beta=2\nblock 1\n1 2\n2 1\n");
    CHECK_THROWS_AS(read_model(not_pd), NotPositiveDefinite);
}
