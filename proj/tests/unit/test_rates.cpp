#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "fixtures.hpp"
#include "fpc/rates.hpp"

using namespace fpc;
using fixtures::max_abs;

namespace {

void check_generator(const RateMatrix& q)
{
    const auto& m = q.entries();
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            if (i != j) CHECK(m(i, j) >= 0.0);
    CHECK(q.max_row_sum() <= 1e-10);
}

Eigen::VectorXd positive_vector(std::mt19937_64& rng, Index n)
{
    std::uniform_real_distribution<double> u(0.2, 3.0);
    Eigen::VectorXd v(n);
    for (Index i = 0; i < n; ++i) v(i) = u(rng);
    return v;
}

}  // namespace

TEST_CASE("unnormalized laplacian")
{
    WeightedGraph two(fixtures::path_weights({0.7}), 1.0);
    Eigen::Matrix2d expect;
    expect << 0.7, -0.7, -0.7, 0.7;
    CHECK(max_abs(unnormalized_laplacian(two).entries - expect) == 0.0);

    WeightedGraph path(fixtures::path_weights({2.0, 3.0}), 1.0);
    Eigen::Matrix3d lp;
    lp << 2, -2, 0, -2, 5, -3, 0, -3, 3;
    LaplacianMatrix l = unnormalized_laplacian(path);
    CHECK(max_abs(l.entries - lp) == 0.0);
    CHECK(max_abs(l.entries * Eigen::Vector3d::Ones()) == 0.0);
}

TEST_CASE("normalized laplacian")
{
    WeightedGraph two(fixtures::path_weights({4.2}), 1.0);
    Eigen::Matrix2d expect;
    expect << 1, -1, -1, 1;
    CHECK(max_abs(normalized_laplacian(two).entries - expect) <= 1e-15);

    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 10; ++rep) {
        WeightedGraph g = fixtures::random_graph(rng, 12);
        LaplacianMatrix l = normalized_laplacian(g);
        CHECK(max_abs(l.entries - l.entries.transpose()) <= 1e-14);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l.entries);
        CHECK(es.eigenvalues().minCoeff() >= -1e-8);
        CHECK(es.eigenvalues().maxCoeff() <= 2.0 + 1e-8);
        CHECK(max_abs(l.entries * g.degrees().cwiseSqrt()) <= 1e-12);
        CHECK(max_abs(random_walk_laplacian(g).entries * Eigen::VectorXd::Ones(12)) <= 1e-12);
    }
}

TEST_CASE("rw-alpha examples")
{
    Eigen::Matrix2d expect;
    expect << -1, 1, 1, -1;
    WeightedGraph two(fixtures::path_weights({0.3}), 1.0);
    for (double alpha : {1.0, 0.0, -4.0}) CHECK(max_abs(q_rw_alpha(two, alpha, 1.0).entries() - expect) <= 1e-15);

    Eigen::MatrixXd ring = Eigen::MatrixXd::Zero(5, 5);
    for (int i = 0; i < 5; ++i) ring(i, (i + 1) % 5) = ring((i + 1) % 5, i) = 0.8;
    WeightedGraph g(ring, 1.0);
    CHECK(max_abs(q_rw_alpha(g, 0.0, 1.0).entries() - q_rw_alpha(g, 0.7, 1.0).entries()) <= 1e-12);
    CHECK_THROWS_AS(q_rw_alpha(g, 1.2, 1.0), InvalidInput);
}

TEST_CASE("rw-alpha on the 3-node path approaches the limit at alpha -50")
{
    WeightedGraph path(fixtures::path_weights({2.0, 3.0}), 1.0);
    double diff = max_abs(q_rw_alpha(path, -50.0, 1.0).entries() - q_rw_limit(path).entries());
    // Node 2's neighbor degrees are 2 and 3: the residual rate toward node 1 is
    // w12 d1^50 / (w12 d1^50 + w23 d3^50) = (2/3)^51 / (1 + (2/3)^51), up to the node constant.
    double r = std::pow(2.0 / 3.0, 50.0) * (2.0 / 3.0);
    double analytic = r / (1.0 + r);
    CHECK(diff == doctest::Approx(analytic).epsilon(1e-6));
    CHECK(diff <= 2e-9);
}

TEST_CASE("rw-alpha stationarity of alpha-degrees")
{
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 20; ++rep) {
        WeightedGraph g = fixtures::random_graph(rng, 15);
        double alpha = rep % 2 ? -3.5 : 0.5;
        RateMatrix q = q_rw_alpha(g, alpha, 1.0);
        Eigen::VectorXd da = reweigh_alpha(g, alpha).degrees();
        Eigen::RowVectorXd flux = da.transpose() * q.entries();
        CHECK(flux.cwiseAbs().maxCoeff() <= 1e-9 * da.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("rw-alpha constants")
{
    CHECK(diffusion_constant(1.0, 0.5, 1, ConstantPreset::experiment) == doctest::Approx(4.0));
    CHECK(diffusion_constant(0.5, 0.5, 1, ConstantPreset::experiment) == doctest::Approx(2.0));
    CHECK(diffusion_constant(0.5, 0.5, 2, ConstantPreset::continuum) == doctest::Approx(2.0));
    CHECK(diffusion_constant(0.5, 0.5, 1, ConstantPreset::unit) == 1.0);
    CHECK(mean_shift_constant(100, 0.1, 1, ConstantPreset::experiment) == doctest::Approx(1.0));
    CHECK(mean_shift_constant(100, 0.1, 1, ConstantPreset::continuum) == doctest::Approx(2.0));
    CHECK(parse_preset("experiment") == ConstantPreset::experiment);
    CHECK_THROWS_AS(parse_preset("bogus"), InvalidInput);
}

TEST_CASE("potential rates")
{
    WeightedGraph two(fixtures::path_weights({1.0}), 1.0);
    Eigen::Matrix2d expect;
    expect << -0.5, 0.5, 0, 0;
    CHECK(max_abs(q_potential(two, Eigen::Vector2d(-1.0, -0.5), 1.0).entries() - expect) <= 1e-15);

    std::mt19937_64 rng(4);
    WeightedGraph g = fixtures::random_graph(rng, 10);
    CHECK(max_abs(q_potential(g, Eigen::VectorXd::Constant(10, 2.0), 1.0).entries()) == 0.0);
    Eigen::VectorXd b = positive_vector(rng, 10);
    RateMatrix q = q_potential(g, b, 1.0);
    for (Index i = 0; i < 10; ++i)
        for (Index j = i + 1; j < 10; ++j) CHECK(!(q.entries()(i, j) > 0.0 && q.entries()(j, i) > 0.0));
}

TEST_CASE("potential rates never decrease the expected potential")
{
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int rep = 0; rep < 30; ++rep) {
        WeightedGraph g = fixtures::random_graph(rng, 12);
        Eigen::VectorXd b = positive_vector(rng, 12);
        RateMatrix q = q_potential(g, b, 1.0);
        Eigen::RowVectorXd u(12);
        for (Index i = 0; i < 12; ++i) u(i) = unit(rng);
        CHECK((u * q.entries()).dot(b) >= -1e-12);
    }
}

TEST_CASE("mean-shift rates")
{
    WeightedGraph two(fixtures::path_weights({1.0}), 1.0);
    Eigen::Matrix2d expect;
    expect << -0.5, 0.5, 0, 0;
    CHECK(max_abs(q_mean_shift(two, Eigen::Vector2d(1.0, 2.0), 1.0).entries() - expect) <= 1e-15);
    CHECK(max_abs(q_mean_shift(two, Eigen::Vector2d(1.5, 1.5), 1.0).entries()) == 0.0);
    CHECK_THROWS_AS(q_mean_shift(two, Eigen::Vector2d(1.0, 0.0), 1.0), InvalidInput);

    std::mt19937_64 rng(8);
    WeightedGraph g = fixtures::random_graph(rng, 12);
    Eigen::VectorXd rho = positive_vector(rng, 12);
    RateMatrix q = q_mean_shift(g, rho, 1.0);
    for (Index i = 0; i < 12; ++i)
        for (Index j = 0; j < 12; ++j)
            if (i != j && q.entries()(i, j) > 0.0) CHECK(rho(j) > rho(i));
}

TEST_CASE("beta interpolation")
{
    std::mt19937_64 rng(10);
    WeightedGraph g = fixtures::random_graph(rng, 14);
    Eigen::VectorXd rho = positive_vector(rng, 14);
    RateMatrix q0 = q_beta(g, rho, 0.0);
    RateMatrix q1 = q_beta(g, rho, 1.0);
    CHECK(max_abs(q0.entries() - q_rw_alpha(g, 1.0).entries()) <= 1e-12);
    CHECK(max_abs(q1.entries() - q_mean_shift(g, rho).entries()) <= 1e-12);
    RateMatrix qh = q_beta(g, rho, 0.5);
    CHECK(max_abs(qh.entries() - 0.5 * (q0.entries() + q1.entries())) <= 1e-12 * max_abs(q0.entries()));
    RateMatrix a = q_beta(g, rho, 0.2), b = q_beta(g, rho, 0.4), c = q_beta(g, rho, 0.6);
    CHECK(max_abs(b.entries() - 0.5 * (a.entries() + c.entries())) <= 1e-12 * max_abs(q0.entries()));
    CHECK_THROWS_AS(q_beta(g, rho, 1.2), InvalidInput);
    CHECK_THROWS_AS(q_beta(g, rho, -0.1), InvalidInput);
}

TEST_CASE("KNF and quickshift examples")
{
    WeightedGraph path(fixtures::path_weights({1.0, 1.0}), 1.0);
    Eigen::Vector3d b(1.0, 3.0, 2.0);
    Eigen::Matrix3d expect;
    expect << -1, 1, 0, 0, 0, 0, 0, 1, -1;
    CHECK(max_abs(q_knf(path, b, 2.0).entries() - expect) == 0.0);
    Eigen::Matrix3d dist;
    dist << 0, 1, 2, 1, 0, 1, 2, 1, 0;
    CHECK(max_abs(q_quickshift(path, b, dist).entries() - expect) == 0.0);
    CHECK(max_abs(q_knf(path, Eigen::Vector3d::Constant(1.0), 2.0).entries()) == 0.0);

    // Node 0 sees two equal uphill neighbors.
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(4, 4);
    w(0, 1) = w(1, 0) = w(0, 2) = w(2, 0) = w(0, 3) = w(3, 0) = 1.0;
    WeightedGraph star(w, 1.0);
    Eigen::Vector4d bt(0.0, 2.0, 2.0, 1.0);
    RateMatrix q = q_knf(star, bt, 2.0);
    CHECK(q.entries()(0, 1) == 0.5);
    CHECK(q.entries()(0, 2) == 0.5);
    CHECK(q.entries()(0, 3) == 0.0);
}

TEST_CASE("KNF maximizer sets match brute-force enumeration")
{
    std::mt19937_64 rng(12);
    for (int rep = 0; rep < 30; ++rep) {
        WeightedGraph g = fixtures::random_graph(rng, 9, 0.3);
        Eigen::VectorXd b(9);
        std::uniform_int_distribution<int> level(0, 4);
        for (Index i = 0; i < 9; ++i) b(i) = level(rng);
        RateMatrix q = q_knf(g, b, 2.0);
        for (Index i = 0; i < 9; ++i) {
            double best = 0.0;
            for (Index j = 0; j < 9; ++j)
                if (j != i && g.weights()(i, j) > 0.0) best = std::max(best, b(j) - b(i));
            int count = 0;
            for (Index j = 0; j < 9; ++j)
                if (j != i && g.weights()(i, j) > 0.0 && best > 0.0 && b(j) - b(i) == best) ++count;
            for (Index j = 0; j < 9; ++j) {
                if (j == i) continue;
                bool in = g.weights()(i, j) > 0.0 && best > 0.0 && b(j) - b(i) == best;
                CHECK(q.entries()(i, j) == (in ? 1.0 / count : 0.0));
            }
        }
    }
}

TEST_CASE("rw-limit examples")
{
    WeightedGraph path(fixtures::path_weights({2.0, 3.0}), 1.0);
    Eigen::Matrix3d expect;
    expect << -1, 1, 0, 0, -1, 1, 0, 1, -1;
    CHECK(max_abs(q_rw_limit(path).entries() - expect) <= 1e-15);

    std::mt19937_64 rng(14);
    WeightedGraph g = fixtures::random_graph(rng, 15);
    RateMatrix q = q_rw_limit(g);
    for (Index i = 0; i < 15; ++i) {
        int positive = 0;
        for (Index j = 0; j < 15; ++j)
            if (j != i && q.entries()(i, j) > 0.0) ++positive;
        CHECK(positive == 1);
    }
}

TEST_CASE("alpha and beta maps")
{
    CHECK(beta_from_alpha(1.0) == 0.0);
    CHECK(beta_from_alpha(0.5) == doctest::Approx(0.5));
    CHECK(beta_from_alpha(5.0 / 6.0) == doctest::Approx(0.25));
    CHECK(beta_from_alpha(-0.5) == doctest::Approx(0.75));
    CHECK(beta_from_alpha(-3.5) == doctest::Approx(0.9));
    CHECK(beta_from_alpha(-50.0) == doctest::Approx(0.990291).epsilon(1e-5));
    for (double b : {0.0, 0.25, 0.5, 0.9}) CHECK(beta_from_alpha(alpha_from_beta(b)) == doctest::Approx(b));
    CHECK_THROWS_AS(beta_from_alpha(1.5), InvalidInput);
}

TEST_CASE("every constructor yields a generator on random graphs")
{
    std::mt19937_64 rng(16);
    for (int rep = 0; rep < 25; ++rep) {
        WeightedGraph g = fixtures::random_graph(rng, 5 + rep);
        Eigen::VectorXd rho = positive_vector(rng, g.size());
        Eigen::MatrixXd dist = Eigen::MatrixXd::Ones(g.size(), g.size());
        check_generator(q_negated_laplacian(g));
        check_generator(q_rw_alpha(g, -3.5));
        check_generator(q_rw_alpha(g, 0.5, ConstantPreset::continuum));
        check_generator(q_potential(g, rho, 2.0));
        check_generator(q_mean_shift(g, rho));
        check_generator(q_beta(g, rho, 0.3));
        check_generator(q_knf(g, rho, 2.0));
        check_generator(q_quickshift(g, rho, dist));
        check_generator(q_rw_limit(g));
    }
}

TEST_CASE("rate matrix rejects negative off-diagonals")
{
    Eigen::Matrix2d m;
    m << 0, -1, 1, 0;
    CHECK_THROWS_AS(RateMatrix(m, RateKind::potential), InvalidInput);
}
