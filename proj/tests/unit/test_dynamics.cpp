#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "fpc/datasets.hpp"
#include "fpc/dynamics.hpp"

using namespace fpc;
using fixtures::max_abs;

namespace {

WeightedGraph two_bump_graph(Index n, std::uint64_t seed)
{
    PointCloud c = sample(density("two_bump"), n, seed);
    return build_proximity_graph(c, auto_bandwidth(c));
}

Eigen::VectorXd unit_vector(Index n, Index i)
{
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(i) = 1.0;
    return e;
}

RateMatrix random_q_beta(std::mt19937_64& rng, Index n, double beta)
{
    PointCloud c = fixtures::random_cloud(rng, n, 1);
    WeightedGraph g = build_proximity_graph(c, auto_bandwidth(c));
    return q_beta(g, kde_at_samples(c, 0.3), beta);
}

}  // namespace

TEST_CASE("evolve under the zero generator is the identity")
{
    RateMatrix q(Eigen::MatrixXd::Zero(3, 3), RateKind::potential);
    Eigen::Vector3d u(0.2, 0.5, 0.3);
    for (auto m : {EvolveMethod::matrix_exponential, EvolveMethod::integrate})
        CHECK(max_abs(evolve(q, u, 7.0, m) - u) <= 1e-14);
}

TEST_CASE("two-state chain closed form")
{
    Eigen::Matrix2d m;
    m << -1, 1, 1, -1;
    RateMatrix q(m, RateKind::negated_laplacian);
    for (double t : {0.0, 0.3, 1.0, 5.0})
        for (auto method : {EvolveMethod::matrix_exponential, EvolveMethod::integrate}) {
            Eigen::VectorXd u = evolve(q, Eigen::Vector2d(1.0, 0.0), t, method);
            CHECK(u(0) == doctest::Approx(0.5 * (1 + std::exp(-2 * t))).epsilon(1e-9));
            CHECK(u(1) == doctest::Approx(0.5 * (1 - std::exp(-2 * t))).epsilon(1e-9));
        }
}

TEST_CASE("evolve rejects negative time and bad initial data")
{
    Eigen::Matrix2d m;
    m << -1, 1, 1, -1;
    RateMatrix q(m, RateKind::negated_laplacian);
    CHECK_THROWS_AS(evolve(q, Eigen::Vector2d(1.0, 0.0), -1.0), InvalidInput);
    CHECK_THROWS_AS(evolve(q, Eigen::Vector3d(1.0, 0.0, 0.0), 1.0), InvalidInput);
}

TEST_CASE("matrix exponential and integration agree")
{
    std::mt19937_64 rng(21);
    RateMatrix q = random_q_beta(rng, 50, 0.6);
    Eigen::VectorXd u0 = Eigen::VectorXd::Constant(50, 1.0 / 50);
    Eigen::VectorXd a = evolve(q, u0, 1.0, EvolveMethod::matrix_exponential);
    Eigen::VectorXd b = evolve(q, u0, 1.0, EvolveMethod::integrate);
    CHECK(max_abs(a - b) <= 1e-6);
    EmbeddingSet ea = embed_all(q, 1.0, EvolveMethod::matrix_exponential);
    EmbeddingSet eb = embed_all(q, 1.0, EvolveMethod::integrate);
    CHECK(max_abs(ea.vectors - eb.vectors) <= 1e-6);
}

TEST_CASE("matrix exponential of a diagonalizable matrix")
{
    Eigen::Matrix2d a;
    a << 1, 2, 0, 3;
    // a = V diag(1, 3) V^-1 with V = [[1, 1], [0, 1]].
    Eigen::Matrix2d expect;
    expect << std::exp(1.0), std::exp(3.0) - std::exp(1.0), 0, std::exp(3.0);
    CHECK(max_abs(matrix_exponential(a) - expect) <= 1e-12 * std::exp(3.0));
}

TEST_CASE("embed_all at time zero is the identity and rows are probabilities")
{
    std::mt19937_64 rng(22);
    RateMatrix q = random_q_beta(rng, 30, 0.9);
    CHECK(max_abs(embed_all(q, 0.0).vectors - Eigen::MatrixXd::Identity(30, 30)) == 0.0);

    WeightedGraph g = two_bump_graph(204, 1);
    PointCloud c = sample(density("two_bump"), 204, 1);
    RateMatrix qb = q_beta(g, kde_at_samples(c, kde_default_bandwidth(c, 3.0)), 0.9);
    EmbeddingSet e = embed_all(qb, 10.0);
    CHECK((e.vectors.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-8);
    CHECK(e.vectors.minCoeff() >= 0.0);
    CHECK(e.flavor == EmbeddingFlavor::markov);
    CHECK(e.time == 10.0);
}

TEST_CASE("spectral basis of a 2-node graph")
{
    WeightedGraph g(fixtures::path_weights({1.3}), 1.0);
    SpectralBasis b = spectral_basis(g, 0.0, 2, 1.0);
    CHECK(b.eigenvalues(0) == doctest::Approx(0.0));
    CHECK(b.eigenvalues(1) == doctest::Approx(2.0));
}

TEST_CASE("spectral basis orthonormality and stationary mode")
{
    WeightedGraph g = two_bump_graph(100, 2);
    for (double alpha : {1.0, 0.5, -3.5}) {
        SpectralBasis b = spectral_basis(g, alpha, 100);
        CHECK(std::abs(b.eigenvalues(0)) <= 1e-8 * b.eigenvalues(1));
        Eigen::MatrixXd gram = b.phi.transpose() * b.degrees.cwiseInverse().asDiagonal() * b.phi;
        CHECK(max_abs(gram - Eigen::MatrixXd::Identity(100, 100)) <= 1e-8);
        Eigen::VectorXd mode = b.degrees.cwiseSqrt().normalized();
        CHECK(std::abs(std::abs(b.phi_tilde.col(0).dot(mode)) - 1.0) <= 1e-8);
        for (Index l = 1; l < 100; ++l) CHECK(b.eigenvalues(l) >= b.eigenvalues(l - 1));
    }
}

TEST_CASE("spectral reconstruction matches the matrix exponential")
{
    WeightedGraph g = two_bump_graph(100, 3);
    for (double alpha : {1.0, 0.0, -3.5}) {
        SpectralBasis b = spectral_basis(g, alpha, 100);
        RateMatrix q = q_rw_alpha(g, alpha);
        CHECK(std::abs(q.param("c_alpha") - b.c_alpha) <= 1e-12 * b.c_alpha);
        for (double t : {0.0, 1.0}) {
            Eigen::MatrixXd e = embed_all(q, t).vectors;
            double worst = 0.0;
            for (Index i = 0; i < 100; i += 7)
                worst = std::max(worst, max_abs(spectral_reconstruct(b, t, i) - e.row(i).transpose()));
            CHECK(worst <= 1e-6);
        }
    }
    SpectralBasis partial = spectral_basis(g, 1.0, 10);
    CHECK_THROWS_AS(spectral_reconstruct(partial, 1.0, 0), InvalidInput);
}

TEST_CASE("spectral reconstruction at long times is the degree distribution")
{
    std::mt19937_64 rng(23);
    WeightedGraph g = fixtures::random_graph(rng, 20);
    SpectralBasis b = spectral_basis(g, 0.5, 20, 1.0);
    Eigen::VectorXd target = b.degrees / b.degrees.sum();
    CHECK(max_abs(spectral_reconstruct(b, 1e3, 4) - target) <= 1e-6);
    CHECK(max_abs(spectral_reconstruct(b, 0.0, 4) - unit_vector(20, 4)) <= 1e-8);
}

TEST_CASE("spectral embedding decay and diffusion-distance identity")
{
    WeightedGraph g = two_bump_graph(100, 4);
    SpectralBasis b = spectral_basis(g, 0.5, 100);
    EmbeddingSet s1 = spectral_embedding(b, 1.0, 100);
    EmbeddingSet s2 = spectral_embedding(b, 2.0, 100);
    EmbeddingSet s0 = spectral_embedding(b, 0.0, 100);
    for (Index l = 1; l < 5; ++l) {
        double r1 = s1.vectors(3, l) / s0.vectors(3, l), r2 = s2.vectors(3, l) / s0.vectors(3, l);
        CHECK(r2 == doctest::Approx(r1 * r1).epsilon(1e-10));
    }
    CHECK(s1.flavor == EmbeddingFlavor::spectral);

    Eigen::MatrixXd markov = embed_all(q_rw_alpha(g, 0.5), 1.0).vectors;
    double worst = 0.0;
    for (Index i = 0; i < 100; i += 9)
        for (Index j = i + 1; j < 100; j += 11) {
            double euclid = (s1.vectors.row(i) - s1.vectors.row(j)).norm();
            double diff = diffusion_distance(markov.row(i).transpose(), markov.row(j).transpose(), b.degrees);
            worst = std::max(worst, std::abs(euclid - diff));
        }
    CHECK(worst <= 1e-6);
    CHECK_THROWS_AS(spectral_embedding(spectral_basis(g, 0.5, 10), 1.0, 20), InvalidInput);
}

TEST_CASE("distances")
{
    Eigen::Vector2d u(1.0, 0.0), v(0.0, 1.0);
    CHECK(l2_distance(u, u) == 0.0);
    CHECK(l2_distance(u, v) == doctest::Approx(std::sqrt(2.0)));
    CHECK(diffusion_distance(u, v, Eigen::Vector2d(1.0, 1.0)) == doctest::Approx(std::sqrt(2.0)));
    CHECK(diffusion_distance(u, v, Eigen::Vector2d(4.0, 4.0)) == doctest::Approx(0.5 * l2_distance(u, v)));
    CHECK_THROWS_AS(l2_distance(u, Eigen::Vector3d::Zero()), InvalidInput);
}

TEST_CASE("density view")
{
    Eigen::VectorXd d = Eigen::VectorXd::Constant(5, 2.5);
    CHECK(max_abs(density_view(Eigen::VectorXd::Constant(5, 0.2), d) - Eigen::VectorXd::Constant(5, 0.5)) <= 1e-15);
    Eigen::VectorXd deg(3);
    deg << 1.0, 2.0, 3.0;
    CHECK(max_abs(density_view(unit_vector(3, 1), deg) - 2.0 * unit_vector(3, 1)) == 0.0);

    std::mt19937_64 rng(24);
    WeightedGraph g = fixtures::random_graph(rng, 12);
    RateMatrix q = q_rw_alpha(g, 0.5, 1.0);
    Eigen::VectorXd view = density_view(evolve(q, unit_vector(12, 0), 500.0), g.degrees());
    Eigen::VectorXd expect = reweigh_alpha(g, 0.5).degrees().cwiseProduct(g.degrees());
    CHECK(max_abs(view / view.sum() - expect / expect.sum()) <= 1e-8);
}

TEST_CASE("semigroup, positivity and conservation")
{
    std::mt19937_64 rng(25);
    for (int rep = 0; rep < 5; ++rep) {
        RateMatrix q = random_q_beta(rng, 25, 0.2 * rep);
        Eigen::VectorXd u0 = unit_vector(25, rep);
        for (double s : {0.1, 1.0})
            for (double t : {0.1, 1.0}) {
                Eigen::VectorXd a = evolve(q, evolve(q, u0, s), t);
                Eigen::VectorXd b = evolve(q, u0, s + t);
                CHECK(max_abs(a - b) <= 1e-7);
            }
        for (double t : {0.5, 10.0, 100.0}) {
            Eigen::VectorXd raw = evolve_raw(q, u0, t);
            CHECK(raw.minCoeff() >= -1e-10);
            CHECK(std::abs(raw.sum() - 1.0) <= 1e-8);
        }
    }
}

TEST_CASE("mass conservation for every generator kind")
{
    std::mt19937_64 rng(26);
    WeightedGraph g = fixtures::random_graph(rng, 15);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    Eigen::VectorXd rho(15);
    for (Index i = 0; i < 15; ++i) rho(i) = u(rng);
    std::vector<RateMatrix> qs{q_negated_laplacian(g),      q_rw_alpha(g, 0.3),          q_mean_shift(g, rho, 1.0),
                               q_beta(g, rho, 0.5),         q_knf(g, rho, 2.0),          q_rw_limit(g),
                               q_potential(g, rho, 1.0),    q_quickshift(g, rho, Eigen::MatrixXd::Ones(15, 15))};
    for (const auto& q : qs)
        for (double t : {1.0, 100.0}) CHECK(std::abs(evolve(q, unit_vector(15, 2), t).sum() - 1.0) <= 1e-8);
}

TEST_CASE("potential increases along potential-driven dynamics")
{
    std::mt19937_64 rng(27);
    for (int rep = 0; rep < 5; ++rep) {
        PointCloud c = fixtures::random_cloud(rng, 30, 1);
        WeightedGraph g = build_proximity_graph(c, auto_bandwidth(c));
        Eigen::VectorXd rho = kde_at_samples(c, 0.4);
        RateMatrix q = q_mean_shift(g, rho, 1.0);
        Eigen::VectorXd b = -rho.cwiseInverse();
        Eigen::VectorXd u = Eigen::VectorXd::Constant(30, 1.0 / 30);
        double prev = b.dot(u);
        for (double t : geometric_times(0.01, 100.0, 20)) {
            double now = b.dot(evolve(q, u, t));
            CHECK(now - prev >= -1e-9);
            prev = now;
        }
    }
}

TEST_CASE("limit dynamics concentrate near degree-modal nodes")
{
    std::mt19937_64 rng(28);
    WeightedGraph g = fixtures::random_graph(rng, 20, 0.2);
    const auto& w = g.weights();
    const auto& d = g.degrees();
    std::vector<bool> basin(20, false);
    for (Index i = 0; i < 20; ++i) {
        bool modal = true;
        Index top = -1;
        for (Index j = 0; j < 20; ++j)
            if (w(i, j) > 0.0) {
                if (d(j) >= d(i)) modal = false;
                if (top < 0 || d(j) > d(top)) top = j;
            }
        if (modal) basin[static_cast<std::size_t>(i)] = basin[static_cast<std::size_t>(top)] = true;
    }
    RateMatrix q = q_rw_limit(g);
    Eigen::VectorXd u0 = Eigen::VectorXd::Constant(20, 1.0 / 20);
    double prev = 0.0;
    for (double t : {1.0, 5.0, 20.0, 60.0}) {
        Eigen::VectorXd u = evolve(q, u0, t);
        double mass = 0.0;
        for (Index i = 0; i < 20; ++i)
            if (basin[static_cast<std::size_t>(i)]) mass += u(i);
        CHECK(mass >= prev - 1e-12);
        prev = mass;
    }
    CHECK(prev >= 0.999);
}

TEST_CASE("clip probability")
{
    Eigen::VectorXd u(3);
    u << 0.5, 0.5 + 5e-11, -5e-11;
    clip_probability(u);
    CHECK(u(2) == 0.0);
    CHECK(u.sum() == doctest::Approx(1.0).epsilon(1e-15));
    Eigen::VectorXd bad(2);
    bad << 1.0, -1e-6;
    CHECK_THROWS_AS(clip_probability(bad), NumericalError);
}

TEST_CASE("stationary distribution")
{
    std::mt19937_64 rng(29);
    WeightedGraph g = fixtures::random_graph(rng, 10);
    RateMatrix q = q_rw_alpha(g, -1.0, 1.0);
    Eigen::VectorXd da = reweigh_alpha(g, -1.0).degrees();
    CHECK(max_abs(stationary_distribution(q) - da / da.sum()) <= 1e-12);
}

TEST_CASE("geometric times")
{
    auto ts = geometric_times(0.1, 10.0, 3);
    REQUIRE(ts.size() == 3);
    CHECK(ts[0] == doctest::Approx(0.1));
    CHECK(ts[1] == doctest::Approx(1.0));
    CHECK(ts[2] == doctest::Approx(10.0));
}
