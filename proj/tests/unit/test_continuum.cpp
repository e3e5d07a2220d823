#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "fpc/continuum.hpp"
#include "fpc/datasets.hpp"
#include "fpc/dynamics.hpp"

using namespace fpc;
using fixtures::max_abs;

namespace {

DensityField two_bump_field(Index m = 200)
{
    SyntheticDensity rho = density("two_bump");
    return DensityField::from_function(Grid1D(-1.5, 1.5, m), [&](double x) { return rho(x); });
}

Eigen::MatrixXd neumann_laplacian(Index m, double h)
{
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(m, m);
    for (Index j = 0; j + 1 < m; ++j) {
        l(j, j + 1) = l(j + 1, j) = 1.0;
        l(j, j) -= 1.0;
        l(j + 1, j + 1) -= 1.0;
    }
    return l / (h * h);
}

DensityField random_field(std::mt19937_64& rng, Index m)
{
    std::uniform_real_distribution<double> u(0.2, 3.0);
    Eigen::VectorXd v(m);
    for (Index j = 0; j < m; ++j) v(j) = u(rng);
    return DensityField(Grid1D(0.0, 1.0, m), v);
}

}  // namespace

TEST_CASE("grid and field basics")
{
    Grid1D g(-1.5, 1.5, 200);
    CHECK(g.h() == doctest::Approx(0.015));
    CHECK(g.nearest_cell(-0.1) == 93);
    CHECK_THROWS_AS(Grid1D(0.0, 1.0, 2), InvalidInput);
    CHECK_THROWS_AS(Grid1D(1.0, 0.0, 10), InvalidInput);
    DensityField d = DensityField::dirac(g, -0.1);
    CHECK(d.mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(two_bump_field().mass() == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(two_bump_field().normalized().mass() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pure diffusion generator is the Neumann Laplacian")
{
    DensityField rho = two_bump_field(40);
    Eigen::MatrixXd g = fp_generator_1d(rho, 0.0);
    CHECK(max_abs(g - neumann_laplacian(40, rho.grid.h())) <= 1e-9 * max_abs(g));
    CHECK(max_abs(fp_generator_1d(rho, 0.0, FluxScheme::upwind) - neumann_laplacian(40, rho.grid.h())) <= 1e-9 * max_abs(g));
}

TEST_CASE("constant density has no drift")
{
    DensityField flat(Grid1D(0.0, 1.0, 30), Eigen::VectorXd::Constant(30, 1.0));
    for (double beta : {0.25, 0.75}) {
        Eigen::MatrixXd expect = (1.0 - beta) * neumann_laplacian(30, flat.grid.h());
        for (auto s : {FluxScheme::exponential_fitting, FluxScheme::upwind})
            CHECK(max_abs(fp_generator_1d(flat, beta, s) - expect) <= 1e-9 * max_abs(expect));
    }
    CHECK(max_abs(fp_generator_1d(flat, 1.0)) == 0.0);
}

TEST_CASE("pure drift transports mass uphill")
{
    Grid1D grid(0.0, 1.0, 10);
    DensityField rho = DensityField::from_function(grid, [](double x) { return std::exp(2.0 * x); });
    Eigen::MatrixXd g = fp_generator_1d(rho, 1.0);
    for (Index j = 1; j + 1 < 10; ++j) {
        CHECK(g(j + 1, j) > 0.0);
        CHECK(g(j - 1, j) == 0.0);
    }
}

TEST_CASE("generator columns sum to zero with nonnegative off-diagonals")
{
    std::mt19937_64 rng(41);
    for (int rep = 0; rep < 20; ++rep) {
        DensityField rho = random_field(rng, 50);
        for (double beta : {0.0, 0.3, 0.9, 1.0})
            for (auto s : {FluxScheme::exponential_fitting, FluxScheme::upwind}) {
                Eigen::MatrixXd g = fp_generator_1d(rho, beta, s);
                CHECK(g.colwise().sum().cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, max_abs(g)));
                for (Index i = 0; i < 50; ++i)
                    for (Index j = 0; j < 50; ++j)
                        if (i != j) CHECK(g(i, j) >= 0.0);
            }
    }
    DensityField bad(Grid1D(0.0, 1.0, 5), Eigen::VectorXd::Zero(5));
    CHECK_THROWS_AS(fp_generator_1d(bad, 0.5), InvalidInput);
    CHECK_THROWS_AS(fp_generator_1d(two_bump_field(20), 1.5), InvalidInput);
}

TEST_CASE("heat equation reaches the uniform state")
{
    DensityField rho = two_bump_field();
    DensityField f = fp_solve_1d(rho, 0.0, DensityField::dirac(rho.grid, -0.1), 20.0);
    CHECK((f.values.array() - 1.0 / 3.0).abs().maxCoeff() <= 1e-4);
}

TEST_CASE("half-weight dynamics relax to the density itself")
{
    DensityField rho = two_bump_field();
    DensityField f = fp_solve_1d(rho, 0.5, DensityField::dirac(rho.grid, -0.1), 50.0);
    DensityField target = rho.normalized();
    CHECK(l1_distance(f, target) <= 1e-3);
}

TEST_CASE("solver conserves mass, stays nonnegative and approaches the Maxwellian")
{
    DensityField rho = two_bump_field(100);
    for (double beta : {0.0, 0.25, 0.5, 0.75}) {
        DensityField exact = maxwellian_exact(rho, beta);
        DensityField f = DensityField::dirac(rho.grid, 0.6);
        double prev = std::numeric_limits<double>::infinity();
        for (double dt : {0.5, 2.0, 8.0, 32.0}) {
            f = fp_solve_1d(rho, beta, f, dt);
            CHECK(std::abs(f.mass() - 1.0) <= 1e-8);
            CHECK(f.values.minCoeff() >= -1e-9);
            double d = l1_distance(f, exact);
            CHECK(d <= prev);
            prev = d;
        }
        if (beta <= 0.5) CHECK(prev <= 1e-3);
    }
}

TEST_CASE("exact Maxwellian special cases")
{
    DensityField rho = two_bump_field();
    DensityField m0 = maxwellian_exact(rho, 0.0);
    CHECK((m0.values.array() - 1.0 / 3.0).abs().maxCoeff() <= 1e-12);
    DensityField m1 = maxwellian_exact(rho, 0.5);
    CHECK(max_abs(m1.values - rho.normalized().values) <= 1e-10);
    CHECK_THROWS_AS(maxwellian_exact(rho, 1.0), UnsupportedParameter);

    // Squared density normalized by an independent fine quadrature.
    SyntheticDensity two = density("two_bump");
    double z = fixtures::simpson([&](double x) { return two(x) * two(x); }, -1.5, 1.5, 20000);
    DensityField m2 = maxwellian_exact(rho, 2.0 / 3.0);
    for (Index j = 0; j < 200; j += 17) {
        double x = rho.grid.center(j);
        CHECK(m2.values(j) == doctest::Approx(two(x) * two(x) / z).epsilon(1e-3));
    }
}

TEST_CASE("KDE Maxwellian")
{
    PointCloud c = sample(density("two_bump"), 400, 1);
    Grid1D grid(-1.5, 1.5, 200);
    DensityField m = maxwellian_kde(c, 0.1, 0.5, grid);
    CHECK(m.mass() == doctest::Approx(1.0).epsilon(1e-10));
    Eigen::MatrixXd q(200, 1);
    q.col(0) = grid.centers();
    Eigen::VectorXd k = kde(c, 0.1, q);
    CHECK(max_abs(m.values - k / (k.sum() * grid.h())) <= 1e-10);
    CHECK_THROWS_AS(maxwellian_kde(c, 0.0, 0.5, grid), InvalidInput);
}

TEST_CASE("similarity-transformed operator of a flat density")
{
    const Index m = 40;
    DensityField flat(Grid1D(0.0, 1.0, m), Eigen::VectorXd::Constant(m, 1.0));
    const double beta = 0.6, h = flat.grid.h();
    WittenSpectrum sp = witten_spectrum(witten_matrix_1d(flat, beta));
    for (Index k = 0; k < m; ++k) {
        double expect = (1.0 - beta) * (2.0 / (h * h)) * (1.0 - std::cos(M_PI * static_cast<double>(k) / m));
        CHECK(sp.eigenvalues(k) == doctest::Approx(expect).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("similarity-transformed operator of the two-bump density")
{
    DensityField rho = two_bump_field();
    Eigen::MatrixXd s = witten_matrix_1d(rho, 0.9);
    CHECK(max_abs(s - s.transpose()) <= 1e-12 * max_abs(s));
    WittenSpectrum sp = witten_spectrum(s);
    CHECK(std::abs(sp.eigenvalues(0)) <= 1e-8);
    CHECK(sp.eigenvalues(1) > 1e-6);
    CHECK(sp.eigenvalues.minCoeff() >= -1e-8);
    Eigen::VectorXd v = sp.eigenvectors.col(1);
    double tol = 1e-6 * v.cwiseAbs().maxCoeff();
    int changes = 0, sign = 0;
    double where = 0.0;
    for (Index j = 0; j < v.size(); ++j) {
        if (std::abs(v(j)) <= tol) continue;
        int sg = v(j) > 0 ? 1 : -1;
        if (sign != 0 && sg != sign) {
            ++changes;
            where = rho.grid.center(j);
        }
        sign = sg;
    }
    CHECK(changes == 1);
    CHECK(where > -0.5);
    CHECK(where < 1.25);
    CHECK_THROWS_AS(witten_matrix_1d(rho, 1.0), InvalidInput);
}

TEST_CASE("second eigenvalue converges under grid refinement")
{
    std::vector<double> lam;
    for (Index m : {50, 100, 200, 400, 800}) lam.push_back(witten_spectrum(witten_matrix_1d(two_bump_field(m), 0.5)).eigenvalues(1));
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < lam.size(); ++i) {
        double d = std::abs(lam[i] - lam.back());
        CHECK(d < prev);
        prev = d;
    }
}

TEST_CASE("Kronecker-sum spectrum is the sum-set")
{
    DensityField flat(Grid1D(0.0, 1.0, 20), Eigen::VectorXd::Constant(20, 1.0));
    WittenProductReport r = witten_product_check(flat, flat, 0.3, 2500);
    CHECK(r.assembled);
    CHECK(r.max_sum_error <= 1e-8);

    SyntheticDensity sky = density("blue_sky");
    auto fx = sky.factor(0), fy = sky.factor(1);
    DensityField rx = DensityField::from_function(Grid1D(-1.5, 1.5, 40), fx);
    DensityField ry = DensityField::from_function(Grid1D(-1.0, 1.0, 40), fy);
    WittenProductReport b = witten_product_check(rx, ry, 0.95, 2500);
    CHECK(b.max_sum_error <= 1e-8);
    CHECK(b.minimizer == "y");
    CHECK(b.second_gap < b.first_gap);
    CHECK(witten_product_check(ry, rx, 0.95, 2500).minimizer == "x");
    CHECK_FALSE(witten_product_check(rx, ry, 0.95, 100).assembled);
}

TEST_CASE("smoothing and steady-state comparison")
{
    Grid1D grid(-1.5, 1.5, 200);
    Eigen::VectorXd nodes(3), masses(3);
    nodes << -1.0, 0.0, 1.4;
    masses << 0.2, 0.5, 0.3;
    DensityField s = smooth_atomic_measure(nodes, masses, 0.1, grid);
    CHECK(s.mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fp_steady_state_compare(nodes, masses, s, 0.1) <= 1e-14);
    CHECK_THROWS_AS(smooth_atomic_measure(nodes, masses, 0.0, grid), InvalidInput);
}

TEST_CASE("long-time interpolated dynamics match the KDE Maxwellian")
{
    SyntheticDensity rho = density("two_bump");
    PointCloud c = sample(rho, 625, 0);
    Grid1D grid(-1.5, 1.5, 200);
    double eps = auto_bandwidth(c), delta = kde_default_bandwidth(c, rho.domain_measure());
    WeightedGraph g = build_proximity_graph(c, eps);
    Eigen::VectorXd rho_hat = kde_at_samples(c, delta);
    for (double beta : {0.0, 0.25, 0.5}) {
        Eigen::VectorXd pi = stationary_distribution(q_beta(g, rho_hat, beta));
        double d = fp_steady_state_compare(c.points.col(0), pi, maxwellian_kde(c, delta, beta, grid), delta);
        CHECK(d <= 0.1);
    }
}
