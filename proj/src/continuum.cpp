#include "fpc/continuum.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

namespace fpc {

Grid1D::Grid1D(double lo, double hi, Index m) : a(lo), b(hi), cells(m)
{
    if (!(lo < hi)) throw InvalidInput("grid requires a < b");
    if (m < 3) throw InvalidInput("grid requires at least 3 cells");
}

Eigen::VectorXd Grid1D::centers() const
{
    Eigen::VectorXd x(cells);
    for (Index j = 0; j < cells; ++j) x(j) = center(j);
    return x;
}

Index Grid1D::nearest_cell(double x) const
{
    double s = std::floor((x - a) / h());
    return std::clamp(static_cast<Index>(s), Index{0}, cells - 1);
}

DensityField::DensityField(Grid1D g, Eigen::VectorXd v) : grid(g), values(std::move(v))
{
    if (values.size() != grid.cells) throw InvalidInput("density field length does not match grid");
    if (!values.allFinite()) throw InvalidInput("density field must be finite");
}

DensityField DensityField::from_function(const Grid1D& grid, const std::function<double(double)>& f)
{
    Eigen::VectorXd v(grid.cells);
    for (Index j = 0; j < grid.cells; ++j) v(j) = f(grid.center(j));
    return DensityField(grid, std::move(v));
}

DensityField DensityField::dirac(const Grid1D& grid, double x)
{
    Eigen::VectorXd v = Eigen::VectorXd::Zero(grid.cells);
    v(grid.nearest_cell(x)) = 1.0 / grid.h();
    return DensityField(grid, std::move(v));
}

DensityField DensityField::normalized() const
{
    double m = mass();
    if (!(m > 0.0)) throw NumericalError("cannot normalize a field without mass");
    return DensityField(grid, values / m);
}

FluxScheme parse_flux(const std::string& name)
{
    if (name == "exponential-fitting" || name == "sg") return FluxScheme::exponential_fitting;
    if (name == "upwind") return FluxScheme::upwind;
    throw InvalidInput("unknown flux scheme '" + name + "' (exponential-fitting, upwind)");
}

namespace {

double bernoulli(double z)
{
    if (std::abs(z) < 1e-10) return 1.0 - 0.5 * z;
    return z / std::expm1(z);
}

void check_rho(const DensityField& rho)
{
    if (!(rho.values.array() > 0.0).all()) throw InvalidInput("density must be positive on the grid");
}

Eigen::SparseMatrix<double> sparse_generator(const Eigen::MatrixXd& g)
{
    std::vector<Eigen::Triplet<double>> t;
    const Index m = g.rows();
    for (Index j = 0; j < m; ++j)
        for (Index i = std::max<Index>(0, j - 1); i <= std::min(m - 1, j + 1); ++i)
            if (g(i, j) != 0.0) t.emplace_back(i, j, g(i, j));
    Eigen::SparseMatrix<double> s(m, m);
    s.setFromTriplets(t.begin(), t.end());
    return s;
}

}  // namespace

Eigen::MatrixXd fp_generator_1d(const DensityField& rho, double beta, FluxScheme scheme)
{
    check_rho(rho);
    if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidInput("beta must lie in [0, 1]");
    const Index m = rho.grid.cells;
    const double h = rho.grid.h();
    const double diff = 1.0 - beta;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m, m);
    for (Index j = 0; j + 1 < m; ++j) {
        const double v = beta * (std::log(rho.values(j + 1)) - std::log(rho.values(j))) / h;
        // flux across the interface is right * f_j - left * f_{j+1}
        double right, left;
        if (scheme == FluxScheme::upwind || diff == 0.0) {
            right = diff / h + std::max(v, 0.0);
            left = diff / h + std::max(-v, 0.0);
        } else {
            const double peclet = v * h / diff;
            right = diff / h * bernoulli(-peclet);
            left = diff / h * bernoulli(peclet);
        }
        g(j + 1, j) += right / h;
        g(j, j + 1) += left / h;
    }
    for (Index j = 0; j < m; ++j) {
        double s = 0.0;
        if (j > 0) s += g(j - 1, j);
        if (j + 1 < m) s += g(j + 1, j);
        g(j, j) = -s;
    }
    return g;
}

DensityField fp_solve_1d(const DensityField& rho, double beta, const DensityField& f0, double t,
                         FluxScheme scheme, const OdeOptions& ode)
{
    if (f0.grid.cells != rho.grid.cells || f0.grid.a != rho.grid.a || f0.grid.b != rho.grid.b)
        throw InvalidInput("initial field and density use different grids");
    if ((f0.values.array() < 0.0).any()) throw InvalidInput("initial field must be nonnegative");
    if (std::abs(f0.mass() - 1.0) > 1e-8) throw InvalidInput("initial field must be normalized");
    if (!(t >= 0.0)) throw InvalidInput("time must be nonnegative");
    Eigen::SparseMatrix<double> g = sparse_generator(fp_generator_1d(rho, beta, scheme));
    Eigen::MatrixXd f = integrate_dopri5(
        [&](const Eigen::MatrixXd& y) -> Eigen::MatrixXd { return g * y; }, Eigen::MatrixXd(f0.values), t, ode);
    return DensityField(rho.grid, f.col(0));
}

DensityField maxwellian_exact(const DensityField& rho, double beta)
{
    if (beta >= 1.0)
        throw UnsupportedParameter("no absolutely continuous steady state at beta = 1");
    if (beta < 0.0) throw InvalidInput("beta must be nonnegative");
    check_rho(rho);
    const double p = beta / (1.0 - beta);
    Eigen::VectorXd logv = p * rho.values.array().log();
    Eigen::VectorXd v = (logv.array() - logv.maxCoeff()).exp();
    return DensityField(rho.grid, v).normalized();
}

DensityField maxwellian_exact(const std::function<double(double)>& rho, double beta, const Grid1D& grid)
{
    return maxwellian_exact(DensityField::from_function(grid, rho), beta);
}

DensityField maxwellian_kde(const PointCloud& samples, double gamma, double beta, const Grid1D& grid)
{
    if (samples.dim() != 1) throw InvalidInput("kde Maxwellian needs one-dimensional samples");
    if (!(gamma > 0.0)) throw InvalidInput("gamma must be positive");
    Eigen::MatrixXd q = grid.centers();
    return maxwellian_exact(DensityField(grid, kde(samples, gamma, q)), beta);
}

Eigen::VectorXd discrete_log_equilibrium(const Eigen::MatrixXd& g)
{
    const Index m = g.rows();
    Eigen::VectorXd lp(m);
    lp(0) = 0.0;
    for (Index j = 0; j + 1 < m; ++j) {
        double up = g(j + 1, j), down = g(j, j + 1);
        if (!(up > 0.0 && down > 0.0))
            throw NumericalError("generator lacks two-way coupling at cell " + std::to_string(j));
        lp(j + 1) = lp(j) + std::log(up) - std::log(down);
    }
    return lp;
}

Eigen::MatrixXd witten_matrix_1d(const DensityField& rho, double beta, FluxScheme scheme)
{
    if (!(beta >= 0.0 && beta < 1.0)) throw InvalidInput("Witten operator needs beta in [0, 1)");
    Eigen::MatrixXd g = fp_generator_1d(rho, beta, scheme);
    Eigen::VectorXd lp = discrete_log_equilibrium(g);
    const Index m = g.rows();
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m, m);
    for (Index j = 0; j < m; ++j)
        for (Index i = std::max<Index>(0, j - 1); i <= std::min(m - 1, j + 1); ++i)
            s(i, j) = -g(i, j) * std::exp(0.5 * (lp(j) - lp(i)));
    return 0.5 * (s + s.transpose());
}

WittenSpectrum witten_spectrum(const Eigen::MatrixXd& s)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    if (es.info() != Eigen::Success) throw NumericalError("symmetric eigen-solver did not converge");
    return {es.eigenvalues(), es.eigenvectors()};
}

WittenProductReport witten_product_check(const DensityField& rho1, const DensityField& rho2, double beta,
                                         Index max_assembled, FluxScheme scheme)
{
    Eigen::MatrixXd s1 = witten_matrix_1d(rho1, beta, scheme);
    Eigen::MatrixXd s2 = witten_matrix_1d(rho2, beta, scheme);
    WittenProductReport r;
    r.first = witten_spectrum(s1).eigenvalues;
    r.second = witten_spectrum(s2).eigenvalues;
    r.first_gap = r.first(1);
    r.second_gap = r.second(1);
    r.minimizer = r.first_gap < r.second_gap ? "x" : "y";
    const Index m1 = s1.rows(), m2 = s2.rows();
    if (m1 * m2 <= max_assembled) {
        Eigen::MatrixXd k = Eigen::MatrixXd::Zero(m1 * m2, m1 * m2);
        for (Index i = 0; i < m1; ++i)
            for (Index ip = 0; ip < m1; ++ip)
                if (s1(i, ip) != 0.0)
                    for (Index j = 0; j < m2; ++j) k(i * m2 + j, ip * m2 + j) += s1(i, ip);
        for (Index i = 0; i < m1; ++i)
            k.block(i * m2, i * m2, m2, m2) += s2;
        r.product = witten_spectrum(k).eigenvalues;
        std::vector<double> sums;
        sums.reserve(static_cast<std::size_t>(m1 * m2));
        for (Index i = 0; i < m1; ++i)
            for (Index j = 0; j < m2; ++j) sums.push_back(r.first(i) + r.second(j));
        std::sort(sums.begin(), sums.end());
        for (Index i = 0; i < m1 * m2; ++i)
            r.max_sum_error = std::max(r.max_sum_error, std::abs(r.product(i) - sums[static_cast<std::size_t>(i)]));
        r.assembled = true;
    }
    return r;
}

DensityField smooth_atomic_measure(const Eigen::VectorXd& nodes, const Eigen::VectorXd& masses,
                                   double gamma, const Grid1D& grid)
{
    if (nodes.size() != masses.size()) throw InvalidInput("node and mass vectors differ in length");
    if (!(gamma > 0.0)) throw InvalidInput("smoothing bandwidth must be positive");
    const Eigen::VectorXd x = grid.centers();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(grid.cells);
    Eigen::VectorXd kern(grid.cells);
    for (Index i = 0; i < nodes.size(); ++i) {
        if (nodes(i) < grid.a || nodes(i) > grid.b) throw InvalidInput("node lies outside the grid domain");
        for (Index j = 0; j < grid.cells; ++j) {
            double z = (x(j) - nodes(i)) / gamma;
            kern(j) = std::exp(-0.5 * z * z);
        }
        double s = kern.sum() * grid.h();
        if (s > 0.0) out += (masses(i) / s) * kern;
    }
    return DensityField(grid, std::move(out));
}

double l1_distance(const DensityField& a, const DensityField& b)
{
    if (a.grid.cells != b.grid.cells || a.grid.a != b.grid.a || a.grid.b != b.grid.b)
        throw InvalidInput("fields live on different grids");
    return (a.values - b.values).cwiseAbs().sum() * a.grid.h();
}

double fp_steady_state_compare(const Eigen::VectorXd& nodes, const Eigen::VectorXd& masses,
                               const DensityField& field, double gamma)
{
    return l1_distance(smooth_atomic_measure(nodes, masses, gamma, field.grid), field);
}

}  // namespace fpc
