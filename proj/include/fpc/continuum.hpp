#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

#include "fpc/graph.hpp"
#include "fpc/ode.hpp"

namespace fpc {

struct Grid1D {
    double a = -1.5;
    double b = 1.5;
    Index cells = 200;

    Grid1D() = default;
    Grid1D(double lo, double hi, Index m);

    double h() const { return (b - a) / static_cast<double>(cells); }
    double center(Index j) const { return a + (static_cast<double>(j) + 0.5) * h(); }
    Eigen::VectorXd centers() const;
    Index nearest_cell(double x) const;
};

struct DensityField {
    Grid1D grid;
    Eigen::VectorXd values;

    DensityField() = default;
    DensityField(Grid1D g, Eigen::VectorXd v);

    static DensityField from_function(const Grid1D& grid, const std::function<double(double)>& f);
    static DensityField dirac(const Grid1D& grid, double x);

    double mass() const { return values.sum() * grid.h(); }
    DensityField normalized() const;
};

enum class FluxScheme { exponential_fitting, upwind };

FluxScheme parse_flux(const std::string& name);

// Column convention: f' = G f with zero column sums.
Eigen::MatrixXd fp_generator_1d(const DensityField& rho, double beta,
                                FluxScheme scheme = FluxScheme::exponential_fitting);

DensityField fp_solve_1d(const DensityField& rho, double beta, const DensityField& f0, double t,
                         FluxScheme scheme = FluxScheme::exponential_fitting,
                         const OdeOptions& ode = {});

DensityField maxwellian_exact(const DensityField& rho, double beta);
DensityField maxwellian_exact(const std::function<double(double)>& rho, double beta,
                              const Grid1D& grid);
DensityField maxwellian_kde(const PointCloud& samples, double gamma, double beta,
                            const Grid1D& grid);

// Grid null vector of the generator via detailed balance, as log weights.
Eigen::VectorXd discrete_log_equilibrium(const Eigen::MatrixXd& generator);

Eigen::MatrixXd witten_matrix_1d(const DensityField& rho, double beta,
                                 FluxScheme scheme = FluxScheme::exponential_fitting);

struct WittenSpectrum {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;
};

WittenSpectrum witten_spectrum(const Eigen::MatrixXd& s);

struct WittenProductReport {
    Eigen::VectorXd first;   // spectrum of the x operator
    Eigen::VectorXd second;  // spectrum of the y operator
    Eigen::VectorXd product; // spectrum of the Kronecker sum (when assembled)
    double max_sum_error = 0.0;
    bool assembled = false;
    double first_gap = 0.0;
    double second_gap = 0.0;
    // "x" when the x operator has the smaller second eigenvalue, i.e. the
    // preferred cut varies along x; "y" otherwise.
    std::string minimizer;
};

// The 2-D operator is assembled and diagonalized when the product grid has at
// most max_assembled cells; otherwise only the 1-D spectra are reported.
WittenProductReport witten_product_check(const DensityField& rho1, const DensityField& rho2,
                                         double beta, Index max_assembled = 2500,
                                         FluxScheme scheme = FluxScheme::exponential_fitting);

// Gaussian smoothing of sum_i masses_i delta_{nodes_i}; each kernel is
// renormalized to unit mass on the grid.
DensityField smooth_atomic_measure(const Eigen::VectorXd& nodes, const Eigen::VectorXd& masses,
                                   double gamma, const Grid1D& grid);

double l1_distance(const DensityField& a, const DensityField& b);

double fp_steady_state_compare(const Eigen::VectorXd& nodes, const Eigen::VectorXd& masses,
                               const DensityField& field, double gamma);

}  // namespace fpc
