#pragma once

#include <map>
#include <string>

#include "fpc/graph.hpp"

namespace fpc {

enum class RateKind {
    negated_laplacian,
    rw_alpha,
    potential,
    mean_shift,
    beta_interpolation,
    knf,
    quickshift,
    rw_limit,
};

std::string to_string(RateKind kind);

using Params = std::map<std::string, double>;

class RateMatrix {
public:
    // Off-diagonal entries are taken as given; the diagonal closes each row to zero.
    RateMatrix(Eigen::MatrixXd entries, RateKind kind, Params params = {});

    Index size() const { return entries_.rows(); }
    const Eigen::MatrixXd& entries() const { return entries_; }
    RateKind kind() const { return kind_; }
    const Params& params() const { return params_; }
    double param(const std::string& name) const;
    double max_row_sum() const;
    RateMatrix with_params(const Params& extra) const;

private:
    Eigen::MatrixXd entries_;
    RateKind kind_;
    Params params_;
};

enum class LaplacianKind { unnormalized, normalized, random_walk, rw_alpha };

struct LaplacianMatrix {
    Eigen::MatrixXd entries;
    LaplacianKind kind;
    Eigen::VectorXd degrees;
};

LaplacianMatrix unnormalized_laplacian(const WeightedGraph& graph);
LaplacianMatrix normalized_laplacian(const WeightedGraph& graph);
LaplacianMatrix random_walk_laplacian(const WeightedGraph& graph, double alpha = 0.0);

// continuum: 1/(sigma eps^2) with the Gaussian profile moments
// experiment: 1/((3 - 2 alpha) eps^2) and 1/(eps^2 n)
enum class ConstantPreset { continuum, experiment, unit };

ConstantPreset parse_preset(const std::string& name);
std::string to_string(ConstantPreset preset);

double diffusion_constant(double alpha, double epsilon, int dim, ConstantPreset preset);
double mean_shift_constant(Index n, double epsilon, int dim, ConstantPreset preset);

double beta_from_alpha(double alpha);
double alpha_from_beta(double beta);

RateMatrix q_negated_laplacian(const WeightedGraph& graph);
RateMatrix q_rw_alpha(const WeightedGraph& graph, double alpha, double c_alpha);
RateMatrix q_rw_alpha(const WeightedGraph& graph, double alpha,
                      ConstantPreset preset = ConstantPreset::experiment);
RateMatrix q_potential(const WeightedGraph& graph, const Eigen::VectorXd& potential, double c);
RateMatrix q_mean_shift(const WeightedGraph& graph, const Eigen::VectorXd& rho_hat, double c_ms);
RateMatrix q_mean_shift(const WeightedGraph& graph, const Eigen::VectorXd& rho_hat,
                        ConstantPreset preset = ConstantPreset::experiment);
RateMatrix q_beta(const WeightedGraph& graph, const Eigen::VectorXd& rho_hat, double beta,
                  ConstantPreset preset = ConstantPreset::experiment);

// Rows at a local maximum of b_hat are absorbing (all zero).
// Without explicit distances, D(x,y) is 1 on edges and infinite elsewhere.
RateMatrix q_knf(const WeightedGraph& graph, const Eigen::VectorXd& b_hat, double r,
                 const Eigen::MatrixXd* distances = nullptr);
RateMatrix q_quickshift(const WeightedGraph& graph, const Eigen::VectorXd& b_hat,
                        const Eigen::MatrixXd& distances);
RateMatrix q_rw_limit(const WeightedGraph& graph);

}  // namespace fpc
