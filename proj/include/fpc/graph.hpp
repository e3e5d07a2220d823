#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fpc/error.hpp"

namespace fpc {

using Index = Eigen::Index;

struct PointCloud {
    Eigen::MatrixXd points;  // n x dim
    std::optional<std::vector<int>> labels;
    std::optional<std::uint64_t> seed;

    PointCloud() = default;
    explicit PointCloud(Eigen::MatrixXd pts,
                        std::optional<std::vector<int>> lab = std::nullopt,
                        std::optional<std::uint64_t> s = std::nullopt);

    Index size() const { return points.rows(); }
    int dim() const { return static_cast<int>(points.cols()); }
    void validate() const;

    static PointCloud from_1d(const std::vector<double>& xs);
};

class WeightedGraph {
public:
    WeightedGraph(Eigen::MatrixXd weights, double epsilon, int dim = 1);

    Index size() const { return weights_.rows(); }
    const Eigen::MatrixXd& weights() const { return weights_; }
    const Eigen::VectorXd& degrees() const { return degrees_; }
    double epsilon() const { return epsilon_; }
    int dim() const { return dim_; }

private:
    Eigen::MatrixXd weights_;
    Eigen::VectorXd degrees_;
    double epsilon_;
    int dim_;
};

struct GraphOptions {
    std::optional<double> cutoff;  // in multiples of epsilon
};

double gaussian_kernel(double distance, double bandwidth, int dim);

double auto_bandwidth(const PointCloud& cloud);

WeightedGraph build_proximity_graph(const PointCloud& cloud, double epsilon,
                                    const GraphOptions& options = {});

Eigen::VectorXd kde(const PointCloud& cloud, double delta, const Eigen::MatrixXd& queries);
Eigen::VectorXd kde_at_samples(const PointCloud& cloud, double delta);

double kde_default_bandwidth(const PointCloud& cloud, double domain_measure);

WeightedGraph reweigh_alpha(const WeightedGraph& graph, double alpha);

std::vector<std::vector<long>> connected_components(const Eigen::MatrixXd& weights);

}  // namespace fpc
