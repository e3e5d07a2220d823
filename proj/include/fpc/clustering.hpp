#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fpc/dynamics.hpp"

namespace fpc {

struct Clustering {
    std::vector<int> labels;
    Eigen::MatrixXd centers;
    double energy = 0.0;
    double energy_one = 0.0;  // total variance about the row mean
    Index k = 0;
    int restarts = 0;
    std::uint64_t seed = 0;

    double normalized_energy() const { return energy_one > 0.0 ? energy / energy_one : 0.0; }
};

struct KMeansOptions {
    int restarts = 10;
    std::uint64_t seed = 0;
    int max_iterations = 500;
};

Clustering kmeans(const Eigen::MatrixXd& rows, Index k, const KMeansOptions& options = {});
Clustering kmeans(const EmbeddingSet& embedding, Index k, const KMeansOptions& options = {});

// Energy of an assignment with centers placed at the cluster means.
double kmeans_energy(const Eigen::MatrixXd& rows, const std::vector<int>& labels, Index k);

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

enum class GeneratorKind { q_beta, q_rw_alpha, q_knf, q_quickshift, q_rw_limit, q_mean_shift };

GeneratorKind parse_generator(const std::string& name);
std::string to_string(GeneratorKind kind);

enum class EmbeddingMetric { l2, diffusion };

struct DynamicConfig {
    GeneratorKind generator = GeneratorKind::q_beta;
    double alpha = 1.0;
    double beta = 0.0;
    std::optional<double> epsilon;         // auto when empty
    std::optional<double> delta;           // default rule when empty
    std::optional<double> domain_measure;  // for the default delta rule
    double knf_radius = 2.0;
    ConstantPreset preset = ConstantPreset::experiment;
    double t = 10.0;
    Index k = 2;
    int restarts = 10;
    std::uint64_t seed = 0;
    EmbeddingMetric metric = EmbeddingMetric::l2;
    EvolveMethod method = EvolveMethod::automatic;
    std::optional<double> graph_cutoff;
};

// Graph, density estimate and generator assembled from a config.
struct DynamicModel {
    WeightedGraph graph;
    double epsilon = 0.0;
    double delta = 0.0;
    Eigen::VectorXd rho_hat;
    RateMatrix rates;
    Eigen::VectorXd metric_degrees;
};

DynamicModel build_dynamic_model(const PointCloud& cloud, const DynamicConfig& config);

// Embedding rows used by k-means, after the optional diffusion scaling.
Eigen::MatrixXd clustering_rows(const DynamicModel& model, const EmbeddingSet& embedding,
                                EmbeddingMetric metric);

struct DynamicResult {
    Clustering clustering;
    double epsilon = 0.0;
    double delta = 0.0;
    std::string generator;
    Params params;
};

DynamicResult cluster_dynamic(const PointCloud& cloud, const DynamicConfig& config);

struct EnergyPoint {
    Index k;
    double energy;
    double normalized;
};

std::vector<EnergyPoint> energy_profile(const Eigen::MatrixXd& rows, Index k_max,
                                        const KMeansOptions& options = {});
std::vector<EnergyPoint> energy_profile(const PointCloud& cloud, const DynamicConfig& config,
                                        Index k_max);

}  // namespace fpc
