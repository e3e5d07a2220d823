#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fpc/clustering.hpp"
#include "fpc/continuum.hpp"
#include "fpc/datasets.hpp"

namespace fpc {

inline constexpr const char* kVersion = "0.1.0";

struct EmitFlags {
    bool trajectories = true;
    bool embeddings = false;
    bool clusters = true;
    bool energies = true;
    bool rates = false;

    bool operator==(const EmitFlags&) const = default;
};

struct ExperimentConfig {
    std::string density = "two_bump";
    DensityParams density_params;
    std::string points;  // optional CSV input instead of sampling
    Index n = 204;
    std::uint64_t seed = 0;
    std::optional<double> epsilon;
    std::optional<double> delta;
    std::optional<double> cutoff;
    GeneratorKind generator = GeneratorKind::q_beta;
    double alpha = 1.0;
    double beta = 0.9;
    double knf_radius = 2.0;
    ConstantPreset preset = ConstantPreset::experiment;
    EmbeddingMetric metric = EmbeddingMetric::l2;
    EvolveMethod method = EvolveMethod::automatic;
    std::vector<double> times{0.1, 1.0, 10.0};
    std::vector<Index> ks{2};
    Index k_max = 5;
    int restarts = 10;
    std::vector<double> start;  // trajectory start coordinate; domain center when empty
    std::string out = "out";
    EmitFlags emit;
    int workers = 1;
    std::vector<std::pair<std::string, std::vector<double>>> over;
    std::vector<double> pde_betas{0.0, 0.25, 0.5, 0.75};
    std::vector<double> pde_alphas{0.83, 0.5, -0.5};
    double pde_x0 = -0.1;
    Index pde_cells = 200;
    FluxScheme pde_flux = FluxScheme::exponential_fitting;
    std::optional<double> pde_gamma;
    Index witten_cells = 200;
    Index witten_product_cells = 40;

    bool operator==(const ExperimentConfig&) const = default;
};

// Flat "key = value" text; '#' starts a comment.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
std::string serialize_config(const ExperimentConfig& config);
void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);
// Variables named FPC_<KEY> with dots replaced by underscores.
void apply_environment(ExperimentConfig& config, char** envp);
void validate_config(const ExperimentConfig& config);
std::vector<std::string> config_keys();

DynamicConfig dynamic_config(const ExperimentConfig& config, const SyntheticDensity& rho);

PointCloud experiment_cloud(const ExperimentConfig& config, const SyntheticDensity& rho);

struct RunSummaryRow {
    double t;
    Index k;
    double energy;
    double normalized;
    std::optional<double> ari;
};

struct RunResult {
    std::vector<RunSummaryRow> rows;
    std::vector<std::string> files;
    nlohmann::json manifest;
};

enum class Stage { sample, graph, evolve, embed, cluster, run };

RunResult run_experiment(const ExperimentConfig& config, Stage stage = Stage::run);

// One cell per point of the Cartesian product of config.over.
RunResult sweep(const ExperimentConfig& config);

nlohmann::json pde_compare(const ExperimentConfig& config);

nlohmann::json witten_report(const ExperimentConfig& config);

}  // namespace fpc
