#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpc/clustering.hpp"
#include "fpc/continuum.hpp"
#include "fpc/rates.hpp"

namespace fpc {

namespace fs = std::filesystem;

std::string format_double(double v);  // shortest text that round-trips

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);
void write_json(const fs::path& path, const nlohmann::json& j);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const fs::path& path);

// Checks header, row count (when expected_rows >= 0) and that every cell parses as a number.
void validate_csv(const fs::path& path, const std::vector<std::string>& header,
                  long expected_rows = -1);
void validate_json(const fs::path& path, const std::vector<std::string>& required_keys);

void write_point_cloud(const fs::path& path, const PointCloud& cloud);
PointCloud read_point_cloud(const fs::path& path);
std::vector<std::string> point_cloud_header(const PointCloud& cloud);

void write_rate_matrix(const fs::path& csv, const fs::path& header, const RateMatrix& q);
void write_embedding(const fs::path& csv, const fs::path& meta, const EmbeddingSet& e);
void write_trajectory(const fs::path& csv, const PointCloud& cloud, const Eigen::VectorXd& u,
                      const Eigen::VectorXd& degrees);
void write_clustering(const fs::path& csv, const PointCloud& cloud, const Clustering& c);
void write_density_field(const fs::path& csv, const DensityField& f);

nlohmann::json to_json(const Params& params);

}  // namespace fpc
