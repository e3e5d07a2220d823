#include "fpc/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace fpc {

std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidInput("cannot open " + path.string() + " for writing");
    os << text;
    if (!os) throw InvalidInput("failed writing " + path.string());
}

std::string read_text(const fs::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidInput("cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_json(const fs::path& path, const nlohmann::json& j)
{
    write_text(path, j.dump(2) + "\n");
}

namespace {

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

bool parse_number(const std::string& s, double& v)
{
    if (s.empty()) return false;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::string join(const std::vector<std::string>& cells)
{
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
    }
    return out;
}

}  // namespace

CsvTable read_csv(const fs::path& path)
{
    std::istringstream is(read_text(path));
    CsvTable t;
    std::string line;
    if (!std::getline(is, line)) throw InvalidInput(path.string() + " is empty");
    t.header = split(line, ',');
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        t.rows.push_back(split(line, ','));
    }
    return t;
}

void validate_csv(const fs::path& path, const std::vector<std::string>& header, long expected_rows)
{
    CsvTable t = read_csv(path);
    if (t.header != header)
        throw NumericalError(path.string() + ": header '" + join(t.header) + "' expected '" + join(header) + "'");
    if (expected_rows >= 0 && static_cast<long>(t.rows.size()) != expected_rows)
        throw NumericalError(path.string() + ": " + std::to_string(t.rows.size()) + " rows, expected " +
                             std::to_string(expected_rows));
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (t.rows[r].size() != header.size())
            throw NumericalError(path.string() + ": row " + std::to_string(r) + " has wrong width");
        for (const auto& cell : t.rows[r]) {
            double v;
            if (!parse_number(cell, v) || !std::isfinite(v))
                throw NumericalError(path.string() + ": non-numeric cell '" + cell + "' in row " + std::to_string(r));
        }
    }
}

void validate_json(const fs::path& path, const std::vector<std::string>& required_keys)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw NumericalError(path.string() + ": invalid JSON: " + e.what());
    }
    for (const auto& k : required_keys)
        if (!j.contains(k)) throw NumericalError(path.string() + ": missing key '" + k + "'");
}

std::vector<std::string> point_cloud_header(const PointCloud& cloud)
{
    std::vector<std::string> h;
    for (int d = 0; d < cloud.dim(); ++d) h.push_back("x" + std::to_string(d));
    if (cloud.labels) h.push_back("label");
    return h;
}

void write_point_cloud(const fs::path& path, const PointCloud& cloud)
{
    std::string out = join(point_cloud_header(cloud)) + "\n";
    for (Index i = 0; i < cloud.size(); ++i) {
        for (int d = 0; d < cloud.dim(); ++d) {
            if (d) out += ',';
            out += format_double(cloud.points(i, d));
        }
        if (cloud.labels) out += ',' + std::to_string((*cloud.labels)[static_cast<std::size_t>(i)]);
        out += '\n';
    }
    write_text(path, out);
}

PointCloud read_point_cloud(const fs::path& path)
{
    CsvTable t = read_csv(path);
    bool labeled = !t.header.empty() && t.header.back() == "label";
    const Index dim = static_cast<Index>(t.header.size()) - (labeled ? 1 : 0);
    if (dim < 1) throw InvalidInput(path.string() + ": no coordinate columns");
    Eigen::MatrixXd pts(static_cast<Index>(t.rows.size()), dim);
    std::vector<int> labels;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (t.rows[r].size() != t.header.size()) throw InvalidInput(path.string() + ": ragged row " + std::to_string(r));
        for (Index d = 0; d < dim; ++d) {
            double v;
            if (!parse_number(t.rows[r][static_cast<std::size_t>(d)], v))
                throw InvalidInput(path.string() + ": bad number in row " + std::to_string(r));
            pts(static_cast<Index>(r), d) = v;
        }
        if (labeled) labels.push_back(std::stoi(t.rows[r].back()));
    }
    return PointCloud(std::move(pts), labeled ? std::optional<std::vector<int>>(labels) : std::nullopt);
}

nlohmann::json to_json(const Params& params)
{
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : params) j[k] = v;
    return j;
}

void write_rate_matrix(const fs::path& csv, const fs::path& header, const RateMatrix& q)
{
    const Index n = q.size();
    std::string out = "node";
    for (Index j = 0; j < n; ++j) out += ",q" + std::to_string(j);
    out += '\n';
    for (Index i = 0; i < n; ++i) {
        out += std::to_string(i);
        for (Index j = 0; j < n; ++j) out += ',' + format_double(q.entries()(i, j));
        out += '\n';
    }
    write_text(csv, out);
    write_json(header, {{"kind", to_string(q.kind())}, {"n", n}, {"params", to_json(q.params())}});
}

void write_embedding(const fs::path& csv, const fs::path& meta, const EmbeddingSet& e)
{
    std::string out = "node";
    for (Index j = 0; j < e.vectors.cols(); ++j) out += ",c" + std::to_string(j);
    out += '\n';
    for (Index i = 0; i < e.vectors.rows(); ++i) {
        out += std::to_string(i);
        for (Index j = 0; j < e.vectors.cols(); ++j) out += ',' + format_double(e.vectors(i, j));
        out += '\n';
    }
    write_text(csv, out);
    write_json(meta, {{"t", e.time},
                      {"kind", e.kind},
                      {"params", to_json(e.params)},
                      {"flavor", e.flavor == EmbeddingFlavor::markov ? "markov" : "spectral"},
                      {"n", e.vectors.rows()},
                      {"k", e.vectors.cols()}});
}

void write_trajectory(const fs::path& csv, const PointCloud& cloud, const Eigen::VectorXd& u,
                      const Eigen::VectorXd& degrees)
{
    std::string out = "node";
    for (int d = 0; d < cloud.dim(); ++d) out += ",x" + std::to_string(d);
    out += ",u,u_d\n";
    Eigen::VectorXd view = density_view(u, degrees);
    for (Index i = 0; i < cloud.size(); ++i) {
        out += std::to_string(i);
        for (int d = 0; d < cloud.dim(); ++d) out += ',' + format_double(cloud.points(i, d));
        out += ',' + format_double(u(i)) + ',' + format_double(view(i)) + '\n';
    }
    write_text(csv, out);
}

void write_clustering(const fs::path& csv, const PointCloud& cloud, const Clustering& c)
{
    std::string out = "node";
    for (int d = 0; d < cloud.dim(); ++d) out += ",x" + std::to_string(d);
    out += ",label\n";
    for (Index i = 0; i < cloud.size(); ++i) {
        out += std::to_string(i);
        for (int d = 0; d < cloud.dim(); ++d) out += ',' + format_double(cloud.points(i, d));
        out += ',' + std::to_string(c.labels[static_cast<std::size_t>(i)]) + '\n';
    }
    write_text(csv, out);
}

void write_density_field(const fs::path& csv, const DensityField& f)
{
    std::string out = "x,f\n";
    for (Index j = 0; j < f.grid.cells; ++j)
        out += format_double(f.grid.center(j)) + ',' + format_double(f.values(j)) + '\n';
    write_text(csv, out);
}

}  // namespace fpc
