#include "fpc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "fpc/io.hpp"

namespace fpc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string trim(const std::string& s)
{
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& raw)
{
    std::string s = trim(raw);
    double v;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
        throw InvalidInput("config key '" + key + "' expects a number, got '" + raw + "'");
    return v;
}

long long parse_integer(const std::string& key, const std::string& raw)
{
    std::string s = trim(raw);
    long long v;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw InvalidInput("config key '" + key + "' expects an integer, got '" + raw + "'");
    return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& raw)
{
    std::vector<double> out;
    std::string s = trim(raw);
    if (s.empty()) return out;
    std::istringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
    return out;
}

std::string join_list(const std::vector<double>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
    return out;
}

std::string metric_name(EmbeddingMetric m) { return m == EmbeddingMetric::l2 ? "l2" : "diffusion"; }

std::string method_name(EvolveMethod m)
{
    switch (m) {
    case EvolveMethod::automatic: return "auto";
    case EvolveMethod::matrix_exponential: return "matrix-exponential";
    case EvolveMethod::integrate: return "integrate";
    }
    return "auto";
}

std::string flux_name(FluxScheme f) { return f == FluxScheme::upwind ? "upwind" : "exponential-fitting"; }

const std::vector<std::string> kSweepParams{"beta", "alpha", "epsilon", "delta", "t", "k", "seed"};

std::string emit_text(const EmitFlags& e)
{
    std::vector<std::string> names;
    if (e.trajectories) names.push_back("trajectories");
    if (e.embeddings) names.push_back("embeddings");
    if (e.clusters) names.push_back("clusters");
    if (e.energies) names.push_back("energies");
    if (e.rates) names.push_back("rates");
    if (names.empty()) return "none";
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) out += (i ? "," : "") + names[i];
    return out;
}

EmitFlags parse_emit(const std::string& raw)
{
    EmitFlags e{false, false, false, false, false};
    std::string s = trim(raw);
    if (s == "none" || s.empty()) return e;
    std::istringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item == "trajectories") e.trajectories = true;
        else if (item == "embeddings") e.embeddings = true;
        else if (item == "clusters") e.clusters = true;
        else if (item == "energies") e.energies = true;
        else if (item == "rates") e.rates = true;
        else if (item == "all") e = EmitFlags{true, true, true, true, true};
        else throw InvalidInput("unknown emit flag '" + item + "'");
    }
    return e;
}

std::uint64_t mix_seed(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

std::vector<std::string> config_keys()
{
    return {"density", "points",  "n",          "seed",        "epsilon",   "delta",        "cutoff",
            "generator", "alpha", "beta",       "knf.radius",  "preset",    "metric",       "method",
            "t",       "k",       "k_max",      "restarts",    "start",     "out",          "emit",
            "workers", "pde.betas", "pde.alphas", "pde.x0",    "pde.cells", "pde.flux",     "pde.gamma",
            "witten.cells", "witten.product_cells"};
}

void set_config_value(ExperimentConfig& c, const std::string& raw_key, const std::string& raw_value)
{
    const std::string key = trim(raw_key);
    const std::string value = trim(raw_value);
    if (key.rfind("density.", 0) == 0) {
        c.density_params[key.substr(8)] = parse_list(key, value);
        return;
    }
    if (key.rfind("over.", 0) == 0) {
        std::string p = key.substr(5);
        if (std::find(kSweepParams.begin(), kSweepParams.end(), p) == kSweepParams.end())
            throw InvalidInput("cannot sweep over '" + p + "' (beta, alpha, epsilon, delta, t, k, seed)");
        auto values = parse_list(key, value);
        auto it = std::find_if(c.over.begin(), c.over.end(), [&](const auto& e) { return e.first == p; });
        if (it != c.over.end()) it->second = values;
        else c.over.emplace_back(p, values);
        return;
    }
    if (key == "density") c.density = value;
    else if (key == "points") c.points = value;
    else if (key == "n") c.n = parse_integer(key, value);
    else if (key == "seed") {
        long long s = parse_integer(key, value);
        if (s < 0) throw InvalidInput("seed must be nonnegative");
        c.seed = static_cast<std::uint64_t>(s);
    } else if (key == "epsilon") c.epsilon = value == "auto" ? std::nullopt : std::optional<double>(parse_double(key, value));
    else if (key == "delta") c.delta = value == "default" ? std::nullopt : std::optional<double>(parse_double(key, value));
    else if (key == "cutoff") c.cutoff = value == "none" ? std::nullopt : std::optional<double>(parse_double(key, value));
    else if (key == "generator") c.generator = parse_generator(value);
    else if (key == "alpha") c.alpha = parse_double(key, value);
    else if (key == "beta") c.beta = parse_double(key, value);
    else if (key == "knf.radius") c.knf_radius = parse_double(key, value);
    else if (key == "preset") c.preset = parse_preset(value);
    else if (key == "metric") {
        if (value == "l2") c.metric = EmbeddingMetric::l2;
        else if (value == "diffusion") c.metric = EmbeddingMetric::diffusion;
        else throw InvalidInput("metric must be l2 or diffusion");
    } else if (key == "method") c.method = parse_method(value);
    else if (key == "t") c.times = parse_list(key, value);
    else if (key == "k") {
        c.ks.clear();
        for (double v : parse_list(key, value)) {
            if (v != std::floor(v)) throw InvalidInput("k values must be integers");
            c.ks.push_back(static_cast<Index>(v));
        }
    } else if (key == "k_max") c.k_max = parse_integer(key, value);
    else if (key == "restarts") c.restarts = static_cast<int>(parse_integer(key, value));
    else if (key == "start") c.start = value == "center" ? std::vector<double>{} : parse_list(key, value);
    else if (key == "out") c.out = value;
    else if (key == "emit") c.emit = parse_emit(value);
    else if (key == "workers") c.workers = static_cast<int>(parse_integer(key, value));
    else if (key == "pde.betas") c.pde_betas = parse_list(key, value);
    else if (key == "pde.alphas") c.pde_alphas = parse_list(key, value);
    else if (key == "pde.x0") c.pde_x0 = parse_double(key, value);
    else if (key == "pde.cells") c.pde_cells = parse_integer(key, value);
    else if (key == "pde.flux") c.pde_flux = parse_flux(value);
    else if (key == "pde.gamma") c.pde_gamma = value == "epsilon" ? std::nullopt : std::optional<double>(parse_double(key, value));
    else if (key == "witten.cells") c.witten_cells = parse_integer(key, value);
    else if (key == "witten.product_cells") c.witten_product_cells = parse_integer(key, value);
    else throw InvalidInput("unknown config key '" + key + "'");
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base)
{
    std::istringstream is(text);
    std::string line;
    int number = 0;
    while (std::getline(is, line)) {
        ++number;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        if (trim(line).empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidInput("config line " + std::to_string(number) + " lacks '='");
        set_config_value(base, line.substr(0, eq), line.substr(eq + 1));
    }
    return base;
}

std::string serialize_config(const ExperimentConfig& c)
{
    std::ostringstream os;
    auto opt = [](const std::optional<double>& v, const char* none) { return v ? format_double(*v) : std::string(none); };
    os << "density = " << c.density << "\n";
    for (const auto& [k, v] : c.density_params) os << "density." << k << " = " << join_list(v) << "\n";
    os << "points = " << c.points << "\n";
    os << "n = " << c.n << "\n";
    os << "seed = " << c.seed << "\n";
    os << "epsilon = " << opt(c.epsilon, "auto") << "\n";
    os << "delta = " << opt(c.delta, "default") << "\n";
    os << "cutoff = " << opt(c.cutoff, "none") << "\n";
    os << "generator = " << to_string(c.generator) << "\n";
    os << "alpha = " << format_double(c.alpha) << "\n";
    os << "beta = " << format_double(c.beta) << "\n";
    os << "knf.radius = " << format_double(c.knf_radius) << "\n";
    os << "preset = " << to_string(c.preset) << "\n";
    os << "metric = " << metric_name(c.metric) << "\n";
    os << "method = " << method_name(c.method) << "\n";
    os << "t = " << join_list(c.times) << "\n";
    std::vector<double> ks(c.ks.begin(), c.ks.end());
    os << "k = " << join_list(ks) << "\n";
    os << "k_max = " << c.k_max << "\n";
    os << "restarts = " << c.restarts << "\n";
    os << "start = " << (c.start.empty() ? std::string("center") : join_list(c.start)) << "\n";
    os << "out = " << c.out << "\n";
    os << "emit = " << emit_text(c.emit) << "\n";
    os << "workers = " << c.workers << "\n";
    for (const auto& [p, v] : c.over) os << "over." << p << " = " << join_list(v) << "\n";
    os << "pde.betas = " << join_list(c.pde_betas) << "\n";
    os << "pde.alphas = " << join_list(c.pde_alphas) << "\n";
    os << "pde.x0 = " << format_double(c.pde_x0) << "\n";
    os << "pde.cells = " << c.pde_cells << "\n";
    os << "pde.flux = " << flux_name(c.pde_flux) << "\n";
    os << "pde.gamma = " << opt(c.pde_gamma, "epsilon") << "\n";
    os << "witten.cells = " << c.witten_cells << "\n";
    os << "witten.product_cells = " << c.witten_product_cells << "\n";
    return os.str();
}

void apply_environment(ExperimentConfig& c, char** envp)
{
    if (!envp) return;
    std::map<std::string, std::string> known;
    for (const auto& k : config_keys()) {
        std::string e = "FPC_";
        for (char ch : k) e += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        known[e] = k;
    }
    auto lower = [](std::string s) {
        for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        return s;
    };
    std::vector<std::pair<std::string, std::string>> entries;
    for (char** p = envp; *p; ++p) {
        std::string kv(*p);
        auto eq = kv.find('=');
        if (eq == std::string::npos || kv.rfind("FPC_", 0) != 0) continue;
        entries.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    }
    std::sort(entries.begin(), entries.end());
    for (const auto& [name, value] : entries) {
        if (auto it = known.find(name); it != known.end()) set_config_value(c, it->second, value);
        else if (name.rfind("FPC_DENSITY_", 0) == 0) set_config_value(c, "density." + lower(name.substr(12)), value);
        else if (name.rfind("FPC_OVER_", 0) == 0) set_config_value(c, "over." + lower(name.substr(9)), value);
    }
}

void validate_config(const ExperimentConfig& c)
{
    SyntheticDensity rho = density(c.density, c.density_params);
    if (c.points.empty() && c.n < 2) throw InvalidInput("n must be at least 2");
    if (c.epsilon && !(*c.epsilon > 0.0)) throw InvalidInput("epsilon must be positive");
    if (c.delta && !(*c.delta > 0.0)) throw InvalidInput("delta must be positive");
    if (c.cutoff && !(*c.cutoff > 0.0)) throw InvalidInput("cutoff must be positive");
    if (c.generator == GeneratorKind::q_beta && !(c.beta >= 0.0 && c.beta <= 1.0))
        throw InvalidInput("q_beta: beta must lie in [0, 1], got " + format_double(c.beta));
    if (c.generator == GeneratorKind::q_rw_alpha && c.alpha > 1.0)
        throw InvalidInput("q_rw_alpha: alpha must be at most 1, got " + format_double(c.alpha));
    if (c.generator == GeneratorKind::q_knf && !(c.knf_radius > 1.0))
        throw InvalidInput("q_knf: radius must exceed 1");
    if (c.times.empty()) throw InvalidInput("at least one time is required");
    for (double t : c.times)
        if (!(t >= 0.0)) throw InvalidInput("times must be nonnegative");
    if (c.ks.empty()) throw InvalidInput("at least one k is required");
    for (Index k : c.ks)
        if (k < 1 || (c.points.empty() && k > c.n)) throw InvalidInput("k must lie in [1, n]");
    if (c.k_max < 1) throw InvalidInput("k_max must be positive");
    if (c.restarts < 1) throw InvalidInput("restarts must be positive");
    if (c.workers < 1) throw InvalidInput("workers must be positive");
    if (!c.start.empty() && static_cast<int>(c.start.size()) != rho.dim())
        throw InvalidInput("start coordinate dimension does not match the density");
    for (double b : c.pde_betas)
        if (!(b >= 0.0 && b < 1.0)) throw InvalidInput("pde.betas must lie in [0, 1)");
    for (double a : c.pde_alphas)
        if (a > 1.0) throw InvalidInput("pde.alphas must be at most 1");
    if (c.pde_cells < 3 || c.witten_cells < 3 || c.witten_product_cells < 3)
        throw InvalidInput("grids need at least 3 cells");
    if (c.pde_gamma && !(*c.pde_gamma > 0.0)) throw InvalidInput("pde.gamma must be positive");
}

DynamicConfig dynamic_config(const ExperimentConfig& c, const SyntheticDensity& rho)
{
    DynamicConfig d;
    d.generator = c.generator;
    d.alpha = c.alpha;
    d.beta = c.beta;
    d.epsilon = c.epsilon;
    d.delta = c.delta;
    if (rho.dim() == 1) d.domain_measure = rho.domain_measure();
    d.knf_radius = c.knf_radius;
    d.preset = c.preset;
    d.t = c.times.front();
    d.k = c.ks.front();
    d.restarts = c.restarts;
    d.seed = c.seed;
    d.metric = c.metric;
    d.method = c.method;
    d.graph_cutoff = c.cutoff;
    return d;
}

PointCloud experiment_cloud(const ExperimentConfig& c, const SyntheticDensity& rho)
{
    if (c.points.empty()) return sample(rho, c.n, c.seed);
    PointCloud cloud = read_point_cloud(c.points);
    if (cloud.dim() != rho.dim()) throw InvalidInput("point file dimension does not match the density");
    return cloud;
}

namespace {

void require_density_bandwidth(const ExperimentConfig& c, const SyntheticDensity& rho)
{
    if (rho.dim() > 1 && !c.delta &&
        (c.generator == GeneratorKind::q_beta || c.generator == GeneratorKind::q_mean_shift ||
         c.generator == GeneratorKind::q_knf || c.generator == GeneratorKind::q_quickshift))
        throw InvalidInput("delta must be set explicitly for two-dimensional densities");
}

struct Outputs {
    fs::path root;
    std::vector<std::tuple<fs::path, std::vector<std::string>, long>> csvs;
    std::vector<std::pair<fs::path, std::vector<std::string>>> jsons;

    void csv(const fs::path& rel, std::vector<std::string> header, long rows)
    {
        csvs.emplace_back(root / rel, std::move(header), rows);
    }
    void json(const fs::path& rel, std::vector<std::string> keys) { jsons.emplace_back(root / rel, std::move(keys)); }
    void validate() const
    {
        for (const auto& [p, h, r] : csvs) validate_csv(p, h, r);
        for (const auto& [p, k] : jsons) validate_json(p, k);
    }
    std::vector<std::string> files() const
    {
        std::vector<std::string> out;
        for (const auto& [p, h, r] : csvs) out.push_back(fs::relative(p, root).generic_string());
        for (const auto& [p, k] : jsons) out.push_back(fs::relative(p, root).generic_string());
        std::sort(out.begin(), out.end());
        return out;
    }
};

template <class F>
auto in_stage(const std::string& stage, F&& f) -> decltype(f())
{
    try {
        return f();
    } catch (const NumericalError& e) {
        throw NumericalError("stage " + stage + ": " + e.what());
    } catch (const InvalidInput& e) {
        throw InvalidInput("stage " + stage + ": " + e.what());
    }
}

std::vector<std::string> coord_header(int dim)
{
    std::vector<std::string> h;
    for (int d = 0; d < dim; ++d) h.push_back("x" + std::to_string(d));
    return h;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b)
{
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

Index nearest_node(const PointCloud& cloud, const std::vector<double>& target)
{
    Index best = 0;
    double top = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < cloud.size(); ++i) {
        double s = 0.0;
        for (int d = 0; d < cloud.dim(); ++d) {
            double z = cloud.points(i, d) - target[static_cast<std::size_t>(d)];
            s += z * z;
        }
        if (s < top) {
            top = s;
            best = i;
        }
    }
    return best;
}

std::vector<double> domain_center(const SyntheticDensity& rho)
{
    std::vector<double> c;
    for (auto [lo, hi] : rho.domain()) c.push_back(0.5 * (lo + hi));
    return c;
}

nlohmann::json config_json(const ExperimentConfig& c)
{
    nlohmann::json j = nlohmann::json::object();
    std::istringstream is(serialize_config(c));
    std::string line;
    while (std::getline(is, line)) {
        auto eq = line.find('=');
        if (eq != std::string::npos) j[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return j;
}

std::vector<int> truth_labels(const PointCloud& cloud, const SyntheticDensity& rho, const ExperimentConfig& c)
{
    if (cloud.labels) return *cloud.labels;
    if (!c.points.empty()) {
        try {
            return ground_truth(rho, cloud);
        } catch (const InvalidInput&) {
            return {};
        }
    }
    return {};
}

struct ClusterRow {
    double t;
    Index k;
    Clustering clustering;
    std::optional<double> ari;
};

}  // namespace

RunResult run_experiment(const ExperimentConfig& config, Stage stage)
{
    validate_config(config);
    const auto t_start = Clock::now();
    SyntheticDensity rho = density(config.density, config.density_params);
    require_density_bandwidth(config, rho);
    Outputs out{config.out, {}, {}};
    fs::create_directories(out.root);
    nlohmann::json times = nlohmann::json::object();
    RunResult result;

    auto t0 = Clock::now();
    PointCloud cloud = in_stage("sample", [&] { return experiment_cloud(config, rho); });
    std::vector<int> truth = truth_labels(cloud, rho, config);
    DynamicConfig dyn = dynamic_config(config, rho);
    const double eps = in_stage("sample", [&] { return config.epsilon ? *config.epsilon : auto_bandwidth(cloud); });
    std::optional<double> delta = config.delta;
    if (!delta && rho.dim() == 1) delta = kde_default_bandwidth(cloud, rho.domain_measure());
    dyn.epsilon = eps;
    write_point_cloud(out.root / "points.csv", cloud);
    out.csv("points.csv", point_cloud_header(cloud), cloud.size());
    nlohmann::json pm{{"n", cloud.size()},
                      {"dim", cloud.dim()},
                      {"seed", config.points.empty() ? nlohmann::json(config.seed) : nlohmann::json(nullptr)},
                      {"density", rho.to_json()},
                      {"epsilon", eps},
                      {"delta", delta ? nlohmann::json(*delta) : nlohmann::json(nullptr)}};
    write_json(out.root / "points.json", pm);
    out.json("points.json", {"n", "dim", "seed", "density", "epsilon", "delta"});
    times["sample"] = seconds_since(t0);

    nlohmann::json manifest{{"version", kVersion}, {"config", config_json(config)}, {"config_text", serialize_config(config)}};
    auto finish = [&]() {
        times["total"] = seconds_since(t_start);
        manifest["wall_times"] = times;
        out.json("manifest.json", {"version", "config", "wall_times", "files"});
        manifest["files"] = out.files();
        write_json(out.root / "manifest.json", manifest);
        out.validate();
        result.files = out.files();
        result.manifest = manifest;
        return result;
    };
    if (stage == Stage::sample) return finish();

    t0 = Clock::now();
    DynamicModel model = in_stage("graph", [&] { return build_dynamic_model(cloud, dyn); });
    {
        const Eigen::VectorXd& d = model.graph.degrees();
        write_json(out.root / "graph.json",
                   {{"n", cloud.size()},
                    {"epsilon", model.epsilon},
                    {"delta", model.delta > 0.0 ? nlohmann::json(model.delta) : nlohmann::json(nullptr)},
                    {"generator", to_string(config.generator)},
                    {"kind", to_string(model.rates.kind())},
                    {"params", to_json(model.rates.params())},
                    {"degree_min", d.minCoeff()},
                    {"degree_max", d.maxCoeff()},
                    {"degree_mean", d.mean()},
                    {"max_row_sum", model.rates.max_row_sum()}});
        out.json("graph.json", {"n", "epsilon", "generator", "params"});
        std::string text = model.rho_hat.size() ? "node,degree,metric_degree,rho_hat\n" : "node,degree,metric_degree\n";
        for (Index i = 0; i < cloud.size(); ++i) {
            text += std::to_string(i) + ',' + format_double(d(i)) + ',' + format_double(model.metric_degrees(i));
            if (model.rho_hat.size()) text += ',' + format_double(model.rho_hat(i));
            text += '\n';
        }
        write_text(out.root / "degrees.csv", text);
        out.csv("degrees.csv",
                model.rho_hat.size() ? std::vector<std::string>{"node", "degree", "metric_degree", "rho_hat"}
                                     : std::vector<std::string>{"node", "degree", "metric_degree"},
                cloud.size());
        if (config.emit.rates || stage == Stage::graph) {
            write_rate_matrix(out.root / "rates.csv", out.root / "rates.json", model.rates);
            std::vector<std::string> h{"node"};
            for (Index j = 0; j < cloud.size(); ++j) h.push_back("q" + std::to_string(j));
            out.csv("rates.csv", h, cloud.size());
            out.json("rates.json", {"kind", "n", "params"});
        }
    }
    times["graph"] = seconds_since(t0);
    if (stage == Stage::graph) return finish();

    if (stage == Stage::evolve || (stage == Stage::run && config.emit.trajectories)) {
        t0 = Clock::now();
        std::vector<double> target = config.start.empty() ? domain_center(rho) : config.start;
        Index node = nearest_node(cloud, target);
        std::vector<double> actual;
        for (int d = 0; d < cloud.dim(); ++d) actual.push_back(cloud.points(node, d));
        manifest["start"] = {{"requested", target}, {"node", node}, {"coordinates", actual}};
        Eigen::VectorXd u0 = Eigen::VectorXd::Zero(cloud.size());
        u0(node) = 1.0;
        for (double t : config.times) {
            Eigen::VectorXd u = in_stage("evolve", [&] { return evolve(model.rates, u0, t, config.method); });
            fs::path rel = fs::path("trajectories") / ("t_" + format_double(t) + ".csv");
            write_trajectory(out.root / rel, cloud, u, model.graph.degrees());
            out.csv(rel, concat(concat({"node"}, coord_header(cloud.dim())), {"u", "u_d"}), cloud.size());
        }
        times["evolve"] = seconds_since(t0);
        if (stage == Stage::evolve) return finish();
    }

    double embed_time = 0.0, cluster_time = 0.0;
    std::vector<ClusterRow> rows;
    for (double t : config.times) {
        t0 = Clock::now();
        EmbeddingSet e = in_stage("embed", [&] { return embed_all(model.rates, t, config.method); });
        e.params["epsilon"] = model.epsilon;
        if (stage == Stage::embed || config.emit.embeddings) {
            fs::path rel = fs::path("embeddings") / ("t_" + format_double(t) + ".csv");
            fs::path meta = fs::path("embeddings") / ("t_" + format_double(t) + ".json");
            write_embedding(out.root / rel, out.root / meta, e);
            std::vector<std::string> h{"node"};
            for (Index j = 0; j < e.vectors.cols(); ++j) h.push_back("c" + std::to_string(j));
            out.csv(rel, h, e.size());
            out.json(meta, {"t", "kind", "params", "flavor"});
        }
        embed_time += seconds_since(t0);
        if (stage == Stage::embed) continue;

        t0 = Clock::now();
        Eigen::MatrixXd features = clustering_rows(model, e, config.metric);
        KMeansOptions kopt;
        kopt.restarts = config.restarts;
        kopt.seed = config.seed;
        for (Index k : config.ks) {
            Clustering c = in_stage("cluster", [&] { return kmeans(features, k, kopt); });
            std::optional<double> ari;
            if (!truth.empty()) ari = adjusted_rand_index(c.labels, truth);
            if (config.emit.clusters || stage == Stage::cluster) {
                fs::path rel = fs::path("clusters") / ("t_" + format_double(t) + "_k_" + std::to_string(k) + ".csv");
                write_clustering(out.root / rel, cloud, c);
                out.csv(rel, concat(concat({"node"}, coord_header(cloud.dim())), {"label"}), cloud.size());
            }
            rows.push_back({t, k, std::move(c), ari});
        }
        if (config.emit.energies || stage == Stage::cluster) {
            Index kmax = std::min<Index>(cloud.size(), std::max<Index>(config.k_max, *std::max_element(config.ks.begin(), config.ks.end())));
            auto prof = in_stage("cluster", [&] { return energy_profile(features, kmax, kopt); });
            nlohmann::json ej{{"t", t}, {"generator", to_string(config.generator)}, {"seed", config.seed},
                              {"restarts", config.restarts}, {"energies", nlohmann::json::array()}};
            for (const auto& p : prof) ej["energies"].push_back({{"k", p.k}, {"energy", p.energy}, {"normalized", p.normalized}});
            fs::path rel = fs::path("energies") / ("t_" + format_double(t) + ".json");
            write_json(out.root / rel, ej);
            out.json(rel, {"t", "energies"});
        }
        cluster_time += seconds_since(t0);
    }
    times["embed"] = embed_time;
    if (stage != Stage::embed) {
        times["cluster"] = cluster_time;
        bool with_ari = !truth.empty();
        std::string text = with_ari ? "t,k,energy,normalized_energy,ari\n" : "t,k,energy,normalized_energy\n";
        for (const auto& r : rows) {
            text += format_double(r.t) + ',' + std::to_string(r.k) + ',' + format_double(r.clustering.energy) + ',' +
                    format_double(r.clustering.normalized_energy());
            if (with_ari) text += ',' + format_double(*r.ari);
            text += '\n';
            result.rows.push_back({r.t, r.k, r.clustering.energy, r.clustering.normalized_energy(), r.ari});
        }
        write_text(out.root / "summary.csv", text);
        out.csv("summary.csv",
                with_ari ? std::vector<std::string>{"t", "k", "energy", "normalized_energy", "ari"}
                         : std::vector<std::string>{"t", "k", "energy", "normalized_energy"},
                static_cast<long>(rows.size()));
    }
    return finish();
}

RunResult sweep(const ExperimentConfig& config)
{
    validate_config(config);
    if (config.over.empty()) throw InvalidInput("sweep needs at least one over.<param> entry");
    for (const auto& [p, v] : config.over)
        if (v.empty()) throw InvalidInput("sweep values for '" + p + "' are empty");
    const auto t_start = Clock::now();
    SyntheticDensity rho = density(config.density, config.density_params);
    require_density_bandwidth(config, rho);
    Outputs out{config.out, {}, {}};
    fs::create_directories(out.root);

    std::vector<std::vector<double>> cells{{}};
    for (const auto& [p, values] : config.over) {
        std::vector<std::vector<double>> next;
        for (const auto& prefix : cells)
            for (double v : values) {
                auto c = prefix;
                c.push_back(v);
                next.push_back(std::move(c));
            }
        cells = std::move(next);
    }
    const bool seed_swept = std::any_of(config.over.begin(), config.over.end(), [](const auto& e) { return e.first == "seed"; });
    std::optional<PointCloud> shared;
    if (!seed_swept) shared = in_stage("sample", [&] { return experiment_cloud(config, rho); });

    struct CellResult {
        std::vector<ClusterRow> rows;
        std::string error;
        double seconds = 0.0;
    };
    std::vector<CellResult> results(cells.size());
    bool any_truth = false;
    std::mutex truth_mutex;

    auto run_cell = [&](std::size_t idx) {
        auto c0 = Clock::now();
        CellResult& res = results[idx];
        try {
            ExperimentConfig cc = config;
            for (std::size_t p = 0; p < config.over.size(); ++p) {
                const std::string& name = config.over[p].first;
                double v = cells[idx][p];
                if (name == "beta") cc.beta = v;
                else if (name == "alpha") cc.alpha = v;
                else if (name == "epsilon") cc.epsilon = v;
                else if (name == "delta") cc.delta = v;
                else if (name == "t") cc.times = {v};
                else if (name == "k") cc.ks = {static_cast<Index>(v)};
                else if (name == "seed") cc.seed = static_cast<std::uint64_t>(v);
            }
            validate_config(cc);
            PointCloud cloud = shared ? *shared : experiment_cloud(cc, rho);
            std::vector<int> truth = truth_labels(cloud, rho, cc);
            if (!truth.empty()) {
                std::lock_guard<std::mutex> lock(truth_mutex);
                any_truth = true;
            }
            DynamicModel model = build_dynamic_model(cloud, dynamic_config(cc, rho));
            KMeansOptions kopt;
            kopt.restarts = cc.restarts;
            kopt.seed = mix_seed(config.seed + idx);
            for (double t : cc.times) {
                EmbeddingSet e = embed_all(model.rates, t, cc.method);
                Eigen::MatrixXd features = clustering_rows(model, e, cc.metric);
                for (Index k : cc.ks) {
                    Clustering cl = kmeans(features, k, kopt);
                    std::optional<double> ari;
                    if (!truth.empty()) ari = adjusted_rand_index(cl.labels, truth);
                    if (config.emit.clusters) {
                        fs::path rel = fs::path("cell_" + std::to_string(idx)) /
                                       ("clusters_t_" + format_double(t) + "_k_" + std::to_string(k) + ".csv");
                        write_clustering(out.root / rel, cloud, cl);
                    }
                    res.rows.push_back({t, k, std::move(cl), ari});
                }
            }
        } catch (const std::exception& e) {
            res.rows.clear();
            res.error = e.what();
        }
        res.seconds = seconds_since(c0);
    };

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(i);
    };
    const int nworkers = std::max(1, std::min<int>(config.workers, static_cast<int>(cells.size())));
    if (nworkers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < nworkers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::vector<std::string> header{"cell"};
    for (const auto& [p, v] : config.over) header.push_back(p);
    header.insert(header.end(), {"t", "k", "normalized_energy"});
    if (any_truth) header.push_back("ari");
    std::string text;
    for (std::size_t i = 0; i < header.size(); ++i) text += (i ? "," : "") + header[i];
    text += '\n';
    long nrows = 0;
    RunResult result;
    nlohmann::json errors = nlohmann::json::array();
    nlohmann::json cell_times = nlohmann::json::array();
    for (std::size_t idx = 0; idx < cells.size(); ++idx) {
        cell_times.push_back(results[idx].seconds);
        if (!results[idx].error.empty()) {
            nlohmann::json err{{"cell", idx}, {"error", results[idx].error}};
            for (std::size_t p = 0; p < config.over.size(); ++p) err[config.over[p].first] = cells[idx][p];
            errors.push_back(err);
            continue;
        }
        for (const auto& r : results[idx].rows) {
            text += std::to_string(idx);
            for (double v : cells[idx]) text += ',' + format_double(v);
            text += ',' + format_double(r.t) + ',' + std::to_string(r.k) + ',' +
                    format_double(r.clustering.normalized_energy());
            if (any_truth) text += ',' + format_double(r.ari.value_or(0.0));
            text += '\n';
            ++nrows;
            result.rows.push_back({r.t, r.k, r.clustering.energy, r.clustering.normalized_energy(), r.ari});
        }
        if (config.emit.clusters)
            for (const auto& r : results[idx].rows)
                out.csv(fs::path("cell_" + std::to_string(idx)) /
                            ("clusters_t_" + format_double(r.t) + "_k_" + std::to_string(r.k) + ".csv"),
                        concat(concat({"node"}, coord_header(rho.dim())), {"label"}), -1);
    }
    write_text(out.root / "summary.csv", text);
    out.csv("summary.csv", header, nrows);
    write_json(out.root / "errors.json", errors);
    out.json("manifest.json", {"version", "config", "cells", "errors", "wall_times", "files"});
    nlohmann::json manifest{{"version", kVersion},
                            {"config", config_json(config)},
                            {"config_text", serialize_config(config)},
                            {"cells", cells.size()},
                            {"errors", errors.size()},
                            {"wall_times", {{"cells", cell_times}, {"total", seconds_since(t_start)}}}};
    manifest["files"] = out.files();
    write_json(out.root / "manifest.json", manifest);
    out.validate();
    result.files = out.files();
    result.manifest = manifest;
    return result;
}

nlohmann::json pde_compare(const ExperimentConfig& config)
{
    validate_config(config);
    const auto t_start = Clock::now();
    SyntheticDensity rho = density(config.density, config.density_params);
    if (rho.dim() != 1) throw UnsupportedParameter("pde-compare needs a one-dimensional density");
    Outputs out{fs::path(config.out), {}, {}};
    fs::create_directories(out.root);
    auto [a, b] = rho.domain()[0];
    Grid1D grid(a, b, config.pde_cells);
    DensityField rho_field = DensityField::from_function(grid, [&](double x) { return rho(x); });

    PointCloud cloud = in_stage("sample", [&] { return experiment_cloud(config, rho); });
    const double eps = config.epsilon ? *config.epsilon : auto_bandwidth(cloud);
    const double delta = config.delta ? *config.delta : kde_default_bandwidth(cloud, rho.domain_measure());
    const double gamma = config.pde_gamma ? *config.pde_gamma : eps;
    const double gamma_beta = config.pde_gamma ? *config.pde_gamma : delta;
    WeightedGraph graph = in_stage("graph", [&] { return build_proximity_graph(cloud, eps, {config.cutoff}); });
    Eigen::VectorXd rho_hat = kde_at_samples(cloud, delta);
    const Index node = nearest_node(cloud, {config.pde_x0});
    const double x_node = cloud.points(node, 0);
    const Eigen::VectorXd nodes = cloud.points.col(0);

    std::vector<double> times = config.times;
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    nlohmann::json report{{"version", kVersion},
                          {"density", rho.to_json()},
                          {"n", cloud.size()},
                          {"seed", config.seed},
                          {"epsilon", eps},
                          {"delta", delta},
                          {"gamma", gamma},
                          {"gamma_q_beta", gamma_beta},
                          {"flux", flux_name(config.pde_flux)},
                          {"grid", {{"a", a}, {"b", b}, {"cells", grid.cells}}},
                          {"start", {{"requested", config.pde_x0}, {"node", node}, {"x", x_node}}},
                          {"transient", nlohmann::json::array()},
                          {"steady_q_beta", nlohmann::json::array()},
                          {"steady_q_rw_alpha", nlohmann::json::array()}};

    for (double beta : config.pde_betas) {
        RateMatrix q = in_stage("graph", [&] { return q_beta(graph, rho_hat, beta, config.preset); });
        Eigen::VectorXd u = Eigen::VectorXd::Zero(cloud.size());
        u(node) = 1.0;
        DensityField f = DensityField::dirac(grid, x_node);
        double now = 0.0;
        for (double t : times) {
            u = in_stage("evolve", [&] { return evolve(q, u, t - now, config.method); });
            f = in_stage("pde", [&] { return fp_solve_1d(rho_field, beta, f, t - now, config.pde_flux); });
            now = t;
            DensityField g = smooth_atomic_measure(nodes, u, gamma, grid);
            std::string tag = "b" + format_double(beta) + "_t" + format_double(t);
            fs::path rel = fs::path("overlays") / ("overlay_" + tag + ".csv");
            std::string text = "x,f_pde,f_graph\n";
            for (Index j = 0; j < grid.cells; ++j)
                text += format_double(grid.center(j)) + ',' + format_double(f.values(j)) + ',' +
                        format_double(g.values(j)) + '\n';
            write_text(out.root / rel, text);
            out.csv(rel, {"x", "f_pde", "f_graph"}, grid.cells);
            fs::path nrel = fs::path("nodes") / ("nodes_" + tag + ".csv");
            write_trajectory(out.root / nrel, cloud, u, graph.degrees());
            out.csv(nrel, {"node", "x0", "u", "u_d"}, cloud.size());
            report["transient"].push_back({{"beta", beta}, {"t", t}, {"l1", l1_distance(g, f)},
                                           {"min_pde", f.values.minCoeff()}, {"file", rel.generic_string()}});
        }
        Eigen::VectorXd pi = in_stage("steady", [&] { return stationary_distribution(q); });
        DensityField exact = maxwellian_exact(rho_field, beta);
        DensityField kdem = maxwellian_kde(cloud, gamma_beta, beta, grid);
        report["steady_q_beta"].push_back({{"beta", beta},
                                           {"l1_exact", fp_steady_state_compare(nodes, pi, exact, gamma_beta)},
                                           {"l1_kde", fp_steady_state_compare(nodes, pi, kdem, gamma_beta)}});
    }

    bool all_closer = true;
    for (double alpha : config.pde_alphas) {
        const double beta = beta_from_alpha(alpha);
        Eigen::VectorXd da = reweigh_alpha(graph, alpha).degrees();
        Eigen::VectorXd pi = da / da.sum();
        DensityField exact = maxwellian_exact(rho_field, beta);
        DensityField kdem = maxwellian_kde(cloud, gamma, beta, grid);
        DensityField view = smooth_atomic_measure(nodes, pi, gamma, grid);
        double l1k = l1_distance(view, kdem), l1e = l1_distance(view, exact);
        all_closer = all_closer && l1k < l1e;
        fs::path rel = fs::path("steady") / ("steady_rw_a" + format_double(alpha) + ".csv");
        std::string text = "x,f_graph,f_kde,f_exact\n";
        for (Index j = 0; j < grid.cells; ++j)
            text += format_double(grid.center(j)) + ',' + format_double(view.values(j)) + ',' +
                    format_double(kdem.values(j)) + ',' + format_double(exact.values(j)) + '\n';
        write_text(out.root / rel, text);
        out.csv(rel, {"x", "f_graph", "f_kde", "f_exact"}, grid.cells);
        report["steady_q_rw_alpha"].push_back({{"alpha", alpha}, {"beta", beta}, {"l1_kde", l1k},
                                               {"l1_exact", l1e}, {"kde_closer", l1k < l1e}});
    }
    report["kde_closer_all"] = all_closer;
    report["config"] = config_json(config);
    report["wall_time"] = seconds_since(t_start);
    write_json(out.root / "report.json", report);
    out.json("report.json", {"transient", "steady_q_beta", "steady_q_rw_alpha", "kde_closer_all"});
    out.validate();
    return report;
}

nlohmann::json witten_report(const ExperimentConfig& config)
{
    validate_config(config);
    SyntheticDensity rho = density(config.density, config.density_params);
    const double beta = config.beta;
    if (!(beta >= 0.0 && beta < 1.0)) throw InvalidInput("witten: beta must lie in [0, 1)");
    Outputs out{fs::path(config.out), {}, {}};
    fs::create_directories(out.root);
    auto head = [](const Eigen::VectorXd& v, Index m) {
        std::vector<double> o;
        for (Index i = 0; i < std::min(m, v.size()); ++i) o.push_back(v(i));
        return o;
    };
    nlohmann::json report{{"version", kVersion}, {"density", rho.to_json()}, {"beta", beta}};
    if (rho.dim() == 1) {
        auto [a, b] = rho.domain()[0];
        DensityField f = DensityField::from_function(Grid1D(a, b, config.witten_cells), [&](double x) { return rho(x); });
        WittenSpectrum sp = witten_spectrum(witten_matrix_1d(f, beta, config.pde_flux));
        Eigen::VectorXd v = sp.eigenvectors.col(1);
        int changes = 0;
        double tol = 1e-8 * v.cwiseAbs().maxCoeff();
        int sign = 0;
        for (Index j = 0; j < v.size(); ++j) {
            if (std::abs(v(j)) <= tol) continue;
            int s = v(j) > 0 ? 1 : -1;
            if (sign != 0 && s != sign) ++changes;
            sign = s;
        }
        report["cells"] = config.witten_cells;
        report["eigenvalues"] = head(sp.eigenvalues, 10);
        report["second_eigenvector_sign_changes"] = changes;
    } else {
        auto fx = rho.factor(0);
        auto fy = rho.factor(1);
        auto [ax, bx] = rho.domain()[0];
        auto [ay, by] = rho.domain()[1];
        auto fields = [&](Index m) {
            return std::pair{DensityField::from_function(Grid1D(ax, bx, m), fx),
                             DensityField::from_function(Grid1D(ay, by, m), fy)};
        };
        auto [r1, r2] = fields(config.witten_cells);
        WittenProductReport fine = witten_product_check(r1, r2, beta, 0, config.pde_flux);
        auto [c1, c2] = fields(config.witten_product_cells);
        WittenProductReport coarse = witten_product_check(c1, c2, beta, config.witten_product_cells * config.witten_product_cells,
                                                          config.pde_flux);
        report["cells"] = config.witten_cells;
        report["x_eigenvalues"] = head(fine.first, 10);
        report["y_eigenvalues"] = head(fine.second, 10);
        report["x_gap"] = fine.first_gap;
        report["y_gap"] = fine.second_gap;
        report["minimizer"] = fine.minimizer;
        report["split"] = fine.minimizer == "y" ? "horizontal" : "vertical";
        report["product_cells"] = config.witten_product_cells;
        report["product_max_sum_error"] = coarse.max_sum_error;
        report["product_lowest"] = head(coarse.product, 10);
    }
    write_json(out.root / "witten.json", report);
    out.json("witten.json", {"beta", "density"});
    out.validate();
    return report;
}

}  // namespace fpc
