#include "fpc/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "fpc/datasets.hpp"

namespace fpc {

namespace {

struct LloydResult {
    std::vector<int> labels;
    Eigen::MatrixXd centers;
    double energy;
};

double nearest(const Eigen::MatrixXd& rows, Index i, const Eigen::MatrixXd& centers, int& arg)
{
    double best = std::numeric_limits<double>::infinity();
    arg = 0;
    for (Index c = 0; c < centers.rows(); ++c) {
        double d = (rows.row(i) - centers.row(c)).squaredNorm();
        if (d < best) {
            best = d;
            arg = static_cast<int>(c);
        }
    }
    return best;
}

LloydResult lloyd(const Eigen::MatrixXd& rows, Eigen::MatrixXd centers, int max_iterations)
{
    const Index n = rows.rows();
    const Index k = centers.rows();
    std::vector<int> labels(static_cast<std::size_t>(n), -1);
    Eigen::VectorXd dist(n);
    for (int it = 0; it < max_iterations; ++it) {
        bool changed = false;
        for (Index i = 0; i < n; ++i) {
            int a;
            dist(i) = nearest(rows, i, centers, a);
            if (a != labels[i]) {
                labels[i] = a;
                changed = true;
            }
        }
        if (!changed && it > 0) break;
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, rows.cols());
        std::vector<Index> counts(static_cast<std::size_t>(k), 0);
        for (Index i = 0; i < n; ++i) {
            sums.row(labels[i]) += rows.row(i);
            ++counts[labels[i]];
        }
        std::vector<char> taken(static_cast<std::size_t>(n), 0);
        for (Index c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                centers.row(c) = sums.row(c) / static_cast<double>(counts[c]);
                continue;
            }
            // empty cluster: move its center onto the farthest point
            Index far = -1;
            for (Index i = 0; i < n; ++i)
                if (!taken[i] && (far < 0 || dist(i) > dist(far))) far = i;
            taken[far] = 1;
            centers.row(c) = rows.row(far);
            dist(far) = 0.0;
            changed = true;
        }
    }
    double e = 0.0;
    for (Index i = 0; i < n; ++i) {
        int a;
        e += nearest(rows, i, centers, a);
        labels[i] = a;
    }
    return {std::move(labels), std::move(centers), e / static_cast<double>(n)};
}

Eigen::MatrixXd plus_plus(const Eigen::MatrixXd& rows, Index k, std::mt19937_64& rng)
{
    const Index n = rows.rows();
    Eigen::MatrixXd centers(k, rows.cols());
    Index first = static_cast<Index>(uniform01(rng()) * static_cast<double>(n));
    centers.row(0) = rows.row(std::min(first, n - 1));
    Eigen::VectorXd d2(n);
    for (Index i = 0; i < n; ++i) d2(i) = (rows.row(i) - centers.row(0)).squaredNorm();
    for (Index c = 1; c < k; ++c) {
        double total = d2.sum();
        Index pick = n - 1;
        if (total > 0.0) {
            double target = uniform01(rng()) * total, acc = 0.0;
            for (Index i = 0; i < n; ++i) {
                acc += d2(i);
                if (acc > target && d2(i) > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = std::min(static_cast<Index>(uniform01(rng()) * static_cast<double>(n)), n - 1);
        }
        centers.row(c) = rows.row(pick);
        for (Index i = 0; i < n; ++i) d2(i) = std::min(d2(i), (rows.row(i) - centers.row(c)).squaredNorm());
    }
    return centers;
}

// Relabel clusters by first appearance so outputs do not depend on center order.
Clustering canonical(LloydResult r, double e1, const KMeansOptions& opt)
{
    const Index k = r.centers.rows();
    std::vector<int> map(static_cast<std::size_t>(k), -1);
    int next = 0;
    for (int l : r.labels)
        if (map[l] < 0) map[l] = next++;
    for (Index c = 0; c < k; ++c)
        if (map[c] < 0) map[c] = next++;
    Clustering out;
    out.labels.reserve(r.labels.size());
    for (int l : r.labels) out.labels.push_back(map[l]);
    out.centers.resize(k, r.centers.cols());
    for (Index c = 0; c < k; ++c) out.centers.row(map[c]) = r.centers.row(c);
    out.energy = r.energy;
    out.energy_one = e1;
    out.k = k;
    out.restarts = opt.restarts;
    out.seed = opt.seed;
    return out;
}

double total_variance(const Eigen::MatrixXd& rows)
{
    Eigen::RowVectorXd mean = rows.colwise().mean();
    return (rows.rowwise() - mean).rowwise().squaredNorm().sum() / static_cast<double>(rows.rows());
}

LloydResult best_of_restarts(const Eigen::MatrixXd& rows, Index k, const KMeansOptions& opt)
{
    LloydResult best{{}, {}, std::numeric_limits<double>::infinity()};
    for (int r = 0; r < opt.restarts; ++r) {
        std::mt19937_64 rng(opt.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(r) + 1);
        LloydResult cur = lloyd(rows, plus_plus(rows, k, rng), opt.max_iterations);
        if (cur.energy < best.energy) best = std::move(cur);
    }
    return best;
}

}  // namespace

Clustering kmeans(const Eigen::MatrixXd& rows, Index k, const KMeansOptions& options)
{
    const Index n = rows.rows();
    if (n < 1) throw InvalidInput("k-means needs at least one row");
    if (k < 1 || k > n) throw InvalidInput("k must lie in [1, n]");
    if (options.restarts < 1) throw InvalidInput("k-means needs at least one restart");
    if (!rows.allFinite()) throw InvalidInput("k-means rows must be finite");
    Eigen::RowVectorXd mean = rows.colwise().mean();
    Eigen::MatrixXd centered = rows.rowwise() - mean;
    Clustering out = canonical(best_of_restarts(centered, k, options), total_variance(centered), options);
    out.centers.rowwise() += mean;
    return out;
}

Clustering kmeans(const EmbeddingSet& embedding, Index k, const KMeansOptions& options)
{
    return kmeans(embedding.vectors, k, options);
}

double kmeans_energy(const Eigen::MatrixXd& rows, const std::vector<int>& labels, Index k)
{
    const Index n = rows.rows();
    if (static_cast<Index>(labels.size()) != n) throw InvalidInput("label count mismatch");
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, rows.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Index i = 0; i < n; ++i) {
        sums.row(labels[i]) += rows.row(i);
        counts(labels[i]) += 1.0;
    }
    double e = 0.0;
    for (Index i = 0; i < n; ++i)
        e += (rows.row(i) - sums.row(labels[i]) / counts(labels[i])).squaredNorm();
    return e / static_cast<double>(n);
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b)
{
    if (a.size() != b.size()) throw InvalidInput("labelings have different lengths");
    const double n = static_cast<double>(a.size());
    if (a.size() < 2) return 1.0;
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> ca, cb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1.0;
        ca[a[i]] += 1.0;
        cb[b[i]] += 1.0;
    }
    auto pairs = [](double m) { return m * (m - 1.0) / 2.0; };
    double index = 0.0, sa = 0.0, sb = 0.0;
    for (const auto& [key, m] : joint) index += pairs(m);
    for (const auto& [key, m] : ca) sa += pairs(m);
    for (const auto& [key, m] : cb) sb += pairs(m);
    const double expected = sa * sb / pairs(n);
    const double maximum = 0.5 * (sa + sb);
    if (maximum == expected) return (index == sa && index == sb) ? 1.0 : 0.0;
    return (index - expected) / (maximum - expected);
}

GeneratorKind parse_generator(const std::string& raw)
{
    std::string name = raw;
    std::replace(name.begin(), name.end(), '-', '_');
    if (name == "q_beta") return GeneratorKind::q_beta;
    if (name == "q_rw_alpha") return GeneratorKind::q_rw_alpha;
    if (name == "q_knf") return GeneratorKind::q_knf;
    if (name == "q_quickshift") return GeneratorKind::q_quickshift;
    if (name == "q_rw_limit") return GeneratorKind::q_rw_limit;
    if (name == "q_mean_shift") return GeneratorKind::q_mean_shift;
    throw InvalidInput("unknown generator '" + raw +
                       "' (q_beta, q_rw_alpha, q_knf, q_quickshift, q_rw_limit, q_mean_shift)");
}

std::string to_string(GeneratorKind kind)
{
    switch (kind) {
    case GeneratorKind::q_beta: return "q_beta";
    case GeneratorKind::q_rw_alpha: return "q_rw_alpha";
    case GeneratorKind::q_knf: return "q_knf";
    case GeneratorKind::q_quickshift: return "q_quickshift";
    case GeneratorKind::q_rw_limit: return "q_rw_limit";
    case GeneratorKind::q_mean_shift: return "q_mean_shift";
    }
    return "unknown";
}

namespace {

bool needs_density(GeneratorKind kind)
{
    return kind == GeneratorKind::q_beta || kind == GeneratorKind::q_mean_shift ||
           kind == GeneratorKind::q_knf || kind == GeneratorKind::q_quickshift;
}

}  // namespace

DynamicModel build_dynamic_model(const PointCloud& cloud, const DynamicConfig& config)
{
    const double eps = config.epsilon ? *config.epsilon : auto_bandwidth(cloud);
    if (!(eps > 0.0)) throw InvalidInput("epsilon must be positive");
    GraphOptions gopt;
    gopt.cutoff = config.graph_cutoff;
    WeightedGraph graph = build_proximity_graph(cloud, eps, gopt);

    double delta = 0.0;
    if (config.delta) {
        delta = *config.delta;
        if (!(delta > 0.0)) throw InvalidInput("delta must be positive");
    } else if (cloud.dim() == 1 && config.domain_measure) {
        delta = kde_default_bandwidth(cloud, *config.domain_measure);
    } else if (needs_density(config.generator)) {
        throw UnsupportedParameter("the default kde bandwidth rule is one-dimensional; set delta explicitly");
    }

    Eigen::VectorXd rho_hat;
    if (needs_density(config.generator)) rho_hat = kde_at_samples(cloud, delta);

    auto build = [&]() -> RateMatrix {
        switch (config.generator) {
        case GeneratorKind::q_beta: return q_beta(graph, rho_hat, config.beta, config.preset);
        case GeneratorKind::q_rw_alpha: return q_rw_alpha(graph, config.alpha, config.preset);
        case GeneratorKind::q_mean_shift: return q_mean_shift(graph, rho_hat, config.preset);
        case GeneratorKind::q_knf: return q_knf(graph, rho_hat, config.knf_radius);
        case GeneratorKind::q_quickshift: {
            const Index n = cloud.size();
            Eigen::MatrixXd dist(n, n);
            for (Index i = 0; i < n; ++i)
                for (Index j = 0; j < n; ++j)
                    dist(i, j) = graph.weights()(i, j) > 0.0 || i == j
                                     ? (cloud.points.row(i) - cloud.points.row(j)).norm()
                                     : std::numeric_limits<double>::infinity();
            return q_quickshift(graph, rho_hat, dist);
        }
        case GeneratorKind::q_rw_limit: return q_rw_limit(graph);
        }
        throw InvalidInput("unknown generator");
    };
    Params extra{{"epsilon", eps}};
    if (delta > 0.0) extra["delta"] = delta;
    RateMatrix rates = build().with_params(extra);

    Eigen::VectorXd metric_degrees = config.generator == GeneratorKind::q_rw_alpha
                                         ? reweigh_alpha(graph, config.alpha).degrees()
                                         : graph.degrees();
    return DynamicModel{std::move(graph), eps, delta, std::move(rho_hat), std::move(rates),
                        std::move(metric_degrees)};
}

Eigen::MatrixXd clustering_rows(const DynamicModel& model, const EmbeddingSet& embedding,
                                EmbeddingMetric metric)
{
    if (metric == EmbeddingMetric::l2 || embedding.flavor == EmbeddingFlavor::spectral)
        return embedding.vectors;
    return embedding.vectors * model.metric_degrees.array().rsqrt().matrix().asDiagonal();
}

DynamicResult cluster_dynamic(const PointCloud& cloud, const DynamicConfig& config)
{
    DynamicModel model = build_dynamic_model(cloud, config);
    EmbeddingSet e = embed_all(model.rates, config.t, config.method);
    KMeansOptions opt;
    opt.restarts = config.restarts;
    opt.seed = config.seed;
    DynamicResult out;
    out.clustering = kmeans(clustering_rows(model, e, config.metric), config.k, opt);
    out.epsilon = model.epsilon;
    out.delta = model.delta;
    out.generator = to_string(config.generator);
    out.params = model.rates.params();
    out.params["t"] = config.t;
    return out;
}

std::vector<EnergyPoint> energy_profile(const Eigen::MatrixXd& raw, Index k_max, const KMeansOptions& options)
{
    const Eigen::MatrixXd rows = raw.rowwise() - raw.colwise().mean();
    const Index n = rows.rows();
    if (k_max < 1 || k_max > n) throw InvalidInput("k_max must lie in [1, n]");
    std::vector<EnergyPoint> out;
    LloydResult prev{{}, {}, 0.0};
    double e1 = total_variance(rows);
    for (Index k = 1; k <= k_max; ++k) {
        LloydResult cur = best_of_restarts(rows, k, options);
        if (k > 1) {
            // seed from the previous optimum plus its worst-served point
            Index far = 0;
            double worst = -1.0;
            for (Index i = 0; i < n; ++i) {
                int a;
                double d = nearest(rows, i, prev.centers, a);
                if (d > worst) {
                    worst = d;
                    far = i;
                }
            }
            Eigen::MatrixXd init(k, rows.cols());
            init.topRows(k - 1) = prev.centers;
            init.row(k - 1) = rows.row(far);
            LloydResult grown = lloyd(rows, std::move(init), options.max_iterations);
            if (grown.energy < cur.energy) cur = std::move(grown);
        }
        out.push_back({k, cur.energy, e1 > 0.0 ? cur.energy / e1 : 0.0});
        prev = std::move(cur);
    }
    return out;
}

std::vector<EnergyPoint> energy_profile(const PointCloud& cloud, const DynamicConfig& config, Index k_max)
{
    DynamicModel model = build_dynamic_model(cloud, config);
    EmbeddingSet e = embed_all(model.rates, config.t, config.method);
    KMeansOptions opt;
    opt.restarts = config.restarts;
    opt.seed = config.seed;
    return energy_profile(clustering_rows(model, e, config.metric), k_max, opt);
}

}  // namespace fpc
