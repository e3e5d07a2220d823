#include "fpc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace fpc {

namespace {

std::string describe_components(const std::vector<std::vector<long>>& comps)
{
    std::ostringstream os;
    os << "graph is disconnected: " << comps.size() << " components";
    for (std::size_t c = 0; c < comps.size() && c < 8; ++c) {
        os << (c == 0 ? " [" : "; ") << "#" << c << " size " << comps[c].size() << ": ";
        for (std::size_t i = 0; i < comps[c].size() && i < 6; ++i)
            os << (i ? "," : "") << comps[c][i];
        if (comps[c].size() > 6) os << ",...";
    }
    if (!comps.empty()) os << (comps.size() > 8 ? "; ...]" : "]");
    return os.str();
}

}  // namespace

ConnectivityError::ConnectivityError(std::vector<std::vector<long>> components)
    : InvalidInput(describe_components(components)), components_(std::move(components))
{
}

PointCloud::PointCloud(Eigen::MatrixXd pts, std::optional<std::vector<int>> lab,
                       std::optional<std::uint64_t> s)
    : points(std::move(pts)), labels(std::move(lab)), seed(s)
{
    validate();
}

void PointCloud::validate() const
{
    if (points.rows() < 1) throw InvalidInput("point cloud must contain at least one point");
    if (points.cols() < 1) throw InvalidInput("point dimension must be positive");
    if (!points.allFinite()) throw InvalidInput("point coordinates must be finite");
    if (labels && static_cast<Index>(labels->size()) != points.rows())
        throw InvalidInput("label count does not match point count");
}

PointCloud PointCloud::from_1d(const std::vector<double>& xs)
{
    Eigen::MatrixXd p(static_cast<Index>(xs.size()), 1);
    for (std::size_t i = 0; i < xs.size(); ++i) p(static_cast<Index>(i), 0) = xs[i];
    return PointCloud(std::move(p));
}

std::vector<std::vector<long>> connected_components(const Eigen::MatrixXd& weights)
{
    const Index n = weights.rows();
    std::vector<int> comp(static_cast<std::size_t>(n), -1);
    std::vector<std::vector<long>> out;
    std::vector<Index> stack;
    for (Index s = 0; s < n; ++s) {
        if (comp[s] >= 0) continue;
        int id = static_cast<int>(out.size());
        out.emplace_back();
        comp[s] = id;
        stack.push_back(s);
        while (!stack.empty()) {
            Index v = stack.back();
            stack.pop_back();
            out[id].push_back(static_cast<long>(v));
            for (Index u = 0; u < n; ++u)
                if (comp[u] < 0 && weights(v, u) > 0.0) {
                    comp[u] = id;
                    stack.push_back(u);
                }
        }
    }
    for (auto& c : out) std::sort(c.begin(), c.end());
    return out;
}

WeightedGraph::WeightedGraph(Eigen::MatrixXd weights, double epsilon, int dim)
    : weights_(std::move(weights)), epsilon_(epsilon), dim_(dim)
{
    const Index n = weights_.rows();
    if (n < 1 || weights_.cols() != n) throw InvalidInput("weight matrix must be square and nonempty");
    if (!(epsilon > 0.0)) throw InvalidInput("graph bandwidth must be positive");
    if (!weights_.allFinite()) throw InvalidInput("weights must be finite");
    for (Index i = 0; i < n; ++i) {
        if (weights_(i, i) != 0.0) throw InvalidInput("weight matrix must have a zero diagonal");
        for (Index j = i + 1; j < n; ++j) {
            double a = weights_(i, j), b = weights_(j, i);
            if (a < 0.0 || b < 0.0) throw InvalidInput("weights must be nonnegative");
            if (std::abs(a - b) > 1e-12 * std::max(std::abs(a), std::abs(b)))
                throw InvalidInput("weight matrix must be symmetric");
            weights_(j, i) = a;
        }
    }
    degrees_ = weights_.rowwise().sum();
    if (n > 1) {
        auto comps = connected_components(weights_);
        if (comps.size() > 1) throw ConnectivityError(std::move(comps));
    }
    for (Index i = 0; i < n; ++i)
        if (!(degrees_(i) > 0.0))
            throw InvalidInput("node " + std::to_string(i) + " has zero degree");
}

double gaussian_kernel(double distance, double bandwidth, int dim)
{
    const double var = bandwidth * bandwidth;
    return std::pow(2.0 * std::numbers::pi * var, -0.5 * dim) *
           std::exp(-distance * distance / (2.0 * var));
}

double auto_bandwidth(const PointCloud& cloud)
{
    const Index n = cloud.size();
    if (n < 2) throw InvalidInput("automatic bandwidth needs at least two points");
    double worst = 0.0;
    for (Index i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (Index j = 0; j < n; ++j)
            if (j != i) best = std::min(best, (cloud.points.row(i) - cloud.points.row(j)).squaredNorm());
        worst = std::max(worst, best);
    }
    if (!(worst > 0.0))
        throw DegenerateBandwidth("all nearest-neighbor distances are zero");
    return std::sqrt(2.0) * std::sqrt(worst);
}

WeightedGraph build_proximity_graph(const PointCloud& cloud, double epsilon,
                                    const GraphOptions& options)
{
    if (!(epsilon > 0.0)) throw InvalidInput("epsilon must be positive");
    if (options.cutoff && !(*options.cutoff > 0.0)) throw InvalidInput("cutoff must be positive");
    const Index n = cloud.size();
    const int dim = cloud.dim();
    const double radius = options.cutoff ? *options.cutoff * epsilon
                                         : std::numeric_limits<double>::infinity();
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) {
            double dist = (cloud.points.row(i) - cloud.points.row(j)).norm();
            double v = dist > radius ? 0.0 : gaussian_kernel(dist, epsilon, dim);
            w(i, j) = v;
            w(j, i) = v;
        }
    return WeightedGraph(std::move(w), epsilon, dim);
}

Eigen::VectorXd kde(const PointCloud& cloud, double delta, const Eigen::MatrixXd& queries)
{
    if (!(delta > 0.0)) throw InvalidInput("kde bandwidth must be positive");
    if (queries.cols() != cloud.dim()) throw InvalidInput("query dimension does not match cloud");
    const Index n = cloud.size();
    Eigen::VectorXd out(queries.rows());
    for (Index q = 0; q < queries.rows(); ++q) {
        double s = 0.0;
        for (Index i = 0; i < n; ++i)
            s += gaussian_kernel((queries.row(q) - cloud.points.row(i)).norm(), delta, cloud.dim());
        out(q) = s / static_cast<double>(n);
    }
    return out;
}

Eigen::VectorXd kde_at_samples(const PointCloud& cloud, double delta)
{
    return kde(cloud, delta, cloud.points);
}

double kde_default_bandwidth(const PointCloud& cloud, double domain_measure)
{
    if (cloud.size() < 1) throw InvalidInput("kde bandwidth rule needs at least one point");
    if (!(domain_measure > 0.0)) throw InvalidInput("domain measure must be positive");
    return std::sqrt(2.0) * std::sqrt(domain_measure / static_cast<double>(cloud.size()));
}

WeightedGraph reweigh_alpha(const WeightedGraph& graph, double alpha)
{
    if (alpha > 1.0) throw InvalidInput("alpha must be at most 1");
    if (alpha == 0.0) return graph;
    const Index n = graph.size();
    const Eigen::VectorXd logd = graph.degrees().array().log();
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) {
            double v = graph.weights()(i, j);
            if (v > 0.0) v = std::exp(std::log(v) - alpha * (logd(i) + logd(j)));
            w(i, j) = v;
            w(j, i) = v;
        }
    if (!w.allFinite()) throw NumericalError("reweighed graph overflows for alpha=" + std::to_string(alpha));
    return WeightedGraph(std::move(w), graph.epsilon(), graph.dim());
}

}  // namespace fpc
