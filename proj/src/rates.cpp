#include "fpc/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fpc {

std::string to_string(RateKind kind)
{
    switch (kind) {
    case RateKind::negated_laplacian: return "unnormalized-laplacian-negated";
    case RateKind::rw_alpha: return "rw-alpha";
    case RateKind::potential: return "potential";
    case RateKind::mean_shift: return "mean-shift";
    case RateKind::beta_interpolation: return "beta-interpolation";
    case RateKind::knf: return "knf";
    case RateKind::quickshift: return "quickshift";
    case RateKind::rw_limit: return "rw-limit";
    }
    return "unknown";
}

RateMatrix::RateMatrix(Eigen::MatrixXd entries, RateKind kind, Params params)
    : entries_(std::move(entries)), kind_(kind), params_(std::move(params))
{
    const Index n = entries_.rows();
    if (n < 1 || entries_.cols() != n) throw InvalidInput("rate matrix must be square and nonempty");
    if (!entries_.allFinite()) throw NumericalError("rate matrix has non-finite entries");
    for (Index i = 0; i < n; ++i) {
        double s = 0.0;
        for (Index j = 0; j < n; ++j) {
            if (j == i) continue;
            if (entries_(i, j) < 0.0) throw InvalidInput("rate matrix off-diagonal entries must be nonnegative");
            s += entries_(i, j);
        }
        entries_(i, i) = -s;
    }
}

double RateMatrix::param(const std::string& name) const
{
    auto it = params_.find(name);
    if (it == params_.end()) throw InvalidInput("rate matrix has no parameter " + name);
    return it->second;
}

double RateMatrix::max_row_sum() const
{
    return entries_.rowwise().sum().cwiseAbs().maxCoeff();
}

RateMatrix RateMatrix::with_params(const Params& extra) const
{
    RateMatrix copy = *this;
    for (const auto& [k, v] : extra) copy.params_[k] = v;
    return copy;
}

LaplacianMatrix unnormalized_laplacian(const WeightedGraph& graph)
{
    Eigen::MatrixXd l = -graph.weights();
    l.diagonal() = graph.degrees();
    return {std::move(l), LaplacianKind::unnormalized, graph.degrees()};
}

LaplacianMatrix normalized_laplacian(const WeightedGraph& graph)
{
    const Eigen::VectorXd s = graph.degrees().array().rsqrt();
    Eigen::MatrixXd l = -(s.asDiagonal() * graph.weights() * s.asDiagonal());
    l.diagonal().array() += 1.0;
    return {std::move(l), LaplacianKind::normalized, graph.degrees()};
}

LaplacianMatrix random_walk_laplacian(const WeightedGraph& graph, double alpha)
{
    WeightedGraph g = reweigh_alpha(graph, alpha);
    Eigen::MatrixXd l = -(g.degrees().cwiseInverse().asDiagonal() * g.weights());
    l.diagonal().array() += 1.0;
    return {std::move(l), alpha == 0.0 ? LaplacianKind::random_walk : LaplacianKind::rw_alpha,
            g.degrees()};
}

ConstantPreset parse_preset(const std::string& name)
{
    if (name == "continuum") return ConstantPreset::continuum;
    if (name == "experiment") return ConstantPreset::experiment;
    if (name == "unit") return ConstantPreset::unit;
    throw InvalidInput("unknown constant preset '" + name + "' (continuum, experiment, unit)");
}

std::string to_string(ConstantPreset preset)
{
    switch (preset) {
    case ConstantPreset::continuum: return "continuum";
    case ConstantPreset::experiment: return "experiment";
    case ConstantPreset::unit: return "unit";
    }
    return "unknown";
}

double diffusion_constant(double alpha, double epsilon, int dim, ConstantPreset preset)
{
    if (alpha > 1.0) throw InvalidInput("alpha must be at most 1");
    switch (preset) {
    case ConstantPreset::continuum: return 1.0 / (static_cast<double>(dim) * epsilon * epsilon);
    case ConstantPreset::experiment: return 1.0 / ((3.0 - 2.0 * alpha) * epsilon * epsilon);
    case ConstantPreset::unit: return 1.0;
    }
    return 1.0;
}

double mean_shift_constant(Index n, double epsilon, int /*dim*/, ConstantPreset preset)
{
    const double base = 1.0 / (static_cast<double>(n) * epsilon * epsilon);
    switch (preset) {
    case ConstantPreset::continuum: return base / 0.5;
    case ConstantPreset::experiment: return base;
    case ConstantPreset::unit: return 1.0;
    }
    return base;
}

double beta_from_alpha(double alpha)
{
    if (alpha > 1.0) throw InvalidInput("alpha must be at most 1");
    return (2.0 - 2.0 * alpha) / (3.0 - 2.0 * alpha);
}

double alpha_from_beta(double beta)
{
    if (!(beta >= 0.0 && beta < 1.0)) throw InvalidInput("beta must lie in [0, 1)");
    return (2.0 - 3.0 * beta) / (2.0 - 2.0 * beta);
}

RateMatrix q_negated_laplacian(const WeightedGraph& graph)
{
    return RateMatrix(graph.weights(), RateKind::negated_laplacian);
}

RateMatrix q_rw_alpha(const WeightedGraph& graph, double alpha, double c_alpha)
{
    if (alpha > 1.0) throw InvalidInput("q_rw_alpha: alpha must be at most 1");
    if (!(c_alpha > 0.0)) throw InvalidInput("q_rw_alpha: constant must be positive");
    const Index n = graph.size();
    const Eigen::VectorXd logd = graph.degrees().array().log();
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd logs(n);
    for (Index i = 0; i < n; ++i) {
        // the d(x)^-alpha factor cancels in the row normalization
        double top = -std::numeric_limits<double>::infinity();
        for (Index j = 0; j < n; ++j) {
            double w = graph.weights()(i, j);
            logs(j) = (j != i && w > 0.0) ? std::log(w) - alpha * logd(j)
                                          : -std::numeric_limits<double>::infinity();
            top = std::max(top, logs(j));
        }
        if (!std::isfinite(top)) throw InvalidInput("q_rw_alpha: node with zero degree");
        double total = 0.0;
        for (Index j = 0; j < n; ++j) {
            double v = std::isfinite(logs(j)) ? std::exp(logs(j) - top) : 0.0;
            q(i, j) = v;
            total += v;
        }
        q.row(i) *= c_alpha / total;
        q(i, i) = 0.0;
    }
    return RateMatrix(std::move(q), RateKind::rw_alpha, {{"alpha", alpha}, {"c_alpha", c_alpha}});
}

RateMatrix q_rw_alpha(const WeightedGraph& graph, double alpha, ConstantPreset preset)
{
    return q_rw_alpha(graph, alpha, diffusion_constant(alpha, graph.epsilon(), graph.dim(), preset));
}

RateMatrix q_potential(const WeightedGraph& graph, const Eigen::VectorXd& potential, double c)
{
    const Index n = graph.size();
    if (potential.size() != n) throw InvalidInput("potential length does not match graph");
    if (!potential.allFinite()) throw InvalidInput("potential must be finite");
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            if (j != i) q(i, j) = c * std::max(potential(j) - potential(i), 0.0) * graph.weights()(i, j);
    return RateMatrix(std::move(q), RateKind::potential, {{"c", c}});
}

RateMatrix q_mean_shift(const WeightedGraph& graph, const Eigen::VectorXd& rho_hat, double c_ms)
{
    if (rho_hat.size() != graph.size()) throw InvalidInput("density length does not match graph");
    if (!(rho_hat.array() > 0.0).all()) throw InvalidInput("q_mean_shift: density must be positive");
    if (!(c_ms > 0.0)) throw InvalidInput("q_mean_shift: constant must be positive");
    Eigen::VectorXd b = -rho_hat.cwiseInverse();
    RateMatrix p = q_potential(graph, b, c_ms);
    return RateMatrix(p.entries(), RateKind::mean_shift, {{"c_ms", c_ms}});
}

RateMatrix q_mean_shift(const WeightedGraph& graph, const Eigen::VectorXd& rho_hat, ConstantPreset preset)
{
    return q_mean_shift(graph, rho_hat,
                        mean_shift_constant(graph.size(), graph.epsilon(), graph.dim(), preset));
}

RateMatrix q_beta(const WeightedGraph& graph, const Eigen::VectorXd& rho_hat, double beta,
                  ConstantPreset preset)
{
    if (!(beta >= 0.0 && beta <= 1.0))
        throw InvalidInput("q_beta: beta must lie in [0, 1], got " + std::to_string(beta));
    const double c1 = diffusion_constant(1.0, graph.epsilon(), graph.dim(), preset);
    const double cms = mean_shift_constant(graph.size(), graph.epsilon(), graph.dim(), preset);
    RateMatrix ms = q_mean_shift(graph, rho_hat, cms);
    RateMatrix rw = q_rw_alpha(graph, 1.0, c1);
    Eigen::MatrixXd q = beta * ms.entries() + (1.0 - beta) * rw.entries();
    return RateMatrix(std::move(q), RateKind::beta_interpolation,
                      {{"beta", beta}, {"c_alpha", c1}, {"c_ms", cms}});
}

namespace {

// Rows with no positive objective are left absorbing.
RateMatrix maximizer_chain(const Eigen::MatrixXd& objective, RateKind kind, Params params)
{
    const Index n = objective.rows();
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        double best = 0.0;
        for (Index j = 0; j < n; ++j)
            if (j != i) best = std::max(best, objective(i, j));
        if (!(best > 0.0)) continue;
        std::vector<Index> set;
        for (Index j = 0; j < n; ++j) {
            if (j == i) continue;
            double v = objective(i, j);
            bool tie = std::isinf(best) ? std::isinf(v) : v >= best * (1.0 - 1e-12);
            if (tie) set.push_back(j);
        }
        for (Index j : set) q(i, j) = 1.0 / static_cast<double>(set.size());
    }
    return RateMatrix(std::move(q), kind, std::move(params));
}

}  // namespace

RateMatrix q_knf(const WeightedGraph& graph, const Eigen::VectorXd& b_hat, double r,
                 const Eigen::MatrixXd* distances)
{
    const Index n = graph.size();
    if (b_hat.size() != n) throw InvalidInput("potential length does not match graph");
    if (!(r > 0.0)) throw InvalidInput("q_knf: radius must be positive");
    if (distances && (distances->rows() != n || distances->cols() != n))
        throw InvalidInput("distance matrix shape does not match graph");
    Eigen::MatrixXd obj = Eigen::MatrixXd::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
            if (j == i) continue;
            double d = distances ? (*distances)(i, j)
                                 : (graph.weights()(i, j) > 0.0 ? 1.0
                                                                : std::numeric_limits<double>::infinity());
            if (!(d < r)) continue;
            double gain = std::max(b_hat(j) - b_hat(i), 0.0);
            obj(i, j) = gain > 0.0 ? (d > 0.0 ? gain / d : std::numeric_limits<double>::infinity()) : 0.0;
        }
    return maximizer_chain(obj, RateKind::knf, {{"r", r}});
}

RateMatrix q_quickshift(const WeightedGraph& graph, const Eigen::VectorXd& b_hat,
                        const Eigen::MatrixXd& distances)
{
    const Index n = graph.size();
    if (b_hat.size() != n) throw InvalidInput("potential length does not match graph");
    if (distances.rows() != n || distances.cols() != n)
        throw InvalidInput("distance matrix shape does not match graph");
    Eigen::MatrixXd obj = Eigen::MatrixXd::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
            if (j == i || !(b_hat(j) > b_hat(i))) continue;
            double d = distances(i, j);
            if (d < 0.0) throw InvalidInput("distances must be nonnegative");
            obj(i, j) = d > 0.0 ? 1.0 / d : std::numeric_limits<double>::infinity();
        }
    return maximizer_chain(obj, RateKind::quickshift, {});
}

RateMatrix q_rw_limit(const WeightedGraph& graph)
{
    const Index n = graph.size();
    const auto& w = graph.weights();
    const auto& d = graph.degrees();
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        double top = -1.0;
        for (Index j = 0; j < n; ++j)
            if (j != i && w(i, j) > 0.0) top = std::max(top, d(j));
        double total = 0.0;
        for (Index j = 0; j < n; ++j)
            if (j != i && w(i, j) > 0.0 && d(j) >= top * (1.0 - 1e-12)) {
                q(i, j) = w(i, j);
                total += w(i, j);
            }
        if (total > 0.0) q.row(i) /= total;
    }
    return RateMatrix(std::move(q), RateKind::rw_limit, {{"c_alpha", 1.0}});
}

}  // namespace fpc
