#pragma once

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "fpc/graph.hpp"

namespace fixtures {

inline Eigen::MatrixXd path_weights(std::initializer_list<double> w)
{
    const Eigen::Index n = static_cast<Eigen::Index>(w.size()) + 1;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    Eigen::Index i = 0;
    for (double v : w) {
        m(i, i + 1) = m(i + 1, i) = v;
        ++i;
    }
    return m;
}

// Connected random graph: a random spanning path plus Bernoulli extra edges.
inline fpc::WeightedGraph random_graph(std::mt19937_64& rng, Eigen::Index n, double density = 0.4)
{
    std::uniform_real_distribution<double> weight(0.1, 2.0), coin(0.0, 1.0);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        auto a = order[static_cast<std::size_t>(i)], b = order[static_cast<std::size_t>(i + 1)];
        w(a, b) = w(b, a) = weight(rng);
    }
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            if (w(i, j) == 0.0 && coin(rng) < density) w(i, j) = w(j, i) = weight(rng);
    return fpc::WeightedGraph(w, 1.0);
}

inline fpc::PointCloud random_cloud(std::mt19937_64& rng, Eigen::Index n, int dim, double spread = 1.0)
{
    std::normal_distribution<double> g(0.0, spread);
    Eigen::MatrixXd p(n, dim);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int d = 0; d < dim; ++d) p(i, d) = g(rng);
    return fpc::PointCloud(p);
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

// Composite Simpson rule on [a, b] with m (even) panels.
template <class F>
double simpson(F&& f, double a, double b, int m)
{
    double h = (b - a) / m, s = f(a) + f(b);
    for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

}  // namespace fixtures
