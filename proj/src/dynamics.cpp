#include "fpc/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>
#include <unsupported/Eigen/MatrixFunctions>

namespace fpc {

namespace {

constexpr Index kDenseLimit = 2000;
constexpr Index kBlock = 64;

bool use_exponential(EvolveMethod method, Index n)
{
    if (method == EvolveMethod::matrix_exponential) return true;
    if (method == EvolveMethod::integrate) return false;
    return n <= kDenseLimit;
}

void check_probability(const Eigen::VectorXd& u0, Index n)
{
    if (u0.size() != n) throw InvalidInput("initial vector length does not match rate matrix");
    if (!u0.allFinite() || (u0.array() < 0.0).any())
        throw InvalidInput("initial vector must be nonnegative and finite");
    if (std::abs(u0.sum() - 1.0) > 1e-8) throw InvalidInput("initial vector must sum to 1");
}

// Y' = Q^T Y, columns are independent initial conditions.
Eigen::MatrixXd integrate_columns(const RateMatrix& q, Eigen::MatrixXd y, double t,
                                  const OdeOptions& ode)
{
    const Eigen::MatrixXd& a = q.entries();
    const Index n = a.rows();
    const Index nnz = (a.array() != 0.0).count();
    if (nnz * 4 < n * n) {
        Eigen::SparseMatrix<double> qt = a.transpose().sparseView();
        return integrate_dopri5([&](const Eigen::MatrixXd& s) -> Eigen::MatrixXd { return qt * s; },
                                std::move(y), t, ode);
    }
    const Eigen::MatrixXd qt = a.transpose();
    return integrate_dopri5([&](const Eigen::MatrixXd& s) -> Eigen::MatrixXd { return qt * s; },
                            std::move(y), t, ode);
}

}  // namespace

EvolveMethod parse_method(const std::string& name)
{
    if (name == "auto" || name == "automatic") return EvolveMethod::automatic;
    if (name == "matrix-exponential" || name == "expm") return EvolveMethod::matrix_exponential;
    if (name == "integrate") return EvolveMethod::integrate;
    throw InvalidInput("unknown evolve method '" + name + "' (auto, matrix-exponential, integrate)");
}

void clip_probability(Eigen::Ref<Eigen::VectorXd> u)
{
    double worst = u.minCoeff();
    if (worst < -1e-10)
        throw NumericalError("evolved vector has entry " + std::to_string(worst) + " below -1e-10");
    u = u.cwiseMax(0.0);
    double s = u.sum();
    if (!(s > 0.0)) throw NumericalError("evolved vector has no mass");
    u /= s;
}

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& a)
{
    Eigen::MatrixXd e = a.exp();
    if (!e.allFinite()) throw NumericalError("matrix exponential produced non-finite entries");
    return e;
}

Eigen::VectorXd evolve_raw(const RateMatrix& q, const Eigen::VectorXd& u0, double t,
                           EvolveMethod method, const OdeOptions& ode)
{
    if (!(t >= 0.0)) throw InvalidInput("evolution time must be nonnegative");
    check_probability(u0, q.size());
    if (t == 0.0) return u0;
    if (use_exponential(method, q.size()))
        return (u0.transpose() * matrix_exponential(t * q.entries())).transpose();
    return integrate_columns(q, u0, t, ode).col(0);
}

Eigen::VectorXd evolve(const RateMatrix& q, const Eigen::VectorXd& u0, double t,
                       EvolveMethod method, const OdeOptions& ode)
{
    Eigen::VectorXd u = evolve_raw(q, u0, t, method, ode);
    clip_probability(u);
    return u;
}

EmbeddingSet embed_all(const RateMatrix& q, double t, EvolveMethod method, const OdeOptions& ode)
{
    if (!(t >= 0.0)) throw InvalidInput("evolution time must be nonnegative");
    const Index n = q.size();
    EmbeddingSet out;
    out.time = t;
    out.kind = to_string(q.kind());
    out.params = q.params();
    out.flavor = EmbeddingFlavor::markov;
    if (t == 0.0) {
        out.vectors = Eigen::MatrixXd::Identity(n, n);
        return out;
    }
    if (use_exponential(method, n)) {
        out.vectors = matrix_exponential(t * q.entries());
    } else {
        out.vectors.resize(n, n);
        for (Index c0 = 0; c0 < n; c0 += kBlock) {
            Index w = std::min(kBlock, n - c0);
            Eigen::MatrixXd y = Eigen::MatrixXd::Identity(n, n).middleCols(c0, w);
            out.vectors.middleRows(c0, w) = integrate_columns(q, std::move(y), t, ode).transpose();
        }
    }
    for (Index i = 0; i < n; ++i) {
        Eigen::VectorXd row = out.vectors.row(i).transpose();
        clip_probability(row);
        out.vectors.row(i) = row.transpose();
    }
    return out;
}

SpectralBasis spectral_basis(const WeightedGraph& graph, double alpha, Index k, double c_alpha)
{
    const Index n = graph.size();
    if (k < 1 || k > n) throw InvalidInput("spectral basis size must lie in [1, n]");
    if (!(c_alpha > 0.0)) throw InvalidInput("spectral basis constant must be positive");
    WeightedGraph g = reweigh_alpha(graph, alpha);
    const Eigen::VectorXd s = g.degrees().array().rsqrt();
    Eigen::MatrixXd sym = s.asDiagonal() * g.weights() * s.asDiagonal();
    sym = 0.5 * (sym + sym.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success) throw NumericalError("symmetric eigen-solver did not converge");

    SpectralBasis b;
    b.alpha = alpha;
    b.c_alpha = c_alpha;
    b.degrees = g.degrees();
    b.eigenvalues.resize(k);
    b.phi_tilde.resize(n, k);
    // eigenvalues of sym ascend, so the rate-scale spectrum c(1 - mu) comes out in reverse
    for (Index l = 0; l < k; ++l) {
        Index src = n - 1 - l;
        b.eigenvalues(l) = c_alpha * (1.0 - es.eigenvalues()(src));
        Eigen::VectorXd v = es.eigenvectors().col(src);
        Index arg;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
        b.phi_tilde.col(l) = v;
    }
    b.phi = b.degrees.cwiseSqrt().asDiagonal() * b.phi_tilde;
    return b;
}

SpectralBasis spectral_basis(const WeightedGraph& graph, double alpha, Index k, ConstantPreset preset)
{
    return spectral_basis(graph, alpha, k, diffusion_constant(alpha, graph.epsilon(), graph.dim(), preset));
}

EmbeddingSet spectral_embedding(const SpectralBasis& basis, double t, Index k, SpectralCoordinates coords)
{
    if (k < 1 || k > basis.size()) throw InvalidInput("embedding size exceeds basis size");
    if (!(t >= 0.0)) throw InvalidInput("embedding time must be nonnegative");
    const Index n = basis.phi_tilde.rows();
    EmbeddingSet out;
    out.time = t;
    out.kind = "rw-alpha";
    out.params = {{"alpha", basis.alpha}, {"c_alpha", basis.c_alpha}};
    out.flavor = EmbeddingFlavor::spectral;
    Eigen::VectorXd decay = (-t * basis.eigenvalues.head(k)).array().exp();
    out.vectors = basis.phi_tilde.leftCols(k) * decay.asDiagonal();
    if (coords == SpectralCoordinates::diffusion_map)
        out.vectors = basis.degrees.array().rsqrt().matrix().asDiagonal() * out.vectors;
    (void)n;
    return out;
}

Eigen::VectorXd spectral_reconstruct(const SpectralBasis& basis, double t, Index i)
{
    const Index n = basis.phi.rows();
    if (basis.size() != n) throw InvalidInput("spectral reconstruction needs the full basis");
    if (i < 0 || i >= n) throw InvalidInput("node index out of range");
    Eigen::VectorXd decay = (-t * basis.eigenvalues).array().exp();
    Eigen::VectorXd coef = decay.cwiseProduct(basis.phi.row(i).transpose()) / basis.degrees(i);
    return basis.phi * coef;
}

double l2_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v)
{
    if (u.size() != v.size()) throw InvalidInput("distance between vectors of different length");
    return (u - v).norm();
}

double diffusion_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const Eigen::VectorXd& degrees)
{
    if (u.size() != v.size() || u.size() != degrees.size())
        throw InvalidInput("distance between vectors of different length");
    if (!(degrees.array() > 0.0).all()) throw InvalidInput("degrees must be positive");
    return ((u - v).array() / degrees.array().sqrt()).matrix().norm();
}

Eigen::VectorXd density_view(const Eigen::VectorXd& u, const Eigen::VectorXd& degrees)
{
    if (u.size() != degrees.size()) throw InvalidInput("density view length mismatch");
    return u.cwiseProduct(degrees);
}

Eigen::VectorXd stationary_distribution(const RateMatrix& q)
{
    const Index n = q.size();
    Eigen::MatrixXd a = q.entries().transpose();
    a.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (lu.rank() < n) throw NumericalError("stationary distribution is not unique");
    Eigen::VectorXd pi = lu.solve(rhs);
    double resid = (q.entries().transpose() * pi).cwiseAbs().maxCoeff();
    if (!pi.allFinite() || resid > 1e-8 * q.entries().cwiseAbs().maxCoeff())
        throw NumericalError("stationary solve residual too large");
    if (pi.minCoeff() < -1e-10 * pi.cwiseAbs().maxCoeff())
        throw NumericalError("stationary solve produced negative mass");
    pi = pi.cwiseMax(0.0);
    return pi / pi.sum();
}

std::vector<double> geometric_times(double first, double last, int count)
{
    if (!(first > 0.0 && last >= first) || count < 1) throw InvalidInput("invalid geometric time grid");
    std::vector<double> out;
    if (count == 1) return {first};
    for (int i = 0; i < count; ++i)
        out.push_back(first * std::pow(last / first, static_cast<double>(i) / (count - 1)));
    out.front() = first;
    out.back() = last;
    return out;
}

}  // namespace fpc
