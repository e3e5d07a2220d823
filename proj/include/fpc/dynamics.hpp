#pragma once

#include <vector>

#include "fpc/ode.hpp"
#include "fpc/rates.hpp"

namespace fpc {

enum class EvolveMethod { automatic, matrix_exponential, integrate };

EvolveMethod parse_method(const std::string& name);

enum class EmbeddingFlavor { markov, spectral };

struct EmbeddingSet {
    Eigen::MatrixXd vectors;  // one row per node
    double time = 0.0;
    std::string kind;
    Params params;
    EmbeddingFlavor flavor = EmbeddingFlavor::markov;

    Index size() const { return vectors.rows(); }
};

struct SpectralBasis {
    Eigen::VectorXd eigenvalues;  // ascending, rate scale
    Eigen::MatrixXd phi;          // columns orthonormal under <D^-1 ., .>
    Eigen::MatrixXd phi_tilde;    // columns orthonormal
    Eigen::VectorXd degrees;      // reweighed degrees
    double alpha = 0.0;
    double c_alpha = 1.0;

    Index size() const { return eigenvalues.size(); }
};

// Entries in (-1e-10, 0) are zeroed and the vector renormalized; larger negatives throw.
void clip_probability(Eigen::Ref<Eigen::VectorXd> u);

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& a);

Eigen::VectorXd evolve(const RateMatrix& q, const Eigen::VectorXd& u0, double t,
                       EvolveMethod method = EvolveMethod::automatic,
                       const OdeOptions& ode = {});

// Same as evolve but without clipping, for positivity audits.
Eigen::VectorXd evolve_raw(const RateMatrix& q, const Eigen::VectorXd& u0, double t,
                           EvolveMethod method = EvolveMethod::automatic,
                           const OdeOptions& ode = {});

EmbeddingSet embed_all(const RateMatrix& q, double t,
                       EvolveMethod method = EvolveMethod::automatic,
                       const OdeOptions& ode = {});

SpectralBasis spectral_basis(const WeightedGraph& graph, double alpha, Index k, double c_alpha);
SpectralBasis spectral_basis(const WeightedGraph& graph, double alpha, Index k,
                             ConstantPreset preset = ConstantPreset::experiment);

// diffusion_map: e^{-t lambda} phi_tilde(x_i) / sqrt(d(x_i)); Euclidean distances
// between rows then equal diffusion distances between Markov rows.
// symmetric: e^{-t lambda} phi_tilde(x_i).
enum class SpectralCoordinates { diffusion_map, symmetric };

EmbeddingSet spectral_embedding(const SpectralBasis& basis, double t, Index k,
                                SpectralCoordinates coords = SpectralCoordinates::diffusion_map);

Eigen::VectorXd spectral_reconstruct(const SpectralBasis& basis, double t, Index i);

double l2_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v);
double diffusion_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                          const Eigen::VectorXd& degrees);

Eigen::VectorXd density_view(const Eigen::VectorXd& u, const Eigen::VectorXd& degrees);

// Left null vector of q normalized to a probability vector.
Eigen::VectorXd stationary_distribution(const RateMatrix& q);

std::vector<double> geometric_times(double first = 0.1, double last = 10.0, int count = 3);

}  // namespace fpc
