#pragma once

// Latent-space analyses on a trained VAE: traversals, feature transfer,
// single-coordinate probes and the posterior-sample sensitivity of a head.

#include "stackssl/ssl.hpp"
#include "stackssl/tensor.hpp"
#include "stackssl/vae.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace stackssl {

std::vector<double> linspace(double lo, double hi, std::size_t steps);

struct TraversalGrid {
  std::vector<double> values;  // abscissae
  Matrix<double> images;       // one decoded image per value
};

// Decodes the seed image's posterior mean with coordinate `dim` swept over [lo, hi].
template <typename Scalar>
TraversalGrid latent_traverse(const VaeModel<Scalar>& vae, std::span<const double> seed_image, std::size_t dim,
                              double lo = -3.0, double hi = 3.0, std::size_t steps = 7);

struct FeatureTransfer {
  Matrix<double> recon_a;
  Matrix<double> recon_b;
  Matrix<double> a_with_b;  // a's code with the listed coordinates taken from b
  Matrix<double> b_with_a;
};

template <typename Scalar>
FeatureTransfer feature_transfer(const VaeModel<Scalar>& vae, std::span<const double> image_a,
                                 std::span<const double> image_b, std::span<const std::size_t> dims);

struct ProbeCounts {
  std::size_t train = 200;
  std::size_t validation = 200;
  std::size_t test = 400;
};

struct ProbeResult {
  double test_auroc = 0.5;
  double validation_auroc = 0.5;
  double weight = 0;
  double bias = 0;
};

// Logistic regression on one standardized feature column. Rows are shuffled
// with `seed` and cut into train/validation/test.
ProbeResult single_dim_probe(const Matrix<double>& features, std::span<const double> labels, std::size_t dim,
                             const ProbeCounts& counts, std::uint64_t seed, std::size_t steps = 300,
                             double lr = 0.05);

double pearson(std::span<const double> x, std::span<const double> y);

// |corr(features[:, j], labels)| per column; constant columns give 0.
std::vector<double> abs_correlations(const Matrix<double>& features, std::span<const double> labels);

// Mean over rows and pairs of ||f(z1) - f(z2)||^2 for independent posterior draws, dropout off.
template <typename Scalar>
double latent_sensitivity(const VaeModel<Scalar>& vae, const SslModel<Scalar>& model, const Matrix<double>& images,
                          std::size_t n_pairs, Rng& rng);

// 8-bit binary PGM tiling of square images, `columns` per row.
std::string encode_pgm_grid(const Matrix<double>& images, std::size_t width, std::size_t columns);
void write_pgm_grid(const std::filesystem::path& path, const Matrix<double>& images, std::size_t width,
                    std::size_t columns);

}  // namespace stackssl
