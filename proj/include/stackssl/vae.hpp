#pragma once

// Variational autoencoder with a diagonal-Gaussian posterior q(z|x), a
// standard-normal prior and a Bernoulli decoder p(x|z) with sigmoid means.
//
// Graph-building functions come in two flavours: a non-const model binds its
// parameters (training), a const model enters the graph as constants (frozen).

#include "stackssl/config.hpp"
#include "stackssl/data.hpp"
#include "stackssl/nn.hpp"
#include "stackssl/tensor.hpp"
#include "stackssl/tensor_io.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace stackssl {

struct VaeArchitecture {
  std::size_t input_dim = 0;
  std::size_t latent_dim = 0;
  std::vector<std::size_t> hidden;  // encoder hidden widths; the decoder mirrors them

  bool operator==(const VaeArchitecture&) const = default;
};

template <typename Scalar>
struct VaeModel {
  VaeArchitecture arch;
  std::uint64_t seed = 0;
  std::vector<Dense<Scalar>> encoder;  // input -> hidden... -> 2 * latent_dim (mu | logvar)
  std::vector<Dense<Scalar>> decoder;  // latent_dim -> reversed hidden... -> input

  std::vector<Tensor<Scalar>*> parameters();
  void set_trainable(bool trainable);
};

template <typename Scalar>
VaeModel<Scalar> make_vae(const VaeArchitecture& arch, std::uint64_t seed);

template <typename Scalar>
struct PosteriorBatch {
  Var<Scalar> mu;
  Var<Scalar> logvar;
};

template <typename Scalar>
struct Reconstruction {
  Var<Scalar> logits;
  Var<Scalar> mean;  // sigmoid(logits), Bernoulli means in (0,1)
};

template <typename Scalar>
struct VaeLoss {
  Var<Scalar> loss;   // -recon + beta * kl
  Var<Scalar> recon;  // mean Bernoulli log-likelihood, <= 0
  Var<Scalar> kl;     // mean KL(q(z|x) || N(0, I)), >= 0
};

template <typename Scalar>
PosteriorBatch<Scalar> encode(Graph<Scalar>& g, VaeModel<Scalar>& model, Var<Scalar> x);
template <typename Scalar>
PosteriorBatch<Scalar> encode(Graph<Scalar>& g, const VaeModel<Scalar>& model, Var<Scalar> x);

// z = mu + exp(0.5 logvar) * eps; eps is a constant.
template <typename Scalar>
Var<Scalar> reparameterize(const PosteriorBatch<Scalar>& post, const Matrix<Scalar>& eps);

template <typename Scalar>
Reconstruction<Scalar> decode(Graph<Scalar>& g, VaeModel<Scalar>& model, Var<Scalar> z);
template <typename Scalar>
Reconstruction<Scalar> decode(Graph<Scalar>& g, const VaeModel<Scalar>& model, Var<Scalar> z);

template <typename Scalar>
Var<Scalar> kl_term(const PosteriorBatch<Scalar>& post);

// Mean over the batch of sum_p [x log s(l) + (1-x) log(1 - s(l))] = x*l - softplus(l).
template <typename Scalar>
Var<Scalar> recon_loglik(Var<Scalar> x, Var<Scalar> logits);

template <typename Scalar>
VaeLoss<Scalar> vae_loss(Graph<Scalar>& g, VaeModel<Scalar>& model, Var<Scalar> x, const Matrix<Scalar>& eps,
                         double beta = 1.0);

// Graph-free evaluation on a frozen model.
template <typename Scalar>
std::pair<Matrix<Scalar>, Matrix<Scalar>> posterior(const VaeModel<Scalar>& model, const Matrix<Scalar>& x);
template <typename Scalar>
Matrix<Scalar> posterior_mean(const VaeModel<Scalar>& model, const Matrix<Scalar>& x);
template <typename Scalar>
Matrix<Scalar> decode_mean(const VaeModel<Scalar>& model, const Matrix<Scalar>& z);

struct VaeEpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0;
  double recon = 0;  // reconstruction error, -log-likelihood
  double kl = 0;
};

template <typename Scalar>
struct VaeTrainResult {
  VaeModel<Scalar> model;
  std::vector<VaeEpochRecord> log;
};

// Trains on labeled + unlabeled training images; labels are never read.
template <typename Scalar>
VaeTrainResult<Scalar> train_vae(const DatasetBundle& data, const ExperimentConfig& config);

struct ActiveUnits {
  std::vector<double> variance;  // A_u: unbiased variance over the data of the posterior mean
  std::vector<bool> active;      // A_u >= threshold

  std::size_t count() const;
  std::vector<std::size_t> active_dims() const;
};

template <typename Scalar>
ActiveUnits active_units(const VaeModel<Scalar>& model, const Matrix<Scalar>& images, double threshold = 1e-2);

template <typename Scalar>
std::vector<TensorEntry> vae_entries(const VaeModel<Scalar>& model);
template <typename Scalar>
VaeModel<Scalar> vae_from_entries(std::span<const TensorEntry> entries);

}  // namespace stackssl
