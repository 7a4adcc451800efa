#pragma once

// Self-ensembling classifier on top of a frozen VAE embedding, plus the
// image-space baselines that train the encoder architecture end-to-end on
// augmented pixels.
//
// Ensemble predictions come from three sources: a fresh posterior sample
// z ~ q(z|x) per step (or an augmented image), dropout in the classifier, and
// a temporal moving average of past epoch predictions.

#include "stackssl/config.hpp"
#include "stackssl/data.hpp"
#include "stackssl/nn.hpp"
#include "stackssl/tensor.hpp"
#include "stackssl/tensor_io.hpp"
#include "stackssl/vae.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stackssl {

struct RampupSchedule {
  double zeta_max = 10.0;
  std::size_t rampup_epochs = 30;
};

// zeta_max * exp(-5 (1 - min(t, T)/T)^2), with zeta(0) = 0 exactly.
double rampup_weight(std::int64_t epoch, const RampupSchedule& schedule);

// Temporal ensemble targets y~ <- alpha y~ + (1 - alpha) y, one row per training sample.
class EnsembleState {
 public:
  EnsembleState(std::size_t samples, std::size_t labels, double alpha, bool bias_correct = true);

  const Matrix<double>& raw() const { return y_tilde_; }
  double alpha() const { return alpha_; }
  std::size_t epoch() const { return epoch_; }
  bool bias_correct() const { return bias_correct_; }

  // y~ / (1 - alpha^t) when bias correction is on (raw otherwise); zeros before the first update.
  Matrix<double> targets() const;

  void update(const Matrix<double>& predictions, std::span<const std::size_t> indices);

 private:
  Matrix<double> y_tilde_;
  double alpha_;
  std::size_t epoch_ = 0;
  bool bias_correct_;
};

// Updates the listed rows and returns the (corrected) targets of every row.
Matrix<double> ema_update(EnsembleState& state, const Matrix<double>& predictions,
                          std::span<const std::size_t> indices);

// d -> h1 -> h2 -> L with ReLU + dropout after the first two layers.
template <typename Scalar>
struct ClassifierHead {
  std::vector<Dense<Scalar>> layers;
  double dropout = 0.5;

  std::size_t input_dim() const { return layers.front().in_features(); }
  std::size_t label_count() const { return layers.back().out_features(); }
};

template <typename Scalar>
ClassifierHead<Scalar> make_head(std::size_t input_dim, std::size_t h1, std::size_t h2, std::size_t labels,
                                 double dropout, Rng& rng);

template <typename Scalar>
struct ClassifierOutput {
  Var<Scalar> logits;
  Var<Scalar> probs;
};

template <typename Scalar>
ClassifierOutput<Scalar> classifier_forward(Graph<Scalar>& g, ClassifierHead<Scalar>& head, Var<Scalar> z,
                                            bool training, Rng& rng);
template <typename Scalar>
ClassifierOutput<Scalar> classifier_forward(Graph<Scalar>& g, const ClassifierHead<Scalar>& head, Var<Scalar> z,
                                            bool training, Rng& rng);

template <typename Scalar>
struct EnsembleLoss {
  Var<Scalar> loss;
  Var<Scalar> supervised;   // (1/|B|) sum over labeled rows of per-label BCE
  Var<Scalar> consistency;  // (1/|B|) sum over all rows of ||y_p - y~||^2, before the zeta weight
};

// y_true rows of unlabeled samples are ignored; y_target is a constant.
template <typename Scalar>
EnsembleLoss<Scalar> ensemble_loss(const ClassifierOutput<Scalar>& out, const Matrix<double>& y_true,
                                   std::span<const std::uint8_t> labeled_mask, const Matrix<double>& y_target,
                                   double zeta);

enum class EmbedMode { sample, mean };

// z ~ q(z|x) via the reparameterization (sample) or the posterior mean (mean).
template <typename Scalar>
Matrix<Scalar> embed_sample(const VaeModel<Scalar>& vae, const Matrix<Scalar>& x, EmbedMode mode, Rng& rng);

// mu + exp(0.5 logvar) * eps with fresh standard-normal eps.
template <typename Scalar>
Matrix<Scalar> sample_posterior(const Matrix<Scalar>& mu, const Matrix<Scalar>& logvar, Rng& rng);

enum class AugmentMode { noise, affine };

struct AugmentParams {
  double noise_std = 0.15;
  double max_shift = 2.0;          // pixels
  double max_rotation_deg = 10.0;  // degrees
};

// Image in [0,1], row-major width x width. Noise: add N(0, std^2) then clamp to
// [0,1]. Affine: uniform shift and rotation, nearest neighbour, zero fill.
std::vector<double> augment_image(std::span<const double> image, std::size_t width, AugmentMode mode,
                                  const AugmentParams& params, Rng& rng);
std::vector<double> add_gaussian_noise(std::span<const double> image, double std_dev, Rng& rng);
std::vector<double> affine_transform(std::span<const double> image, std::size_t width, double shift_x,
                                     double shift_y, double rotation_deg);

template <typename Scalar>
struct SslModel {
  SslMode mode = SslMode::latent_ensemble;
  std::vector<std::size_t> latent_dims;  // VAE latent columns fed to the head (latent modes)
  std::vector<Dense<Scalar>> trunk;      // image modes: pixels -> encoder widths -> latent_dim
  ClassifierHead<Scalar> head;

  bool uses_vae() const { return trunk.empty(); }
  std::vector<Tensor<Scalar>*> parameters();
};

// The untrained model train_ssl starts from for this config (same seed, same weights).
template <typename Scalar>
SslModel<Scalar> make_ssl_model(const ExperimentConfig& config, std::size_t pixel_count, std::size_t labels,
                                std::span<const std::size_t> latent_dims);

// Evaluation-mode probabilities: posterior means (or clean pixels), dropout off.
template <typename Scalar>
Matrix<double> predict(const SslModel<Scalar>& model, const VaeModel<Scalar>* vae, const Matrix<double>& images);

struct SslEpochRecord {
  std::size_t epoch = 0;
  double loss = 0;
  double supervised = 0;
  double consistency = 0;
  double zeta = 0;
  std::optional<double> val_mean_auroc;

  // {epoch, loss, supervised, consistency, zeta, val_mean_auroc}
  std::string to_json() const;
};

template <typename Scalar>
struct SslTrainResult {
  SslModel<Scalar> model;
  std::vector<SslEpochRecord> log;
};

// Trains config.mode. Latent modes need the frozen VAE; latent_dims selects the
// latent columns to use (empty: all). Unlabeled labels are never read.
template <typename Scalar>
SslTrainResult<Scalar> train_ssl(const VaeModel<Scalar>* vae, const DatasetBundle& data,
                                 const ExperimentConfig& config, std::span<const std::size_t> latent_dims = {});

template <typename Scalar>
std::vector<TensorEntry> ssl_entries(const SslModel<Scalar>& model);
template <typename Scalar>
SslModel<Scalar> ssl_from_entries(std::span<const TensorEntry> entries);

}  // namespace stackssl
