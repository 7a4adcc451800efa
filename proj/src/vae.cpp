#include "stackssl/vae.hpp"

#include "stackssl/optim.hpp"

#include <json.hpp>

#include <algorithm>
#include <numeric>
#include <random>

namespace stackssl {

namespace {

template <typename Scalar, typename Model>
PosteriorBatch<Scalar> encode_impl(Graph<Scalar>& g, Model& model, Var<Scalar> x) {
  if (x.shape().size() != 2 || x.shape()[1] != model.arch.input_dim) {
    throw ShapeError("encode: input of shape " + shape_string(x.shape()) + " does not match input width " +
                     std::to_string(model.arch.input_dim));
  }
  auto h = mlp_forward(g, model.encoder, x);
  const std::size_t d = model.arch.latent_dim;
  return {slice_cols(h, 0, d), slice_cols(h, d, d)};
}

template <typename Scalar, typename Model>
Reconstruction<Scalar> decode_impl(Graph<Scalar>& g, Model& model, Var<Scalar> z) {
  if (z.shape().size() != 2 || z.shape()[1] != model.arch.latent_dim) {
    throw ShapeError("decode: latent of shape " + shape_string(z.shape()) + " does not match latent_dim " +
                     std::to_string(model.arch.latent_dim));
  }
  auto logits = mlp_forward(g, model.decoder, z);
  return {logits, sigmoid(logits)};
}

std::string layer_name(const char* stack, std::size_t i, const char* part) {
  return std::string(stack) + "." + std::to_string(i) + "." + part;
}

}  // namespace

template <typename Scalar>
std::vector<Tensor<Scalar>*> VaeModel<Scalar>::parameters() {
  std::vector<Tensor<Scalar>*> out;
  collect_parameters(encoder, out);
  collect_parameters(decoder, out);
  return out;
}

template <typename Scalar>
void VaeModel<Scalar>::set_trainable(bool trainable) {
  stackssl::set_trainable(encoder, trainable);
  stackssl::set_trainable(decoder, trainable);
}

template <typename Scalar>
VaeModel<Scalar> make_vae(const VaeArchitecture& arch, std::uint64_t seed) {
  if (arch.input_dim == 0 || arch.latent_dim == 0) throw ShapeError("VAE needs positive input and latent widths");
  Rng rng = make_rng(seed, 1);
  VaeModel<Scalar> m;
  m.arch = arch;
  m.seed = seed;
  std::vector<std::size_t> enc{arch.input_dim};
  enc.insert(enc.end(), arch.hidden.begin(), arch.hidden.end());
  enc.push_back(2 * arch.latent_dim);
  std::vector<std::size_t> dec{arch.latent_dim};
  dec.insert(dec.end(), arch.hidden.rbegin(), arch.hidden.rend());
  dec.push_back(arch.input_dim);
  m.encoder = make_mlp<Scalar>(enc, rng);
  m.decoder = make_mlp<Scalar>(dec, rng);
  return m;
}

template <typename Scalar>
PosteriorBatch<Scalar> encode(Graph<Scalar>& g, VaeModel<Scalar>& model, Var<Scalar> x) {
  return encode_impl(g, model, x);
}

template <typename Scalar>
PosteriorBatch<Scalar> encode(Graph<Scalar>& g, const VaeModel<Scalar>& model, Var<Scalar> x) {
  return encode_impl(g, model, x);
}

template <typename Scalar>
Var<Scalar> reparameterize(const PosteriorBatch<Scalar>& post, const Matrix<Scalar>& eps) {
  if (post.mu.shape() != post.logvar.shape() ||
      Shape{static_cast<std::size_t>(eps.rows()), static_cast<std::size_t>(eps.cols())} != post.mu.shape()) {
    throw ShapeError("reparameterize: eps of shape [" + std::to_string(eps.rows()) + "x" + std::to_string(eps.cols()) +
                     "] does not match posterior " + shape_string(post.mu.shape()));
  }
  auto& g = post.mu.graph();
  auto sigma = exp(scale(post.logvar, Scalar(0.5)));
  return add(post.mu, mul(sigma, g.constant(eps)));
}

template <typename Scalar>
Reconstruction<Scalar> decode(Graph<Scalar>& g, VaeModel<Scalar>& model, Var<Scalar> z) {
  return decode_impl(g, model, z);
}

template <typename Scalar>
Reconstruction<Scalar> decode(Graph<Scalar>& g, const VaeModel<Scalar>& model, Var<Scalar> z) {
  return decode_impl(g, model, z);
}

template <typename Scalar>
Var<Scalar> kl_term(const PosteriorBatch<Scalar>& post) {
  const auto batch = static_cast<Scalar>(post.mu.shape().front());
  auto terms = add_scalar(sub(add(square(post.mu), exp(post.logvar)), post.logvar), Scalar(-1));
  return scale(sum(terms), Scalar(0.5) / batch);
}

template <typename Scalar>
Var<Scalar> recon_loglik(Var<Scalar> x, Var<Scalar> logits) {
  if (x.shape() != logits.shape()) {
    throw ShapeError("recon_loglik: " + shape_string(x.shape()) + " vs " + shape_string(logits.shape()));
  }
  const auto batch = static_cast<Scalar>(x.shape().front());
  return scale(sum(sub(mul(x, logits), softplus(logits))), Scalar(1) / batch);
}

template <typename Scalar>
VaeLoss<Scalar> vae_loss(Graph<Scalar>& g, VaeModel<Scalar>& model, Var<Scalar> x, const Matrix<Scalar>& eps,
                         double beta) {
  auto post = encode(g, model, x);
  auto z = reparameterize(post, eps);
  auto rec = decode(g, model, z);
  auto recon = recon_loglik(x, rec.logits);
  auto kl = kl_term(post);
  auto loss = add(scale(recon, Scalar(-1)), scale(kl, static_cast<Scalar>(beta)));
  return {loss, recon, kl};
}

template <typename Scalar>
std::pair<Matrix<Scalar>, Matrix<Scalar>> posterior(const VaeModel<Scalar>& model, const Matrix<Scalar>& x) {
  Graph<Scalar> g;
  auto post = encode(g, model, g.constant(x));
  return {post.mu.value().matrix(), post.logvar.value().matrix()};
}

template <typename Scalar>
Matrix<Scalar> posterior_mean(const VaeModel<Scalar>& model, const Matrix<Scalar>& x) {
  return posterior(model, x).first;
}

template <typename Scalar>
Matrix<Scalar> decode_mean(const VaeModel<Scalar>& model, const Matrix<Scalar>& z) {
  Graph<Scalar> g;
  return decode(g, model, g.constant(z)).mean.value().matrix();
}

template <typename Scalar>
VaeTrainResult<Scalar> train_vae(const DatasetBundle& data, const ExperimentConfig& config) {
  auto rows = data.training_indices();
  if (rows.empty()) throw DataError("train_vae: no training images");
  const Matrix<Scalar> images = data.image_rows(rows).template cast<Scalar>();
  const auto n = static_cast<std::size_t>(images.rows());

  VaeArchitecture arch{data.pixel_count(), config.latent_dim, config.encoder_widths};
  VaeTrainResult<Scalar> result{make_vae<Scalar>(arch, config.seed), {}};
  auto& model = result.model;
  model.set_trainable(true);
  auto params = model.parameters();
  AdamState<Scalar> adam(AdamConfig{config.vae_lr});

  Rng rng = make_rng(config.seed, 2);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t d = config.latent_dim;

  for (std::size_t epoch = 1; epoch <= config.vae_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    VaeEpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t bs = std::min(config.batch_size, n - start);
      Matrix<Scalar> x(static_cast<Eigen::Index>(bs), images.cols());
      for (std::size_t r = 0; r < bs; ++r) x.row(static_cast<Eigen::Index>(r)) = images.row(static_cast<Eigen::Index>(order[start + r]));
      Matrix<Scalar> eps(static_cast<Eigen::Index>(bs), static_cast<Eigen::Index>(d));
      for (Eigen::Index i = 0; i < eps.size(); ++i) eps.data()[i] = static_cast<Scalar>(normal(rng));

      for (auto* p : params) p->zero_grad();
      Graph<Scalar> g;
      auto loss = vae_loss(g, model, g.constant(x), eps, config.beta);
      g.backward(loss.loss);
      adam_step<Scalar>(params, adam);

      const double w = static_cast<double>(bs);
      rec.loss += w * static_cast<double>(loss.loss.item());
      rec.recon -= w * static_cast<double>(loss.recon.item());
      rec.kl += w * static_cast<double>(loss.kl.item());
    }
    rec.loss /= static_cast<double>(n);
    rec.recon /= static_cast<double>(n);
    rec.kl /= static_cast<double>(n);
    result.log.push_back(rec);
  }
  for (auto* p : params) p->clear_grad();
  return result;
}

std::size_t ActiveUnits::count() const { return static_cast<std::size_t>(std::count(active.begin(), active.end(), true)); }

std::vector<std::size_t> ActiveUnits::active_dims() const {
  std::vector<std::size_t> out;
  for (std::size_t u = 0; u < active.size(); ++u) {
    if (active[u]) out.push_back(u);
  }
  return out;
}

template <typename Scalar>
ActiveUnits active_units(const VaeModel<Scalar>& model, const Matrix<Scalar>& images, double threshold) {
  if (images.rows() < 2) throw DataError("active_units: need at least two samples for a variance");
  const Matrix<double> mu = posterior_mean(model, images).template cast<double>();
  const Eigen::RowVectorXd mean = mu.colwise().mean();
  ActiveUnits out;
  for (Eigen::Index u = 0; u < mu.cols(); ++u) {
    const double var = (mu.col(u).array() - mean[u]).square().sum() / static_cast<double>(mu.rows() - 1);
    out.variance.push_back(var);
    out.active.push_back(var >= threshold);
  }
  return out;
}

template <typename Scalar>
std::vector<TensorEntry> vae_entries(const VaeModel<Scalar>& model) {
  nlohmann::json meta;
  meta["kind"] = "vae";
  meta["input_dim"] = model.arch.input_dim;
  meta["latent_dim"] = model.arch.latent_dim;
  meta["hidden"] = model.arch.hidden;
  meta["seed"] = model.seed;
  std::vector<TensorEntry> entries{make_text_entry("meta", meta.dump())};
  for (std::size_t i = 0; i < model.encoder.size(); ++i) {
    entries.push_back(make_entry(layer_name("encoder", i, "weight"), model.encoder[i].weight));
    entries.push_back(make_entry(layer_name("encoder", i, "bias"), model.encoder[i].bias));
  }
  for (std::size_t i = 0; i < model.decoder.size(); ++i) {
    entries.push_back(make_entry(layer_name("decoder", i, "weight"), model.decoder[i].weight));
    entries.push_back(make_entry(layer_name("decoder", i, "bias"), model.decoder[i].bias));
  }
  return entries;
}

template <typename Scalar>
VaeModel<Scalar> vae_from_entries(std::span<const TensorEntry> entries) {
  const auto meta = nlohmann::json::parse(entry_text(find_entry(entries, "meta")));
  if (meta.value("kind", "") != "vae") throw std::invalid_argument("checkpoint is not a VAE");
  VaeArchitecture arch{meta.at("input_dim").get<std::size_t>(), meta.at("latent_dim").get<std::size_t>(),
                       meta.at("hidden").get<std::vector<std::size_t>>()};
  auto model = make_vae<Scalar>(arch, meta.at("seed").get<std::uint64_t>());
  auto load = [&](std::vector<Dense<Scalar>>& layers, const char* stack) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      auto w = to_tensor<Scalar>(find_entry(entries, layer_name(stack, i, "weight")));
      auto b = to_tensor<Scalar>(find_entry(entries, layer_name(stack, i, "bias")));
      if (w.shape() != layers[i].weight.shape() || b.shape() != layers[i].bias.shape()) {
        throw ShapeError(std::string("checkpoint layer ") + stack + "." + std::to_string(i) + " has the wrong shape");
      }
      layers[i].weight = std::move(w);
      layers[i].bias = std::move(b);
    }
  };
  load(model.encoder, "encoder");
  load(model.decoder, "decoder");
  return model;
}

#define STACKSSL_INSTANTIATE_VAE(S)                                                                           \
  template struct VaeModel<S>;                                                                                \
  template VaeModel<S> make_vae<S>(const VaeArchitecture&, std::uint64_t);                                    \
  template PosteriorBatch<S> encode<S>(Graph<S>&, VaeModel<S>&, Var<S>);                                      \
  template PosteriorBatch<S> encode<S>(Graph<S>&, const VaeModel<S>&, Var<S>);                                \
  template Var<S> reparameterize<S>(const PosteriorBatch<S>&, const Matrix<S>&);                              \
  template Reconstruction<S> decode<S>(Graph<S>&, VaeModel<S>&, Var<S>);                                      \
  template Reconstruction<S> decode<S>(Graph<S>&, const VaeModel<S>&, Var<S>);                                \
  template Var<S> kl_term<S>(const PosteriorBatch<S>&);                                                       \
  template Var<S> recon_loglik<S>(Var<S>, Var<S>);                                                            \
  template VaeLoss<S> vae_loss<S>(Graph<S>&, VaeModel<S>&, Var<S>, const Matrix<S>&, double);                 \
  template std::pair<Matrix<S>, Matrix<S>> posterior<S>(const VaeModel<S>&, const Matrix<S>&);                \
  template Matrix<S> posterior_mean<S>(const VaeModel<S>&, const Matrix<S>&);                                 \
  template Matrix<S> decode_mean<S>(const VaeModel<S>&, const Matrix<S>&);                                    \
  template VaeTrainResult<S> train_vae<S>(const DatasetBundle&, const ExperimentConfig&);                     \
  template ActiveUnits active_units<S>(const VaeModel<S>&, const Matrix<S>&, double);                         \
  template std::vector<TensorEntry> vae_entries<S>(const VaeModel<S>&);                                       \
  template VaeModel<S> vae_from_entries<S>(std::span<const TensorEntry>);

STACKSSL_INSTANTIATE_VAE(double)
STACKSSL_INSTANTIATE_VAE(float)

}  // namespace stackssl
