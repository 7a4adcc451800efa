#include "stackssl/ssl.hpp"

#include "stackssl/metrics.hpp"
#include "stackssl/optim.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace stackssl {

namespace {

constexpr double kRampupSharpness = 5.0;

template <typename Scalar, typename Head>
ClassifierOutput<Scalar> head_forward(Graph<Scalar>& g, Head& head, Var<Scalar> z, bool training, Rng& rng) {
  if (z.shape().size() != 2 || z.shape()[1] != head.input_dim()) {
    throw ShapeError("classifier: input of shape " + shape_string(z.shape()) + " does not match width " +
                     std::to_string(head.input_dim()));
  }
  auto h = z;
  for (std::size_t i = 0; i < head.layers.size(); ++i) {
    h = dense_forward(g, head.layers[i], h);
    if (i + 1 < head.layers.size()) h = dropout(relu(h), head.dropout, rng, training);
  }
  return {h, sigmoid(h)};
}

std::string layer_name(const char* stack, std::size_t i, const char* part) {
  return std::string(stack) + "." + std::to_string(i) + "." + part;
}

Matrix<double> select_cols(const Matrix<double>& m, std::span<const std::size_t> cols) {
  Matrix<double> out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = m.col(static_cast<Eigen::Index>(cols[c]));
  return out;
}

// Batches over [0, n_labeled) labeled rows and [n_labeled, n) unlabeled rows,
// with labeled rows spread evenly so every batch holds at least one when any exist.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n_labeled, std::size_t n, std::size_t batch_size,
                                                   Rng& rng) {
  std::vector<std::size_t> lab(n_labeled);
  std::iota(lab.begin(), lab.end(), std::size_t{0});
  std::vector<std::size_t> unl(n - n_labeled);
  std::iota(unl.begin(), unl.end(), n_labeled);
  std::shuffle(lab.begin(), lab.end(), rng);
  std::shuffle(unl.begin(), unl.end(), rng);

  const std::size_t nb = (n + batch_size - 1) / batch_size;
  std::vector<std::vector<std::size_t>> batches(nb);
  for (std::size_t i = 0; i < lab.size(); ++i) batches[i % nb].push_back(lab[i]);
  std::size_t u = 0;
  for (std::size_t k = 0; k < nb; ++k) {
    const std::size_t target = n / nb + (k < n % nb ? 1 : 0);
    while (batches[k].size() < target && u < unl.size()) batches[k].push_back(unl[u++]);
  }
  for (std::size_t k = 0; u < unl.size(); k = (k + 1) % nb) batches[k].push_back(unl[u++]);
  if (n_labeled > 0) {
    std::uniform_int_distribution<std::size_t> pick(0, n_labeled - 1);
    for (auto& b : batches) {
      if (std::none_of(b.begin(), b.end(), [n_labeled](std::size_t i) { return i < n_labeled; })) b.push_back(pick(rng));
    }
  }
  return batches;
}

}  // namespace

double rampup_weight(std::int64_t epoch, const RampupSchedule& schedule) {
  if (epoch < 0) throw std::invalid_argument("rampup_weight: negative epoch");
  if (schedule.rampup_epochs == 0) throw std::invalid_argument("rampup_weight: rampup_epochs must be positive");
  if (epoch == 0) return 0.0;
  const auto T = static_cast<double>(schedule.rampup_epochs);
  const double progress = std::min(static_cast<double>(epoch), T) / T;
  const double gap = 1.0 - progress;
  return schedule.zeta_max * std::exp(-kRampupSharpness * gap * gap);
}

EnsembleState::EnsembleState(std::size_t samples, std::size_t labels, double alpha, bool bias_correct)
    : y_tilde_(Matrix<double>::Zero(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(labels))),
      alpha_(alpha),
      bias_correct_(bias_correct) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in [0,1)");
}

Matrix<double> EnsembleState::targets() const {
  if (epoch_ == 0 || !bias_correct_) return y_tilde_;
  return y_tilde_ / (1.0 - std::pow(alpha_, static_cast<double>(epoch_)));
}

void EnsembleState::update(const Matrix<double>& predictions, std::span<const std::size_t> indices) {
  if (static_cast<std::size_t>(predictions.rows()) != indices.size() || predictions.cols() != y_tilde_.cols()) {
    throw ShapeError("ema_update: predictions do not match indices/labels");
  }
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= static_cast<std::size_t>(y_tilde_.rows())) {
      throw std::out_of_range("ema_update: index " + std::to_string(indices[r]) + " out of range");
    }
  }
  for (std::size_t r = 0; r < indices.size(); ++r) {
    auto row = y_tilde_.row(static_cast<Eigen::Index>(indices[r]));
    row = alpha_ * row + (1.0 - alpha_) * predictions.row(static_cast<Eigen::Index>(r));
  }
  ++epoch_;
}

Matrix<double> ema_update(EnsembleState& state, const Matrix<double>& predictions,
                          std::span<const std::size_t> indices) {
  state.update(predictions, indices);
  return state.targets();
}

template <typename Scalar>
ClassifierHead<Scalar> make_head(std::size_t input_dim, std::size_t h1, std::size_t h2, std::size_t labels,
                                 double dropout_p, Rng& rng) {
  ClassifierHead<Scalar> head;
  head.layers = make_mlp<Scalar>({input_dim, h1, h2, labels}, rng);
  head.dropout = dropout_p;
  return head;
}

template <typename Scalar>
ClassifierOutput<Scalar> classifier_forward(Graph<Scalar>& g, ClassifierHead<Scalar>& head, Var<Scalar> z,
                                            bool training, Rng& rng) {
  return head_forward(g, head, z, training, rng);
}

template <typename Scalar>
ClassifierOutput<Scalar> classifier_forward(Graph<Scalar>& g, const ClassifierHead<Scalar>& head, Var<Scalar> z,
                                            bool training, Rng& rng) {
  return head_forward(g, head, z, training, rng);
}

template <typename Scalar>
EnsembleLoss<Scalar> ensemble_loss(const ClassifierOutput<Scalar>& out, const Matrix<double>& y_true,
                                   std::span<const std::uint8_t> labeled_mask, const Matrix<double>& y_target,
                                   double zeta) {
  auto& g = out.logits.graph();
  const auto B = out.logits.value().rows();
  const auto L = out.logits.value().cols();
  if (y_true.rows() != B || y_true.cols() != L || y_target.rows() != B || y_target.cols() != L ||
      labeled_mask.size() != static_cast<std::size_t>(B)) {
    throw ShapeError("ensemble_loss: targets or mask do not match predictions " + shape_string(out.logits.shape()));
  }
  Matrix<Scalar> mask(B, L);
  Matrix<Scalar> truth(B, L);
  for (Eigen::Index n = 0; n < B; ++n) {
    const bool labeled = labeled_mask[static_cast<std::size_t>(n)] != 0;
    mask.row(n).setConstant(labeled ? Scalar(1) : Scalar(0));
    if (labeled) {
      truth.row(n) = y_true.row(n).template cast<Scalar>();
    } else {
      truth.row(n).setZero();
    }
  }
  const Scalar inv_batch = Scalar(1) / static_cast<Scalar>(B);
  // BCE from logits: softplus(l) - y l
  auto bce = sub(softplus(out.logits), mul(g.constant(truth), out.logits));
  auto supervised = scale(sum(mul(g.constant(mask), bce)), inv_batch);
  auto diff = sub(out.probs, g.constant(y_target.template cast<Scalar>()));
  auto consistency = scale(sum(square(diff)), inv_batch);
  auto loss = add(supervised, scale(consistency, static_cast<Scalar>(zeta)));
  return {loss, supervised, consistency};
}

template <typename Scalar>
Matrix<Scalar> sample_posterior(const Matrix<Scalar>& mu, const Matrix<Scalar>& logvar, Rng& rng) {
  if (mu.rows() != logvar.rows() || mu.cols() != logvar.cols()) throw ShapeError("sample_posterior: shape mismatch");
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix<Scalar> z(mu.rows(), mu.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const Scalar eps = static_cast<Scalar>(normal(rng));
    z.data()[i] = mu.data()[i] + std::exp(Scalar(0.5) * logvar.data()[i]) * eps;
  }
  return z;
}

template <typename Scalar>
Matrix<Scalar> embed_sample(const VaeModel<Scalar>& vae, const Matrix<Scalar>& x, EmbedMode mode, Rng& rng) {
  auto [mu, logvar] = posterior(vae, x);
  if (mode == EmbedMode::mean) return mu;
  return sample_posterior(mu, logvar, rng);
}

std::vector<double> add_gaussian_noise(std::span<const double> image, double std_dev, Rng& rng) {
  if (!(std_dev >= 0)) throw std::invalid_argument("noise std must be >= 0");
  std::vector<double> out(image.begin(), image.end());
  if (std_dev == 0) return out;
  std::normal_distribution<double> normal(0.0, std_dev);
  for (auto& v : out) v += normal(rng);
  return out;
}

std::vector<double> affine_transform(std::span<const double> image, std::size_t width, double shift_x,
                                     double shift_y, double rotation_deg) {
  if (image.size() != width * width) throw ShapeError("affine_transform: image is not width x width");
  const double theta = rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double center = (static_cast<double>(width) - 1.0) / 2.0;
  const auto w = static_cast<long>(width);
  std::vector<double> out(image.size(), 0.0);
  // Inverse map each output pixel to its nearest source pixel.
  for (long i = 0; i < w; ++i) {
    for (long j = 0; j < w; ++j) {
      const double y = static_cast<double>(i) - shift_y - center;
      const double x = static_cast<double>(j) - shift_x - center;
      const double src_x = c * x + s * y + center;
      const double src_y = -s * x + c * y + center;
      const long si = std::lround(src_y);
      const long sj = std::lround(src_x);
      if (si >= 0 && si < w && sj >= 0 && sj < w) {
        out[static_cast<std::size_t>(i * w + j)] = image[static_cast<std::size_t>(si * w + sj)];
      }
    }
  }
  return out;
}

std::vector<double> augment_image(std::span<const double> image, std::size_t width, AugmentMode mode,
                                  const AugmentParams& params, Rng& rng) {
  if (mode == AugmentMode::noise) {
    auto out = add_gaussian_noise(image, params.noise_std, rng);
    for (auto& v : out) v = std::clamp(v, 0.0, 1.0);
    return out;
  }
  if (params.max_shift < 0 || params.max_rotation_deg < 0) throw std::invalid_argument("affine limits must be >= 0");
  std::uniform_real_distribution<double> shift(-params.max_shift, params.max_shift);
  std::uniform_real_distribution<double> rot(-params.max_rotation_deg, params.max_rotation_deg);
  const double dx = shift(rng);
  const double dy = shift(rng);
  const double angle = rot(rng);
  return affine_transform(image, width, dx, dy, angle);
}

template <typename Scalar>
std::vector<Tensor<Scalar>*> SslModel<Scalar>::parameters() {
  std::vector<Tensor<Scalar>*> out;
  collect_parameters(trunk, out);
  collect_parameters(head.layers, out);
  return out;
}

template <typename Scalar>
SslModel<Scalar> make_ssl_model(const ExperimentConfig& config, std::size_t pixel_count, std::size_t labels,
                                std::span<const std::size_t> latent_dims) {
  Rng rng = make_rng(config.seed, 3);
  SslModel<Scalar> model;
  model.mode = config.mode;
  const bool image_mode =
      config.mode == SslMode::image_noise_ensemble || config.mode == SslMode::image_affine_ensemble;
  if (image_mode) {
    std::vector<std::size_t> widths{pixel_count};
    widths.insert(widths.end(), config.encoder_widths.begin(), config.encoder_widths.end());
    widths.push_back(config.latent_dim);
    model.trunk = make_mlp<Scalar>(widths, rng);
  } else {
    if (latent_dims.empty()) {
      model.latent_dims.resize(config.latent_dim);
      std::iota(model.latent_dims.begin(), model.latent_dims.end(), std::size_t{0});
    } else {
      model.latent_dims.assign(latent_dims.begin(), latent_dims.end());
    }
  }
  const std::size_t in = image_mode ? config.latent_dim : model.latent_dims.size();
  model.head = make_head<Scalar>(in, config.head_widths.at(0), config.head_widths.at(1), labels, config.dropout, rng);
  return model;
}

template <typename Scalar>
Matrix<double> predict(const SslModel<Scalar>& model, const VaeModel<Scalar>* vae, const Matrix<double>& images) {
  Graph<Scalar> g;
  Var<Scalar> h;
  if (model.uses_vae()) {
    if (vae == nullptr) throw std::invalid_argument("predict: latent model needs its VAE");
    const Matrix<double> mu = posterior_mean<Scalar>(*vae, images.template cast<Scalar>()).template cast<double>();
    h = g.constant(select_cols(mu, model.latent_dims));
  } else {
    h = mlp_forward(g, model.trunk, g.constant(images));
  }
  Rng unused(0);
  return classifier_forward(g, model.head, h, false, unused).probs.value().matrix().template cast<double>();
}

std::string SslEpochRecord::to_json() const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["loss"] = loss;
  j["supervised"] = supervised;
  j["consistency"] = consistency;
  j["zeta"] = zeta;
  j["val_mean_auroc"] = val_mean_auroc ? nlohmann::ordered_json(*val_mean_auroc) : nlohmann::ordered_json(nullptr);
  return j.dump();
}

template <typename Scalar>
SslTrainResult<Scalar> train_ssl(const VaeModel<Scalar>* vae, const DatasetBundle& data,
                                 const ExperimentConfig& config, std::span<const std::size_t> latent_dims) {
  const SslMode mode = config.mode;
  const bool image_mode = mode == SslMode::image_noise_ensemble || mode == SslMode::image_affine_ensemble;
  const bool ensemble = mode != SslMode::embedding_only;
  if (!image_mode && vae == nullptr) throw std::invalid_argument("train_ssl: mode " + to_string(mode) + " needs a VAE");
  if (!image_mode && vae->arch.input_dim != data.pixel_count()) {
    throw ShapeError("train_ssl: VAE input width does not match the data");
  }
  for (std::size_t d : latent_dims) {
    if (!image_mode && d >= vae->arch.latent_dim) throw std::out_of_range("train_ssl: latent dim out of range");
  }

  const auto labeled = data.indices(Split::labeled_train);
  if (labeled.empty() && mode == SslMode::embedding_only) {
    throw std::invalid_argument("train_ssl: no supervised signal (no labeled samples)");
  }
  std::vector<std::size_t> rows = labeled;
  if (ensemble) {
    const auto unl = data.indices(Split::unlabeled_train);
    rows.insert(rows.end(), unl.begin(), unl.end());
  }
  if (rows.empty()) throw std::invalid_argument("train_ssl: no training samples");
  const std::size_t n = rows.size();
  const std::size_t n_lab = labeled.size();
  const std::size_t L = data.label_count();

  Matrix<double> y_true = Matrix<double>::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(L));
  y_true.topRows(static_cast<Eigen::Index>(n_lab)) = data.label_rows(labeled);
  const Matrix<double> images = data.image_rows(rows);

  SslTrainResult<Scalar> result{make_ssl_model<Scalar>(config, data.pixel_count(), L, latent_dims), {}};
  auto& model = result.model;
  auto params = model.parameters();
  AdamState<Scalar> adam(AdamConfig{config.lr});

  Matrix<Scalar> mu;
  Matrix<Scalar> logvar;
  if (!image_mode) {
    auto post = posterior<Scalar>(*vae, images.template cast<Scalar>());
    Matrix<double> m = post.first.template cast<double>();
    Matrix<double> lv = post.second.template cast<double>();
    mu = select_cols(m, model.latent_dims).template cast<Scalar>();
    logvar = select_cols(lv, model.latent_dims).template cast<Scalar>();
  }

  const auto val_rows = data.indices(Split::validation);
  const Matrix<double> val_images = data.image_rows(val_rows);
  const Matrix<double> val_labels = data.label_rows(val_rows);

  EnsembleState state(n, L, config.alpha, config.bias_correct);
  const RampupSchedule schedule{config.zeta_max, config.rampup_epochs};
  const AugmentParams aug{config.noise_std, static_cast<double>(config.effective_max_shift()), config.max_rotation};
  Rng rng = make_rng(config.seed, 4);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < config.ssl_epochs; ++epoch) {
    const double zeta = ensemble ? rampup_weight(static_cast<std::int64_t>(epoch), schedule) : 0.0;
    const Matrix<double> targets = state.targets();
    Matrix<double> epoch_preds = Matrix<double>::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(L));
    SslEpochRecord rec;
    rec.epoch = epoch;
    rec.zeta = zeta;
    std::size_t seen = 0;

    for (const auto& batch : make_batches(n_lab, n, config.batch_size, rng)) {
      const auto B = static_cast<Eigen::Index>(batch.size());
      Matrix<double> yt(B, static_cast<Eigen::Index>(L));
      Matrix<double> tg(B, static_cast<Eigen::Index>(L));
      std::vector<std::uint8_t> mask(batch.size());
      for (Eigen::Index r = 0; r < B; ++r) {
        const std::size_t i = batch[static_cast<std::size_t>(r)];
        yt.row(r) = y_true.row(static_cast<Eigen::Index>(i));
        tg.row(r) = targets.row(static_cast<Eigen::Index>(i));
        mask[static_cast<std::size_t>(r)] = i < n_lab ? 1 : 0;
      }

      Graph<Scalar> g;
      Var<Scalar> h;
      if (image_mode) {
        const auto amode = mode == SslMode::image_noise_ensemble ? AugmentMode::noise : AugmentMode::affine;
        Matrix<Scalar> x(B, images.cols());
        for (Eigen::Index r = 0; r < B; ++r) {
          const Eigen::RowVectorXd src = images.row(static_cast<Eigen::Index>(batch[static_cast<std::size_t>(r)]));
          const auto out = augment_image(std::span<const double>(src.data(), static_cast<std::size_t>(src.size())),
                                         data.width, amode, aug, rng);
          for (Eigen::Index p = 0; p < x.cols(); ++p) x(r, p) = static_cast<Scalar>(out[static_cast<std::size_t>(p)]);
        }
        h = mlp_forward(g, model.trunk, g.constant(x));
      } else {
        Matrix<Scalar> bm(B, mu.cols());
        Matrix<Scalar> bl(B, mu.cols());
        for (Eigen::Index r = 0; r < B; ++r) {
          bm.row(r) = mu.row(static_cast<Eigen::Index>(batch[static_cast<std::size_t>(r)]));
          bl.row(r) = logvar.row(static_cast<Eigen::Index>(batch[static_cast<std::size_t>(r)]));
        }
        h = g.constant(mode == SslMode::latent_ensemble ? sample_posterior(bm, bl, rng) : bm);
      }
      auto out = classifier_forward(g, model.head, h, true, rng);
      auto loss = ensemble_loss(out, yt, mask, tg, zeta);
      for (auto* p : params) p->zero_grad();
      g.backward(loss.loss);
      adam_step<Scalar>(params, adam);

      const auto& probs = out.probs.value();
      for (Eigen::Index r = 0; r < B; ++r) {
        epoch_preds.row(static_cast<Eigen::Index>(batch[static_cast<std::size_t>(r)])) =
            probs.matrix().row(r).template cast<double>();
      }
      const double w = static_cast<double>(B);
      rec.loss += w * static_cast<double>(loss.loss.item());
      rec.supervised += w * static_cast<double>(loss.supervised.item());
      rec.consistency += w * static_cast<double>(loss.consistency.item());
      seen += batch.size();
    }
    rec.loss /= static_cast<double>(seen);
    rec.supervised /= static_cast<double>(seen);
    rec.consistency /= static_cast<double>(seen);

    if (ensemble) state.update(epoch_preds, all);
    if (val_rows.size() > 1) {
      try {
        rec.val_mean_auroc = mean_auroc(predict(model, vae, val_images), val_labels).mean;
      } catch (const DegenerateLabels&) {
        rec.val_mean_auroc.reset();
      }
    }
    result.log.push_back(rec);
  }
  for (auto* p : params) p->clear_grad();
  return result;
}

template <typename Scalar>
std::vector<TensorEntry> ssl_entries(const SslModel<Scalar>& model) {
  nlohmann::json meta;
  meta["kind"] = "ssl";
  meta["mode"] = to_string(model.mode);
  meta["latent_dims"] = model.latent_dims;
  meta["dropout"] = model.head.dropout;
  std::vector<std::vector<std::size_t>> trunk_shapes;
  for (const auto& l : model.trunk) trunk_shapes.push_back({l.in_features(), l.out_features()});
  std::vector<std::vector<std::size_t>> head_shapes;
  for (const auto& l : model.head.layers) head_shapes.push_back({l.in_features(), l.out_features()});
  meta["trunk"] = trunk_shapes;
  meta["head"] = head_shapes;
  std::vector<TensorEntry> entries{make_text_entry("meta", meta.dump())};
  for (std::size_t i = 0; i < model.trunk.size(); ++i) {
    entries.push_back(make_entry(layer_name("trunk", i, "weight"), model.trunk[i].weight));
    entries.push_back(make_entry(layer_name("trunk", i, "bias"), model.trunk[i].bias));
  }
  for (std::size_t i = 0; i < model.head.layers.size(); ++i) {
    entries.push_back(make_entry(layer_name("head", i, "weight"), model.head.layers[i].weight));
    entries.push_back(make_entry(layer_name("head", i, "bias"), model.head.layers[i].bias));
  }
  return entries;
}

template <typename Scalar>
SslModel<Scalar> ssl_from_entries(std::span<const TensorEntry> entries) {
  const auto meta = nlohmann::json::parse(entry_text(find_entry(entries, "meta")));
  if (meta.value("kind", "") != "ssl") throw std::invalid_argument("checkpoint is not a classifier");
  SslModel<Scalar> model;
  model.mode = parse_mode(meta.at("mode").get<std::string>());
  model.latent_dims = meta.at("latent_dims").get<std::vector<std::size_t>>();
  model.head.dropout = meta.at("dropout").get<double>();
  auto load = [&](std::vector<Dense<Scalar>>& layers, const char* stack) {
    const auto shapes = meta.at(stack).get<std::vector<std::vector<std::size_t>>>();
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      Dense<Scalar> layer{to_tensor<Scalar>(find_entry(entries, layer_name(stack, i, "weight"))),
                          to_tensor<Scalar>(find_entry(entries, layer_name(stack, i, "bias")))};
      if (layer.weight.shape() != Shape{shapes[i][0], shapes[i][1]} || layer.bias.shape() != Shape{1, shapes[i][1]}) {
        throw ShapeError(std::string("checkpoint layer ") + stack + "." + std::to_string(i) + " has the wrong shape");
      }
      layers.push_back(std::move(layer));
    }
  };
  load(model.trunk, "trunk");
  load(model.head.layers, "head");
  if (model.head.layers.empty()) throw std::invalid_argument("classifier checkpoint has no head layers");
  return model;
}

#define STACKSSL_INSTANTIATE_SSL(S)                                                                                  \
  template struct SslModel<S>;                                                                                       \
  template ClassifierHead<S> make_head<S>(std::size_t, std::size_t, std::size_t, std::size_t, double, Rng&);         \
  template ClassifierOutput<S> classifier_forward<S>(Graph<S>&, ClassifierHead<S>&, Var<S>, bool, Rng&);             \
  template ClassifierOutput<S> classifier_forward<S>(Graph<S>&, const ClassifierHead<S>&, Var<S>, bool, Rng&);       \
  template EnsembleLoss<S> ensemble_loss<S>(const ClassifierOutput<S>&, const Matrix<double>&,                       \
                                            std::span<const std::uint8_t>, const Matrix<double>&, double);           \
  template Matrix<S> sample_posterior<S>(const Matrix<S>&, const Matrix<S>&, Rng&);                                  \
  template Matrix<S> embed_sample<S>(const VaeModel<S>&, const Matrix<S>&, EmbedMode, Rng&);                         \
  template SslModel<S> make_ssl_model<S>(const ExperimentConfig&, std::size_t, std::size_t,                          \
                                         std::span<const std::size_t>);                                              \
  template Matrix<double> predict<S>(const SslModel<S>&, const VaeModel<S>*, const Matrix<double>&);                 \
  template SslTrainResult<S> train_ssl<S>(const VaeModel<S>*, const DatasetBundle&, const ExperimentConfig&,         \
                                          std::span<const std::size_t>);                                             \
  template std::vector<TensorEntry> ssl_entries<S>(const SslModel<S>&);                                              \
  template SslModel<S> ssl_from_entries<S>(std::span<const TensorEntry>);

STACKSSL_INSTANTIATE_SSL(double)
STACKSSL_INSTANTIATE_SSL(float)

}  // namespace stackssl
