#include "stackssl/analysis.hpp"

#include "stackssl/metrics.hpp"
#include "stackssl/optim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace stackssl {

namespace {

template <typename Scalar>
Matrix<Scalar> as_row(std::span<const double> image, std::size_t expected) {
  if (image.size() != expected) {
    throw ShapeError("image has " + std::to_string(image.size()) + " pixels, model expects " + std::to_string(expected));
  }
  Matrix<Scalar> row(1, static_cast<Eigen::Index>(image.size()));
  for (std::size_t i = 0; i < image.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = static_cast<Scalar>(image[i]);
  return row;
}

template <typename Scalar>
Matrix<double> decode_to_double(const VaeModel<Scalar>& vae, const Matrix<Scalar>& z) {
  return decode_mean<Scalar>(vae, z).template cast<double>();
}

void check_dim(std::size_t dim, std::size_t latent_dim) {
  if (dim >= latent_dim) {
    throw std::out_of_range("latent dim " + std::to_string(dim) + " out of range (latent_dim " +
                            std::to_string(latent_dim) + ")");
  }
}

}  // namespace

std::vector<double> linspace(double lo, double hi, std::size_t steps) {
  if (steps == 0) throw std::invalid_argument("linspace: steps must be positive");
  if (steps == 1) return {lo};
  std::vector<double> out(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
  }
  out.back() = hi;
  return out;
}

template <typename Scalar>
TraversalGrid latent_traverse(const VaeModel<Scalar>& vae, std::span<const double> seed_image, std::size_t dim,
                              double lo, double hi, std::size_t steps) {
  check_dim(dim, vae.arch.latent_dim);
  const Matrix<Scalar> mu = posterior_mean<Scalar>(vae, as_row<Scalar>(seed_image, vae.arch.input_dim));
  TraversalGrid grid;
  grid.values = linspace(lo, hi, steps);
  Matrix<Scalar> z = mu.replicate(static_cast<Eigen::Index>(steps), 1);
  for (std::size_t i = 0; i < steps; ++i) {
    z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(dim)) = static_cast<Scalar>(grid.values[i]);
  }
  grid.images = decode_to_double(vae, z);
  return grid;
}

template <typename Scalar>
FeatureTransfer feature_transfer(const VaeModel<Scalar>& vae, std::span<const double> image_a,
                                 std::span<const double> image_b, std::span<const std::size_t> dims) {
  if (dims.empty()) throw std::invalid_argument("feature_transfer: dims must be nonempty");
  for (std::size_t d : dims) check_dim(d, vae.arch.latent_dim);
  Matrix<Scalar> x(2, static_cast<Eigen::Index>(vae.arch.input_dim));
  x.row(0) = as_row<Scalar>(image_a, vae.arch.input_dim);
  x.row(1) = as_row<Scalar>(image_b, vae.arch.input_dim);
  const Matrix<Scalar> mu = posterior_mean<Scalar>(vae, x);
  Matrix<Scalar> z(4, mu.cols());
  z.row(0) = mu.row(0);
  z.row(1) = mu.row(1);
  z.row(2) = mu.row(0);
  z.row(3) = mu.row(1);
  for (std::size_t d : dims) {
    const auto c = static_cast<Eigen::Index>(d);
    z(2, c) = mu(1, c);
    z(3, c) = mu(0, c);
  }
  const Matrix<double> out = decode_to_double(vae, z);
  return {out.row(0), out.row(1), out.row(2), out.row(3)};
}

ProbeResult single_dim_probe(const Matrix<double>& features, std::span<const double> labels, std::size_t dim,
                             const ProbeCounts& counts, std::uint64_t seed, std::size_t steps, double lr) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw ShapeError("single_dim_probe: features and labels differ in length");
  }
  if (dim >= static_cast<std::size_t>(features.cols())) throw std::out_of_range("single_dim_probe: dim out of range");
  const std::size_t total = counts.train + counts.validation + counts.test;
  if (counts.train == 0 || counts.test == 0 || total > labels.size()) {
    throw std::invalid_argument("single_dim_probe: need " + std::to_string(total) + " rows, have " +
                                std::to_string(labels.size()));
  }
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(seed, 5);
  std::shuffle(order.begin(), order.end(), rng);

  auto take = [&](std::size_t begin, std::size_t n) {
    Matrix<double> x(static_cast<Eigen::Index>(n), 1);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x(static_cast<Eigen::Index>(i), 0) = features(static_cast<Eigen::Index>(order[begin + i]),
                                                    static_cast<Eigen::Index>(dim));
      y[i] = labels[order[begin + i]];
    }
    return std::pair{x, y};
  };
  auto [x_train, y_train] = take(0, counts.train);
  auto [x_val, y_val] = take(counts.train, counts.validation);
  auto [x_test, y_test] = take(counts.train + counts.validation, counts.test);
  for (const auto* y : {&y_train, &y_test}) {
    const auto pos = std::count(y->begin(), y->end(), 1.0);
    if (pos == 0 || pos == static_cast<std::ptrdiff_t>(y->size())) {
      throw DegenerateLabels("single_dim_probe: degenerate label column in probe subset");
    }
  }

  const double center = x_train.mean();
  const double var = (x_train.array() - center).square().sum() / static_cast<double>(x_train.rows());
  const double scale_inv = var > 0 ? 1.0 / std::sqrt(var) : 0.0;
  auto standardize = [&](Matrix<double>& x) { x = ((x.array() - center) * scale_inv).matrix(); };
  standardize(x_train);
  standardize(x_val);
  standardize(x_test);

  Tensor<double> w = Tensor<double>::zeros({1, 1});
  Tensor<double> b = Tensor<double>::zeros({1, 1});
  w.set_requires_grad(true);
  b.set_requires_grad(true);
  std::vector<Tensor<double>*> params{&w, &b};
  AdamState<double> adam(AdamConfig{lr});
  Matrix<double> y_col(static_cast<Eigen::Index>(y_train.size()), 1);
  for (std::size_t i = 0; i < y_train.size(); ++i) y_col(static_cast<Eigen::Index>(i), 0) = y_train[i];
  for (std::size_t s = 0; s < steps; ++s) {
    Graph<double> g;
    auto logits = add_row(matmul(g.constant(x_train), g.param(w)), g.param(b));
    auto loss = mean(sub(softplus(logits), mul(g.constant(y_col), logits)));
    for (auto* p : params) p->zero_grad();
    g.backward(loss);
    adam_step<double>(params, adam);
  }

  ProbeResult result;
  result.weight = w.item();
  result.bias = b.item();
  auto score = [&](const Matrix<double>& x, const std::vector<double>& y) {
    const Eigen::VectorXd s = ((x.array() * result.weight + result.bias).matrix()).col(0);
    return auroc(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())), y);
  };
  result.test_auroc = score(x_test, y_test);
  if (!y_val.empty()) {
    try {
      result.validation_auroc = score(x_val, y_val);
    } catch (const DegenerateLabels&) {
      result.validation_auroc = 0.5;
    }
  }
  return result;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("pearson: need two equal-length series");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0;
  double sxx = 0;
  double syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> abs_correlations(const Matrix<double>& features, std::span<const double> labels) {
  std::vector<double> out;
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    const Eigen::VectorXd col = features.col(c);
    out.push_back(std::abs(pearson(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())), labels)));
  }
  return out;
}

template <typename Scalar>
double latent_sensitivity(const VaeModel<Scalar>& vae, const SslModel<Scalar>& model, const Matrix<double>& images,
                          std::size_t n_pairs, Rng& rng) {
  if (!model.uses_vae()) throw std::invalid_argument("latent_sensitivity: classifier does not read the latent space");
  if (n_pairs == 0) throw std::invalid_argument("latent_sensitivity: n_pairs must be >= 1");
  auto [mu_all, logvar_all] = posterior<Scalar>(vae, images.template cast<Scalar>());
  Matrix<Scalar> mu(mu_all.rows(), static_cast<Eigen::Index>(model.latent_dims.size()));
  Matrix<Scalar> logvar(mu.rows(), mu.cols());
  for (std::size_t c = 0; c < model.latent_dims.size(); ++c) {
    mu.col(static_cast<Eigen::Index>(c)) = mu_all.col(static_cast<Eigen::Index>(model.latent_dims[c]));
    logvar.col(static_cast<Eigen::Index>(c)) = logvar_all.col(static_cast<Eigen::Index>(model.latent_dims[c]));
  }
  auto head_probs = [&](const Matrix<Scalar>& z) {
    Graph<Scalar> g;
    Rng unused(0);
    return classifier_forward(g, model.head, g.constant(z), false, unused).probs.value().matrix().template cast<double>().eval();
  };
  double total = 0;
  for (std::size_t p = 0; p < n_pairs; ++p) {
    const Matrix<double> f1 = head_probs(sample_posterior(mu, logvar, rng));
    const Matrix<double> f2 = head_probs(sample_posterior(mu, logvar, rng));
    total += (f1 - f2).rowwise().squaredNorm().sum();
  }
  return total / (static_cast<double>(n_pairs) * static_cast<double>(images.rows()));
}

std::string encode_pgm_grid(const Matrix<double>& images, std::size_t width, std::size_t columns) {
  if (columns == 0 || images.rows() == 0) throw std::invalid_argument("pgm grid: nothing to draw");
  if (static_cast<std::size_t>(images.cols()) != width * width) throw ShapeError("pgm grid: images are not width x width");
  const std::size_t n = static_cast<std::size_t>(images.rows());
  const std::size_t cols = std::min(columns, n);
  const std::size_t rows = (n + cols - 1) / cols;
  const std::size_t gw = cols * width;
  const std::size_t gh = rows * width;
  std::string out = "P5\n" + std::to_string(gw) + " " + std::to_string(gh) + "\n255\n";
  std::string pixels(gw * gh, '\0');
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t oy = (k / cols) * width;
    const std::size_t ox = (k % cols) * width;
    for (std::size_t i = 0; i < width; ++i) {
      for (std::size_t j = 0; j < width; ++j) {
        const double v = std::clamp(images(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i * width + j)), 0.0, 1.0);
        pixels[(oy + i) * gw + ox + j] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
      }
    }
  }
  return out + pixels;
}

void write_pgm_grid(const std::filesystem::path& path, const Matrix<double>& images, std::size_t width,
                    std::size_t columns) {
  const std::string bytes = encode_pgm_grid(images, width, columns);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

#define STACKSSL_INSTANTIATE_ANALYSIS(S)                                                                          \
  template TraversalGrid latent_traverse<S>(const VaeModel<S>&, std::span<const double>, std::size_t, double,     \
                                            double, std::size_t);                                                 \
  template FeatureTransfer feature_transfer<S>(const VaeModel<S>&, std::span<const double>,                       \
                                               std::span<const double>, std::span<const std::size_t>);            \
  template double latent_sensitivity<S>(const VaeModel<S>&, const SslModel<S>&, const Matrix<double>&,            \
                                        std::size_t, Rng&);

STACKSSL_INSTANTIATE_ANALYSIS(double)
STACKSSL_INSTANTIATE_ANALYSIS(float)

}  // namespace stackssl
