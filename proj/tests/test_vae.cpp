#include "stackssl/data.hpp"
#include "stackssl/gradcheck.hpp"
#include "stackssl/vae.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace stackssl;

namespace {

DatasetBundle tiny_bundle(std::size_t n, std::size_t width, std::uint64_t seed) {
  return generate_synthetic(FactorSpec::default_spec(), n, width, seed);
}

ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.latent_dim = 3;
  c.encoder_widths = {16, 8};
  c.vae_epochs = 2;
  c.batch_size = 16;
  c.vae_lr = 1e-3;
  return c;
}

// Monte-Carlo estimate of E_q[log q(z) - log p(z)] for one diagonal Gaussian.
double mc_kl(const std::vector<double>& mu, const std::vector<double>& logvar, std::size_t samples, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  double total = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const double eps = normal(rng);
      const double z = mu[i] + std::exp(0.5 * logvar[i]) * eps;
      const double log_q = -0.5 * (std::log(2 * std::numbers::pi) + logvar[i] + eps * eps);
      const double log_p = -0.5 * (std::log(2 * std::numbers::pi) + z * z);
      total += log_q - log_p;
    }
  }
  return total / static_cast<double>(samples);
}

}  // namespace

TEST_CASE("kl_term") {
  Graph<double> g;
  SUBCASE("zero posterior has zero KL") {
    PosteriorBatch<double> post{g.constant(Matrix<double>::Zero(3, 4)), g.constant(Matrix<double>::Zero(3, 4))};
    CHECK(kl_term(post).item() == 0.0);
  }
  SUBCASE("mu = 1, logvar = 0 gives 0.5 per dim") {
    PosteriorBatch<double> post{g.constant(Matrix<double>::Ones(1, 2)), g.constant(Matrix<double>::Zero(1, 2))};
    CHECK(kl_term(post).item() == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("non-negative on random inputs") {
    Rng rng = make_rng(11, 0);
    std::uniform_real_distribution<double> u(-4, 4);
    for (int t = 0; t < 50; ++t) {
      Matrix<double> mu(2, 3);
      Matrix<double> lv(2, 3);
      for (Eigen::Index i = 0; i < 6; ++i) {
        mu.data()[i] = u(rng);
        lv.data()[i] = u(rng);
      }
      PosteriorBatch<double> post{g.constant(mu), g.constant(lv)};
      CHECK(kl_term(post).item() >= 0.0);
    }
  }
}

TEST_CASE("kl_term agrees with a Monte-Carlo estimate") {
  Rng rng = make_rng(12, 0);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int t = 0; t < 3; ++t) {
    std::vector<double> mu(3);
    std::vector<double> lv(3);
    Matrix<double> m(1, 3);
    Matrix<double> l(1, 3);
    for (int i = 0; i < 3; ++i) {
      m(0, i) = mu[static_cast<std::size_t>(i)] = u(rng) + (i == 0 ? 1.5 : 0.0);
      l(0, i) = lv[static_cast<std::size_t>(i)] = u(rng);
    }
    Graph<double> g;
    const double analytic = kl_term(PosteriorBatch<double>{g.constant(m), g.constant(l)}).item();
    const double estimate = mc_kl(mu, lv, 200000, rng);
    CHECK(std::abs(estimate - analytic) / analytic < 0.02);
  }
}

TEST_CASE("recon_loglik") {
  Graph<double> g;
  SUBCASE("zero logits on x = 0.5 give -P ln 2") {
    auto x = g.constant(Matrix<double>::Constant(2, 9, 0.5));
    auto l = g.constant(Matrix<double>::Zero(2, 9));
    CHECK(recon_loglik(x, l).item() == doctest::Approx(-9 * std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("matches the direct Bernoulli formula and stays <= 0") {
    Rng rng = make_rng(13, 0);
    std::uniform_real_distribution<double> u01(0, 1);
    std::normal_distribution<double> n(0, 3);
    Matrix<double> x(3, 5);
    Matrix<double> l(3, 5);
    double direct = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x.data()[i] = u01(rng);
      l.data()[i] = n(rng);
      const double s = 1 / (1 + std::exp(-l.data()[i]));
      direct += x.data()[i] * std::log(s) + (1 - x.data()[i]) * std::log(1 - s);
    }
    const double got = recon_loglik(g.constant(x), g.constant(l)).item();
    CHECK(got == doctest::Approx(direct / 3).epsilon(1e-10));
    CHECK(got <= 0.0);
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(recon_loglik(g.constant(Matrix<double>::Zero(2, 3)), g.constant(Matrix<double>::Zero(3, 2))),
                    ShapeError);
  }
}

TEST_CASE("zero-weight VAE on x = 0.5 has loss P ln 2") {
  auto model = make_vae<double>({16, 2, {8}}, 1);
  for (auto* p : model.parameters()) p->values().setZero();
  Graph<double> g;
  auto loss = vae_loss(g, model, g.constant(Matrix<double>::Constant(4, 16, 0.5)), Matrix<double>(Matrix<double>::Zero(4, 2)));
  CHECK(loss.loss.item() == doctest::Approx(16 * std::log(2.0)).epsilon(1e-12));
  CHECK(loss.kl.item() == 0.0);
}

TEST_CASE("vae_loss passes grad_check on 4x4 images with d = 2") {
  auto model = make_vae<double>({16, 2, {8, 6}}, 3);
  model.set_trainable(true);
  Rng rng = make_rng(14, 0);
  std::uniform_real_distribution<double> u01(0, 1);
  std::normal_distribution<double> n(0, 1);
  Matrix<double> x(3, 16);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u01(rng);
  Matrix<double> eps(3, 2);
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps.data()[i] = n(rng);
  auto params = model.parameters();
  const double err = grad_check<double>(
      [&](Graph<double>& g) { return vae_loss(g, model, g.constant(x), eps).loss; }, params, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("reparameterize derivatives") {
  Tensor<double> mu(Shape{1, 2}, (Array<double>(2) << 0.3, -1.2).finished(), true);
  Tensor<double> lv(Shape{1, 2}, (Array<double>(2) << -0.4, 0.8).finished(), true);
  Matrix<double> eps(1, 2);
  eps << 0.7, -1.9;
  Graph<double> g;
  auto z = reparameterize(PosteriorBatch<double>{g.param(mu), g.param(lv)}, eps);
  g.backward(sum(z));
  for (Eigen::Index i = 0; i < 2; ++i) {
    CHECK(mu.grad()[i] == doctest::Approx(1.0).epsilon(1e-12));
    const double expected = 0.5 * std::exp(0.5 * lv.values()[i]) * eps(0, i);
    CHECK(lv.grad()[i] == doctest::Approx(expected).epsilon(1e-12));
  }
  std::vector<Tensor<double>*> params{&mu, &lv};
  const double err = grad_check<double>(
      [&](Graph<double>& g2) { return sum(reparameterize(PosteriorBatch<double>{g2.param(mu), g2.param(lv)}, eps)); },
      params, 1e-6);
  CHECK(err < 1e-6);
  CHECK_THROWS_AS(reparameterize(PosteriorBatch<double>{g.param(mu), g.param(lv)}, Matrix<double>(Matrix<double>::Zero(2, 2))),
                  ShapeError);
}

TEST_CASE("encode rejects the wrong width") {
  const auto model = make_vae<double>({16, 2, {8}}, 1);
  Graph<double> g;
  CHECK_THROWS_AS(encode(g, model, g.constant(Matrix<double>::Zero(1, 15))), ShapeError);
}

TEST_CASE("train_vae") {
  const auto data = tiny_bundle(64, 16, 5);
  const auto config = tiny_config();

  SUBCASE("two runs with the same seed are bit-identical") {
    const auto a = train_vae<double>(data, config);
    const auto b = train_vae<double>(data, config);
    REQUIRE(a.log.size() == 2);
    CHECK(a.log.back().loss == b.log.back().loss);
    CHECK(encode_tensor_file(vae_entries(a.model)) == encode_tensor_file(vae_entries(b.model)));
  }
  SUBCASE("lr = 0 leaves parameters at their initial values") {
    auto c = config;
    c.vae_lr = 0.0;
    const auto trained = train_vae<double>(data, c);
    auto init = make_vae<double>({256, 3, {16, 8}}, c.seed);
    CHECK(encode_tensor_file(vae_entries(trained.model)) == encode_tensor_file(vae_entries(init)));
  }
  SUBCASE("log parts are consistent") {
    const auto r = train_vae<double>(data, config);
    for (const auto& e : r.log) {
      CHECK(e.kl >= 0.0);
      CHECK(e.recon >= 0.0);
      CHECK(e.loss == doctest::Approx(e.recon + e.kl).epsilon(1e-9));
    }
  }
  SUBCASE("empty dataset rejected") {
    DatasetBundle empty = data;
    std::fill(empty.split.begin(), empty.split.end(), Split::test);
    CHECK_THROWS_AS(train_vae<double>(empty, config), DataError);
  }
  SUBCASE("float training runs") {
    const auto r = train_vae<float>(data, config);
    CHECK(std::isfinite(r.log.back().loss));
  }
}

TEST_CASE("active_units") {
  auto model = make_vae<double>({4, 2, {}}, 1);
  for (auto* p : model.parameters()) p->values().setZero();
  // mu_0 = pixel mean; mu_1 constant.
  model.encoder[0].weight.matrix().col(0).setConstant(0.25);
  model.encoder[0].bias.matrix()(0, 1) = 0.7;

  Matrix<double> x(6, 4);
  const std::vector<double> levels{0.1, 0.3, 0.5, 0.5, 0.7, 0.9};
  for (Eigen::Index i = 0; i < 6; ++i) x.row(i).setConstant(levels[static_cast<std::size_t>(i)]);
  const double m = 0.5;
  double var = 0;
  for (double v : levels) var += (v - m) * (v - m);
  var /= 5.0;

  const auto au = active_units<double>(model, x, 1e-2);
  CHECK(au.variance[0] == doctest::Approx(var).epsilon(1e-12));
  CHECK(au.variance[1] < 1e-30);
  CHECK(au.active[0]);
  CHECK_FALSE(au.active[1]);
  CHECK(au.count() == 1);
  CHECK(au.active_dims() == std::vector<std::size_t>{0});

  SUBCASE("invariant to row order") {
    Matrix<double> shuffled = x.colwise().reverse();
    const auto again = active_units<double>(model, shuffled, 1e-2);
    CHECK(again.variance[0] == doctest::Approx(au.variance[0]).epsilon(1e-14));
  }
  SUBCASE("one row rejected") { CHECK_THROWS_AS(active_units<double>(model, x.topRows(1), 1e-2), DataError); }
}

TEST_CASE("VAE checkpoint round trip") {
  const auto model = make_vae<double>({16, 3, {8, 5}}, 9);
  const auto entries = vae_entries(model);
  const auto bytes = encode_tensor_file(entries);
  const auto back = vae_from_entries<double>(decode_tensor_file(bytes));
  CHECK(back.arch == model.arch);
  CHECK(back.seed == model.seed);
  CHECK(encode_tensor_file(vae_entries(back)) == bytes);
}
