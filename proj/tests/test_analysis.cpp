#include "stackssl/analysis.hpp"
#include "stackssl/metrics.hpp"

#include <doctest.h>

#include <cmath>

using namespace stackssl;

namespace {

std::vector<double> random_image(std::size_t pixels, Rng& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> img(pixels);
  for (auto& v : img) v = u(rng);
  return img;
}

Matrix<double> row_of(const std::vector<double>& v) {
  return Eigen::Map<const Matrix<double>>(v.data(), 1, static_cast<Eigen::Index>(v.size()));
}

}  // namespace

TEST_CASE("linspace") {
  CHECK(linspace(-3, 3, 7) == std::vector<double>{-3, -2, -1, 0, 1, 2, 3});
  CHECK(linspace(2, 5, 1) == std::vector<double>{2});
  CHECK(linspace(0, 1, 2) == std::vector<double>{0, 1});
  CHECK_THROWS(linspace(0, 1, 0));
}

TEST_CASE("latent_traverse") {
  const auto vae = make_vae<double>({16, 3, {8}}, 4);
  Rng rng = make_rng(31, 0);
  const auto img = random_image(16, rng);
  const Matrix<double> mu = posterior_mean<double>(vae, row_of(img));

  SUBCASE("each row decodes the posterior mean with one coordinate replaced") {
    const auto grid = latent_traverse(vae, img, 1, -2.0, 2.0, 5);
    REQUIRE(grid.images.rows() == 5);
    for (Eigen::Index i = 0; i < 5; ++i) {
      Matrix<double> z = mu;
      z(0, 1) = grid.values[static_cast<std::size_t>(i)];
      CHECK((grid.images.row(i) - decode_mean<double>(vae, z)).cwiseAbs().maxCoeff() < 1e-14);
    }
  }
  SUBCASE("a single step at the posterior mean is the reconstruction") {
    const auto grid = latent_traverse(vae, img, 2, mu(0, 2), 0.0, 1);
    CHECK((grid.images - decode_mean<double>(vae, mu)).cwiseAbs().maxCoeff() < 1e-14);
  }
  CHECK_THROWS_AS(latent_traverse(vae, img, 3), std::out_of_range);
  CHECK_THROWS_AS(latent_traverse(vae, std::vector<double>(15, 0.0), 0), ShapeError);
}

TEST_CASE("feature_transfer") {
  const auto vae = make_vae<double>({16, 4, {8}}, 5);
  Rng rng = make_rng(32, 0);
  const auto a = random_image(16, rng);
  const auto b = random_image(16, rng);

  SUBCASE("swapping every coordinate exchanges the reconstructions") {
    const std::vector<std::size_t> all{0, 1, 2, 3};
    const auto t = feature_transfer(vae, a, b, all);
    CHECK((t.a_with_b - t.recon_b).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((t.b_with_a - t.recon_a).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("partial swap decodes the mixed code and is symmetric") {
    const std::vector<std::size_t> dims{1, 3};
    const auto t = feature_transfer(vae, a, b, dims);
    const auto u = feature_transfer(vae, b, a, dims);
    Matrix<double> z = posterior_mean<double>(vae, row_of(a));
    const Matrix<double> zb = posterior_mean<double>(vae, row_of(b));
    z(0, 1) = zb(0, 1);
    z(0, 3) = zb(0, 3);
    CHECK((t.a_with_b - decode_mean<double>(vae, z)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(t.a_with_b == u.b_with_a);
    CHECK(t.b_with_a == u.a_with_b);
  }
  CHECK_THROWS(feature_transfer(vae, a, b, std::vector<std::size_t>{}));
  CHECK_THROWS_AS(feature_transfer(vae, a, b, std::vector<std::size_t>{4}), std::out_of_range);
}

TEST_CASE("single_dim_probe") {
  Rng rng = make_rng(33, 0);
  std::normal_distribution<double> normal(0, 1);
  const std::size_t n = 800;
  Matrix<double> features(static_cast<Eigen::Index>(n), 3);
  std::vector<double> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    labels[i] = i % 2 == 0 ? 1.0 : 0.0;
    features(r, 0) = 0.25;
    features(r, 1) = normal(rng);
    features(r, 2) = labels[i] == 1.0 ? 3.0 + normal(rng) * 0.1 : -3.0 + normal(rng) * 0.1;
  }
  const ProbeCounts counts;
  CHECK(single_dim_probe(features, labels, 0, counts, 1).test_auroc == 0.5);
  const auto planted = single_dim_probe(features, labels, 2, counts, 1);
  CHECK(planted.test_auroc == 1.0);
  CHECK(planted.weight > 0.0);
  CHECK(std::abs(single_dim_probe(features, labels, 1, counts, 1).test_auroc - 0.5) < 0.1);

  SUBCASE("negated feature is still separable") {
    Matrix<double> neg = -features;
    const auto r = single_dim_probe(neg, labels, 2, counts, 1);
    CHECK(r.test_auroc == 1.0);
    CHECK(r.weight < 0.0);
  }
  SUBCASE("deterministic per seed") {
    const auto again = single_dim_probe(features, labels, 1, counts, 1);
    CHECK(again.weight == single_dim_probe(features, labels, 1, counts, 1).weight);
  }
  SUBCASE("rejections") {
    CHECK_THROWS_AS(single_dim_probe(features, labels, 3, counts, 1), std::out_of_range);
    CHECK_THROWS(single_dim_probe(features, labels, 0, ProbeCounts{500, 200, 400}, 1));
    std::vector<double> ones(n, 1.0);
    CHECK_THROWS_AS(single_dim_probe(features, ones, 2, counts, 1), DegenerateLabels);
  }
}

TEST_CASE("pearson and abs_correlations") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{2, 4, 6, 8, 10};
  const std::vector<double> z{5, 4, 3, 2, 1};
  CHECK(pearson(x, y) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(pearson(x, z) == doctest::Approx(-1.0).epsilon(1e-14));
  // direct formula
  const std::vector<double> p{1, 3, 2, 5, 4};
  CHECK(pearson(x, p) == doctest::Approx(0.8).epsilon(1e-14));

  Matrix<double> f(5, 3);
  for (Eigen::Index i = 0; i < 5; ++i) {
    f(i, 0) = z[static_cast<std::size_t>(i)];
    f(i, 1) = 7.0;
    f(i, 2) = p[static_cast<std::size_t>(i)];
  }
  const auto c = abs_correlations(f, x);
  CHECK(c[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(c[1] == 0.0);
  CHECK(c[2] == doctest::Approx(0.8).epsilon(1e-14));
}

TEST_CASE("latent_sensitivity") {
  ExperimentConfig config;
  config.latent_dim = 3;
  config.head_widths = {6, 5};
  auto vae = make_vae<double>({16, 3, {}}, 6);
  Rng data_rng = make_rng(34, 0);
  Matrix<double> images(20, 16);
  for (Eigen::Index i = 0; i < images.size(); ++i) images.data()[i] = std::uniform_real_distribution<double>(0, 1)(data_rng);
  const std::vector<std::size_t> dims{0, 1, 2};
  auto model = make_ssl_model<double>(config, 16, 4, dims);

  Rng rng = make_rng(35, 0);
  CHECK(latent_sensitivity(vae, model, images, 5, rng) > 0.0);

  SUBCASE("a degenerate posterior gives zero") {
    auto sharp = vae;
    sharp.encoder[0].weight.matrix().rightCols(3).setZero();
    sharp.encoder[0].bias.matrix().rightCols(3).setConstant(-60.0);
    CHECK(latent_sensitivity(sharp, model, images, 5, rng) < 1e-20);
  }
  SUBCASE("a constant head gives zero") {
    auto flat = model;
    flat.head.layers.back().weight.values().setZero();
    CHECK(latent_sensitivity(vae, flat, images, 5, rng) == 0.0);
  }
  SUBCASE("image-space models are rejected") {
    auto image_config = config;
    image_config.mode = SslMode::image_noise_ensemble;
    image_config.encoder_widths = {8};
    const auto image_model = make_ssl_model<double>(image_config, 16, 4, {});
    CHECK_THROWS(latent_sensitivity(vae, image_model, images, 5, rng));
    CHECK_THROWS(latent_sensitivity(vae, model, images, 0, rng));
  }
}

TEST_CASE("encode_pgm_grid") {
  Matrix<double> images(3, 4);
  images << 0, 1, 0.5, 0.2, 1, 1, 1, 1, 0, 0, 0, 0;
  const auto pgm = encode_pgm_grid(images, 2, 2);
  const std::string header = "P5\n4 4\n255\n";
  REQUIRE(pgm.size() == header.size() + 16);
  CHECK(pgm.substr(0, header.size()) == header);
  const auto px = [&](std::size_t r, std::size_t c) { return static_cast<unsigned char>(pgm[header.size() + r * 4 + c]); };
  CHECK(px(0, 0) == 0);
  CHECK(px(0, 1) == 255);
  CHECK(px(1, 0) == 128);
  CHECK(px(1, 1) == 51);
  CHECK(px(0, 2) == 255);
  CHECK(px(2, 0) == 0);
  CHECK(px(3, 3) == 0);
  CHECK_THROWS_AS(encode_pgm_grid(images, 3, 2), ShapeError);
}
