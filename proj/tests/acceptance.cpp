// Acceptance run: one PASS/FAIL line per criterion.
//
//   stackssl_acceptance [--work DIR] [--only N]...

#include "stackssl/gradcheck.hpp"
#include "stackssl/metrics.hpp"
#include "stackssl/pipeline.hpp"
#include "stackssl/ssl.hpp"
#include "stackssl/tensor_io.hpp"
#include "stackssl/vae.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

using namespace stackssl;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Tolerances and thresholds.
constexpr double kGradTol = 1e-4;
constexpr double kGradStep = 1e-5;
constexpr double kGradSeconds = 30;
constexpr std::size_t kKlSamples = 1000000;
constexpr std::size_t kKlPairs = 20;
constexpr double kKlRelTol = 0.01;
constexpr double kKlSeconds = 60;
constexpr std::size_t kAurocInstances = 200;
constexpr std::size_t kAurocMaxN = 64;
constexpr double kAurocSeconds = 10;
constexpr double kEmaTol = 1e-12;
constexpr double kEmaRawTol = 1e-15;
constexpr double kRampTol = 1e-12;
constexpr double kVaeLossRatio = 0.5;
constexpr std::size_t kMinActiveUnits = 2;
constexpr double kVaeSeconds = 600;
constexpr double kTableSeconds = 45 * 60;
constexpr std::size_t kLtenTensors = 100;

// Benchmark seeds; the first is the default config seed.
const std::vector<std::uint64_t> kSeeds{42, 43, 44, 45, 46};

// Classifier settings for the benchmark comparison; zeta is 10 scaled by the
// labeled fraction (95 of 5000 training rows).
constexpr double kBenchmarkLr = 1e-3;
constexpr double kBenchmarkZeta = 0.2;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void criterion_gradients() {
  const auto t0 = Clock::now();
  Rng rng = make_rng(101, 0);
  std::uniform_real_distribution<double> u01(0, 1);
  std::normal_distribution<double> normal(0, 1);

  auto vae = make_vae<double>({16, 2, {8, 6}}, 7);
  vae.set_trainable(true);
  Matrix<double> x(4, 16);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u01(rng);
  Matrix<double> eps(4, 2);
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps.data()[i] = normal(rng);
  auto vae_params = vae.parameters();
  const double vae_err = grad_check<double>(
      [&](Graph<double>& g) { return vae_loss(g, vae, g.constant(x), eps).loss; }, vae_params, kGradStep);

  // d = 4 latent input from a fixed eps, L = 2 labels, dropout off
  const auto posterior_vae = make_vae<double>({16, 4, {8}}, 8);
  const auto [mu, logvar] = posterior<double>(posterior_vae, x);
  Matrix<double> eps4(4, 4);
  for (Eigen::Index i = 0; i < eps4.size(); ++i) eps4.data()[i] = normal(rng);
  const Matrix<double> z = mu.array() + (0.5 * logvar.array()).exp() * eps4.array();
  auto head = make_head<double>(4, 8, 6, 2, 0.0, rng);
  std::vector<Tensor<double>*> head_params;
  collect_parameters(head.layers, head_params);
  for (auto* p : head_params) p->set_requires_grad(true);
  Matrix<double> y(4, 2);
  y << 1, 0, 0, 1, 1, 1, 0, 0;
  const std::vector<std::uint8_t> mask{1, 0, 1, 0};
  const Matrix<double> target = Matrix<double>::Constant(4, 2, 0.3);
  const double ens_err = grad_check<double>(
      [&](Graph<double>& g) {
        Rng unused(0);
        auto out = classifier_forward(g, head, g.constant(z), false, unused);
        return ensemble_loss(out, y, mask, target, 2.0).loss;
      },
      head_params, kGradStep);

  const double secs = seconds_since(t0);
  report(1, vae_err < kGradTol && ens_err < kGradTol && secs < kGradSeconds,
         "vae max rel err " + fmt("%.2e", vae_err) + ", ensemble max rel err " + fmt("%.2e", ens_err) + ", " +
             fmt("%.1f", secs) + " s");
}

void criterion_kl() {
  const auto t0 = Clock::now();
  Rng rng = make_rng(102, 0);
  std::uniform_real_distribution<double> mu_dist(-2, 2);
  std::uniform_real_distribution<double> lv_dist(-2, 2);
  std::normal_distribution<double> normal(0, 1);
  const Eigen::Index d = 3;
  double worst = 0;
  for (std::size_t pair = 0; pair < kKlPairs; ++pair) {
    Matrix<double> mu(1, d);
    Matrix<double> lv(1, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      mu(0, i) = mu_dist(rng);
      lv(0, i) = lv_dist(rng);
    }
    Graph<double> g;
    const double analytic = kl_term(PosteriorBatch<double>{g.constant(mu), g.constant(lv)}).item();
    // E_q[log q(z) - log p(z)] with z = mu + sigma eps
    double total = 0;
    for (std::size_t s = 0; s < kKlSamples; ++s) {
      for (Eigen::Index i = 0; i < d; ++i) {
        const double e = normal(rng);
        const double zi = mu(0, i) + std::exp(0.5 * lv(0, i)) * e;
        total += 0.5 * (zi * zi - lv(0, i) - e * e);
      }
    }
    const double estimate = total / static_cast<double>(kKlSamples);
    worst = std::max(worst, std::abs(estimate - analytic) / analytic);
  }
  Graph<double> g;
  const double at_zero =
      kl_term(PosteriorBatch<double>{g.constant(Matrix<double>::Zero(1, d)), g.constant(Matrix<double>::Zero(1, d))})
          .item();
  const double secs = seconds_since(t0);
  report(2, worst < kKlRelTol && at_zero == 0.0 && secs < kKlSeconds,
         "worst relative gap " + fmt("%.4f", worst) + " over " + std::to_string(kKlPairs) + " pairs, kl(0,0) = " +
             fmt("%g", at_zero) + ", " + fmt("%.1f", secs) + " s");
}

void criterion_auroc() {
  const auto t0 = Clock::now();
  Rng rng = make_rng(103, 0);
  std::uniform_int_distribution<std::size_t> size_dist(2, kAurocMaxN);
  std::uniform_int_distribution<int> level(0, 7);
  std::bernoulli_distribution coin(0.5);
  std::size_t exact = 0;
  std::size_t with_ties = 0;
  for (std::size_t t = 0; t < kAurocInstances; ++t) {
    const std::size_t n = size_dist(rng);
    std::vector<double> s(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = level(rng) * 0.125;
      y[i] = coin(rng) ? 1.0 : 0.0;
    }
    y[0] = 1.0;
    y[n - 1] = 0.0;
    double wins = 0;
    double pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (y[i] != 1.0 || y[j] != 0.0) continue;
        pairs += 1;
        wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      }
    }
    std::set<double> distinct(s.begin(), s.end());
    with_ties += distinct.size() < n;
    exact += auroc(s, y) == wins / pairs;
  }
  const double secs = seconds_since(t0);
  report(3, exact == kAurocInstances && secs < kAurocSeconds,
         std::to_string(exact) + "/" + std::to_string(kAurocInstances) + " exact (" + std::to_string(with_ties) +
             " with ties), " + fmt("%.2f", secs) + " s");
}

void criterion_ema() {
  double worst_corrected = 0;
  double worst_raw = 0;
  Rng rng = make_rng(104, 0);
  std::uniform_real_distribution<double> u01(0, 1);
  for (double alpha : {0.0, 0.3, 0.6, 0.9}) {
    Matrix<double> c(5, 3);
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = u01(rng);
    std::vector<std::size_t> idx{0, 1, 2, 3, 4};
    EnsembleState corrected(5, 3, alpha, true);
    EnsembleState raw(5, 3, alpha, false);
    Matrix<double> expected = Matrix<double>::Zero(5, 3);
    for (int t = 1; t <= 50; ++t) {
      const Matrix<double> targets = ema_update(corrected, c, idx);
      worst_corrected = std::max(worst_corrected, (targets - c).cwiseAbs().maxCoeff());
      Matrix<double> y(5, 3);
      for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = u01(rng);
      expected = alpha * expected + (1 - alpha) * y;
      ema_update(raw, y, idx);
      worst_raw = std::max(worst_raw, (raw.raw() - expected).cwiseAbs().maxCoeff());
    }
  }
  report(4, worst_corrected < kEmaTol && worst_raw < kEmaRawTol,
         "corrected max |err| " + fmt("%.1e", worst_corrected) + ", raw rule max |err| " + fmt("%.1e", worst_raw));
}

void criterion_rampup() {
  const RampupSchedule s{10.0, 30};
  bool monotone = true;
  double prev = 0;
  for (std::int64_t t = 0; t <= 200; ++t) {
    const double z = rampup_weight(t, s);
    monotone = monotone && z >= prev;
    prev = z;
  }
  bool saturated = true;
  for (std::int64_t t = 30; t <= 200; ++t) saturated = saturated && rampup_weight(t, s) == s.zeta_max;
  const double half = std::abs(rampup_weight(15, s) - s.zeta_max * std::exp(-1.25));
  const bool zero = rampup_weight(0, s) == 0.0;
  report(5, zero && monotone && saturated && half < kRampTol,
         std::string("zeta(0) = 0: ") + (zero ? "yes" : "no") + ", non-decreasing: " + (monotone ? "yes" : "no") +
             ", saturated: " + (saturated ? "yes" : "no") + ", |zeta(T/2) - zmax e^-1.25| = " + fmt("%.1e", half));
}

struct SeedResult {
  std::map<std::string, double> test_mean;
  double sens_before = 0;
  double sens_after = 0;
  double sens_embedding = 0;
  bool probe_agree = false;
  std::string probe_detail;
  json vae;
  double vae_seconds = 0;
};

ExperimentConfig benchmark_config(std::uint64_t seed) {
  ExperimentConfig c;
  c.seed = seed;
  c.lr = kBenchmarkLr;
  c.zeta_max = kBenchmarkZeta;
  validate(c);
  return c;
}

SeedResult run_seed(std::uint64_t seed, const fs::path& dir) {
  SeedResult r;
  auto c = benchmark_config(seed);
  run_command("gen-data", c, dir);
  const auto t0 = Clock::now();
  r.vae = json::parse(run_command("train-vae", c, dir));
  r.vae_seconds = seconds_since(t0);
  for (auto mode : {SslMode::embedding_only, SslMode::latent_ensemble, SslMode::image_noise_ensemble,
                    SslMode::image_affine_ensemble}) {
    c.mode = mode;
    run_command("train-ssl", c, dir);
    r.test_mean[to_string(mode)] = json::parse(run_command("eval", c, dir))["mean"].get<double>();
  }
  c.mode = SslMode::latent_ensemble;
  const auto sens = json::parse(run_command("sensitivity", c, dir));
  r.sens_before = sens["before"].get<double>();
  r.sens_after = sens["after"].get<double>();
  c.mode = SslMode::embedding_only;
  r.sens_embedding = json::parse(run_command("sensitivity", c, dir))["after"].get<double>();
  c.mode = SslMode::latent_ensemble;

  r.probe_agree = true;
  for (const char* label : {"right", "low", "large", "bright"}) {
    VerbArgs args;
    args.label = label;
    const auto p = json::parse(run_command("probe", c, dir, args));
    const auto a = p["argmax_probe_dim"].get<std::size_t>();
    const auto b = p["argmax_correlation_dim"].get<std::size_t>();
    r.probe_agree = r.probe_agree && a == b;
    r.probe_detail += std::string(r.probe_detail.empty() ? "" : " ") + label + ":" + std::to_string(a) + "/" +
                      std::to_string(b);
  }
  return r;
}

void criteria_benchmark(const fs::path& work) {
  const auto t0 = Clock::now();
  std::vector<SeedResult> results;
  for (auto seed : kSeeds) {
    const auto r = run_seed(seed, work / ("seed_" + std::to_string(seed)));
    std::printf("  seed %llu: vae loss %.2f -> %.2f, kl %.2f, active %d | test mean auroc emb %.4f lat %.4f noise %.4f "
                "affine %.4f | sensitivity %.3e -> %.3e (embedding_only head %.3e) | probe/corr argmax %s\n",
                static_cast<unsigned long long>(seed), r.vae["first_loss"].get<double>(),
                r.vae["final_loss"].get<double>(), r.vae["final_kl"].get<double>(), r.vae["active_units"].get<int>(),
                r.test_mean.at("embedding_only"), r.test_mean.at("latent_ensemble"),
                r.test_mean.at("image_noise_ensemble"), r.test_mean.at("image_affine_ensemble"), r.sens_before,
                r.sens_after, r.sens_embedding, r.probe_detail.c_str());
    std::fflush(stdout);
    results.push_back(r);
  }
  const double secs = seconds_since(t0);

  const auto& d = results.front();
  const double first = d.vae["first_loss"].get<double>();
  const double last = d.vae["final_loss"].get<double>();
  const double kl = d.vae["final_kl"].get<double>();
  const auto active = d.vae["active_units"].get<std::size_t>();
  report(6, last < kVaeLossRatio * first && kl > 0 && active >= kMinActiveUnits && d.vae_seconds < kVaeSeconds,
         "seed " + std::to_string(kSeeds.front()) + ": final/first loss " + fmt("%.3f", last / first) + ", kl " +
             fmt("%.3f", kl) + ", active units " + std::to_string(active) + ", " + fmt("%.0f", d.vae_seconds) + " s");

  int beats_embedding = 0;
  int beats_image = 0;
  for (const auto& r : results) {
    const double lat = r.test_mean.at("latent_ensemble");
    beats_embedding += lat > r.test_mean.at("embedding_only");
    beats_image += lat >= std::max(r.test_mean.at("image_noise_ensemble"), r.test_mean.at("image_affine_ensemble"));
  }
  report(7, beats_embedding >= 4 && beats_image >= 3 && secs < kTableSeconds,
         "latent > embedding_only in " + std::to_string(beats_embedding) + "/5, latent >= max(image) in " +
             std::to_string(beats_image) + "/5, " + fmt("%.0f", secs) + " s total");

  int less_sensitive = 0;
  for (const auto& r : results) less_sensitive += r.sens_after < r.sens_before;
  report(8, less_sensitive >= 4, "sensitivity lower after training in " + std::to_string(less_sensitive) + "/5");

  int agree = 0;
  for (const auto& r : results) agree += r.probe_agree;
  report(9, agree >= 4, "probe argmax = |corr| argmax on every label in " + std::to_string(agree) + "/5 seeds");
}

void criterion_determinism(const fs::path& work) {
  auto c = parse_config(
      "image_size=8\nn_samples=400\nk_per_label=5\nn_val=60\nn_test=60\nlatent_dim=4\nencoder_widths=16,8\n"
      "head_widths=8,6\nvae_epochs=3\nssl_epochs=3\nbatch_size=32\nlr=1e-3\n");
  const std::vector<std::string> files{"data.lten",
                                       "vae.lten",
                                       "vae_log.jsonl",
                                       "ssl_latent_ensemble.lten",
                                       "ssl_latent_ensemble_log.jsonl",
                                       "ssl_image_noise_ensemble.lten",
                                       "ssl_image_noise_ensemble_log.jsonl"};
  auto run = [&](const fs::path& dir) {
    fs::remove_all(dir);
    run_command("gen-data", c, dir);
    run_command("train-vae", c, dir);
    c.mode = SslMode::latent_ensemble;
    run_command("train-ssl", c, dir);
    c.mode = SslMode::image_noise_ensemble;
    run_command("train-ssl", c, dir);
  };
  run(work / "det_a");
  run(work / "det_b");
  std::size_t identical = 0;
  for (const auto& f : files) identical += slurp(work / "det_a" / f) == slurp(work / "det_b" / f);

  Rng rng = make_rng(110, 0);
  std::uniform_int_distribution<int> rank_dist(0, 4);
  std::uniform_int_distribution<std::size_t> extent(1, 5);
  std::uniform_int_distribution<int> dtype(0, 2);
  std::normal_distribution<double> normal(0, 100);
  std::vector<TensorEntry> entries;
  for (std::size_t i = 0; i < kLtenTensors; ++i) {
    Shape shape(static_cast<std::size_t>(rank_dist(rng)));
    for (auto& e : shape) e = extent(rng);
    const std::size_t n = element_count(shape);
    TensorEntry e{"tensor/" + std::to_string(i), shape, {}};
    if (const int k = dtype(rng); k == 0) {
      std::vector<double> v(n);
      for (auto& x : v) x = normal(rng);
      e.data = v;
    } else if (k == 1) {
      std::vector<float> v(n);
      for (auto& x : v) x = static_cast<float>(normal(rng));
      e.data = v;
    } else {
      std::vector<std::uint8_t> v(n);
      for (auto& x : v) x = static_cast<std::uint8_t>(rng() & 0xFF);
      e.data = v;
    }
    entries.push_back(std::move(e));
  }
  save_tensor_file(work / "roundtrip.lten", entries);
  const auto back = load_tensor_file(work / "roundtrip.lten");
  const bool lten_ok = back == entries && encode_tensor_file(back) == encode_tensor_file(entries);
  report(10, identical == files.size() && lten_ok,
         std::to_string(identical) + "/" + std::to_string(files.size()) + " artifacts byte-identical, LTEN round trip of " +
             std::to_string(kLtenTensors) + " tensors " + (lten_ok ? "bit-exact" : "MISMATCH"));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stackssl acceptance run"};
  std::string work_arg;
  std::vector<int> only;
  app.add_option("--work", work_arg, "scratch directory (default: system temp)");
  app.add_option("--only", only, "run only these criteria")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const fs::path work = work_arg.empty() ? fs::temp_directory_path() / "stackssl_acceptance" : fs::path(work_arg);
  fs::create_directories(work);
  auto wanted = [&](std::initializer_list<int> ids) {
    if (only.empty()) return true;
    for (int id : ids) {
      if (std::find(only.begin(), only.end(), id) != only.end()) return true;
    }
    return false;
  };

  try {
    if (wanted({1})) criterion_gradients();
    if (wanted({2})) criterion_kl();
    if (wanted({3})) criterion_auroc();
    if (wanted({4})) criterion_ema();
    if (wanted({5})) criterion_rampup();
    if (wanted({10})) criterion_determinism(work);
    if (wanted({6, 7, 8, 9})) criteria_benchmark(work);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  std::printf("%s (%d failing)\n", failures == 0 ? "ALL PASS" : "SOME FAIL", failures);
  return failures == 0 ? 0 : 1;
}
