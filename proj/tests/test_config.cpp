#include "stackssl/config.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace stackssl;

namespace {

std::string error_of(std::string_view text, const std::map<std::string, std::string>& overrides = {}) {
  try {
    parse_config(text, overrides);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

// FNV-1a 64, written out independently.
std::string fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace

TEST_CASE("defaults") {
  const auto c = parse_config("");
  CHECK(c.lr == 1e-5);
  CHECK(c.dropout == 0.5);
  CHECK(c.noise_std == 0.15);
  CHECK(c.alpha == 0.6);
  CHECK(c.latent_dim == 10);
  CHECK(c.image_size == 16);
  CHECK(c.mode == SslMode::latent_ensemble);
  CHECK(c.effective_max_shift() == 2);
  auto big = c;
  big.image_size = 128;
  CHECK(big.effective_max_shift() == 12);
}

TEST_CASE("parsing and precedence") {
  const auto c = parse_config("# comment\n\nalpha = 0.3\nmode=embedding_only  # trailing\nencoder_widths=32, 16\n",
                              {{"alpha", "0.9"}});
  CHECK(c.alpha == 0.9);
  CHECK(c.mode == SslMode::embedding_only);
  CHECK(c.encoder_widths == std::vector<std::size_t>{32, 16});

  const auto dir = std::filesystem::temp_directory_path() / "stackssl_test_config";
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "c.txt");
    f << "seed=9\nzeta_max=2\n";
  }
  const auto loaded = load_config(dir / "c.txt", {{"seed", "11"}});
  CHECK(loaded.seed == 11);
  CHECK(loaded.zeta_max == 2.0);
  CHECK_THROWS_AS(load_config(dir / "missing.txt"), ConfigError);
}

TEST_CASE("rejections name the key") {
  CHECK(error_of("", {{"alpha", "1.5"}}).find("alpha must be in [0,1)") != std::string::npos);
  CHECK(error_of("dropout=1").find("dropout") != std::string::npos);
  CHECK(error_of("learning_rate=0.1").find("unknown config key 'learning_rate'") != std::string::npos);
  CHECK(error_of("seed=abc").find("seed") != std::string::npos);
  CHECK(error_of("lr=nan").find("lr") != std::string::npos);
  CHECK(error_of("mode=pixels").find("mode") != std::string::npos);
  CHECK(error_of("head_widths=8").find("head_widths") != std::string::npos);
  CHECK(error_of("image_size=4").find("image_size") != std::string::npos);
  CHECK(error_of("no equals sign").find("line 1") != std::string::npos);
  CHECK(error_of("bias_correct=maybe").find("bias_correct") != std::string::npos);
}

TEST_CASE("to_text round trip and hash") {
  auto c = parse_config("");
  c.lr = 0.1 + 0.2;
  c.mode = SslMode::image_affine_ensemble;
  c.precision = Precision::f32;
  c.head_widths = {7, 3};
  c.bias_correct = false;
  c.manifest = "data/list.csv";
  const auto text = to_text(c);
  const auto back = parse_config(text);
  CHECK(to_text(back) == text);
  CHECK(back.lr == c.lr);
  CHECK(config_hash(c) == fnv1a(text));
  CHECK(config_hash(back) == config_hash(c));
  auto other = c;
  other.seed += 1;
  CHECK(config_hash(other) != config_hash(c));

  for (const auto& key : config_keys()) {
    CHECK(text.find(key + "=") != std::string::npos);
    CHECK_FALSE(config_key_help(key).empty());
  }
}
