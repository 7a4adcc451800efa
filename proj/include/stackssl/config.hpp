#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stackssl {

enum class SslMode { latent_ensemble, image_noise_ensemble, image_affine_ensemble, embedding_only };
enum class Precision { f64, f32 };

std::string to_string(SslMode mode);
SslMode parse_mode(std::string_view text);

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// All hyperparameters of a run. Defaults follow the desk-scale benchmark:
// Adam at lr 1e-5, dropout 0.5 between classifier layers, noise std 0.15.
struct ExperimentConfig {
  std::uint64_t seed = 42;

  // data
  std::size_t image_size = 16;
  std::size_t n_samples = 8000;
  std::size_t k_per_label = 50;
  std::size_t n_val = 1000;
  std::size_t n_test = 2000;
  std::string manifest;  // CSV import instead of the synthetic benchmark when set

  // VAE
  std::size_t latent_dim = 10;
  std::vector<std::size_t> encoder_widths = {256, 128};
  double beta = 1.0;
  std::size_t vae_epochs = 200;
  double vae_lr = 1e-4;
  double active_threshold = 1e-2;

  // classifier / self-ensembling
  SslMode mode = SslMode::latent_ensemble;
  std::vector<std::size_t> head_widths = {128, 64};
  double dropout = 0.5;
  double lr = 1e-5;
  std::size_t ssl_epochs = 100;
  double alpha = 0.6;
  bool bias_correct = true;
  double zeta_max = 10.0;
  std::size_t rampup_epochs = 30;

  // image-space augmentation baselines
  double noise_std = 0.15;
  int max_shift = -1;  // -1: round(12 * W / 128)
  double max_rotation = 10.0;

  std::size_t batch_size = 64;
  Precision precision = Precision::f64;

  int effective_max_shift() const;
};

// Key names accepted in config files and as --key flags, in canonical order.
const std::vector<std::string>& config_keys();
std::string config_key_help(std::string_view key);

// Sets one key from its textual value; rejects unknown keys and malformed values.
void set_config_value(ExperimentConfig& config, std::string_view key, std::string_view value);
std::string get_config_value(const ExperimentConfig& config, std::string_view key);

// Range checks; throws ConfigError naming the key and its constraint.
void validate(const ExperimentConfig& config);

// Parses flat key=value lines ('#' comments, blank lines allowed), then applies
// overrides (flags win over file values), then validates.
ExperimentConfig parse_config(std::string_view text, const std::map<std::string, std::string>& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path, const std::map<std::string, std::string>& overrides = {});

// Canonical key=value text; parse_config(to_text(c)) == c.
std::string to_text(const ExperimentConfig& config);

// FNV-1a of the canonical text, hex encoded.
std::string config_hash(const ExperimentConfig& config);

}  // namespace stackssl
