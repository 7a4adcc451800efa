#include "stackssl/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace stackssl {

namespace {

struct KeySpec {
  std::string name;
  std::string help;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void type_error(std::string_view key, std::string_view expected, std::string_view value) {
  throw ConfigError(std::string(key) + ": expected " + std::string(expected) + ", got '" + std::string(value) + "'");
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view text) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) type_error(key, "a non-negative integer", text);
  return v;
}

int parse_int(std::string_view key, std::string_view text) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) type_error(key, "an integer", text);
  return v;
}

double parse_real(std::string_view key, std::string_view text) {
  const std::string s(text);
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    type_error(key, "a real number", text);
  }
  if (used != s.size() || !std::isfinite(v)) type_error(key, "a finite real number", text);
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  type_error(key, "true or false", text);
}

std::vector<std::size_t> parse_widths(std::string_view key, std::string_view text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    out.push_back(parse_unsigned(key, trim(text.substr(start, end - start))));
    start = end + 1;
  }
  return out;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_widths(const std::vector<std::size_t>& w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(w[i]);
  }
  return s;
}

template <typename T>
KeySpec unsigned_key(std::string name, std::string help, T ExperimentConfig::*field) {
  return {name, std::move(help),
          [name, field](ExperimentConfig& c, std::string_view v) { c.*field = static_cast<T>(parse_unsigned(name, v)); },
          [field](const ExperimentConfig& c) { return std::to_string(c.*field); }};
}

KeySpec real_key(std::string name, std::string help, double ExperimentConfig::*field) {
  return {name, std::move(help), [name, field](ExperimentConfig& c, std::string_view v) { c.*field = parse_real(name, v); },
          [field](const ExperimentConfig& c) { return format_real(c.*field); }};
}

KeySpec widths_key(std::string name, std::string help, std::vector<std::size_t> ExperimentConfig::*field) {
  return {name, std::move(help),
          [name, field](ExperimentConfig& c, std::string_view v) { c.*field = parse_widths(name, v); },
          [field](const ExperimentConfig& c) { return format_widths(c.*field); }};
}

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = [] {
    using C = ExperimentConfig;
    std::vector<KeySpec> t;
    t.push_back(unsigned_key("seed", "master random seed", &C::seed));
    t.push_back(unsigned_key("image_size", "image width W in pixels (>= 8)", &C::image_size));
    t.push_back(unsigned_key("n_samples", "synthetic benchmark size", &C::n_samples));
    t.push_back(unsigned_key("k_per_label", "labeled positives per label", &C::k_per_label));
    t.push_back(unsigned_key("n_val", "validation samples", &C::n_val));
    t.push_back(unsigned_key("n_test", "test samples", &C::n_test));
    t.push_back({"manifest", "CSV manifest to import instead of generating data",
                 [](C& c, std::string_view v) { c.manifest = std::string(v); },
                 [](const C& c) { return c.manifest; }});
    t.push_back(unsigned_key("latent_dim", "VAE latent dimensionality d", &C::latent_dim));
    t.push_back(widths_key("encoder_widths", "VAE encoder hidden widths; decoder mirrors", &C::encoder_widths));
    t.push_back(real_key("beta", "KL weight in the VAE loss", &C::beta));
    t.push_back(unsigned_key("vae_epochs", "VAE training epochs", &C::vae_epochs));
    t.push_back(real_key("vae_lr", "Adam learning rate for the VAE", &C::vae_lr));
    t.push_back(real_key("active_threshold", "active-unit threshold on A_u", &C::active_threshold));
    t.push_back({"mode", "latent_ensemble | image_noise_ensemble | image_affine_ensemble | embedding_only",
                 [](C& c, std::string_view v) { c.mode = parse_mode(v); },
                 [](const C& c) { return to_string(c.mode); }});
    t.push_back(widths_key("head_widths", "classifier hidden widths h1,h2", &C::head_widths));
    t.push_back(real_key("dropout", "dropout probability between classifier layers", &C::dropout));
    t.push_back(real_key("lr", "Adam learning rate for the classifier", &C::lr));
    t.push_back(unsigned_key("ssl_epochs", "classifier training epochs", &C::ssl_epochs));
    t.push_back(real_key("alpha", "temporal ensemble momentum", &C::alpha));
    t.push_back({"bias_correct", "divide ensemble targets by 1 - alpha^t",
                 [](C& c, std::string_view v) { c.bias_correct = parse_bool("bias_correct", v); },
                 [](const C& c) { return std::string(c.bias_correct ? "true" : "false"); }});
    t.push_back(real_key("zeta_max", "maximum consistency weight", &C::zeta_max));
    t.push_back(unsigned_key("rampup_epochs", "epochs to reach zeta_max", &C::rampup_epochs));
    t.push_back(real_key("noise_std", "Gaussian noise std for image_noise_ensemble", &C::noise_std));
    t.push_back({"max_shift", "max translation in pixels (-1: scale 12 px at 128 px to W)",
                 [](C& c, std::string_view v) { c.max_shift = parse_int("max_shift", v); },
                 [](const C& c) { return std::to_string(c.max_shift); }});
    t.push_back(real_key("max_rotation", "max rotation in degrees", &C::max_rotation));
    t.push_back(unsigned_key("batch_size", "minibatch size", &C::batch_size));
    t.push_back({"precision", "f64 | f32 arithmetic for training",
                 [](C& c, std::string_view v) {
                   if (v == "f64") {
                     c.precision = Precision::f64;
                   } else if (v == "f32") {
                     c.precision = Precision::f32;
                   } else {
                     type_error("precision", "f64 or f32", v);
                   }
                 },
                 [](const C& c) { return std::string(c.precision == Precision::f64 ? "f64" : "f32"); }});
    return t;
  }();
  return table;
}

const KeySpec& find_key(std::string_view key) {
  for (const auto& k : key_table()) {
    if (k.name == key) return k;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

std::string to_string(SslMode mode) {
  switch (mode) {
    case SslMode::latent_ensemble: return "latent_ensemble";
    case SslMode::image_noise_ensemble: return "image_noise_ensemble";
    case SslMode::image_affine_ensemble: return "image_affine_ensemble";
    case SslMode::embedding_only: return "embedding_only";
  }
  return "unknown";
}

SslMode parse_mode(std::string_view text) {
  for (auto m : {SslMode::latent_ensemble, SslMode::image_noise_ensemble, SslMode::image_affine_ensemble,
                 SslMode::embedding_only}) {
    if (to_string(m) == text) return m;
  }
  throw ConfigError("mode: unknown mode '" + std::string(text) + "'");
}

int ExperimentConfig::effective_max_shift() const {
  if (max_shift >= 0) return max_shift;
  return static_cast<int>(std::lround(12.0 * static_cast<double>(image_size) / 128.0));
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& spec : key_table()) k.push_back(spec.name);
    return k;
  }();
  return keys;
}

std::string config_key_help(std::string_view key) { return find_key(key).help; }

void set_config_value(ExperimentConfig& config, std::string_view key, std::string_view value) {
  find_key(key).set(config, trim(value));
}

std::string get_config_value(const ExperimentConfig& config, std::string_view key) { return find_key(key).get(config); }

void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (c.image_size < 8) fail("image_size must be >= 8");
  if (c.n_samples < 2) fail("n_samples must be >= 2");
  if (c.latent_dim < 1) fail("latent_dim must be >= 1");
  for (auto w : c.encoder_widths) {
    if (w == 0) fail("encoder_widths entries must be positive");
  }
  if (c.head_widths.size() != 2 || c.head_widths[0] == 0 || c.head_widths[1] == 0) {
    fail("head_widths must be two positive widths h1,h2");
  }
  if (!(c.beta >= 0)) fail("beta must be >= 0");
  if (!(c.vae_lr > 0)) fail("vae_lr must be > 0");
  if (!(c.lr > 0)) fail("lr must be > 0");
  if (!(c.dropout >= 0 && c.dropout < 1)) fail("dropout must be in [0,1)");
  if (!(c.alpha >= 0 && c.alpha < 1)) fail("alpha must be in [0,1)");
  if (!(c.zeta_max >= 0)) fail("zeta_max must be >= 0");
  if (c.rampup_epochs < 1) fail("rampup_epochs must be >= 1");
  if (!(c.noise_std >= 0)) fail("noise_std must be >= 0");
  if (c.max_shift < -1) fail("max_shift must be >= 0 or -1 for automatic");
  if (!(c.max_rotation >= 0)) fail("max_rotation must be >= 0");
  if (!(c.active_threshold >= 0)) fail("active_threshold must be >= 0");
  if (c.batch_size < 1) fail("batch_size must be >= 1");
}

ExperimentConfig parse_config(std::string_view text, const std::map<std::string, std::string>& overrides) {
  ExperimentConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value, got '" + stripped + "'");
    }
    set_config_value(c, trim(std::string_view(stripped).substr(0, eq)), std::string_view(stripped).substr(eq + 1));
  }
  for (const auto& [key, value] : overrides) set_config_value(c, key, value);
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::map<std::string, std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

std::string to_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& k : key_table()) out += k.name + "=" + k.get(config) + "\n";
  return out;
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_text(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace stackssl
