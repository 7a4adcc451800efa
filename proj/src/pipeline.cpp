#include "stackssl/pipeline.hpp"

#include "stackssl/data.hpp"
#include "stackssl/metrics.hpp"
#include "stackssl/ssl.hpp"
#include "stackssl/tensor_io.hpp"
#include "stackssl/vae.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <numeric>

namespace stackssl {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

fs::path require(const fs::path& path, const std::string& stage) {
  if (!fs::exists(path)) {
    throw MissingCheckpoint("missing checkpoint: " + path.string() + " (run " + stage + " first)");
  }
  return path;
}

bool latent_mode(SslMode mode) { return mode == SslMode::latent_ensemble || mode == SslMode::embedding_only; }

std::string ssl_stem(SslMode mode) { return "ssl_" + to_string(mode); }

std::string report(const fs::path& dir, const std::string& name, const ordered_json& j) {
  const std::string text = j.dump(2);
  write_text(dir / (name + ".json"), text + "\n");
  return text;
}

DatasetBundle load_data(const fs::path& dir) { return load_bundle(require(dir / "data.lten", "gen-data")); }

template <typename Scalar>
VaeModel<Scalar> load_vae(const fs::path& dir) {
  const auto entries = load_tensor_file(require(dir / "vae.lten", "train-vae"));
  return vae_from_entries<Scalar>(entries);
}

template <typename Scalar>
SslModel<Scalar> load_ssl(const fs::path& dir, SslMode mode, const std::string& suffix = "") {
  const auto entries = load_tensor_file(require(dir / (ssl_stem(mode) + suffix + ".lten"), "train-ssl"));
  return ssl_from_entries<Scalar>(entries);
}

template <typename Scalar>
void save_ssl(const fs::path& dir, const SslTrainResult<Scalar>& result, const std::string& suffix = "") {
  const std::string stem = ssl_stem(result.model.mode) + suffix;
  save_tensor_file(dir / (stem + ".lten"), ssl_entries(result.model));
  std::string log;
  for (const auto& rec : result.log) log += rec.to_json() + "\n";
  write_text(dir / (stem + "_log.jsonl"), log);
}

template <typename Scalar>
AurocReport evaluate(const SslModel<Scalar>& model, const VaeModel<Scalar>* vae, const DatasetBundle& data) {
  const auto rows = data.indices(Split::test);
  if (rows.empty()) throw DataError("no test samples");
  return mean_auroc(predict(model, vae, data.image_rows(rows)), data.label_rows(rows), data.label_names);
}

ordered_json auroc_json(const AurocReport& r) { return ordered_json::parse(r.to_json()); }

std::size_t test_row(const DatasetBundle& data, std::size_t position) {
  const auto rows = data.indices(Split::test);
  if (position >= rows.size()) {
    throw std::out_of_range("test sample " + std::to_string(position) + " out of range (" + std::to_string(rows.size()) +
                            " test samples)");
  }
  return rows[position];
}

std::vector<double> image_of(const DatasetBundle& data, std::size_t row) {
  const Eigen::RowVectorXd r = data.images.row(static_cast<Eigen::Index>(row));
  return {r.data(), r.data() + r.size()};
}

std::size_t label_index(const DatasetBundle& data, const std::string& name) {
  if (name.empty()) return 0;
  const auto it = std::find(data.label_names.begin(), data.label_names.end(), name);
  if (it == data.label_names.end()) throw std::invalid_argument("unknown label '" + name + "'");
  return static_cast<std::size_t>(it - data.label_names.begin());
}

std::string gen_data(const ExperimentConfig& config, const fs::path& dir) {
  DatasetBundle raw = config.manifest.empty()
                          ? generate_synthetic(FactorSpec::default_spec(), config.n_samples, config.image_size, config.seed)
                          : import_csv_manifest(config.manifest, config.image_size);
  const DatasetBundle data = make_splits(std::move(raw), config.k_per_label, config.n_val, config.n_test, config.seed);
  save_bundle(dir / "data.lten", data);
  ordered_json j;
  j["samples"] = data.size();
  j["width"] = data.width;
  j["labels"] = data.label_names;
  for (auto [name, split] : {std::pair{"labeled_train", Split::labeled_train}, {"unlabeled_train", Split::unlabeled_train},
                             {"validation", Split::validation}, {"test", Split::test}, {"excluded", Split::excluded}}) {
    j["splits"][name] = data.indices(split).size();
  }
  return report(dir, "gen-data", j);
}

template <typename Scalar>
std::string train_vae_stage(const ExperimentConfig& config, const fs::path& dir) {
  const auto data = load_data(dir);
  const auto result = train_vae<Scalar>(data, config);
  save_tensor_file(dir / "vae.lten", vae_entries(result.model));
  std::string log;
  for (const auto& rec : result.log) {
    ordered_json j;
    j["epoch"] = rec.epoch;
    j["loss"] = rec.loss;
    j["recon"] = rec.recon;
    j["kl"] = rec.kl;
    log += j.dump() + "\n";
  }
  write_text(dir / "vae_log.jsonl", log);
  const auto au = active_units<Scalar>(result.model, data.images.template cast<Scalar>(), config.active_threshold);
  ordered_json j;
  j["epochs"] = result.log.size();
  j["first_loss"] = result.log.empty() ? 0.0 : result.log.front().loss;
  j["final_loss"] = result.log.empty() ? 0.0 : result.log.back().loss;
  j["final_kl"] = result.log.empty() ? 0.0 : result.log.back().kl;
  j["active_units"] = au.count();
  return report(dir, "train-vae", j);
}

template <typename Scalar>
std::string train_ssl_stage(const ExperimentConfig& config, const fs::path& dir) {
  const auto data = load_data(dir);
  std::optional<VaeModel<Scalar>> vae;
  if (latent_mode(config.mode)) vae = load_vae<Scalar>(dir);
  const auto result = train_ssl<Scalar>(vae ? &*vae : nullptr, data, config);
  save_ssl(dir, result);
  ordered_json j;
  j["mode"] = to_string(config.mode);
  j["epochs"] = result.log.size();
  j["final_loss"] = result.log.empty() ? 0.0 : result.log.back().loss;
  const auto& last = result.log.back();
  j["val_mean_auroc"] = last.val_mean_auroc ? ordered_json(*last.val_mean_auroc) : ordered_json(nullptr);
  return report(dir, "train-ssl_" + to_string(config.mode), j);
}

template <typename Scalar>
std::string eval_stage(const ExperimentConfig& config, const fs::path& dir) {
  const auto data = load_data(dir);
  const auto model = load_ssl<Scalar>(dir, config.mode);
  std::optional<VaeModel<Scalar>> vae;
  if (model.uses_vae()) vae = load_vae<Scalar>(dir);
  return report(dir, "eval_" + to_string(config.mode), auroc_json(evaluate(model, vae ? &*vae : nullptr, data)));
}

template <typename Scalar>
std::string traverse_stage(const fs::path& dir, const VerbArgs& args) {
  const auto data = load_data(dir);
  const auto vae = load_vae<Scalar>(dir);
  const auto image = image_of(data, test_row(data, args.index_a));
  const auto grid = latent_traverse(vae, image, args.dim, args.lo, args.hi, args.steps);
  const std::string name = "traverse_dim" + std::to_string(args.dim);
  write_pgm_grid(dir / (name + ".pgm"), grid.images, data.width, grid.values.size());
  ordered_json j;
  j["dim"] = args.dim;
  j["values"] = grid.values;
  j["max_pixel_range"] = (grid.images.colwise().maxCoeff() - grid.images.colwise().minCoeff()).maxCoeff();
  j["grid"] = name + ".pgm";
  return report(dir, name, j);
}

template <typename Scalar>
std::string transfer_stage(const fs::path& dir, const VerbArgs& args) {
  const auto data = load_data(dir);
  const auto vae = load_vae<Scalar>(dir);
  const auto a = image_of(data, test_row(data, args.index_a));
  const auto b = image_of(data, test_row(data, args.index_b));
  const auto t = feature_transfer(vae, a, b, args.dims);
  Matrix<double> tiles(6, static_cast<Eigen::Index>(data.pixel_count()));
  tiles.row(0) = Eigen::Map<const Eigen::RowVectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
  tiles.row(1) = t.recon_a;
  tiles.row(2) = t.a_with_b;
  tiles.row(3) = Eigen::Map<const Eigen::RowVectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  tiles.row(4) = t.recon_b;
  tiles.row(5) = t.b_with_a;
  write_pgm_grid(dir / "transfer.pgm", tiles, data.width, 3);
  ordered_json j;
  j["dims"] = args.dims;
  j["index_a"] = args.index_a;
  j["index_b"] = args.index_b;
  j["layout"] = "rows: (a, recon_a, a_with_b), (b, recon_b, b_with_a)";
  j["grid"] = "transfer.pgm";
  return report(dir, "transfer", j);
}

template <typename Scalar>
std::string probe_stage(const ExperimentConfig& config, const fs::path& dir, const VerbArgs& args) {
  const auto data = load_data(dir);
  const auto vae = load_vae<Scalar>(dir);
  const std::size_t label = label_index(data, args.label);
  auto pool = data.indices(Split::validation);
  const auto test = data.indices(Split::test);
  pool.insert(pool.end(), test.begin(), test.end());
  const Matrix<double> mu = posterior_mean<Scalar>(vae, data.image_rows(pool).template cast<Scalar>()).template cast<double>();
  const Eigen::VectorXd y = data.label_rows(pool).col(static_cast<Eigen::Index>(label));
  const std::span<const double> ys(y.data(), static_cast<std::size_t>(y.size()));

  std::vector<std::size_t> dims = args.dims;
  if (dims.empty()) {
    dims.resize(vae.arch.latent_dim);
    std::iota(dims.begin(), dims.end(), std::size_t{0});
  }
  const auto corr = abs_correlations(mu, ys);
  ordered_json j;
  j["label"] = data.label_names[label];
  j["negatives"] = "complement";
  std::size_t best_probe = dims.front();
  std::size_t best_corr = dims.front();
  double best_auc = -1;
  for (std::size_t d : dims) {
    if (d >= vae.arch.latent_dim) throw std::out_of_range("probe: latent dim " + std::to_string(d) + " out of range");
    const auto r = single_dim_probe(mu, ys, d, args.probe_counts, config.seed);
    ordered_json row;
    row["dim"] = d;
    row["test_auroc"] = r.test_auroc;
    row["abs_correlation"] = corr[d];
    j["dims"].push_back(row);
    if (r.test_auroc > best_auc) {
      best_auc = r.test_auroc;
      best_probe = d;
    }
    if (corr[d] > corr[best_corr]) best_corr = d;
  }
  j["argmax_probe_dim"] = best_probe;
  j["argmax_correlation_dim"] = best_corr;
  return report(dir, "probe_" + data.label_names[label], j);
}

template <typename Scalar>
std::string sensitivity_stage(const ExperimentConfig& config, const fs::path& dir, const VerbArgs& args) {
  const auto data = load_data(dir);
  const auto vae = load_vae<Scalar>(dir);
  const auto trained = load_ssl<Scalar>(dir, config.mode);
  if (!trained.uses_vae()) throw std::invalid_argument("sensitivity needs a latent-space classifier");
  const auto untrained = make_ssl_model<Scalar>(config, data.pixel_count(), data.label_count(), trained.latent_dims);
  auto rows = data.indices(Split::test);
  rows.resize(std::min(rows.size(), args.sensitivity_samples));
  const Matrix<double> x = data.image_rows(rows);
  Rng before_rng = make_rng(config.seed, 6);
  Rng after_rng = make_rng(config.seed, 6);
  ordered_json j;
  j["mode"] = to_string(config.mode);
  j["samples"] = rows.size();
  j["pairs"] = args.pairs;
  j["before"] = latent_sensitivity(vae, untrained, x, args.pairs, before_rng);
  j["after"] = latent_sensitivity(vae, trained, x, args.pairs, after_rng);
  return report(dir, "sensitivity_" + to_string(config.mode), j);
}

template <typename Scalar>
std::string active_units_stage(const ExperimentConfig& config, const fs::path& dir) {
  const auto data = load_data(dir);
  const auto vae = load_vae<Scalar>(dir);
  const auto au = active_units<Scalar>(vae, data.images.template cast<Scalar>(), config.active_threshold);
  ordered_json j;
  j["threshold"] = config.active_threshold;
  j["variance"] = au.variance;
  j["active_dims"] = au.active_dims();
  j["count"] = au.count();
  return report(dir, "active-units", j);
}

template <typename Scalar>
std::string prune_rerun_stage(const ExperimentConfig& config, const fs::path& dir) {
  if (!latent_mode(config.mode)) throw std::invalid_argument("prune-rerun needs a latent mode");
  const auto data = load_data(dir);
  const auto vae = load_vae<Scalar>(dir);
  SslModel<Scalar> pre_model;
  if (fs::exists(dir / (ssl_stem(config.mode) + ".lten"))) {
    pre_model = load_ssl<Scalar>(dir, config.mode);
  } else {
    const auto pre = train_ssl<Scalar>(&vae, data, config);
    save_ssl(dir, pre);
    pre_model = pre.model;
  }
  const auto au = active_units<Scalar>(vae, data.images.template cast<Scalar>(), config.active_threshold);
  const auto kept = au.active_dims();
  if (kept.empty()) throw std::invalid_argument("prune-rerun: no active latent dims to keep");
  std::vector<std::size_t> pruned;
  for (std::size_t d = 0; d < au.active.size(); ++d) {
    if (!au.active[d]) pruned.push_back(d);
  }
  const auto post = train_ssl<Scalar>(&vae, data, config, kept);
  save_ssl(dir, post, "_pruned");
  const double pre_auc = evaluate(pre_model, &vae, data).mean;
  const double post_auc = evaluate(post.model, &vae, data).mean;
  ordered_json j;
  j["mode"] = to_string(config.mode);
  j["pre_mean_auroc"] = pre_auc;
  j["post_mean_auroc"] = post_auc;
  j["delta"] = post_auc - pre_auc;
  j["pruned_dims"] = pruned;
  j["kept_dims"] = kept;
  return report(dir, "prune-rerun_" + to_string(config.mode), j);
}

template <typename Scalar>
std::string dispatch(const std::string& verb, const ExperimentConfig& config, const fs::path& dir,
                     const VerbArgs& args) {
  if (verb == "gen-data") return gen_data(config, dir);
  if (verb == "train-vae") return train_vae_stage<Scalar>(config, dir);
  if (verb == "train-ssl") return train_ssl_stage<Scalar>(config, dir);
  if (verb == "eval") return eval_stage<Scalar>(config, dir);
  if (verb == "traverse") return traverse_stage<Scalar>(dir, args);
  if (verb == "transfer") return transfer_stage<Scalar>(dir, args);
  if (verb == "probe") return probe_stage<Scalar>(config, dir, args);
  if (verb == "sensitivity") return sensitivity_stage<Scalar>(config, dir, args);
  if (verb == "active-units") return active_units_stage<Scalar>(config, dir);
  if (verb == "prune-rerun") return prune_rerun_stage<Scalar>(config, dir);
  throw std::invalid_argument("unknown verb '" + verb + "'");
}

}  // namespace

const std::vector<std::string>& verbs() {
  static const std::vector<std::string> v{"gen-data", "train-vae",   "train-ssl",    "eval",       "traverse",
                                          "transfer", "probe",       "sensitivity", "active-units", "prune-rerun"};
  return v;
}

fs::path output_root() {
  const char* env = std::getenv("STACKSSL_OUTPUT_ROOT");
  return env != nullptr && *env != '\0' ? fs::path(env) : fs::path("runs");
}

std::string run_command(const std::string& verb, const ExperimentConfig& config, const fs::path& run_dir,
                        const VerbArgs& args) {
  if (std::find(verbs().begin(), verbs().end(), verb) == verbs().end()) {
    throw std::invalid_argument("unknown verb '" + verb + "'");
  }
  validate(config);
  fs::create_directories(run_dir);
  write_text(run_dir / ("config_" + verb + ".txt"), to_text(config));
  if (config.precision == Precision::f32) return dispatch<float>(verb, config, run_dir, args);
  return dispatch<double>(verb, config, run_dir, args);
}

}  // namespace stackssl
