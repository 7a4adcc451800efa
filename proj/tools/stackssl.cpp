#include "stackssl/config.hpp"
#include "stackssl/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <mutex>
#include <thread>

namespace {

using namespace stackssl;

struct Outcome {
  int status = 0;
  std::string text;
};

Outcome run_one(const std::string& verb, const ExperimentConfig& config, const std::filesystem::path& dir,
                const VerbArgs& args) {
  try {
    return {0, run_command(verb, config, dir, args)};
  } catch (const MissingCheckpoint& e) {
    return {2, e.what()};
  } catch (const std::exception& e) {
    return {1, e.what()};
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stacked VAE + self-ensembling semi-supervised classifier"};
  app.require_subcommand(1);

  std::string config_path;
  std::string run_id;
  std::vector<std::uint64_t> seeds;
  std::map<std::string, std::string> overrides;
  app.add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
  app.add_option("--run-id", run_id, "run directory name under $STACKSSL_OUTPUT_ROOT (default: config hash)");
  app.add_option("--seeds", seeds, "run independent replicas concurrently, one seed_<n> subdirectory each")
      ->delimiter(',');
  for (const auto& key : config_keys()) {
    app.add_option_function<std::string>(
        "--" + key, [&overrides, key](const std::string& v) { overrides[key] = v; }, config_key_help(key));
  }

  VerbArgs args;
  std::map<std::string, CLI::App*> subs;
  for (const auto& verb : verbs()) subs[verb] = app.add_subcommand(verb)->fallthrough();
  subs["gen-data"]->description("generate the synthetic benchmark (or import --manifest) and split it");
  subs["train-vae"]->description("train the VAE on labeled and unlabeled images");
  subs["train-ssl"]->description("train the classifier for --mode");
  subs["eval"]->description("test-split AUROC report for --mode");
  subs["active-units"]->description("posterior-mean variance per latent dim");
  subs["prune-rerun"]->description("retrain --mode on active dims only and report the mean-AUROC delta");

  auto* traverse = subs["traverse"];
  traverse->description("decode a test image while sweeping one latent dim");
  traverse->add_option("--dim", args.dim, "latent dim")->required();
  traverse->add_option("--index", args.index_a, "test sample position");
  traverse->add_option("--lo", args.lo);
  traverse->add_option("--hi", args.hi);
  traverse->add_option("--steps", args.steps)->check(CLI::PositiveNumber);

  auto* transfer = subs["transfer"];
  transfer->description("swap latent units between two test images");
  transfer->add_option("--dims", args.dims, "latent units to swap")->delimiter(',')->required();
  transfer->add_option("--a", args.index_a, "first test sample position");
  transfer->add_option("--b", args.index_b, "second test sample position");

  auto* probe = subs["probe"];
  probe->description("single-dim logistic probes on validation+test posterior means");
  probe->add_option("--label", args.label, "target label (default: first)");
  probe->add_option("--dims", args.dims, "dims to probe (default: all)")->delimiter(',');
  probe->add_option("--train", args.probe_counts.train);
  probe->add_option("--val", args.probe_counts.validation);
  probe->add_option("--test", args.probe_counts.test);

  auto* sensitivity = subs["sensitivity"];
  sensitivity->description("posterior-sample sensitivity of the trained vs freshly initialised head");
  sensitivity->add_option("--pairs", args.pairs)->check(CLI::PositiveNumber);
  sensitivity->add_option("--samples", args.sensitivity_samples)->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  const std::string verb = app.get_subcommands().front()->get_name();
  ExperimentConfig config;
  try {
    config = config_path.empty() ? parse_config("", overrides) : load_config(config_path, overrides);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  if (run_id.empty()) run_id = config_hash(config);
  const auto base = output_root() / run_id;

  if (seeds.empty()) {
    const auto out = run_one(verb, config, base, args);
    (out.status == 0 ? std::cout : std::cerr) << (out.status == 0 ? "" : "error: ") << out.text << "\n";
    return out.status;
  }

  std::vector<Outcome> outcomes(seeds.size());
  std::vector<std::thread> workers;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    workers.emplace_back([&, i] {
      ExperimentConfig c = config;
      c.seed = seeds[i];
      outcomes[i] = run_one(verb, c, base / ("seed_" + std::to_string(seeds[i])), args);
    });
  }
  for (auto& w : workers) w.join();
  int status = 0;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    auto& stream = outcomes[i].status == 0 ? std::cout : std::cerr;
    stream << "seed " << seeds[i] << (outcomes[i].status == 0 ? ": " : ": error: ") << outcomes[i].text << "\n";
    status = std::max(status, outcomes[i].status);
  }
  return status;
}
