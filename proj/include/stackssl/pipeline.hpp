#pragma once

// Run-directory pipeline behind the command-line verbs. Each stage reads the
// artifacts of earlier stages from the run directory and writes its own.
//
//   config_<verb>.txt        resolved config echo
//   data.lten                dataset bundle with splits
//   vae.lten, vae_log.jsonl  VAE checkpoint and per-epoch log
//   ssl_<mode>.lten, ssl_<mode>_log.jsonl
//   <verb>[_<mode>].json     reports; traversal/transfer grids as .pgm

#include "stackssl/analysis.hpp"
#include "stackssl/config.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace stackssl {

class MissingCheckpoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VerbArgs {
  std::size_t dim = 0;
  std::vector<std::size_t> dims;  // transfer: swapped units; probe: dims to probe (empty: all)
  std::string label;              // probe target label name (default: first)
  std::size_t index_a = 0;        // test-split positions for traverse/transfer
  std::size_t index_b = 1;
  double lo = -3.0;
  double hi = 3.0;
  std::size_t steps = 7;
  ProbeCounts probe_counts;
  std::size_t pairs = 10;
  std::size_t sensitivity_samples = 500;
};

const std::vector<std::string>& verbs();

// Directory named by STACKSSL_OUTPUT_ROOT, or "runs".
std::filesystem::path output_root();

// Runs one stage in run_dir and returns its JSON report.
std::string run_command(const std::string& verb, const ExperimentConfig& config, const std::filesystem::path& run_dir,
                        const VerbArgs& args = {});

}  // namespace stackssl
