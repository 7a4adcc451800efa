#pragma once

#include "stackssl/tensor.hpp"

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stackssl {

class DegenerateLabels : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct AurocReport {
  std::vector<double> per_label;
  double mean = 0;
  std::vector<std::size_t> n_pos;
  std::vector<std::size_t> n_neg;

  // {"per_label": [...], "mean": m, "n_pos": [...], "n_neg": [...]}
  std::string to_json() const;
};

// Mann-Whitney U / (n_pos * n_neg) with mid-ranks, so ties count one half.
// Labels must be 0 or 1 with both classes present.
double auroc(std::span<const double> scores, std::span<const double> labels);

// Per-column AUROC and their mean; columns are samples x labels.
AurocReport mean_auroc(const Matrix<double>& scores, const Matrix<double>& labels,
                       const std::vector<std::string>& label_names = {});

}  // namespace stackssl
