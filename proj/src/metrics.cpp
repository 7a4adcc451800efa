#include "stackssl/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <numeric>

namespace stackssl {

std::string AurocReport::to_json() const {
  nlohmann::json j;
  j["per_label"] = per_label;
  j["mean"] = mean;
  j["n_pos"] = n_pos;
  j["n_neg"] = n_neg;
  return j.dump();
}

double auroc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auroc: scores and labels differ in length");
  std::size_t n_pos = 0;
  for (double y : labels) {
    if (y != 0.0 && y != 1.0) throw std::invalid_argument("auroc: labels must be 0 or 1");
    n_pos += y == 1.0;
  }
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DegenerateLabels("degenerate label column: need both classes");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of 1-based mid-ranks of the positives.
  double rank_sum = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1.0) rank_sum += mid_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double u = rank_sum - np * (np + 1) / 2;
  return u / (np * static_cast<double>(n_neg));
}

AurocReport mean_auroc(const Matrix<double>& scores, const Matrix<double>& labels,
                       const std::vector<std::string>& label_names) {
  if (scores.rows() != labels.rows() || scores.cols() != labels.cols()) {
    throw std::invalid_argument("mean_auroc: scores and labels differ in shape");
  }
  if (labels.cols() == 0) throw std::invalid_argument("mean_auroc: no label columns");
  AurocReport report;
  for (Eigen::Index l = 0; l < labels.cols(); ++l) {
    const Eigen::VectorXd s = scores.col(l);
    const Eigen::VectorXd y = labels.col(l);
    try {
      report.per_label.push_back(auroc(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())),
                                       std::span<const double>(y.data(), static_cast<std::size_t>(y.size()))));
    } catch (const DegenerateLabels&) {
      const auto col = static_cast<std::size_t>(l);
      const std::string name = col < label_names.size() ? label_names[col] : std::to_string(col);
      throw DegenerateLabels("degenerate label column '" + name + "'");
    }
    const auto pos = static_cast<std::size_t>((y.array() == 1.0).count());
    report.n_pos.push_back(pos);
    report.n_neg.push_back(static_cast<std::size_t>(y.size()) - pos);
  }
  report.mean = std::accumulate(report.per_label.begin(), report.per_label.end(), 0.0) /
                static_cast<double>(report.per_label.size());
  return report;
}

}  // namespace stackssl
